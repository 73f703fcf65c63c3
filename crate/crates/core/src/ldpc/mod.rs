//! Quasi-cyclic protograph LDPC codes for syndrome-based reconciliation.

mod alist;
mod decoder;
mod family;
mod lift;
mod protograph;

pub use alist::{read_alist, write_alist};
pub use decoder::{decode, decode_with, DecodeOptions, DecodeResult, LLR_CLAMP};
pub use family::{degree_profile, CodeLibrary, LadderConfig, BASE_COLS};
pub use lift::{has_four_cycle, lift, lift_relaxed, syndrome, LiftedCode};
pub use protograph::{DegreeProfile, Protograph};
