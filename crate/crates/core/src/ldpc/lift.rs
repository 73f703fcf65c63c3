use rand::Rng;

use super::protograph::Protograph;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

const MAX_ATTEMPTS: usize = 16;

/// Sparse m × n parity-check matrix obtained by circulant lifting.
///
/// Edges are stored in check order; `var_edges` lists, for every variable,
/// the positions of its edges in that order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedCode {
    m: usize,
    n: usize,
    lift: usize,
    seed: u64,
    check_ptr: Vec<u32>,
    check_var: Vec<u32>,
    var_ptr: Vec<u32>,
    var_edges: Vec<u32>,
}

impl LiftedCode {
    /// Builds a code from explicit check rows (variable indices per check).
    pub fn from_rows(n: usize, rows: &[Vec<u32>], lift: usize, seed: u64) -> Result<Self> {
        let m = rows.len();
        let mut check_ptr = Vec::with_capacity(m + 1);
        let mut check_var = Vec::new();
        check_ptr.push(0u32);
        let mut deg = vec![0u32; n];
        for r in rows {
            let mut r = r.clone();
            r.sort_unstable();
            if r.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Format("repeated variable in a parity check".into()));
            }
            for &v in &r {
                if v as usize >= n {
                    return Err(Error::Format(format!("variable index {v} out of range {n}")));
                }
                deg[v as usize] += 1;
            }
            check_var.extend_from_slice(&r);
            check_ptr.push(check_var.len() as u32);
        }
        let mut var_ptr = Vec::with_capacity(n + 1);
        var_ptr.push(0u32);
        for d in &deg {
            var_ptr.push(var_ptr.last().unwrap() + d);
        }
        let mut fill: Vec<u32> = var_ptr[..n].to_vec();
        let mut var_edges = vec![0u32; check_var.len()];
        for (e, &v) in check_var.iter().enumerate() {
            var_edges[fill[v as usize] as usize] = e as u32;
            fill[v as usize] += 1;
        }
        Ok(Self {
            m,
            n,
            lift,
            seed,
            check_ptr,
            check_var,
            var_ptr,
            var_edges,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lift_factor(&self) -> usize {
        self.lift
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// (n − m)/n.
    pub fn rate(&self) -> f64 {
        (self.n - self.m) as f64 / self.n as f64
    }

    pub fn edges(&self) -> usize {
        self.check_var.len()
    }

    pub fn check(&self, c: usize) -> &[u32] {
        &self.check_var[self.check_ptr[c] as usize..self.check_ptr[c + 1] as usize]
    }

    pub fn check_range(&self, c: usize) -> std::ops::Range<usize> {
        self.check_ptr[c] as usize..self.check_ptr[c + 1] as usize
    }

    /// Edge positions (in check order) of variable `v`.
    pub fn var_edges(&self, v: usize) -> &[u32] {
        &self.var_edges[self.var_ptr[v] as usize..self.var_ptr[v + 1] as usize]
    }

    pub fn var_degree(&self, v: usize) -> usize {
        (self.var_ptr[v + 1] - self.var_ptr[v]) as usize
    }

    pub fn edge_var(&self, e: usize) -> usize {
        self.check_var[e] as usize
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        (0..self.m).map(|c| self.check(c).to_vec()).collect()
    }
}

/// GF(2) product H·z.
pub fn syndrome(code: &LiftedCode, z: &[u8]) -> Result<Vec<u8>> {
    if z.len() != code.n() {
        return Err(Error::LengthMismatch {
            expected: code.n(),
            actual: z.len(),
        });
    }
    Ok((0..code.m())
        .map(|c| code.check(c).iter().fold(0u8, |s, &v| s ^ (z[v as usize] & 1)))
        .collect())
}

/// True if two variables share two or more checks.
pub fn has_four_cycle(code: &LiftedCode) -> bool {
    let mut mark = vec![u32::MAX; code.n()];
    for v in 0..code.n() {
        for &e in code.var_edges(v) {
            let c = check_of_edge(code, e as usize);
            for &u in code.check(c) {
                let u = u as usize;
                if u == v {
                    continue;
                }
                if mark[u] == v as u32 {
                    return true;
                }
                mark[u] = v as u32;
            }
        }
    }
    false
}

fn check_of_edge(code: &LiftedCode, e: usize) -> usize {
    code.check_ptr.partition_point(|&p| p as usize <= e) - 1
}

/// Quasi-cyclic expansion of `proto` by `z`. Each base edge becomes a
/// z × z circulant; shifts are drawn greedily at random among values that
/// close no 4-cycle with the shifts already placed.
pub fn lift(proto: &Protograph, z: usize, seed: u64) -> Result<LiftedCode> {
    if z == 0 || z < proto.max_multiplicity() as usize {
        return Err(Error::InvalidConfig(format!(
            "lift factor {z} below protograph multiplicity {}",
            proto.max_multiplicity()
        )));
    }
    let mut rng = stream_rng(seed, Stream::Construction);
    for _ in 0..MAX_ATTEMPTS {
        if let Some(shifts) = assign_shifts(proto, z, true, &mut rng) {
            let code = expand(proto, z, &shifts, seed)?;
            if !has_four_cycle(&code) {
                return Ok(code);
            }
        }
    }
    Err(Error::Girth {
        lift: z,
        attempts: MAX_ATTEMPTS,
    })
}

/// Like [`lift`] but never fails on girth: where every shift closes a
/// 4-cycle, one closing the fewest is taken. Used when the lift factor is too
/// small for a 4-cycle-free expansion.
pub fn lift_relaxed(proto: &Protograph, z: usize, seed: u64) -> Result<LiftedCode> {
    if z == 0 || z < proto.max_multiplicity() as usize {
        return Err(Error::InvalidConfig(format!(
            "lift factor {z} below protograph multiplicity {}",
            proto.max_multiplicity()
        )));
    }
    let mut rng = stream_rng(seed, Stream::Construction);
    let shifts = assign_shifts(proto, z, false, &mut rng).expect("relaxed assignment always completes");
    expand(proto, z, &shifts, seed)
}

fn assign_shifts<R: Rng>(
    proto: &Protograph,
    z: usize,
    strict: bool,
    rng: &mut R,
) -> Option<Vec<Vec<u32>>> {
    let (mb, nb) = (proto.rows(), proto.cols());
    let zi = z as i64;
    let mut shifts: Vec<Vec<u32>> = vec![Vec::new(); mb * nb];
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); nb];
    let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); mb];
    let mut hits = vec![0u32; z];
    let mut allowed = Vec::with_capacity(z);
    for j1 in 0..nb {
        for i1 in 0..mb {
            for _ in 0..proto.get(i1, j1) {
                hits.fill(0);
                let b1 = i1 * nb + j1;
                // Walks e1 → e2 → e3 → e4 with the new edge e1 used once:
                // s1 ≡ s2 − s3 + s4.
                for &i2 in &col_rows[j1] {
                    for (k2, &s2) in shifts[i2 * nb + j1].iter().enumerate() {
                        for &j2 in &row_cols[i2] {
                            let b4 = i1 * nb + j2;
                            if shifts[b4].is_empty() {
                                continue;
                            }
                            for (k3, &s3) in shifts[i2 * nb + j2].iter().enumerate() {
                                if j2 == j1 && k3 == k2 {
                                    continue;
                                }
                                for (k4, &s4) in shifts[b4].iter().enumerate() {
                                    if i2 == i1 && k4 == k3 {
                                        continue;
                                    }
                                    let s = (s2 as i64 - s3 as i64 + s4 as i64).rem_euclid(zi);
                                    hits[s as usize] += 1;
                                }
                            }
                        }
                    }
                }
                let same = &shifts[b1];
                for &s in same {
                    hits[s as usize] = u32::MAX;
                }
                for s in 0..z {
                    let bad = same.iter().any(|&a| {
                        same.iter()
                            .any(|&b| (2 * s as i64 - a as i64 - b as i64).rem_euclid(zi) == 0)
                    });
                    if bad && hits[s] != u32::MAX {
                        hits[s] += 1;
                    }
                }
                let floor = if strict { 0 } else { *hits.iter().min().unwrap() };
                if floor == u32::MAX {
                    return None;
                }
                allowed.clear();
                allowed.extend((0..z as u32).filter(|&s| hits[s as usize] == floor));
                if allowed.is_empty() {
                    return None;
                }
                let s = allowed[rng.random_range(0..allowed.len())];
                if shifts[b1].is_empty() {
                    col_rows[j1].push(i1);
                    row_cols[i1].push(j1);
                }
                shifts[b1].push(s);
            }
        }
    }
    Some(shifts)
}

fn expand(proto: &Protograph, z: usize, shifts: &[Vec<u32>], seed: u64) -> Result<LiftedCode> {
    let (mb, nb) = (proto.rows(), proto.cols());
    let mut rows = Vec::with_capacity(mb * z);
    for i in 0..mb {
        for k in 0..z {
            let mut r = Vec::with_capacity(proto.row_degree(i));
            for j in 0..nb {
                for &s in &shifts[i * nb + j] {
                    r.push((j * z + (k + s as usize) % z) as u32);
                }
            }
            rows.push(r);
        }
    }
    LiftedCode::from_rows(nb * z, &rows, z, seed)
}
