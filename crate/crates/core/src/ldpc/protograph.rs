use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Base matrix of edge multiplicities, checks × variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Protograph {
    rows: usize,
    cols: usize,
    entries: Vec<u8>,
}

impl Protograph {
    pub fn new(base: &[Vec<u8>]) -> Result<Self> {
        let rows = base.len();
        let cols = base.first().map_or(0, |r| r.len());
        if rows == 0 || cols == 0 || rows >= cols {
            return Err(Error::InvalidConfig(format!(
                "protograph must be wider than tall, got {rows}x{cols}"
            )));
        }
        if base.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidConfig("ragged protograph rows".into()));
        }
        let entries: Vec<u8> = base.iter().flatten().copied().collect();
        let p = Self {
            rows,
            cols,
            entries,
        };
        if let Some(j) = (0..cols).find(|&j| p.col_degree(j) == 0) {
            return Err(Error::InvalidConfig(format!(
                "protograph variable node {j} has no edges"
            )));
        }
        Ok(p)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.entries[i * self.cols + j]
    }

    pub fn col_degree(&self, j: usize) -> usize {
        (0..self.rows).map(|i| self.get(i, j) as usize).sum()
    }

    pub fn row_degree(&self, i: usize) -> usize {
        (0..self.cols).map(|j| self.get(i, j) as usize).sum()
    }

    pub fn max_multiplicity(&self) -> u8 {
        self.entries.iter().copied().max().unwrap_or(0)
    }

    pub fn edges(&self) -> usize {
        self.entries.iter().map(|&e| e as usize).sum()
    }

    /// 1 − rows/cols, exact when the lifted matrix has full rank.
    pub fn design_rate(&self) -> f64 {
        1.0 - self.rows as f64 / self.cols as f64
    }

    /// Builds a base matrix from a variable-degree profile. Degree-2 columns
    /// form a staircase over consecutive rows; the remaining columns take the
    /// currently lightest rows so check degrees stay within one of each other.
    pub fn from_profile(rows: usize, profile: &DegreeProfile, seed: u64) -> Result<Self> {
        let cols = profile.columns();
        if profile.count(2) >= rows {
            return Err(Error::InvalidConfig(format!(
                "{} degree-2 columns do not fit a staircase over {rows} rows",
                profile.count(2)
            )));
        }
        if let Some(&(d, _)) = profile.classes.iter().find(|(d, _)| *d as usize > rows || *d < 2) {
            return Err(Error::InvalidConfig(format!(
                "column degree {d} outside [2, {rows}]"
            )));
        }
        let mut rng = stream_rng(seed, Stream::Construction);
        let mut base = vec![vec![0u8; cols]; rows];
        let mut load = vec![0usize; rows];
        let mut col = 0;
        for k in 0..profile.count(2) {
            base[k][col] = 1;
            base[k + 1][col] = 1;
            load[k] += 1;
            load[k + 1] += 1;
            col += 1;
        }
        let mut heavy: Vec<u32> = profile
            .classes
            .iter()
            .filter(|(d, _)| *d != 2)
            .flat_map(|&(d, c)| std::iter::repeat_n(d, c))
            .collect();
        heavy.sort_unstable_by(|a, b| b.cmp(a));
        for d in heavy {
            let mut order: Vec<usize> = (0..rows).collect();
            order.shuffle(&mut rng);
            order.sort_by_key(|&i| load[i]);
            for &i in order.iter().take(d as usize) {
                base[i][col] = 1;
                load[i] += 1;
            }
            col += 1;
        }
        // Shuffle column order so heavy and light columns interleave.
        let mut perm: Vec<usize> = (0..cols).collect();
        perm.shuffle(&mut rng);
        let base: Vec<Vec<u8>> = base
            .iter()
            .map(|r| perm.iter().map(|&j| r[j]).collect())
            .collect();
        Self::new(&base)
    }
}

/// Counts of base-matrix columns per variable degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeProfile {
    pub classes: Vec<(u32, usize)>,
}

impl DegreeProfile {
    pub fn columns(&self) -> usize {
        self.classes.iter().map(|c| c.1).sum()
    }

    pub fn count(&self, degree: u32) -> usize {
        self.classes
            .iter()
            .filter(|c| c.0 == degree)
            .map(|c| c.1)
            .sum()
    }

    pub fn edges(&self) -> usize {
        self.classes.iter().map(|&(d, c)| d as usize * c).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_columns() {
        assert!(Protograph::new(&[vec![1, 1, 0]]).is_err());
        assert!(Protograph::new(&[vec![1, 1, 1]]).is_ok());
    }

    #[test]
    fn profile_construction_preserves_degrees() {
        let prof = DegreeProfile {
            classes: vec![(2, 7), (3, 80), (8, 23), (12, 10)],
        };
        let p = Protograph::from_profile(12, &prof, 3).unwrap();
        assert_eq!(p.cols(), 120);
        let mut degs: Vec<usize> = (0..120).map(|j| p.col_degree(j)).collect();
        degs.sort();
        assert_eq!(degs.iter().filter(|&&d| d == 2).count(), 7);
        assert_eq!(degs.iter().filter(|&&d| d == 12).count(), 10);
        let rd: Vec<usize> = (0..12).map(|i| p.row_degree(i)).collect();
        let (lo, hi) = (rd.iter().min().unwrap(), rd.iter().max().unwrap());
        assert!(hi - lo <= 1, "{rd:?}");
        assert_eq!(p.max_multiplicity(), 1);
        assert_eq!(p, Protograph::from_profile(12, &prof, 3).unwrap());
    }
}
