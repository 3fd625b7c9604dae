//! Per-chain beam scores and top-n candidate extraction.

use crate::error::{Error, Result};

/// `2 N_rf` score rows of length `|C|`, +45 deg chains first.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionScores {
    rf_chains: usize,
    codebook_size: usize,
    values: Vec<f32>,
}

impl PredictionScores {
    pub fn new(rf_chains: usize, codebook_size: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != 2 * rf_chains * codebook_size {
            return Err(Error::invalid(format!(
                "expected {} scores for {rf_chains} chains and {codebook_size} codewords, got {}",
                2 * rf_chains * codebook_size,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("score {v} outside [0, 1]")));
        }
        Ok(Self {
            rf_chains,
            codebook_size,
            values,
        })
    }

    /// One-hot rows on the given flat index tuple.
    pub fn one_hot(rf_chains: usize, codebook_size: usize, tuple: &[usize]) -> Result<Self> {
        let mut values = vec![0.0; 2 * rf_chains * codebook_size];
        if tuple.len() != 2 * rf_chains {
            return Err(Error::invalid("one-hot tuple length must be 2 N_rf"));
        }
        for (r, &i) in tuple.iter().enumerate() {
            if i >= codebook_size {
                return Err(Error::invalid(format!("index {i} out of codebook range")));
            }
            values[r * codebook_size + i] = 1.0;
        }
        Self::new(rf_chains, codebook_size, values)
    }

    pub fn rf_chains(&self) -> usize {
        self.rf_chains
    }

    pub fn codebook_size(&self) -> usize {
        self.codebook_size
    }

    pub fn rows(&self) -> usize {
        2 * self.rf_chains
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.values[r * self.codebook_size..(r + 1) * self.codebook_size]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    /// Indices of the `n` highest scores of row `r`, best first; equal
    /// scores go to the smaller index.
    pub fn top_n(&self, r: usize, n: usize) -> Vec<usize> {
        top_n(self.row(r), n)
    }
}

pub fn top_n(row: &[f32], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

/// Rank of `index` in `row` under the same ordering as [`top_n`]; the index
/// is inside the top-n set iff `rank < n`.
pub fn rank_of(row: &[f32], index: usize) -> usize {
    let s = row[index];
    row.iter()
        .enumerate()
        .filter(|&(j, &v)| v > s || (v == s && j < index))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_n_breaks_ties_to_smaller_index() {
        let row = [0.2, 0.9, 0.2, 0.9, 0.1];
        assert_eq!(top_n(&row, 3), vec![1, 3, 0]);
        assert_eq!(rank_of(&row, 3), 1);
        assert_eq!(rank_of(&row, 2), 3);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(PredictionScores::new(1, 2, vec![0.0, 1.5, 0.0, 0.0]).is_err());
        assert!(PredictionScores::new(1, 2, vec![0.0; 3]).is_err());
        assert!(PredictionScores::new(1, 2, vec![f32::NAN, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn one_hot_rows() {
        let s = PredictionScores::one_hot(2, 4, &[1, 0, 3, 2]).unwrap();
        assert_eq!(s.row(2), &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(s.top_n(0, 1), vec![1]);
    }
}
