use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::mean_std;
use crate::error::{Error, Result};

pub const PPM_ALPHA: f64 = 0.05;
const EXACT_KENDALL_MAX: usize = 8;

/// Two-sided p-value of Welch's unequal-variance t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<f64> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::TooFewSamples(s.len()));
        }
    }
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    let va = sa * sa / a.len() as f64;
    let vb = sb * sb / b.len() as f64;
    let se2 = va + vb;
    if se2 == 0.0 {
        return Ok(if ma == mb { 1.0 } else { 0.0 });
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2 * se2
        / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom");
    Ok((2.0 * dist.sf(t.abs())).min(1.0))
}

/// One comparison cell (dataset, regime, budget): per-method seed samples,
/// ordered like [`PpmResult::methods`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpmCell {
    pub label: String,
    pub samples: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpmResult {
    pub methods: Vec<String>,
    pub cells: usize,
    /// Share of cells in which row method significantly beats column method.
    pub matrix: Vec<Vec<f64>>,
    /// Number of cells in which row method significantly beats column method.
    pub wins: Vec<Vec<usize>>,
}

impl PpmResult {
    /// `(wins, losses)` of method `i` against method `j`.
    pub fn win_lose(&self, i: usize, j: usize) -> (usize, usize) {
        (self.wins[i][j], self.wins[j][i])
    }
}

pub fn ppm(methods: &[String], cells: &[PpmCell], alpha: f64) -> Result<PpmResult> {
    let m = methods.len();
    if cells.is_empty() {
        return Err(Error::RaggedResults("no comparison cells".into()));
    }
    for cell in cells {
        if cell.samples.len() != m {
            return Err(Error::RaggedResults(format!(
                "cell {} has {} methods, expected {m}",
                cell.label,
                cell.samples.len()
            )));
        }
        if let Some(s) = cell.samples.iter().find(|s| s.len() < 2) {
            return Err(Error::RaggedResults(format!(
                "cell {} has a method with {} seeds",
                cell.label,
                s.len()
            )));
        }
    }
    let mut wins = vec![vec![0usize; m]; m];
    for cell in cells {
        let means: Vec<f64> = cell.samples.iter().map(|s| mean_std(s).0).collect();
        for i in 0..m {
            for j in i + 1..m {
                let p = welch_t_test(&cell.samples[i], &cell.samples[j])?;
                if p < alpha {
                    if means[i] > means[j] {
                        wins[i][j] += 1;
                    } else if means[j] > means[i] {
                        wins[j][i] += 1;
                    }
                }
            }
        }
    }
    let n = cells.len() as f64;
    let matrix = wins
        .iter()
        .map(|row| row.iter().map(|&w| w as f64 / n).collect())
        .collect();
    Ok(PpmResult {
        methods: methods.to_vec(),
        cells: cells.len(),
        matrix,
        wins,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KendallTau {
    pub tau: f64,
    pub p_value: f64,
}

/// Kendall's tau between two rankings, each listing the same items from
/// best to worst. The p-value is exact up to 8 items.
pub fn kendall_tau<T: Ord>(rank_a: &[T], rank_b: &[T]) -> Result<KendallTau> {
    let n = rank_a.len();
    if rank_b.len() != n {
        return Err(Error::MismatchedItems);
    }
    let pos_b: BTreeMap<&T, usize> = rank_b.iter().enumerate().map(|(i, t)| (t, i)).collect();
    if pos_b.len() != n {
        return Err(Error::MismatchedItems);
    }
    let seq = rank_a
        .iter()
        .map(|t| pos_b.get(t).copied().ok_or(Error::MismatchedItems))
        .collect::<Result<Vec<_>>>()?;
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let pairs = n * (n - 1) / 2;
    let mut discordant = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if seq[i] > seq[j] {
                discordant += 1;
            }
        }
    }
    let tau = (pairs as f64 - 2.0 * discordant as f64) / pairs as f64;
    let p_value = if n <= EXACT_KENDALL_MAX {
        let counts = inversion_counts(n);
        let total: u64 = counts.iter().sum();
        let observed = (pairs as i64 - 2 * discordant as i64).abs();
        let extreme: u64 = counts
            .iter()
            .enumerate()
            .filter(|&(d, _)| (pairs as i64 - 2 * d as i64).abs() >= observed)
            .map(|(_, &c)| c)
            .sum();
        extreme as f64 / total as f64
    } else {
        let nf = n as f64;
        let var = 2.0 * (2.0 * nf + 5.0) / (9.0 * nf * (nf - 1.0));
        let z = tau / var.sqrt();
        (2.0 * Normal::standard().sf(z.abs())).min(1.0)
    };
    Ok(KendallTau { tau, p_value })
}

/// Number of permutations of `n` items with each inversion count.
fn inversion_counts(n: usize) -> Vec<u64> {
    let mut counts = vec![1u64];
    for k in 1..=n {
        let mut next = vec![0u64; counts.len() + k - 1];
        for (d, &c) in counts.iter().enumerate() {
            for extra in 0..k {
                next[d + extra] += c;
            }
        }
        counts = next;
    }
    counts
}
