//! Voxelwise uncertainty from an ensemble of softmax outputs.
//!
//! All entropies use the natural logarithm. Member contributions are sorted
//! before summation so the result does not depend on member order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volumes::{EnsembleProbabilityStack, Volume};

/// Probabilities are floored here before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UncertaintyKind {
    /// Entropy of the member-mean distribution.
    PredictiveEntropy,
    /// Mean of the member entropies.
    ExpectedEntropy,
    /// Mutual information: predictive minus expected entropy.
    Bald,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyMap {
    pub image_id: String,
    pub kind: UncertaintyKind,
    pub values: Volume<f32>,
}

impl UncertaintyMap {
    pub fn with_image_id(mut self, id: impl Into<String>) -> Self {
        self.image_id = id.into();
        self
    }
}

#[inline]
fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.max(PROB_FLOOR).ln()
    }
}

/// Mean of the sorted buffer; exact when all entries are equal.
fn sorted_mean(buf: &mut [f64]) -> f64 {
    buf.sort_unstable_by(f64::total_cmp);
    if buf[0] == buf[buf.len() - 1] {
        return buf[0];
    }
    buf.iter().sum::<f64>() / buf.len() as f64
}

/// Per-voxel `(predictive entropy, expected entropy)` in f64.
struct EntropyPass<'a> {
    stack: &'a EnsembleProbabilityStack,
    member_buf: Vec<f64>,
}

impl<'a> EntropyPass<'a> {
    fn new(stack: &'a EnsembleProbabilityStack) -> Result<Self> {
        if stack.members() == 0 {
            return Err(Error::DegenerateStack);
        }
        Ok(Self {
            stack,
            member_buf: vec![0.0; stack.members()],
        })
    }

    fn predictive(&mut self, voxel: usize) -> f64 {
        let e = self.stack.members();
        let mut h = 0.0;
        for c in 0..self.stack.classes() {
            for m in 0..e {
                self.member_buf[m] = self.stack.prob(m, c, voxel) as f64;
            }
            let mean = sorted_mean(&mut self.member_buf);
            h -= plogp(mean);
        }
        h
    }

    fn expected(&mut self, voxel: usize) -> f64 {
        let e = self.stack.members();
        for m in 0..e {
            let mut h = 0.0;
            for c in 0..self.stack.classes() {
                h -= plogp(self.stack.prob(m, c, voxel) as f64);
            }
            self.member_buf[m] = h;
        }
        sorted_mean(&mut self.member_buf)
    }
}

fn map_with(
    stack: &EnsembleProbabilityStack,
    kind: UncertaintyKind,
    mut f: impl FnMut(&mut EntropyPass, usize) -> f64,
) -> Result<UncertaintyMap> {
    let mut pass = EntropyPass::new(stack)?;
    let n = stack.shape().voxel_count();
    let data = (0..n).map(|v| f(&mut pass, v) as f32).collect();
    Ok(UncertaintyMap {
        image_id: String::new(),
        kind,
        values: Volume::new(stack.shape(), data)?,
    })
}

pub fn predictive_entropy(stack: &EnsembleProbabilityStack) -> Result<UncertaintyMap> {
    map_with(stack, UncertaintyKind::PredictiveEntropy, |p, v| p.predictive(v))
}

pub fn expected_entropy(stack: &EnsembleProbabilityStack) -> Result<UncertaintyMap> {
    map_with(stack, UncertaintyKind::ExpectedEntropy, |p, v| p.expected(v))
}

/// Clamped at zero; small negatives are rounding artifacts.
pub fn bald(stack: &EnsembleProbabilityStack) -> Result<UncertaintyMap> {
    map_with(stack, UncertaintyKind::Bald, |p, v| {
        (p.predictive(v) - p.expected(v)).max(0.0)
    })
}

pub fn uncertainty(stack: &EnsembleProbabilityStack, kind: UncertaintyKind) -> Result<UncertaintyMap> {
    match kind {
        UncertaintyKind::PredictiveEntropy => predictive_entropy(stack),
        UncertaintyKind::ExpectedEntropy => expected_entropy(stack),
        UncertaintyKind::Bald => bald(stack),
    }
}
