//! Evaluation metrics for active-learning runs.

mod fgeff;
mod stats;

pub use fgeff::{fg_eff_curve, fit_fg_eff, FgEffInput, GAMMA_BOUND};
pub use stats::{kendall_tau, ppm, welch_t_test, KendallTau, PpmCell, PpmResult, PPM_ALPHA};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volumes::LabelVolume;

/// Mean foreground Dice of one image.
///
/// Classes missing from both volumes are skipped; a class present in only
/// one of them scores 0. Returns 1.0 when no class is present at all.
pub fn dice_per_image(pred: &LabelVolume, gt: &LabelVolume) -> Result<f64> {
    if pred.shape() != gt.shape() {
        return Err(Error::ShapeMismatch(pred.shape().dims(), gt.shape().dims()));
    }
    if pred.has_unlabeled() || gt.has_unlabeled() {
        return Err(Error::InvalidVolume("Dice inputs must be fully labelled".into()));
    }
    let classes = pred.num_classes().max(gt.num_classes()) as usize;
    let mut p = vec![0u64; classes];
    let mut g = vec![0u64; classes];
    let mut both = vec![0u64; classes];
    for (&a, &b) in pred.data().iter().zip(gt.data()) {
        p[a as usize] += 1;
        g[b as usize] += 1;
        if a == b {
            both[a as usize] += 1;
        }
    }
    let scores: Vec<f64> = (1..classes)
        .filter(|&c| p[c] + g[c] > 0)
        .map(|c| 2.0 * both[c] as f64 / (p[c] + g[c]) as f64)
        .collect();
    if scores.is_empty() {
        return Ok(1.0);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Mean Dice against budget (in annotated patches) for one method and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetCurve {
    pub method: String,
    pub seed: u64,
    points: Vec<(f64, f64)>,
}

impl BudgetCurve {
    pub fn new(method: impl Into<String>, seed: u64, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::DegenerateCurve);
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidConfig("budgets must be strictly increasing".into()));
        }
        if points.iter().any(|p| !(0.0..=1.0).contains(&p.1)) {
            return Err(Error::InvalidConfig("curve values must lie in [0, 1]".into()));
        }
        Ok(Self {
            method: method.into(),
            seed,
            points,
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn final_value(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.1)
    }
}

/// Area under the budget curve, normalized by the budget span.
pub fn aubc(curve: &BudgetCurve) -> Result<f64> {
    let pts = curve.points();
    if pts.len() < 2 {
        return Err(Error::DegenerateCurve);
    }
    let span = pts[pts.len() - 1].0 - pts[0].0;
    if span <= 0.0 {
        return Err(Error::DegenerateCurve);
    }
    // Integrated relative to the first value so constant curves are exact.
    let base = pts[0].1;
    let excess: f64 = pts
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * ((w[0].1 - base) + (w[1].1 - base)) / 2.0)
        .sum();
    Ok(base + excess / span)
}

/// Sample mean and (n - 1) standard deviation; std is 0 for one value.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let base = values[0];
    let mean = base + values.iter().map(|v| v - base).sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volumes::{Shape, Volume};
    use proptest::prelude::*;

    fn labels(values: Vec<u8>, classes: u8) -> LabelVolume {
        let s = Shape::new(1, 1, values.len()).unwrap();
        LabelVolume::new(Volume::new(s, values).unwrap(), classes).unwrap()
    }

    #[test]
    fn dice_examples() {
        let gt = labels(vec![0, 1, 1, 0, 2], 3);
        assert_eq!(dice_per_image(&gt, &gt).unwrap(), 1.0);

        let a = labels(vec![1, 1, 0, 0], 2);
        let b = labels(vec![0, 0, 1, 1], 2);
        assert_eq!(dice_per_image(&a, &b).unwrap(), 0.0);

        let p = labels(vec![1, 1, 1, 1, 0, 0], 2);
        let g = labels(vec![0, 0, 1, 1, 1, 1], 2);
        assert_eq!(dice_per_image(&p, &g).unwrap(), 0.5);

        let bg = labels(vec![0, 0], 2);
        assert_eq!(dice_per_image(&bg, &bg).unwrap(), 1.0);
        // Class 2 absent from both is skipped; class 1 missed entirely scores 0.
        let missed = labels(vec![0, 0, 0], 3);
        let truth = labels(vec![0, 1, 0], 3);
        assert_eq!(dice_per_image(&missed, &truth).unwrap(), 0.0);
    }

    #[test]
    fn dice_rejects_mismatch_and_sentinels() {
        let a = labels(vec![0, 1], 2);
        let b = labels(vec![0, 1, 1], 2);
        assert!(matches!(dice_per_image(&a, &b), Err(Error::ShapeMismatch(..))));
        let c = labels(vec![0, 255], 2);
        assert!(dice_per_image(&a, &c).is_err());
    }

    #[test]
    fn aubc_examples() {
        let c = BudgetCurve::new("m", 0, vec![(100.0, 0.8), (200.0, 0.8), (300.0, 0.8)]).unwrap();
        assert_eq!(aubc(&c).unwrap(), 0.8);
        let t = BudgetCurve::new("m", 0, vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(aubc(&t).unwrap(), 0.5);
        assert!(matches!(
            BudgetCurve::new("m", 0, vec![(1.0, 0.5)]),
            Err(Error::DegenerateCurve)
        ));
    }

    proptest! {
        #[test]
        fn dice_is_symmetric(a in prop::collection::vec(0u8..4, 1..40), seed in any::<u64>()) {
            let b: Vec<u8> = a.iter().enumerate()
                .map(|(i, &v)| if (seed >> (i % 64)) & 1 == 1 { (v + 1) % 4 } else { v })
                .collect();
            let (x, y) = (labels(a, 4), labels(b, 4));
            prop_assert_eq!(dice_per_image(&x, &y).unwrap(), dice_per_image(&y, &x).unwrap());
        }

        #[test]
        fn aubc_within_value_range(
            steps in prop::collection::vec((0.1f64..50.0, 0.0f64..=1.0), 2..12)
        ) {
            let mut b = 0.0;
            let pts: Vec<_> = steps.iter().map(|&(d, v)| { b += d; (b, v) }).collect();
            let c = BudgetCurve::new("m", 0, pts.clone()).unwrap();
            let a = aubc(&c).unwrap();
            let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(a >= lo - 1e-12 && a <= hi + 1e-12);
        }
    }
}
