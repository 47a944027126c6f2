use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Search interval for the decay rate is `[-GAMMA_BOUND, GAMMA_BOUND]`.
pub const GAMMA_BOUND: f64 = 1e4;
const GRID: usize = 4000;
const TOL: f64 = 1e-6;
const MAX_EXPONENT: f64 = 700.0;

/// Points `(t, y)`: annotated share of ground-truth foreground and mean
/// Dice, plus the start point `(t0, y0)` and full-data Dice `y_full`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FgEffInput {
    pub points: Vec<(f64, f64)>,
    pub t0: f64,
    pub y0: f64,
    pub y_full: f64,
}

/// `(y0 - y_full) * exp(-gamma (t - t0)) + y_full`.
pub fn fg_eff_curve(t: f64, gamma: f64, t0: f64, y0: f64, y_full: f64) -> f64 {
    (y0 - y_full) * (-gamma * (t - t0)).exp() + y_full
}

impl FgEffInput {
    /// Sum of squared residuals; infinite where the curve overflows.
    pub fn sse(&self, gamma: f64) -> f64 {
        let mut total = 0.0;
        for &(t, y) in &self.points {
            let e = -gamma * (t - self.t0);
            if e > MAX_EXPONENT {
                return f64::INFINITY;
            }
            let r = y - fg_eff_curve(t, gamma, self.t0, self.y0, self.y_full);
            total += r * r;
        }
        total
    }
}

/// Least-squares decay rate: a dense scan in `asinh` space locates the
/// basin, then golden-section search refines it. Ties prefer small `|gamma|`.
pub fn fit_fg_eff(input: &FgEffInput) -> Result<f64> {
    if input.y_full == input.y0 {
        return Err(Error::DegenerateFit);
    }
    if input.points.is_empty() {
        return Err(Error::TooFewSamples(0));
    }
    let lim = GAMMA_BOUND.asinh();
    let mut grid: Vec<f64> = (0..=GRID)
        .map(|i| (-lim + 2.0 * lim * i as f64 / GRID as f64).sinh())
        .collect();
    grid.push(0.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let sse: Vec<f64> = grid.iter().map(|&g| input.sse(g)).collect();
    let mut best = 0;
    for i in 1..grid.len() {
        if sse[i] < sse[best] || (sse[i] == sse[best] && grid[i].abs() < grid[best].abs()) {
            best = i;
        }
    }
    let zero = input.sse(0.0);
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let gamma = golden_section(|g| input.sse(g), lo, hi);
    let refined = input.sse(gamma);
    let (gamma, value) = if refined <= sse[best] {
        (gamma, refined)
    } else {
        (grid[best], sse[best])
    };
    if zero <= value {
        return Ok(0.0);
    }
    Ok(gamma)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forward(gamma: f64) -> FgEffInput {
        let (t0, y0, y_full) = (0.05, 0.4, 0.8);
        let points = (1..=30)
            .map(|i| {
                let t = t0 + (1.0 - t0) * i as f64 / 30.0;
                (t, fg_eff_curve(t, gamma, t0, y0, y_full))
            })
            .collect();
        FgEffInput { points, t0, y0, y_full }
    }

    #[test]
    fn recovers_forward_generated_gamma() {
        let g = fit_fg_eff(&forward(5.0)).unwrap();
        assert!((g - 5.0).abs() < 1e-4, "{g}");
        let g = fit_fg_eff(&forward(-3.0)).unwrap();
        assert!((g + 3.0).abs() < 1e-4, "{g}");
    }

    #[test]
    fn flat_information_gives_zero() {
        let input = FgEffInput {
            points: vec![(0.1, 0.5); 4],
            t0: 0.1,
            y0: 0.5,
            y_full: 0.9,
        };
        assert_eq!(fit_fg_eff(&input).unwrap(), 0.0);
    }

    #[test]
    fn start_point_fixed_for_any_gamma() {
        for g in [-50.0, -1.0, 0.0, 2.5, 400.0] {
            assert_eq!(fg_eff_curve(0.028, g, 0.028, 0.472, 0.705), 0.472);
        }
    }

    #[test]
    fn degenerate_when_start_equals_full() {
        let mut input = forward(1.0);
        input.y_full = input.y0;
        assert!(matches!(fit_fg_eff(&input), Err(Error::DegenerateFit)));
    }

    #[test]
    fn locally_optimal() {
        for (gamma, shift) in [(2.0, 0.01), (-7.0, -0.02), (30.0, 0.005)] {
            let mut input = forward(gamma);
            for (i, p) in input.points.iter_mut().enumerate() {
                p.1 += if i % 2 == 0 { shift } else { -shift };
            }
            let g = fit_fg_eff(&input).unwrap();
            let r = input.sse(g);
            assert!(r <= input.sse(g + 0.01) && r <= input.sse(g - 0.01));
        }
    }
}
