use rand::distr::{Distribution, Open01};
use rand::Rng;

use super::{Beta, Candidate, NoiseKind, NoiseSpec};

/// Scores at or below this are treated as this value before `ln`.
pub const SCORE_FLOOR: f64 = 1e-12;

/// Inverse-CDF Gumbel(0, 1/beta) sample for `u` in (0, 1).
pub fn gumbel_from_uniform(u: f64, beta: Beta) -> f64 {
    if beta.is_infinite() {
        return 0.0;
    }
    -(-u.ln()).ln() / beta.value()
}

fn gumbel(rng: &mut impl Rng, beta: Beta) -> f64 {
    if beta.is_infinite() {
        return 0.0;
    }
    let u: f64 = Open01.sample(rng);
    gumbel_from_uniform(u, beta)
}

/// Returns the candidates in input order with perturbed scores.
///
/// Noise is drawn in input order, one sample per candidate.
pub fn perturb_scores(cands: &[Candidate], spec: &NoiseSpec, rng: &mut impl Rng) -> Vec<Candidate> {
    match spec.kind {
        NoiseKind::None => cands.to_vec(),
        NoiseKind::Power => cands
            .iter()
            .map(|c| {
                let s = c.score.max(SCORE_FLOOR).ln() + gumbel(rng, spec.beta);
                Candidate { score: s, ..c.clone() }
            })
            .collect(),
        NoiseKind::Softrank => {
            let mut order: Vec<usize> = (0..cands.len()).collect();
            order.sort_by(|&a, &b| cands[a].rank_cmp(&cands[b]));
            let mut rank = vec![0usize; cands.len()];
            for (r, &i) in order.iter().enumerate() {
                rank[i] = r + 1;
            }
            cands
                .iter()
                .zip(rank)
                .map(|(c, r)| {
                    let s = -(r as f64).ln() + gumbel(rng, spec.beta);
                    Candidate { score: s, ..c.clone() }
                })
                .collect()
        }
    }
}
