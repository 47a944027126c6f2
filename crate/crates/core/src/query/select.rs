use rand::Rng;

use super::{noise::perturb_scores, Candidate, NoiseSpec};
use crate::aggregate::ScoreField;
use crate::error::{Error, Result};
use crate::volumes::{overlap_fraction, AnnotationMask};

/// Greedy per-image scan: walk placements by descending score and keep one
/// when its overlap with every kept placement and every annotated box is at
/// most `max_overlap`. Stops after `cap` keeps.
///
/// Equal scores are visited in lexicographic origin order.
pub fn select_image_patches(
    field: &ScoreField,
    labeled: &AnnotationMask,
    max_overlap: f64,
    cap: usize,
) -> Result<Vec<Candidate>> {
    if field.is_empty() {
        return Err(Error::EmptyField);
    }
    let mut order: Vec<u32> = (0..field.len() as u32).collect();
    // Row-major index order is lexicographic origin order.
    order.sort_unstable_by(|&a, &b| {
        field.values[b as usize]
            .total_cmp(&field.values[a as usize])
            .then(a.cmp(&b))
    });

    let mut kept: Vec<Candidate> = Vec::with_capacity(cap);
    for idx in order {
        if kept.len() >= cap {
            break;
        }
        let patch = field.patch(idx as usize);
        let feasible = kept
            .iter()
            .all(|k| overlap_fraction(&patch, &k.patch) <= max_overlap)
            && labeled
                .boxes()
                .iter()
                .all(|b| overlap_fraction(&patch, b) <= max_overlap);
        if feasible {
            kept.push(Candidate::new(
                field.image_id.clone(),
                patch,
                field.values[idx as usize] as f64,
            ));
        }
    }
    Ok(kept)
}

/// Pools per-image candidates, perturbs their scores once, and returns the
/// top `n` (with their raw scores) in selection order.
///
/// The pool is put in `(image_id, origin)` order before noise is drawn, so
/// the result does not depend on the order of `per_image`. Equal perturbed
/// scores fall back to the raw score, then to `(image_id, origin)`.
pub fn global_select(
    per_image: Vec<Vec<Candidate>>,
    n: usize,
    spec: &NoiseSpec,
    rng: &mut impl Rng,
) -> Result<Vec<Candidate>> {
    let mut pool: Vec<Candidate> = per_image.into_iter().flatten().collect();
    if pool.len() < n {
        return Err(Error::InsufficientCandidates {
            requested: n,
            available: pool.len(),
        });
    }
    pool.sort_by(|a, b| a.tie_key().cmp(&b.tie_key()));
    let perturbed = perturb_scores(&pool, spec, rng);
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| {
        perturbed[b]
            .score
            .total_cmp(&perturbed[a].score)
            .then_with(|| pool[a].rank_cmp(&pool[b]))
    });
    Ok(order.into_iter().take(n).map(|i| pool[i].clone()).collect())
}
