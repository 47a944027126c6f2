use rand::Rng;

use super::random::{fill_fg_aware, DrawMode, Drawn, ForegroundIndex, Sampler};
use crate::error::{Error, Result};
use crate::volumes::{AnnotationMask, LabelVolume};

/// Share of foreground-oversampled draws used to fill the rest of the budget.
pub const FILL_FOREGROUND_SHARE: f64 = 0.33;

/// Patches each foreground class must appear in.
pub const MIN_PATCHES_PER_CLASS: usize = 2;

/// Attempts a single class-centered draw may spend.
const CLASS_TRIES: usize = 1000;

/// Initial annotation round.
///
/// Phase one draws patches around not-yet-covered voxels of each foreground
/// class (centered where the overlap constraint allows) until every class
/// present in the ground truth appears in at least two selected patches.
/// Phase two fills the remaining budget with the 33% foreground-aware random
/// strategy. `labels[i]` must belong to `masks[i]`.
pub fn starting_budget(
    masks: &[AnnotationMask],
    labels: &[LabelVolume],
    index: &ForegroundIndex,
    budget: usize,
    patch_size: [usize; 3],
    max_overlap: f64,
    rng: &mut impl Rng,
) -> Result<Drawn> {
    if masks.len() != labels.len() {
        return Err(Error::InvalidConfig(format!(
            "{} masks but {} label volumes",
            masks.len(),
            labels.len()
        )));
    }
    let mut sampler = Sampler::new(masks, budget, patch_size, max_overlap)?;
    let classes = index.classes();
    let class_slot = |c: u8| classes.iter().position(|&k| k == c);
    let mut coverage = vec![0usize; classes.len()];

    for (slot, &class) in classes.iter().enumerate() {
        while coverage[slot] < MIN_PATCHES_PER_CLASS {
            if sampler.placed().len() >= budget {
                return Err(Error::StartingBudgetTooSmall {
                    budget,
                    classes: classes.len(),
                });
            }
            if !sampler.draw_containing(index.voxels(class), DrawMode::ClassCentered, CLASS_TRIES, rng)? {
                return Err(Error::ClassUncoverable(class));
            }
            let placed = sampler.placed().last().unwrap();
            let label = &labels[placed.image];
            let mut present = vec![false; classes.len()];
            for i in placed.patch.voxel_indices(label.shape()) {
                if let Some(s) = class_slot(label.data()[i]) {
                    present[s] = true;
                }
            }
            for (count, hit) in coverage.iter_mut().zip(present) {
                *count += hit as usize;
            }
        }
    }

    let remaining = budget - sampler.placed().len();
    fill_fg_aware(&mut sampler, index, remaining, FILL_FOREGROUND_SHARE, rng)?;
    Ok(sampler.out)
}
