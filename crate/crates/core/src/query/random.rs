use rand::Rng;

use super::QueryPatch;
use crate::error::{Error, Result};
use crate::volumes::{clamp_patch, overlap_fraction, AnnotationMask, LabelVolume, PatchBox, Shape};

/// Placement attempts allowed per requested patch before giving up.
pub const RETRIES_PER_PATCH: usize = 1000;

/// Attempts a foreground-centered draw gets before it falls back to a fully
/// random placement.
const FOREGROUND_TRIES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DrawMode {
    Random,
    ClassCentered,
    BorderCentered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub image: usize,
    pub patch: PatchBox,
    pub mode: DrawMode,
}

/// Patches drawn by a random strategy, indexed into the pool it was given.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Drawn {
    pub placements: Vec<Placement>,
    pub fallback_draws: usize,
}

impl Drawn {
    pub fn query_patches(&self, masks: &[AnnotationMask]) -> Vec<QueryPatch> {
        self.placements
            .iter()
            .map(|p| QueryPatch {
                image: masks[p.image].image_id().to_string(),
                origin: p.patch.origin,
                size: p.patch.size,
                score: None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
struct ClassVoxels {
    class: u8,
    /// `(image, flat voxel index)`.
    voxels: Vec<(u32, u32)>,
    border: Vec<(u32, u32)>,
}

/// Ground-truth foreground voxels and class-border voxels across a pool.
///
/// A border voxel is a foreground voxel with at least one 6-neighbour of a
/// different class; out-of-image neighbours do not count.
#[derive(Debug, Clone, Default)]
pub struct ForegroundIndex {
    classes: Vec<ClassVoxels>,
}

impl ForegroundIndex {
    pub fn build(labels: &[LabelVolume]) -> Self {
        let num_classes = labels.iter().map(|l| l.num_classes()).max().unwrap_or(0);
        let mut classes: Vec<ClassVoxels> = (1..num_classes)
            .map(|class| ClassVoxels {
                class,
                ..Default::default()
            })
            .collect();
        for (img, label) in labels.iter().enumerate() {
            let shape = label.shape();
            let data = label.data();
            for (i, &c) in data.iter().enumerate() {
                if c == 0 || c == crate::volumes::UNLABELED {
                    continue;
                }
                let entry = &mut classes[c as usize - 1];
                entry.voxels.push((img as u32, i as u32));
                if is_border(data, shape, i) {
                    entry.border.push((img as u32, i as u32));
                }
            }
        }
        classes.retain(|c| !c.voxels.is_empty());
        Self { classes }
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Foreground classes with at least one voxel, ascending.
    pub fn classes(&self) -> Vec<u8> {
        self.classes.iter().map(|c| c.class).collect()
    }

    pub fn voxels(&self, class: u8) -> &[(u32, u32)] {
        self.classes
            .iter()
            .find(|c| c.class == class)
            .map_or(&[], |c| &c.voxels)
    }

    pub fn border_voxels(&self, class: u8) -> &[(u32, u32)] {
        self.classes
            .iter()
            .find(|c| c.class == class)
            .map_or(&[], |c| &c.border)
    }

    fn has_border(&self) -> bool {
        self.classes.iter().any(|c| !c.border.is_empty())
    }
}

fn is_border(data: &[u8], shape: Shape, i: usize) -> bool {
    let c = data[i];
    let [z, y, x] = shape.coords(i);
    let [d, h, w] = shape.dims();
    let differs = |zz: usize, yy: usize, xx: usize| data[shape.index(zz, yy, xx)] != c;
    (z > 0 && differs(z - 1, y, x))
        || (z + 1 < d && differs(z + 1, y, x))
        || (y > 0 && differs(z, y - 1, x))
        || (y + 1 < h && differs(z, y + 1, x))
        || (x > 0 && differs(z, y, x - 1))
        || (x + 1 < w && differs(z, y, x + 1))
}

/// Box of `size` around `center`, shifted to stay inside `shape`.
pub(super) fn centered_box(center: [usize; 3], size: [usize; 3], shape: Shape) -> PatchBox {
    let dims = shape.dims();
    let origin = [0, 1, 2].map(|k| {
        let lo = center[k].saturating_sub(size[k] / 2);
        lo.min(dims[k] - size[k])
    });
    PatchBox::new(origin, size)
}

/// Shared rejection-sampling state for the random strategies.
pub(super) struct Sampler<'a> {
    masks: &'a [AnnotationMask],
    patch_size: [usize; 3],
    max_overlap: f64,
    drawn: Vec<Vec<PatchBox>>,
    pub(super) out: Drawn,
    attempts: usize,
    max_attempts: usize,
    requested: usize,
}

impl<'a> Sampler<'a> {
    pub(super) fn new(
        masks: &'a [AnnotationMask],
        n: usize,
        patch_size: [usize; 3],
        max_overlap: f64,
    ) -> Result<Self> {
        if masks.is_empty() {
            return Err(Error::InsufficientCandidates {
                requested: n,
                available: 0,
            });
        }
        if patch_size.contains(&0) {
            return Err(Error::InvalidConfig("patch size must be positive".into()));
        }
        Ok(Self {
            masks,
            patch_size,
            max_overlap,
            drawn: vec![Vec::new(); masks.len()],
            out: Drawn::default(),
            attempts: 0,
            max_attempts: RETRIES_PER_PATCH * n.max(1),
            requested: n,
        })
    }

    pub(super) fn placed(&self) -> &[Placement] {
        &self.out.placements
    }

    fn size_in(&self, image: usize) -> [usize; 3] {
        clamp_patch(self.patch_size, self.masks[image].shape())
    }

    fn feasible(&self, image: usize, patch: &PatchBox) -> bool {
        let o = self.max_overlap;
        self.drawn[image]
            .iter()
            .all(|b| overlap_fraction(patch, b) <= o)
            && self.masks[image]
                .boxes()
                .iter()
                .all(|b| overlap_fraction(patch, b) <= o)
    }

    /// Counts one attempt; errors once the budget is spent.
    fn spend(&mut self) -> Result<()> {
        if self.attempts >= self.max_attempts {
            return Err(Error::InsufficientCandidates {
                requested: self.requested,
                available: self.out.placements.len(),
            });
        }
        self.attempts += 1;
        Ok(())
    }

    fn accept(&mut self, image: usize, patch: PatchBox, mode: DrawMode) {
        self.drawn[image].push(patch);
        self.out.placements.push(Placement { image, patch, mode });
    }

    fn random_placement(&self, rng: &mut impl Rng) -> (usize, PatchBox) {
        let image = rng.random_range(0..self.masks.len());
        let size = self.size_in(image);
        let dims = self.masks[image].shape().dims();
        let origin = [0, 1, 2].map(|k| rng.random_range(0..=dims[k] - size[k]));
        (image, PatchBox::new(origin, size))
    }

    fn centered_placement(&self, (image, voxel): (u32, u32)) -> (usize, PatchBox) {
        let image = image as usize;
        let shape = self.masks[image].shape();
        let center = shape.coords(voxel as usize);
        (image, centered_box(center, self.size_in(image), shape))
    }

    pub(super) fn draw_random(&mut self, rng: &mut impl Rng) -> Result<()> {
        loop {
            self.spend()?;
            let (image, patch) = self.random_placement(rng);
            if self.feasible(image, &patch) {
                self.accept(image, patch, DrawMode::Random);
                return Ok(());
            }
        }
    }

    /// Centered on a uniform voxel from `sources`; `Ok(false)` if no feasible
    /// placement was found within `tries`.
    pub(super) fn draw_centered(
        &mut self,
        sources: &[(u32, u32)],
        mode: DrawMode,
        tries: usize,
        rng: &mut impl Rng,
    ) -> Result<bool> {
        for _ in 0..tries {
            self.spend()?;
            let voxel = sources[rng.random_range(0..sources.len())];
            let (image, patch) = self.centered_placement(voxel);
            if self.feasible(image, &patch) {
                self.accept(image, patch, mode);
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn covered(&self, image: usize, point: [usize; 3]) -> bool {
        self.drawn[image].iter().any(|b| b.contains(point))
            || self.masks[image].boxes().iter().any(|b| b.contains(point))
    }

    /// Like [`Self::draw_centered`], but only from voxels not yet covered by
    /// a box, and the box may be shifted off-center (least shift first) when
    /// the centered one violates the overlap constraint.
    pub(super) fn draw_containing(
        &mut self,
        sources: &[(u32, u32)],
        mode: DrawMode,
        tries: usize,
        rng: &mut impl Rng,
    ) -> Result<bool> {
        for _ in 0..tries {
            self.spend()?;
            let (image, voxel) = sources[rng.random_range(0..sources.len())];
            let image = image as usize;
            let shape = self.masks[image].shape();
            let point = shape.coords(voxel as usize);
            if self.covered(image, point) {
                continue;
            }
            let size = self.size_in(image);
            let centered = centered_box(point, size, shape);
            if let Some(patch) = self.nearest_feasible_containing(image, point, centered) {
                self.accept(image, patch, mode);
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn nearest_feasible_containing(
        &self,
        image: usize,
        point: [usize; 3],
        centered: PatchBox,
    ) -> Option<PatchBox> {
        let size = centered.size;
        let dims = self.masks[image].shape().dims();
        let range = |k: usize| (point[k] + 1).saturating_sub(size[k])..=point[k].min(dims[k] - size[k]);
        let mut best: Option<(usize, PatchBox)> = None;
        for z in range(0) {
            for y in range(1) {
                for x in range(2) {
                    let origin = [z, y, x];
                    let shift: usize = (0..3).map(|k| origin[k].abs_diff(centered.origin[k])).sum();
                    if best.as_ref().is_some_and(|(s, _)| *s <= shift) {
                        continue;
                    }
                    let patch = PatchBox::new(origin, size);
                    if self.feasible(image, &patch) {
                        best = Some((shift, patch));
                    }
                }
            }
        }
        best.map(|(_, p)| p)
    }

    fn draw_foreground(
        &mut self,
        index: &ForegroundIndex,
        mode: DrawMode,
        rng: &mut impl Rng,
    ) -> Result<bool> {
        let border = mode == DrawMode::BorderCentered;
        let eligible: Vec<&ClassVoxels> = index
            .classes
            .iter()
            .filter(|c| !(if border { &c.border } else { &c.voxels }).is_empty())
            .collect();
        if eligible.is_empty() {
            return Ok(false);
        }
        for _ in 0..FOREGROUND_TRIES {
            let class = eligible[rng.random_range(0..eligible.len())];
            let sources = if border { &class.border } else { &class.voxels };
            if self.draw_centered(sources, mode, 1, rng)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// `n` uniformly placed patches: uniform image, then uniform valid origin,
/// rejection-resampled until the overlap constraint holds.
pub fn random_query(
    masks: &[AnnotationMask],
    n: usize,
    patch_size: [usize; 3],
    max_overlap: f64,
    rng: &mut impl Rng,
) -> Result<Drawn> {
    let mut sampler = Sampler::new(masks, n, patch_size, max_overlap)?;
    for _ in 0..n {
        sampler.draw_random(rng)?;
    }
    Ok(sampler.out)
}

/// Foreground-aware random baseline.
///
/// Each patch is fully random with probability `1 - p_fg`, centered on a
/// uniform voxel of a uniformly chosen foreground class with probability
/// `p_fg / 2`, and centered on a uniform border voxel of a uniformly chosen
/// class otherwise. Foreground draws that cannot be placed fall back to a
/// random placement and are counted in [`Drawn::fallback_draws`].
///
/// With `p_fg == 0` no mode draw is made, so the result equals
/// [`random_query`] for the same stream.
pub fn fg_aware_query(
    masks: &[AnnotationMask],
    index: &ForegroundIndex,
    n: usize,
    patch_size: [usize; 3],
    max_overlap: f64,
    p_fg: f64,
    rng: &mut impl Rng,
) -> Result<Drawn> {
    let mut sampler = Sampler::new(masks, n, patch_size, max_overlap)?;
    fill_fg_aware(&mut sampler, index, n, p_fg, rng)?;
    Ok(sampler.out)
}

pub(super) fn fill_fg_aware(
    sampler: &mut Sampler,
    index: &ForegroundIndex,
    n: usize,
    p_fg: f64,
    rng: &mut impl Rng,
) -> Result<()> {
    if !(0.0..=1.0).contains(&p_fg) {
        return Err(Error::InvalidConfig(format!("p_fg {p_fg} outside [0,1]")));
    }
    for _ in 0..n {
        let mode = if p_fg > 0.0 {
            let r: f64 = rng.random();
            if r < p_fg / 2.0 {
                DrawMode::ClassCentered
            } else if r < p_fg {
                DrawMode::BorderCentered
            } else {
                DrawMode::Random
            }
        } else {
            DrawMode::Random
        };
        let placed = match mode {
            DrawMode::Random => false,
            DrawMode::BorderCentered if !index.has_border() => false,
            _ => sampler.draw_foreground(index, mode, rng)?,
        };
        if mode != DrawMode::Random && !placed {
            sampler.out.fallback_draws += 1;
        }
        if !placed {
            sampler.draw_random(rng)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volumes::Volume;
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn shape(d: usize, h: usize, w: usize) -> Shape {
        Shape::new(d, h, w).unwrap()
    }

    fn disjoint(drawn: &Drawn) -> bool {
        let p = &drawn.placements;
        (0..p.len()).all(|i| {
            (i + 1..p.len()).all(|j| p[i].image != p[j].image || !p[i].patch.intersects(&p[j].patch))
        })
    }

    #[test]
    fn centered_box_stays_inside_and_contains_center() {
        let s = shape(10, 10, 10);
        for c in [[0, 0, 0], [9, 9, 9], [5, 2, 7]] {
            let b = centered_box(c, [4, 4, 4], s);
            assert!(b.fits_in(s));
            assert!(b.contains(c));
        }
    }

    #[test]
    fn single_valid_origin() {
        let masks = [AnnotationMask::new("a", shape(4, 4, 4))];
        let d = random_query(&masks, 1, [4, 4, 4], 0.0, &mut rng(1)).unwrap();
        assert_eq!(d.placements[0].patch, PatchBox::new([0, 0, 0], [4, 4, 4]));
    }

    #[test]
    fn oversized_patch_is_clamped() {
        let masks = [AnnotationMask::new("a", shape(2, 8, 8))];
        let d = random_query(&masks, 1, [4, 4, 4], 0.0, &mut rng(1)).unwrap();
        assert_eq!(d.placements[0].patch.size, [2, 4, 4]);
    }

    #[test]
    fn same_seed_same_draw() {
        let masks = [AnnotationMask::new("a", shape(16, 16, 16)), AnnotationMask::new("b", shape(16, 16, 16))];
        let a = random_query(&masks, 6, [4, 4, 4], 0.0, &mut rng(9)).unwrap();
        let b = random_query(&masks, 6, [4, 4, 4], 0.0, &mut rng(9)).unwrap();
        assert_eq!(a, b);
        assert!(disjoint(&a));
    }

    #[test]
    fn impossible_request_errors() {
        let masks = [AnnotationMask::new("a", shape(4, 4, 4))];
        let err = random_query(&masks, 2, [4, 4, 4], 0.0, &mut rng(1)).unwrap_err();
        assert!(matches!(err, Error::InsufficientCandidates { requested: 2, available: 1 }));
    }

    #[test]
    fn prior_annotation_respected() {
        let s = shape(4, 4, 8);
        let masks = [AnnotationMask::new("a", s).union(PatchBox::new([0, 0, 0], [4, 4, 4])).unwrap()];
        let d = random_query(&masks, 1, [4, 4, 4], 0.0, &mut rng(3)).unwrap();
        assert_eq!(d.placements[0].patch.origin, [0, 0, 4]);
    }

    #[test]
    fn image_choice_is_uniform() {
        let masks = [AnnotationMask::new("a", shape(8, 8, 8)), AnnotationMask::new("b", shape(8, 8, 8))];
        let d = random_query(&masks, 10_000, [2, 2, 2], 1.0, &mut rng(4)).unwrap();
        let first = d.placements.iter().filter(|p| p.image == 0).count() as f64;
        // Binomial(10000, 0.5): sigma = 50.
        assert!((first - 5000.0).abs() <= 150.0, "{first}");
    }

    fn single_voxel_label() -> LabelVolume {
        let s = shape(8, 8, 8);
        let mut v = Volume::filled(s, 0u8);
        v.set(6, 1, 3, 1);
        LabelVolume::new(v, 2).unwrap()
    }

    #[test]
    fn full_oversampling_hits_single_voxel() {
        let label = single_voxel_label();
        let index = ForegroundIndex::build(std::slice::from_ref(&label));
        assert_eq!(index.voxels(1), &[(0, label.shape().index(6, 1, 3) as u32)]);
        assert_eq!(index.border_voxels(1).len(), 1);
        let masks = [AnnotationMask::new("a", label.shape())];
        for seed in 0..20 {
            let d = fg_aware_query(&masks, &index, 1, [3, 3, 3], 0.0, 1.0, &mut rng(seed)).unwrap();
            assert!(d.placements[0].patch.contains([6, 1, 3]));
            assert_eq!(d.fallback_draws, 0);
        }
    }

    #[test]
    fn zero_share_equals_random_query() {
        let label = single_voxel_label();
        let index = ForegroundIndex::build(std::slice::from_ref(&label));
        let masks = [AnnotationMask::new("a", label.shape())];
        let a = fg_aware_query(&masks, &index, 5, [2, 2, 2], 0.0, 0.0, &mut rng(8)).unwrap();
        let b = random_query(&masks, 5, [2, 2, 2], 0.0, &mut rng(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_foreground_falls_back() {
        let label = LabelVolume::new(Volume::filled(shape(8, 8, 8), 0u8), 2).unwrap();
        let index = ForegroundIndex::build(std::slice::from_ref(&label));
        assert!(index.is_empty());
        let masks = [AnnotationMask::new("a", label.shape())];
        let d = fg_aware_query(&masks, &index, 4, [2, 2, 2], 0.0, 1.0, &mut rng(2)).unwrap();
        assert_eq!(d.placements.len(), 4);
        assert_eq!(d.fallback_draws, 4);
    }

    #[test]
    fn oversampled_share_contains_foreground() {
        // One 3x3x3 cube of class 1 and a 2x2x2 cube of class 2 in 24^3.
        let s = shape(24, 24, 24);
        let mut v = Volume::filled(s, 0u8);
        for z in 4..7 {
            for y in 4..7 {
                for x in 4..7 {
                    v.set(z, y, x, 1);
                }
            }
        }
        for z in 15..17 {
            for y in 15..17 {
                for x in 15..17 {
                    v.set(z, y, x, 2);
                }
            }
        }
        let label = LabelVolume::new(v, 3).unwrap();
        let index = ForegroundIndex::build(std::slice::from_ref(&label));
        let masks = [AnnotationMask::new("a", s)];
        let d = fg_aware_query(&masks, &index, 10_000, [4, 4, 4], 1.0, 0.66, &mut rng(5)).unwrap();
        let with_fg = d
            .placements
            .iter()
            .filter(|p| p.patch.voxel_indices(s).any(|i| label.data()[i] != 0))
            .count();
        assert!(with_fg as f64 / 10_000.0 >= 0.66, "{with_fg}");
        let oversampled = d.placements.iter().filter(|p| p.mode != DrawMode::Random).count();
        // Binomial(10000, 0.66): sigma ~ 47.
        assert!((oversampled as f64 - 6600.0).abs() < 200.0);
    }
}
