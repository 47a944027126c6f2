use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::volumes::{LabelVolume, Shape, Volume};

fn default_shapes_per_class() -> [usize; 2] {
    [1, 3]
}

fn default_contrast() -> f32 {
    1.0
}

/// Parameters of a synthetic segmentation dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_images: usize,
    pub shape: [usize; 3],
    pub num_classes: u8,
    /// Inclusive range of blobs rendered per foreground class and image.
    #[serde(default = "default_shapes_per_class")]
    pub shapes_per_class: [usize; 2],
    pub noise_std: f32,
    pub fg_fraction_target: f64,
    /// Mean intensity of class `c` is `c * class_contrast`.
    #[serde(default = "default_contrast")]
    pub class_contrast: f32,
    /// Std of a per-blob shift added to its class mean, so instances of one
    /// class differ in brightness.
    #[serde(default)]
    pub instance_jitter: f32,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<Shape> {
        let shape = Shape::try_from(self.shape)
            .map_err(|_| Error::SpecInfeasible(format!("shape {:?}", self.shape)))?;
        if self.num_images == 0 {
            return Err(Error::SpecInfeasible("no images requested".into()));
        }
        if self.num_classes < 2 || self.num_classes == crate::volumes::UNLABELED {
            return Err(Error::SpecInfeasible(format!("{} classes", self.num_classes)));
        }
        let [lo, hi] = self.shapes_per_class;
        if lo == 0 || lo > hi {
            return Err(Error::SpecInfeasible(format!("shapes per class {lo}..={hi}")));
        }
        if !(self.fg_fraction_target > 0.0 && self.fg_fraction_target < 1.0) {
            return Err(Error::SpecInfeasible(format!(
                "foreground fraction {} outside (0,1)",
                self.fg_fraction_target
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::SpecInfeasible(format!("noise std {}", self.noise_std)));
        }
        if !(self.instance_jitter >= 0.0 && self.instance_jitter.is_finite()) {
            return Err(Error::SpecInfeasible(format!("instance jitter {}", self.instance_jitter)));
        }
        Ok(shape)
    }

    pub fn class_mean(&self, class: u8) -> f32 {
        class as f32 * self.class_contrast
    }
}

/// Solid primitive rasterized at voxel centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Blob {
    Ellipsoid { center: [f64; 3], radii: [f64; 3] },
    Cuboid { center: [f64; 3], half: [f64; 3] },
}

impl Blob {
    pub fn contains(&self, p: [usize; 3]) -> bool {
        match *self {
            Blob::Ellipsoid { center, radii } => {
                (0..3)
                    .map(|k| ((p[k] as f64 - center[k]) / radii[k]).powi(2))
                    .sum::<f64>()
                    <= 1.0
            }
            Blob::Cuboid { center, half } => (0..3).all(|k| (p[k] as f64 - center[k]).abs() <= half[k]),
        }
    }

    fn half_extent(&self) -> [f64; 3] {
        match *self {
            Blob::Ellipsoid { radii, .. } => radii,
            Blob::Cuboid { half, .. } => half,
        }
    }
}

fn for_each_voxel(shape: Shape, blob: &Blob, mut f: impl FnMut(usize)) {
    let dims = shape.dims();
    let (center, half) = match *blob {
        Blob::Ellipsoid { center, radii } => (center, radii),
        Blob::Cuboid { center, half } => (center, half),
    };
    let range = |k: usize| {
        let lo = (center[k] - half[k]).floor().max(0.0) as usize;
        let hi = ((center[k] + half[k]).ceil().max(0.0) as usize).min(dims[k] - 1);
        lo..=hi
    };
    for z in range(0) {
        for y in range(1) {
            for x in range(2) {
                if blob.contains([z, y, x]) {
                    f(shape.index(z, y, x));
                }
            }
        }
    }
}

/// Paints `class` into every voxel of `labels` covered by `blob`.
pub fn rasterize(labels: &mut Volume<u8>, blob: &Blob, class: u8) {
    let shape = labels.shape();
    let data = labels.data_mut();
    for_each_voxel(shape, blob, |i| data[i] = class);
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub ids: Vec<String>,
    pub images: Vec<Volume<f32>>,
    pub labels: Vec<LabelVolume>,
    pub num_classes: u8,
}

impl SyntheticDataset {
    /// Foreground share over all images.
    pub fn foreground_fraction(&self) -> f64 {
        let fg: usize = self.labels.iter().map(|l| l.foreground_count()).sum();
        let total: usize = self.labels.iter().map(|l| l.shape().voxel_count()).sum();
        fg as f64 / total as f64
    }
}

/// Renders every image from its own stream, so images do not depend on each other.
pub fn generate_dataset(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    let shape = spec.validate()?;
    let mut images = Vec::with_capacity(spec.num_images);
    let mut labels = Vec::with_capacity(spec.num_images);
    for i in 0..spec.num_images {
        let mut rng = stream(spec.seed, 0, Purpose::Dataset, i as u64);
        let (label, shift) = render_labels(spec, shape, &mut rng)?;
        let image = render_intensities(spec, &label, &shift, &mut rng)?;
        labels.push(LabelVolume::new(label, spec.num_classes)?);
        images.push(image);
    }
    Ok(SyntheticDataset {
        ids: (0..spec.num_images).map(|i| format!("img_{i:03}")).collect(),
        images,
        labels,
        num_classes: spec.num_classes,
    })
}

/// Labels plus the per-voxel instance shift of the blob painted last.
fn render_labels(spec: &SyntheticSpec, shape: Shape, rng: &mut impl Rng) -> Result<(Volume<u8>, Vec<f32>)> {
    let dims = shape.dims();
    let mut shift = vec![0f32; shape.voxel_count()];
    let jitter = Normal::new(0.0f32, spec.instance_jitter).map_err(|e| Error::SpecInfeasible(e.to_string()))?;
    let fg_classes = (spec.num_classes - 1) as f64;
    let per_class = spec.fg_fraction_target * shape.voxel_count() as f64 / fg_classes;
    let mut labels = Volume::filled(shape, 0u8);
    for class in 1..spec.num_classes {
        let count = rng.random_range(spec.shapes_per_class[0]..=spec.shapes_per_class[1]);
        let volume = per_class / count as f64;
        for _ in 0..count {
            // Anisotropy factors with unit product keep the target volume.
            let mut stretch = [0f64; 3].map(|_| rng.random_range(0.75f64..1.33));
            let norm = (stretch[0] * stretch[1] * stretch[2]).cbrt();
            stretch.iter_mut().for_each(|s| *s /= norm);
            let blob = if rng.random_bool(0.5) {
                let r = (3.0 * volume / (4.0 * std::f64::consts::PI)).cbrt();
                Blob::Ellipsoid {
                    center: [0.0; 3],
                    radii: stretch.map(|s| (r * s).max(0.5)),
                }
            } else {
                let side = volume.cbrt();
                Blob::Cuboid {
                    center: [0.0; 3],
                    half: stretch.map(|s| (0.5 * side * s).max(0.5)),
                }
            };
            let half = blob.half_extent();
            let mut center = [0f64; 3];
            for k in 0..3 {
                let lo = half[k];
                let hi = dims[k] as f64 - 1.0 - half[k];
                if lo > hi {
                    return Err(Error::SpecInfeasible(format!(
                        "blob of half-extent {:.1} does not fit axis of length {}",
                        half[k], dims[k]
                    )));
                }
                center[k] = if lo == hi { lo } else { rng.random_range(lo..hi) };
            }
            let blob = match blob {
                Blob::Ellipsoid { radii, .. } => Blob::Ellipsoid { center, radii },
                Blob::Cuboid { half, .. } => Blob::Cuboid { center, half },
            };
            rasterize(&mut labels, &blob, class);
            if spec.instance_jitter > 0.0 {
                let offset = jitter.sample(rng);
                for_each_voxel(shape, &blob, |i| shift[i] = offset);
            }
        }
    }
    Ok((labels, shift))
}

fn render_intensities(
    spec: &SyntheticSpec,
    labels: &Volume<u8>,
    shift: &[f32],
    rng: &mut impl Rng,
) -> Result<Volume<f32>> {
    let mean = |(&c, &s): (&u8, &f32)| if c == 0 { 0.0 } else { spec.class_mean(c) + s };
    let data = if spec.noise_std > 0.0 {
        let noise = Normal::new(0.0f32, spec.noise_std)
            .map_err(|e| Error::SpecInfeasible(e.to_string()))?;
        labels
            .data()
            .iter()
            .zip(shift)
            .map(|v| mean(v) + noise.sample(rng))
            .collect()
    } else {
        labels.data().iter().zip(shift).map(mean).collect()
    };
    Volume::new(labels.shape(), data)
}
