use serde::{Deserialize, Serialize};

use crate::volumes::Volume;

/// Intensity, 3x3x3 mean-smoothed intensity, and normalized `(z, y, x)`.
pub const FEATURE_COUNT: usize = 5;

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureFlags {
    #[serde(default = "yes")]
    pub intensity: bool,
    #[serde(default = "yes")]
    pub smoothed: bool,
    /// Off by default: blob positions are not shared across images.
    #[serde(default)]
    pub coords: bool,
}

impl Default for FeatureFlags {
    fn default() -> Self {
        Self {
            intensity: true,
            smoothed: true,
            coords: false,
        }
    }
}

impl FeatureFlags {
    pub fn mask(&self) -> [bool; FEATURE_COUNT] {
        [self.intensity, self.smoothed, self.coords, self.coords, self.coords]
    }
}

/// Row-major `[voxel][feature]` matrix of raw (unnormalized) features.
///
/// The smoothed channel averages the in-bounds part of the 3x3x3
/// neighbourhood. Coordinates are scaled to `[0, 1]` per axis.
pub fn voxel_features(image: &Volume<f32>) -> Vec<f32> {
    let shape = image.shape();
    let [d, h, w] = shape.dims();
    let smoothed = box3_mean(image);
    let scale = |n: usize| if n > 1 { 1.0 / (n - 1) as f32 } else { 0.0 };
    let (sz, sy, sx) = (scale(d), scale(h), scale(w));
    let mut out = Vec::with_capacity(shape.voxel_count() * FEATURE_COUNT);
    for z in 0..d {
        for y in 0..h {
            for x in 0..w {
                let i = shape.index(z, y, x);
                out.extend_from_slice(&[
                    image.data()[i],
                    smoothed[i],
                    z as f32 * sz,
                    y as f32 * sy,
                    x as f32 * sx,
                ]);
            }
        }
    }
    out
}

/// Separable 3-tap mean along each axis, truncated at the border.
fn box3_mean(image: &Volume<f32>) -> Vec<f32> {
    let shape = image.shape();
    let dims = shape.dims();
    let strides = [dims[1] * dims[2], dims[2], 1];
    let mut cur: Vec<f32> = image.data().to_vec();
    for axis in 0..3 {
        let n = dims[axis];
        let stride = strides[axis];
        let mut next = vec![0f32; cur.len()];
        for (i, out) in next.iter_mut().enumerate() {
            let pos = (i / stride) % n;
            let mut sum = cur[i];
            let mut count = 1.0;
            if pos > 0 {
                sum += cur[i - stride];
                count += 1.0;
            }
            if pos + 1 < n {
                sum += cur[i + stride];
                count += 1.0;
            }
            *out = sum / count;
        }
        cur = next;
    }
    cur
}
