//! Patch-level mean scores over every valid placement, in O(1) per placement
//! through a 3D summed-area table.

use crate::error::{Error, Result};
use crate::volumes::{PatchBox, Shape, Volume};

/// Inclusive prefix sums padded with a zero plane on each low face.
#[derive(Debug, Clone)]
pub struct SummedAreaTable3D {
    shape: Shape,
    sums: Vec<f64>,
}

impl SummedAreaTable3D {
    pub fn shape(&self) -> Shape {
        self.shape
    }

    #[inline]
    fn at(&self, z: usize, y: usize, x: usize) -> f64 {
        let (h1, w1) = (self.shape.height + 1, self.shape.width + 1);
        self.sums[(z * h1 + y) * w1 + x]
    }

    /// Entry `sat[z][y][x]` of the `(D+1, H+1, W+1)` table.
    pub fn get(&self, z: usize, y: usize, x: usize) -> f64 {
        self.at(z, y, x)
    }

    pub fn total(&self) -> f64 {
        let [d, h, w] = self.shape.dims();
        self.at(d, h, w)
    }

    pub fn box_sum(&self, b: &PatchBox) -> f64 {
        let [z0, y0, x0] = b.origin;
        let [z1, y1, x1] = b.end();
        self.at(z1, y1, x1) - self.at(z0, y1, x1) - self.at(z1, y0, x1) - self.at(z1, y1, x0)
            + self.at(z0, y0, x1)
            + self.at(z0, y1, x0)
            + self.at(z1, y0, x0)
            - self.at(z0, y0, x0)
    }
}

pub fn build_sat(map: &Volume<f32>) -> SummedAreaTable3D {
    let shape = map.shape();
    let [d, h, w] = shape.dims();
    let (h1, w1) = (h + 1, w + 1);
    let mut sums = vec![0f64; (d + 1) * h1 * w1];
    let idx = |z: usize, y: usize, x: usize| (z * h1 + y) * w1 + x;
    for z in 1..=d {
        for y in 1..=h {
            let mut row = 0f64;
            for x in 1..=w {
                row += map.get(z - 1, y - 1, x - 1) as f64;
                // Row sum + the column-plane prefix above and in front.
                sums[idx(z, y, x)] =
                    row + sums[idx(z, y - 1, x)] + sums[idx(z - 1, y, x)] - sums[idx(z - 1, y - 1, x)];
            }
        }
    }
    SummedAreaTable3D { shape, sums }
}

/// Mean score of every stride-1 placement of `patch_size` fully inside the image.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreField {
    pub image_id: String,
    pub patch_size: [usize; 3],
    /// Number of valid origins per axis.
    pub dims: [usize; 3],
    pub values: Vec<f32>,
}

impl ScoreField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn origin(&self, index: usize) -> [usize; 3] {
        let [_, oh, ow] = self.dims;
        [index / (oh * ow), (index / ow) % oh, index % ow]
    }

    pub fn value_at(&self, origin: [usize; 3]) -> f32 {
        let [_, oh, ow] = self.dims;
        self.values[(origin[0] * oh + origin[1]) * ow + origin[2]]
    }

    pub fn patch(&self, index: usize) -> PatchBox {
        PatchBox::new(self.origin(index), self.patch_size)
    }

    pub fn with_image_id(mut self, id: impl Into<String>) -> Self {
        self.image_id = id.into();
        self
    }
}

pub fn window_mean(sat: &SummedAreaTable3D, patch_size: [usize; 3]) -> Result<ScoreField> {
    let shape = sat.shape().dims();
    if patch_size.contains(&0) || (0..3).any(|k| patch_size[k] > shape[k]) {
        return Err(Error::PatchLargerThanImage {
            patch: patch_size,
            shape,
        });
    }
    let dims = [
        shape[0] - patch_size[0] + 1,
        shape[1] - patch_size[1] + 1,
        shape[2] - patch_size[2] + 1,
    ];
    let volume = patch_size.iter().product::<usize>() as f64;
    let mut values = Vec::with_capacity(dims.iter().product());
    for z in 0..dims[0] {
        for y in 0..dims[1] {
            for x in 0..dims[2] {
                let b = PatchBox::new([z, y, x], patch_size);
                values.push((sat.box_sum(&b) / volume) as f32);
            }
        }
    }
    Ok(ScoreField {
        image_id: String::new(),
        patch_size,
        dims,
        values,
    })
}

/// Convenience: SAT build followed by [`window_mean`].
pub fn aggregate_mean(map: &Volume<f32>, patch_size: [usize; 3]) -> Result<ScoreField> {
    window_mean(&build_sat(map), patch_size)
}
