//! Volumes, patch boxes and annotation masks.
//!
//! Axis order is `(z, y, x)` everywhere; data is stored row-major with `x`
//! varying fastest.

mod container;
mod patch;

pub use container::{read_volume, write_volume, ImageData, VolumeFile, MAGIC};
pub use patch::{clamp_patch, overlap_fraction, union_annotation, AnnotationMask, PatchBox};

use crate::error::{Error, Result};

/// Label value marking voxels without annotation in partial views.
pub const UNLABELED: u8 = 255;

/// Extent of a volume as `(depth, height, width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(into = "[usize; 3]", try_from = "[usize; 3]")]
pub struct Shape {
    pub depth: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub fn new(depth: usize, height: usize, width: usize) -> Result<Self> {
        if depth == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidVolume(format!(
                "shape ({depth},{height},{width}) has a zero extent"
            )));
        }
        Ok(Self {
            depth,
            height,
            width,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.depth, self.height, self.width]
    }

    pub fn voxel_count(&self) -> usize {
        self.depth * self.height * self.width
    }

    #[inline]
    pub fn index(&self, z: usize, y: usize, x: usize) -> usize {
        (z * self.height + y) * self.width + x
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let x = index % self.width;
        let y = (index / self.width) % self.height;
        let z = index / (self.width * self.height);
        [z, y, x]
    }
}

impl From<Shape> for [usize; 3] {
    fn from(s: Shape) -> Self {
        s.dims()
    }
}

impl TryFrom<[usize; 3]> for Shape {
    type Error = Error;

    fn try_from(d: [usize; 3]) -> Result<Self> {
        Shape::new(d[0], d[1], d[2])
    }
}

/// Dense scalar field over a [`Shape`].
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: Copy> Volume<T> {
    pub fn new(shape: Shape, data: Vec<T>) -> Result<Self> {
        if data.len() != shape.voxel_count() {
            return Err(Error::InvalidVolume(format!(
                "data length {} does not match shape {:?}",
                data.len(),
                shape.dims()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn filled(shape: Shape, value: T) -> Self {
        Self {
            shape,
            data: vec![value; shape.voxel_count()],
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, z: usize, y: usize, x: usize) -> T {
        self.data[self.shape.index(z, y, x)]
    }

    #[inline]
    pub fn set(&mut self, z: usize, y: usize, x: usize, value: T) {
        let i = self.shape.index(z, y, x);
        self.data[i] = value;
    }
}

impl Volume<f32> {
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Integer class map. Class 0 is background.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    volume: Volume<u8>,
    num_classes: u8,
}

impl LabelVolume {
    /// Values must be `< num_classes` or [`UNLABELED`].
    pub fn new(volume: Volume<u8>, num_classes: u8) -> Result<Self> {
        if !(2..UNLABELED).contains(&num_classes) {
            return Err(Error::InvalidVolume(format!(
                "class count {num_classes} outside 2..255"
            )));
        }
        if let Some(v) = volume
            .data()
            .iter()
            .find(|&&v| v >= num_classes && v != UNLABELED)
        {
            return Err(Error::InvalidVolume(format!(
                "label {v} not below class count {num_classes}"
            )));
        }
        Ok(Self {
            volume,
            num_classes,
        })
    }

    pub fn shape(&self) -> Shape {
        self.volume.shape()
    }

    pub fn num_classes(&self) -> u8 {
        self.num_classes
    }

    pub fn data(&self) -> &[u8] {
        self.volume.data()
    }

    pub fn volume(&self) -> &Volume<u8> {
        &self.volume
    }

    pub fn get(&self, z: usize, y: usize, x: usize) -> u8 {
        self.volume.get(z, y, x)
    }

    pub fn has_unlabeled(&self) -> bool {
        self.data().contains(&UNLABELED)
    }

    pub fn foreground_count(&self) -> usize {
        self.data()
            .iter()
            .filter(|&&v| v != 0 && v != UNLABELED)
            .count()
    }

    /// Partial view: voxels outside `mask` become [`UNLABELED`].
    pub fn restricted_to(&self, mask: &AnnotationMask) -> Result<Self> {
        if mask.shape() != self.shape() {
            return Err(Error::ShapeMismatch(mask.shape().dims(), self.shape().dims()));
        }
        let data = self
            .data()
            .iter()
            .zip(mask.voxels())
            .map(|(&v, &m)| if m { v } else { UNLABELED })
            .collect();
        Self::new(Volume::new(self.shape(), data)?, self.num_classes)
    }
}

/// Softmax outputs of `members` models, laid out `[member][class][voxel]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleProbabilityStack {
    members: usize,
    classes: usize,
    shape: Shape,
    data: Vec<f32>,
}

impl EnsembleProbabilityStack {
    pub const SUM_TOLERANCE: f32 = 1e-4;

    pub fn new(members: usize, classes: usize, shape: Shape, data: Vec<f32>) -> Result<Self> {
        let stack = Self::new_unchecked(members, classes, shape, data)?;
        stack.validate()?;
        Ok(stack)
    }

    /// Checks only the layout, not the simplex constraint.
    pub(crate) fn new_unchecked(
        members: usize,
        classes: usize,
        shape: Shape,
        data: Vec<f32>,
    ) -> Result<Self> {
        if classes < 1 {
            return Err(Error::InvalidVolume("stack needs at least one class".into()));
        }
        let expected = members * classes * shape.voxel_count();
        if data.len() != expected {
            return Err(Error::InvalidVolume(format!(
                "stack payload has {} values, expected {expected}",
                data.len()
            )));
        }
        Ok(Self {
            members,
            classes,
            shape,
            data,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.data.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteData);
        }
        let n = self.shape.voxel_count();
        for m in 0..self.members {
            for v in 0..n {
                let mut sum = 0.0f32;
                for c in 0..self.classes {
                    let p = self.prob(m, c, v);
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::InvalidVolume(format!(
                            "probability {p} outside [0,1] (member {m}, class {c}, voxel {v})"
                        )));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
                    return Err(Error::InvalidVolume(format!(
                        "probabilities sum to {sum} (member {m}, voxel {v})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn members(&self) -> usize {
        self.members
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn prob(&self, member: usize, class: usize, voxel: usize) -> f32 {
        let n = self.shape.voxel_count();
        self.data[(member * self.classes + class) * n + voxel]
    }

    /// Stack with members reordered by `order` (a permutation of member ids).
    pub fn permute_members(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.members];
        if order.len() != self.members
            || order.iter().any(|&m| m >= self.members || std::mem::replace(&mut seen[m], true))
        {
            return Err(Error::InvalidVolume("not a member permutation".into()));
        }
        let block = self.classes * self.shape.voxel_count();
        let mut data = Vec::with_capacity(self.data.len());
        for &m in order {
            data.extend_from_slice(&self.data[m * block..(m + 1) * block]);
        }
        Ok(Self { data, ..self.clone() })
    }
}
