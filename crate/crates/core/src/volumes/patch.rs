use serde::{Deserialize, Serialize};

use super::Shape;
use crate::error::{Error, Result};

/// Axis-aligned box given by its `(z, y, x)` origin and extent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatchBox {
    pub origin: [usize; 3],
    pub size: [usize; 3],
}

impl PatchBox {
    pub fn new(origin: [usize; 3], size: [usize; 3]) -> Self {
        Self { origin, size }
    }

    /// Exclusive upper corner.
    pub fn end(&self) -> [usize; 3] {
        [
            self.origin[0] + self.size[0],
            self.origin[1] + self.size[1],
            self.origin[2] + self.size[2],
        ]
    }

    pub fn voxel_count(&self) -> usize {
        self.size.iter().product()
    }

    pub fn fits_in(&self, shape: Shape) -> bool {
        let end = self.end();
        self.size.iter().all(|&s| s > 0) && end.iter().zip(shape.dims()).all(|(&e, d)| e <= d)
    }

    pub fn contains(&self, p: [usize; 3]) -> bool {
        (0..3).all(|k| p[k] >= self.origin[k] && p[k] < self.origin[k] + self.size[k])
    }

    pub fn intersection_voxels(&self, other: &PatchBox) -> usize {
        let (a_end, b_end) = (self.end(), other.end());
        (0..3)
            .map(|k| {
                let lo = self.origin[k].max(other.origin[k]);
                let hi = a_end[k].min(b_end[k]);
                hi.saturating_sub(lo)
            })
            .product()
    }

    pub fn intersects(&self, other: &PatchBox) -> bool {
        self.intersection_voxels(other) > 0
    }

    /// Flat voxel indices covered by the box, in storage order.
    pub fn voxel_indices(&self, shape: Shape) -> impl Iterator<Item = usize> + '_ {
        let [z0, y0, x0] = self.origin;
        let [z1, y1, x1] = self.end();
        (z0..z1).flat_map(move |z| {
            (y0..y1).flat_map(move |y| (x0..x1).map(move |x| shape.index(z, y, x)))
        })
    }

    fn check_in(&self, shape: Shape) -> Result<()> {
        if self.fits_in(shape) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                origin: self.origin,
                size: self.size,
                shape: shape.dims(),
            })
        }
    }
}

/// Per-axis `min(requested, shape)`.
pub fn clamp_patch(requested: [usize; 3], shape: Shape) -> [usize; 3] {
    let d = shape.dims();
    [
        requested[0].min(d[0]),
        requested[1].min(d[1]),
        requested[2].min(d[2]),
    ]
}

/// Shared voxels as a fraction of `a`'s volume.
pub fn overlap_fraction(a: &PatchBox, b: &PatchBox) -> f64 {
    let total = a.voxel_count();
    if total == 0 {
        return 0.0;
    }
    a.intersection_voxels(b) as f64 / total as f64
}

/// Which voxels of one image carry annotation: the union of its boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationMask {
    image_id: String,
    shape: Shape,
    boxes: Vec<PatchBox>,
    voxels: Vec<bool>,
    count: usize,
}

impl AnnotationMask {
    pub fn new(image_id: impl Into<String>, shape: Shape) -> Self {
        Self {
            image_id: image_id.into(),
            shape,
            boxes: Vec::new(),
            voxels: vec![false; shape.voxel_count()],
            count: 0,
        }
    }

    /// Fully annotated mask.
    pub fn full(image_id: impl Into<String>, shape: Shape) -> Self {
        let whole = PatchBox::new([0, 0, 0], shape.dims());
        Self {
            image_id: image_id.into(),
            shape,
            boxes: vec![whole],
            voxels: vec![true; shape.voxel_count()],
            count: shape.voxel_count(),
        }
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn boxes(&self) -> &[PatchBox] {
        &self.boxes
    }

    pub fn voxels(&self) -> &[bool] {
        &self.voxels
    }

    pub fn annotated_count(&self) -> usize {
        self.count
    }

    pub fn is_annotated(&self, index: usize) -> bool {
        self.voxels[index]
    }

    /// New mask with `bx` added; an exact duplicate box is not recorded twice.
    pub fn union(&self, bx: PatchBox) -> Result<Self> {
        let mut next = self.clone();
        next.insert(bx)?;
        Ok(next)
    }

    pub(crate) fn insert(&mut self, bx: PatchBox) -> Result<()> {
        bx.check_in(self.shape)?;
        if self.boxes.contains(&bx) {
            return Ok(());
        }
        for i in bx.voxel_indices(self.shape) {
            if !self.voxels[i] {
                self.voxels[i] = true;
                self.count += 1;
            }
        }
        self.boxes.push(bx);
        Ok(())
    }

    /// Largest overlap fraction of `candidate` with any recorded box.
    pub fn max_overlap(&self, candidate: &PatchBox) -> f64 {
        self.boxes
            .iter()
            .map(|b| overlap_fraction(candidate, b))
            .fold(0.0, f64::max)
    }
}

pub fn union_annotation(mask: &AnnotationMask, bx: PatchBox) -> Result<AnnotationMask> {
    mask.union(bx)
}
