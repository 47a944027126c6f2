//! `NAVOL001` container: 8-byte magic, little-endian `u32` header length,
//! UTF-8 JSON header, then the raw little-endian payload.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EnsembleProbabilityStack, LabelVolume, Shape, Volume};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"NAVOL001";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Dtype {
    F32,
    U8,
    U16,
}

impl Dtype {
    fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::U8 => 1,
            Dtype::U16 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Image,
    Label,
    Prob,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    dtype: Dtype,
    shape: [usize; 3],
    kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    classes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    members: Option<usize>,
}

/// Scalar image in any supported element type.
#[derive(Debug, Clone, PartialEq)]
pub enum ImageData {
    F32(Volume<f32>),
    U8(Volume<u8>),
    U16(Volume<u16>),
}

impl ImageData {
    pub fn shape(&self) -> Shape {
        match self {
            ImageData::F32(v) => v.shape(),
            ImageData::U8(v) => v.shape(),
            ImageData::U16(v) => v.shape(),
        }
    }

    /// Intensities as `f32` regardless of the stored type.
    pub fn to_f32(&self) -> Volume<f32> {
        match self {
            ImageData::F32(v) => v.clone(),
            ImageData::U8(v) => {
                Volume::new(v.shape(), v.data().iter().map(|&x| x as f32).collect()).unwrap()
            }
            ImageData::U16(v) => {
                Volume::new(v.shape(), v.data().iter().map(|&x| x as f32).collect()).unwrap()
            }
        }
    }
}

/// Everything a container file can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum VolumeFile {
    Image(ImageData),
    Label(LabelVolume),
    Prob(EnsembleProbabilityStack),
}

impl From<Volume<f32>> for VolumeFile {
    fn from(v: Volume<f32>) -> Self {
        VolumeFile::Image(ImageData::F32(v))
    }
}

impl From<LabelVolume> for VolumeFile {
    fn from(v: LabelVolume) -> Self {
        VolumeFile::Label(v)
    }
}

impl From<EnsembleProbabilityStack> for VolumeFile {
    fn from(v: EnsembleProbabilityStack) -> Self {
        VolumeFile::Prob(v)
    }
}

impl VolumeFile {
    pub fn into_image(self) -> Result<Volume<f32>> {
        match self {
            VolumeFile::Image(img) => Ok(img.to_f32()),
            _ => Err(Error::HeaderMismatch("expected an image volume".into())),
        }
    }

    pub fn into_label(self) -> Result<LabelVolume> {
        match self {
            VolumeFile::Label(l) => Ok(l),
            _ => Err(Error::HeaderMismatch("expected a label volume".into())),
        }
    }

    pub fn into_stack(self) -> Result<EnsembleProbabilityStack> {
        match self {
            VolumeFile::Prob(p) => Ok(p),
            _ => Err(Error::HeaderMismatch("expected a probability stack".into())),
        }
    }

    /// Serialized container bytes.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let (header, payload) = match self {
            VolumeFile::Image(ImageData::F32(v)) => {
                if !v.is_finite() {
                    return Err(Error::NonFiniteData);
                }
                (header(Dtype::F32, v.shape(), Kind::Image), f32_bytes(v.data()))
            }
            VolumeFile::Image(ImageData::U8(v)) => {
                (header(Dtype::U8, v.shape(), Kind::Image), v.data().to_vec())
            }
            VolumeFile::Image(ImageData::U16(v)) => (
                header(Dtype::U16, v.shape(), Kind::Image),
                v.data().iter().flat_map(|x| x.to_le_bytes()).collect(),
            ),
            VolumeFile::Label(l) => {
                let mut h = header(Dtype::U8, l.shape(), Kind::Label);
                h.classes = Some(l.num_classes() as usize);
                (h, l.data().to_vec())
            }
            VolumeFile::Prob(p) => {
                if p.data().iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFiniteData);
                }
                let mut h = header(Dtype::F32, p.shape(), Kind::Prob);
                h.classes = Some(p.classes());
                h.members = Some(p.members());
                (h, f32_bytes(p.data()))
            }
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(12 + json.len() + payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..8] != MAGIC {
            return Err(Error::BadMagic);
        }
        let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let json = bytes
            .get(12..12 + n)
            .ok_or_else(|| Error::HeaderMismatch(format!("header length {n} exceeds file")))?;
        let header: Header = serde_json::from_slice(json)?;
        let payload = &bytes[12 + n..];
        let shape = Shape::try_from(header.shape)?;

        let planes = match header.kind {
            Kind::Prob => {
                let (Some(c), Some(e)) = (header.classes, header.members) else {
                    return Err(Error::HeaderMismatch(
                        "probability stack needs classes and members".into(),
                    ));
                };
                c * e
            }
            _ => 1,
        };
        let expected = planes * shape.voxel_count() * header.dtype.width();
        if payload.len() != expected {
            return Err(Error::HeaderMismatch(format!(
                "payload is {} bytes, header declares {expected}",
                payload.len()
            )));
        }

        match (header.kind, header.dtype) {
            (Kind::Image, Dtype::F32) => {
                let v = Volume::new(shape, read_f32(payload))?;
                if !v.is_finite() {
                    return Err(Error::NonFiniteData);
                }
                Ok(VolumeFile::Image(ImageData::F32(v)))
            }
            (Kind::Image, Dtype::U8) => Ok(VolumeFile::Image(ImageData::U8(Volume::new(
                shape,
                payload.to_vec(),
            )?))),
            (Kind::Image, Dtype::U16) => {
                let data = payload
                    .chunks_exact(2)
                    .map(|c| u16::from_le_bytes([c[0], c[1]]))
                    .collect();
                Ok(VolumeFile::Image(ImageData::U16(Volume::new(shape, data)?)))
            }
            (Kind::Label, Dtype::U8) => {
                let classes = header
                    .classes
                    .ok_or_else(|| Error::HeaderMismatch("label volume needs classes".into()))?;
                let classes = u8::try_from(classes)
                    .map_err(|_| Error::HeaderMismatch(format!("{classes} classes")))?;
                Ok(VolumeFile::Label(LabelVolume::new(
                    Volume::new(shape, payload.to_vec())?,
                    classes,
                )?))
            }
            (Kind::Prob, Dtype::F32) => {
                let data = read_f32(payload);
                if data.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFiniteData);
                }
                Ok(VolumeFile::Prob(EnsembleProbabilityStack::new(
                    header.members.unwrap(),
                    header.classes.unwrap(),
                    shape,
                    data,
                )?))
            }
            (kind, dtype) => Err(Error::HeaderMismatch(format!(
                "kind {kind:?} cannot be stored as {dtype:?}"
            ))),
        }
    }
}

fn header(dtype: Dtype, shape: Shape, kind: Kind) -> Header {
    Header {
        dtype,
        shape: shape.dims(),
        kind,
        classes: None,
        members: None,
    }
}

fn f32_bytes(data: &[f32]) -> Vec<u8> {
    data.iter().flat_map(|x| x.to_le_bytes()).collect()
}

fn read_f32(payload: &[u8]) -> Vec<f32> {
    payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<VolumeFile> {
    VolumeFile::from_bytes(&fs::read(path)?)
}

/// Encodes before touching the filesystem, so invalid volumes never leave a partial file.
pub fn write_volume(volume: &VolumeFile, path: impl AsRef<Path>) -> Result<()> {
    let bytes = volume.to_bytes()?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shape(d: usize, h: usize, w: usize) -> Shape {
        Shape::new(d, h, w).unwrap()
    }

    #[test]
    fn zeros_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.navol");
        let v: VolumeFile = Volume::filled(shape(2, 2, 2), 0.0f32).into();
        write_volume(&v, &p).unwrap();
        assert_eq!(read_volume(&p).unwrap(), v);
    }

    #[test]
    fn deterministic_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let v: VolumeFile = Volume::new(shape(1, 2, 3), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.5])
            .unwrap()
            .into();
        write_volume(&v, dir.path().join("a")).unwrap();
        write_volume(&v, dir.path().join("b")).unwrap();
        assert_eq!(
            fs::read(dir.path().join("a")).unwrap(),
            fs::read(dir.path().join("b")).unwrap()
        );
    }

    #[test]
    fn single_u8_voxel_layout() {
        let v = VolumeFile::Image(ImageData::U8(Volume::new(shape(1, 1, 1), vec![7]).unwrap()));
        let bytes = v.to_bytes().unwrap();
        let header = br#"{"dtype":"u8","shape":[1,1,1],"kind":"image"}"#;
        let mut expected = b"NAVOL001".to_vec();
        expected.extend_from_slice(&(header.len() as u32).to_le_bytes());
        expected.extend_from_slice(header);
        expected.push(0x07);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn nan_rejected_before_write() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nan.navol");
        let v: VolumeFile = Volume::new(shape(1, 1, 2), vec![0.0, f32::NAN]).unwrap().into();
        assert!(matches!(write_volume(&v, &p), Err(Error::NonFiniteData)));
        assert!(!p.exists());
    }

    #[test]
    fn short_payload_is_header_mismatch() {
        let header = br#"{"dtype":"f32","shape":[4,4,4],"kind":"image"}"#;
        let mut bytes = b"NAVOL001".to_vec();
        bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
        bytes.extend_from_slice(header);
        bytes.extend(std::iter::repeat_n(0u8, 255 * 4));
        assert!(matches!(
            VolumeFile::from_bytes(&bytes),
            Err(Error::HeaderMismatch(_))
        ));
    }

    #[test]
    fn nan_payload_rejected_on_read() {
        let header = br#"{"dtype":"f32","shape":[1,1,1],"kind":"image"}"#;
        let mut bytes = b"NAVOL001".to_vec();
        bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
        bytes.extend_from_slice(header);
        bytes.extend_from_slice(&f32::INFINITY.to_le_bytes());
        assert!(matches!(VolumeFile::from_bytes(&bytes), Err(Error::NonFiniteData)));
    }

    #[test]
    fn random_bytes_bad_magic() {
        use rand::{RngCore, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut bytes = vec![0u8; 64];
        rng.fill_bytes(&mut bytes);
        assert!(matches!(VolumeFile::from_bytes(&bytes), Err(Error::BadMagic)));
        assert!(matches!(VolumeFile::from_bytes(b"NAV"), Err(Error::BadMagic)));
    }

    #[test]
    fn label_and_stack_round_trip() {
        let s = shape(1, 1, 2);
        let label: VolumeFile = LabelVolume::new(Volume::new(s, vec![0, 2]).unwrap(), 3)
            .unwrap()
            .into();
        assert_eq!(VolumeFile::from_bytes(&label.to_bytes().unwrap()).unwrap(), label);
        let stack: VolumeFile =
            EnsembleProbabilityStack::new(2, 2, s, vec![1.0, 0.25, 0.0, 0.75, 0.5, 0.5, 0.5, 0.5])
                .unwrap()
                .into();
        assert_eq!(VolumeFile::from_bytes(&stack.to_bytes().unwrap()).unwrap(), stack);
    }

    proptest! {
        #[test]
        fn f32_round_trip_bit_exact(
            dims in (1usize..5, 1usize..5, 1usize..5),
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let s = shape(dims.0, dims.1, dims.2);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<f32> = (0..s.voxel_count())
                .map(|_| f32::from_bits(rng.random::<u32>() & 0x7f7f_ffff))
                .collect();
            let v: VolumeFile = Volume::new(s, data).unwrap().into();
            let back = VolumeFile::from_bytes(&v.to_bytes().unwrap()).unwrap();
            prop_assert_eq!(back.to_bytes().unwrap(), v.to_bytes().unwrap());
        }

        #[test]
        fn u16_round_trip(values in proptest::collection::vec(any::<u16>(), 6)) {
            let v = VolumeFile::Image(ImageData::U16(Volume::new(shape(1, 2, 3), values).unwrap()));
            prop_assert_eq!(VolumeFile::from_bytes(&v.to_bytes().unwrap()).unwrap(), v);
        }
    }
}
