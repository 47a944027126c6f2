use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::simlab::{generate_dataset, SyntheticDataset};
use crate::volumes::{read_volume, write_volume, LabelVolume, Volume, VolumeFile};

use super::config::DatasetSource;

/// Share of images held out for testing; rounding favours the pool.
pub const TEST_SHARE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub trainpool: Vec<String>,
    pub test: Vec<String>,
}

/// Seeded shuffle, then the first quarter (rounded down) becomes the test set.
/// Both halves are returned in id order.
pub fn split_dataset(ids: &[String], seed: u64) -> Result<Split> {
    if ids.len() < 4 {
        return Err(Error::TooFewImages(ids.len()));
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut stream(seed, 0, Purpose::Split, 0));
    let n_test = (ids.len() as f64 * TEST_SHARE).floor() as usize;
    let mut test = shuffled[..n_test].to_vec();
    let mut trainpool = shuffled[n_test..].to_vec();
    test.sort();
    trainpool.sort();
    Ok(Split { trainpool, test })
}

/// `dataset.json` at the root of a dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub ids: Vec<String>,
    pub classes: u8,
    pub split: Split,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub images: Vec<Volume<f32>>,
    pub labels: Vec<LabelVolume>,
    pub num_classes: u8,
    pub split: Split,
}

impl Dataset {
    pub fn from_synthetic(data: SyntheticDataset, seed: u64) -> Result<Self> {
        let split = split_dataset(&data.ids, seed)?;
        Ok(Self {
            ids: data.ids,
            images: data.images,
            labels: data.labels,
            num_classes: data.num_classes,
            split,
        })
    }

    pub fn from_source(source: &DatasetSource) -> Result<Self> {
        match source {
            DatasetSource::Path(p) => load_dataset(p),
            DatasetSource::Synthetic(spec) => Self::from_synthetic(generate_dataset(spec)?, spec.seed),
        }
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.ids
            .iter()
            .position(|i| i == id)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown image id {id:?}")))
    }

    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            ids: self.ids.clone(),
            classes: self.num_classes,
            split: self.split.clone(),
        }
    }
}

pub fn write_dataset(dir: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir.join("images"))?;
    fs::create_dir_all(dir.join("labels"))?;
    for (i, id) in data.ids.iter().enumerate() {
        write_volume(&VolumeFile::from(data.images[i].clone()), dir.join("images").join(format!("{id}.navol")))?;
        write_volume(&VolumeFile::from(data.labels[i].clone()), dir.join("labels").join(format!("{id}.navol")))?;
    }
    fs::write(dir.join("dataset.json"), serde_json::to_vec_pretty(&data.manifest())?)?;
    Ok(())
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let manifest: DatasetManifest = serde_json::from_slice(&fs::read(dir.join("dataset.json"))?)?;
    let mut images = Vec::with_capacity(manifest.ids.len());
    let mut labels = Vec::with_capacity(manifest.ids.len());
    for id in &manifest.ids {
        let image = read_volume(dir.join("images").join(format!("{id}.navol")))?.into_image()?;
        let label = read_volume(dir.join("labels").join(format!("{id}.navol")))?.into_label()?;
        if image.shape() != label.shape() {
            return Err(Error::ShapeMismatch(image.shape().dims(), label.shape().dims()));
        }
        if label.num_classes() != manifest.classes {
            return Err(Error::HeaderMismatch(format!(
                "{id}: {} classes, dataset declares {}",
                label.num_classes(),
                manifest.classes
            )));
        }
        images.push(image);
        labels.push(label);
    }
    for id in manifest.split.trainpool.iter().chain(&manifest.split.test) {
        if !manifest.ids.contains(id) {
            return Err(Error::InvalidConfig(format!("split names unknown image {id:?}")));
        }
    }
    Ok(Dataset {
        ids: manifest.ids,
        images,
        labels,
        num_classes: manifest.classes,
        split: manifest.split,
    })
}
