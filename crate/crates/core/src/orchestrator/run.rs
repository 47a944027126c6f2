use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::dataset::{Dataset, Split};
use crate::aggregate::aggregate_mean;
use crate::error::{Error, Result};
use crate::metrics::dice_per_image;
use crate::query::{
    fg_aware_query, global_select, select_image_patches, starting_budget, Drawn, ForegroundIndex,
    Query, QueryPatch,
};
use crate::rng::{stream, Purpose};
use crate::simlab::{predict_labels, KnnEnsembleLearner, Learner, SegmentationModel, TrainedModel, TrainingImage};
use crate::uncertainty::uncertainty;
use crate::volumes::{clamp_patch, AnnotationMask, LabelVolume};

pub const RESULTS_FILE: &str = "results.json";

/// State after one loop's query has been annotated and evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopRecord {
    #[serde(rename = "loop")]
    pub loop_index: usize,
    pub manifest: String,
    pub patches_queried: usize,
    pub cumulative_patches: usize,
    pub annotated_voxels: usize,
    /// Ground-truth foreground voxels inside the annotated region.
    pub fg_voxels_annotated: usize,
    /// `fg_voxels_annotated` over all foreground voxels of the pool.
    pub fg_fraction_annotated: f64,
    pub dice: BTreeMap<String, f64>,
    pub mean_dice: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub method: String,
    pub dataset: String,
    pub regime: String,
    pub seed: u64,
    pub split: Split,
    pub loops: Vec<LoopRecord>,
    /// Mean test Dice when trained on the fully annotated pool.
    #[serde(default)]
    pub full_dice: Option<f64>,
}

/// `<output_dir>/<method>/seed_<seed>`.
pub fn run_dir(cfg: &ExperimentConfig, seed: u64) -> PathBuf {
    cfg.output_dir.join(cfg.method.name()).join(format!("seed_{seed}"))
}

pub fn run_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentResult> {
    cfg.validate()?;
    let data = Dataset::from_source(&cfg.dataset)?;
    run_experiment_on(cfg, &data, seed)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Completed manifests are immutable: an identical rewrite is a no-op, a
/// different one is refused.
fn persist_manifest(path: &Path, query: &Query) -> Result<()> {
    let bytes = serde_json::to_vec_pretty(query)?;
    match fs::read(path) {
        Ok(existing) if existing == bytes => Ok(()),
        Ok(_) => Err(Error::ManifestConflict(path.to_path_buf())),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => write_atomic(path, &bytes),
        Err(e) => Err(e.into()),
    }
}

struct Pool<'a> {
    data: &'a Dataset,
    /// Dataset indices of trainpool images.
    members: Vec<usize>,
    masks: Vec<AnnotationMask>,
    fg_total: usize,
}

impl<'a> Pool<'a> {
    fn labels(&self) -> Vec<LabelVolume> {
        self.members.iter().map(|&i| self.data.labels[i].clone()).collect()
    }

    fn apply(&mut self, patches: &[QueryPatch]) -> Result<()> {
        for p in patches {
            let slot = self
                .masks
                .iter()
                .position(|m| m.image_id() == p.image)
                .ok_or_else(|| Error::InvalidConfig(format!("query names unknown image {:?}", p.image)))?;
            self.masks[slot] = self.masks[slot].union(p.patch())?;
        }
        Ok(())
    }

    fn annotated_voxels(&self) -> usize {
        self.masks.iter().map(|m| m.annotated_count()).sum()
    }

    fn fg_annotated(&self) -> usize {
        self.members
            .iter()
            .zip(&self.masks)
            .map(|(&i, m)| {
                self.data.labels[i]
                    .data()
                    .iter()
                    .zip(m.voxels())
                    .filter(|(&c, &a)| a && c != 0)
                    .count()
            })
            .sum()
    }

    fn train(&self, learner: &KnnEnsembleLearner, seed: u64, loop_index: u64) -> Result<TrainedModel> {
        let views = self
            .members
            .iter()
            .zip(&self.masks)
            .map(|(&i, m)| self.data.labels[i].restricted_to(m))
            .collect::<Result<Vec<_>>>()?;
        let batch: Vec<_> = self
            .members
            .iter()
            .zip(&self.masks)
            .zip(&views)
            .map(|((&i, mask), labels)| TrainingImage {
                image: &self.data.images[i],
                mask,
                labels,
            })
            .collect();
        learner.fit(&batch, seed, loop_index)
    }
}

fn test_dice(model: &TrainedModel, data: &Dataset) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for id in &data.split.test {
        let i = data.index_of(id)?;
        let pred = predict_labels(&model.predict_ensemble(&data.images[i])?)?;
        out.insert(id.clone(), dice_per_image(&pred, &data.labels[i])?);
    }
    Ok(out)
}

fn mean(values: &BTreeMap<String, f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.values().sum::<f64>() / values.len() as f64
}

fn uncertainty_query(
    cfg: &ExperimentConfig,
    pool: &Pool,
    model: &TrainedModel,
    n: usize,
    seed: u64,
    loop_index: u64,
) -> Result<Vec<QueryPatch>> {
    let kind = cfg.method.uncertainty().expect("uncertainty method");
    let mut per_image = Vec::new();
    for (&i, mask) in pool.members.iter().zip(&pool.masks) {
        if mask.annotated_count() == mask.shape().voxel_count() {
            continue;
        }
        let image = &pool.data.images[i];
        let map = uncertainty(&model.predict_ensemble(image)?, kind)?;
        let size = clamp_patch(cfg.patch_size, image.shape());
        let field = aggregate_mean(&map.values, size)?.with_image_id(mask.image_id());
        per_image.push(select_image_patches(&field, mask, cfg.overlap, n)?);
    }
    let mut rng = stream(seed, loop_index, Purpose::Noise, 0);
    let picked = global_select(per_image, n, &cfg.noise(), &mut rng)?;
    Ok(picked.into_iter().map(QueryPatch::from).collect())
}

/// Runs every loop for one seed on an already loaded dataset, writing
/// manifests and `results.json` under [`run_dir`] as it goes.
pub fn run_experiment_on(cfg: &ExperimentConfig, data: &Dataset, seed: u64) -> Result<ExperimentResult> {
    cfg.validate()?;
    let budget = cfg.label_regime.resolve()?;
    let dir = run_dir(cfg, seed);
    fs::create_dir_all(&dir)?;

    let members = data
        .split
        .trainpool
        .iter()
        .map(|id| data.index_of(id))
        .collect::<Result<Vec<_>>>()?;
    let masks = members
        .iter()
        .map(|&i| AnnotationMask::new(data.ids[i].clone(), data.images[i].shape()))
        .collect();
    let fg_total = members.iter().map(|&i| data.labels[i].foreground_count()).sum();
    let mut pool = Pool { data, members, masks, fg_total };
    let pool_labels = pool.labels();
    let fg_index = ForegroundIndex::build(&pool_labels);
    let learner = KnnEnsembleLearner::new(cfg.learner.clone());

    let mut result = ExperimentResult {
        config: cfg.clone(),
        method: cfg.method.name().to_string(),
        dataset: cfg.dataset_label(),
        regime: cfg.label_regime.label(),
        seed,
        split: data.split.clone(),
        loops: Vec::new(),
        full_dice: None,
    };

    let mut model: Option<TrainedModel> = None;
    let mut cumulative = 0;
    for loop_index in 0..=budget.num_loops {
        let l = loop_index as u64;
        let (patches, fallback_draws) = if loop_index == 0 {
            let mut rng = stream(seed, 0, Purpose::StartingBudget, 0);
            let drawn = starting_budget(
                &pool.masks,
                &pool_labels,
                &fg_index,
                budget.starting_budget,
                cfg.patch_size,
                cfg.overlap,
                &mut rng,
            )?;
            (drawn.query_patches(&pool.masks), drawn.fallback_draws)
        } else if let Some(share) = cfg.method.foreground_share() {
            let mut rng = stream(seed, l, Purpose::Query, 0);
            let drawn: Drawn = fg_aware_query(
                &pool.masks,
                &fg_index,
                budget.query_size,
                cfg.patch_size,
                cfg.overlap,
                share,
                &mut rng,
            )?;
            (drawn.query_patches(&pool.masks), drawn.fallback_draws)
        } else {
            let current = model.as_ref().expect("model trained in previous loop");
            (uncertainty_query(cfg, &pool, current, budget.query_size, seed, l)?, 0)
        };

        let manifest = format!("loop_{loop_index:03}.json");
        let query = Query {
            loop_index,
            method: cfg.method,
            seed,
            patches,
            fallback_draws,
        };
        persist_manifest(&dir.join(&manifest), &query)?;
        pool.apply(&query.patches)?;
        cumulative += query.patches.len();

        let trained = pool.train(&learner, seed, l)?;
        let dice = test_dice(&trained, data)?;
        let fg = pool.fg_annotated();
        result.loops.push(LoopRecord {
            loop_index,
            manifest,
            patches_queried: query.patches.len(),
            cumulative_patches: cumulative,
            annotated_voxels: pool.annotated_voxels(),
            fg_voxels_annotated: fg,
            fg_fraction_annotated: if pool.fg_total > 0 { fg as f64 / pool.fg_total as f64 } else { 0.0 },
            mean_dice: mean(&dice),
            dice,
        });
        model = Some(trained);
        write_atomic(&dir.join(RESULTS_FILE), &serde_json::to_vec_pretty(&result)?)?;
    }

    if cfg.full_reference {
        let full = Pool {
            data,
            members: pool.members.clone(),
            masks: pool
                .masks
                .iter()
                .map(|m| AnnotationMask::full(m.image_id(), m.shape()))
                .collect(),
            fg_total: pool.fg_total,
        };
        let reference = full.train(&learner, seed, budget.num_loops as u64 + 1)?;
        result.full_dice = Some(mean(&test_dice(&reference, data)?));
        write_atomic(&dir.join(RESULTS_FILE), &serde_json::to_vec_pretty(&result)?)?;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::Method;

    fn query(score: Option<f64>) -> Query {
        Query {
            loop_index: 0,
            method: Method::Random,
            seed: 1,
            patches: vec![QueryPatch {
                image: "a".into(),
                origin: [0, 0, 0],
                size: [2, 2, 2],
                score,
            }],
            fallback_draws: 0,
        }
    }

    #[test]
    fn manifests_are_write_once() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("loop_000.json");
        persist_manifest(&path, &query(None)).unwrap();
        persist_manifest(&path, &query(None)).unwrap();
        assert!(matches!(
            persist_manifest(&path, &query(Some(0.5))),
            Err(Error::ManifestConflict(_))
        ));
        let back: Query = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
        assert_eq!(back, query(None));
        assert!(!path.with_extension("json.tmp").exists());
    }
}
