use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::run::{ExperimentResult, RESULTS_FILE};
use crate::error::{Error, Result};
use crate::metrics::{
    aubc, fit_fg_eff, kendall_tau, mean_std, ppm, BudgetCurve, FgEffInput, PpmCell, PpmResult, PPM_ALPHA,
};

/// Every `results.json` below the given directories, in path order.
pub fn load_results(dirs: &[PathBuf]) -> Result<Vec<ExperimentResult>> {
    let mut files = BTreeSet::new();
    for dir in dirs {
        for entry in WalkDir::new(dir) {
            let entry = entry.map_err(|e| Error::Io(e.into()))?;
            if entry.file_type().is_file() && entry.file_name() == RESULTS_FILE {
                files.insert(entry.into_path());
            }
        }
    }
    files
        .iter()
        .map(|p| Ok(serde_json::from_slice(&std::fs::read(p)?)?))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    fn of(values: &[f64]) -> Self {
        let (mean, std) = mean_std(values);
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub dataset: String,
    pub regime: String,
    pub method: String,
    pub seeds: Vec<u64>,
    pub aubc: Stat,
    pub final_dice: Stat,
    /// Per-seed decay rates; absent without a full-annotation reference.
    pub fg_eff: Option<Stat>,
    /// One decay rate fit on all seeds' post-start points.
    pub fg_eff_pooled: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KendallEntry {
    pub dataset: String,
    pub regime: String,
    pub columns: [String; 2],
    pub tau: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub summaries: Vec<MethodSummary>,
    pub ppm: PpmResult,
    pub kendall: Vec<KendallEntry>,
}

/// Pairs of summary columns (`aubc`, `final_dice`, `fg_eff`) whose method
/// rankings should be compared.
#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    pub kendall: Vec<(String, String)>,
}

type GroupKey = (String, String, String);

fn group(results: &[ExperimentResult]) -> Result<BTreeMap<GroupKey, Vec<&ExperimentResult>>> {
    let mut groups: BTreeMap<GroupKey, Vec<&ExperimentResult>> = BTreeMap::new();
    for r in results {
        groups
            .entry((r.dataset.clone(), r.regime.clone(), r.method.clone()))
            .or_default()
            .push(r);
    }
    for ((d, g, m), runs) in &mut groups {
        runs.sort_by_key(|r| r.seed);
        if runs.windows(2).any(|w| w[0].seed == w[1].seed) {
            return Err(Error::RaggedResults(format!("{m} on {d}/{g}: duplicate seed")));
        }
        if runs.len() < 2 {
            return Err(Error::RaggedResults(format!("{m} on {d}/{g}: need at least 2 seeds")));
        }
        let loops = runs[0].loops.len();
        if runs.iter().any(|r| r.loops.len() != loops) || loops < 2 {
            return Err(Error::RaggedResults(format!("{m} on {d}/{g}: unequal or too few loops")));
        }
    }
    Ok(groups)
}

fn curve(r: &ExperimentResult) -> Result<BudgetCurve> {
    let points = r
        .loops
        .iter()
        .map(|l| (l.cumulative_patches as f64, l.mean_dice))
        .collect();
    BudgetCurve::new(r.method.clone(), r.seed, points)
}

fn fg_eff_input(runs: &[&ExperimentResult]) -> Option<FgEffInput> {
    let full: Vec<f64> = runs.iter().map(|r| r.full_dice).collect::<Option<_>>()?;
    let n = runs.len() as f64;
    let points = runs
        .iter()
        .flat_map(|r| r.loops[1..].iter().map(|l| (l.fg_fraction_annotated, l.mean_dice)))
        .collect();
    Some(FgEffInput {
        points,
        t0: runs.iter().map(|r| r.loops[0].fg_fraction_annotated).sum::<f64>() / n,
        y0: runs.iter().map(|r| r.loops[0].mean_dice).sum::<f64>() / n,
        y_full: full.iter().sum::<f64>() / n,
    })
}

fn summarize(key: &GroupKey, runs: &[&ExperimentResult]) -> Result<MethodSummary> {
    let curves = runs.iter().map(|r| curve(r)).collect::<Result<Vec<_>>>()?;
    let aubcs = curves.iter().map(aubc).collect::<Result<Vec<_>>>()?;
    let finals: Vec<f64> = curves.iter().map(|c| c.final_value()).collect();
    let per_seed: Option<Vec<f64>> = runs
        .iter()
        .map(|r| fg_eff_input(&[r]).and_then(|input| fit_fg_eff(&input).ok()))
        .collect();
    let pooled = fg_eff_input(runs).and_then(|input| fit_fg_eff(&input).ok());
    Ok(MethodSummary {
        dataset: key.0.clone(),
        regime: key.1.clone(),
        method: key.2.clone(),
        seeds: runs.iter().map(|r| r.seed).collect(),
        aubc: Stat::of(&aubcs),
        final_dice: Stat::of(&finals),
        fg_eff: per_seed.map(|v| Stat::of(&v)),
        fg_eff_pooled: pooled,
    })
}

/// Cells are `(dataset, regime, loop)` for every post-start loop; every
/// method must be present in every cell.
fn ppm_of(groups: &BTreeMap<GroupKey, Vec<&ExperimentResult>>) -> Result<PpmResult> {
    let methods: Vec<String> = groups.keys().map(|k| k.2.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let settings: BTreeSet<(String, String)> = groups.keys().map(|k| (k.0.clone(), k.1.clone())).collect();
    let mut cells = Vec::new();
    for (dataset, regime) in &settings {
        let runs: Vec<&Vec<&ExperimentResult>> = methods
            .iter()
            .map(|m| {
                groups
                    .get(&(dataset.clone(), regime.clone(), m.clone()))
                    .ok_or_else(|| Error::RaggedResults(format!("{m} missing on {dataset}/{regime}")))
            })
            .collect::<Result<_>>()?;
        let loops = runs[0][0].loops.len();
        if runs.iter().any(|r| r[0].loops.len() != loops) {
            return Err(Error::RaggedResults(format!("loop counts differ on {dataset}/{regime}")));
        }
        for l in 1..loops {
            cells.push(PpmCell {
                label: format!("{dataset}/{regime}/loop_{l:03}"),
                samples: runs
                    .iter()
                    .map(|r| r.iter().map(|x| x.loops[l].mean_dice).collect())
                    .collect(),
            });
        }
    }
    ppm(&methods, &cells, PPM_ALPHA)
}

fn column(s: &MethodSummary, name: &str) -> Result<f64> {
    match name {
        "aubc" => Ok(s.aubc.mean),
        "final_dice" => Ok(s.final_dice.mean),
        "fg_eff" => s
            .fg_eff_pooled
            .ok_or_else(|| Error::InvalidConfig(format!("no FG-Eff for {}", s.method))),
        other => Err(Error::InvalidConfig(format!("unknown ranking column {other:?}"))),
    }
}

fn ranking(rows: &[&MethodSummary], col: &str) -> Result<Vec<String>> {
    let mut scored = rows
        .iter()
        .map(|s| Ok((column(s, col)?, s.method.clone())))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    Ok(scored.into_iter().map(|(_, m)| m).collect())
}

pub fn evaluate(results: &[ExperimentResult], options: &EvalOptions) -> Result<Report> {
    if results.is_empty() {
        return Err(Error::RaggedResults("no runs found".into()));
    }
    let groups = group(results)?;
    let summaries = groups
        .iter()
        .map(|(k, runs)| summarize(k, runs))
        .collect::<Result<Vec<_>>>()?;
    let ppm = ppm_of(&groups)?;

    let mut kendall = Vec::new();
    let settings: BTreeSet<(&str, &str)> = summaries.iter().map(|s| (&*s.dataset, &*s.regime)).collect();
    for (a, b) in &options.kendall {
        for &(dataset, regime) in &settings {
            let rows: Vec<&MethodSummary> = summaries
                .iter()
                .filter(|s| s.dataset == dataset && s.regime == regime)
                .collect();
            if rows.len() < 2 {
                continue;
            }
            let k = kendall_tau(&ranking(&rows, a)?, &ranking(&rows, b)?)?;
            kendall.push(KendallEntry {
                dataset: dataset.to_string(),
                regime: regime.to_string(),
                columns: [a.clone(), b.clone()],
                tau: k.tau,
                p_value: k.p_value,
            });
        }
    }
    Ok(Report { summaries, ppm, kendall })
}

/// One row per loop: method, dataset, regime, seed, loop, budget_patches,
/// fg_voxels_annotated, mean_dice.
pub fn loops_csv(results: &[ExperimentResult]) -> Result<String> {
    let mut rows: Vec<&ExperimentResult> = results.iter().collect();
    rows.sort_by(|a, b| {
        (&a.method, &a.dataset, &a.regime, a.seed).cmp(&(&b.method, &b.dataset, &b.regime, b.seed))
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "method",
        "dataset",
        "regime",
        "seed",
        "loop",
        "budget_patches",
        "fg_voxels_annotated",
        "mean_dice",
    ])
    .map_err(csv_err)?;
    for r in rows {
        for l in &r.loops {
            w.write_record([
                r.method.clone(),
                r.dataset.clone(),
                r.regime.clone(),
                r.seed.to_string(),
                l.loop_index.to_string(),
                l.cumulative_patches.to_string(),
                l.fg_voxels_annotated.to_string(),
                l.mean_dice.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn pm(s: &Stat) -> String {
    format!("{:.4} ± {:.4}", s.mean, s.std)
}

pub fn render_markdown(report: &Report) -> String {
    let mut out = String::from("# Active learning report\n\n");
    out.push_str("| dataset | regime | method | seeds | AUBC | Final Dice | FG-Eff | FG-Eff (pooled) |\n");
    out.push_str("|---|---|---|---|---|---|---|---|\n");
    for s in &report.summaries {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} |",
            s.dataset,
            s.regime,
            s.method,
            s.seeds.len(),
            pm(&s.aubc),
            pm(&s.final_dice),
            s.fg_eff.as_ref().map_or("n/a".into(), pm),
            s.fg_eff_pooled.map_or("n/a".into(), |g| format!("{g:.4}")),
        );
    }

    let p = &report.ppm;
    let _ = write!(
        out,
        "\n## Pairwise penalty matrix\n\nShare of {} cells where the row method is significantly better (Welch, alpha = {PPM_ALPHA}).\n\n|   |",
        p.cells
    );
    for m in &p.methods {
        let _ = write!(out, " {m} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(p.methods.len()));
    out.push('\n');
    for (i, m) in p.methods.iter().enumerate() {
        let _ = write!(out, "| {m} |");
        for v in &p.matrix[i] {
            let _ = write!(out, " {v:.3} |");
        }
        out.push('\n');
    }

    out.push_str("\n## Wins / losses\n\n| method | opponent | wins | losses |\n|---|---|---|---|\n");
    for i in 0..p.methods.len() {
        for j in 0..p.methods.len() {
            if i != j {
                let (w, l) = p.win_lose(i, j);
                let _ = writeln!(out, "| {} | {} | {w} | {l} |", p.methods[i], p.methods[j]);
            }
        }
    }

    if !report.kendall.is_empty() {
        out.push_str("\n## Kendall's tau\n\n| dataset | regime | columns | tau | p |\n|---|---|---|---|---|\n");
        for k in &report.kendall {
            let _ = writeln!(
                out,
                "| {} | {} | {} vs {} | {:.4} | {:.4} |",
                k.dataset, k.regime, k.columns[0], k.columns[1], k.tau, k.p_value
            );
        }
    }
    out
}

/// Writes `report.json`, `report.md` and `loops.csv` into `dir`.
pub fn write_report(dir: &Path, report: &Report, results: &[ExperimentResult]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), serde_json::to_vec_pretty(report)?)?;
    std::fs::write(dir.join("report.md"), render_markdown(report))?;
    std::fs::write(dir.join("loops.csv"), loops_csv(results)?)?;
    Ok(())
}
