use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{load_beats_csv, load_npz, make_folds, synth_blobs, Dataset};
use crate::error::{Error, Result};

use super::config::{expand_grid, GridSpec};
use super::report::aggregate_tables;
use super::train::{run_experiment, Aggregate, ExperimentResult, TrainSettings};

pub const RESULTS_FILE: &str = "results.jsonl";
pub const TIMINGS_FILE: &str = "timings.jsonl";
pub const GRID_FILE: &str = "grid.json";

/// Where samples come from. Paths are relative to the data directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    BeatsCsv {
        path: PathBuf,
    },
    Npz {
        path: PathBuf,
        images_key: String,
        labels_key: String,
    },
    SynthBlobs {
        n: usize,
        dim: usize,
        separation: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl DatasetSpec {
    pub fn load(&self, data_dir: &Path) -> Result<Dataset> {
        match self {
            DatasetSpec::BeatsCsv { path } => load_beats_csv(data_dir.join(path)),
            DatasetSpec::Npz {
                path,
                images_key,
                labels_key,
            } => load_npz(data_dir.join(path), images_key, labels_key),
            DatasetSpec::SynthBlobs {
                n,
                dim,
                separation,
                seed,
            } => synth_blobs(*n, *dim, *separation, *seed),
        }
    }
}

fn default_epochs() -> usize {
    50
}
fn default_batch() -> usize {
    64
}
fn default_folds() -> usize {
    5
}

/// Contents of a run configuration file (TOML).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub aggregate: Aggregate,
    #[serde(default)]
    pub parallel_folds: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn settings(&self) -> TrainSettings {
        TrainSettings {
            epochs: self.epochs,
            batch_size: self.batch_size,
            aggregate: self.aggregate,
            parallel_folds: self.parallel_folds,
        }
    }
}

#[derive(Serialize)]
struct Timing<'a> {
    config_hash: &'a str,
    fold: usize,
    wall_time_s: f64,
}

#[derive(Serialize)]
struct GridEntry {
    config_hash: String,
    label: String,
}

#[derive(Serialize)]
struct GridMeta<'a> {
    n_configs: usize,
    groups: BTreeMap<&'static str, usize>,
    grid: &'a GridSpec,
    fold_k: usize,
    seed: u64,
    settings: TrainSettings,
    comparison_metric: &'static str,
    comparison_policy: &'static str,
    configs: Vec<GridEntry>,
}

const COMPARISON_POLICY: &str = "Wilcoxon signed-rank on configurations matched in every other field; \
Mann-Whitney U when levels cannot be matched one-to-one or for family and QNN-architecture contrasts; \
Bonferroni correction within each axis";

/// Reads stored results keyed by the hash of config and settings. Unparseable
/// lines are ignored so a torn final write does not block a resume.
pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<ExperimentResult>> {
    let path = path.as_ref();
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if let Ok(r) = serde_json::from_str::<ExperimentResult>(&line) {
            out.push(r);
        }
    }
    Ok(out)
}

fn write_results(path: &Path, results: &[&ExperimentResult]) -> Result<()> {
    let tmp = path.with_extension("jsonl.tmp");
    let mut f = File::create(&tmp)?;
    for r in results {
        writeln!(f, "{}", serde_json::to_string(r)?)?;
    }
    f.sync_all()?;
    fs::rename(tmp, path)?;
    Ok(())
}

/// Outcome of [`run_grid`].
#[derive(Debug)]
pub struct RunSummary {
    pub results: Vec<ExperimentResult>,
    pub skipped: usize,
    pub trained: usize,
}

/// Expands the grid, trains every configuration not already stored in
/// `out`, then rewrites `results.jsonl` in grid order and the summary
/// tables. `jobs` bounds the worker pool (0 = all cores).
pub fn run_grid(
    config: &RunConfig,
    dataset: &Dataset,
    out: &Path,
    jobs: usize,
) -> Result<RunSummary> {
    fs::create_dir_all(out)?;
    let settings = config.settings();
    let grid = expand_grid(&config.grid, config.seed)?;
    let plan = make_folds(dataset, config.folds, config.seed)?;

    let results_path = out.join(RESULTS_FILE);
    let mut done: BTreeMap<(String, String), ExperimentResult> = BTreeMap::new();
    for r in load_results(&results_path)? {
        let key = (r.config_hash.clone(), serde_json::to_string(&r.settings)?);
        done.insert(key, r);
    }
    let settings_key = serde_json::to_string(&settings)?;
    let todo: Vec<_> = grid
        .iter()
        .filter(|c| !done.contains_key(&(c.hash(), settings_key.clone())))
        .collect();
    let skipped = grid.len() - todo.len();

    let meta = GridMeta {
        n_configs: grid.len(),
        groups: super::report::GROUPS
            .iter()
            .map(|g| (*g, grid.iter().filter(|c| c.group() == *g).count()))
            .collect(),
        grid: &config.grid,
        fold_k: config.folds,
        seed: config.seed,
        settings: settings.clone(),
        comparison_metric: "roc_auc",
        comparison_policy: COMPARISON_POLICY,
        configs: grid
            .iter()
            .map(|c| GridEntry {
                config_hash: c.hash(),
                label: c.label(),
            })
            .collect(),
    };
    fs::write(out.join(GRID_FILE), serde_json::to_string_pretty(&meta)?)?;

    let append = Mutex::new(
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&results_path)?,
    );
    let timings = Mutex::new(
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(out.join(TIMINGS_FILE))?,
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Invalid(e.to_string()))?;
    let fresh: Vec<ExperimentResult> = pool.install(|| {
        todo.par_iter()
            .map(|c| -> Result<ExperimentResult> {
                let r = run_experiment(c, dataset, &plan, &settings)?;
                // progress is durable before the final ordered rewrite
                writeln!(
                    append.lock().expect("results lock"),
                    "{}",
                    serde_json::to_string(&r)?
                )?;
                let mut t = timings.lock().expect("timings lock");
                for f in &r.folds {
                    let row = Timing {
                        config_hash: &r.config_hash,
                        fold: f.fold,
                        wall_time_s: f.wall_time,
                    };
                    writeln!(t, "{}", serde_json::to_string(&row)?)?;
                }
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    drop(append);
    let trained = fresh.len();
    for r in fresh {
        done.insert((r.config_hash.clone(), settings_key.clone()), r);
    }

    let ordered: Vec<&ExperimentResult> = grid
        .iter()
        .map(|c| &done[&(c.hash(), settings_key.clone())])
        .collect();
    write_results(&results_path, &ordered)?;
    let results: Vec<ExperimentResult> = ordered.into_iter().cloned().collect();
    if results.iter().any(ExperimentResult::completed) {
        aggregate_tables(&results)?.write_csv(out)?;
    }
    Ok(RunSummary {
        results,
        skipped,
        trained,
    })
}

/// Regenerates the summary tables from `results.jsonl` in `out`.
pub fn report(out: &Path) -> Result<super::report::SummaryTables> {
    let results = load_results(out.join(RESULTS_FILE))?;
    let tables = aggregate_tables(&results)?;
    tables.write_csv(out)?;
    Ok(tables)
}
