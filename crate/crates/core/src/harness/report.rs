use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::qnn::{Encoding, QnnKind};
use crate::stats::{bonferroni, mann_whitney_u, wilcoxon_signed_rank, StatTestResult};

use super::config::{readout_label, Family, ModelConfig};
use super::train::{median, ExperimentResult};

/// Significance level applied after Bonferroni correction.
pub const ALPHA: f64 = 0.05;
/// Fixed order of the groups in `table1.csv`.
pub const GROUPS: [&str; 5] = ["classical", "Ang-RY", "Ang-Arb", "Amp-Gen", "QCNN"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub group: String,
    pub metric: String,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub axis: String,
    pub group_a: String,
    pub group_b: String,
    pub test: String,
    pub raw_p: f64,
    pub corrected_p: f64,
    #[serde(rename = "significant_at_0.05")]
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxplotRow {
    pub group: String,
    pub aggregate_score: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SummaryTables {
    pub table1: Vec<Table1Row>,
    pub comparisons: Vec<ComparisonRow>,
    pub boxplot: Vec<BoxplotRow>,
}

impl SummaryTables {
    pub fn write_csv(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        write_rows(&dir.join("table1.csv"), &self.table1)?;
        write_rows(&dir.join("comparisons.csv"), &self.comparisons)?;
        write_rows(&dir.join("boxplot_data.csv"), &self.boxplot)?;
        Ok(())
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

/// A comparison axis: which configurations take part, the level each sits
/// at, and the test used between levels.
struct Axis {
    name: &'static str,
    /// Level of a config on this axis, `None` if it does not take part.
    level: fn(&ModelConfig) -> Option<String>,
    /// Paired on configs equal in every other field; otherwise unpaired.
    paired: bool,
}

fn hybrid_arch(c: &ModelConfig) -> Option<&crate::qnn::QnnArch> {
    c.qnn.as_ref()
}

fn axes() -> Vec<Axis> {
    vec![
        Axis {
            name: "preproc",
            level: |c| Some(c.preproc.label().into()),
            paired: true,
        },
        Axis {
            name: "latent_dim",
            level: |c| Some(c.latent_dim.to_string()),
            paired: true,
        },
        Axis {
            name: "activation",
            level: |c| {
                hybrid_arch(c)
                    .filter(|a| a.kind.encoding() == Encoding::Angle)
                    .map(|_| if c.tanh_pi { "tanh_pi" } else { "linear" }.into())
            },
            paired: true,
        },
        Axis {
            name: "entanglement",
            level: |c| {
                hybrid_arch(c).filter(|a| a.kind != QnnKind::Qcnn).map(|a| {
                    if a.entangle {
                        "entangled"
                    } else {
                        "unentangled"
                    }
                    .into()
                })
            },
            paired: true,
        },
        Axis {
            name: "observable:angle",
            level: |c| {
                hybrid_arch(c)
                    .filter(|a| a.kind.encoding() == Encoding::Angle)
                    .map(|a| readout_label(a.readout).into())
            },
            paired: true,
        },
        Axis {
            name: "observable:amplitude",
            level: |c| {
                hybrid_arch(c)
                    .filter(|a| a.kind == QnnKind::AmpGen)
                    .map(|a| readout_label(a.readout).into())
            },
            paired: true,
        },
        Axis {
            name: "family",
            level: |c| {
                Some(match c.family {
                    Family::Hybrid => "hybrid".into(),
                    Family::Classical => "classical".into(),
                })
            },
            paired: false,
        },
        Axis {
            name: "qnn",
            level: |c| hybrid_arch(c).map(|a| a.kind.label().into()),
            paired: false,
        },
    ]
}

/// Config with the axis field blanked, so configs differing only on that
/// axis compare equal.
fn rest_key(c: &ModelConfig, axis: &str) -> String {
    let mut c = c.clone();
    match axis {
        "preproc" => c.preproc = crate::classical::Preproc::Conv0,
        "latent_dim" => c.latent_dim = 0,
        "activation" => c.tanh_pi = false,
        "entanglement" => {
            if let Some(a) = &mut c.qnn {
                a.entangle = false;
            }
        }
        _ => {
            if let Some(a) = &mut c.qnn {
                a.readout = crate::qnn::Readout::Local;
            }
        }
    }
    serde_json::to_string(&c).expect("config serializes")
}

/// Paired test when every config at one level has exactly one partner at
/// the other; otherwise an unpaired test on the two score lists.
fn compare(
    axis: &Axis,
    a: &[(&ModelConfig, f64)],
    b: &[(&ModelConfig, f64)],
) -> Result<(String, f64)> {
    if axis.paired && a.len() == b.len() {
        let lookup: BTreeMap<String, f64> = b
            .iter()
            .map(|(c, s)| (rest_key(c, axis.name), *s))
            .collect();
        let pairs: Vec<(f64, f64)> = a
            .iter()
            .filter_map(|(c, s)| lookup.get(&rest_key(c, axis.name)).map(|t| (*s, *t)))
            .collect();
        if pairs.len() == a.len() {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            return match wilcoxon_signed_rank(&x, &y) {
                Ok(StatTestResult {
                    p_value, method, ..
                }) => Ok((method.name().into(), p_value)),
                Err(Error::ZeroDifferences) => Ok(("wilcoxon_exact".into(), 1.0)),
                Err(e) => Err(e),
            };
        }
    }
    let x: Vec<f64> = a.iter().map(|p| p.1).collect();
    let y: Vec<f64> = b.iter().map(|p| p.1).collect();
    let r = mann_whitney_u(&x, &y)?;
    Ok((r.method.name().into(), r.p_value))
}

/// `table1.csv` statistics per group and metric, per-axis comparisons of
/// aggregate ROC-AUC with Bonferroni correction inside each axis, and the
/// score lists behind both.
pub fn aggregate_tables(results: &[ExperimentResult]) -> Result<SummaryTables> {
    if results.is_empty() {
        return Err(Error::Invalid("no results to summarize".into()));
    }
    let mut tables = SummaryTables::default();
    for group in GROUPS {
        let members: Vec<&ExperimentResult> = results
            .iter()
            .filter(|r| r.config.group() == group)
            .collect();
        if members.is_empty() {
            continue;
        }
        let done: Vec<_> = members.iter().filter_map(|r| r.aggregate).collect();
        if done.is_empty() {
            return Err(Error::Invalid(format!(
                "group {group} has no completed runs"
            )));
        }
        for metric in Metric::ALL {
            let v: Vec<f64> = done.iter().map(|a| a.get(metric)).collect();
            tables.table1.push(Table1Row {
                group: group.into(),
                metric: metric.name().into(),
                median: median(&v),
                min: v.iter().copied().fold(f64::INFINITY, f64::min),
                max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
        }
        for a in &done {
            tables.boxplot.push(BoxplotRow {
                group: group.into(),
                aggregate_score: a.roc_auc,
            });
        }
    }

    let completed: Vec<(&ModelConfig, f64)> = results
        .iter()
        .filter_map(|r| r.aggregate.map(|a| (&r.config, a.roc_auc)))
        .collect();
    for axis in axes() {
        let mut levels: BTreeMap<String, Vec<(&ModelConfig, f64)>> = BTreeMap::new();
        for &(c, s) in &completed {
            if let Some(level) = (axis.level)(c) {
                levels.entry(level).or_default().push((c, s));
            }
        }
        for (level, members) in &levels {
            for (_, s) in members {
                tables.boxplot.push(BoxplotRow {
                    group: format!("{}:{level}", axis.name),
                    aggregate_score: *s,
                });
            }
        }
        let names: Vec<&String> = levels.keys().collect();
        let mut rows = Vec::new();
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                let (test, p) = compare(&axis, &levels[names[i]], &levels[names[j]])?;
                rows.push((names[i].clone(), names[j].clone(), test, p));
            }
        }
        let raw: Vec<f64> = rows.iter().map(|r| r.3).collect();
        let corrected = bonferroni(&raw)?;
        for ((a, b, test, p), q) in rows.into_iter().zip(corrected) {
            tables.comparisons.push(ComparisonRow {
                axis: axis.name.into(),
                group_a: a,
                group_b: b,
                test,
                raw_p: p,
                corrected_p: q,
                significant: q < ALPHA,
            });
        }
    }
    Ok(tables)
}
