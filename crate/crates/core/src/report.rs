//! Aggregation of run reports across repetitions and methods.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{self, LearnerConfig, RunReport};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Reports that share a configuration, summarized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub label: String,
    pub reps: usize,
    pub a_avg: MeanStd,
    pub a_last: MeanStd,
    pub train_seconds: MeanStd,
    pub parameters: u64,
}

/// Short name for a configuration: the method plus every field that
/// differs from the defaults.
pub fn config_label(config: &LearnerConfig) -> String {
    let defaults = LearnerConfig {
        method: config.method,
        ..LearnerConfig::default()
    };
    let (Ok(serde_json::Value::Object(a)), Ok(serde_json::Value::Object(b))) =
        (serde_json::to_value(config), serde_json::to_value(&defaults))
    else {
        return config.method.to_string();
    };
    let diffs: Vec<String> = a
        .iter()
        .filter(|(k, v)| b.get(*k) != Some(*v))
        .map(|(k, v)| format!("{k}={}", v.to_string().trim_matches('"')))
        .collect();
    if diffs.is_empty() {
        config.method.to_string()
    } else {
        format!("{}({})", config.method, diffs.join(","))
    }
}

/// Groups reports by configuration (in first-seen order) and summarizes
/// each group.
pub fn summarize(reports: &[RunReport]) -> Vec<Summary> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<&RunReport>> = BTreeMap::new();
    for r in reports {
        let label = config_label(&r.config);
        if !groups.contains_key(&label) {
            order.push(label.clone());
        }
        groups.entry(label).or_default().push(r);
    }
    order
        .into_iter()
        .map(|label| {
            let group = &groups[&label];
            let pick = |f: fn(&RunReport) -> f64| group.iter().map(|r| f(r)).collect::<Vec<_>>();
            Summary {
                reps: group.len(),
                a_avg: MeanStd::of(&pick(|r| r.a_avg)),
                a_last: MeanStd::of(&pick(|r| r.a_last)),
                train_seconds: MeanStd::of(&pick(|r| r.train_seconds.iter().sum())),
                parameters: group[0].parameters.total,
                label,
            }
        })
        .collect()
}

/// Plain-text table sorted by mean final accuracy, best first. With two or
/// more rows a column gives each row's relative error reduction over the
/// worst row.
pub fn comparison_table(summaries: &[Summary]) -> String {
    let mut rows: Vec<&Summary> = summaries.iter().collect();
    rows.sort_by(|a, b| b.a_last.mean.total_cmp(&a.a_last.mean));
    let worst = rows.last().map(|s| s.a_last.mean);
    let with_rel = rows.len() >= 2;
    let width = rows.iter().map(|s| s.label.len()).max().unwrap_or(0).max(6);

    let mut out = String::new();
    let _ = write!(out, "{:<width$}  {:>4}  {:>15}  {:>15}  {:>12}", "method", "reps", "A_avg", "A_last", "params");
    if with_rel {
        let _ = write!(out, "  {:>10}", "rel_err_%");
    }
    out.push('\n');
    for s in &rows {
        let _ = write!(
            out,
            "{:<width$}  {:>4}  {:>7.2} ± {:<5.2}  {:>7.2} ± {:<5.2}  {:>12}",
            s.label, s.reps, s.a_avg.mean, s.a_avg.std, s.a_last.mean, s.a_last.std, s.parameters
        );
        if with_rel {
            match worst.map(|w| pipeline::rel_error_reduction(w, s.a_last.mean)) {
                Some(Ok(v)) => {
                    let _ = write!(out, "  {v:>10.2}");
                }
                _ => {
                    let _ = write!(out, "  {:>10}", "n/a");
                }
            }
        }
        out.push('\n');
    }
    out
}

/// One CSV row per summary with mean and standard deviation columns.
pub fn summary_csv(summaries: &[Summary]) -> String {
    let mut out = String::from(
        "label,reps,a_avg_mean,a_avg_std,a_last_mean,a_last_std,train_seconds_mean,parameters\n",
    );
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{}",
            s.label.replace(',', ";"),
            s.reps,
            s.a_avg.mean,
            s.a_avg.std,
            s.a_last.mean,
            s.a_last.std,
            s.train_seconds.mean,
            s.parameters
        );
    }
    out
}

/// Per-report CSV lines with a header.
pub fn csv(reports: &[RunReport]) -> String {
    let mut out = String::from("label,");
    out.push_str(RunReport::csv_header());
    out.push('\n');
    for r in reports {
        out.push_str(&config_label(&r.config).replace(',', ";"));
        out.push(',');
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Reads every report file; the error names the first file that fails.
pub fn load_reports<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<RunReport>> {
    if paths.is_empty() {
        return Err(Error::InvalidConfig("no report files given".into()));
    }
    paths.iter().map(RunReport::read_json).collect()
}
