//! Learners, stream evaluation and run reports.
//!
//! Four methods share one driver:
//!
//! * `anacp`: class statistics → CP layer → NCM or replay-trained ELM
//! * `raw_ncm`: nearest class mean on the input features
//! * `incremental_ridge`: ridge classifier on input features, accumulated
//!   Gram/cross matrices
//! * `rp_ridge`: the same on GELU random features

use std::fmt;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, GramAccumulator, RPMatrix};
use crate::classifier::{self, ElmClassifier, ElmParams, NcmMetric};
use crate::cp_layer::{CPConfig, CPState};
use crate::error::{Error, Result};
use crate::feature_store::{FeatureDataset, TaskStream};
use crate::linalg;
use crate::repulsion::TargetPrototypes;
use crate::stats::{self, ClassStats};

/// Offset between the base seed and the classifier's random projection.
pub const CLASSIFIER_SEED_OFFSET: u64 = 1_000_000;
/// Offset for the replay sampler; task `t` uses `base + offset + t`.
pub const REPLAY_SEED_OFFSET: u64 = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Anacp,
    RawNcm,
    IncrementalRidge,
    RpRidge,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Anacp,
        Method::RawNcm,
        Method::IncrementalRidge,
        Method::RpRidge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Anacp => "anacp",
            Method::RawNcm => "raw_ncm",
            Method::IncrementalRidge => "incremental_ridge",
            Method::RpRidge => "rp_ridge",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Ncm,
    Elm,
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ncm" => Ok(ClassifierKind::Ncm),
            "elm" => Ok(ClassifierKind::Elm),
            _ => Err(Error::InvalidConfig(format!("unknown classifier '{s}' (expected ncm or elm)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub method: Method,
    pub rp_dim: usize,
    pub heads: usize,
    pub replay: usize,
    pub lambda_cp: f64,
    pub lambda_cls: f64,
    pub alpha: f64,
    pub eps_scale: f64,
    pub base_seed: u64,
    pub use_repulsion: bool,
    pub classifier: ClassifierKind,
    pub ncm_metric: NcmMetric,
    pub normalize_inputs: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            method: Method::Anacp,
            rp_dim: 5000,
            heads: 3,
            replay: 100,
            lambda_cp: analytic::DEFAULT_LAMBDA,
            lambda_cls: analytic::DEFAULT_LAMBDA,
            alpha: 1.0,
            eps_scale: stats::DEFAULT_EPS_SCALE,
            base_seed: 0,
            use_repulsion: true,
            classifier: ClassifierKind::Elm,
            ncm_metric: NcmMetric::Euclidean,
            normalize_inputs: false,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.rp_dim == 0 {
            return bad("rp_dim must be positive".into());
        }
        if self.heads == 0 {
            return bad("heads must be at least 1".into());
        }
        for (name, v) in [("lambda_cp", self.lambda_cp), ("lambda_cls", self.lambda_cls)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad(format!("alpha must be a non-negative number, got {}", self.alpha));
        }
        if !(self.eps_scale.is_finite() && self.eps_scale >= 0.0) {
            return bad(format!("eps_scale must be a non-negative number, got {}", self.eps_scale));
        }
        if self.method == Method::Anacp && self.classifier == ClassifierKind::Elm && self.replay == 0 {
            return bad("the ELM classifier needs replay >= 1".into());
        }
        Ok(())
    }

    fn cp_config(&self) -> CPConfig {
        CPConfig {
            rp_dim: self.rp_dim,
            heads: self.heads,
            lambda: self.lambda_cp,
            alpha: self.alpha,
            eps_scale: self.eps_scale,
            use_repulsion: self.use_repulsion,
            base_seed: self.base_seed,
        }
    }

    pub fn classifier_seed(&self) -> u64 {
        self.base_seed + CLASSIFIER_SEED_OFFSET
    }

    pub fn replay_seed(&self, task_index: usize) -> u64 {
        self.base_seed + REPLAY_SEED_OFFSET + task_index as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredictMode {
    /// No task identity; all seen classes compete.
    Cil,
    /// Predictions restricted to the classes of the given task.
    Til(usize),
}

/// Stored-parameter accounting; everything a learner keeps between tasks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterCount {
    /// Class means and the shared covariance.
    pub input_layer: u64,
    /// RP matrix, Gram matrix, random-space prototypes and projection of
    /// every CP head.
    pub cp_layer: u64,
    pub classifier: u64,
    pub total: u64,
}

impl ParameterCount {
    fn new(input_layer: u64, cp_layer: u64, classifier: u64) -> Self {
        Self {
            input_layer,
            cp_layer,
            classifier,
            total: input_layer + cp_layer + classifier,
        }
    }

    /// Storage of an AnaCP learner with `classes` classes of dimension
    /// `dim`, `heads` CP heads of width `rp_dim`, and optionally the ELM.
    pub fn anacp(classes: u64, dim: u64, rp_dim: u64, heads: u64, elm: bool) -> Self {
        let input = classes * dim + dim * dim;
        let per_head = dim * rp_dim + rp_dim * rp_dim + classes * rp_dim + dim * rp_dim;
        let classifier = if elm { dim * rp_dim + classes * rp_dim } else { 0 };
        Self::new(input, heads * per_head, classifier)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskDiagnostics {
    pub cos_sum_before: Option<f64>,
    pub cos_sum_after: Option<f64>,
    /// Counts of δ = −1, 0, +1.
    pub delta_histogram: Option<[usize; 3]>,
}

#[derive(Clone, Debug)]
enum LearnerState {
    Anacp {
        stats: ClassStats,
        cp: CPState,
        elm: Option<ElmClassifier>,
    },
    RawNcm {
        stats: ClassStats,
    },
    Ridge {
        rp: Option<RPMatrix>,
        acc: GramAccumulator,
        /// Cross-matrix column order (arrival order).
        classes: Vec<u32>,
        weights: Option<DMatrix<f64>>,
    },
}

#[derive(Clone, Debug)]
pub struct Learner {
    config: LearnerConfig,
    dim: usize,
    tasks: Vec<Vec<u32>>,
    state: LearnerState,
    diagnostics: Vec<TaskDiagnostics>,
}

impl Learner {
    pub fn new(config: LearnerConfig, dim: usize) -> Result<Self> {
        config.validate()?;
        if dim == 0 {
            return Err(Error::InvalidConfig("input dimension must be positive".into()));
        }
        let state = match config.method {
            Method::Anacp => LearnerState::Anacp {
                stats: ClassStats::new(dim),
                cp: CPState::new(dim, &config.cp_config())?,
                elm: None,
            },
            Method::RawNcm => LearnerState::RawNcm {
                stats: ClassStats::new(dim),
            },
            Method::IncrementalRidge => LearnerState::Ridge {
                rp: None,
                acc: GramAccumulator::new(dim, config.lambda_cls),
                classes: Vec::new(),
                weights: None,
            },
            Method::RpRidge => LearnerState::Ridge {
                rp: Some(analytic::random_projection(dim, config.rp_dim, config.classifier_seed())),
                acc: GramAccumulator::new(config.rp_dim, config.lambda_cls),
                classes: Vec::new(),
                weights: None,
            },
        };
        Ok(Self {
            config,
            dim,
            tasks: Vec::new(),
            state,
            diagnostics: Vec::new(),
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Class sets of the learned tasks, in learning order.
    pub fn tasks(&self) -> &[Vec<u32>] {
        &self.tasks
    }

    pub fn diagnostics(&self) -> &[TaskDiagnostics] {
        &self.diagnostics
    }

    pub fn seen_classes(&self) -> Vec<u32> {
        let mut all: Vec<u32> = self.tasks.concat();
        all.sort_unstable();
        all
    }

    pub fn class_stats(&self) -> Option<&ClassStats> {
        match &self.state {
            LearnerState::Anacp { stats, .. } | LearnerState::RawNcm { stats } => Some(stats),
            LearnerState::Ridge { .. } => None,
        }
    }

    pub fn cp_state(&self) -> Option<&CPState> {
        match &self.state {
            LearnerState::Anacp { cp, .. } => Some(cp),
            _ => None,
        }
    }

    pub fn elm(&self) -> Option<&ElmClassifier> {
        match &self.state {
            LearnerState::Anacp { elm, .. } => elm.as_ref(),
            _ => None,
        }
    }

    /// Ridge weights (columns in arrival order) and their class ids.
    pub fn ridge_weights(&self) -> Option<(&DMatrix<f64>, &[u32])> {
        match &self.state {
            LearnerState::Ridge {
                weights: Some(w),
                classes,
                ..
            } => Some((w, classes)),
            _ => None,
        }
    }

    pub fn ridge_accumulator(&self) -> Option<&GramAccumulator> {
        match &self.state {
            LearnerState::Ridge { acc, .. } => Some(acc),
            _ => None,
        }
    }

    fn prepare(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.ncols(),
            });
        }
        let mut x = x.clone();
        if self.config.normalize_inputs {
            for mut row in x.row_iter_mut() {
                let n = row.norm();
                if n > 0.0 {
                    row /= n;
                }
            }
        }
        Ok(x)
    }

    pub fn learn_task(&mut self, train: &FeatureDataset) -> Result<()> {
        self.learn_task_matrix(&train.to_matrix(), train.labels())
    }

    pub fn learn_task_matrix(&mut self, x: &DMatrix<f64>, labels: &[u32]) -> Result<()> {
        if labels.is_empty() {
            return Err(Error::InvalidDataset("task has no training samples".into()));
        }
        if x.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                found: labels.len(),
            });
        }
        let task_classes = linalg::distinct_labels(labels);
        if let Some(&c) = task_classes.iter().find(|c| self.tasks.iter().any(|t| t.contains(c))) {
            return Err(Error::RepeatedClass(c));
        }
        let x = self.prepare(x)?;
        let task_index = self.tasks.len();
        let config = self.config.clone();
        let mut diag = TaskDiagnostics::default();

        match &mut self.state {
            LearnerState::Anacp { stats, cp, elm } => {
                let mut new_stats = stats.clone();
                new_stats.update(&x, labels)?;
                let mut new_cp = cp.clone();
                new_cp.update(&x, labels, &new_stats)?;
                let new_elm = match config.classifier {
                    ClassifierKind::Elm => {
                        let params = ElmParams {
                            replay_per_class: config.replay,
                            lambda: config.lambda_cls,
                            rp_dim: config.rp_dim,
                            rp_seed: config.classifier_seed(),
                            sample_seed: config.replay_seed(task_index),
                            eps_scale: config.eps_scale,
                        };
                        Some(classifier::rebuild_elm(&new_cp, &new_stats, &params)?)
                    }
                    ClassifierKind::Ncm => None,
                };
                if let Some(p) = &new_cp.prototypes {
                    diag.cos_sum_before = Some(p.cos_sum_before);
                    diag.cos_sum_after = Some(p.cos_sum_after);
                    diag.delta_histogram = Some(p.delta_histogram());
                }
                *stats = new_stats;
                *cp = new_cp;
                *elm = new_elm;
            }
            LearnerState::RawNcm { stats } => stats.update(&x, labels)?,
            LearnerState::Ridge {
                rp,
                acc,
                classes,
                weights,
            } => {
                let features = match rp {
                    Some(rp) => analytic::project(rp, &x)?,
                    None => x,
                };
                let mut new_classes = classes.clone();
                new_classes.extend_from_slice(&task_classes);
                let targets = analytic::one_hot(labels, &new_classes)?;
                let mut new_acc = acc.clone();
                new_acc.accumulate(&features, &targets)?;
                let new_weights = new_acc.solve()?;
                *acc = new_acc;
                *classes = new_classes;
                *weights = Some(new_weights);
            }
        }
        self.tasks.push(task_classes);
        self.diagnostics.push(diag);
        Ok(())
    }

    /// Class scores with columns in ascending class order.
    fn scores(&self, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<u32>)> {
        let x = self.prepare(x)?;
        match &self.state {
            LearnerState::Anacp { cp, elm, .. } => {
                let u = cp.transform(&x)?;
                match (self.config.classifier, elm) {
                    (ClassifierKind::Elm, Some(elm)) => Ok((elm.scores(&u)?, elm.classes.clone())),
                    (ClassifierKind::Elm, None) => Err(Error::NotFitted),
                    (ClassifierKind::Ncm, _) => {
                        let protos = cp.prototypes.as_ref().ok_or(Error::NotFitted)?;
                        Ok((
                            classifier::ncm_scores(&u, protos, self.config.ncm_metric)?,
                            protos.classes.clone(),
                        ))
                    }
                }
            }
            LearnerState::RawNcm { stats } => {
                let protos = class_mean_prototypes(stats);
                Ok((
                    classifier::ncm_scores(&x, &protos, self.config.ncm_metric)?,
                    protos.classes,
                ))
            }
            LearnerState::Ridge {
                rp,
                classes,
                weights,
                ..
            } => {
                let w = weights.as_ref().ok_or(Error::NotFitted)?;
                let features = match rp {
                    Some(rp) => analytic::project(rp, &x)?,
                    None => x,
                };
                let raw = features * w;
                let mut order: Vec<usize> = (0..classes.len()).collect();
                order.sort_by_key(|&k| classes[k]);
                let sorted = raw.select_columns(&order);
                Ok((sorted, order.iter().map(|&k| classes[k]).collect()))
            }
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>, mode: PredictMode) -> Result<Vec<u32>> {
        if self.tasks.is_empty() {
            return Err(Error::NotFitted);
        }
        let allowed = match mode {
            PredictMode::Cil => None,
            PredictMode::Til(t) => Some(
                self.tasks
                    .get(t)
                    .ok_or(Error::UnknownTask {
                        task: t,
                        learned: self.tasks.len(),
                    })?
                    .as_slice(),
            ),
        };
        let (scores, classes) = self.scores(x)?;
        classifier::argmax_classes(&scores, &classes, allowed)
    }

    pub fn parameter_count(&self) -> ParameterCount {
        let classes = self.seen_classes().len() as u64;
        let d = self.dim as u64;
        let big_d = self.config.rp_dim as u64;
        match self.config.method {
            Method::Anacp => ParameterCount::anacp(
                classes,
                d,
                big_d,
                self.config.heads as u64,
                self.config.classifier == ClassifierKind::Elm,
            ),
            Method::RawNcm => ParameterCount::new(classes * d, 0, 0),
            Method::IncrementalRidge => ParameterCount::new(0, 0, d * d + d * classes),
            Method::RpRidge => ParameterCount::new(0, 0, d * big_d + big_d * big_d + big_d * classes),
        }
    }

    pub(crate) fn from_parts(
        config: LearnerConfig,
        dim: usize,
        tasks: Vec<Vec<u32>>,
        diagnostics: Vec<TaskDiagnostics>,
        parts: LearnerParts,
    ) -> Result<Self> {
        let state = match parts {
            LearnerParts::Anacp { stats, cp, elm } => LearnerState::Anacp { stats, cp, elm },
            LearnerParts::RawNcm { stats } => LearnerState::RawNcm { stats },
            LearnerParts::Ridge {
                rp,
                acc,
                classes,
                weights,
            } => LearnerState::Ridge {
                rp,
                acc,
                classes,
                weights,
            },
        };
        Ok(Self {
            config,
            dim,
            tasks,
            state,
            diagnostics,
        })
    }

    pub(crate) fn parts(&self) -> LearnerPartsRef<'_> {
        match &self.state {
            LearnerState::Anacp { stats, cp, elm } => LearnerPartsRef::Anacp {
                stats,
                cp,
                elm: elm.as_ref(),
            },
            LearnerState::RawNcm { stats } => LearnerPartsRef::RawNcm { stats },
            LearnerState::Ridge {
                rp,
                acc,
                classes,
                weights,
            } => LearnerPartsRef::Ridge {
                rp: rp.as_ref(),
                acc,
                classes,
                weights: weights.as_ref(),
            },
        }
    }
}

/// Owned learner state, used when restoring checkpoints.
pub(crate) enum LearnerParts {
    Anacp {
        stats: ClassStats,
        cp: CPState,
        elm: Option<ElmClassifier>,
    },
    RawNcm {
        stats: ClassStats,
    },
    Ridge {
        rp: Option<RPMatrix>,
        acc: GramAccumulator,
        classes: Vec<u32>,
        weights: Option<DMatrix<f64>>,
    },
}

pub(crate) enum LearnerPartsRef<'a> {
    Anacp {
        stats: &'a ClassStats,
        cp: &'a CPState,
        elm: Option<&'a ElmClassifier>,
    },
    RawNcm {
        stats: &'a ClassStats,
    },
    Ridge {
        rp: Option<&'a RPMatrix>,
        acc: &'a GramAccumulator,
        classes: &'a [u32],
        weights: Option<&'a DMatrix<f64>>,
    },
}

fn class_mean_prototypes(stats: &ClassStats) -> TargetPrototypes {
    TargetPrototypes {
        classes: stats.class_ids(),
        prototypes: stats.means_matrix().transpose(),
        alpha: 0.0,
        deltas: vec![0; stats.num_classes()],
        cos_sum_before: 0.0,
        cos_sum_after: 0.0,
    }
}

/// Percentage of `predicted` equal to `truth`.
pub fn accuracy(predicted: &[u32], truth: &[u32]) -> f64 {
    let correct = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    100.0 * correct as f64 / truth.len() as f64
}

/// Result of running one learner over one task stream. Accuracies are
/// percentages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub config: LearnerConfig,
    pub stream_seed: u64,
    pub num_tasks: usize,
    pub num_classes: usize,
    pub dim: usize,
    pub task_classes: Vec<Vec<u32>>,
    /// `acc_matrix_cil[t][i]`: accuracy on task `i`'s test split after
    /// learning tasks `0..=t`, all seen classes competing.
    pub acc_matrix_cil: Vec<Vec<f64>>,
    /// Same, with predictions restricted to task `i`'s classes.
    pub acc_matrix_til: Vec<Vec<f64>>,
    /// `A_t`: accuracy over the union of test splits `0..=t`.
    pub task_accuracy: Vec<f64>,
    pub a_last: f64,
    pub a_avg: f64,
    pub train_seconds: Vec<f64>,
    pub eval_seconds: Vec<f64>,
    pub diagnostics: Vec<TaskDiagnostics>,
    pub parameters: ParameterCount,
    pub prng: String,
}

impl RunReport {
    /// Largest change of any TIL column relative to its diagonal entry.
    pub fn max_til_drift(&self) -> f64 {
        let mut drift: f64 = 0.0;
        for (t, row) in self.acc_matrix_til.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                drift = drift.max((v - self.acc_matrix_til[i][i]).abs());
                debug_assert!(i <= t);
            }
        }
        drift
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn csv_header() -> &'static str {
        "method,stream_seed,num_tasks,num_classes,a_avg,a_last,train_seconds,parameters"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.4},{:.4},{:.4},{}",
            self.method,
            self.stream_seed,
            self.num_tasks,
            self.num_classes,
            self.a_avg,
            self.a_last,
            self.train_seconds.iter().sum::<f64>(),
            self.parameters.total
        )
    }
}

/// Trains on each task of `stream` in turn, evaluating CIL and TIL accuracy
/// on every test split seen so far after each task.
pub fn run_stream(config: &LearnerConfig, stream: &TaskStream) -> Result<RunReport> {
    if stream.tasks.is_empty() {
        return Err(Error::InvalidDataset("task stream is empty".into()));
    }
    if let Some((i, _)) = stream.tasks.iter().enumerate().find(|(_, t)| t.test.is_empty()) {
        return Err(Error::InvalidDataset(format!("task {i} has no test samples")));
    }
    let dim = stream.dim();
    let mut learner = Learner::new(config.clone(), dim)?;
    let tests: Vec<(DMatrix<f64>, &[u32])> = stream
        .tasks
        .iter()
        .map(|t| (t.test.to_matrix(), t.test.labels()))
        .collect();

    let mut cil = Vec::new();
    let mut til = Vec::new();
    let mut task_accuracy = Vec::new();
    let mut train_seconds = Vec::new();
    let mut eval_seconds = Vec::new();

    for (t, task) in stream.tasks.iter().enumerate() {
        let start = Instant::now();
        learner.learn_task(&task.train)?;
        train_seconds.push(start.elapsed().as_secs_f64());

        let start = Instant::now();
        let mut cil_row = Vec::with_capacity(t + 1);
        let mut til_row = Vec::with_capacity(t + 1);
        let mut correct = 0usize;
        let mut total = 0usize;
        for (i, (x, truth)) in tests.iter().enumerate().take(t + 1) {
            let pred = learner.predict(x, PredictMode::Cil)?;
            correct += pred.iter().zip(truth.iter()).filter(|(a, b)| a == b).count();
            total += truth.len();
            cil_row.push(accuracy(&pred, truth));
            til_row.push(accuracy(&learner.predict(x, PredictMode::Til(i))?, truth));
        }
        eval_seconds.push(start.elapsed().as_secs_f64());
        cil.push(cil_row);
        til.push(til_row);
        task_accuracy.push(100.0 * correct as f64 / total as f64);
        log::info!(
            "{} task {}/{}: A_t = {:.2}",
            config.method,
            t + 1,
            stream.num_tasks(),
            task_accuracy[t]
        );
    }

    let a_last = *task_accuracy.last().unwrap();
    let a_avg = task_accuracy.iter().sum::<f64>() / task_accuracy.len() as f64;
    Ok(RunReport {
        method: config.method,
        config: config.clone(),
        stream_seed: stream.seed,
        num_tasks: stream.num_tasks(),
        num_classes: learner.seen_classes().len(),
        dim,
        task_classes: learner.tasks().to_vec(),
        acc_matrix_cil: cil,
        acc_matrix_til: til,
        task_accuracy,
        a_last,
        a_avg,
        train_seconds,
        eval_seconds,
        diagnostics: learner.diagnostics().to_vec(),
        parameters: learner.parameter_count(),
        prng: analytic::PRNG_ID.to_string(),
    })
}

/// `(A_I − A_0) / (100 − A_0) × 100`, accuracies in percent.
pub fn rel_error_reduction(baseline: f64, improved: f64) -> Result<f64> {
    if !(baseline < 100.0) || baseline.is_nan() {
        return Err(Error::DegenerateBaseline(baseline));
    }
    Ok((improved - baseline) / (100.0 - baseline) * 100.0)
}
