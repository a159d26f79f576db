//! Classification stability of MDS embeddings under column sampling.
//!
//! A trial samples `c = ⌈f·N⌉` columns, completes them with Nyström, embeds
//! the estimate, splits the points into train and test sets and scores 1-NN
//! and LDA on the held-out part.
//!
//! Seeds: trial `t` gets `s_t = derive_seed(top, "stability/trial/t")`. Its
//! columns come from `derive_seed(s_t, "columns")` and its split from
//! `derive_seed(s_t, "split")`. The split seed does not depend on the
//! fraction, so a fraction of 1.0 reproduces the full-matrix pipeline exactly,
//! and the CLI chain `dist → complete → embed → classify` run with `--seed s_t`
//! reproduces a single trial.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::MdsSpectrum;
use crate::error::{Error, Result};
use crate::matrixio::DistanceMatrix;
use crate::measures::MeasureDataset;
use crate::nystrom::{complete_nystrom, ColumnBlock, NystromOptions};
use crate::ot::{w2_matrix_in_current_pool, worker_pool, MatrixPlan};
use crate::sampling::{sample_columns, PlanVariant, SamplePlan};
use crate::seed;

const LDA_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl SplitPlan {
    /// Random split with `round(test_fraction · N)` test points, at least one
    /// on each side. Both index lists are sorted.
    pub fn random(n: usize, test_fraction: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::CountOutOfRange { count: n, max: 2 });
        }
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test fraction must lie in (0, 1), got {test_fraction}"
            )));
        }
        let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seed::rng(seed));
        let mut test = order[..n_test].to_vec();
        let mut train = order[n_test..].to_vec();
        test.sort_unstable();
        train.sort_unstable();
        Ok(Self { train, test, seed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    Knn1,
    Lda,
}

impl Classifier {
    pub fn name(self) -> &'static str {
        match self {
            Classifier::Knn1 => "knn1",
            Classifier::Lda => "lda",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn1" | "1nn" | "knn" => Ok(Classifier::Knn1),
            "lda" => Ok(Classifier::Lda),
            other => Err(Error::Config(format!("unknown classifier {other:?}"))),
        }
    }

    pub fn predict(
        self,
        train: &DMatrix<f64>,
        labels: &[i64],
        test: &DMatrix<f64>,
    ) -> Result<Vec<i64>> {
        match self {
            Classifier::Knn1 => knn1_classify(train, labels, test),
            Classifier::Lda => lda_classify(train, labels, test),
        }
    }
}

fn check_rows(train: &DMatrix<f64>, labels: &[i64], test: &DMatrix<f64>) -> Result<()> {
    if train.nrows() != labels.len() {
        return Err(Error::SizeMismatch(train.nrows(), labels.len()));
    }
    if test.nrows() > 0 && train.ncols() != test.ncols() {
        return Err(Error::DimensionMismatch {
            expected: train.ncols(),
            got: test.ncols(),
        });
    }
    Ok(())
}

/// Label of the Euclidean-nearest training row; ties go to the lowest index.
pub fn knn1_classify(
    train: &DMatrix<f64>,
    labels: &[i64],
    test: &DMatrix<f64>,
) -> Result<Vec<i64>> {
    check_rows(train, labels, test)?;
    if train.nrows() == 0 {
        return Err(Error::EmptyTrainSet);
    }
    Ok(test
        .row_iter()
        .map(|x| {
            let mut best = (f64::INFINITY, 0usize);
            for (i, t) in train.row_iter().enumerate() {
                let d = (t - x).norm_squared();
                if d < best.0 {
                    best = (d, i);
                }
            }
            labels[best.1]
        })
        .collect())
}

/// Linear discriminant analysis with a pooled, ridge-regularized covariance.
///
/// Scores are `xᵀΣ⁻¹μ_k − ½μ_kᵀΣ⁻¹μ_k + ln π_k` with `π_k` the training
/// class frequency; ties go to the smallest label.
pub fn lda_classify(train: &DMatrix<f64>, labels: &[i64], test: &DMatrix<f64>) -> Result<Vec<i64>> {
    check_rows(train, labels, test)?;
    if train.nrows() == 0 {
        return Err(Error::EmptyTrainSet);
    }
    let (n, p) = train.shape();
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(Error::DegenerateClasses("need at least two classes".into()));
    }
    if let Some((l, _)) = groups.iter().find(|(_, g)| g.len() < 2) {
        return Err(Error::DegenerateClasses(format!(
            "class {l} has fewer than two training points"
        )));
    }
    let k = groups.len();
    let means: Vec<DVector<f64>> = groups
        .values()
        .map(|g| {
            let mut m = DVector::zeros(p);
            for &i in g {
                m += train.row(i).transpose();
            }
            m / g.len() as f64
        })
        .collect();
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for (g, m) in groups.values().zip(&means) {
        for &i in g {
            let r = train.row(i).transpose() - m;
            cov.ger(1.0, &r, &r, 1.0);
        }
    }
    cov /= (n - k) as f64;
    let trace = cov.trace();
    let ridge = if trace > 0.0 {
        LDA_RIDGE * trace / p as f64
    } else {
        LDA_RIDGE
    };
    for j in 0..p {
        cov[(j, j)] += ridge;
    }
    let chol = cov.cholesky().ok_or_else(|| {
        Error::DegenerateClasses("pooled covariance is not positive definite".into())
    })?;
    let coefs: Vec<(i64, DVector<f64>, f64)> = groups
        .iter()
        .zip(&means)
        .map(|((&l, g), m)| {
            let w = chol.solve(m);
            let offset = -0.5 * m.dot(&w) + (g.len() as f64 / n as f64).ln();
            (l, w, offset)
        })
        .collect();
    Ok(test
        .row_iter()
        .map(|x| {
            let x = x.transpose();
            let mut best = (f64::NEG_INFINITY, coefs[0].0);
            for (l, w, offset) in &coefs {
                let score = x.dot(w) + offset;
                if score > best.0 {
                    best = (score, *l);
                }
            }
            best.1
        })
        .collect())
}

pub fn accuracy(predicted: &[i64], truth: &[i64]) -> f64 {
    if predicted.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / predicted.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub classifier: Classifier,
    pub fraction: f64,
    /// Columns sampled per trial.
    pub columns: usize,
    /// Trial seeds `s_t`, aligned with `accuracies`.
    pub seeds: Vec<u64>,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; zero for a single trial.
    pub std: f64,
}

impl AccuracyReport {
    pub fn new(
        classifier: Classifier,
        fraction: f64,
        columns: usize,
        seeds: Vec<u64>,
        accuracies: Vec<f64>,
    ) -> Self {
        let (mean, std) = mean_std(&accuracies);
        Self {
            classifier,
            fraction,
            columns,
            seeds,
            accuracies,
            mean,
            std,
        }
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    /// Spectral energy used to pick the embedding dimension of each estimate.
    pub energy: f64,
    /// Use this dimension instead of recomputing one per trial.
    pub dimension: Option<usize>,
    pub test_fraction: f64,
    pub classifiers: Vec<Classifier>,
    pub nystrom: NystromOptions,
    pub seed: u64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            energy: 0.97,
            dimension: None,
            test_fraction: 0.1,
            classifiers: vec![Classifier::Knn1, Classifier::Lda],
            nystrom: NystromOptions::default(),
            seed: 0,
        }
    }
}

/// Where the sampled columns come from.
#[derive(Debug, Clone, Copy)]
pub enum ColumnSource<'a> {
    /// Solve the needed transport problems on a pool of `workers` threads.
    Measures(&'a MeasureDataset, usize),
    /// Read them from a matrix whose needed columns are observed.
    Matrix(&'a DistanceMatrix),
}

impl ColumnSource<'_> {
    fn n(&self) -> usize {
        match self {
            ColumnSource::Measures(d, _) => d.len(),
            ColumnSource::Matrix(d) => d.n(),
        }
    }
}

pub fn trial_seed(top: u64, trial: usize) -> u64 {
    seed::derive_seed(top, &format!("stability/trial/{trial}"))
}

pub fn columns_seed(trial_seed: u64) -> u64 {
    seed::derive_seed(trial_seed, "columns")
}

pub fn split_seed(trial_seed: u64) -> u64 {
    seed::derive_seed(trial_seed, "split")
}

/// `⌈f·N⌉` clamped to `1..=N`, tolerant of `f·N` landing a hair above an integer.
pub fn columns_for_fraction(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!(
            "column fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let x = fraction * n as f64;
    Ok(((x - 1e-9 * x.max(1.0)).ceil() as usize).clamp(1, n))
}

/// Embeds a complete matrix and scores each classifier on one split.
pub fn evaluate_matrix(
    d: &DistanceMatrix,
    labels: &[i64],
    split: &SplitPlan,
    cfg: &StabilityConfig,
) -> Result<Vec<f64>> {
    let spectrum = MdsSpectrum::new(d)?;
    let dim = match cfg.dimension {
        Some(k) => k,
        None => spectrum.choose_dimension(cfg.energy),
    };
    let emb = spectrum.embed(dim)?;
    evaluate_embedding(&emb.coords, labels, split, &cfg.classifiers)
}

/// Scores each classifier on one split of an embedding.
pub fn evaluate_embedding(
    coords: &DMatrix<f64>,
    labels: &[i64],
    split: &SplitPlan,
    classifiers: &[Classifier],
) -> Result<Vec<f64>> {
    if coords.nrows() != labels.len() {
        return Err(Error::SizeMismatch(coords.nrows(), labels.len()));
    }
    let train = coords.select_rows(&split.train);
    let test = coords.select_rows(&split.test);
    let train_y: Vec<i64> = split.train.iter().map(|&i| labels[i]).collect();
    let test_y: Vec<i64> = split.test.iter().map(|&i| labels[i]).collect();
    classifiers
        .iter()
        .map(|c| Ok(accuracy(&c.predict(&train, &train_y, &test)?, &test_y)))
        .collect()
}

/// Accuracy of the full-matrix pipeline over the same trial splits.
pub fn full_pipeline(
    d: &DistanceMatrix,
    labels: &[i64],
    trials: usize,
    cfg: &StabilityConfig,
) -> Result<Vec<AccuracyReport>> {
    let n = d.n();
    let seeds: Vec<u64> = (0..trials).map(|t| trial_seed(cfg.seed, t)).collect();
    let per_trial = seeds
        .par_iter()
        .map(|&s| {
            evaluate_matrix(
                d,
                labels,
                &SplitPlan::random(n, cfg.test_fraction, split_seed(s))?,
                cfg,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(cfg, 1.0, n, &seeds, &per_trial))
}

fn assemble(
    cfg: &StabilityConfig,
    fraction: f64,
    columns: usize,
    seeds: &[u64],
    per_trial: &[Vec<f64>],
) -> Vec<AccuracyReport> {
    cfg.classifiers
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let acc = per_trial.iter().map(|a| a[k]).collect();
            AccuracyReport::new(c, fraction, columns, seeds.to_vec(), acc)
        })
        .collect()
}

/// Runs the stability protocol; one report per (fraction, classifier), fractions outermost.
pub fn stability_experiment(
    source: ColumnSource<'_>,
    labels: &[i64],
    fractions: &[f64],
    trials: usize,
    cfg: &StabilityConfig,
) -> Result<Vec<AccuracyReport>> {
    let n = source.n();
    if labels.len() != n {
        return Err(Error::SizeMismatch(labels.len(), n));
    }
    if trials == 0 || fractions.is_empty() || cfg.classifiers.is_empty() {
        return Err(Error::Config(
            "need at least one trial, fraction and classifier".into(),
        ));
    }
    let seeds: Vec<u64> = (0..trials).map(|t| trial_seed(cfg.seed, t)).collect();
    let mut jobs = Vec::new();
    for (fi, &f) in fractions.iter().enumerate() {
        let c = columns_for_fraction(n, f)?;
        for &s in &seeds {
            let plan = sample_columns(n, c, columns_seed(s))?;
            jobs.push((fi, s, plan));
        }
    }

    let run = |d: &DistanceMatrix| -> Result<Vec<Vec<f64>>> {
        jobs.par_iter()
            .map(|(_, s, plan)| {
                let block = ColumnBlock::from_plan(d, plan)?;
                let est = complete_nystrom(&block, &cfg.nystrom)?;
                let split = SplitPlan::random(n, cfg.test_fraction, split_seed(*s))?;
                evaluate_matrix(&est, labels, &split, cfg)
            })
            .collect()
    };
    let per_job = match source {
        ColumnSource::Matrix(d) => run(d)?,
        ColumnSource::Measures(data, workers) => worker_pool(workers)?.install(|| {
            // every transport problem any trial needs, solved once
            let mut union: Vec<usize> = jobs
                .iter()
                .flat_map(|(_, _, p)| match p.variant() {
                    PlanVariant::Columns(c) => c.clone(),
                    PlanVariant::Entries(_) => Vec::new(),
                })
                .collect();
            union.sort_unstable();
            union.dedup();
            let plan = SamplePlan::new(PlanVariant::Columns(union), cfg.seed, n)?;
            let d = w2_matrix_in_current_pool(data, MatrixPlan::Sampled(&plan))?;
            run(&d)
        })?,
    };

    let mut reports = Vec::new();
    for (fi, &f) in fractions.iter().enumerate() {
        let c = columns_for_fraction(n, f)?;
        let rows: Vec<Vec<f64>> = jobs
            .iter()
            .zip(&per_job)
            .filter(|((j, _, _), _)| *j == fi)
            .map(|(_, a)| a.clone())
            .collect();
        reports.extend(assemble(cfg, f, c, &seeds, &rows));
    }
    Ok(reports)
}

/// `fraction,trial,seed,classifier,accuracy`, one row per trial and classifier.
pub fn reports_to_csv(reports: &[AccuracyReport]) -> String {
    let mut out = String::from("fraction,trial,seed,classifier,accuracy\n");
    for r in reports {
        for (t, (s, a)) in r.seeds.iter().zip(&r.accuracies).enumerate() {
            let _ = writeln!(out, "{},{t},{s},{},{a}", r.fraction, r.classifier.name());
        }
    }
    out
}

/// Mean ± std per column count, ready to plot accuracy against columns sampled.
pub fn reports_to_series_csv(reports: &[AccuracyReport]) -> String {
    let mut out = String::from("classifier,fraction,columns,mean,std,lower,upper\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.classifier.name(),
            r.fraction,
            r.columns,
            r.mean,
            r.std,
            r.mean - r.std,
            r.mean + r.std
        );
    }
    out
}

pub fn reports_to_json(reports: &[AccuracyReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}
