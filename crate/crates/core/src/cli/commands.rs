use std::fs;
use std::path::Path;
use std::time::Instant;

use serde_json::json;

use super::config::{Algorithm, ExperimentConfig, DEFAULT_FRACTIONS};
use super::{
    BudgetArgs, ClassifyArgs, Command, CompleteArgs, DistArgs, EmbedArgs, EvalArgs, SynthArgs,
};
use crate::classify::{
    self, columns_for_fraction, evaluate_embedding, reports_to_csv, reports_to_json,
    reports_to_series_csv, stability_experiment, AccuracyReport, ColumnSource, SplitPlan,
};
use crate::embedding::{parse_embedding_csv, MdsSpectrum};
use crate::error::{Error, Result};
use crate::matrixio::{relative_error, DistanceMatrix};
use crate::mc::complete_mc;
use crate::measures::io::{parse_labels, save_dataset_dir};
use crate::nystrom::{complete_nystrom, ColumnBlock};
use crate::ot::{w2_matrix, MatrixPlan};
use crate::sampling::{budget_to_columns, sample_columns, sample_entries, SamplePlan};
use crate::seed::derive_seed;

pub(super) fn dispatch(cmd: &Command, cfg: &ExperimentConfig) -> Result<()> {
    match cmd {
        Command::Dist(a) => dist(a, cfg),
        Command::Complete(a) => complete(a, cfg),
        Command::Embed(a) => embed(a, cfg),
        Command::Eval(a) => eval(a),
        Command::Classify(a) => classify(a, cfg),
        Command::Budget(a) => budget(a),
        Command::Synth(a) => synth(a, cfg),
    }
}

fn sibling(path: &Path, suffix: &str) -> std::path::PathBuf {
    path.with_extension(suffix)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_labels(path: &Path, n: usize) -> Result<Vec<i64>> {
    parse_labels(&fs::read_to_string(path)?, n)
}

fn dist(a: &DistArgs, cfg: &ExperimentConfig) -> Result<()> {
    cfg.check_sampling()?;
    let start = Instant::now();
    let data = cfg.load_dataset()?;
    let n = data.len();
    let plan: Option<SamplePlan> = match (cfg.rate, cfg.columns) {
        (Some(rate), _) => Some(sample_entries(n, rate, derive_seed(cfg.seed, "entries"))?),
        (_, Some(c)) => Some(sample_columns(n, c, classify::columns_seed(cfg.seed))?),
        _ => None,
    };
    let observed = plan
        .as_ref()
        .map_or(n * (n - 1) / 2, SamplePlan::offdiag_observed);
    let workers = cfg.workers();

    let matrix_file = if a.plan_only {
        None
    } else {
        let mp = plan.as_ref().map_or(MatrixPlan::Full, MatrixPlan::Sampled);
        let d = w2_matrix(&data, mp, workers)?;
        d.save(&a.out)?;
        Some((file_name(&a.out), d.kind().name()))
    };
    let plan_file = match &plan {
        Some(p) => {
            let path = sibling(&a.out, "plan.json");
            fs::write(&path, p.to_json()? + "\n")?;
            Some(file_name(&path))
        }
        None => None,
    };
    let manifest = json!({
        "command": "dist",
        "config": cfg,
        "dataset": data.name(),
        "n": n,
        "plan": plan_file,
        "plan_seed": plan.as_ref().map(SamplePlan::seed),
        "observed_entries": observed,
        "matrix": matrix_file.as_ref().map(|m| &m.0),
        "kind": matrix_file.as_ref().map_or("none", |m| m.1),
    });
    write_json(&sibling(&a.out, "manifest.json"), &manifest)?;
    let seconds = start.elapsed().as_secs_f64();
    write_json(
        &sibling(&a.out, "timing.json"),
        &json!({ "seconds": seconds, "workers": workers }),
    )?;
    eprintln!("dist: N = {n}, {observed} entries, {workers} workers, {seconds:.2} s");
    Ok(())
}

fn complete(a: &CompleteArgs, cfg: &ExperimentConfig) -> Result<()> {
    let d = DistanceMatrix::load(&a.input)?;
    let truth = a.truth.as_deref().map(DistanceMatrix::load).transpose()?;
    let (est, mut report) = match cfg.algorithm {
        Some(Algorithm::Mc) => {
            let mut mc = cfg.mc.clone();
            mc.seed = derive_seed(cfg.seed, "mc");
            let (est, conv) = complete_mc(&d, &mc)?;
            eprintln!(
                "complete: mc stopped after {} iterations, residual {:e}",
                conv.iterations, conv.final_residual
            );
            let report = json!({
                "algorithm": "mc",
                "observed_entries": d.observed_pairs().len(),
                "settings": mc,
                "convergence": conv,
            });
            (est, report)
        }
        Some(Algorithm::Nystrom) => {
            let cols = d.observed_columns();
            if cols.is_empty() {
                return Err(Error::Config(
                    "no fully observed column to complete from".into(),
                ));
            }
            let block = ColumnBlock::from_matrix(&d, &cols)?;
            let est = complete_nystrom(&block, &cfg.nystrom)?;
            eprintln!("complete: nystrom from {} columns", cols.len());
            let report = json!({
                "algorithm": "nystrom",
                "columns": cols,
                "settings": cfg.nystrom,
            });
            (est, report)
        }
        Some(Algorithm::Full) | None => {
            return Err(Error::Config(
                "complete needs --algorithm mc or nystrom".into(),
            ))
        }
    };
    if let Some(t) = &truth {
        let err = relative_error(&est, t)?;
        report["relative_error"] = json!(err);
        eprintln!("complete: relative error {err:e}");
    }
    est.save(&a.out)?;
    write_json(&sibling(&a.out, "report.json"), &report)
}

fn embed(a: &EmbedArgs, cfg: &ExperimentConfig) -> Result<()> {
    let d = DistanceMatrix::load(&a.input)?;
    let spectrum = MdsSpectrum::new(&d)?;
    let dim = match cfg.dimension {
        Some(k) => k,
        None => {
            if !(cfg.energy > 0.0 && cfg.energy <= 1.0) {
                return Err(Error::Config(format!(
                    "energy must lie in (0, 1], got {}",
                    cfg.energy
                )));
            }
            spectrum.choose_dimension(cfg.energy)
        }
    };
    let emb = spectrum.embed(dim)?;
    let labels = a
        .labels
        .as_deref()
        .map(|p| read_labels(p, d.n()))
        .transpose()?;
    fs::write(&a.out, emb.to_csv(labels.as_deref()))?;
    write_json(
        &sibling(&a.out, "meta.json"),
        &serde_json::to_value(&emb.meta)?,
    )?;
    eprintln!(
        "embed: dimension {dim}, negative tail mass {:.3e}",
        emb.meta.negative_tail_mass
    );
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let est = DistanceMatrix::load(&a.estimate)?;
    let truth = DistanceMatrix::load(&a.truth)?;
    println!("{}", relative_error(&est, &truth)?);
    Ok(())
}

fn classify(a: &ClassifyArgs, cfg: &ExperimentConfig) -> Result<()> {
    if cfg.rate.is_some() || cfg.columns.is_some() {
        return Err(Error::Config(
            "rate and columns do not apply to classify; use fractions".into(),
        ));
    }
    let stability = cfg.stability();
    let reports: Vec<AccuracyReport> = if let Some(path) = &a.embedding {
        if cfg.fractions.is_some() {
            return Err(Error::Config(
                "fractions do not apply to a single embedding".into(),
            ));
        }
        let (coords, own) = parse_embedding_csv(&fs::read_to_string(path)?)?;
        let n = coords.nrows();
        let labels = match (&a.labels, own) {
            (Some(p), _) => read_labels(p, n)?,
            (None, Some(l)) => l,
            (None, None) => {
                return Err(Error::Config(
                    "the embedding carries no labels; pass --labels".into(),
                ))
            }
        };
        let split = SplitPlan::random(n, cfg.test_fraction, classify::split_seed(cfg.seed))?;
        let accs = evaluate_embedding(&coords, &labels, &split, &cfg.classifiers)?;
        let fraction = a.fraction.unwrap_or(1.0);
        let c = columns_for_fraction(n, fraction)?;
        cfg.classifiers
            .iter()
            .zip(accs)
            .map(|(&k, acc)| AccuracyReport::new(k, fraction, c, vec![cfg.seed], vec![acc]))
            .collect()
    } else {
        let fractions = cfg
            .fractions
            .clone()
            .unwrap_or_else(|| DEFAULT_FRACTIONS.to_vec());
        if let Some(path) = &a.matrix {
            let d = DistanceMatrix::load(path)?;
            let labels_path = a
                .labels
                .as_deref()
                .ok_or_else(|| Error::Config("a matrix source needs --labels".into()))?;
            let labels = read_labels(labels_path, d.n())?;
            stability_experiment(
                ColumnSource::Matrix(&d),
                &labels,
                &fractions,
                cfg.trials,
                &stability,
            )?
        } else {
            let data = cfg.load_dataset()?;
            let labels = match (&a.labels, data.labels()) {
                (Some(p), _) => read_labels(p, data.len())?,
                (None, Some(l)) => l.to_vec(),
                (None, None) => {
                    return Err(Error::Config("dataset has no labels; pass --labels".into()))
                }
            };
            let source = ColumnSource::Measures(&data, cfg.workers());
            stability_experiment(source, &labels, &fractions, cfg.trials, &stability)?
        }
    };
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("accuracy.csv"), reports_to_csv(&reports))?;
    fs::write(
        a.out.join("summary.json"),
        reports_to_json(&reports)? + "\n",
    )?;
    fs::write(a.out.join("series.csv"), reports_to_series_csv(&reports))?;
    for r in &reports {
        println!(
            "{} fraction {} ({} columns): {:.4} ± {:.4}",
            r.classifier.name(),
            r.fraction,
            r.columns,
            r.mean,
            r.std
        );
    }
    Ok(())
}

fn budget(a: &BudgetArgs) -> Result<()> {
    println!("{}", budget_to_columns(a.n, a.rate)?);
    Ok(())
}

fn synth(a: &SynthArgs, cfg: &ExperimentConfig) -> Result<()> {
    if cfg.synthetic.is_none() {
        return Err(Error::Config("synth needs --synthetic".into()));
    }
    let data = cfg.load_dataset()?;
    save_dataset_dir(&data, &a.out)?;
    eprintln!(
        "synth: wrote {} measures to {}",
        data.len(),
        a.out.display()
    );
    Ok(())
}
