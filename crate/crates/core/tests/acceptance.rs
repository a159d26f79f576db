//! Acceptance criteria, one line each. Runs without the libtest harness so the
//! verdicts are always printed; exits nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use wassmatrix::classify::{stability_experiment, Classifier, ColumnSource, StabilityConfig};
use wassmatrix::embedding::mds;
use wassmatrix::linalg::{column_means, spectral_norm};
use wassmatrix::matrixio::{relative_error, DistanceMatrix, MatrixKind};
use wassmatrix::mc::{complete_mc, gradient, objective, GramFactor, McConfig};
use wassmatrix::measures::{synth_translation_family, DiscreteMeasure, SyntheticSpec};
use wassmatrix::nystrom::{complete_nystrom, procrustes_distance, ColumnBlock, NystromOptions};
use wassmatrix::ot::{w2_matrix, w2_squared, w2_squared_bruteforce, w2_squared_lp, MatrixPlan};
use wassmatrix::sampling::{
    budget_to_columns, sample_columns, sample_entries, PlanVariant, SamplePlan,
};
use wassmatrix::seed::{derive_seed, rng};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    DMatrix::from_fn(rows, cols, |_, _| r.sample::<f64, _>(StandardNormal))
}

fn edm(y: &DMatrix<f64>) -> DMatrix<f64> {
    let n = y.nrows();
    DMatrix::from_fn(n, n, |i, j| (y.row(i) - y.row(j)).norm_squared())
}

fn centered(y: &DMatrix<f64>) -> DMatrix<f64> {
    let m = column_means(y);
    DMatrix::from_fn(y.nrows(), y.ncols(), |i, k| y[(i, k)] - m[k])
}

fn entry_pairs(plan: &SamplePlan) -> Vec<(usize, usize)> {
    match plan.variant() {
        PlanVariant::Entries(p) => p.clone(),
        PlanVariant::Columns(_) => unreachable!("entry plan expected"),
    }
}

fn budget_arithmetic() -> Verdict {
    let cases = [
        (0.25, 268),
        (0.20, 211),
        (0.10, 103),
        (0.05, 51),
        (0.03, 30),
    ];
    let start = Instant::now();
    let got: Vec<usize> = cases
        .iter()
        .map(|&(g, _)| budget_to_columns(2000, g).unwrap())
        .collect();
    let elapsed = start.elapsed();
    let exact = cases.iter().zip(&got).all(|(&(_, want), &g)| g == want);
    verdict(
        exact && elapsed.as_secs_f64() < 1e-3,
        format!("columns {got:?}, {:.1} µs", elapsed.as_secs_f64() * 1e6),
    )
}

/// `∫₀¹ |F⁻¹(t) − G⁻¹(t)|² dt`, integrated over the merged quantile breakpoints.
fn quantile_closed_form(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let sorted = |m: &[(f64, f64)]| {
        let mut v = m.to_vec();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut acc = 0.0;
        v.into_iter()
            .map(|(x, w)| {
                acc += w;
                (x, acc)
            })
            .collect::<Vec<_>>()
    };
    let (fa, fb) = (sorted(a), sorted(b));
    let mut cuts: Vec<f64> = fa.iter().chain(&fb).map(|p| p.1.min(1.0)).collect();
    cuts.push(0.0);
    cuts.sort_by(f64::total_cmp);
    let inv = |f: &[(f64, f64)], t: f64| f.iter().find(|p| p.1 >= t).unwrap_or(f.last().unwrap()).0;
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let t = 0.5 * (w[0] + w[1]);
            (w[1] - w[0]) * (inv(&fa, t) - inv(&fb, t)).powi(2)
        })
        .sum()
}

fn ot_oracles() -> Verdict {
    let start = Instant::now();
    let mut r = rng(derive_seed(2, "acceptance/ot"));
    let mut worst_brute: f64 = 0.0;
    for _ in 0..200 {
        let m = r.random_range(1..=6);
        let dim = r.random_range(1..=3);
        let mut cloud = || {
            let pts: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..dim).map(|_| r.random_range(-5.0..5.0)).collect())
                .collect();
            DiscreteMeasure::uniform(pts).unwrap()
        };
        let (mu, nu) = (cloud(), cloud());
        let exact = w2_squared_bruteforce(&mu, &nu).unwrap();
        worst_brute = worst_brute
            .max((w2_squared(&mu, &nu).unwrap() - exact).abs())
            .max((w2_squared_lp(&mu, &nu).unwrap().0 - exact).abs());
    }
    let mut worst_line: f64 = 0.0;
    for _ in 0..200 {
        let mut side = || -> Vec<(f64, f64)> {
            let m = r.random_range(1..=20);
            let raw: Vec<(f64, f64)> = (0..m)
                .map(|_| (r.random_range(-10.0..10.0), r.random_range(0.1..1.0)))
                .collect();
            let total: f64 = raw.iter().map(|p| p.1).sum();
            raw.into_iter().map(|(x, w)| (x, w / total)).collect()
        };
        let (a, b) = (side(), side());
        let to_measure = |s: &[(f64, f64)]| {
            DiscreteMeasure::new(
                s.iter().map(|p| vec![p.0]).collect(),
                s.iter().map(|p| p.1).collect(),
            )
            .unwrap()
        };
        let (mu, nu) = (to_measure(&a), to_measure(&b));
        let exact = quantile_closed_form(&a, &b);
        worst_line = worst_line
            .max((w2_squared(&mu, &nu).unwrap() - exact).abs())
            .max((w2_squared_lp(&mu, &nu).unwrap().0 - exact).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst_brute <= 1e-9 && worst_line <= 1e-9 && secs < 10.0,
        format!("max deviation {worst_brute:.1e} (permutations), {worst_line:.1e} (quantiles), {secs:.2} s"),
    )
}

fn nystrom_exactness() -> Verdict {
    let start = Instant::now();
    let y = gaussian(200, 3, derive_seed(3, "acceptance/nystrom"));
    let yc = centered(&y);
    let truth = DistanceMatrix::full(edm(&y)).unwrap();
    let ynorm = spectral_norm(&yc);
    let mut good = 0;
    let mut worst = (0.0f64, 0.0f64);
    for t in 0..10 {
        let plan =
            sample_columns(200, 20, derive_seed(3, &format!("acceptance/nystrom/{t}"))).unwrap();
        let block = ColumnBlock::from_plan(&truth, &plan).unwrap();
        let Ok(est) = complete_nystrom(&block, &NystromOptions::default()) else {
            continue;
        };
        let rel = relative_error(&est, &truth).unwrap();
        let proc = procrustes_distance(&mds(&est, 3).unwrap().coords, &yc).unwrap() / ynorm;
        worst = (worst.0.max(rel), worst.1.max(proc));
        if rel <= 1e-8 && proc <= 1e-6 {
            good += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        good >= 9 && secs < 5.0,
        format!(
            "{good}/10 trials exact (worst rel {:.1e}, Procrustes/‖Y‖ {:.1e}), {secs:.2} s",
            worst.0, worst.1
        ),
    )
}

fn mc_completion() -> Verdict {
    let start = Instant::now();
    let mut good = 0;
    let mut errs = Vec::new();
    for t in 0..10 {
        let y = gaussian(100, 3, derive_seed(4, &format!("acceptance/mc/points/{t}")));
        let truth = DistanceMatrix::full(edm(&y)).unwrap();
        let plan = sample_entries(
            100,
            0.30,
            derive_seed(4, &format!("acceptance/mc/plan/{t}")),
        )
        .unwrap();
        let observed = DistanceMatrix::from_entries(
            100,
            entry_pairs(&plan)
                .into_iter()
                .map(|(i, j)| (i, j, truth.get(i, j))),
        )
        .unwrap();
        let cfg = McConfig {
            rank: 5,
            seed: derive_seed(4, &format!("acceptance/mc/init/{t}")),
            ..Default::default()
        };
        match complete_mc(&observed, &cfg) {
            Ok((est, report)) => {
                let rel = relative_error(&est, &truth).unwrap();
                errs.push(rel);
                if rel <= 1e-3 && report.iterations <= 30_000 {
                    good += 1;
                }
            }
            Err(_) => errs.push(f64::NAN),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let shown: Vec<String> = errs.iter().map(|e| format!("{e:.1e}")).collect();
    verdict(
        good >= 8 && secs < 60.0,
        format!(
            "{good}/10 trials within 1e-3 (errors {}), {secs:.2} s",
            shown.join(" ")
        ),
    )
}

fn gradient_check() -> Verdict {
    let start = Instant::now();
    let mut r = rng(derive_seed(5, "acceptance/gradient"));
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = r.random_range(4..=10);
        let q = r.random_range(1..=3);
        let factor = GramFactor::from_matrix(&DMatrix::from_fn(n, q, |_, _| {
            r.sample::<f64, _>(StandardNormal)
        }));
        let mut pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|_| r.random_bool(0.6))
            .collect();
        if pairs.is_empty() {
            pairs.push((0, 1));
        }
        let b: Vec<f64> = pairs.iter().map(|_| r.random_range(0.5..4.0)).collect();
        let lambda: Vec<f64> = pairs.iter().map(|_| r.random_range(-0.5..0.5)).collect();
        let analytic = gradient(&factor, &pairs, &b, &lambda).to_matrix();
        let x = factor.to_matrix();
        let h = 1e-5;
        let numeric = DMatrix::from_fn(n, q, |i, k| {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[(i, k)] += h;
            minus[(i, k)] -= h;
            let f = |m: &DMatrix<f64>| objective(&GramFactor::from_matrix(m), &pairs, &b, &lambda);
            (f(&plus) - f(&minus)) / (2.0 * h)
        });
        let rel = (&analytic - &numeric).norm() / numeric.norm().max(1e-12);
        worst = worst.max(rel);
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-5 && secs < 5.0,
        format!("worst relative deviation {worst:.1e} over 20 instances, {secs:.2} s"),
    )
}

fn fixed_budget_trend() -> Verdict {
    let start = Instant::now();
    // two-atom measure translated over a 20 × 10 unit grid
    let base = DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
    let shifts: Vec<Vec<f64>> = (0..20)
        .flat_map(|a| (0..10).map(move |b| vec![a as f64, b as f64]))
        .collect();
    let data = synth_translation_family(&base, &shifts).unwrap();
    let truth = w2_matrix(&data, MatrixPlan::Full, 4).unwrap();
    let n = data.len();
    let mut all_good = true;
    let mut lines = Vec::new();
    for gamma in [0.05, 0.10, 0.25] {
        let c = budget_to_columns(n, gamma).unwrap();
        let (mut ny, mut mc) = (0.0, 0.0);
        for s in 0..10u64 {
            let top = derive_seed(6, &format!("acceptance/trend/{gamma}/{s}"));
            let cols = sample_columns(n, c, derive_seed(top, "columns")).unwrap();
            let observed = w2_matrix(&data, MatrixPlan::Sampled(&cols), 4).unwrap();
            let est = complete_nystrom(
                &ColumnBlock::from_plan(&observed, &cols).unwrap(),
                &NystromOptions::default(),
            );
            ny += est.map_or(1.0, |e| relative_error(&e, &truth).unwrap());

            let entries = sample_entries(n, gamma, derive_seed(top, "entries")).unwrap();
            let observed = w2_matrix(&data, MatrixPlan::Sampled(&entries), 4).unwrap();
            let cfg = McConfig {
                seed: derive_seed(top, "mc"),
                ..Default::default()
            };
            mc += complete_mc(&observed, &cfg)
                .map_or(1.0, |(e, _)| relative_error(&e, &truth).unwrap());
        }
        let (ny, mc) = (ny / 10.0, mc / 10.0);
        all_good &= ny <= mc;
        lines.push(format!("γ={gamma} c={c}: Nyström {ny:.1e} vs MC {mc:.1e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        all_good && secs < 600.0,
        format!("{}, {secs:.1} s", lines.join("; ")),
    )
}

fn classification_stability() -> Verdict {
    let start = Instant::now();
    let data = SyntheticSpec::Classes { n: 300 }.generate(7).unwrap();
    let labels = data.labels().unwrap().to_vec();
    let cfg = StabilityConfig {
        classifiers: vec![Classifier::Knn1],
        seed: 7,
        ..Default::default()
    };
    let reports = stability_experiment(
        ColumnSource::Measures(&data, 4),
        &labels,
        &[0.2, 1.0],
        20,
        &cfg,
    )
    .unwrap();
    let (at20, full) = (reports[0].mean, reports[1].mean);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        (at20 - full).abs() <= 0.05 && secs < 600.0,
        format!(
            "1-NN mean accuracy {at20:.4} at 20% ({} columns) vs {full:.4} at 100%, {secs:.1} s",
            reports[0].columns
        ),
    )
}

fn mds_round_trip() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (k, d) in [1usize, 2, 5].into_iter().enumerate() {
        let y = gaussian(50, d, derive_seed(8, &format!("acceptance/mds/{k}")));
        let truth = DistanceMatrix::full(edm(&y)).unwrap();
        let z = mds(&truth, d).unwrap().coords;
        let back = edm(&z);
        worst = worst.max((&back - truth.values()).norm() / truth.values().norm());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-8 && secs < 2.0,
        format!("worst relative error {worst:.1e}, {secs:.3} s"),
    )
}

fn persistence() -> Verdict {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(derive_seed(9, "acceptance/persistence"));
    let mut ok = 0;
    for t in 0..100 {
        let n = r.random_range(1..=30);
        let kind = [MatrixKind::Full, MatrixKind::Partial, MatrixKind::Estimated][t % 3];
        let mut values = DMatrix::zeros(n, n);
        let mut mask = vec![true; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let observed = kind != MatrixKind::Partial || r.random_bool(0.4);
                let v = if observed {
                    r.random::<f64>() * 10f64.powi(r.random_range(-5..5))
                } else {
                    0.0
                };
                values[(i, j)] = v;
                values[(j, i)] = v;
                mask[i * n + j] = observed;
                mask[j * n + i] = observed;
            }
        }
        let m = DistanceMatrix::new(values, mask, kind).unwrap();
        let path = dir.path().join(format!("{t}.w2m"));
        m.save(&path).unwrap();
        let back = DistanceMatrix::load(&path).unwrap();
        let bitwise = back
            .values()
            .iter()
            .zip(m.values().iter())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        if bitwise && back == m && back.to_bytes() == std::fs::read(&path).unwrap() {
            ok += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        ok == 100 && secs < 5.0,
        format!("{ok}/100 bitwise round trips, {secs:.2} s"),
    )
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_wassmatrix"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

/// Every result file of the dist → complete → embed → classify chain, in a fixed order.
fn pipeline(dir: &Path, workers: usize) -> Option<Vec<(String, Vec<u8>)>> {
    let w = workers.to_string();
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let common = ["--workers", w.as_str(), "--seed", "11"];
    let steps: Vec<Vec<String>> = vec![
        vec!["synth", "--synthetic", "classes3:60", "--out", &p("data")],
        vec![
            "dist",
            "--dataset",
            &p("data"),
            "--full",
            "--out",
            &p("full.w2m"),
        ],
        vec![
            "dist",
            "--dataset",
            &p("data"),
            "--columns",
            "9",
            "--out",
            &p("cols.w2m"),
        ],
        vec![
            "dist",
            "--dataset",
            &p("data"),
            "--rate",
            "0.3",
            "--out",
            &p("entries.w2m"),
        ],
        vec![
            "complete",
            "--input",
            &p("cols.w2m"),
            "--algorithm",
            "nystrom",
            "--truth",
            &p("full.w2m"),
            "--out",
            &p("ny.w2m"),
        ],
        vec![
            "complete",
            "--input",
            &p("entries.w2m"),
            "--algorithm",
            "mc",
            "--set",
            "mc.max_outer_iters=20",
            "--out",
            &p("mc.w2m"),
        ],
        vec![
            "embed",
            "--input",
            &p("ny.w2m"),
            "--labels",
            &p("data/labels.csv"),
            "--out",
            &p("ny.csv"),
        ],
        vec![
            "embed",
            "--input",
            &p("mc.w2m"),
            "--dimension",
            "2",
            "--out",
            &p("mc.csv"),
        ],
        vec![
            "classify",
            "--embedding",
            &p("ny.csv"),
            "--out",
            &p("single"),
        ],
        vec![
            "classify",
            "--dataset",
            &p("data"),
            "--fractions",
            "0.15,1",
            "--trials",
            "4",
            "--out",
            &p("stability"),
        ],
    ]
    .into_iter()
    .map(|s| s.into_iter().map(String::from).collect())
    .collect();
    for s in &steps {
        let mut args: Vec<&str> = s.iter().map(String::as_str).collect();
        args.extend(common);
        if !run_cli(&args) {
            eprintln!("pipeline step failed: {args:?}");
            return None;
        }
    }
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).ok()? {
            let path = e.ok()?.path();
            if path.is_dir() {
                stack.push(path);
            } else if !path.to_string_lossy().ends_with(".timing.json") {
                let rel = path.strip_prefix(dir).ok()?.to_string_lossy().into_owned();
                files.push((rel, std::fs::read(&path).ok()?));
            }
        }
    }
    files.sort();
    Some(files)
}

fn determinism() -> Verdict {
    let start = Instant::now();
    let runs: Vec<Option<Vec<(String, Vec<u8>)>>> = [1usize, 8, 1, 8]
        .iter()
        .map(|&w| {
            let dir = tempfile::tempdir().unwrap();
            // paths end up in manifests, so every run uses the same directory name
            let root = dir.path().join("run");
            std::fs::create_dir(&root).unwrap();
            let out = pipeline(&root, w);
            let _ = std::fs::remove_dir_all(&root);
            out.map(|files| {
                files
                    .into_iter()
                    .map(|(name, bytes)| {
                        let text = String::from_utf8_lossy(&bytes)
                            .replace(&*dir.path().to_string_lossy(), "<tmp>");
                        (
                            name,
                            if std::str::from_utf8(&bytes).is_ok() {
                                text.into_bytes()
                            } else {
                                bytes
                            },
                        )
                    })
                    .collect()
            })
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let Some(first) = runs[0].as_ref() else {
        return verdict(false, "pipeline failed".into());
    };
    let same = runs.iter().all(|r| r.as_ref() == Some(first));
    verdict(
        same,
        format!(
            "{} result files identical across workers 1, 8, 1, 8: {same}, {secs:.1} s",
            first.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("budget arithmetic", budget_arithmetic),
        ("transport oracles", ot_oracles),
        ("Nyström exactness", nystrom_exactness),
        ("completion property", mc_completion),
        ("gradient check", gradient_check),
        ("fixed-budget trend", fixed_budget_trend),
        ("classification stability", classification_stability),
        ("MDS round trip", mds_round_trip),
        ("persistence", persistence),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = (k + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let v = run();
        println!(
            "criterion {id:>2} {:<26} {}  {}",
            name,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
