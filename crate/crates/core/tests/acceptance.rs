//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::*;
use embedlens::classify::{centroid_accuracy, knn_classify};
use embedlens::cli::{main_with_args, strip_timestamp};
use embedlens::dataset::{ClassLabel, EmbeddingSet};
use embedlens::geometry::unit_normalize;
use embedlens::metrics::{
    centroid_shift, class_centroid_distance, frechet_distance, set_centroid_distance, MeanTerm,
};
use embedlens::promptgen::{assemble, generate_prompt_set, ModifierLexicon, PromptChoices};
use embedlens::separability::train_linear_probe;
use embedlens::simulator::{apply_modality_gap, random_direction, simulate, simulate_experiment, ClusterSpec};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn spec(seed: u64, spread: f64, shift_degrees: f64) -> ClusterSpec {
    ClusterSpec {
        dimension: 16,
        classes: 10,
        samples: 200,
        spread,
        shift_degrees,
        outlier_fraction: 0.0,
        seed,
    }
}

fn formula_oracle() -> Outcome {
    let start = Instant::now();
    let dims = [2usize, 8, 16];
    let mut checks = 0usize;
    for i in 0..120u64 {
        let dim = dims[i as usize % 3];
        let (refs, queries) = random_instance(1000 + i, dim, None);
        for ((id, rows), (_, qrows)) in class_rows(&refs).iter().zip(class_rows(&queries)) {
            let cd = class_centroid_distance(refs.class(*id).unwrap().rows()).map_err(|e| e.to_string())?;
            ensure(rel_close(cd, centroid_distance(rows), 1e-9), || {
                format!("instance {i} class {id}: centroid distance {cd} vs {}", centroid_distance(rows))
            })?;
            let sh = centroid_shift(
                refs.class(*id).unwrap().rows(),
                queries.class(*id).unwrap().rows(),
            )
            .map_err(|e| e.to_string())?;
            ensure(rel_close(sh, shift(rows, &qrows), 1e-9), || {
                format!("instance {i} class {id}: shift {sh} vs {}", shift(rows, &qrows))
            })?;
            checks += 2;
        }
        let got: Vec<u32> = centroid_accuracy(&refs, &queries, i)
            .map_err(|e| e.to_string())?
            .predictions
            .iter()
            .map(|p| p.predicted_class)
            .collect();
        ensure(got == centroid_predictions(&refs, &queries), || format!("instance {i}: centroid predictions differ"))?;
        let k = 1 + (i as usize % 5).min(refs.len() - 1);
        let got: Vec<u32> = knn_classify(&refs, &queries, k, i)
            .map_err(|e| e.to_string())?
            .predictions
            .iter()
            .map(|p| p.predicted_class)
            .collect();
        ensure(got == knn_predictions(&refs, &queries, k), || format!("instance {i}: knn{k} predictions differ"))?;
        checks += 2;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("120 instances, {checks} checks, {elapsed:.2?}"))
}

fn closed_form_simulator() -> Outcome {
    let mut worst_shift = 0.0f64;
    let mut worst_cd = 0.0f64;
    for theta in [0.0f64, 30.0, 60.0, 90.0] {
        let (refs, queries) = simulate_experiment(&spec(11, 0.0, theta)).map_err(|e| e.to_string())?;
        let expected = 1.0 - theta.to_radians().cos();
        for c in refs.classes() {
            let q = queries.class(c.id()).unwrap();
            let s = centroid_shift(c.rows(), q.rows()).map_err(|e| e.to_string())?;
            worst_shift = worst_shift.max((s - expected).abs());
            worst_cd = worst_cd
                .max(class_centroid_distance(c.rows()).map_err(|e| e.to_string())?)
                .max(class_centroid_distance(q.rows()).map_err(|e| e.to_string())?);
        }
    }
    ensure(worst_shift <= 1e-9, || format!("shift error {worst_shift:e}"))?;
    ensure(worst_cd <= 1e-12, || format!("centroid distance {worst_cd:e}"))?;
    Ok(format!("max shift error {worst_shift:.1e}, max centroid distance {worst_cd:.1e}"))
}

fn monotonicity() -> Outcome {
    let spreads = [0.0, 0.05, 0.1, 0.2, 0.4];
    let mut cds = Vec::new();
    for &sigma in &spreads {
        let mut total = 0.0;
        for seed in 0..10 {
            let (refs, _) = simulate_experiment(&spec(seed, sigma, 0.0)).map_err(|e| e.to_string())?;
            total += set_centroid_distance(&refs).map_err(|e| e.to_string())?.set_centroid_distance;
        }
        cds.push(total / 10.0);
    }
    ensure(cds.windows(2).all(|w| w[0] < w[1]), || format!("centroid distance not increasing: {cds:?}"))?;

    let mean_accuracy = |theta: f64| -> Result<f64, String> {
        let mut total = 0.0;
        for seed in 0..10 {
            let (refs, queries) = simulate_experiment(&spec(seed, 0.1, theta)).map_err(|e| e.to_string())?;
            total += centroid_accuracy(&refs, &queries, seed).map_err(|e| e.to_string())?.accuracy;
        }
        Ok(total / 10.0)
    };
    let (a0, a60) = (mean_accuracy(0.0)?, mean_accuracy(60.0)?);
    ensure(a0 > a60, || format!("accuracy at 0 deg {a0} not above 60 deg {a60}"))?;
    Ok(format!(
        "centroid distance {:?}; accuracy 0 deg {a0:.4} > 60 deg {a60:.4}",
        cds.iter().map(|x| format!("{x:.5}")).collect::<Vec<_>>()
    ))
}

fn singleton_equivalence() -> Outcome {
    let mut queries_checked = 0;
    for i in 0..50u64 {
        let (refs, queries) = random_instance(5000 + i, [2, 8, 16][i as usize % 3], Some(1));
        let c = centroid_accuracy(&refs, &queries, i).map_err(|e| e.to_string())?;
        let k = knn_classify(&refs, &queries, 1, i).map_err(|e| e.to_string())?;
        for (a, b) in c.predictions.iter().zip(&k.predictions) {
            ensure(a.predicted_class == b.predicted_class, || {
                format!("instance {i} query {}: {} vs {}", a.query_index, a.predicted_class, b.predicted_class)
            })?;
        }
        queries_checked += c.predictions.len();
    }
    Ok(format!("50 instances, {queries_checked} queries identical"))
}

fn knn_outliers() -> Outcome {
    let (mut k1, mut k5) = (0.0, 0.0);
    for seed in 0..10 {
        let s = ClusterSpec {
            outlier_fraction: 0.1,
            ..spec(seed, 0.2, 0.0)
        };
        let (refs, queries) = simulate_experiment(&s).map_err(|e| e.to_string())?;
        k1 += knn_classify(&refs, &queries, 1, seed).map_err(|e| e.to_string())?.accuracy / 10.0;
        k5 += knn_classify(&refs, &queries, 5, seed).map_err(|e| e.to_string())?.accuracy / 10.0;
    }
    ensure(k5 >= k1, || format!("knn5 {k5} < knn1 {k1}"))?;
    Ok(format!("knn5 {k5:.4} >= knn1 {k1:.4}"))
}

fn frechet_sanity() -> Outcome {
    let (refs, _) = simulate_experiment(&spec(3, 0.1, 0.0)).map_err(|e| e.to_string())?;
    let self_fd = frechet_distance(refs.rows(), refs.rows(), MeanTerm::Squared).map_err(|e| e.to_string())?;
    ensure(self_fd.total <= 1e-6, || format!("FD(x,x) = {:e}", self_fd.total))?;

    // x = {-1, 1, 0}: mean 0, var 1. y = {1, 5, 3}: mean 3, var 4.
    // FD = 9 + 1 + 4 - 2*2 = 10.
    let x = [[-1.0], [1.0], [0.0]];
    let y = [[1.0], [5.0], [3.0]];
    let fd = frechet_distance(x.iter().map(|r| &r[..]), y.iter().map(|r| &r[..]), MeanTerm::Squared)
        .map_err(|e| e.to_string())?;
    ensure((fd.total - 10.0).abs() <= 1e-9, || format!("univariate FD {} != 10", fd.total))?;
    let fd_abs = frechet_distance(x.iter().map(|r| &r[..]), y.iter().map(|r| &r[..]), MeanTerm::Absolute)
        .map_err(|e| e.to_string())?;
    ensure((fd_abs.total - 4.0).abs() <= 1e-9, || format!("univariate |mean| FD {} != 4", fd_abs.total))?;

    let fd_at = |theta: f64| -> Result<f64, String> {
        let (r, q) = simulate_experiment(&spec(3, 0.1, theta)).map_err(|e| e.to_string())?;
        Ok(frechet_distance(r.rows(), q.rows(), MeanTerm::Squared).map_err(|e| e.to_string())?.total)
    };
    let (f0, f90) = (fd_at(0.0)?, fd_at(90.0)?);
    ensure(f0 < f90, || format!("FD at 0 deg {f0} not below 90 deg {f90}"))?;
    Ok(format!("FD(x,x) {:.1e}; univariate 10 and 4; 0 deg {f0:.4} < 90 deg {f90:.4}", self_fd.total))
}

/// Spread of the clusters used for the separability check.
const SEPARABILITY_SPREAD: f64 = 0.05;

fn separability() -> Outcome {
    let sim = simulate(&ClusterSpec {
        dimension: 16,
        classes: 10,
        samples: 100,
        spread: SEPARABILITY_SPREAD,
        shift_degrees: 0.0,
        outlier_fraction: 0.0,
        seed: 21,
    })
    .map_err(|e| e.to_string())?;
    let direction = random_direction(16, 99);
    let gapped = apply_modality_gap(&sim.queries, &direction, 0.5).map_err(|e| e.to_string())?;
    let unit_rows = |s: &EmbeddingSet| -> Vec<Vec<f64>> {
        s.rows().map(|r| unit_normalize(r).unwrap().into_vec()).collect()
    };
    let (a, b) = (unit_rows(&sim.references), unit_rows(&gapped));
    let probe = train_linear_probe(&a, &b, 1000, 0).map_err(|e| e.to_string())?;
    ensure(probe.separable && probe.epochs < 1000, || {
        format!("not separated: accuracy {} after {} epochs", probe.training_accuracy, probe.epochs)
    })?;
    let errors = a.iter().filter(|x| probe.score(x) <= 0.0).count() + b.iter().filter(|x| probe.score(x) >= 0.0).count();
    ensure(errors == 0, || format!("{errors} points on the wrong side"))?;

    let mut pooled = a.clone();
    pooled.shuffle(&mut ChaCha8Rng::seed_from_u64(4));
    let (left, right) = pooled.split_at(pooled.len() / 2);
    let shuffled = train_linear_probe(left, right, 1000, 0).map_err(|e| e.to_string())?;
    ensure(!shuffled.separable, || "label-shuffled copy reported separable".into())?;
    Ok(format!(
        "gap separated in {} epochs (margin {:.2e}); shuffled copy accuracy {:.3}",
        probe.epochs, probe.margin, shuffled.training_accuracy
    ))
}

fn prompt_fidelity() -> Outcome {
    let lexicon = ModifierLexicon::default();
    let expected = [
        (
            PromptChoices::new("beautiful", "", "common", "extremely", "small", "with many other other objects visible", "Hyper-sharp"),
            "beautiful, common, extremely small quail, with many other other objects visible. Hyper-sharp.",
        ),
        (
            PromptChoices::new("old", "", "common", "extremely", "large size", "centered in the image", "Typical snapshot"),
            "old, common, extremely large size quail, centered in the image. Typical snapshot.",
        ),
        (
            PromptChoices::new("ugly", "extremely", "uncommon", "slightly", "small size", "centered in the image", "Hyper-sharp"),
            "ugly, extremely uncommon, slightly small size quail, centered in the image. Hyper-sharp.",
        ),
    ];
    for (choices, text) in &expected {
        for (slot, value, options) in [
            ("looks", &choices.looks, &lexicon.looks),
            ("extent", &choices.extent1, &lexicon.extent),
            ("typical", &choices.typical, &lexicon.typical),
            ("extent", &choices.extent2, &lexicon.extent),
            ("size", &choices.size, &lexicon.size),
            ("location", &choices.location, &lexicon.location),
            ("style", &choices.style, &lexicon.style),
        ] {
            ensure(options.contains(value), || format!("default lexicon lacks {slot} `{value}`"))?;
        }
        let got = assemble("quail", choices);
        ensure(got == *text, || format!("`{got}` != `{text}`"))?;
    }

    let classes: Vec<ClassLabel> = (0..10)
        .map(|i| ClassLabel {
            id: i,
            name: format!("class {i}"),
        })
        .collect();
    let start = Instant::now();
    let records = generate_prompt_set(&classes, 1250, &lexicon, 7).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(records.len() == 12_500, || format!("{} records", records.len()))?;
    for c in &classes {
        let mut prompts: Vec<&str> = records.iter().filter(|r| r.class_id == c.id).map(|r| r.prompt.as_str()).collect();
        let n = prompts.len();
        prompts.sort_unstable();
        prompts.dedup();
        ensure(prompts.len() == n, || format!("class {} has {} duplicates", c.id, n - prompts.len()))?;
    }
    ensure(elapsed < Duration::from_secs(10), || format!("generation took {elapsed:?}"))?;
    Ok(format!("3 quail prompts exact; 12500 unique-per-class prompts in {elapsed:.2?}"))
}

fn cli(args: &[String]) -> Result<(), String> {
    let mut full = vec!["embedlens".to_string()];
    full.extend(args.iter().cloned());
    match main_with_args(&full) {
        0 => Ok(()),
        code => Err(format!("`{}` exited {code}", args.join(" "))),
    }
}

fn p(path: &Path) -> String {
    path.to_str().unwrap().to_string()
}

fn same_report(a: &Path, b: &Path) -> Result<(), String> {
    let read = |x: &Path| fs::read(x).map_err(|e| format!("{}: {e}", x.display()));
    let (ra, rb) = (read(a)?, read(b)?);
    let equal = match (std::str::from_utf8(&ra), std::str::from_utf8(&rb)) {
        (Ok(x), Ok(y)) => strip_timestamp(x) == strip_timestamp(y),
        _ => ra == rb,
    };
    ensure(equal, || format!("{} differs from {}", b.display(), a.display()))
}

fn same_dir(a: &Path, b: &Path) -> Result<(), String> {
    let mut names: Vec<PathBuf> = fs::read_dir(a).map_err(|e| e.to_string())?.map(|e| e.unwrap().path()).collect();
    names.sort();
    for n in names {
        same_report(&n, &b.join(n.file_name().unwrap()))?;
    }
    Ok(())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let t = |name: &str| tmp.path().join(name);
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();

    cli(&s(&["simulate", "--seed", "4", "--classes", "5", "--samples", "30", "--out", &p(&t("sim"))]))?;
    cli(&s(&["simulate", "--seed", "4", "--classes", "5", "--samples", "30", "--shift-degrees", "60", "--gap-offset", "0.3", "--out", &p(&t("synth"))]))?;
    let refs = p(&t("sim").join("ref.json"));
    let natural = p(&t("sim").join("query.json"));
    let synthetic = p(&t("synth").join("query.json"));
    fs::write(t("classes.json"), r#"[{"id": 1, "name": "quail"}, {"id": 2, "name": "school bus"}]"#).map_err(|e| e.to_string())?;

    let file_commands: Vec<(&str, Vec<String>)> = vec![
        ("validate.csv", s(&["validate", &refs, &natural])),
        ("metrics.json", s(&["metrics", &refs, &natural, "--format", "json"])),
        ("metrics.csv", s(&["metrics", &refs, &synthetic])),
        ("matrix.csv", s(&["matrix", &refs, &natural, &synthetic, "--methods", "centroid,knn1,knn5", "--seed", "8"])),
        ("matrix.json", s(&["matrix", &refs, &natural, "--format", "json"])),
        ("diagnose.csv", s(&["diagnose", "--refs", &refs, "--natural", &natural, "--synthetic", &synthetic])),
        ("separability.json", s(&["separability", &natural, &synthetic, "--seed", "2"])),
        ("similarity.csv", s(&["similarity", &refs, &natural, &synthetic])),
        ("prompts.jsonl", s(&["promptgen", "--classes", &p(&t("classes.json")), "--per-class", "20", "--seed", "3"])),
    ];
    let mut count = 0;
    for (name, mut args) in file_commands {
        let first = t(name);
        args.extend(s(&["--out", &p(&first)]));
        cli(&args)?;
        let embedded = if name.ends_with(".jsonl") {
            t(&format!("{name}.run.json"))
        } else {
            first.clone()
        };
        let second = t(&format!("rerun-{name}"));
        cli(&s(&["rerun", &p(&embedded), "--out", &p(&second)]))?;
        same_report(&first, &second)?;
        if name.ends_with(".jsonl") {
            same_report(&embedded, &t(&format!("rerun-{name}.run.json")))?;
        }
        count += 1;
    }

    cli(&s(&["split", &refs, "--eval-fraction", "0.2", "--seed", "6", "--out", &p(&t("split"))]))?;
    for dir in ["sim", "synth", "split"] {
        cli(&s(&["rerun", &p(&t(dir).join("run.json")), "--out", &p(&t(&format!("rerun-{dir}")))]))?;
        same_dir(&t(dir), &t(&format!("rerun-{dir}")))?;
        count += 1;
    }
    Ok(format!("{count} reports reproduced from their embedded configuration"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("formula oracle", formula_oracle),
        ("closed-form simulator", closed_form_simulator),
        ("monotonicity", monotonicity),
        ("singleton equivalence", singleton_equivalence),
        ("knn with outliers", knn_outliers),
        ("frechet sanity", frechet_sanity),
        ("separability certificate", separability),
        ("prompt fidelity", prompt_fidelity),
        ("cli determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name:<26} {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<26} {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
