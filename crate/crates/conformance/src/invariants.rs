//! Quantified properties, each with a fixed seed and sampling budget.

use std::f64::consts::LN_2;
use std::fs;

use rand::Rng;
use sparse_softmax::analysis::{required_spread, sparse_contrast, verify_necessary_condition, VerifyConfig};
use sparse_softmax::rng::trial_rng;
use sparse_softmax_trainer::{
    f1_scores, generate_dataset, train, DatasetParams, LossKind, Model, ModelConfig, OptimizerConfig,
    SyntheticDataset, TrainConfig, TrainOutcome,
};

use crate::cases::max_abs_diff;
use crate::kernels::Kernels;
use crate::oracles::{self, FD_STEP};
use crate::report::Observation;

pub struct Invariant {
    pub id: &'static str,
    pub statement: &'static str,
    pub budget: &'static str,
    pub tolerance: f64,
    pub check: fn(&dyn Kernels) -> Observation,
}

pub fn registry() -> Vec<Invariant> {
    vec![
        Invariant {
            id: "core.invariant.normalization",
            statement: "sparse_softmax sums to 1 and has min(k, d) nonzeros unless exponentials underflow",
            budget: "2000 vectors, d in 1..=300, k in 1..=d+2",
            tolerance: 1e-12,
            check: normalization,
        },
        Invariant {
            id: "core.invariant.reduction",
            statement: "k >= d gives softmax elementwise",
            budget: "2000 vectors, d in 2..=1000",
            tolerance: 1e-15,
            check: reduction,
        },
        Invariant {
            id: "core.invariant.sub_vector",
            statement: "nonzero entries equal softmax of the top-k sub-vector",
            budget: "d in 1..=20, every k, 50 vectors per d",
            tolerance: 1e-14,
            check: sub_vector,
        },
        Invariant {
            id: "core.invariant.argmax",
            statement: "argmax of sparse_softmax equals argmax of softmax, lowest index on ties",
            budget: "2000 tie-heavy vectors",
            tolerance: 0.0,
            check: argmax_preserved,
        },
        Invariant {
            id: "core.invariant.shift",
            statement: "adding a constant leaves sparse_softmax and the support unchanged",
            budget: "2000 dyadic vectors, integer shifts up to 1000",
            tolerance: 1e-15,
            check: shift,
        },
        Invariant {
            id: "core.invariant.loss_ordering",
            statement: "sparse_ce_loss <= ce_loss",
            budget: "10000 (z, t, k, policy) draws",
            tolerance: 1e-12,
            check: loss_ordering,
        },
        Invariant {
            id: "core.invariant.gradient",
            statement: "analytic gradients of both losses match central differences (h = 1e-5)",
            budget: "500 draws with all pairwise gaps > 1e-3",
            tolerance: 1e-5,
            check: gradient,
        },
        Invariant {
            id: "core.invariant.zero_sum",
            statement: "gradients sum to 0 when the target is in the support",
            budget: "2000 draws",
            tolerance: 1e-10,
            check: zero_sum,
        },
        Invariant {
            id: "analysis.invariant.theorem",
            statement: "spread below the bound implies loss above epsilon",
            budget: "n in {10, 101, 1000}, 100000 trials each",
            tolerance: 0.0,
            check: theorem,
        },
        Invariant {
            id: "analysis.invariant.monotonicity",
            statement: "required_spread increases in n and decreases in epsilon",
            budget: "n in 2..=500, 8 epsilons",
            tolerance: 0.0,
            check: monotonicity,
        },
        Invariant {
            id: "analysis.invariant.sparse_contrast",
            statement: "top-k spread of log(k - 1) + margin meets log 2 for the sparse loss but not for CE",
            budget: "5 (n, k) pairs",
            tolerance: 0.0,
            check: contrast,
        },
        Invariant {
            id: "trainer.invariant.determinism",
            statement: "identical records and parameters across runs and thread counts",
            budget: "1 run on 1 and 4 threads",
            tolerance: 0.0,
            check: determinism,
        },
        Invariant {
            id: "trainer.invariant.reduction",
            statement: "k = n_classes reproduces the softmax loss trajectory",
            budget: "30 classes, 4 epochs",
            tolerance: 1e-10,
            check: training_reduction,
        },
        Invariant {
            id: "trainer.invariant.loss_ordering",
            statement: "per-epoch mean sparse loss <= mean CE of the same model state",
            budget: "40 classes, k = 5, both policies, 4 epochs",
            tolerance: 1e-12,
            check: lifted_ordering,
        },
        Invariant {
            id: "trainer.invariant.f1_bounds",
            statement: "F1 scores lie in [0, 1], micro F1 is accuracy, both match hand counts",
            budget: "500 random label/prediction vectors",
            tolerance: 0.0,
            check: f1_bounds,
        },
        Invariant {
            id: "trainer.invariant.sgd_descent",
            statement: "noiseless data, linear model, SGD lr 0.01: epoch loss never increases",
            budget: "150 classes, 15 epochs",
            tolerance: 0.0,
            check: sgd_descent,
        },
        Invariant {
            id: "cli.invariant.rerun",
            statement: "rerunning from a manifest gives byte-identical CSVs",
            budget: "one train and one sweep-k run",
            tolerance: 0.0,
            check: rerun,
        },
        Invariant {
            id: "cli.invariant.exit_status",
            statement: "exit status is 0 iff the asserted properties held",
            budget: "one passing and one failing run",
            tolerance: 0.0,
            check: exit_status,
        },
    ]
}

fn draw_logits<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    match rng.random_range(0..4) {
        // Small integers: plenty of ties.
        0 => (0..d).map(|_| rng.random_range(-3..=3) as f64).collect(),
        1 => {
            let s = rng.random_range(0.1..20.0);
            (0..d).map(|_| rng.random_range(-s..s)).collect()
        }
        2 => {
            let c = rng.random_range(-1e4..1e4);
            (0..d).map(|_| c + rng.random_range(-5.0..5.0)).collect()
        }
        _ => (0..d).map(|_| rng.random_range(-800.0..800.0)).collect(),
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn summary(error: f64, violations: usize, expected: &str) -> Observation {
    let err = if violations > 0 { f64::INFINITY } else { error };
    Observation::new(err, expected, format!("max error {error:e}, {violations} structural violations"))
}

fn normalization(k: &dyn Kernels) -> Observation {
    let (mut error, mut violations) = (0.0f64, 0);
    for trial in 0..2000 {
        let mut rng = trial_rng(101, trial);
        let d = rng.random_range(1..=300);
        let kk = rng.random_range(1..=d + 2);
        let z = draw_logits(&mut rng, d);
        let p = k.sparse_softmax(&z, kk);
        error = error.max((p.iter().sum::<f64>() - 1.0).abs());
        let support = oracles::brute_top_k(&z, kk);
        // A support entry may only vanish if its probability underflows.
        let reference = oracles::softmax_over(&z, &support);
        let outside = (0..d).any(|i| p[i] != 0.0 && support.binary_search(&i).is_err());
        let missing = support.iter().any(|&i| p[i] == 0.0 && reference[i] != 0.0);
        if p.len() != d || outside || missing {
            violations += 1;
        }
    }
    summary(error, violations, "|sum - 1| <= 1e-12, support exactly the top k")
}

fn reduction(k: &dyn Kernels) -> Observation {
    let mut error = 0.0f64;
    for trial in 0..2000 {
        let mut rng = trial_rng(102, trial);
        let d = rng.random_range(2..=1000);
        let z = draw_logits(&mut rng, d);
        let kk = d + rng.random_range(0..3);
        error = error.max(max_abs_diff(&k.sparse_softmax(&z, kk), &k.softmax(&z)));
    }
    summary(error, 0, "max |sparse_softmax(z, d) - softmax(z)| <= 1e-15")
}

fn sub_vector(k: &dyn Kernels) -> Observation {
    let mut error = 0.0f64;
    for d in 1..=20usize {
        for trial in 0..50 {
            let mut rng = trial_rng(103, (d * 1000 + trial) as u64);
            let z = draw_logits(&mut rng, d);
            for kk in 1..=d {
                error = error.max(max_abs_diff(&k.sparse_softmax(&z, kk), &oracles::subvector_softmax(&z, kk)));
            }
        }
    }
    summary(error, 0, "max deviation from the sub-vector oracle <= 1e-14")
}

fn argmax_preserved(k: &dyn Kernels) -> Observation {
    let mut violations = 0;
    for trial in 0..2000 {
        let mut rng = trial_rng(104, trial);
        let d = rng.random_range(1..=40);
        let z: Vec<f64> = (0..d).map(|_| rng.random_range(-2..=2) as f64).collect();
        let kk = rng.random_range(1..=d);
        if argmax(&k.sparse_softmax(&z, kk)) != argmax(&k.softmax(&z)) {
            violations += 1;
        }
    }
    Observation::new(violations as f64, "0 mismatches", format!("{violations} mismatches"))
}


fn shift(k: &dyn Kernels) -> Observation {
    let (mut error, mut violations) = (0.0f64, 0);
    for trial in 0..2000 {
        let mut rng = trial_rng(105, trial);
        let d = rng.random_range(1..=60);
        let z: Vec<f64> = (0..d).map(|_| rng.random_range(-200..=200) as f64 / 4.0).collect();
        let c = rng.random_range(-1000..=1000) as f64;
        let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
        let kk = rng.random_range(1..=d);
        error = error.max(max_abs_diff(&k.sparse_softmax(&z, kk), &k.sparse_softmax(&shifted, kk)));
        if k.top_k(&z, kk) != k.top_k(&shifted, kk) {
            violations += 1;
        }
    }
    summary(error, violations, "identical output and support after a shift")
}

fn loss_ordering(k: &dyn Kernels) -> Observation {
    let mut excess = 0.0f64;
    for trial in 0..10_000 {
        let mut rng = trial_rng(106, trial);
        let d = rng.random_range(1..=200);
        let z = draw_logits(&mut rng, d);
        let t = rng.random_range(0..d);
        let kk = rng.random_range(1..=d);
        let force = rng.random_bool(0.5);
        excess = excess.max(k.sparse_ce_loss(&z, t, kk, force).loss - k.ce_loss(&z, t).loss);
    }
    Observation::new(excess.max(0.0), "sparse - full <= 1e-12", format!("max sparse - full = {excess:e}"))
}

fn gradient(k: &dyn Kernels) -> Observation {
    let (mut error, mut accepted, mut trial) = (0.0f64, 0, 0u64);
    while accepted < 500 {
        let mut rng = trial_rng(107, trial);
        trial += 1;
        let d = rng.random_range(2..=30);
        let scale = rng.random_range(1.0..10.0);
        let z: Vec<f64> = (0..d).map(|_| rng.random_range(-scale..scale)).collect();
        if oracles::min_pairwise_gap(&z) <= 1e-3 {
            continue;
        }
        accepted += 1;
        let t = rng.random_range(0..d);
        let kk = rng.random_range(1..=d);
        let force = rng.random_bool(0.5);
        let ce_fd = oracles::central_difference(|x| k.ce_loss(x, t).loss, &z, FD_STEP);
        let sp_fd = oracles::central_difference(|x| k.sparse_ce_loss(x, t, kk, force).loss, &z, FD_STEP);
        error = error
            .max(oracles::relative_error(&k.ce_loss(&z, t).gradient, &ce_fd))
            .max(oracles::relative_error(&k.sparse_ce_loss(&z, t, kk, force).gradient, &sp_fd));
    }
    summary(error, 0, "relative error < 1e-5")
}

fn zero_sum(k: &dyn Kernels) -> Observation {
    let mut error = 0.0f64;
    for trial in 0..2000 {
        let mut rng = trial_rng(108, trial);
        let d = rng.random_range(1..=200);
        let z = draw_logits(&mut rng, d);
        let t = rng.random_range(0..d);
        let kk = rng.random_range(1..=d);
        error = error.max(k.ce_loss(&z, t).gradient.iter().sum::<f64>().abs());
        error = error.max(k.sparse_ce_loss(&z, t, kk, true).gradient.iter().sum::<f64>().abs());
        if oracles::brute_top_k(&z, kk).contains(&t) {
            error = error.max(k.sparse_ce_loss(&z, t, kk, false).gradient.iter().sum::<f64>().abs());
        }
    }
    summary(error, 0, "|sum of gradient| <= 1e-10")
}

fn theorem(_: &dyn Kernels) -> Observation {
    let mut counterexamples = 0;
    let mut shown = Vec::new();
    for n in [10, 101, 1000] {
        match verify_necessary_condition(&VerifyConfig::new(n, LN_2, 100_000, 2024)) {
            Ok(r) => {
                counterexamples += r.counterexamples;
                shown.push(format!("n={n}: {}", r.counterexamples));
            }
            Err(e) => return Observation::error("0 counterexamples", e),
        }
    }
    Observation::new(counterexamples as f64, "0 counterexamples", shown.join(", "))
}

fn monotonicity(_: &dyn Kernels) -> Observation {
    let eps = [0.01, 0.1, 0.3, 0.5, LN_2, 1.0, 2.0, 5.0];
    let mut violations = 0;
    for &e in &eps {
        for n in 2..500 {
            match (required_spread(e, n), required_spread(e, n + 1)) {
                (Ok(a), Ok(b)) if b > a => {}
                _ => violations += 1,
            }
        }
    }
    for w in eps.windows(2) {
        for n in [2, 3, 10, 101, 1000, 10_000] {
            match (required_spread(w[0], n), required_spread(w[1], n)) {
                (Ok(a), Ok(b)) if b < a => {}
                _ => violations += 1,
            }
        }
    }
    Observation::new(violations as f64, "0 violations", format!("{violations} violations"))
}

fn contrast(_: &dyn Kernels) -> Observation {
    let mut violations = 0;
    for (n, kk) in [(101, 10), (1000, 20), (150, 2), (50, 5), (1000, 100)] {
        match sparse_contrast(n, kk, 0.5) {
            Ok(c) if c.sparse_loss <= LN_2 && c.full_loss > LN_2 => {}
            _ => violations += 1,
        }
    }
    Observation::new(violations as f64, "0 violations", format!("{violations} violations"))
}

fn data(n_classes: usize, feature_dim: usize, spc: usize, noise: f64, seed: u64) -> Result<SyntheticDataset, String> {
    generate_dataset(DatasetParams {
        n_classes,
        feature_dim,
        samples_per_class: spc,
        noise_scale: noise,
        seed,
    })
    .map_err(|e| e.to_string())
}

fn config(loss: LossKind, epochs: usize, batch_size: usize) -> TrainConfig {
    TrainConfig {
        loss,
        epochs,
        batch_size,
        record_wall_time: false,
        ..TrainConfig::default()
    }
}

fn fit(data: &SyntheticDataset, config: &TrainConfig) -> Result<TrainOutcome, String> {
    let model = Model::new(ModelConfig::Linear, data.feature_dim(), data.n_classes(), config.seed)
        .map_err(|e| e.to_string())?;
    train(model, data, config).map_err(|e| e.to_string())
}

fn determinism(_: &dyn Kernels) -> Observation {
    let run = |threads: usize| -> Result<TrainOutcome, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        pool.install(|| fit(&data(30, 16, 20, 1.0, 5)?, &config(LossKind::Sparse { k: 5 }, 3, 32)))
    };
    match (run(1), run(1), run(4)) {
        (Ok(a), Ok(b), Ok(c)) => {
            let diffs = [&b, &c].iter().filter(|o| o.records != a.records || o.model != a.model).count();
            Observation::new(diffs as f64, "identical", format!("{diffs} differing runs"))
        }
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => Observation::error("identical", e),
    }
}

fn training_reduction(_: &dyn Kernels) -> Observation {
    let result = (|| -> Result<f64, String> {
        let d = data(30, 16, 20, 1.0, 6)?;
        let a = fit(&d, &config(LossKind::Softmax, 4, 32))?;
        let b = fit(&d, &config(LossKind::Sparse { k: 30 }, 4, 32))?;
        let losses = |o: &TrainOutcome| o.records.iter().map(|r| r.mean_train_loss).collect::<Vec<_>>();
        Ok(max_abs_diff(&losses(&a), &losses(&b)))
    })();
    match result {
        Ok(gap) => Observation::new(gap, "per-epoch gap <= 1e-10", format!("max gap {gap:e}")),
        Err(e) => Observation::error("per-epoch gap <= 1e-10", e),
    }
}

fn lifted_ordering(_: &dyn Kernels) -> Observation {
    let result = (|| -> Result<f64, String> {
        let d = data(40, 16, 15, 1.0, 8)?;
        let mut excess = f64::NEG_INFINITY;
        for force in [false, true] {
            let mut cfg = config(LossKind::Sparse { k: 5 }, 4, 32);
            cfg.target_policy = sparse_softmax::TargetPolicy::from_flag(force);
            for r in fit(&d, &cfg)?.records {
                excess = excess.max(r.mean_train_loss - r.mean_softmax_loss);
            }
        }
        Ok(excess)
    })();
    match result {
        Ok(x) => Observation::new(x.max(0.0), "sparse - full <= 1e-12", format!("max sparse - full = {x:e}")),
        Err(e) => Observation::error("sparse - full <= 1e-12", e),
    }
}

fn f1_bounds(_: &dyn Kernels) -> Observation {
    let mut violations = 0;
    for trial in 0..500 {
        let mut rng = trial_rng(109, trial);
        let classes = rng.random_range(1..=12);
        let n = rng.random_range(1..=60);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let preds: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let Ok(s) = f1_scores(classes, &labels, &preds) else {
            violations += 1;
            continue;
        };
        let (macro_f1, micro_f1) = oracles::confusion_f1(classes, &labels, &preds);
        let in_range = (0.0..=1.0).contains(&s.macro_f1) && (0.0..=1.0).contains(&s.micro_f1);
        if !in_range || s.micro_f1 != micro_f1 || (s.macro_f1 - macro_f1).abs() > 1e-15 {
            violations += 1;
        }
    }
    Observation::new(violations as f64, "0 violations", format!("{violations} violations"))
}

fn sgd_descent(_: &dyn Kernels) -> Observation {
    let result = (|| -> Result<f64, String> {
        let d = data(150, 64, 10, 0.0, 7)?;
        let mut cfg = config(LossKind::Softmax, 15, 256);
        cfg.optimizer = OptimizerConfig::sgd(0.01);
        let out = fit(&d, &cfg)?;
        Ok(out
            .records
            .windows(2)
            .map(|w| w[1].mean_train_loss - w[0].mean_train_loss)
            .fold(0.0, f64::max))
    })();
    match result {
        Ok(x) => Observation::new(x, "no epoch-over-epoch increase", format!("largest increase {x:e}")),
        Err(e) => Observation::error("no epoch-over-epoch increase", e),
    }
}

fn cli(args: &str, out: &std::path::Path) -> Result<sparse_softmax_cli::Outcome, String> {
    let mut v = vec!["sparse-softmax".to_string()];
    v.extend(args.split_whitespace().map(String::from));
    v.push("--out".into());
    v.push(out.display().to_string());
    sparse_softmax_cli::run(v).map_err(|e| e.to_string())
}

fn rerun(_: &dyn Kernels) -> Observation {
    let result = (|| -> Result<usize, String> {
        let first = tempfile::tempdir().map_err(|e| e.to_string())?;
        let second = tempfile::tempdir().map_err(|e| e.to_string())?;
        let data = "--n-classes 20 --feature-dim 8 --samples-per-class 15 --epochs 3 --no-timing";
        cli(&format!("train --loss sparse --k 4 --batch-size 16 {data}"), first.path())?;
        cli(&format!("sweep-k --k 2,5 --force-include-target {data}"), first.path())?;
        let mut differing = 0;
        for entry in fs::read_dir(first.path()).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.extension().is_some_and(|e| e == "manifest") {
                cli(&format!("rerun --manifest {}", path.display()), second.path())?;
            }
        }
        for entry in fs::read_dir(first.path()).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.extension().is_some_and(|e| e == "csv") {
                let again = fs::read(second.path().join(path.file_name().unwrap_or_default()));
                if again.ok() != fs::read(&path).ok() {
                    differing += 1;
                }
            }
        }
        Ok(differing)
    })();
    match result {
        Ok(n) => Observation::new(n as f64, "0 differing CSVs", format!("{n} differing CSVs")),
        Err(e) => Observation::error("0 differing CSVs", e),
    }
}

fn exit_status(_: &dyn Kernels) -> Observation {
    let result = (|| -> Result<usize, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let ok = cli("grad-check --dim 8 --trials 20", dir.path())?;
        let bad = cli(
            "train --n-classes 5 --feature-dim 4 --samples-per-class 10 --epochs 30 --optimizer sgd --lr 1e308 \
             --fail-on-divergence --no-timing",
            dir.path(),
        )?;
        let manifest_left = dir.path().join("softmax_kfull_seed7.manifest").exists();
        Ok(usize::from(ok.exit_code != 0) + usize::from(bad.exit_code != 1) + usize::from(manifest_left))
    })();
    match result {
        Ok(n) => Observation::new(n as f64, "0 on success, 1 on failure", format!("{n} wrong statuses")),
        Err(e) => Observation::error("0 on success, 1 on failure", e),
    }
}
