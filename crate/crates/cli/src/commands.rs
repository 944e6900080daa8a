use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sparse_softmax::analysis::{verify_necessary_condition, VerifyConfig};
use sparse_softmax::gradcheck::{run_grad_check, GradCheckConfig};
use sparse_softmax::TargetPolicy;
use sparse_softmax_trainer::records::{records_to_csv, run_file_name};
use sparse_softmax_trainer::snapshot::write_snapshot;
use sparse_softmax_trainer::{
    generate_dataset, sweep_k, train, DatasetParams, LossKind, Model, ModelConfig,
    OptimizerConfig, TrainConfig,
};

use crate::args::{
    DataArgs, GenDataArgs, GradCheckArgs, LossArg, OptimizerArg, RunArgs, SweepArgs, TrainArgs,
    VerifyArgs,
};
use crate::manifest::Manifest;

/// Relative-error ceiling for `grad-check`.
pub const GRAD_CHECK_TOLERANCE: f64 = 1e-5;

/// Result of a completed invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    /// 0 when every property the subcommand asserts held.
    pub exit_code: i32,
    /// Human-readable summary for standard output.
    pub summary: String,
    /// One-line reason for a nonzero exit.
    pub diagnostic: Option<String>,
    /// Files written, manifest last.
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn success(summary: String, files: Vec<PathBuf>) -> Self {
        Self {
            exit_code: 0,
            summary,
            diagnostic: None,
            files,
        }
    }

    fn failure(summary: String, diagnostic: String, files: Vec<PathBuf>) -> Self {
        Self {
            exit_code: 1,
            summary,
            diagnostic: Some(diagnostic),
            files,
        }
    }
}

/// Writes through a temporary sibling so readers never see a partial file.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn finish_manifest(mut manifest: Manifest, path: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    manifest.outputs = files.iter().map(|f| file_name(f)).collect();
    write_atomic(path, manifest.render().as_bytes())?;
    files.push(path.to_path_buf());
    Ok(())
}

fn data_params(data: &DataArgs, seed: u64) -> DatasetParams {
    DatasetParams {
        n_classes: data.n_classes,
        feature_dim: data.feature_dim,
        samples_per_class: data.samples_per_class,
        noise_scale: data.noise,
        seed,
    }
}

fn data_manifest(m: Manifest, data: &DataArgs) -> Manifest {
    m.flag("n-classes", data.n_classes)
        .flag("feature-dim", data.feature_dim)
        .flag("samples-per-class", data.samples_per_class)
        .flag("noise", data.noise)
}

fn run_manifest(m: Manifest, run: &RunArgs) -> Manifest {
    data_manifest(m, &run.data)
        .flag("epochs", run.epochs)
        .flag("batch-size", run.batch_size)
        .flag(
            "optimizer",
            match run.optimizer {
                OptimizerArg::Sgd => "sgd",
                OptimizerArg::Adam => "adam",
            },
        )
        .flag("lr", run.lr)
        .flag("seed", run.seed)
        .flag("force-include-target", run.force_include_target)
        .flag("fail-on-divergence", run.fail_on_divergence)
        .flag("hidden", run.hidden)
        .flag("no-timing", run.no_timing)
        .flag("out", run.out.display())
}

fn train_config(run: &RunArgs, loss: LossKind) -> TrainConfig {
    TrainConfig {
        loss,
        epochs: run.epochs,
        batch_size: run.batch_size,
        optimizer: match run.optimizer {
            OptimizerArg::Sgd => OptimizerConfig::sgd(run.lr),
            OptimizerArg::Adam => OptimizerConfig::adam(run.lr),
        },
        seed: run.seed,
        target_policy: policy(run),
        record_wall_time: !run.no_timing,
    }
}

fn model_config(run: &RunArgs) -> ModelConfig {
    match run.hidden {
        0 => ModelConfig::Linear,
        hidden => ModelConfig::Mlp { hidden },
    }
}

fn policy(run: &RunArgs) -> TargetPolicy {
    TargetPolicy::from_flag(run.force_include_target)
}

/// `sweep_seed7` or `sweep_force_seed7`.
fn sweep_stem(run: &RunArgs) -> String {
    if run.force_include_target {
        format!("sweep_force_seed{}", run.seed)
    } else {
        format!("sweep_seed{}", run.seed)
    }
}

pub fn train_cmd(args: &TrainArgs) -> Result<Outcome> {
    let run = &args.run;
    let loss = match args.loss {
        LossArg::Softmax => LossKind::Softmax,
        LossArg::Sparse => LossKind::Sparse { k: args.k },
    };
    let data = generate_dataset(data_params(&run.data, run.seed))?;
    let model = Model::new(model_config(run), data.feature_dim(), data.n_classes(), run.seed)?;
    let outcome = train(model, &data, &train_config(run, loss))?;

    let csv_name = run_file_name(loss, policy(run), run.seed);
    let csv_path = run.out.join(&csv_name);
    write_atomic(&csv_path, records_to_csv(&outcome.records).as_bytes())?;
    let mut files = vec![csv_path];

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "train {} (k = {}) on {} classes, {} training samples, seed {}",
        loss.name(),
        loss.k().map_or("all".to_string(), |k| k.to_string()),
        data.n_classes(),
        data.train.len(),
        run.seed
    );
    for r in &outcome.records {
        let _ = writeln!(
            summary,
            "  epoch {:>3}  loss {:.6}  macro F1 {:.4}  micro F1 {:.4}",
            r.epoch, r.mean_train_loss, r.macro_f1, r.micro_f1
        );
    }
    if let Some(d) = &outcome.divergence {
        let line = format!("training diverged in epoch {}: {}", d.epoch, d.reason);
        let _ = writeln!(summary, "  {line}");
        if run.fail_on_divergence {
            return Ok(Outcome::failure(summary, line, files));
        }
    }
    let manifest = run_manifest(
        Manifest::new("train")
            .flag("loss", loss.name())
            .flag("k", args.k),
        run,
    );
    let manifest_path = run.out.join(csv_name.replace(".csv", ".manifest"));
    finish_manifest(manifest, &manifest_path, &mut files)?;
    Ok(Outcome::success(summary, files))
}

pub fn sweep_cmd(args: &SweepArgs) -> Result<Outcome> {
    let run = &args.run;
    if args.k.is_empty() {
        bail!("--k needs at least one value");
    }
    let data = generate_dataset(data_params(&run.data, run.seed))?;
    let table = sweep_k(
        &data,
        &train_config(run, LossKind::Softmax),
        model_config(run),
        &args.k,
    )?;

    let mut files = Vec::new();
    for row in &table.rows {
        let path = run.out.join(run_file_name(row.loss, policy(run), run.seed));
        write_atomic(&path, records_to_csv(&row.outcome.records).as_bytes())?;
        files.push(path);
    }
    let stem = sweep_stem(run);
    let summary_path = run.out.join(format!("{stem}.csv"));
    write_atomic(&summary_path, table.to_csv().as_bytes())?;
    files.push(summary_path);

    let summary = format!(
        "k-sweep on {} classes, seed {}\n{}",
        data.n_classes(),
        run.seed,
        table.to_text()
    );
    let diverged: Vec<String> = table
        .rows
        .iter()
        .filter(|r| matches!(r.status, sparse_softmax_trainer::RowStatus::Diverged { .. }))
        .map(|r| r.loss.k().map_or("softmax".into(), |k| format!("k={k}")))
        .collect();
    if !diverged.is_empty() && run.fail_on_divergence {
        let line = format!("diverged rows: {}", diverged.join(", "));
        return Ok(Outcome::failure(summary, line, files));
    }
    let ks: Vec<String> = args.k.iter().map(|k| k.to_string()).collect();
    let manifest = run_manifest(Manifest::new("sweep-k").flag("k", ks.join(",")), run);
    let manifest_path = run.out.join(format!("{stem}.manifest"));
    finish_manifest(manifest, &manifest_path, &mut files)?;
    Ok(Outcome::success(summary, files))
}

pub fn verify_cmd(args: &VerifyArgs) -> Result<Outcome> {
    let report = verify_necessary_condition(&VerifyConfig::new(
        args.n,
        args.epsilon,
        args.trials,
        args.seed,
    ))?;
    let stem = format!("verify_bound_n{}_seed{}", args.n, args.seed);
    let csv = args.out.join(format!("{stem}.csv"));
    let txt = args.out.join(format!("{stem}.txt"));
    write_atomic(&csv, report.to_csv().as_bytes())?;
    write_atomic(&txt, report.to_text().as_bytes())?;
    let mut files = vec![csv, txt];
    let summary = report.to_text();
    if !report.holds() {
        let line = format!(
            "{} counterexample(s) to the spread bound {}",
            report.counterexamples, report.bound
        );
        return Ok(Outcome::failure(summary, line, files));
    }
    let manifest = Manifest::new("verify-bound")
        .flag("n", args.n)
        .flag("epsilon", args.epsilon)
        .flag("trials", args.trials)
        .flag("seed", args.seed)
        .flag("out", args.out.display());
    finish_manifest(manifest, &args.out.join(format!("{stem}.manifest")), &mut files)?;
    Ok(Outcome::success(summary, files))
}

pub fn grad_check_cmd(args: &GradCheckArgs) -> Result<Outcome> {
    let report = run_grad_check(&GradCheckConfig::new(args.dim, args.k, args.trials, args.seed))?;
    let mut csv = String::from("trial,k,target,force_include_target,ce_rel_error,sparse_rel_error\n");
    for t in &report.trials {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            t.trial,
            t.k,
            t.target,
            t.policy.forces_target(),
            t.ce_rel_error,
            t.sparse_rel_error
        );
    }
    let stem = format!("grad_check_dim{}_seed{}", args.dim, args.seed);
    let csv_path = args.out.join(format!("{stem}.csv"));
    write_atomic(&csv_path, csv.as_bytes())?;
    let mut files = vec![csv_path];

    let mut summary = String::new();
    let _ = writeln!(summary, "gradient check: dim {}, {} trials, seed {}", args.dim, args.trials, args.seed);
    let _ = writeln!(summary, "  max relative error, cross-entropy:        {:.3e}", report.max_ce_error());
    let _ = writeln!(summary, "  max relative error, sparse cross-entropy: {:.3e}", report.max_sparse_error());
    let _ = writeln!(summary, "  samples rejected near a top-k switch:     {}", report.rejected());
    if report.max_error() >= GRAD_CHECK_TOLERANCE {
        let line = format!(
            "max relative error {:.3e} exceeds {GRAD_CHECK_TOLERANCE:e}",
            report.max_error()
        );
        return Ok(Outcome::failure(summary, line, files));
    }
    let mut manifest = Manifest::new("grad-check").flag("dim", args.dim);
    if let Some(k) = args.k {
        manifest = manifest.flag("k", k);
    }
    let manifest = manifest
        .flag("trials", args.trials)
        .flag("seed", args.seed)
        .flag("out", args.out.display());
    finish_manifest(manifest, &args.out.join(format!("{stem}.manifest")), &mut files)?;
    Ok(Outcome::success(summary, files))
}

pub fn gen_data_cmd(args: &GenDataArgs) -> Result<Outcome> {
    let data = generate_dataset(data_params(&args.data, args.seed))?;
    let mut buf = Vec::new();
    write_snapshot(&data, &mut buf)?;
    write_atomic(&args.out, &buf)?;
    let mut files = vec![args.out.clone()];
    let manifest = data_manifest(Manifest::new("gen-data"), &args.data)
        .flag("seed", args.seed)
        .flag("out", args.out.display());
    let mut manifest_path = args.out.as_os_str().to_owned();
    manifest_path.push(".manifest");
    finish_manifest(manifest, Path::new(&manifest_path), &mut files)?;
    let summary = format!(
        "dataset: {} classes, {} features, {}/{}/{} train/dev/test samples -> {}\n",
        data.n_classes(),
        data.feature_dim(),
        data.train.len(),
        data.dev.len(),
        data.test.len(),
        args.out.display()
    );
    Ok(Outcome::success(summary, files))
}
