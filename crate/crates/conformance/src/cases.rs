//! Evaluation of golden cases.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sparse_softmax::analysis::{required_spread, verify_necessary_condition, VerifyConfig};
use sparse_softmax_trainer::metrics::predict;
use sparse_softmax_trainer::{
    evaluate, f1_scores, generate_dataset, sweep_k, train, DatasetParams, LossKind, Model, ModelConfig,
    OptimizerConfig, RowStatus, SyntheticDataset, TrainConfig, TrainOutcome,
};

use crate::golden::{GoldenCase, Provenance};
use crate::kernels::Kernels;
use crate::oracles::{self, FD_STEP};
use crate::report::Observation;

type Values = Vec<(String, Vec<f64>)>;

/// How far an oracle may sit from the frozen value it is meant to reproduce.
pub fn oracle_tolerance(name: &str) -> Option<f64> {
    match name {
        "naive_softmax" | "subvector_softmax" | "direct_loss" => Some(1e-15),
        "fd_gradient" => Some(1e-7),
        "direct_bound" => Some(1e-13),
        "confusion_matrix" => Some(0.0),
        _ => None,
    }
}

pub fn run_golden(case: &GoldenCase, kernels: &dyn Kernels) -> Observation {
    let expected_text = case
        .expected
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join("; ");
    match evaluate_case(case, kernels) {
        Ok((observed, oracle)) => compare(case, &expected_text, &observed, &oracle),
        Err(e) => Observation::error(expected_text, e),
    }
}

fn compare(case: &GoldenCase, expected_text: &str, observed: &Values, oracle: &Values) -> Observation {
    let mut error = 0.0f64;
    let mut shown = String::new();
    for (key, _) in &case.expected {
        let want = match case.expected_vec(key) {
            Ok(v) => v,
            Err(e) => return Observation::error(expected_text, e),
        };
        let Some((_, got)) = observed.iter().find(|(k, _)| k == key) else {
            return Observation::error(expected_text, format!("no observed value for {key}"));
        };
        error = error.max(max_abs_diff(&want, got));
        let _ = write!(shown, "{}{key}={}", if shown.is_empty() { "" } else { "; " }, join(got));
    }
    if case.provenance == Provenance::Computed {
        if let Some(tol) = oracle_tolerance(&case.oracle) {
            for (key, from_oracle) in oracle {
                let want = case.expected_vec(key).unwrap_or_default();
                let gap = max_abs_diff(&want, from_oracle);
                if gap.is_nan() || gap > tol {
                    let _ = write!(shown, "; oracle {} disagrees on {key}: {}", case.oracle, join(from_oracle));
                    error = f64::INFINITY;
                }
            }
        }
    }
    Observation::new(error, expected_text, shown)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| if x == y { 0.0 } else { (x - y).abs() })
        .fold(0.0, |m, d| if d.is_nan() { f64::NAN } else { m.max(d) })
}

fn one(key: &str, v: f64) -> (String, Vec<f64>) {
    (key.to_string(), vec![v])
}

fn many(key: &str, v: Vec<f64>) -> (String, Vec<f64>) {
    (key.to_string(), v)
}

fn flag(key: &str, b: bool) -> (String, Vec<f64>) {
    one(key, if b { 1.0 } else { 0.0 })
}

type CaseResult = Result<(Values, Values), String>;

fn evaluate_case(case: &GoldenCase, kernels: &dyn Kernels) -> CaseResult {
    let s = |e: crate::golden::GoldenError| e.to_string();
    let derived = case.provenance == Provenance::Computed;
    match case.op.as_str() {
        "top_k" => {
            let z = case.input_vec("z").map_err(s)?;
            let k = case.input_usize("k").map_err(s)?;
            let support = kernels.top_k(&z, k).into_iter().map(|i| i as f64).collect();
            Ok((vec![many("support", support)], vec![]))
        }
        "softmax" => {
            let z = case.input_vec("z").map_err(s)?;
            let oracle = if derived { vec![many("p", oracles::naive_softmax(&z))] } else { vec![] };
            Ok((vec![many("p", kernels.softmax(&z))], oracle))
        }
        "sparse_softmax" => {
            let z = case.input_vec("z").map_err(s)?;
            let k = case.input_usize("k").map_err(s)?;
            let oracle = if derived { vec![many("p", oracles::subvector_softmax(&z, k))] } else { vec![] };
            Ok((vec![many("p", kernels.sparse_softmax(&z, k))], oracle))
        }
        "ce_loss" => {
            let z = case.input_vec("z").map_err(s)?;
            let t = case.input_usize("t").map_err(s)?;
            let r = kernels.ce_loss(&z, t);
            let f = |x: &[f64]| oracles::ce_oracle(x, t);
            Ok((
                vec![one("loss", r.loss), many("grad", r.gradient)],
                oracle_loss_and_grad(case, &z, f),
            ))
        }
        "sparse_ce_loss" => {
            let z = case.input_vec("z").map_err(s)?;
            let t = case.input_usize("t").map_err(s)?;
            let k = case.input_usize("k").map_err(s)?;
            let force = case.input("force").map_err(s)? == "true";
            let r = kernels.sparse_ce_loss(&z, t, k, force);
            let f = |x: &[f64]| oracles::sparse_ce_oracle(x, t, k, force);
            Ok((
                vec![one("loss", r.loss), many("grad", r.gradient)],
                oracle_loss_and_grad(case, &z, f),
            ))
        }
        "required_spread" => {
            let eps = case.input_f64("epsilon").map_err(s)?;
            let n = case.input_usize("n").map_err(s)?;
            let v = required_spread(eps, n).map_err(|e| e.to_string())?;
            Ok((vec![one("value", v)], vec![one("value", oracles::direct_bound(eps, n))]))
        }
        "verify_bound" => {
            let config = VerifyConfig::new(
                case.input_usize("n").map_err(s)?,
                case.input_f64("epsilon").map_err(s)?,
                case.input_usize("trials").map_err(s)?,
                case.input_usize("seed").map_err(s)? as u64,
            );
            let report = verify_necessary_condition(&config).map_err(|e| e.to_string())?;
            Ok((vec![one("counterexamples", report.counterexamples as f64)], vec![]))
        }
        "margin_equality" => {
            let c = case.input_f64("c").map_err(s)?;
            let z = [c, c];
            let loss = kernels.ce_loss(&z, 0).loss;
            let bound = required_spread(std::f64::consts::LN_2, 2).map_err(|e| e.to_string())?;
            Ok((
                vec![one("loss", loss), one("spread", z[0] - z[1]), one("bound", bound)],
                vec![],
            ))
        }
        "below_bound" => {
            let n = case.input_usize("n").map_err(s)?;
            let eps = case.input_f64("epsilon").map_err(s)?;
            let offset = case.input_f64("offset").map_err(s)?;
            let spread = required_spread(eps, n).map_err(|e| e.to_string())? + offset;
            let mut z = vec![0.0; n];
            z[0] = spread;
            let loss = kernels.ce_loss(&z, 0).loss;
            Ok((
                vec![one("loss", loss), flag("exceeds", loss > eps)],
                vec![one("loss", oracles::ce_oracle(&z, 0))],
            ))
        }
        "generate_dataset" => {
            let data = dataset(case, case.input_f64("noise").map_err(s)?)?;
            let counts = [data.train.len(), data.dev.len(), data.test.len()];
            let classes = data.train.labels.iter().max().map_or(0, |m| m + 1);
            Ok((
                vec![
                    one("samples", data.len() as f64),
                    one("classes", classes as f64),
                    one("train", counts[0] as f64),
                    one("dev", counts[1] as f64),
                    one("test", counts[2] as f64),
                ],
                vec![],
            ))
        }
        "dataset_twice" => {
            let noise = case.input_f64("noise").map_err(s)?;
            let a = dataset(case, noise)?;
            let b = dataset(case, noise)?;
            let same = [(&a.train, &b.train), (&a.dev, &b.dev), (&a.test, &b.test)].iter().all(|(x, y)| {
                x.labels == y.labels
                    && x.features.iter().zip(y.features.iter()).all(|(p, q)| p.to_bits() == q.to_bits())
            });
            Ok((vec![flag("identical", same)], vec![]))
        }
        "noiseless_accuracy" | "noiseless_micro_f1" => {
            let data = dataset(case, 0.0)?;
            let mut config = train_config(case, LossKind::Softmax)?;
            config.optimizer = OptimizerConfig::adam(case.input_f64("lr").map_err(s)?);
            let out = run(&data, &config)?;
            if case.op == "noiseless_accuracy" {
                let preds = predict(&out.model, &data.train).map_err(|e| e.to_string())?;
                let hits = preds.iter().zip(&data.train.labels).filter(|(p, l)| p == l).count();
                Ok((vec![one("accuracy", hits as f64 / preds.len() as f64)], vec![]))
            } else {
                let scores = evaluate(&out.model, &data.train).map_err(|e| e.to_string())?;
                Ok((vec![one("micro_f1", scores.micro_f1)], vec![]))
            }
        }
        "full_k_pair" => {
            let data = dataset(case, 1.0)?;
            let n = data.n_classes();
            let mut soft = train_config(case, LossKind::Softmax)?;
            soft.batch_size = case.input_usize("batch_size").map_err(s)?;
            let mut sparse = soft.clone();
            sparse.loss = LossKind::Sparse { k: n };
            let a = run(&data, &soft)?;
            let b = run(&data, &sparse)?;
            let gap = if a.records.len() == b.records.len() {
                a.records
                    .iter()
                    .zip(&b.records)
                    .map(|(x, y)| (x.mean_train_loss - y.mean_train_loss).abs())
                    .fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            Ok((vec![one("max_epoch_gap", gap)], vec![]))
        }
        "final_loss_order" => {
            let data = dataset(case, case.input_f64("noise").map_err(s)?)?;
            let k = case.input_usize("k").map_err(s)?;
            let soft = run(&data, &train_config(case, LossKind::Softmax)?)?;
            let sparse = run(&data, &train_config(case, LossKind::Sparse { k })?)?;
            let (Some(a), Some(b)) = (soft.final_loss(), sparse.final_loss()) else {
                return Err("a run produced no records".into());
            };
            Ok((vec![one("excess", (b - a).max(0.0))], vec![]))
        }
        "f1" => {
            let classes = case.input_usize("classes").map_err(s)?;
            let labels = case.input_indices("labels").map_err(s)?;
            let preds = case.input_indices("preds").map_err(s)?;
            let scores = f1_scores(classes, &labels, &preds).map_err(|e| e.to_string())?;
            let (macro_f1, micro_f1) = oracles::confusion_f1(classes, &labels, &preds);
            Ok((
                vec![one("macro", scores.macro_f1), one("micro", scores.micro_f1)],
                vec![one("macro", macro_f1), one("micro", micro_f1)],
            ))
        }
        "sweep_shape" | "sweep_tie" | "sweep_surface" => {
            let data = dataset(case, 1.0)?;
            let grid = case.input_indices("k").map_err(s)?;
            let mut base = train_config(case, LossKind::Softmax)?;
            base.target_policy = sparse_softmax::TargetPolicy::Literal;
            let table = sweep_k(&data, &base, ModelConfig::Linear, &grid).map_err(|e| e.to_string())?;
            match case.op.as_str() {
                "sweep_shape" => {
                    let baselines = table.rows.iter().filter(|r| r.loss == LossKind::Softmax).count();
                    Ok((
                        vec![
                            one("rows", table.rows.len() as f64),
                            one("baselines", baselines as f64),
                            one("sparse", table.sparse_rows().len() as f64),
                        ],
                        vec![],
                    ))
                }
                "sweep_tie" => {
                    let base = table.baseline().scores.ok_or("baseline has no scores")?;
                    let gap = table
                        .sparse_rows()
                        .iter()
                        .map(|r| match r.scores {
                            Some(sc) => (sc.micro_f1 - base.micro_f1).abs().max((sc.macro_f1 - base.macro_f1).abs()),
                            None => f64::INFINITY,
                        })
                        .fold(0.0, f64::max);
                    Ok((vec![one("f1_gap", gap)], vec![]))
                }
                _ => {
                    let csv = table.to_csv();
                    let surfaced = table.sparse_rows().iter().all(|r| {
                        let consistent = matches!(r.status, RowStatus::Diverged { .. }) == r.outcome.diverged();
                        consistent && csv.contains(&r.status.label())
                    });
                    Ok((vec![flag("surfaced", surfaced)], vec![]))
                }
            }
        }
        "cli_sweep" | "cli_verify" | "cli_grad_check" => run_cli_case(case),
        other => Err(format!("unknown op {other:?}")),
    }
}

fn oracle_loss_and_grad(case: &GoldenCase, z: &[f64], f: impl Fn(&[f64]) -> f64 + Copy) -> Values {
    if case.provenance != Provenance::Computed {
        return vec![];
    }
    let mut out = vec![one("loss", f(z))];
    if case.oracle == "fd_gradient" {
        out.push(many("grad", oracles::central_difference(f, z, FD_STEP)));
    }
    out.retain(|(k, _)| case.expected.iter().any(|(e, _)| e == k));
    out
}

fn dataset(case: &GoldenCase, noise: f64) -> Result<SyntheticDataset, String> {
    let s = |e: crate::golden::GoldenError| e.to_string();
    generate_dataset(DatasetParams {
        n_classes: case.input_usize("n_classes").map_err(s)?,
        feature_dim: case.input_usize("feature_dim").map_err(s)?,
        samples_per_class: case.input_usize("samples_per_class").map_err(s)?,
        noise_scale: noise,
        seed: case.input_usize("seed").map_err(s)? as u64,
    })
    .map_err(|e| e.to_string())
}

fn train_config(case: &GoldenCase, loss: LossKind) -> Result<TrainConfig, String> {
    let s = |e: crate::golden::GoldenError| e.to_string();
    Ok(TrainConfig {
        loss,
        epochs: case.input_usize("epochs").map_err(s)?,
        seed: case.input_usize("seed").map_err(s)? as u64,
        record_wall_time: false,
        ..TrainConfig::default()
    })
}

fn run(data: &SyntheticDataset, config: &TrainConfig) -> Result<TrainOutcome, String> {
    let model = Model::new(ModelConfig::Linear, data.feature_dim(), data.n_classes(), config.seed)
        .map_err(|e| e.to_string())?;
    train(model, data, config).map_err(|e| e.to_string())
}

fn run_cli_case(case: &GoldenCase) -> CaseResult {
    let line = case.input("args").map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut args = vec!["sparse-softmax".to_string()];
    args.extend(line.split_whitespace().map(String::from));
    args.push("--out".into());
    args.push(dir.path().display().to_string());
    let outcome = sparse_softmax_cli::run(args).map_err(|e| e.to_string())?;
    let mut observed = vec![one("exit", outcome.exit_code as f64)];
    match case.op.as_str() {
        "cli_sweep" => {
            let csvs = csv_names(dir.path())?;
            let summary = csvs.iter().find(|n| n.starts_with("sweep_")).ok_or("no summary csv")?;
            let rows = read(&dir.path().join(summary))?.lines().count().saturating_sub(1);
            observed.push(one("run_csvs", csvs.iter().filter(|n| !n.starts_with("sweep_")).count() as f64));
            observed.push(one("summary_rows", rows as f64));
        }
        "cli_verify" => {
            let name = csv_names(dir.path())?.into_iter().next().ok_or("no csv")?;
            let text = read(&dir.path().join(name))?;
            let row: Vec<String> = text.lines().nth(1).ok_or("empty csv")?.split(',').map(String::from).collect();
            let field = |i: usize| row.get(i).and_then(|v| v.parse::<f64>().ok()).ok_or("bad csv row");
            observed.push(one("counterexamples", field(3)?));
            observed.push(one("bound", field(5)?));
        }
        _ => {
            let name = csv_names(dir.path())?.into_iter().next().ok_or("no csv")?;
            let text = read(&dir.path().join(name))?;
            let mut worst = 0.0f64;
            for line in text.lines().skip(1) {
                for v in line.split(',').skip(4) {
                    worst = worst.max(v.parse::<f64>().map_err(|e| e.to_string())?);
                }
            }
            observed.push(flag("below_tolerance", worst < 1e-5));
        }
    }
    Ok((observed, vec![]))
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn csv_names(dir: &Path) -> Result<Vec<String>, String> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name().to_string_lossy().into_owned();
        if name.ends_with(".csv") {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}
