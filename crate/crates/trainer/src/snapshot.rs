//! Plain-text dataset snapshots.
//!
//! ```text
//! # sparse-softmax dataset v1
//! # n_classes=150
//! # feature_dim=64
//! # samples_per_class=40
//! # noise_scale=1
//! # seed=7
//! # train=4800
//! # dev=600
//! # test=600
//! 0,0.5127,-1.03,...
//! ```
//!
//! One row per sample, label first, train rows then dev rows then test rows.
//! Floats use the shortest decimal that parses back to the same bits.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::dataset::{DatasetParams, Split, SplitBuilder, SyntheticDataset};
use crate::error::{Result, TrainError};

pub const SNAPSHOT_MAGIC: &str = "# sparse-softmax dataset v1";

pub fn write_snapshot<W: Write>(data: &SyntheticDataset, mut out: W) -> Result<()> {
    let p = &data.params;
    writeln!(out, "{SNAPSHOT_MAGIC}")?;
    writeln!(out, "# n_classes={}", p.n_classes)?;
    writeln!(out, "# feature_dim={}", p.feature_dim)?;
    writeln!(out, "# samples_per_class={}", p.samples_per_class)?;
    writeln!(out, "# noise_scale={}", p.noise_scale)?;
    writeln!(out, "# seed={}", p.seed)?;
    writeln!(out, "# train={}", data.train.len())?;
    writeln!(out, "# dev={}", data.dev.len())?;
    writeln!(out, "# test={}", data.test.len())?;
    let mut line = String::new();
    for split in [&data.train, &data.dev, &data.test] {
        for (row, &label) in split.features.rows().into_iter().zip(&split.labels) {
            line.clear();
            let _ = write!(line, "{label}");
            for x in row {
                let _ = write!(line, ",{x}");
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

fn malformed(line: usize, reason: impl Into<String>) -> TrainError {
    TrainError::Snapshot {
        line,
        reason: reason.into(),
    }
}

pub fn read_snapshot<R: BufRead>(input: R) -> Result<SyntheticDataset> {
    let mut lines = input.lines().enumerate();
    let first = lines.next().map(|(_, l)| l).transpose()?;
    if first.as_deref() != Some(SNAPSHOT_MAGIC) {
        return Err(malformed(1, "missing snapshot header"));
    }

    let mut header = HashMap::new();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        if let Some(rest) = line.strip_prefix('#') {
            if !rows.is_empty() {
                return Err(malformed(lineno, "header line after data"));
            }
            let (k, v) = rest
                .trim()
                .split_once('=')
                .ok_or_else(|| malformed(lineno, "expected key=value"))?;
            header.insert(k.trim().to_string(), v.trim().to_string());
        } else if !line.is_empty() {
            rows.push((lineno, line));
        }
    }

    let get = |key: &str| -> Result<&str> {
        header
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| malformed(1, format!("missing header key {key}")))
    };
    let int = |key: &str| -> Result<usize> {
        get(key)?
            .parse()
            .map_err(|_| malformed(1, format!("bad integer for {key}")))
    };
    let params = DatasetParams {
        n_classes: int("n_classes")?,
        feature_dim: int("feature_dim")?,
        samples_per_class: int("samples_per_class")?,
        noise_scale: get("noise_scale")?
            .parse()
            .map_err(|_| malformed(1, "bad noise_scale"))?,
        seed: get("seed")?.parse().map_err(|_| malformed(1, "bad seed"))?,
    };
    let counts = [int("train")?, int("dev")?, int("test")?];
    if rows.len() != counts.iter().sum::<usize>() {
        return Err(malformed(
            rows.len(),
            format!("expected {} rows, found {}", counts.iter().sum::<usize>(), rows.len()),
        ));
    }

    let mut rows = rows.into_iter();
    let mut splits: Vec<Split> = Vec::with_capacity(3);
    let mut features = Vec::with_capacity(params.feature_dim);
    for &count in &counts {
        let mut builder = SplitBuilder::new(count, params.feature_dim);
        for (lineno, line) in rows.by_ref().take(count) {
            let mut fields = line.split(',');
            let label: usize = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| malformed(lineno, "bad label"))?;
            if label >= params.n_classes {
                return Err(malformed(lineno, format!("label {label} out of range")));
            }
            features.clear();
            for f in fields {
                features.push(
                    f.parse::<f64>()
                        .map_err(|_| malformed(lineno, format!("bad feature {f:?}")))?,
                );
            }
            if features.len() != params.feature_dim {
                return Err(malformed(
                    lineno,
                    format!("expected {} features, found {}", params.feature_dim, features.len()),
                ));
            }
            builder.push(label, &features);
        }
        splits.push(builder.finish());
    }
    let test = splits.pop().expect("three splits");
    let dev = splits.pop().expect("three splits");
    let train = splits.pop().expect("three splits");
    Ok(SyntheticDataset {
        params,
        train,
        dev,
        test,
    })
}
