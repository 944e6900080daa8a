//! k-sweeps: one softmax baseline plus one sparse run per grid point.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dataset::SyntheticDataset;
use crate::error::{Result, TrainError};
use crate::metrics::{evaluate, F1Scores};
use crate::model::{Model, ModelConfig};
use crate::train::{train, LossKind, TrainConfig, TrainOutcome};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowStatus {
    Converged,
    /// Training hit a non-finite loss in this epoch.
    Diverged { epoch: usize },
    /// Every gradient was exactly zero, so the parameters never moved.
    Stalled,
}

impl RowStatus {
    pub fn label(&self) -> String {
        match self {
            RowStatus::Converged => "converged".into(),
            RowStatus::Diverged { epoch } => format!("diverged@{epoch}"),
            RowStatus::Stalled => "stalled".into(),
        }
    }

    pub fn is_flagged(&self) -> bool {
        *self != RowStatus::Converged
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub loss: LossKind,
    pub status: RowStatus,
    /// Final scores on the held-out split; `None` for diverged rows.
    pub scores: Option<F1Scores>,
    pub outcome: TrainOutcome,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    /// Baseline first, then sparse rows by ascending k.
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_CSV_HEADER: &str = "k,macro_f1,micro_f1,status";

impl SweepTable {
    pub fn baseline(&self) -> &SweepRow {
        &self.rows[0]
    }

    pub fn sparse_rows(&self) -> &[SweepRow] {
        &self.rows[1..]
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{SWEEP_CSV_HEADER}\n");
        for row in &self.rows {
            let k = row
                .loss
                .k()
                .map(|k| k.to_string())
                .unwrap_or_else(|| "softmax".into());
            let (ma, mi) = match row.scores {
                Some(f) => (f.macro_f1.to_string(), f.micro_f1.to_string()),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(s, "{k},{ma},{mi},{}", row.status.label());
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{:<14}{:>10}{:>10}  status\n", "", "macro F1", "micro F1");
        for row in &self.rows {
            let name = match row.loss {
                LossKind::Softmax => "softmax".to_string(),
                LossKind::Sparse { k } => format!("sparse(k={k})"),
            };
            let (ma, mi) = match row.scores {
                Some(f) => (format!("{:.4}", f.macro_f1), format!("{:.4}", f.micro_f1)),
                None => ("-".into(), "-".into()),
            };
            let _ = writeln!(s, "{name:<14}{ma:>10}{mi:>10}  {}", row.status.label());
        }
        s
    }
}

fn run_row(
    data: &SyntheticDataset,
    base: &TrainConfig,
    model_config: ModelConfig,
    loss: LossKind,
) -> Result<SweepRow> {
    let model = Model::new(model_config, data.feature_dim(), data.n_classes(), base.seed)?;
    let config = base.clone().with_loss(loss);
    let outcome = train(model, data, &config)?;
    let status = match &outcome.divergence {
        Some(d) => RowStatus::Diverged { epoch: d.epoch },
        None if !outcome.received_gradient => RowStatus::Stalled,
        None => RowStatus::Converged,
    };
    let scores = match status {
        RowStatus::Diverged { .. } => None,
        _ => Some(evaluate(&outcome.model, data.final_split())?),
    };
    Ok(SweepRow {
        loss,
        status,
        scores,
        outcome,
    })
}

/// Trains the softmax baseline and one sparse arm per distinct `k`, all from
/// the same initialization and shuffling seed. Rows run in parallel; the
/// table does not depend on scheduling.
pub fn sweep_k(
    data: &SyntheticDataset,
    base: &TrainConfig,
    model_config: ModelConfig,
    k_grid: &[usize],
) -> Result<SweepTable> {
    if k_grid.is_empty() {
        return Err(TrainError::InvalidConfig("k grid is empty".into()));
    }
    if k_grid.contains(&0) {
        return Err(TrainError::InvalidConfig("k must be at least 1".into()));
    }
    let mut ks = k_grid.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let losses: Vec<LossKind> = std::iter::once(LossKind::Softmax)
        .chain(ks.into_iter().map(|k| LossKind::Sparse { k }))
        .collect();
    let rows = losses
        .into_par_iter()
        .map(|loss| run_row(data, base, model_config, loss))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { rows })
}
