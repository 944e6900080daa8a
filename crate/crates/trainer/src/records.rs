//! CSV output for loss curves.

use std::io::Write;

use sparse_softmax::TargetPolicy;

use crate::train::{ExperimentRecord, LossKind};

pub const RECORD_CSV_HEADER: &str = "epoch,mean_train_loss,macro_f1,micro_f1,wall_time_s";

/// `softmax_kfull_seed7.csv`, `sparse_k20_seed7.csv` or, with the target
/// forced into the support, `sparse_k20_force_seed7.csv`.
pub fn run_file_name(loss: LossKind, policy: TargetPolicy, seed: u64) -> String {
    match (loss, policy) {
        (LossKind::Softmax, _) => format!("softmax_kfull_seed{seed}.csv"),
        (LossKind::Sparse { k }, TargetPolicy::Literal) => format!("sparse_k{k}_seed{seed}.csv"),
        (LossKind::Sparse { k }, TargetPolicy::ForceInclude) => format!("sparse_k{k}_force_seed{seed}.csv"),
    }
}

pub fn write_records_csv<W: Write>(records: &[ExperimentRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{RECORD_CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.epoch, r.mean_train_loss, r.macro_f1, r.micro_f1, r.wall_time_s
        )?;
    }
    Ok(())
}

pub fn records_to_csv(records: &[ExperimentRecord]) -> String {
    let mut buf = Vec::new();
    write_records_csv(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_embed_loss_k_and_seed() {
        let (lit, force) = (TargetPolicy::Literal, TargetPolicy::ForceInclude);
        assert_eq!(run_file_name(LossKind::Sparse { k: 20 }, lit, 7), "sparse_k20_seed7.csv");
        assert_eq!(run_file_name(LossKind::Sparse { k: 20 }, force, 7), "sparse_k20_force_seed7.csv");
        assert_eq!(run_file_name(LossKind::Softmax, force, 7), "softmax_kfull_seed7.csv");
    }

    #[test]
    fn csv_rows_round_trip_floats() {
        let r = ExperimentRecord {
            epoch: 3,
            mean_train_loss: 0.1 + 0.2,
            mean_softmax_loss: 1.0,
            macro_f1: 1.0 / 3.0,
            micro_f1: 0.5,
            wall_time_s: 0.0,
        };
        let csv = records_to_csv(std::slice::from_ref(&r));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(RECORD_CSV_HEADER));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields[0], "3");
        assert_eq!(fields[1].parse::<f64>().unwrap(), r.mean_train_loss);
        assert_eq!(fields[2].parse::<f64>().unwrap(), r.macro_f1);
    }
}
