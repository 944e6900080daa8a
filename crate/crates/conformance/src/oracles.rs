//! Independent reference computations. None of these call into the library.

use std::cmp::Ordering;

/// Every oracle a computed golden case may name.
pub const ORACLES: &[(&str, &str)] = &[
    ("naive_softmax", "max-shifted exponentials over a full sort, compensated sum"),
    ("subvector_softmax", "brute-force top-k, then naive softmax of the gathered sub-vector"),
    ("direct_loss", "log of a compensated sum of shifted exponentials over the support, minus the target logit"),
    ("fd_gradient", "central finite differences with h = 1e-5"),
    ("direct_bound", "log(n - 1) - log(expm1(epsilon)) evaluated term by term"),
    ("confusion_matrix", "per-class true/false positive and false negative counts"),
    ("theorem_run", "the sampled verification run itself: the bound is a theorem"),
    ("train_to_convergence", "training on separable data until every sample is fit"),
    ("paired_runs", "both loss arms trained from the same seed"),
];

pub fn oracle_description(name: &str) -> Option<&'static str> {
    ORACLES.iter().find(|(n, _)| *n == name).map(|(_, d)| *d)
}

pub const FD_STEP: f64 = 1e-5;

/// Ranking used by every top-k oracle: larger value first, lower index on ties.
fn rank(z: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[b].partial_cmp(&z[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    order
}

/// Top-k by sorting everything. Indices ascending.
pub fn brute_top_k(z: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = rank(z).into_iter().take(k.min(z.len())).collect();
    idx.sort_unstable();
    idx
}

/// Support with the target substituted for the lowest-ranked member.
pub fn brute_forced_support(z: &[f64], t: usize, k: usize) -> Vec<usize> {
    let ranked: Vec<usize> = rank(z).into_iter().take(k.min(z.len())).collect();
    let mut idx = ranked.clone();
    if !idx.contains(&t) {
        *idx.last_mut().expect("k >= 1") = t;
    }
    idx.sort_unstable();
    idx
}

/// Neumaier summation.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let s = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - s) + x;
        } else {
            c += (x - s) + sum;
        }
        sum = s;
    }
    sum + c
}

fn max_of(z: &[f64], support: &[usize]) -> f64 {
    support.iter().map(|&i| z[i]).fold(f64::NEG_INFINITY, f64::max)
}

pub fn naive_softmax(z: &[f64]) -> Vec<f64> {
    let all: Vec<usize> = (0..z.len()).collect();
    softmax_over(z, &all)
}

/// Softmax restricted to `support`, zero elsewhere.
pub fn softmax_over(z: &[f64], support: &[usize]) -> Vec<f64> {
    let m = max_of(z, support);
    let e: Vec<f64> = support.iter().map(|&i| (z[i] - m).exp()).collect();
    let s = compensated_sum(e.iter().copied());
    let mut p = vec![0.0; z.len()];
    for (&i, v) in support.iter().zip(e) {
        p[i] = v / s;
    }
    p
}

pub fn subvector_softmax(z: &[f64], k: usize) -> Vec<f64> {
    softmax_over(z, &brute_top_k(z, k))
}

/// `log sum_{i in support} e^{z_i} - z_t`.
pub fn direct_loss(z: &[f64], t: usize, support: &[usize]) -> f64 {
    let m = max_of(z, support);
    let s = compensated_sum(support.iter().map(|&i| (z[i] - m).exp()));
    (m - z[t]) + s.ln()
}

pub fn ce_oracle(z: &[f64], t: usize) -> f64 {
    let all: Vec<usize> = (0..z.len()).collect();
    direct_loss(z, t, &all)
}

pub fn sparse_ce_oracle(z: &[f64], t: usize, k: usize, force_include_target: bool) -> f64 {
    let support = if force_include_target {
        brute_forced_support(z, t, k)
    } else {
        brute_top_k(z, k)
    };
    direct_loss(z, t, &support)
}

pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `||a - b|| / max(||a||, ||b||)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()).max(norm(&mut b.iter().copied()));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Smallest gap between any two logits.
pub fn min_pairwise_gap(z: &[f64]) -> f64 {
    let mut s = z.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    s.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

pub fn direct_bound(epsilon: f64, n: usize) -> f64 {
    ((n - 1) as f64).ln() - epsilon.exp_m1().ln()
}

/// `(macro F1, micro F1)` from explicit counts.
pub fn confusion_f1(classes: usize, labels: &[usize], preds: &[usize]) -> (f64, f64) {
    let mut macro_sum = 0.0;
    for c in 0..classes {
        let tp = labels.iter().zip(preds).filter(|&(&l, &p)| l == c && p == c).count() as f64;
        let fp = labels.iter().zip(preds).filter(|&(&l, &p)| l != c && p == c).count() as f64;
        let fneg = labels.iter().zip(preds).filter(|&(&l, &p)| l == c && p != c).count() as f64;
        let denom = 2.0 * tp + fp + fneg;
        if denom > 0.0 {
            macro_sum += 2.0 * tp / denom;
        }
    }
    let correct = labels.iter().zip(preds).filter(|(l, p)| l == p).count() as f64;
    (macro_sum / classes as f64, correct / labels.len() as f64)
}
