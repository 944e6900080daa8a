use proptest::prelude::*;
use sparse_softmax::gradcheck::{central_difference, is_fd_comparable, relative_error};
use sparse_softmax::{
    ce_loss, softmax, sparse_ce_loss, sparse_softmax, top_k, LogitVector, TargetPolicy,
};

// Brute force: stable sort of all indices by (value desc, index asc).
fn oracle_top_k(z: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..z.len()).collect();
    idx.sort_by(|&a, &b| z[b].partial_cmp(&z[a]).unwrap());
    idx.truncate(k.min(z.len()));
    idx.sort();
    idx
}

// Softmax of a sub-vector, computed in extended form with an explicit
// shift by the sub-vector's own first element.
fn oracle_sub_softmax(sub: &[f64]) -> Vec<f64> {
    let shift = sub[0];
    let e: Vec<f64> = sub.iter().map(|x| (x - shift).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

fn logits(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, 1..=max_len)
}

// Logits drawn from a small grid so ties are common.
fn tied_logits() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-3i32..=3).prop_map(f64::from), 1..=12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn top_k_matches_sorting(v in prop_oneof![logits(30), tied_logits()], k in 1usize..40) {
        let z = LogitVector::new(v.clone()).unwrap();
        let s = top_k(&z, k).unwrap();
        let want = oracle_top_k(&v, k);
        prop_assert_eq!(s.indices(), want.as_slice());
        prop_assert_eq!(s.len(), k.min(v.len()));
        for &i in s.indices() {
            for j in (0..v.len()).filter(|j| !s.contains(*j)) {
                prop_assert!(v[i] >= v[j]);
            }
        }
    }

    #[test]
    fn sparse_softmax_normalizes(v in logits(40), k in 1usize..50) {
        let z = LogitVector::new(v.clone()).unwrap();
        let p = sparse_softmax(&z, k).unwrap();
        prop_assert!((p.sum() - 1.0).abs() < 1e-12);
        prop_assert!(p.nonzero_count() <= k.min(v.len()));
        for (i, &x) in p.values().iter().enumerate() {
            prop_assert!(x >= 0.0);
            if !p.support().contains(&i) {
                prop_assert_eq!(x.to_bits(), 0u64);
            }
        }
    }

    #[test]
    fn full_k_reduces_to_softmax(v in logits(60), extra in 0usize..5) {
        let z = LogitVector::new(v.clone()).unwrap();
        let a = sparse_softmax(&z, v.len() + extra).unwrap();
        let b = softmax(&z);
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn support_entries_match_sub_vector(v in prop_oneof![logits(20), tied_logits()], k in 1usize..21) {
        let z = LogitVector::new(v.clone()).unwrap();
        let p = sparse_softmax(&z, k).unwrap();
        let support = oracle_top_k(&v, k);
        let sub: Vec<f64> = support.iter().map(|&i| v[i]).collect();
        let want = oracle_sub_softmax(&sub);
        for (j, &i) in support.iter().enumerate() {
            prop_assert!((p.values()[i] - want[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn argmax_is_preserved(v in prop_oneof![logits(30), tied_logits()], k in 1usize..35) {
        let z = LogitVector::new(v).unwrap();
        prop_assert_eq!(sparse_softmax(&z, k).unwrap().argmax(), softmax(&z).argmax());
        prop_assert_eq!(softmax(&z).argmax(), z.argmax());
    }

    #[test]
    fn shift_invariance(
        q in prop::collection::vec(-51200i32..51200, 1..=30), k in 1usize..35, c in -500i32..500
    ) {
        // Dyadic logits and integer shifts add exactly, so ranks cannot change
        // through rounding.
        let v: Vec<f64> = q.iter().map(|&x| f64::from(x) / 1024.0).collect();
        let c = f64::from(c);
        let z = LogitVector::new(v).unwrap();
        let zc = z.shifted(c).unwrap();
        let (sa, sb) = (top_k(&z, k).unwrap(), top_k(&zc, k).unwrap());
        prop_assert_eq!(sa.indices(), sb.indices());
        let a = sparse_softmax(&z, k).unwrap();
        let b = sparse_softmax(&zc, k).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn sparse_loss_never_exceeds_full(
        v in logits(40), t in 0usize..40, k in 1usize..45, force in any::<bool>()
    ) {
        let z = LogitVector::new(v.clone()).unwrap();
        let t = t % v.len();
        let full = ce_loss(&z, t).unwrap();
        let sparse = sparse_ce_loss(&z, t, k, TargetPolicy::from_flag(force)).unwrap();
        prop_assert!(sparse.loss <= full.loss + 1e-12);
        prop_assert!(sparse.loss >= 0.0);
        prop_assert!(full.gradient.iter().sum::<f64>().abs() < 1e-10);
        if force || top_k(&z, k).unwrap().contains(t) {
            prop_assert!(sparse.gradient.iter().sum::<f64>().abs() < 1e-10);
        }
    }

    #[test]
    fn gradients_match_finite_differences(
        v in prop::collection::vec(-4.0f64..4.0, 2..=15),
        t in 0usize..15, k in 1usize..16, force in any::<bool>()
    ) {
        let z = LogitVector::new(v.clone()).unwrap();
        let t = t % v.len();
        let mut sorted = v.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assume!(sorted.windows(2).all(|w| w[1] - w[0] > 1e-3));
        let policy = TargetPolicy::from_flag(force);
        prop_assert!(is_fd_comparable(&z, t, k, policy, 1e-3).unwrap());

        let h = 1e-5;
        let fd = central_difference(
            |x| ce_loss(&LogitVector::from_slice(x).unwrap(), t).unwrap().loss, &v, h);
        prop_assert!(relative_error(&ce_loss(&z, t).unwrap().gradient, &fd) < 1e-5);

        let fd = central_difference(
            |x| sparse_ce_loss(&LogitVector::from_slice(x).unwrap(), t, k, policy).unwrap().loss,
            &v, h);
        let g = sparse_ce_loss(&z, t, k, policy).unwrap().gradient;
        prop_assert!(relative_error(&g, &fd) < 1e-5);
    }
}

#[test]
fn kernels_are_thread_safe() {
    let z = LogitVector::new((0..200).map(|i| (i as f64 * 0.37).sin() * 8.0).collect()).unwrap();
    let expected = sparse_softmax(&z, 20).unwrap();
    std::thread::scope(|s| {
        for _ in 0..8 {
            s.spawn(|| {
                for _ in 0..100 {
                    assert_eq!(sparse_softmax(&z, 20).unwrap(), expected);
                }
            });
        }
    });
}
