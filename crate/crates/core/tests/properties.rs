use baen_svm::data::{standardize, stratified_kfold, Dataset};
use baen_svm::experiments::{average_ranks, flip_labels};
use baen_svm::losses::{aen_eps_loss, baen_eps_loss, LossParams};
use baen_svm::trainer::{hq_update_weights, HyperParams};
use ndarray::Array2;
use proptest::prelude::*;

fn loss_params() -> impl Strategy<Value = LossParams> {
    (0.01f64..10.0, 0.05f64..=1.0, 0.05f64..=1.0, 0.0f64..2.0)
        .prop_map(|(eta, p, tau, eps)| LossParams { lambda: 1.0, eta, p, tau, eps })
}

fn dataset(max_n: usize) -> impl Strategy<Value = Dataset> {
    (4usize..max_n, 1usize..4).prop_flat_map(|(n, p)| {
        (prop::collection::vec(-100.0f64..100.0, n * p), prop::collection::vec(any::<bool>(), n)).prop_map(
            move |(x, flags)| {
                let mut labels: Vec<i8> = flags.iter().map(|&f| if f { 1 } else { -1 }).collect();
                labels[0] = 1;
                labels[1] = -1;
                Dataset::new(Array2::from_shape_vec((n, p), x).unwrap(), labels, "prop").unwrap()
            },
        )
    })
}

proptest! {
    #[test]
    fn hq_weights_follow_the_loss(loss in loss_params(), c in 0.01f64..100.0, z in prop::collection::vec(-30.0f64..30.0, 1..20)) {
        let hp = HyperParams { c, loss, ..HyperParams::default() };
        let w = hq_update_weights(&z, &hp);
        let (lo, hi) = loss.band();
        for (&zi, &wi) in z.iter().zip(&w) {
            prop_assert!(wi > 0.0 && wi <= c * loss.eta * (1.0 + 1e-12));
            if lo <= zi && zi <= hi {
                prop_assert_eq!(wi, c * loss.eta);
            }
            let s = 1.0 + loss.eta * aen_eps_loss(zi, loss.p, loss.tau, loss.eps);
            prop_assert!((wi - c * loss.eta / (s * s)).abs() <= 1e-12 * c * loss.eta);
        }
    }

    #[test]
    fn far_margins_get_smaller_weights(loss in loss_params(), a in 0.0f64..40.0, b in 0.0f64..40.0) {
        let hp = HyperParams { loss, ..HyperParams::default() };
        let (_, hi) = loss.band();
        let (near, far) = if a <= b { (a, b) } else { (b, a) };
        let w = hq_update_weights(&[hi + near, hi + far], &hp);
        prop_assert!(w[1] <= w[0]);
    }

    #[test]
    fn bounded_loss_never_exceeds_its_cap(loss in loss_params(), z in -1e4f64..1e4) {
        let v = baen_eps_loss(z, &loss);
        prop_assert!((0.0..1.0).contains(&v));
    }

    #[test]
    fn flips_exact_count(d in dataset(60), fraction in 0.0f64..=1.0, seed in any::<u64>()) {
        let flipped = flip_labels(&d, fraction, seed).unwrap();
        let changed = d.labels().iter().zip(flipped.labels()).filter(|(a, b)| a != b).count();
        prop_assert_eq!(changed, (fraction * d.len() as f64).round() as usize);
        prop_assert_eq!(flipped.samples(), d.samples());
    }

    #[test]
    fn rank_sums_are_triangular(scores in prop::collection::vec(prop::collection::vec(0u8..5, 6), 2..8), higher in any::<bool>()) {
        let k = scores.len();
        let by_classifier: Vec<Vec<f64>> = scores.iter().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect();
        let rt = average_ranks(&by_classifier, higher).unwrap();
        let expected = (k * (k + 1)) as f64 / 2.0;
        for d in 0..6 {
            let sum: f64 = (0..k).map(|j| rt.ranks[j][d]).sum();
            prop_assert!((sum - expected).abs() < 1e-12);
        }
        let mean_total: f64 = rt.mean_ranks.iter().sum();
        prop_assert!((mean_total - expected).abs() < 1e-9);
    }

    #[test]
    fn standardized_columns(d in dataset(40)) {
        let (s, params) = standardize(&d);
        let n = s.len() as f64;
        for (j, col) in s.samples().columns().into_iter().enumerate() {
            if params.stddevs[j] == 0.0 {
                continue;
            }
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn folds_partition_and_stratify(d in dataset(80), k in 2usize..4, seed in any::<u64>()) {
        let (pos, neg) = d.class_counts();
        prop_assume!(pos >= k && neg >= k);
        let plan = stratified_kfold(&d, k, seed).unwrap();
        let mut seen = vec![0; d.len()];
        for f in 0..k {
            let test = plan.test_indices(f);
            let train = plan.train_indices(f);
            prop_assert_eq!(test.len() + train.len(), d.len());
            for &i in &test {
                seen[i] += 1;
            }
            let fold_pos = test.iter().filter(|&&i| d.labels()[i] > 0).count();
            prop_assert!(fold_pos >= pos / k && fold_pos <= pos.div_ceil(k));
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }
}
