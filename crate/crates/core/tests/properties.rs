use abd_core::dataset::{balance_by_duplication, LabeledSet};
use abd_core::framing::{extract_frames, frame_count, Class, FrameConfig, LabeledFrame};
use abd_core::metrics::{confusion_counts, fm_index, precision_recall, summarize_trials};
use abd_core::numerics::relu;
use abd_core::pln::reproduction_matrix;
use abd_core::signal::PatientRecord;
use abd_core::Matrix;
use proptest::prelude::*;

fn class_vec(bits: &[bool]) -> Vec<Class> {
    bits.iter().map(|&b| if b { Class::C1 } else { Class::C2 }).collect()
}

fn set_with_labels(labels: &[Class]) -> LabeledSet {
    let frames: Vec<LabeledFrame> = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| LabeledFrame {
            features: vec![i as f64, -(i as f64)],
            label,
            patient_id: if i % 2 == 0 { "a".into() } else { "b".into() },
            start_index: i,
        })
        .collect();
    LabeledSet::from_frames(&frames, 2)
}

proptest! {
    #[test]
    fn frames_cover_every_window(len in 15usize..200, l in 1usize..15) {
        let cfg = FrameConfig::new(l).unwrap();
        let hr: Vec<f64> = (0..len).map(|i| 100.0 + i as f64).collect();
        let spo2 = vec![95.0; len];
        let record = PatientRecord::from_channels("p", &hr, &spo2, &[]);
        let frames = extract_frames(&record, &cfg).unwrap();
        prop_assert_eq!(frames.len(), frame_count(len, &cfg));
        prop_assert_eq!(frames.len(), len - l + 1);
        for f in &frames {
            prop_assert_eq!(f.features.len(), 2 * l);
            prop_assert_eq!(f.features[0], hr[f.start_index]);
        }
    }

    #[test]
    fn duplication_balances_and_keeps_originals(
        labels in prop::collection::vec(any::<bool>(), 2..120),
        seed in any::<u64>(),
    ) {
        let labels = class_vec(&labels);
        let set = set_with_labels(&labels);
        let (c1, c2) = set.class_counts();
        prop_assume!(c1 > 0 && c2 > 0);
        let bal = balance_by_duplication(&set, seed).unwrap();
        let (b1, b2) = bal.class_counts();
        prop_assert_eq!(b1, b2);
        prop_assert_eq!(b1, c1.max(c2));
        // every original column survives and every added column is a copy
        let orig: Vec<Vec<f64>> = (0..set.len()).map(|j| set.x.column(j)).collect();
        let balanced: Vec<Vec<f64>> = (0..bal.len()).map(|j| bal.x.column(j)).collect();
        for c in &orig {
            prop_assert!(balanced.contains(c));
        }
        for c in &balanced {
            prop_assert!(orig.contains(c));
        }
        prop_assert_eq!(bal.patients(), set.patients());
        prop_assert_eq!(balance_by_duplication(&set, seed).unwrap(), bal);
    }

    #[test]
    fn confusion_counts_sum_to_length(
        pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 0..300),
    ) {
        let truth = class_vec(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
        let pred = class_vec(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
        let c = confusion_counts(&truth, &pred).unwrap();
        prop_assert_eq!(c.total(), pairs.len());
        prop_assert_eq!(c.tp + c.fn_, truth.iter().filter(|&&t| t == Class::C1).count());
        prop_assert_eq!(c.tp + c.fp, pred.iter().filter(|&&p| p == Class::C1).count());
        if let Ok((p, r)) = precision_recall(&c) {
            let fm = fm_index(&c).unwrap();
            prop_assert!((0.0..=1.0).contains(&fm));
            prop_assert!((fm * fm - p * r).abs() <= 1e-12);
        }
    }

    #[test]
    fn summary_ignores_order(values in prop::collection::vec(0.0f64..1.0, 1..40), rot in 0usize..40) {
        let mut shuffled = values.clone();
        shuffled.rotate_left(rot % values.len());
        shuffled.reverse();
        let a = summarize_trials(&values).unwrap();
        let b = summarize_trials(&shuffled).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.std >= 0.0);
    }

    #[test]
    fn reproduction_passes_prediction_through(
        t in prop::collection::vec(-1e6f64..1e6, 2 * 8),
        extra in 0usize..6,
    ) {
        let t = Matrix::from_vec(2, 8, t);
        let z = relu(&t).vstack(&relu(&t.scale(-1.0))).vstack(&Matrix::from_fn(extra, 8, |r, c| (r + c) as f64));
        let out = reproduction_matrix(4 + extra).matmul(&z);
        prop_assert!(out.sub(&t).max_abs() <= 1e-12 * (1.0 + t.max_abs()));
    }
}
