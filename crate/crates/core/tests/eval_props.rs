use proptest::prelude::*;

use semgrid::*;

fn label() -> impl Strategy<Value = Label> {
    prop_oneof![1 => Just(None), 8 => (0usize..NUM_CLASSES).prop_map(|c| Some(ClassId::ALL[c]))]
}

fn pair() -> impl Strategy<Value = (Vec<Label>, Vec<Label>)> {
    (1usize..200).prop_flat_map(|n| (prop::collection::vec(label(), n), prop::collection::vec(label(), n)))
}

fn grid(labels: Vec<Label>) -> LabelGrid {
    let spec = GridSpec::new(0.0, 0.0, 1.0, 1, labels.len()).unwrap();
    LabelGrid::from_labels(spec, labels).unwrap()
}

fn confusion(pred: &[Label], gt: &[Label]) -> ConfusionMatrix {
    accumulate(ConfusionMatrix::new(), &grid(pred.to_vec()), &grid(gt.to_vec())).unwrap()
}

proptest! {
    #[test]
    fn iou_lies_in_unit_interval((pred, gt) in pair()) {
        let cm = confusion(&pred, &gt);
        prop_assert_eq!(cm.total() as usize, gt.iter().flatten().count());
        for iou in iou_per_class(&cm).into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&iou));
        }
        if let Ok(m) = mean_iou(&iou_per_class(&cm)) {
            prop_assert!((0.0..=1.0).contains(&m));
        }
    }

    #[test]
    fn relabeling_permutes_iou((pred, gt) in pair(), perm in Just((0..NUM_CLASSES).collect::<Vec<_>>()).prop_shuffle()) {
        let map = |l: &Label| l.map(|c| ClassId::ALL[perm[c.index()]]);
        let p2: Vec<Label> = pred.iter().map(map).collect();
        let g2: Vec<Label> = gt.iter().map(map).collect();
        let before = iou_per_class(&confusion(&pred, &gt));
        let after = iou_per_class(&confusion(&p2, &g2));
        for c in 0..NUM_CLASSES {
            prop_assert_eq!(before[c], after[perm[c]]);
        }
        match (mean_iou(&before), mean_iou(&after)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-12),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn confusion_is_additive((p1, g1) in pair(), (p2, g2) in pair()) {
        let mut pred = p1.clone();
        pred.extend(&p2);
        let mut gt = g1.clone();
        gt.extend(&g2);
        prop_assert_eq!(confusion(&pred, &gt), confusion(&p1, &g1) + confusion(&p2, &g2));
    }
}
