use proptest::prelude::*;

use semgrid::*;

fn input_and_head() -> impl Strategy<Value = (FusionInput, LateFusionHead, Vec<usize>)> {
    (1usize..6, 1usize..40, 1usize..9, any::<u64>()).prop_flat_map(|(channels, cells, hidden, seed)| {
        (
            prop::collection::vec(-3.0f64..3.0, channels * cells),
            prop::collection::vec(prop::bool::weighted(0.9), cells),
            Just((0..cells).collect::<Vec<_>>()).prop_shuffle(),
        )
            .prop_map(move |(data, valid, perm)| {
                let spec = GridSpec::new(0.0, 0.0, 1.0, 1, cells).unwrap();
                let names = (0..channels).map(|c| format!("c{c}")).collect();
                let input = FusionInput::new(spec, names, data, valid).unwrap();
                (input, LateFusionHead::init(channels, hidden, seed), perm)
            })
    })
}

fn permuted(input: &FusionInput, perm: &[usize]) -> FusionInput {
    let data = perm.iter().flat_map(|&k| input.cell(k).to_vec()).collect();
    let valid = perm.iter().map(|&k| input.cell_validity()[k]).collect();
    FusionInput::new(*input.spec(), input.channel_names().to_vec(), data, valid).unwrap()
}

#[test]
fn zero_head_gives_uniform_loss() {
    let spec = GridSpec::new(0.0, 0.0, 1.0, 2, 3).unwrap();
    let input = FusionInput::new(spec, vec!["a".into()], vec![0.5; 6], vec![true; 6]).unwrap();
    let mut gt = LabelGrid::ignored(spec);
    gt.set(CellIndex::new(0, 1), Some(ClassId::POLE));
    gt.set(CellIndex::new(1, 2), Some(ClassId::ROAD));
    let (loss, _) = loss_and_gradient(&LateFusionHead::zeros(1, 4), &input, &gt).unwrap();
    assert!((loss - (NUM_CLASSES as f64).ln()).abs() <= 1e-12);
    assert!(loss_and_gradient(&LateFusionHead::zeros(1, 4), &input, &LabelGrid::ignored(spec)).is_err());
}

#[test]
fn channel_mismatch_rejected() {
    let spec = GridSpec::new(0.0, 0.0, 1.0, 1, 1).unwrap();
    let input = FusionInput::new(spec, vec!["a".into()], vec![0.5], vec![true]).unwrap();
    assert!(forward(&LateFusionHead::zeros(2, 4), &input).is_err());
}

proptest! {
    #[test]
    fn cells_are_independent((input, head, perm) in input_and_head()) {
        let out = forward(&head, &input).unwrap();
        let moved = forward(&head, &permuted(&input, &perm)).unwrap();
        for (k, &src) in perm.iter().enumerate() {
            prop_assert_eq!(moved[k], out[src]);
        }
        let pred = predict(&head, &input).unwrap();
        let pred_moved = predict(&head, &permuted(&input, &perm)).unwrap();
        for (k, &src) in perm.iter().enumerate() {
            prop_assert_eq!(pred_moved.labels()[k], pred.labels()[src]);
        }
    }

    #[test]
    fn scaling_the_output_layer_scales_logits((input, head, _) in input_and_head(), alpha in 0.1f64..10.0) {
        let mut scaled = head.clone();
        scaled.w2.iter_mut().chain(scaled.b2.iter_mut()).for_each(|w| *w *= alpha);
        let a = forward(&head, &input).unwrap();
        let b = forward(&scaled, &input).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for (u, v) in x.iter().zip(y) {
                prop_assert!((u * alpha - v).abs() <= 1e-9 * (1.0 + v.abs()));
            }
        }
        prop_assert_eq!(predict(&head, &input).unwrap(), predict(&scaled, &input).unwrap());
    }

    #[test]
    fn logits_are_finite((input, head, _) in input_and_head()) {
        prop_assert!(forward(&head, &input).unwrap().iter().flatten().all(|v| v.is_finite()));
    }
}
