use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use semgrid::*;

fn spec() -> GridSpec {
    GridSpec::new(-2.0, -2.0, 0.5, 8, 8).unwrap()
}

fn scene() -> impl Strategy<Value = (PointCloud, Vec<ClassId>, u64)> {
    prop::collection::vec((-2.5f64..2.5, -2.5f64..2.5, 0usize..NUM_CLASSES), 1..300).prop_flat_map(|v| {
        let cloud = PointCloud::new(v.iter().map(|&(x, y, _)| Point::new(x, y, 0.0, 0.5)).collect()).unwrap();
        let classes: Vec<ClassId> = v.iter().map(|&(_, _, c)| ClassId::ALL[c]).collect();
        (Just(cloud), Just(classes), any::<u64>())
    })
}

fn shuffled(cloud: &PointCloud, seed: u64) -> PointCloud {
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pts = order.iter().map(|&i| cloud.points()[i]).collect();
    let mut out = PointCloud::new(pts).unwrap();
    if let Some(l) = cloud.labels() {
        out = out.with_labels(order.iter().map(|&i| l[i]).collect()).unwrap();
    }
    if let Some(p) = cloud.probabilities() {
        out = out.with_probabilities(order.iter().map(|&i| p[i]).collect()).unwrap();
    }
    out
}

#[test]
fn mean_requires_summed_input() {
    let cloud = PointCloud::new(vec![Point::new(0.1, 0.1, 0.0, 0.0)])
        .unwrap()
        .with_labels(vec![Some(ClassId::ROAD)])
        .unwrap();
    let hist = encode_histogram(&cloud, &spec()).unwrap();
    assert!(encode_mean(&hist).is_err());
    assert!(encode_summed(&cloud, &spec()).is_err());
}

#[test]
fn synthetic_accuracy_tracks_flip_rate() {
    let truth = vec![ClassId::SIDEWALK; 10_000];
    let rows = synth_probabilities(&truth, 0.2, 8.0, 11).unwrap();
    let correct = rows.iter().filter(|r| argmax(&r[..]) == ClassId::SIDEWALK.index()).count();
    let acc = correct as f64 / truth.len() as f64;
    assert!((acc - 0.8).abs() <= 0.02, "{acc}");
    assert!(synth_probabilities(&truth, 1.0, 8.0, 0).is_err());
}

proptest! {
    #[test]
    fn encodings_ignore_point_order((cloud, classes, seed) in scene()) {
        let s = spec();
        let probs = synth_probabilities(&classes, 0.3, 3.0, seed).unwrap();
        let cloud = cloud.with_probabilities(probs).unwrap();
        let other = shuffled(&cloud, seed ^ 0x5a5a);

        let (h1, h2) = (encode_histogram(&cloud, &s).unwrap(), encode_histogram(&other, &s).unwrap());
        prop_assert_eq!(&h1, &h2);
        prop_assert_eq!(encode_argmax(&h1), encode_argmax(&h2));
        let (s1, s2) = (encode_summed(&cloud, &s).unwrap(), encode_summed(&other, &s).unwrap());
        for (a, b) in s1.mass().iter().zip(s2.mass()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let (m1, m2) = (encode_mean(&s1).unwrap(), encode_mean(&s2).unwrap());
        for (a, b) in m1.mass().iter().zip(m2.mass()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn channel_sums((cloud, classes, seed) in scene()) {
        let s = spec();
        let cloud = cloud.with_probabilities(synth_probabilities(&classes, 0.1, 5.0, seed).unwrap()).unwrap();
        let summed = encode_summed(&cloud, &s).unwrap();
        let mean = encode_mean(&summed).unwrap();
        for k in 0..s.n_cells() {
            let c = s.unflat(k);
            let n = summed.count(c);
            prop_assert!((summed.cell(c).iter().sum::<f64>() - n as f64).abs() <= 1e-4);
            if n > 0 {
                prop_assert!((mean.cell(c).iter().sum::<f64>() - 1.0).abs() <= 1e-4);
            }
            prop_assert!(summed.cell(c).iter().all(|&m| m >= 0.0));
        }
    }

    #[test]
    fn one_hot_summed_equals_histogram((cloud, classes, _seed) in scene()) {
        let rows = classes.iter().map(|c| {
            let mut r = [0.0; NUM_CLASSES];
            r[c.index()] = 1.0;
            r
        }).collect();
        let cloud = cloud.with_probabilities(rows).unwrap();
        let h = encode_histogram(&cloud, &spec()).unwrap();
        let s = encode_summed(&cloud, &spec()).unwrap();
        prop_assert_eq!(h.mass(), s.mass());
        prop_assert_eq!(h.counts(), s.counts());
    }
}
