mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use superpix::nn::{build_regression, NetworkState};
use superpix::slic::{init_clusters, slic_segment, SlicParams};
use superpix::trainpix::{assign_by_classifier, nearest_q_clusters, trainable_cluster, trainable_segment, Classifier, TrainpixParams};

/// Network with random weights in every layer, so its decisions are not trivial.
fn random_network(m: usize, q: usize, depth: usize, seed: u64) -> NetworkState {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = NetworkState::init(&build_regression(m, q, depth).unwrap(), &mut rng).unwrap();
    for p in net.params.iter_mut() {
        for v in p.iter_mut() {
            *v = (rng.gen_range(0.05..1.0f32)) as f64;
        }
    }
    net
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn oracle_reproduces_slic(seed in any::<u64>(), sigma in 2.0f64..30.0, w in 16usize..33, h in 16usize..33) {
        let img = common::voronoi_image(w, h, 5, 6, seed);
        let slic = SlicParams::new(6, sigma).with_beta(vec![1.2, 0.4]);
        let q = init_clusters(&img, slic.step).unwrap().len();
        let expected = slic_segment(&img, &slic).unwrap();
        let got = trainable_segment(&img, &TrainpixParams { q, slic, batch: 97 }, &Classifier::AnalyticSlic).unwrap();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn batch_size_does_not_change_labels(seed in any::<u64>(), batch in 1usize..300, depth in prop::sample::select(vec![1usize, 3])) {
        let img = common::voronoi_image(20, 18, 4, 5, seed);
        let classifier = Classifier::Network(random_network(4, 5, depth, seed ^ 0x55));
        let base = TrainpixParams::new(5, 10.0).with_q(5);
        let clusters = init_clusters(&img, 5).unwrap();
        let a = assign_by_classifier(&img, &clusters, &TrainpixParams { batch, ..base.clone() }, &classifier, None).unwrap();
        let b = assign_by_classifier(&img, &clusters, &TrainpixParams { batch: 4096, ..base }, &classifier, None).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn final_labels_are_among_nearest_clusters(seed in any::<u64>(), q in 1usize..8) {
        let img = common::voronoi_image(24, 24, 4, 5, seed);
        let params = TrainpixParams::new(6, 10.0).with_q(q);
        let run = trainable_cluster(&img, &params, &Classifier::Network(random_network(4, q, 3, seed))).unwrap();
        for (i, &l) in run.labels.iter().enumerate() {
            let near = nearest_q_clusters((i % 24) as f64, (i / 24) as f64, &run.assignment_clusters, q);
            prop_assert!(near.contains(&l), "pixel {i} label {l} not in {near:?}");
        }
    }
}
