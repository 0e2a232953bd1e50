use proptest::prelude::*;
use superpix::labels::{
    bresenham_interior, combine_edge_maps, edge_crossing_distance, gt_corrected_label, hard_example_filter,
    slic_replication_label, EdgeMap, NO_SEGMENT,
};
use superpix::nn::SENTINEL_DROPPED;
use superpix::slic::{ClusterCenter, SlicParams, SuperpixelMap};

#[test]
fn filter_keep_set_shrinks_with_x() {
    // every assignment of 7 candidates to 7 segments or "no segment"
    let alphabet: Vec<u32> = (0..7).chain([NO_SEGMENT]).collect();
    let mut cand = [0u32; 7];
    for code in 0..8usize.pow(7) {
        let mut c = code;
        for slot in cand.iter_mut() {
            *slot = alphabet[c % 8];
            c /= 8;
        }
        let kept: Vec<bool> = (1..=7).map(|x| hard_example_filter(&cand, x)).collect();
        assert!(kept.windows(2).all(|p| p[0] >= p[1]), "{cand:?}: {kept:?}");
    }
}

fn map_strategy(w: usize, h: usize, ids: u32) -> impl Strategy<Value = SuperpixelMap> {
    prop::collection::vec(0..ids, w * h).prop_map(move |l| SuperpixelMap::new(w, h, l).unwrap())
}

fn cluster_strategy() -> impl Strategy<Value = Vec<ClusterCenter>> {
    prop::collection::vec((0.0f64..24.0, 0.0f64..24.0, prop::collection::vec(-50.0f64..50.0, 4)), 1..9).prop_map(|cs| {
        cs.into_iter().map(|(x, y, features)| ClusterCenter { x, y, features, pixel_count: 1 }).collect()
    })
}

proptest! {
    #[test]
    fn edge_strength_bounded_and_order_free(maps in prop::collection::vec(map_strategy(7, 6, 3), 1..5), rot in 0usize..5) {
        let edges = combine_edge_maps(&maps).unwrap();
        prop_assert!(edges.strength.iter().all(|&s| s as usize <= maps.len()));
        let mut rotated = maps.clone();
        rotated.rotate_left(rot % maps.len());
        rotated.reverse();
        prop_assert_eq!(combine_edge_maps(&rotated).unwrap().strength, edges.strength);
    }

    #[test]
    fn bresenham_and_crossings_are_symmetric(
        a in (0i64..20, 0i64..16),
        b in (0i64..20, 0i64..16),
        strength in prop::collection::vec(0u32..3, 20 * 16),
    ) {
        // the path is traced from the canonical endpoint either way
        prop_assert_eq!(bresenham_interior(a, b), bresenham_interior(b, a));
        let edges = EdgeMap { width: 20, height: 16, strength, annotations: 2 };
        let ab = edge_crossing_distance(a, (b.0 as f64, b.1 as f64), &edges).unwrap();
        let ba = edge_crossing_distance(b, (a.0 as f64, a.1 as f64), &edges).unwrap();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn correction_matches_replication_when_winner_in_segment(
        clusters in cluster_strategy(),
        pixel in prop::collection::vec(-50.0f64..50.0, 4),
        pos in (0.0f64..24.0, 0.0f64..24.0),
        majority_seed in prop::collection::vec(0u32..3, 9),
        segment in 0u32..3,
    ) {
        let params = SlicParams::new(6, 10.0).with_beta(vec![0.5]);
        let candidates: Vec<u32> = (0..clusters.len() as u32).collect();
        let majority = &majority_seed[..clusters.len()];
        let rep = slic_replication_label(&pixel, pos.0, pos.1, &candidates, &clusters, &params);
        let cor = gt_corrected_label(&pixel, pos.0, pos.1, &candidates, &clusters, &params, segment, majority);
        if rep != SENTINEL_DROPPED && majority[candidates[rep as usize] as usize] == segment {
            prop_assert_eq!(cor, rep);
        }
        if cor != SENTINEL_DROPPED {
            prop_assert_eq!(majority[candidates[cor as usize] as usize], segment);
        }
    }
}
