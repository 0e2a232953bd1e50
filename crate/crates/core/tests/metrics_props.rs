use proptest::prelude::*;
use superpix::metrics::{
    achievable_iou, boundary_pixels, boundary_recall, compactness, mean_distance_to_edge, undersegmentation_error,
    ImageMetrics,
};
use superpix::slic::SuperpixelMap;

const W: usize = 12;
const H: usize = 10;

/// Blocky maps so segments are not single pixels.
fn blocky(ids: u32) -> impl Strategy<Value = SuperpixelMap> {
    prop::collection::vec(0..ids, 4 * 4).prop_map(|cells| {
        let labels = (0..W * H).map(|i| cells[(i / W) * 4 / H * 4 + (i % W) * 4 / W]).collect();
        SuperpixelMap::new(W, H, labels).unwrap()
    })
}

fn relabel(map: &SuperpixelMap, f: impl Fn(u32) -> u32) -> SuperpixelMap {
    SuperpixelMap::new(map.width(), map.height(), map.labels().iter().map(|&l| f(l)).collect()).unwrap()
}

fn permutation(n: u32, seed: u64) -> Vec<u32> {
    let mut p: Vec<u32> = (0..n).collect();
    let mut s = seed | 1;
    for i in (1..p.len()).rev() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        p.swap(i, (s % (i as u64 + 1)) as usize);
    }
    p
}

proptest! {
    #[test]
    fn invariant_under_sp_relabeling(sp in blocky(6), gt in blocky(3), seed in any::<u64>()) {
        let perm = permutation(6, seed);
        let a = ImageMetrics::compute("a", &sp, &gt, 2).unwrap();
        let b = ImageMetrics::compute("a", &relabel(&sp, |l| perm[l as usize] * 3 + 11), &gt, 2).unwrap();
        prop_assert_eq!(a, b);
    }

    // rec, mde, ue and co do not look at ids at all; iou breaks ties by
    // ground-truth id, so it is checked with an order-preserving relabeling
    #[test]
    fn invariant_under_gt_relabeling(sp in blocky(6), gt in blocky(3), seed in any::<u64>()) {
        let perm = permutation(3, seed);
        let shuffled = relabel(&gt, |l| perm[l as usize] + 40);
        let a = ImageMetrics::compute("a", &sp, &gt, 2).unwrap();
        let b = ImageMetrics::compute("a", &sp, &shuffled, 2).unwrap();
        prop_assert_eq!((a.rec, a.mde, a.ue, a.co), (b.rec, b.mde, b.ue, b.co));
        let monotone = relabel(&gt, |l| l * 5 + 2);
        prop_assert_eq!(achievable_iou(&sp, &gt).unwrap(), achievable_iou(&sp, &monotone).unwrap());
    }

    #[test]
    fn ranges_and_zero_mde(sp in blocky(6), gt in blocky(3)) {
        let rec = boundary_recall(&sp, &gt, 2).unwrap();
        let iou = achievable_iou(&sp, &gt).unwrap();
        prop_assert!((0.0..=1.0).contains(&rec) && (0.0..=1.0).contains(&iou));
        let (bs, bg) = (boundary_pixels(&sp), boundary_pixels(&gt));
        let covered = bg.iter().zip(&bs).all(|(&g, &s)| !g || s);
        prop_assert_eq!(mean_distance_to_edge(&sp, &gt).unwrap() == 0.0, covered);
    }

    #[test]
    fn splitting_along_gt_never_raises_ue(sp in blocky(5), gt in blocky(3), target in 0u32..5) {
        let before = undersegmentation_error(&sp, &gt).unwrap();
        let split = SuperpixelMap::new(
            W,
            H,
            sp.labels().iter().zip(gt.labels()).map(|(&s, &g)| if s == target { 100 + g } else { s }).collect(),
        )
        .unwrap();
        prop_assert!(undersegmentation_error(&split, &gt).unwrap() <= before + 1e-15);
    }

    #[test]
    fn square_grids_have_quarter_pi_compactness(s in 1usize..9, nx in 1usize..6, ny in 1usize..6) {
        let (w, h) = (s * nx, s * ny);
        let map = SuperpixelMap::new(w, h, (0..w * h).map(|i| ((i % w) / s + nx * ((i / w) / s)) as u32).collect()).unwrap();
        prop_assert!((compactness(&map) - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }
}
