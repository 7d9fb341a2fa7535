mod common;

use common::{random_pose, unit_vector};
use ecv_pose::geometry::{estimate_rigid_transform, Point3, RigidTransform};
use ecv_pose::icp::{icp_align, IcpConfig};
use ecv_pose::matching::{Correspondence, CorrespondenceSet};
use ecv_pose::ransac::{polygon_dissimilarity, register_correspondences, RansacConfig};
use ecv_pose::spatial::KdTree;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> Vec<Point3> {
    (0..n)
        .map(|_| Point3::new(rng.random_range(-extent..extent), rng.random_range(-extent..extent), rng.random_range(-extent..extent)))
        .collect()
}

fn corrupted(rng: &mut ChaCha8Rng, n: usize, fraction: f64) -> CorrespondenceSet {
    CorrespondenceSet::new(
        (0..n)
            .map(|i| {
                let scene_index = if rng.random_bool(fraction) { rng.random_range(0..n) } else { i };
                Correspondence { object_index: i, scene_index, distance: 0.0 }
            })
            .collect(),
    )
}

#[test]
fn ransac_survives_sixty_percent_corruption_with_and_without_prefilter() {
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let obj = cloud(&mut rng, 400, 0.15);
    let truth = random_pose(&mut rng, 1.0, 0.3);
    let scene: Vec<_> = obj.iter().map(|p| truth.apply(p)).collect();
    let corr = corrupted(&mut rng, obj.len(), 0.6);
    let base = RansacConfig {
        iterations: 2000,
        seed: 4,
        ..Default::default()
    };
    let on = register_correspondences(&obj, &scene, &corr, &RansacConfig { prefilter: true, ..base }).unwrap();
    let off = register_correspondences(&obj, &scene, &corr, &RansacConfig { prefilter: false, ..base }).unwrap();
    for r in [&on, &off] {
        let (a, t) = r.pose.difference(&truth);
        assert!(a.to_degrees() < 1.0 && t < 0.005);
    }
    assert!(on.stats.rejected_by_polygon > 0);
    assert_eq!(off.stats.rejected_by_polygon, 0);
    assert_eq!(on.stats.samples_drawn, off.stats.samples_drawn);
    assert!(on.stats.estimations < off.stats.estimations);
}

#[test]
fn ransac_is_deterministic_per_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let obj = cloud(&mut rng, 200, 0.1);
    let truth = random_pose(&mut rng, 0.5, 0.1);
    let scene: Vec<_> = obj.iter().map(|p| truth.apply(p)).collect();
    let corr = corrupted(&mut rng, obj.len(), 0.7);
    let cfg = RansacConfig { iterations: 500, seed: 11, ..Default::default() };
    let a = register_correspondences(&obj, &scene, &corr, &cfg).unwrap();
    let b = register_correspondences(&obj, &scene, &corr, &cfg).unwrap();
    assert_eq!((a.pose, a.inlier_count, a.mean_fit, a.stats), (b.pose, b.inlier_count, b.mean_fit, b.stats));
}

#[test]
fn icp_recovers_moderate_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let src = cloud(&mut rng, 400, 0.15);
        let truth = RigidTransform::from_axis_angle(unit_vector(&mut rng), 5f64.to_radians(), unit_vector(&mut rng) * 0.01);
        let dst: Vec<_> = src.iter().map(|p| truth.apply(p)).collect();
        let r = icp_align(&src, &dst, &RigidTransform::identity(), &IcpConfig::default()).unwrap();
        let (a, t) = r.pose.difference(&truth);
        assert!(a < 1e-4 && t < 1e-5, "{a} {t}");
        assert!(r.mean_fit <= r.fit_history[0]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transforms_are_isometries(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_pose(&mut rng, 3.0, 5.0);
        let p = cloud(&mut rng, 2, 3.0);
        let before = (p[0] - p[1]).norm();
        let after = (t.apply(&p[0]) - t.apply(&p[1])).norm();
        prop_assert!((before - after).abs() <= 1e-9);
    }

    #[test]
    fn noiseless_estimation_is_exact(seed in any::<u64>(), n in 3usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_pose(&mut rng, 3.0, 2.0);
        let obj = cloud(&mut rng, n, 1.0);
        let scene: Vec<_> = obj.iter().map(|p| t.apply(p)).collect();
        let est = estimate_rigid_transform(&obj, &scene).unwrap();
        for (p, q) in obj.iter().zip(&scene) {
            prop_assert!((est.apply(p) - q).norm() <= 1e-9);
        }
    }

    #[test]
    fn estimate_beats_ground_truth_on_noisy_data(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_pose(&mut rng, 3.0, 1.0);
        let obj = cloud(&mut rng, 8, 0.5);
        let scene: Vec<_> = obj.iter().map(|p| t.apply(p) + unit_vector(&mut rng) * 0.01).collect();
        let est = estimate_rigid_transform(&obj, &scene).unwrap();
        let cost = |x: &RigidTransform| obj.iter().zip(&scene).map(|(p, q)| (x.apply(p) - q).norm_squared()).sum::<f64>();
        prop_assert!(cost(&est) <= cost(&t) + 1e-12);
    }

    #[test]
    fn congruent_triangles_pass_the_prefilter(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_pose(&mut rng, 3.0, 2.0);
        let obj = cloud(&mut rng, 3, 0.3);
        let scene: Vec<_> = obj.iter().map(|p| t.apply(p)).collect();
        let delta = polygon_dissimilarity(&obj, &scene).unwrap();
        prop_assert!(delta.iter().all(|d| *d <= 1e-12));
    }

    #[test]
    fn kd_tree_agrees_with_linear_scan(seed in any::<u64>(), n in 1usize..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<[f64; 3]> = (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let tree = KdTree::new(pts.clone());
        for _ in 0..20 {
            let q = [rng.random(), rng.random(), rng.random()];
            let got = tree.nearest(&q).unwrap();
            let d = |p: &[f64; 3]| (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>();
            let best = (0..n).min_by(|&a, &b| d(&pts[a]).total_cmp(&d(&pts[b])).then(a.cmp(&b))).unwrap();
            prop_assert_eq!(got.index, best);
        }
    }
}
