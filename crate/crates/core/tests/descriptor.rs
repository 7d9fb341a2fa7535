mod common;

use common::{brute_force_descriptors, random_pose, random_primitives, transform_primitives};
use ecv_pose::descriptor::{build_all_descriptors, build_descriptor, DescriptorConfig, BINS, RELATIONS};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn spatial_index_matches_full_scan_on_200_primitives() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let prims = random_primitives(&mut rng, 200, 0.1);
    for cfg in [
        DescriptorConfig::default(),
        DescriptorConfig {
            mixed_kinds: false,
            ..Default::default()
        },
        DescriptorConfig {
            normalize: false,
            min_neighbors: 3,
            ..Default::default()
        },
    ] {
        let (fast, report) = build_all_descriptors(&prims, &cfg).unwrap();
        let oracle = brute_force_descriptors(&prims, &cfg);
        let expected: Vec<_> = oracle.iter().enumerate().filter_map(|(i, d)| d.map(|d| (i, d))).collect();
        assert_eq!(fast.len(), expected.len());
        assert_eq!(report.emitted + report.skipped.len(), prims.len());
        for (d, (i, v)) in fast.iter().zip(&expected) {
            assert_eq!(d.source_index, *i);
            assert_eq!(d.values, *v);
        }
    }
}

#[test]
fn ten_primitive_neighborhood_counts_all_45_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let prims = random_primitives(&mut rng, 10, 0.012);
    let cfg = DescriptorConfig {
        normalize: false,
        ..Default::default()
    };
    let d = build_descriptor(0, &prims, &cfg).unwrap();
    for r in 0..RELATIONS {
        assert_eq!(d.block(r).iter().sum::<f64>(), 45.0);
    }
    assert_eq!(Some(d.values), brute_force_descriptors(&prims, &cfg)[0]);
}

#[test]
fn sparse_sets_emit_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut prims = random_primitives(&mut rng, 20, 0.1);
    for (i, p) in prims.iter_mut().enumerate() {
        p.position.x = i as f64 * 0.1;
    }
    let (d, report) = build_all_descriptors(&prims, &DescriptorConfig::default()).unwrap();
    assert!(d.is_empty());
    assert_eq!(report.skipped.len(), 20);
    assert!(build_all_descriptors(&[], &DescriptorConfig::default()).unwrap().0.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rigid_motion_leaves_descriptors_unchanged(seed in any::<u64>(), n in 50usize..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prims = random_primitives(&mut rng, n, 0.1);
        let t = random_pose(&mut rng, std::f64::consts::PI, 2.0);
        let cfg = DescriptorConfig::default();
        let (a, _) = build_all_descriptors(&prims, &cfg).unwrap();
        let (b, _) = build_all_descriptors(&transform_primitives(&t, &prims), &cfg).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.source_index, y.source_index);
            for (u, v) in x.values.iter().zip(&y.values) {
                prop_assert!((u - v).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn shuffling_primitives_only_relabels(seed in any::<u64>(), n in 20usize..150) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prims = random_primitives(&mut rng, n, 0.08);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let shuffled: Vec<_> = order.iter().map(|&i| prims[i]).collect();
        let cfg = DescriptorConfig::default();
        let (a, _) = build_all_descriptors(&prims, &cfg).unwrap();
        let (b, _) = build_all_descriptors(&shuffled, &cfg).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for d in &b {
            let original = order[d.source_index];
            let twin = a.iter().find(|x| x.source_index == original).unwrap();
            prop_assert_eq!(twin.values, d.values);
        }
    }

    #[test]
    fn blocks_are_distributions(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prims = random_primitives(&mut rng, 120, 0.08);
        let (descs, _) = build_all_descriptors(&prims, &DescriptorConfig::default()).unwrap();
        for d in descs {
            prop_assert_eq!(d.values.len(), BINS * RELATIONS);
            for r in 0..RELATIONS {
                prop_assert!((d.block(r).iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                prop_assert!(d.block(r).iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }
}
