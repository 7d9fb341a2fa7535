mod common;

use common::{random_pose, random_primitives};
use ecv_pose::descriptor::{build_all_descriptors, DescriptorConfig};
use ecv_pose::ecv::{Intrinsics, RgbdFrame};
use ecv_pose::io::{self, IoError, PipelineConfig};
use ecv_pose::matching::{match_descriptors, MatchOptions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn round_trip<T>(write: impl FnOnce(&mut Vec<u8>), read: impl FnOnce(&[u8]) -> io::Result<T>) -> T {
    let mut buf = Vec::new();
    write(&mut buf);
    read(&buf).unwrap()
}

#[test]
fn thousand_primitives_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut prims = random_primitives(&mut rng, 1000, 3.0);
    for p in prims.iter_mut() {
        p.position *= rng.random_range(0.001..100.0);
    }
    let back = round_trip(|b| io::write_primitives(b, &prims).unwrap(), |r| io::read_primitives(r));
    assert_eq!(back.len(), prims.len());
    for (a, b) in prims.iter().zip(&back) {
        assert!((a.position - b.position).norm() <= 1e-12 * a.position.coords.norm().max(1.0));
        assert!((a.orientation - b.orientation).norm() <= 1e-12);
        assert_eq!((a.kind, a.pixel), (b.kind, b.pixel));
        for k in 0..3 {
            assert!((a.color[k] - b.color[k]).abs() <= 1e-12);
        }
    }
}

#[test]
fn descriptors_and_correspondences_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let prims = random_primitives(&mut rng, 150, 0.08);
    let (descs, _) = build_all_descriptors(&prims, &DescriptorConfig::default()).unwrap();
    let back = round_trip(|b| io::write_descriptors(b, &descs).unwrap(), |r| io::read_descriptors(r));
    assert_eq!(back, descs);
    let corr = match_descriptors(&descs, &descs, &MatchOptions::default()).unwrap().correspondences;
    let back = round_trip(|b| io::write_correspondences(b, &corr).unwrap(), |r| io::read_correspondences(r));
    assert_eq!(back, corr);
}

#[test]
fn config_text_round_trips() {
    let mut cfg = PipelineConfig::default();
    cfg.set("t_poly", "0.2", 1).unwrap();
    cfg.set("radius", "0.03", 2).unwrap();
    cfg.set("seed", "77", 3).unwrap();
    let back = PipelineConfig::parse(&cfg.to_text()).unwrap();
    assert_eq!(back, cfg);
    assert!(matches!(PipelineConfig::parse("bins = 32\n"), Err(IoError::UnknownKey { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn frames_round_trip_bit_for_bit(seed in any::<u64>(), w in 1usize..40, h in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rgb = (0..w * h).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let depth = (0..w * h)
            .map(|_| match rng.random_range(0..10) {
                0 => 0.0,
                1 => f32::NAN,
                _ => rng.random_range(0.1f32..10.0),
            })
            .collect();
        let intr = Intrinsics::new(rng.random_range(100.0..900.0), rng.random_range(100.0..900.0), rng.random(), rng.random());
        let frame = RgbdFrame::new(w, h, rgb, depth, intr).unwrap();
        let back = round_trip(|b| io::write_frame(b, &frame).unwrap(), |r| io::read_frame(r));
        prop_assert_eq!(back.rgb_raw(), frame.rgb_raw());
        prop_assert_eq!(back.intrinsics(), frame.intrinsics());
        let bits = |f: &RgbdFrame| f.depth_raw().iter().map(|d| d.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&frame));
    }

    #[test]
    fn poses_round_trip_exactly(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pose = random_pose(&mut rng, 3.0, 10.0);
        let back = round_trip(|b| io::write_pose(b, &pose).unwrap(), |r| io::read_pose(r));
        prop_assert_eq!(back, pose);
    }
}
