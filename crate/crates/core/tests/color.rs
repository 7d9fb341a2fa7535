use ecv_pose::color::{apply_color_matrix, color_residual, estimate_color_matrix, ColorError, ColorMatrix};
use ecv_pose::ecv::{Primitive, PrimitiveKind};
use ecv_pose::geometry::Point3;
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_colors(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 3]> {
    (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect()
}

#[test]
fn ten_gray_pairs_are_rank_deficient() {
    let pairs: Vec<_> = (0..10).map(|i| ([i as f64 / 10.0; 3], [i as f64 / 20.0; 3])).collect();
    assert!(matches!(estimate_color_matrix(&pairs, false), Err(ColorError::RankDeficient(_))));
}

#[test]
fn clamping_rules() {
    let p = Primitive {
        position: Point3::origin(),
        orientation: Vector3::z(),
        kind: PrimitiveKind::Texlet,
        color: [0.6, 0.6, 0.6],
        pixel: (0, 0),
    };
    let doubled = apply_color_matrix(&ColorMatrix::linear(Matrix3::identity() * 2.0), &[p]);
    assert_eq!(doubled[0].color, [1.0; 3]);
    let zero = apply_color_matrix(&ColorMatrix::linear(Matrix3::zeros()), &[p]);
    assert_eq!(zero[0].color, [0.0; 3]);
    assert_eq!(apply_color_matrix(&ColorMatrix::identity(), &[p])[0], p);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noiseless_pairs_recover_the_matrix(seed in any::<u64>(), n in 3usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix3::from_fn(|_, _| rng.random_range(-1.0..2.0));
        let m = ColorMatrix::linear(a);
        let pairs: Vec<_> = random_colors(&mut rng, n).into_iter().map(|c| (c, m.map(&c))).collect();
        let est = estimate_color_matrix(&pairs, false).unwrap();
        prop_assert!((est.matrix.a - a).abs().max() <= 1e-9);
    }

    #[test]
    fn estimate_is_a_local_minimum(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs: Vec<_> = random_colors(&mut rng, 10)
            .into_iter()
            .map(|c| (c, [c[0] * 0.9 + 0.05 * rng.random::<f64>(), c[1], c[2] * 1.1 - 0.05 * rng.random::<f64>()]))
            .collect();
        let est = estimate_color_matrix(&pairs, false).unwrap();
        let best = color_residual(&est.matrix, &pairs);
        for _ in 0..50 {
            let d = Matrix3::from_fn(|_, _| rng.random_range(-1e-3..1e-3));
            let other = ColorMatrix::linear(est.matrix.a + d);
            prop_assert!(color_residual(&other, &pairs) >= best);
        }
    }
}
