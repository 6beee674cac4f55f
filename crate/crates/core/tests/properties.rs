mod common;

use boolean_lab::grain::{GrainShape, Vec2};
use boolean_lab::process::{GrainDistribution, ModelConfig};
use boolean_lab::Window;
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shape_from_seed(seed: u64) -> GrainShape {
    random_shape(&mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn additivity(seed in any::<u64>(), s in 0.2f64..1.8, t in 2.2f64..3.8) {
        let (grains, w) = random_instance(seed);
        prop_assert_eq!(check_additivity(&grains, &w, s, t), Ok(()));
    }

    #[test]
    fn translation_invariance(seed in any::<u64>(), x in -50.0f64..50.0, y in -50.0f64..50.0) {
        let (grains, w) = random_instance(seed);
        prop_assert_eq!(check_translation(&grains, &w, Vec2::new(x, y)), Ok(()));
    }

    #[test]
    fn steiner_consistency(seed in any::<u64>(), r in 0.01f64..2.0) {
        prop_assert_eq!(check_steiner(&shape_from_seed(seed), r), Ok(()));
    }

    #[test]
    fn covariogram_symmetry_and_support(seed in any::<u64>(), x in -4.0f64..4.0, y in -4.0f64..4.0) {
        prop_assert_eq!(check_covariogram(&shape_from_seed(seed), Vec2::new(x, y)), Ok(()));
    }

    #[test]
    fn standardization_exactness(xs in prop::collection::vec(-1e6f64..1e6, 2..400)) {
        prop_assume!(xs.iter().any(|&x| x != xs[0]));
        prop_assert_eq!(check_standardization(&xs), Ok(()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn seed_split_determinism(seed in any::<u64>(), threads in 2usize..6) {
        let c = ModelConfig::new(
            0.4,
            GrainDistribution::disk(0.8).unwrap(),
            Window::centered(1.0, 1.0).unwrap(),
            seed,
        ).unwrap();
        prop_assert_eq!(check_seed_split(&c, 5.0, 24, threads), Ok(()));
    }
}
