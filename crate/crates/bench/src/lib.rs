//! Seeded inputs shared by the criterion benches.

use kldt_core::instance::{random_instance, InstanceSpec};
use kldt_core::{AffineForm, LdtInstance, LinConstraint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A k-SUM instance with generic rational inputs (a NO instance with
/// probability 1), so the solver runs every round.
pub fn generic_ksum(n: usize, k: usize, seed: u64) -> LdtInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = InstanceSpec {
        max_denominator: 1000,
        ..InstanceSpec::ksum(n, k, false)
    };
    random_instance(&mut rng, &spec)
}

/// `m` constraints `b + a·x ≥ 0` in dimension `dim`, all satisfied at the
/// origin, plus a bounding box.
pub fn random_system(dim: usize, m: usize, seed: u64) -> Vec<LinConstraint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<LinConstraint> = (0..m)
        .map(|_| {
            let a: Vec<i64> = (0..dim).map(|_| rng.gen_range(-20..=20)).collect();
            LinConstraint::ge(AffineForm::from_ints(rng.gen_range(1..=50), &a))
        })
        .collect();
    for j in 0..dim {
        let mut e = vec![0; dim];
        e[j] = 1;
        out.push(LinConstraint::ge(AffineForm::from_ints(100, &e)));
        e[j] = -1;
        out.push(LinConstraint::ge(AffineForm::from_ints(100, &e)));
    }
    out
}

pub fn random_objective(dim: usize, seed: u64) -> AffineForm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let a: Vec<i64> = (0..dim).map(|_| rng.gen_range(-9..=9)).collect();
    AffineForm::from_ints(0, &a)
}
