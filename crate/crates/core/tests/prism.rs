use std::sync::Arc;

use kldt_core::lp::{self, LpResult};
use kldt_core::prism::{locate_prism, verify_prism, LocateOptions, LocateOutcome, Prism};
use kldt_core::transform::random_transform_with_range;
use kldt_core::{conflict_list, rat, ratio, AffineForm, LdtInstance, Oracle, Rat, SignOracle};
use proptest::prelude::*;

fn form(constant: i64, coeffs: &[i64]) -> AffineForm {
    AffineForm::from_ints(constant, coeffs)
}

fn located(outcome: LocateOutcome) -> Option<Prism> {
    match outcome {
        LocateOutcome::Located(p) => Some(p),
        LocateOutcome::OnHyperplane(_) => None,
    }
}

/// `(sup > 0, inf < 0, sup ≥ 0, inf ≤ 0)` of `f` over the closed prism, by
/// the exact simplex.
fn lp_extent(f: &AffineForm, prism: &Prism) -> (bool, bool, bool, bool) {
    let sup = match lp::maximize(f, prism.constraints()).unwrap() {
        LpResult::Optimal { value, .. } => Some(value),
        LpResult::Unbounded => None,
        LpResult::Infeasible => panic!("located prism is empty"),
    };
    let inf = match lp::minimize(f, prism.constraints()).unwrap() {
        LpResult::Optimal { value, .. } => Some(value),
        LpResult::Unbounded => None,
        LpResult::Infeasible => panic!("located prism is empty"),
    };
    let zero = Rat::from_integer(0.into());
    (
        sup.as_ref().is_none_or(|v| *v > zero),
        inf.as_ref().is_none_or(|v| *v < zero),
        sup.as_ref().is_none_or(|v| *v >= zero),
        inf.as_ref().is_none_or(|v| *v <= zero),
    )
}

fn check_against_lp(prism: &Prism, probes: &[AffineForm]) {
    let crossing = prism.hits(probes, false).unwrap();
    let touching = prism.hits(probes, true).unwrap();
    for (i, f) in probes.iter().enumerate() {
        let (sup_pos, inf_neg, sup_nonneg, inf_nonpos) = lp_extent(f, prism);
        assert_eq!(crossing.contains(&i), sup_pos && inf_neg, "crossing of {f}");
        assert_eq!(touching.contains(&i), sup_nonneg && inf_nonpos, "contact of {f}");
        assert_eq!(prism.crossed_by(f).unwrap(), sup_pos && inf_neg);
        // The substitution in rationals gives the same supremum sign.
        let sup = prism.sup(f).unwrap();
        assert_eq!(sup.is_none_or(|v| v > rat(0)), sup_pos);
    }
}

fn small_form(dim: usize) -> impl Strategy<Value = AffineForm> {
    (-6i64..=6, proptest::collection::vec(-5i64..=5, dim)).prop_map(|(c, a)| form(c, &a))
}

fn arrangement(dim: usize) -> impl Strategy<Value = (Vec<AffineForm>, Vec<Rat>, Vec<AffineForm>)> {
    let sample = proptest::collection::vec(small_form(dim), 2..7);
    let point = proptest::collection::vec((-20i64..=20, 1i64..=7), dim)
        .prop_map(|v| v.into_iter().map(|(p, q)| ratio(p, q)).collect::<Vec<_>>());
    let probes = proptest::collection::vec(small_form(dim), 1..12);
    (sample, point, probes)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn extents_agree_with_the_simplex((sample, point, probes) in (2usize..=4).prop_flat_map(arrangement)) {
        prop_assume!(sample.iter().all(|f| !f.is_constant() && !f.is_vertical()));
        let mut oracle = Oracle::new(point);
        // Degenerate samples (vertical walls, zero forms) are rejected by
        // the builder and restarted by the solver; nothing to compare then.
        let Ok(outcome) = locate_prism(&sample, &mut oracle, &LocateOptions::new()) else {
            return Ok(());
        };
        let Some(prism) = located(outcome) else {
            return Ok(());
        };
        prop_assert!(verify_prism(&prism, &sample).unwrap());
        let mut all = probes;
        all.extend(sample.iter().cloned());
        check_against_lp(&prism, &all);
    }
}

/// A prism of a real k-SUM sample in transformed coordinates, whose lower
/// levels carry large coefficients.
fn ksum_prism(n: usize, r: usize, seed: u64) -> Option<(Prism, Vec<AffineForm>)> {
    let x: Vec<Rat> = (0..n).map(|i| rat((i as i64 * 7919) % 1000 + 3 * i as i64 + 1)).collect();
    let inst = LdtInstance::ksum(3, x).unwrap();
    let t = Arc::new(random_transform_with_range(n, seed, 1024));
    let forms: Vec<AffineForm> = inst
        .enumerate_ids()
        .iter()
        .map(|id| t.transform_form(&inst.hyperplane_form(id).unwrap()).unwrap())
        .collect();
    let mut oracle = Oracle::new(inst.point().to_vec());
    oracle.install_transform(t);
    let step = forms.len() / r;
    let sample: Vec<AffineForm> = forms.iter().step_by(step).take(r).cloned().collect();
    let prism = located(locate_prism(&sample, &mut oracle, &LocateOptions::new()).ok()?)?;
    Some((prism, forms))
}

#[test]
fn conflict_list_of_a_ksum_prism_matches_the_simplex() {
    let mut checked = 0;
    for seed in 0..4 {
        let Some((prism, forms)) = ksum_prism(9, 30, seed) else {
            continue;
        };
        check_against_lp(&prism, &forms);
        checked += 1;
    }
    assert!(checked >= 2);
}

#[test]
fn halfspace_prism_conflict_list() {
    // Sample {x1 − 1}, point 3: the prism is x1 ≥ 1.
    let mut oracle = Oracle::new(vec![rat(3)]);
    let prism = located(locate_prism(&[form(-1, &[1])], &mut oracle, &LocateOptions::new()).unwrap()).unwrap();
    let cl = conflict_list(&[form(0, &[1]), form(-2, &[1])], &prism).unwrap();
    assert_eq!(cl, vec![1]);
    // The prism's own bounding hyperplane never crosses it.
    assert!(conflict_list(&[form(-1, &[1])], &prism).unwrap().is_empty());
}

#[test]
fn conflict_lists_match_a_grid_in_the_plane() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut rounds = 0;
    while rounds < 40 {
        let line = |rng: &mut rand_chacha::ChaCha8Rng| {
            let b = loop {
                let b = rng.gen_range(-4i64..=4);
                if b != 0 {
                    break b;
                }
            };
            form(rng.gen_range(-8i64..=8), &[rng.gen_range(-4i64..=4), b])
        };
        let sample: Vec<AffineForm> = (0..5).map(|_| line(&mut rng)).collect();
        let probes: Vec<AffineForm> = (0..20).map(|_| line(&mut rng)).collect();
        let point = vec![ratio(rng.gen_range(-30..=30), 7), ratio(rng.gen_range(-30..=30), 7)];
        let mut oracle = Oracle::new(point);
        let Ok(outcome) = locate_prism(&sample, &mut oracle, &LocateOptions::new()) else {
            continue;
        };
        let Some(prism) = located(outcome) else {
            continue;
        };
        rounds += 1;
        let cl = conflict_list(&probes, &prism).unwrap();
        // Grid points strictly inside the prism.
        let inside: Vec<Vec<Rat>> = (-48i64..=48)
            .flat_map(|i| (-48i64..=48).map(move |j| vec![ratio(i, 6), ratio(j, 6)]))
            .filter(|p| prism.constraints().iter().all(|c| c.form.evaluate(p).unwrap() > rat(0)))
            .collect();
        for (i, f) in probes.iter().enumerate() {
            let values: Vec<Rat> = inside.iter().map(|p| f.evaluate(p).unwrap()).collect();
            let grid_crosses = values.iter().any(|v| *v > rat(0)) && values.iter().any(|v| *v < rat(0));
            if grid_crosses {
                assert!(cl.contains(&i), "grid sees {f} crossing");
            } else if cl.contains(&i) {
                // Too thin or too far for the grid; an LP witness on each
                // side settles it.
                assert!(lp::crosses(f, prism.constraints()).unwrap());
            }
        }
    }
}

#[test]
fn located_prism_contains_the_point_strictly() {
    let x = vec![ratio(3, 10), ratio(1, 5), ratio(-2, 3)];
    let sample = vec![form(0, &[2, 3, 7]), form(-1, &[1, -4, 3]), form(2, &[-5, 1, 2]), form(1, &[3, 2, -1])];
    let mut oracle = Oracle::new(x.clone());
    let prism = located(locate_prism(&sample, &mut oracle, &LocateOptions::new()).unwrap()).unwrap();
    assert!(prism.constraints().len() <= 2 * 3);
    assert!(prism.constraints().iter().all(|c| c.holds_at(&x)));
    assert!(verify_prism(&prism, &sample).unwrap());
    assert_eq!(oracle.query_count(), prism.queries());
}
