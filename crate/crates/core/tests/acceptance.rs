//! End-to-end acceptance checks. Each test writes one `PASS`/`FAIL` line to
//! stderr (uncaptured) before asserting, so a plain `cargo test` run shows
//! the verdict of every criterion.

use std::io::Write as _;
use std::sync::OnceLock;

use kldt_core::instance::{random_instance, InstanceSpec};
use kldt_core::lp::{self, LpResult};
use kldt_core::pointloc::{brute_position_vector, PLConfig, PLTree};
use kldt_core::record::{run_grid, to_csv, BenchGrid};
use kldt_core::{
    brute_decide, decide, ratio, AffineForm, Decision, LdtInstance, LinConstraint, Rat, Sign, SolveReport,
    SolverConfig,
};
use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(id: usize, title: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "acceptance {id:>2} {tag}: {title} ({detail})");
}

// ---------------------------------------------------------------------------
// The seeded sweep shared by several criteria.

struct Run {
    inst: LdtInstance,
    config: SolverConfig,
    report: SolveReport,
    brute: Decision,
}

const SWEEP: usize = 500;

fn sweep_config(seed: u64) -> SolverConfig {
    SolverConfig {
        seed,
        verify_prisms: true,
        ..SolverConfig::default()
    }
}

fn sweep() -> &'static [Run] {
    static RUNS: OnceLock<Vec<Run>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_2024);
        (0..SWEEP)
            .map(|i| {
                let n = rng.gen_range(6..=14);
                let k = [3, 4, 5][i % 3];
                let spec = InstanceSpec {
                    ldt: i % 5 == 4,
                    max_denominator: if i % 7 == 0 { 1 } else { 50 },
                    ..InstanceSpec::ksum(n, k, i % 2 == 0)
                };
                let inst = random_instance(&mut rng, &spec);
                let config = sweep_config(rng.gen());
                let report = decide(&inst, &config).unwrap_or_else(|e| panic!("instance {i}: {e}"));
                let brute = brute_decide(&inst);
                Run {
                    inst,
                    config,
                    report,
                    brute,
                }
            })
            .collect()
    })
}

// ---------------------------------------------------------------------------

#[test]
fn c01_decisions_match_brute_force() {
    let runs = sweep();
    let yes = runs.iter().filter(|r| r.brute.is_yes()).count();
    let wrong: Vec<usize> = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.report.decision.is_yes() != r.brute.is_yes())
        .map(|(i, _)| i)
        .collect();
    let pass = runs.len() >= 500 && wrong.is_empty();
    verdict(
        1,
        "decide equals brute force",
        pass,
        &format!("{}/{} agree, YES {yes}, NO {}", runs.len() - wrong.len(), runs.len(), runs.len() - yes),
    );
    assert!(pass, "disagreements at {wrong:?}");
}

#[test]
fn c02_yes_witnesses_vanish() {
    let runs = sweep();
    let mut checked = 0;
    let mut bad = 0;
    for r in runs {
        if let Decision::Yes(id) = &r.report.decision {
            checked += 1;
            if !r.inst.value_at(id).is_zero() {
                bad += 1;
            }
        }
    }
    let pass = bad == 0 && checked > 0;
    verdict(2, "YES witnesses evaluate to exactly 0", pass, &format!("{checked} witnesses, {bad} non-zero"));
    assert!(pass);
}

/// Solves `f = 0` for each of `eqs` in turn and eliminates the pivot from
/// every form. Returns the reduced forms and, per equation, its pivot and
/// reduced form, or `None` when the equations are inconsistent.
#[allow(clippy::type_complexity)]
fn eliminate(
    mut forms: Vec<AffineForm>,
    eqs: &[AffineForm],
) -> Option<(Vec<AffineForm>, Vec<(usize, AffineForm)>)> {
    let mut pivots: Vec<(usize, AffineForm)> = Vec::new();
    for e in eqs {
        let mut e = e.clone();
        for (p, g) in &pivots {
            let c = e.coeff(*p).clone();
            if !c.is_zero() {
                e = e.sub(&g.scale(&(c / g.coeff(*p)))).unwrap();
            }
        }
        let Some(p) = (0..e.dim()).find(|&j| !e.coeff(j).is_zero()) else {
            if e.constant().is_zero() {
                continue;
            }
            return None;
        };
        let reduce = |g: &AffineForm| {
            let c = g.coeff(p).clone();
            if c.is_zero() {
                g.clone()
            } else {
                g.sub(&e.scale(&(c / e.coeff(p)))).unwrap()
            }
        };
        forms = forms.iter().map(reduce).collect();
        for (_, g) in pivots.iter_mut() {
            *g = reduce(g);
        }
        pivots.push((p, e));
    }
    Some((forms, pivots))
}

/// A point with the same transcript signs as the input, strictly inside
/// the final prism, found by an LP; `None` if the LP finds no interior.
fn second_point(run: &Run) -> Option<Vec<Rat>> {
    let report = &run.report;
    let n = report.n;
    let mut strict: Vec<AffineForm> = Vec::new();
    let mut zero: Vec<AffineForm> = Vec::new();
    for e in report.transcript.entries() {
        match e.sign {
            Sign::Zero => zero.push(e.form.clone()),
            s => strict.push(e.form.oriented(s)),
        }
    }
    if let Some(prism) = &report.final_prism {
        for c in prism.constraints() {
            strict.push(report.transform.pull_back(&c.form).unwrap());
        }
    }
    let (reduced, pivots) = eliminate(strict, &zero)?;
    let mut constraints = Vec::new();
    for f in reduced {
        if f.is_constant() {
            if !f.constant().is_positive() {
                return None;
            }
        } else {
            constraints.push(LinConstraint::gt(f));
        }
    }
    let mut p = if constraints.is_empty() {
        vec![Rat::zero(); n]
    } else {
        lp::interior_point(n, &constraints).unwrap()?
    };
    for (j, g) in pivots.iter().rev() {
        p[*j] = Rat::zero();
        p[*j] = -g.eval_prefix(&p) / g.coeff(*j);
    }
    Some(p)
}

#[test]
fn c03_transcripts_determine_decisions() {
    let runs = sweep();
    let mut constructed = 0;
    let mut distinct = 0;
    let mut failures = Vec::new();
    for (i, run) in runs.iter().enumerate().filter(|(_, r)| r.report.n <= 11) {
        if constructed >= 60 {
            break;
        }
        let Some(p) = second_point(run) else { continue };
        constructed += 1;
        if p.as_slice() != run.inst.point() {
            distinct += 1;
        }
        if let Some(prism) = &run.report.final_prism {
            let y = run.report.transform.apply_point(&p).unwrap();
            if !prism.constraints().iter().all(|c| c.form.eval_prefix(&y).is_positive()) {
                failures.push(format!("{i}: second point outside the final prism"));
                continue;
            }
        }
        if !run.report.transcript.replay(&p) {
            failures.push(format!("{i}: transcript does not replay"));
            continue;
        }
        let other = decide(&run.inst.with_point(p).unwrap(), &run.config).unwrap();
        if other.decision != run.report.decision || other.transcript.to_text() != run.report.transcript.to_text() {
            failures.push(format!("{i}: different decision or transcript"));
        }
    }
    let pass = constructed >= 50 && failures.is_empty();
    verdict(
        3,
        "equal transcripts imply equal decisions",
        pass,
        &format!("{constructed} second points ({distinct} distinct from the input), {} failures", failures.len()),
    );
    assert!(pass, "{failures:?}");
}

#[test]
fn c04_prism_invariants() {
    let runs = sweep();
    let (mut prisms, mut levels, mut contacts, mut restarts) = (0, 0, 0, 0);
    let mut violations: Vec<String> = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        let report = &run.report;
        let n = report.n;
        restarts += report.restart_reasons.len();
        let y = report.transform.apply_point(run.inst.point()).unwrap();
        for (ri, round) in report.rounds.iter().enumerate() {
            for (ai, attempt) in round.attempts.iter().enumerate() {
                let at = format!("instance {i} round {ri} attempt {ai}");
                let prism = attempt.prism.as_ref().expect("verification keeps prisms");
                prisms += 1;
                levels += prism.levels().len();
                let values: Vec<Rat> = prism.constraints().iter().map(|c| c.form.eval_prefix(&y)).collect();
                if values.iter().any(Signed::is_negative) {
                    violations.push(format!("{at}: input outside the prism"));
                } else if values.iter().any(Zero::is_zero) {
                    // The input is on a bounding hyperplane of zero sign:
                    // a degenerate contact that the solver reports.
                    if attempt.strictly_inside {
                        violations.push(format!("{at}: unreported boundary contact"));
                    }
                    contacts += 1;
                }
                if prism.constraints().len() > 2 * n || attempt.prism_constraints > 2 * n {
                    violations.push(format!("{at}: {} constraints", prism.constraints().len()));
                }
                if attempt.verified != Some(true) {
                    violations.push(format!("{at}: a sampled form crosses the prism"));
                }
            }
        }
    }
    let observation = runs
        .iter()
        .flat_map(|r| &r.report.restart_reasons)
        .filter(|r| r.contains("wall pruning"))
        .count();
    let pass = violations.is_empty() && prisms > 0;
    verdict(
        4,
        "prism membership, size, verification and wall-uniqueness",
        pass,
        &format!(
            "{prisms} prisms, {levels} levels, {} violations; degenerate contacts {contacts}, restarts {restarts} ({observation} wall-uniqueness)",
            violations.len()
        ),
    );
    assert!(pass, "{:?}", &violations[..violations.len().min(10)]);
}

/// Whether the first sample of each sampled round met ε = 1/2. Rounds
/// ending on a sampled hyperplane never compute a new conflict list and
/// are skipped.
fn first_cuts(report: &SolveReport) -> impl Iterator<Item = bool> + '_ {
    report
        .rounds
        .iter()
        .filter(|r| !r.direct)
        .filter_map(|r| r.attempts.first().map(|a| 2 * a.cl_after <= r.cl_before))
}

#[test]
fn c05_first_samples_usually_cut_well() {
    let mut cuts: Vec<bool> = sweep().iter().flat_map(|r| first_cuts(&r.report)).collect();
    let from_sweep = cuts.len();
    // Top up with larger families, where every solve has sampled rounds.
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut extra = 0;
    while cuts.len() < 240 && extra < 400 {
        let n = rng.gen_range(12..=14);
        let k = [4, 5][extra % 2];
        let inst = random_instance(&mut rng, &InstanceSpec::ksum(n, k, false));
        let config = SolverConfig {
            seed: rng.gen(),
            ..SolverConfig::default()
        };
        cuts.extend(first_cuts(&decide(&inst, &config).unwrap()));
        extra += 1;
    }
    let good = cuts.iter().filter(|&&c| c).count();
    let fraction = good as f64 / cuts.len().max(1) as f64;
    let pass = cuts.len() >= 200 && fraction >= 0.5;
    verdict(
        5,
        "first sample meets the cutting target",
        pass,
        &format!(
            "{good}/{} sampled rounds = {fraction:.3} ({from_sweep} from the shared sweep, the rest from {extra} extra solves)",
            cuts.len()
        ),
    );
    assert!(pass);
}

#[test]
fn c06_query_counts_scale_as_n2_log2_n() {
    let grid = BenchGrid::new(vec![16, 20, 24, 28], vec![3], 5, 606);
    let rows = run_grid(&grid, &SolverConfig::default()).unwrap();
    let (runs, medians): (Vec<_>, Vec<_>) = rows.iter().partition(|r| !r.is_aggregate());
    let chat: Vec<f64> = medians.iter().map(|r| r.cfit).collect();
    let cmax = chat.iter().copied().fold(f64::MIN, f64::max);
    let cmin = chat.iter().copied().fold(f64::MAX, f64::min);
    let over: Vec<String> = runs
        .iter()
        .filter(|r| {
            let ln = (r.n as f64).ln();
            r.queries_raw as f64 > cmax * (r.k * r.n * r.n) as f64 * ln * ln
        })
        .map(|r| format!("n={} seed={:?} raw={}", r.n, r.seed, r.queries_raw))
        .collect();
    let worst = runs
        .iter()
        .map(|r| r.cfit / cmax)
        .fold(0.0, f64::max);
    let pass = cmax <= 3.0 * cmin && over.is_empty() && medians.len() == 4;
    let per_n: Vec<String> = medians
        .iter()
        .map(|r| format!("n={}: ĉ={:.4} raw={}", r.n, r.cfit, r.queries_raw))
        .collect();
    verdict(
        6,
        "fitted query constant stable within 3x",
        pass,
        &format!(
            "{}; spread {:.2}; {} of {} runs above ĉ_max, worst at {worst:.3}·ĉ_max",
            per_n.join(", "),
            cmax / cmin,
            over.len(),
            runs.len()
        ),
    );
    assert!(pass, "{over:?}");
}

#[test]
fn c07_locate_budget() {
    let runs = sweep();
    let (mut attempts, mut worst) = (0usize, 0f64);
    let mut over = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        let n = run.report.n;
        for round in &run.report.rounds {
            for a in &round.attempts {
                attempts += 1;
                let budget = 2 * round.r * n;
                worst = worst.max(a.queries as f64 / budget as f64);
                if a.queries > budget {
                    over.push(format!("instance {i}: {} > {budget}", a.queries));
                }
            }
        }
    }
    let pass = over.is_empty() && attempts > 0;
    verdict(
        7,
        "queries per prism location at most 2rn",
        pass,
        &format!("{attempts} locations, worst ratio {worst:.3}, {} over budget", over.len()),
    );
    assert!(pass, "{over:?}");
}

// ---------------------------------------------------------------------------
// LP against vertex enumeration.

/// Solves the square system `rows · x = rhs` exactly.
fn solve_square(mut rows: Vec<Vec<Rat>>, mut rhs: Vec<Rat>) -> Option<Vec<Rat>> {
    let d = rows.len();
    for col in 0..d {
        let piv = (col..d).find(|&r| !rows[r][col].is_zero())?;
        rows.swap(col, piv);
        rhs.swap(col, piv);
        for r in 0..d {
            if r != col && !rows[r][col].is_zero() {
                let f = &rows[r][col] / &rows[col][col];
                let pivot = rows[col].clone();
                for (x, p) in rows[r][col..].iter_mut().zip(&pivot[col..]) {
                    *x -= &f * p;
                }
                let v = &f * &rhs[col];
                rhs[r] -= v;
            }
        }
    }
    Some((0..d).map(|i| &rhs[i] / &rows[i][i]).collect())
}

fn subsets(m: usize, d: usize) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![vec![]];
    }
    if m < d {
        return vec![];
    }
    let mut out = subsets(m - 1, d);
    for mut s in subsets(m - 1, d - 1) {
        s.push(m - 1);
        out.push(s);
    }
    out
}

/// Vertices of `{f ≥ 0 for f in forms} ∩ [-b, b]^d`.
fn box_vertices(d: usize, forms: &[AffineForm], b: i64) -> Vec<Vec<Rat>> {
    let mut all = forms.to_vec();
    for j in 0..d {
        let mut e = vec![0; d];
        e[j] = 1;
        all.push(AffineForm::from_ints(b, &e));
        e[j] = -1;
        all.push(AffineForm::from_ints(b, &e));
    }
    let mut out = Vec::new();
    for s in subsets(all.len(), d) {
        let rows = s.iter().map(|&i| all[i].coeffs().to_vec()).collect();
        let rhs = s.iter().map(|&i| -all[i].constant()).collect();
        if let Some(p) = solve_square(rows, rhs) {
            if all.iter().all(|f| !f.eval_prefix(&p).is_negative()) {
                out.push(p);
            }
        }
    }
    out
}

/// Brute-force maximum: `Err(())` when infeasible, `Ok(None)` when
/// unbounded. Vertices of these small systems have coordinates far below
/// `BOX`, so doubling the box changes the optimum only when unbounded.
fn brute_max(d: usize, objective: &AffineForm, forms: &[AffineForm]) -> Result<Option<Rat>, ()> {
    const BOX: i64 = 1_000_000;
    let best = |b: i64| {
        box_vertices(d, forms, b)
            .iter()
            .map(|p| objective.eval_prefix(p))
            .max()
    };
    let near = best(BOX).ok_or(())?;
    let far = best(2 * BOX).expect("a larger box keeps the region feasible");
    Ok((near == far).then_some(near))
}

fn random_form(rng: &mut ChaCha8Rng, d: usize) -> AffineForm {
    loop {
        let coeffs: Vec<i64> = (0..d).map(|_| rng.gen_range(-5..=5)).collect();
        if coeffs.iter().any(|&c| c != 0) {
            return AffineForm::from_ints(rng.gen_range(-10..=10), &coeffs);
        }
    }
}

#[test]
fn c08_lp_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let (mut systems, mut checks) = (0, 0);
    let mut outcomes = [0usize; 3];
    let mut mismatches = Vec::new();
    for s in 0..300 {
        let d = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=10);
        let forms: Vec<AffineForm> = (0..m).map(|_| random_form(&mut rng, d)).collect();
        let constraints: Vec<LinConstraint> = forms.iter().cloned().map(LinConstraint::ge).collect();
        systems += 1;

        let objective = random_form(&mut rng, d);
        let brute = brute_max(d, &objective, &forms);
        let got = lp::maximize(&objective, &constraints).unwrap();
        checks += 1;
        let ok = match (&brute, &got) {
            (Err(()), LpResult::Infeasible) => {
                outcomes[0] += 1;
                true
            }
            (Ok(None), LpResult::Unbounded) => {
                outcomes[1] += 1;
                true
            }
            (Ok(Some(v)), LpResult::Optimal { value, witness }) => {
                outcomes[2] += 1;
                v == value && forms.iter().all(|f| !f.eval_prefix(witness).is_negative())
            }
            _ => false,
        };
        if !ok {
            mismatches.push(format!("system {s}: maximize {brute:?} vs {got:?}"));
        }
        if brute.is_err() {
            continue;
        }

        let probe = random_form(&mut rng, d);
        let sup = brute_max(d, &probe, &forms).unwrap();
        let inf = brute_max(d, &probe.neg(), &forms).unwrap().map(|v| -v);
        let crosses = sup.as_ref().is_none_or(Signed::is_positive) && inf.as_ref().is_none_or(Signed::is_negative);
        checks += 1;
        if lp::crosses(&probe, &constraints).unwrap() != crosses {
            mismatches.push(format!("system {s}: crosses"));
        }
        checks += 1;
        if lp::implied_by(&probe, &constraints).unwrap() != inf.as_ref().is_some_and(|v| !v.is_negative()) {
            mismatches.push(format!("system {s}: implied_by"));
        }

        for i in 0..m {
            let others: Vec<AffineForm> = forms.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, f)| f.clone()).collect();
            let rest: Vec<LinConstraint> = others.iter().cloned().map(LinConstraint::ge).collect();
            checks += 1;
            match brute_max(d, &forms[i].neg(), &others) {
                Err(()) => {
                    if lp::is_redundant(&constraints[i], &rest).is_ok() {
                        mismatches.push(format!("system {s}: redundancy over an empty region"));
                    }
                }
                Ok(neg_min) => {
                    let redundant = neg_min.is_some_and(|v| !v.is_positive());
                    if lp::is_redundant(&constraints[i], &rest).unwrap() != redundant {
                        mismatches.push(format!("system {s}: is_redundant({i})"));
                    }
                }
            }
        }
    }
    let pass = systems >= 200 && mismatches.is_empty();
    verdict(
        8,
        "LP agrees with vertex enumeration",
        pass,
        &format!(
            "{systems} systems, {checks} checks (infeasible {}, unbounded {}, optimal {}), {} mismatches",
            outcomes[0],
            outcomes[1],
            outcomes[2],
            mismatches.len()
        ),
    );
    assert!(pass, "{mismatches:?}");
}

// ---------------------------------------------------------------------------
// Point location.

fn random_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<Rat> {
    (0..d).map(|_| ratio(rng.gen_range(-60..=60), rng.gen_range(1..=6))).collect()
}

/// A random point of `h`, or of the intersection of `h` and `g` when that
/// is non-empty.
fn point_on(rng: &mut ChaCha8Rng, on: &[&AffineForm]) -> Option<Vec<Rat>> {
    let d = on[0].dim();
    let eqs: Vec<AffineForm> = on.iter().map(|f| (*f).clone()).collect();
    let (_, pivots) = eliminate(Vec::new(), &eqs)?;
    let mut p = random_point(rng, d);
    for (j, g) in pivots.iter().rev() {
        p[*j] = Rat::zero();
        p[*j] = -g.eval_prefix(&p) / g.coeff(*j);
    }
    Some(p)
}

fn arrangement(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<AffineForm> {
    (0..n)
        .map(|_| loop {
            let coeffs: Vec<i64> = (0..d).map(|_| rng.gen_range(-6..=6)).collect();
            if coeffs.iter().any(|&c| c != 0) {
                break AffineForm::from_ints(rng.gen_range(-10..=10), &coeffs);
            }
        })
        .collect()
}

#[test]
fn c09_point_location() {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (d, seed) in [(2, 900), (2, 901), (3, 902), (3, 903)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let forms = arrangement(&mut rng, d, 40);
        let mut config = PLConfig::for_dim(d);
        config.seed = seed;
        let mut tree = PLTree::build(&forms, config).unwrap();
        let (mut queries, mut on_hyperplanes) = (0, 0);
        while queries < 120 {
            let q = match queries % 3 {
                0 => Some(random_point(&mut rng, d)),
                1 => {
                    let h = forms.choose(&mut rng).unwrap();
                    point_on(&mut rng, &[h])
                }
                _ => {
                    let pair: Vec<&AffineForm> = forms.choose_multiple(&mut rng, 2).collect();
                    point_on(&mut rng, &pair)
                }
            };
            let Some(q) = q else { continue };
            queries += 1;
            let expect = brute_position_vector(&forms, &q).unwrap();
            if expect.signs().contains(&Sign::Zero) {
                on_hyperplanes += 1;
            }
            if tree.query(&q).unwrap() != expect {
                failures.push(format!("d={d} seed={seed} q={q:?}"));
            }
        }
        summary.push(format!(
            "d={d} n=40 r={} seed {seed}: {queries} queries ({on_hyperplanes} on hyperplanes)",
            tree.sample_size()
        ));
    }

    // Size of the root decomposition against r³ in the plane.
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let forms = arrangement(&mut rng, 2, 40);
    let mut counts = Vec::new();
    for r in [6usize, 10, 14] {
        let config = PLConfig {
            sample_size: Some(r),
            eager: true,
            seed: 909,
            ..PLConfig::for_dim(2)
        };
        let tree = PLTree::build(&forms, config).unwrap();
        counts.push((r, tree.stats().root_prisms));
    }
    let fitted = counts[0].1 as f64 / (counts[0].0 as f64).powi(3);
    let within = counts.iter().all(|&(r, c)| c as f64 <= fitted * (r as f64).powi(3));
    let shape: Vec<String> = counts.iter().map(|(r, c)| format!("r={r}: {c}")).collect();
    let pass = failures.is_empty() && within;
    verdict(
        9,
        "point location equals brute force; root size within C·r³",
        pass,
        &format!(
            "{}; {} mismatches; prisms {} with C={fitted:.3}",
            summary.join("; "),
            failures.len(),
            shape.join(", ")
        ),
    );
    assert!(pass, "{failures:?} {counts:?}");
}

#[test]
fn c10_determinism() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut same = 0;
    let mut total = 0;
    for i in 0..6 {
        let inst = random_instance(&mut rng, &InstanceSpec::ksum(12 + i, 3, i % 2 == 0));
        let config = SolverConfig {
            seed: 77 + i as u64,
            ..SolverConfig::default()
        };
        let a = decide(&inst, &config).unwrap();
        let b = decide(&inst, &config).unwrap();
        total += 1;
        if a.transcript.to_text() == b.transcript.to_text() && a.decision == b.decision {
            same += 1;
        }
    }
    let grid = BenchGrid::new(vec![8, 10], vec![3, 4], 2, 1011);
    let config = SolverConfig::default();
    let first = to_csv(&run_grid(&grid, &config).unwrap()).unwrap();
    let second = to_csv(&run_grid(&grid, &config).unwrap()).unwrap();
    let pass = same == total && first == second;
    verdict(
        10,
        "identical seeds give identical transcripts and CSV",
        pass,
        &format!("{same}/{total} transcripts identical; CSV {} bytes, identical: {}", first.len(), first == second),
    );
    assert!(pass);
}
