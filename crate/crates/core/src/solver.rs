//! The sampling loop that decides an instance.
//!
//! Each round samples `r` hyperplanes from the current conflict list,
//! locates the prism of their vertical decomposition containing the input,
//! and keeps only the hyperplanes crossing that prism. Once the list is
//! small it is tested directly.

use std::sync::Arc;
use std::time::{Duration, Instant};

use num_traits::{ToPrimitive, Zero};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::form::AffineForm;
use crate::instance::{binomial, enumerate_ids, Decision, HyperplaneId, LdtInstance};
use crate::oracle::{MemoOracle, Oracle, SignOracle, Transcript};
use crate::prism::{locate_prism, verify_prism, LocateOptions, LocateOutcome, Prism};
use crate::rat::{ratio, Rat, Sign};
use crate::transform::{random_transform_with_range, TransformMatrix, DEFAULT_ENTRY_RANGE};

/// Draws of a transform per restart before giving up on finding one under
/// which the whole family is non-vertical.
const TRANSFORM_DRAWS: usize = 1000;

#[derive(Clone, Debug, Serialize)]
pub struct SolverConfig {
    /// Target shrink factor of the conflict list per round, in `(0, 1/2]`.
    #[serde(serialize_with = "ser_rat")]
    pub epsilon: Rat,
    /// Multiplier `c` of the sample size `c·(2n/ε)·ln(2n/ε)`.
    #[serde(serialize_with = "ser_rat")]
    pub sample_const: Rat,
    /// Lists of at most `max(r, direct_threshold)` hyperplanes are tested
    /// directly.
    pub direct_threshold: usize,
    pub max_resamples: usize,
    pub seed: u64,
    /// Half-width of the integer entries of the random transform.
    pub transform_range: i64,
    /// Fresh transforms tried after a genericity failure.
    pub max_restarts: usize,
    pub algebraic_prefilter: bool,
    /// Answer repeated identical queries from a cache without charging.
    pub dedup: bool,
    /// Check every located prism against its sample with LPs.
    pub verify_prisms: bool,
}

fn ser_rat<S: serde::Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: ratio(1, 2),
            sample_const: ratio(1, 1),
            direct_threshold: 64,
            max_resamples: 20,
            seed: 0,
            transform_range: DEFAULT_ENTRY_RANGE,
            max_restarts: 16,
            algebraic_prefilter: true,
            dedup: false,
            verify_prisms: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon <= Rat::zero() || self.epsilon > ratio(1, 2) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1/2], got {}", self.epsilon)));
        }
        if self.sample_const <= Rat::zero() {
            return Err(Error::Config(format!("sample constant must be positive, got {}", self.sample_const)));
        }
        if self.transform_range < 1 {
            return Err(Error::Config("transform range must be at least 1".into()));
        }
        Ok(())
    }

    /// `ceil(c·(2n/ε)·ln(2n/ε))`.
    pub fn sample_size(&self, n: usize) -> usize {
        let eps = self.epsilon.to_f64().unwrap_or(0.5);
        let c = self.sample_const.to_f64().unwrap_or(1.0);
        let t = 2.0 * n as f64 / eps;
        ((c * t * t.ln()).ceil() as usize).max(1)
    }

    /// `ceil(log_{1/ε} C(n, k))`: the number of rounds when every round
    /// meets the ε target.
    pub fn round_bound(&self, n: usize, k: usize) -> usize {
        let eps = self.epsilon.to_f64().unwrap_or(0.5);
        let total = binomial(n, k) as f64;
        (total.ln() / (1.0 / eps).ln()).ceil().max(0.0) as usize
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AttemptReport {
    pub queries: usize,
    pub cl_after: usize,
    pub prism_constraints: usize,
    pub zero_signs: usize,
    pub ties: usize,
    pub lp_calls: usize,
    /// The input lies in the prism's interior; otherwise the conflict list
    /// uses closed-prism contact.
    pub strictly_inside: bool,
    /// Largest wall count passed from a level relative to its form count.
    pub max_walls_over_forms: (usize, usize),
    pub verified: Option<bool>,
    /// The located prism, kept when `verify_prisms` is set.
    #[serde(skip)]
    pub prism: Option<Prism>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundReport {
    pub round: usize,
    pub cl_before: usize,
    pub r: usize,
    pub resamples: usize,
    pub cl_after: usize,
    pub queries: usize,
    pub flagged: bool,
    pub direct: bool,
    pub attempts: Vec<AttemptReport>,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub n: usize,
    pub k: usize,
    pub decision: Decision,
    pub transcript: Transcript,
    pub rounds: Vec<RoundReport>,
    /// Queries charged by the oracle.
    pub queries_raw: usize,
    /// Distinct query forms in the transcript.
    pub queries_dedup: usize,
    pub restarts: usize,
    pub restart_reasons: Vec<String>,
    pub transform_seed: u64,
    pub transform: Arc<TransformMatrix>,
    /// Prism of the last sampled round, if any.
    pub final_prism: Option<Prism>,
    pub elapsed: Duration,
}

impl SolveReport {
    pub fn resamples(&self) -> usize {
        self.rounds.iter().map(|r| r.resamples).sum()
    }

    pub fn flagged_rounds(&self) -> usize {
        self.rounds.iter().filter(|r| r.flagged).count()
    }

    pub fn sampled_rounds(&self) -> usize {
        self.rounds.iter().filter(|r| !r.direct).count()
    }
}

/// Decides `inst`. The input point is only visible to the oracle.
pub fn decide(inst: &LdtInstance, config: &SolverConfig) -> Result<SolveReport> {
    let mut oracle = Oracle::new(inst.point().to_vec());
    let family = Family::of(inst);
    if config.dedup {
        let mut memo = MemoOracle::new(&mut oracle);
        decide_with(&family, config, &mut memo)
    } else {
        decide_with(&family, config, &mut oracle)
    }
}

/// Independent solves in parallel; results keep the input order.
pub fn decide_batch(instances: &[LdtInstance], config: &SolverConfig) -> Vec<Result<SolveReport>> {
    instances.par_iter().map(|inst| decide(inst, config)).collect()
}

/// The public part of an instance: everything except the input point.
#[derive(Clone, Debug)]
pub struct Family {
    pub n: usize,
    pub k: usize,
    pub ids: Vec<HyperplaneId>,
    /// Forms in the original coordinates, parallel to `ids`.
    pub forms: Vec<AffineForm>,
}

impl Family {
    pub fn of(inst: &LdtInstance) -> Family {
        let ids = enumerate_ids(inst.n(), inst.k());
        let forms = ids
            .iter()
            .map(|id| inst.hyperplane_form(id).expect("enumerated ids fit the instance"))
            .collect();
        Family {
            n: inst.n(),
            k: inst.k(),
            ids,
            forms,
        }
    }
}

/// Indices of the forms crossing the interior of `prism`.
pub fn conflict_list(forms: &[AffineForm], prism: &Prism) -> Result<Vec<usize>> {
    prism.hits(forms, false)
}

pub fn decide_with<O: SignOracle + ?Sized>(family: &Family, config: &SolverConfig, oracle: &mut O) -> Result<SolveReport> {
    config.validate()?;
    let start = Instant::now();
    let mut seeds = ChaCha8Rng::seed_from_u64(config.seed);
    let mut restart_reasons = Vec::new();
    for restart in 0..=config.max_restarts {
        let (transform_seed, transform, forms) = generic_transform(family, config, &mut seeds)?;
        let transform = Arc::new(transform);
        oracle.install_transform(transform.clone());
        let mut sampler = ChaCha8Rng::seed_from_u64(config.seed);
        sampler.set_stream(1 + restart as u64);
        let mut state = RunState::default();
        match run_rounds(family, &forms, config, oracle, &mut sampler, &mut state) {
            Ok(decision) => {
                return Ok(SolveReport {
                    n: family.n,
                    k: family.k,
                    decision,
                    queries_raw: oracle.query_count(),
                    queries_dedup: oracle.transcript().distinct_forms(),
                    transcript: oracle.transcript().clone(),
                    rounds: state.rounds,
                    restarts: restart,
                    restart_reasons,
                    transform_seed,
                    transform,
                    final_prism: state.final_prism,
                    elapsed: start.elapsed(),
                })
            }
            Err(e) if e.is_genericity() || matches!(e, Error::ObservationViolated(_)) => {
                restart_reasons.push(e.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenericityExhausted(config.max_restarts + 1))
}

/// Draws transforms until every form of the family is non-vertical.
fn generic_transform(
    family: &Family,
    config: &SolverConfig,
    seeds: &mut ChaCha8Rng,
) -> Result<(u64, TransformMatrix, Vec<AffineForm>)> {
    for _ in 0..TRANSFORM_DRAWS {
        let seed: u64 = seeds.gen();
        let t = random_transform_with_range(family.n, seed, config.transform_range);
        let forms: Vec<AffineForm> = family
            .forms
            .iter()
            .map(|f| t.transform_form(f).map(|g| g.primitive()))
            .collect::<Result<_>>()?;
        if forms.iter().all(|f| !f.is_vertical()) {
            return Ok((seed, t, forms));
        }
    }
    Err(Error::GenericityExhausted(TRANSFORM_DRAWS))
}

#[derive(Default)]
struct RunState {
    rounds: Vec<RoundReport>,
    final_prism: Option<Prism>,
}

fn run_rounds<O: SignOracle + ?Sized>(
    family: &Family,
    forms: &[AffineForm],
    config: &SolverConfig,
    oracle: &mut O,
    sampler: &mut ChaCha8Rng,
    state: &mut RunState,
) -> Result<Decision> {
    let n = family.n;
    let r_formula = config.sample_size(n);
    let options = LocateOptions {
        algebraic_prefilter: config.algebraic_prefilter,
    };
    let (eps_num, eps_den) = (config.epsilon.numer().clone(), config.epsilon.denom().clone());
    let mut cl: Vec<usize> = (0..forms.len()).collect();
    for round in 0.. {
        let before = oracle.query_count();
        if cl.len() <= r_formula.max(config.direct_threshold) {
            let mut decision = Decision::No;
            for &i in &cl {
                if oracle.sign_of(&forms[i])? == Sign::Zero {
                    decision = Decision::Yes(family.ids[i].clone());
                    break;
                }
            }
            state.rounds.push(RoundReport {
                round,
                cl_before: cl.len(),
                r: cl.len(),
                resamples: 0,
                cl_after: 0,
                queries: oracle.query_count() - before,
                flagged: false,
                direct: true,
                attempts: Vec::new(),
            });
            return Ok(decision);
        }

        let r = r_formula.min(cl.len());
        let mut report = RoundReport {
            round,
            cl_before: cl.len(),
            r,
            resamples: 0,
            cl_after: 0,
            queries: 0,
            flagged: false,
            direct: false,
            attempts: Vec::new(),
        };
        let mut best: Option<(Vec<usize>, Prism)> = None;
        let mut success = false;
        for attempt in 0..=config.max_resamples {
            let mut picks = index::sample(sampler, cl.len(), r).into_vec();
            picks.sort_unstable();
            let sample: Vec<AffineForm> = picks.iter().map(|&p| forms[cl[p]].clone()).collect();
            let q0 = oracle.query_count();
            let prism = match locate_prism(&sample, oracle, &options)? {
                LocateOutcome::OnHyperplane(j) => {
                    report.resamples = attempt;
                    report.queries = oracle.query_count() - before;
                    state.rounds.push(report);
                    return Ok(Decision::Yes(family.ids[cl[picks[j]]].clone()));
                }
                LocateOutcome::Located(p) => p,
            };
            let strict = prism.strictly_inside();
            let candidates: Vec<AffineForm> = cl.iter().map(|&i| forms[i].clone()).collect();
            let next: Vec<usize> = prism.hits(&candidates, !strict)?.into_iter().map(|j| cl[j]).collect();
            let verified = if config.verify_prisms {
                Some(verify_prism(&prism, &sample)?)
            } else {
                None
            };
            let max_walls_over_forms = prism
                .levels()
                .iter()
                .filter(|l| !l.forms.is_empty())
                .map(|l| (l.kept_walls.len(), l.forms.len()))
                .max_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)))
                .unwrap_or((0, 1));
            report.attempts.push(AttemptReport {
                queries: oracle.query_count() - q0,
                cl_after: next.len(),
                prism_constraints: prism.constraints().len(),
                zero_signs: prism.zero_signs(),
                ties: prism.ties(),
                lp_calls: prism.lp_calls(),
                strictly_inside: strict,
                max_walls_over_forms,
                verified,
                prism: config.verify_prisms.then(|| prism.clone()),
            });
            report.resamples = attempt;
            let ok = &eps_den * next.len() <= &eps_num * cl.len();
            if best.as_ref().is_none_or(|(b, _)| next.len() < b.len()) {
                best = Some((next, prism));
            }
            if ok {
                success = true;
                break;
            }
        }
        let (next, prism) = best.expect("at least one attempt");
        report.flagged = !success;
        report.cl_after = next.len();
        report.queries = oracle.query_count() - before;
        state.rounds.push(report);
        state.final_prism = Some(prism);
        if next.is_empty() {
            return Ok(Decision::No);
        }
        if next.len() == cl.len() {
            // No progress (only possible with closed-prism contact); the
            // next round tests the list directly.
            let mut decision = Decision::No;
            let before = oracle.query_count();
            for &i in &cl {
                if oracle.sign_of(&forms[i])? == Sign::Zero {
                    decision = Decision::Yes(family.ids[i].clone());
                    break;
                }
            }
            state.rounds.push(RoundReport {
                round: round + 1,
                cl_before: cl.len(),
                r: cl.len(),
                resamples: 0,
                cl_after: 0,
                queries: oracle.query_count() - before,
                flagged: true,
                direct: true,
                attempts: Vec::new(),
            });
            return Ok(decision);
        }
        cl = next;
    }
    unreachable!("the loop returns")
}
