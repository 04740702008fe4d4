//! Exact linear programming over halfspace systems.
//!
//! Constraints are affine forms required to be non-negative. The engine
//! solves `max c·y` over `{y : a_i·y + b_i ≥ 0}` by running a two-phase
//! simplex with Bland's rule on the dual problem
//!
//! ```text
//!     min Σ b_i u_i   s.t.   Σ_i (−a_i) u_i = c,  u ≥ 0
//! ```
//!
//! whose tableau has one row per coordinate rather than per constraint. The
//! tableau is fraction-free: all entries are integers over one common
//! denominator (Bareiss-style updates), so no gcd is taken during pivoting.
//! A primal optimum is read off the simplex multipliers.

use num_bigint::BigInt;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::form::AffineForm;
use crate::rat::Rat;

mod approx;

use approx::FloatRow;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    /// `form ≥ 0`
    NonNegative,
    /// `form > 0`; treated as `≥ 0` by the optimizer.
    Positive,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinConstraint {
    pub form: AffineForm,
    pub relation: Relation,
}

impl LinConstraint {
    pub fn ge(form: AffineForm) -> Self {
        LinConstraint {
            form,
            relation: Relation::NonNegative,
        }
    }

    pub fn gt(form: AffineForm) -> Self {
        LinConstraint {
            form,
            relation: Relation::Positive,
        }
    }

    pub fn holds_at(&self, p: &[Rat]) -> bool {
        let v = self.form.eval_prefix(p);
        match self.relation {
            Relation::NonNegative => !v.is_negative(),
            Relation::Positive => v.is_positive(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpResult {
    Infeasible,
    Unbounded,
    Optimal { value: Rat, witness: Vec<Rat> },
}

impl LpResult {
    pub fn value(&self) -> Option<&Rat> {
        match self {
            LpResult::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }
}

/// `a·y + b ≥ 0` with coprime integer entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct IntRow {
    pub b: BigInt,
    pub a: Vec<BigInt>,
}

impl IntRow {
    pub fn from_form(f: &AffineForm) -> IntRow {
        let (mut ints, _) = f.integer_entries();
        let g = crate::rat::content(&ints);
        if !g.is_zero() && !g.is_one() {
            for v in ints.iter_mut() {
                *v /= &g;
            }
        }
        let b = ints.remove(0);
        IntRow { b, a: ints }
    }

    fn eval(&self, y: &[Rat]) -> Rat {
        let mut acc = Rat::from_integer(self.b.clone());
        for (a, v) in self.a.iter().zip(y) {
            if !a.is_zero() && !v.is_zero() {
                acc += v * a;
            }
        }
        acc
    }
}

enum Raw {
    Infeasible,
    Unbounded,
    Optimal(Vec<Rat>),
}

/// Fraction-free dual simplex tableau. True entries are `t / den`.
struct Tableau {
    rows: usize,
    width: usize,
    t: Vec<BigInt>,
    den: BigInt,
    basis: Vec<usize>,
    flipped: Vec<bool>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> &BigInt {
        &self.t[r * self.width + c]
    }

    fn rhs(&self) -> usize {
        self.width - 1
    }

    fn new(c: &[BigInt], rows: &[&IntRow]) -> Tableau {
        let d = c.len();
        let m = rows.len();
        let width = m + d + 1;
        let mut t = vec![BigInt::zero(); (d + 1) * width];
        let mut flipped = vec![false; d];
        for j in 0..d {
            let flip = c[j].is_negative();
            flipped[j] = flip;
            let base = (j + 1) * width;
            for (i, row) in rows.iter().enumerate() {
                let v = -&row.a[j];
                t[base + i] = if flip { -v } else { v };
            }
            t[base + m + j] = BigInt::one();
            t[base + width - 1] = if flip { -&c[j] } else { c[j].clone() };
        }
        Tableau {
            rows: d + 1,
            width,
            t,
            den: BigInt::one(),
            basis: (0..d).map(|j| m + j).collect(),
            flipped,
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.t[r * w + c].clone();
        debug_assert!(p.is_positive());
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let den = &self.den;
        let den_one = den.is_one();
        let update = |row: &mut [BigInt]| {
            let f = row[c].clone();
            if f.is_zero() {
                if p.is_one() && den_one {
                    return;
                }
                for v in row.iter_mut() {
                    if !v.is_zero() {
                        let x = &*v * &p;
                        *v = if den_one { x } else { exact_div(x, den) };
                    }
                }
            } else {
                for (v, pr) in row.iter_mut().zip(prow.iter()) {
                    let x = if pr.is_zero() {
                        if v.is_zero() {
                            continue;
                        }
                        &*v * &p
                    } else if v.is_zero() {
                        -(&f * pr)
                    } else {
                        &*v * &p - &f * pr
                    };
                    *v = if den_one { x } else { exact_div(x, den) };
                }
            }
        };
        for row in before.chunks_mut(w) {
            update(row);
        }
        for row in after.chunks_mut(w) {
            update(row);
        }
        self.den = p;
        self.basis[r - 1] = c;
    }

    fn negate_row(&mut self, r: usize) {
        let w = self.width;
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v = -std::mem::take(v);
        }
    }

    /// Bland's rule iterations on row 0 over columns `< limit`.
    /// Returns false if the problem is unbounded.
    fn run(&mut self, limit: usize) -> bool {
        let rhs = self.rhs();
        loop {
            let entering = (0..limit).find(|&k| self.at(0, k).is_negative());
            let Some(c) = entering else { return true };
            let mut best: Option<usize> = None;
            for r in 1..self.rows {
                let a = self.at(r, c);
                if !a.is_positive() {
                    continue;
                }
                best = Some(match best {
                    None => r,
                    Some(b) => {
                        // Compare rhs_r / a_r with rhs_b / a_b.
                        let lhs = self.at(r, rhs) * self.at(b, c);
                        let rhs_v = self.at(b, rhs) * a;
                        match lhs.cmp(&rhs_v) {
                            std::cmp::Ordering::Less => r,
                            std::cmp::Ordering::Greater => b,
                            std::cmp::Ordering::Equal => {
                                if self.basis[r - 1] < self.basis[b - 1] {
                                    r
                                } else {
                                    b
                                }
                            }
                        }
                    }
                });
            }
            match best {
                None => return false,
                Some(r) => self.pivot(r, c),
            }
        }
    }

    fn set_objective(&mut self, cost: &dyn Fn(usize) -> BigInt) {
        let w = self.width;
        let mut row0 = vec![BigInt::zero(); w];
        for (k, v) in row0.iter_mut().enumerate().take(w - 1) {
            let ck = cost(k);
            if !ck.is_zero() {
                *v = &ck * &self.den;
            }
        }
        for r in 1..self.rows {
            let cb = cost(self.basis[r - 1]);
            if cb.is_zero() {
                continue;
            }
            for (k, v) in row0.iter_mut().enumerate() {
                let e = self.at(r, k);
                if !e.is_zero() {
                    *v -= &cb * e;
                }
            }
        }
        self.t[..w].clone_from_slice(&row0);
    }
}

fn exact_div(x: BigInt, den: &BigInt) -> BigInt {
    debug_assert!((&x % den).is_zero(), "fraction-free division must be exact");
    x / den
}

/// Solves `max c·y` subject to `rows`. `c` has the row dimension.
fn solve(c: &[BigInt], rows: &[&IntRow]) -> Raw {
    let d = c.len();
    if d == 0 {
        return if rows.iter().all(|r| !r.b.is_negative()) {
            Raw::Optimal(Vec::new())
        } else {
            Raw::Infeasible
        };
    }
    let m = rows.len();
    let mut tab = Tableau::new(c, rows);

    // Phase 1: minimize the sum of artificials.
    tab.set_objective(&|k| if k >= m && k < m + d { BigInt::one() } else { BigInt::zero() });
    tab.run(m);
    if !tab.at(0, tab.rhs()).is_zero() {
        // The dual is infeasible: the primal is infeasible or unbounded.
        if c.iter().all(Zero::is_zero) {
            return Raw::Infeasible;
        }
        let zero = vec![BigInt::zero(); d];
        return match solve(&zero, rows) {
            Raw::Optimal(_) => Raw::Unbounded,
            other => other,
        };
    }
    // Drive remaining artificials out of the basis where possible.
    for r in 1..=d {
        if tab.basis[r - 1] < m {
            continue;
        }
        if let Some(k) = (0..m).find(|&k| !tab.at(r, k).is_zero()) {
            if tab.at(r, k).is_negative() {
                tab.negate_row(r);
            }
            tab.pivot(r, k);
        }
    }

    // Phase 2: minimize Σ b_i u_i.
    tab.set_objective(&|k| if k < m { rows[k].b.clone() } else { BigInt::zero() });
    if !tab.run(m) {
        return Raw::Infeasible;
    }
    let y = (0..d)
        .map(|j| {
            let mut v = Rat::new(-tab.at(0, m + j).clone(), tab.den.clone());
            if tab.flipped[j] {
                v = -v;
            }
            v
        })
        .collect();
    Raw::Optimal(y)
}

fn to_rows(constraints: &[LinConstraint], d: usize) -> Result<Vec<IntRow>> {
    constraints
        .iter()
        .map(|c| {
            if c.form.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: c.form.dim(),
                });
            }
            Ok(IntRow::from_form(&c.form))
        })
        .collect()
}

fn objective_ints(f: &AffineForm) -> Vec<BigInt> {
    let (mut ints, _) = f.integer_entries();
    ints.remove(0);
    ints
}

/// Maximizes `objective` over the closed region of `constraints`.
pub fn maximize(objective: &AffineForm, constraints: &[LinConstraint]) -> Result<LpResult> {
    let d = objective.dim();
    let rows = to_rows(constraints, d)?;
    let refs: Vec<&IntRow> = rows.iter().collect();
    Ok(match solve(&objective_ints(objective), &refs) {
        Raw::Infeasible => LpResult::Infeasible,
        Raw::Unbounded => LpResult::Unbounded,
        Raw::Optimal(y) => {
            debug_assert!(rows.iter().all(|r| !r.eval(&y).is_negative()));
            LpResult::Optimal {
                value: objective.eval_prefix(&y),
                witness: y,
            }
        }
    })
}

/// Minimizes `objective`; `Unbounded` means unbounded below.
pub fn minimize(objective: &AffineForm, constraints: &[LinConstraint]) -> Result<LpResult> {
    Ok(match maximize(&objective.neg(), constraints)? {
        LpResult::Optimal { witness, .. } => LpResult::Optimal {
            value: objective.eval_prefix(&witness),
            witness,
        },
        other => other,
    })
}

/// Some point of the closed region, if any.
pub fn feasible_point(dim: usize, constraints: &[LinConstraint]) -> Result<Option<Vec<Rat>>> {
    match maximize(&AffineForm::zero(dim), constraints)? {
        LpResult::Optimal { witness, .. } => Ok(Some(witness)),
        _ => Ok(None),
    }
}

/// True iff dropping `c` leaves the feasible region of `others` unchanged,
/// i.e. `c ≥ 0` already holds on it.
pub fn is_redundant(c: &LinConstraint, others: &[LinConstraint]) -> Result<bool> {
    match minimize(&c.form, others)? {
        LpResult::Infeasible => Err(Error::Infeasible),
        LpResult::Unbounded => Ok(false),
        LpResult::Optimal { value, .. } => Ok(!value.is_negative()),
    }
}

/// True iff `f ≥ 0` on the closed region, which must be non-empty. A
/// float-guided Farkas combination, checked exactly, settles most calls
/// without the simplex.
pub fn implied_by(f: &AffineForm, constraints: &[LinConstraint]) -> Result<bool> {
    let rows = to_rows(constraints, f.dim())?;
    let target = IntRow::from_form(f);
    let float_rows: Vec<FloatRow> = rows.iter().map(FloatRow::from_int).collect();
    let refs: Vec<&FloatRow> = float_rows.iter().collect();
    if let Some(support) = approx::dominating_support(&FloatRow::from_int(&target), &refs) {
        let cols: Vec<&[BigInt]> = support.iter().map(|&k| rows[k].a.as_slice()).collect();
        if let Some((u, den)) = approx::nonneg_combination(&cols, &target.a) {
            let mut rest = &target.b * &den;
            for (uk, &k) in u.iter().zip(&support) {
                rest -= uk * &rows[k].b;
            }
            if !rest.is_negative() {
                return Ok(true);
            }
        }
    }
    Ok(match minimize(f, constraints)? {
        LpResult::Infeasible => return Err(Error::Infeasible),
        LpResult::Unbounded => false,
        LpResult::Optimal { value, .. } => !value.is_negative(),
    })
}

/// True iff `f = 0` meets the interior of the region: `sup f > 0` and
/// `inf f < 0`.
pub fn crosses(f: &AffineForm, constraints: &[LinConstraint]) -> Result<bool> {
    let sup_positive = match maximize(f, constraints)? {
        LpResult::Infeasible => return Err(Error::Infeasible),
        LpResult::Unbounded => true,
        LpResult::Optimal { value, .. } => value.is_positive(),
    };
    if !sup_positive {
        return Ok(false);
    }
    Ok(match minimize(f, constraints)? {
        LpResult::Infeasible => return Err(Error::Infeasible),
        LpResult::Unbounded => true,
        LpResult::Optimal { value, .. } => value.is_negative(),
    })
}

/// A point satisfying every constraint strictly, or `None` when the region
/// has empty interior. Maximizes the common slack `t ≤ 1` with constraint
/// generation, so only the constraints that matter enter the LP.
pub fn interior_point(dim: usize, constraints: &[LinConstraint]) -> Result<Option<Vec<Rat>>> {
    let rows = to_rows(constraints, dim)?;
    Ok(interior_point_rows(dim, &rows))
}

pub(crate) fn interior_point_rows(dim: usize, rows: &[IntRow]) -> Option<Vec<Rat>> {
    if let Some(p) = guessed_interior_point(dim, rows) {
        return Some(p);
    }
    // Variables (y, t); row i becomes a_i·y + b_i − t ≥ 0, plus 1 − t ≥ 0.
    let lifted: Vec<IntRow> = rows
        .iter()
        .map(|r| {
            let mut a = r.a.clone();
            a.push(-BigInt::one());
            IntRow { b: r.b.clone(), a }
        })
        .collect();
    let mut cap = IntRow {
        b: BigInt::one(),
        a: vec![BigInt::zero(); dim + 1],
    };
    cap.a[dim] = -BigInt::one();
    let mut objective = vec![BigInt::zero(); dim + 1];
    objective[dim] = BigInt::one();

    let mut active: Vec<usize> = (0..rows.len().min(2 * dim + 2)).collect();
    let mut in_active = vec![false; rows.len()];
    for &i in &active {
        in_active[i] = true;
    }
    loop {
        let mut refs: Vec<&IntRow> = active.iter().map(|&i| &lifted[i]).collect();
        refs.push(&cap);
        let sol = match solve(&objective, &refs) {
            Raw::Optimal(y) => y,
            // t is bounded above by the cap and the system is always
            // feasible for small enough t.
            _ => unreachable!("slack LP is feasible and bounded"),
        };
        let t = &sol[dim];
        if !t.is_positive() {
            return None;
        }
        let y = &sol[..dim];
        let mut violated: Vec<(Rat, usize)> = Vec::new();
        let mut strictly_inside = true;
        for (i, r) in rows.iter().enumerate() {
            let v = r.eval(y);
            if !v.is_positive() {
                strictly_inside = false;
            }
            if &v < t && !in_active[i] {
                violated.push((v, i));
            }
        }
        if strictly_inside {
            return Some(y.to_vec());
        }
        if violated.is_empty() {
            // Optimal for the full system yet some row is not strict: t ≤ 0
            // would have been caught above, so this cannot happen.
            unreachable!("slack optimum with positive t is strictly interior");
        }
        violated.sort();
        for (_, i) in violated.into_iter().take(dim + 1) {
            in_active[i] = true;
            active.push(i);
        }
    }
}

/// Floating-point slack maximization, rounded to a dyadic point and
/// accepted only if every row is exactly positive there.
fn guessed_interior_point(dim: usize, rows: &[IntRow]) -> Option<Vec<Rat>> {
    if dim == 0 {
        return None;
    }
    let float_rows: Vec<FloatRow> = rows.iter().map(FloatRow::from_int).collect();
    // Far vertices of unbounded regions are numerically useless, so the
    // search is confined to growing boxes around the origin.
    for radius in [1e4, 1e8, 1e12, 1e16] {
        let Some((y, t)) = approx::max_slack(&float_rows, dim, radius) else {
            continue;
        };
        if t <= 0.0 {
            continue;
        }
        let Some((w, den)) = dyadic(&y) else {
            continue;
        };
        if rows.iter().all(|r| (&r.b * &den + int_dot(&r.a, &w)).is_positive()) {
            return Some(w.into_iter().map(|x| Rat::new(x, den.clone())).collect());
        }
    }
    None
}

/// `y` rounded to multiples of 2^−40, as integers over the denominator.
fn dyadic(y: &[f64]) -> Option<(Vec<BigInt>, BigInt)> {
    let w = y
        .iter()
        .map(|v| BigInt::from_f64((v * 2f64.powi(40)).round()))
        .collect::<Option<Vec<BigInt>>>()?;
    Some((w, BigInt::one() << 40u32))
}

/// `(v·L, L)` with `L` the least common denominator of `v`.
fn common_denominator(v: &[Rat]) -> (Vec<BigInt>, BigInt) {
    let den = crate::rat::common_denominator(v);
    let ints = v.iter().map(|x| x.numer() * (&den / x.denom())).collect();
    (ints, den)
}

fn int_dot(a: &[BigInt], v: &[BigInt]) -> BigInt {
    a.iter().zip(v).filter(|(a, _)| !a.is_zero()).fold(BigInt::zero(), |acc, (a, x)| acc + a * x)
}

enum Guided {
    Redundant,
    Direction(Vec<BigInt>),
    Unknown,
}

/// Outcome of [`irredundant_subset`].
#[derive(Clone, Debug)]
pub struct Irredundant {
    /// Indices (into the input) of the constraints that define facets.
    pub kept: Vec<usize>,
    /// A strictly interior point of the region.
    pub interior: Vec<Rat>,
    /// Number of LPs solved.
    pub lp_calls: usize,
}

/// Computes the facet-defining subset of a system with non-empty interior
/// (Clarkson's output-sensitive method): each constraint is tested by an LP
/// over the facets found so far, and a violating witness is turned into a
/// new facet by shooting a ray from an interior point.
///
/// Constant constraints are dropped when satisfied. Constraints that are
/// positive multiples of an earlier one are dropped as duplicates.
pub fn irredundant_subset(dim: usize, constraints: &[AffineForm]) -> Result<Irredundant> {
    let mut rows: Vec<IntRow> = Vec::with_capacity(constraints.len());
    let mut origin: Vec<usize> = Vec::with_capacity(constraints.len());
    let mut seen = std::collections::HashSet::new();
    for (i, f) in constraints.iter().enumerate() {
        if f.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: f.dim(),
            });
        }
        let row = IntRow::from_form(f);
        if row.a.iter().all(Zero::is_zero) {
            if row.b.is_negative() {
                return Err(Error::Infeasible);
            }
            continue;
        }
        if seen.insert(row.clone()) {
            rows.push(row);
            origin.push(i);
        }
    }
    let interior = interior_point_rows(dim, &rows)
        .ok_or_else(|| Error::Degenerate("constraint region has empty interior".into()))?;

    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Undecided,
        Facet,
        Redundant,
    }
    let n = rows.len();
    let mut state = vec![State::Undecided; n];
    // The interior point as an integer vector over a common denominator,
    // and each row's slack there scaled by that denominator.
    let (z_int, z_den) = common_denominator(&interior);
    let slack: Vec<BigInt> = rows.iter().map(|r| &r.b * &z_den + int_dot(&r.a, &z_int)).collect();

    // First exit of the ray z + s·v, s > 0, among rows not known to be
    // redundant. Known facets may be skipped when the ray points at a
    // witness that satisfies them. Returns all rows attaining the minimum.
    let first_hits = |v: &[BigInt], state: &[State], skip_facets: bool| -> Vec<usize> {
        // Exit time slack/speed, kept as the pair.
        let mut best: Option<(BigInt, BigInt)> = None;
        let mut hits = Vec::new();
        for (j, r) in rows.iter().enumerate() {
            match state[j] {
                State::Redundant => continue,
                State::Facet if skip_facets => continue,
                _ => {}
            }
            let speed = -int_dot(&r.a, v);
            if !speed.is_positive() {
                continue;
            }
            let ord = best.as_ref().map(|(bs, bv)| (&slack[j] * bv).cmp(&(bs * &speed)));
            match ord {
                Some(std::cmp::Ordering::Greater) => {}
                Some(std::cmp::Ordering::Equal) => hits.push(j),
                _ => {
                    best = Some((slack[j].clone(), speed));
                    hits.clear();
                    hits.push(j);
                }
            }
        }
        hits
    };

    // Seed with coordinate rays.
    for k in 0..dim {
        for sgn in [1i64, -1] {
            let mut v = vec![BigInt::zero(); dim];
            v[k] = sgn.into();
            let hits = first_hits(&v, &state, false);
            if hits.len() == 1 {
                state[hits[0]] = State::Facet;
            }
        }
    }

    let float_rows: Vec<FloatRow> = rows.iter().map(FloatRow::from_int).collect();
    let z_float: Vec<f64> = interior.iter().map(|v| v.to_f64().unwrap_or(0.0)).collect();

    // Direction from the interior point towards `y`, if the ray provably
    // crosses row i strictly before every known facet.
    let exit_direction = |i: usize, y: &[f64], facets: &[usize]| -> Option<Vec<BigInt>> {
        let (w, w_den) = dyadic(y)?;
        let v: Vec<BigInt> = w.iter().zip(&z_int).map(|(w, z)| w * &z_den - z * &w_den).collect();
        let speed_i = -int_dot(&rows[i].a, &v);
        if !speed_i.is_positive() {
            return None;
        }
        for &k in facets {
            let speed_k = -int_dot(&rows[k].a, &v);
            if speed_k.is_positive() && &slack[i] * &speed_k >= &slack[k] * &speed_i {
                return None;
            }
        }
        Some(v)
    };

    // Cheap attempt at deciding row i with floating-point LPs whose
    // answers are then certified exactly: either a point beyond row i
    // inside the known facets, giving a ray that exits through a new
    // facet, or a nonnegative combination of facets implying row i.
    let guided = |i: usize, facets: &[usize]| -> Guided {
        let target = &float_rows[i];
        let refs: Vec<&FloatRow> = facets.iter().map(|&j| &float_rows[j]).collect();
        let s_i = target.eval(&z_float).max(1e-9);
        for scale in [4.0, 1e3, 1e6] {
            let radius = scale * (1.0 + s_i);
            let Some(y) = approx::min_over(target, s_i, &refs, &z_float, radius) else {
                break;
            };
            if target.eval(&y) < -s_i / 4.0 {
                if let Some(v) = exit_direction(i, &y, facets) {
                    return Guided::Direction(v);
                }
                break;
            }
            let on_box = y.iter().zip(&z_float).any(|(a, z)| (a - z).abs() >= radius * (1.0 - 1e-9));
            if !on_box {
                break;
            }
        }
        let Some(support) = approx::dominating_support(target, &refs) else {
            return Guided::Unknown;
        };
        let cols: Vec<&[BigInt]> = support.iter().map(|&k| rows[facets[k]].a.as_slice()).collect();
        let Some((u, den)) = approx::nonneg_combination(&cols, &rows[i].a) else {
            return Guided::Unknown;
        };
        let mut rest = &rows[i].b * &den;
        for (uk, &k) in u.iter().zip(&support) {
            if !uk.is_zero() {
                rest -= uk * &rows[facets[k]].b;
            }
        }
        if rest.is_negative() {
            Guided::Unknown
        } else {
            Guided::Redundant
        }
    };

    let mut lp_calls = 0;
    let mut queue: Vec<usize> = (0..n).rev().filter(|&j| state[j] == State::Undecided).collect();
    while let Some(i) = queue.pop() {
        if state[i] != State::Undecided {
            continue;
        }
        let facets: Vec<usize> = (0..n).filter(|&j| state[j] == State::Facet).collect();
        let v = match guided(i, &facets) {
            Guided::Redundant => {
                state[i] = State::Redundant;
                continue;
            }
            Guided::Direction(v) => v,
            Guided::Unknown => {
                // min row_i over the facets found so far, with row_i ≥ −1.
                let mut floor = rows[i].clone();
                floor.b += 1;
                let mut refs: Vec<&IntRow> = facets.iter().map(|&j| &rows[j]).collect();
                refs.push(&floor);
                let c: Vec<BigInt> = rows[i].a.iter().map(|v| -v).collect();
                lp_calls += 1;
                let witness = match solve(&c, &refs) {
                    Raw::Optimal(y) => y,
                    _ => unreachable!("bounded and feasible by construction"),
                };
                debug_assert!(refs.iter().all(|r| !r.eval(&witness).is_negative()), "infeasible witness");
                if !rows[i].eval(&witness).is_negative() {
                    state[i] = State::Redundant;
                    continue;
                }
                let (w_int, w_den) = common_denominator(&witness);
                w_int.iter().zip(&z_int).map(|(w, z)| w * &z_den - z * &w_den).collect::<Vec<BigInt>>()
            }
        };
        let hits = first_hits(&v, &state, true);
        debug_assert!(!hits.is_empty());
        if hits.len() == 1 {
            let j = hits[0];
            state[j] = State::Facet;
            if j != i {
                queue.push(i);
            }
        } else {
            // Several rows tight at the exit point; settle each directly.
            for &j in &hits {
                let others: Vec<&IntRow> = (0..n)
                    .filter(|&k| k != j && state[k] != State::Redundant)
                    .map(|k| &rows[k])
                    .collect();
                let mut floor = rows[j].clone();
                floor.b += 1;
                let mut refs = others;
                refs.push(&floor);
                let c: Vec<BigInt> = rows[j].a.iter().map(|v| -v).collect();
                lp_calls += 1;
                let w = match solve(&c, &refs) {
                    Raw::Optimal(y) => y,
                    _ => unreachable!("bounded and feasible by construction"),
                };
                state[j] = if rows[j].eval(&w).is_negative() {
                    State::Facet
                } else {
                    State::Redundant
                };
            }
            if state[i] == State::Undecided {
                queue.push(i);
            }
        }
    }
    let kept = (0..n)
        .filter(|&j| state[j] == State::Facet)
        .map(|j| origin[j])
        .collect();
    Ok(Irredundant {
        kept,
        interior,
        lp_calls,
    })
}
