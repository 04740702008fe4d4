//! Locating the vertical-decomposition prism that contains the hidden point.
//!
//! The prism is built one level at a time. At level `m` the current forms
//! (dimension `m`) are sign-tested, the nearest form above the point becomes
//! the ceiling and the nearest below becomes the floor. The other forms are
//! intersected with the ceiling and floor and projected, giving wall
//! candidates in dimension `m − 1`; the non-redundant ones are the forms of
//! the next level.
//!
//! All forms passed between levels are oriented so that the hidden point's
//! side is non-negative, and kept as primitive integer forms.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::form::AffineForm;
use crate::lp::{self, LinConstraint};
use crate::oracle::SignOracle;
use crate::rat::{content, Rat, Sign};

#[derive(Clone, Debug, Default)]
pub struct LocateOptions {
    /// Drop the candidate of each form that is implied by its sibling and
    /// the ceiling/floor gap before running LPs.
    pub algebraic_prefilter: bool,
}

impl LocateOptions {
    pub fn new() -> Self {
        LocateOptions {
            algebraic_prefilter: true,
        }
    }
}

/// Ceiling or floor of one level.
#[derive(Clone, Debug)]
pub struct Bound {
    /// Index into the level's forms.
    pub source: usize,
    /// The bounding form, oriented so the hidden point's side is `≥ 0`.
    pub form: AffineForm,
    /// Raw sign of the source form at the point (may be zero on lower
    /// levels, where zero is treated as positive).
    pub sign: Sign,
}

#[derive(Clone, Debug)]
pub struct PrismLevel {
    pub dim: usize,
    /// The level's forms; at the top level these are the sample.
    pub forms: Vec<AffineForm>,
    /// Sign of each form as returned by the oracle.
    pub signs: Vec<Sign>,
    pub ceiling: Option<Bound>,
    pub floor: Option<Bound>,
    /// Surviving wall forms of dimension `dim − 1`, oriented non-negative
    /// on the hidden point's side.
    pub kept_walls: Vec<AffineForm>,
    /// Wall candidates before pruning (after zero/constant removal).
    pub candidates: usize,
    pub queries: usize,
    /// Zero signs treated as positive on this level.
    pub zero_signs: usize,
    /// Height comparisons that came out equal.
    pub ties: usize,
    pub lp_calls: usize,
}

/// Ceiling and floor of one level.
type BoundPair<T> = (Option<T>, Option<T>);

#[derive(Clone, Debug)]
pub struct Prism {
    dim: usize,
    /// `levels[0]` is level `dim`, the last entry is level 1.
    levels: Vec<PrismLevel>,
    constraints: Vec<LinConstraint>,
    /// Integer `[constant, coeffs...]` of each level's ceiling and floor.
    int_bounds: Vec<BoundPair<Vec<BigInt>>>,
    /// The same bounds as `x_m = Σ g_j x_j + g_0` in floating point, when
    /// representable; used to settle extent signs before the exact path.
    float_bounds: Vec<BoundPair<FloatBound>>,
}

const UNIT: f64 = f64::EPSILON / 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Choice {
    /// The coefficient vanished; the coordinate is set to zero.
    Free,
    Ceil,
    Floor,
}

enum FloatSup {
    Settled(Extent),
    /// Undecided at `level` (0: the final constant), after the listed
    /// substitutions of the levels above it, top first.
    Open { level: usize, choices: Vec<Choice> },
}

struct OpenSup<'a> {
    level: usize,
    choices: &'a [Choice],
    ints: &'a [BigInt],
}

/// Entries with an absolute error radius.
#[derive(Clone, Debug)]
struct FloatBound {
    /// `−h_j / h_m` for `j < m`.
    g: Vec<f64>,
    err: Vec<f64>,
}

/// Integer entries scaled to unit max-norm, with error radii.
fn float_entries(v: &[BigInt]) -> (Vec<f64>, Vec<f64>) {
    let bits = v.iter().map(BigInt::bits).max().unwrap_or(0);
    let shift = bits.saturating_sub(60);
    let raw: Vec<f64> = v.iter().map(|x| (x >> shift).to_f64().unwrap_or(f64::NAN)).collect();
    let norm = raw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if norm == 0.0 {
        return (raw, vec![0.0; v.len()]);
    }
    let vals: Vec<f64> = raw.iter().map(|x| x / norm).collect();
    let err = v
        .iter()
        .zip(&vals)
        .map(|(x, f)| if x.is_zero() { 0.0 } else { 3.0 * UNIT * f.abs() + f64::powi(2.0, -57) })
        .collect();
    (vals, err)
}

impl FloatBound {
    fn of(h: &[BigInt]) -> Option<FloatBound> {
        let m = h.len() - 1;
        let (vals, err) = float_entries(h);
        let (hm, ehm) = (vals[m], err[m]);
        // Also rejects NaN.
        if hm.abs().partial_cmp(&(2.0 * ehm)) != Some(Ordering::Greater) || hm.abs() < 1e-280 {
            return None;
        }
        let den = hm.abs() - ehm;
        let mut g = Vec::with_capacity(m);
        let mut eg = Vec::with_capacity(m);
        for j in 0..m {
            let q = -vals[j] / hm;
            let e = (err[j] + q.abs() * ehm) / den + 2.0 * UNIT * q.abs();
            if !q.is_finite() || !e.is_finite() {
                return None;
            }
            g.push(q);
            eg.push(e * (1.0 + 8.0 * UNIT));
        }
        Some(FloatBound { g, err: eg })
    }
}

/// Sign of an extremum over the prism.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extent {
    Unbounded,
    Finite(Sign),
}

fn int_entries(f: &AffineForm) -> Vec<BigInt> {
    f.primitive().integer_entries().0
}

#[derive(Clone, Debug)]
pub enum LocateOutcome {
    /// A zero sign on a top-level form; the payload indexes the sample.
    OnHyperplane(usize),
    Located(Prism),
}

impl Prism {
    pub(crate) fn from_levels(n: usize, levels: Vec<PrismLevel>) -> Prism {
        let mut constraints = Vec::new();
        for level in &levels {
            for b in level.ceiling.iter().chain(level.floor.iter()) {
                let lifted = b.form.lift(n);
                constraints.push(if b.sign == Sign::Zero {
                    LinConstraint::ge(lifted)
                } else {
                    LinConstraint::gt(lifted)
                });
            }
        }
        let int_bounds = levels
            .iter()
            .map(|l| (l.ceiling.as_ref().map(|b| int_entries(&b.form)), l.floor.as_ref().map(|b| int_entries(&b.form))))
            .collect::<Vec<_>>();
        let float_bounds = int_bounds
            .iter()
            .map(|(c, f)| (c.as_deref().and_then(FloatBound::of), f.as_deref().and_then(FloatBound::of)))
            .collect();
        Prism {
            dim: n,
            levels,
            constraints,
            int_bounds,
            float_bounds,
        }
    }

    /// A prism given only by its oriented ceiling/floor per level, top
    /// level first; the point is taken to be strictly inside.
    pub(crate) fn from_bounds(n: usize, bounds: &[(Option<AffineForm>, Option<AffineForm>)]) -> Prism {
        let bound = |f: &Option<AffineForm>| {
            f.as_ref().map(|f| Bound {
                source: 0,
                form: f.clone(),
                sign: Sign::Positive,
            })
        };
        let levels = bounds
            .iter()
            .enumerate()
            .map(|(i, (c, f))| PrismLevel {
                dim: n - i,
                forms: Vec::new(),
                signs: Vec::new(),
                ceiling: bound(c),
                floor: bound(f),
                kept_walls: Vec::new(),
                candidates: 0,
                queries: 0,
                zero_signs: 0,
                ties: 0,
                lp_calls: 0,
            })
            .collect();
        Prism::from_levels(n, levels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> &[PrismLevel] {
        &self.levels
    }

    pub fn level(&self, m: usize) -> &PrismLevel {
        &self.levels[self.dim - m]
    }

    /// The lifted ceilings and floors, at most two per level.
    pub fn constraints(&self) -> &[LinConstraint] {
        &self.constraints
    }

    pub fn queries(&self) -> usize {
        self.levels.iter().map(|l| l.queries).sum()
    }

    pub fn zero_signs(&self) -> usize {
        self.levels.iter().map(|l| l.zero_signs).sum()
    }

    pub fn ties(&self) -> usize {
        self.levels.iter().map(|l| l.ties).sum()
    }

    pub fn lp_calls(&self) -> usize {
        self.levels.iter().map(|l| l.lp_calls).sum()
    }

    /// True when every ceiling and floor had a non-zero sign, so the hidden
    /// point lies in the interior of the prism.
    pub fn strictly_inside(&self) -> bool {
        self.levels
            .iter()
            .flat_map(|l| l.ceiling.iter().chain(l.floor.iter()))
            .all(|b| b.sign != Sign::Zero)
    }

    /// Supremum of `f` over the closed prism; `None` when unbounded.
    ///
    /// The prism is a tower: every point of its projection to the first
    /// `m − 1` coordinates extends to the full interval between floor and
    /// ceiling of level `m`. So the supremum is found by substituting the
    /// ceiling (positive coefficient) or floor (negative coefficient) for
    /// each coordinate from the top down, without an LP.
    pub fn sup(&self, f: &AffineForm) -> Result<Option<Rat>> {
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: f.dim(),
            });
        }
        let mut cur = f.clone();
        for level in &self.levels {
            let a = cur.coeff(level.dim - 1).clone();
            cur = if a.is_zero() {
                cur.drop_last()
            } else {
                let bound = if a.is_positive() { &level.ceiling } else { &level.floor };
                match bound {
                    Some(b) => cur.substitute_last(&b.form)?,
                    None => return Ok(None),
                }
            };
        }
        Ok(Some(cur.constant().clone()))
    }

    /// Infimum of `f` over the closed prism; `None` when unbounded.
    pub fn inf(&self, f: &AffineForm) -> Result<Option<Rat>> {
        Ok(self.sup(&f.neg())?.map(|v| -v))
    }

    /// Sign of `sup f`, by the same substitution as [`sup`](Self::sup) but
    /// in integers, scaling only by positive factors.
    pub fn sup_sign(&self, f: &AffineForm) -> Result<Extent> {
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: f.dim(),
            });
        }
        Ok(self.sup_sign_ints(int_entries(f)))
    }

    /// Sign of `sup` from floating point, when the error bound settles it.
    fn sup_sign_float(&self, mut cur: Vec<f64>, mut err: Vec<f64>) -> FloatSup {
        let mut choices = Vec::new();
        let bounds = self.int_bounds.iter().zip(&self.float_bounds);
        for (level, ((int_ceil, int_floor), (ceil, floor))) in self.levels.iter().zip(bounds) {
            let open = |choices| FloatSup::Open {
                level: level.dim,
                choices,
            };
            let (a, ea) = (cur.pop().expect("one entry per level"), err.pop().expect("one entry per level"));
            if a == 0.0 && ea == 0.0 {
                choices.push(Choice::Free);
                continue;
            }
            if !a.is_finite() || !ea.is_finite() || a.abs() <= ea {
                return open(choices);
            }
            let (exact, approx, choice) = if a > 0.0 {
                (int_ceil, ceil, Choice::Ceil)
            } else {
                (int_floor, floor, Choice::Floor)
            };
            if exact.is_none() {
                return FloatSup::Settled(Extent::Unbounded);
            }
            let Some(b) = approx else {
                return open(choices);
            };
            choices.push(choice);
            for j in 0..cur.len() {
                let (g, eg) = (b.g[j], b.err[j]);
                let p = a * g;
                let e = err[j] + a.abs() * eg + ea * (g.abs() + eg) + 2.0 * UNIT * (cur[j].abs() + 2.0 * p.abs());
                cur[j] += p;
                err[j] = e * (1.0 + 8.0 * UNIT);
            }
        }
        let (c, e) = (cur[0], err[0]);
        if c == 0.0 && e == 0.0 {
            // Only exact zeros ever entered the constant.
            return FloatSup::Settled(Extent::Finite(Sign::Zero));
        }
        if !c.is_finite() || !e.is_finite() || c.abs() <= e {
            return FloatSup::Open { level: 0, choices };
        }
        FloatSup::Settled(Extent::Finite(if c > 0.0 { Sign::Positive } else { Sign::Negative }))
    }

    fn sup_sign_ints(&self, cur: Vec<BigInt>) -> Extent {
        self.sup_sign_tail(cur, 0)
    }

    /// The exact substitution from `self.levels[from]` down; `cur` has one
    /// entry per remaining coordinate plus the constant.
    fn sup_sign_tail(&self, mut cur: Vec<BigInt>, from: usize) -> Extent {
        for (level, (ceil, floor)) in self.levels.iter().zip(&self.int_bounds).skip(from) {
            let m = level.dim;
            let a = cur.pop().expect("one entry per level");
            if a.is_zero() {
                continue;
            }
            let h = match if a.is_positive() { ceil } else { floor } {
                Some(h) => h,
                None => return Extent::Unbounded,
            };
            // |h_m|·cur − sign(h_m)·a·h, without the last coordinate.
            let hm = &h[m];
            let scale = hm.abs();
            let factor = if hm.is_positive() { a } else { -a };
            for (c, hv) in cur.iter_mut().zip(&h[..m]) {
                let mut v = &*c * &scale;
                if !hv.is_zero() {
                    v -= &factor * hv;
                }
                *c = v;
            }
        }
        Extent::Finite(Sign::of_int(&cur[0]))
    }

    /// Settles the sups the float pass left open. A query open at level `L`
    /// is `f` composed with the substitutions chosen above `L`; that
    /// composition is the same linear map for every query sharing those
    /// choices, so the queries are sorted by their choices from level
    /// `L + 1` upwards and the maps are built along a depth-first walk,
    /// sharing the work on the large lower-level bounds.
    fn resolve_open(&self, queries: &[OpenSup<'_>]) -> Vec<Extent> {
        let n = self.dim;
        let key = |q: &OpenSup<'_>| (q.level, q.choices.iter().rev().copied().collect::<Vec<_>>());
        let mut order: Vec<(usize, Vec<Choice>, usize)> = queries
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let (l, k) = key(q);
                (l, k, i)
            })
            .collect();
        order.sort();
        let mut out = vec![Extent::Unbounded; queries.len()];
        // stack[t]: columns after the substitutions of levels L+1..=L+t.
        let mut stack: Vec<Vec<Vec<BigInt>>> = Vec::new();
        let mut path: Vec<Choice> = Vec::new();
        let mut cur_level = usize::MAX;
        for (l, choices, qi) in &order {
            if *l != cur_level {
                cur_level = *l;
                let units = (0..=*l)
                    .map(|i| (0..=*l).map(|j| BigInt::from((i == j) as u8)).collect())
                    .collect();
                stack = vec![units];
                path.clear();
            }
            let common = path.iter().zip(choices).take_while(|(a, b)| a == b).count();
            stack.truncate(common + 1);
            path.truncate(common);
            for &c in &choices[common..] {
                let m = l + path.len() + 1;
                let mut cols = stack.last().expect("unit columns").clone();
                self.lift_level(&mut cols, m, c);
                stack.push(cols);
                path.push(c);
            }
            let cols = stack.last().expect("unit columns");
            debug_assert!(cols.iter().all(|c| c.len() == n + 1));
            let f = queries[*qi].ints;
            let cur: Vec<BigInt> = cols
                .iter()
                .map(|col| f.iter().zip(col).filter(|(a, _)| !a.is_zero()).map(|(a, y)| a * y).sum())
                .collect();
            out[*qi] = self.sup_sign_tail(cur, n - l);
        }
        out
    }

    /// Extends each column by the coordinate `x_m` given by the chosen bound
    /// of level `m`. The columns share a positive scale and have no common
    /// factor; the new entries `−sign(h_m)·Σ h_j y_j` need the old entries
    /// scaled by `|h_m|`, and dividing the result by `gcd(|h_m|, new entries)`
    /// restores both properties without a full content computation.
    fn lift_level(&self, cols: &mut [Vec<BigInt>], m: usize, choice: Choice) {
        let (ceil, floor) = &self.int_bounds[self.dim - m];
        let h = match choice {
            Choice::Free => {
                cols.iter_mut().for_each(|c| c.push(BigInt::zero()));
                return;
            }
            Choice::Ceil => ceil.as_ref(),
            Choice::Floor => floor.as_ref(),
        }
        .expect("chosen bound exists");
        let scale = h[m].abs();
        let ys: Vec<BigInt> = cols
            .iter()
            .map(|col| {
                let y: BigInt = h[..m]
                    .iter()
                    .zip(col.iter())
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .map(|(a, b)| a * b)
                    .sum();
                if h[m].is_positive() {
                    -y
                } else {
                    y
                }
            })
            .collect();
        let g = content(std::iter::once(&scale).chain(&ys));
        let factor = &scale / &g;
        for (col, y) in cols.iter_mut().zip(ys) {
            if !factor.is_one() {
                for v in col.iter_mut().filter(|v| !v.is_zero()) {
                    *v *= &factor;
                }
            }
            col.push(if g.is_one() { y } else { y / &g });
        }
    }

    /// `f = 0` meets the interior: `sup f > 0` and `inf f < 0`.
    pub fn crossed_by(&self, f: &AffineForm) -> Result<bool> {
        Ok(!self.hits(std::slice::from_ref(f), false)?.is_empty())
    }

    /// `f = 0` meets the closed prism.
    pub fn touched_by(&self, f: &AffineForm) -> Result<bool> {
        Ok(!self.hits(std::slice::from_ref(f), true)?.is_empty())
    }

    /// Indices of the forms whose hyperplane crosses the interior, or with
    /// `closed` meets the closed prism.
    pub fn hits(&self, forms: &[AffineForm], closed: bool) -> Result<Vec<usize>> {
        let at_least = if closed { Sign::Zero } else { Sign::Positive };
        let ok = |e: Extent| match e {
            Extent::Unbounded => true,
            Extent::Finite(s) => s >= at_least,
        };
        let mut sides: Vec<[Vec<BigInt>; 2]> = Vec::with_capacity(forms.len());
        let mut settled: Vec<[Option<Extent>; 2]> = Vec::with_capacity(forms.len());
        let mut open: Vec<(usize, usize, usize, Vec<Choice>)> = Vec::new();
        for (i, f) in forms.iter().enumerate() {
            if f.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: f.dim(),
                });
            }
            let ints = int_entries(f);
            let neg: Vec<BigInt> = ints.iter().map(|v| -v).collect();
            let mut done = [None, None];
            for (s, side) in [&ints, &neg].into_iter().enumerate() {
                let (vals, err) = float_entries(side);
                match self.sup_sign_float(vals, err) {
                    FloatSup::Settled(e) => {
                        done[s] = Some(e);
                        if !ok(e) {
                            break;
                        }
                    }
                    FloatSup::Open { level, choices } => open.push((i, s, level, choices)),
                }
            }
            sides.push([ints, neg]);
            settled.push(done);
        }
        // Skip the exact work for forms already ruled out by their other side.
        open.retain(|(i, _, _, _)| settled[*i].iter().flatten().all(|&e| ok(e)));
        let queries: Vec<OpenSup<'_>> = open
            .iter()
            .map(|(i, s, level, choices)| OpenSup {
                level: *level,
                choices,
                ints: &sides[*i][*s],
            })
            .collect();
        let exact = self.resolve_open(&queries);
        for ((i, s, _, _), e) in open.iter().zip(exact) {
            settled[*i][*s] = Some(e);
        }
        Ok((0..forms.len())
            .filter(|&i| settled[i].iter().all(|e| e.is_some_and(ok)))
            .collect())
    }

    /// Per level: ceiling, floor and kept walls in normalized rational text.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for level in &self.levels {
            let show = |b: &Option<Bound>| b.as_ref().map_or("none".to_string(), |b| b.form.normalized().to_string());
            let _ = writeln!(out, "level {} ({} forms)", level.dim, level.forms.len());
            let _ = writeln!(out, "  ceiling: {}", show(&level.ceiling));
            let _ = writeln!(out, "  floor: {}", show(&level.floor));
            for w in &level.kept_walls {
                let _ = writeln!(out, "  wall: {} >= 0", w.primitive());
            }
        }
        out
    }
}

/// Locates the prism of the vertical decomposition of `sample` that
/// contains the oracle's point. `sample` holds forms of the oracle's
/// dimension in transformed coordinates; a zero sign on one of them ends
/// the search with [`LocateOutcome::OnHyperplane`].
pub fn locate_prism<O: SignOracle + ?Sized>(
    sample: &[AffineForm],
    oracle: &mut O,
    options: &LocateOptions,
) -> Result<LocateOutcome> {
    let n = oracle.dim();
    if sample.is_empty() {
        return Err(Error::Config("empty sample".into()));
    }
    if let Some(f) = sample.iter().find(|f| f.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.dim(),
        });
    }
    // Identical hyperplanes (possible for special LDT coefficients) are
    // tested once through their first occurrence.
    let mut seen: HashMap<AffineForm, usize> = HashMap::new();
    let mut top: Vec<AffineForm> = Vec::new();
    let mut origin: Vec<usize> = Vec::new();
    for (i, f) in sample.iter().enumerate() {
        if f.is_zero() || f.is_constant() {
            return Err(Error::ZeroForm);
        }
        if seen.insert(f.normalized(), i).is_none() {
            top.push(f.primitive());
            origin.push(i);
        }
    }

    let mut levels = Vec::with_capacity(n);
    let mut forms = top;
    for m in (1..=n).rev() {
        match locate_level(m, forms, oracle, options)? {
            LevelResult::Zero(i) => {
                debug_assert_eq!(m, n);
                return Ok(LocateOutcome::OnHyperplane(origin[i]));
            }
            LevelResult::Done(level) => {
                forms = level.kept_walls.clone();
                levels.push(*level);
            }
        }
    }

    Ok(LocateOutcome::Located(Prism::from_levels(n, levels)))
}

enum LevelResult {
    Zero(usize),
    Done(Box<PrismLevel>),
}

fn locate_level<O: SignOracle + ?Sized>(
    m: usize,
    forms: Vec<AffineForm>,
    oracle: &mut O,
    options: &LocateOptions,
) -> Result<LevelResult> {
    let top = m == oracle.dim();
    if forms.iter().any(AffineForm::is_vertical) {
        return Err(Error::Vertical { level: m });
    }
    let start = oracle.query_count();
    let mut signs = Vec::with_capacity(forms.len());
    let mut zero_signs = 0;
    for (i, f) in forms.iter().enumerate() {
        let s = oracle.sign_of(f)?;
        if s == Sign::Zero {
            if top {
                return Ok(LevelResult::Zero(i));
            }
            zero_signs += 1;
        }
        signs.push(s);
    }
    let effective = |i: usize| if signs[i] == Sign::Zero { Sign::Positive } else { signs[i] };

    // Above the point iff moving up along x_m reaches the form's zero set.
    let mut above = Vec::new();
    let mut below = Vec::new();
    for (i, f) in forms.iter().enumerate() {
        let lead = Sign::of(f.coeff(m - 1));
        if effective(i).times(lead) == Sign::Negative {
            above.push(i);
        } else {
            below.push(i);
        }
    }
    let ints: Vec<Vec<BigInt>> = forms.iter().map(|f| f.integer_entries().0).collect();
    let mut ties = 0;
    let mut nearest = |group: &[usize], want: Sign| -> Result<Option<usize>> {
        let mut best: Option<usize> = None;
        for &i in group {
            best = Some(match best {
                None => i,
                Some(b) => match oracle.sign_of(&height_gap(&ints[i], &ints[b])?)? {
                    s if s == want => i,
                    Sign::Zero => {
                        ties += 1;
                        if forms[i].normalized() < forms[b].normalized() {
                            i
                        } else {
                            b
                        }
                    }
                    _ => b,
                },
            });
        }
        Ok(best)
    };
    let ceiling_idx = nearest(&above, Sign::Negative)?;
    let floor_idx = nearest(&below, Sign::Positive)?;
    let bound = |i: usize| Bound {
        source: i,
        form: forms[i].oriented(effective(i)),
        sign: signs[i],
    };
    let ceiling = ceiling_idx.map(bound);
    let floor = floor_idx.map(bound);

    let mut level = PrismLevel {
        dim: m,
        forms: Vec::new(),
        signs: Vec::new(),
        ceiling,
        floor,
        kept_walls: Vec::new(),
        candidates: 0,
        queries: 0,
        zero_signs,
        ties,
        lp_calls: 0,
    };

    if m > 1 {
        let walls = wall_candidates(&forms, &ints, &signs, ceiling_idx, floor_idx, options)?;
        level.candidates = walls.forms.len();
        if !walls.forms.is_empty() {
            let pruned = lp::irredundant_subset(m - 1, &walls.forms)?;
            level.lp_calls = pruned.lp_calls;
            let mut kept_per_form: HashMap<usize, usize> = HashMap::new();
            for &c in &pruned.kept {
                if let Some(h) = walls.owner[c] {
                    *kept_per_form.entry(h).or_default() += 1;
                }
            }
            if let Some((&h, _)) = kept_per_form.iter().filter(|(_, &c)| c > 1).min_by_key(|(&h, _)| h) {
                return Err(Error::ObservationViolated(h));
            }
            let mut kept = pruned.kept;
            kept.sort_unstable();
            level.kept_walls = kept.into_iter().map(|c| walls.forms[c].clone()).collect();
        }
        if !forms.is_empty() && level.kept_walls.len() + 1 > forms.len().max(1) {
            return Err(Error::Degenerate(format!(
                "level {m} kept {} walls from {} forms",
                level.kept_walls.len(),
                forms.len()
            )));
        }
    }
    level.queries = oracle.query_count() - start;
    level.forms = forms;
    level.signs = signs;
    Ok(LevelResult::Done(Box::new(level)))
}

/// Candidate walls of one level, with the form each was derived from
/// (`None` for the ceiling/floor gap).
pub(crate) struct WallCandidates {
    pub forms: Vec<AffineForm>,
    pub owner: Vec<Option<usize>>,
}

/// `|h_m|·g − sign(h_m)·g_m·h` without the last coordinate: `g` evaluated
/// on the zero set of `h`, scaled by a positive factor, as a primitive form.
/// Both arguments are integer entries `[constant, coeffs...]`.
pub(crate) fn eliminate_last(g: &[BigInt], h: &[BigInt]) -> Result<AffineForm> {
    let m = h.len() - 1;
    let hm = &h[m];
    if hm.is_zero() {
        return Err(Error::Vertical { level: m });
    }
    let gm = &g[m];
    if gm.is_zero() {
        return Ok(AffineForm::primitive_from_ints(g[..m].to_vec()));
    }
    let scale = hm.abs();
    let factor = if hm.is_positive() { gm.clone() } else { -gm };
    let out = g[..m]
        .iter()
        .zip(&h[..m])
        .map(|(gv, hv)| {
            let v = gv * &scale;
            if hv.is_zero() {
                v
            } else {
                v - &factor * hv
            }
        })
        .collect();
    Ok(AffineForm::primitive_from_ints(out))
}

/// `height_f − height_g`, scaled by the positive `|f_m·g_m|`, where the
/// height of a form is its zero set solved for the last coordinate.
pub(crate) fn height_gap(f: &[BigInt], g: &[BigInt]) -> Result<AffineForm> {
    let m = f.len() - 1;
    let (fm, gm) = (&f[m], &g[m]);
    if fm.is_zero() || gm.is_zero() {
        return Err(Error::Vertical { level: m });
    }
    // height_f = −f_rest / f_m.
    let sf = if fm.is_positive() { -gm.abs() } else { gm.abs() };
    let sg = if gm.is_positive() { fm.abs() } else { -fm.abs() };
    let out: Vec<BigInt> = f[..m].iter().zip(&g[..m]).map(|(a, b)| a * &sf + b * &sg).collect();
    if out.iter().all(Zero::is_zero) {
        return Err(Error::IdenticalForms);
    }
    Ok(AffineForm::from_int_entries(out))
}

pub(crate) fn wall_candidates(
    forms: &[AffineForm],
    ints: &[Vec<BigInt>],
    signs: &[Sign],
    ceiling: Option<usize>,
    floor: Option<usize>,
    options: &LocateOptions,
) -> Result<WallCandidates> {
    let m = forms.first().map_or(0, AffineForm::dim);
    let mut out = WallCandidates {
        forms: Vec::new(),
        owner: Vec::new(),
    };
    let mut push = |f: AffineForm, owner: Option<usize>| -> Result<()> {
        if f.is_constant() {
            // A constant candidate is a tautology or a contradiction.
            if f.constant().is_negative() {
                return Err(Error::Degenerate("contradictory wall candidate".into()));
            }
            return Ok(());
        }
        out.forms.push(f);
        out.owner.push(owner);
        Ok(())
    };
    let both = ceiling.is_some() && floor.is_some();
    for (i, h) in forms.iter().enumerate() {
        if Some(i) == ceiling || Some(i) == floor {
            continue;
        }
        let s = if signs[i] == Sign::Zero { Sign::Positive } else { signs[i] };
        let is_above = s.times(Sign::of(h.coeff(m - 1))) == Sign::Negative;
        // With both bounds present, the candidate on the far side is implied
        // by the near one plus the gap constraint.
        let skip_ceiling = options.algebraic_prefilter && both && !is_above;
        let skip_floor = options.algebraic_prefilter && both && is_above;
        if let (Some(c), false) = (ceiling, skip_ceiling) {
            push(eliminate_last(&ints[i], &ints[c])?.oriented(s), Some(i))?;
        }
        if let (Some(f), false) = (floor, skip_floor) {
            push(eliminate_last(&ints[i], &ints[f])?.oriented(s), Some(i))?;
        }
    }
    if let (Some(c), Some(f)) = (ceiling, floor) {
        let gap = height_gap(&ints[c], &ints[f])?;
        push(gap.primitive(), None)?;
    }
    Ok(out)
}

/// Independent LP check: the prism has non-empty interior and no form of
/// `sample` crosses it. A form positive at an interior point crosses iff
/// `f ≥ 0` fails somewhere on the prism, and symmetrically, so one
/// implication test per form suffices.
pub fn verify_prism(prism: &Prism, sample: &[AffineForm]) -> Result<bool> {
    let region = prism.constraints();
    let Some(inside) = lp::interior_point(prism.dim, region)? else {
        return Ok(false);
    };
    for f in sample {
        let holds = match Sign::of(&f.eval_prefix(&inside)) {
            Sign::Zero => false,
            s => lp::implied_by(&f.oriented(s), region)?,
        };
        if !holds {
            return Ok(false);
        }
    }
    Ok(true)
}
