//! Floating-point LPs used only to guess. Callers turn a guess into an
//! exact certificate or fall back to the exact solver.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::IntRow;
use crate::rat::lcm;

/// Row scaled to unit max-norm in floating point.
#[derive(Clone, Debug)]
pub(super) struct FloatRow {
    pub b: f64,
    pub a: Vec<f64>,
}

impl FloatRow {
    pub fn from_int(row: &IntRow) -> FloatRow {
        let bits = row.a.iter().chain(std::iter::once(&row.b)).map(BigInt::bits).max().unwrap_or(0);
        let shift = bits.saturating_sub(60);
        let conv = |v: &BigInt| (v >> shift).to_f64().unwrap_or(0.0);
        let a: Vec<f64> = row.a.iter().map(conv).collect();
        let b = conv(&row.b);
        let norm = a.iter().fold(b.abs(), |m, v| m.max(v.abs()));
        if norm == 0.0 {
            return FloatRow { b, a };
        }
        FloatRow {
            b: b / norm,
            a: a.into_iter().map(|v| v / norm).collect(),
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.b + self.a.iter().zip(y).map(|(a, v)| a * v).sum::<f64>()
    }

    fn terms<'a>(&'a self, vars: &'a [Variable]) -> impl Iterator<Item = (Variable, f64)> + 'a {
        vars.iter().zip(&self.a).filter(|(_, &a)| a != 0.0).map(|(&v, &a)| (v, a))
    }
}

fn optimum(problem: &Problem, vars: &[Variable]) -> Option<Vec<f64>> {
    let outcome = problem.solve().ok()?;
    let sol = outcome.solution()?;
    let y: Vec<f64> = vars.iter().map(|&v| sol.var_value(v)).collect();
    y.iter().all(|v| v.is_finite()).then_some(y)
}

/// Maximizes the common slack `t ≤ 1` of `rows` over the box
/// `|y_j| ≤ radius`. Returns `(y, t)`.
pub(super) fn max_slack(rows: &[FloatRow], dim: usize, radius: f64) -> Option<(Vec<f64>, f64)> {
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<Variable> = (0..dim).map(|_| p.add_var(0.0, (-radius, radius))).collect();
    let t = p.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    for r in rows {
        let expr: Vec<(Variable, f64)> = r.terms(&vars).chain(std::iter::once((t, -1.0))).collect();
        p.add_constraint(expr, ComparisonOp::Ge, -r.b);
    }
    let mut all = vars.clone();
    all.push(t);
    let mut y = optimum(&p, &all)?;
    let t = y.pop()?;
    Some((y, t))
}

/// Minimizes `target` over `rows ≥ 0`, `target ≥ −floor` and the box of
/// half-width `radius` around `center`.
pub(super) fn min_over(target: &FloatRow, floor: f64, rows: &[&FloatRow], center: &[f64], radius: f64) -> Option<Vec<f64>> {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Variable> = center
        .iter()
        .zip(&target.a)
        .map(|(&z, &a)| p.add_var(a, (z - radius, z + radius)))
        .collect();
    for r in rows {
        p.add_constraint(r.terms(&vars).collect::<Vec<_>>(), ComparisonOp::Ge, -r.b);
    }
    p.add_constraint(target.terms(&vars).collect::<Vec<_>>(), ComparisonOp::Ge, -target.b - floor);
    optimum(&p, &vars)
}

/// Indices of the rows in a cheapest nonnegative combination `Σ u_k a_k`
/// matching the linear part of `target`, when its constant `Σ u_k b_k`
/// does not exceed the target's (so the target is implied).
pub(super) fn dominating_support(target: &FloatRow, rows: &[&FloatRow]) -> Option<Vec<usize>> {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Variable> = rows.iter().map(|r| p.add_var(r.b, (0.0, f64::INFINITY))).collect();
    for (j, &aj) in target.a.iter().enumerate() {
        let expr: Vec<(Variable, f64)> = vars
            .iter()
            .zip(rows)
            .filter(|(_, r)| r.a[j] != 0.0)
            .map(|(&v, r)| (v, r.a[j]))
            .collect();
        p.add_constraint(expr, ComparisonOp::Eq, aj);
    }
    let u = optimum(&p, &vars)?;
    let cost: f64 = u.iter().zip(rows).map(|(u, r)| u * r.b).sum();
    if cost > target.b + 1e-9 {
        return None;
    }
    Some((0..rows.len()).filter(|&k| u[k] > 1e-12).collect())
}

/// Exact nonnegative `u = num / den` with `Σ u_k·cols[k] = target`, by
/// fraction-free Gauss–Jordan elimination with free variables set to zero.
pub(super) fn nonneg_combination(cols: &[&[BigInt]], target: &[BigInt]) -> Option<(Vec<BigInt>, BigInt)> {
    let s = cols.len();
    let d = target.len();
    let w = s + 1;
    let mut mat: Vec<BigInt> = Vec::with_capacity(d * w);
    for r in 0..d {
        mat.extend(cols.iter().map(|c| c[r].clone()));
        mat.push(target[r].clone());
    }
    let mut pivots = Vec::new();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..s {
        if r == d {
            break;
        }
        let Some(p) = (r..d).find(|&i| !mat[i * w + c].is_zero()) else {
            continue;
        };
        if p != r {
            for k in 0..w {
                mat.swap(r * w + k, p * w + k);
            }
        }
        let piv = mat[r * w + c].clone();
        let prow: Vec<BigInt> = mat[r * w..(r + 1) * w].to_vec();
        for i in 0..d {
            if i == r {
                continue;
            }
            let f = mat[i * w + c].clone();
            for k in 0..w {
                let v = &mat[i * w + k] * &piv - &f * &prow[k];
                mat[i * w + k] = v / &prev;
            }
        }
        prev = piv;
        pivots.push((r, c));
        r += 1;
    }
    if (r..d).any(|i| !mat[i * w + s].is_zero()) {
        return None;
    }
    let den = pivots.iter().fold(BigInt::one(), |l, &(i, c)| lcm(&l, &mat[i * w + c]));
    let mut num = vec![BigInt::zero(); s];
    for &(i, c) in &pivots {
        let diag = &mat[i * w + c];
        num[c] = &mat[i * w + s] * (&den / diag);
        if num[c].is_negative() {
            return None;
        }
    }
    // Confirm the combination exactly.
    for (row, t) in target.iter().enumerate() {
        let mut acc = BigInt::zero();
        for (k, col) in cols.iter().enumerate() {
            if !num[k].is_zero() && !col[row].is_zero() {
                acc += &num[k] * &col[row];
            }
        }
        if acc != t * &den {
            return None;
        }
    }
    Some((num, den))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn combination_found_and_checked() {
        let a = ints(&[2, 0, 1]);
        let b = ints(&[0, 3, 1]);
        let c = ints(&[1, 1, 1]);
        // 2a + b = (4, 3, 3)
        let (u, den) = nonneg_combination(&[&a, &b, &c], &ints(&[4, 3, 3])).unwrap();
        assert!(den.is_positive() && u.iter().all(|v| !v.is_negative()));
        for r in 0..3 {
            let back: BigInt = u.iter().zip([&a, &b, &c]).map(|(u, col)| u * &col[r]).sum();
            assert_eq!(back, [4, 3, 3][r] * &den);
        }
        // −a is not a nonnegative combination of a alone.
        assert!(nonneg_combination(&[&a], &ints(&[-2, 0, -1])).is_none());
        // Inconsistent system.
        assert!(nonneg_combination(&[&a], &ints(&[1, 1, 1])).is_none());
    }

    #[test]
    fn float_guides_on_the_unit_square() {
        let rows: Vec<FloatRow> = [(0, [1, 0]), (1, [-1, 0]), (0, [0, 1]), (1, [0, -1])]
            .iter()
            .map(|&(b, a)| FloatRow::from_int(&IntRow { b: b.into(), a: ints(&a) }))
            .collect();
        let (y, t) = max_slack(&rows, 2, 10.0).unwrap();
        assert!((t - 0.5).abs() < 1e-9 && (y[0] - 0.5).abs() < 1e-9);

        // 3 − x − y ≥ 0 is implied by x ≤ 1, y ≤ 1.
        let target = FloatRow::from_int(&IntRow { b: 3.into(), a: ints(&[-1, -1]) });
        let refs: Vec<&FloatRow> = rows.iter().collect();
        let support = dominating_support(&target, &refs).unwrap();
        assert_eq!(support, vec![1, 3]);
        let m = min_over(&target, 1.0, &refs, &[0.5, 0.5], 10.0).unwrap();
        assert!(target.eval(&m) > 0.0);
    }
}
