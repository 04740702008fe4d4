//! Seeded generic linear changes of coordinates.
//!
//! The k-SUM hyperplanes are highly structured (each involves only `k`
//! coordinates), so several of them are parallel to a coordinate axis. A
//! random invertible transform `y = M·x` removes that degeneracy. Forms are
//! carried along as `f ↦ f·M⁻¹`, so `f(x) = transform_form(f)(M·x)`.
//!
//! The random draw places small integers on `M⁻¹`, the side that multiplies
//! form coefficients, so transformed hyperplanes keep short integer entries.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::form::AffineForm;
use crate::rat::{lcm, Rat};

/// Default half-width of the integer range drawn for `M⁻¹`.
pub const DEFAULT_ENTRY_RANGE: i64 = 1024;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransformMatrix {
    seed: u64,
    /// `M`, applied to points.
    matrix: Vec<Vec<Rat>>,
    /// `M⁻¹`, applied to form coefficient rows.
    inverse: Vec<Vec<Rat>>,
}

impl TransformMatrix {
    pub fn identity(n: usize) -> Self {
        let id: Vec<Vec<Rat>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect())
            .collect();
        TransformMatrix {
            seed: 0,
            matrix: id.clone(),
            inverse: id,
        }
    }

    /// Builds a transform from `M`; fails if `M` is singular.
    pub fn from_matrix(matrix: Vec<Vec<Rat>>) -> Result<Self> {
        let inverse = invert(&matrix).ok_or_else(|| Error::Degenerate("singular transform".into()))?;
        Ok(TransformMatrix {
            seed: 0,
            matrix,
            inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn matrix(&self) -> &[Vec<Rat>] {
        &self.matrix
    }

    pub fn inverse_matrix(&self) -> &[Vec<Rat>] {
        &self.inverse
    }

    pub fn inverse(&self) -> TransformMatrix {
        TransformMatrix {
            seed: self.seed,
            matrix: self.inverse.clone(),
            inverse: self.matrix.clone(),
        }
    }

    /// `M·p`.
    pub fn apply_point(&self, p: &[Rat]) -> Result<Vec<Rat>> {
        mat_vec(&self.matrix, p)
    }

    /// `M⁻¹·y`.
    pub fn unapply_point(&self, y: &[Rat]) -> Result<Vec<Rat>> {
        mat_vec(&self.inverse, y)
    }

    /// The form in transformed coordinates: coefficient row `f·M⁻¹`.
    pub fn transform_form(&self, f: &AffineForm) -> Result<AffineForm> {
        row_times(f, &self.inverse)
    }

    /// Inverse of [`transform_form`](Self::transform_form): coefficient row
    /// `g·M`, a form in the original coordinates.
    pub fn pull_back(&self, g: &AffineForm) -> Result<AffineForm> {
        row_times(g, &self.matrix)
    }

    /// `M` over a common positive denominator: `M = A / den`.
    pub fn integer_matrix(&self) -> (Vec<Vec<BigInt>>, BigInt) {
        let den = self
            .matrix
            .iter()
            .flatten()
            .fold(BigInt::one(), |l, r| lcm(&l, r.denom()));
        let a = self
            .matrix
            .iter()
            .map(|row| row.iter().map(|r| r.numer() * (&den / r.denom())).collect())
            .collect();
        (a, den)
    }
}

/// Draws an invertible transform with the default entry range.
pub fn random_generic_transform(n: usize, seed: u64) -> TransformMatrix {
    random_transform_with_range(n, seed, DEFAULT_ENTRY_RANGE)
}

/// Draws `M⁻¹` with integer entries in `[-range, range]` until it is
/// invertible. Deterministic in `seed`.
pub fn random_transform_with_range(n: usize, seed: u64, range: i64) -> TransformMatrix {
    assert!(n >= 1, "transform dimension must be positive");
    assert!(range >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let inverse: Vec<Vec<Rat>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| Rat::from_integer(rng.gen_range(-range..=range).into()))
                    .collect()
            })
            .collect();
        if let Some(matrix) = invert(&inverse) {
            return TransformMatrix {
                seed,
                matrix,
                inverse,
            };
        }
    }
}

fn mat_vec(m: &[Vec<Rat>], p: &[Rat]) -> Result<Vec<Rat>> {
    if p.len() != m.len() {
        return Err(Error::DimensionMismatch {
            expected: m.len(),
            found: p.len(),
        });
    }
    Ok(m
        .iter()
        .map(|row| {
            row.iter()
                .zip(p)
                .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                .fold(Rat::zero(), |acc, (a, b)| acc + a * b)
        })
        .collect())
}

fn row_times(f: &AffineForm, m: &[Vec<Rat>]) -> Result<AffineForm> {
    let n = m.len();
    if f.dim() > n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.dim(),
        });
    }
    let mut coeffs = vec![Rat::zero(); n];
    for (i, c) in f.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        for (j, out) in coeffs.iter_mut().enumerate() {
            let e = &m[i][j];
            if !e.is_zero() {
                *out += c * e;
            }
        }
    }
    Ok(AffineForm::new(f.constant().clone(), coeffs))
}

/// Exact Gauss–Jordan inversion; `None` when singular.
pub(crate) fn invert(a: &[Vec<Rat>]) -> Option<Vec<Vec<Rat>>> {
    let n = a.len();
    let mut aug: Vec<Vec<Rat>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !aug[r][col].is_zero())?;
        aug.swap(col, piv);
        let inv = Rat::one() / &aug[col][col];
        for v in aug[col].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = aug[col].clone();
        for (r, row) in aug.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
        }
    }
    Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};

    fn mat_mul(a: &[Vec<Rat>], b: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
        let n = a.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).fold(Rat::zero(), |acc, k| acc + &a[i][k] * &b[k][j]))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn one_dimensional_transform_is_invertible() {
        let t = random_generic_transform(1, 3);
        assert!(!t.matrix()[0][0].is_zero());
        assert_eq!(&t.matrix()[0][0] * &t.inverse_matrix()[0][0], rat(1));
    }

    #[test]
    fn product_with_inverse_is_identity() {
        for seed in 0..5 {
            let t = random_generic_transform(2 + seed as usize, seed);
            let prod = mat_mul(t.matrix(), t.inverse_matrix());
            assert_eq!(prod, TransformMatrix::identity(t.dim()).matrix().to_vec());
        }
    }

    #[test]
    fn three_sum_family_is_non_vertical_after_transform() {
        let n = 4;
        let t = random_generic_transform(n, 11);
        let family = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
        for ids in family {
            let mut f = AffineForm::zero(n);
            for i in ids {
                f = f.add(&AffineForm::coordinate(n, i)).unwrap();
            }
            assert!(!t.transform_form(&f).unwrap().is_vertical());
        }
    }

    #[test]
    fn identity_and_swap() {
        let f = AffineForm::new(ratio(1, 2), vec![rat(3), rat(-1)]);
        let id = TransformMatrix::identity(2);
        assert_eq!(id.transform_form(&f).unwrap(), f);

        let swap = TransformMatrix::from_matrix(vec![vec![rat(0), rat(1)], vec![rat(1), rat(0)]]).unwrap();
        let x1 = AffineForm::coordinate(2, 0);
        assert_eq!(swap.transform_form(&x1).unwrap(), AffineForm::coordinate(2, 1));
    }

    #[test]
    fn transformed_form_agrees_on_transformed_points() {
        use rand::Rng;
        let n = 4;
        let t = random_transform_with_range(n, 5, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let f = AffineForm::new(ratio(2, 3), (0..n).map(|_| ratio(rng.gen_range(-9..9), rng.gen_range(1..5))).collect());
        let tf = t.transform_form(&f).unwrap();
        for _ in 0..100 {
            let p: Vec<Rat> = (0..n).map(|_| ratio(rng.gen_range(-50..50), rng.gen_range(1..9))).collect();
            let y = t.apply_point(&p).unwrap();
            assert_eq!(tf.evaluate(&y).unwrap(), f.evaluate(&p).unwrap());
            assert_eq!(t.unapply_point(&y).unwrap(), p);
        }
        let back = t.inverse().transform_form(&tf).unwrap();
        assert_eq!(back.normalized(), f.normalized());
        assert_eq!(t.pull_back(&tf).unwrap(), f);
    }
}
