//! Affine forms over exact rationals.
//!
//! An [`AffineForm`] of dimension `m` is the function
//! `p ↦ constant + Σ coeffs[i]·p[i]`. Hyperplanes, vertical walls and every
//! linear query are represented this way. Coordinate `m` (the last one) is
//! the vertical axis at level `m` of the prism construction.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rat::{common_denominator, content, parse_rat, Rat, Sign};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineForm {
    constant: Rat,
    coeffs: Vec<Rat>,
}

impl AffineForm {
    pub fn new(constant: Rat, coeffs: Vec<Rat>) -> Self {
        AffineForm { constant, coeffs }
    }

    pub fn zero(dim: usize) -> Self {
        AffineForm {
            constant: Rat::zero(),
            coeffs: vec![Rat::zero(); dim],
        }
    }

    pub fn constant_form(dim: usize, c: Rat) -> Self {
        AffineForm {
            constant: c,
            coeffs: vec![Rat::zero(); dim],
        }
    }

    pub fn from_ints(constant: i64, coeffs: &[i64]) -> Self {
        AffineForm {
            constant: Rat::from_integer(constant.into()),
            coeffs: coeffs.iter().map(|&c| Rat::from_integer(c.into())).collect(),
        }
    }

    /// The coordinate function `x_{index+1}` (0-based `index`).
    pub fn coordinate(dim: usize, index: usize) -> Self {
        let mut f = AffineForm::zero(dim);
        f.coeffs[index] = Rat::one();
        f
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn constant(&self) -> &Rat {
        &self.constant
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &Rat {
        &self.coeffs[i]
    }

    /// Coefficient of the vertical (last) coordinate.
    pub fn last_coeff(&self) -> Option<&Rat> {
        self.coeffs.last()
    }

    pub fn is_vertical(&self) -> bool {
        self.coeffs.last().is_none_or(Zero::is_zero)
    }

    /// No non-zero coefficient (the constant may be anything).
    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.is_constant()
    }

    pub fn evaluate(&self, p: &[Rat]) -> Result<Rat> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: p.len(),
            });
        }
        Ok(self.eval_prefix(p))
    }

    /// Evaluates on the first `dim` coordinates of `p`, which may be longer.
    /// This is evaluation of the form lifted to `p.len()` coordinates.
    pub fn eval_prefix(&self, p: &[Rat]) -> Rat {
        debug_assert!(p.len() >= self.dim());
        let mut acc = self.constant.clone();
        for (c, x) in self.coeffs.iter().zip(p) {
            if !c.is_zero() && !x.is_zero() {
                acc += c * x;
            }
        }
        acc
    }

    pub fn neg(&self) -> Self {
        AffineForm {
            constant: -&self.constant,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, s: &Rat) -> Self {
        AffineForm {
            constant: &self.constant * s,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn oriented(&self, s: Sign) -> Self {
        match s {
            Sign::Negative => self.neg(),
            _ => self.clone(),
        }
    }

    pub fn add(&self, other: &AffineForm) -> Result<Self> {
        self.check_dim(other)?;
        Ok(AffineForm {
            constant: &self.constant + &other.constant,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &AffineForm) -> Result<Self> {
        self.check_dim(other)?;
        Ok(AffineForm {
            constant: &self.constant - &other.constant,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    fn check_dim(&self, other: &AffineForm) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// Replaces the last coordinate of `self` by the solution of `h = 0`
    /// for that coordinate. The zero set of the result is the vertical
    /// projection of `{self = 0} ∩ {h = 0}`; values are preserved, i.e.
    /// `result(y) = self(y, height_h(y))`.
    pub fn substitute_last(&self, h: &AffineForm) -> Result<AffineForm> {
        self.check_dim(h)?;
        let m = self.dim();
        if m == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        let hm = &h.coeffs[m - 1];
        if hm.is_zero() {
            return Err(Error::Vertical { level: m });
        }
        let gm = &self.coeffs[m - 1];
        if gm.is_zero() {
            return Ok(self.drop_last());
        }
        let factor = gm / hm;
        Ok(AffineForm {
            constant: &self.constant - &factor * &h.constant,
            coeffs: self.coeffs[..m - 1]
                .iter()
                .zip(&h.coeffs[..m - 1])
                .map(|(g, hc)| {
                    if hc.is_zero() {
                        g.clone()
                    } else {
                        g - &factor * hc
                    }
                })
                .collect(),
        })
    }

    /// `h` solved for its last coordinate, as a form in the remaining ones.
    pub fn height_form(&self) -> Result<AffineForm> {
        let m = self.dim();
        if m == 0 || self.coeffs[m - 1].is_zero() {
            return Err(Error::Vertical { level: m });
        }
        let inv = -(Rat::one() / &self.coeffs[m - 1]);
        Ok(AffineForm {
            constant: &self.constant * &inv,
            coeffs: self.coeffs[..m - 1].iter().map(|c| c * &inv).collect(),
        })
    }

    /// Appends zero coefficients up to `to_dim`.
    pub fn lift(&self, to_dim: usize) -> AffineForm {
        assert!(to_dim >= self.dim(), "lift target below current dimension");
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(to_dim, Rat::zero());
        AffineForm {
            constant: self.constant.clone(),
            coeffs,
        }
    }

    /// Drops the last coordinate. Only meaningful when its coefficient is
    /// zero (the form does not depend on it).
    pub fn drop_last(&self) -> AffineForm {
        AffineForm {
            constant: self.constant.clone(),
            coeffs: self.coeffs[..self.dim().saturating_sub(1)].to_vec(),
        }
    }

    /// The form with entries `[constant, coeffs...]`.
    pub fn from_int_entries(ints: Vec<BigInt>) -> AffineForm {
        let mut it = ints.into_iter().map(Rat::from_integer);
        let constant = it.next().expect("at least the constant");
        AffineForm {
            constant,
            coeffs: it.collect(),
        }
    }

    /// The form with entries `[constant, coeffs...]` divided by their gcd.
    pub fn primitive_from_ints(mut ints: Vec<BigInt>) -> AffineForm {
        let g = content(&ints);
        if !g.is_zero() && !g.is_one() {
            for v in ints.iter_mut() {
                *v /= &g;
            }
        }
        AffineForm::from_int_entries(ints)
    }

    /// Positive rescaling to coprime integer entries. Orientation is kept.
    pub fn primitive(&self) -> AffineForm {
        AffineForm::primitive_from_ints(self.integer_entries().0)
    }

    /// Canonical representative: coprime integers, first non-zero
    /// coefficient positive (the constant decides for constant forms).
    /// Returns the sign by which the primitive form was multiplied, so that
    /// `self = positive · sign · canonical`.
    pub fn canonical(&self) -> (AffineForm, Sign) {
        let p = self.primitive();
        let lead = p
            .coeffs
            .iter()
            .find(|c| !c.is_zero())
            .unwrap_or(&p.constant);
        let s = Sign::of(lead);
        match s {
            Sign::Negative => (p.neg(), Sign::Negative),
            Sign::Zero => (p, Sign::Zero),
            Sign::Positive => (p, Sign::Positive),
        }
    }

    pub fn normalized(&self) -> AffineForm {
        self.canonical().0
    }

    /// Entries `[constant, coeffs...]` multiplied by the positive lcm of
    /// their denominators. Returns the integers and the multiplier.
    pub fn integer_entries(&self) -> (Vec<BigInt>, BigInt) {
        let lcm = common_denominator(std::iter::once(&self.constant).chain(&self.coeffs));
        let ints = std::iter::once(&self.constant)
            .chain(&self.coeffs)
            .map(|r| {
                if r.denom().is_one() {
                    r.numer() * &lcm
                } else {
                    r.numer() * (&lcm / r.denom())
                }
            })
            .collect();
        (ints, lcm)
    }

    /// Whitespace-separated rationals: constant first, then coefficients.
    pub fn to_tokens(&self) -> String {
        let mut out = self.constant.to_string();
        for c in &self.coeffs {
            out.push(' ');
            out.push_str(&c.to_string());
        }
        out
    }

    pub fn from_tokens(tokens: &[&str]) -> Option<AffineForm> {
        let (first, rest) = tokens.split_first()?;
        let constant = parse_rat(first)?;
        let coeffs = rest.iter().map(|t| parse_rat(t)).collect::<Option<Vec<_>>>()?;
        Some(AffineForm { constant, coeffs })
    }

    /// Largest bit length among the entries of the primitive integer form.
    pub fn bit_size(&self) -> u64 {
        self.integer_entries()
            .0
            .iter()
            .map(|v| v.bits())
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if wrote {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            } else if c.is_negative() {
                f.write_str("-")?;
            }
            if mag.is_one() {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "{}*x{}", mag, i + 1)?;
            }
            wrote = true;
        }
        if !wrote {
            return write!(f, "{}", self.constant);
        }
        if !self.constant.is_zero() {
            let sep = if self.constant.is_negative() { " - " } else { " + " };
            write!(f, "{}{}", sep, self.constant.abs())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};
    use proptest::prelude::*;

    fn pt(v: &[i64]) -> Vec<Rat> {
        v.iter().map(|&x| rat(x)).collect()
    }

    #[test]
    fn evaluate_examples() {
        let f = AffineForm::from_ints(0, &[1, 1, 1]);
        assert_eq!(f.evaluate(&pt(&[1, 2, -3])).unwrap(), rat(0));
        let g = AffineForm::from_ints(0, &[1, -1]);
        assert_eq!(g.evaluate(&pt(&[1, 2])).unwrap(), rat(-1));
        let h = AffineForm::new(ratio(1, 2), vec![rat(1)]);
        assert_eq!(h.evaluate(&[ratio(1, 3)]).unwrap(), ratio(5, 6));
        assert!(matches!(
            f.evaluate(&pt(&[1, 2])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn substitute_last_examples() {
        let g = AffineForm::from_ints(0, &[1, 1, 1]);
        let h = AffineForm::from_ints(0, &[1, 1, -1]);
        assert_eq!(g.substitute_last(&h).unwrap(), AffineForm::from_ints(0, &[2, 2]));

        let g = AffineForm::from_ints(-5, &[0, 1]);
        let h = AffineForm::from_ints(0, &[-1, 1]);
        assert_eq!(g.substitute_last(&h).unwrap(), AffineForm::from_ints(-5, &[1]));

        assert!(h.substitute_last(&h).unwrap().is_zero());

        let vertical = AffineForm::from_ints(1, &[1, 0]);
        assert!(matches!(
            g.substitute_last(&vertical),
            Err(Error::Vertical { .. })
        ));
    }

    #[test]
    fn height_form_examples() {
        let h = AffineForm::from_ints(0, &[-1, 1]);
        assert_eq!(h.height_form().unwrap(), AffineForm::from_ints(0, &[1]));
        let h = AffineForm::from_ints(-1, &[1, 1]);
        assert_eq!(h.height_form().unwrap(), AffineForm::from_ints(1, &[-1]));
        let h = AffineForm::from_ints(-3, &[2]);
        assert_eq!(h.height_form().unwrap(), AffineForm::constant_form(0, ratio(3, 2)));
    }

    #[test]
    fn lift_examples() {
        let f = AffineForm::from_ints(-5, &[1]);
        let l = f.lift(3);
        assert_eq!(l, AffineForm::from_ints(-5, &[1, 0, 0]));
        assert_eq!(f.lift(1), f);
        assert_eq!(l.evaluate(&pt(&[7, 100, -4])).unwrap(), f.evaluate(&pt(&[7])).unwrap());
    }

    #[test]
    fn canonical_form() {
        let f = AffineForm::new(ratio(-1, 2), vec![ratio(-3, 4), ratio(3, 2)]);
        let (c, s) = f.canonical();
        assert_eq!(c, AffineForm::from_ints(2, &[3, -6]));
        assert_eq!(s, Sign::Negative);
        assert_eq!(AffineForm::constant_form(2, rat(-4)).canonical().0, AffineForm::constant_form(2, rat(1)));
        assert!(AffineForm::zero(3).normalized().is_zero());
    }

    #[test]
    fn display_and_tokens() {
        let f = AffineForm::new(ratio(1, 2), vec![rat(1), rat(0), rat(-2)]);
        assert_eq!(f.to_string(), "x1 - 2*x3 + 1/2");
        let toks = f.to_tokens();
        let parsed: Vec<&str> = toks.split_whitespace().collect();
        assert_eq!(AffineForm::from_tokens(&parsed).unwrap(), f);
    }

    fn small_rat() -> impl Strategy<Value = Rat> {
        (-20i64..20, 1i64..6).prop_map(|(n, d)| ratio(n, d))
    }

    fn form_and_point(dim: usize) -> impl Strategy<Value = (AffineForm, AffineForm, Vec<Rat>)> {
        (
            small_rat(),
            proptest::collection::vec(small_rat(), dim),
            small_rat(),
            proptest::collection::vec(small_rat(), dim),
            proptest::collection::vec(small_rat(), dim - 1),
        )
            .prop_map(|(c0, g, c1, h, y)| (AffineForm::new(c0, g), AffineForm::new(c1, h), y))
    }

    proptest! {
        // A zero of the substituted form lifts to a common zero of g and h.
        #[test]
        fn substitution_is_sound((g, h, y) in form_and_point(3)) {
            prop_assume!(!h.is_vertical());
            let s = g.substitute_last(&h).unwrap();
            let height = h.height_form().unwrap();
            let t = height.evaluate(&y).unwrap();
            let mut lifted = y.clone();
            lifted.push(t);
            prop_assert!(h.evaluate(&lifted).unwrap().is_zero());
            prop_assert_eq!(s.evaluate(&y).unwrap(), g.evaluate(&lifted).unwrap());
            // Move y onto the zero set of s along a coordinate with a non-zero coefficient.
            if let Some(i) = s.coeffs().iter().position(|c| !c.is_zero()) {
                let mut y0 = y.clone();
                let v = s.evaluate(&y).unwrap();
                y0[i] = &y0[i] - v / s.coeff(i);
                let t0 = height.evaluate(&y0).unwrap();
                let mut p = y0.clone();
                p.push(t0);
                prop_assert!(s.evaluate(&y0).unwrap().is_zero());
                prop_assert!(g.evaluate(&p).unwrap().is_zero());
                prop_assert!(h.evaluate(&p).unwrap().is_zero());
            }
        }

        #[test]
        fn canonical_is_scale_invariant((g, _h, _y) in form_and_point(3), k in 1i64..9, neg in any::<bool>()) {
            prop_assume!(!g.is_zero());
            let s = if neg { rat(-k) } else { rat(k) };
            prop_assert_eq!(g.scale(&s).normalized(), g.normalized());
        }
    }
}
