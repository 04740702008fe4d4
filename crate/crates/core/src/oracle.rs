//! The only gateway to the hidden input point.
//!
//! Every sign test goes through a [`SignOracle`], which charges one query
//! and appends the test, expressed in the original coordinates, to a
//! [`Transcript`]. Solvers are generic over the trait and never see the
//! point itself.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::form::AffineForm;
use crate::rat::{Rat, Sign};
use crate::transform::TransformMatrix;

/// Linear sign queries against a hidden point, in the coordinates of the
/// currently installed transform.
pub trait SignOracle {
    /// Dimension of the hidden point.
    fn dim(&self) -> usize;

    /// Installs the coordinate transform that subsequent forms are expressed in.
    fn install_transform(&mut self, transform: Arc<TransformMatrix>);

    /// Sign of `f` at the (transformed) hidden point. `f` may have fewer than
    /// `dim` coordinates; it is evaluated on the leading coordinates, which
    /// is evaluation of its lift. Costs one query.
    fn sign_of(&mut self, f: &AffineForm) -> Result<Sign>;

    /// Sign of `f - g`; one query.
    fn compare_heights(&mut self, f: &AffineForm, g: &AffineForm) -> Result<Sign> {
        let diff = f.sub(g)?;
        if diff.is_zero() {
            return Err(Error::IdenticalForms);
        }
        self.sign_of(&diff)
    }

    /// Number of charged queries so far.
    fn query_count(&self) -> usize;

    fn transcript(&self) -> &Transcript;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranscriptEntry {
    /// Canonical form in the original coordinates.
    pub form: AffineForm,
    pub sign: Sign,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    dim: usize,
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new(dim: usize) -> Self {
        Transcript {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn push(&mut self, form: AffineForm, sign: Sign) {
        self.entries.push(TranscriptEntry { form, sign });
    }

    /// True iff `candidate` produces the recorded sign for every entry.
    pub fn replay(&self, candidate: &[Rat]) -> bool {
        candidate.len() == self.dim
            && self
                .entries
                .iter()
                .all(|e| Sign::of(&e.form.eval_prefix(candidate)) == e.sign)
    }

    /// Number of distinct query forms.
    pub fn distinct_forms(&self) -> usize {
        let mut seen: std::collections::HashSet<&AffineForm> = Default::default();
        self.entries.iter().filter(|e| seen.insert(&e.form)).count()
    }

    /// One record per line: constant, coefficients, then `-`, `0` or `+`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(out, "{} {}", e.form.to_tokens(), e.sign.symbol());
        }
        out
    }

    pub fn from_text(dim: usize, text: &str) -> Result<Transcript> {
        let mut t = Transcript::new(dim);
        for (lineno, line) in text.lines().enumerate() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            if toks.len() != dim + 2 {
                return Err(Error::parse(
                    lineno + 1,
                    1,
                    format!("expected {} tokens, found {}", dim + 2, toks.len()),
                ));
            }
            let sign = Sign::from_symbol(toks[dim + 1])
                .ok_or_else(|| Error::parse(lineno + 1, dim + 2, "bad sign token"))?;
            let form = AffineForm::from_tokens(&toks[..dim + 1])
                .ok_or_else(|| Error::parse(lineno + 1, 1, "bad rational"))?;
            t.push(form, sign);
        }
        Ok(t)
    }
}

/// Holds the hidden point. Nothing outside this type reads it.
pub struct Oracle {
    secret: Vec<Rat>,
    /// Both points as integer vectors over a positive common denominator.
    secret_ints: (Vec<BigInt>, BigInt),
    transformed_ints: (Vec<BigInt>, BigInt),
    transform: Arc<TransformMatrix>,
    /// `M` as an integer matrix over a positive common denominator, used to
    /// pull queries back to the original coordinates without rational
    /// arithmetic.
    pull_back: Vec<Vec<BigInt>>,
    pull_back_den: BigInt,
    transcript: Transcript,
}

impl Oracle {
    pub fn new(secret: Vec<Rat>) -> Self {
        let n = secret.len();
        let mut oracle = Oracle {
            secret_ints: over_common_denominator(&secret),
            transformed_ints: over_common_denominator(&secret),
            secret,
            transform: Arc::new(TransformMatrix::identity(n)),
            pull_back: Vec::new(),
            pull_back_den: BigInt::from(1),
            transcript: Transcript::new(n),
        };
        oracle.install_transform(Arc::new(TransformMatrix::identity(n)));
        oracle
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    /// `f` pulled back to the original coordinates, together with its
    /// integer entries `(constant, coeffs)` before normalization and the
    /// sign of the normalizing factor.
    fn original_form(&self, ints: &[BigInt]) -> (AffineForm, BigInt, Vec<BigInt>, Sign) {
        let n = self.secret.len();
        let mut row = vec![BigInt::zero(); n];
        for (i, c) in ints[1..].iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (out, a) in row.iter_mut().zip(&self.pull_back[i]) {
                if !a.is_zero() {
                    *out += c * a;
                }
            }
        }
        // The constant is scaled by the common denominator of M.
        let constant = &ints[0] * &self.pull_back_den;
        let (form, flip) = canonical_ints(&constant, &row);
        (form, constant, row, flip)
    }
}

fn over_common_denominator(p: &[Rat]) -> (Vec<BigInt>, BigInt) {
    let den = crate::rat::common_denominator(p);
    let ints = p.iter().map(|x| x.numer() * (&den / x.denom())).collect();
    (ints, den)
}

/// Sign of the form with integer entries `(constant, coeffs)` at the point
/// `ints / den`, `den > 0`; `coeffs` may be a prefix.
fn int_sign(constant: &BigInt, coeffs: &[BigInt], (ints, den): &(Vec<BigInt>, BigInt)) -> Sign {
    let mut acc = constant * den;
    for (c, x) in coeffs.iter().zip(ints) {
        if !c.is_zero() && !x.is_zero() {
            acc += c * x;
        }
    }
    Sign::of_int(&acc)
}

fn canonical_ints(constant: &BigInt, coeffs: &[BigInt]) -> (AffineForm, Sign) {
    let g = crate::rat::content(std::iter::once(constant).chain(coeffs));
    let lead_neg = coeffs
        .iter()
        .find(|c| !c.is_zero())
        .unwrap_or(constant)
        .is_negative();
    let mut g = if g.is_zero() { BigInt::from(1) } else { g };
    if lead_neg {
        g = -g;
    }
    let form = AffineForm::new(
        Rat::from_integer(constant / &g),
        coeffs.iter().map(|c| Rat::from_integer(c / &g)).collect(),
    );
    (form, if lead_neg { Sign::Negative } else { Sign::Positive })
}

impl SignOracle for Oracle {
    fn dim(&self) -> usize {
        self.secret.len()
    }

    fn install_transform(&mut self, transform: Arc<TransformMatrix>) {
        assert_eq!(transform.dim(), self.secret.len());
        let transformed = transform
            .apply_point(&self.secret)
            .expect("dimension checked");
        self.transformed_ints = over_common_denominator(&transformed);
        let (a, den) = transform.integer_matrix();
        self.pull_back = a;
        self.pull_back_den = den;
        self.transform = transform;
    }

    fn sign_of(&mut self, f: &AffineForm) -> Result<Sign> {
        if f.dim() > self.secret.len() {
            return Err(Error::DimensionMismatch {
                expected: self.secret.len(),
                found: f.dim(),
            });
        }
        if f.is_zero() {
            return Err(Error::ZeroForm);
        }
        let (ints, _) = f.integer_entries();
        let s = int_sign(&ints[0], &ints[1..], &self.transformed_ints);
        // The pull-back multiplies by a positive denominator, and the
        // canonical form may flip orientation; record the sign of the
        // stored form.
        let (original, constant, row, flip) = self.original_form(&ints);
        let recorded = int_sign(&constant, &row, &self.secret_ints).times(flip);
        debug_assert_eq!(recorded, s.times(flip));
        self.transcript.push(original, recorded);
        Ok(s)
    }

    fn query_count(&self) -> usize {
        self.transcript.len()
    }

    fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}

/// Answers repeated identical queries (within one transform) from a cache
/// without charging them.
pub struct MemoOracle<O> {
    inner: O,
    cache: HashMap<AffineForm, Sign>,
    hits: usize,
}

impl<O: SignOracle> MemoOracle<O> {
    pub fn new(inner: O) -> Self {
        MemoOracle {
            inner,
            cache: HashMap::new(),
            hits: 0,
        }
    }

    pub fn hits(&self) -> usize {
        self.hits
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: SignOracle> SignOracle for MemoOracle<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn install_transform(&mut self, transform: Arc<TransformMatrix>) {
        self.cache.clear();
        self.inner.install_transform(transform);
    }

    fn sign_of(&mut self, f: &AffineForm) -> Result<Sign> {
        let (key, orientation) = f.canonical();
        if let Some(&s) = self.cache.get(&key) {
            self.hits += 1;
            return Ok(s.times(orientation));
        }
        let s = self.inner.sign_of(f)?;
        self.cache.insert(key, s.times(orientation));
        Ok(s)
    }

    fn query_count(&self) -> usize {
        self.inner.query_count()
    }

    fn transcript(&self) -> &Transcript {
        self.inner.transcript()
    }
}

impl<O: SignOracle + ?Sized> SignOracle for &mut O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn install_transform(&mut self, transform: Arc<TransformMatrix>) {
        (**self).install_transform(transform)
    }
    fn sign_of(&mut self, f: &AffineForm) -> Result<Sign> {
        (**self).sign_of(f)
    }
    fn compare_heights(&mut self, f: &AffineForm, g: &AffineForm) -> Result<Sign> {
        (**self).compare_heights(f, g)
    }
    fn query_count(&self) -> usize {
        (**self).query_count()
    }
    fn transcript(&self) -> &Transcript {
        (**self).transcript()
    }
}

/// Shorthand used by tests and examples.
pub fn replay(transcript: &Transcript, candidate: &[Rat]) -> bool {
    transcript.replay(candidate)
}
