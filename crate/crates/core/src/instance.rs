//! k-SUM and k-LDT instances.
//!
//! A k-LDT instance fixes an affine function `a0 + Σ a_j·y_j` of `k`
//! variables and asks whether it vanishes on some increasing index tuple of
//! the input `x`. k-SUM is the special case `a0 = 0`, `a_j = 1`.

use std::fmt;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::AffineForm;
use crate::rat::{parse_rat, ratio, Rat};

/// Strictly increasing 1-based index tuple `i1 < … < ik`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HyperplaneId(Vec<usize>);

impl HyperplaneId {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() || indices[0] == 0 || indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInstance(format!(
                "index tuple {indices:?} is not strictly increasing from 1"
            )));
        }
        Ok(HyperplaneId(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for HyperplaneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (j, i) in self.0.iter().enumerate() {
            if j > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Yes(HyperplaneId),
    No,
}

impl Decision {
    pub fn is_yes(&self) -> bool {
        matches!(self, Decision::Yes(_))
    }

    pub fn witness(&self) -> Option<&HyperplaneId> {
        match self {
            Decision::Yes(id) => Some(id),
            Decision::No => None,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Yes(id) => write!(f, "YES {id}"),
            Decision::No => f.write_str("NO"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LdtInstance {
    n: usize,
    k: usize,
    a: Vec<Rat>,
    x: Vec<Rat>,
}

impl LdtInstance {
    pub fn new(n: usize, k: usize, a: Vec<Rat>, x: Vec<Rat>) -> Result<Self> {
        if k < 2 || k > n {
            return Err(Error::InvalidInstance(format!("need 2 <= k <= n, got n={n}, k={k}")));
        }
        if a.len() != k + 1 {
            return Err(Error::InvalidInstance(format!(
                "expected {} coefficients a0..ak, got {}",
                k + 1,
                a.len()
            )));
        }
        if a[1..].iter().all(Zero::is_zero) {
            return Err(Error::InvalidInstance("all of a1..ak are zero".into()));
        }
        if x.len() != n {
            return Err(Error::InvalidInstance(format!("expected {n} input values, got {}", x.len())));
        }
        Ok(LdtInstance { n, k, a, x })
    }

    pub fn ksum(k: usize, x: Vec<Rat>) -> Result<Self> {
        let mut a = vec![Rat::one(); k + 1];
        a[0] = Rat::zero();
        LdtInstance::new(x.len(), k, a, x)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn coefficients(&self) -> &[Rat] {
        &self.a
    }

    pub fn point(&self) -> &[Rat] {
        &self.x
    }

    pub fn is_ksum(&self) -> bool {
        self.a[0].is_zero() && self.a[1..].iter().all(One::is_one)
    }

    /// Same coefficients, different input point.
    pub fn with_point(&self, x: Vec<Rat>) -> Result<Self> {
        LdtInstance::new(self.n, self.k, self.a.clone(), x)
    }

    pub fn family_size(&self) -> u128 {
        binomial(self.n, self.k)
    }

    /// `a0 + Σ_j a_j·x_{i_j}` in the original coordinates.
    pub fn hyperplane_form(&self, id: &HyperplaneId) -> Result<AffineForm> {
        let idx = id.indices();
        if idx.len() != self.k || idx.iter().any(|&i| i > self.n) {
            return Err(Error::InvalidInstance(format!("tuple {id} does not fit n={}, k={}", self.n, self.k)));
        }
        let mut coeffs = vec![Rat::zero(); self.n];
        for (j, &i) in idx.iter().enumerate() {
            coeffs[i - 1] = self.a[j + 1].clone();
        }
        Ok(AffineForm::new(self.a[0].clone(), coeffs))
    }

    pub fn enumerate_ids(&self) -> Vec<HyperplaneId> {
        enumerate_ids(self.n, self.k)
    }

    /// Value of the form of `id` at the input.
    pub fn value_at(&self, id: &HyperplaneId) -> Rat {
        let mut v = self.a[0].clone();
        for (j, &i) in id.indices().iter().enumerate() {
            v += &self.a[j + 1] * &self.x[i - 1];
        }
        v
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All `C(n, k)` tuples in lexicographic order.
pub fn enumerate_ids(n: usize, k: usize) -> Vec<HyperplaneId> {
    let mut out = Vec::with_capacity(binomial(n, k) as usize);
    if k == 0 || k > n {
        return out;
    }
    let mut idx: Vec<usize> = (1..=k).collect();
    loop {
        out.push(HyperplaneId(idx.clone()));
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - k + i + 1 {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Exhaustive check; returns the lexicographically first vanishing tuple.
pub fn brute_decide(inst: &LdtInstance) -> Decision {
    for id in inst.enumerate_ids() {
        if inst.value_at(&id).is_zero() {
            return Decision::Yes(id);
        }
    }
    Decision::No
}

/// Parses `ksum n k` / `ldt n k` followed by the coefficient line (ldt
/// only) and the input line. Blank lines and `#` comments are skipped.
pub fn parse_instance(text: &str) -> Result<LdtInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
    let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, 1, "empty instance file"))?;
    let htoks = tokens(header);
    let (kind_col, kind) = htoks[0];
    let ldt = match kind {
        "ksum" => false,
        "ldt" => true,
        other => return Err(Error::parse(hline, kind_col, format!("expected `ksum` or `ldt`, found `{other}`"))),
    };
    if htoks.len() != 3 {
        let col = htoks.get(3).map_or(header.len() + 1, |t| t.0);
        return Err(Error::parse(hline, col, "header must be `ksum n k` or `ldt n k`"));
    }
    let n = parse_count(hline, htoks[1])?;
    let k = parse_count(hline, htoks[2])?;
    if k < 2 || k > n {
        return Err(Error::parse(hline, htoks[2].0, format!("k must satisfy 2 <= k <= n (n={n}, k={k})")));
    }
    let mut next_row = |what: &str, len: usize| -> Result<Vec<Rat>> {
        let (line, body) = lines
            .next()
            .ok_or_else(|| Error::parse(hline + 1, 1, format!("missing {what} line")))?;
        let toks = tokens(body);
        if toks.len() != len {
            let col = toks.get(len).map_or(body.len() + 1, |t| t.0);
            return Err(Error::parse(line, col, format!("expected {len} rationals for {what}, found {}", toks.len())));
        }
        toks.iter()
            .map(|&(col, t)| parse_rat(t).ok_or_else(|| Error::parse(line, col, format!("invalid rational `{t}`"))))
            .collect()
    };
    let a = if ldt {
        next_row("coefficients", k + 1)?
    } else {
        let mut a = vec![Rat::one(); k + 1];
        a[0] = Rat::zero();
        a
    };
    let x = next_row("input", n)?;
    if let Some((line, _)) = lines.next() {
        return Err(Error::parse(line, 1, "unexpected trailing content"));
    }
    LdtInstance::new(n, k, a, x)
}

fn parse_count(line: usize, (col, tok): (usize, &str)) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::parse(line, col, format!("expected a non-negative integer, found `{tok}`")))
}

/// Whitespace-separated tokens with their 1-based column.
pub(crate) fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out.into_iter()
        .map(|(byte, t)| (line[..byte].chars().count() + 1, t))
        .collect()
}

pub fn serialize_instance(inst: &LdtInstance) -> String {
    let join = |v: &[Rat]| v.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ");
    if inst.is_ksum() {
        format!("ksum {} {}\n{}\n", inst.n, inst.k, join(&inst.x))
    } else {
        format!("ldt {} {}\n{}\n{}\n", inst.n, inst.k, join(&inst.a), join(&inst.x))
    }
}

/// Parameters for seeded random instances.
#[derive(Clone, Debug)]
pub struct InstanceSpec {
    pub n: usize,
    pub k: usize,
    /// Draw random LDT coefficients instead of k-SUM.
    pub ldt: bool,
    /// Force a vanishing tuple.
    pub planted: bool,
    /// Numerators are drawn from `[-value_range, value_range]`.
    pub value_range: i64,
    /// Denominators are drawn from `[1, max_denominator]`.
    pub max_denominator: i64,
}

impl InstanceSpec {
    pub fn ksum(n: usize, k: usize, planted: bool) -> Self {
        InstanceSpec {
            n,
            k,
            ldt: false,
            planted,
            value_range: 1000,
            max_denominator: 1,
        }
    }
}

fn random_rat<R: Rng>(rng: &mut R, range: i64, max_den: i64) -> Rat {
    ratio(rng.gen_range(-range..=range), rng.gen_range(1..=max_den.max(1)))
}

pub fn random_instance<R: Rng>(rng: &mut R, spec: &InstanceSpec) -> LdtInstance {
    let (n, k) = (spec.n, spec.k);
    let a: Vec<Rat> = if spec.ldt {
        let mut a: Vec<Rat> = (0..=k).map(|_| random_rat(rng, 9, 3)).collect();
        if a[1..].iter().all(Zero::is_zero) {
            a[1] = Rat::one();
        }
        a
    } else {
        let mut a = vec![Rat::one(); k + 1];
        a[0] = Rat::zero();
        a
    };
    let mut x: Vec<Rat> = (0..n)
        .map(|_| random_rat(rng, spec.value_range, spec.max_denominator))
        .collect();
    if spec.planted {
        let mut positions: Vec<usize> = (1..=n).collect();
        positions.shuffle(rng);
        let mut tuple = positions[..k].to_vec();
        tuple.sort_unstable();
        // Solve for one coordinate with a non-zero coefficient.
        let j = (1..=k).rev().find(|&j| !a[j].is_zero()).expect("some a_j is non-zero");
        let mut rest = a[0].clone();
        for (jj, &i) in tuple.iter().enumerate() {
            if jj + 1 != j {
                rest += &a[jj + 1] * &x[i - 1];
            }
        }
        x[tuple[j - 1] - 1] = -rest / &a[j];
    }
    LdtInstance::new(n, k, a, x).expect("generator respects the instance invariants")
}
