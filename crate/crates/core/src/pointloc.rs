//! Point location in an explicit arrangement of hyperplanes.
//!
//! The structure is a tree of random samples. Each node draws `r`
//! hyperplanes from its set and keeps the vertical decomposition of the
//! sample as a secondary structure: per level, children keyed by the
//! (ceiling, floor) pair, then a compressed trie keyed by the sign vector
//! over that pair's wall candidates, whose leaves hold the surviving walls
//! and the next level. A located prism stores the signs of every hyperplane
//! of the node's set that misses it; the ones crossing it (its conflict
//! list) go to a child node.
//!
//! Queries run on a symbolically perturbed point `q + (δ, δ², …, δ^d)`,
//! which lies on no hyperplane, so every sign test is decided and the
//! located prism contains the perturbed point in its interior and `q` in its
//! closure. Hyperplanes touching that closure without crossing it are
//! evaluated at `q` directly, which keeps answers exact on hyperplanes and
//! walls.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::form::AffineForm;
use crate::instance::tokens;
use crate::lp::{self, LinConstraint, LpResult};
use crate::prism::{eliminate_last, height_gap, Prism};
use crate::rat::{parse_rat, ratio, Rat, Sign};
use crate::transform::{random_generic_transform, TransformMatrix};

const MAX_TRANSFORM_ATTEMPTS: usize = 16;

/// Signs of a point against every hyperplane of the arrangement, indexed
/// by the hyperplane's position in the input.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PositionVector {
    signs: Vec<Sign>,
}

impl PositionVector {
    pub fn new(signs: Vec<Sign>) -> Self {
        PositionVector { signs }
    }

    pub fn get(&self, id: usize) -> Sign {
        self.signs[id]
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }
}

impl fmt::Display for PositionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.signs {
            f.write_str(match s {
                Sign::Negative => "-",
                Sign::Zero => "0",
                Sign::Positive => "+",
            })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PLConfig {
    /// Target shrink factor of conflict lists per tree level.
    pub epsilon: Rat,
    /// Multiplier of `(d/ε)·ln(d/ε)` in the sample size.
    pub sample_const: Rat,
    /// Fixed sample size, overriding the formula.
    pub sample_size: Option<usize>,
    pub max_dim: usize,
    pub max_n: usize,
    pub max_r: usize,
    pub seed: u64,
    /// Build every prism and child up front instead of on first query.
    pub eager: bool,
}

impl PLConfig {
    /// Defaults for dimension `d`: `ε = 1/d` (`1/2` on the line).
    pub fn for_dim(d: usize) -> Self {
        PLConfig {
            epsilon: ratio(1, d.max(2) as i64),
            sample_const: ratio(1, 1),
            sample_size: None,
            max_dim: 4,
            max_n: 64,
            max_r: 24,
            seed: 0,
            eager: false,
        }
    }

    /// `r = ⌈c·(d/ε)·ln(d/ε)⌉`, at least 2 and at most the cap.
    pub fn sample_size(&self, d: usize) -> Result<usize> {
        if let Some(r) = self.sample_size {
            if r == 0 {
                return Err(Error::Config("sample size must be positive".into()));
            }
            if r > self.max_r {
                return Err(Error::CapExceeded(format!("sample size {r} > {}", self.max_r)));
            }
            return Ok(r);
        }
        let t = (ratio(d as i64, 1) / &self.epsilon).to_f64().unwrap_or(f64::INFINITY);
        let c = self.sample_const.to_f64().unwrap_or(1.0);
        let r = (c * t * t.ln()).ceil();
        Ok(if r.is_finite() { (r as usize).clamp(2, self.max_r) } else { self.max_r })
    }

    fn validate(&self, d: usize, n: usize) -> Result<()> {
        let zero = Rat::zero();
        if self.epsilon <= zero || self.epsilon >= ratio(1, 1) {
            return Err(Error::Config(format!("epsilon {} not in (0, 1)", self.epsilon)));
        }
        if self.sample_const <= zero {
            return Err(Error::Config("sample constant must be positive".into()));
        }
        if d == 0 || d > self.max_dim {
            return Err(Error::CapExceeded(format!("dimension {d} (max {})", self.max_dim)));
        }
        if n > self.max_n {
            return Err(Error::CapExceeded(format!("{n} hyperplanes (max {})", self.max_n)));
        }
        Ok(())
    }
}

/// Sign of `f` at `y + (δ, δ², …)` for infinitesimal `δ > 0`; zero only
/// for the zero form. `y` may be longer than `f`.
fn perturbed_sign(f: &AffineForm, y: &[Rat]) -> Sign {
    let v = Sign::of(&f.eval_prefix(y));
    if v != Sign::Zero {
        return v;
    }
    f.coeffs().iter().map(Sign::of).find(|&s| s != Sign::Zero).unwrap_or(Sign::Zero)
}

/// Compressed prefix tree over fixed-length sign vectors.
#[derive(Debug)]
struct SignTrie<V> {
    root: Option<TrieNode<V>>,
    len: usize,
}

#[derive(Debug)]
enum TrieNode<V> {
    Leaf(V),
    Inner(Vec<(Vec<Sign>, TrieNode<V>)>),
}

impl<V> SignTrie<V> {
    fn new() -> Self {
        SignTrie { root: None, len: 0 }
    }

    fn get_mut(&mut self, key: &[Sign]) -> Option<&mut V> {
        let mut node = self.root.as_mut()?;
        let mut rest = key;
        loop {
            match node {
                TrieNode::Leaf(v) => return rest.is_empty().then_some(v),
                TrieNode::Inner(edges) => {
                    let (label, child) = edges.iter_mut().find(|(l, _)| rest.starts_with(l))?;
                    rest = &rest[label.len()..];
                    node = child;
                }
            }
        }
    }

    /// Inserts a key not yet present.
    fn insert(&mut self, key: &[Sign], value: V) {
        self.len += 1;
        let Some(mut node) = self.root.as_mut() else {
            self.root = Some(if key.is_empty() {
                TrieNode::Leaf(value)
            } else {
                TrieNode::Inner(vec![(key.to_vec(), TrieNode::Leaf(value))])
            });
            return;
        };
        let mut rest = key;
        loop {
            let TrieNode::Inner(edges) = node else {
                unreachable!("keys have equal length");
            };
            let Some(pos) = edges.iter().position(|(l, _)| l[0] == rest[0]) else {
                edges.push((rest.to_vec(), TrieNode::Leaf(value)));
                return;
            };
            let common = edges[pos].0.iter().zip(rest).take_while(|(a, b)| a == b).count();
            if common < edges[pos].0.len() {
                let (label, child) = edges.swap_remove(pos);
                let split = TrieNode::Inner(vec![
                    (label[common..].to_vec(), child),
                    (rest[common..].to_vec(), TrieNode::Leaf(value)),
                ]);
                edges.push((label[..common].to_vec(), split));
                return;
            }
            rest = &rest[common..];
            node = &mut edges[pos].1;
        }
    }

    fn values(&self) -> Vec<&V> {
        fn walk<'a, V>(node: &'a TrieNode<V>, out: &mut Vec<&'a V>) {
            match node {
                TrieNode::Leaf(v) => out.push(v),
                TrieNode::Inner(edges) => edges.iter().for_each(|(_, c)| walk(c, out)),
            }
        }
        let mut out = Vec::new();
        if let Some(root) = self.root.as_ref() {
            walk(root, &mut out);
        }
        out
    }
}

type Bounds = Vec<(Option<AffineForm>, Option<AffineForm>)>;

/// Where the sign of a wall candidate comes from: a constant, or a wall of
/// the pair's key times an orientation.
#[derive(Clone, Copy, Debug)]
enum WallRef {
    Const(Sign),
    Key(usize, Sign),
}

impl WallRef {
    fn sign(self, key: &[Option<Sign>]) -> Option<Sign> {
        match self {
            WallRef::Const(s) => Some(s),
            WallRef::Key(j, rel) => key[j].map(|s| s.times(rel)),
        }
    }
}

#[derive(Debug)]
struct PairEntry {
    /// Distinct non-constant candidates in canonical orientation, sorted.
    walls: Vec<AffineForm>,
    /// Per other form: its candidate against the ceiling and the floor.
    refs: Vec<(usize, Option<WallRef>, Option<WallRef>)>,
    gap: Option<WallRef>,
    cells: SignTrie<Cell>,
}

#[derive(Debug)]
struct Cell {
    next: Option<Box<SecondaryNode>>,
    /// Set on level 1.
    prism: Option<usize>,
}

/// One level of the vertical decomposition of a set of forms.
#[derive(Debug)]
struct SecondaryNode {
    dim: usize,
    forms: Vec<AffineForm>,
    ints: Vec<Vec<BigInt>>,
    /// Forms are known non-negative at every point routed here.
    oriented: bool,
    pairs: HashMap<(Option<usize>, Option<usize>), PairEntry>,
}

#[derive(Default)]
struct Ctx {
    cost: usize,
    next_prism: usize,
}

impl SecondaryNode {
    fn new(dim: usize, forms: Vec<AffineForm>, oriented: bool) -> Result<Self> {
        if forms.iter().any(AffineForm::is_vertical) {
            return Err(Error::Vertical { level: dim });
        }
        let ints = forms.iter().map(|f| f.integer_entries().0).collect();
        Ok(SecondaryNode {
            dim,
            forms,
            ints,
            oriented,
            pairs: HashMap::new(),
        })
    }

    fn lead(&self, i: usize) -> Sign {
        Sign::of(self.forms[i].coeff(self.dim - 1))
    }

    /// The form oriented non-negative below (ceiling) or above (floor) it.
    fn oriented_bound(&self, i: usize, ceiling: bool) -> AffineForm {
        let s = if ceiling { self.lead(i).negate() } else { self.lead(i) };
        self.forms[i].oriented(s)
    }

    fn pair_entry(&self, c: Option<usize>, f: Option<usize>) -> Result<PairEntry> {
        let mut raw: Vec<(AffineForm, Sign)> = Vec::new();
        let mut push = |g: AffineForm| -> WallRef {
            if g.is_constant() {
                return WallRef::Const(Sign::of(g.constant()));
            }
            let (canon, rel) = g.canonical();
            let j = raw.iter().position(|(w, _)| *w == canon).unwrap_or_else(|| {
                raw.push((canon, rel));
                raw.len() - 1
            });
            WallRef::Key(j, rel)
        };
        let mut refs = Vec::new();
        for i in 0..self.forms.len() {
            if Some(i) == c || Some(i) == f {
                continue;
            }
            let above = c.map(|c| eliminate_last(&self.ints[i], &self.ints[c])).transpose()?.map(&mut push);
            let below = f.map(|f| eliminate_last(&self.ints[i], &self.ints[f])).transpose()?.map(&mut push);
            refs.push((i, above, below));
        }
        let gap = match (c, f) {
            (Some(c), Some(f)) => Some(push(height_gap(&self.ints[c], &self.ints[f])?.primitive())),
            _ => None,
        };
        // Fix the key order by sorting the walls, then renumber.
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| raw[a].0.cmp(&raw[b].0));
        let mut rank = vec![0; raw.len()];
        for (k, &j) in order.iter().enumerate() {
            rank[j] = k;
        }
        let renumber = |r: WallRef| match r {
            WallRef::Key(j, rel) => WallRef::Key(rank[j], rel),
            other => other,
        };
        let refs = refs.into_iter().map(|(i, a, b)| (i, a.map(renumber), b.map(renumber))).collect();
        let gap = gap.map(renumber);
        let walls = order.into_iter().map(|j| raw[j].0.clone()).collect();
        Ok(PairEntry {
            walls,
            refs,
            gap,
            cells: SignTrie::new(),
        })
    }

    /// Whether the assigned wall signs are consistent with `c` and `f` being
    /// the nearest forms above and below. Unassigned walls are not checked.
    fn consistent(&self, entry: &PairEntry, key: &[Option<Sign>]) -> bool {
        if let Some(Some(s)) = entry.gap.map(|g| g.sign(key)) {
            if s != Sign::Positive {
                return false;
            }
        }
        for &(i, above, below) in &entry.refs {
            let lead = self.lead(i);
            let is_above = above.map(|r| r.sign(key).map(|s| s == lead.negate()));
            let is_below = below.map(|r| r.sign(key).map(|s| s == lead));
            let ok = if self.oriented {
                // The point sits on the non-negative side of every form.
                if lead == Sign::Negative {
                    is_above.unwrap_or(Some(false))
                } else {
                    is_below.unwrap_or(Some(false))
                }
            } else {
                match (is_above.unwrap_or(Some(false)), is_below.unwrap_or(Some(false))) {
                    (Some(true), _) | (_, Some(true)) => Some(true),
                    (Some(false), Some(false)) => Some(false),
                    _ => None,
                }
            };
            if ok == Some(false) {
                return false;
            }
        }
        true
    }

    fn new_cell(dim: usize, walls: &[AffineForm], key: &[Sign], ctx: &mut Ctx) -> Result<Cell> {
        if dim == 1 {
            let id = ctx.next_prism;
            ctx.next_prism += 1;
            return Ok(Cell {
                next: None,
                prism: Some(id),
            });
        }
        let oriented: Vec<AffineForm> = walls.iter().zip(key).map(|(w, &s)| w.oriented(s)).collect();
        let kept = if oriented.is_empty() {
            Vec::new()
        } else {
            lp::irredundant_subset(dim - 1, &oriented)?.kept
        };
        let forms = kept.into_iter().map(|k| oriented[k].clone()).collect();
        Ok(Cell {
            next: Some(Box::new(SecondaryNode::new(dim - 1, forms, true)?)),
            prism: None,
        })
    }

    /// Routes the perturbed `y` down to its level-1 prism, creating missing
    /// entries. Appends the oriented ceiling and floor of each level.
    fn locate(&mut self, y: &[Rat], ctx: &mut Ctx, bounds: &mut Bounds) -> Result<usize> {
        let m = self.dim;
        let mut above = Vec::new();
        let mut below = Vec::new();
        for i in 0..self.forms.len() {
            let s = if self.oriented {
                Sign::Positive
            } else {
                ctx.cost += 1;
                perturbed_sign(&self.forms[i], y)
            };
            if s.times(self.lead(i)) == Sign::Negative {
                above.push(i);
            } else {
                below.push(i);
            }
        }
        let mut nearest = |group: &[usize], want: Sign| -> Result<Option<usize>> {
            let mut best: Option<usize> = None;
            for &i in group {
                best = Some(match best {
                    None => i,
                    Some(b) => {
                        ctx.cost += 1;
                        if perturbed_sign(&height_gap(&self.ints[i], &self.ints[b])?, y) == want {
                            i
                        } else {
                            b
                        }
                    }
                });
            }
            Ok(best)
        };
        let c = nearest(&above, Sign::Negative)?;
        let f = nearest(&below, Sign::Positive)?;
        bounds.push((c.map(|c| self.oriented_bound(c, true)), f.map(|f| self.oriented_bound(f, false))));

        if !self.pairs.contains_key(&(c, f)) {
            let entry = self.pair_entry(c, f)?;
            self.pairs.insert((c, f), entry);
        }
        let entry = self.pairs.get_mut(&(c, f)).expect("inserted above");
        ctx.cost += entry.walls.len();
        let key: Vec<Sign> = entry.walls.iter().map(|w| perturbed_sign(w, y)).collect();
        if entry.cells.get_mut(&key).is_none() {
            let cell = Self::new_cell(m, &entry.walls, &key, ctx)?;
            entry.cells.insert(&key, cell);
        }
        let cell = entry.cells.get_mut(&key).expect("inserted above");
        match (&mut cell.next, cell.prism) {
            (_, Some(id)) => Ok(id),
            (Some(next), None) => next.locate(y, ctx, bounds),
            (None, None) => unreachable!("cell without prism or next level"),
        }
    }

    /// Creates every realizable pair and cell below this node. Calls
    /// `found` with each prism's id and bounds.
    fn build_all(&mut self, ctx: &mut Ctx, bounds: &mut Bounds, found: &mut dyn FnMut(usize, &Bounds)) -> Result<()> {
        let n = self.forms.len();
        let options: Vec<Option<usize>> = std::iter::once(None).chain((0..n).map(Some)).collect();
        for &c in &options {
            for &f in &options {
                if (c.is_some() && c == f) || (n > 0 && c.is_none() && f.is_none()) {
                    continue;
                }
                if self.oriented
                    && (c.is_some_and(|c| self.lead(c) != Sign::Negative) || f.is_some_and(|f| self.lead(f) != Sign::Positive))
                {
                    continue;
                }
                if !self.pairs.contains_key(&(c, f)) {
                    let entry = self.pair_entry(c, f)?;
                    self.pairs.insert((c, f), entry);
                }
                let entry = &self.pairs[&(c, f)];
                let keys = self.cell_keys(entry)?;
                if keys.is_empty() {
                    self.pairs.remove(&(c, f));
                    continue;
                }
                bounds.push((c.map(|c| self.oriented_bound(c, true)), f.map(|f| self.oriented_bound(f, false))));
                let m = self.dim;
                let entry = self.pairs.get_mut(&(c, f)).expect("present");
                for key in keys {
                    if entry.cells.get_mut(&key).is_none() {
                        let cell = Self::new_cell(m, &entry.walls, &key, ctx)?;
                        entry.cells.insert(&key, cell);
                    }
                    let cell = entry.cells.get_mut(&key).expect("inserted above");
                    match (&mut cell.next, cell.prism) {
                        (_, Some(id)) => found(id, bounds),
                        (Some(next), None) => next.build_all(ctx, bounds, found)?,
                        (None, None) => unreachable!("cell without prism or next level"),
                    }
                }
                bounds.pop();
            }
        }
        Ok(())
    }

    /// Sign vectors of the full-dimensional cells of the pair's walls (in
    /// dimension `dim − 1`) on which the pair is the nearest one.
    fn cell_keys(&self, entry: &PairEntry) -> Result<Vec<Vec<Sign>>> {
        let j = self.dim - 1;
        let w = entry.walls.len();
        let full = |key: &[Sign]| key.iter().map(|&s| Some(s)).collect::<Vec<_>>();
        if w == 0 {
            return Ok(if self.consistent(entry, &[]) { vec![Vec::new()] } else { Vec::new() });
        }
        if j == 1 {
            // Cells of a set of points on the line: sample each interval.
            let mut roots: Vec<Rat> = entry.walls.iter().map(|g| -g.constant() / g.coeff(0)).collect();
            roots.sort();
            roots.dedup();
            let mut samples = vec![&roots[0] - Rat::from_integer(1.into())];
            samples.extend(roots.windows(2).map(|p| (&p[0] + &p[1]) / Rat::from_integer(2.into())));
            samples.push(roots.last().expect("non-empty") + Rat::from_integer(1.into()));
            let mut out = Vec::new();
            for x in samples {
                let key: Vec<Sign> = entry.walls.iter().map(|g| Sign::of(&g.eval_prefix(std::slice::from_ref(&x)))).collect();
                if self.consistent(entry, &full(&key)) {
                    out.push(key);
                }
            }
            return Ok(out);
        }
        let mut out = Vec::new();
        let mut key = vec![None; w];
        let mut region = Vec::new();
        self.cells_dfs(entry, 0, &mut key, &mut region, &mut out)?;
        Ok(out)
    }

    fn cells_dfs(
        &self,
        entry: &PairEntry,
        k: usize,
        key: &mut Vec<Option<Sign>>,
        region: &mut Vec<LinConstraint>,
        out: &mut Vec<Vec<Sign>>,
    ) -> Result<()> {
        if !self.consistent(entry, key) {
            return Ok(());
        }
        if k == key.len() {
            out.push(key.iter().map(|s| s.expect("assigned")).collect());
            return Ok(());
        }
        let wall = &entry.walls[k];
        let (pos, neg) = if region.is_empty() {
            (true, true)
        } else {
            let pos = match lp::maximize(wall, region)? {
                LpResult::Optimal { value, .. } => value.is_positive(),
                LpResult::Unbounded => true,
                LpResult::Infeasible => false,
            };
            let neg = match lp::minimize(wall, region)? {
                LpResult::Optimal { value, .. } => value.is_negative(),
                LpResult::Unbounded => true,
                LpResult::Infeasible => false,
            };
            (pos, neg)
        };
        for (possible, s) in [(pos, Sign::Positive), (neg, Sign::Negative)] {
            if !possible {
                continue;
            }
            key[k] = Some(s);
            region.push(LinConstraint::gt(wall.oriented(s)));
            self.cells_dfs(entry, k + 1, key, region, out)?;
            region.pop();
            key[k] = None;
        }
        Ok(())
    }

    fn count(&self, stats: &mut PLStats) {
        stats.secondary_nodes += 1;
        stats.pairs += self.pairs.len();
        for entry in self.pairs.values() {
            for cell in entry.cells.values() {
                stats.cells += 1;
                if cell.prism.is_some() {
                    stats.prisms += 1;
                }
                if let Some(next) = &cell.next {
                    next.count(stats);
                }
            }
        }
    }
}

/// Per-prism record of a primary node.
#[derive(Debug)]
struct Child {
    /// Sign on the open prism of each hyperplane of the node's set that
    /// does not cross it.
    stored: Vec<(usize, Sign)>,
    /// Hyperplanes meeting the closed prism without crossing it.
    touching: Vec<usize>,
    conflict: Vec<usize>,
    node: Option<Box<PLNode>>,
}

#[derive(Debug)]
enum NodeKind {
    /// Signs of the set are evaluated directly.
    Leaf,
    Inner {
        secondary: Box<SecondaryNode>,
        children: HashMap<usize, Child>,
        ctx_prisms: usize,
    },
}

#[derive(Debug)]
struct PLNode {
    set: Vec<usize>,
    kind: NodeKind,
    /// Conflict list above `ε·|parent set|`, or a failed secondary build.
    flagged: bool,
}

impl PLNode {
    fn empty() -> Self {
        PLNode {
            set: Vec::new(),
            kind: NodeKind::Leaf,
            flagged: false,
        }
    }
}

/// Counts over the built part of a tree.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PLStats {
    pub primary_nodes: usize,
    pub leaves: usize,
    pub flagged: usize,
    pub secondary_nodes: usize,
    pub pairs: usize,
    /// Trie leaves over all secondary levels.
    pub cells: usize,
    /// Level-1 cells, i.e. prisms of the vertical decompositions.
    pub prisms: usize,
    /// Prisms of the root's sample alone.
    pub root_prisms: usize,
    pub max_leaf_set: usize,
    pub depth: usize,
}

/// Point-location structure over an arrangement of hyperplanes in `R^d`.
#[derive(Debug)]
pub struct PLTree {
    dim: usize,
    config: PLConfig,
    r: usize,
    transform: TransformMatrix,
    /// Distinct non-constant hyperplanes in transformed coordinates.
    hyperplanes: Vec<AffineForm>,
    /// Input id → the distinct hyperplane and the relative orientation, or
    /// the fixed sign of a constant form.
    members: Vec<Member>,
    root: PLNode,
}

#[derive(Clone, Copy, Debug)]
enum Member {
    Of(usize, Sign),
    Constant(Sign),
}

impl PLTree {
    /// Preprocesses the arrangement. Draws a coordinate transform under
    /// which no hyperplane is vertical.
    pub fn build(forms: &[AffineForm], config: PLConfig) -> Result<PLTree> {
        let d = forms.first().map_or(1, AffineForm::dim);
        if let Some(f) = forms.iter().find(|f| f.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: f.dim(),
            });
        }
        config.validate(d, forms.len())?;
        let r = config.sample_size(d)?;

        let mut distinct: Vec<AffineForm> = Vec::new();
        let mut index: HashMap<AffineForm, usize> = HashMap::new();
        let members: Vec<Member> = forms
            .iter()
            .map(|f| {
                if f.is_constant() {
                    return Member::Constant(Sign::of(f.constant()));
                }
                let (canon, rel) = f.canonical();
                let u = *index.entry(canon.clone()).or_insert_with(|| {
                    distinct.push(canon);
                    distinct.len() - 1
                });
                Member::Of(u, rel)
            })
            .collect();

        for attempt in 0..MAX_TRANSFORM_ATTEMPTS {
            let transform = random_generic_transform(d, config.seed.wrapping_add(attempt as u64));
            let hyperplanes: Vec<AffineForm> = distinct
                .iter()
                .map(|f| transform.transform_form(f).map(|g| g.primitive()))
                .collect::<Result<_>>()?;
            if hyperplanes.iter().any(AffineForm::is_vertical) {
                continue;
            }
            let mut tree = PLTree {
                dim: d,
                config: config.clone(),
                r,
                transform,
                hyperplanes,
                members: members.clone(),
                root: PLNode::empty(),
            };
            let root = tree.new_node((0..distinct.len()).collect(), config.seed, false);
            tree.root = root;
            if config.eager {
                let mut root = std::mem::replace(&mut tree.root, PLNode::empty());
                match tree.build_eager(&mut root) {
                    Ok(()) => {}
                    Err(e) if e.is_genericity() || e == Error::IdenticalForms => continue,
                    Err(e) => return Err(e),
                }
                tree.root = root;
            }
            return Ok(tree);
        }
        Err(Error::GenericityExhausted(MAX_TRANSFORM_ATTEMPTS))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample_size(&self) -> usize {
        self.r
    }

    pub fn config(&self) -> &PLConfig {
        &self.config
    }

    fn new_node(&self, set: Vec<usize>, seed: u64, flagged: bool) -> PLNode {
        if set.len() < self.r {
            return PLNode {
                set,
                kind: NodeKind::Leaf,
                flagged,
            };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sample: Vec<usize> = rand::seq::index::sample(&mut rng, set.len(), self.r)
            .into_iter()
            .map(|i| set[i])
            .collect();
        sample.sort_unstable();
        let forms = sample.iter().map(|&u| self.hyperplanes[u].clone()).collect();
        match SecondaryNode::new(self.dim, forms, false) {
            Ok(secondary) => PLNode {
                set,
                kind: NodeKind::Inner {
                    secondary: Box::new(secondary),
                    children: HashMap::new(),
                    ctx_prisms: 0,
                },
                flagged,
            },
            Err(_) => PLNode {
                set,
                kind: NodeKind::Leaf,
                flagged: true,
            },
        }
    }

    fn child_seed(&self, conflict: &[usize]) -> u64 {
        conflict.iter().fold(self.config.seed ^ 0x9e37_79b9_7f4a_7c15, |h, &u| {
            (h ^ u as u64).wrapping_mul(0x1000_0000_01b3).rotate_left(17)
        })
    }

    /// Conflict list, contacts and stored signs of a prism of `node`, with
    /// `inside` giving signs on the open prism.
    fn make_child(&self, set: &[usize], bounds: &Bounds, inside: &dyn Fn(&AffineForm) -> Sign) -> Result<Child> {
        let prism = Prism::from_bounds(self.dim, bounds);
        let forms: Vec<AffineForm> = set.iter().map(|&u| self.hyperplanes[u].clone()).collect();
        let crossing = prism.hits(&forms, false)?;
        let meeting = prism.hits(&forms, true)?;
        let mut conflict = Vec::new();
        let mut touching = Vec::new();
        let mut stored = Vec::new();
        let mut ci = crossing.iter().peekable();
        let mut mi = meeting.iter().peekable();
        for (k, &u) in set.iter().enumerate() {
            let crosses = ci.next_if_eq(&&k).is_some();
            let meets = mi.next_if_eq(&&k).is_some();
            if crosses {
                conflict.push(u);
                continue;
            }
            if meets {
                touching.push(u);
            }
            stored.push((u, inside(&forms[k])));
        }
        let flagged = conflict.len() as u128 * self.config.epsilon.denom().to_u128().unwrap_or(1)
            > set.len() as u128 * self.config.epsilon.numer().to_u128().unwrap_or(0);
        let node = if conflict.is_empty() {
            None
        } else {
            Some(Box::new(self.new_node(conflict.clone(), self.child_seed(&conflict), flagged)))
        };
        Ok(Child {
            stored,
            touching,
            conflict,
            node,
        })
    }

    fn build_eager(&self, node: &mut PLNode) -> Result<()> {
        let set = node.set.clone();
        let NodeKind::Inner {
            secondary,
            children,
            ctx_prisms,
        } = &mut node.kind
        else {
            return Ok(());
        };
        let mut ctx = Ctx {
            cost: 0,
            next_prism: *ctx_prisms,
        };
        let mut prisms: Vec<(usize, Bounds)> = Vec::new();
        let mut bounds = Vec::new();
        secondary.build_all(&mut ctx, &mut bounds, &mut |id, b| prisms.push((id, b.clone())))?;
        *ctx_prisms = ctx.next_prism;
        for (id, b) in prisms {
            if children.contains_key(&id) {
                continue;
            }
            let prism = Prism::from_bounds(self.dim, &b);
            let point = lp::interior_point(self.dim, prism.constraints())?
                .ok_or_else(|| Error::Degenerate("enumerated prism has empty interior".into()))?;
            let inside = |f: &AffineForm| Sign::of(&f.eval_prefix(&point));
            let mut child = self.make_child(&set, &b, &inside)?;
            if let Some(n) = child.node.as_mut() {
                self.build_eager(n)?;
            }
            children.insert(id, child);
        }
        Ok(())
    }

    /// Position vector of `q` (original coordinates).
    pub fn query(&mut self, q: &[Rat]) -> Result<PositionVector> {
        Ok(self.query_with_cost(q)?.0)
    }

    /// Number of height comparisons and sign evaluations a query performs.
    pub fn query_cost(&mut self, q: &[Rat]) -> Result<usize> {
        Ok(self.query_with_cost(q)?.1)
    }

    pub fn query_with_cost(&mut self, q: &[Rat]) -> Result<(PositionVector, usize)> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: q.len(),
            });
        }
        let y = self.transform.apply_point(q)?;
        let mut signs = vec![Sign::Zero; self.hyperplanes.len()];
        let mut cost = 0;
        let mut root = std::mem::replace(&mut self.root, PLNode::empty());
        let result = self.descend(&mut root, &y, &mut signs, &mut cost);
        self.root = root;
        result?;
        let out = self
            .members
            .iter()
            .map(|m| match *m {
                Member::Of(u, rel) => signs[u].times(rel),
                Member::Constant(s) => s,
            })
            .collect();
        Ok((PositionVector::new(out), cost))
    }

    fn descend(&self, node: &mut PLNode, y: &[Rat], signs: &mut [Sign], cost: &mut usize) -> Result<()> {
        let PLNode { set, kind, flagged, .. } = node;
        let located = match kind {
            NodeKind::Leaf => {
                for &u in set.iter() {
                    signs[u] = Sign::of(&self.hyperplanes[u].eval_prefix(y));
                }
                *cost += set.len();
                return Ok(());
            }
            NodeKind::Inner { secondary, ctx_prisms, .. } => {
                let mut ctx = Ctx {
                    cost: 0,
                    next_prism: *ctx_prisms,
                };
                let mut bounds = Vec::new();
                let id = secondary.locate(y, &mut ctx, &mut bounds);
                *ctx_prisms = ctx.next_prism;
                id.map(|id| (id, bounds, ctx.cost))
            }
        };
        let (id, bounds, located_cost) = match located {
            Ok(v) => v,
            Err(e) if e.is_genericity() || e == Error::IdenticalForms => {
                // Degenerate sample: answer this node by evaluation.
                *kind = NodeKind::Leaf;
                *flagged = true;
                return self.descend(node, y, signs, cost);
            }
            Err(e) => return Err(e),
        };
        *cost += located_cost;
        let NodeKind::Inner { children, .. } = kind else {
            unreachable!("located through an inner node");
        };
        if let Entry::Vacant(slot) = children.entry(id) {
            let inside = |f: &AffineForm| perturbed_sign(f, y);
            slot.insert(self.make_child(set, &bounds, &inside)?);
        }
        let child = children.get_mut(&id).expect("inserted above");
        for &(u, s) in &child.stored {
            signs[u] = s;
        }
        for &u in &child.touching {
            signs[u] = Sign::of(&self.hyperplanes[u].eval_prefix(y));
        }
        *cost += child.touching.len();
        match child.node.as_deref_mut() {
            None => Ok(()),
            Some(next) => self.descend(next, y, signs, cost),
        }
    }

    /// Counts over the part of the structure built so far.
    pub fn stats(&self) -> PLStats {
        let mut stats = PLStats::default();
        if let NodeKind::Inner { secondary, .. } = &self.root.kind {
            let mut root = PLStats::default();
            secondary.count(&mut root);
            stats.root_prisms = root.prisms;
        }
        count_node(&self.root, 1, &mut stats);
        stats
    }

    /// Conflict-list sizes of every built prism, with the size of the set
    /// it was cut from.
    pub fn conflict_sizes(&self) -> Vec<(usize, usize)> {
        fn walk(node: &PLNode, out: &mut Vec<(usize, usize)>) {
            if let NodeKind::Inner { children, .. } = &node.kind {
                let mut ids: Vec<&usize> = children.keys().collect();
                ids.sort();
                for id in ids {
                    let child = &children[id];
                    out.push((child.conflict.len(), node.set.len()));
                    if let Some(n) = &child.node {
                        walk(n, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }
}

fn count_node(node: &PLNode, depth: usize, stats: &mut PLStats) {
    stats.primary_nodes += 1;
    stats.depth = stats.depth.max(depth);
    if node.flagged {
        stats.flagged += 1;
    }
    match &node.kind {
        NodeKind::Leaf => {
            stats.leaves += 1;
            stats.max_leaf_set = stats.max_leaf_set.max(node.set.len());
        }
        NodeKind::Inner { secondary, children, .. } => {
            secondary.count(stats);
            for child in children.values() {
                if let Some(n) = &child.node {
                    count_node(n, depth + 1, stats);
                }
            }
        }
    }
}

/// Signs of `q` against every form, by direct evaluation.
pub fn brute_position_vector(forms: &[AffineForm], q: &[Rat]) -> Result<PositionVector> {
    forms
        .iter()
        .map(|f| f.evaluate(q).map(|v| Sign::of(&v)))
        .collect::<Result<_>>()
        .map(PositionVector::new)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#')
    })
}

fn parse_row(line: usize, body: &str, len: usize, what: &str) -> Result<Vec<Rat>> {
    let toks = tokens(body);
    if toks.len() != len {
        let col = toks.get(len).map_or(body.len() + 1, |t| t.0);
        return Err(Error::parse(line, col, format!("expected {len} rationals for {what}, found {}", toks.len())));
    }
    toks.iter()
        .map(|&(col, t)| parse_rat(t).ok_or_else(|| Error::parse(line, col, format!("invalid rational `{t}`"))))
        .collect()
}

/// Parses `arr d n` followed by `n` lines of `d` coefficients and the
/// constant. Blank lines and `#` comments are skipped.
pub fn parse_arrangement(text: &str) -> Result<(usize, Vec<AffineForm>)> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, 1, "empty arrangement file"))?;
    let htoks = tokens(header);
    if htoks[0].1 != "arr" {
        return Err(Error::parse(hline, htoks[0].0, format!("expected `arr`, found `{}`", htoks[0].1)));
    }
    if htoks.len() != 3 {
        let col = htoks.get(3).map_or(header.len() + 1, |t| t.0);
        return Err(Error::parse(hline, col, "header must be `arr d n`"));
    }
    let count = |(col, tok): (usize, &str)| -> Result<usize> {
        tok.parse()
            .map_err(|_| Error::parse(hline, col, format!("expected a non-negative integer, found `{tok}`")))
    };
    let d = count(htoks[1])?;
    let n = count(htoks[2])?;
    if d == 0 {
        return Err(Error::parse(hline, htoks[1].0, "dimension must be positive"));
    }
    let mut forms = Vec::with_capacity(n);
    for i in 0..n {
        let (line, body) = lines
            .next()
            .ok_or_else(|| Error::parse(hline + i + 1, 1, format!("missing hyperplane {}", i + 1)))?;
        let mut row = parse_row(line, body, d + 1, "a hyperplane")?;
        let constant = row.pop().expect("d + 1 entries");
        forms.push(AffineForm::new(constant, row));
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::parse(line, 1, "unexpected trailing content"));
    }
    Ok((d, forms))
}

/// One point of `d` rationals per line.
pub fn parse_queries(text: &str, d: usize) -> Result<Vec<Vec<Rat>>> {
    content_lines(text).map(|(line, body)| parse_row(line, body, d, "a query point")).collect()
}

pub fn serialize_arrangement(forms: &[AffineForm]) -> String {
    let d = forms.first().map_or(1, AffineForm::dim);
    let mut out = format!("arr {d} {}\n", forms.len());
    for f in forms {
        let row: Vec<String> = f.coeffs().iter().chain(std::iter::once(f.constant())).map(|r| r.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}
