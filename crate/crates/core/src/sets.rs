//! Interior boundaries, boundary ratios and searches for small-ratio finite sets.
//!
//! `#∂_X A / #A` with `∂_X A = { a ∈ A : a·x ∉ A for some x ∈ X^{±1} }`
//! (right multiplication). Ratios are exact rationals; floats appear only in reports.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{FoelnerError, Result};
use crate::group::{Ball, GroupDescriptor, Word};

/// Largest ball that exhaustive search will enumerate subsets of.
pub const EXHAUSTIVE_CAP: usize = 22;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementSet {
    descriptor: GroupDescriptor,
    members: BTreeSet<Word>,
}

impl ElementSet {
    pub fn new(
        descriptor: GroupDescriptor,
        members: impl IntoIterator<Item = Word>,
    ) -> Result<Self> {
        let members: BTreeSet<Word> = members.into_iter().collect();
        for m in &members {
            if m.descriptor() != descriptor {
                return Err(FoelnerError::DescriptorMismatch {
                    left: descriptor,
                    right: m.descriptor(),
                });
            }
        }
        Ok(Self {
            descriptor,
            members,
        })
    }

    pub fn from_ball(ball: &Ball) -> Self {
        Self {
            descriptor: ball.descriptor(),
            members: ball.elements().iter().cloned().collect(),
        }
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        self.descriptor
    }

    pub fn members(&self) -> &BTreeSet<Word> {
        &self.members
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.members.contains(w)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_subset(&self, other: &ElementSet) -> bool {
        self.members.is_subset(&other.members)
    }
}

impl Serialize for ElementSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.members.iter().map(|w| w.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratingSet {
    descriptor: GroupDescriptor,
    generators: Vec<Word>,
}

impl GeneratingSet {
    pub fn new(descriptor: GroupDescriptor, generators: Vec<Word>) -> Result<Self> {
        if generators.is_empty() {
            return Err(FoelnerError::EmptySet("generating set"));
        }
        for g in &generators {
            if g.descriptor() != descriptor {
                return Err(FoelnerError::DescriptorMismatch {
                    left: descriptor,
                    right: g.descriptor(),
                });
            }
        }
        Ok(Self {
            descriptor,
            generators,
        })
    }

    pub fn standard(descriptor: GroupDescriptor) -> Self {
        Self {
            descriptor,
            generators: descriptor.standard_generators(),
        }
    }

    /// Parse a comma-separated list of words, e.g. `a1,a2`.
    pub fn parse(descriptor: GroupDescriptor, text: &str) -> Result<Self> {
        let gens = text
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| descriptor.parse_word(t))
            .collect::<Result<Vec<_>>>()?;
        Self::new(descriptor, gens)
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        self.descriptor
    }

    pub fn generators(&self) -> &[Word] {
        &self.generators
    }

    /// `X ∪ X^{-1}`, sorted and deduplicated.
    pub fn symmetric(&self) -> Vec<Word> {
        let set: BTreeSet<Word> = self
            .generators
            .iter()
            .flat_map(|g| [g.clone(), g.inverse()])
            .collect();
        set.into_iter().collect()
    }

    pub fn max_len(&self) -> usize {
        self.generators.iter().map(Word::len).max().unwrap_or(0)
    }
}

impl Serialize for GeneratingSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.generators.iter().map(|w| w.to_string()))
    }
}

/// `#∂A / #A` exactly, with the float only for display.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryReport {
    pub set_size: u64,
    pub boundary_size: u64,
    pub ratio: Ratio<u64>,
}

impl BoundaryReport {
    pub fn new(boundary_size: u64, set_size: u64) -> Result<Self> {
        if set_size == 0 {
            return Err(FoelnerError::EmptySet("boundary ratio of an empty set"));
        }
        Ok(Self {
            set_size,
            boundary_size,
            ratio: Ratio::new(boundary_size, set_size),
        })
    }

    pub fn ratio_f64(&self) -> f64 {
        self.boundary_size as f64 / self.set_size as f64
    }

    /// Exact comparison of ratios, then smaller set first.
    fn rank_cmp(&self, other: &Self) -> Ordering {
        let lhs = self.boundary_size as u128 * other.set_size as u128;
        let rhs = other.boundary_size as u128 * self.set_size as u128;
        lhs.cmp(&rhs).then(self.set_size.cmp(&other.set_size))
    }
}

impl Serialize for BoundaryReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            set_size: u64,
            boundary_size: u64,
            ratio_rational: String,
            ratio_float: f64,
        }
        Repr {
            set_size: self.set_size,
            boundary_size: self.boundary_size,
            ratio_rational: self.ratio.to_string(),
            ratio_float: self.ratio_f64(),
        }
        .serialize(s)
    }
}

fn check_pair(a: &ElementSet, x: &GeneratingSet) -> Result<()> {
    if a.descriptor != x.descriptor {
        return Err(FoelnerError::DescriptorMismatch {
            left: a.descriptor,
            right: x.descriptor,
        });
    }
    Ok(())
}

/// Members of `A` sent outside `A` by right multiplication with some `x ∈ X^{±1}`.
pub fn interior_boundary(a: &ElementSet, x: &GeneratingSet) -> Result<ElementSet> {
    check_pair(a, x)?;
    if a.is_empty() {
        return Err(FoelnerError::EmptySet("interior boundary of an empty set"));
    }
    let sym = x.symmetric();
    let mut members = BTreeSet::new();
    for m in &a.members {
        for g in &sym {
            if !a.contains(&m.multiply(g)?) {
                members.insert(m.clone());
                break;
            }
        }
    }
    Ok(ElementSet {
        descriptor: a.descriptor,
        members,
    })
}

pub fn boundary_ratio(a: &ElementSet, x: &GeneratingSet) -> Result<BoundaryReport> {
    if a.is_empty() {
        return Err(FoelnerError::EmptySet("boundary ratio of an empty set"));
    }
    let boundary = interior_boundary(a, x)?;
    BoundaryReport::new(boundary.len() as u64, a.len() as u64)
}

/// A ball with its right-multiplication graph for `X^{±1}` precomputed.
#[derive(Debug, Clone)]
pub struct IndexedBall {
    ball: Ball,
    /// `neighbors[i][j]` is the index of `w_i * x_j`, or `None` if it leaves the ball.
    neighbors: Vec<Vec<Option<usize>>>,
}

impl IndexedBall {
    pub fn new(descriptor: GroupDescriptor, x: &GeneratingSet, radius: usize) -> Result<Self> {
        if x.descriptor() != descriptor {
            return Err(FoelnerError::DescriptorMismatch {
                left: descriptor,
                right: x.descriptor(),
            });
        }
        let ball = descriptor.ball(radius);
        let sym = x.symmetric();
        let neighbors = ball
            .elements()
            .iter()
            .map(|w| {
                sym.iter()
                    .map(|g| Ok(ball.index_of(&w.multiply(g)?)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ball, neighbors })
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn len(&self) -> usize {
        self.ball.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ball.is_empty()
    }

    fn degree(&self) -> usize {
        self.neighbors.first().map_or(0, Vec::len)
    }

    fn is_boundary(&self, i: usize, member: &[bool]) -> bool {
        member[i]
            && self.neighbors[i]
                .iter()
                .any(|nb| nb.is_none_or(|j| !member[j]))
    }

    fn element_set(&self, indices: impl IntoIterator<Item = usize>) -> ElementSet {
        ElementSet {
            descriptor: self.ball.descriptor(),
            members: indices
                .into_iter()
                .map(|i| self.ball.elements()[i].clone())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct MaskCandidate {
    mask: u32,
    report: BoundaryReport,
}

impl MaskCandidate {
    /// Smaller ratio, then smaller set, then lexicographically smaller sorted membership.
    fn cmp(&self, other: &Self) -> Ordering {
        self.report.rank_cmp(&other.report).then_with(|| {
            let diff = self.mask ^ other.mask;
            if diff == 0 {
                return Ordering::Equal;
            }
            // Equal sizes here: whoever owns the lowest differing index sorts first.
            if self.mask & (1 << diff.trailing_zeros()) != 0 {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        })
    }

    fn better(a: Self, b: Self) -> Self {
        if b.cmp(&a) == Ordering::Less {
            b
        } else {
            a
        }
    }
}

/// True minimum of the boundary ratio over all non-empty subsets of `ball(radius)`.
pub fn exhaustive_min_ratio(
    descriptor: GroupDescriptor,
    x: &GeneratingSet,
    radius: usize,
) -> Result<(ElementSet, BoundaryReport)> {
    let size = descriptor.ball_size(radius);
    if size > EXHAUSTIVE_CAP as u128 {
        return Err(FoelnerError::SearchSpaceTooLarge {
            size: size.min(usize::MAX as u128) as usize,
            cap: EXHAUSTIVE_CAP,
        });
    }
    let indexed = IndexedBall::new(descriptor, x, radius)?;
    let n = indexed.len();
    // `always[i]`: some neighbor leaves the ball; `need[i]`: neighbors that must be present.
    let mut always = 0u32;
    let mut need = vec![0u32; n];
    for i in 0..n {
        for nb in &indexed.neighbors[i] {
            match nb {
                None => always |= 1 << i,
                Some(j) => need[i] |= 1 << j,
            }
        }
    }
    let evaluate = |mask: u32| -> MaskCandidate {
        let mut interior = 0u64;
        let mut rest = mask & !always;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if need[i] & !mask == 0 {
                interior += 1;
            }
        }
        let size = mask.count_ones() as u64;
        MaskCandidate {
            mask,
            report: BoundaryReport {
                set_size: size,
                boundary_size: size - interior,
                ratio: Ratio::new(size - interior, size),
            },
        }
    };
    let total: u64 = 1u64 << n;
    let chunk = 1u64 << 12;
    let best = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let lo = (c * chunk).max(1);
            let hi = ((c + 1) * chunk).min(total);
            (lo..hi)
                .map(|m| evaluate(m as u32))
                .reduce(MaskCandidate::better)
        })
        .flatten()
        .reduce_with(MaskCandidate::better)
        .expect("ball is non-empty");
    let set = indexed.element_set((0..n).filter(|i| best.mask & (1 << i) != 0));
    Ok((set, best.report))
}

/// Boundary ratios of `ball(r)` for `r = 1..=r_max`, by enumeration.
pub fn ball_family_ratios(
    descriptor: GroupDescriptor,
    x: &GeneratingSet,
    r_max: usize,
) -> Result<Vec<BoundaryReport>> {
    if r_max == 0 {
        return Err(FoelnerError::InvalidConfig(
            "r_max must be at least 1".into(),
        ));
    }
    if x.descriptor() != descriptor {
        return Err(FoelnerError::DescriptorMismatch {
            left: descriptor,
            right: x.descriptor(),
        });
    }
    let ball = descriptor.ball(r_max);
    let sym = x.symmetric();
    // ball(r) is exactly {|w| <= r}, so membership of w*x is a length test.
    let mut escape = Vec::with_capacity(ball.len());
    for w in ball.elements() {
        let mut longest = 0;
        for g in &sym {
            longest = longest.max(w.multiply(g)?.len());
        }
        escape.push(longest);
    }
    (1..=r_max)
        .map(|r| {
            let members = ball.prefix_len(r);
            let boundary = escape[..members].iter().filter(|&&l| l > r).count();
            BoundaryReport::new(boundary as u64, members as u64)
        })
        .collect()
}

/// Closed-form ball ratio for `F_n` with standard generators: `2n(2n-1)^{r-1} / |ball(r)|`.
pub fn free_ball_ratio(n: u32, r: u32) -> Result<Ratio<u128>> {
    if n < 2 || r == 0 {
        return Err(FoelnerError::InvalidConfig(
            "closed form needs rank >= 2 and radius >= 1".into(),
        ));
    }
    let d = GroupDescriptor::free(n)?;
    let n = n as u128;
    let sphere = 2 * n * (2 * n - 1).pow(r - 1);
    Ok(Ratio::new(sphere, d.ball_size(r as usize)))
}

/// `(2n-2)/(2n-1)`, the value of the invariant for `F_n`.
pub fn free_group_floor(n: u32) -> Ratio<u64> {
    let n = n as u64;
    Ratio::new(2 * n - 2, 2 * n - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStart {
    Identity,
    FullBall,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalSearchConfig {
    pub radius: usize,
    pub seed: u64,
    pub iterations: usize,
    pub initial_temperature: f64,
    pub temperature_decay: f64,
    pub start: SearchStart,
}

impl LocalSearchConfig {
    /// Defaults: start at `{e}`, temperature 0.05 decaying by 10^3 over the run.
    pub fn new(radius: usize, seed: u64, iterations: usize) -> Self {
        let decay = if iterations == 0 {
            1.0
        } else {
            1e-3f64.powf(1.0 / iterations as f64)
        };
        Self {
            radius,
            seed,
            iterations,
            initial_temperature: 0.05,
            temperature_decay: decay,
            start: SearchStart::Identity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Start,
    Insert,
    Delete,
}

#[derive(Debug, Clone, Serialize)]
pub struct AcceptedMove {
    pub iteration: usize,
    pub kind: MoveKind,
    pub element: Option<Word>,
    pub report: BoundaryReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalSearchResult {
    pub best_set: ElementSet,
    pub best: BoundaryReport,
    pub initial: BoundaryReport,
    pub history: Vec<AcceptedMove>,
}

struct SearchState<'a> {
    ball: &'a IndexedBall,
    member: Vec<bool>,
    boundary: Vec<bool>,
    members: Vec<usize>,
    position: Vec<usize>,
    boundary_count: u64,
}

impl<'a> SearchState<'a> {
    fn new(ball: &'a IndexedBall, start: &[usize]) -> Self {
        let n = ball.len();
        let mut s = Self {
            ball,
            member: vec![false; n],
            boundary: vec![false; n],
            members: Vec::new(),
            position: vec![usize::MAX; n],
            boundary_count: 0,
        };
        for &i in start {
            s.member[i] = true;
            s.position[i] = s.members.len();
            s.members.push(i);
        }
        for i in 0..n {
            s.boundary[i] = ball.is_boundary(i, &s.member);
        }
        s.boundary_count = s.boundary.iter().filter(|&&b| b).count() as u64;
        s
    }

    fn report(&self) -> BoundaryReport {
        BoundaryReport::new(self.boundary_count, self.members.len() as u64).expect("never empty")
    }

    fn toggle(&mut self, c: usize) {
        if self.member[c] {
            self.member[c] = false;
            let p = self.position[c];
            let last = *self.members.last().expect("member present");
            self.members.swap_remove(p);
            if last != c {
                self.position[last] = p;
            }
            self.position[c] = usize::MAX;
        } else {
            self.member[c] = true;
            self.position[c] = self.members.len();
            self.members.push(c);
        }
        let affected = std::iter::once(c).chain(self.ball.neighbors[c].iter().flatten().copied());
        for i in affected.collect::<Vec<_>>() {
            let now = self.ball.is_boundary(i, &self.member);
            if now != self.boundary[i] {
                self.boundary[i] = now;
                if now {
                    self.boundary_count += 1;
                } else {
                    self.boundary_count -= 1;
                }
            }
        }
    }
}

/// Simulated annealing over subsets of `ball(radius)` by single insertions and deletions.
///
/// The reported ratio is achieved by the returned set, so it is an upper
/// bound for the true infimum over all finite sets.
pub fn local_search_min_ratio(
    descriptor: GroupDescriptor,
    x: &GeneratingSet,
    cfg: &LocalSearchConfig,
) -> Result<LocalSearchResult> {
    if !(cfg.initial_temperature >= 0.0) || !(cfg.temperature_decay > 0.0) {
        return Err(FoelnerError::InvalidConfig(
            "temperature schedule must be positive".into(),
        ));
    }
    let indexed = IndexedBall::new(descriptor, x, cfg.radius)?;
    let start: Vec<usize> = match cfg.start {
        SearchStart::Identity => vec![0],
        SearchStart::FullBall => (0..indexed.len()).collect(),
    };
    let mut state = SearchState::new(&indexed, &start);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let degree = indexed.degree();

    let initial = state.report();
    let mut current = initial;
    let mut best = initial;
    let mut best_members = state.members.clone();
    let mut history = vec![AcceptedMove {
        iteration: 0,
        kind: MoveKind::Start,
        element: None,
        report: initial,
    }];
    let mut temperature = cfg.initial_temperature;

    for it in 1..=cfg.iterations {
        temperature *= cfg.temperature_decay;
        let delete = state.members.len() > 1 && rng.random_bool(0.5);
        let candidate = if delete {
            Some(state.members[rng.random_range(0..state.members.len())])
        } else {
            let a = state.members[rng.random_range(0..state.members.len())];
            let j = rng.random_range(0..degree);
            indexed.neighbors[a][j].filter(|&c| !state.member[c])
        };
        let Some(c) = candidate else { continue };

        state.toggle(c);
        let proposal = state.report();
        let delta = proposal.ratio_f64() - current.ratio_f64();
        let accept = delta <= 0.0
            || (temperature > 0.0 && rng.random::<f64>() < (-delta / temperature).exp());
        if !accept {
            state.toggle(c);
            continue;
        }
        current = proposal;
        history.push(AcceptedMove {
            iteration: it,
            kind: if delete {
                MoveKind::Delete
            } else {
                MoveKind::Insert
            },
            element: Some(indexed.ball.elements()[c].clone()),
            report: current,
        });
        if current.rank_cmp(&best) == Ordering::Less {
            best = current;
            best_members = state.members.clone();
        }
    }

    Ok(LocalSearchResult {
        best_set: indexed.element_set(best_members),
        best,
        initial,
        history,
    })
}
