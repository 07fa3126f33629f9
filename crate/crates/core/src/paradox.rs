//! Audit of the paradoxical-decomposition argument for `L(F_2)` with `X = {L_a, L_b}`.
//!
//! Sets are prefix sets `S_x` (reduced words beginning with the letter `x`), the
//! singleton `{e}`, their left translates and complements. Membership is decided
//! symbolically (`w ∈ g·B` iff `g⁻¹w ∈ B`); explicit realizations on balls are
//! used only as an independent check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::connes::{dense_setup, random_frame};
use crate::error::{FoelnerError, Result};
use crate::group::{GroupDescriptor, Letter, Word};
use crate::l2::{compress, DenseSpace, Frame, GroupAlgebraElement, L2Vec};
use crate::linalg::nearest_unitary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaseSet {
    Identity,
    BeginsWith(Letter),
}

/// `translate · base` or its complement, realized within `radius`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrefixSet {
    base: BaseSet,
    translate: Word,
    complement: bool,
    radius: usize,
}

impl PrefixSet {
    pub fn identity(desc: GroupDescriptor, radius: usize) -> Self {
        Self {
            base: BaseSet::Identity,
            translate: desc.identity(),
            complement: false,
            radius,
        }
    }

    pub fn begins_with(desc: GroupDescriptor, letter: Letter, radius: usize) -> Result<Self> {
        desc.require_free()?;
        desc.check_letter(letter)?;
        Ok(Self {
            base: BaseSet::BeginsWith(letter),
            translate: desc.identity(),
            complement: false,
            radius,
        })
    }

    /// `g · self`.
    pub fn translated(&self, g: &Word) -> Result<Self> {
        Ok(Self {
            translate: g.multiply(&self.translate)?,
            ..self.clone()
        })
    }

    pub fn complement(&self) -> Self {
        Self {
            complement: !self.complement,
            ..self.clone()
        }
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        self.translate.descriptor()
    }

    /// Radius of the ball on which the set is realized exactly: a translate by
    /// `g` of a set realized in ball(r) is trusted on ball(r - |g|).
    pub fn realization_radius(&self) -> usize {
        self.radius.saturating_sub(self.translate.len())
    }

    pub fn contains(&self, w: &Word) -> Result<bool> {
        let u = self.translate.inverse().multiply(w)?;
        let inside = match self.base {
            BaseSet::Identity => u.is_identity(),
            BaseSet::BeginsWith(l) => u.begins_with(l)?,
        };
        Ok(inside != self.complement)
    }

    /// Members within the realization radius, computed by translating the base
    /// set's members in ball(radius) (not by symbolic membership).
    pub fn realize(&self) -> Result<BTreeSet<Word>> {
        let desc = self.descriptor();
        let keep = self.realization_radius();
        let ball = desc.ball(self.radius);
        let mut base = BTreeSet::new();
        for w in ball.elements() {
            let inside = match self.base {
                BaseSet::Identity => w.is_identity(),
                BaseSet::BeginsWith(l) => w.first_letter() == Some(l),
            };
            if inside {
                base.insert(self.translate.multiply(w)?);
            }
        }
        let trusted = ball.elements().iter().filter(|w| w.len() <= keep);
        Ok(trusted
            .filter(|w| base.contains(*w) != self.complement)
            .cloned()
            .collect())
    }
}

impl fmt::Display for PrefixSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match self.base {
            BaseSet::Identity => "{e}".to_string(),
            BaseSet::BeginsWith(l) => format!("S_{l}"),
        };
        let inner = if self.translate.is_identity() {
            base
        } else {
            format!("{}·{base}", self.translate)
        };
        if self.complement {
            write!(f, "complement({inner})")
        } else {
            write!(f, "{inner}")
        }
    }
}

/// `‖η‖²_S`.
pub fn restriction_norm(eta: &L2Vec, s: &PrefixSet) -> Result<f64> {
    if eta.descriptor() != s.descriptor() {
        return Err(FoelnerError::DescriptorMismatch {
            left: s.descriptor(),
            right: eta.descriptor(),
        });
    }
    if eta.support_radius() > s.realization_radius() {
        return Err(FoelnerError::RealizationRadius {
            support: eta.support_radius(),
            radius: s.realization_radius(),
        });
    }
    let mut acc = 0.0;
    for (w, z) in eta.iter() {
        if s.contains(w)? {
            acc += z.norm_sqr();
        }
    }
    Ok(acc)
}

/// `c_S = (1/k) Σ_i ‖ξ_i‖²_S`.
pub fn c_value(e: &Frame, s: &PrefixSet) -> Result<f64> {
    let mut acc = 0.0;
    for col in e.columns() {
        acc += restriction_norm(col, s)?;
    }
    Ok(acc / e.rank() as f64)
}

/// `(1/k) Σ_i |ξ_i(w)|²` per support word, so that `c_S` is a single pass.
struct Mass {
    descriptor: GroupDescriptor,
    support_radius: usize,
    entries: Vec<(Word, f64)>,
}

impl Mass {
    fn new(e: &Frame) -> Self {
        let mut acc: BTreeMap<&Word, f64> = BTreeMap::new();
        for col in e.columns() {
            for (w, z) in col.iter() {
                *acc.entry(w).or_default() += z.norm_sqr();
            }
        }
        let k = e.rank() as f64;
        Self {
            descriptor: e.descriptor(),
            support_radius: e.support_radius(),
            entries: acc.into_iter().map(|(w, m)| (w.clone(), m / k)).collect(),
        }
    }

    fn c(&self, s: &PrefixSet) -> Result<f64> {
        if s.descriptor() != self.descriptor {
            return Err(FoelnerError::DescriptorMismatch {
                left: s.descriptor(),
                right: self.descriptor,
            });
        }
        if self.support_radius > s.realization_radius() {
            return Err(FoelnerError::RealizationRadius {
                support: self.support_radius,
                radius: s.realization_radius(),
            });
        }
        let mut acc = 0.0;
        for (w, m) in &self.entries {
            if s.contains(w)? {
                acc += m;
            }
        }
        Ok(acc)
    }
}

fn f2() -> GroupDescriptor {
    GroupDescriptor::free(2).expect("rank 2")
}

const A: Letter = Letter::new(1, false);
const A_INV: Letter = Letter::new(1, true);
const B: Letter = Letter::new(2, false);
const B_INV: Letter = Letter::new(2, true);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SetIdentityReport {
    pub radius: usize,
    pub checked_ball_size: usize,
    /// `S_{a⁻¹}`, `b·S_{a⁻¹}`, `b⁻¹·S_{a⁻¹}` pairwise disjoint on ball(r-1).
    pub disjoint: bool,
    /// `S_a` and `a·S_{a⁻¹}` are disjoint and cover ball(r-1).
    pub corrected_cover: bool,
    /// Size of ball(r-1) minus `S_{a⁻¹} ∪ a·S_{a⁻¹}`.
    pub literal_uncovered: usize,
    /// The uncovered words are exactly those beginning with `a`.
    pub literal_uncovered_is_s_a: bool,
    /// Explicit realizations agree with symbolic membership on ball(r-1).
    pub realization_agrees: bool,
}

/// Exact check of the set identities on ball(r-1), using translates of sets realized in ball(r).
pub fn verify_set_identities(radius: usize) -> Result<SetIdentityReport> {
    if radius < 2 {
        return Err(FoelnerError::InvalidConfig(
            "set identities need radius >= 2".into(),
        ));
    }
    let d = f2();
    let a = d.letter_word(A)?;
    let b = d.letter_word(B)?;
    let s = PrefixSet::begins_with(d, A_INV, radius)?;
    let s_a = PrefixSet::begins_with(d, A, radius)?;
    let bs = s.translated(&b)?;
    let b_inv_s = s.translated(&b.inverse())?;
    let a_s = s.translated(&a)?;

    let inner: Vec<Word> = d.ball(radius - 1).elements().to_vec();
    let restrict = |set: BTreeSet<Word>| -> BTreeSet<Word> {
        set.into_iter().filter(|w| w.len() < radius).collect()
    };
    let r_s = restrict(s.realize()?);
    let r_bs = bs.realize()?;
    let r_b_inv_s = b_inv_s.realize()?;
    let r_s_a = restrict(s_a.realize()?);
    let r_as = a_s.realize()?;

    let mut realization_agrees = true;
    for (set, realized) in [
        (&s, &r_s),
        (&bs, &r_bs),
        (&b_inv_s, &r_b_inv_s),
        (&s_a, &r_s_a),
        (&a_s, &r_as),
    ] {
        for w in &inner {
            realization_agrees &= set.contains(w)? == realized.contains(w);
        }
    }

    let disjoint =
        r_s.is_disjoint(&r_bs) && r_s.is_disjoint(&r_b_inv_s) && r_bs.is_disjoint(&r_b_inv_s);
    let corrected_cover = r_s_a.is_disjoint(&r_as) && r_s_a.len() + r_as.len() == inner.len();
    let literal: BTreeSet<&Word> = r_s.iter().chain(&r_as).collect();
    let uncovered: BTreeSet<&Word> = inner.iter().filter(|w| !literal.contains(w)).collect();
    let literal_uncovered_is_s_a =
        uncovered.len() == r_s_a.len() && uncovered.iter().all(|w| r_s_a.contains(*w));
    Ok(SetIdentityReport {
        radius,
        checked_ball_size: inner.len(),
        disjoint,
        corrected_cover,
        literal_uncovered: uncovered.len(),
        literal_uncovered_is_s_a,
        realization_agrees,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisplacementReport {
    pub unitary: String,
    pub set: String,
    /// `max(|c_{g⁻¹S} - c_S|, |c_S - c_{gS}|)`.
    pub measured: f64,
    /// `2 ‖Ue - We‖_τ` with `W` the polar factor of the compression.
    pub certified: f64,
    pub within: bool,
}

/// `‖Ue - We‖_τ` where `W ξ_p = Σ_q Wm[q][p] ξ_q` and `Wm` is the nearest unitary
/// to `A = compress(U, e)`.
///
/// `Uξ_p` splits into `Σ_q A[q][p] ξ_q` plus a part orthogonal to the frame, so
/// `‖Ue - We‖²_τ = ‖A - Wm‖²_τ + 1 - τ_k(A*A)`.
pub fn unitary_defect(u: &GroupAlgebraElement, e: &Frame) -> Result<f64> {
    let a = compress(u, e)?;
    let (_, dist) = nearest_unitary(&a)?;
    Ok((dist * dist + (1.0 - a.tau_norm_sq()).max(0.0)).sqrt())
}

pub fn displacement_bound(
    e: &Frame,
    u: &GroupAlgebraElement,
    s: &PrefixSet,
) -> Result<DisplacementReport> {
    let certified = 2.0 * unitary_defect(u, e)?;
    displacement_with(&Mass::new(e), u, s, certified)
}

fn displacement_with(
    mass: &Mass,
    u: &GroupAlgebraElement,
    s: &PrefixSet,
    certified: f64,
) -> Result<DisplacementReport> {
    let (g, _) = u.single_unitary().ok_or(FoelnerError::NotUnitary)?;
    let c_s = mass.c(s)?;
    let forward = mass.c(&s.translated(g)?)?;
    let backward = mass.c(&s.translated(&g.inverse())?)?;
    let measured = (backward - c_s).abs().max((c_s - forward).abs());
    Ok(DisplacementReport {
        unitary: u.to_string(),
        set: s.to_string(),
        measured,
        certified,
        within: measured <= certified + 1e-12,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Largest ε for which the re-derived chain forces a contradiction: `√2/24`.
    pub derived: f64,
    /// The nominal constant `1/7`.
    pub paper: f64,
    pub discrepancy: bool,
}

/// With `B = 2(ε/√2 + δ')` and `δ' → 0`, the requirement `B_a + B_b < 1/6`
/// becomes `2√2 ε < 1/6`.
pub fn contradiction_threshold() -> Thresholds {
    let derived = 2f64.sqrt() / 24.0;
    let paper = 1.0 / 7.0;
    Thresholds {
        derived,
        paper,
        discrepancy: derived != paper,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Contradiction,
    Consistent,
    Inconclusive,
}

/// The chain `1/2 - B_a ≤ c_S ≤ 1/3 + B_b` is unsatisfiable iff `B_a + B_b < 1/6`.
pub fn chain_verdict(b_a: f64, b_b: f64, bounds_hold: bool) -> Verdict {
    if !bounds_hold {
        Verdict::Inconclusive
    } else if b_a + b_b < 1.0 / 6.0 {
        Verdict::Contradiction
    } else {
        Verdict::Consistent
    }
}

/// One reading of the argument: `S` with cover `partner ⊔ g·S`, and the
/// disjoint translates `S`, `h·S`, `h⁻¹·S`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantTrace {
    pub set: String,
    pub translator: String,
    pub other: String,
    pub c_set: f64,
    pub c_translate: f64,
    pub c_partner: f64,
    pub c_other_translates: [f64; 2],
    /// `c_partner + c_{gS}`; equals 1 on frames supported in the realization ball.
    pub cover_sum: f64,
    /// `c_S + c_{hS} + c_{h⁻¹S}`; at most 1.
    pub disjoint_sum: f64,
    /// `1/2 - B_g` when `c_{gS} ≥ 1/2`, otherwise `None` (the partner carries the mass).
    pub lower: Option<f64>,
    /// `1/3 + (2/3) B_h`.
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PincerLine {
    pub displacement: String,
    pub lower: String,
    pub upper: String,
    pub pivot: String,
    pub holds: bool,
}

/// Exact replay of the literal constants next to the square-rooted reading.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaperTrace {
    pub epsilon: String,
    pub squared_bound: String,
    pub literal: PincerLine,
    pub square_rooted: PincerLine,
}

fn pincer(displacement: Ratio<i64>) -> PincerLine {
    let pivot = Ratio::new(5, 12);
    let lower = Ratio::new(1, 2) - displacement;
    let upper = Ratio::new(1, 3) + displacement;
    PincerLine {
        displacement: displacement.to_string(),
        lower: lower.to_string(),
        upper: upper.to_string(),
        pivot: pivot.to_string(),
        holds: pivot < lower && upper < pivot,
    }
}

pub fn paper_trace() -> PaperTrace {
    let eps = Ratio::new(1i64, 7);
    let squared = Ratio::new(4, 1) * eps * eps;
    PaperTrace {
        epsilon: eps.to_string(),
        squared_bound: squared.to_string(),
        literal: pincer(squared),
        // √(4/49) = 2/7
        square_rooted: pincer(Ratio::new(2, 1) * eps),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParadoxReport {
    pub rank: usize,
    pub support_radius: usize,
    pub c_values: BTreeMap<String, f64>,
    pub partition_sum: f64,
    pub commutator_ratios: BTreeMap<String, f64>,
    pub max_ratio: f64,
    pub bounds: BTreeMap<String, f64>,
    pub displacements: Vec<DisplacementReport>,
    pub variants: Vec<VariantTrace>,
    pub thresholds: Thresholds,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paper_mode: Option<PaperTrace>,
}

/// Runs the inequality chain on `e` with `X = {L_a, L_b}` in `F_2`.
pub fn chain_audit(e: &Frame, paper_mode: bool) -> Result<ParadoxReport> {
    let d = f2();
    if e.descriptor() != d {
        return Err(FoelnerError::DescriptorMismatch {
            left: d,
            right: e.descriptor(),
        });
    }
    let r = e.ambient_radius();
    let a = d.letter_word(A)?;
    let b = d.letter_word(B)?;
    let la = GroupAlgebraElement::unitary(&a);
    let lb = GroupAlgebraElement::unitary(&b);

    let prefix = |l: Letter| PrefixSet::begins_with(d, l, r);
    let partition = [
        PrefixSet::identity(d, r),
        prefix(A)?,
        prefix(A_INV)?,
        prefix(B)?,
        prefix(B_INV)?,
    ];
    let mass = Mass::new(e);
    let mut c_values = BTreeMap::new();
    let mut partition_sum = 0.0;
    for s in &partition {
        let c = mass.c(s)?;
        partition_sum += c;
        c_values.insert(s.to_string(), c);
    }

    let mut commutator_ratios = BTreeMap::new();
    let mut bounds = BTreeMap::new();
    let mut defect_of = BTreeMap::new();
    for u in [&la, &lb] {
        let a = compress(u, e)?;
        let (_, dist) = nearest_unitary(&a)?;
        let orth = (1.0 - a.tau_norm_sq()).max(0.0);
        commutator_ratios.insert(u.to_string(), (2.0 * orth).sqrt());
        let bnd = 2.0 * (dist * dist + orth).sqrt();
        bounds.insert(u.to_string(), bnd);
        defect_of.insert(u.single_unitary().expect("unitary").0.clone(), bnd);
    }
    let max_ratio = commutator_ratios.values().copied().fold(0.0, f64::max);
    let bound = |g: &Word| {
        defect_of[&if g.len() == 1 && g.letters()[0].inverse {
            g.inverse()
        } else {
            g.clone()
        }]
    };

    // Each variant: (set letter x, other generator h); translator g = x⁻¹.
    let variants_spec = [(A_INV, &b), (A, &b), (B_INV, &a), (B, &a)];
    let mut variants = Vec::new();
    let mut displacements = Vec::new();
    let mut bounds_hold = true;
    for (x, h) in variants_spec {
        let s = prefix(x)?;
        let g = d.letter_word(x.inverse())?;
        let partner = prefix(x.inverse())?;
        let gs = s.translated(&g)?;
        let c_set = mass.c(&s)?;
        let c_translate = mass.c(&gs)?;
        let c_partner = mass.c(&partner)?;
        let c_h = mass.c(&s.translated(h)?)?;
        let c_h_inv = mass.c(&s.translated(&h.inverse())?)?;
        let (b_g, b_h) = (bound(&g), bound(h));
        variants.push(VariantTrace {
            set: s.to_string(),
            translator: g.to_string(),
            other: h.to_string(),
            c_set,
            c_translate,
            c_partner,
            c_other_translates: [c_h, c_h_inv],
            cover_sum: c_partner + c_translate,
            disjoint_sum: c_set + c_h + c_h_inv,
            lower: (c_translate >= 0.5).then(|| 0.5 - b_g),
            upper: 1.0 / 3.0 + 2.0 / 3.0 * b_h,
        });
        for (u, certified) in [
            (GroupAlgebraElement::unitary(&g), b_g),
            (GroupAlgebraElement::unitary(h), b_h),
        ] {
            let rep = displacement_with(&mass, &u, &s, certified)?;
            bounds_hold &= rep.within;
            displacements.push(rep);
        }
    }

    let verdict = chain_verdict(
        bounds[&la.to_string()],
        bounds[&lb.to_string()],
        bounds_hold,
    );
    Ok(ParadoxReport {
        rank: e.rank(),
        support_radius: e.support_radius(),
        c_values,
        partition_sum,
        commutator_ratios,
        max_ratio,
        bounds,
        displacements,
        variants,
        thresholds: contradiction_threshold(),
        verdict,
        paper_mode: paper_mode.then(paper_trace),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameSummary {
    pub index: usize,
    pub rank: usize,
    pub max_ratio: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchAudit {
    pub rank: usize,
    pub radius: usize,
    pub seed: u64,
    pub frames: usize,
    pub min_max_ratio: f64,
    pub contradictions: usize,
    pub inconclusive: usize,
    /// Contradiction if any frame gives one, else inconclusive if any does.
    pub verdict: Verdict,
    pub per_frame: Vec<FrameSummary>,
    pub thresholds: Thresholds,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paper_mode: Option<PaperTrace>,
}

/// The `index`-th random frame of a seeded batch: stream `index` of the generator.
pub fn seeded_frame(space: &DenseSpace, rank: usize, seed: u64, index: usize) -> Result<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    random_frame(space, rank, space.dim(), &mut rng)?.to_frame(space)
}

/// `X = {L_a, L_b}` realized on ball(radius).
pub fn standard_space(radius: usize) -> Result<(DenseSpace, Vec<GroupAlgebraElement>)> {
    let d = f2();
    let xs: Vec<GroupAlgebraElement> = [A, B]
        .iter()
        .map(|&l| GroupAlgebraElement::unitary(&d.letter_word(l).expect("letter")))
        .collect();
    let (space, _) = dense_setup(&xs, radius)?;
    Ok((space, xs))
}

/// Audits `count` random frames; frame `i` uses stream `i` of the seeded generator.
pub fn audit_random_frames(
    rank: usize,
    radius: usize,
    seed: u64,
    count: usize,
    paper_mode: bool,
) -> Result<BatchAudit> {
    let (space, _) = standard_space(radius)?;
    let per_frame = (0..count)
        .into_par_iter()
        .map(|i| {
            let frame = seeded_frame(&space, rank, seed, i)?;
            let rep = chain_audit(&frame, false)?;
            Ok(FrameSummary {
                index: i,
                rank,
                max_ratio: rep.max_ratio,
                verdict: rep.verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(rank, radius, seed, per_frame, paper_mode))
}

pub fn summarize(
    rank: usize,
    radius: usize,
    seed: u64,
    per_frame: Vec<FrameSummary>,
    paper_mode: bool,
) -> BatchAudit {
    let verdict = if per_frame
        .iter()
        .any(|f| f.verdict == Verdict::Contradiction)
    {
        Verdict::Contradiction
    } else if per_frame.iter().any(|f| f.verdict == Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Consistent
    };
    BatchAudit {
        verdict,
        rank,
        radius,
        seed,
        frames: per_frame.len(),
        min_max_ratio: per_frame
            .iter()
            .map(|f| f.max_ratio)
            .fold(f64::INFINITY, f64::min),
        contradictions: per_frame
            .iter()
            .filter(|f| f.verdict == Verdict::Contradiction)
            .count(),
        inconclusive: per_frame
            .iter()
            .filter(|f| f.verdict == Verdict::Inconclusive)
            .count(),
        per_frame,
        thresholds: contradiction_threshold(),
        paper_mode: paper_mode.then(paper_trace),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connes::{build_witness_frame, WitnessConfig};
    use num_complex::Complex64;

    fn w(s: &str) -> Word {
        f2().parse_word(s).unwrap()
    }

    fn delta_frame(words: &[&str], ambient: usize) -> Frame {
        Frame::new(words.iter().map(|s| L2Vec::delta(&w(s))).collect(), ambient).unwrap()
    }

    #[test]
    fn restriction_examples() {
        let s = PrefixSet::begins_with(f2(), A_INV, 3).unwrap();
        assert_eq!(restriction_norm(&L2Vec::delta(&w("A1")), &s).unwrap(), 1.0);
        assert_eq!(restriction_norm(&L2Vec::delta(&w("e")), &s).unwrap(), 0.0);
        let h = 0.5f64.sqrt();
        let eta = L2Vec::from_terms(
            f2(),
            [
                (w("A1"), Complex64::new(h, 0.0)),
                (w("a2"), Complex64::new(h, 0.0)),
            ],
        )
        .unwrap();
        assert!((restriction_norm(&eta, &s).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            restriction_norm(&L2Vec::delta(&w("A1.A1.A1.A1")), &s),
            Err(FoelnerError::RealizationRadius { .. })
        ));
    }

    #[test]
    fn restriction_splits_with_complement() {
        let s = PrefixSet::begins_with(f2(), B, 4)
            .unwrap()
            .translated(&w("a1"))
            .unwrap();
        let eta = L2Vec::from_terms(
            f2(),
            f2().ball(2)
                .elements()
                .iter()
                .enumerate()
                .map(|(i, g)| (g.clone(), Complex64::new(1.0 + i as f64, -0.5))),
        )
        .unwrap();
        let total =
            restriction_norm(&eta, &s).unwrap() + restriction_norm(&eta, &s.complement()).unwrap();
        assert!((total - eta.norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn c_value_examples() {
        let s = PrefixSet::begins_with(f2(), A_INV, 3).unwrap();
        let e = delta_frame(&["e"], 2);
        assert_eq!(c_value(&e, &s).unwrap(), 0.0);
        assert_eq!(c_value(&e, &s.translated(&w("a1")).unwrap()).unwrap(), 1.0);
        let e2 = delta_frame(&["A1", "a2"], 2);
        assert_eq!(c_value(&e2, &s).unwrap(), 0.5);
    }

    #[test]
    fn labels() {
        let s = PrefixSet::begins_with(f2(), A_INV, 3).unwrap();
        assert_eq!(s.to_string(), "S_A1");
        assert_eq!(s.translated(&w("a2")).unwrap().to_string(), "a2·S_A1");
        assert_eq!(
            PrefixSet::identity(f2(), 1).complement().to_string(),
            "complement({e})"
        );
    }

    #[test]
    fn set_identities_at_six() {
        let r = verify_set_identities(6).unwrap();
        assert!(r.disjoint && r.corrected_cover && r.realization_agrees);
        assert!(r.literal_uncovered_is_s_a);
        // Words of length 1..=5 beginning with a: 3^0 + ... + 3^4.
        assert_eq!(r.literal_uncovered, 121);
        assert!(verify_set_identities(1).is_err());
    }

    #[test]
    fn displacement_examples() {
        let s = PrefixSet::begins_with(f2(), A_INV, 2).unwrap();
        let e = delta_frame(&["e"], 2);
        let le = GroupAlgebraElement::unitary(&w("e"));
        let rep = displacement_bound(&e, &le, &s).unwrap();
        assert_eq!((rep.measured, rep.certified), (0.0, 0.0));

        let la = GroupAlgebraElement::unitary(&w("a1"));
        let rep = displacement_bound(&e, &la, &s).unwrap();
        assert_eq!(rep.measured, 1.0);
        // A = [[0]], W = [[1]]: ‖Ue - We‖² = (1 - 0) + 1.
        assert!((rep.certified - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!(rep.within);
    }

    /// `‖Ue - We‖_τ` from the vectors themselves.
    fn unitary_defect_direct(u: &GroupAlgebraElement, e: &Frame) -> f64 {
        let (wm, _) = nearest_unitary(&compress(u, e).unwrap()).unwrap();
        let mut total = 0.0;
        for (p, col) in e.columns().iter().enumerate() {
            let mut diff = u.apply(col, e.ambient_radius()).unwrap();
            for (q, xq) in e.columns().iter().enumerate() {
                diff.axpy(-wm[(q, p)], xq).unwrap();
            }
            total += diff.norm_sq();
        }
        (total / e.rank() as f64).sqrt()
    }

    #[test]
    fn unitary_defect_matches_direct() {
        let witness = build_witness_frame(&WitnessConfig::new(2, 5, 3)).unwrap();
        let (space, _) = standard_space(4).unwrap();
        let random = seeded_frame(&space, 6, 3, 0).unwrap();
        for frame in [witness, random] {
            for g in ["a1", "a2", "A1"] {
                let u = GroupAlgebraElement::unitary(&w(g));
                let fast = unitary_defect(&u, &frame).unwrap();
                assert!((fast - unitary_defect_direct(&u, &frame)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn audit_agrees_with_public_pieces() {
        let (space, _) = standard_space(3).unwrap();
        let frame = seeded_frame(&space, 4, 11, 2).unwrap();
        let rep = chain_audit(&frame, false).unwrap();
        let s = PrefixSet::begins_with(f2(), A_INV, 3).unwrap();
        assert!((rep.c_values["S_A1"] - c_value(&frame, &s).unwrap()).abs() < 1e-15);
        let la = GroupAlgebraElement::unitary(&w("a1"));
        let d = displacement_bound(&frame, &la, &s).unwrap();
        assert!((d.measured - rep.displacements[0].measured).abs() < 1e-15);
        assert!((d.certified - rep.bounds["L_a1"]).abs() < 1e-15);
        let ratio = crate::l2::commutator_ratio(&la, &frame).unwrap();
        assert!((ratio.direct - rep.commutator_ratios["L_a1"]).abs() < 1e-12);
    }

    #[test]
    fn witness_frame_is_consistent() {
        let cfg = WitnessConfig::new(2, 8, 6);
        let frame = build_witness_frame(&cfg).unwrap();
        let rep = chain_audit(&frame, true).unwrap();
        assert_eq!(rep.verdict, Verdict::Consistent);
        assert!((rep.partition_sum - 1.0).abs() < 1e-12);
        assert!(rep.displacements.iter().all(|d| d.within));
        for v in &rep.variants {
            assert!((v.cover_sum - 1.0).abs() < 1e-12);
            assert!(v.disjoint_sum <= 1.0 + 1e-12);
        }
        assert!(rep.paper_mode.is_some());
    }

    #[test]
    fn thresholds() {
        let t = contradiction_threshold();
        assert!((t.derived - 0.058926).abs() < 1e-6);
        assert!(t.derived < t.paper);
        assert!(t.discrepancy);
    }

    #[test]
    fn paper_replay() {
        let p = paper_trace();
        assert_eq!(p.squared_bound, "4/49");
        assert!(p.literal.holds);
        assert_eq!(
            (p.literal.lower.as_str(), p.literal.upper.as_str()),
            ("41/98", "61/147")
        );
        assert!(!p.square_rooted.holds);
    }

    #[test]
    fn verdict_logic() {
        let t = contradiction_threshold().derived;
        // Bounds produced by ratios just under the derived threshold.
        let b = 2f64.sqrt() * t * 0.99;
        assert_eq!(chain_verdict(b, b, true), Verdict::Contradiction);
        assert_eq!(chain_verdict(0.1, 0.1, true), Verdict::Consistent);
        assert_eq!(chain_verdict(0.0, 0.0, false), Verdict::Inconclusive);
    }

    #[test]
    fn batch_is_deterministic() {
        let a = audit_random_frames(3, 3, 5, 6, false).unwrap();
        let b = audit_random_frames(3, 3, 5, 6, false).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.contradictions, 0);
        assert_eq!(a.inconclusive, 0);
    }
}
