//! Finite-scale Connes-Følner quantities: the property `Q(X, ε)`, the explicit
//! witness frames for `L(F_n)` and a stochastic search over projections.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FoelnerError, Result};
use crate::group::{words_beginning_with, GroupDescriptor, Letter, Word};
use crate::l2::{
    commutator_ratio, trace_defect, DenseFrame, DenseSpace, DenseUnitary, Frame,
    GroupAlgebraElement, L2Vec,
};

/// Agreement required between an evaluated certificate and its closed form.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitaryRecord {
    pub label: String,
    pub ratio: f64,
    pub ratio_direct: f64,
    pub defect: f64,
}

impl UnitaryRecord {
    pub fn worst(&self) -> f64 {
        self.ratio.max(self.defect)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QReport {
    pub per_unitary: Vec<UnitaryRecord>,
    pub epsilon: f64,
    /// `max_U max(ratio, defect)`; the smallest ε for which this frame witnesses `Q(X, ε)`.
    pub objective: f64,
    pub verdict: bool,
}

fn require_unitaries(xs: &[GroupAlgebraElement]) -> Result<()> {
    if xs.is_empty() {
        return Err(FoelnerError::EmptySet("unitary list"));
    }
    if xs.iter().any(|u| !u.is_single_unitary()) {
        return Err(FoelnerError::NotUnitary);
    }
    Ok(())
}

pub fn evaluate_q(xs: &[GroupAlgebraElement], e: &Frame, epsilon: f64) -> Result<QReport> {
    require_unitaries(xs)?;
    let per_unitary = xs
        .iter()
        .map(|u| {
            let r = commutator_ratio(u, e)?;
            Ok(UnitaryRecord {
                label: u.to_string(),
                ratio: r.closed_form,
                ratio_direct: r.direct,
                defect: trace_defect(u, e)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let objective = per_unitary
        .iter()
        .map(UnitaryRecord::worst)
        .fold(0.0, f64::max);
    Ok(QReport {
        per_unitary,
        epsilon,
        objective,
        verdict: objective <= epsilon,
    })
}

pub fn q_objective(xs: &[GroupAlgebraElement], e: &Frame) -> Result<f64> {
    Ok(evaluate_q(xs, e, f64::INFINITY)?.objective)
}

/// `L_{a_1}, ..., L_{a_n}`.
pub fn standard_unitaries(desc: GroupDescriptor) -> Vec<GroupAlgebraElement> {
    desc.standard_generators()
        .iter()
        .map(GroupAlgebraElement::unitary)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WitnessConfig {
    pub n: u32,
    pub k: usize,
    pub depth: usize,
    /// Defaults to the smallest admissible radius.
    pub ambient_radius: Option<usize>,
}

impl WitnessConfig {
    pub fn new(n: u32, k: usize, depth: usize) -> Self {
        Self {
            n,
            k,
            depth,
            ambient_radius: None,
        }
    }

    fn validate(&self) -> Result<GroupDescriptor> {
        if self.n < 2 {
            return Err(FoelnerError::InvalidConfig(format!(
                "witness needs free rank n >= 2, got {}",
                self.n
            )));
        }
        if self.k == 0 || self.depth == 0 {
            return Err(FoelnerError::InvalidConfig(
                "witness needs k >= 1 and depth >= 1".into(),
            ));
        }
        GroupDescriptor::free(self.n)
    }
}

/// The letter `a_w^{-1}` that words in the `i`-th family begin with, where `w`
/// is the least positive integer congruent to `i - 1` mod `n` (`i` is 1-based).
pub fn family_letter(n: u32, i: u32) -> Letter {
    let w = if i == 1 { n } else { i - 1 };
    Letter::new(w, true)
}

/// Shortlex enumerations `g_1^{(i)}, ..., g_T^{(i)}` for `i = 1..n`.
pub fn shortlex_enumerations(n: u32, depth: usize) -> Result<Vec<Vec<Word>>> {
    let desc = GroupDescriptor::free(n)?;
    (1..=n)
        .map(|i| words_beginning_with(desc, family_letter(n, i), depth))
        .collect()
}

pub fn build_witness_frame(cfg: &WitnessConfig) -> Result<Frame> {
    cfg.validate()?;
    build_witness_frame_with(cfg, &shortlex_enumerations(cfg.n, cfg.depth)?)
}

/// Witness frame for arbitrary enumerations: `enumerations[i-1]` lists distinct
/// reduced words beginning with `family_letter(n, i)`, at least `depth` of them.
pub fn build_witness_frame_with(cfg: &WitnessConfig, enumerations: &[Vec<Word>]) -> Result<Frame> {
    let desc = cfg.validate()?;
    let n = cfg.n;
    let t_max = cfg.depth;
    if enumerations.len() != n as usize {
        return Err(FoelnerError::InvalidConfig(format!(
            "expected {n} enumerations, got {}",
            enumerations.len()
        )));
    }
    for (idx, list) in enumerations.iter().enumerate() {
        let letter = family_letter(n, idx as u32 + 1);
        let head = list.get(..t_max).ok_or_else(|| {
            FoelnerError::InvalidConfig(format!(
                "enumeration {} shorter than depth {t_max}",
                idx + 1
            ))
        })?;
        let distinct: BTreeSet<&Word> = head.iter().collect();
        if distinct.len() != t_max {
            return Err(FoelnerError::InvalidConfig(format!(
                "enumeration {} repeats a word",
                idx + 1
            )));
        }
        for g in head {
            if g.descriptor() != desc || !g.begins_with(letter)? {
                return Err(FoelnerError::InvalidConfig(format!(
                    "{g} does not begin with {letter}"
                )));
            }
        }
    }

    let longest = enumerations
        .iter()
        .flat_map(|l| l[..t_max].iter().map(Word::len))
        .max()
        .unwrap_or(0);
    let support = cfg.k + longest;
    let needed = support + 2;
    let ambient = cfg.ambient_radius.unwrap_or(needed);
    if ambient < needed {
        return Err(FoelnerError::Headroom {
            support,
            operator: 2,
            ambient,
        });
    }

    let base = (n + 1) as f64;
    let raw_norm_sq = 1.0 - base.powi(-(t_max as i32));
    let scale = raw_norm_sq.sqrt();
    let gens = desc.standard_generators();
    let mut columns = Vec::with_capacity(cfg.k);
    for m in 1..=cfg.k {
        let mut terms = Vec::with_capacity(n as usize * t_max);
        for (i, a_i) in gens.iter().enumerate() {
            let mut power = desc.identity();
            for _ in 0..m {
                power = power.multiply(a_i)?;
            }
            for (t, g) in enumerations[i][..t_max].iter().enumerate() {
                let coeff = base.powf(-((t + 1) as f64) / 2.0) / scale;
                terms.push((power.multiply(g)?, Complex64::new(coeff, 0.0)));
            }
        }
        columns.push(L2Vec::from_terms(desc, terms)?);
    }
    Frame::new(columns, ambient)
}

/// `√2 · √(1 - (k-1)/(k n²))`.
pub fn formula_epsilon(n: u32, k: usize) -> f64 {
    let n2 = (n as f64) * (n as f64);
    let k = k as f64;
    (2.0 * (1.0 - (k - 1.0) / (k * n2))).sqrt()
}

/// `√(2 - 2/n²)`, the infimum of `formula_epsilon(n, ·)`.
pub fn limit_epsilon(n: u32) -> f64 {
    let n2 = (n as f64) * (n as f64);
    (2.0 - 2.0 / n2).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperBoundCertificate {
    pub n: u32,
    pub k: usize,
    pub depth: usize,
    pub ambient_radius: usize,
    pub certified_epsilon: f64,
    pub formula_epsilon: f64,
    pub limit_epsilon: f64,
    pub frame_fingerprint: String,
    pub per_unitary: Vec<UnitaryRecord>,
}

/// Evaluates `Q` on the witness frame over the standard generators and checks the
/// result against the closed form.
pub fn witness_certificate(cfg: &WitnessConfig) -> Result<UpperBoundCertificate> {
    let frame = build_witness_frame(cfg)?;
    let xs = standard_unitaries(frame.descriptor());
    let report = evaluate_q(&xs, &frame, f64::INFINITY)?;
    let formula = formula_epsilon(cfg.n, cfg.k);
    let certified = report.objective;
    let direct_gap = report
        .per_unitary
        .iter()
        .map(|r| (r.ratio - r.ratio_direct).abs())
        .fold(0.0, f64::max);
    if !((certified - formula).abs() <= CERTIFICATE_TOLERANCE)
        || !(direct_gap <= CERTIFICATE_TOLERANCE)
    {
        return Err(FoelnerError::CertificateMismatch {
            evaluated: certified,
            formula,
        });
    }
    Ok(UpperBoundCertificate {
        n: cfg.n,
        k: cfg.k,
        depth: cfg.depth,
        ambient_radius: frame.ambient_radius(),
        certified_epsilon: certified,
        formula_epsilon: formula,
        limit_epsilon: limit_epsilon(cfg.n),
        frame_fingerprint: frame.fingerprint(),
        per_unitary: report.per_unitary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum EstimateMode {
    /// Build and evaluate a witness frame for every rank.
    Frame { depth: usize },
    /// Closed form only.
    Formula,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: usize,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperEstimate {
    pub n: u32,
    pub k_max: usize,
    pub mode: EstimateMode,
    pub best_k: usize,
    pub best_epsilon: f64,
    pub limit_epsilon: f64,
    pub sweep: Vec<SweepRow>,
}

pub fn formula_sweep(n: u32, k_max: usize) -> Vec<SweepRow> {
    (1..=k_max)
        .map(|k| SweepRow {
            k,
            epsilon: formula_epsilon(n, k),
        })
        .collect()
}

/// Smallest certified ε over ranks `1..=k_max`.
pub fn foelner_upper_estimate(n: u32, k_max: usize, mode: EstimateMode) -> Result<UpperEstimate> {
    if k_max == 0 {
        return Err(FoelnerError::InvalidConfig(
            "k_max must be at least 1".into(),
        ));
    }
    let sweep = match mode {
        EstimateMode::Formula => {
            WitnessConfig::new(n, 1, 1).validate()?;
            formula_sweep(n, k_max)
        }
        EstimateMode::Frame { depth } => (1..=k_max)
            .into_par_iter()
            .map(|k| {
                let cert = witness_certificate(&WitnessConfig::new(n, k, depth))?;
                Ok(SweepRow {
                    k,
                    epsilon: cert.certified_epsilon,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let best = sweep
        .iter()
        .copied()
        .reduce(|a, b| if b.epsilon < a.epsilon { b } else { a })
        .expect("k_max >= 1");
    Ok(UpperEstimate {
        n,
        k_max,
        mode,
        best_k: best.k,
        best_epsilon: best.epsilon,
        limit_epsilon: limit_epsilon(n),
        sweep,
    })
}

/// Complex Gaussian vector of length `dim` with `nnz` randomly placed entries
/// (positions may repeat). `nnz >= dim` gives a dense vector.
pub fn gaussian_vector<R: Rng>(rng: &mut R, dim: usize, nnz: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::default(); dim];
    let draw = |rng: &mut R| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    };
    if nnz >= dim {
        for z in v.iter_mut() {
            *z = draw(rng);
        }
    } else {
        for _ in 0..nnz {
            let i = rng.random_range(0..dim);
            v[i] += draw(rng);
        }
    }
    v
}

/// Orthonormalized complex Gaussian columns with `nnz` entries each.
pub fn random_frame<R: Rng>(
    space: &DenseSpace,
    k: usize,
    nnz: usize,
    rng: &mut R,
) -> Result<DenseFrame> {
    if k == 0 || k > space.dim() {
        return Err(FoelnerError::InvalidConfig(format!(
            "rank {k} outside 1..={}",
            space.dim()
        )));
    }
    for _ in 0..100 {
        let raw = (0..k)
            .map(|_| gaussian_vector(rng, space.dim(), nnz))
            .collect();
        match DenseFrame::orthonormalize(space, raw) {
            Err(FoelnerError::RankDeficient { .. }) => continue,
            other => return other,
        }
    }
    Err(FoelnerError::InvalidConfig(format!(
        "could not draw {k} independent columns with {nnz} entries"
    )))
}

/// Dense realizations of `xs` on a space whose columns fit under every operator.
pub fn dense_setup(
    xs: &[GroupAlgebraElement],
    ambient_radius: usize,
) -> Result<(DenseSpace, Vec<DenseUnitary>)> {
    require_unitaries(xs)?;
    let desc = xs[0].descriptor();
    let reach = xs
        .iter()
        .map(GroupAlgebraElement::operator_radius)
        .max()
        .unwrap_or(0)
        .max(1);
    if ambient_radius < reach {
        return Err(FoelnerError::Headroom {
            support: 0,
            operator: reach,
            ambient: ambient_radius,
        });
    }
    let space = DenseSpace::new(desc, ambient_radius, ambient_radius - reach)?;
    let dense = xs
        .iter()
        .map(|u| space.unitary(u))
        .collect::<Result<Vec<_>>>()?;
    Ok((space, dense))
}

/// A seeded list of random frames of one rank.
pub fn candidate_pool(
    space: &DenseSpace,
    k: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<DenseFrame>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_frame(space, k, space.dim(), &mut rng))
        .collect()
}

/// Best objective over a pool: an achieved value, hence an upper bound for the
/// class the pool was drawn from.
pub fn pool_estimate(pool: &[DenseFrame], us: &[DenseUnitary]) -> f64 {
    pool.iter()
        .map(|f| f.objective(us))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionSearchConfig {
    pub rank: usize,
    pub radius: usize,
    pub seed: u64,
    pub iterations: usize,
    /// Perturbation scale at the first and last iteration (geometric in between).
    pub initial_step: f64,
    pub final_step: f64,
    /// Nonzero entries per perturbation.
    pub step_support: usize,
    pub initial_temperature: f64,
    pub final_temperature: f64,
    #[serde(serialize_with = "labels")]
    pub unitaries: Vec<GroupAlgebraElement>,
}

fn labels<S: serde::Serializer>(
    xs: &[GroupAlgebraElement],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|u| u.to_string()))
}

impl ProjectionSearchConfig {
    pub fn new(
        unitaries: Vec<GroupAlgebraElement>,
        rank: usize,
        radius: usize,
        seed: u64,
        iterations: usize,
    ) -> Self {
        Self {
            rank,
            radius,
            seed,
            iterations,
            initial_step: 0.5,
            final_step: 0.01,
            step_support: 4,
            initial_temperature: 0.002,
            final_temperature: 1e-6,
            unitaries,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.radius < 2 || self.rank == 0 {
            return Err(FoelnerError::InvalidConfig(
                "projection search needs radius >= 2 and rank >= 1".into(),
            ));
        }
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !(ok(self.initial_step)
            && ok(self.final_step)
            && ok(self.initial_temperature)
            && ok(self.final_temperature))
            || self.step_support == 0
        {
            return Err(FoelnerError::InvalidConfig(
                "step and temperature parameters must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchStep {
    pub iteration: usize,
    pub objective: f64,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealResult {
    pub frame: Frame,
    pub report: QReport,
    /// Iteration 0 and every strict improvement of the best objective.
    pub history: Vec<SearchStep>,
    pub accepted: usize,
    pub rejected_rank: usize,
}

fn geometric(start: f64, end: f64, t: usize, total: usize) -> f64 {
    if total <= 1 {
        return start;
    }
    start * (end / start).powf(t as f64 / (total - 1) as f64)
}

/// Simulated annealing over rank-`k` frames supported in the ball of radius
/// `radius - 1`.
pub fn anneal_projection(cfg: &ProjectionSearchConfig) -> Result<AnnealResult> {
    cfg.validate()?;
    let (space, us) = dense_setup(&cfg.unitaries, cfg.radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current = random_frame(&space, cfg.rank, space.dim(), &mut rng)?;
    let mut current_obj = current.objective(&us);
    let mut best = current.clone();
    let mut best_obj = current_obj;
    let mut history = vec![SearchStep {
        iteration: 0,
        objective: current_obj,
        best: best_obj,
    }];
    let mut accepted = 0;
    let mut rejected_rank = 0;

    for it in 1..=cfg.iterations {
        if best_obj == 0.0 {
            break;
        }
        let step = geometric(cfg.initial_step, cfg.final_step, it - 1, cfg.iterations);
        let temp = geometric(
            cfg.initial_temperature,
            cfg.final_temperature,
            it - 1,
            cfg.iterations,
        );
        let j = rng.random_range(0..cfg.rank);
        let noise = gaussian_vector(&mut rng, space.dim(), cfg.step_support);
        let proposal: Vec<Complex64> = current
            .column(j)
            .iter()
            .zip(&noise)
            .map(|(x, d)| x + d * step)
            .collect();
        let mut candidate = current.clone();
        let u: f64 = rng.random();
        if candidate.replace_column(j, &proposal).is_err() {
            rejected_rank += 1;
            continue;
        }
        let obj = candidate.objective(&us);
        let delta = obj - current_obj;
        if delta <= 0.0 || u < (-delta / temp).exp() {
            current = candidate;
            current_obj = obj;
            accepted += 1;
            if obj < best_obj {
                best_obj = obj;
                best = current.clone();
                history.push(SearchStep {
                    iteration: it,
                    objective: obj,
                    best: best_obj,
                });
            }
        }
    }

    let frame = best.to_frame(&space)?;
    let objective = q_objective(&cfg.unitaries, &frame)?;
    let report = evaluate_q(&cfg.unitaries, &frame, objective)?;
    Ok(AnnealResult {
        frame,
        report,
        history,
        accepted,
        rejected_rank,
    })
}
