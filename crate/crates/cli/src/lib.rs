//! Report-producing entry points behind the `foelner` binary.
//!
//! Every command returns a [`RunReport`] whose `results` field depends only on the
//! configuration, so reports can be diffed across runs.

use std::time::Instant;

use foelner_core::connes::{
    anneal_projection, dense_setup, foelner_upper_estimate, random_frame, standard_unitaries,
    witness_certificate, EstimateMode, ProjectionSearchConfig, WitnessConfig,
};
use foelner_core::group::GroupDescriptor;
use foelner_core::l2::{commutator_ratio, trace_defect, GroupAlgebraElement};
use foelner_core::paradox::{
    audit_random_frames, chain_audit, seeded_frame, standard_space, verify_set_identities,
};
use foelner_core::sets::{
    ball_family_ratios, exhaustive_min_ratio, free_ball_ratio, free_group_floor,
    local_search_min_ratio, GeneratingSet, LocalSearchConfig,
};
use foelner_core::FoelnerError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Agreement required between the two commutator-ratio evaluations.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] FoelnerError),
    #[error("`{0}` is stochastic and needs an explicit --seed")]
    MissingSeed(&'static str),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 3 for numerical non-convergence, 2 for every other precondition failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GroupMode {
    Exhaustive,
    Balls,
    Search,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    Group {
        group: String,
        generators: Option<String>,
        radius: usize,
        mode: GroupMode,
        iterations: usize,
        seed: Option<u64>,
    },
    Witness {
        n: u32,
        k: usize,
        depth: usize,
        formula_only: bool,
    },
    Scan {
        n: u32,
        rank: usize,
        radius: usize,
        iterations: usize,
        seed: Option<u64>,
    },
    Audit {
        rank: usize,
        radius: usize,
        seed: Option<u64>,
        frames: usize,
    },
    IdentityCheck {
        trials: usize,
        seed: Option<u64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Group { .. } => "group",
            Command::Witness { .. } => "witness",
            Command::Scan { .. } => "scan",
            Command::Audit { .. } => "audit",
            Command::IdentityCheck { .. } => "identity-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    pub format: Format,
    pub paper_mode: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub results: Value,
    pub wall_time_ms: f64,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub table: Option<Table>,
}

impl RunReport {
    /// The configuration-determined part of the report, serialized.
    pub fn payload(&self) -> String {
        serde_json::to_string(&self.results).expect("results serialize")
    }

    pub fn render(&self) -> CliResult<String> {
        match self.config.format {
            Format::Json => {
                Ok(serde_json::to_string_pretty(self).expect("report serializes") + "\n")
            }
            Format::Csv => {
                let table = self.table.as_ref().ok_or_else(|| {
                    CliError::Invalid(format!(
                        "`{}` has no tabular output; use --format json",
                        self.config.command.name()
                    ))
                })?;
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&table.headers).map_err(csv_err)?;
                for row in &table.rows {
                    w.write_record(row).map_err(csv_err)?;
                }
                Ok(String::from_utf8(
                    w.into_inner()
                        .map_err(|e| CliError::Invalid(e.to_string()))?,
                )
                .expect("csv is utf-8"))
            }
        }
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Invalid(e.to_string())
}

struct Output {
    results: Value,
    table: Option<Table>,
    warnings: Vec<String>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn require_seed(seed: Option<u64>, command: &'static str) -> CliResult<u64> {
    seed.ok_or(CliError::MissingSeed(command))
}

pub fn run(config: RunConfig) -> CliResult<RunReport> {
    let start = Instant::now();
    let out = match &config.command {
        Command::Group {
            group,
            generators,
            radius,
            mode,
            iterations,
            seed,
        } => run_group(
            group,
            generators.as_deref(),
            *radius,
            *mode,
            *iterations,
            *seed,
        )?,
        Command::Witness {
            n,
            k,
            depth,
            formula_only,
        } => run_witness(*n, *k, *depth, *formula_only)?,
        Command::Scan {
            n,
            rank,
            radius,
            iterations,
            seed,
        } => run_scan(
            *n,
            *rank,
            *radius,
            *iterations,
            require_seed(*seed, "scan")?,
        )?,
        Command::Audit {
            rank,
            radius,
            seed,
            frames,
        } => run_audit(
            *rank,
            *radius,
            require_seed(*seed, "audit")?,
            *frames,
            config.paper_mode,
        )?,
        Command::IdentityCheck { trials, seed } => {
            let report = identity_check(*trials, require_seed(*seed, "identity-check")?)?;
            Output {
                results: to_value(&report),
                table: None,
                warnings: Vec::new(),
            }
        }
    };
    Ok(RunReport {
        tool: "foelner",
        version: VERSION,
        config,
        results: out.results,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        warnings: out.warnings,
        table: out.table,
    })
}

fn run_group(
    group: &str,
    generators: Option<&str>,
    radius: usize,
    mode: GroupMode,
    iterations: usize,
    seed: Option<u64>,
) -> CliResult<Output> {
    let desc: GroupDescriptor = group.parse()?;
    let x = match generators {
        Some(text) => GeneratingSet::parse(desc, text)?,
        None => GeneratingSet::standard(desc),
    };
    let gens: Vec<String> = x.generators().iter().map(|g| g.to_string()).collect();
    let mut warnings = Vec::new();
    let header = json!({ "group": desc.to_string(), "generators": gens, "mode": mode });
    let mut results = header.as_object().cloned().expect("object");
    let mut table = None;
    match mode {
        GroupMode::Exhaustive => {
            let (set, report) = exhaustive_min_ratio(desc, &x, radius)?;
            results.insert("radius".into(), json!(radius));
            results.insert(
                "candidates".into(),
                json!((1u64 << desc.ball_size(radius)) - 1),
            );
            results.insert("best_set".into(), to_value(&set));
            merge(&mut results, to_value(&report));
            results.insert("history".into(), json!([]));
        }
        GroupMode::Balls => {
            let rows = ball_family_ratios(desc, &x, radius)?;
            let mut t = Table::new(&[
                "radius",
                "set_size",
                "boundary_size",
                "ratio_rational",
                "ratio_float",
                "closed_form",
            ]);
            let mut history = Vec::new();
            for (i, rep) in rows.iter().enumerate() {
                let r = i + 1;
                let closed = if desc.is_free() && desc.rank >= 2 && generators.is_none() {
                    Some(free_ball_ratio(desc.rank, r as u32)?.to_string())
                } else {
                    None
                };
                t.push(vec![
                    r.to_string(),
                    rep.set_size.to_string(),
                    rep.boundary_size.to_string(),
                    rep.ratio.to_string(),
                    format!("{}", rep.ratio_f64()),
                    closed.clone().unwrap_or_default(),
                ]);
                let mut row = to_value(rep);
                row["radius"] = json!(r);
                if let Some(c) = closed {
                    row["closed_form"] = json!(c);
                }
                history.push(row);
            }
            let best = rows
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.ratio.cmp(&b.1.ratio).then(a.0.cmp(&b.0)))
                .expect("radius >= 1");
            results.insert("best_radius".into(), json!(best.0 + 1));
            results.insert("best_set".into(), Value::Null);
            merge(&mut results, to_value(best.1));
            if desc.is_free() && desc.rank >= 2 {
                results.insert(
                    "floor".into(),
                    json!(free_group_floor(desc.rank).to_string()),
                );
            }
            results.insert("history".into(), Value::Array(history));
            table = Some(t);
        }
        GroupMode::Search => {
            let seed = require_seed(seed, "group --mode search")?;
            let cfg = LocalSearchConfig::new(radius, seed, iterations);
            let res = local_search_min_ratio(desc, &x, &cfg)?;
            let mut t = Table::new(&[
                "iteration",
                "move",
                "element",
                "set_size",
                "boundary_size",
                "ratio_rational",
                "ratio_float",
            ]);
            for m in &res.history {
                let mv = to_value(&m.kind);
                t.push(vec![
                    m.iteration.to_string(),
                    mv.as_str()
                        .map(str::to_string)
                        .unwrap_or_else(|| mv.to_string()),
                    m.element
                        .as_ref()
                        .map(|w| w.to_string())
                        .unwrap_or_default(),
                    m.report.set_size.to_string(),
                    m.report.boundary_size.to_string(),
                    m.report.ratio.to_string(),
                    format!("{}", m.report.ratio_f64()),
                ]);
            }
            results.insert("search".into(), to_value(&cfg));
            results.insert("best_set".into(), to_value(&res.best_set));
            merge(&mut results, to_value(&res.best));
            results.insert("initial".into(), to_value(&res.initial));
            results.insert("history".into(), to_value(&res.history));
            warnings.push(
                "search results are achieved values (upper bounds), not certified minima".into(),
            );
            table = Some(t);
        }
    }
    Ok(Output {
        results: Value::Object(results),
        table,
        warnings,
    })
}

fn merge(into: &mut serde_json::Map<String, Value>, from: Value) {
    if let Value::Object(m) = from {
        into.extend(m);
    }
}

fn run_witness(n: u32, k: usize, depth: usize, formula_only: bool) -> CliResult<Output> {
    let mode = if formula_only {
        EstimateMode::Formula
    } else {
        EstimateMode::Frame { depth }
    };
    let estimate = foelner_upper_estimate(n, k, mode)?;
    let mut t = Table::new(&["k", "epsilon"]);
    for row in &estimate.sweep {
        t.push(vec![row.k.to_string(), format!("{}", row.epsilon)]);
    }
    let results = if formula_only {
        json!({
            "n": n,
            "k": k,
            "mode": "formula",
            "certified_epsilon": Value::Null,
            "formula_epsilon": estimate.sweep.last().expect("k >= 1").epsilon,
            "limit_epsilon": estimate.limit_epsilon,
            "sweep": estimate.sweep,
        })
    } else {
        let cert = witness_certificate(&WitnessConfig::new(n, k, depth))?;
        let mut v = to_value(&cert);
        v["mode"] = json!("frame");
        v["sweep"] = to_value(&estimate.sweep);
        v
    };
    Ok(Output {
        results,
        table: Some(t),
        warnings: Vec::new(),
    })
}

fn run_scan(n: u32, rank: usize, radius: usize, iterations: usize, seed: u64) -> CliResult<Output> {
    let desc = GroupDescriptor::free(n)?;
    let cfg = ProjectionSearchConfig::new(standard_unitaries(desc), rank, radius, seed, iterations);
    let res = anneal_projection(&cfg)?;
    let mut t = Table::new(&["iteration", "objective", "best"]);
    for s in &res.history {
        t.push(vec![
            s.iteration.to_string(),
            format!("{}", s.objective),
            format!("{}", s.best),
        ]);
    }
    let results = json!({
        "search": cfg,
        "per_unitary": res.report.per_unitary,
        "objective": res.report.objective,
        "frame_fingerprint": res.frame.fingerprint(),
        "accepted": res.accepted,
        "rejected_rank": res.rejected_rank,
        "history": res.history,
        "frame": res.frame,
    });
    Ok(Output {
        results,
        table: Some(t),
        warnings: vec![format!(
            "objective {} is achieved on rank {rank}, support radius {} frames; it bounds the class from above only",
            res.report.objective,
            radius - 1
        )],
    })
}

fn run_audit(
    rank: usize,
    radius: usize,
    seed: u64,
    frames: usize,
    paper_mode: bool,
) -> CliResult<Output> {
    if frames == 0 {
        return Err(CliError::Invalid("--frames must be at least 1".into()));
    }
    let batch = audit_random_frames(rank, radius, seed, frames, paper_mode)?;
    let (space, _) = standard_space(radius)?;
    let first = chain_audit(&seeded_frame(&space, rank, seed, 0)?, paper_mode)?;
    let identities = verify_set_identities(radius.max(2))?;
    let mut t = Table::new(&["index", "rank", "max_ratio", "verdict"]);
    for f in &batch.per_frame {
        t.push(vec![
            f.index.to_string(),
            f.rank.to_string(),
            format!("{}", f.max_ratio),
            to_value(&f.verdict)
                .as_str()
                .unwrap_or_default()
                .to_string(),
        ]);
    }
    let mut warnings = Vec::new();
    if batch.thresholds.discrepancy {
        warnings.push(format!(
            "nominal threshold {:.6} exceeds the re-derived {:.6}; verdicts use the re-derived value",
            batch.thresholds.paper, batch.thresholds.derived
        ));
    }
    let results = json!({
        "c_values": first.c_values,
        "displacement": first.displacements,
        "thresholds": batch.thresholds,
        "verdict": batch.verdict,
        "set_identities": identities,
        "first_frame": first,
        "batch": batch,
    });
    Ok(Output {
        results,
        table: Some(t),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheckReport {
    pub trials: usize,
    pub seed: u64,
    /// Frame-unitary pairs evaluated.
    pub checks: usize,
    /// Trials whose three pairs all agree within the tolerance.
    pub agreements: usize,
    pub tolerance: f64,
    pub max_discrepancy: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub max_defect: f64,
    pub in_range: bool,
}

/// Random frames (rank ≤ 8, ambient radius 2..=5) against `L_a`, `L_b`, `L_{a⁻¹}`:
/// compares the direct and closed-form commutator ratios.
pub fn identity_check(trials: usize, seed: u64) -> CliResult<IdentityCheckReport> {
    let d = GroupDescriptor::free(2)?;
    let us: Vec<GroupAlgebraElement> = ["a1", "a2", "A1"]
        .iter()
        .map(|s| GroupAlgebraElement::unitary(&d.parse_word(s).expect("word")))
        .collect();
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|i| -> CliResult<Vec<(f64, f64, f64)>> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let radius = rng.random_range(2..=5);
            let (space, _) = dense_setup(&us, radius)?;
            let k = rng.random_range(1..=8usize.min(space.dim()));
            let nnz = rng.random_range(1..=space.dim());
            let frame = random_frame(&space, k, nnz, &mut rng)?.to_frame(&space)?;
            us.iter()
                .map(|u| {
                    let r = commutator_ratio(u, &frame)?;
                    Ok((r.discrepancy(), r.closed_form, trace_defect(u, &frame)?))
                })
                .collect()
        })
        .collect::<CliResult<Vec<_>>>()?;
    let agreements = per_trial
        .iter()
        .filter(|t| t.iter().all(|x| x.0 < IDENTITY_TOLERANCE))
        .count();
    let all: Vec<(f64, f64, f64)> = per_trial.into_iter().flatten().collect();
    let max_ratio = all.iter().map(|x| x.1).fold(0.0, f64::max);
    let min_ratio = all.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let max_defect = all.iter().map(|x| x.2).fold(0.0, f64::max);
    Ok(IdentityCheckReport {
        trials,
        seed,
        checks: all.len(),
        agreements,
        tolerance: IDENTITY_TOLERANCE,
        max_discrepancy: all.iter().map(|x| x.0).fold(0.0, f64::max),
        min_ratio,
        max_ratio,
        max_defect,
        in_range: min_ratio >= 0.0 && max_ratio <= 2f64.sqrt() + 1e-12 && max_defect <= 2.0 + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(command: Command) -> RunConfig {
        RunConfig {
            command,
            format: Format::Json,
            paper_mode: false,
        }
    }

    #[test]
    fn witness_payload() {
        let rep = run(config(Command::Witness {
            n: 2,
            k: 8,
            depth: 6,
            formula_only: false,
        }))
        .unwrap();
        assert_eq!(rep.results["certified_epsilon"], 1.25);
        assert_eq!(rep.config.command.name(), "witness");
        let rendered: Value = serde_json::from_str(&rep.render().unwrap()).unwrap();
        assert_eq!(rendered["config"]["command"], "witness");
        assert_eq!(rendered["results"], rep.results);
    }

    #[test]
    fn stochastic_commands_need_seeds() {
        let cases = [
            Command::Scan {
                n: 2,
                rank: 2,
                radius: 3,
                iterations: 10,
                seed: None,
            },
            Command::Audit {
                rank: 2,
                radius: 3,
                seed: None,
                frames: 2,
            },
            Command::IdentityCheck {
                trials: 2,
                seed: None,
            },
            Command::Group {
                group: "abelian:2".into(),
                generators: None,
                radius: 3,
                mode: GroupMode::Search,
                iterations: 10,
                seed: None,
            },
        ];
        for c in cases {
            let err = run(config(c)).unwrap_err();
            assert!(matches!(err, CliError::MissingSeed(_)));
            assert_eq!(err.exit_code(), 2);
        }
    }

    #[test]
    fn bad_inputs_are_precondition_failures() {
        let bad_group = run(config(Command::Group {
            group: "free:0".into(),
            generators: None,
            radius: 2,
            mode: GroupMode::Balls,
            iterations: 0,
            seed: None,
        }))
        .unwrap_err();
        assert_eq!(bad_group.exit_code(), 2);
        let bad_n = run(config(Command::Witness {
            n: 1,
            k: 3,
            depth: 2,
            formula_only: true,
        }))
        .unwrap_err();
        assert_eq!(bad_n.exit_code(), 2);
    }

    #[test]
    fn csv_matches_ball_family() {
        let mut cfg = config(Command::Group {
            group: "free:2".into(),
            generators: None,
            radius: 3,
            mode: GroupMode::Balls,
            iterations: 0,
            seed: None,
        });
        cfg.format = Format::Csv;
        let text = run(cfg).unwrap().render().unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 4);
        assert!(rows[1].starts_with("1,5,4,4/5,"));
    }

    #[test]
    fn payload_is_reproducible() {
        let cfg = config(Command::Scan {
            n: 2,
            rank: 3,
            radius: 3,
            iterations: 200,
            seed: Some(11),
        });
        let a = run(cfg.clone()).unwrap();
        let b = run(cfg).unwrap();
        assert_eq!(a.payload(), b.payload());
    }

    #[test]
    fn identity_check_counts() {
        let r = identity_check(12, 3).unwrap();
        assert_eq!(r.checks, 36);
        assert_eq!(r.agreements, 12);
        assert!(r.in_range);
    }
}
