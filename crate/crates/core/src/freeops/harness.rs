use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::channel::{selective_outcomes, ChannelStructure, KrausChannel, ZERO_PROBABILITY};
use super::generate::{random_incoherent_channel, random_local_channel, IncoherentFlavor};
use crate::coherence::CoherenceSolver;
use crate::entanglement::EntanglementSolver;
use crate::formats::{ChannelFile, StateFile};
use crate::qcore::{
    random_density, random_pure_state, substream, BipartiteState, CMatrix, DensityOperator,
};
use crate::{Error, Result};

/// Margins below `-DEFAULT_VIOLATION_TOL` are violations.
pub const DEFAULT_VIOLATION_TOL: f64 = 1e-7;
const TIGHTEN_FACTOR: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Resource {
    Coherence { dim: usize },
    Entanglement { dim_a: usize, dim_b: usize },
}

impl Resource {
    pub fn dims(&self) -> Vec<usize> {
        match *self {
            Resource::Coherence { dim } => vec![dim],
            Resource::Entanglement { dim_a, dim_b } => vec![dim_a, dim_b],
        }
    }

    pub fn total_dim(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Resource::Coherence { .. } => "coherence",
            Resource::Entanglement { .. } => "entanglement",
        }
    }
}

/// A deficiency functional together with the optimizer settings it runs at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    Coherence(CoherenceSolver),
    Entanglement {
        dim_a: usize,
        dim_b: usize,
        solver: EntanglementSolver,
    },
}

impl Measure {
    pub fn for_resource(resource: Resource) -> Result<Self> {
        match resource {
            Resource::Coherence { dim } if dim >= 1 => {
                Ok(Measure::Coherence(CoherenceSolver::default()))
            }
            Resource::Entanglement { dim_a, dim_b } if dim_a == dim_b && dim_a >= 1 => {
                Ok(Measure::Entanglement {
                    dim_a,
                    dim_b,
                    solver: EntanglementSolver::default(),
                })
            }
            _ => Err(Error::Unsupported(format!(
                "no deficiency measure for {resource:?}"
            ))),
        }
    }

    pub fn deficiency(&self, rho: &DensityOperator) -> Result<f64> {
        match self {
            Measure::Coherence(solver) => Ok(solver.solve(rho)?.value),
            Measure::Entanglement {
                dim_a,
                dim_b,
                solver,
            } => {
                let state = BipartiteState::new(rho.clone(), *dim_a, *dim_b)?;
                Ok(solver.solve(&state)?.value)
            }
        }
    }

    /// Same measure with four times the restarts. The original starts are a
    /// prefix of the tightened ones, so the tightened optimum is never worse.
    pub fn tightened(&self) -> Self {
        match *self {
            Measure::Coherence(s) => Measure::Coherence(CoherenceSolver {
                restarts: s.restarts * TIGHTEN_FACTOR,
                ..s
            }),
            Measure::Entanglement {
                dim_a,
                dim_b,
                solver,
            } => Measure::Entanglement {
                dim_a,
                dim_b,
                solver: EntanglementSolver {
                    restarts: solver.restarts * TIGHTEN_FACTOR,
                    ..solver
                },
            },
        }
    }

    fn check_channel(&self, ch: &KrausChannel) -> Result<()> {
        match (self, ch.structure()) {
            (Measure::Coherence(_), s) if s.is_incoherent() => Ok(()),
            (Measure::Coherence(_), s) => Err(Error::InvalidChannel(format!(
                "coherence monotonicity needs an incoherent channel, got {}",
                s.name()
            ))),
            (Measure::Entanglement { dim_a, dim_b, .. }, ChannelStructure::LocalProduct(f))
                if f.dim_a == *dim_a && f.dim_b == *dim_b =>
            {
                Ok(())
            }
            (Measure::Entanglement { dim_a, dim_b, .. }, s) => Err(Error::InvalidChannel(format!(
                "entanglement monotonicity needs a {dim_a}x{dim_b} local product channel, got {}",
                s.name()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Violation,
    NumericalWarn,
}

impl Verdict {
    pub fn from_margin(margin: f64, tolerance: f64) -> Self {
        if margin < -tolerance {
            Verdict::Violation
        } else if margin < 0.0 {
            Verdict::NumericalWarn
        } else {
            Verdict::Pass
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Violation => "violation",
            Verdict::NumericalWarn => "numerical_warn",
        }
    }
}

/// Everything needed to replay one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reproduction {
    pub state_stream: String,
    pub channel_stream: String,
    pub state: StateFile,
    pub channel: ChannelFile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub seed: u64,
    pub trial: usize,
    pub dims: Vec<usize>,
    pub state_digest: String,
    pub channel_digest: String,
    /// `sum_n p_n D(rho_n)`.
    pub lhs: f64,
    /// `D(rho)`.
    pub rhs: f64,
    pub margin: f64,
    pub verdict: Verdict,
    /// True when the numbers above come from the tightened re-run.
    pub reverified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reproduction: Option<Reproduction>,
}

/// First 16 hex digits of SHA-256 over the shapes and IEEE bits of the matrices.
pub fn digest<'a>(matrices: impl IntoIterator<Item = &'a CMatrix>) -> String {
    let mut h = Sha256::new();
    for m in matrices {
        h.update((m.nrows() as u64).to_le_bytes());
        h.update((m.ncols() as u64).to_le_bytes());
        for z in m.iter() {
            h.update(z.re.to_bits().to_le_bytes());
            h.update(z.im.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())[..16].to_string()
}

fn lhs_rhs(rho: &DensityOperator, ch: &KrausChannel, measure: &Measure) -> Result<(f64, f64)> {
    let mut lhs = 0.0;
    for outcome in selective_outcomes(rho, ch)? {
        if let Some(post) = outcome
            .post_state
            .as_ref()
            .filter(|_| outcome.prob > ZERO_PROBABILITY)
        {
            lhs += outcome.prob * measure.deficiency(post)?;
        }
    }
    Ok((lhs, measure.deficiency(rho)?))
}

/// `sum_n p_n D(rho_n) - D(rho)` for one state and one free channel. The
/// report's `seed` and `trial` are zero; the search fills them in.
pub fn monotonicity_margin(
    rho: &DensityOperator,
    ch: &KrausChannel,
    measure: &Measure,
    tolerance: f64,
) -> Result<TrialReport> {
    measure.check_channel(ch)?;
    let (lhs, rhs) = lhs_rhs(rho, ch, measure)?;
    let margin = lhs - rhs;
    let dims = match measure {
        Measure::Coherence(_) => vec![rho.dim()],
        Measure::Entanglement { dim_a, dim_b, .. } => vec![*dim_a, *dim_b],
    };
    Ok(TrialReport {
        seed: 0,
        trial: 0,
        dims,
        state_digest: digest([rho.matrix()]),
        channel_digest: digest(ch.kraus()),
        lhs,
        rhs,
        margin,
        verdict: Verdict::from_margin(margin, tolerance),
        reverified: false,
        reproduction: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "purity", rename_all = "snake_case")]
pub enum StateKind {
    Pure,
    /// Random mixed state of the given rank (full rank when `None`).
    Mixed {
        rank: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub resource: Resource,
    pub state: StateKind,
    /// Generator family for coherence trials.
    pub flavor: IncoherentFlavor,
    /// Kraus operators per local factor are drawn from `1..=max_local_kraus`.
    pub max_local_kraus: usize,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl SearchConfig {
    pub fn new(resource: Resource, state: StateKind, trials: usize, seed: u64) -> Self {
        Self {
            resource,
            state,
            flavor: IncoherentFlavor::Composed,
            max_local_kraus: 3,
            trials,
            seed,
            tolerance: DEFAULT_VIOLATION_TOL,
        }
    }
}

pub fn state_stream(trial: usize) -> String {
    format!("trial/{trial}/state")
}

pub fn channel_stream(trial: usize) -> String {
    format!("trial/{trial}/channel")
}

/// Draws the state and channel of one trial from its named substreams.
pub fn trial_inputs(
    config: &SearchConfig,
    trial: usize,
) -> Result<(DensityOperator, KrausChannel)> {
    let d = config.resource.total_dim();
    let mut srng = substream(config.seed, &state_stream(trial));
    let rho = match config.state {
        StateKind::Pure => random_pure_state(d, &mut srng).density(),
        StateKind::Mixed { rank } => random_density(d, rank.unwrap_or(d), &mut srng)?,
    };
    let mut crng = substream(config.seed, &channel_stream(trial));
    let ch = match config.resource {
        Resource::Coherence { dim } => random_incoherent_channel(dim, config.flavor, &mut crng)?,
        Resource::Entanglement { dim_a, dim_b } => {
            let n_a = crng.random_range(1..=config.max_local_kraus.max(1));
            let n_b = crng.random_range(1..=config.max_local_kraus.max(1));
            random_local_channel(dim_a, dim_b, n_a, n_b, &mut crng)?
        }
    };
    Ok((rho, ch))
}

fn run_trial(config: &SearchConfig, measure: &Measure, trial: usize) -> Result<TrialReport> {
    let (rho, ch) = trial_inputs(config, trial)?;
    let mut report = monotonicity_margin(&rho, &ch, measure, config.tolerance)?;
    report.seed = config.seed;
    report.trial = trial;
    if report.margin < 0.0 {
        let tight = monotonicity_margin(&rho, &ch, &measure.tightened(), config.tolerance)?;
        report.lhs = tight.lhs;
        report.rhs = tight.rhs;
        report.margin = tight.margin;
        report.verdict = tight.verdict;
        report.reverified = true;
    }
    if report.verdict == Verdict::Violation {
        report.reproduction = Some(Reproduction {
            state_stream: state_stream(trial),
            channel_stream: channel_stream(trial),
            state: StateFile::from_density(&rho, &config.resource.dims()),
            channel: ChannelFile::from_channel(&ch),
        });
    }
    Ok(report)
}

/// Runs `config.trials` independent trials in parallel and returns their
/// reports sorted by margin, lowest first. Negative margins are re-run with
/// tightened optimizer settings before a verdict; violations carry the state
/// and channel needed to reproduce them.
pub fn violation_search(config: &SearchConfig) -> Result<Vec<TrialReport>> {
    if config.trials == 0 {
        return Err(Error::arg("trials must be at least 1"));
    }
    let measure = Measure::for_resource(config.resource)?;
    let mut reports = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, &measure, t))
        .collect::<Result<Vec<_>>>()?;
    reports.sort_by(|a, b| a.margin.total_cmp(&b.margin).then(a.trial.cmp(&b.trial)));
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchSummary {
    pub trials: usize,
    pub min_margin: f64,
    pub violations: usize,
    pub numerical_warnings: usize,
}

pub fn summarize(reports: &[TrialReport]) -> SearchSummary {
    let count = |v| reports.iter().filter(|r| r.verdict == v).count();
    SearchSummary {
        trials: reports.len(),
        min_margin: reports
            .iter()
            .map(|r| r.margin)
            .fold(f64::INFINITY, f64::min),
        violations: count(Verdict::Violation),
        numerical_warnings: count(Verdict::NumericalWarn),
    }
}
