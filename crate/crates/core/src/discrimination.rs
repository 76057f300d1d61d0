//! Subchannel discrimination games and the strategies that succeed with
//! certainty on a maximal resource state.

use rand::Rng;
use serde::Serialize;

use crate::coherence::CoherenceSolver;
use crate::entanglement::EntanglementSolver;
use crate::freeops::Resource;
use crate::qcore::{
    complete_basis, ginibre, haar_unitary, hermitian_eigen, identity, is_finite, max_abs_diff,
    outer, pure_fidelity, random_probabilities, tol, BipartiteState, CMatrix, CVector,
    DensityOperator, PureState,
};
use crate::{Error, Result};

/// Probabilities may exceed one by this much.
pub const PROB_SLACK: f64 = 1e-9;
/// `ratio` is undefined when `p_succ(sigma)` is at or below this.
pub const RATIO_GUARD: f64 = 1e-12;
/// Tolerance for membership of the perfect-success set.
pub const OMEGA_TOL: f64 = 1e-9;
/// Allowed gap between the optimizer fidelity and the simulated game value.
pub const SIMULATION_TOL: f64 = 1e-8;

/// Trace-nonincreasing CP maps `Psi_i` whose sum is trace preserving.
#[derive(Debug, Clone, PartialEq)]
pub struct SubchannelEnsemble {
    subchannels: Vec<Vec<CMatrix>>,
    dim_in: usize,
    dim_out: usize,
}

impl SubchannelEnsemble {
    pub fn new(subchannels: Vec<Vec<CMatrix>>) -> Result<Self> {
        let first = subchannels.first().and_then(|s| s.first()).ok_or_else(|| {
            Error::InvalidStrategy("ensemble needs at least one Kraus operator".into())
        })?;
        let (dim_out, dim_in) = first.shape();
        if subchannels.iter().any(Vec::is_empty) {
            return Err(Error::InvalidStrategy(
                "every subchannel needs a Kraus operator".into(),
            ));
        }
        let all = subchannels.iter().flatten();
        if all
            .clone()
            .any(|k| k.shape() != (dim_out, dim_in) || !is_finite(k))
        {
            return Err(Error::InvalidStrategy(
                "Kraus operators must share one finite shape".into(),
            ));
        }
        let mut total = CMatrix::zeros(dim_in, dim_in);
        for (i, sub) in subchannels.iter().enumerate() {
            let s = sub.iter().fold(CMatrix::zeros(dim_in, dim_in), |acc, k| {
                acc + k.adjoint() * k
            });
            let top = hermitian_eigen(&s).0[0];
            if top > 1.0 + PROB_SLACK {
                return Err(Error::InvalidStrategy(format!(
                    "subchannel {i} increases trace (largest eigenvalue {top})"
                )));
            }
            total += s;
        }
        let err = max_abs_diff(&total, &identity(dim_in));
        if err > tol::COMPLETENESS {
            return Err(Error::InvalidStrategy(format!(
                "subchannels do not sum to a channel (deviation {err:.3e})"
            )));
        }
        Ok(Self {
            subchannels,
            dim_in,
            dim_out,
        })
    }

    pub fn subchannels(&self) -> &[Vec<CMatrix>] {
        &self.subchannels
    }

    pub fn len(&self) -> usize {
        self.subchannels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subchannels.is_empty()
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// `Psi_i(rho)`, unnormalized.
    pub fn apply(&self, i: usize, rho: &CMatrix) -> CMatrix {
        self.subchannels[i]
            .iter()
            .fold(CMatrix::zeros(self.dim_out, self.dim_out), |acc, k| {
                acc + k * rho * k.adjoint()
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<CMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<CMatrix>) -> Result<Self> {
        let d = effects
            .first()
            .ok_or_else(|| Error::InvalidStrategy("POVM needs an effect".into()))?
            .nrows();
        let mut total = CMatrix::zeros(d, d);
        for (i, m) in effects.iter().enumerate() {
            if m.shape() != (d, d) || !is_finite(m) {
                return Err(Error::InvalidStrategy(
                    "POVM effects must be square of one size".into(),
                ));
            }
            if max_abs_diff(m, &m.adjoint()) > tol::HERMITIAN {
                return Err(Error::InvalidStrategy(format!(
                    "effect {i} is not Hermitian"
                )));
            }
            let (vals, _) = hermitian_eigen(m);
            if vals[d - 1] < tol::PSD {
                return Err(Error::InvalidStrategy(format!(
                    "effect {i} has negative eigenvalue {}",
                    vals[d - 1]
                )));
            }
            total += m;
        }
        let err = max_abs_diff(&total, &identity(d));
        if err > tol::COMPLETENESS {
            return Err(Error::InvalidStrategy(format!(
                "effects do not sum to I (deviation {err:.3e})"
            )));
        }
        Ok(Self { effects })
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }
}

/// Subchannel ensemble paired index by index with a POVM.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationStrategy {
    ensemble: SubchannelEnsemble,
    povm: Povm,
}

impl DiscriminationStrategy {
    pub fn new(ensemble: SubchannelEnsemble, povm: Povm) -> Result<Self> {
        if ensemble.len() != povm.effects().len() {
            return Err(Error::InvalidStrategy(format!(
                "{} subchannels but {} effects",
                ensemble.len(),
                povm.effects().len()
            )));
        }
        if ensemble.dim_out() != povm.dim() {
            return Err(Error::dims(
                "POVM acts on a different space than the subchannel outputs",
            ));
        }
        Ok(Self { ensemble, povm })
    }

    pub fn ensemble(&self) -> &SubchannelEnsemble {
        &self.ensemble
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn dim(&self) -> usize {
        self.ensemble.dim_in()
    }
}

/// `sum_i tr(M_i Psi_i(rho))`.
pub fn p_succ(strategy: &DiscriminationStrategy, rho: &DensityOperator) -> Result<f64> {
    if rho.dim() != strategy.dim() {
        return Err(Error::dims(format!(
            "strategy on {} dims played with a {}-dim state",
            strategy.dim(),
            rho.dim()
        )));
    }
    Ok(strategy
        .povm
        .effects
        .iter()
        .enumerate()
        .map(|(i, m)| (m * strategy.ensemble.apply(i, rho.matrix())).trace().re)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameResult {
    pub p_succ_rho: f64,
    pub p_succ_sigma: f64,
    /// `p_succ_rho / p_succ_sigma`; `None` when the denominator is at most `RATIO_GUARD`.
    pub ratio: Option<f64>,
    /// `p_succ_sigma = 1` within `OMEGA_TOL`.
    pub in_omega: bool,
}

pub fn play(
    strategy: &DiscriminationStrategy,
    rho: &DensityOperator,
    sigma: &PureState,
) -> Result<GameResult> {
    let p_succ_rho = p_succ(strategy, rho)?;
    let p_succ_sigma = p_succ(strategy, &sigma.density())?;
    Ok(GameResult {
        p_succ_rho,
        p_succ_sigma,
        ratio: (p_succ_sigma > RATIO_GUARD).then(|| p_succ_rho / p_succ_sigma),
        in_omega: (p_succ_sigma - 1.0).abs() <= OMEGA_TOL,
    })
}

fn check_distribution(weights: &[f64], d: usize) -> Result<()> {
    if weights.len() != d {
        return Err(Error::arg(format!(
            "need {d} weights, got {}",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::arg("weights must be finite and nonnegative"));
    }
    let s: f64 = weights.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::arg(format!("weights sum to {s}")));
    }
    Ok(())
}

fn check_orthonormal(basis: &[CVector], d: usize) -> Result<()> {
    if basis.len() != d || basis.iter().any(|v| v.len() != d) {
        return Err(Error::arg(format!(
            "basis must hold {d} vectors of length {d}"
        )));
    }
    let gram = CMatrix::from_columns(basis);
    if max_abs_diff(&(gram.adjoint() * &gram), &identity(d)) > 1e-9 {
        return Err(Error::arg("basis is not orthonormal"));
    }
    Ok(())
}

/// A unitary with `U phi = e`, uniform over the remaining freedom.
fn steering_unitary<R: Rng + ?Sized>(phi: &CVector, e: &CVector, rng: &mut R) -> CMatrix {
    let d = phi.len();
    let from = complete_basis(phi, &ginibre(d, d, rng));
    let to = complete_basis(e, &ginibre(d, d, rng));
    to * from.adjoint()
}

/// `Psi_i = p_i U_i . U_i†` with `U_i phi_sigma = e_i` and `M_i = |e_i><e_i|`.
/// Succeeds with certainty on `sigma` and with probability `<phi|rho|phi>` on `rho`.
pub fn build_perfect_strategy<R: Rng + ?Sized>(
    sigma: &PureState,
    weights: &[f64],
    basis: &[CVector],
    rng: &mut R,
) -> Result<DiscriminationStrategy> {
    let d = sigma.dim();
    check_distribution(weights, d)?;
    check_orthonormal(basis, d)?;
    let phi = sigma.amplitudes();
    let subchannels = weights
        .iter()
        .zip(basis)
        .map(|(p, e)| vec![steering_unitary(phi, e, rng).scale(p.sqrt())])
        .collect();
    let effects = basis.iter().map(|e| outer(e, e)).collect();
    DiscriminationStrategy::new(SubchannelEnsemble::new(subchannels)?, Povm::new(effects)?)
}

/// `k` unitary subchannels steering `phi_sigma` to the first `k` vectors of a
/// random basis, with effects `|e_i><e_i| + A_i` where the `A_i` are a random
/// PSD partition of the projector onto the remaining basis vectors.
pub fn sample_omega_strategy<R: Rng + ?Sized>(
    sigma: &PureState,
    k: usize,
    rng: &mut R,
) -> Result<DiscriminationStrategy> {
    let d = sigma.dim();
    if k == 0 || k > d {
        return Err(Error::arg(format!("need 1 <= k <= {d}, got {k}")));
    }
    let frame = haar_unitary(d, rng);
    let weights = random_probabilities(k, rng);
    let phi = sigma.amplitudes();
    let subchannels = (0..k)
        .map(|i| {
            vec![steering_unitary(phi, &frame.column(i).into_owned(), rng).scale(weights[i].sqrt())]
        })
        .collect();

    let rest = d - k;
    let slack: Vec<CMatrix> = if rest == 0 {
        vec![CMatrix::zeros(d, d); k]
    } else {
        let complement = frame.columns(k, rest).into_owned();
        let parts: Vec<CMatrix> = (0..k)
            .map(|_| {
                let g = ginibre(rest, rest, rng);
                &g * g.adjoint()
            })
            .collect();
        let total = parts
            .iter()
            .fold(CMatrix::zeros(rest, rest), |acc, w| acc + w);
        let (vals, vecs) = hermitian_eigen(&total);
        let inv_sqrt = CMatrix::from_diagonal(&CVector::from_iterator(
            rest,
            vals.iter().map(|v| crate::qcore::c(1.0 / v.sqrt(), 0.0)),
        ));
        let t = &vecs * inv_sqrt * vecs.adjoint();
        parts
            .iter()
            .map(|w| {
                let a = &t * w * &t;
                let a = (&a + a.adjoint()).scale(0.5);
                &complement * a * complement.adjoint()
            })
            .collect()
    };
    let effects = (0..k)
        .map(|i| {
            let e = frame.column(i).into_owned();
            outer(&e, &e) + &slack[i]
        })
        .collect();
    DiscriminationStrategy::new(SubchannelEnsemble::new(subchannels)?, Povm::new(effects)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaMinimum {
    /// `F(sigma, rho) = <phi|rho|phi>`.
    pub analytic: f64,
    /// Success probability of the constructed attaining strategy.
    pub constructed: f64,
    /// Lowest success probability among the sampled strategies.
    pub sampled_min: f64,
    pub empirical_min: f64,
}

/// Minimum success probability on `rho` over `samples` sampled perfect
/// strategies for `sigma` and one constructed strategy.
pub fn min_over_omega<R: Rng + ?Sized>(
    rho: &DensityOperator,
    sigma: &PureState,
    samples: usize,
    rng: &mut R,
) -> Result<OmegaMinimum> {
    if samples == 0 {
        return Err(Error::arg("samples must be at least 1"));
    }
    let d = sigma.dim();
    let analytic = pure_fidelity(sigma, rho)?;
    let frame = haar_unitary(d, rng);
    let basis: Vec<CVector> = (0..d).map(|i| frame.column(i).into_owned()).collect();
    let weights = vec![1.0 / d as f64; d];
    let constructed = p_succ(&build_perfect_strategy(sigma, &weights, &basis, rng)?, rho)?;
    let mut sampled_min = f64::INFINITY;
    for _ in 0..samples {
        let k = rng.random_range(1..=d);
        let s = sample_omega_strategy(sigma, k, rng)?;
        sampled_min = sampled_min.min(p_succ(&s, rho)?);
    }
    Ok(OmegaMinimum {
        analytic,
        constructed,
        sampled_min,
        empirical_min: constructed.min(sampled_min),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Disadvantage {
    /// `max_sigma F(sigma, rho)` from the deficiency optimizer.
    pub value: f64,
    /// `1 - value`, the geometric deficiency.
    pub deficiency_cross_check: f64,
    /// Success probability of the witness's constructed strategy on `rho`.
    pub simulated: f64,
    /// `|value + deficiency - 1|`.
    pub residual: f64,
    #[serde(skip)]
    pub witness: PureState,
}

/// Operational disadvantage of `rho`: the best worst-case success probability
/// among games won with certainty by some maximal resource state.
pub fn operational_disadvantage<R: Rng + ?Sized>(
    rho: &DensityOperator,
    resource: Resource,
    rng: &mut R,
) -> Result<Disadvantage> {
    let result = match resource {
        Resource::Coherence { dim } => {
            if dim != rho.dim() {
                return Err(Error::dims("resource dimension does not match the state"));
            }
            CoherenceSolver::default().solve(rho)?
        }
        Resource::Entanglement { dim_a, dim_b } => {
            let state = BipartiteState::new(rho.clone(), dim_a, dim_b)?;
            EntanglementSolver::default().solve(&state)?
        }
    };
    let value = result.fidelity;
    let d = rho.dim();
    let frame = haar_unitary(d, rng);
    let basis: Vec<CVector> = (0..d).map(|i| frame.column(i).into_owned()).collect();
    let weights = random_probabilities(d, rng);
    let strategy = build_perfect_strategy(&result.witness, &weights, &basis, rng)?;
    let simulated = p_succ(&strategy, rho)?;
    if (simulated - value).abs() > SIMULATION_TOL {
        return Err(Error::InvalidStrategy(format!(
            "witness strategy scores {simulated} but the optimizer reports {value}"
        )));
    }
    Ok(Disadvantage {
        value,
        deficiency_cross_check: result.value,
        simulated,
        residual: (value + result.value - 1.0).abs(),
        witness: result.witness,
    })
}
