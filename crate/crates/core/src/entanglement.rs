//! Entanglement deficiency for `d x d` systems: one minus the largest overlap
//! `<phi|rho|phi>` with a maximally entangled state.
//!
//! Every maximally entangled state is `(I ⊗ U)|Phi+>` for a unitary `U`, with
//! `|Phi+> = (1/sqrt d) sum_k |kk>`, so `phi[a*d + b] = U[b, a] / sqrt(d)`.
//! The objective is a positive semidefinite quadratic form in `U`; replacing
//! `U` by the unitary polar factor of the gradient never decreases it.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::qcore::{
    c, haar_unitary, is_unitary, partial_trace, polar_unitary, pure_fidelity, schmidt, tol,
    BipartiteState, CMatrix, CVector, PureState, Subsystem,
};
use crate::result::{DeficiencyResult, Method};
use crate::{Error, Result};

const PURITY_THRESHOLD: f64 = 1.0 - 1e-10;
/// Allowed per-step decrease of the power-iteration objective.
pub const MONOTONE_SLACK: f64 = 1e-12;
pub const ORACLE_MAX_DIM: usize = 3;
pub const ORACLE_MIN_SAMPLES: usize = 10_000;
const ORACLE_REFINE_STEPS: usize = 100;

/// A maximally entangled state `(I ⊗ U)|Phi+>` and its local unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntWitness {
    local_u: CMatrix,
    vector: PureState,
}

impl MaxEntWitness {
    pub fn from_local_unitary(u: CMatrix) -> Result<Self> {
        if !is_unitary(&u, tol::COMPLETENESS) {
            return Err(Error::arg("local operator is not unitary"));
        }
        let vector = PureState::new(vector_of(&u))?;
        Ok(Self { local_u: u, vector })
    }

    /// Recovers `U` from a `d^2`-dim vector; fails unless the vector is
    /// maximally entangled (U unitary within 1e-8).
    pub fn from_vector(phi: &PureState, d: usize) -> Result<Self> {
        if phi.dim() != d * d {
            return Err(Error::dims(format!(
                "{}-dim vector is not {d}x{d}",
                phi.dim()
            )));
        }
        let s = (d as f64).sqrt();
        let amp = phi.amplitudes();
        let u = CMatrix::from_fn(d, d, |b, a| amp[a * d + b] * s);
        if !is_unitary(&u, 1e-8) {
            return Err(Error::state("vector is not maximally entangled"));
        }
        Ok(Self {
            local_u: u,
            vector: phi.clone(),
        })
    }

    pub fn local_unitary(&self) -> &CMatrix {
        &self.local_u
    }

    pub fn vector(&self) -> &PureState {
        &self.vector
    }

    /// Largest entrywise deviation of either reduced state from `I/d`.
    pub fn certificate(&self) -> f64 {
        let d = self.local_u.nrows();
        let st = BipartiteState::from_pure(&self.vector, d, d).expect("d^2-dim vector");
        let target = CMatrix::identity(d, d).unscale(d as f64);
        [Subsystem::A, Subsystem::B]
            .iter()
            .map(|&k| {
                let r = partial_trace(&st, k).expect("valid reduced state");
                crate::qcore::max_abs_diff(r.matrix(), &target)
            })
            .fold(0.0, f64::max)
    }
}

fn vector_of(u: &CMatrix) -> CVector {
    let d = u.nrows();
    let s = 1.0 / (d as f64).sqrt();
    CVector::from_fn(d * d, |i, _| u[(i % d, i / d)] * s)
}

fn equal_dims(state_a: usize, state_b: usize) -> Result<usize> {
    if state_a != state_b {
        return Err(Error::Unsupported(format!(
            "entanglement deficiency needs equal local dimensions, got {state_a}x{state_b}"
        )));
    }
    Ok(state_a)
}

/// `1 - (sum_i q_i)^2 / d` from the Schmidt coefficients, with witness
/// `(1/sqrt d) sum_i |a_i>|b_i>` built from the Schmidt bases.
pub fn pure_entanglement_deficiency(
    psi: &PureState,
    dim_a: usize,
    dim_b: usize,
) -> Result<DeficiencyResult> {
    let d = equal_dims(dim_a, dim_b)?;
    let data = schmidt(psi, dim_a, dim_b)?;
    let sum: f64 = data.coeffs.iter().sum();
    // U|k> = sum_i a_i[k] b_i, i.e. U = B A^T
    let a = CMatrix::from_columns(&data.basis_a);
    let b = CMatrix::from_columns(&data.basis_b);
    let witness = MaxEntWitness::from_local_unitary(b * a.transpose())?;
    Ok(DeficiencyResult::from_fidelity(
        sum * sum / d as f64,
        witness.vector,
        Method::PureFormula,
        0,
        true,
    ))
}

/// Objective value and gradient matrix `G` with `q(U) = <U, G(U)>_F`.
fn objective_and_gradient(rho: &CMatrix, u: &CMatrix) -> (f64, CMatrix) {
    let d = u.nrows();
    let phi = vector_of(u);
    let w = rho * &phi;
    let q = phi.dotc(&w).re;
    let s = 1.0 / (d as f64).sqrt();
    let g = CMatrix::from_fn(d, d, |b, a| w[a * d + b] * s);
    (q, g)
}

#[derive(Debug, Clone)]
struct PowerRun {
    u: CMatrix,
    objective: f64,
    iterations: usize,
    converged: bool,
    /// Largest single-step decrease seen.
    worst_drop: f64,
}

fn power_iterate(rho: &CMatrix, start: CMatrix, max_iterations: usize, tolerance: f64) -> PowerRun {
    let mut u = start;
    let (mut q, mut g) = objective_and_gradient(rho, &u);
    let mut worst_drop: f64 = 0.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        iterations += 1;
        let next = polar_unitary(&g);
        let (q_next, g_next) = objective_and_gradient(rho, &next);
        worst_drop = worst_drop.max(q - q_next);
        let change = (q_next - q).abs();
        u = next;
        q = q_next;
        g = g_next;
        if change < tolerance {
            converged = true;
            break;
        }
    }
    debug_assert!(
        worst_drop <= MONOTONE_SLACK,
        "power iteration decreased by {worst_drop}"
    );
    PowerRun {
        u,
        objective: q,
        iterations,
        converged,
        worst_drop,
    }
}

/// Objective after each power-iteration step from `start` (index 0 is the start).
pub fn power_iteration_trace(
    state: &BipartiteState,
    start: &CMatrix,
    steps: usize,
) -> Result<Vec<f64>> {
    let d = equal_dims(state.dim_a(), state.dim_b())?;
    if start.nrows() != d || !is_unitary(start, tol::COMPLETENESS) {
        return Err(Error::arg("start must be a d x d unitary"));
    }
    let rho = state.rho().matrix();
    let mut u = start.clone();
    let mut out = Vec::with_capacity(steps + 1);
    for _ in 0..=steps {
        let (q, g) = objective_and_gradient(rho, &u);
        out.push(q);
        u = polar_unitary(&g);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementSolver {
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Add a start built from the Schmidt witness of the leading eigenvector.
    pub informed_start: bool,
}

impl Default for EntanglementSolver {
    fn default() -> Self {
        Self {
            restarts: 32,
            seed: 0x656e_7461_6e67_6c65,
            max_iterations: 5000,
            tolerance: 1e-12,
            informed_start: true,
        }
    }
}

impl EntanglementSolver {
    pub fn with_restarts(restarts: usize) -> Self {
        Self {
            restarts,
            ..Self::default()
        }
    }

    /// Pure input: Schmidt formula. Mixed input: power iteration.
    pub fn solve(&self, state: &BipartiteState) -> Result<DeficiencyResult> {
        let (da, db) = (state.dim_a(), state.dim_b());
        equal_dims(da, db)?;
        let rho = state.rho();
        if rho.purity() > PURITY_THRESHOLD {
            let (_, vectors) = rho.eigen();
            let psi = PureState::normalized(vectors.column(0).into_owned())?;
            return pure_entanglement_deficiency(&psi, da, db);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.power_iteration(state, &mut rng)
    }

    /// Power iteration regardless of purity, seeded from `self.seed`.
    pub fn maximize(&self, state: &BipartiteState) -> Result<DeficiencyResult> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.power_iteration(state, &mut rng)
    }

    fn power_iteration<R: Rng + ?Sized>(
        &self,
        state: &BipartiteState,
        rng: &mut R,
    ) -> Result<DeficiencyResult> {
        let d = equal_dims(state.dim_a(), state.dim_b())?;
        if self.restarts < 1 {
            return Err(Error::arg("at least one restart is required"));
        }
        let rho = state.rho();
        let mut starts = Vec::with_capacity(self.restarts + 1);
        if self.informed_start {
            let (_, vectors) = rho.eigen();
            let top = PureState::normalized(vectors.column(0).into_owned())?;
            let informed = pure_entanglement_deficiency(&top, d, d)?;
            starts.push(MaxEntWitness::from_vector(&informed.witness, d)?.local_u);
        }
        starts.extend((0..self.restarts).map(|_| haar_unitary(d, rng)));

        let mut best: Option<PowerRun> = None;
        let mut total = 0;
        for start in starts {
            let run = power_iterate(rho.matrix(), start, self.max_iterations, self.tolerance);
            total += run.iterations;
            if best.as_ref().is_none_or(|b| run.objective > b.objective) {
                best = Some(run);
            }
        }
        let best = best.expect("at least one start");
        let witness = MaxEntWitness::from_local_unitary(best.u)?;
        Ok(DeficiencyResult::from_fidelity(
            best.objective,
            witness.vector,
            Method::PowerIteration,
            total,
            best.converged && best.worst_drop <= MONOTONE_SLACK,
        ))
    }
}

/// Largest overlap with a maximally entangled state found by projected power
/// iteration from `restarts` Haar-random starts (plus one informed start).
pub fn entangled_fraction<R: Rng + ?Sized>(
    state: &BipartiteState,
    restarts: usize,
    rng: &mut R,
) -> Result<DeficiencyResult> {
    EntanglementSolver::with_restarts(restarts).power_iteration(state, rng)
}

pub fn entanglement_deficiency(state: &BipartiteState) -> Result<DeficiencyResult> {
    EntanglementSolver::default().solve(state)
}

/// Brute-force lower bound on the entangled fraction: `samples` Haar-random
/// maximally entangled states, each polished by 100 steps of random Givens
/// hill climbing. Shares no code path with the power iteration.
pub fn entangled_fraction_oracle<R: Rng + ?Sized>(
    state: &BipartiteState,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let d = equal_dims(state.dim_a(), state.dim_b())?;
    if d > ORACLE_MAX_DIM {
        return Err(Error::Unsupported(format!(
            "entanglement oracle is limited to d <= {ORACLE_MAX_DIM}, got {d}"
        )));
    }
    if samples < ORACLE_MIN_SAMPLES {
        return Err(Error::arg(format!(
            "oracle needs at least {ORACLE_MIN_SAMPLES} samples"
        )));
    }
    let n = d * d;
    let m = state.rho().matrix();
    let rho: Vec<Complex64> = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
    let eval = |u: &[Complex64]| -> f64 {
        // phi[a*d + b] = u[b][a] / sqrt(d); the 1/d factor is applied once
        let mut acc = c(0.0, 0.0);
        for i in 0..n {
            let pi = u[(i % d) * d + i / d];
            let mut row = c(0.0, 0.0);
            for j in 0..n {
                row += rho[i * n + j] * u[(j % d) * d + j / d];
            }
            acc += pi.conj() * row;
        }
        acc.re / d as f64
    };

    let mut best = f64::NEG_INFINITY;
    let mut u = vec![c(0.0, 0.0); n];
    let mut trial = vec![c(0.0, 0.0); n];
    for _ in 0..samples {
        let h = haar_unitary(d, rng);
        for r in 0..d {
            for col in 0..d {
                u[r * d + col] = h[(r, col)];
            }
        }
        let mut value = eval(&u);
        let mut step = 0.3;
        for _ in 0..ORACLE_REFINE_STEPS {
            trial.copy_from_slice(&u);
            random_givens(&mut trial, d, step, rng);
            let v = eval(&trial);
            if v > value {
                value = v;
                std::mem::swap(&mut u, &mut trial);
                step *= 1.5;
            } else {
                step *= 0.8;
            }
        }
        best = best.max(value);
    }
    Ok(best)
}

/// Right-multiplies the row-major unitary by a random rotation on two
/// columns together with a random phase on a third: `U <- U G`.
fn random_givens<R: Rng + ?Sized>(u: &mut [Complex64], d: usize, step: f64, rng: &mut R) {
    let gauss = |rng: &mut R| -> f64 { rng.sample(StandardNormal) };
    if d == 1 {
        let t = step * gauss(rng);
        u[0] *= Complex64::from_polar(1.0, t);
        return;
    }
    let p = rng.random_range(0..d);
    let mut q = rng.random_range(0..d - 1);
    if q >= p {
        q += 1;
    }
    let theta = step * gauss(rng);
    let (s, co) = theta.sin_cos();
    let phase = Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
    let col_phase = Complex64::from_polar(1.0, step * gauss(rng));
    for r in 0..d {
        let (x, y) = (u[r * d + p], u[r * d + q]);
        u[r * d + p] = (x * co + y * phase * s) * col_phase;
        u[r * d + q] = -x * phase.conj() * s + y * co;
    }
}

/// `<phi|rho|phi>` for a maximally entangled witness.
pub fn witness_overlap(witness: &MaxEntWitness, state: &BipartiteState) -> Result<f64> {
    pure_fidelity(witness.vector(), state.rho())
}
