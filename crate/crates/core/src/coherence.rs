//! Coherence deficiency: one minus the largest fidelity between a state and
//! the maximally coherent states `(1/sqrt d) sum_k e^{i theta_k} |k>`.
//!
//! Against such a state the fidelity is the phase objective
//! `(1/d) sum_ij e^{i(theta_j - theta_i)} rho_ij`, bounded above by
//! `(1/d) sum_ij |rho_ij|`. The bound is attained whenever the phase equations
//! `theta_j - theta_i = -arg(rho_ij)` are consistent, which always holds for
//! pure states and for `d = 2`.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::qcore::{c, DensityOperator, PureState};
use crate::result::{DeficiencyResult, Method};
use crate::{Error, Result};

/// Pure-state dispatch threshold on `tr(rho^2)`.
const PURITY_THRESHOLD: f64 = 1.0 - 1e-10;
/// Slack allowed between the l1 bound and the objective at the constructed phases.
const ATTAIN_TOL: f64 = 1e-12;
const ZERO_ENTRY: f64 = 1e-12;

/// Phases `theta_k` in `[0, 2pi)` with `theta_0 = 0` fixing the global phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    angles: Vec<f64>,
}

impl PhaseVector {
    /// Shifts by `-theta_0` and wraps into `[0, 2pi)`.
    pub fn new(angles: &[f64]) -> Result<Self> {
        let first = *angles
            .first()
            .ok_or_else(|| Error::arg("empty phase vector"))?;
        if angles.iter().any(|t| !t.is_finite()) {
            return Err(Error::arg("non-finite phase"));
        }
        let angles = angles.iter().map(|t| wrap(t - first)).collect();
        Ok(Self { angles })
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            angles: vec![0.0; d],
        }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn dim(&self) -> usize {
        self.angles.len()
    }

    pub fn to_state(&self) -> PureState {
        PureState::from_phases(&self.angles)
    }
}

fn wrap(t: f64) -> f64 {
    let w = t.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// `(1/d) sum_ij e^{i(theta_j - theta_i)} rho_ij`. Real for Hermitian `rho`
/// up to roundoff; the imaginary part is returned for checking.
pub fn phase_objective(rho: &DensityOperator, angles: &[f64]) -> Result<Complex64> {
    let d = rho.dim();
    if angles.len() != d {
        return Err(Error::dims(format!(
            "{} phases for a {d}-dim state",
            angles.len()
        )));
    }
    let z: Vec<Complex64> = angles
        .iter()
        .map(|&t| Complex64::from_polar(1.0, t))
        .collect();
    Ok(objective_unnormalized(rho, &z) / d as f64)
}

fn objective_unnormalized(rho: &DensityOperator, z: &[Complex64]) -> Complex64 {
    let m = rho.matrix();
    let d = z.len();
    let mut acc = c(0.0, 0.0);
    for i in 0..d {
        let mut row = c(0.0, 0.0);
        for j in 0..d {
            row += m[(i, j)] * z[j];
        }
        acc += z[i].conj() * row;
    }
    acc
}

/// `1 - (1/d) sum_ij |rho_ij|`, a lower bound on the coherence deficiency.
/// May be negative for some mixed states; returned unclamped.
pub fn l1_lower_bound(rho: &DensityOperator) -> f64 {
    1.0 - rho.l1_sum() / rho.dim() as f64
}

/// Phases solving `theta_j - theta_i = -arg(rho_ij)` along a spanning tree of
/// the nonzero off-diagonal entries, rooted at index 0. Entries outside the
/// tree are ignored; unreachable indices keep phase 0.
pub fn l1_witness_phases(rho: &DensityOperator) -> PhaseVector {
    let d = rho.dim();
    let mut angles = vec![0.0; d];
    let mut seen = vec![false; d];
    let mut queue = VecDeque::new();
    for root in 0..d {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        queue.push_back(root);
        while let Some(i) = queue.pop_front() {
            for j in 0..d {
                let entry = rho.entry(i, j);
                if !seen[j] && entry.norm() > ZERO_ENTRY {
                    angles[j] = angles[i] - entry.arg();
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    PhaseVector::new(&angles).expect("finite phases")
}

#[derive(Debug, Clone)]
struct Ascent {
    angles: Vec<f64>,
    objective: f64,
    sweeps: usize,
    converged: bool,
}

/// Cyclic coordinate ascent. For fixed other phases the objective in
/// `theta_k` is `A + 2|B_k| cos(theta_k - arg B_k)`, so each update sets
/// `theta_k = arg B_k` exactly and every sweep is monotone.
fn ascend(rho: &DensityOperator, start: &[f64], max_sweeps: usize, tol: f64) -> Ascent {
    let d = rho.dim();
    let m = rho.matrix();
    let mut z: Vec<Complex64> = start
        .iter()
        .map(|&t| Complex64::from_polar(1.0, t))
        .collect();
    let mut value = objective_unnormalized(rho, &z).re / d as f64;
    let mut sweeps = 0;
    let mut converged = d == 1;
    while sweeps < max_sweeps && !converged {
        sweeps += 1;
        for k in 1..d {
            let b: Complex64 = (0..d).filter(|&j| j != k).map(|j| m[(k, j)] * z[j]).sum();
            if b.norm() > 0.0 {
                z[k] = b / b.norm();
            }
        }
        let next = objective_unnormalized(rho, &z).re / d as f64;
        converged = (next - value).abs() < tol;
        value = next;
    }
    Ascent {
        angles: z.iter().map(|w| w.arg()).collect(),
        objective: value,
        sweeps,
        converged,
    }
}

/// Settings for the mixed-state phase optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceSolver {
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    /// Stop when one sweep changes the objective by less than this.
    pub tolerance: f64,
}

impl Default for CoherenceSolver {
    fn default() -> Self {
        Self {
            restarts: 32,
            seed: 0x636f_6865_7265_6e63,
            max_sweeps: 10_000,
            tolerance: 1e-12,
        }
    }
}

impl CoherenceSolver {
    pub fn with_restarts(restarts: usize) -> Self {
        Self {
            restarts,
            ..Self::default()
        }
    }

    /// Coherence deficiency with the dispatch: the l1 closed form when the
    /// constructed phases attain it (always for `d <= 2` and pure states, and
    /// for `d = 3` when the phase cycle is consistent), coordinate ascent otherwise.
    pub fn solve(&self, rho: &DensityOperator) -> Result<DeficiencyResult> {
        let d = rho.dim();
        let bound = l1_lower_bound(rho);
        let l1_fidelity = 1.0 - bound;
        let pure = rho.purity() > PURITY_THRESHOLD;
        let witness = l1_witness_phases(rho);

        let mut result = if d <= 3 || pure {
            let attained = phase_objective(rho, witness.angles())?.re;
            if attained >= l1_fidelity - ATTAIN_TOL {
                let method = if d <= 3 {
                    Method::ClosedForm
                } else {
                    Method::PureFormula
                };
                Some(DeficiencyResult::from_fidelity(
                    l1_fidelity,
                    witness.to_state(),
                    method,
                    0,
                    true,
                ))
            } else {
                None
            }
        } else {
            None
        };
        if result.is_none() {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            result = Some(self.ascent(rho, &mut rng, &[witness.angles().to_vec()])?);
        }
        let mut result = result.expect("dispatch produced a result");
        result.bound_gap = Some(result.value - bound);
        Ok(result)
    }

    /// Coordinate ascent from the zero start and `restarts` random starts,
    /// bypassing the closed form. Seeded from `self.seed`.
    pub fn maximize(&self, rho: &DensityOperator) -> Result<DeficiencyResult> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut result = self.ascent(rho, &mut rng, &[])?;
        result.bound_gap = Some(result.value - l1_lower_bound(rho));
        Ok(result)
    }

    fn ascent<R: Rng + ?Sized>(
        &self,
        rho: &DensityOperator,
        rng: &mut R,
        extra_starts: &[Vec<f64>],
    ) -> Result<DeficiencyResult> {
        if self.restarts < 1 {
            return Err(Error::arg("at least one restart is required"));
        }
        let d = rho.dim();
        let mut starts: Vec<Vec<f64>> = vec![vec![0.0; d]];
        starts.extend(extra_starts.iter().cloned());
        for _ in 0..self.restarts {
            let mut s: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * TAU).collect();
            s[0] = 0.0;
            starts.push(s);
        }
        let mut best: Option<Ascent> = None;
        let mut total_sweeps = 0;
        for start in &starts {
            let run = ascend(rho, start, self.max_sweeps, self.tolerance);
            total_sweeps += run.sweeps;
            // strict comparison keeps the earliest start on ties
            if best.as_ref().is_none_or(|b| run.objective > b.objective) {
                best = Some(run);
            }
        }
        let best = best.expect("at least one start");
        let phases = PhaseVector::new(&best.angles)?;
        Ok(DeficiencyResult::from_fidelity(
            best.objective,
            phases.to_state(),
            Method::CoordinateAscent,
            total_sweeps,
            best.converged,
        ))
    }
}

/// Coherence deficiency with default solver settings.
pub fn coherence_deficiency(rho: &DensityOperator) -> Result<DeficiencyResult> {
    CoherenceSolver::default().solve(rho)
}

/// Best phase objective over `restarts` random starts of coordinate ascent
/// (plus the all-zero start), regardless of any closed form.
pub fn coherence_fidelity_ascent<R: Rng + ?Sized>(
    rho: &DensityOperator,
    restarts: usize,
    rng: &mut R,
) -> Result<DeficiencyResult> {
    let solver = CoherenceSolver::with_restarts(restarts);
    let mut result = solver.ascent(rho, rng, &[])?;
    result.bound_gap = Some(result.value - l1_lower_bound(rho));
    Ok(result)
}

/// Exhaustive grid evaluation of the phase objective.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleBound {
    /// Largest objective on the grid; a lower bound on the maximal fidelity.
    pub fidelity: f64,
    /// Upper bound on `true max - fidelity`.
    pub gap: f64,
    pub angles: PhaseVector,
}

pub const ORACLE_MAX_DIM: usize = 4;

/// Maximizes the phase objective over the full grid of `points` values per
/// free angle.
///
/// With spacing `h = 2pi/points` the nearest grid point to a maximizer moves
/// each free angle by at most `h/2`, so a phase difference moves by `b_ij = h/2`
/// when it involves the pinned angle and by `b_ij = h` otherwise. The gradient
/// vanishes at the maximizer, which bounds the loss by
/// `(1/d) sum_{i != j} |rho_ij| (b_ij^2/2 + b_ij^3/6)`.
pub fn coherence_fidelity_oracle(rho: &DensityOperator, points: usize) -> Result<OracleBound> {
    let d = rho.dim();
    if d > ORACLE_MAX_DIM {
        return Err(Error::Unsupported(format!(
            "grid oracle is limited to d <= {ORACLE_MAX_DIM}, got {d}"
        )));
    }
    if points < 8 {
        return Err(Error::arg("grid oracle needs at least 8 points per angle"));
    }
    let h = TAU / points as f64;
    let table: Vec<Complex64> = (0..points)
        .map(|k| Complex64::from_polar(1.0, k as f64 * h))
        .collect();
    let free = d - 1;
    let total = points.pow(free as u32);
    let mut z = vec![c(1.0, 0.0); d];
    let mut best = f64::NEG_INFINITY;
    let mut best_idx = vec![0usize; free];
    let mut idx = vec![0usize; free];
    for flat in 0..total {
        let mut rem = flat;
        for k in 0..free {
            idx[k] = rem % points;
            rem /= points;
            z[k + 1] = table[idx[k]];
        }
        let v = objective_unnormalized(rho, &z).re;
        if v > best {
            best = v;
            best_idx.copy_from_slice(&idx);
        }
    }
    let loss = |b: f64| b * b / 2.0 + b * b * b / 6.0;
    let mut gap = 0.0;
    for i in 0..d {
        for j in (0..d).filter(|&j| j != i) {
            let b = if i == 0 || j == 0 { h / 2.0 } else { h };
            gap += rho.entry(i, j).norm() * loss(b);
        }
    }
    let gap = gap / d as f64;
    let mut angles = vec![0.0];
    angles.extend(best_idx.iter().map(|&k| k as f64 * h));
    Ok(OracleBound {
        fidelity: best / d as f64,
        gap,
        angles: PhaseVector::new(&angles)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{haar_unitary, random_density, random_pure_state, CMatrix, CVector};

    fn plus(d: usize) -> DensityOperator {
        PureState::from_phases(&vec![0.0; d]).density()
    }

    fn is_maximally_coherent(psi: &PureState) -> bool {
        let target = 1.0 / (psi.dim() as f64).sqrt();
        psi.amplitudes()
            .iter()
            .all(|a| (a.norm() - target).abs() < 1e-9)
    }

    #[test]
    fn uniform_superposition_has_zero_deficiency() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 1..=6 {
            let r = coherence_fidelity_ascent(&plus(d), 4, &mut rng).unwrap();
            assert!((r.fidelity - 1.0).abs() < 1e-12 && r.value < 1e-12, "d={d}");
            assert!(coherence_deficiency(&plus(d)).unwrap().value < 1e-12);
        }
    }

    #[test]
    fn ascent_on_basis_and_mixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = coherence_fidelity_ascent(&PureState::basis(2, 0).density(), 8, &mut rng).unwrap();
        assert!((r.fidelity - 0.5).abs() < 1e-12 && (r.value - 0.5).abs() < 1e-12);
        let r =
            coherence_fidelity_ascent(&DensityOperator::maximally_mixed(3), 8, &mut rng).unwrap();
        assert!((r.fidelity - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.value - 2.0 / 3.0).abs() < 1e-12);
        assert!(coherence_fidelity_ascent(&plus(2), 0, &mut rng).is_err());
    }

    #[test]
    fn dispatch_examples() {
        let r = coherence_deficiency(&PureState::basis(3, 0).density()).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.method, Method::ClosedForm);

        for alpha in [0.0, 0.3, 1.7, 3.0, -2.2] {
            let v = CVector::from_vec(vec![c(1.0, 0.0), Complex64::from_polar(1.0, alpha)]);
            let psi = PureState::normalized(v).unwrap();
            assert!(coherence_deficiency(&psi.density()).unwrap().value < 1e-12);
        }

        let m =
            CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.3, 0.0), c(0.3, 0.0), c(0.5, 0.0)]);
        let r = coherence_deficiency(&DensityOperator::new(m).unwrap()).unwrap();
        assert!((r.value - 0.2).abs() < 1e-12);
        assert!(is_maximally_coherent(&r.witness));
    }

    #[test]
    fn l1_bound_examples() {
        assert!(l1_lower_bound(&plus(5)).abs() < 1e-12);
        assert!((l1_lower_bound(&PureState::basis(4, 2).density()) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn pure_states_meet_the_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 2..=6 {
            for _ in 0..10 {
                let rho = random_pure_state(d, &mut rng).density();
                let r = coherence_deficiency(&rho).unwrap();
                assert!((r.value - l1_lower_bound(&rho)).abs() < 1e-10);
                assert!(is_maximally_coherent(&r.witness));
                let expected = if d <= 3 {
                    Method::ClosedForm
                } else {
                    Method::PureFormula
                };
                assert_eq!(r.method, expected);
            }
        }
    }

    #[test]
    fn value_plus_fidelity_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in 2..=5 {
            let rho = random_density(d, d, &mut rng).unwrap();
            let r = coherence_deficiency(&rho).unwrap();
            assert!((r.value + r.fidelity - 1.0).abs() < 1e-12);
            assert!(r.bound_gap.unwrap() >= -1e-9);
            assert!(is_maximally_coherent(&r.witness));
            let at_witness = crate::qcore::pure_fidelity(&r.witness, &rho).unwrap();
            assert!((at_witness - r.raw_fidelity).abs() < 1e-10);
        }
    }

    #[test]
    fn inconsistent_qutrit_falls_back_to_ascent() {
        // off-diagonal phases with arg(rho01 rho12 rho20) = pi/2: the l1 bound is not attained
        let a = 0.15;
        let e = |t: f64| Complex64::from_polar(a, t);
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0 / 3.0, 0.0),
                e(0.0),
                e(0.0),
                e(0.0),
                c(1.0 / 3.0, 0.0),
                e(std::f64::consts::FRAC_PI_2),
                e(0.0),
                e(-std::f64::consts::FRAC_PI_2),
                c(1.0 / 3.0, 0.0),
            ],
        );
        let rho = DensityOperator::new(m).unwrap();
        let r = coherence_deficiency(&rho).unwrap();
        assert_eq!(r.method, Method::CoordinateAscent);
        assert!(r.value > l1_lower_bound(&rho) + 1e-3);
        let oracle = coherence_fidelity_oracle(&rho, 128).unwrap();
        assert!(oracle.fidelity <= r.fidelity + 1e-12);
        assert!(r.fidelity <= oracle.fidelity + oracle.gap);
    }

    #[test]
    fn oracle_examples() {
        let o = coherence_fidelity_oracle(&plus(2), 360).unwrap();
        assert!(1.0 - o.fidelity <= 4e-5);
        for d in 1..=4 {
            let probs: Vec<f64> = (1..=d).map(|k| k as f64).collect();
            let s: f64 = probs.iter().sum();
            let rho = DensityOperator::diagonal(&probs.iter().map(|p| p / s).collect::<Vec<_>>())
                .unwrap();
            let o = coherence_fidelity_oracle(&rho, 8).unwrap();
            assert!((o.fidelity - 1.0 / d as f64).abs() < 1e-12);
            assert_eq!(o.gap, 0.0);
        }
        assert!(matches!(
            coherence_fidelity_oracle(&plus(5), 16),
            Err(Error::Unsupported(_))
        ));
        assert!(coherence_fidelity_oracle(&plus(3), 4).is_err());
    }

    #[test]
    fn oracle_brackets_ascent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let d = 3;
            let rho = random_density(d, rng.random_range(2..=d), &mut rng).unwrap();
            let o = coherence_fidelity_oracle(&rho, 64).unwrap();
            let r = coherence_deficiency(&rho).unwrap();
            assert!(o.fidelity <= r.fidelity + 1e-12);
            assert!(r.fidelity <= o.fidelity + o.gap + 1e-12);
        }
    }

    #[test]
    fn diagonal_phase_gauge() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for d in 2..=5 {
            let rho = random_density(d, d, &mut rng).unwrap();
            let phases: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * TAU).collect();
            let u = CMatrix::from_diagonal(&CVector::from_iterator(
                d,
                phases.iter().map(|&t| Complex64::from_polar(1.0, t)),
            ));
            let a = coherence_deficiency(&rho).unwrap().value;
            let b = coherence_deficiency(&rho.conjugate(&u).unwrap())
                .unwrap()
                .value;
            assert!((a - b).abs() < 1e-8, "d={d}: {a} vs {b}");
        }
    }

    #[test]
    fn non_maximal_states_are_strictly_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 2..=4 {
            let u = haar_unitary(d, &mut rng);
            let rho = random_density(d, d, &mut rng)
                .unwrap()
                .conjugate(&u)
                .unwrap();
            assert!(coherence_deficiency(&rho).unwrap().value > 1e-4);
        }
    }

    #[test]
    fn phase_vector_gauge() {
        let p = PhaseVector::new(&[1.0, 2.0, 0.5]).unwrap();
        assert_eq!(p.angles()[0], 0.0);
        assert!((p.angles()[1] - 1.0).abs() < 1e-15);
        assert!((p.angles()[2] - (TAU - 0.5)).abs() < 1e-12);
        assert!(p.angles().iter().all(|t| (0.0..TAU).contains(t)));
        assert!(PhaseVector::new(&[]).is_err());
    }
}
