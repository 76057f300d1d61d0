use super::{c, ensure_square, hermitian_eigen, is_finite, max_abs_diff, tol, CMatrix, CVector};
use crate::{Error, Result};

/// A validated density operator: Hermitian, positive semidefinite, unit trace.
///
/// Inputs that miss a tolerance are rejected rather than repaired.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    mat: CMatrix,
}

impl DensityOperator {
    pub fn new(mat: CMatrix) -> Result<Self> {
        let d = ensure_square(&mat, "density operator")?;
        if !is_finite(&mat) {
            return Err(Error::state("matrix has non-finite entries"));
        }
        let herm = max_abs_diff(&mat, &mat.adjoint());
        if herm > tol::HERMITIAN {
            return Err(Error::state(format!(
                "not Hermitian: max |rho - rho^dagger| = {herm:.3e}"
            )));
        }
        let trace = mat.trace().re;
        if (trace - 1.0).abs() > tol::TRACE {
            return Err(Error::state(format!("trace {trace} differs from 1")));
        }
        let (values, _) = hermitian_eigen(&mat);
        let min = values[d - 1];
        if min < tol::PSD {
            return Err(Error::state(format!(
                "not positive semidefinite: smallest eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { mat })
    }

    /// Divides a positive semidefinite matrix by its trace and validates the result.
    pub fn from_unnormalized(mat: CMatrix) -> Result<Self> {
        let trace = mat.trace().re;
        if trace.is_nan() || trace <= 0.0 || !trace.is_finite() {
            return Err(Error::state(format!(
                "cannot normalize matrix with trace {trace}"
            )));
        }
        Self::new(mat.unscale(trace))
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            mat: psi.amplitudes() * psi.amplitudes().adjoint(),
        }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            mat: CMatrix::identity(d, d).unscale(d as f64),
        }
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let v = CVector::from_iterator(probs.len(), probs.iter().map(|&p| c(p, 0.0)));
        Self::new(CMatrix::from_diagonal(&v))
    }

    /// Convex combination `sum_i w_i rho_i`. Weights must be a probability vector.
    pub fn mixture(parts: &[(f64, &DensityOperator)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::arg("empty mixture"))?
            .1
            .dim();
        let mut acc = CMatrix::zeros(first, first);
        for (w, rho) in parts {
            if rho.dim() != first {
                return Err(Error::dims("mixture components differ in dimension"));
            }
            if *w < 0.0 {
                return Err(Error::arg("negative mixture weight"));
            }
            acc += rho.matrix().scale(*w);
        }
        Self::new(acc)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> num_complex::Complex64 {
        self.mat[(i, j)]
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues (descending) and eigenvectors.
    pub fn eigen(&self) -> (Vec<f64>, CMatrix) {
        hermitian_eigen(&self.mat)
    }

    /// Number of eigenvalues above [`tol::ZERO`].
    pub fn numerical_rank(&self) -> usize {
        self.eigen().0.iter().filter(|&&v| v > tol::ZERO).count()
    }

    /// `U rho U†`. `u` must be unitary of matching dimension.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::dims("conjugating unitary has wrong shape"));
        }
        Self::new(u * &self.mat * u.adjoint())
    }

    /// `sum_ij |rho_ij|`, the entrywise l1 norm.
    pub fn l1_sum(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).sum()
    }
}

/// A normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amp: CVector,
}

impl PureState {
    pub fn new(amp: CVector) -> Result<Self> {
        if amp.is_empty() {
            return Err(Error::state("empty state vector"));
        }
        if !amp.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::state("state vector has non-finite entries"));
        }
        let norm = amp.norm();
        if (norm - 1.0).abs() > tol::NORM {
            return Err(Error::state(format!(
                "state vector norm {norm} differs from 1"
            )));
        }
        Ok(Self { amp })
    }

    /// Normalizes `amp`; fails only for a zero or non-finite vector.
    pub fn normalized(amp: CVector) -> Result<Self> {
        let norm = amp.norm();
        if norm.is_nan() || norm <= 0.0 || !norm.is_finite() {
            return Err(Error::state("cannot normalize a zero vector"));
        }
        Self::new(amp.unscale(norm))
    }

    pub fn basis(d: usize, i: usize) -> Self {
        let mut amp = CVector::zeros(d);
        amp[i] = c(1.0, 0.0);
        Self { amp }
    }

    /// `(1/sqrt(d)) sum_k e^{i theta_k} |k>`.
    pub fn from_phases(angles: &[f64]) -> Self {
        let scale = 1.0 / (angles.len() as f64).sqrt();
        let amp = CVector::from_iterator(
            angles.len(),
            angles
                .iter()
                .map(|&t| num_complex::Complex64::from_polar(scale, t)),
        );
        Self { amp }
    }

    pub fn dim(&self) -> usize {
        self.amp.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amp
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> num_complex::Complex64 {
        self.amp.dotc(&other.amp)
    }
}

/// A density operator on `C^{dim_a} ⊗ C^{dim_b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    dim_a: usize,
    dim_b: usize,
    rho: DensityOperator,
}

impl BipartiteState {
    pub fn new(rho: DensityOperator, dim_a: usize, dim_b: usize) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 || dim_a * dim_b != rho.dim() {
            return Err(Error::dims(format!(
                "local dimensions {dim_a}x{dim_b} do not factor state dimension {}",
                rho.dim()
            )));
        }
        Ok(Self { dim_a, dim_b, rho })
    }

    pub fn from_pure(psi: &PureState, dim_a: usize, dim_b: usize) -> Result<Self> {
        Self::new(psi.density(), dim_a, dim_b)
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }
}

/// Schmidt decomposition `psi = sum_i q_i |a_i> ⊗ |b_i>`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtData {
    /// Nonincreasing, nonnegative; `min(dim_a, dim_b)` entries.
    pub coeffs: Vec<f64>,
    pub basis_a: Vec<CVector>,
    pub basis_b: Vec<CVector>,
}

impl SchmidtData {
    pub fn reconstruct(&self) -> CVector {
        let da = self.basis_a[0].len();
        let db = self.basis_b[0].len();
        let mut out = CVector::zeros(da * db);
        for ((q, a), b) in self.coeffs.iter().zip(&self.basis_a).zip(&self.basis_b) {
            out += a.kronecker(b).scale(*q);
        }
        out
    }
}
