//! Complex linear algebra and quantum-state primitives shared by the measures.
//!
//! Tensor ordering is fixed throughout the crate: the basis vector
//! `|a> ⊗ |b>` has index `a * dim_b + b`, subsystem A being the slow factor.

mod fidelity;
mod majorize;
mod random;
mod schmidt;
mod state;

pub use fidelity::{fidelity, pure_fidelity};
pub use majorize::majorizes;
pub use random::{
    ginibre, haar_isometry, haar_unitary, random_density, random_probabilities, random_pure_state,
    substream,
};
pub use schmidt::{partial_trace, schmidt, Subsystem};
pub use state::{BipartiteState, DensityOperator, PureState, SchmidtData};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Validation tolerances for states and channels.
pub mod tol {
    /// Largest allowed entry of `|m - m†|` for a Hermitian matrix.
    pub const HERMITIAN: f64 = 1e-9;
    /// Largest allowed `|tr(rho) - 1|`.
    pub const TRACE: f64 = 1e-10;
    /// Smallest allowed eigenvalue of a positive semidefinite matrix.
    pub const PSD: f64 = -1e-10;
    /// Largest allowed `| ||psi|| - 1 |` for a pure state.
    pub const NORM: f64 = 1e-10;
    /// Eigenvalues and singular values below this count as zero.
    pub const ZERO: f64 = 1e-12;
    /// Completeness and unitarity tolerance.
    pub const COMPLETENESS: f64 = 1e-9;
}

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Largest entrywise modulus of `a - b`. Panics on shape mismatch.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_unitary(u: &CMatrix, tolerance: f64) -> bool {
    u.is_square() && max_abs_diff(&(u.adjoint() * u), &identity(u.nrows())) <= tolerance
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

/// Eigendecomposition of the Hermitian part of `m`, eigenvalues sorted
/// descending with eigenvectors in matching columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(h);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Principal square root of a positive semidefinite matrix. Eigenvalues
/// below [`tol::ZERO`] are clamped to zero before the root is taken.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let roots = DVector::from_iterator(
        values.len(),
        values
            .iter()
            .map(|&v| c(if v < tol::ZERO { 0.0 } else { v.sqrt() }, 0.0)),
    );
    &vectors * CMatrix::from_diagonal(&roots) * vectors.adjoint()
}

/// Closest unitary to a square matrix in Frobenius norm (unitary polar factor).
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    u * v_t
}

/// Trace norm, the sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    m.clone().singular_values().iter().sum()
}

pub(crate) fn ensure_square(m: &CMatrix, what: &str) -> Result<usize> {
    if m.nrows() == 0 || !m.is_square() {
        return Err(Error::dims(format!(
            "{what} must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// Completes the unit vector `first` to an orthonormal basis. The remaining
/// columns come from Gram-Schmidt on `fill`, whose columns are used in order.
pub(crate) fn complete_basis(first: &CVector, fill: &CMatrix) -> CMatrix {
    let d = first.len();
    let mut cols: Vec<CVector> = vec![first.clone()];
    for k in 0..fill.ncols() {
        if cols.len() == d {
            break;
        }
        let mut v: CVector = fill.column(k).into_owned();
        // two passes keep the basis orthonormal to roundoff
        for _ in 0..2 {
            for q in &cols {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v.unscale(norm));
        }
    }
    assert_eq!(cols.len(), d, "fill matrix did not span the complement");
    CMatrix::from_columns(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psd_sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(4, 4, &mut rng).unwrap();
        let s = psd_sqrt(rho.matrix());
        assert!(max_abs_diff(&(&s * &s), rho.matrix()) < 1e-12);
    }

    #[test]
    fn polar_factor_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = ginibre(3, 3, &mut rng);
        assert!(is_unitary(&polar_unitary(&g), 1e-12));
    }

    #[test]
    fn eigen_sorted_descending() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            c(0.1, 0.0),
            c(0.7, 0.0),
            c(0.2, 0.0),
        ]));
        let (values, vectors) = hermitian_eigen(&m);
        assert_eq!(values.len(), 3);
        assert!((values[0] - 0.7).abs() < 1e-15 && (values[2] - 0.1).abs() < 1e-15);
        assert!((vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complete_basis_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = random_pure_state(5, &mut rng);
        let fill = ginibre(5, 5, &mut rng);
        let b = complete_basis(psi.amplitudes(), &fill);
        assert!(is_unitary(&b, 1e-12));
        assert!((b.column(0) - psi.amplitudes()).norm() < 1e-15);
    }
}
