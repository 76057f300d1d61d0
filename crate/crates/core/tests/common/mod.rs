#![allow(dead_code)]

use deficiency_core::qcore::{hermitian_eigen, CMatrix};
use deficiency_core::DensityOperator;
use num_complex::Complex64;

/// Exact entangled fraction of a two-qubit state: the largest eigenvalue of
/// the real part of `rho` written in the magic basis, where maximally
/// entangled states are exactly the real unit vectors.
pub fn magic_entangled_fraction(rho: &DensityOperator) -> f64 {
    assert_eq!(rho.dim(), 4);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = Complex64::new;
    let z = c(0.0, 0.0);
    let r = |x: f64| c(x, 0.0);
    let i = |x: f64| c(0.0, x);
    // columns: (|00>+|11>)/√2, i(|00>-|11>)/√2, i(|01>+|10>)/√2, (|01>-|10>)/√2
    let m = CMatrix::from_row_slice(
        4,
        4,
        &[
            r(s),
            i(s),
            z,
            z,
            z,
            z,
            i(s),
            r(s),
            z,
            z,
            i(s),
            r(-s),
            r(s),
            i(-s),
            z,
            z,
        ],
    );
    let rho_m = m.adjoint() * rho.matrix() * &m;
    let re = CMatrix::from_fn(4, 4, |a, b| c(rho_m[(a, b)].re, 0.0));
    hermitian_eigen(&re).0[0]
}
