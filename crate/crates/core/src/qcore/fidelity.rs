use super::{psd_sqrt, tol, trace_norm, DensityOperator, PureState};
use crate::{Error, Result};

/// Fidelity `F(sigma, rho) = ||sqrt(sigma) sqrt(rho)||_1^2`.
///
/// When either argument has numerical rank one the value is computed as
/// `lambda <v|other|v>` from its leading eigenpair, with no matrix square roots.
pub fn fidelity(sigma: &DensityOperator, rho: &DensityOperator) -> Result<f64> {
    if sigma.dim() != rho.dim() {
        return Err(Error::dims(format!(
            "fidelity of {}-dim and {}-dim states",
            sigma.dim(),
            rho.dim()
        )));
    }
    for (pure, other) in [(sigma, rho), (rho, sigma)] {
        let (values, vectors) = pure.eigen();
        if values.iter().filter(|&&v| v > tol::ZERO).count() == 1 {
            let v = vectors.column(0);
            let f = (v.adjoint() * other.matrix() * v)[(0, 0)].re * values[0];
            return Ok(f.clamp(0.0, 1.0));
        }
    }
    let product = psd_sqrt(sigma.matrix()) * psd_sqrt(rho.matrix());
    let norm = trace_norm(&product);
    Ok((norm * norm).clamp(0.0, 1.0))
}

/// `<phi|rho|phi>`, the fidelity against a pure state.
pub fn pure_fidelity(phi: &PureState, rho: &DensityOperator) -> Result<f64> {
    if phi.dim() != rho.dim() {
        return Err(Error::dims("pure fidelity dimension mismatch"));
    }
    let a = phi.amplitudes();
    Ok((a.adjoint() * rho.matrix() * a)[(0, 0)].re)
}
