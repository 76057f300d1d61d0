use super::{BipartiteState, CMatrix, CVector, DensityOperator, PureState, SchmidtData};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Schmidt decomposition from the SVD of the `dim_a x dim_b` coefficient matrix.
pub fn schmidt(psi: &PureState, dim_a: usize, dim_b: usize) -> Result<SchmidtData> {
    if dim_a == 0 || dim_b == 0 || dim_a * dim_b != psi.dim() {
        return Err(Error::dims(format!(
            "cannot split a {}-dim vector as {dim_a}x{dim_b}",
            psi.dim()
        )));
    }
    let amp = psi.amplitudes();
    let coeff = CMatrix::from_fn(dim_a, dim_b, |a, b| amp[a * dim_b + b]);
    let svd = coeff.svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    let k = dim_a.min(dim_b);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));

    let coeffs = order
        .iter()
        .map(|&i| svd.singular_values[i].max(0.0))
        .collect();
    let basis_a = order.iter().map(|&i| u.column(i).into_owned()).collect();
    let basis_b = order
        .iter()
        .map(|&i| CVector::from_iterator(dim_b, v_t.row(i).iter().copied()))
        .collect();
    Ok(SchmidtData {
        coeffs,
        basis_a,
        basis_b,
    })
}

/// Reduced state on the kept subsystem.
pub fn partial_trace(state: &BipartiteState, keep: Subsystem) -> Result<DensityOperator> {
    let (da, db) = (state.dim_a(), state.dim_b());
    let rho = state.rho().matrix();
    let reduced = match keep {
        Subsystem::A => CMatrix::from_fn(da, da, |a, a2| {
            (0..db).map(|b| rho[(a * db + b, a2 * db + b)]).sum()
        }),
        Subsystem::B => CMatrix::from_fn(db, db, |b, b2| {
            (0..da).map(|a| rho[(a * db + b, a * db + b2)]).sum()
        }),
    };
    DensityOperator::new(reduced)
}
