use serde::Serialize;

use super::channel::{ChannelStructure, KrausChannel, ZERO_PROBABILITY};
use crate::qcore::{majorizes, schmidt, PureState};
use crate::{Error, Result};

/// One outcome of an A-local measurement on a pure bipartite state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MajorizationStep {
    pub outcome: usize,
    pub prob: f64,
    /// Squared Schmidt coefficients of the normalized post-measurement state.
    pub x: Vec<f64>,
    /// `q_i^2 |K a_i|^2 / p` for input Schmidt data `(q_i, a_i)`.
    pub y: Vec<f64>,
    pub majorizes: bool,
    /// `sum_ij sqrt(x_i x_j)`.
    pub schur_lhs: f64,
    /// `sum_ij sqrt(y_i y_j)`.
    pub schur_rhs: f64,
}

fn schur_sum(v: &[f64]) -> f64 {
    let s: f64 = v.iter().map(|t| t.max(0.0).sqrt()).sum();
    s * s
}

/// Compares, outcome by outcome, the post-measurement Schmidt spectrum with
/// the vector obtained by pushing the input Schmidt basis through the A-side
/// Kraus operator. Outcomes with probability at most `ZERO_PROBABILITY` are skipped.
pub fn majorization_witness(
    psi: &PureState,
    ch: &KrausChannel,
    dim_a: usize,
    dim_b: usize,
) -> Result<Vec<MajorizationStep>> {
    let factors = match ch.structure() {
        ChannelStructure::LocalProduct(f) if ch.is_a_local() => f,
        _ => {
            return Err(Error::InvalidChannel(
                "channel must act on subsystem A only".into(),
            ))
        }
    };
    if factors.dim_a != dim_a || factors.dim_b != dim_b {
        return Err(Error::dims("channel and state split differently"));
    }
    let sd = schmidt(psi, dim_a, dim_b)?;
    let mut steps = Vec::new();
    for (n, (k_a, k)) in factors.kraus_a.iter().zip(ch.kraus()).enumerate() {
        let weights: Vec<f64> = sd
            .coeffs
            .iter()
            .zip(&sd.basis_a)
            .map(|(q, a)| q * q * (k_a * a).norm_squared())
            .collect();
        let prob: f64 = weights.iter().sum();
        if prob <= ZERO_PROBABILITY {
            continue;
        }
        let post = PureState::normalized(k * psi.amplitudes())?;
        let x: Vec<f64> = schmidt(&post, dim_a, dim_b)?
            .coeffs
            .iter()
            .map(|q| q * q)
            .collect();
        let y: Vec<f64> = weights.iter().map(|w| w / prob).collect();
        steps.push(MajorizationStep {
            outcome: n,
            prob,
            majorizes: majorizes(&x, &y)?,
            schur_lhs: schur_sum(&x),
            schur_rhs: schur_sum(&y),
            x,
            y,
        });
    }
    Ok(steps)
}
