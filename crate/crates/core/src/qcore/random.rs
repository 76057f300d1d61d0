use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use sha2::{Digest, Sha256};

use super::{c, CMatrix, DensityOperator, PureState};
use crate::{Error, Result};

/// Deterministic RNG for the named substream `label` of a master seed,
/// e.g. `substream(42, "trial/17/state")`.
pub fn substream(seed: u64, label: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Matrix of i.i.d. standard complex Gaussians (`E|z|^2 = 1`).
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * s, im * s)
    })
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(d, d, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..d {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() > 0.0 {
            rkk / rkk.norm()
        } else {
            c(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// First `cols` columns of a Haar unitary on `C^rows`.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(cols <= rows, "isometry needs cols <= rows");
    haar_unitary(rows, rng).columns(0, cols).into_owned()
}

pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> PureState {
    let g = ginibre(d, 1, rng);
    PureState::normalized(g.column(0).into_owned()).expect("gaussian vector is nonzero")
}

/// `G G† / tr(G G†)` for a `d x rank` Ginibre matrix `G` (induced measure).
pub fn random_density<R: Rng + ?Sized>(
    d: usize,
    rank: usize,
    rng: &mut R,
) -> Result<DensityOperator> {
    if rank == 0 || rank > d {
        return Err(Error::arg(format!("rank {rank} outside 1..={d}")));
    }
    let g = ginibre(d, rank, rng);
    DensityOperator::from_unnormalized(&g * g.adjoint())
}

/// Uniform point on the probability simplex (flat Dirichlet).
pub fn random_probabilities<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}
