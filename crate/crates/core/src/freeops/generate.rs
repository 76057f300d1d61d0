use rand::seq::SliceRandom;
use rand::Rng;

use super::channel::{ChannelStructure, KrausChannel};
use crate::qcore::{c, haar_isometry, identity, random_probabilities, CMatrix};
use crate::Result;

/// Families of incoherent channels the generators draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncoherentFlavor {
    /// `K_n = sqrt(p_n) P_n D_n`: random permutations times diagonal phase unitaries.
    PermPhaseMixture,
    /// `K_n = |sigma(n)><n|` for a random relabeling `sigma`.
    BasisMeasurement,
    /// Composition of one to three draws from the other two families.
    Composed,
}

impl IncoherentFlavor {
    pub fn name(self) -> &'static str {
        match self {
            IncoherentFlavor::PermPhaseMixture => "perm_phase_mixture",
            IncoherentFlavor::BasisMeasurement => "basis_measurement",
            IncoherentFlavor::Composed => "composed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "perm_phase_mixture" | "perm-phase-mixture" => Some(Self::PermPhaseMixture),
            "basis_measurement" | "basis-measurement" => Some(Self::BasisMeasurement),
            "composed" => Some(Self::Composed),
            _ => None,
        }
    }
}

const MAX_MIXTURE_TERMS: usize = 4;

fn permutation_matrix(perm: &[usize]) -> CMatrix {
    let d = perm.len();
    let mut p = CMatrix::zeros(d, d);
    for (col, &row) in perm.iter().enumerate() {
        p[(row, col)] = c(1.0, 0.0);
    }
    p
}

fn random_permutation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(rng);
    perm
}

fn perm_phase_mixture<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<KrausChannel> {
    let terms = rng.random_range(1..=MAX_MIXTURE_TERMS);
    let weights = random_probabilities(terms, rng);
    let kraus = weights
        .iter()
        .map(|&p| {
            let perm = permutation_matrix(&random_permutation(d, rng));
            let phases = CMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    num_complex::Complex64::from_polar(
                        1.0,
                        rng.random::<f64>() * std::f64::consts::TAU,
                    )
                } else {
                    c(0.0, 0.0)
                }
            });
            (perm * phases).scale(p.sqrt())
        })
        .collect();
    KrausChannel::new(kraus, ChannelStructure::PermutationMixture)
}

fn basis_measurement<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<KrausChannel> {
    let sigma = random_permutation(d, rng);
    let kraus = (0..d)
        .map(|n| {
            let mut k = CMatrix::zeros(d, d);
            k[(sigma[n], n)] = c(1.0, 0.0);
            k
        })
        .collect();
    KrausChannel::incoherent(kraus)
}

pub fn random_incoherent_channel<R: Rng + ?Sized>(
    d: usize,
    flavor: IncoherentFlavor,
    rng: &mut R,
) -> Result<KrausChannel> {
    match flavor {
        IncoherentFlavor::PermPhaseMixture => perm_phase_mixture(d, rng),
        IncoherentFlavor::BasisMeasurement => basis_measurement(d, rng),
        IncoherentFlavor::Composed => {
            let draws = rng.random_range(1..=3);
            let mut channel: Option<KrausChannel> = None;
            for _ in 0..draws {
                let next = if rng.random::<bool>() {
                    perm_phase_mixture(d, rng)?
                } else {
                    basis_measurement(d, rng)?
                };
                channel = Some(match channel {
                    None => next,
                    Some(ch) => ch.then(&next)?,
                });
            }
            let channel = channel.expect("at least one draw");
            KrausChannel::incoherent(channel.kraus().to_vec())
        }
    }
}

/// Complete Kraus family on `C^d` with `n` operators, cut from a Haar isometry
/// `C^d -> C^(n d)`.
fn isometry_partition<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Vec<CMatrix> {
    let v = haar_isometry(d * n, d, rng);
    (0..n).map(|i| v.rows(i * d, d).into_owned()).collect()
}

/// `Phi_A ⊗ Phi_B` with `n_a` and `n_b` Kraus operators per side.
pub fn random_local_channel<R: Rng + ?Sized>(
    dim_a: usize,
    dim_b: usize,
    n_a: usize,
    n_b: usize,
    rng: &mut R,
) -> Result<KrausChannel> {
    if n_a == 0 || n_b == 0 {
        return Err(crate::Error::arg(
            "each side needs at least one Kraus operator",
        ));
    }
    let ka = isometry_partition(dim_a, n_a, rng);
    let kb = isometry_partition(dim_b, n_b, rng);
    KrausChannel::local(dim_a, dim_b, ka, kb)
}

/// `Phi_A ⊗ id_B` with `n_a` Kraus operators on A.
pub fn random_a_local_channel<R: Rng + ?Sized>(
    dim_a: usize,
    dim_b: usize,
    n_a: usize,
    rng: &mut R,
) -> Result<KrausChannel> {
    if n_a == 0 {
        return Err(crate::Error::arg("need at least one Kraus operator"));
    }
    let ka = isometry_partition(dim_a, n_a, rng);
    KrausChannel::local(dim_a, dim_b, ka, vec![identity(dim_b)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freeops::{cross_term_bound, selective_outcomes};
    use crate::qcore::{is_unitary, random_pure_state, schmidt, PureState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perm_phase_mixture_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        for _ in 0..20 {
            let ch =
                random_incoherent_channel(4, IncoherentFlavor::PermPhaseMixture, &mut rng).unwrap();
            assert_eq!(ch.structure(), &ChannelStructure::PermutationMixture);
            for k in ch.kraus() {
                let moduli: Vec<f64> = k.iter().map(|z| z.norm()).filter(|m| *m > 1e-12).collect();
                assert_eq!(moduli.len(), 4);
                assert!(moduli.iter().all(|m| (m - moduli[0]).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn basis_measurement_is_exactly_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let ch =
            random_incoherent_channel(3, IncoherentFlavor::BasisMeasurement, &mut rng).unwrap();
        assert_eq!(ch.kraus().len(), 3);
        let sum = ch
            .kraus()
            .iter()
            .fold(CMatrix::zeros(3, 3), |acc, k| acc + k.adjoint() * k);
        assert_eq!(sum, identity(3));
    }

    #[test]
    fn composed_stays_incoherent() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        for d in 2..=5 {
            for _ in 0..20 {
                let ch =
                    random_incoherent_channel(d, IncoherentFlavor::Composed, &mut rng).unwrap();
                assert!(ch.structure().is_incoherent());
                assert!(cross_term_bound(&ch).unwrap() <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn single_kraus_local_is_product_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let ch = random_local_channel(2, 3, 1, 1, &mut rng).unwrap();
        assert_eq!(ch.kraus().len(), 1);
        assert!(is_unitary(&ch.kraus()[0], 1e-12));
    }

    #[test]
    fn local_outcomes_of_product_are_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let a = random_pure_state(2, &mut rng);
        let b = random_pure_state(2, &mut rng);
        let psi = PureState::new(a.amplitudes().kronecker(b.amplitudes())).unwrap();
        let ch = random_local_channel(2, 2, 3, 2, &mut rng).unwrap();
        assert_eq!(ch.kraus().len(), 6);
        for o in selective_outcomes(&psi.density(), &ch).unwrap() {
            let Some(post) = o.post_state else { continue };
            let (_, vecs) = post.eigen();
            let v = PureState::normalized(vecs.column(0).into_owned()).unwrap();
            let s = schmidt(&v, 2, 2).unwrap();
            assert!(s.coeffs[1] < 1e-7, "post state not product: {:?}", s.coeffs);
        }
    }

    #[test]
    fn flavor_names_round_trip() {
        for f in [
            IncoherentFlavor::PermPhaseMixture,
            IncoherentFlavor::BasisMeasurement,
            IncoherentFlavor::Composed,
        ] {
            assert_eq!(IncoherentFlavor::parse(f.name()), Some(f));
        }
        assert_eq!(IncoherentFlavor::parse("other"), None);
    }
}
