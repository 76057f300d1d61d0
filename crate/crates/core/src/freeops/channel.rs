use crate::qcore::{identity, is_finite, kron, max_abs_diff, tol, CMatrix, DensityOperator};
use crate::{Error, Result};

/// Outcomes with probability at or below this carry no post-measurement state.
pub const ZERO_PROBABILITY: f64 = 1e-12;
/// Entries with modulus above this count as nonzero in structure checks.
const NONZERO: f64 = 1e-12;

/// Factor Kraus families of a product channel `Phi_A ⊗ Phi_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFactors {
    pub dim_a: usize,
    pub dim_b: usize,
    pub kraus_a: Vec<CMatrix>,
    pub kraus_b: Vec<CMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelStructure {
    General,
    /// At most one nonzero entry per column in every Kraus operator.
    Incoherent,
    /// Kraus operators `sqrt(p_n) P_n D_n` with permutations `P_n` and diagonal unitaries `D_n`.
    PermutationMixture,
    /// Kraus operators `K_A^(n) ⊗ K_B^(m)`, ordered with `m` fastest.
    LocalProduct(LocalFactors),
}

impl ChannelStructure {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelStructure::General => "general",
            ChannelStructure::Incoherent => "incoherent",
            ChannelStructure::PermutationMixture => "permutation_mixture",
            ChannelStructure::LocalProduct(_) => "local_product",
        }
    }

    pub fn is_incoherent(&self) -> bool {
        matches!(
            self,
            ChannelStructure::Incoherent | ChannelStructure::PermutationMixture
        )
    }
}

/// A completely positive trace-preserving map in Kraus form, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    kraus: Vec<CMatrix>,
    structure: ChannelStructure,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>, structure: ChannelStructure) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        let shape = first.shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::InvalidChannel("empty Kraus operator".into()));
        }
        for k in &kraus {
            if k.shape() != shape {
                return Err(Error::InvalidChannel(
                    "Kraus operators differ in shape".into(),
                ));
            }
            if !is_finite(k) {
                return Err(Error::InvalidChannel("non-finite Kraus entry".into()));
            }
        }
        check_complete(&kraus)?;
        match &structure {
            ChannelStructure::General => {}
            ChannelStructure::Incoherent => {
                if let Some(n) = kraus.iter().position(|k| !column_structured(k)) {
                    return Err(Error::InvalidChannel(format!(
                        "Kraus operator {n} has more than one nonzero entry in a column"
                    )));
                }
            }
            ChannelStructure::PermutationMixture => {
                if let Some(n) = kraus.iter().position(|k| !scaled_phase_permutation(k)) {
                    return Err(Error::InvalidChannel(format!(
                        "Kraus operator {n} is not a scaled phased permutation"
                    )));
                }
            }
            ChannelStructure::LocalProduct(f) => {
                if f.dim_a * f.dim_b != shape.1 || shape.0 != shape.1 {
                    return Err(Error::InvalidChannel(
                        "local dimensions do not match".into(),
                    ));
                }
                check_complete(&f.kraus_a)?;
                check_complete(&f.kraus_b)?;
                let products = product_family(&f.kraus_a, &f.kraus_b);
                if products.len() != kraus.len()
                    || products
                        .iter()
                        .zip(&kraus)
                        .any(|(p, k)| max_abs_diff(p, k) > 1e-12)
                {
                    return Err(Error::InvalidChannel(
                        "Kraus list is not the tensor product of the stored factors".into(),
                    ));
                }
            }
        }
        Ok(Self { kraus, structure })
    }

    pub fn general(kraus: Vec<CMatrix>) -> Result<Self> {
        Self::new(kraus, ChannelStructure::General)
    }

    pub fn incoherent(kraus: Vec<CMatrix>) -> Result<Self> {
        Self::new(kraus, ChannelStructure::Incoherent)
    }

    /// `Phi_A ⊗ Phi_B` from complete factor families.
    pub fn local(
        dim_a: usize,
        dim_b: usize,
        kraus_a: Vec<CMatrix>,
        kraus_b: Vec<CMatrix>,
    ) -> Result<Self> {
        for (k, d) in kraus_a
            .iter()
            .map(|k| (k, dim_a))
            .chain(kraus_b.iter().map(|k| (k, dim_b)))
        {
            if k.shape() != (d, d) {
                return Err(Error::InvalidChannel(
                    "local Kraus factor has wrong shape".into(),
                ));
            }
        }
        let kraus = product_family(&kraus_a, &kraus_b);
        Self::new(
            kraus,
            ChannelStructure::LocalProduct(LocalFactors {
                dim_a,
                dim_b,
                kraus_a,
                kraus_b,
            }),
        )
    }

    pub fn identity(d: usize) -> Self {
        Self {
            kraus: vec![identity(d)],
            structure: ChannelStructure::PermutationMixture,
        }
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn structure(&self) -> &ChannelStructure {
        &self.structure
    }

    pub fn dim_in(&self) -> usize {
        self.kraus[0].ncols()
    }

    pub fn dim_out(&self) -> usize {
        self.kraus[0].nrows()
    }

    /// `other ∘ self`: Kraus operators `L_m K_n`, dropping exact zeros.
    pub fn then(&self, other: &KrausChannel) -> Result<KrausChannel> {
        if other.dim_in() != self.dim_out() {
            return Err(Error::dims("composed channels do not chain"));
        }
        let kraus: Vec<CMatrix> = other
            .kraus
            .iter()
            .flat_map(|l| self.kraus.iter().map(move |k| l * k))
            .filter(|m| m.iter().any(|z| z.norm() > 0.0))
            .collect();
        let structure = match (&self.structure, &other.structure) {
            (ChannelStructure::PermutationMixture, ChannelStructure::PermutationMixture) => {
                ChannelStructure::PermutationMixture
            }
            (a, b) if a.is_incoherent() && b.is_incoherent() => ChannelStructure::Incoherent,
            (ChannelStructure::LocalProduct(f), ChannelStructure::LocalProduct(g))
                if f.dim_a == g.dim_a && f.dim_b == g.dim_b =>
            {
                let compose = |outer: &[CMatrix], inner: &[CMatrix]| -> Vec<CMatrix> {
                    outer
                        .iter()
                        .flat_map(|l| inner.iter().map(move |k| l * k))
                        .collect()
                };
                return KrausChannel::local(
                    f.dim_a,
                    f.dim_b,
                    compose(&g.kraus_a, &f.kraus_a),
                    compose(&g.kraus_b, &f.kraus_b),
                );
            }
            _ => ChannelStructure::General,
        };
        KrausChannel::new(kraus, structure)
    }

    /// True for a product channel whose B factor is the identity map.
    pub fn is_a_local(&self) -> bool {
        match &self.structure {
            ChannelStructure::LocalProduct(f) => {
                f.kraus_b.len() == 1 && max_abs_diff(&f.kraus_b[0], &identity(f.dim_b)) <= 1e-12
            }
            _ => false,
        }
    }
}

fn product_family(a: &[CMatrix], b: &[CMatrix]) -> Vec<CMatrix> {
    a.iter()
        .flat_map(|ka| b.iter().map(move |kb| kron(ka, kb)))
        .collect()
}

fn check_complete(kraus: &[CMatrix]) -> Result<()> {
    let d = kraus
        .first()
        .ok_or_else(|| Error::InvalidChannel("empty Kraus family".into()))?
        .ncols();
    let sum = kraus
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k);
    let err = max_abs_diff(&sum, &identity(d));
    if err > tol::COMPLETENESS {
        return Err(Error::InvalidChannel(format!(
            "Kraus operators are not complete: max |sum K^dagger K - I| = {err:.3e}"
        )));
    }
    Ok(())
}

fn column_structured(k: &CMatrix) -> bool {
    (0..k.ncols()).all(|j| k.column(j).iter().filter(|z| z.norm() > NONZERO).count() <= 1)
}

fn scaled_phase_permutation(k: &CMatrix) -> bool {
    if !k.is_square() {
        return false;
    }
    let n = k.nrows();
    let mut scale = None;
    let mut row_used = vec![false; n];
    for j in 0..n {
        let nz: Vec<usize> = (0..n).filter(|&i| k[(i, j)].norm() > NONZERO).collect();
        if nz.len() != 1 || row_used[nz[0]] {
            return false;
        }
        row_used[nz[0]] = true;
        let m = k[(nz[0], j)].norm();
        match scale {
            None => scale = Some(m),
            Some(s) if (s - m).abs() > 1e-12 => return false,
            _ => {}
        }
    }
    true
}

/// `Phi(rho) = sum_n K_n rho K_n†`.
pub fn apply_channel(rho: &DensityOperator, ch: &KrausChannel) -> Result<DensityOperator> {
    if rho.dim() != ch.dim_in() {
        return Err(Error::dims(format!(
            "channel on {} dims applied to a {}-dim state",
            ch.dim_in(),
            rho.dim()
        )));
    }
    let d = ch.dim_out();
    let out = ch.kraus.iter().fold(CMatrix::zeros(d, d), |acc, k| {
        acc + k * rho.matrix() * k.adjoint()
    });
    DensityOperator::new(hermitize(out))
}

fn hermitize(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()).scale(0.5)
}

/// One branch of a selective measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectiveOutcome {
    pub prob: f64,
    /// `K_n rho K_n† / p_n`; `None` when `p_n <= ZERO_PROBABILITY`.
    pub post_state: Option<DensityOperator>,
}

pub fn selective_outcomes(
    rho: &DensityOperator,
    ch: &KrausChannel,
) -> Result<Vec<SelectiveOutcome>> {
    if rho.dim() != ch.dim_in() {
        return Err(Error::dims("selective measurement dimension mismatch"));
    }
    ch.kraus
        .iter()
        .map(|k| {
            let m = hermitize(k * rho.matrix() * k.adjoint());
            let prob = m.trace().re;
            let post_state = if prob > ZERO_PROBABILITY {
                Some(DensityOperator::from_unnormalized(m)?)
            } else {
                None
            };
            Ok(SelectiveOutcome {
                prob: prob.max(0.0),
                post_state,
            })
        })
        .collect()
}

/// `max_{i,j} sum_n |k_i^(n)| |k_j^(n)|` where `k_j^(n)` is the nonzero entry
/// of column `j` of `K_n` (zero if the column vanishes). At most 1 for any
/// complete incoherent channel.
pub fn cross_term_bound(ch: &KrausChannel) -> Result<f64> {
    if !ch.structure().is_incoherent() {
        return Err(Error::InvalidChannel(
            "cross-term bound is defined for incoherent channels".into(),
        ));
    }
    let d = ch.dim_in();
    let column_entries: Vec<Vec<f64>> = ch
        .kraus
        .iter()
        .map(|k| {
            (0..d)
                .map(|j| k.column(j).iter().map(|z| z.norm()).fold(0.0, f64::max))
                .collect()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let s: f64 = column_entries.iter().map(|k| k[i] * k[j]).sum();
            worst = worst.max(s);
        }
    }
    Ok(worst)
}
