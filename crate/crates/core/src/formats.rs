//! JSON interchange formats. Complex arrays are stored as separate `re` and
//! `im` arrays of the same shape. Floats are written in shortest round-trip
//! form, so serialize/deserialize reproduces every matrix bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discrimination::{DiscriminationStrategy, Povm, SubchannelEnsemble};
use crate::freeops::{ChannelStructure, KrausChannel};
use crate::qcore::{c, BipartiteState, CMatrix, CVector, DensityOperator, PureState};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: fn(&num_complex::Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let rows = self.re.len();
        if rows == 0 || self.im.len() != rows {
            return Err(Error::Parse(
                "re/im must be non-empty with equal row counts".into(),
            ));
        }
        let cols = self.re[0].len();
        if cols == 0
            || self.re.iter().any(|r| r.len() != cols)
            || self.im.iter().any(|r| r.len() != cols)
        {
            return Err(Error::Parse(
                "re/im rows must all have the same length".into(),
            ));
        }
        Ok(CMatrix::from_fn(rows, cols, |i, j| {
            c(self.re[i][j], self.im[i][j])
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl VectorJson {
    pub fn from_vector(v: &CVector) -> Self {
        Self {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_vector(&self) -> Result<CVector> {
        if self.re.len() != self.im.len() || self.re.is_empty() {
            return Err(Error::Parse(
                "vector re/im must be non-empty and equal length".into(),
            ));
        }
        Ok(CVector::from_iterator(
            self.re.len(),
            self.re.iter().zip(&self.im).map(|(&r, &i)| c(r, i)),
        ))
    }
}

/// A density matrix with its tensor-factor dimensions (one entry, or two for
/// a bipartite state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl StateFile {
    pub fn from_density(rho: &DensityOperator, dims: &[usize]) -> Self {
        let m = MatrixJson::from_matrix(rho.matrix());
        Self {
            dims: dims.to_vec(),
            re: m.re,
            im: m.im,
        }
    }

    pub fn from_bipartite(state: &BipartiteState) -> Self {
        Self::from_density(state.rho(), &[state.dim_a(), state.dim_b()])
    }

    pub fn from_pure(psi: &PureState, dims: &[usize]) -> Self {
        Self::from_density(&psi.density(), dims)
    }

    /// Shape checks fail with [`Error::Parse`]; state invariants with [`Error::InvalidState`].
    pub fn matrix(&self) -> Result<CMatrix> {
        if self.dims.is_empty() || self.dims.len() > 2 || self.dims.contains(&0) {
            return Err(Error::Parse(
                "dims must hold one or two positive integers".into(),
            ));
        }
        let side: usize = self.dims.iter().product();
        let m = MatrixJson {
            re: self.re.clone(),
            im: self.im.clone(),
        }
        .to_matrix()?;
        if m.nrows() != side || m.ncols() != side {
            return Err(Error::Parse(format!(
                "matrix is {}x{}, dims require {side}x{side}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(m)
    }

    pub fn density(&self) -> Result<DensityOperator> {
        DensityOperator::new(self.matrix()?)
    }

    pub fn bipartite(&self) -> Result<BipartiteState> {
        if self.dims.len() != 2 {
            return Err(Error::Unsupported(
                "a bipartite state needs two dims".into(),
            ));
        }
        BipartiteState::new(self.density()?, self.dims[0], self.dims[1])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serializes")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub structure: String,
    pub kraus: Vec<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_dims: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus_a: Option<Vec<MatrixJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus_b: Option<Vec<MatrixJson>>,
}

impl ChannelFile {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        let list = |ks: &[CMatrix]| ks.iter().map(MatrixJson::from_matrix).collect::<Vec<_>>();
        let (local_dims, kraus_a, kraus_b) = match ch.structure() {
            ChannelStructure::LocalProduct(f) => (
                Some([f.dim_a, f.dim_b]),
                Some(list(&f.kraus_a)),
                Some(list(&f.kraus_b)),
            ),
            _ => (None, None, None),
        };
        Self {
            structure: ch.structure().name().to_string(),
            kraus: list(ch.kraus()),
            local_dims,
            kraus_a,
            kraus_b,
        }
    }

    pub fn channel(&self) -> Result<KrausChannel> {
        let list = |ks: &[MatrixJson]| {
            ks.iter()
                .map(MatrixJson::to_matrix)
                .collect::<Result<Vec<_>>>()
        };
        let kraus = list(&self.kraus)?;
        let structure = match self.structure.as_str() {
            "general" => ChannelStructure::General,
            "incoherent" => ChannelStructure::Incoherent,
            "permutation_mixture" => ChannelStructure::PermutationMixture,
            "local_product" => {
                let (Some([da, db]), Some(a), Some(b)) =
                    (self.local_dims, &self.kraus_a, &self.kraus_b)
                else {
                    return Err(Error::Parse(
                        "local_product channel needs local_dims, kraus_a, kraus_b".into(),
                    ));
                };
                return KrausChannel::local(da, db, list(a)?, list(b)?);
            }
            other => return Err(Error::Parse(format!("unknown channel structure {other:?}"))),
        };
        KrausChannel::new(kraus, structure)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyFile {
    /// Kraus operators of each subchannel.
    pub subchannels: Vec<Vec<MatrixJson>>,
    pub povm: Vec<MatrixJson>,
}

impl StrategyFile {
    pub fn from_strategy(s: &DiscriminationStrategy) -> Self {
        Self {
            subchannels: s
                .ensemble()
                .subchannels()
                .iter()
                .map(|ks| ks.iter().map(MatrixJson::from_matrix).collect())
                .collect(),
            povm: s
                .povm()
                .effects()
                .iter()
                .map(MatrixJson::from_matrix)
                .collect(),
        }
    }

    pub fn strategy(&self) -> Result<DiscriminationStrategy> {
        let subchannels = self
            .subchannels
            .iter()
            .map(|ks| {
                ks.iter()
                    .map(MatrixJson::to_matrix)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let effects = self
            .povm
            .iter()
            .map(MatrixJson::to_matrix)
            .collect::<Result<Vec<_>>>()?;
        DiscriminationStrategy::new(SubchannelEnsemble::new(subchannels)?, Povm::new(effects)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("strategy serializes")
    }
}
