//! JSON file formats for matrices, ensembles, structures and distributions.
//!
//! A matrix is `{"re": [[..]], "im": [[..]]}` (`im` optional, `dim` optional
//! and checked when present) or `{"diag": [..]}`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{Ensemble, KIStructure, RedundantBlock};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, DensityMatrix, HermitianMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixJson {
    Diagonal {
        diag: Vec<f64>,
    },
    Dense {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<Vec<f64>>>,
    },
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let is_diag = (0..m.nrows())
            .all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == Complex64::new(0.0, 0.0)))
            && (0..m.nrows()).all(|i| m[(i, i)].im == 0.0);
        if is_diag && m.is_square() {
            return MatrixJson::Diagonal {
                diag: (0..m.nrows()).map(|i| m[(i, i)].re).collect(),
            };
        }
        let grid = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        let im = grid(|c| c.im);
        MatrixJson::Dense {
            dim: Some(m.nrows()),
            re: grid(|c| c.re),
            im: im.iter().flatten().any(|x| *x != 0.0).then_some(im),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        match self {
            MatrixJson::Diagonal { diag } => {
                let n = diag.len();
                Ok(CMatrix::from_fn(n, n, |i, j| {
                    Complex64::new(if i == j { diag[i] } else { 0.0 }, 0.0)
                }))
            }
            MatrixJson::Dense { dim, re, im } => {
                let n = re.len();
                if let Some(d) = dim {
                    if *d != n {
                        return Err(Error::DimensionMismatch {
                            expected: *d,
                            found: n,
                        });
                    }
                }
                let cols = re.first().map_or(0, Vec::len);
                let rectangular =
                    |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == cols);
                if !rectangular(re) || im.as_ref().is_some_and(|m| !rectangular(m)) {
                    return Err(Error::arg("matrix rows have inconsistent lengths"));
                }
                Ok(CMatrix::from_fn(n, cols, |i, j| {
                    Complex64::new(re[i][j], im.as_ref().map_or(0.0, |m| m[i][j]))
                }))
            }
        }
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(HermitianMatrix::new(self.to_matrix()?)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MemberJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub p: f64,
    pub state: MatrixJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleJson {
    pub members: Vec<MemberJson>,
}

impl EnsembleJson {
    pub fn from_ensemble(e: &Ensemble) -> Self {
        Self {
            members: e
                .iter()
                .map(|(label, p, rho)| MemberJson {
                    label: Some(label.to_string()),
                    p,
                    state: MatrixJson::from_matrix(rho.matrix()),
                })
                .collect(),
        }
    }

    pub fn to_ensemble(&self) -> Result<Ensemble> {
        let labels = self
            .members
            .iter()
            .enumerate()
            .map(|(i, m)| m.label.clone().unwrap_or_else(|| (i + 1).to_string()))
            .collect();
        let probs = self.members.iter().map(|m| m.p).collect();
        let states = self
            .members
            .iter()
            .map(|m| m.state.to_density())
            .collect::<Result<Vec<_>>>()?;
        Ensemble::with_labels(labels, probs, states)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockJson {
    #[serde(rename = "dimQ")]
    pub dim_q: usize,
    #[serde(rename = "dimR")]
    pub dim_r: usize,
    /// Defaults to `[[1]]` when `dimR = 1`.
    #[serde(rename = "rhoR", default, skip_serializing_if = "Option::is_none")]
    pub rho_r: Option<MatrixJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructureJson {
    pub blocks: Vec<BlockJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<MatrixJson>,
}

impl StructureJson {
    pub fn from_structure(s: &KIStructure) -> Self {
        Self {
            blocks: s
                .blocks()
                .iter()
                .map(|b| BlockJson {
                    dim_q: b.dim_q,
                    dim_r: b.dim_r,
                    rho_r: Some(MatrixJson::from_matrix(b.rho_r.matrix())),
                })
                .collect(),
            basis: s.basis().map(MatrixJson::from_matrix),
        }
    }

    pub fn to_structure(&self) -> Result<KIStructure> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let rho_r = match &b.rho_r {
                    Some(m) => m.to_density()?,
                    None if b.dim_r == 1 => DensityMatrix::maximally_mixed(1),
                    None => return Err(Error::arg("rhoR is required when dimR > 1")),
                };
                if rho_r.dim() != b.dim_r {
                    return Err(Error::DimensionMismatch {
                        expected: b.dim_r,
                        found: rho_r.dim(),
                    });
                }
                Ok(RedundantBlock::new(b.dim_q, rho_r))
            })
            .collect::<Result<Vec<_>>>()?;
        let basis = self.basis.as_ref().map(MatrixJson::to_matrix).transpose()?;
        KIStructure::new(blocks, basis)
    }
}

/// A distribution file: either a bare array or `{"p": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistributionJson {
    Bare(Vec<f64>),
    Object { p: Vec<f64> },
}

impl DistributionJson {
    pub fn into_values(self) -> Vec<f64> {
        match self {
            DistributionJson::Bare(v) | DistributionJson::Object { p: v } => v,
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_ensemble(path: &Path) -> Result<Ensemble> {
    read_json::<EnsembleJson>(path)?.to_ensemble()
}

pub fn read_structure(path: &Path) -> Result<KIStructure> {
    read_json::<StructureJson>(path)?.to_structure()
}
