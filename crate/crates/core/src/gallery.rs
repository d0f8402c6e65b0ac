//! Hand-built ensembles whose finite approximations expose large redundant
//! parts, with closed-form reference values.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::ensemble::{Ensemble, KIStructure, RedundantBlock};
use crate::error::{Error, Result};
use crate::linalg::{binary_entropy, direct_sum, shannon_entropy, DensityMatrix, HermitianMatrix};

#[derive(Clone, Debug)]
pub struct GalleryCase {
    pub name: String,
    pub epsilon: f64,
    pub ensemble: Ensemble,
    /// Ensemble from which `approx_structure` was read off.
    pub approx_ensemble: Ensemble,
    pub approx_structure: KIStructure,
    pub exact_structure: KIStructure,
    /// Closed-form reference values, keyed by `error_<label>`, `rate`,
    /// `rate_exact` and bounds such as `rate_upper`.
    pub expected: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct Summary<'a> {
    name: &'a str,
    epsilon: f64,
    dim: usize,
    expected: &'a BTreeMap<String, f64>,
}

impl GalleryCase {
    pub fn expected(&self, key: &str) -> Option<f64> {
        self.expected.get(key).copied()
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::to_value(Summary {
            name: &self.name,
            epsilon: self.epsilon,
            dim: self.ensemble.dim(),
            expected: &self.expected,
        })
        .expect("summary serializes")
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::arg(format!(
            "epsilon must lie in (0, 1/2), got {epsilon}"
        )));
    }
    Ok(())
}

fn density(rows: &[Vec<f64>]) -> Result<DensityMatrix> {
    DensityMatrix::new(HermitianMatrix::from_real_rows(rows)?)
}

fn scaled(rows: [[f64; 4]; 4], factor: f64) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| r.iter().map(|x| x * factor).collect())
        .collect()
}

/// Two-qubit pair of states, each within `ε` of a product `|x⟩⟨x| ⊗ ω`.
pub fn example1(epsilon: f64) -> Result<GalleryCase> {
    check_epsilon(epsilon)?;
    let e = epsilon;
    let rho1 = density(&scaled(
        [
            [2.0, 1.0 - 2.0 * e, 0.0, 0.0],
            [1.0 - 2.0 * e, 2.0, 0.0, 0.0],
            [0.0; 4],
            [0.0; 4],
        ],
        0.25,
    ))?;
    let rho2 = density(&scaled(
        [
            [e, 0.0, 0.0, 0.0],
            [0.0, e, 0.0, 0.0],
            [0.0, 0.0, 2.0 - e, 1.0],
            [0.0, 0.0, 1.0, 2.0 - e],
        ],
        0.25,
    ))?;
    let tilde1 = density(&scaled(
        [
            [2.0, 1.0, 0.0, 0.0],
            [1.0, 2.0, 0.0, 0.0],
            [0.0; 4],
            [0.0; 4],
        ],
        0.25,
    ))?;
    let tilde2 = density(&scaled(
        [
            [0.0; 4],
            [0.0; 4],
            [0.0, 0.0, 2.0, 1.0],
            [0.0, 0.0, 1.0, 2.0],
        ],
        0.25,
    ))?;
    let omega = density(&[vec![0.5, 0.25], vec![0.25, 0.5]])?;

    let approx_structure = KIStructure::new(
        vec![
            RedundantBlock::new(1, omega.clone()),
            RedundantBlock::new(1, omega),
        ],
        None,
    )?;

    let eigenvalues = [
        (3.0 - e) / 8.0,
        (1.0 + 3.0 * e) / 8.0,
        (3.0 - e) / 8.0,
        (1.0 - e) / 8.0,
    ];
    let mut expected = BTreeMap::new();
    expected.insert("error_1".into(), e);
    expected.insert("error_2".into(), e / 2.0);
    expected.insert("rate".into(), binary_entropy((2.0 + e) / 4.0)?);
    expected.insert("rate_exact".into(), shannon_entropy(&eigenvalues));

    Ok(GalleryCase {
        name: "example1".into(),
        epsilon,
        ensemble: Ensemble::new(vec![0.5, 0.5], vec![rho1, rho2])?,
        approx_ensemble: Ensemble::new(vec![0.5, 0.5], vec![tilde1, tilde2])?,
        approx_structure,
        exact_structure: KIStructure::trivial(4),
        expected,
    })
}

/// `σ₁ = (2I + ε A)/(4N)` with `A` the adjacency matrix of the `2N`-cycle.
fn sigma1(epsilon: f64, n: usize) -> Result<HermitianMatrix> {
    let m = 2 * n;
    let scale = 1.0 / (4.0 * n as f64);
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    if i == j {
                        2.0 * scale
                    } else if (i + 1) % m == j || (j + 1) % m == i {
                        epsilon * scale
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    HermitianMatrix::from_real_rows(&rows)
}

fn halves(n: usize, first: f64, second: f64) -> Result<HermitianMatrix> {
    let mut diag = vec![first; n];
    diag.extend(std::iter::repeat_n(second, n));
    HermitianMatrix::from_real_diagonal(&diag)
}

/// `ω_a ⊕ σ_x ⊕ ω_b` pair on `d_a + 2N + d_b` dimensions, where a small
/// perturbation of the middle part merges it into two large redundant blocks.
///
/// `ω_a` and `ω_b` default to the maximally mixed qubit state.
pub fn example2(
    epsilon: f64,
    n: usize,
    omega_a: Option<DensityMatrix>,
    omega_b: Option<DensityMatrix>,
) -> Result<GalleryCase> {
    check_epsilon(epsilon)?;
    if n < 2 {
        return Err(Error::arg(format!("N must be at least 2, got {n}")));
    }
    let e = epsilon;
    let nf = n as f64;
    let omega_a = omega_a.unwrap_or_else(|| DensityMatrix::maximally_mixed(2));
    let omega_b = omega_b.unwrap_or_else(|| DensityMatrix::maximally_mixed(2));
    let (da, db) = (omega_a.dim(), omega_b.dim());
    let wa = omega_a.hermitian().clone();
    let wb = omega_b.hermitian().clone();

    let s1 = sigma1(e, n)?;
    let s2 = halves(
        n,
        (1.0 + 2.0 * e) / (4.0 * nf),
        (3.0 - 2.0 * e) / (4.0 * nf),
    )?;
    let s1_tilde = HermitianMatrix::from_real_diagonal(&vec![1.0 / (2.0 * nf); 2 * n])?;
    let s2_tilde = halves(n, 1.0 / (4.0 * nf), 3.0 / (4.0 * nf))?;

    let w1 = [1.0 / 3.0; 3];
    let w2 = [1.0 / 6.0, 1.0 / 3.0, 0.5];
    let member = |s: &HermitianMatrix, w: &[f64; 3]| -> Result<DensityMatrix> {
        DensityMatrix::new(direct_sum(&[wa.clone(), s.clone(), wb.clone()], w)?)
    };
    let ensemble = Ensemble::new(vec![0.5, 0.5], vec![member(&s1, &w1)?, member(&s2, &w2)?])?;
    let approx_ensemble = Ensemble::new(
        vec![0.5, 0.5],
        vec![member(&s1_tilde, &w1)?, member(&s2_tilde, &w2)?],
    )?;

    let flat = HermitianMatrix::from_real_diagonal(&vec![1.0 / (2.0 * nf); n])?;
    let two_thirds = [2.0 / 3.0; 2];
    let omega_a_tilde = DensityMatrix::new(direct_sum(&[wa, flat.clone()], &two_thirds)?)?;
    let omega_b_tilde = DensityMatrix::new(direct_sum(&[flat, wb], &two_thirds)?)?;
    let approx_structure = KIStructure::new(
        vec![
            RedundantBlock::new(1, omega_a_tilde),
            RedundantBlock::new(1, omega_b_tilde),
        ],
        None,
    )?;
    let exact_structure = KIStructure::new(
        vec![
            RedundantBlock::new(1, omega_a),
            RedundantBlock::plain(2 * n),
            RedundantBlock::new(1, omega_b),
        ],
        None,
    )?;

    // Spectrum of the cycle adjacency is 2cos(πk/N), k = 0..2N-1.
    let cycle_norm: f64 = (0..2 * n)
        .map(|k| (2.0 * (std::f64::consts::PI * k as f64 / nf).cos()).abs())
        .sum();
    let mut expected = BTreeMap::new();
    expected.insert("error_1".into(), e * cycle_norm / (12.0 * nf));
    expected.insert("error_2".into(), 4.0 * e / 9.0);
    expected.insert("rate".into(), binary_entropy((9.0 + 2.0 * e) / 24.0)?);
    expected.insert("rate_upper".into(), 1.0);
    expected.insert("rate_exact_lower".into(), (2.0 * nf).log2() / 3.0);
    expected.insert("dim".into(), (da + 2 * n + db) as f64);

    Ok(GalleryCase {
        name: "example2".into(),
        epsilon,
        ensemble,
        approx_ensemble,
        approx_structure,
        exact_structure,
        expected,
    })
}
