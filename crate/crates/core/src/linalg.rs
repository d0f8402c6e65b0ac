//! Dense complex Hermitian linear algebra.
//!
//! Everything here is small and dense: states in this crate live on spaces of
//! at most a few hundred dimensions, except in the classical experiments which
//! never leave the diagonal fast path. Eigendecompositions use a cyclic
//! complex Jacobi sweep, which is accurate to working precision for these
//! sizes and needs no external LAPACK.
//!
//! All entropies are in bits.

use std::ops::{Add, Deref, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Entry-wise tolerance for the Hermitian check, relative to the largest entry.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues in `[-NEGATIVE_EIGEN_TOL, 0)` are treated as rounding noise.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Off-diagonal Frobenius norm at which the Jacobi sweep stops.
pub const JACOBI_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A square complex matrix equal to its own conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    m: CMatrix,
    diagonal: bool,
}

impl HermitianMatrix {
    /// Validates hermiticity and symmetrizes away the residual asymmetry.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::arg(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::arg("matrix dimension must be positive"));
        }
        let scale = m.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
        let n = m.nrows();
        for i in 0..n {
            for j in i..n {
                let gap = (m[(i, j)] - m[(j, i)].conj()).norm();
                if gap > HERMITIAN_TOL * scale {
                    return Err(Error::arg(format!(
                        "matrix is not Hermitian: entries ({i},{j}) and ({j},{i}) differ by {gap:e}"
                    )));
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(m: CMatrix) -> Self {
        let n = m.nrows();
        let mut out = m;
        for i in 0..n {
            out[(i, i)] = Complex64::new(out[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let avg = (out[(i, j)] + out[(j, i)].conj()) * 0.5;
                out[(i, j)] = avg;
                out[(j, i)] = avg.conj();
            }
        }
        let diagonal = is_diagonal(&out);
        Self { m: out, diagonal }
    }

    pub fn from_real_diagonal(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("diagonal must be nonempty"));
        }
        let n = values.len();
        let m = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                ZERO
            }
        });
        Ok(Self { m, diagonal: true })
    }

    /// Real symmetric input given row by row.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::arg("rows must form a square matrix"));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            Complex64::new(rows[i][j], 0.0)
        }))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: CMatrix::identity(n, n),
            diagonal: true,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: CMatrix::zeros(n, n),
            diagonal: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            m: &self.m * Complex64::new(factor, 0.0),
            diagonal: self.diagonal,
        }
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    /// `U H U†` for a unitary (or any) `u` with matching dimension.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        if u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.ncols(),
            });
        }
        Ok(Self::symmetrized(u * &self.m * u.adjoint()))
    }
}

fn is_diagonal(m: &CMatrix) -> bool {
    let n = m.nrows();
    (0..n).all(|j| (0..n).all(|i| i == j || m[(i, j)] == ZERO))
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in addition");
        HermitianMatrix {
            m: &self.m + &rhs.m,
            diagonal: self.diagonal && rhs.diagonal,
        }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in subtraction");
        HermitianMatrix {
            m: &self.m - &rhs.m,
            diagonal: self.diagonal && rhs.diagonal,
        }
    }
}

/// Positive semidefinite Hermitian matrix with unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    h: HermitianMatrix,
}

impl DensityMatrix {
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let tr = h.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        if h.is_diagonal() {
            let mut h = h;
            for i in 0..h.dim() {
                let v = h.m[(i, i)].re;
                if v < -NEGATIVE_EIGEN_TOL {
                    return Err(Error::InvalidState(format!("negative eigenvalue {v:e}")));
                }
                if v < 0.0 {
                    h.m[(i, i)] = ZERO;
                }
            }
            return Ok(Self { h });
        }
        let spec = eig_hermitian(&h)?;
        let min = spec.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -NEGATIVE_EIGEN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { h })
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_diagonal(probs)?)
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self {
            h: HermitianMatrix::identity(n).scale(1.0 / n as f64),
        }
    }

    /// `|ψ⟩⟨ψ|` for a vector normalized internally.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if amplitudes.is_empty() || norm == 0.0 {
            return Err(Error::arg("pure state needs a nonzero vector"));
        }
        let n = amplitudes.len();
        let m = CMatrix::from_fn(n, n, |i, j| {
            amplitudes[i] * amplitudes[j].conj() / (norm * norm)
        });
        Ok(Self {
            h: HermitianMatrix::symmetrized(m),
        })
    }

    /// `|k⟩⟨k|` in the computational basis.
    pub fn basis_state(n: usize, k: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[k] = 1.0;
        Self {
            h: HermitianMatrix::from_real_diagonal(&probs).expect("nonempty"),
        }
    }

    /// Skips validation; callers guarantee a convex or channel-image construction.
    pub(crate) fn from_hermitian_unchecked(h: HermitianMatrix) -> Self {
        Self { h }
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.h
    }

    pub fn into_hermitian(self) -> HermitianMatrix {
        self.h
    }
}

impl Deref for DensityMatrix {
    type Target = HermitianMatrix;

    fn deref(&self) -> &HermitianMatrix {
        &self.h
    }
}

/// Eigenvalues in descending order with the matching unitary of eigenvectors.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    /// `U diag(λ) U†`.
    pub fn reconstruct(&self) -> CMatrix {
        self.map_eigenvalues(|x| x)
    }

    /// `U diag(f(λ)) U†`.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let fk = Complex64::new(f(lambda), 0.0);
            for i in 0..n {
                scaled[(i, k)] *= fk;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Diagonal inputs skip the iteration entirely. Degenerate eigenvalues keep
/// their original diagonal order, so the basis is deterministic.
pub fn eig_hermitian(h: &HermitianMatrix) -> Result<Spectrum> {
    let n = h.dim();
    if h.is_diagonal() {
        let values = h.diagonal_real();
        let order = descending_order(&values);
        let mut vectors = CMatrix::zeros(n, n);
        for (k, &i) in order.iter().enumerate() {
            vectors[(i, k)] = Complex64::new(1.0, 0.0);
        }
        return Ok(Spectrum {
            eigenvalues: order.iter().map(|&i| values[i]).collect(),
            eigenvectors: vectors,
        });
    }

    let mut a = h.m.clone();
    let mut v = CMatrix::identity(n, n);
    let tol = JACOBI_TOL * h.frobenius_norm().max(1.0);
    let cap = 100 * n * n;
    let mut rotations = 0usize;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= tol {
            break;
        }
        if rotations >= cap {
            return Err(Error::NoConvergence {
                rotations,
                residual: off,
            });
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                if a[(p, q)] != ZERO {
                    jacobi_rotate(&mut a, &mut v, p, q);
                    rotations += 1;
                }
            }
        }
    }

    let values: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let order = descending_order(&values);
    let vectors = CMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(Spectrum {
        eigenvalues: order.iter().map(|&i| values[i]).collect(),
        eigenvectors: vectors,
    })
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    order
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                sum += a[(i, j)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// Zeroes `a[(p, q)]` with `G = D R`, where `D` removes the phase of the
/// pivot and `R` is the real symmetric Jacobi rotation.
fn jacobi_rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let n = a.nrows();
    let apq = a[(p, q)];
    let mag = apq.norm();
    let phase = (apq / mag).conj();
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;

    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau == 0.0 {
        1.0
    } else {
        tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let g_qp = -phase * s;
    let g_qq = phase * c;
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c + akq * g_qp;
        a[(k, q)] = akp * s + akq * g_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c + aqk * g_qp.conj();
        a[(q, k)] = apk * s + aqk * g_qq.conj();
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c + vkq * g_qp;
        v[(k, q)] = vkp * s + vkq * g_qq;
    }
}

/// `Σ |λ_i(A)|`.
pub fn trace_norm(a: &HermitianMatrix) -> Result<f64> {
    if a.is_diagonal() {
        return Ok(a.diagonal_real().iter().map(|x| x.abs()).sum());
    }
    Ok(eig_hermitian(a)?.eigenvalues.iter().map(|x| x.abs()).sum())
}

/// Shannon entropy in bits with `0 log 0 = 0`. Negative entries are ignored.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// `S(ρ) = -tr ρ log₂ ρ`, clamped into `[0, log₂ dim]`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let values = if rho.is_diagonal() {
        rho.diagonal_real()
    } else {
        eig_hermitian(rho)?.eigenvalues
    };
    let max = (rho.dim() as f64).log2();
    Ok(shannon_entropy(&values).clamp(0.0, max))
}

/// `h₂(x) = -x log₂ x - (1-x) log₂ (1-x)`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::arg(format!(
            "binary entropy argument {x} outside [0, 1]"
        )));
    }
    Ok(shannon_entropy(&[x, 1.0 - x]))
}

/// Squared fidelity `(tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let root_sum = if rho.is_diagonal() && sigma.is_diagonal() {
        rho.diagonal_real()
            .iter()
            .zip(sigma.diagonal_real())
            .map(|(p, q)| (p.max(0.0) * q.max(0.0)).sqrt())
            .sum::<f64>()
    } else {
        let sqrt_rho = eig_hermitian(rho)?.map_eigenvalues(|x| x.max(0.0).sqrt());
        let inner = HermitianMatrix::symmetrized(&sqrt_rho * sigma.matrix() * &sqrt_rho);
        eig_hermitian(&inner)?
            .eigenvalues
            .iter()
            .map(|x| x.max(0.0).sqrt())
            .sum::<f64>()
    };
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// Block-diagonal `⊕_k w_k B_k`, blocks laid out in the given order.
pub fn direct_sum(blocks: &[HermitianMatrix], weights: &[f64]) -> Result<HermitianMatrix> {
    if blocks.len() != weights.len() {
        return Err(Error::arg(format!(
            "{} blocks but {} weights",
            blocks.len(),
            weights.len()
        )));
    }
    if blocks.is_empty() {
        return Err(Error::arg("direct sum of no blocks"));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::arg(format!("negative block weight {w}")));
    }
    let n: usize = blocks.iter().map(HermitianMatrix::dim).sum();
    let mut m = CMatrix::zeros(n, n);
    let mut offset = 0;
    for (block, &w) in blocks.iter().zip(weights) {
        let d = block.dim();
        let scaled = block.matrix() * Complex64::new(w, 0.0);
        m.view_mut((offset, offset), (d, d)).copy_from(&scaled);
        offset += d;
    }
    let diagonal = blocks.iter().all(HermitianMatrix::is_diagonal);
    Ok(HermitianMatrix { m, diagonal })
}

/// Kronecker product, row index `i_A · dim_B + i_B`.
pub fn tensor(a: &HermitianMatrix, b: &HermitianMatrix) -> HermitianMatrix {
    HermitianMatrix {
        m: a.m.kronecker(&b.m),
        diagonal: a.diagonal && b.diagonal,
    }
}

/// Normalized `G G†` for a complex Gaussian `G`.
pub fn random_density_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityMatrix {
    let g = gaussian_matrix(n, rng);
    let w = &g * g.adjoint();
    let tr: f64 = (0..n).map(|i| w[(i, i)].re).sum();
    DensityMatrix {
        h: HermitianMatrix::symmetrized(w / Complex64::new(tr, 0.0)),
    }
}

/// Eigenvectors of a random Gaussian Hermitian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = gaussian_matrix(n, rng);
    let h = HermitianMatrix::symmetrized(&g + g.adjoint());
    eig_hermitian(&h)
        .expect("Jacobi converges on Gaussian matrices")
        .eigenvectors
}

fn gaussian_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Max over entries of `|U†U - I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.ncols();
    let prod = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}
