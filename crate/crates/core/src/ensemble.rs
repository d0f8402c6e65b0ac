//! Ensembles, block (Koashi-Imoto) structures, and structure checks.
//!
//! A [`KIStructure`] describes a decomposition `H = ⊕_l H_Q^(l) ⊗ H_R^(l)` of
//! the state space together with the redundant state `ρ_R^(l)` of every block.
//! Blocks are laid out in list order; inside block `l` the index is
//! `offset_l + i_Q · dim_R + i_R`. The optional `basis` unitary `Γ` maps the
//! computational basis onto that layout, so a state decomposes as
//! `Γ ρ Γ† = ⊕_l q_l ρ_Q^(l) ⊗ ρ_R^(l)`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commutant::{commutant_dimension, intertwiner_basis};
use crate::error::{Error, Result};
use crate::linalg::{
    direct_sum, eig_hermitian, tensor, unitarity_defect, von_neumann_entropy, CMatrix,
    DensityMatrix, HermitianMatrix,
};

pub const PROB_TOL: f64 = 1e-10;

/// Labelled probabilities paired with density matrices on one space.
#[derive(Clone, Debug)]
pub struct Ensemble {
    labels: Vec<String>,
    probs: Vec<f64>,
    states: Vec<DensityMatrix>,
}

impl Ensemble {
    /// Labels default to `"1"`, `"2"`, ...
    pub fn new(probs: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        let labels = (1..=probs.len()).map(|i| i.to_string()).collect();
        Self::with_labels(labels, probs, states)
    }

    pub fn with_labels(
        labels: Vec<String>,
        probs: Vec<f64>,
        states: Vec<DensityMatrix>,
    ) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::arg("ensemble must have at least one member"));
        }
        if probs.len() != states.len() || labels.len() != states.len() {
            return Err(Error::arg(format!(
                "{} labels, {} probabilities and {} states",
                labels.len(),
                probs.len(),
                states.len()
            )));
        }
        check_distribution(&probs, PROB_TOL)?;
        let dim = states[0].dim();
        if let Some(s) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: s.dim(),
            });
        }
        Ok(Self {
            labels,
            probs,
            states,
        })
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64, &DensityMatrix)> {
        self.labels
            .iter()
            .zip(&self.probs)
            .zip(&self.states)
            .map(|((l, &p), s)| (l.as_str(), p, s))
    }
}

fn check_distribution(probs: &[f64], tol: f64) -> Result<()> {
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::arg(format!("probability {p} outside [0, 1]")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::arg(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// `ρ_Φ = Σ_a p_a ρ_a`.
pub fn average_state(ensemble: &Ensemble) -> DensityMatrix {
    let mut acc = HermitianMatrix::zeros(ensemble.dim());
    for (_, p, rho) in ensemble.iter() {
        acc = &acc + &rho.scale(p);
    }
    DensityMatrix::from_hermitian_unchecked(acc)
}

/// `S(ρ_Φ) - Σ_a p_a S(ρ_a)`, clamped into `[0, S(ρ_Φ)]`.
pub fn holevo_information(ensemble: &Ensemble) -> Result<f64> {
    let total = von_neumann_entropy(&average_state(ensemble))?;
    let mut conditional = 0.0;
    for (_, p, rho) in ensemble.iter() {
        conditional += p * von_neumann_entropy(rho)?;
    }
    Ok((total - conditional).clamp(0.0, total))
}

/// One block `H_Q ⊗ H_R` with its redundant state.
#[derive(Clone, Debug)]
pub struct RedundantBlock {
    pub dim_q: usize,
    pub dim_r: usize,
    pub rho_r: DensityMatrix,
}

impl RedundantBlock {
    pub fn new(dim_q: usize, rho_r: DensityMatrix) -> Self {
        Self {
            dim_q,
            dim_r: rho_r.dim(),
            rho_r,
        }
    }

    /// Block with no redundant part (`dim_R = 1`).
    pub fn plain(dim_q: usize) -> Self {
        Self::new(dim_q, DensityMatrix::basis_state(1, 0))
    }

    pub fn dim(&self) -> usize {
        self.dim_q * self.dim_r
    }
}

#[derive(Clone, Debug)]
pub struct KIStructure {
    blocks: Vec<RedundantBlock>,
    basis: Option<CMatrix>,
}

impl KIStructure {
    pub fn new(blocks: Vec<RedundantBlock>, basis: Option<CMatrix>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::arg("structure needs at least one block"));
        }
        for (l, b) in blocks.iter().enumerate() {
            if b.dim_q == 0 || b.dim_r == 0 {
                return Err(Error::arg(format!("block {l} has a zero dimension")));
            }
            if b.rho_r.dim() != b.dim_r {
                return Err(Error::DimensionMismatch {
                    expected: b.dim_r,
                    found: b.rho_r.dim(),
                });
            }
        }
        let dim: usize = blocks.iter().map(RedundantBlock::dim).sum();
        if let Some(u) = &basis {
            if u.nrows() != dim || u.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: u.nrows(),
                });
            }
            let defect = unitarity_defect(u);
            if defect > 1e-10 {
                return Err(Error::arg(format!(
                    "basis is not unitary (defect {defect:e})"
                )));
            }
        }
        Ok(Self { blocks, basis })
    }

    /// A single block carrying the whole space and no redundancy.
    pub fn trivial(dim: usize) -> Self {
        Self {
            blocks: vec![RedundantBlock::plain(dim)],
            basis: None,
        }
    }

    pub fn blocks(&self) -> &[RedundantBlock] {
        &self.blocks
    }

    pub fn basis(&self) -> Option<&CMatrix> {
        self.basis.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(RedundantBlock::dim).sum()
    }

    /// `Σ_l dim_Q(l)`, the dimension after the redundant parts are removed.
    pub fn reduced_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim_q).sum()
    }

    /// Start of each block in the full layout.
    pub fn offsets(&self) -> Vec<usize> {
        prefix_sums(self.blocks.iter().map(RedundantBlock::dim))
    }

    /// Start of each block in the reduced layout.
    pub fn reduced_offsets(&self) -> Vec<usize> {
        prefix_sums(self.blocks.iter().map(|b| b.dim_q))
    }
}

fn prefix_sums(sizes: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut acc = 0;
    sizes
        .map(|s| {
            let start = acc;
            acc += s;
            start
        })
        .collect()
}

/// Per-block weights `q_l` and non-redundant states `ρ_Q^(l)` of one state.
#[derive(Clone, Debug)]
pub struct BlockState {
    pub weights: Vec<f64>,
    pub q_states: Vec<DensityMatrix>,
}

impl BlockState {
    pub fn new(weights: Vec<f64>, q_states: Vec<DensityMatrix>) -> Result<Self> {
        if weights.len() != q_states.len() {
            return Err(Error::arg("one weight per block state"));
        }
        check_distribution(&weights, PROB_TOL)?;
        Ok(Self { weights, q_states })
    }

    fn check_shape(&self, structure: &KIStructure) -> Result<()> {
        if self.weights.len() != structure.blocks.len() {
            return Err(Error::arg(format!(
                "block state has {} blocks, structure has {}",
                self.weights.len(),
                structure.blocks.len()
            )));
        }
        for (b, s) in structure.blocks.iter().zip(&self.q_states) {
            if b.dim_q != s.dim() {
                return Err(Error::DimensionMismatch {
                    expected: b.dim_q,
                    found: s.dim(),
                });
            }
        }
        Ok(())
    }
}

/// `Γ† (⊕_l q_l ρ_Q^(l) ⊗ ρ_R^(l)) Γ`.
pub fn assemble(structure: &KIStructure, state: &BlockState) -> Result<DensityMatrix> {
    state.check_shape(structure)?;
    let parts: Vec<HermitianMatrix> = structure
        .blocks
        .iter()
        .zip(&state.q_states)
        .map(|(b, q)| tensor(q, &b.rho_r))
        .collect();
    let mut out = direct_sum(&parts, &state.weights)?;
    if let Some(u) = &structure.basis {
        out = out.conjugate_by(&u.adjoint())?;
    }
    Ok(DensityMatrix::from_hermitian_unchecked(out))
}

/// Completely dephasing channel in the computational basis.
pub fn dephase(rho: &DensityMatrix) -> DensityMatrix {
    let diag = HermitianMatrix::from_real_diagonal(&rho.diagonal_real()).expect("nonempty");
    DensityMatrix::from_hermitian_unchecked(diag)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Irreducibility {
    pub irreducible: bool,
    pub commutant_dim: usize,
}

/// Whether a family of (weighted) operators on one block admits a nontrivial
/// invariant projection, decided by the dimension of its commutant.
pub fn check_irreducibility(ops: &[HermitianMatrix]) -> Result<Irreducibility> {
    let first = ops
        .first()
        .ok_or_else(|| Error::arg("need at least one operator"))?;
    if let Some(op) = ops.iter().find(|o| o.dim() != first.dim()) {
        return Err(Error::DimensionMismatch {
            expected: first.dim(),
            found: op.dim(),
        });
    }
    let mats: Vec<CMatrix> = ops.iter().map(|o| o.matrix().clone()).collect();
    let commutant_dim = commutant_dimension(&mats);
    Ok(Irreducibility {
        irreducible: commutant_dim == 1,
        commutant_dim,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BlockEquivalence {
    Inequivalent,
    /// A unitary `V` with `V q ρ_Q^(l) = α q' ρ_Q^(l') V` for every member.
    Equivalent {
        alpha: f64,
    },
    /// Intertwiners exist but none of the sampled ones is invertible.
    Inconclusive,
}

const RATIO_TOL: f64 = 1e-9;
const WEIGHT_TOL: f64 = 1e-12;

/// Tests whether blocks `l` and `lp` of `structure` are related by a unitary,
/// given the decomposition of every ensemble member.
pub fn check_block_equivalence(
    structure: &KIStructure,
    members: &[BlockState],
    l: usize,
    lp: usize,
) -> Result<BlockEquivalence> {
    let nblocks = structure.blocks.len();
    if l == lp || l >= nblocks || lp >= nblocks {
        return Err(Error::arg(format!(
            "blocks {l} and {lp} must be distinct indices below {nblocks}"
        )));
    }
    if members.is_empty() {
        return Err(Error::arg("need at least one ensemble member"));
    }
    for m in members {
        m.check_shape(structure)?;
    }
    if structure.blocks[l].dim_q != structure.blocks[lp].dim_q {
        return Ok(BlockEquivalence::Inequivalent);
    }

    // Traces force q^(a,l) = α q^(a,l') for every member.
    let mut alpha: Option<f64> = None;
    for m in members {
        let (q, qp) = (m.weights[l], m.weights[lp]);
        if qp <= WEIGHT_TOL {
            if q > WEIGHT_TOL {
                return Ok(BlockEquivalence::Inequivalent);
            }
            continue;
        }
        let ratio = q / qp;
        match alpha {
            None => alpha = Some(ratio),
            Some(a) if (ratio - a).abs() > RATIO_TOL * a.max(1.0) => {
                return Ok(BlockEquivalence::Inequivalent)
            }
            Some(_) => {}
        }
    }
    let alpha = alpha.unwrap_or(1.0);
    if alpha <= WEIGHT_TOL {
        return Ok(BlockEquivalence::Inequivalent);
    }

    let sources: Vec<CMatrix> = members
        .iter()
        .map(|m| m.q_states[l].matrix() * Complex64::new(m.weights[l], 0.0))
        .collect();
    let targets: Vec<CMatrix> = members
        .iter()
        .map(|m| m.q_states[lp].matrix() * Complex64::new(alpha * m.weights[lp], 0.0))
        .collect();
    let basis = intertwiner_basis(&sources, &targets);
    if basis.is_empty() {
        return Ok(BlockEquivalence::Inequivalent);
    }

    let scale = sources
        .iter()
        .chain(&targets)
        .fold(1e-300f64, |acc, m| acc.max(m.norm()));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..4 {
        let mut v = CMatrix::zeros(basis[0].nrows(), basis[0].ncols());
        for b in &basis {
            v += b * Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        if let Some(u) = unitary_polar_factor(&v)? {
            let works = sources
                .iter()
                .zip(&targets)
                .all(|(s, t)| (&u * s - t * &u).norm() <= 1e-8 * scale);
            if works {
                return Ok(BlockEquivalence::Equivalent { alpha });
            }
        }
    }
    Ok(BlockEquivalence::Inconclusive)
}

/// `V (V†V)^{-1/2}` when `V` is numerically invertible.
fn unitary_polar_factor(v: &CMatrix) -> Result<Option<CMatrix>> {
    let gram = HermitianMatrix::symmetrized(v.adjoint() * v);
    let spec = eig_hermitian(&gram)?;
    let max = spec.eigenvalues[0];
    let min = *spec.eigenvalues.last().expect("nonempty");
    if max <= 0.0 || min <= 1e-9 * max {
        return Ok(None);
    }
    let inv_sqrt = spec.map_eigenvalues(|x| 1.0 / x.sqrt());
    Ok(Some(v * inv_sqrt))
}

/// Simultaneously diagonal states given by their distributions in a shared basis.
#[derive(Clone, Debug)]
pub struct ClassicalEnsemble {
    pub probs: Vec<f64>,
    pub distributions: Vec<Vec<f64>>,
}

impl ClassicalEnsemble {
    pub fn new(probs: Vec<f64>, distributions: Vec<Vec<f64>>) -> Result<Self> {
        if probs.len() != distributions.len() || probs.is_empty() {
            return Err(Error::arg("one distribution per probability, at least one"));
        }
        check_distribution(&probs, PROB_TOL)?;
        let d = distributions[0].len();
        for dist in &distributions {
            if dist.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: dist.len(),
                });
            }
            check_distribution(dist, 1e-12)?;
        }
        Ok(Self {
            probs,
            distributions,
        })
    }

    pub fn to_ensemble(&self) -> Result<Ensemble> {
        let states = self
            .distributions
            .iter()
            .map(|d| DensityMatrix::from_diagonal(d))
            .collect::<Result<Vec<_>>>()?;
        Ensemble::new(self.probs.clone(), states)
    }
}

/// `d` uniform draws on `[0, 1)` normalized by their sum.
pub fn random_diagonal_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    assert!(d >= 1, "dimension must be positive");
    loop {
        let draws: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 {
            return draws.into_iter().map(|x| x / total).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density_matrix, random_unitary, shannon_entropy, trace_norm};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn omega() -> DensityMatrix {
        DensityMatrix::from_matrix(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.5), c(0.25), c(0.25), c(0.5)],
        ))
        .unwrap()
    }

    fn example1_structure() -> KIStructure {
        KIStructure::new(
            vec![
                RedundantBlock::new(1, omega()),
                RedundantBlock::new(1, omega()),
            ],
            None,
        )
        .unwrap()
    }

    fn scalar_state() -> DensityMatrix {
        DensityMatrix::basis_state(1, 0)
    }

    #[test]
    fn average_state_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density_matrix(3, &mut rng);
        let single = Ensemble::new(vec![1.0], vec![rho.clone()]).unwrap();
        assert!((average_state(&single).matrix() - rho.matrix()).norm() < 1e-15);

        let pair = Ensemble::new(
            vec![0.5, 0.5],
            vec![
                DensityMatrix::basis_state(2, 0),
                DensityMatrix::basis_state(2, 1),
            ],
        )
        .unwrap();
        assert_eq!(average_state(&pair).diagonal_real(), vec![0.5, 0.5]);
    }

    #[test]
    fn ensemble_validation() {
        let s = DensityMatrix::maximally_mixed(2);
        assert!(Ensemble::new(vec![0.5, 0.6], vec![s.clone(), s.clone()]).is_err());
        assert!(Ensemble::new(vec![1.0], vec![s.clone(), s.clone()]).is_err());
        assert!(Ensemble::new(vec![0.5, 0.5], vec![s, DensityMatrix::maximally_mixed(3)]).is_err());
    }

    #[test]
    fn holevo_cases() {
        let orth = Ensemble::new(
            vec![0.5, 0.5],
            vec![
                DensityMatrix::basis_state(2, 0),
                DensityMatrix::basis_state(2, 1),
            ],
        )
        .unwrap();
        assert!((holevo_information(&orth).unwrap() - 1.0).abs() < 1e-15);

        let s = DensityMatrix::from_diagonal(&[0.3, 0.7]).unwrap();
        let same = Ensemble::new(vec![0.4, 0.6], vec![s.clone(), s]).unwrap();
        assert!(holevo_information(&same).unwrap().abs() < 1e-15);

        let mixed = Ensemble::new(
            vec![0.5, 0.5],
            vec![
                DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap(),
                DensityMatrix::from_diagonal(&[0.1, 0.9]).unwrap(),
            ],
        )
        .unwrap();
        let h = shannon_entropy(&[0.1, 0.9]);
        assert!((holevo_information(&mixed).unwrap() - (1.0 - h)).abs() < 1e-15);
        assert!((1.0 - h - 0.531).abs() < 1e-3);
    }

    #[test]
    fn assemble_single_block_returns_q_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density_matrix(3, &mut rng);
        let st = KIStructure::trivial(3);
        let bs = BlockState::new(vec![1.0], vec![rho.clone()]).unwrap();
        assert_eq!(assemble(&st, &bs).unwrap().matrix(), rho.matrix());
    }

    #[test]
    fn assemble_example1_first_member() {
        let bs = BlockState::new(vec![1.0, 0.0], vec![scalar_state(), scalar_state()]).unwrap();
        let rho = assemble(&example1_structure(), &bs).unwrap();
        let expected = [
            [0.5, 0.25, 0.0, 0.0],
            [0.25, 0.5, 0.0, 0.0],
            [0.0; 4],
            [0.0; 4],
        ];
        for (i, row) in expected.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                assert_eq!(rho.matrix()[(i, j)], c(*x));
            }
        }
    }

    #[test]
    fn assemble_rejects_shape_mismatch() {
        let bs = BlockState::new(vec![1.0], vec![scalar_state()]).unwrap();
        assert!(assemble(&example1_structure(), &bs).is_err());
        let wrong_dim = BlockState::new(
            vec![0.5, 0.5],
            vec![scalar_state(), DensityMatrix::maximally_mixed(2)],
        )
        .unwrap();
        assert!(assemble(&example1_structure(), &wrong_dim).is_err());
    }

    #[test]
    fn assemble_with_basis_has_unit_trace_and_matches_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let blocks = vec![
            RedundantBlock::new(2, random_density_matrix(2, &mut rng)),
            RedundantBlock::new(1, random_density_matrix(3, &mut rng)),
        ];
        let plain = KIStructure::new(blocks.clone(), None).unwrap();
        let u = random_unitary(7, &mut rng);
        let rotated = KIStructure::new(blocks, Some(u.clone())).unwrap();
        let bs = BlockState::new(
            vec![0.3, 0.7],
            vec![random_density_matrix(2, &mut rng), scalar_state()],
        )
        .unwrap();
        let a = assemble(&plain, &bs).unwrap();
        let b = assemble(&rotated, &bs).unwrap();
        assert!((b.trace() - 1.0).abs() < 1e-9);
        let back = &u * b.matrix() * u.adjoint();
        assert!((back - a.matrix()).norm() < 1e-12);
    }

    #[test]
    fn structure_validation() {
        assert!(KIStructure::new(vec![], None).is_err());
        let non_unitary = CMatrix::identity(4, 4) * c(2.0);
        assert!(KIStructure::new(vec![RedundantBlock::plain(4)], Some(non_unitary)).is_err());
        assert!(KIStructure::new(
            vec![RedundantBlock::plain(4)],
            Some(CMatrix::identity(3, 3))
        )
        .is_err());
        assert_eq!(example1_structure().dim(), 4);
        assert_eq!(example1_structure().reduced_dim(), 2);
        assert_eq!(example1_structure().offsets(), vec![0, 2]);
    }

    #[test]
    fn dephase_cases() {
        let diag = DensityMatrix::from_diagonal(&[0.2, 0.8]).unwrap();
        assert_eq!(dephase(&diag), diag);
        let rho = DensityMatrix::from_matrix(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.5), c(0.25), c(0.25), c(0.5)],
        ))
        .unwrap();
        let d = dephase(&rho);
        assert_eq!(d.diagonal_real(), vec![0.5, 0.5]);
        assert!(d.is_diagonal());
        assert_eq!(dephase(&d), d);
    }

    #[test]
    fn dephase_contracts_trace_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let n = rng.gen_range(1..6);
            let a = random_density_matrix(n, &mut rng);
            let b = random_density_matrix(n, &mut rng);
            let before = trace_norm(&(a.hermitian() - b.hermitian())).unwrap();
            let after = trace_norm(&(dephase(&a).hermitian() - dephase(&b).hermitian())).unwrap();
            assert!(after <= before + 1e-12);
        }
    }

    #[test]
    fn irreducibility_cases() {
        let r = check_irreducibility(&[HermitianMatrix::identity(2).scale(0.5)]).unwrap();
        assert_eq!(
            r,
            Irreducibility {
                irreducible: false,
                commutant_dim: 4
            }
        );

        let zero = DensityMatrix::basis_state(2, 0);
        let plus = DensityMatrix::pure(&[c(1.0), c(1.0)]).unwrap();
        let r =
            check_irreducibility(&[zero.hermitian().clone(), plus.hermitian().clone()]).unwrap();
        assert_eq!(
            r,
            Irreducibility {
                irreducible: true,
                commutant_dim: 1
            }
        );

        assert!(check_irreducibility(&[]).is_err());
    }

    #[test]
    fn block_equivalence_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let st = KIStructure::new(
            vec![
                RedundantBlock::plain(2),
                RedundantBlock::plain(2),
                RedundantBlock::plain(1),
            ],
            None,
        )
        .unwrap();
        let a = random_density_matrix(2, &mut rng);
        let b = random_density_matrix(2, &mut rng);
        // Block 1 is a copy of block 0 in every member.
        let members = vec![
            BlockState::new(
                vec![0.4, 0.4, 0.2],
                vec![a.clone(), a.clone(), scalar_state()],
            )
            .unwrap(),
            BlockState::new(
                vec![0.25, 0.25, 0.5],
                vec![b.clone(), b.clone(), scalar_state()],
            )
            .unwrap(),
        ];
        assert_eq!(
            check_block_equivalence(&st, &members, 0, 1).unwrap(),
            BlockEquivalence::Equivalent { alpha: 1.0 }
        );
        assert_eq!(
            check_block_equivalence(&st, &members, 0, 2).unwrap(),
            BlockEquivalence::Inequivalent
        );
        assert!(check_block_equivalence(&st, &members, 1, 1).is_err());

        // Unitarily rotated copy with a constant weight ratio of 2.
        let u = random_unitary(2, &mut rng);
        let rot = |s: &DensityMatrix| DensityMatrix::new(s.conjugate_by(&u).unwrap()).unwrap();
        let members = vec![
            BlockState::new(
                vec![0.4, 0.2, 0.4],
                vec![a.clone(), rot(&a), scalar_state()],
            )
            .unwrap(),
            BlockState::new(
                vec![0.5, 0.25, 0.25],
                vec![b.clone(), rot(&b), scalar_state()],
            )
            .unwrap(),
        ];
        match check_block_equivalence(&st, &members, 0, 1).unwrap() {
            BlockEquivalence::Equivalent { alpha } => assert!((alpha - 2.0).abs() < 1e-12),
            other => panic!("expected equivalence, got {other:?}"),
        }

        // Same weights but spectra that no unitary can match.
        let members = vec![BlockState::new(
            vec![0.4, 0.4, 0.2],
            vec![
                DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap(),
                DensityMatrix::from_diagonal(&[0.6, 0.4]).unwrap(),
                scalar_state(),
            ],
        )
        .unwrap()];
        assert_eq!(
            check_block_equivalence(&st, &members, 0, 1).unwrap(),
            BlockEquivalence::Inequivalent
        );
    }

    #[test]
    fn example1_approximate_blocks_carry_different_labels() {
        let members = vec![
            BlockState::new(vec![1.0, 0.0], vec![scalar_state(), scalar_state()]).unwrap(),
            BlockState::new(vec![0.0, 1.0], vec![scalar_state(), scalar_state()]).unwrap(),
        ];
        assert_eq!(
            check_block_equivalence(&example1_structure(), &members, 0, 1).unwrap(),
            BlockEquivalence::Inequivalent
        );
    }

    #[test]
    fn random_diagonal_state_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        assert_eq!(random_diagonal_state(1, &mut rng), vec![1.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let v = random_diagonal_state(4, &mut rng);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(v.iter().all(|&x| x > 0.0));
        let mut again = ChaCha8Rng::seed_from_u64(42);
        assert_eq!(random_diagonal_state(4, &mut again), v);
        // Regression fixture for the ChaCha8 stream.
        let pinned = [
            0.25377144707577043,
            0.3536502594475693,
            0.15910259864412737,
            0.23347569483253292,
        ];
        for (x, y) in v.iter().zip(pinned) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn random_diagonal_entropy_is_near_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mean: f64 = (0..1000)
            .map(|_| shannon_entropy(&random_diagonal_state(1024, &mut rng)))
            .sum::<f64>()
            / 1000.0;
        assert!(mean > 9.0 && mean < 10.0, "mean entropy {mean}");
    }

    #[test]
    fn classical_ensemble_round_trip() {
        let ce = ClassicalEnsemble::new(
            vec![0.5, 0.5],
            vec![vec![0.25; 4], vec![0.4, 0.3, 0.2, 0.1]],
        )
        .unwrap();
        let e = ce.to_ensemble().unwrap();
        assert_eq!(e.states()[1].diagonal_real(), vec![0.4, 0.3, 0.2, 0.1]);
        assert!(ClassicalEnsemble::new(vec![1.0], vec![vec![0.5, 0.6]]).is_err());
    }
}
