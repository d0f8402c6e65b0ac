//! Kraus channels that strip and reattach redundant parts, and the
//! rate/error analysis of the finite-approximation protocol.
//!
//! For a structure `H = ⊕_l H_Q^(l) ⊗ H_R^(l)` the removal channel has one
//! operator `I_Q ⊗ ⟨j|` per block and redundant basis vector, and the
//! attaching channel has one operator `I_Q ⊗ √r_k |k⟩` per nonzero eigenpair
//! of `ρ_R^(l)`. Both are block-diagonal, so coherences between blocks are
//! discarded on the way out.
//!
//! The inner asymptotic code is taken to be ideal: the protocol rate is the
//! entropy of the averaged reduced states.

use num_complex::Complex64;
use serde::ser::{Serialize, SerializeMap, SerializeStruct, Serializer};

use crate::ensemble::{average_state, BlockState, Ensemble, KIStructure};
use crate::error::{Error, Result};
use crate::linalg::{
    binary_entropy, eig_hermitian, fidelity, trace_norm, von_neumann_entropy, CMatrix,
    DensityMatrix, HermitianMatrix,
};

pub const COMPLETENESS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelKind {
    /// Removes redundant parts.
    Off,
    /// Reattaches redundant parts.
    On,
    Other,
}

/// Anything that maps density matrices to density matrices.
pub trait Channel {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix>;
}

#[derive(Clone, Debug)]
pub struct KrausChannel {
    operators: Vec<CMatrix>,
    input_dim: usize,
    output_dim: usize,
    kind: ChannelKind,
}

impl KrausChannel {
    /// Checks shapes and `Σ A†A = I`.
    pub fn new(operators: Vec<CMatrix>, kind: ChannelKind) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::arg("channel needs at least one Kraus operator"))?;
        let (output_dim, input_dim) = first.shape();
        if let Some(op) = operators
            .iter()
            .find(|op| op.shape() != (output_dim, input_dim))
        {
            return Err(Error::arg(format!(
                "Kraus operator is {:?}, expected {:?}",
                op.shape(),
                (output_dim, input_dim)
            )));
        }
        let ch = Self {
            operators,
            input_dim,
            output_dim,
            kind,
        };
        let defect = ch.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return Err(Error::arg(format!(
                "Kraus operators are not complete (defect {defect:e})"
            )));
        }
        Ok(ch)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            operators: vec![CMatrix::identity(n, n)],
            input_dim: n,
            output_dim: n,
            kind: ChannelKind::Other,
        }
    }

    /// Projections onto the computational basis.
    pub fn dephasing(n: usize) -> Self {
        let operators = (0..n)
            .map(|k| {
                let mut p = CMatrix::zeros(n, n);
                p[(k, k)] = Complex64::new(1.0, 0.0);
                p
            })
            .collect();
        Self {
            operators,
            input_dim: n,
            output_dim: n,
            kind: ChannelKind::Other,
        }
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    /// Frobenius norm of `Σ A†A - I`.
    pub fn completeness_defect(&self) -> f64 {
        let mut acc = CMatrix::zeros(self.input_dim, self.input_dim);
        for a in &self.operators {
            acc += a.adjoint() * a;
        }
        (acc - CMatrix::identity(self.input_dim, self.input_dim)).norm()
    }
}

impl Channel for KrausChannel {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: rho.dim(),
            });
        }
        let mut out = CMatrix::zeros(self.output_dim, self.output_dim);
        for a in &self.operators {
            out += a * rho.matrix() * a.adjoint();
        }
        Ok(DensityMatrix::from_hermitian_unchecked(
            HermitianMatrix::symmetrized(out),
        ))
    }
}

/// `Σ_A A ρ A†`.
pub fn apply_channel(channel: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    channel.apply(rho)
}

/// `K_on ∘ K_off` without materializing the product operators.
#[derive(Clone, Debug)]
pub struct RoundTrip {
    pub off: KrausChannel,
    pub on: KrausChannel,
}

impl RoundTrip {
    pub fn new(structure: &KIStructure) -> Result<Self> {
        Ok(Self {
            off: build_k_off(structure),
            on: build_k_on(structure)?,
        })
    }
}

impl Channel for RoundTrip {
    fn input_dim(&self) -> usize {
        self.off.input_dim
    }

    fn output_dim(&self) -> usize {
        self.on.output_dim
    }

    fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.on.apply(&self.off.apply(rho)?)
    }
}

/// Removal channel: per block `l` and redundant index `j`, `A = (I_Q ⊗ ⟨j|) P_l Γ`.
pub fn build_k_off(structure: &KIStructure) -> KrausChannel {
    let n = structure.dim();
    let m = structure.reduced_dim();
    let offsets = structure.offsets();
    let reduced = structure.reduced_offsets();
    let one = Complex64::new(1.0, 0.0);
    let mut operators = Vec::new();
    for (l, block) in structure.blocks().iter().enumerate() {
        for j in 0..block.dim_r {
            let mut e = CMatrix::zeros(m, n);
            for iq in 0..block.dim_q {
                e[(reduced[l] + iq, offsets[l] + iq * block.dim_r + j)] = one;
            }
            operators.push(match structure.basis() {
                Some(g) => e * g,
                None => e,
            });
        }
    }
    KrausChannel {
        operators,
        input_dim: n,
        output_dim: m,
        kind: ChannelKind::Off,
    }
}

/// Attaching channel: per block `l` and eigenpair `(r_k, |k⟩)` of `ρ_R^(l)`
/// with `r_k > 0`, `B = Γ† (I_Q ⊗ √r_k |k⟩)`.
pub fn build_k_on(structure: &KIStructure) -> Result<KrausChannel> {
    let n = structure.dim();
    let m = structure.reduced_dim();
    let offsets = structure.offsets();
    let reduced = structure.reduced_offsets();
    let mut operators = Vec::new();
    for (l, block) in structure.blocks().iter().enumerate() {
        let spec = eig_hermitian(&block.rho_r)?;
        for (k, &r) in spec.eigenvalues.iter().enumerate() {
            if r <= 0.0 {
                continue;
            }
            let amp = r.sqrt();
            let mut f = CMatrix::zeros(n, m);
            for iq in 0..block.dim_q {
                for ir in 0..block.dim_r {
                    f[(offsets[l] + iq * block.dim_r + ir, reduced[l] + iq)] =
                        spec.eigenvectors[(ir, k)] * amp;
                }
            }
            operators.push(match structure.basis() {
                Some(g) => g.adjoint() * f,
                None => f,
            });
        }
    }
    Ok(KrausChannel {
        operators,
        input_dim: m,
        output_dim: n,
        kind: ChannelKind::On,
    })
}

fn check_dims(structure: &KIStructure, ensemble: &Ensemble) -> Result<()> {
    if structure.dim() != ensemble.dim() {
        return Err(Error::DimensionMismatch {
            expected: structure.dim(),
            found: ensemble.dim(),
        });
    }
    Ok(())
}

/// Reads off `q_l` and `ρ_Q^(l)` from the reduced image of `rho`.
///
/// Blocks with zero weight get the maximally mixed state as a placeholder.
pub fn decompose(structure: &KIStructure, rho: &DensityMatrix) -> Result<BlockState> {
    let reduced = build_k_off(structure).apply(rho)?;
    let offsets = structure.reduced_offsets();
    let mut weights = Vec::new();
    let mut q_states = Vec::new();
    for (l, block) in structure.blocks().iter().enumerate() {
        let d = block.dim_q;
        let part = reduced
            .matrix()
            .view((offsets[l], offsets[l]), (d, d))
            .clone_owned();
        let q: f64 = (0..d).map(|i| part[(i, i)].re).sum();
        weights.push(q.max(0.0));
        q_states.push(if q > 1e-15 {
            DensityMatrix::from_hermitian_unchecked(HermitianMatrix::symmetrized(
                part / Complex64::new(q, 0.0),
            ))
        } else {
            DensityMatrix::maximally_mixed(d)
        });
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    BlockState::new(weights, q_states)
}

/// `‖K_on(K_off(ρ_x)) - ρ_x‖₁` for every member.
pub fn local_error(structure: &KIStructure, ensemble: &Ensemble) -> Result<Vec<f64>> {
    check_dims(structure, ensemble)?;
    let round_trip = RoundTrip::new(structure)?;
    local_error_with(&round_trip, ensemble)
}

fn local_error_with(round_trip: &RoundTrip, ensemble: &Ensemble) -> Result<Vec<f64>> {
    ensemble
        .states()
        .iter()
        .map(|rho| {
            let back = round_trip.apply(rho)?;
            trace_norm(&(back.hermitian() - rho.hermitian()))
        })
        .collect()
}

/// `S(Σ_x p_x K_off(ρ_x))`.
pub fn rate(structure: &KIStructure, ensemble: &Ensemble) -> Result<f64> {
    check_dims(structure, ensemble)?;
    rate_with(&build_k_off(structure), ensemble)
}

fn rate_with(off: &KrausChannel, ensemble: &Ensemble) -> Result<f64> {
    let reduced = ensemble
        .states()
        .iter()
        .map(|rho| off.apply(rho))
        .collect::<Result<Vec<_>>>()?;
    let image = Ensemble::with_labels(
        ensemble.labels().to_vec(),
        ensemble.probs().to_vec(),
        reduced,
    )?;
    von_neumann_entropy(&average_state(&image))
}

/// `1 - Σ_x p_x F(ρ_x, Λ(ρ_x))` with the squared fidelity.
pub fn diagnostic_f(channel: &dyn Channel, ensemble: &Ensemble) -> Result<f64> {
    check_square(channel, ensemble)?;
    let mut total = 0.0;
    for (_, p, rho) in ensemble.iter() {
        total += p * fidelity(rho, &channel.apply(rho)?)?;
    }
    Ok((1.0 - total).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticG {
    pub delta: f64,
    pub g: f64,
}

/// `Δ = 1 - Σ_i λ_i ⟨i|Λ(|i⟩⟨i|)|i⟩` over the eigenbasis of the average state
/// and `g = h₂(Δ) + Δ log₂(d - 1)`; `g = 0` when `d = 1`.
///
/// Under degenerate eigenvalues `Δ` depends on the basis; the one used is the
/// deterministic output of [`eig_hermitian`].
pub fn diagnostic_g(channel: &dyn Channel, ensemble: &Ensemble) -> Result<DiagnosticG> {
    check_square(channel, ensemble)?;
    let d = ensemble.dim();
    let spec = eig_hermitian(&average_state(ensemble))?;
    let mut kept = 0.0;
    for (i, &lambda) in spec.eigenvalues.iter().enumerate() {
        if lambda <= 0.0 {
            continue;
        }
        let v: Vec<Complex64> = spec.eigenvectors.column(i).iter().copied().collect();
        let out = channel.apply(&DensityMatrix::pure(&v)?)?;
        let overlap = v
            .iter()
            .enumerate()
            .map(|(a, va)| {
                v.iter()
                    .enumerate()
                    .map(|(b, vb)| va.conj() * out.matrix()[(a, b)] * vb)
                    .sum::<Complex64>()
            })
            .sum::<Complex64>()
            .re;
        kept += lambda * overlap;
    }
    let delta = (1.0 - kept).clamp(0.0, 1.0);
    let g = if d == 1 {
        0.0
    } else {
        binary_entropy(delta)? + delta * ((d - 1) as f64).log2()
    };
    Ok(DiagnosticG { delta, g })
}

fn check_square(channel: &dyn Channel, ensemble: &Ensemble) -> Result<()> {
    if channel.input_dim() != ensemble.dim() || channel.output_dim() != ensemble.dim() {
        return Err(Error::DimensionMismatch {
            expected: ensemble.dim(),
            found: channel.input_dim(),
        });
    }
    Ok(())
}

/// Errors, rates and single-letter diagnostics of one run of the protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolReport {
    pub labels: Vec<String>,
    pub errors: Vec<f64>,
    pub max_error: f64,
    /// Rate with the approximate structure.
    pub rate: f64,
    /// Rate with the exact structure, when one was supplied.
    pub rate_exact: Option<f64>,
    pub f: f64,
    pub g: f64,
    pub delta: f64,
}

impl ProtocolReport {
    pub fn error(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.errors[i])
    }
}

struct ErrorMap<'a>(&'a ProtocolReport);

impl Serialize for ErrorMap<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.errors.len()))?;
        for (l, e) in self.0.labels.iter().zip(&self.0.errors) {
            map.serialize_entry(l, e)?;
        }
        map.end()
    }
}

impl Serialize for ProtocolReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("ProtocolReport", 8)?;
        s.serialize_field("errors", &ErrorMap(self))?;
        s.serialize_field("max_error", &self.max_error)?;
        s.serialize_field("rate", &self.rate)?;
        s.serialize_field("rate_exact", &self.rate_exact)?;
        s.serialize_field("f", &self.f)?;
        s.serialize_field("g", &self.g)?;
        s.serialize_field("delta", &self.delta)?;
        s.serialize_field("fidelity", "squared")?;
        s.end()
    }
}

/// Runs the protocol for `ensemble` with the approximate `structure`.
pub fn protocol_report(
    structure: &KIStructure,
    ensemble: &Ensemble,
    exact_structure: Option<&KIStructure>,
) -> Result<ProtocolReport> {
    check_dims(structure, ensemble)?;
    let round_trip = RoundTrip::new(structure)?;
    let errors = local_error_with(&round_trip, ensemble)?;
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    let rate = rate_with(&round_trip.off, ensemble)?;
    let rate_exact = exact_structure
        .map(|s| self::rate(s, ensemble))
        .transpose()?;
    let f = diagnostic_f(&round_trip, ensemble)?;
    let DiagnosticG { delta, g } = diagnostic_g(&round_trip, ensemble)?;
    Ok(ProtocolReport {
        labels: ensemble.labels().to_vec(),
        errors,
        max_error,
        rate,
        rate_exact,
        f,
        g,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{assemble, RedundantBlock};
    use crate::linalg::{random_density_matrix, random_unitary};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_structure(rng: &mut ChaCha8Rng, with_basis: bool) -> KIStructure {
        let nblocks = rng.gen_range(1..4);
        let blocks: Vec<RedundantBlock> = (0..nblocks)
            .map(|_| {
                RedundantBlock::new(
                    rng.gen_range(1..3),
                    random_density_matrix(rng.gen_range(1..4), rng),
                )
            })
            .collect();
        let dim: usize = blocks.iter().map(RedundantBlock::dim).sum();
        let basis = with_basis.then(|| random_unitary(dim, rng));
        KIStructure::new(blocks, basis).unwrap()
    }

    fn random_block_state(structure: &KIStructure, rng: &mut ChaCha8Rng) -> BlockState {
        let raw: Vec<f64> = structure
            .blocks()
            .iter()
            .map(|_| rng.gen_range(0.05..1.0))
            .collect();
        let total: f64 = raw.iter().sum();
        BlockState::new(
            raw.iter().map(|w| w / total).collect(),
            structure
                .blocks()
                .iter()
                .map(|b| random_density_matrix(b.dim_q, rng))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn plain_blocks_reshuffle_identically() {
        let st = KIStructure::new(
            vec![RedundantBlock::plain(2), RedundantBlock::plain(1)],
            None,
        )
        .unwrap();
        let off = build_k_off(&st);
        let on = build_k_on(&st).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bs = random_block_state(&st, &mut rng);
        let rho = assemble(&st, &bs).unwrap();
        let reduced = off.apply(&rho).unwrap();
        assert_eq!(reduced.matrix(), rho.matrix());
        assert_eq!(on.apply(&reduced).unwrap().matrix(), rho.matrix());
    }

    #[test]
    fn completeness_and_round_trip_on_random_structures() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..30 {
            let st = random_structure(&mut rng, trial % 2 == 1);
            let off = build_k_off(&st);
            let on = build_k_on(&st).unwrap();
            assert!(off.completeness_defect() < 1e-10);
            assert!(on.completeness_defect() < 1e-10);
            let bs = random_block_state(&st, &mut rng);
            let rho = assemble(&st, &bs).unwrap();
            let back = on.apply(&off.apply(&rho).unwrap()).unwrap();
            assert!((back.trace() - 1.0).abs() < 1e-9);
            assert!(trace_norm(&(back.hermitian() - rho.hermitian())).unwrap() < 1e-9);

            let recovered = decompose(&st, &rho).unwrap();
            for (a, b) in recovered.weights.iter().zip(&bs.weights) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn apply_channel_identity_and_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density_matrix(3, &mut rng);
        let out = apply_channel(&KrausChannel::identity(3), &rho).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-15);
        assert!(matches!(
            apply_channel(&KrausChannel::identity(2), &rho),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kraus_new_checks_completeness() {
        let half = CMatrix::identity(2, 2) * c(0.5);
        assert!(KrausChannel::new(vec![half.clone()], ChannelKind::Other).is_err());
        assert!(KrausChannel::new(
            vec![half.clone(), half.clone(), half.clone(), half],
            ChannelKind::Other
        )
        .is_ok());
        assert!(KrausChannel::new(vec![], ChannelKind::Other).is_err());
    }

    #[test]
    fn exact_block_form_has_zero_error_and_trivial_structure_gives_average_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let st = random_structure(&mut rng, false);
        let states = (0..3)
            .map(|_| assemble(&st, &random_block_state(&st, &mut rng)).unwrap())
            .collect();
        let ens = Ensemble::new(vec![0.2, 0.3, 0.5], states).unwrap();
        for e in local_error(&st, &ens).unwrap() {
            assert!(e < 1e-9);
        }
        let trivial = KIStructure::trivial(st.dim());
        let r = rate(&trivial, &ens).unwrap();
        let s = von_neumann_entropy(&average_state(&ens)).unwrap();
        assert!((r - s).abs() < 1e-12);
        assert!(rate(&st, &ens).unwrap() <= s + 1e-9);

        let report = protocol_report(&st, &ens, Some(&st)).unwrap();
        assert!((report.rate - report.rate_exact.unwrap()).abs() < 1e-12);
        assert!(report.max_error < 1e-9);
        assert!(report.f < 1e-8);
    }

    #[test]
    fn diagnostics_for_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ens = Ensemble::new(
            vec![0.5, 0.5],
            vec![
                random_density_matrix(3, &mut rng),
                random_density_matrix(3, &mut rng),
            ],
        )
        .unwrap();
        let id = KrausChannel::identity(3);
        assert!(diagnostic_f(&id, &ens).unwrap() < 1e-9);
        let g = diagnostic_g(&id, &ens).unwrap();
        assert!(g.delta < 1e-12);
        assert!(g.g < 1e-10);
    }

    #[test]
    fn diagnostic_f_dephasing_plus_state() {
        let plus = DensityMatrix::pure(&[c(1.0), c(1.0)]).unwrap();
        let ens = Ensemble::new(vec![1.0], vec![plus]).unwrap();
        let f = diagnostic_f(&KrausChannel::dephasing(2), &ens).unwrap();
        assert!((f - 0.5).abs() < 1e-12);
    }

    #[test]
    fn diagnostic_g_with_half_delta_in_two_dims() {
        // Average state |0⟩⟨0| and a channel sending everything to I/2: Δ = 1/2.
        let ens = Ensemble::new(vec![1.0], vec![DensityMatrix::basis_state(2, 0)]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ops = vec![
            CMatrix::from_row_slice(2, 2, &[c(s), c(0.0), c(0.0), c(0.0)]),
            CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(s), c(0.0)]),
            CMatrix::from_row_slice(2, 2, &[c(0.0), c(s), c(0.0), c(0.0)]),
            CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(s)]),
        ];
        let depolarize = KrausChannel::new(ops, ChannelKind::Other).unwrap();
        let g = diagnostic_g(&depolarize, &ens).unwrap();
        assert!((g.delta - 0.5).abs() < 1e-12);
        assert!((g.g - 1.0).abs() < 1e-12);

        let one_dim = Ensemble::new(vec![1.0], vec![DensityMatrix::basis_state(1, 0)]).unwrap();
        assert_eq!(
            diagnostic_g(&KrausChannel::identity(1), &one_dim)
                .unwrap()
                .g,
            0.0
        );
    }

    #[test]
    fn report_serializes_with_label_map() {
        let report = ProtocolReport {
            labels: vec!["1".into(), "2".into()],
            errors: vec![0.1, 0.05],
            max_error: 0.1,
            rate: 1.0,
            rate_exact: None,
            f: 0.0,
            g: 0.0,
            delta: 0.0,
        };
        let v = serde_json::to_value(&report).unwrap();
        assert_eq!(v["errors"]["2"], 0.05);
        assert!(v["rate_exact"].is_null());
        assert_eq!(v["fidelity"], "squared");
        assert_eq!(report.error("1"), Some(0.1));
    }
}
