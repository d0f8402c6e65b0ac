//! Binning approximations of a two-state classical ensemble `{ρ, σ}` in which
//! `ρ` is the flat state.
//!
//! Both methods scan the descending distribution of `σ` left to right and
//! close a bin as soon as the next entry leaves the threshold window of the
//! bin's first entry. Entries of a bin are replaced by their arithmetic mean.

use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{KIStructure, RedundantBlock};
use crate::error::{Error, Result};
use crate::linalg::{shannon_entropy, CMatrix, DensityMatrix};

pub const SUM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinningMethod {
    #[serde(rename = "arithmetic", alias = "A")]
    Arithmetic,
    #[serde(rename = "geometric", alias = "G")]
    Geometric,
}

impl BinningMethod {
    pub const ALL: [BinningMethod; 2] = [BinningMethod::Arithmetic, BinningMethod::Geometric];

    pub fn tag(self) -> &'static str {
        match self {
            BinningMethod::Arithmetic => "A",
            BinningMethod::Geometric => "G",
        }
    }

    pub fn bins(self, p: &ProbVector, epsilon: f64) -> Result<BinPartition> {
        match self {
            BinningMethod::Arithmetic => arithmetic_bins(p, epsilon),
            BinningMethod::Geometric => geometric_bins(p, epsilon),
        }
    }
}

impl std::str::FromStr for BinningMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arithmetic" | "A" => Ok(BinningMethod::Arithmetic),
            "geometric" | "G" => Ok(BinningMethod::Geometric),
            other => Err(Error::arg(format!("unknown binning method {other:?}"))),
        }
    }
}

/// Probability vector kept in descending order.
///
/// `permutation[i]` is the caller's index of the `i`-th largest entry.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector {
    values: Vec<f64>,
    permutation: Vec<usize>,
}

impl ProbVector {
    /// Sorts `values` descending (stable) after checking it is a distribution.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("empty probability vector"));
        }
        if let Some(x) = values.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::arg(format!("invalid probability {x}")));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::arg(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        let mut permutation: Vec<usize> = (0..values.len()).collect();
        permutation.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let sorted = permutation.iter().map(|&i| values[i]).collect();
        Ok(Self {
            values: sorted,
            permutation,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Maps a vector indexed by sorted position back to the caller's order.
    pub fn unsort(&self, sorted: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; sorted.len()];
        for (pos, &orig) in self.permutation.iter().enumerate() {
            out[orig] = sorted[pos];
        }
        out
    }
}

/// Contiguous bins over sorted positions, stored as exclusive end indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinPartition {
    boundaries: Vec<usize>,
}

impl BinPartition {
    /// `boundaries` must be strictly increasing and end at `dim`.
    pub fn new(boundaries: Vec<usize>, dim: usize) -> Result<Self> {
        if boundaries.last() != Some(&dim) {
            return Err(Error::arg(format!(
                "last boundary must equal the dimension {dim}"
            )));
        }
        let mut prev = 0;
        for &b in &boundaries {
            if b <= prev {
                return Err(Error::arg(
                    "bin boundaries must be strictly increasing and positive",
                ));
            }
            prev = b;
        }
        Ok(Self { boundaries })
    }

    pub fn singletons(dim: usize) -> Self {
        Self {
            boundaries: (1..=dim).collect(),
        }
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Number of bins `L`.
    pub fn len(&self) -> usize {
        self.boundaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundaries.is_empty()
    }

    pub fn dim(&self) -> usize {
        *self.boundaries.last().unwrap_or(&0)
    }

    pub fn bins(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        let starts = std::iter::once(0).chain(self.boundaries.iter().copied());
        starts
            .zip(self.boundaries.iter().copied())
            .map(|(s, e)| s..e)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.bins().map(|r| r.len()).collect()
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::arg(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    Ok(())
}

fn greedy(values: &[f64], end: usize, mut same_bin: impl FnMut(f64, f64) -> bool) -> Vec<usize> {
    let mut boundaries = Vec::new();
    let mut start = 0;
    while start < end {
        let head = values[start];
        let mut k = start + 1;
        while k < end && same_bin(head, values[k]) {
            k += 1;
        }
        boundaries.push(k);
        start = k;
    }
    boundaries
}

/// Maximal bins with `p_first - p_last ≤ ε/d`.
pub fn arithmetic_bins(p: &ProbVector, epsilon: f64) -> Result<BinPartition> {
    check_epsilon(epsilon)?;
    let threshold = epsilon / p.dim() as f64;
    let boundaries = greedy(&p.values, p.dim(), |head, x| head - x <= threshold);
    Ok(BinPartition { boundaries })
}

/// Maximal bins with `p_last / p_first ≥ 1/(1+ε)`; zero entries share one final bin.
pub fn geometric_bins(p: &ProbVector, epsilon: f64) -> Result<BinPartition> {
    check_epsilon(epsilon)?;
    let positive = p.values.iter().take_while(|&&x| x > 0.0).count();
    let factor = 1.0 + epsilon;
    let mut boundaries = greedy(&p.values, positive, |head, x| x * factor >= head);
    if positive < p.dim() {
        boundaries.push(p.dim());
    }
    Ok(BinPartition { boundaries })
}

/// Replaces every entry by the mean of its bin.
pub fn apply_binning(p: &ProbVector, part: &BinPartition) -> Result<ProbVector> {
    if part.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: part.dim(),
        });
    }
    let mut values = Vec::with_capacity(p.dim());
    for bin in part.bins() {
        let mean = p.values[bin.clone()].iter().sum::<f64>() / bin.len() as f64;
        values.extend(std::iter::repeat_n(mean, bin.len()));
    }
    Ok(ProbVector {
        values,
        permutation: p.permutation.clone(),
    })
}

/// `Σ_i |p_i - p'_i|` over sorted positions.
pub fn binning_error(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    Ok(p.values
        .iter()
        .zip(&q.values)
        .map(|(a, b)| (a - b).abs())
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BinnedRate {
    /// Entropy of the prior-weighted bin distribution.
    pub rate: f64,
    /// `log₂ L`.
    pub log2_l: f64,
}

/// Rate after removing the flat within-bin parts.
///
/// `flat_weights[i] = |I_i|/d` and `sigma_weights[i] = Σ_{m ∈ I_i} p_m`.
pub fn binned_rate(
    flat_weights: &[f64],
    sigma_weights: &[f64],
    priors: (f64, f64),
) -> Result<BinnedRate> {
    if flat_weights.len() != sigma_weights.len() {
        return Err(Error::DimensionMismatch {
            expected: flat_weights.len(),
            found: sigma_weights.len(),
        });
    }
    if flat_weights.is_empty() {
        return Err(Error::arg("no bins"));
    }
    for (name, w) in [("flat", flat_weights), ("sigma", sigma_weights)] {
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::arg(format!("{name} bin weights sum to {total}")));
        }
    }
    check_priors(priors)?;
    let mixed: Vec<f64> = flat_weights
        .iter()
        .zip(sigma_weights)
        .map(|(a, b)| priors.0 * a + priors.1 * b)
        .collect();
    let log2_l = (flat_weights.len() as f64).log2();
    Ok(BinnedRate {
        rate: shannon_entropy(&mixed).min(log2_l),
        log2_l,
    })
}

pub(crate) fn check_priors(priors: (f64, f64)) -> Result<()> {
    if !(priors.0 >= 0.0 && priors.1 >= 0.0) || (priors.0 + priors.1 - 1.0).abs() > 1e-10 {
        return Err(Error::arg(format!(
            "priors {priors:?} are not a distribution"
        )));
    }
    Ok(())
}

/// Bin weights of the flat state and of `σ = p` under `part`.
pub fn bin_weights(p: &ProbVector, part: &BinPartition) -> (Vec<f64>, Vec<f64>) {
    let d = p.dim() as f64;
    part.bins()
        .map(|bin| (bin.len() as f64 / d, p.values[bin].iter().sum::<f64>()))
        .unzip()
}

/// One binning run: partition, binned distribution and its figures of merit.
#[derive(Clone, Debug, PartialEq)]
pub struct BinningOutcome {
    pub method: BinningMethod,
    pub epsilon: f64,
    pub partition: BinPartition,
    pub binned: ProbVector,
    pub error: f64,
    pub rate: BinnedRate,
}

pub fn run_binning(
    p: &ProbVector,
    method: BinningMethod,
    epsilon: f64,
    priors: (f64, f64),
) -> Result<BinningOutcome> {
    let partition = method.bins(p, epsilon)?;
    let binned = apply_binning(p, &partition)?;
    let error = binning_error(p, &binned)?;
    let (flat, sigma) = bin_weights(p, &partition);
    let rate = binned_rate(&flat, &sigma, priors)?;
    Ok(BinningOutcome {
        method,
        epsilon,
        partition,
        binned,
        error,
        rate,
    })
}

/// Structure in which bin `i` is a classical label with flat redundant part of
/// dimension `|I_i|`; the basis sorts the computational basis descending by `p`.
pub fn binning_structure(p: &ProbVector, part: &BinPartition) -> Result<KIStructure> {
    let n = p.dim();
    let blocks = part
        .sizes()
        .into_iter()
        .map(|s| RedundantBlock::new(1, DensityMatrix::maximally_mixed(s)))
        .collect();
    let mut gamma = CMatrix::zeros(n, n);
    for (pos, &orig) in p.permutation.iter().enumerate() {
        gamma[(pos, orig)] = Complex64::new(1.0, 0.0);
    }
    KIStructure::new(blocks, Some(gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::binary_entropy;

    fn example() -> ProbVector {
        ProbVector::new(vec![0.4, 0.35, 0.15, 0.10]).unwrap()
    }

    #[test]
    fn sorts_and_unsorts() {
        let p = ProbVector::new(vec![0.1, 0.6, 0.3]).unwrap();
        assert_eq!(p.values(), &[0.6, 0.3, 0.1]);
        assert_eq!(p.permutation(), &[1, 2, 0]);
        assert_eq!(p.unsort(p.values()), vec![0.1, 0.6, 0.3]);
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVector::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn arithmetic_example() {
        let part = arithmetic_bins(&example(), 0.4).unwrap();
        assert_eq!(part.boundaries(), &[2, 4]);
        assert_eq!(part.bins().collect::<Vec<_>>(), vec![0..2, 2..4]);
    }

    #[test]
    fn geometric_example_is_inclusive_at_the_ratio() {
        let part = geometric_bins(&example(), 0.5).unwrap();
        assert_eq!(part.boundaries(), &[2, 4]);
        let strict = geometric_bins(&example(), 0.49).unwrap();
        assert_eq!(strict.boundaries(), &[2, 3, 4]);
    }

    #[test]
    fn trivial_partitions() {
        let uniform = ProbVector::new(vec![0.25; 4]).unwrap();
        assert_eq!(arithmetic_bins(&uniform, 1e-9).unwrap().len(), 1);
        assert_eq!(geometric_bins(&uniform, 1e-9).unwrap().len(), 1);
        assert_eq!(arithmetic_bins(&example(), 1e-9).unwrap().len(), 4);
        let two = ProbVector::new(vec![0.9, 0.1]).unwrap();
        assert_eq!(geometric_bins(&two, 0.01).unwrap().len(), 2);
        assert!(arithmetic_bins(&two, 0.0).is_err());
    }

    #[test]
    fn geometric_collects_zeros() {
        let p = ProbVector::new(vec![0.0, 0.5, 0.0, 0.5]).unwrap();
        let part = geometric_bins(&p, 0.1).unwrap();
        assert_eq!(part.boundaries(), &[2, 4]);
    }

    #[test]
    fn binning_example_values() {
        let p = example();
        let part = arithmetic_bins(&p, 0.4).unwrap();
        let binned = apply_binning(&p, &part).unwrap();
        let want = [0.375, 0.375, 0.125, 0.125];
        for (a, b) in binned.values().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((binning_error(&p, &binned).unwrap() - 0.1).abs() < 1e-12);

        let (flat, sigma) = bin_weights(&p, &part);
        assert_eq!(flat, vec![0.5, 0.5]);
        assert!((sigma[0] - 0.75).abs() < 1e-15);
        let r = binned_rate(&flat, &sigma, (0.5, 0.5)).unwrap();
        assert!((r.rate - binary_entropy(0.625).unwrap()).abs() < 1e-12);
        assert!((r.rate - 0.954434).abs() < 1e-6);
        assert_eq!(r.log2_l, 1.0);
    }

    #[test]
    fn single_bin_and_singletons() {
        let p = example();
        let one = BinPartition::new(vec![4], 4).unwrap();
        assert_eq!(apply_binning(&p, &one).unwrap().values(), &[0.25; 4]);
        let same = apply_binning(&p, &BinPartition::singletons(4)).unwrap();
        assert_eq!(same.values(), p.values());
        assert_eq!(binning_error(&p, &same).unwrap(), 0.0);
        let r = binned_rate(&[1.0], &[1.0], (0.5, 0.5)).unwrap();
        assert_eq!((r.rate, r.log2_l), (0.0, 0.0));
    }

    #[test]
    fn flat_sigma_saturates_bound_for_equal_bins() {
        let p = ProbVector::new(vec![0.125; 8]).unwrap();
        let part = BinPartition::new(vec![2, 4, 6, 8], 8).unwrap();
        let (flat, sigma) = bin_weights(&p, &part);
        let r = binned_rate(&flat, &sigma, (0.3, 0.7)).unwrap();
        assert!((r.rate - 2.0).abs() < 1e-12);
    }

    #[test]
    fn partition_validation() {
        assert!(BinPartition::new(vec![2, 2, 4], 4).is_err());
        assert!(BinPartition::new(vec![2, 3], 4).is_err());
        assert!(BinPartition::new(vec![0, 4], 4).is_err());
        assert!(apply_binning(&example(), &BinPartition::singletons(3)).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in BinningMethod::ALL {
            assert_eq!(m.tag().parse::<BinningMethod>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(serde_json::from_str::<BinningMethod>(&json).unwrap(), m);
        }
        assert!("median".parse::<BinningMethod>().is_err());
    }
}
