use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, RateKind};
use crate::binning::{run_binning, BinningMethod, ProbVector};
use crate::ensemble::random_diagonal_state;
use crate::error::{Error, Result};

/// Slack on the per-record invariants `error ≤ ε` and `R ≤ log₂L`.
const RECORD_TOL: f64 = 1e-12;

/// One binning of one random state.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub dim: usize,
    pub epsilon: f64,
    pub eps_index: usize,
    pub sample: usize,
    pub method: BinningMethod,
    pub bins: usize,
    pub rate_entropy: f64,
    pub rate_log2l: f64,
    pub l1_error: f64,
}

impl SampleRecord {
    pub fn rate(&self, kind: RateKind) -> f64 {
        match kind {
            RateKind::Entropy => self.rate_entropy,
            RateKind::Log2L | RateKind::Both => self.rate_log2l,
        }
    }
}

fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the state drawn for `(dim, ε index, sample)`.
pub fn sample_seed(master: u64, dim: usize, eps_index: usize, sample: usize) -> u64 {
    [dim as u64, eps_index as u64, sample as u64]
        .iter()
        .fold(splitmix64(master), |h, &v| splitmix64(h ^ v))
}

/// Both binning methods applied to the state of `(dim, eps_index, sample)`.
pub fn sample_records(
    cfg: &ExperimentConfig,
    dim: usize,
    eps_index: usize,
    epsilon: f64,
    sample: usize,
) -> Result<[SampleRecord; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(cfg.seed, dim, eps_index, sample));
    let p = ProbVector::new(random_diagonal_state(dim, &mut rng))?;
    let record = |method: BinningMethod| -> Result<SampleRecord> {
        let out = run_binning(&p, method, epsilon, cfg.priors)?;
        if out.error > epsilon + RECORD_TOL || out.rate.rate > out.rate.log2_l + RECORD_TOL {
            return Err(Error::InvalidState(format!(
                "binning invariant violated at d={dim}, eps={epsilon}, sample={sample}"
            )));
        }
        Ok(SampleRecord {
            dim,
            epsilon,
            eps_index,
            sample,
            method,
            bins: out.partition.len(),
            rate_entropy: out.rate.rate,
            rate_log2l: out.rate.log2_l,
            l1_error: out.error,
        })
    };
    Ok([
        record(BinningMethod::Arithmetic)?,
        record(BinningMethod::Geometric)?,
    ])
}

/// Worker count: explicit value, else `QBCOMP_THREADS`, else all cores.
pub fn worker_count(explicit: Option<usize>) -> Option<usize> {
    explicit.or_else(|| {
        std::env::var("QBCOMP_THREADS")
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
    })
}

fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count(threads) {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidState(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(job))
}

/// Records ordered by dimension, ε index, sample, then method.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SampleRecord>> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize, f64, usize)> = cfg
        .dims
        .iter()
        .flat_map(|&d| {
            cfg.epsilons
                .values(d)
                .into_iter()
                .enumerate()
                .flat_map(move |(i, e)| (0..cfg.samples).map(move |s| (d, i, e, s)))
        })
        .collect();
    let chunks = in_pool(cfg.threads, || {
        tasks
            .par_iter()
            .map(|&(d, i, e, s)| sample_records(cfg, d, i, e, s))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(chunks.into_iter().flatten().collect())
}

/// Rate against ε at a single dimension.
pub fn sweep_error(cfg: &ExperimentConfig) -> Result<Vec<SampleRecord>> {
    if cfg.dims.len() != 1 {
        return Err(Error::arg(format!(
            "error sweep needs exactly one dimension, got {}",
            cfg.dims.len()
        )));
    }
    run_sweep(cfg)
}

/// Rate against dimension; typically with `ε = 1/√d`.
pub fn sweep_dimension(cfg: &ExperimentConfig) -> Result<Vec<SampleRecord>> {
    run_sweep(cfg)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Per `(dim, ε, method)` summary.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregatePoint {
    pub dim: usize,
    pub epsilon: f64,
    pub eps_index: usize,
    pub method: BinningMethod,
    pub n: usize,
    pub rate_entropy: Moments,
    pub rate_log2l: Moments,
    pub l1_error: Moments,
    pub bins: Moments,
}

impl AggregatePoint {
    pub fn rate(&self, kind: RateKind) -> Moments {
        match kind {
            RateKind::Entropy => self.rate_entropy,
            RateKind::Log2L | RateKind::Both => self.rate_log2l,
        }
    }
}

/// Arithmetic minus geometric rate at one `(dim, ε)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferencePoint {
    pub dim: usize,
    pub epsilon: f64,
    pub eps_index: usize,
    /// Mean over samples that have both methods of `R_A - R_G`.
    pub paired_entropy: f64,
    pub paired_log2l: f64,
    /// `mean(R_A) - mean(R_G)`.
    pub of_means_entropy: f64,
    pub of_means_log2l: f64,
}

impl DifferencePoint {
    pub fn paired(&self, kind: RateKind) -> f64 {
        match kind {
            RateKind::Entropy => self.paired_entropy,
            RateKind::Log2L | RateKind::Both => self.paired_log2l,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Aggregate {
    pub points: Vec<AggregatePoint>,
    pub differences: Vec<DifferencePoint>,
}

impl Aggregate {
    pub fn method_points(&self, method: BinningMethod) -> impl Iterator<Item = &AggregatePoint> {
        self.points.iter().filter(move |p| p.method == method)
    }
}

/// Groups are reduced in sorted key order, independent of record order.
pub fn aggregate(records: &[SampleRecord]) -> Aggregate {
    type Key = (usize, usize, BinningMethod);
    let mut groups: BTreeMap<Key, Vec<&SampleRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.dim, r.eps_index, r.method))
            .or_default()
            .push(r);
    }
    for g in groups.values_mut() {
        g.sort_by_key(|r| r.sample);
    }

    let column = |g: &[&SampleRecord], f: fn(&SampleRecord) -> f64| -> Moments {
        Moments::of(&g.iter().map(|r| f(r)).collect::<Vec<_>>())
    };
    let points: Vec<AggregatePoint> = groups
        .iter()
        .map(|(&(dim, eps_index, method), g)| AggregatePoint {
            dim,
            epsilon: g[0].epsilon,
            eps_index,
            method,
            n: g.len(),
            rate_entropy: column(g, |r| r.rate_entropy),
            rate_log2l: column(g, |r| r.rate_log2l),
            l1_error: column(g, |r| r.l1_error),
            bins: column(g, |r| r.bins as f64),
        })
        .collect();

    let mut differences = Vec::new();
    for (&(dim, eps_index, method), a) in &groups {
        if method != BinningMethod::Arithmetic {
            continue;
        }
        let Some(g) = groups.get(&(dim, eps_index, BinningMethod::Geometric)) else {
            continue;
        };
        let by_sample: BTreeMap<usize, &SampleRecord> = g.iter().map(|r| (r.sample, *r)).collect();
        let pairs: Vec<(&SampleRecord, &SampleRecord)> = a
            .iter()
            .filter_map(|ra| by_sample.get(&ra.sample).map(|rg| (*ra, *rg)))
            .collect();
        let mean_diff = |f: fn(&SampleRecord) -> f64| -> f64 {
            if pairs.is_empty() {
                return f64::NAN;
            }
            pairs.iter().map(|(x, y)| f(x) - f(y)).sum::<f64>() / pairs.len() as f64
        };
        let of_means = |f: fn(&SampleRecord) -> f64| column(a, f).mean - column(g, f).mean;
        differences.push(DifferencePoint {
            dim,
            epsilon: a[0].epsilon,
            eps_index,
            paired_entropy: mean_diff(|r| r.rate_entropy),
            paired_log2l: mean_diff(|r| r.rate_log2l),
            of_means_entropy: of_means(|r| r.rate_entropy),
            of_means_log2l: of_means(|r| r.rate_log2l),
        });
    }
    Aggregate {
        points,
        differences,
    }
}
