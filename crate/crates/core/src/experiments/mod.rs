//! Monte Carlo sweeps of the binning approximations over ε and dimension,
//! aggregation of the sampled rates, and curve fits.

pub mod config;
pub mod fit;
pub mod output;
pub mod sweep;

pub use config::{logspace, EpsilonRule, ExperimentConfig, RateKind};
pub use fit::{error_curve, fit_dim_curve, fit_error_curve, FitModel, FitResult};
pub use output::{
    read_csv, sweep_plot, write_aggregate_csv, write_csv, write_differences_csv, Plot, Series,
    SeriesStyle,
};
pub use sweep::{
    aggregate, run_sweep, sample_seed, sweep_dimension, sweep_error, Aggregate, AggregatePoint,
    DifferencePoint, Moments, SampleRecord,
};

use crate::binning::BinningMethod;
use crate::error::{Error, Result};

/// Fit of one method's mean-rate curve.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodFit {
    pub method: BinningMethod,
    pub kind: RateKind,
    pub fit: FitResult,
}

/// Error-curve fits per method and single rate kind; needs exactly one dimension.
pub fn fit_error_sweep(agg: &Aggregate, kind: RateKind) -> Result<Vec<MethodFit>> {
    let dims: std::collections::BTreeSet<usize> = agg.points.iter().map(|p| p.dim).collect();
    let dim = match dims.len() {
        1 => *dims.iter().next().expect("one dim"),
        n => {
            return Err(Error::arg(format!(
                "error-curve fit needs one dimension, found {n}"
            )))
        }
    };
    let mut out = Vec::new();
    for k in kind.kinds() {
        for method in BinningMethod::ALL {
            let pts: Vec<(f64, f64)> = agg
                .method_points(method)
                .map(|p| (p.epsilon, p.rate(k).mean))
                .collect();
            out.push(MethodFit {
                method,
                kind: k,
                fit: fit_error_curve(&pts, dim)?,
            });
        }
    }
    Ok(out)
}

/// Dimension-curve fits per method and single rate kind.
pub fn fit_dim_sweep(agg: &Aggregate, kind: RateKind) -> Result<Vec<MethodFit>> {
    let mut out = Vec::new();
    for k in kind.kinds() {
        for method in BinningMethod::ALL {
            let pts: Vec<(f64, f64)> = agg
                .method_points(method)
                .map(|p| (p.dim as f64, p.rate(k).mean))
                .collect();
            out.push(MethodFit {
                method,
                kind: k,
                fit: fit_dim_curve(&pts)?,
            });
        }
    }
    Ok(out)
}

/// Reference error-curve fits at `d = 1024`: `(method, a, b)`.
pub const REFERENCE_ERROR_FIT: [(BinningMethod, f64, f64); 2] = [
    (BinningMethod::Arithmetic, 7.856, 4.079),
    (BinningMethod::Geometric, 6.264, 4.036),
];

/// Reference dimension-curve fits at `ε = 1/√d`: `(method, a, b)`.
pub const REFERENCE_DIM_FIT: [(BinningMethod, f64, f64); 2] = [
    (BinningMethod::Arithmetic, 0.5258, 0.6486),
    (BinningMethod::Geometric, 0.6406, 0.3608),
];

pub fn reference_fit(model: FitModel, method: BinningMethod) -> (f64, f64) {
    let table = match model {
        FitModel::ErrorCurve => &REFERENCE_ERROR_FIT,
        FitModel::DimCurve => &REFERENCE_DIM_FIT,
    };
    let (_, a, b) = table
        .iter()
        .find(|(m, _, _)| *m == method)
        .expect("both methods listed");
    (*a, *b)
}
