//! Least-squares fits of mean rates.
//!
//! Error curve: `f(ε) = log₂d - a(1 - e^{-b√ε})`, damped Gauss-Newton.
//! Dimension curve: `f(d) = a·log₂d + b`, ordinary least squares.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 1000;
const RSS_REL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FitModel {
    #[serde(rename = "error_curve")]
    ErrorCurve,
    #[serde(rename = "dim_curve")]
    DimCurve,
}

impl FitModel {
    pub fn name(self) -> &'static str {
        match self {
            FitModel::ErrorCurve => "error_curve",
            FitModel::DimCurve => "dim_curve",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub model: FitModel,
    pub a: f64,
    pub b: f64,
    pub rss: f64,
    /// Number of points used.
    pub n: usize,
    /// False when `a ≈ 0` leaves `b` without influence on the curve.
    pub b_identifiable: bool,
    pub iterations: usize,
    /// Whether the grid-search fallback was used.
    pub grid_fallback: bool,
}

impl FitResult {
    /// JSON with every float written to 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut s = String::from("{");
        let _ = write!(
            s,
            "\"model\":\"{}\",\"a\":{:.16e},\"b\":{:.16e},\"rss\":{:.16e},\"n\":{},\"b_identifiable\":{},\"iterations\":{},\"grid_fallback\":{}",
            self.model.name(),
            self.a,
            self.b,
            self.rss,
            self.n,
            self.b_identifiable,
            self.iterations,
            self.grid_fallback
        );
        s.push('}');
        s
    }
}

/// `log₂d - a(1 - e^{-b√x})`.
pub fn error_curve(log2_d: f64, a: f64, b: f64, x: f64) -> f64 {
    log2_d - a * (1.0 - (-b * x.sqrt()).exp())
}

fn rss_error_curve(points: &[(f64, f64)], log2_d: f64, a: f64, b: f64) -> f64 {
    points
        .iter()
        .map(|&(x, y)| (y - error_curve(log2_d, a, b, x)).powi(2))
        .sum()
}

/// Residuals `r = y - f` with `∂f/∂a`, `∂f/∂b`.
fn normal_equations(
    points: &[(f64, f64)],
    log2_d: f64,
    a: f64,
    b: f64,
) -> ([[f64; 2]; 2], [f64; 2]) {
    let mut jtj = [[0.0; 2]; 2];
    let mut jtr = [0.0; 2];
    for &(x, y) in points {
        let s = x.sqrt();
        let e = (-b * s).exp();
        let ja = -(1.0 - e);
        let jb = -a * s * e;
        let r = y - error_curve(log2_d, a, b, x);
        jtj[0][0] += ja * ja;
        jtj[0][1] += ja * jb;
        jtj[1][1] += jb * jb;
        jtr[0] += ja * r;
        jtr[1] += jb * r;
    }
    jtj[1][0] = jtj[0][1];
    (jtj, jtr)
}

fn is_singular(m: &[[f64; 2]; 2]) -> bool {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m[0][0].abs().max(m[1][1].abs());
    !(scale > 0.0) || det.abs() <= 1e-14 * scale * scale
}

struct Refined {
    a: f64,
    b: f64,
    rss: f64,
    iterations: usize,
}

/// Levenberg-Marquardt with Marquardt scaling; stops on a relative RSS change
/// below `RSS_REL_TOL` or after `MAX_ITERATIONS` iterations.
fn refine(points: &[(f64, f64)], log2_d: f64, mut a: f64, mut b: f64) -> Refined {
    let mut rss = rss_error_curve(points, log2_d, a, b);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && rss > 0.0 {
        iterations += 1;
        let (jtj, jtr) = normal_equations(points, log2_d, a, b);
        // Step solves (JᵀJ + λ·diag JᵀJ) δ = Jᵀr.
        let mut accepted = false;
        while lambda < 1e16 {
            let m = [
                [jtj[0][0] * (1.0 + lambda), jtj[0][1]],
                [jtj[1][0], jtj[1][1] * (1.0 + lambda)],
            ];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det == 0.0 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let da = (m[1][1] * jtr[0] - m[0][1] * jtr[1]) / det;
            let db = (m[0][0] * jtr[1] - m[1][0] * jtr[0]) / det;
            let (na, nb) = (a + da, b + db);
            let new_rss = rss_error_curve(points, log2_d, na, nb);
            if new_rss.is_finite() && new_rss <= rss {
                let change = (rss - new_rss) / rss.max(f64::MIN_POSITIVE);
                a = na;
                b = nb;
                rss = new_rss;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if change < RSS_REL_TOL {
                    return Refined {
                        a,
                        b,
                        rss,
                        iterations,
                    };
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    Refined {
        a,
        b,
        rss,
        iterations,
    }
}

/// Coarse search over `a ∈ [0, 2·span]`, `b ∈ [1e-3, 1e3]` (log grid).
fn grid_search(points: &[(f64, f64)], log2_d: f64, span: f64) -> (f64, f64) {
    let a_max = 2.0 * span.max(1e-3);
    let mut best = (0.0, 1.0, f64::INFINITY);
    for i in 0..=200 {
        let a = a_max * i as f64 / 200.0;
        for j in 0..=120 {
            let b = 10f64.powf(-3.0 + 6.0 * j as f64 / 120.0);
            let r = rss_error_curve(points, log2_d, a, b);
            if r < best.2 {
                best = (a, b, r);
            }
        }
    }
    (best.0, best.1)
}

/// Fits `(ε, mean rate)` points at dimension `d`.
pub fn fit_error_curve(points: &[(f64, f64)], dim: usize) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::arg(format!(
            "error-curve fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(x, y)) = points
        .iter()
        .find(|(x, y)| !(*x > 0.0) || !x.is_finite() || !y.is_finite())
    {
        return Err(Error::arg(format!("invalid fit point ({x}, {y})")));
    }
    if dim == 0 {
        return Err(Error::arg("dimension must be positive"));
    }
    let log2_d = (dim as f64).log2();
    let min_rate = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let (a0, b0) = (log2_d - min_rate, 1.0);

    let (jtj, _) = normal_equations(points, log2_d, a0, b0);
    let mut grid_fallback = false;
    let start = if is_singular(&jtj) {
        grid_fallback = true;
        grid_search(points, log2_d, a0.abs())
    } else {
        (a0, b0)
    };
    let mut fit = refine(points, log2_d, start.0, start.1);
    if !grid_fallback && !(fit.rss.is_finite() && fit.a.is_finite() && fit.b.is_finite()) {
        grid_fallback = true;
        let (a, b) = grid_search(points, log2_d, a0.abs());
        fit = refine(points, log2_d, a, b);
    }
    if !(fit.a.is_finite() && fit.b.is_finite() && fit.rss.is_finite()) {
        return Err(Error::FitFailure("error-curve fit diverged".into()));
    }
    let b_identifiable = fit.a.abs() > 1e-9 * log2_d.max(1.0);
    Ok(FitResult {
        model: FitModel::ErrorCurve,
        a: fit.a,
        b: fit.b,
        rss: fit.rss,
        n: points.len(),
        b_identifiable,
        iterations: fit.iterations,
        grid_fallback,
    })
}

/// Fits `(d, mean rate)` points with regressor `log₂d`.
pub fn fit_dim_curve(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::arg("dimension fit needs at least 2 points"));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0) || !y.is_finite()) {
        return Err(Error::arg(format!("invalid fit point ({x}, {y})")));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.log2()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::arg(
            "dimension fit needs at least two distinct dimensions",
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(points)
        .map(|(x, p)| (x - mx) * (p.1 - my))
        .sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let rss = xs
        .iter()
        .zip(points)
        .map(|(x, p)| (p.1 - a * x - b).powi(2))
        .sum();
    Ok(FitResult {
        model: FitModel::DimCurve,
        a,
        b,
        rss,
        n: points.len(),
        b_identifiable: true,
        iterations: 0,
        grid_fallback: false,
    })
}
