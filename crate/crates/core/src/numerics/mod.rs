//! Shared numerical substrate: bracketed root finding, the Gaussian tail
//! budget function `C(x) = sqrt(pi) * x * exp(x^2)` and its inverse, small
//! dense symmetric solvers, seeded sampling, and Euclidean ball projection.
//!
//! Everything here is pure except [`SimRng`], which is a value-like stream
//! state advanced by sampling.

mod linalg;
mod rng;

pub use linalg::{extreme_eigenvalues, jacobi_eigenvalues, solve_linear_spd, Matrix};
pub use rng::SimRng;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("argument too large: {0}")]
    ArgumentTooLarge(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid bracket: {0}")]
    InvalidBracket(String),
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("bisection did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, NumericsError>;

/// Search interval for [`bisect`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    /// Absolute tolerance, applied both to `|f(root)|` and to the interval width.
    pub tol: f64,
    pub max_iter: usize,
}

impl RootBracket {
    pub fn new(lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<Self> {
        if !(lo < hi) {
            return Err(NumericsError::InvalidBracket(format!("lo={lo} must be < hi={hi}")));
        }
        if !(tol > 0.0) {
            return Err(NumericsError::InvalidBracket(format!("tol={tol} must be positive")));
        }
        if max_iter == 0 {
            return Err(NumericsError::InvalidBracket("max_iter must be positive".into()));
        }
        Ok(Self { lo, hi, tol, max_iter })
    }
}

/// Finds a root of a function that changes sign on the bracket.
///
/// Stops when `|f(mid)| <= tol`, when the interval is narrower than `tol`,
/// or when the midpoint can no longer be split in floating point.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, bracket: RootBracket) -> Result<f64> {
    let RootBracket { mut lo, mut hi, tol, max_iter } = bracket;
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(NumericsError::NoSignChange { lo, hi });
    }
    for _ in 0..max_iter {
        let mid = lo + 0.5 * (hi - lo);
        let f_mid = f(mid);
        if f_mid.abs() <= tol || hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(NumericsError::NoConvergence(max_iter))
}

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// `C(x) = sqrt(pi) * x * exp(x^2)` for `x >= 0`.
pub fn c_function(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(NumericsError::Domain(format!("C(x) requires x >= 0, got {x}")));
    }
    let value = SQRT_PI * x * (x * x).exp();
    if !value.is_finite() {
        return Err(NumericsError::ArgumentTooLarge(x));
    }
    Ok(value)
}

/// Inverse of [`c_function`]: the unique `x >= 0` with `C(x) = y`.
///
/// The root is found in `ln x`, where `ln C = ln sqrt(pi) + s + e^{2s}` is
/// well scaled for both tiny and large `y`; the result matches `y` to
/// roughly 1e-13 relative.
pub fn c_inverse(y: f64) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(NumericsError::Domain(format!("C^-1(y) requires finite y > 0, got {y}")));
    }
    // For y <= sqrt(pi) < C(1), x < 1 and e^{x^2} lies in [1, e], so
    // x >= y/(sqrt(pi) e); C(2y/sqrt(pi)) > 2y gives the upper end.
    let (lo, hi) = if y <= SQRT_PI {
        (y / (SQRT_PI * std::f64::consts::E), 2.0 * y / SQRT_PI)
    } else {
        // C(0.5) < sqrt(pi) < y; double from 1 until C(hi) >= y.
        let mut hi = 1.0_f64;
        while c_function(hi).map(|c| c < y).unwrap_or(false) {
            hi *= 2.0;
        }
        (0.5, hi)
    };
    if lo == hi {
        return Ok(lo);
    }
    let ln_y = y.ln();
    let log_gap = |s: f64| SQRT_PI.ln() + s + (2.0 * s).exp() - ln_y;
    let bracket = RootBracket::new(lo.ln(), hi.ln(), 1e-14, 400)?;
    let s = bisect(log_gap, bracket)?;
    Ok(s.exp())
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projects `w` onto the closed ball of radius `radius` centered at 0.
pub fn project_ball(w: &[f64], radius: f64) -> Vec<f64> {
    let mut out = w.to_vec();
    project_ball_in_place(&mut out, radius);
    out
}

pub fn project_ball_in_place(w: &mut [f64], radius: f64) {
    let n = norm(w);
    if n > radius {
        let scale = radius / n;
        w.iter_mut().for_each(|x| *x *= scale);
    }
}
