//! Losses, gradients, per-sample clipping, curvature constants, gradient
//! bounds, and the closed-form ridge optimum.
//!
//! The regularizer is `lambda * ||w||^2` in both models. Multinomial weights
//! are laid out as `classes` consecutive blocks of length `dim`.

use std::ops::Range;

use thiserror::Error;

use crate::data::{Dataset, Partition};
use crate::numerics::{self, extreme_eigenvalues, solve_linear_spd, Matrix, NumericsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("empty shard")]
    EmptyShard,
    #[error("invalid model settings: {0}")]
    Invalid(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature {
    /// PL constant.
    pub mu: f64,
    /// Smoothness constant.
    pub smoothness: f64,
}

impl Curvature {
    pub fn new(mu: f64, smoothness: f64) -> Result<Self> {
        if !(mu > 0.0 && smoothness >= mu && smoothness.is_finite()) {
            return Err(ModelError::Invalid(format!("need 0 < mu <= L, got mu={mu}, L={smoothness}")));
        }
        Ok(Self { mu, smoothness })
    }

    /// Per-iteration contraction `1 - mu/L`.
    pub fn contraction(&self) -> f64 {
        1.0 - self.mu / self.smoothness
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    Ridge,
    /// Softmax cross-entropy; curvature constants are hyperparameters.
    Logistic { classes: usize, curvature: Curvature },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    pub lambda: f64,
}

impl LossSpec {
    pub fn ridge(lambda: f64) -> Self {
        Self { kind: LossKind::Ridge, lambda }
    }

    pub fn logistic(classes: usize, lambda: f64, curvature: Curvature) -> Self {
        Self { kind: LossKind::Logistic { classes, curvature }, lambda }
    }

    /// Length of the model vector for covariates of dimension `dim`.
    pub fn param_dim(&self, dim: usize) -> usize {
        match self.kind {
            LossKind::Ridge => dim,
            LossKind::Logistic { classes, .. } => classes * dim,
        }
    }

    fn check(&self, w: &[f64], u: &[f64]) -> Result<()> {
        if let LossKind::Logistic { classes, .. } = self.kind {
            if classes < 2 {
                return Err(ModelError::Invalid(format!("need at least 2 classes, got {classes}")));
            }
        }
        if w.len() != self.param_dim(u.len()) {
            return Err(ModelError::Dimension(format!(
                "model has {} entries, covariates imply {}",
                w.len(),
                self.param_dim(u.len())
            )));
        }
        Ok(())
    }
}

fn softmax_scores(w: &[f64], u: &[f64], classes: usize) -> Vec<f64> {
    let d = u.len();
    let logits: Vec<f64> = (0..classes).map(|c| numerics::dot(&w[c * d..(c + 1) * d], u)).collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn class_index(v: f64, classes: usize) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && (v as usize) < classes {
        Ok(v as usize)
    } else {
        Err(ModelError::Dimension(format!("label {v} is not a class index below {classes}")))
    }
}

/// Per-sample loss without the regularizer.
pub fn sample_loss(spec: &LossSpec, w: &[f64], u: &[f64], v: f64) -> Result<f64> {
    spec.check(w, u)?;
    Ok(match spec.kind {
        LossKind::Ridge => 0.5 * (numerics::dot(w, u) - v).powi(2),
        LossKind::Logistic { classes, .. } => {
            let p = softmax_scores(w, u, classes);
            -p[class_index(v, classes)?].max(f64::MIN_POSITIVE).ln()
        }
    })
}

/// Adds `scale * clip(grad f(w; u, v))` into `out`. The gradient is an outer
/// product (a per-class coefficient times `u`), so its norm is available
/// without materializing it.
fn accumulate_sample_gradient(
    spec: &LossSpec,
    w: &[f64],
    u: &[f64],
    v: f64,
    clip: Option<f64>,
    scale: f64,
    out: &mut [f64],
) -> Result<()> {
    let u_norm = numerics::norm(u);
    let d = u.len();
    match spec.kind {
        LossKind::Ridge => {
            let coef = numerics::dot(w, u) - v;
            let factor = clip_factor(coef.abs() * u_norm, clip);
            let a = scale * factor * coef;
            out.iter_mut().zip(u).for_each(|(o, x)| *o += a * x);
        }
        LossKind::Logistic { classes, .. } => {
            let mut coef = softmax_scores(w, u, classes);
            coef[class_index(v, classes)?] -= 1.0;
            let factor = clip_factor(numerics::norm(&coef) * u_norm, clip);
            for (c, p) in coef.iter().enumerate() {
                let a = scale * factor * p;
                out[c * d..(c + 1) * d].iter_mut().zip(u).for_each(|(o, x)| *o += a * x);
            }
        }
    }
    Ok(())
}

fn clip_factor(grad_norm: f64, clip: Option<f64>) -> f64 {
    match clip {
        Some(bound) if grad_norm > bound => bound / grad_norm,
        _ => 1.0,
    }
}

pub fn sample_gradient(spec: &LossSpec, w: &[f64], u: &[f64], v: f64) -> Result<Vec<f64>> {
    spec.check(w, u)?;
    let mut g = vec![0.0; w.len()];
    accumulate_sample_gradient(spec, w, u, v, None, 1.0, &mut g)?;
    Ok(g)
}

/// `min(1, bound/||g||) * g`.
pub fn clip_sample_gradient(g: &[f64], bound: f64) -> Vec<f64> {
    let f = clip_factor(numerics::norm(g), Some(bound));
    g.iter().map(|x| x * f).collect()
}

/// Mean of (optionally clipped) per-sample gradients over `shard`, plus the
/// unclipped regularizer gradient `2 lambda w`.
pub fn local_gradient(
    spec: &LossSpec,
    w: &[f64],
    data: &Dataset,
    shard: Range<usize>,
    clip: Option<f64>,
) -> Result<Vec<f64>> {
    if shard.is_empty() {
        return Err(ModelError::EmptyShard);
    }
    spec.check(w, data.features().row(0))?;
    let scale = 1.0 / shard.len() as f64;
    let mut g = vec![0.0; w.len()];
    for i in shard {
        let (u, v) = data.sample(i);
        accumulate_sample_gradient(spec, w, u, v, clip, scale, &mut g)?;
    }
    g.iter_mut().zip(w).for_each(|(gi, wi)| *gi += 2.0 * spec.lambda * wi);
    Ok(g)
}

/// `(1/D) sum_i f(w; u_i, v_i) + lambda ||w||^2`.
pub fn global_loss(spec: &LossSpec, w: &[f64], data: &Dataset) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..data.len() {
        let (u, v) = data.sample(i);
        total += sample_loss(spec, w, u, v)?;
    }
    Ok(total / data.len() as f64 + spec.lambda * numerics::dot(w, w))
}

/// `(1/D) sum_k D_k grad F_k(w)` without clipping.
pub fn global_gradient(spec: &LossSpec, w: &[f64], data: &Dataset, partition: &Partition) -> Result<Vec<f64>> {
    let total = partition.total() as f64;
    let mut g = vec![0.0; w.len()];
    for shard in partition.shards() {
        let weight = shard.len() as f64 / total;
        let local = local_gradient(spec, w, data, shard.clone(), None)?;
        g.iter_mut().zip(&local).for_each(|(a, b)| *a += weight * b);
    }
    Ok(g)
}

/// Predicted class (arg max of the linear scores) and the resulting error rate.
pub fn classification_error(spec: &LossSpec, w: &[f64], data: &Dataset) -> Result<f64> {
    let LossKind::Logistic { classes, .. } = spec.kind else {
        return Err(ModelError::Invalid("classification error needs a logistic model".into()));
    };
    let d = data.dim();
    let mut wrong = 0usize;
    for i in 0..data.len() {
        let (u, v) = data.sample(i);
        spec.check(w, u)?;
        let predicted = (0..classes)
            .map(|c| numerics::dot(&w[c * d..(c + 1) * d], u))
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (c, s)| if s > best.1 { (c, s) } else { best })
            .0;
        wrong += usize::from(predicted != class_index(v, classes)?);
    }
    Ok(wrong as f64 / data.len() as f64)
}

/// `U^T U / D + 2 lambda I`, the Hessian of the ridge objective.
pub fn regularized_gram(data: &Dataset, rows: Range<usize>, lambda: f64) -> Matrix {
    let n = rows.len() as f64;
    let mut g = data.features().scaled_gram(rows, 1.0 / n);
    g.add_diagonal(2.0 * lambda);
    g
}

/// Ridge objective in closed form: its Hessian, minimizer and minimum value.
#[derive(Debug, Clone)]
pub struct RidgeOptimum {
    pub hessian: Matrix,
    pub minimizer: Vec<f64>,
    pub min_loss: f64,
}

impl RidgeOptimum {
    /// `F(w) - F*`, evaluated as the quadratic form `(w - w*)^T H (w - w*) / 2`.
    pub fn gap(&self, w: &[f64]) -> f64 {
        let diff: Vec<f64> = w.iter().zip(&self.minimizer).map(|(a, b)| a - b).collect();
        0.5 * numerics::dot(&diff, &self.hessian.mul_vec(&diff))
    }

    pub fn normalized_gap(&self, w: &[f64]) -> f64 {
        self.gap(w) / self.min_loss
    }
}

/// `w* = (U^T U + 2 D lambda I)^{-1} U^T v` and `F* = F(w*)`.
pub fn ridge_optimum(data: &Dataset, lambda: f64) -> Result<RidgeOptimum> {
    let n = data.len();
    let mut system = data.features().scaled_gram(0..n, 1.0);
    system.add_diagonal(2.0 * n as f64 * lambda);
    let rhs = data.features().transpose_mul_vec(data.labels());
    let minimizer = solve_linear_spd(&system, &rhs)?;
    let min_loss = global_loss(&LossSpec::ridge(lambda), &minimizer, data)?;
    Ok(RidgeOptimum { hessian: regularized_gram(data, 0..n, lambda), minimizer, min_loss })
}

/// Extreme eigenvalues of the regularized Gramian for ridge; the configured
/// hyperparameters for the logistic model.
pub fn curvature(spec: &LossSpec, data: &Dataset) -> Result<Curvature> {
    match spec.kind {
        LossKind::Ridge => {
            let (mu, l) = extreme_eigenvalues(&regularized_gram(data, 0..data.len(), spec.lambda))?;
            Curvature::new(mu, l)
        }
        LossKind::Logistic { curvature, .. } => Ok(curvature),
    }
}

/// Per-iteration bounds: `per_sample[t]` bounds every per-sample gradient,
/// `local[k][t]` bounds device `k`'s local gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBounds {
    pub per_sample: Vec<f64>,
    pub local: Vec<Vec<f64>>,
}

/// `gamma = 2 W max_i ||u_i||^2` and `G_k = 2 W lambda_max(U_k^T U_k / D_k + 2 lambda I)`,
/// constant over `horizon` iterations.
pub fn offline_bounds(
    data: &Dataset,
    partition: &Partition,
    lambda: f64,
    radius: f64,
    horizon: usize,
) -> Result<GradientBounds> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(ModelError::Invalid(format!("model radius must be finite and positive, got {radius}")));
    }
    let max_sq = (0..data.len())
        .map(|i| numerics::dot(data.features().row(i), data.features().row(i)))
        .fold(0.0_f64, f64::max);
    let gamma = 2.0 * radius * max_sq;
    let local = partition
        .shards()
        .iter()
        .map(|shard| {
            let (_, top) = extreme_eigenvalues(&regularized_gram(data, shard.clone(), lambda))?;
            Ok(vec![2.0 * radius * top; horizon])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GradientBounds { per_sample: vec![gamma; horizon], local })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, partition_uniform};
    use crate::numerics::SimRng;
    use proptest::prelude::*;

    fn small_logistic() -> LossSpec {
        LossSpec::logistic(4, 0.01, Curvature::new(0.3, 2.5).unwrap())
    }

    fn class_data(n: usize, d: usize, classes: usize, seed: u64) -> Dataset {
        let mut rng = SimRng::new(seed);
        let feats = Matrix::from_row_major(n, d, rng.gauss_vec(n * d, 0.0, 1.0)).unwrap();
        let labels = (0..n).map(|_| rng.below(classes) as f64).collect();
        Dataset::new(feats, labels).unwrap()
    }

    fn finite_difference<F: Fn(&[f64]) -> f64>(f: F, w: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..w.len())
            .map(|j| {
                let mut a = w.to_vec();
                let mut b = w.to_vec();
                a[j] += h;
                b[j] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn ridge_sample_gradient_plug_in() {
        let g = sample_gradient(&LossSpec::ridge(0.0), &[0.0; 3], &[0.0, 1.0, 0.0], 1.0).unwrap();
        assert_eq!(g, vec![0.0, -1.0, 0.0]);
    }

    #[test]
    fn logistic_uniform_softmax_at_zero() {
        let spec = LossSpec::logistic(10, 0.0, Curvature::new(0.3, 2.5).unwrap());
        let u = [0.5, -2.0, 1.0];
        let g = sample_gradient(&spec, &[0.0; 30], &u, 3.0).unwrap();
        for c in 0..10 {
            let coef = 0.1 - if c == 3 { 1.0 } else { 0.0 };
            for j in 0..3 {
                assert!((g[c * 3 + j] - coef * u[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn clip_examples() {
        let g = [6.0, 8.0];
        assert_eq!(clip_sample_gradient(&g, 20.0), g.to_vec());
        assert_eq!(clip_sample_gradient(&[30.0, 40.0], 25.0), vec![15.0, 20.0]);
        assert_eq!(clip_sample_gradient(&[0.0, 0.0], 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn local_gradient_oracles() {
        let ds = generate_synthetic(40, 6, 0.2, &mut SimRng::new(1)).unwrap();
        let spec = LossSpec::ridge(0.3);
        // Single sample, no regularizer.
        let w = SimRng::new(2).gauss_vec(6, 0.0, 1.0);
        let single = local_gradient(&LossSpec::ridge(0.0), &w, &ds, 5..6, None).unwrap();
        let (u, v) = ds.sample(5);
        assert_eq!(single, sample_gradient(&LossSpec::ridge(0.0), &w, u, v).unwrap());
        // w = 0: -(1/D_k) sum v_i u_i.
        let at_zero = local_gradient(&spec, &[0.0; 6], &ds, 10..30, None).unwrap();
        let mut expected = vec![0.0; 6];
        for i in 10..30 {
            let (u, v) = ds.sample(i);
            (0..6).for_each(|j| expected[j] -= v * u[j] / 20.0);
        }
        at_zero.iter().zip(&expected).for_each(|(a, b)| assert!((a - b).abs() < 1e-13));
        // Brute-force sum of explicitly clipped gradients.
        let clipped = local_gradient(&spec, &w, &ds, 0..40, Some(1.5)).unwrap();
        let mut brute = vec![0.0; 6];
        for i in 0..40 {
            let (u, v) = ds.sample(i);
            let g = clip_sample_gradient(&sample_gradient(&spec, &w, u, v).unwrap(), 1.5);
            (0..6).for_each(|j| brute[j] += g[j] / 40.0);
        }
        (0..6).for_each(|j| brute[j] += 0.6 * w[j]);
        clipped.iter().zip(&brute).for_each(|(a, b)| assert!((a - b).abs() < 1e-12));
        assert!(matches!(local_gradient(&spec, &w, &ds, 3..3, None), Err(ModelError::EmptyShard)));
    }

    #[test]
    fn global_gradient_matches_whole_dataset() {
        let ds = generate_synthetic(100, 6, 0.2, &mut SimRng::new(4)).unwrap();
        let spec = LossSpec::ridge(0.05);
        let w = SimRng::new(5).gauss_vec(6, 0.0, 1.0);
        let whole = local_gradient(&spec, &w, &ds, 0..100, None).unwrap();
        let one = global_gradient(&spec, &w, &ds, &partition_uniform(100, 1).unwrap()).unwrap();
        assert_eq!(one, whole);
        let split = global_gradient(&spec, &w, &ds, &partition_uniform(100, 10).unwrap()).unwrap();
        split.iter().zip(&whole).for_each(|(a, b)| assert!((a - b).abs() < 1e-12));
    }

    #[test]
    fn global_gradient_matches_finite_differences() {
        let ds = class_data(30, 3, 4, 9);
        let spec = small_logistic();
        let w = SimRng::new(10).gauss_vec(12, 0.0, 0.5);
        let p = partition_uniform(30, 3).unwrap();
        let g = global_gradient(&spec, &w, &ds, &p).unwrap();
        let fd = finite_difference(|x| global_loss(&spec, x, &ds).unwrap(), &w);
        g.iter().zip(&fd).for_each(|(a, b)| assert!((a - b).abs() < 1e-5, "{a} vs {b}"));
    }

    #[test]
    fn ridge_optimum_examples() {
        let mut ds = generate_synthetic(50, 10, 0.0, &mut SimRng::new(6)).unwrap();
        let opt = ridge_optimum(&ds, 0.0).unwrap();
        let expected = [0.0, 1.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        opt.minimizer.iter().zip(expected).for_each(|(a, b)| assert!((a - b).abs() < 1e-10));

        ds = Dataset::new(Matrix::identity(4), vec![1.0; 4]).unwrap();
        let opt = ridge_optimum(&ds, 0.0).unwrap();
        opt.minimizer.iter().for_each(|x| assert!((x - 1.0).abs() < 1e-14));

        let ds = generate_synthetic(200, 10, 0.2, &mut SimRng::new(7)).unwrap();
        let spec = LossSpec::ridge(0.01);
        let opt = ridge_optimum(&ds, 0.01).unwrap();
        let g = global_gradient(&spec, &opt.minimizer, &ds, &partition_uniform(200, 1).unwrap()).unwrap();
        assert!(numerics::norm(&g) < 1e-8);
        assert!((opt.min_loss - global_loss(&spec, &opt.minimizer, &ds).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn curvature_examples() {
        // Scaled orthonormal rows give a Gramian of exactly I.
        let n = 4.0_f64;
        let feats = Matrix::from_diagonal(&[n.sqrt(); 4]);
        let ds = Dataset::new(feats, vec![0.0; 4]).unwrap();
        let c = curvature(&LossSpec::ridge(0.0), &ds).unwrap();
        assert!((c.mu - 1.0).abs() < 1e-14 && (c.smoothness - 1.0).abs() < 1e-14);

        let ds = generate_synthetic(10_000, 10, 0.2, &mut SimRng::new(8)).unwrap();
        let c = curvature(&LossSpec::ridge(5e-5), &ds).unwrap();
        let g = regularized_gram(&ds, 0..10_000, 5e-5);
        let m = nalgebra::DMatrix::from_row_slice(10, 10, g.as_slice());
        let eig = m.symmetric_eigen().eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        assert!((c.mu - lo).abs() < 1e-10 && (c.smoothness - hi).abs() < 1e-10);
        assert!((c.mu - 1.0).abs() < 0.1 && (c.smoothness - 1.0).abs() < 0.1);

        let spec = small_logistic();
        assert_eq!(curvature(&spec, &class_data(3, 2, 4, 1)).unwrap(), Curvature::new(0.3, 2.5).unwrap());
    }

    #[test]
    fn offline_bounds_examples() {
        let ds = Dataset::new(Matrix::from_row_major(1, 2, vec![0.6, 0.8]).unwrap(), vec![1.0]).unwrap();
        let b = offline_bounds(&ds, &partition_uniform(1, 1).unwrap(), 0.0, 3.2, 3).unwrap();
        assert!((b.per_sample[0] - 6.4).abs() < 1e-14 && (b.local[0][2] - 6.4).abs() < 1e-14);

        let ds = generate_synthetic(60, 6, 0.2, &mut SimRng::new(3)).unwrap();
        let p = partition_uniform(60, 3).unwrap();
        let b = offline_bounds(&ds, &p, 0.01, 3.2, 2).unwrap();
        for (k, shard) in p.shards().iter().enumerate() {
            let g = regularized_gram(&ds, shard.clone(), 0.01);
            let top = nalgebra::DMatrix::from_row_slice(6, 6, g.as_slice()).symmetric_eigen().eigenvalues.max();
            assert!((b.local[k][0] - 6.4 * top).abs() <= 1e-8 * 6.4 * top);
        }
        // A zero sample never raises the per-sample bound.
        let mut rows = ds.features().as_slice().to_vec();
        rows.extend([0.0; 6]);
        let mut labels = ds.labels().to_vec();
        labels.push(0.0);
        let padded = Dataset::new(Matrix::from_row_major(61, 6, rows).unwrap(), labels).unwrap();
        let b2 = offline_bounds(&padded, &partition_uniform(61, 1).unwrap(), 0.01, 3.2, 2).unwrap();
        assert!(b2.per_sample[0] <= b.per_sample[0]);
    }

    #[test]
    fn chance_level_error_at_zero() {
        let ds = class_data(200, 3, 4, 2);
        let err = classification_error(&small_logistic(), &[0.0; 12], &ds).unwrap();
        // All scores tie at w = 0, so class 0 is predicted everywhere.
        let zeros = ds.labels().iter().filter(|&&l| l == 0.0).count() as f64 / 200.0;
        assert!((err - (1.0 - zeros)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn sample_gradients_match_finite_differences(seed in 0u64..500, v in -3.0f64..3.0, class in 0usize..4) {
            let mut rng = SimRng::new(seed);
            let u = rng.gauss_vec(3, 0.0, 1.0);
            let w = rng.gauss_vec(3, 0.0, 1.0);
            let spec = LossSpec::ridge(0.0);
            let g = sample_gradient(&spec, &w, &u, v).unwrap();
            let fd = finite_difference(|x| sample_loss(&spec, x, &u, v).unwrap(), &w);
            for (a, b) in g.iter().zip(&fd) { prop_assert!((a - b).abs() < 1e-5); }

            let spec = small_logistic();
            let w = rng.gauss_vec(12, 0.0, 1.0);
            let g = sample_gradient(&spec, &w, &u, class as f64).unwrap();
            let fd = finite_difference(|x| sample_loss(&spec, x, &u, class as f64).unwrap(), &w);
            for (a, b) in g.iter().zip(&fd) { prop_assert!((a - b).abs() < 1e-5); }
        }

        #[test]
        fn clipped_norm_is_min_of_norm_and_bound(g in prop::collection::vec(-50.0f64..50.0, 4), bound in 0.1f64..60.0) {
            let n = numerics::norm(&g);
            let c = numerics::norm(&clip_sample_gradient(&g, bound));
            prop_assert!((c - n.min(bound)).abs() <= 1e-12 * bound.max(1.0));
        }

        #[test]
        fn clipped_local_gradient_bounded(seed in 0u64..200, bound in 0.1f64..5.0) {
            let ds = class_data(20, 3, 4, seed);
            let spec = small_logistic();
            let w = numerics::project_ball(&SimRng::new(seed + 1).gauss_vec(12, 0.0, 3.0), 10.0);
            let g = local_gradient(&spec, &w, &ds, 0..20, Some(bound)).unwrap();
            prop_assert!(numerics::norm(&g) <= bound + 2.0 * spec.lambda * 10.0 + 1e-12);
        }

        #[test]
        fn ridge_pl_and_smoothness_hold(seed in 0u64..200) {
            let ds = generate_synthetic(50, 6, 0.2, &mut SimRng::new(seed)).unwrap();
            let spec = LossSpec::ridge(0.01);
            let c = curvature(&spec, &ds).unwrap();
            let opt = ridge_optimum(&ds, 0.01).unwrap();
            let p = partition_uniform(50, 1).unwrap();
            let mut rng = SimRng::new(seed + 1000);
            let (w, w2) = (rng.gauss_vec(6, 0.0, 2.0), rng.gauss_vec(6, 0.0, 2.0));
            let g = global_gradient(&spec, &w, &ds, &p).unwrap();
            let g2 = global_gradient(&spec, &w2, &ds, &p).unwrap();
            let gap = global_loss(&spec, &w, &ds).unwrap() - opt.min_loss;
            prop_assert!(0.5 * numerics::dot(&g, &g) >= c.mu * gap * (1.0 - 1e-9));
            prop_assert!((gap - opt.gap(&w)).abs() <= 1e-9 * gap.max(1.0));
            let dg: Vec<f64> = g.iter().zip(&g2).map(|(a, b)| a - b).collect();
            let dw: Vec<f64> = w.iter().zip(&w2).map(|(a, b)| a - b).collect();
            prop_assert!(numerics::norm(&dg) <= c.smoothness * numerics::norm(&dw) * (1.0 + 1e-12));
        }
    }
}
