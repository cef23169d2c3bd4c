use super::{NumericsError, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        (0..n).for_each(|i| m[(i, i)] = 1.0);
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(NumericsError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        diag.iter().enumerate().for_each(|(i, &v)| m[(i, i)] = v);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `sum_i scale * x_i x_i^T` over the given rows of `self`, a `cols x cols` matrix.
    pub fn scaled_gram<I: IntoIterator<Item = usize>>(&self, rows: I, scale: f64) -> Matrix {
        let d = self.cols;
        let mut g = Matrix::zeros(d, d);
        for i in rows {
            let x = self.row(i);
            for a in 0..d {
                let xa = x[a];
                if xa == 0.0 {
                    continue;
                }
                let out = &mut g.data[a * d..(a + 1) * d];
                out[a..].iter_mut().zip(&x[a..]).for_each(|(o, xb)| *o += xa * xb);
            }
        }
        for a in 0..d {
            for b in a..d {
                let v = g.data[a * d + b] * scale;
                g.data[a * d + b] = v;
                g.data[b * d + a] = v;
            }
        }
        g
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += shift;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| super::dot(self.row(i), x)).collect()
    }

    /// `U^T y` for a `rows`-vector `y`.
    pub fn transpose_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            out.iter_mut().zip(self.row(i)).for_each(|(o, x)| *o += yi * x);
        }
        out
    }

    fn check_symmetric(&self) -> Result<()> {
        if self.rows != self.cols {
            return Err(NumericsError::Dimension(format!(
                "expected a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        let rel = if scale > 0.0 { worst / scale } else { 0.0 };
        if rel > 1e-12 {
            return Err(NumericsError::NotSymmetric(rel));
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Full spectrum of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    a.check_symmetric()?;
    let n = a.rows;
    let mut m = a.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        let diag: f64 = (0..n).map(|i| m[(i, i)] * m[(i, i)]).sum();
        if off <= 1e-32 * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

const JACOBI_MAX_DIM: usize = 64;

/// Smallest and largest eigenvalues of a symmetric positive-semidefinite matrix.
///
/// Small matrices are fully diagonalized. Larger ones use power iteration
/// for the top of the spectrum and shifted inverse iteration (through a
/// Cholesky factor of `A + tau I`) for the bottom, each finished with a
/// Rayleigh quotient.
pub fn extreme_eigenvalues(a: &Matrix) -> Result<(f64, f64)> {
    a.check_symmetric()?;
    let n = a.rows;
    if n == 0 {
        return Err(NumericsError::Dimension("empty matrix".into()));
    }
    if n <= JACOBI_MAX_DIM {
        let eig = jacobi_eigenvalues(a)?;
        return Ok((eig[0], eig[n - 1]));
    }
    let max_eig = power_iteration(n, |x| a.mul_vec(x));
    if max_eig <= 0.0 {
        return Ok((max_eig, max_eig));
    }
    let tau = 1e-6 * max_eig;
    let mut shifted = a.clone();
    shifted.add_diagonal(tau);
    let chol = Cholesky::factor(&shifted)?;
    // The dominant eigenvalue of (A + tau I)^{-1} is 1/(lambda_min + tau).
    let inv_top = power_iteration(n, |x| chol.solve(x));
    let min_eig = (1.0 / inv_top - tau).max(0.0).min(max_eig);
    Ok((min_eig, max_eig))
}

fn start_vector(n: usize) -> Vec<f64> {
    // Deterministic and generic enough not to be orthogonal to an eigenvector
    // in practice.
    let v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_75).fract()).collect();
    let nv = super::norm(&v);
    v.into_iter().map(|x| x / nv).collect()
}

fn power_iteration<F: FnMut(&[f64]) -> Vec<f64>>(n: usize, mut apply: F) -> f64 {
    let mut x = start_vector(n);
    let mut lambda = 0.0;
    for it in 0..20_000 {
        let y = apply(&x);
        let next = super::dot(&x, &y);
        let ny = super::norm(&y);
        if ny == 0.0 {
            return 0.0;
        }
        x = y.into_iter().map(|v| v / ny).collect();
        if it > 2 && (next - lambda).abs() <= 1e-14 * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    fn factor(a: &Matrix) -> Result<Self> {
        let n = a.rows;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut diag = a[(j, j)];
            diag -= l[j * n..j * n + j].iter().map(|v| v * v).sum::<f64>();
            if !(diag > 0.0) {
                return Err(NumericsError::NotPositiveDefinite { row: j, pivot: diag });
            }
            let ljj = diag.sqrt();
            l[j * n + j] = ljj;
            for i in j + 1..n {
                let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
                l[i * n + j] = (a[(i, j)] - s) / ljj;
            }
        }
        Ok(Self { n, lower: l })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let l = &self.lower;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let s: f64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
            y[i] = (b[i] - s) / l[i * n + i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
            x[i] = (y[i] - s) / l[i * n + i];
        }
        x
    }
}

/// Solves `A x = b` for symmetric positive-definite `A` by Cholesky factorization.
pub fn solve_linear_spd(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    a.check_symmetric()?;
    if b.len() != a.rows {
        return Err(NumericsError::Dimension(format!(
            "rhs has {} entries, matrix is {}x{}",
            b.len(),
            a.rows,
            a.cols
        )));
    }
    Ok(Cholesky::factor(a)?.solve(b))
}
