//! Small numerical building blocks shared by the engines.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from rows; every row must have the same length as the number of rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInput("matrix rows must form a square".into()));
        }
        Ok(Self { dim, data: rows.concat() })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    /// Applies the matrix to a vector.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.dim).map(|i| self.row(i).iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `|A - A^dagger|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// Inverse of a 1x1 or 2x2 matrix, used for local implicit steps.
    pub(crate) fn small_inverse(&self) -> Option<Self> {
        match self.dim {
            1 => {
                let a = self.data[0];
                (a.norm() > 0.0).then(|| Self { dim: 1, data: vec![a.inv()] })
            }
            2 => {
                let [a, b, c, d] = [self.data[0], self.data[1], self.data[2], self.data[3]];
                let det = a * d - b * c;
                let scale = self.max_abs();
                if !(det.norm() > 1e-14 * scale * scale) {
                    return None;
                }
                let inv = det.inv();
                Some(Self { dim: 2, data: vec![d * inv, -b * inv, -c * inv, a * inv] })
            }
            _ => None,
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Equally spaced nodes `t_start + i*h`, `i = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    t_start: f64,
    t_end: f64,
    n_steps: usize,
}

impl UniformGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) {
            return Err(Error::InvalidGrid("endpoints must be finite".into()));
        }
        if t_end <= t_start {
            return Err(Error::InvalidGrid(format!("t_end = {t_end} must exceed t_start = {t_start}")));
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid("n_steps must be at least 1".into()));
        }
        Ok(Self { t_start, t_end, n_steps })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t_end
        } else {
            self.t_start + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// The sub-grid `[t_start, node(k)]` with the same step.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n_steps {
            return Err(Error::InvalidGrid(format!("prefix length {k} outside 1..={}", self.n_steps)));
        }
        Self::new(self.t_start, self.node(k), k)
    }
}

/// Composite trapezoid weights for the nodes of `grid`.
pub fn trapezoid_weights(grid: &UniformGrid) -> Vec<f64> {
    let h = grid.step();
    let mut w = vec![h; grid.len()];
    w[0] = 0.5 * h;
    w[grid.n_steps] = 0.5 * h;
    w
}

/// Trapezoid weights for `n_intervals` intervals of width `h`; a single node gets weight zero.
pub(crate) fn trapezoid_weights_n(n_intervals: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n_intervals + 1];
    w[0] = if n_intervals == 0 { 0.0 } else { 0.5 * h };
    w[n_intervals] = if n_intervals == 0 { 0.0 } else { 0.5 * h };
    w
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve_dense_linear(a: &ComplexMatrix, b: &[C64]) -> Result<Vec<C64>> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::InvalidInput(format!("right-hand side has length {}, expected {n}", b.len())));
    }
    if !a.is_finite() || b.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(Error::NonFinite("linear system"));
    }
    let m = Mat::<C64>::from_fn(n, n, |i, j| a[(i, j)]);
    let rhs = Mat::<C64>::from_fn(n, 1, |i, _| b[i]);
    let lu = m.partial_piv_lu();
    let scale = a.inf_norm().max(f64::MIN_POSITIVE);
    let u = lu.U();
    for k in 0..n {
        let pivot = u[(k, k)].norm();
        if !(pivot >= 1e-14 * scale) {
            return Err(Error::SingularSystem { row: k, pivot });
        }
    }
    let x = lu.solve(&rhs);
    let out: Vec<C64> = (0..n).map(|i| x[(i, 0)]).collect();
    if out.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(Error::NonFinite("linear solve"));
    }
    Ok(out)
}

/// `|a x - b| / (|a| |x| + |b|)` in the infinity norm.
pub fn relative_residual(a: &ComplexMatrix, x: &[C64], b: &[C64]) -> f64 {
    let ax = a.apply(x);
    let num = ax.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    let xb = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let bb = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    num / (a.inf_norm() * xb + bb).max(f64::MIN_POSITIVE)
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step<F>(mut rhs: F, t: f64, y: &[C64], h: f64) -> Result<Vec<C64>>
where
    F: FnMut(f64, &[C64]) -> Vec<C64>,
{
    let axpy = |a: &[C64], s: f64, b: &[C64]| -> Vec<C64> {
        a.iter().zip(b).map(|(x, k)| x + k * s).collect()
    };
    let k1 = rhs(t, y);
    let k2 = rhs(t + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = rhs(t + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = rhs(t + h, &axpy(y, h, &k3));
    let out: Vec<C64> = (0..y.len())
        .map(|i| y[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0))
        .collect();
    if out.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(Error::NonFinite("Runge-Kutta step"));
    }
    Ok(out)
}

/// Linear interpolation of values sampled on `grid`.
pub fn linear_interpolate(grid: &UniformGrid, values: &[C64], t: f64) -> Result<C64> {
    if values.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "table has {} samples but the grid has {} nodes",
            values.len(),
            grid.len()
        )));
    }
    let (start, end) = (grid.t_start(), grid.t_end());
    let slack = 1e-12 * (end - start);
    if !(t >= start - slack && t <= end + slack) {
        return Err(Error::OutOfRange { t, start, end });
    }
    let x = ((t - start) / grid.step()).clamp(0.0, grid.n_steps() as f64);
    let i = (x.floor() as usize).min(grid.n_steps() - 1);
    let frac = x - i as f64;
    Ok(values[i] * (1.0 - frac) + values[i + 1] * frac)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// The matrix is embedded as the real symmetric `[[Re, -Im], [Im, Re]]`,
/// diagonalized by cyclic Jacobi sweeps, and every other eigenvalue kept.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.dim();
    let big = 2 * n;
    let mut a = vec![0.0; big * big];
    for i in 0..n {
        for j in 0..n {
            let z = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            a[i * big + j] = z.re;
            a[(i + n) * big + (j + n)] = z.re;
            a[(i + n) * big + j] = z.im;
            a[i * big + (j + n)] = -z.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..big)
            .flat_map(|i| (0..big).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * big + j] * a[i * big + j])
            .sum();
        let diag: f64 = (0..big).map(|i| a[i * big + i] * a[i * big + i]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) || off == 0.0 {
            break;
        }
        for p in 0..big {
            for q in p + 1..big {
                let apq = a[p * big + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * big + q] - a[p * big + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..big {
                    let akp = a[k * big + p];
                    let akq = a[k * big + q];
                    a[k * big + p] = c * akp - s * akq;
                    a[k * big + q] = s * akp + c * akq;
                }
                for k in 0..big {
                    let apk = a[p * big + k];
                    let aqk = a[q * big + k];
                    a[p * big + k] = c * apk - s * aqk;
                    a[q * big + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..big).map(|i| a[i * big + i]).collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev.into_iter().step_by(2).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let g = UniformGrid::new(0.0, 2.0, 7).unwrap();
        let w = trapezoid_weights(&g);
        let s: f64 = g.nodes().iter().zip(&w).map(|(t, w)| (3.0 * t + 1.0) * w).sum();
        assert!((s - 8.0).abs() < 1e-13);
        assert_eq!(trapezoid_weights_n(0, 0.1), vec![0.0]);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(UniformGrid::new(1.0, 1.0, 4).is_err());
        assert!(UniformGrid::new(0.0, 1.0, 0).is_err());
        assert!(UniformGrid::new(0.0, f64::NAN, 3).is_err());
        let g = UniformGrid::new(0.0, 1.0, 4).unwrap();
        assert_eq!(g.node(4), 1.0);
        assert_eq!(g.prefix(2).unwrap().t_end(), 0.5);
    }

    #[test]
    fn dense_solve_and_singular() {
        let a = ComplexMatrix::from_rows(&[vec![c(2.0, 1.0), c(1.0, 0.0)], vec![c(0.0, 1.0), c(3.0, 0.0)]]).unwrap();
        let b = vec![c(1.0, 0.0), c(0.0, -1.0)];
        let x = solve_dense_linear(&a, &b).unwrap();
        assert!(relative_residual(&a, &x, &b) < 1e-15);
        let s = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(2.0, 0.0), c(4.0, 0.0)]]).unwrap();
        assert!(matches!(solve_dense_linear(&s, &b), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn small_inverse_matches() {
        let a = ComplexMatrix::from_rows(&[vec![c(2.0, 1.0), c(1.0, 0.5)], vec![c(0.0, 1.0), c(3.0, 0.0)]]).unwrap();
        let inv = a.small_inverse().unwrap();
        let id = &a * &inv;
        assert!((&id - &ComplexMatrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn rk4_decay_and_rotation() {
        let mut y = vec![c(1.0, 0.0)];
        for i in 0..10 {
            y = rk4_step(|_, y| vec![-y[0]], i as f64 * 0.1, &y, 0.1).unwrap();
        }
        assert!((y[0].re - (-1.0f64).exp()).abs() < 1e-6);
        // The norm loss per step is (wh)^6 / 144, about 7e-9 at wh = 0.1.
        let mut z = vec![c(1.0, 0.0)];
        for i in 0..100 {
            z = rk4_step(|_, y| vec![c(0.0, 1.0) * y[0]], i as f64 * 0.02, &z, 0.02).unwrap();
        }
        assert!((z[0].norm() - 1.0).abs() < 1e-8);
        assert!(rk4_step(|_, _| vec![c(f64::NAN, 0.0)], 0.0, &[c(1.0, 0.0)], 0.1).is_err());
    }

    #[test]
    fn interpolation_and_range() {
        let g = UniformGrid::new(0.0, 1.0, 2).unwrap();
        let v = vec![c(0.0, 0.0), c(1.0, 1.0), c(3.0, 0.0)];
        assert_eq!(linear_interpolate(&g, &v, 0.75).unwrap(), c(2.0, 0.5));
        assert!(matches!(linear_interpolate(&g, &v, 1.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn hermitian_spectrum() {
        let m = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(1.0, 0.0)]]).unwrap();
        let ev = hermitian_eigenvalues(&m);
        assert!((ev[0] - 0.0).abs() < 1e-12 && (ev[1] - 2.0).abs() < 1e-12);
    }
}
