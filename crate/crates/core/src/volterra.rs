//! Linear integro-differential equations with memory on a uniform grid.
//!
//! A problem on `[0, t]` reads
//!
//! ```text
//! f'(s) = M f(s) + ∫ K(s - s') f(s') ds' + g(s)
//! ```
//!
//! where the memory integral runs over `[s, t]` for [`solve_backward`]
//! (kernel sampled at nonpositive lags, condition at `s = t`) and over
//! `[0, s]` for [`solve_mixed_final_value`] and [`MixedPropagator`]
//! (nonnegative lags, condition still at `s = t`).
//!
//! Every solver uses the same box scheme: `f[i+1] - f[i] = h/2 (F[i] + F[i+1])`
//! with trapezoid memory sums, so all of them produce the same discrete solution.

use crate::bath::LagTable;
use crate::error::{Error, Result};
use crate::numerics::{relative_residual, solve_dense_linear, ComplexMatrix, UniformGrid, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Matrix of memory kernels; `None` entries are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    dim: usize,
    entries: Vec<Option<LagTable>>,
}

impl KernelMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![None; dim * dim] }
    }

    pub fn scalar(table: LagTable) -> Self {
        Self::diagonal(vec![table])
    }

    pub fn diagonal(tables: Vec<LagTable>) -> Self {
        let dim = tables.len();
        let mut m = Self::zeros(dim);
        for (i, t) in tables.into_iter().enumerate() {
            m.set(i, i, t);
        }
        m
    }

    pub fn set(&mut self, i: usize, j: usize, table: LagTable) {
        self.entries[i * self.dim + j] = (!table.is_zero()).then_some(table);
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&LagTable> {
        self.entries[i * self.dim + j].as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|e| e.as_ref().map(|t| t.scaled(s))).collect() }
    }

    fn max_lag(&self) -> usize {
        self.entries.iter().flatten().map(LagTable::max_lag).min().unwrap_or(usize::MAX)
    }
}

/// A linear problem with a condition at the right end of its grid.
#[derive(Debug, Clone)]
pub struct VolterraProblem {
    pub grid: UniformGrid,
    pub coeff: ComplexMatrix,
    pub memory: KernelMatrix,
    /// One sample vector per component, or empty for no source.
    pub source: Vec<Vec<C64>>,
    pub final_value: Vec<C64>,
}

impl VolterraProblem {
    pub fn dim(&self) -> usize {
        self.coeff.dim()
    }

    fn check(&self) -> Result<()> {
        let dim = self.dim();
        if self.memory.dim() != dim || self.final_value.len() != dim {
            return Err(Error::InvalidInput("coefficient, kernel and final value dimensions differ".into()));
        }
        if !self.source.is_empty()
            && (self.source.len() != dim || self.source.iter().any(|s| s.len() != self.grid.len()))
        {
            return Err(Error::InvalidInput("source must have one full-length sample vector per component".into()));
        }
        if self.memory.max_lag() < self.grid.n_steps() {
            return Err(Error::InvalidInput("kernel table is shorter than the grid".into()));
        }
        Ok(())
    }
}

/// Solution samples, stored one vector per component.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: UniformGrid,
    components: Vec<Vec<C64>>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, c: usize) -> &[C64] {
        &self.components[c]
    }

    pub fn at(&self, i: usize) -> Vec<C64> {
        self.components.iter().map(|c| c[i]).collect()
    }

    pub fn into_components(self) -> Vec<Vec<C64>> {
        self.components
    }
}

/// Dot product with four independent accumulators.
#[inline]
pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        for l in 0..4 {
            let x = a[4 * c + l];
            let y = b[4 * c + l];
            re[l] += x.re * y.re - x.im * y.im;
            im[l] += x.re * y.im + x.im * y.re;
        }
    }
    for k in 4 * chunks..n {
        let x = a[k];
        let y = b[k];
        re[0] += x.re * y.re - x.im * y.im;
        im[0] += x.re * y.im + x.im * y.re;
    }
    C64::new((re[0] + re[1]) + (re[2] + re[3]), (im[0] + im[1]) + (im[2] + im[3]))
}

/// Forward box-scheme marcher for `f' = M f + ∫_0^s K(s - s') f(s') ds' + g`.
#[derive(Debug, Clone)]
struct Marcher {
    dim: usize,
    h: f64,
    coeff: ComplexMatrix,
    /// `reversed[a*dim+b][p] = K_ab((n_max - p) h)`.
    reversed: Vec<Option<Vec<C64>>>,
    n_max: usize,
    k0: ComplexMatrix,
    local_inv: ComplexMatrix,
}

impl Marcher {
    /// `kernel(a, b)` yields the kernel at lags `0, 1, 2, ...`.
    fn new<'a>(
        coeff: ComplexMatrix,
        kernel: impl Fn(usize, usize) -> Option<&'a [C64]>,
        scale: f64,
        h: f64,
        n_max: usize,
    ) -> Result<Self> {
        let dim = coeff.dim();
        let mut reversed = Vec::with_capacity(dim * dim);
        let mut k0 = ComplexMatrix::zeros(dim);
        for a in 0..dim {
            for b in 0..dim {
                match kernel(a, b) {
                    Some(lags) => {
                        if lags.len() < n_max + 1 {
                            return Err(Error::InvalidInput("kernel table is shorter than the grid".into()));
                        }
                        k0[(a, b)] = lags[0] * scale;
                        reversed.push(Some((0..=n_max).map(|p| lags[n_max - p] * scale).collect()));
                    }
                    None => reversed.push(None),
                }
            }
        }
        let local = &ComplexMatrix::identity(dim) - &(&coeff + &k0.scale(C64::new(0.5 * h, 0.0))).scale(C64::new(0.5 * h, 0.0));
        let local_inv = invert_local(&local).ok_or(Error::StepFailure { node: 1 })?;
        Ok(Self { dim, h, coeff, reversed, n_max, k0, local_inv })
    }

    /// Marches `n` steps from `init`; `source[c][i]` may be empty.
    fn run(&self, init: &[C64], source: &[Vec<C64>], n: usize) -> Result<Vec<Vec<C64>>> {
        debug_assert!(n <= self.n_max);
        let dim = self.dim;
        let h = self.h;
        let src = |c: usize, i: usize| if source.is_empty() { ZERO } else { source[c][i] };
        let mut hist: Vec<Vec<C64>> = (0..dim).map(|c| {
            let mut v = Vec::with_capacity(n + 1);
            v.push(init[c]);
            v
        }).collect();
        let mut phi: Vec<C64> = (0..dim).map(|a| {
            (0..dim).map(|b| self.coeff[(a, b)] * init[b]).sum::<C64>() + src(a, 0)
        }).collect();
        let mut partial = vec![ZERO; dim];
        let mut rhs = vec![ZERO; dim];
        for i in 0..n {
            // Memory over nodes 0..=i with trapezoid weights for the interval [0, s_{i+1}].
            for a in 0..dim {
                let mut acc = ZERO;
                for b in 0..dim {
                    if let Some(rev) = &self.reversed[a * dim + b] {
                        let off = self.n_max - i - 1;
                        let tail = &rev[off..off + i + 1];
                        let f = &hist[b][..i + 1];
                        acc += (dot(tail, f) - tail[0] * f[0] * 0.5) * h;
                    }
                }
                partial[a] = acc;
                rhs[a] = hist[a][i] + (phi[a] + acc + src(a, i + 1)) * (0.5 * h);
            }
            let next = self.local_inv.apply(&rhs);
            if next.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::StepFailure { node: i + 1 });
            }
            for a in 0..dim {
                let mut p = partial[a] + src(a, i + 1);
                for b in 0..dim {
                    p += (self.coeff[(a, b)] + self.k0[(a, b)] * (0.5 * h)) * next[b];
                }
                phi[a] = p;
                hist[a].push(next[a]);
            }
        }
        Ok(hist)
    }
}

fn invert_local(m: &ComplexMatrix) -> Option<ComplexMatrix> {
    if m.dim() <= 2 {
        return m.small_inverse();
    }
    let n = m.dim();
    let mut inv = ComplexMatrix::zeros(n);
    for c in 0..n {
        let mut e = vec![ZERO; n];
        e[c] = C64::new(1.0, 0.0);
        let col = solve_dense_linear(m, &e).ok()?;
        for r in 0..n {
            inv[(r, c)] = col[r];
        }
    }
    Some(inv)
}

/// Solves a problem whose memory runs over `[s, t]` by marching from `s = t` down to `0`.
pub fn solve_backward(problem: &VolterraProblem) -> Result<Trajectory> {
    problem.check()?;
    let n = problem.grid.n_steps();
    let h = problem.grid.step();
    // In sigma = t - s the problem becomes a forward one with kernel -K(-tau) and coefficient -M.
    let marcher = Marcher::new(
        problem.coeff.scale(C64::new(-1.0, 0.0)),
        |a, b| problem.memory.get(a, b).map(LagTable::nonpositive),
        -1.0,
        h,
        n,
    )
    .map_err(|e| match e {
        Error::StepFailure { .. } => Error::StepFailure { node: n - 1 },
        other => other,
    })?;
    let source: Vec<Vec<C64>> = problem
        .source
        .iter()
        .map(|s| s.iter().rev().map(|z| -z).collect())
        .collect();
    let hist = marcher.run(&problem.final_value, &source, n).map_err(|e| match e {
        Error::StepFailure { node } => Error::StepFailure { node: n - node },
        other => other,
    })?;
    let components = hist.into_iter().map(|mut c| {
        c.reverse();
        c
    }).collect();
    Ok(Trajectory { grid: problem.grid, components })
}

/// Relative residual accepted from the dense solve.
pub const DENSE_RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Solves a problem whose memory runs over `[0, s]` with the condition at `s = t`,
/// by assembling and factorizing the full box-scheme system.
pub fn solve_mixed_final_value(problem: &VolterraProblem) -> Result<Trajectory> {
    problem.check()?;
    let n = problem.grid.n_steps();
    let h = problem.grid.step();
    let dim = problem.dim();
    let size = dim * (n + 1);
    let mut a = ComplexMatrix::zeros(size);
    let mut b = vec![ZERO; size];
    let idx = |node: usize, c: usize| node * dim + c;
    // Adds -h/2 * F[i] to row block `row`, where F[i] = M f_i + sum_j w_j K(i-j) f_j.
    let add_phi = |a: &mut ComplexMatrix, b: &mut [C64], row: usize, i: usize| {
        for r in 0..dim {
            for c in 0..dim {
                a[(idx(row, r), idx(i, c))] -= problem.coeff[(r, c)] * (0.5 * h);
                if let Some(k) = problem.memory.get(r, c) {
                    for j in 0..=i {
                        let w = if i == 0 { 0.0 } else if j == 0 || j == i { 0.5 * h } else { h };
                        a[(idx(row, r), idx(j, c))] -= k.at((i - j) as isize) * (w * 0.5 * h);
                    }
                }
            }
            if !problem.source.is_empty() {
                b[idx(row, r)] += problem.source[r][i] * (0.5 * h);
            }
        }
    };
    for i in 0..n {
        for r in 0..dim {
            a[(idx(i, r), idx(i + 1, r))] += C64::new(1.0, 0.0);
            a[(idx(i, r), idx(i, r))] -= C64::new(1.0, 0.0);
        }
        add_phi(&mut a, &mut b, i, i);
        add_phi(&mut a, &mut b, i, i + 1);
    }
    for r in 0..dim {
        a[(idx(n, r), idx(n, r))] = C64::new(1.0, 0.0);
        b[idx(n, r)] = problem.final_value[r];
    }
    let x = solve_dense_linear(&a, &b)?;
    let residual = relative_residual(&a, &x, &b);
    if !(residual <= DENSE_RESIDUAL_TOLERANCE) {
        return Err(Error::ResidualTooLarge { residual, tolerance: DENSE_RESIDUAL_TOLERANCE });
    }
    // The last row is an identity row; pin it so the final value holds bit for bit.
    let components =
        (0..dim).map(|c| (0..=n).map(|i| if i == n { problem.final_value[c] } else { x[idx(i, c)] }).collect()).collect();
    Ok(Trajectory { grid: problem.grid, components })
}

/// Reusable shooting form of [`solve_mixed_final_value`].
///
/// The box system marches forward exactly once `f(0)` is known, so the
/// solution is `f = P + Y f(0)` with `Y` the homogeneous march from the
/// identity and `P` the march of the source from zero. `Y` does not depend on
/// the final time, so one propagator serves every prefix `[0, node k]` of the
/// grid it was built for.
#[derive(Debug, Clone)]
pub struct MixedPropagator {
    marcher: Marcher,
    /// `homogeneous[c][b][i]`: component `b` at node `i` of the march started from unit vector `c`.
    homogeneous: Vec<Vec<Vec<C64>>>,
}

impl MixedPropagator {
    pub fn new(coeff: ComplexMatrix, memory: &KernelMatrix, grid: &UniformGrid) -> Result<Self> {
        let n = grid.n_steps();
        if memory.dim() != coeff.dim() {
            return Err(Error::InvalidInput("coefficient and kernel dimensions differ".into()));
        }
        if memory.max_lag() < n {
            return Err(Error::InvalidInput("kernel table is shorter than the grid".into()));
        }
        let dim = coeff.dim();
        let marcher = Marcher::new(coeff, |a, b| memory.get(a, b).map(LagTable::nonnegative), 1.0, grid.step(), n)?;
        let homogeneous = (0..dim)
            .map(|c| {
                let mut e = vec![ZERO; dim];
                e[c] = C64::new(1.0, 0.0);
                marcher.run(&e, &[], n)
            })
            .collect::<Result<_>>()?;
        Ok(Self { marcher, homogeneous })
    }

    pub fn dim(&self) -> usize {
        self.marcher.dim
    }

    pub fn max_steps(&self) -> usize {
        self.marcher.n_max
    }

    /// March of the source from a zero initial value over `n` steps.
    pub fn particular(&self, source: &[Vec<C64>], n: usize) -> Result<Vec<Vec<C64>>> {
        self.check_steps(n)?;
        self.marcher.run(&vec![ZERO; self.dim()], source, n)
    }

    /// Combines a particular march with the homogeneous one to meet `final_value` at node `n`.
    pub fn complete(&self, particular: &[Vec<C64>], final_value: &[C64], n: usize) -> Result<Vec<Vec<C64>>> {
        self.check_steps(n)?;
        let dim = self.dim();
        let y = ComplexMatrix::from_fn(dim, |b, c| self.homogeneous[c][b][n]);
        let rhs: Vec<C64> = (0..dim).map(|b| final_value[b] - particular[b][n]).collect();
        let f0 = solve_dense_linear(&y, &rhs)?;
        Ok((0..dim)
            .map(|b| {
                (0..=n)
                    .map(|i| {
                        if i == n {
                            return final_value[b];
                        }
                        let mut v = particular[b][i];
                        for (c, f) in f0.iter().enumerate() {
                            v += self.homogeneous[c][b][i] * f;
                        }
                        v
                    })
                    .collect()
            })
            .collect())
    }

    /// Full solution on the first `n` steps of the grid.
    pub fn solve(&self, source: &[Vec<C64>], final_value: &[C64], n: usize) -> Result<Vec<Vec<C64>>> {
        let p = self.particular(source, n)?;
        self.complete(&p, final_value, n)
    }

    fn check_steps(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.max_steps() {
            return Err(Error::InvalidInput(format!("step count {n} outside 1..={}", self.max_steps())));
        }
        Ok(())
    }
}

/// Whether a convolution samples `K(s - s')` or `K(s' - s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagOrientation {
    Forward,
    Reflected,
}

/// `U(s_k) = ∫_0^t K(±(s_k - s')) f(s') ds'` by the trapezoid rule over all nodes of `f`.
pub fn convolve_source(kernel: &LagTable, orientation: LagOrientation, samples: &[C64], h: f64) -> Result<Vec<C64>> {
    let n = samples.len().checked_sub(1).ok_or_else(|| Error::InvalidInput("no samples to convolve".into()))?;
    if kernel.max_lag() < n {
        return Err(Error::InvalidInput("kernel table is shorter than the samples".into()));
    }
    Ok(Convolver::new(kernel, orientation, n).apply(samples, h))
}

/// Convolution against a fixed kernel for sample vectors of up to `n_max + 1` nodes.
#[derive(Debug, Clone)]
pub struct Convolver {
    /// `table[p]` is the kernel at lag index `(n_max - p)` (forward) or `(p - n_max)` (reflected),
    /// so that the sum over sample nodes walks the table contiguously.
    table: Vec<C64>,
    n_max: usize,
    zero: bool,
}

impl Convolver {
    pub fn new(kernel: &LagTable, orientation: LagOrientation, n_max: usize) -> Self {
        let table = (0..=2 * n_max)
            .map(|p| {
                let m = n_max as isize - p as isize;
                match orientation {
                    LagOrientation::Forward => kernel.at(m),
                    LagOrientation::Reflected => kernel.at(-m),
                }
            })
            .collect();
        Self { table, n_max, zero: kernel.is_zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn apply(&self, samples: &[C64], h: f64) -> Vec<C64> {
        let n = samples.len() - 1;
        if self.zero {
            return vec![ZERO; n + 1];
        }
        assert!(n <= self.n_max, "sample vector longer than the convolver");
        (0..=n)
            .map(|k| {
                let off = self.n_max - k;
                let row = &self.table[off..off + n + 1];
                if n == 0 {
                    return ZERO;
                }
                (dot(row, samples) - (row[0] * samples[0] + row[n] * samples[n]) * 0.5) * h
            })
            .collect()
    }
}
