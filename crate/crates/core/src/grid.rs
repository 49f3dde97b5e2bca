//! Radial functions on R^N: cell-centred nodes, volume quadrature, and a
//! conservative finite-volume Laplacian.
//!
//! The partition of `(0, R_max]` is `f_k = R_max (k/n)^grading`; node `i` is
//! the midpoint of cell `[f_i, f_{i+1}]` and its weight is the exact volume of
//! the spherical shell, so `sum_i f(r_i) w_i` approximates the integral over
//! R^N. Fluxes live on faces. The discrete Dirichlet form
//!
//! ```text
//! E(u, v) = sum_k c_k (u_k - u_{k-1}) (v_k - v_{k-1}) + c_n u_{n-1} v_{n-1}
//! ```
//!
//! is paired exactly with `apply_neg_laplacian`: `<v, -Lap u> = E(u, v)`.
//! The origin face carries no flux (even reflection) and the outer face sees a
//! zero ghost value (Dirichlet at `R_max`). Interior face gradients are
//! difference quotients in `r^2`, which keeps the pointwise truncation error
//! second order next to the origin on graded grids.

use crate::error::{Error, Result};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    dim: usize,
    alpha: f64,
}

impl ProblemParams {
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParams("dimension must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha < dim as f64) {
            return Err(Error::InvalidParams(format!("alpha = {alpha} outside (0, {dim})")));
        }
        Ok(Self { dim, alpha })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Lower critical exponent `alpha/N + 1`.
    pub fn p(&self) -> f64 {
        self.alpha / self.dim as f64 + 1.0
    }

    /// `N / (N + alpha)`, the power of the constraint in the scale-free quotient.
    pub fn quotient_power(&self) -> f64 {
        let n = self.dim as f64;
        n / (n + self.alpha)
    }
}

/// Surface measure of the unit sphere `S^{N-1}`.
pub fn sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * PI.powf(0.5 * n) / gamma(0.5 * n)
}

/// Volume of the unit ball in R^N.
pub fn ball_volume(dim: usize) -> f64 {
    sphere_area(dim) / dim as f64
}

/// Identifies the grid a [`Field`] was sampled on. Two grids built from the
/// same inputs are identical, so the key is the construction tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridKey {
    pub dim: usize,
    pub alpha_bits: u64,
    pub r_max_bits: u64,
    pub n: usize,
    pub grading_bits: u64,
}

#[derive(Debug, Clone)]
pub struct RadialGrid {
    params: ProblemParams,
    r_max: f64,
    grading: f64,
    faces: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `coupling[k]` is the flux coefficient of face `k`; `coupling[0] = 0`.
    coupling: Vec<f64>,
}

pub const MIN_NODES: usize = 16;

impl RadialGrid {
    pub fn new(params: ProblemParams, r_max: f64, n: usize, grading: f64) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("R_max = {r_max} must be positive")));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!("n = {n} below minimum {MIN_NODES}")));
        }
        if !(grading >= 1.0 && grading.is_finite()) {
            return Err(Error::InvalidGrid(format!("grading = {grading} must be >= 1")));
        }
        let dim = params.dim();
        let nf = dim as f64;
        let area = sphere_area(dim);
        let faces: Vec<f64> = (0..=n)
            .map(|k| {
                if k == n {
                    r_max
                } else {
                    r_max * (k as f64 / n as f64).powf(grading)
                }
            })
            .collect();
        let nodes: Vec<f64> = faces.windows(2).map(|f| 0.5 * (f[0] + f[1])).collect();
        let weights: Vec<f64> = faces
            .windows(2)
            .map(|f| area * (f[1].powf(nf) - f[0].powf(nf)) / nf)
            .collect();
        let mut coupling = vec![0.0; n + 1];
        for k in 1..n {
            // Difference quotient in r^2: exact flux for a + b r^2 on any grid.
            let dr = nodes[k] - nodes[k - 1];
            let stretch = 2.0 * faces[k] / (nodes[k] + nodes[k - 1]);
            coupling[k] = area * faces[k].powi(dim as i32 - 1) * stretch / dr;
        }
        coupling[n] = area * r_max.powi(dim as i32 - 1) / (r_max - nodes[n - 1]);

        if weights.iter().any(|w| !(*w > 0.0)) || nodes[0] <= 0.0 {
            return Err(Error::InvalidGrid("degenerate cells (grading too strong for n)".into()));
        }
        Ok(Self {
            params,
            r_max,
            grading,
            faces,
            nodes,
            weights,
            coupling,
        })
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn key(&self) -> GridKey {
        GridKey {
            dim: self.params.dim(),
            alpha_bits: self.params.alpha().to_bits(),
            r_max_bits: self.r_max.to_bits(),
            n: self.len(),
            grading_bits: self.grading.to_bits(),
        }
    }

    /// Sample `f` at the nodes.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Field {
        Field {
            key: self.key(),
            values: self.nodes.iter().map(|&r| f(r)).collect(),
        }
    }

    pub fn zeros(&self) -> Field {
        Field {
            key: self.key(),
            values: vec![0.0; self.len()],
        }
    }

    /// Wrap raw nodal values, checking length and finiteness.
    pub fn field(&self, values: Vec<f64>) -> Result<Field> {
        if values.len() != self.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Field {
            key: self.key(),
            values,
        })
    }

    pub(crate) fn field_unchecked(&self, values: Vec<f64>) -> Field {
        debug_assert_eq!(values.len(), self.len());
        Field {
            key: self.key(),
            values,
        }
    }

    pub fn check(&self, f: &Field) -> Result<()> {
        if f.key != self.key() || f.values.len() != self.len() {
            Err(Error::GridMismatch)
        } else {
            Ok(())
        }
    }

    pub fn integrate(&self, f: &Field) -> Result<f64> {
        self.check(f)?;
        Ok(f.values.iter().zip(&self.weights).map(|(v, w)| v * w).sum())
    }

    /// Quadrature inner product `integrate(f * g)`.
    pub fn inner(&self, f: &Field, g: &Field) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        Ok(self.inner_raw(&f.values, &g.values))
    }

    pub(crate) fn inner_raw(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).zip(&self.weights).map(|((a, b), w)| a * b * w).sum()
    }

    /// Finite-volume `-Lap u` with even reflection at the origin and a zero
    /// ghost value beyond `R_max`.
    pub fn apply_neg_laplacian(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        Ok(self.field_unchecked(self.neg_laplacian_raw(&u.values)))
    }

    pub(crate) fn neg_laplacian_raw(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        let c = &self.coupling;
        (0..n)
            .map(|i| {
                let left = if i > 0 { c[i] * (u[i] - u[i - 1]) } else { 0.0 };
                let right_val = if i + 1 < n { u[i + 1] } else { 0.0 };
                let right = c[i + 1] * (right_val - u[i]);
                (left - right) / self.weights[i]
            })
            .collect()
    }

    /// Second-order three-point approximation of `u'(r)` at each node,
    /// one-sided at the first and last node.
    pub fn radial_derivative(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        let r = &self.nodes;
        let v = &u.values;
        let n = self.len();
        let three_point = |x: f64, i0: usize| -> f64 {
            let (x0, x1, x2) = (r[i0], r[i0 + 1], r[i0 + 2]);
            let l0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
            let l1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
            let l2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
            l0 * v[i0] + l1 * v[i0 + 1] + l2 * v[i0 + 2]
        };
        let d = (0..n)
            .map(|i| {
                let start = if i == 0 {
                    0
                } else if i == n - 1 {
                    n - 3
                } else {
                    i - 1
                };
                three_point(r[i], start)
            })
            .collect();
        Ok(self.field_unchecked(d))
    }

    /// Difference quotients on faces `1..=n` (the last uses the zero ghost).
    pub fn face_gradient(&self, u: &Field) -> Result<Vec<f64>> {
        self.check(u)?;
        let n = self.len();
        let v = &u.values;
        let mut out = Vec::with_capacity(n);
        for k in 1..n {
            out.push((v[k] - v[k - 1]) / (self.nodes[k] - self.nodes[k - 1]));
        }
        out.push(-v[n - 1] / (self.r_max - self.nodes[n - 1]));
        Ok(out)
    }

    /// Weights pairing [`face_gradient`](Self::face_gradient) values into
    /// `integral |grad u|^2`.
    pub fn gradient_weights(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n);
        for k in 1..n {
            out.push(self.coupling[k] * (self.nodes[k] - self.nodes[k - 1]).powi(2));
        }
        out.push(self.coupling[n] * (self.r_max - self.nodes[n - 1]).powi(2));
        out
    }

    /// Discrete Dirichlet form `E(u, v)`, the exact adjoint pairing of
    /// [`apply_neg_laplacian`](Self::apply_neg_laplacian).
    pub fn dirichlet_form(&self, u: &Field, v: &Field) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.dirichlet_raw(&u.values, &v.values))
    }

    pub(crate) fn dirichlet_raw(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.len();
        let c = &self.coupling;
        let mut s = 0.0;
        for k in 1..n {
            s += c[k] * (u[k] - u[k - 1]) * (v[k] - v[k - 1]);
        }
        s + c[n] * u[n - 1] * v[n - 1]
    }

    /// Solve `(-Lap + shift) x = rhs` (tridiagonal, symmetric in the weighted
    /// inner product). `shift >= 0`; the Dirichlet face keeps the system
    /// definite even for `shift = 0`.
    /// Solves `(-Lap_h + shift) x = rhs`.
    pub fn solve_shifted(&self, shift: f64, rhs: &Field) -> Result<Field> {
        self.check(rhs)?;
        if !(shift >= 0.0 && shift.is_finite()) {
            return Err(Error::InvalidParams(format!("shift {shift} must be nonnegative")));
        }
        Ok(self.field_unchecked(self.solve_shifted_raw(shift, &rhs.values)))
    }

    pub(crate) fn solve_shifted_raw(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.len();
        let c = &self.coupling;
        let w = &self.weights;
        // Row i of (S + shift W): sub = -c[i], diag = c[i] + c[i+1] + shift w_i, sup = -c[i+1].
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        for i in 0..n {
            let sub = if i > 0 { -c[i] } else { 0.0 };
            let diag = c[i] + c[i + 1] + shift * w[i];
            let sup = if i + 1 < n { -c[i + 1] } else { 0.0 };
            let b = w[i] * rhs[i];
            if i == 0 {
                cp[i] = sup / diag;
                dp[i] = b / diag;
            } else {
                let m = diag - sub * cp[i - 1];
                cp[i] = sup / m;
                dp[i] = (b - sub * dp[i - 1]) / m;
            }
        }
        let mut x = vec![0.0; n];
        x[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        x
    }

    /// Radius enclosing half of `integral |u|^2`, interpolated linearly in the
    /// cumulative mass between faces.
    pub fn half_mass_radius(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        Ok(self.half_mass_radius_raw(&u.values))
    }

    pub(crate) fn half_mass_radius_raw(&self, u: &[f64]) -> f64 {
        let total: f64 = u.iter().zip(&self.weights).map(|(v, w)| v * v * w).sum();
        if total <= 0.0 {
            return 0.0;
        }
        let half = 0.5 * total;
        let mut acc = 0.0;
        for (i, (v, w)) in u.iter().zip(&self.weights).enumerate() {
            let m = v * v * w;
            if acc + m >= half {
                let frac = if m > 0.0 { (half - acc) / m } else { 0.0 };
                return self.faces[i] + frac * (self.faces[i + 1] - self.faces[i]);
            }
            acc += m;
        }
        self.r_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    key: GridKey,
    values: Vec<f64>,
}

impl Field {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn key(&self) -> GridKey {
        self.key
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, t: f64) -> Field {
        self.map(|v| t * v)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Field {
        Field {
            key: self.key,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Field, f: F) -> Result<Field> {
        if self.key != other.key {
            return Err(Error::GridMismatch);
        }
        Ok(Field {
            key: self.key,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}
