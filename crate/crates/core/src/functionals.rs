//! Energies, the nonlocal constraint, their gradients, the Nehari and
//! Pohozaev identities, and the test-function functionals built on the
//! extremal profiles `C (lambda / (lambda^2 + r^2))^{N/2}`.
//!
//! The kinetic energy is the face-based Dirichlet form of the grid, so
//! `grad_q = 2(-Lap_h u + V u)` is the exact gradient of the discrete `Q`.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{sphere_area, Field, ProblemParams, RadialGrid};
use crate::potentials::{eval_potential, radial_tilt, Potential};
use crate::quad;
use crate::riesz::{profile_constant, RieszOperator};

/// `C (lambda / (lambda^2 + r^2))^{N/2}`, centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HlsProfile {
    pub amplitude: f64,
    pub lambda: f64,
}

impl HlsProfile {
    pub fn new(amplitude: f64, lambda: f64) -> Result<Self> {
        if !(amplitude > 0.0 && lambda > 0.0 && amplitude.is_finite() && lambda.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "profile needs C > 0, lambda > 0 (got C={amplitude}, lambda={lambda})"
            )));
        }
        Ok(Self { amplitude, lambda })
    }

    /// Amplitude for which the nonlocal constraint equals one.
    pub fn normalized(params: &ProblemParams, lambda: f64) -> Result<Self> {
        Self::new(normalized_amplitude(params)?, lambda)
    }

    pub fn eval(&self, dim: usize, r: f64) -> f64 {
        let l = self.lambda;
        self.amplitude * (l / (l * l + r * r)).powf(0.5 * dim as f64)
    }

    pub fn derivative(&self, dim: usize, r: f64) -> f64 {
        let l2 = self.lambda * self.lambda;
        -(dim as f64) * r * self.eval(dim, r) / (l2 + r * r)
    }

    pub fn sample(&self, grid: &RadialGrid) -> Field {
        let dim = grid.params().dim();
        grid.sample(|r| self.eval(dim, r))
    }
}

/// `int_{R^N} (1 + |y|^2)^{-N} dy` by quadrature.
fn profile_mass(dim: usize) -> f64 {
    let n = dim as f64;
    sphere_area(dim) * quad::half_line(|s| s.powf(n - 1.0) * (1.0 + s * s).powf(-n), &[1.0], 1e-14)
}

/// With `u = C (1 + r^2)^{-N/2}` the constraint is `C^{2p} A' int (1+|y|^2)^{-N}`.
fn normalized_amplitude(params: &ProblemParams) -> Result<f64> {
    let a_prime = profile_constant(params)?;
    Ok((a_prime * profile_mass(params.dim())).powf(-0.5 / params.p()))
}

/// Discretised energy landscape: grid, kernel, and the sampled potential.
#[derive(Debug, Clone)]
pub struct Landscape<'a> {
    grid: &'a RadialGrid,
    op: &'a RieszOperator,
    v: Vec<f64>,
    tilt: Vec<f64>,
    constant_potential: bool,
    exec: Execution,
}

impl<'a> Landscape<'a> {
    pub fn new(grid: &'a RadialGrid, op: &'a RieszOperator, potential: &Potential) -> Result<Self> {
        if op.key() != grid.key() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid,
            op,
            v: eval_potential(potential, grid)?.into_values(),
            tilt: radial_tilt(potential, grid)?.into_values(),
            constant_potential: potential.is_constant(),
            exec: Execution::default(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn grid(&self) -> &RadialGrid {
        self.grid
    }

    pub fn operator(&self) -> &RieszOperator {
        self.op
    }

    pub fn potential_values(&self) -> &[f64] {
        &self.v
    }

    pub(crate) fn kinetic_raw(&self, u: &[f64]) -> f64 {
        self.grid.dirichlet_raw(u, u)
    }

    pub(crate) fn potential_raw(&self, u: &[f64]) -> f64 {
        u.iter()
            .zip(&self.v)
            .zip(self.grid.weights())
            .map(|((x, v), w)| v * x * x * w)
            .sum()
    }

    pub(crate) fn q_raw(&self, u: &[f64]) -> f64 {
        self.kinetic_raw(u) + self.potential_raw(u)
    }

    pub(crate) fn d_raw(&self, u: &[f64]) -> f64 {
        self.op.constraint_raw(u, self.exec)
    }

    pub(crate) fn grad_q_raw(&self, u: &[f64]) -> Vec<f64> {
        let mut g = self.grid.neg_laplacian_raw(u);
        for ((gi, ui), vi) in g.iter_mut().zip(u).zip(&self.v) {
            *gi = 2.0 * (*gi + vi * ui);
        }
        g
    }

    /// Returns `(I_alpha * |u|^p)` alongside the gradient so callers can reuse it.
    pub(crate) fn grad_d_raw(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.grid.params().p();
        let up: Vec<f64> = u.iter().map(|x| x.abs().powf(p)).collect();
        let conv = self.op.apply_raw(&up, self.exec);
        let g = u
            .iter()
            .zip(&conv)
            .map(|(&x, &c)| {
                if x == 0.0 {
                    0.0
                } else {
                    2.0 * p * c * x.abs().powf(p - 1.0) * x.signum()
                }
            })
            .collect();
        (g, conv)
    }

    fn check(&self, u: &Field) -> Result<()> {
        self.grid.check(u)?;
        if u.values().iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("field"));
        }
        Ok(())
    }

    pub fn energy_q(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        Ok(self.q_raw(u.values()))
    }

    pub fn constraint_d(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        Ok(self.d_raw(u.values()))
    }

    pub fn critical_quotient(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        let d = self.d_raw(u.values());
        if !(d > 0.0) {
            return Err(Error::ZeroConstraint);
        }
        Ok(self.q_raw(u.values()) / d.powf(self.grid.params().quotient_power()))
    }

    pub fn grad_q(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        Ok(self.grid.field_unchecked(self.grad_q_raw(u.values())))
    }

    pub fn grad_d(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        Ok(self.grid.field_unchecked(self.grad_d_raw(u.values()).0))
    }

    /// Residuals of the Nehari identity and of the full and reduced Pohozaev
    /// identities, for `u` in Euler-Lagrange normalisation.
    pub fn identity_report(&self, u: &Field) -> Result<IdentityReport> {
        self.check(u)?;
        let u = u.values();
        let n = self.grid.params().dim() as f64;
        let kinetic = self.kinetic_raw(u);
        let potential = self.potential_raw(u);
        let tilt: f64 = u
            .iter()
            .zip(&self.tilt)
            .zip(self.grid.weights())
            .map(|((x, t), w)| t * x * x * w)
            .sum();
        let nonlocal = self.d_raw(u);
        let scale = kinetic.abs() + potential.abs() + tilt.abs() + nonlocal.abs();
        let floor = RESIDUAL_FLOOR * scale;
        if !(scale > 0.0) {
            return Err(Error::Degenerate("all identity terms vanish".into()));
        }
        let rel = |l: f64, r: f64| (l - r).abs() / (l.abs() + r.abs() + floor);
        Ok(IdentityReport {
            nehari_residual: rel(kinetic + potential, nonlocal),
            pohozaev_residual: rel(
                0.5 * (n - 2.0) * kinetic + 0.5 * n * potential + 0.5 * tilt,
                0.5 * n * nonlocal,
            ),
            pohozaev_reduced_residual: rel(kinetic, 0.5 * tilt),
            kinetic,
            potential,
            tilt,
            nonlocal,
            constant_potential: self.constant_potential,
        })
    }

    /// Pointwise `-Lap u + V u - (I_alpha * |u|^p)|u|^{p-2} u`.
    pub fn euler_lagrange_residual(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        let lap = self.grid.neg_laplacian_raw(u.values());
        let p = self.grid.params().p();
        let (_, conv) = self.grad_d_raw(u.values());
        let r = u
            .values()
            .iter()
            .zip(lap)
            .zip(&self.v)
            .zip(conv)
            .map(|(((&x, l), v), c)| l + v * x - c * x.abs().powf(p - 1.0) * x.signum())
            .collect();
        Ok(self.grid.field_unchecked(r))
    }
}

pub const RESIDUAL_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    /// `int |grad u|^2 + V u^2` against `int (I_alpha * |u|^p)|u|^p`.
    pub nehari_residual: f64,
    /// `(N-2)/2 T + N/2 P + 1/2 int <grad V, x> u^2` against `N/2` times the nonlocal term.
    pub pohozaev_residual: f64,
    /// `int |grad u|^2` against `1/2 int <grad V, x> u^2`.
    pub pohozaev_reduced_residual: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub tilt: f64,
    pub nonlocal: f64,
    /// With `grad V = 0` the reduced identity forces `u = 0`, so a small
    /// reduced residual is impossible for a nontrivial solution.
    pub constant_potential: bool,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.nehari_residual
            .max(self.pohozaev_residual)
            .max(self.pohozaev_reduced_residual)
    }
}

pub fn energy_q(grid: &RadialGrid, v: &Potential, u: &Field) -> Result<f64> {
    grid.check(u)?;
    let vf = eval_potential(v, grid)?;
    let pot: f64 = u
        .values()
        .iter()
        .zip(vf.values())
        .zip(grid.weights())
        .map(|((x, v), w)| v * x * x * w)
        .sum();
    Ok(grid.dirichlet_raw(u.values(), u.values()) + pot)
}

pub fn critical_quotient(grid: &RadialGrid, v: &Potential, op: &RieszOperator, u: &Field) -> Result<f64> {
    Landscape::new(grid, op, v)?.critical_quotient(u)
}

pub fn grad_q(grid: &RadialGrid, v: &Potential, u: &Field) -> Result<Field> {
    grid.check(u)?;
    let vf = eval_potential(v, grid)?;
    let mut g = grid.neg_laplacian_raw(u.values());
    for ((gi, ui), vi) in g.iter_mut().zip(u.values()).zip(vf.values()) {
        *gi = 2.0 * (*gi + vi * ui);
    }
    Ok(grid.field_unchecked(g))
}

pub fn grad_d(grid: &RadialGrid, op: &RieszOperator, u: &Field) -> Result<Field> {
    Landscape::new(grid, op, &Potential::Constant { c: 0.0 })?.grad_d(u)
}

pub fn identity_report(grid: &RadialGrid, v: &Potential, op: &RieszOperator, u: &Field) -> Result<IdentityReport> {
    Landscape::new(grid, op, v)?.identity_report(u)
}

/// `N^2 (N-2) / (4 (N+1))`, the ratio of `int |grad u_lambda|^2` to
/// `int |u_lambda|^2 / |x|^2` on the extremal profiles.
pub fn gradient_hardy_constant(dim: usize) -> f64 {
    let n = dim as f64;
    n * n * (n - 2.0) / (4.0 * (n + 1.0))
}

fn radial_integral<F: Fn(f64) -> f64>(dim: usize, f: F, breaks: &[f64]) -> f64 {
    let n = dim as f64;
    sphere_area(dim) * quad::half_line(|s| f(s) * s.powf(n - 1.0), breaks, 1e-14)
}

/// `(int |x|^2 (1+|x|^2)^{-(N+2)}, (N-2)/(4(N+1)) int |x|^{-2} (1+|x|^2)^{-N})`.
pub fn quadrature_identity(dim: usize) -> Result<(f64, f64)> {
    if dim < 3 {
        return Err(Error::InvalidParams(format!("needs N >= 3, got {dim}")));
    }
    let n = dim as f64;
    let lhs = radial_integral(dim, |s| s * s * (1.0 + s * s).powf(-(n + 2.0)), &[1.0]);
    let inner = radial_integral(dim, |s| (1.0 + s * s).powf(-n) / (s * s), &[1.0]);
    Ok((lhs, (n - 2.0) / (4.0 * (n + 1.0)) * inner))
}

/// `int |grad u_lambda|^2 / int |u_lambda|^2/|x|^2` for the extremal profile.
pub fn gradient_hardy_ratio(dim: usize, lambda: f64) -> Result<f64> {
    if dim < 3 {
        return Err(Error::InvalidParams("(N-2)_+ = 0 case".into()));
    }
    let u = HlsProfile::new(1.0, lambda)?;
    let grad = radial_integral(dim, |s| u.derivative(dim, s).powi(2), &[lambda]);
    let hardy = radial_integral(dim, |s| (u.eval(dim, s) / s).powi(2), &[lambda]);
    Ok(grad / hardy)
}

/// `int |u|^2` over the constraint-normalised extremal profile at scale
/// `lambda`, evaluated by one-dimensional quadrature in the unscaled radius.
pub fn c_infty_reference_at(params: &ProblemParams, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParams(format!("lambda = {lambda} must be positive")));
    }
    let dim = params.dim();
    let n = dim as f64;
    let a = params.alpha();
    let p = params.p();
    let a_prime = profile_constant(params)?;
    let u = HlsProfile::new(1.0, lambda)?;
    // I_alpha * |u|^p = lambda^{(alpha - N)/2} A' (1 + r^2/lambda^2)^{-(N-alpha)/2}.
    let conv = |r: f64| lambda.powf(0.5 * (a - n)) * a_prime * (1.0 + (r / lambda).powi(2)).powf(-0.5 * (n - a));
    let breaks = [0.1 * lambda, lambda, 10.0 * lambda];
    let mass = radial_integral(dim, |r| u.eval(dim, r).powi(2), &breaks);
    let d = radial_integral(dim, |r| conv(r) * u.eval(dim, r).powf(p), &breaks);
    let c = mass / d.powf(1.0 / p);
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Quadrature("c_infty reference".into()));
    }
    Ok(c)
}

pub fn c_infty_reference(params: &ProblemParams) -> Result<f64> {
    c_infty_reference_at(params, 1.0)
}

/// `lambda^2 int |grad u_lambda|^2 + lambda^2 int (V - 1) |u_lambda|^2` for the
/// constraint-normalised profile `u_lambda = lambda^{-N/2} u_1(x / lambda)`.
///
/// For `N >= 3` the kinetic part is replaced by `K_N int |u_1|^2 / |y|^2` and
/// the whole functional is one integral in `y`.
pub fn i_v_functional(v: &Potential, params: &ProblemParams, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParams(format!("lambda = {lambda} must be positive")));
    }
    v.validate()?;
    let dim = params.dim();
    let u1 = HlsProfile::normalized(params, 1.0)?;
    let l2 = lambda * lambda;
    let inv = 1.0 / lambda;
    let breaks = [0.1 * inv.min(1.0), inv.min(1.0), inv.max(1.0), 10.0 * inv.max(1.0)];
    let value = if dim >= 3 {
        let k = gradient_hardy_constant(dim);
        radial_integral(
            dim,
            |y| (k / (y * y) - l2 * (1.0 - v.value(dim, lambda * y))) * u1.eval(dim, y).powi(2),
            &breaks,
        )
    } else {
        radial_integral(
            dim,
            |y| u1.derivative(dim, y).powi(2) + l2 * (v.value(dim, lambda * y) - 1.0) * u1.eval(dim, y).powi(2),
            &breaks,
        )
    };
    if !value.is_finite() {
        return Err(Error::Quadrature(format!("I_V at lambda = {lambda}")));
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyEstimate {
    /// Largest Rayleigh quotient `int W phi^2 / int |grad phi|^2` found.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest `int W phi^2` over radial `phi` with `int |grad phi|^2 <= 1`,
/// where `W = max(0, 1/2 <grad V, x>)`.
///
/// The trial space is continuous piecewise-linear `phi` on the grid faces with
/// `phi(R_max) = 0`, and `int W phi^2` is integrated from `W` itself, so every
/// quotient seen is that of a genuine test function: the result is a lower
/// bound for the sup, found by power iteration on the generalised eigenproblem.
pub fn hardy_weighted_sup(grid: &RadialGrid, v: &Potential, tol: f64, max_iter: usize) -> Result<HardyEstimate> {
    // Rejects potentials that cannot be evaluated on the grid.
    radial_tilt(v, grid)?;
    let dim = grid.params().dim();
    hardy_sup_for_weight(grid, |r| (0.5 * v.tilt(dim, r)).max(0.0), tol, max_iter)
}

/// As [`hardy_weighted_sup`] for an arbitrary nonnegative radial weight.
pub fn hardy_sup_for_weight<W: Fn(f64) -> f64>(
    grid: &RadialGrid,
    weight: W,
    tol: f64,
    max_iter: usize,
) -> Result<HardyEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams("tolerance must be positive".into()));
    }
    let (stiff, mass) = hardy_matrices(grid, &weight)?;
    if mass.diag.iter().all(|&x| x == 0.0) {
        return Ok(HardyEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let rayleigh = |phi: &[f64]| mass.quadratic(phi) / stiff.quadratic(phi);
    let mut phi: Vec<f64> = mass.diag.iter().map(|&x| if x > 0.0 { 1.0 } else { 0.0 }).collect();
    let mut best = rayleigh(&phi);
    let mut prev = best;
    for it in 1..=max_iter {
        phi = stiff.solve(&mass.apply(&phi));
        let scale = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::NoConvergence("Hardy power iteration collapsed".into()));
        }
        phi.iter_mut().for_each(|x| *x /= scale);
        let q = rayleigh(&phi);
        best = best.max(q);
        if (q - prev).abs() <= tol * q.abs() {
            return Ok(HardyEstimate {
                value: best,
                iterations: it,
                converged: true,
            });
        }
        prev = q;
    }
    Ok(HardyEstimate {
        value: best,
        iterations: max_iter,
        converged: false,
    })
}

/// Symmetric tridiagonal matrix; `off[k]` couples `k` and `k + 1`.
struct Tridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiag {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    fn quadratic(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        for i in 0..n {
            let sub = if i > 0 { self.off[i - 1] } else { 0.0 };
            let sup = if i + 1 < n { self.off[i] } else { 0.0 };
            let m = if i > 0 {
                self.diag[i] - sub * cp[i - 1]
            } else {
                self.diag[i]
            };
            cp[i] = sup / m;
            dp[i] = if i > 0 {
                (rhs[i] - sub * dp[i - 1]) / m
            } else {
                rhs[i] / m
            };
        }
        let mut x = vec![0.0; n];
        x[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        x
    }
}

/// Stiffness and weighted mass matrices of the hat functions at faces
/// `0..n` (the hat at `R_max` is dropped).
fn hardy_matrices(grid: &RadialGrid, weight: &dyn Fn(f64) -> f64) -> Result<(Tridiag, Tridiag)> {
    let dim = grid.params().dim() as i32;
    let area = sphere_area(grid.params().dim());
    let f = grid.faces();
    let n = grid.len();
    let (gx, gw) = quad::gauss_legendre(12);
    let mut stiff = Tridiag {
        diag: vec![0.0; n],
        off: vec![0.0; n.saturating_sub(1)],
    };
    let mut mass = Tridiag {
        diag: vec![0.0; n],
        off: vec![0.0; n.saturating_sub(1)],
    };
    for k in 0..n {
        let (a, b) = (f[k], f[k + 1]);
        let h = b - a;
        let s = area * (b.powi(dim) - a.powi(dim)) / (dim as f64 * h * h);
        // Local entries (left-left, left-right, right-right).
        let (mut ll, mut lr, mut rr) = (0.0, 0.0, 0.0);
        for (x, w) in gx.iter().zip(&gw) {
            let r = a + 0.5 * h * (x + 1.0);
            let wr = weight(r);
            if !(wr.is_finite() && wr >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "weight {wr} at r = {r} must be finite and nonnegative"
                )));
            }
            let m = 0.5 * h * w * area * r.powi(dim - 1) * wr;
            let (pl, pr) = ((b - r) / h, (r - a) / h);
            ll += m * pl * pl;
            lr += m * pl * pr;
            rr += m * pr * pr;
        }
        stiff.diag[k] += s;
        mass.diag[k] += ll;
        if k + 1 < n {
            stiff.diag[k + 1] += s;
            stiff.off[k] -= s;
            mass.diag[k + 1] += rr;
            mass.off[k] += lr;
        }
    }
    Ok((stiff, mass))
}
