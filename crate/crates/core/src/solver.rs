//! Minimisation of `Q(u) = int |grad u|^2 + V u^2` on the constraint set
//! `D(u) = int (I_alpha * |u|^p)|u|^p = 1`, with a half-mass-radius monitor
//! that reports when the iterates escape to infinity instead of converging.
//!
//! Each step moves along a Sobolev-preconditioned gradient projected tangent
//! to the constraint and renormalises; the step length comes from Armijo
//! backtracking on `Q`.

use crate::error::{Error, Result};
use crate::functionals::{HlsProfile, IdentityReport, Landscape};
use crate::grid::{Field, RadialGrid};
use crate::riesz::RieszOperator;

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Hls { lambda: f64 },
    Gaussian { sigma: f64 },
    Field(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingOptions {
    /// Flag when the half-mass radius exceeds this fraction of `R_max`.
    pub radius_fraction: f64,
    /// Flag after this many consecutive checks with a growing half-mass radius.
    pub consecutive: usize,
    /// Accepted iterations between checks.
    pub check_every: usize,
    /// Relative increase that counts as growth.
    pub growth_tol: f64,
}

impl Default for SpreadingOptions {
    fn default() -> Self {
        Self {
            radius_fraction: 0.5,
            consecutive: 50,
            check_every: 10,
            growth_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Target for `||g_Q - beta g_D|| / ||g_Q||` in the dual norm of the
    /// preconditioner, with `beta` the projection in that norm.
    pub grad_tol: f64,
    pub initial_step: f64,
    pub shrink: f64,
    pub growth: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Steps below this end the run with [`Status::MaxIters`].
    pub min_step: f64,
    /// Shift `sigma` of the preconditioner `-Lap + sigma`.
    pub precond_shift: f64,
    pub init: Init,
    pub spreading: SpreadingOptions,
    /// Stop as soon as spreading is flagged instead of running to `max_iters`.
    pub stop_on_spreading: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            grad_tol: 1e-7,
            initial_step: 1.0,
            shrink: 0.5,
            growth: 1.5,
            armijo: 1e-4,
            min_step: 1e-14,
            precond_shift: 1.0,
            init: Init::Hls { lambda: 1.0 },
            spreading: SpreadingOptions::default(),
            stop_on_spreading: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grad_tol", self.grad_tol),
            ("initial_step", self.initial_step),
            ("armijo", self.armijo),
            ("min_step", self.min_step),
            ("precond_shift", self.precond_shift),
            ("growth_tol", self.spreading.growth_tol),
            ("radius_fraction", self.spreading.radius_fraction),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iters == 0 || self.spreading.check_every == 0 || self.spreading.consecutive == 0 {
            return Err(Error::InvalidParams("iteration counts must be at least 1".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) || !(self.growth >= 1.0) {
            return Err(Error::InvalidParams("need 0 < shrink < 1 <= growth".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    Spreading,
    MaxIters,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Spreading => "spreading",
            Status::MaxIters => "max_iters",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub iter: usize,
    pub c_value: f64,
    pub r_half: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Constraint-normalised minimiser (`D(u) = 1`).
    pub u: Field,
    pub c_star: f64,
    /// `p theta` with `theta = <g_Q, g_D> / <g_D, g_D>`: the `u` solves
    /// `-Lap u + V u = multiplier (I_alpha * |u|^p)|u|^{p-2} u`.
    pub multiplier: f64,
    pub theta: f64,
    /// `t u` with `t^{2p-2} = multiplier`, present when the multiplier is positive.
    pub rescaled: Option<Field>,
    /// Identities of `rescaled`, or of `u` itself when no rescaling was possible.
    pub report: IdentityReport,
    pub status: Status,
    pub iterations: usize,
    pub grad_norm: f64,
    pub spreading_flagged_at: Option<usize>,
    pub history: Vec<HistoryEntry>,
}

/// `u / D(u)^{1/(2p)}`.
pub fn normalize(op: &RieszOperator, u: &Field) -> Result<Field> {
    let d = op.constraint_d(u)?;
    if !(d > 0.0) {
        return Err(Error::ZeroConstraint);
    }
    Ok(u.scaled(d.powf(-0.5 / op.params().p())))
}

fn normalize_raw(land: &Landscape, u: &mut [f64]) -> Result<()> {
    let d = land.d_raw(u);
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::ZeroConstraint);
    }
    let s = d.powf(-0.5 / land.grid().params().p());
    u.iter_mut().for_each(|x| *x *= s);
    Ok(())
}

/// Running state of the spreading test.
#[derive(Debug, Clone)]
pub struct SpreadingMonitor {
    opts: SpreadingOptions,
    r_max: f64,
    last: Option<f64>,
    streak: usize,
    flagged: bool,
    pub series: Vec<f64>,
}

impl SpreadingMonitor {
    pub fn new(opts: SpreadingOptions, r_max: f64) -> Self {
        Self {
            opts,
            r_max,
            last: None,
            streak: 0,
            flagged: false,
            series: Vec::new(),
        }
    }

    /// Record one half-mass radius; returns whether the flag is (now) raised.
    pub fn push(&mut self, r_half: f64) -> bool {
        if let Some(prev) = self.last {
            if r_half > prev * (1.0 + self.opts.growth_tol) {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
        }
        self.last = Some(r_half);
        self.series.push(r_half);
        if r_half > self.opts.radius_fraction * self.r_max || self.streak >= self.opts.consecutive {
            self.flagged = true;
        }
        self.flagged
    }

    pub fn flagged(&self) -> bool {
        self.flagged
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingReport {
    pub flagged: bool,
    pub r_half: Vec<f64>,
}

/// Half-mass radii of a sequence of iterates and the spreading verdict.
pub fn spreading_diagnostic(grid: &RadialGrid, history: &[Field], opts: &SpreadingOptions) -> Result<SpreadingReport> {
    if history.is_empty() {
        return Err(Error::InvalidParams("empty history".into()));
    }
    let mut mon = SpreadingMonitor::new(opts.clone(), grid.r_max());
    for u in history {
        mon.push(grid.half_mass_radius(u)?);
    }
    Ok(SpreadingReport {
        flagged: mon.flagged(),
        r_half: mon.series,
    })
}

fn initial_field(grid: &RadialGrid, init: &Init) -> Result<Vec<f64>> {
    let v = match init {
        Init::Hls { lambda } => HlsProfile::new(1.0, *lambda)?.sample(grid).into_values(),
        Init::Gaussian { sigma } => {
            if !(*sigma > 0.0) {
                return Err(Error::InvalidParams(format!("sigma = {sigma} must be positive")));
            }
            grid.sample(|r| (-0.5 * (r / sigma).powi(2)).exp()).into_values()
        }
        Init::Field(v) => grid.field(v.clone())?.into_values(),
    };
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("initial field"));
    }
    Ok(v)
}

struct Point {
    u: Vec<f64>,
    q: f64,
    g_q: Vec<f64>,
    g_d: Vec<f64>,
}

impl Point {
    fn at(land: &Landscape, u: Vec<f64>) -> Result<Self> {
        let q = land.q_raw(&u);
        if !q.is_finite() {
            return Err(Error::NonFinite("energy"));
        }
        let g_q = land.grad_q_raw(&u);
        let (g_d, _) = land.grad_d_raw(&u);
        Ok(Self { u, q, g_q, g_d })
    }
}

pub fn solve(grid: &RadialGrid, land: &Landscape, opts: &SolveOptions) -> Result<SolveResult> {
    opts.validate()?;
    if land.grid().key() != grid.key() {
        return Err(Error::GridMismatch);
    }
    let p = grid.params().p();
    let inner = |a: &[f64], b: &[f64]| grid.inner_raw(a, b);

    let mut u0 = initial_field(grid, &opts.init)?;
    normalize_raw(land, &mut u0)?;
    let mut pt = Point::at(land, u0)?;
    let mut step = opts.initial_step;
    let mut monitor = SpreadingMonitor::new(opts.spreading.clone(), grid.r_max());
    let mut history = Vec::new();
    let mut flagged_at = None;
    let mut accepted = 0usize;
    let mut status = Status::MaxIters;
    let mut iterations = 0;
    let mut theta;
    let mut grad_norm;

    loop {
        theta = inner(&pt.g_q, &pt.g_d) / inner(&pt.g_d, &pt.g_d);
        // Residual and direction in the dual norm of the preconditioner, which
        // does not amplify rounding noise at the finest cells.
        let pre_q = grid.solve_shifted_raw(opts.precond_shift, &pt.g_q);
        let pre_d = grid.solve_shifted_raw(opts.precond_shift, &pt.g_d);
        let beta = inner(&pt.g_q, &pre_d) / inner(&pt.g_d, &pre_d);
        let resid: Vec<f64> = pt.g_q.iter().zip(&pt.g_d).map(|(a, b)| a - beta * b).collect();
        let dir: Vec<f64> = pre_q.iter().zip(&pre_d).map(|(a, b)| a - beta * b).collect();
        let slope = inner(&resid, &dir);
        grad_norm = (slope.max(0.0) / inner(&pt.g_q, &pre_q)).sqrt();

        if accepted.is_multiple_of(opts.spreading.check_every) {
            let r_half = grid.half_mass_radius_raw(&pt.u);
            history.push(HistoryEntry {
                iter: iterations,
                c_value: pt.q,
                r_half,
                grad_norm,
            });
            if monitor.push(r_half) && flagged_at.is_none() {
                flagged_at = Some(iterations);
            }
        }
        if grad_norm <= opts.grad_tol {
            status = Status::Converged;
            break;
        }
        if iterations >= opts.max_iters || (opts.stop_on_spreading && flagged_at.is_some()) {
            break;
        }
        iterations += 1;
        if !(slope > 0.0) {
            break;
        }

        let mut moved = false;
        while step >= opts.min_step {
            let mut trial: Vec<f64> = pt.u.iter().zip(&dir).map(|(a, d)| a - step * d).collect();
            if normalize_raw(land, &mut trial).is_ok() {
                let q = land.q_raw(&trial);
                // Allow rounding-level slack so the end game is not starved by cancellation.
                let slack = 16.0 * f64::EPSILON * pt.q.abs();
                if q.is_finite() && q <= pt.q - opts.armijo * step * slope + slack {
                    pt = Point::at(land, trial)?;
                    step *= opts.growth;
                    moved = true;
                    break;
                }
            }
            step *= opts.shrink;
        }
        if !moved {
            break;
        }
        accepted += 1;
    }

    let r_half = grid.half_mass_radius_raw(&pt.u);
    history.push(HistoryEntry {
        iter: iterations,
        c_value: pt.q,
        r_half,
        grad_norm,
    });
    if monitor.push(r_half) && flagged_at.is_none() {
        flagged_at = Some(iterations);
    }
    if flagged_at.is_some() {
        status = Status::Spreading;
    }

    let multiplier = p * theta;
    let u = grid.field_unchecked(pt.u);
    let rescaled = (multiplier > 0.0).then(|| u.scaled(multiplier.powf(1.0 / (2.0 * p - 2.0))));
    let report = land.identity_report(rescaled.as_ref().unwrap_or(&u))?;
    Ok(SolveResult {
        u,
        c_star: pt.q,
        multiplier,
        theta,
        rescaled,
        report,
        status,
        iterations,
        grad_norm,
        spreading_flagged_at: flagged_at,
        history,
    })
}

#[derive(Debug, Clone)]
pub struct NullVerification {
    pub u: Field,
    pub amplitude: f64,
    pub report: IdentityReport,
    /// `-Lap u + V u - (I_alpha * |u|^p)|u|^{p-2} u` at every node.
    pub residual: Field,
    /// Max of `|residual|` over nodes with `r <= interior`, divided by `max |u|`.
    pub sup_interior_residual: f64,
    pub interior: f64,
    pub q: f64,
    pub kinetic: f64,
}

/// Builds `C (lambda / (lambda^2 + r^2))^{N/2}` with `C^{2p-2} A' = 1`, which
/// solves the equation with the matching null potential, and measures how well
/// the discretisation reproduces that.
pub fn verify_null_solution(
    grid: &RadialGrid,
    op: &RieszOperator,
    lambda: f64,
    interior: f64,
) -> Result<NullVerification> {
    let params = grid.params();
    let a_prime = crate::riesz::profile_constant(params)?;
    let amplitude = a_prime.powf(-1.0 / (2.0 * params.p() - 2.0));
    let prof = HlsProfile::new(amplitude, lambda)?;
    let v = crate::potentials::Potential::Null { lambda };
    let land = Landscape::new(grid, op, &v)?;
    let u = prof.sample(grid);
    let residual = land.euler_lagrange_residual(&u)?;
    let scale = u.max_abs();
    let sup = grid
        .nodes()
        .iter()
        .zip(residual.values())
        .filter(|(r, _)| **r <= interior)
        .map(|(_, x)| x.abs())
        .fold(0.0, f64::max)
        / scale;
    let report = land.identity_report(&u)?;
    Ok(NullVerification {
        q: land.energy_q(&u)?,
        kinetic: report.kinetic,
        u,
        amplitude,
        report,
        residual,
        sup_interior_residual: sup,
        interior,
    })
}
