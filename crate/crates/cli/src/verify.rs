//! Identity battery behind `choquard verify`.

use crate::commands::{code, riesz_profile_check, Ctx};
use crate::report::{num, write_csv, Report};
use anyhow::Result;
use choquard::functionals::{c_infty_reference_at, gradient_hardy_constant, gradient_hardy_ratio, quadrature_identity};
use choquard::solver::verify_null_solution;
use choquard::{Landscape, Potential, ProblemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemStatus {
    Pass,
    Fail,
    Skip,
}

impl ItemStatus {
    fn as_str(self) -> &'static str {
        match self {
            ItemStatus::Pass => "pass",
            ItemStatus::Fail => "fail",
            ItemStatus::Skip => "skip",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Item {
    pub name: String,
    pub status: ItemStatus,
    pub measured: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl Item {
    fn check(name: impl Into<String>, measured: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        let status = if measured <= tolerance {
            ItemStatus::Pass
        } else {
            ItemStatus::Fail
        };
        Self {
            name: name.into(),
            status,
            measured: Some(measured),
            tolerance: Some(tolerance),
            detail: detail.into(),
        }
    }

    fn skip(name: impl Into<String>, reason: &str) -> Self {
        Self {
            name: name.into(),
            status: ItemStatus::Skip,
            measured: None,
            tolerance: None,
            detail: reason.into(),
        }
    }

    fn error(name: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self {
            name: name.into(),
            status: ItemStatus::Fail,
            measured: None,
            tolerance: None,
            detail: err.to_string(),
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn quadrature_item() -> Item {
    let mut worst = 0.0f64;
    for dim in 3..=6 {
        match quadrature_identity(dim) {
            Ok((l, r)) => worst = worst.max(rel(l, r)),
            Err(e) => return Item::error("quadrature_identity", e),
        }
    }
    Item::check("quadrature_identity", worst, 1e-8, "N = 3..6, max relative difference")
}

fn hardy_items(dims: &[usize]) -> Vec<Item> {
    dims.iter()
        .map(|&dim| {
            let name = format!("gradient_hardy_ratio_n{dim}");
            if dim <= 2 {
                return Item::skip(name, "(N-2)_+ = 0 case");
            }
            let k = gradient_hardy_constant(dim);
            let mut worst = 0.0f64;
            for lambda in [0.5, 1.0, 2.0] {
                match gradient_hardy_ratio(dim, lambda) {
                    Ok(r) => worst = worst.max(rel(r, k)),
                    Err(e) => return Item::error(name, e),
                }
            }
            Item::check(name, worst, 1e-6, format!("lambda in {{1/2, 1, 2}} against {k}"))
        })
        .collect()
}

fn riesz_item(ctx: &Ctx, params: ProblemParams) -> Item {
    let g = &ctx.cfg.verify.riesz;
    let name = "riesz_profile_oracle";
    match riesz_profile_check(ctx, params) {
        Ok(c) => Item::check(
            name,
            c.sup_rel,
            ctx.cfg.verify.riesz_tol,
            format!(
                "R={} n={} grading={}, pointwise {:.2e}",
                g.r_max, g.n, g.grading, c.pointwise
            ),
        ),
        Err(e) => Item::error(name, e),
    }
}

/// Central differences of `Q` and `D` along random directions against the
/// analytic gradients.
fn gradient_items(ctx: &Ctx, params: ProblemParams) -> Result<Vec<Item>> {
    let spec = &ctx.cfg.verify;
    let grid = spec.gradient.build(params)?;
    let op = ctx.operator(&grid)?;
    let land = Landscape::new(&grid, &op, &Potential::Model { mu: spec.gradient_mu })?.with_execution(ctx.exec);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let (mut worst_q, mut worst_d) = (0.0f64, 0.0f64);
    for _ in 0..spec.gradient_samples {
        let coef: Vec<(f64, f64)> = (0..4)
            .map(|_| (rng.gen_range(0.1..1.0), rng.gen_range(0.5..6.0)))
            .collect();
        let tail = rng.gen_range(0.01..0.1);
        // Positive everywhere, so |u|^p is smooth along the perturbation.
        let u = grid.sample(|r| {
            coef.iter().map(|(a, s)| a * (-(r / s).powi(2)).exp()).sum::<f64>() + tail / (1.0 + r * r).powi(2)
        });
        let dir: Vec<(f64, f64)> = (0..3)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.5..6.0)))
            .collect();
        let m = grid.sample(|r| dir.iter().map(|(a, s)| a * (-(r / s).powi(2)).exp()).sum::<f64>());
        let w = u.zip_with(&m, |a, b| a * b)?;
        let eps = 1e-5 * u.max_abs() / w.max_abs();
        let shift = |t: f64| u.zip_with(&w, |a, b| a + t * b);
        let (up, down) = (shift(eps)?, shift(-eps)?);
        let fd_q = (land.energy_q(&up)? - land.energy_q(&down)?) / (2.0 * eps);
        let fd_d = (land.constraint_d(&up)? - land.constraint_d(&down)?) / (2.0 * eps);
        worst_q = worst_q.max(rel(fd_q, grid.inner(&land.grad_q(&u)?, &w)?));
        worst_d = worst_d.max(rel(fd_d, grid.inner(&land.grad_d(&u)?, &w)?));
    }
    let detail = format!("{} seeded random fields, seed {}", spec.gradient_samples, ctx.seed);
    Ok(vec![
        Item::check("gradient_q_finite_difference", worst_q, 1e-6, detail.clone()),
        Item::check("gradient_d_finite_difference", worst_d, 1e-6, detail),
    ])
}

fn null_items(ctx: &Ctx) -> Result<Vec<Item>> {
    let spec = &ctx.cfg.verify;
    let dim = ctx.cfg.params.dim;
    let names = [
        "null_solution_residual",
        "null_solution_identities",
        "null_solution_energy",
    ];
    if dim < 3 {
        return Ok(names
            .iter()
            .map(|n| Item::skip(*n, "explicit solution checked for N >= 3"))
            .collect());
    }
    let params = ProblemParams::new(dim, spec.null_alpha)?;
    let grid = spec.null.build(params)?;
    let op = ctx.operator(&grid)?;
    let (mut res, mut ids, mut q_ratio, mut shifted) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &lambda in &spec.null_lambdas {
        let v = verify_null_solution(&grid, &op, lambda, spec.null_interior)?;
        res = res.max(v.sup_interior_residual);
        ids = ids.max(v.report.max_residual());
        q_ratio = q_ratio.max(v.q.abs() / v.kinetic);
        let mass = grid.inner(&v.u, &v.u)?;
        shifted = shifted.max((v.q - mass).abs() / v.kinetic);
    }
    let where_ = format!("N={dim} alpha={} lambda in {:?}", spec.null_alpha, spec.null_lambdas);
    Ok(vec![
        Item::check(
            names[0],
            res,
            1e-3,
            format!("{where_}, sup over r <= {} / max|u|", spec.null_interior),
        ),
        Item::check(
            names[1],
            ids,
            1e-3,
            format!("{where_}, max of Nehari/Pohozaev/reduced residuals"),
        ),
        Item::check(
            names[2],
            q_ratio,
            1e-3,
            format!(
                "{where_}, |int |grad u|^2 + V u^2| / int |grad u|^2; \
                 int |grad u|^2 + (V-1) u^2 = 0 holds to {shifted:.1e}"
            ),
        ),
    ])
}

fn c_infty_item(params: &ProblemParams, lambdas: &[f64]) -> Item {
    let name = "c_infty_dilation_invariance";
    let vals: choquard::Result<Vec<f64>> = lambdas.iter().map(|&l| c_infty_reference_at(params, l)).collect();
    match vals {
        Ok(v) if !v.is_empty() => {
            let spread = v.iter().map(|c| rel(*c, v[0])).fold(0.0, f64::max);
            Item::check(name, spread, 1e-6, format!("lambda in {lambdas:?}, c_inf = {}", v[0]))
        }
        Ok(_) => Item::skip(name, "no lambda values configured"),
        Err(e) => Item::error(name, e),
    }
}

pub fn run(ctx: &Ctx) -> Result<i32> {
    let cfg = &ctx.cfg;
    let params = cfg.problem_params()?;
    let mut report = Report::new("verify", cfg, ctx.seed)?;
    let mut items = vec![quadrature_item()];
    items.extend(hardy_items(&cfg.verify.hardy_dims));
    items.push(report.timed("riesz", || riesz_item(ctx, params)));
    items.extend(report.timed("gradients", || gradient_items(ctx, params))?);
    items.extend(report.timed("null_solution", || null_items(ctx))?);
    items.push(c_infty_item(&params, &cfg.verify.c_infty_lambdas));

    let rows: Vec<Vec<String>> = items
        .iter()
        .map(|i| {
            vec![
                i.name.clone(),
                i.status.as_str().to_string(),
                i.measured.map(num).unwrap_or_default(),
                i.tolerance.map(num).unwrap_or_default(),
                i.detail.clone(),
            ]
        })
        .collect();
    write_csv(
        &ctx.out.join("verify.csv"),
        &["item", "status", "measured", "tolerance", "detail"],
        &rows,
    )?;
    let failed: Vec<&str> = items
        .iter()
        .filter(|i| i.status == ItemStatus::Fail)
        .map(|i| i.name.as_str())
        .collect();
    report.set("items", &items)?;
    report.set("failed", &failed)?;
    report.write(&ctx.out.join("verify.json"))?;

    for i in &items {
        let tag = i.status.as_str().to_uppercase();
        match (i.measured, i.tolerance) {
            (Some(m), Some(t)) => println!("[{tag}] {}: {m:.2e} (tol {t:.0e}) {}", i.name, i.detail),
            _ => println!("[{tag}] {}: {}", i.name, i.detail),
        }
    }
    Ok(if failed.is_empty() {
        code::OK
    } else {
        code::VERIFY_FAILED
    })
}
