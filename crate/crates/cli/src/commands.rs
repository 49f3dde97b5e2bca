use crate::config::Config;
use crate::report::{num, write_csv, Report};
use anyhow::{bail, Result};
use choquard::functionals::{c_infty_reference, c_infty_reference_at, i_v_functional, IdentityReport};
use choquard::potentials::{tail_coefficient, thresholds};
use choquard::riesz::profile_constant;
use choquard::solver::{self, SolveResult, Status};
use choquard::{Execution, Landscape, Potential, ProblemParams, RadialGrid, RieszOperator};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::path::PathBuf;

/// Exit codes of the binary.
pub mod code {
    pub const OK: i32 = 0;
    pub const ERROR: i32 = 1;
    pub const SPREADING: i32 = 2;
    pub const VERIFY_FAILED: i32 = 3;
}

pub struct Ctx {
    pub cfg: Config,
    pub out: PathBuf,
    pub exec: Execution,
    pub seed: u64,
}

impl Ctx {
    pub fn operator(&self, grid: &RadialGrid) -> Result<RieszOperator> {
        Ok(RieszOperator::build_cached(
            grid,
            self.cfg.cache_dir().as_deref(),
            self.exec,
        )?)
    }
}

pub fn identities_json(r: &IdentityReport) -> Value {
    json!({
        "nehari_residual": r.nehari_residual,
        "pohozaev_residual": r.pohozaev_residual,
        "pohozaev_reduced_residual": r.pohozaev_reduced_residual,
        "kinetic": r.kinetic,
        "potential": r.potential,
        "tilt": r.tilt,
        "nonlocal": r.nonlocal,
        "constant_potential": r.constant_potential,
    })
}

fn thresholds_json(dim: usize) -> Value {
    let t = thresholds(dim);
    json!({ "nonexistence": t.nonexist, "sufficient": t.sufficient, "ratio": t.ratio() })
}

fn tail_json(v: &Potential, dim: usize) -> Value {
    match tail_coefficient(v, dim) {
        Ok(t) if t.value.is_finite() => json!({ "value": t.value, "estimated": t.estimated }),
        Ok(t) => json!({ "value": if t.value > 0.0 { "+inf" } else { "-inf" }, "estimated": t.estimated }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

/// Lowest c-value seen along the run.
fn best_c(res: &SolveResult) -> f64 {
    res.history.iter().map(|h| h.c_value).fold(res.c_star, f64::min)
}

pub fn solve(ctx: &Ctx) -> Result<i32> {
    let cfg = &ctx.cfg;
    let params = cfg.problem_params()?;
    let grid = cfg.grid.build(params)?;
    let v = cfg.potential.build()?;
    let opts = cfg.solver.options()?;
    let mut report = Report::new("solve", cfg, ctx.seed)?;
    let op = report.timed("kernel", || ctx.operator(&grid))?;
    let land = Landscape::new(&grid, &op, &v)?.with_execution(ctx.exec);
    let res = report.timed("solve", || solver::solve(&grid, &land, &opts))?;
    let c_inf = c_infty_reference(&params)?;
    let best = best_c(&res);

    report.set("potential", cfg.potential.label())?;
    report.set("status", res.status.as_str())?;
    report.set("c_star", res.c_star)?;
    report.set("best_c", best)?;
    report.set("c_infty_reference", c_inf)?;
    report.set("gap", c_inf - res.c_star)?;
    report.set("multiplier", res.multiplier)?;
    report.set("theta", res.theta)?;
    report.set("rescaled", res.rescaled.is_some())?;
    report.set("iterations", res.iterations)?;
    report.set("grad_norm", res.grad_norm)?;
    report.set("spreading_flagged_at", res.spreading_flagged_at)?;
    report.set("r_half", grid.half_mass_radius(&res.u)?)?;
    report.set("identities", identities_json(&res.report))?;
    report.set("tail_coefficient", tail_json(&v, params.dim()))?;
    report.set("thresholds", thresholds_json(params.dim()))?;

    let rescaled = res.rescaled.as_ref();
    let rows: Vec<Vec<String>> = (0..grid.len())
        .map(|i| {
            let el = rescaled.map(|f| num(f.values()[i])).unwrap_or_default();
            vec![num(grid.nodes()[i]), num(res.u.values()[i]), el]
        })
        .collect();
    write_csv(&ctx.out.join("solution.csv"), &["r", "u", "u_rescaled"], &rows)?;
    let hist: Vec<Vec<String>> = res
        .history
        .iter()
        .map(|h| vec![h.iter.to_string(), num(h.c_value), num(h.r_half), num(h.grad_norm)])
        .collect();
    write_csv(
        &ctx.out.join("history.csv"),
        &["iter", "c_value", "r_half", "grad_norm"],
        &hist,
    )?;
    report.write(&ctx.out.join("solve.json"))?;

    println!(
        "solve {}: {} after {} iterations, c* = {:.10}, c_inf = {:.10}",
        cfg.potential.label(),
        res.status.as_str(),
        res.iterations,
        res.c_star,
        c_inf
    );
    Ok(match res.status {
        Status::Converged => code::OK,
        Status::Spreading => code::SPREADING,
        Status::MaxIters => {
            eprintln!("solver stopped at the iteration cap or step floor without converging");
            code::ERROR
        }
    })
}

struct SweepRow {
    mu: f64,
    status: Status,
    c_value: f64,
    gap: f64,
    iv_inf: f64,
}

pub fn sweep_mu(ctx: &Ctx) -> Result<i32> {
    let cfg = &ctx.cfg;
    let params = cfg.problem_params()?;
    cfg.sweep.check(params.dim())?;
    let lambdas = cfg.sweep.lambda.values()?;
    let grid = cfg.grid.build(params)?;
    let opts = cfg.solver.options()?;
    let mut report = Report::new("sweep-mu", cfg, ctx.seed)?;
    let op = report.timed("kernel", || ctx.operator(&grid))?;
    let c_inf = c_infty_reference(&params)?;
    let rows: Vec<SweepRow> = report.timed("sweep", || {
        cfg.sweep
            .mu
            .par_iter()
            .map(|&mu| -> Result<SweepRow> {
                let v = Potential::Model { mu };
                let land = Landscape::new(&grid, &op, &v)?.with_execution(ctx.exec);
                let res = solver::solve(&grid, &land, &opts)?;
                let c_value = best_c(&res);
                let iv_inf = lambdas
                    .iter()
                    .map(|&l| i_v_functional(&v, &params, l))
                    .collect::<choquard::Result<Vec<f64>>>()?
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                Ok(SweepRow {
                    mu,
                    status: res.status,
                    c_value,
                    gap: c_inf - c_value,
                    iv_inf,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.mu),
                r.status.as_str().to_string(),
                num(r.c_value),
                num(r.gap),
                num(r.iv_inf),
                (r.iv_inf < 0.0).to_string(),
            ]
        })
        .collect();
    write_csv(
        &ctx.out.join("sweep_mu.csv"),
        &["mu", "status", "c_value", "gap", "iv_inf", "iv_negative"],
        &table,
    )?;
    let json_rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "mu": r.mu, "status": r.status.as_str(), "c_value": r.c_value,
                "gap": r.gap, "iv_inf": r.iv_inf, "iv_negative": r.iv_inf < 0.0,
            })
        })
        .collect();
    report.set("c_infty_reference", c_inf)?;
    report.set("thresholds", thresholds_json(params.dim()))?;
    report.set("margin", cfg.sweep.margin)?;
    report.set("rows", json_rows)?;
    report.write(&ctx.out.join("sweep_mu.json"))?;
    for r in &rows {
        println!(
            "mu = {:<6} {:<10} c = {:.8} gap = {:+.3e} iv_inf = {:+.3e}",
            r.mu,
            r.status.as_str(),
            r.c_value,
            r.gap,
            r.iv_inf
        );
    }
    Ok(code::OK)
}

pub fn iv_scan(ctx: &Ctx) -> Result<i32> {
    let cfg = &ctx.cfg;
    let params = cfg.problem_params()?;
    let v = cfg.potential.build()?;
    let lambdas = cfg.iv_scan.lambda.values()?;
    let mut report = Report::new("iv-scan", cfg, ctx.seed)?;
    let vals = report.timed("scan", || {
        lambdas
            .iter()
            .map(|&l| i_v_functional(&v, &params, l))
            .collect::<choquard::Result<Vec<f64>>>()
    })?;
    let (k_min, inf) = vals
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, x)| if x < acc.1 { (k, x) } else { acc });
    let rows: Vec<Vec<String>> = lambdas.iter().zip(&vals).map(|(l, x)| vec![num(*l), num(*x)]).collect();
    write_csv(&ctx.out.join("iv_scan.csv"), &["lambda", "iv"], &rows)?;

    let exploratory = matches!(v, Potential::Null { .. });
    // For the model family the functional is nonincreasing in lambda.
    let monotone = match v {
        Potential::Model { .. } if params.dim() >= 3 => {
            let mut pairs: Vec<(f64, f64)> = lambdas.iter().copied().zip(vals.iter().copied()).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            Some(pairs.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12 * w[0].1.abs()))
        }
        _ => None,
    };
    report.set("potential", cfg.potential.label())?;
    report.set("infimum", inf)?;
    report.set("argmin_lambda", lambdas[k_min])?;
    report.set("negative", inf < 0.0)?;
    report.set("monotone_nonincreasing", monotone)?;
    report.set("exploratory", exploratory)?;
    report.set("thresholds", thresholds_json(params.dim()))?;
    report.write(&ctx.out.join("iv_scan.json"))?;

    let verdict = if exploratory {
        "exploratory, no existence verdict".to_string()
    } else if inf < 0.0 {
        "negative: sufficient condition met".to_string()
    } else {
        "nonnegative on the grid".to_string()
    };
    println!(
        "iv-scan {}: inf = {inf:.6e} at lambda = {:.4e} ({verdict})",
        cfg.potential.label(),
        lambdas[k_min]
    );
    if monotone == Some(false) {
        eprintln!("I_V is not nonincreasing in lambda for the model potential");
        return Ok(code::VERIFY_FAILED);
    }
    Ok(code::OK)
}

pub fn c_infty(ctx: &Ctx) -> Result<i32> {
    let cfg = &ctx.cfg;
    let params = cfg.problem_params()?;
    let mut report = Report::new("c-infty", cfg, ctx.seed)?;
    let c = c_infty_reference(&params)?;
    let mut at = Vec::new();
    for &l in &cfg.verify.c_infty_lambdas {
        at.push(json!({ "lambda": l, "c_infty": c_infty_reference_at(&params, l)? }));
    }
    report.set("c_infty", c)?;
    report.set("profile_constant", profile_constant(&params)?)?;
    report.set("by_lambda", at)?;
    report.write(&ctx.out.join("c_infty.json"))?;
    println!("c_inf(N={}, alpha={}) = {c:.15}", params.dim(), params.alpha());
    Ok(code::OK)
}

pub struct RieszCheck {
    pub sup_rel: f64,
    pub pointwise: f64,
    pub symmetry_defect: f64,
}

/// Applies the operator to `(1 + r^2)^{-(N+alpha)/2}` and compares with
/// `A' (1 + r^2)^{-(N-alpha)/2}` on `r <= R_max / 2`.
pub fn riesz_profile_check(ctx: &Ctx, params: ProblemParams) -> Result<RieszCheck> {
    let grid = ctx.cfg.verify.riesz.build(params)?;
    let op = ctx.operator(&grid)?;
    let (n, a) = (params.dim() as f64, params.alpha());
    let a_prime = profile_constant(&params)?;
    let out = op.apply(&grid.sample(|r| (1.0 + r * r).powf(-0.5 * (n + a))))?;
    let (mut err, mut scale, mut pointwise) = (0.0f64, 0.0f64, 0.0f64);
    for (r, v) in grid.nodes().iter().zip(out.values()) {
        if *r > 0.5 * grid.r_max() {
            break;
        }
        let g = a_prime * (1.0 + r * r).powf(-0.5 * (n - a));
        err = err.max((v - g).abs());
        scale = scale.max(g);
        pointwise = pointwise.max((v - g).abs() / g);
    }
    if scale <= 0.0 {
        bail!("no grid nodes inside r <= R_max / 2");
    }
    Ok(RieszCheck {
        sup_rel: err / scale,
        pointwise,
        symmetry_defect: op.weighted_symmetry_defect(),
    })
}

pub fn riesz_selftest(ctx: &Ctx) -> Result<i32> {
    let cfg = &ctx.cfg;
    let params = cfg.problem_params()?;
    let mut report = Report::new("riesz-selftest", cfg, ctx.seed)?;
    let check = report.timed("check", || riesz_profile_check(ctx, params))?;
    let pass = check.sup_rel <= cfg.verify.riesz_tol && check.symmetry_defect <= 1e-10;
    report.set("sup_rel_error", check.sup_rel)?;
    report.set("pointwise_rel_error", check.pointwise)?;
    report.set("tolerance", cfg.verify.riesz_tol)?;
    report.set("weighted_symmetry_defect", check.symmetry_defect)?;
    report.set("pass", pass)?;
    report.write(&ctx.out.join("riesz_selftest.json"))?;
    println!(
        "[{}] riesz profile oracle: sup-rel {:.2e} (tol {:.0e}), pointwise {:.2e}, symmetry defect {:.1e}",
        if pass { "PASS" } else { "FAIL" },
        check.sup_rel,
        cfg.verify.riesz_tol,
        check.pointwise,
        check.symmetry_defect
    );
    Ok(if pass { code::OK } else { code::VERIFY_FAILED })
}
