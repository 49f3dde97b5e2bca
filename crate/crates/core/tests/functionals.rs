#![allow(clippy::excessive_precision)]

use choquard::functionals::{
    c_infty_reference, c_infty_reference_at, gradient_hardy_ratio, hardy_sup_for_weight, hardy_weighted_sup,
    i_v_functional,
};
use choquard::potentials::{tail_coefficient, thresholds};
use choquard::quad;
use choquard::solver::verify_null_solution;
use choquard::{HlsProfile, Landscape, Potential, ProblemParams, RadialGrid, RieszOperator};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

fn params(dim: usize, alpha: f64) -> ProblemParams {
    ProblemParams::new(dim, alpha).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn energy_terms_match_quadrature_oracle() {
    let p = params(3, 1.0);
    let grid = RadialGrid::new(p, 200.0, 2000, 2.0).unwrap();
    let op = RieszOperator::build(&grid).unwrap();
    let land = Landscape::new(&grid, &op, &Potential::Constant { c: 1.0 }).unwrap();
    let u = HlsProfile::new(1.0, 1.0).unwrap().sample(&grid);

    let kinetic = quad::half_line(
        |r| 4.0 * PI * 9.0 * r.powi(4) * (1.0 + r * r).powi(-5),
        &[1.0, 4.0],
        1e-13,
    );
    let mass = quad::half_line(|r| 4.0 * PI * r * r * (1.0 + r * r).powi(-3), &[1.0, 4.0], 1e-13);
    assert!(rel(mass, PI * PI / 4.0) < 1e-12);

    let t = grid.dirichlet_form(&u, &u).unwrap();
    let m = grid.inner(&u, &u).unwrap();
    assert!(rel(t, kinetic) < 1e-4, "{t} vs {kinetic}");
    assert!(rel(m, mass) < 1e-4, "{m} vs {mass}");
    let q = land.energy_q(&u).unwrap();
    assert!(rel(q, kinetic + mass) < 1e-4);

    assert!(rel(land.energy_q(&u.scaled(3.0)).unwrap(), 9.0 * q) < 1e-12);
    assert_eq!(land.energy_q(&grid.zeros()).unwrap(), 0.0);
}

#[test]
fn gradients_vanish_at_zero() {
    let grid = RadialGrid::new(params(3, 1.0), 10.0, 64, 1.0).unwrap();
    let op = RieszOperator::build(&grid).unwrap();
    let land = Landscape::new(&grid, &op, &Potential::Model { mu: 0.5 }).unwrap();
    assert!(land.grad_q(&grid.zeros()).unwrap().values().iter().all(|&x| x == 0.0));
    assert!(land.grad_d(&grid.zeros()).unwrap().values().iter().all(|&x| x == 0.0));
    assert!(land.critical_quotient(&grid.zeros()).is_err());
}

#[test]
fn hls_profile_quotient_bounded_below_by_c_infty() {
    let p = params(3, 2.0);
    let grid = RadialGrid::new(p, 200.0, 2000, 2.0).unwrap();
    let op = RieszOperator::build(&grid).unwrap();
    let land = Landscape::new(&grid, &op, &Potential::Constant { c: 1.0 }).unwrap();
    let c_inf = c_infty_reference(&p).unwrap();
    for lambda in [0.5, 1.0, 2.0] {
        let u = HlsProfile::normalized(&p, lambda).unwrap().sample(&grid);
        let c = land.critical_quotient(&u).unwrap();
        assert!(c >= c_inf - 1e-3, "lambda {lambda}: {c} < {c_inf}");
        let c2 = land.critical_quotient(&u.scaled(2.0)).unwrap();
        assert!(rel(c2, c) < 1e-10);
    }
}

#[test]
fn normalized_profile_has_unit_constraint() {
    let p = params(3, 2.0);
    let grid = RadialGrid::new(p, 200.0, 2000, 2.0).unwrap();
    let op = RieszOperator::build(&grid).unwrap();
    let u = HlsProfile::normalized(&p, 1.0).unwrap().sample(&grid);
    let d = op.constraint_d(&u).unwrap();
    assert!((d - 1.0).abs() < 2e-3, "{d}");
}

/// `c_inf` from the Gamma-function closed form of the two profile integrals.
fn c_infty_closed_form(dim: usize, alpha: f64) -> f64 {
    let n = dim as f64;
    let a_prime = gamma(0.5 * (n - alpha)) / (2f64.powf(alpha) * gamma(0.5 * (n + alpha)));
    let j = PI.powf(0.5 * n) * gamma(0.5 * n) / gamma(n);
    let p = 1.0 + alpha / n;
    j * (a_prime * j).powf(-1.0 / p)
}

#[test]
fn c_infty_pinned_values() {
    let pinned = [
        (3, 1.0, 2.10781473051081182),
        (3, 2.0, 2.77439730835706339),
        (3, 0.5, 1.54956755014229670),
        (4, 2.0, 4.72182067733393896),
        (4, 1.0, 2.66027603889101922),
        (5, 2.0, 6.85726284059904185),
    ];
    for (dim, alpha, value) in pinned {
        let p = params(dim, alpha);
        let c = c_infty_reference(&p).unwrap();
        assert!(c > 0.0);
        assert!(rel(c, value) < 1e-10, "N={dim} alpha={alpha}: {c} vs {value}");
        assert!(rel(c_infty_closed_form(dim, alpha), value) < 1e-12);
        for lambda in [0.5, 2.0] {
            assert!(rel(c_infty_reference_at(&p, lambda).unwrap(), c) < 1e-6);
        }
    }
}

#[test]
fn i_v_of_unit_potential_is_kinetic_energy() {
    for dim in [3, 4, 5] {
        let p = params(dim, 1.0);
        let v = Potential::Constant { c: 1.0 };
        let base = i_v_functional(&v, &p, 1.0).unwrap();
        // int |grad u_1|^2 for the normalised profile, by 1-D quadrature.
        let n = dim as f64;
        let amp = HlsProfile::normalized(&p, 1.0).unwrap().amplitude;
        let area = 2.0 * PI.powf(0.5 * n) / gamma(0.5 * n);
        let grad = |r: f64| amp * n * r * (1.0 + r * r).powf(-0.5 * n - 1.0);
        let oracle = quad::half_line(|r| area * r.powf(n - 1.0) * grad(r).powi(2), &[1.0, 4.0], 1e-12);
        assert!(base > 0.0);
        assert!(rel(base, oracle) < 1e-8, "N={dim}: {base} vs {oracle}");
        for lambda in [0.01, 0.3, 7.0, 300.0] {
            assert!(rel(i_v_functional(&v, &p, lambda).unwrap(), base) < 1e-8);
        }
    }
}

#[test]
fn i_v_two_dimensional_direct_form() {
    let p = params(2, 1.0);
    let one = i_v_functional(&Potential::Constant { c: 1.0 }, &p, 2.0).unwrap();
    let model = i_v_functional(&Potential::Model { mu: 0.5 }, &p, 2.0).unwrap();
    assert!(one > 0.0 && model < one);
    assert!(i_v_functional(&Potential::Constant { c: 1.0 }, &p, 0.0).is_err());
}

#[test]
fn i_v_model_is_nonincreasing_and_sign_follows_threshold() {
    let p = params(3, 1.0);
    let lambdas: Vec<f64> = (0..41).map(|k| 10f64.powf(-2.0 + 0.15 * k as f64)).collect();
    for mu in [0.2, 0.5, 0.6, 1.0, 2.0] {
        let vals: Vec<f64> = lambdas
            .iter()
            .map(|&l| i_v_functional(&Potential::Model { mu }, &p, l).unwrap())
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] <= w[0] + 1e-10 * w[0].abs().max(1.0), "mu {mu}: {w:?}");
        }
        let negative = vals.iter().any(|&v| v < 0.0);
        assert_eq!(negative, mu > 9.0 / 16.0, "mu {mu}");
    }
}

#[test]
fn gradient_hardy_identity_holds() {
    for dim in 3..=6 {
        for lambda in [0.5, 1.0, 2.0] {
            let ratio = gradient_hardy_ratio(dim, lambda).unwrap();
            assert!(rel(ratio, thresholds(dim).sufficient) < 1e-6, "N={dim} {ratio}");
        }
    }
}

#[test]
fn hardy_sup_of_inverse_square_approaches_sharp_constant_from_below() {
    let c = 0.3;
    let sharp = 4.0 * c;
    let mut prev = 0.0;
    for n in [100, 200, 400, 800] {
        let grid = RadialGrid::new(params(3, 1.0), 50.0, n, 2.0).unwrap();
        let est = hardy_sup_for_weight(&grid, |r| c / (r * r), 1e-10, 20_000).unwrap();
        assert!(est.value < sharp, "n={n}: {} >= {sharp}", est.value);
        assert!(est.value > prev, "n={n}: not increasing");
        prev = est.value;
    }
    assert!(prev > 0.5 * sharp);
}

#[test]
fn hardy_sup_examples() {
    let grid = RadialGrid::new(params(3, 1.0), 200.0, 800, 2.0).unwrap();
    let flat = hardy_weighted_sup(&grid, &Potential::Constant { c: 2.0 }, 1e-10, 1000).unwrap();
    assert_eq!(flat.value, 0.0);
    let weak = hardy_weighted_sup(&grid, &Potential::Model { mu: 0.1 }, 1e-10, 20_000).unwrap();
    assert!(weak.value > 0.0 && weak.value < 1.0, "{}", weak.value);
}

#[test]
fn constant_potential_is_flagged_degenerate() {
    let p = params(3, 1.0);
    let grid = RadialGrid::new(p, 30.0, 200, 1.5).unwrap();
    let op = RieszOperator::build(&grid).unwrap();
    let land = Landscape::new(&grid, &op, &Potential::Constant { c: 1.0 }).unwrap();
    let u = HlsProfile::new(1.0, 1.0).unwrap().sample(&grid);
    let rep = land.identity_report(&u).unwrap();
    assert!(rep.constant_potential);
    assert_eq!(rep.tilt, 0.0);
    // The reduced identity cannot hold for a nontrivial field.
    assert!(rep.pohozaev_reduced_residual > 0.99);
    let model = Landscape::new(&grid, &op, &Potential::Model { mu: 1.0 }).unwrap();
    assert!(!model.identity_report(&u).unwrap().constant_potential);
}

#[test]
fn null_solution_satisfies_equation_identities() {
    let p = params(3, 2.0);
    assert_eq!(
        tail_coefficient(&Potential::Null { lambda: 1.0 }, 3).unwrap().value,
        -6.0
    );
    let grid = RadialGrid::new(p, 40.0, 4000, 2.0).unwrap();
    let op = RieszOperator::build(&grid).unwrap();
    let check = verify_null_solution(&grid, &op, 1.0, 20.0).unwrap();
    assert!(check.sup_interior_residual < 1e-3, "{}", check.sup_interior_residual);
    let rep = check.report;
    assert!(rep.nehari_residual < 1e-3, "{rep:?}");
    assert!(rep.pohozaev_residual < 1e-3, "{rep:?}");
    assert!(rep.pohozaev_reduced_residual < 1e-3, "{rep:?}");
    // Testing the equation against u gives int |grad u|^2 + (V - 1) u^2 = 0.
    let mass = grid.inner(&check.u, &check.u).unwrap();
    assert!(
        (check.q - mass).abs() < 1e-2 * check.kinetic,
        "q {} mass {mass}",
        check.q
    );
}
