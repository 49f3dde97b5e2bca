//! One-dimensional quadrature rules.
//!
//! The double-exponential rules (`tanh_sinh`, `exp_sinh`) are the workhorses:
//! they tolerate integrable endpoint singularities, which is exactly what the
//! weakly singular Riesz kernel and the Hardy weight `1/|x|^2` produce.
//! `adaptive_gk15` is used for smooth angular integrals, and `gauss_legendre`
//! supplies fixed tensor rules for far-field kernel cells.

use std::f64::consts::FRAC_PI_2;

const TANH_SINH_TMAX: f64 = 4.0;
const EXP_SINH_TMAX: f64 = 5.0;
const MIN_LEVELS: u32 = 3;

/// Tanh-sinh rule on the finite interval `[a, b]`.
///
/// Nodes are generated so that the distance to the nearer endpoint is
/// computed without cancellation, so integrands like `(x - a)^(-1/2)` are
/// handled to full precision.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, max_level: u32) -> f64 {
    if a == b {
        return 0.0;
    }
    let len = b - a;
    let half = 0.5 * len;
    let eval = |t: f64| -> f64 {
        let s = FRAC_PI_2 * t.sinh();
        let x = if s <= 0.0 {
            a + len / (1.0 + (-2.0 * s).exp())
        } else {
            b - len / (1.0 + (2.0 * s).exp())
        };
        if x <= a.min(b) || x >= a.max(b) {
            return 0.0;
        }
        let ch = s.cosh();
        let w = half * FRAC_PI_2 * t.cosh() / (ch * ch);
        if w == 0.0 || !w.is_finite() {
            return 0.0;
        }
        let fx = f(x);
        if fx.is_finite() {
            w * fx
        } else {
            0.0
        }
    };

    let mut h = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1.0;
    while k * h <= TANH_SINH_TMAX {
        sum += eval(k * h) + eval(-k * h);
        k += 1.0;
    }
    let mut estimate = h * sum;
    for level in 1..=max_level {
        h *= 0.5;
        let mut add = 0.0;
        let mut k = 1.0;
        while k * h <= TANH_SINH_TMAX {
            add += eval(k * h) + eval(-k * h);
            k += 2.0;
        }
        sum += add;
        let next = h * sum;
        let diff = (next - estimate).abs();
        estimate = next;
        if level >= MIN_LEVELS && diff <= rel_tol * estimate.abs() + 1e-300 {
            break;
        }
    }
    estimate
}

/// Exp-sinh rule on `[a, +inf)`.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, a: f64, rel_tol: f64, max_level: u32) -> f64 {
    let eval = |t: f64| -> f64 {
        let e = (FRAC_PI_2 * t.sinh()).exp();
        if !e.is_finite() || e == 0.0 {
            return 0.0;
        }
        let x = a + e;
        let w = FRAC_PI_2 * t.cosh() * e;
        let fx = f(x);
        if fx.is_finite() && w.is_finite() {
            w * fx
        } else {
            0.0
        }
    };
    let mut h = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1.0;
    while k * h <= EXP_SINH_TMAX {
        sum += eval(k * h) + eval(-k * h);
        k += 1.0;
    }
    let mut estimate = h * sum;
    for level in 1..=max_level {
        h *= 0.5;
        let mut add = 0.0;
        let mut k = 1.0;
        while k * h <= EXP_SINH_TMAX {
            add += eval(k * h) + eval(-k * h);
            k += 2.0;
        }
        sum += add;
        let next = h * sum;
        let diff = (next - estimate).abs();
        estimate = next;
        if level >= MIN_LEVELS && diff <= rel_tol * estimate.abs() + 1e-300 {
            break;
        }
    }
    estimate
}

/// Integral over `[0, inf)` split at the given interior break points.
///
/// Each finite piece uses tanh-sinh and the tail uses exp-sinh. Break points
/// should sit at the length scales where the integrand changes character.
pub fn half_line<F: Fn(f64) -> f64>(f: F, breaks: &[f64], rel_tol: f64) -> f64 {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|b| *b > 0.0 && b.is_finite()).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let mut total = 0.0;
    let mut lo = 0.0;
    for &b in &pts {
        total += tanh_sinh(&f, lo, b, rel_tol, 10);
        lo = b;
    }
    total + exp_sinh(&f, lo, rel_tol, 10)
}

const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK15_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK15_NODES[i];
        let s = f(c - x) + f(c + x);
        kronrod += GK15_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature.
///
/// Returns `None` if the error target is not reached within `max_intervals`.
pub fn adaptive_gk15<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Option<f64> {
    let (v, e) = gk15(&f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    loop {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Some(total);
        }
        if pieces.len() >= max_intervals {
            return None;
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (lo, hi, _, _) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
