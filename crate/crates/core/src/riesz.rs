//! Riesz potential `I_alpha * f` restricted to radial functions.
//!
//! Radially, `(I_alpha * f)(r) = A |S^{N-1}| int_0^inf m(r, s) f(s) s^{N-1} ds`,
//! where `m(r, s)` is the mean of `|x - y|^{alpha - N}` over the sphere
//! `|y| = s` with `|x| = r`. The discrete operator is the piecewise-constant
//! Galerkin matrix
//!
//! ```text
//! B_ij = A |S|^2 int_{cell i} int_{cell j} m(r, s) r^{N-1} s^{N-1} ds dr,
//! K_ij = B_ij / w_i,
//! ```
//!
//! so `K_ij w_i = K_ji w_j` holds by construction. Cells closer than two
//! indices are integrated with nested tanh-sinh rules that absorb the weak
//! singularity on `r = s`; the rest use tensor Gauss-Legendre rules whose
//! order grows as the pair gets closer.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{sphere_area, Field, GridKey, ProblemParams, RadialGrid};
use crate::quad;
use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

pub const CACHE_MAGIC: &[u8; 4] = b"CHQK";
pub const CACHE_VERSION: u32 = 1;

/// `Gamma((N - alpha)/2) / (2^alpha pi^{N/2} Gamma(alpha/2))`.
pub fn riesz_normalization(params: &ProblemParams) -> f64 {
    let n = params.dim() as f64;
    let a = params.alpha();
    gamma(0.5 * (n - a)) / (2f64.powf(a) * PI.powf(0.5 * n) * gamma(0.5 * a))
}

/// The constant `A'` in `I_alpha * (1 + r^2)^{-(N+alpha)/2} = A' (1 + r^2)^{-(N-alpha)/2}`.
///
/// Evaluated at `r = 0`, where the spherical mean is exactly `s^{alpha - N}`,
/// by a one-dimensional quadrature.
pub fn profile_constant(params: &ProblemParams) -> Result<f64> {
    let n = params.dim() as f64;
    let a = params.alpha();
    let integrand = |s: f64| s.powf(a - 1.0) * (1.0 + s * s).powf(-0.5 * (n + a));
    let v = quad::half_line(integrand, &[1.0], 1e-14);
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Quadrature("profile convolution constant".into()));
    }
    Ok(riesz_normalization(params) * sphere_area(params.dim()) * v)
}

/// Spherical mean `m_alpha(r, s)` of `|x - y|^{alpha - N}` over `|y| = s`, `|x| = r`.
pub fn angular_kernel(params: &ProblemParams, r: f64, s: f64) -> Result<f64> {
    if !(r > 0.0) || !(s >= 0.0) {
        return Err(Error::InvalidParams(format!("need r > 0, s >= 0 (got r={r}, s={s})")));
    }
    if r == s {
        return Err(Error::InvalidParams(
            "r = s is the weak singularity; use the cell-integrated kernel".into(),
        ));
    }
    let v = spherical_mean(params, r, s);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Quadrature(format!("angular kernel at r={r}, s={s}")))
    }
}

/// The angular integral done directly by adaptive quadrature in the polar
/// angle, with no closed-form shortcut. Used to cross-check the fast paths.
pub fn angular_kernel_quadrature(params: &ProblemParams, r: f64, s: f64) -> Result<f64> {
    let dim = params.dim();
    if dim == 1 {
        return angular_kernel(params, r, s);
    }
    angular_quadrature(dim, params.alpha(), r, s)
        .ok_or_else(|| Error::Quadrature(format!("angular kernel at r={r}, s={s}")))
}

fn angular_quadrature(dim: usize, alpha: f64, r: f64, s: f64) -> Option<f64> {
    let nf = dim as f64;
    let expo = 0.5 * (alpha - nf);
    let d2 = (r - s) * (r - s);
    let rs4 = 4.0 * r * s;
    let ratio = (ln_gamma(0.5 * nf) - ln_gamma(0.5 * (nf - 1.0))).exp() / PI.sqrt();
    let f = |th: f64| {
        let h = (0.5 * th).sin();
        (d2 + rs4 * h * h).powf(expo) * th.sin().powi(dim as i32 - 2)
    };
    // Split near theta = 0 where the integrand peaks when r ~ s.
    let peak = ((r - s).abs() / (r * s).sqrt()).clamp(1e-12, 1.0);
    let mut total = 0.0;
    let mut lo = 0.0;
    for hi in [peak, 4.0 * peak, 16.0 * peak, PI] {
        if hi <= lo || hi > PI {
            continue;
        }
        total += quad::adaptive_gk15(f, lo, hi, 1e-12, 1e-12, 4000)?;
        lo = hi;
    }
    if lo < PI {
        total += quad::adaptive_gk15(f, lo, PI, 1e-12, 1e-12, 4000)?;
    }
    Some(ratio * total)
}

/// `(a^g - b^g) / g` for `a > b > 0`, stable as `g -> 0`.
fn power_difference(a: f64, b: f64, g: f64) -> f64 {
    let l = (a / b).ln();
    let x = g * l;
    if x == 0.0 {
        l
    } else {
        b.powf(g) * l * (x.exp_m1() / x)
    }
}

fn hypergeometric_2f1(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..2000 {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Infallible spherical mean; returns `inf` on the diagonal.
pub(crate) fn spherical_mean(params: &ProblemParams, r: f64, s: f64) -> f64 {
    let dim = params.dim();
    let alpha = params.alpha();
    let nf = dim as f64;
    if s == 0.0 {
        return r.powf(alpha - nf);
    }
    if r == 0.0 {
        return s.powf(alpha - nf);
    }
    if r == s {
        return f64::INFINITY;
    }
    match dim {
        1 => 0.5 * ((r - s).abs().powf(alpha - 1.0) + (r + s).powf(alpha - 1.0)),
        3 => power_difference(r + s, (r - s).abs(), alpha - 1.0) / (2.0 * r * s),
        _ => {
            let (big, small) = if r > s { (r, s) } else { (s, r) };
            let z = (small / big).powi(2);
            if z <= 0.5 {
                big.powf(alpha - nf) * hypergeometric_2f1(0.5 * (nf - alpha), 0.5 * (2.0 - alpha), 0.5 * nf, z)
            } else {
                angular_quadrature(dim, alpha, r, s).unwrap_or(f64::NAN)
            }
        }
    }
}

/// `(t^g - 1) / g`, tending to `ln t` as `g -> 0`.
fn regularized_power(t: f64, g: f64) -> f64 {
    let l = t.ln();
    let x = g * l;
    if x == 0.0 {
        l
    } else {
        l * (x.exp_m1() / x)
    }
}

/// Antiderivative of `(t - r) E(t)` with `E` the regularized power; zero at `t = 0`.
fn shell_antiderivative(t: f64, r: f64, g: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let e = regularized_power(t, g);
    t * t * (e - 0.5) / (g + 2.0) - r * t * (e - 1.0) / (g + 1.0)
}

/// Closed form of `int_{s0}^{s1} m(r, s) s^{N-1} ds` where one exists
/// (N = 1 and N = 3). `g = alpha - 1`.
fn shell_integral(dim: usize, g: f64, r: f64, s0: f64, s1: f64) -> Option<f64> {
    match dim {
        1 => {
            let a = g + 1.0;
            let outer = ((r + s1).powf(a) - (r + s0).powf(a)) / a;
            let near = if s0 >= r {
                ((s1 - r).powf(a) - (s0 - r).powf(a)) / a
            } else if s1 <= r {
                ((r - s0).powf(a) - (r - s1).powf(a)) / a
            } else {
                ((r - s0).powf(a) + (s1 - r).powf(a)) / a
            };
            Some(0.5 * (outer + near))
        }
        3 => {
            // s m(r,s) s = s [E(r+s) - E(|r-s|)] / (2r) with E(t) = (t^g - 1)/g.
            let h = |t: f64, sign: f64| shell_antiderivative(t, sign * r, g);
            let plus = h(r + s1, 1.0) - h(r + s0, 1.0);
            // s > r: t = s - r, integrand (t + r) E(t). s < r: t = r - s, integrand
            // (r - t) E(t) with reversed limits.
            let minus = if s0 >= r {
                h(s1 - r, -1.0) - h(s0 - r, -1.0)
            } else if s1 <= r {
                h(r - s1, 1.0) - h(r - s0, 1.0)
            } else {
                h(s1 - r, -1.0) - h(r - s0, 1.0)
            };
            Some((plus - minus) / (2.0 * r))
        }
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct RieszOperator {
    params: ProblemParams,
    key: GridKey,
    normalization: f64,
    n: usize,
    /// Row-major `K_ij`.
    kernel: Vec<f64>,
    weights: Vec<f64>,
}

fn gl_order(ratio: f64) -> usize {
    if ratio < 3.0 {
        8
    } else if ratio < 6.0 {
        6
    } else if ratio < 12.0 {
        4
    } else if ratio < 30.0 {
        3
    } else {
        2
    }
}

struct Assembler<'a> {
    params: ProblemParams,
    faces: &'a [f64],
    nodes: &'a [f64],
    rules: Vec<(Vec<f64>, Vec<f64>)>,
    pref: f64,
}

impl Assembler<'_> {
    fn weight(&self, r: f64) -> f64 {
        r.powi(self.params.dim() as i32 - 1)
    }

    fn far(&self, i: usize, j: usize) -> f64 {
        let (a0, a1) = (self.faces[i], self.faces[i + 1]);
        let (b0, b1) = (self.faces[j], self.faces[j + 1]);
        let hmax = (a1 - a0).max(b1 - b0);
        let ratio = (self.nodes[i] - self.nodes[j]).abs() / hmax;
        let (x, w) = &self.rules[gl_order(ratio)];
        let (ca, ha) = (0.5 * (a0 + a1), 0.5 * (a1 - a0));
        let (cb, hb) = (0.5 * (b0 + b1), 0.5 * (b1 - b0));
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            let r = ca + ha * xi;
            let mut inner = 0.0;
            for (xj, wj) in x.iter().zip(w) {
                let s = cb + hb * xj;
                inner += wj * spherical_mean(&self.params, r, s) * self.weight(s);
            }
            acc += wi * inner * self.weight(r);
        }
        self.pref * acc * ha * hb
    }

    fn near(&self, i: usize, j: usize) -> f64 {
        let (a0, a1) = (self.faces[i], self.faces[i + 1]);
        let (b0, b1) = (self.faces[j], self.faces[j + 1]);
        let tol = 1e-11;
        let dim = self.params.dim();
        let gamma = self.params.alpha() - 1.0;
        let inner = |r: f64| -> f64 {
            if let Some(v) = shell_integral(dim, gamma, r, b0, b1) {
                return v;
            }
            let f = |s: f64| spherical_mean(&self.params, r, s) * self.weight(s);
            if r > b0 && r < b1 {
                quad::tanh_sinh(f, b0, r, tol, 5) + quad::tanh_sinh(f, r, b1, tol, 5)
            } else {
                quad::tanh_sinh(f, b0, b1, tol, 5)
            }
        };
        let outer = quad::tanh_sinh(|r| inner(r) * self.weight(r), a0, a1, tol, 6);
        self.pref * outer
    }

    /// Upper-triangular part `B_ij`, `j >= i`, of row `i`.
    fn row(&self, i: usize) -> Vec<f64> {
        let n = self.nodes.len();
        (i..n)
            .map(|j| if j - i <= 1 { self.near(i, j) } else { self.far(i, j) })
            .collect()
    }
}

impl RieszOperator {
    pub fn build(grid: &RadialGrid) -> Result<Self> {
        Self::build_with(grid, Execution::default())
    }

    pub fn build_with(grid: &RadialGrid, exec: Execution) -> Result<Self> {
        let params = *grid.params();
        let area = sphere_area(params.dim());
        let normalization = riesz_normalization(&params);
        let asm = Assembler {
            params,
            faces: grid.faces(),
            nodes: grid.nodes(),
            rules: (0..=8)
                .map(|q| {
                    if q == 0 {
                        (vec![], vec![])
                    } else {
                        quad::gauss_legendre(q)
                    }
                })
                .collect(),
            pref: normalization * area * area,
        };
        let n = grid.len();
        let upper = exec.map_indices(n, |i| asm.row(i));
        let weights = grid.weights().to_vec();
        let mut kernel = vec![0.0; n * n];
        for (i, row) in upper.iter().enumerate() {
            for (off, &b) in row.iter().enumerate() {
                let j = i + off;
                if !(b.is_finite() && b >= 0.0) {
                    return Err(Error::Quadrature(format!("kernel entry ({i}, {j}) = {b}")));
                }
                kernel[i * n + j] = b / weights[i];
                kernel[j * n + i] = b / weights[j];
            }
        }
        Ok(Self {
            params,
            key: grid.key(),
            normalization,
            n,
            kernel,
            weights,
        })
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn key(&self) -> GridKey {
        self.key
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Riesz normalization constant `A`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.kernel[i * self.n + j]
    }

    /// Largest relative violation of `K_ij w_i = K_ji w_j`.
    pub fn weighted_symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let a = self.entry(i, j) * self.weights[i];
                let b = self.entry(j, i) * self.weights[j];
                let scale = a.abs().max(b.abs());
                if scale > 0.0 {
                    worst = worst.max((a - b).abs() / scale);
                }
            }
        }
        worst
    }

    fn check(&self, f: &Field) -> Result<()> {
        if f.key() != self.key {
            Err(Error::GridMismatch)
        } else {
            Ok(())
        }
    }

    /// `(I_alpha * f)(r_i) ~ sum_j K_ij f_j`.
    pub fn apply(&self, f: &Field) -> Result<Field> {
        self.apply_with(f, Execution::default())
    }

    pub fn apply_with(&self, f: &Field, exec: Execution) -> Result<Field> {
        self.check(f)?;
        let mut out = f.clone();
        let v = self.apply_raw(f.values(), exec);
        out.values_mut().copy_from_slice(&v);
        Ok(out)
    }

    pub(crate) fn apply_raw(&self, f: &[f64], exec: Execution) -> Vec<f64> {
        let n = self.n;
        // Row-chunked so that small grids do not pay scheduling overhead.
        const CHUNK: usize = 64;
        let chunks = n.div_ceil(CHUNK);
        let parts = exec.map_indices(chunks, |c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            (lo..hi)
                .map(|i| {
                    let row = &self.kernel[i * n..(i + 1) * n];
                    row.iter().zip(f).map(|(k, x)| k * x).sum::<f64>()
                })
                .collect::<Vec<f64>>()
        });
        parts.concat()
    }

    /// `integral (I_alpha * |u|^p) |u|^p`.
    pub fn constraint_d(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        if u.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("constraint argument"));
        }
        Ok(self.constraint_raw(u.values(), Execution::default()))
    }

    pub(crate) fn constraint_raw(&self, u: &[f64], exec: Execution) -> f64 {
        let p = self.params.p();
        let up: Vec<f64> = u.iter().map(|v| v.abs().powf(p)).collect();
        let conv = self.apply_raw(&up, exec);
        conv.iter()
            .zip(&up)
            .zip(&self.weights)
            .map(|((c, a), w)| c * a * w)
            .sum()
    }

    pub fn cache_file_name(grid: &RadialGrid) -> String {
        let p = grid.params();
        format!(
            "riesz_v{CACHE_VERSION}_N{}_a{:016x}_R{:016x}_n{}_g{:016x}.bin",
            p.dim(),
            p.alpha().to_bits(),
            grid.r_max().to_bits(),
            grid.len(),
            grid.grading().to_bits()
        )
    }

    pub fn save(&self, path: &Path, grid: &RadialGrid) -> Result<()> {
        if grid.key() != self.key {
            return Err(Error::GridMismatch);
        }
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(CACHE_MAGIC)?;
        out.write_all(&CACHE_VERSION.to_le_bytes())?;
        out.write_all(&(self.params.dim() as u64).to_le_bytes())?;
        out.write_all(&self.params.alpha().to_le_bytes())?;
        out.write_all(&grid.r_max().to_le_bytes())?;
        out.write_all(&(self.n as u64).to_le_bytes())?;
        out.write_all(&grid.grading().to_le_bytes())?;
        for v in &self.kernel {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    /// Load a cached kernel, verifying that it was assembled for `grid`.
    pub fn load(path: &Path, grid: &RadialGrid) -> Result<Self> {
        let mut input = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Cache("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != CACHE_VERSION {
            return Err(Error::Cache("version mismatch".into()));
        }
        let mut next = |input: &mut BufReader<File>| -> Result<[u8; 8]> {
            input.read_exact(&mut b8)?;
            Ok(b8)
        };
        let dim = u64::from_le_bytes(next(&mut input)?) as usize;
        let alpha = f64::from_le_bytes(next(&mut input)?);
        let r_max = f64::from_le_bytes(next(&mut input)?);
        let n = u64::from_le_bytes(next(&mut input)?) as usize;
        let grading = f64::from_le_bytes(next(&mut input)?);
        let key = GridKey {
            dim,
            alpha_bits: alpha.to_bits(),
            r_max_bits: r_max.to_bits(),
            n,
            grading_bits: grading.to_bits(),
        };
        if key != grid.key() {
            return Err(Error::Cache("cache key does not match grid".into()));
        }
        let mut bytes = vec![0u8; n * n * 8];
        input.read_exact(&mut bytes)?;
        let kernel: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if kernel.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Cache("corrupt kernel entries".into()));
        }
        Ok(Self {
            params: *grid.params(),
            key,
            normalization: riesz_normalization(grid.params()),
            n,
            kernel,
            weights: grid.weights().to_vec(),
        })
    }

    /// Build, going through an on-disk cache directory when one is given.
    /// Cache failures fall back to assembly.
    pub fn build_cached(grid: &RadialGrid, cache_dir: Option<&Path>, exec: Execution) -> Result<Self> {
        let Some(dir) = cache_dir else {
            return Self::build_with(grid, exec);
        };
        let path: PathBuf = dir.join(Self::cache_file_name(grid));
        if let Ok(op) = Self::load(&path, grid) {
            return Ok(op);
        }
        let op = Self::build_with(grid, exec)?;
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = op.save(&path, grid);
        }
        Ok(op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dim: usize, alpha: f64) -> ProblemParams {
        ProblemParams::new(dim, alpha).unwrap()
    }

    #[test]
    fn normalization_values() {
        let a = riesz_normalization(&params(3, 2.0));
        assert!((a - 1.0 / (4.0 * PI)).abs() < 1e-15);
        let a = riesz_normalization(&params(4, 2.0));
        assert!((a - 1.0 / (4.0 * PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn kernel_at_center_and_shell_theorem() {
        let p = params(3, 2.0);
        assert!((angular_kernel(&p, 1.0, 0.5).unwrap() - 1.0).abs() < 1e-13);
        assert!((angular_kernel(&p, 0.5, 1.0).unwrap() - 1.0).abs() < 1e-13);
        let p = params(4, 1.5);
        assert!((angular_kernel(&p, 2.0, 0.0).unwrap() - 2f64.powf(-2.5)).abs() < 1e-15);
        assert!(angular_kernel(&p, 1.0, 1.0).is_err());
    }

    #[test]
    fn fast_paths_match_quadrature() {
        for (dim, alpha) in [(3, 0.5), (3, 1.0), (3, 2.5), (2, 0.7), (4, 1.5), (5, 3.3)] {
            let p = params(dim, alpha);
            for (r, s) in [(1.0, 0.3), (1.0, 0.9), (2.0, 1.3), (0.2, 5.0), (1.0, 1.02)] {
                let a = angular_kernel(&p, r, s).unwrap();
                let b = angular_kernel_quadrature(&p, r, s).unwrap();
                assert!(
                    (a - b).abs() <= 1e-9 * a.abs(),
                    "N={dim} a={alpha} r={r} s={s}: {a} vs {b}"
                );
                let c = angular_kernel(&p, s, r).unwrap();
                assert!((a - c).abs() <= 1e-12 * a.abs());
            }
        }
    }

    #[test]
    fn shell_closed_forms_match_quadrature() {
        for (dim, alpha) in [
            (3, 0.5),
            (3, 1.0),
            (3, 1.0 + 1e-9),
            (3, 2.0),
            (3, 2.7),
            (1, 0.3),
            (1, 0.8),
        ] {
            for (r, s0, s1) in [
                (1.0, 0.2, 0.5),
                (1.0, 1.5, 2.0),
                (1.0, 0.9, 1.1),
                (0.01, 0.0, 0.02),
                (3.0, 0.0, 3.0),
            ] {
                let closed = shell_integral(dim, alpha - 1.0, r, s0, s1).unwrap();
                // Integrate in the distance t = |r - s| so the singular end is exact.
                let g = alpha - 1.0;
                let by_distance = |t: f64, s: f64| -> f64 {
                    if dim == 1 {
                        0.5 * (t.powf(g) + (r + s).powf(g))
                    } else {
                        s * (regularized_power(r + s, g) - regularized_power(t, g)) / (2.0 * r)
                    }
                };
                let mut q = 0.0;
                if s1 > r {
                    let lo = (s0 - r).max(0.0);
                    q += quad::tanh_sinh(|t| by_distance(t, r + t), lo, s1 - r, 1e-15, 10);
                }
                if s0 < r {
                    let lo = (r - s1).max(0.0);
                    q += quad::tanh_sinh(|t| by_distance(t, r - t), lo, r - s0, 1e-15, 10);
                }
                assert!(
                    (closed - q).abs() < 1e-9 * q.abs(),
                    "N={dim} a={alpha} r={r} [{s0},{s1}]: {closed} vs {q}"
                );
            }
        }
    }

    #[test]
    fn symmetry_and_positivity() {
        let p = params(3, 1.0);
        let g = RadialGrid::new(p, 10.0, 64, 1.5).unwrap();
        let op = RieszOperator::build(&g).unwrap();
        assert!(op.weighted_symmetry_defect() < 1e-10);
        assert!(op.kernel.iter().all(|k| *k >= 0.0 && k.is_finite()));
        let z = op.apply(&g.zeros()).unwrap();
        assert!(z.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn ball_indicator_at_origin() {
        // I_alpha * 1_{B_R} at 0 is A |S| R^alpha / alpha.
        for (dim, alpha) in [(3, 2.0), (3, 0.5), (2, 1.0)] {
            let p = params(dim, alpha);
            let g = RadialGrid::new(p, 1.0, if dim == 3 { 400 } else { 60 }, 1.0).unwrap();
            let op = RieszOperator::build(&g).unwrap();
            let v = op.apply(&g.sample(|_| 1.0)).unwrap();
            let exact = riesz_normalization(&p) * sphere_area(dim) / alpha;
            let rel = (v.values()[0] - exact).abs() / exact;
            assert!(rel < 2e-2, "N={dim} alpha={alpha}: {} vs {exact}", v.values()[0]);
        }
    }

    #[test]
    fn homogeneity_of_constraint() {
        let p = params(3, 1.0);
        let g = RadialGrid::new(p, 10.0, 80, 1.0).unwrap();
        let op = RieszOperator::build(&g).unwrap();
        let u = g.sample(|r| (1.0 + r * r).powf(-1.5));
        let d1 = op.constraint_d(&u).unwrap();
        let d2 = op.constraint_d(&u.scaled(2.0)).unwrap();
        let expect = 2f64.powf(2.0 * p.p()) * d1;
        assert!((d2 - expect).abs() <= 1e-12 * expect);
        assert_eq!(op.constraint_d(&g.zeros()).unwrap(), 0.0);
    }

    #[test]
    fn cache_roundtrip() {
        let p = params(3, 1.0);
        let g = RadialGrid::new(p, 10.0, 32, 1.0).unwrap();
        let op = RieszOperator::build(&g).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(RieszOperator::cache_file_name(&g));
        op.save(&path, &g).unwrap();
        let back = RieszOperator::load(&path, &g).unwrap();
        assert_eq!(back.kernel, op.kernel);
        let other = RadialGrid::new(p, 11.0, 32, 1.0).unwrap();
        assert!(RieszOperator::load(&path, &other).is_err());
    }

    #[test]
    fn profile_constant_matches_gamma_form() {
        for (dim, alpha) in [(3, 2.0), (3, 1.0), (3, 0.5), (4, 1.0), (5, 2.0), (1, 0.5)] {
            let p = params(dim, alpha);
            let n = dim as f64;
            let closed = gamma(0.5 * (n - alpha)) / (2f64.powf(alpha) * gamma(0.5 * (n + alpha)));
            let q = profile_constant(&p).unwrap();
            assert!((q - closed).abs() < 1e-11 * closed, "N={dim} a={alpha}: {q} {closed}");
        }
    }
}
