//! External potentials `V(r)` and the derived radial data used by the
//! identities: the tilt `r V'(r)` and the tail coefficient of `(1 - V) r^2`.

use crate::error::{Error, Result};
use crate::grid::{Field, RadialGrid};
use std::io::Read;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Constant {
        c: f64,
    },
    /// `1 - mu / (1 + r^2)`.
    Model {
        mu: f64,
    },
    /// `1 + N (2 r^2 - N lambda^2) / (r^2 + lambda^2)^2`. Admits an explicit
    /// multiple of the extremal profile as a solution.
    Null {
        lambda: f64,
    },
    Tabulated(TabulatedPotential),
}

impl Potential {
    pub fn validate(&self) -> Result<()> {
        match self {
            Potential::Constant { c } if !c.is_finite() => {
                Err(Error::InvalidParams(format!("constant potential {c} is not finite")))
            }
            Potential::Model { mu } if !(*mu > 0.0 && mu.is_finite()) => {
                Err(Error::InvalidParams(format!("model potential needs mu > 0, got {mu}")))
            }
            Potential::Null { lambda } if !(*lambda > 0.0 && lambda.is_finite()) => Err(Error::InvalidParams(format!(
                "null potential needs lambda > 0, got {lambda}"
            ))),
            _ => Ok(()),
        }
    }

    /// `V(r)` in dimension `dim`. Tabulated potentials are clamped to their
    /// end values outside the table; [`eval_potential`] rejects that case.
    pub fn value(&self, dim: usize, r: f64) -> f64 {
        let a = r * r;
        match self {
            Potential::Constant { c } => *c,
            Potential::Model { mu } => 1.0 - mu / (1.0 + a),
            Potential::Null { lambda } => {
                let n = dim as f64;
                let l2 = lambda * lambda;
                1.0 + n * (2.0 * a - n * l2) / (a + l2).powi(2)
            }
            Potential::Tabulated(t) => t.value(r),
        }
    }

    /// `r V'(r)`, the radial form of `<grad V(x), x>`.
    pub fn tilt(&self, dim: usize, r: f64) -> f64 {
        let a = r * r;
        match self {
            Potential::Constant { .. } => 0.0,
            Potential::Model { mu } => 2.0 * mu * a / (1.0 + a).powi(2),
            Potential::Null { lambda } => {
                let n = dim as f64;
                let l2 = lambda * lambda;
                4.0 * n * a * ((n + 1.0) * l2 - a) / (a + l2).powi(3)
            }
            Potential::Tabulated(t) => r * t.derivative(r),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Potential::Constant { .. })
    }
}

/// Field of `V(r_j)`.
pub fn eval_potential(v: &Potential, grid: &RadialGrid) -> Result<Field> {
    v.validate()?;
    if let Potential::Tabulated(t) = v {
        t.check_covers(grid.nodes()[0], grid.r_max())?;
    }
    let dim = grid.params().dim();
    let f = grid.sample(|r| v.value(dim, r));
    if f.values().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("potential"));
    }
    Ok(f)
}

/// Field of `r_j V'(r_j)`.
pub fn radial_tilt(v: &Potential, grid: &RadialGrid) -> Result<Field> {
    v.validate()?;
    if let Potential::Tabulated(t) = v {
        t.check_covers(grid.nodes()[0], grid.r_max())?;
    }
    let dim = grid.params().dim();
    let f = grid.sample(|r| v.tilt(dim, r));
    if f.values().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("potential tilt"));
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCoefficient {
    pub value: f64,
    /// True when the value is read off finite data rather than a closed-form limit.
    pub estimated: bool,
}

/// Minimum number of samples in the last decade of a table for a tail estimate.
pub const MIN_TAIL_SAMPLES: usize = 10;

/// `liminf_{r -> inf} (1 - V(r)) r^2`.
pub fn tail_coefficient(v: &Potential, dim: usize) -> Result<TailCoefficient> {
    v.validate()?;
    let exact = |value| {
        Ok(TailCoefficient {
            value,
            estimated: false,
        })
    };
    match v {
        Potential::Constant { c } => {
            if *c == 1.0 {
                exact(0.0)
            } else if *c < 1.0 {
                exact(f64::INFINITY)
            } else {
                exact(f64::NEG_INFINITY)
            }
        }
        Potential::Model { mu } => exact(*mu),
        Potential::Null { .. } => exact(-2.0 * dim as f64),
        Potential::Tabulated(t) => {
            let last = *t.r.last().unwrap();
            let tail: Vec<usize> = (0..t.r.len()).filter(|&i| t.r[i] >= 0.1 * last).collect();
            if tail.len() < MIN_TAIL_SAMPLES {
                return Err(Error::Tabulated(format!(
                    "{} samples in the last decade, need at least {MIN_TAIL_SAMPLES}",
                    tail.len()
                )));
            }
            let value = tail
                .iter()
                .map(|&i| (1.0 - t.v[i]) * t.r[i] * t.r[i])
                .fold(f64::INFINITY, f64::min);
            Ok(TailCoefficient { value, estimated: true })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// `N^2 (N-2)_+ / (4 (N+1))`: above this tail coefficient a ground state exists.
    pub sufficient: f64,
    /// `(N-2)^2 / 4`: below this there is no nontrivial solution.
    pub nonexist: f64,
}

impl Thresholds {
    /// `nonexist / sufficient`, undefined when the sufficient threshold vanishes.
    pub fn ratio(&self) -> Option<f64> {
        (self.sufficient > 0.0).then(|| self.nonexist / self.sufficient)
    }
}

pub fn thresholds(dim: usize) -> Thresholds {
    let n = dim as f64;
    let pos = (n - 2.0).max(0.0);
    Thresholds {
        sufficient: n * n * pos / (4.0 * (n + 1.0)),
        nonexist: (n - 2.0).powi(2) / 4.0,
    }
}

/// Sampled potential with monotone piecewise-cubic (Fritsch-Carlson)
/// interpolation, so `V'` is continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    r: Vec<f64>,
    v: Vec<f64>,
    slope: Vec<f64>,
}

impl TabulatedPotential {
    pub fn new(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r.len() != v.len() {
            return Err(Error::Tabulated("column lengths differ".into()));
        }
        if r.len() < 2 {
            return Err(Error::Tabulated("need at least two samples".into()));
        }
        if r.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::Tabulated("non-finite sample".into()));
        }
        if r[0] < 0.0 {
            return Err(Error::Tabulated("negative radius".into()));
        }
        if let Some(k) = r.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Tabulated(format!(
                "radii not strictly increasing at row {}",
                k + 2
            )));
        }
        let slope = pchip_slopes(&r, &v);
        Ok(Self { r, v, slope })
    }

    /// Two-column CSV `r,V`; a non-numeric first row is taken as a header.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let (mut r, mut v) = (Vec::new(), Vec::new());
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Tabulated(format!("row {} has {} columns", row + 1, rec.len())));
            }
            let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
            match parsed {
                (Ok(a), Ok(b)) => {
                    r.push(a);
                    v.push(b);
                }
                _ if row == 0 => continue,
                _ => return Err(Error::Tabulated(format!("row {} is not numeric", row + 1))),
            }
        }
        Self::new(r, v)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    fn check_covers(&self, lo: f64, hi: f64) -> Result<()> {
        let (a, b) = (self.r[0], *self.r.last().unwrap());
        if a > lo || b < hi {
            return Err(Error::Tabulated(format!(
                "table covers [{a}, {b}] but the grid needs [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    fn locate(&self, x: f64) -> usize {
        let k = self.r.partition_point(|&ri| ri <= x);
        k.saturating_sub(1).min(self.r.len() - 2)
    }

    pub fn value(&self, x: f64) -> f64 {
        if x <= self.r[0] {
            return self.v[0];
        }
        if x >= *self.r.last().unwrap() {
            return *self.v.last().unwrap();
        }
        let k = self.locate(x);
        let h = self.r[k + 1] - self.r[k];
        let t = (x - self.r[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.v[k] + h10 * h * self.slope[k] + h01 * self.v[k + 1] + h11 * h * self.slope[k + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x < self.r[0] || x > *self.r.last().unwrap() {
            return 0.0;
        }
        let k = self.locate(x);
        let h = self.r[k + 1] - self.r[k];
        let t = (x - self.r[k]) / h;
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        d00 * self.v[k] + d10 * self.slope[k] + d01 * self.v[k + 1] + d11 * self.slope[k + 1]
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| -> f64 {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}
