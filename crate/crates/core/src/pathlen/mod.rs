//! Path-length distributions `p(s)`: density, CDF, inverse-CDF sampling,
//! truncated moments, `beta0`, and the characteristic parts entering the
//! Fourier-space transport operator.

mod lorentz;
mod tail;

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{NctkError, Result};
use crate::quad::{gk15, integrate_breaks, Tolerance};

pub use lorentz::{printed_profile, tail_study, LorentzGas2D, LorentzTailReport, PROFILE_MASS};
pub use tail::TailIntegrals;

/// Family parameters accepted by [`PathLengthDistribution::new`].
#[derive(Debug, Clone, PartialEq)]
pub enum PathLengthSpec {
    Exponential { rate: f64 },
    /// Constant core `1 - d0/alpha` on `[0, 1]`, tail `d0 s^{-alpha-1}`.
    PowerLawTail { alpha: f64, d0: f64 },
    LorentzGas2D,
    /// Piecewise-linear density through `(s, p)` pairs, zero beyond the last node.
    Tabulated { s: Vec<f64>, p: Vec<f64> },
}

#[derive(Debug, Clone)]
enum Family {
    Exponential {
        rate: f64,
    },
    PowerLaw {
        alpha: f64,
        d0: f64,
        core: f64,
        tail: TailIntegrals,
    },
    Lorentz(Box<LorentzGas2D>),
    Tabulated {
        s: Vec<f64>,
        p: Vec<f64>,
        cdf: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct PathLengthDistribution {
    spec: PathLengthSpec,
    family: Family,
    mean: f64,
    mass: f64,
}

impl PathLengthDistribution {
    pub fn new(spec: PathLengthSpec) -> Result<Self> {
        let family = match &spec {
            PathLengthSpec::Exponential { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(NctkError::invalid(format!(
                        "exponential rate must be positive, got {rate}"
                    )));
                }
                Family::Exponential { rate: *rate }
            }
            PathLengthSpec::PowerLawTail { alpha, d0 } => {
                let (alpha, d0) = (*alpha, *d0);
                if !(alpha > 1.0 && alpha.is_finite()) {
                    return Err(NctkError::invalid(format!(
                        "tail exponent alpha = {alpha} must exceed 1 for a finite mean"
                    )));
                }
                if !(d0 > 0.0 && d0 < alpha) {
                    return Err(NctkError::invalid(format!(
                        "tail coefficient d0 = {d0} must lie in (0, alpha = {alpha}) so the core stays nonnegative"
                    )));
                }
                Family::PowerLaw {
                    alpha,
                    d0,
                    core: 1.0 - d0 / alpha,
                    tail: TailIntegrals::new(alpha),
                }
            }
            PathLengthSpec::LorentzGas2D => Family::Lorentz(Box::default()),
            PathLengthSpec::Tabulated { s, p } => tabulated(s, p)?,
        };
        let mut d = PathLengthDistribution {
            spec,
            family,
            mean: 0.0,
            mass: 0.0,
        };
        d.mass = d.truncated_moment(0, f64::INFINITY)?;
        d.mean = d.truncated_moment(1, f64::INFINITY)?;
        if (d.mass - 1.0).abs() > 1e-8 {
            return Err(NctkError::invalid(format!(
                "distribution mass {} differs from 1",
                d.mass
            )));
        }
        Ok(d)
    }

    /// Reads a two-column `(s, p)` table, whitespace separated.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let (s, p) = read_two_columns(path)?;
        Self::new(PathLengthSpec::Tabulated { s, p })
    }

    pub fn spec(&self) -> &PathLengthSpec {
        &self.spec
    }

    /// Total mass computed at construction.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn first_moment(&self) -> f64 {
        self.mean
    }

    /// Tail exponent `alpha` in `p(s) ~ d0 s^{-alpha-1}`, if algebraic.
    pub fn tail_exponent(&self) -> Option<f64> {
        match &self.family {
            Family::PowerLaw { alpha, .. } => Some(*alpha),
            Family::Lorentz(_) => Some(2.0),
            _ => None,
        }
    }

    /// Tail coefficient `d0` in `p(s) ~ d0 s^{-alpha-1}`, if algebraic.
    pub fn tail_coefficient(&self) -> Option<f64> {
        match &self.family {
            Family::PowerLaw { d0, .. } => Some(*d0),
            Family::Lorentz(g) => Some(g.d0()),
            _ => None,
        }
    }

    /// Density at `s >= 0`.
    pub fn pdf(&self, s: f64) -> Result<f64> {
        if s < 0.0 || s.is_nan() {
            return Err(NctkError::OutOfDomain {
                what: "path-length density",
                value: s,
            });
        }
        Ok(self.density(s))
    }

    /// Density, zero for negative arguments.
    pub fn density(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        match &self.family {
            Family::Exponential { rate } => rate * (-rate * s).exp(),
            Family::PowerLaw { alpha, d0, core, .. } => {
                if s <= 1.0 {
                    *core
                } else {
                    d0 * s.powf(-alpha - 1.0)
                }
            }
            Family::Lorentz(g) => g.density(s),
            Family::Tabulated { s: xs, p, .. } => {
                if s < xs[0] || s > *xs.last().unwrap() {
                    return 0.0;
                }
                let i = (xs.partition_point(|&x| x <= s)).clamp(1, xs.len() - 1) - 1;
                let t = (s - xs[i]) / (xs[i + 1] - xs[i]);
                p[i] + t * (p[i + 1] - p[i])
            }
        }
    }

    pub fn cdf(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match &self.family {
            Family::Exponential { rate } => -(-rate * s).exp_m1(),
            Family::PowerLaw { alpha, d0, core, .. } => {
                if s <= 1.0 {
                    core * s
                } else {
                    1.0 - d0 / alpha * s.powf(-alpha)
                }
            }
            Family::Lorentz(g) => g.cdf(s),
            Family::Tabulated { s: xs, p, cdf } => {
                if s <= xs[0] {
                    return 0.0;
                }
                if s >= *xs.last().unwrap() {
                    return 1.0;
                }
                let i = xs.partition_point(|&x| x <= s) - 1;
                let h = s - xs[i];
                let slope = (p[i + 1] - p[i]) / (xs[i + 1] - xs[i]);
                cdf[i] + p[i] * h + 0.5 * slope * h * h
            }
        }
    }

    /// `1 - F(s)`, accurate in the tail.
    pub fn survival(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 1.0;
        }
        match &self.family {
            Family::Exponential { rate } => (-rate * s).exp(),
            Family::PowerLaw { alpha, d0, core, .. } => {
                if s <= 1.0 {
                    1.0 - core * s
                } else {
                    d0 / alpha * s.powf(-alpha)
                }
            }
            Family::Lorentz(g) => g.survival(s),
            Family::Tabulated { .. } => 1.0 - self.cdf(s),
        }
    }

    /// Hazard rate `Sigma_t(s) = p(s) / (1 - F(s))`, `None` where the
    /// survival probability is below `1e-12`.
    pub fn hazard(&self, s: f64) -> Option<f64> {
        let q = self.survival(s);
        (q > 1e-12).then(|| self.density(s) / q)
    }

    /// Inverse CDF for `u in (0, 1)`.
    pub fn sample_path(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(NctkError::OutOfDomain {
                what: "uniform variate for path sampling",
                value: u,
            });
        }
        Ok(self.inverse_survival(1.0 - u))
    }

    /// `S^{-1}(q)` for `q in (0, 1]`; keeps full precision deep in the tail.
    pub fn inverse_survival(&self, q: f64) -> f64 {
        if q >= 1.0 {
            return 0.0;
        }
        match &self.family {
            Family::Exponential { rate } => -q.ln() / rate,
            Family::PowerLaw { alpha, d0, core, .. } => {
                let u = 1.0 - q;
                if u <= *core {
                    u / core
                } else {
                    (d0 / alpha / q).powf(1.0 / alpha)
                }
            }
            Family::Lorentz(g) => g.inverse_survival(q),
            Family::Tabulated { s: xs, p, cdf } => {
                let u = 1.0 - q;
                let i = cdf.partition_point(|&f| f <= u).clamp(1, cdf.len() - 1) - 1;
                let du = u - cdf[i];
                let slope = (p[i + 1] - p[i]) / (xs[i + 1] - xs[i]);
                // solve p_i h + slope h^2 / 2 = du for the root in [0, dx]
                let h = if slope.abs() < 1e-300 {
                    if p[i] > 0.0 {
                        du / p[i]
                    } else {
                        0.0
                    }
                } else {
                    let disc = (p[i] * p[i] + 2.0 * slope * du).max(0.0);
                    2.0 * du / (p[i] + disc.sqrt())
                };
                (xs[i] + h).min(xs[i + 1])
            }
        }
    }

    /// Draws a path length from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // 1 - u lies in (0, 1], so the tail branch never sees q = 0.
        let u: f64 = rng.random();
        self.inverse_survival(1.0 - u)
    }

    /// `int_0^S s^k p(s) ds` for `k in {0, 1, 2}`; `S` may be infinite when
    /// the moment converges.
    pub fn truncated_moment(&self, k: u32, upper: f64) -> Result<f64> {
        if k > 2 {
            return Err(NctkError::invalid(format!("moment order {k} not supported")));
        }
        if !(upper > 0.0) {
            return Err(NctkError::invalid(format!(
                "moment upper limit must be positive, got {upper}"
            )));
        }
        let kf = k as f64;
        if upper.is_infinite() {
            if let Some(alpha) = self.tail_exponent() {
                if alpha <= kf {
                    return Err(NctkError::DivergentMoment { order: k, alpha });
                }
            }
        }
        let tol = Tolerance::new(1e-15, 1e-13);
        Ok(match &self.family {
            Family::Exponential { rate } => {
                let x = rate * upper;
                // e^{-x} times the polynomial remainder of the incomplete gamma
                let tail = |poly: f64| if x.is_infinite() { 0.0 } else { (-x).exp() * poly };
                match k {
                    0 => 1.0 - tail(1.0),
                    1 => (1.0 - tail(1.0 + x)) / rate,
                    _ => (2.0 - tail(x * x + 2.0 * x + 2.0)) / (rate * rate),
                }
            }
            Family::PowerLaw { alpha, d0, core, .. } => {
                let c = upper.min(1.0);
                let mut m = core * c.powf(kf + 1.0) / (kf + 1.0);
                if upper > 1.0 {
                    let e = kf - alpha;
                    m += d0
                        * if e.abs() < 1e-14 {
                            upper.ln()
                        } else if upper.is_infinite() {
                            -1.0 / e
                        } else {
                            (upper.powf(e) - 1.0) / e
                        };
                }
                m
            }
            Family::Lorentz(g) => {
                let s0 = lorentz::SERIES_START;
                let head_to = upper.min(s0);
                let mut pts = vec![0.0];
                pts.extend([0.5, 1.0, 2.0].iter().copied().filter(|&x| x < head_to));
                pts.push(head_to);
                let mut m = integrate_breaks(|s: f64| s.powi(k as i32) * g.density(s), &pts, tol)
                    .value;
                if upper > s0 {
                    m += g.moment_tail(k as i32, s0, upper);
                }
                m
            }
            Family::Tabulated { s: xs, .. } => {
                let mut m = 0.0;
                for w in xs.windows(2) {
                    if w[0] >= upper {
                        break;
                    }
                    let b = w[1].min(upper);
                    let (v, _) = gk15(&mut |s: f64| s.powi(k as i32) * self.density(s), w[0], b);
                    m += v;
                }
                m
            }
        })
    }

    /// `beta0 = int_0^inf (1 - F(s)) ds`, by quadrature of the survival
    /// function with the family's analytic tail.
    pub fn beta0(&self) -> f64 {
        let tol = Tolerance::new(1e-15, 1e-13);
        match &self.family {
            Family::Exponential { rate } => {
                let cut = 60.0 / rate;
                integrate_breaks(|s| self.survival(s), &[0.0, 1.0 / rate, cut], tol).value
                    + (-60.0f64).exp() / rate
            }
            Family::PowerLaw { alpha, d0, .. } => {
                integrate_breaks(|s| self.survival(s), &[0.0, 1.0], tol).value
                    + d0 / (alpha * (alpha - 1.0))
            }
            Family::Lorentz(g) => {
                let s0 = lorentz::SERIES_START;
                integrate_breaks(|s| g.survival(s), &[0.0, 0.5, 1.0, 2.0, s0], tol).value
                    + g.tail_survival_integral(s0)
            }
            Family::Tabulated { s: xs, .. } => {
                let mut pts = vec![0.0];
                pts.extend(xs.iter().copied().filter(|&x| x > 0.0));
                integrate_breaks(|s| self.survival(s), &pts, tol).value
            }
        }
    }

    /// `(int p(s) (1 - cos zs) ds, int p(s) sin(zs) ds)`.
    ///
    /// The transform `W(z) = int p e^{-izs}` is `1 - cp - i sp`; keeping the
    /// two parts separate avoids the cancellation in `W - 1` for small `z`.
    pub fn char_parts(&self, z: f64) -> (f64, f64) {
        if z == 0.0 {
            return (0.0, 0.0);
        }
        match &self.family {
            Family::Exponential { rate } => {
                let d = rate * rate + z * z;
                (z * z / d, rate * z / d)
            }
            Family::PowerLaw { d0, core, tail, .. } => {
                let (c1, s1) = sinc_parts(z);
                let (ic, is) = tail.eval(z.abs());
                (core * c1 + d0 * ic, core * s1 + z.signum() * d0 * is)
            }
            Family::Lorentz(g) => {
                let (hc, hs) = g.head_char_parts(z);
                let (tc, ts) = g.tail_char_parts(z);
                (hc + tc, hs + ts)
            }
            Family::Tabulated { s: xs, .. } => {
                let mut c = 0.0;
                let mut sn = 0.0;
                let tol = Tolerance::new(1e-16, 1e-13);
                for w in xs.windows(2) {
                    let fc = |s: f64| 2.0 * (0.5 * z * s).sin().powi(2) * self.density(s);
                    let fs = |s: f64| (z * s).sin() * self.density(s);
                    c += integrate_breaks(fc, w, tol).value;
                    sn += integrate_breaks(fs, w, tol).value;
                }
                (c, sn)
            }
        }
    }

    /// `W(z) = int p(s) e^{-izs} ds`.
    pub fn transform(&self, z: f64) -> Complex64 {
        let (c, s) = self.char_parts(z);
        Complex64::new(1.0 - c, -s)
    }

    /// `B(z) = int e^{-izs} (1 - F(s)) ds = (1 - W(z)) / (iz)`, `B(0) = beta0`.
    pub fn survival_transform(&self, z: f64) -> Complex64 {
        if z == 0.0 {
            return Complex64::new(self.beta0(), 0.0);
        }
        let (c, s) = self.char_parts(z);
        Complex64::new(s / z, -c / z)
    }
}

/// `(int_0^1 (1 - cos zs) ds, int_0^1 sin zs ds)` with small-`z` series.
fn sinc_parts(z: f64) -> (f64, f64) {
    if z.abs() < 1e-2 {
        let z2 = z * z;
        (
            z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0 * (1.0 - z2 / 72.0))),
            z / 2.0 * (1.0 - z2 / 12.0 * (1.0 - z2 / 30.0 * (1.0 - z2 / 56.0))),
        )
    } else {
        let h = 0.5 * z;
        (1.0 - z.sin() / z, 2.0 * h.sin().powi(2) / z)
    }
}

fn tabulated(s: &[f64], p: &[f64]) -> Result<Family> {
    if s.len() != p.len() || s.len() < 2 {
        return Err(NctkError::Table(
            "path-length table needs at least two (s, p) rows".into(),
        ));
    }
    if s[0] < 0.0 || s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(NctkError::Table(
            "path-length table s must be nonnegative and strictly increasing".into(),
        ));
    }
    if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(NctkError::Table("path-length table has negative or non-finite p".into()));
    }
    let mass: f64 = s
        .windows(2)
        .zip(p.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum();
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(NctkError::Table("path-length table is not normalizable".into()));
    }
    if (mass - 1.0).abs() > 1e-6 {
        log::warn!("path-length table mass {mass} renormalized to 1");
    }
    let p: Vec<f64> = p.iter().map(|v| v / mass).collect();
    let mut cdf = vec![0.0];
    for (x, y) in s.windows(2).zip(p.windows(2)) {
        let last = *cdf.last().unwrap();
        cdf.push(last + 0.5 * (x[1] - x[0]) * (y[0] + y[1]));
    }
    Ok(Family::Tabulated {
        s: s.to_vec(),
        p,
        cdf,
    })
}

/// Reads whitespace-separated two-column numeric data, skipping blank lines
/// and `#` comments.
pub fn read_two_columns(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let parse = |t: &str| {
            t.parse::<f64>().map_err(|_| {
                NctkError::Table(format!(
                    "{}:{}: cannot parse `{t}` as a number",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        if cols.len() != 2 {
            return Err(NctkError::Table(format!(
                "{}:{}: expected two columns",
                path.display(),
                lineno + 1
            )));
        }
        a.push(parse(cols[0])?);
        b.push(parse(cols[1])?);
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exp1() -> PathLengthDistribution {
        PathLengthDistribution::new(PathLengthSpec::Exponential { rate: 1.0 }).unwrap()
    }

    fn power(alpha: f64, d0: f64) -> PathLengthDistribution {
        PathLengthDistribution::new(PathLengthSpec::PowerLawTail { alpha, d0 }).unwrap()
    }

    fn lorentz() -> PathLengthDistribution {
        PathLengthDistribution::new(PathLengthSpec::LorentzGas2D).unwrap()
    }

    fn table() -> PathLengthDistribution {
        PathLengthDistribution::new(PathLengthSpec::Tabulated {
            s: vec![0.0, 0.5, 1.5, 3.0],
            p: vec![0.2, 0.6, 0.3, 0.0],
        })
        .unwrap()
    }

    fn all() -> Vec<PathLengthDistribution> {
        vec![exp1(), power(1.5, 1.0), power(3.0, 1.0), power(2.0, 0.5), lorentz(), table()]
    }

    #[test]
    fn construction_errors() {
        assert!(PathLengthDistribution::new(PathLengthSpec::PowerLawTail { alpha: 1.5, d0: 2.0 }).is_err());
        assert!(PathLengthDistribution::new(PathLengthSpec::PowerLawTail { alpha: 1.0, d0: 0.5 }).is_err());
        assert!(PathLengthDistribution::new(PathLengthSpec::Exponential { rate: 0.0 }).is_err());
        assert!(PathLengthDistribution::new(PathLengthSpec::Tabulated {
            s: vec![0.0, 1.0],
            p: vec![0.0, 0.0]
        })
        .is_err());
    }

    #[test]
    fn power_law_core_value() {
        let d = power(1.5, 1.0);
        assert_relative_eq!(d.pdf(0.5).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(d.pdf(2.0).unwrap(), 2f64.powf(-2.5), epsilon = 1e-15);
        assert_relative_eq!(d.sample_path(1.0 / 3.0).unwrap(), 1.0, epsilon = 1e-12);
        assert!(d.pdf(-1.0).is_err());
    }

    #[test]
    fn moments() {
        assert_relative_eq!(exp1().truncated_moment(2, f64::INFINITY).unwrap(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(exp1().first_moment(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(
            power(3.0, 1.0).truncated_moment(2, f64::INFINITY).unwrap(),
            11.0 / 9.0,
            epsilon = 1e-13
        );
        assert!(matches!(
            power(1.5, 1.0).truncated_moment(2, f64::INFINITY),
            Err(NctkError::DivergentMoment { .. })
        ));
        let l = lorentz();
        // next series term contributes O(1/S)
        let s = 1e6;
        let diff = l.truncated_moment(2, 2.0 * s).unwrap() - l.truncated_moment(2, s).unwrap();
        assert_relative_eq!(diff, l.tail_coefficient().unwrap() * 2f64.ln(), max_relative = 1e-6);
    }

    #[test]
    fn exponential_inverse() {
        assert_relative_eq!(exp1().sample_path(1.0 - (-2.0f64).exp()).unwrap(), 2.0, epsilon = 1e-12);
        assert!(exp1().sample_path(1.0).is_err());
    }

    #[test]
    fn exponential_sample_mean() {
        let d = exp1();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let m: f64 = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((m - 1.0).abs() < 0.005, "{m}");
    }

    #[test]
    fn beta0_equals_first_moment() {
        for d in all() {
            assert_relative_eq!(d.beta0(), d.first_moment(), max_relative = 1e-8);
        }
    }

    #[test]
    fn cdf_limits_and_monotone() {
        for d in all() {
            assert_eq!(d.cdf(0.0), 0.0);
            assert!((d.cdf(1e12) - 1.0).abs() < 1e-8);
            let mut prev = 0.0;
            for i in 0..4000 {
                let s = 1e-3 * i as f64 * (1.0 + i as f64 * 1e-3);
                let f = d.cdf(s);
                assert!(f >= prev - 1e-15, "{:?} at {s}", d.spec());
                prev = f;
            }
        }
    }

    #[test]
    fn hazard_reproduces_density() {
        for d in all() {
            for &s in &[0.3, 0.9, 1.7, 2.5] {
                let Some(h) = d.hazard(s) else { continue };
                assert!(h >= 0.0);
                let mut pts: Vec<f64> = [0.0, 0.5, 1.0, 1.5].into_iter().filter(|&x| x < s).collect();
                pts.push(s);
                let cum = integrate_breaks(
                    |t| d.hazard(t).unwrap_or(0.0),
                    &pts,
                    Tolerance::new(1e-13, 1e-11),
                )
                .value;
                assert_relative_eq!(h * (-cum).exp(), d.density(s), max_relative = 1e-6, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn char_parts_exponential_oracle() {
        let d = exp1();
        for &z in &[1e-9, 0.01, 0.7, 5.0, -3.0] {
            let w = d.transform(z);
            let exact = Complex64::new(1.0, 0.0) / Complex64::new(1.0, z);
            assert!((w - exact).norm() < 1e-15);
            let b = d.survival_transform(z);
            assert!((b - exact).norm() < 1e-12);
        }
        assert_relative_eq!(d.survival_transform(0.0).re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn char_parts_against_quadrature() {
        for d in [power(1.5, 1.0), power(2.0, 0.5), power(3.0, 1.0), lorentz(), table()] {
            for &z in &[1e-3, 0.2, 1.0, 4.0, -2.5] {
                let (c, s) = d.char_parts(z);
                // direct quadrature over a long range with tail beyond 1e4 ignored
                let cut = 2e4;
                let mut pts = vec![0.0, 0.5, 1.0, 2.0, 4.0];
                let mut x = 8.0;
                while x < cut {
                    pts.push(x);
                    x *= 2.0;
                }
                pts.push(cut);
                let tol = Tolerance { abs: 1e-15, rel: 1e-12, max_panels: 200_000 };
                let bc = integrate_breaks(|t| 2.0 * (0.5 * z * t).sin().powi(2) * d.density(t), &pts, tol).value
                    + d.survival(cut);
                let bs = integrate_breaks(|t| (z * t).sin() * d.density(t), &pts, tol).value;
                let slack = d.survival(cut) * 2.0 + 1e-10;
                assert!((c - bc).abs() < slack, "{:?} z={z}: {c} vs {bc}", d.spec());
                assert!((s - bs).abs() < slack, "{:?} z={z}: {s} vs {bs}", d.spec());
            }
        }
    }

    #[test]
    fn survival_transform_bounded_by_beta0() {
        for d in all() {
            let b0 = d.beta0();
            for &z in &[1e-6, 0.1, 1.0, 10.0, -7.0] {
                assert!(d.survival_transform(z).norm() <= b0 * (1.0 + 1e-10));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn quantile_round_trip(u in 1e-9f64..0.999_999, which in 0usize..6) {
            let d = &all()[which];
            let s = d.sample_path(u).unwrap();
            let back = d.cdf(s);
            prop_assert!((back - u).abs() < 1e-9 * (1.0 + u), "{:?}: u={u} s={s} F={back}", d.spec());
        }

        #[test]
        fn power_law_tail_exact(s in 1.0001f64..1e6, alpha in 1.05f64..4.0, frac in 0.01f64..0.99) {
            let d0 = frac * alpha;
            let d = power(alpha, d0);
            prop_assert!((d.density(s) - d0 * s.powf(-alpha - 1.0)).abs() <= 1e-15 * d.density(s));
            prop_assert!(d.density(0.5 * s.min(1.9)) >= 0.0);
        }
    }
}
