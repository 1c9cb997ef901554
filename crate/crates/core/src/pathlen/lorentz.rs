//! Free-path law of the two-dimensional periodic Lorentz gas in the
//! Boltzmann-Grad limit.
//!
//! The classical closed form reads, for `s >= 1/2`,
//!
//! ```text
//! (24/pi^2) (1/(2s) + 2 (1 - 1/(2s))^2 ln|1 - 1/(2s)| - 1/2 (1 - 1/s)^2 ln|1 - 1/s|)
//! ```
//!
//! and `24/pi^2` below. This profile has total mass exactly 2 (the constant
//! branch alone holds `12/pi^2 > 1`), so the density used here is the profile
//! divided by [`PROFILE_MASS`]. For `s > 1` the bracket equals the convergent
//! series `sum_{k>=3} c_k s^-k`, `c_k = (1 - 2^{2-k}) / (k (k-1) (k-2))`,
//! which is used beyond [`SERIES_START`] to avoid cancellation.

use std::f64::consts::PI;

use serde::Serialize;

use super::tail::TailIntegrals;
use crate::quad::{gk15, integrate_breaks, Tolerance};

/// Exact total mass of the closed-form profile.
pub const PROFILE_MASS: f64 = 2.0;
/// Start of the series representation used for the density tail.
pub const SERIES_START: f64 = 4.0;
const TABLE_STEP: f64 = 1e-3;
const SERIES_TERMS: usize = 40;

fn y2_ln_abs(y: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else {
        y * y * y.abs().ln()
    }
}

/// The closed-form profile evaluated literally (mass 2).
pub fn printed_profile(s: f64) -> f64 {
    let c = 24.0 / (PI * PI);
    if s < 0.5 {
        c
    } else {
        c * (0.5 / s + 2.0 * y2_ln_abs(1.0 - 0.5 / s) - 0.5 * y2_ln_abs(1.0 - 1.0 / s))
    }
}

fn series_coeff(k: usize) -> f64 {
    let kf = k as f64;
    (1.0 - 4.0 / 2f64.powi(k as i32)) / (kf * (kf - 1.0) * (kf - 2.0))
}

#[derive(Debug, Clone)]
pub struct LorentzGas2D {
    /// Density coefficients `a_k` of `s^-k`, k = 3.., already normalized.
    coeffs: Vec<f64>,
    tails: Vec<TailIntegrals>,
    /// CDF at the Hermite nodes on [1/2, SERIES_START].
    table_f: Vec<f64>,
    table_p: Vec<f64>,
    normalization_defect: f64,
}

impl Default for LorentzGas2D {
    fn default() -> Self {
        Self::new()
    }
}

impl LorentzGas2D {
    pub fn new() -> Self {
        let scale = 24.0 / (PI * PI) / PROFILE_MASS;
        let coeffs: Vec<f64> = (3..3 + SERIES_TERMS)
            .map(|k| scale * series_coeff(k))
            .collect();
        let tails = (3..3 + SERIES_TERMS)
            .map(|k| TailIntegrals::new(k as f64 - 1.0))
            .collect();
        let mut g = LorentzGas2D {
            coeffs,
            tails,
            table_f: Vec::new(),
            table_p: Vec::new(),
            normalization_defect: 0.0,
        };
        let nseg = ((SERIES_START - 0.5) / TABLE_STEP).round() as usize;
        let mut f = 0.5 * g.density(0.25);
        g.table_f.push(f);
        g.table_p.push(g.density(0.5));
        for i in 0..nseg {
            let a = 0.5 + i as f64 * TABLE_STEP;
            let b = a + TABLE_STEP;
            let (v, _) = gk15(&mut |s: f64| g.density(s), a, b);
            f += v;
            g.table_f.push(f);
            g.table_p.push(g.density(b));
        }
        g.normalization_defect = f + g.tail_survival(SERIES_START) - 1.0;
        g
    }

    /// Leading tail coefficient: `p(s) ~ d0 s^-3`.
    pub fn d0(&self) -> f64 {
        self.coeffs[0]
    }

    /// Gap between table mass plus analytic tail mass and one.
    pub fn normalization_defect(&self) -> f64 {
        self.normalization_defect
    }

    pub fn density(&self, s: f64) -> f64 {
        if s < 0.0 {
            0.0
        } else if s >= SERIES_START {
            self.series_density(s)
        } else {
            printed_profile(s) / PROFILE_MASS
        }
    }

    fn series_density(&self, s: f64) -> f64 {
        let inv = 1.0 / s;
        let mut pw = inv * inv * inv;
        let mut acc = 0.0;
        for &a in &self.coeffs {
            acc += a * pw;
            pw *= inv;
        }
        acc
    }

    fn tail_survival(&self, s: f64) -> f64 {
        // int_s^inf a_k t^-k dt = a_k s^{1-k} / (k-1)
        let inv = 1.0 / s;
        let mut pw = inv * inv;
        let mut acc = 0.0;
        for (j, &a) in self.coeffs.iter().enumerate() {
            let k = (j + 3) as f64;
            acc += a * pw / (k - 1.0);
            pw *= inv;
        }
        acc
    }

    /// `int_S^inf (1 - F)` for `S >= SERIES_START`.
    pub(crate) fn tail_survival_integral(&self, s: f64) -> f64 {
        let inv = 1.0 / s;
        let mut pw = inv;
        let mut acc = 0.0;
        for (j, &a) in self.coeffs.iter().enumerate() {
            let k = (j + 3) as f64;
            acc += a * pw / ((k - 1.0) * (k - 2.0));
            pw *= inv;
        }
        acc
    }

    fn table_index(&self, s: f64) -> (usize, f64) {
        let x = (s - 0.5) / TABLE_STEP;
        let i = (x.floor() as usize).min(self.table_f.len() - 2);
        (i, x - i as f64)
    }

    pub fn cdf(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else if s <= 0.5 {
            s * self.density(0.25)
        } else if s < SERIES_START {
            let (i, t) = self.table_index(s);
            hermite(
                self.table_f[i],
                self.table_f[i + 1],
                self.table_p[i] * TABLE_STEP,
                self.table_p[i + 1] * TABLE_STEP,
                t,
            )
        } else {
            1.0 - self.tail_survival(s)
        }
    }

    pub fn survival(&self, s: f64) -> f64 {
        if s >= SERIES_START {
            self.tail_survival(s)
        } else {
            1.0 - self.cdf(s)
        }
    }

    /// Inverse of the survival function, `q in (0, 1]`.
    pub fn inverse_survival(&self, q: f64) -> f64 {
        let p0 = self.density(0.25);
        let u = 1.0 - q;
        if u <= self.table_f[0] {
            return u / p0;
        }
        let last = *self.table_f.last().unwrap();
        if u < last {
            let i = self.table_f.partition_point(|&f| f <= u) - 1;
            let i = i.min(self.table_f.len() - 2);
            let (f0, f1) = (self.table_f[i], self.table_f[i + 1]);
            let (d0, d1) = (self.table_p[i] * TABLE_STEP, self.table_p[i + 1] * TABLE_STEP);
            // safeguarded Newton on the cubic segment
            let (mut lo, mut hi) = (0.0, 1.0);
            let mut t = ((u - f0) / (f1 - f0)).clamp(0.0, 1.0);
            for _ in 0..60 {
                let h = hermite(f0, f1, d0, d1, t) - u;
                if h > 0.0 {
                    hi = t;
                } else {
                    lo = t;
                }
                let dh = hermite_slope(f0, f1, d0, d1, t);
                let mut tn = t - h / dh;
                if !(tn > lo && tn < hi) || !tn.is_finite() {
                    tn = 0.5 * (lo + hi);
                }
                if (tn - t).abs() < 1e-15 {
                    t = tn;
                    break;
                }
                t = tn;
            }
            return 0.5 + (i as f64 + t) * TABLE_STEP;
        }
        // Newton on ln S(s) = ln q from the leading-order guess.
        let mut s = (self.coeffs[0] / (2.0 * q)).sqrt().max(SERIES_START);
        for _ in 0..100 {
            let sv = self.tail_survival(s);
            let step = (sv.ln() - q.ln()) * sv / self.series_density(s);
            let next = (s + step).max(SERIES_START);
            if (next - s).abs() <= 1e-15 * s {
                s = next;
                break;
            }
            s = next;
        }
        s
    }

    /// `(int p (1 - cos zs), int p sin zs)` over `[SERIES_START, inf)`.
    pub(crate) fn tail_char_parts(&self, z: f64) -> (f64, f64) {
        let u = z.abs() * SERIES_START;
        let mut c = 0.0;
        let mut sn = 0.0;
        let mut scale = SERIES_START.powi(-2);
        for (a, t) in self.coeffs.iter().zip(&self.tails) {
            let (ic, is) = t.eval(u);
            c += a * scale * ic;
            sn += a * scale * is;
            scale /= SERIES_START;
            if a * scale < 1e-20 * c.abs().max(1e-300) {
                break;
            }
        }
        (c, z.signum() * sn)
    }

    /// Characteristic parts over `[0, SERIES_START]` by adaptive quadrature.
    pub(crate) fn head_char_parts(&self, z: f64) -> (f64, f64) {
        let tol = Tolerance::new(1e-16, 1e-13);
        let c = integrate_breaks(
            |s: f64| 2.0 * (0.5 * z * s).sin().powi(2) * self.density(s),
            &[0.0, 0.5, 1.0, 2.0, SERIES_START],
            tol,
        )
        .value;
        let sn = integrate_breaks(
            |s: f64| (z * s).sin() * self.density(s),
            &[0.0, 0.5, 1.0, 2.0, SERIES_START],
            tol,
        )
        .value;
        (c, sn)
    }

    /// `int_0^S s^k p(s) ds` for `S >= SERIES_START` split as head + series.
    pub(crate) fn moment_tail(&self, k: i32, from: f64, to: f64) -> f64 {
        let mut acc = 0.0;
        for (j, &a) in self.coeffs.iter().enumerate() {
            let e = k + 1 - (j as i32 + 3);
            acc += a
                * if e == 0 {
                    (to / from).ln()
                } else if to.is_infinite() {
                    -from.powi(e) / e as f64
                } else {
                    (to.powi(e) - from.powi(e)) / e as f64
                };
        }
        acc
    }
}

/// Checks on the closed-form profile itself, taken literally.
#[derive(Debug, Clone, Serialize)]
pub struct LorentzTailReport {
    /// `s^3 p(s)` at `s = 100`.
    pub s3p_at_100: f64,
    /// `2 / pi^2`.
    pub tail_target: f64,
    pub s3p_rel_error: f64,
    /// `int_0^inf p ds`.
    pub mass: f64,
    pub mass_defect: f64,
    /// `|p(1/2 + 1e-6) - 24/pi^2|`.
    pub continuity_gap: f64,
    /// `(S, M2(S))` with `M2(S) = int_0^S s^2 p ds`, log-spaced.
    pub moments: Vec<(f64, f64)>,
    /// Least-squares slope of `M2` against `ln S`.
    pub slope: f64,
    pub slope_rel_error: f64,
    pub tail_ok: bool,
    pub mass_ok: bool,
    pub continuity_ok: bool,
    pub slope_ok: bool,
}

impl LorentzTailReport {
    pub fn all_pass(&self) -> bool {
        self.tail_ok && self.mass_ok && self.continuity_ok && self.slope_ok
    }
}

fn profile_integral(from: f64, to: f64, k: i32) -> f64 {
    let mut pts = vec![from];
    let mut b = from.max(0.5);
    for fixed in [0.5, 1.0, 2.0] {
        if fixed > from && fixed < to {
            pts.push(fixed);
        }
    }
    while b * 2.0 < to {
        b *= 2.0;
        if b > from {
            pts.push(b);
        }
    }
    pts.push(to);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    integrate_breaks(|s: f64| s.powi(k) * printed_profile(s), &pts, Tolerance::new(1e-14, 1e-12)).value
}

/// Tail, mass, continuity and log-moment checks of [`printed_profile`].
/// `m2_points` log-spaced truncation points cover `S in [1e2, 1e5]`.
pub fn tail_study(m2_points: usize) -> LorentzTailReport {
    let target = 2.0 / (PI * PI);
    let s3p = 1e6 * printed_profile(100.0);
    // analytic tail beyond the last breakpoint: p ~ (2/pi^2) s^-3 (1 + O(1/s))
    let far = 1e8;
    let mass = profile_integral(0.0, far, 0) + target / (2.0 * far * far);
    let gap = (printed_profile(0.5 + 1e-6) - 24.0 / (PI * PI)).abs();
    let m = m2_points.max(2);
    let mut moments = Vec::with_capacity(m);
    let mut acc = profile_integral(0.0, 100.0, 2);
    let mut last = 100.0;
    for i in 0..m {
        let s = 10f64.powf(2.0 + 3.0 * i as f64 / (m - 1) as f64);
        if s > last {
            acc += profile_integral(last, s, 2);
            last = s;
        }
        moments.push((s, acc));
    }
    let x: Vec<f64> = moments.iter().map(|(s, _)| s.ln()).collect();
    let y: Vec<f64> = moments.iter().map(|(_, v)| *v).collect();
    let xm = x.iter().sum::<f64>() / m as f64;
    let ym = y.iter().sum::<f64>() / m as f64;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let sxx: f64 = x.iter().map(|a| (a - xm).powi(2)).sum();
    let slope = sxy / sxx;
    let s3p_rel_error = (s3p - target).abs() / target;
    let slope_rel_error = (slope - target).abs() / target;
    LorentzTailReport {
        s3p_at_100: s3p,
        tail_target: target,
        s3p_rel_error,
        mass,
        mass_defect: (mass - 1.0).abs(),
        continuity_gap: gap,
        moments,
        slope,
        slope_rel_error,
        tail_ok: s3p_rel_error <= 0.01,
        mass_ok: (mass - 1.0).abs() <= 1e-6,
        continuity_ok: gap <= 1e-4,
        slope_ok: slope_rel_error <= 0.05,
    }
}

fn hermite(f0: f64, f1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * f0
        + (t3 - 2.0 * t2 + t) * d0
        + (-2.0 * t3 + 3.0 * t2) * f1
        + (t3 - t2) * d1
}

fn hermite_slope(f0: f64, f1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let t2 = t * t;
    (6.0 * t2 - 6.0 * t) * f0
        + (3.0 * t2 - 4.0 * t + 1.0) * d0
        + (-6.0 * t2 + 6.0 * t) * f1
        + (3.0 * t2 - 2.0 * t) * d1
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn series_matches_closed_form() {
        let g = LorentzGas2D::new();
        for &s in &[3.0, 4.0, 7.0, 20.0] {
            assert_relative_eq!(
                g.series_density(s),
                printed_profile(s) / PROFILE_MASS,
                max_relative = 1e-11
            );
        }
    }

    #[test]
    fn profile_values() {
        let c = 24.0 / (PI * PI);
        assert_relative_eq!(printed_profile(0.25), c, epsilon = 1e-15);
        assert!((printed_profile(0.5 + 1e-6) - c).abs() < 1e-4);
        assert_relative_eq!(
            printed_profile(100.0) * 1e6,
            2.0 / (PI * PI),
            max_relative = 0.01
        );
    }

    #[test]
    fn table_is_consistent_with_tail() {
        let g = LorentzGas2D::new();
        assert!(g.normalization_defect().abs() < 1e-10, "{}", g.normalization_defect());
        assert_relative_eq!(g.d0(), 1.0 / (PI * PI), epsilon = 1e-15);
    }

    #[test]
    fn tail_study_of_the_profile() {
        let r = tail_study(31);
        assert!(r.tail_ok && r.continuity_ok && r.slope_ok, "{r:?}");
        // the profile as printed integrates to two
        assert_relative_eq!(r.mass, PROFILE_MASS, max_relative = 1e-9);
        assert!(!r.mass_ok);
        assert!(r.moments.windows(2).all(|w| w[1].1 > w[0].1));
        let g = LorentzGas2D::new();
        let (s, m) = r.moments[10];
        assert_relative_eq!(m, PROFILE_MASS * g_moment(&g, s), max_relative = 1e-8);
    }

    fn g_moment(g: &LorentzGas2D, s: f64) -> f64 {
        let head = integrate_breaks(
            |x: f64| x * x * g.density(x),
            &[0.0, 0.5, 1.0, 2.0, SERIES_START],
            Tolerance::new(1e-15, 1e-13),
        )
        .value;
        head + g.moment_tail(2, SERIES_START, s)
    }

    #[test]
    fn inverse_survival_round_trip() {
        let g = LorentzGas2D::new();
        for &s in &[0.1, 0.49, 0.5, 0.7, 1.0, 1.3, 3.9, 4.0, 10.0, 1e3, 1e6] {
            let q = g.survival(s);
            assert_relative_eq!(g.inverse_survival(q), s, max_relative = 1e-9);
        }
    }
}
