//! Scaled oscillatory integrals for power-law tails.
//!
//! For `alpha > 0` and `u > 0` define
//!
//! ```text
//! Ic(u) = u^alpha * int_u^inf t^(-alpha-1) (1 - cos t) dt
//! Is(u) = u^alpha * int_u^inf t^(-alpha-1) sin t dt
//! ```
//!
//! A tail piece `a s^(-alpha-1)` on `[s0, inf)` then contributes
//! `a s0^(-alpha) Ic(|z| s0)` to `int p (1 - cos zs)` and the analogous sine
//! term. Small arguments use a term-by-term series on `[u, 1]`, large ones
//! adaptive quadrature up to a cut and an asymptotic expansion beyond it.

use num_complex::Complex64;

use crate::quad::gk15;

const CHEB: usize = 16;

#[derive(Debug, Clone)]
pub struct TailIntegrals {
    alpha: f64,
    /// Unscaled integrals at u = 1.
    c1: f64,
    s1: f64,
    cut: f64,
    /// Chebyshev coefficients of `int_u^inf t^-beta e^{it} dt` on each
    /// `[1 + j, 2 + j]` below the cut.
    cheb: Vec<[Complex64; CHEB]>,
}

impl TailIntegrals {
    pub fn new(alpha: f64) -> Self {
        let beta = alpha + 1.0;
        let cut = (2.0 * beta + 40.0).max(60.0).ceil();
        let pieces = cut as usize - 1;
        // Chebyshev nodes of every unit interval, swept downward from the cut
        // with one Kronrod panel between neighbours.
        let nodes: Vec<f64> = (0..CHEB)
            .map(|k| (std::f64::consts::PI * (k as f64 + 0.5) / CHEB as f64).cos())
            .collect();
        let mut vals = vec![[Complex64::default(); CHEB]; pieces];
        let mut f = asymptotic(beta, cut, 0.0);
        let mut at = cut;
        let mut integrand = |t: f64| Complex64::new(0.0, t).exp() * t.powf(-beta);
        for j in (0..pieces).rev() {
            let mid = 1.5 + j as f64;
            // nodes[k] descends in x, so iterate k upward to move downward in u
            for k in 0..CHEB {
                let u = mid + 0.5 * nodes[k];
                let (v, _) = gk15(&mut integrand, u, at);
                f += v;
                at = u;
                vals[j][k] = f;
            }
        }
        let cheb = vals
            .iter()
            .map(|v| {
                let mut c = [Complex64::default(); CHEB];
                for (m, cm) in c.iter_mut().enumerate() {
                    let mut acc = Complex64::default();
                    for (k, vk) in v.iter().enumerate() {
                        let ang = std::f64::consts::PI * m as f64 * (k as f64 + 0.5) / CHEB as f64;
                        acc += vk * ang.cos();
                    }
                    *cm = acc * (2.0 / CHEB as f64);
                }
                c[0] *= 0.5;
                c
            })
            .collect();
        let mut t = TailIntegrals {
            alpha,
            c1: 0.0,
            s1: 0.0,
            cut,
            cheb,
        };
        let j = t.oscillatory(1.0);
        t.c1 = 1.0 / alpha - j.re;
        t.s1 = j.im;
        t
    }

    fn interpolate(&self, u: f64) -> Complex64 {
        let j = ((u - 1.0).floor() as usize).min(self.cheb.len() - 1);
        let x = 2.0 * (u - 1.5 - j as f64);
        let c = &self.cheb[j];
        // Clenshaw
        let mut b1 = Complex64::default();
        let mut b2 = Complex64::default();
        for m in (1..CHEB).rev() {
            let b0 = c[m] + b1 * (2.0 * x) - b2;
            b2 = b1;
            b1 = b0;
        }
        c[0] + b1 * x - b2
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `int_u^inf t^-beta e^{it} dt` multiplied by `u^alpha`, for `u >= 1`.
    fn oscillatory(&self, u: f64) -> Complex64 {
        let beta = self.alpha + 1.0;
        if u >= self.cut {
            return asymptotic(beta, u, self.alpha);
        }
        self.interpolate(u) * u.powf(self.alpha)
    }

    /// Returns `(Ic(u), Is(u))` for `u >= 0`.
    pub fn eval(&self, u: f64) -> (f64, f64) {
        let a = self.alpha;
        if u == 0.0 {
            return (0.0, 0.0);
        }
        if u > 1.0 {
            let j = self.oscillatory(u);
            return (1.0 / a - j.re, j.im);
        }
        let ua = u.powf(a);
        let lnu = u.ln();
        let mut ic = ua * self.c1;
        let mut is = ua * self.s1;
        // 1 - cos t = sum_{k>=1} (-1)^{k+1} t^{2k} / (2k)!
        let mut fact = 1.0;
        for k in 1..40 {
            let m = 2 * k;
            fact *= ((m - 1) * m) as f64;
            let term = scaled_power_integral(u, lnu, a, m as f64) / fact;
            if k % 2 == 1 {
                ic += term;
            } else {
                ic -= term;
            }
            if term.abs() < 1e-18 * ic.abs() {
                break;
            }
        }
        // sin t = sum_{k>=0} (-1)^k t^{2k+1} / (2k+1)!
        let mut fact = 1.0;
        for k in 0..40 {
            let m = 2 * k + 1;
            if m > 1 {
                fact *= ((m - 1) * m) as f64;
            }
            let term = scaled_power_integral(u, lnu, a, m as f64) / fact;
            if k % 2 == 0 {
                is += term;
            } else {
                is -= term;
            }
            if term.abs() < 1e-18 * is.abs() {
                break;
            }
        }
        (ic, is)
    }
}

/// `u^alpha * int_u^1 t^(m - alpha - 1) dt` without overflow for tiny `u`.
fn scaled_power_integral(u: f64, lnu: f64, alpha: f64, m: f64) -> f64 {
    let e = m - alpha;
    if e.abs() < 1e-13 {
        -lnu * u.powf(alpha)
    } else if e > 0.0 {
        u.powf(alpha) * (-(e * lnu).exp_m1()) / e
    } else {
        u.powf(m) * (-(-e * lnu).exp_m1()) / (-e)
    }
}

/// `t^p * int_t^inf x^-beta e^{ix} dx` from the integration-by-parts series
/// `e^{it} sum_k i^{k+1} (-1)^k (beta)_k t^{p-beta-k}`.
fn asymptotic(beta: f64, t: f64, p: f64) -> Complex64 {
    let mut term = Complex64::new(0.0, t.powf(p - beta));
    let mut sum = term;
    let mut prev = term.norm();
    for k in 0..200 {
        term *= Complex64::new(0.0, -(beta + k as f64) / t);
        let m = term.norm();
        if m > prev {
            break;
        }
        sum += term;
        prev = m;
        if m < 1e-19 * sum.norm() {
            break;
        }
    }
    sum * Complex64::new(0.0, t).exp()
}
