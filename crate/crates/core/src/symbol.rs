//! Scaled symbols `w_eps(xi, v) = int p (e^{-i eps v.xi s} - 1) / theta ds` and
//! `Lambda_eps(xi, v') = int kappa(v'.v) Re w_eps(xi, v) dv`, with their explicit
//! bounds and `eps -> 0` limits.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::{d2_coefficient, Regime, RegimeKind};
use crate::error::{NctkError, Result};
use crate::pathlen::{PathLengthDistribution, PathLengthSpec};
use crate::quad::{integrate_breaks, Tolerance};
use crate::scatter::ScatterKernel;
use crate::sphere::{dot, norm, polar_axis, DirectionQuadrature, Vec3};

/// Angular weight `kappa(v' . v)` in `Lambda_eps`.
#[derive(Debug, Clone, Copy)]
pub enum Kappa<'a> {
    /// `kappa = 1`; the direction integral is reduced to one dimension and
    /// done adaptively, so the result is exactly independent of `v'`.
    Constant,
    /// `kappa = sigma` of a scattering kernel, summed with the quadrature.
    Kernel(&'a ScatterKernel),
}

/// `w_eps(xi, v)`.
pub fn w_hat(
    d: &PathLengthDistribution,
    xi: &Vec3,
    v: &Vec3,
    eps: f64,
    regime: &Regime,
) -> Result<Complex64> {
    let theta = regime.theta(eps)?;
    let (c, s) = d.char_parts(eps * dot(v, xi));
    Ok(Complex64::new(-c, -s) / theta)
}

/// `Lambda_eps(xi, v')`. Always `<= 0`.
pub fn lambda_eps(
    d: &PathLengthDistribution,
    kappa: Kappa<'_>,
    xi: &Vec3,
    v_prime: &Vec3,
    eps: f64,
    regime: &Regime,
    q: &DirectionQuadrature,
) -> Result<f64> {
    let theta = regime.theta(eps)?;
    let r = norm(xi);
    if r == 0.0 {
        return Ok(0.0);
    }
    let n = q.dimension();
    let sum = match kappa {
        Kappa::Constant => {
            let z = eps * r;
            let tol = Tolerance::new(1e-300, 1e-12);
            let cp = |mu: f64| d.char_parts(z * mu).0;
            match n {
                3 => integrate_breaks(cp, &[0.0, 0.5, 1.0], tol).value,
                2 => {
                    integrate_breaks(|t: f64| cp(t.cos()), &[0.0, 0.25 * PI, 0.5 * PI], tol).value
                        * (2.0 / PI)
                }
                other => return Err(NctkError::UnsupportedDimension(other)),
            }
        }
        Kappa::Kernel(k) => {
            if k.dimension() != n {
                return Err(NctkError::invalid("kernel and quadrature dimensions differ"));
            }
            q.nodes()
                .iter()
                .zip(q.weights())
                .map(|(v, w)| w * k.sigma(dot(v_prime, v)) * d.char_parts(eps * dot(v, xi)).0)
                .sum()
        }
    };
    Ok(-sum / theta)
}

/// Options for [`lambda_limit_coefficient`].
#[derive(Debug, Clone, Copy)]
pub struct LimitOptions {
    /// Include the tail coefficient `d0` in the borderline limit.
    pub d3_includes_d0: bool,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions {
            d3_includes_d0: true,
        }
    }
}

/// `D~` with `Lambda_eps -> -D~ |xi|^beta` for `kappa = 1`.
pub fn lambda_limit_coefficient(
    d: &PathLengthDistribution,
    regime: &Regime,
    n: usize,
    opts: LimitOptions,
) -> Result<f64> {
    if n != 2 && n != 3 {
        return Err(NctkError::UnsupportedDimension(n));
    }
    regime.check_distribution(d)?;
    let m2 = 1.0 / n as f64;
    match regime.kind {
        RegimeKind::Diffusive => Ok(0.5 * m2 * d.truncated_moment(2, f64::INFINITY)?),
        RegimeKind::SuperDiffusive => {
            let (a, d0) = tail(d)?;
            d2_coefficient(a, d0, n, &polar_axis(n))
        }
        RegimeKind::Borderline => {
            let (_, d0) = tail(d)?;
            Ok(if opts.d3_includes_d0 { d0 } else { 1.0 } * 0.5 * m2)
        }
    }
}

fn tail(d: &PathLengthDistribution) -> Result<(f64, f64)> {
    match (d.tail_exponent(), d.tail_coefficient()) {
        (Some(a), Some(c)) => Ok((a, c)),
        _ => Err(NctkError::invalid("distribution has no algebraic tail")),
    }
}

/// Explicit bound on `|Lambda_eps(xi, .)|` for normalized `kappa`.
///
/// Requires `p(s) = d0 s^{-alpha-1}` exactly for `s > 1` in regimes (b) and (c).
pub fn lambda_bound(d: &PathLengthDistribution, regime: &Regime, eps: f64, r: f64) -> Result<f64> {
    let r2 = r * r;
    match regime.kind {
        RegimeKind::Diffusive => Ok(2.0 * d.truncated_moment(2, f64::INFINITY)? * r2),
        RegimeKind::SuperDiffusive => {
            let (a, d0) = exact_power_tail(d)?;
            Ok(0.5 * r2 * eps.powf(2.0 - a)
                + d0 * (2.0 / a + 1.0 / (2.0 * (2.0 - a))) * r.powf(a))
        }
        RegimeKind::Borderline => {
            let (_, d0) = exact_power_tail(d)?;
            let l = eps.ln().abs();
            let inner = if eps * r < 1.0 { (1.0 / (eps * r)).ln() } else { 0.0 };
            Ok(r2 / l * (2.0 + d0 * (1.0 + 0.5 * inner)))
        }
    }
}

fn exact_power_tail(d: &PathLengthDistribution) -> Result<(f64, f64)> {
    match d.spec() {
        PathLengthSpec::PowerLawTail { alpha, d0 } => Ok((*alpha, *d0)),
        _ => Err(NctkError::invalid(
            "explicit bounds in regimes (b), (c) need p(s) = d0 s^(-alpha-1) on s > 1",
        )),
    }
}

/// One grid point of a bound sweep.
#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub regime: char,
    pub alpha: f64,
    pub eps: f64,
    pub xi_norm: f64,
    pub lambda: f64,
    pub bound: f64,
    pub limit_value: f64,
    pub abs_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    pub all_pass: bool,
    /// `max |Lambda_eps| / |xi|^beta` over the sweep.
    pub c0: f64,
    pub limit_coefficient: f64,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str =
        "regime,alpha,eps,xi_norm,lambda,bound,limit_value,abs_error";
}

/// Evaluates `Lambda_eps` with `kappa = 1` along the polar axis on every
/// `(|xi|, eps)` pair and checks it against [`lambda_bound`].
pub fn verify_bounds(
    d: &PathLengthDistribution,
    regime: &Regime,
    xi_norms: &[f64],
    eps_list: &[f64],
    q: &DirectionQuadrature,
    opts: LimitOptions,
) -> Result<BoundReport> {
    let n = q.dimension();
    let dtil = lambda_limit_coefficient(d, regime, n, opts)?;
    let beta = regime.limit_exponent();
    let alpha = d.tail_exponent().unwrap_or(f64::INFINITY);
    let e = polar_axis(n);
    let pts: Vec<(f64, f64)> = eps_list
        .iter()
        .flat_map(|&eps| xi_norms.iter().map(move |&r| (eps, r)))
        .collect();
    let rows: Vec<BoundRow> = pts
        .par_iter()
        .map(|&(eps, r)| {
            let xi = [r * e[0], r * e[1], r * e[2]];
            let lambda = lambda_eps(d, Kappa::Constant, &xi, &e, eps, regime, q)?;
            let bound = lambda_bound(d, regime, eps, r)?;
            let limit_value = -dtil * r.powf(beta);
            Ok(BoundRow {
                regime: regime.kind.tag(),
                alpha,
                eps,
                xi_norm: r,
                lambda,
                bound,
                limit_value,
                abs_error: (lambda - limit_value).abs(),
                pass: lambda <= 0.0 && lambda.abs() <= bound * (1.0 + 1e-12),
            })
        })
        .collect::<Result<_>>()?;
    let all_pass = rows.iter().all(|r| r.pass);
    let c0 = rows
        .iter()
        .filter(|r| r.xi_norm > 0.0)
        .map(|r| r.lambda.abs() / r.xi_norm.powf(beta))
        .fold(0.0, f64::max);
    Ok(BoundReport {
        rows,
        all_pass,
        c0,
        limit_coefficient: dtil,
    })
}

/// Extrapolates `y(x)` to `x = 0` with a least-squares polynomial of the
/// given degree.
pub fn extrapolate_to_zero(x: &[f64], y: &[f64], degree: usize) -> f64 {
    let m = degree + 1;
    let a = nalgebra::DMatrix::from_fn(x.len(), m, |i, j| x[i].powi(j as i32));
    let b = nalgebra::DVector::from_column_slice(y);
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .expect("SVD with both factors always solves");
    sol[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathlen::PathLengthSpec;
    use crate::scatter::KernelSpec;
    use crate::sphere::{make_quadrature, normalize};
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, TAU};
    use proptest::prelude::*;

    fn power(alpha: f64, d0: f64) -> PathLengthDistribution {
        PathLengthDistribution::new(PathLengthSpec::PowerLawTail { alpha, d0 }).unwrap()
    }

    fn regime_b() -> Regime {
        Regime::new(RegimeKind::SuperDiffusive, Some(1.5)).unwrap()
    }

    #[test]
    fn w_hat_matches_exponential_closed_form() {
        let d = PathLengthDistribution::new(PathLengthSpec::Exponential { rate: 1.0 }).unwrap();
        let reg = Regime::new(RegimeKind::Diffusive, None).unwrap();
        let v = normalize(&[0.3, -0.4, 0.8]);
        for (eps, xi) in [(0.1, [1.0, 2.0, 0.5]), (0.01, [0.0, 0.0, 3.0]), (0.5, [4.0, 0.0, 1.0])] {
            let got = w_hat(&d, &xi, &v, eps, &reg).unwrap();
            let z = eps * dot(&v, &xi);
            let want = (Complex64::new(1.0, 0.0) / Complex64::new(1.0, z) - 1.0) / (eps * eps);
            assert!((got - want).norm() <= 1e-12 * want.norm().max(1e-300), "{got} {want}");
        }
        let zero = w_hat(&d, &[0.0; 3], &v, 0.1, &reg).unwrap();
        assert_eq!(zero, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn transform_is_one_plus_theta_w_hat() {
        let d = power(1.5, 1.0);
        let reg = regime_b();
        let v = normalize(&[0.1, 0.7, -0.2]);
        let xi = [1.3, -0.4, 2.0];
        for eps in [0.2, 1e-2, 1e-4] {
            let w = w_hat(&d, &xi, &v, eps, &reg).unwrap();
            let full = d.transform(eps * dot(&v, &xi));
            let theta = reg.theta(eps).unwrap();
            assert!((full - (1.0 + theta * w)).norm() < 1e-10);
        }
    }

    #[test]
    fn lambda_vanishes_at_zero_frequency() {
        let q = make_quadrature(3, 16).unwrap();
        let d = power(1.5, 1.0);
        let e = polar_axis(3);
        let l = lambda_eps(&d, Kappa::Constant, &[0.0; 3], &e, 0.1, &regime_b(), &q).unwrap();
        assert_eq!(l, 0.0);
    }

    #[test]
    fn constant_kappa_matches_quadrature_sum() {
        // xi along the polar axis keeps the |mu| kink on a quadrature break.
        let q = make_quadrature(3, 32).unwrap();
        let d = power(1.5, 1.0);
        let iso = ScatterKernel::new(KernelSpec::Isotropic, 3).unwrap();
        let e = polar_axis(3);
        let xi = [0.0, 0.0, 2.0];
        let a = lambda_eps(&d, Kappa::Constant, &xi, &e, 0.05, &regime_b(), &q).unwrap();
        let b = lambda_eps(&d, Kappa::Kernel(&iso), &xi, &e, 0.05, &regime_b(), &q).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-5);
    }

    #[test]
    fn two_dimensional_reduction_matches_quadrature() {
        let q = make_quadrature(2, 400).unwrap();
        let d = PathLengthDistribution::new(PathLengthSpec::Exponential { rate: 1.0 }).unwrap();
        let reg = Regime::new(RegimeKind::Diffusive, None).unwrap();
        let iso = ScatterKernel::new(KernelSpec::Isotropic, 2).unwrap();
        let e = polar_axis(2);
        let xi = [0.7, 0.4, 0.0];
        let a = lambda_eps(&d, Kappa::Constant, &xi, &e, 0.3, &reg, &q).unwrap();
        let b = lambda_eps(&d, Kappa::Kernel(&iso), &xi, &e, 0.3, &reg, &q).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-10);
    }

    #[test]
    fn superdiffusive_limit_approached_monotonically() {
        let q = make_quadrature(3, 32).unwrap();
        let d = power(1.5, 1.0);
        let reg = regime_b();
        let dtil = lambda_limit_coefficient(&d, &reg, 3, LimitOptions::default()).unwrap();
        let e = polar_axis(3);
        let mut prev = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
            let l = lambda_eps(&d, Kappa::Constant, &e, &e, eps, &reg, &q).unwrap();
            let err = (l + dtil).abs();
            assert!(err < prev, "eps {eps}: {err} !< {prev}");
            prev = err;
        }
        assert!(prev / dtil < 0.02);
    }

    #[test]
    fn diffusive_bound_and_limit() {
        let q = make_quadrature(3, 32).unwrap();
        let d = power(3.0, 1.0);
        let reg = Regime::new(RegimeKind::Diffusive, Some(3.0)).unwrap();
        let rep = verify_bounds(&d, &reg, &[0.1, 1.0, 5.0], &[0.1, 0.01, 0.001], &q, LimitOptions::default())
            .unwrap();
        assert!(rep.all_pass);
        let d0 = d.truncated_moment(2, f64::INFINITY).unwrap();
        assert_relative_eq!(rep.limit_coefficient, d0 / 6.0, epsilon = 1e-12);
        let last = rep.rows.iter().find(|r| r.eps == 0.001 && r.xi_norm == 1.0).unwrap();
        assert!(last.abs_error / last.limit_value.abs() < 0.01);
    }

    #[test]
    fn extrapolation_recovers_intercept() {
        let x = [0.1, 0.2, 0.3, 0.4];
        let y: Vec<f64> = x.iter().map(|t| 2.0 - 3.0 * t + 0.5 * t * t).collect();
        assert_relative_eq!(extrapolate_to_zero(&x, &y, 2), 2.0, epsilon = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn lambda_is_even_and_nonpositive(
            x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0,
            le in -4.0f64..-0.5,
        ) {
            let q = make_quadrature(3, 12).unwrap();
            let iso = ScatterKernel::new(KernelSpec::LinearAnisotropic { a: 0.4 }, 3).unwrap();
            let d = power(1.5, 1.0);
            let eps = 10f64.powf(le);
            let vp = normalize(&[0.2, 0.5, -0.3]);
            let reg = regime_b();
            let a = lambda_eps(&d, Kappa::Kernel(&iso), &[x, y, z], &vp, eps, &reg, &q).unwrap();
            let b = lambda_eps(&d, Kappa::Kernel(&iso), &[-x, -y, -z], &vp, eps, &reg, &q).unwrap();
            prop_assert!(a <= 0.0);
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        }

        #[test]
        fn constant_kappa_is_independent_of_v_prime(
            t1 in 0.0f64..PI, p1 in 0.0f64..TAU, t2 in 0.0f64..PI, p2 in 0.0f64..TAU,
        ) {
            let q = make_quadrature(3, 32).unwrap();
            let iso = ScatterKernel::new(KernelSpec::Isotropic, 3).unwrap();
            let d = power(1.5, 1.0);
            let reg = regime_b();
            let xi = [0.0, 0.0, 1.5];
            let v1 = [t1.sin() * p1.cos(), t1.sin() * p1.sin(), t1.cos()];
            let v2 = [t2.sin() * p2.cos(), t2.sin() * p2.sin(), t2.cos()];
            let a = lambda_eps(&d, Kappa::Kernel(&iso), &xi, &v1, 0.01, &reg, &q).unwrap();
            let b = lambda_eps(&d, Kappa::Kernel(&iso), &xi, &v2, 0.01, &reg, &q).unwrap();
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }
}
