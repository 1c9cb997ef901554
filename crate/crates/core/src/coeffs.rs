//! Scaling functions `theta(eps)` and the diffusion coefficients of the
//! three tail regimes.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{NctkError, Result};
use crate::pathlen::{PathLengthDistribution, TailIntegrals};
use crate::quad::{integrate_breaks, Tolerance};
use crate::scatter::ScatterKernel;
use crate::sphere::{dot, polar_axis, DirectionQuadrature, Vec3};

/// Tail regime of the path-length law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeKind {
    /// Finite second moment (`alpha > 2` or no algebraic tail); `theta = eps^2`.
    Diffusive,
    /// `1 < alpha < 2`; `theta = eps^alpha`.
    SuperDiffusive,
    /// `alpha = 2`; `theta = -eps^2 ln eps`.
    Borderline,
}

impl RegimeKind {
    pub fn tag(self) -> char {
        match self {
            RegimeKind::Diffusive => 'a',
            RegimeKind::SuperDiffusive => 'b',
            RegimeKind::Borderline => 'c',
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag.trim() {
            "a" => Some(RegimeKind::Diffusive),
            "b" => Some(RegimeKind::SuperDiffusive),
            "c" => Some(RegimeKind::Borderline),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub kind: RegimeKind,
    /// Tail exponent; `None` only for the diffusive regime without algebraic tail.
    pub alpha: Option<f64>,
}

impl Regime {
    pub fn new(kind: RegimeKind, alpha: Option<f64>) -> Result<Self> {
        let ok = match (kind, alpha) {
            (_, Some(a)) if !(a > 1.0) => false,
            (RegimeKind::Diffusive, None) => true,
            (RegimeKind::Diffusive, Some(a)) => a > 2.0,
            (RegimeKind::SuperDiffusive, Some(a)) => a < 2.0,
            (RegimeKind::Borderline, Some(a)) => (a - 2.0).abs() < 1e-12,
            (_, None) => false,
        };
        if !ok {
            return Err(NctkError::invalid(format!(
                "regime ({}) is inconsistent with tail exponent {:?}",
                kind.tag(),
                alpha
            )));
        }
        Ok(Regime { kind, alpha })
    }

    /// Regime implied by a distribution's tail.
    pub fn for_distribution(d: &PathLengthDistribution) -> Self {
        match d.tail_exponent() {
            None => Regime {
                kind: RegimeKind::Diffusive,
                alpha: None,
            },
            Some(a) if a > 2.0 => Regime {
                kind: RegimeKind::Diffusive,
                alpha: Some(a),
            },
            Some(a) if a < 2.0 => Regime {
                kind: RegimeKind::SuperDiffusive,
                alpha: Some(a),
            },
            Some(a) => Regime {
                kind: RegimeKind::Borderline,
                alpha: Some(a),
            },
        }
    }

    /// Checks that the distribution's tail matches this regime.
    pub fn check_distribution(&self, d: &PathLengthDistribution) -> Result<()> {
        let implied = Regime::for_distribution(d);
        let same_alpha = match (implied.alpha, self.alpha) {
            (Some(a), Some(b)) => (a - b).abs() < 1e-12,
            (None, None) => true,
            _ => false,
        };
        if implied.kind != self.kind || !same_alpha {
            return Err(NctkError::invalid(format!(
                "regime ({}) with alpha {:?} does not match the path-length tail (regime ({}), alpha {:?})",
                self.kind.tag(),
                self.alpha,
                implied.kind.tag(),
                implied.alpha
            )));
        }
        Ok(())
    }

    /// Exponent of the limit multiplier `D |xi|^beta`.
    pub fn limit_exponent(&self) -> f64 {
        match self.kind {
            RegimeKind::SuperDiffusive => self.alpha.unwrap_or(2.0),
            _ => 2.0,
        }
    }

    /// Scaling `theta(eps)` for `0 < eps < 1`.
    pub fn theta(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(NctkError::OutOfDomain {
                what: "epsilon (must lie in (0, 1))",
                value: eps,
            });
        }
        Ok(match self.kind {
            RegimeKind::Diffusive => eps * eps,
            RegimeKind::SuperDiffusive => eps.powf(self.alpha.unwrap_or(2.0)),
            RegimeKind::Borderline => -eps * eps * eps.ln(),
        })
    }
}

/// Options for [`compute_coefficients`].
#[derive(Debug, Clone, Copy)]
pub struct CoefficientOptions {
    /// Multiply `D3` by the tail coefficient `d0`.
    pub d3_includes_d0: bool,
}

impl Default for CoefficientOptions {
    fn default() -> Self {
        CoefficientOptions {
            d3_includes_d0: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientSet {
    pub n: usize,
    pub regime: Regime,
    /// `int s^2 p ds`, when finite.
    pub d0_moment: Option<f64>,
    pub first_moment: f64,
    pub beta0: f64,
    pub mu0: f64,
    pub nu0: f64,
    pub nu1: f64,
    /// `int (v . e)^2 dv`.
    pub m2: f64,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub d3: Option<f64>,
    /// `(1/2) int (v . e)^2 dv` without the tail coefficient.
    pub d3_without_d0: f64,
    pub tail_d0: Option<f64>,
    pub provenance: BTreeMap<&'static str, &'static str>,
}

impl CoefficientSet {
    /// Coefficient of the limit multiplier for the set's regime.
    pub fn limit_coefficient(&self) -> Option<f64> {
        match self.regime.kind {
            RegimeKind::Diffusive => self.d1,
            RegimeKind::SuperDiffusive => self.d2,
            RegimeKind::Borderline => self.d3,
        }
    }
}

/// Computes every coefficient that exists for the given data. Fails when the
/// coefficient required by `regime` does not.
pub fn compute_coefficients(
    d: &PathLengthDistribution,
    k: &ScatterKernel,
    q: &DirectionQuadrature,
    regime: &Regime,
    opts: CoefficientOptions,
) -> Result<CoefficientSet> {
    let n = q.dimension();
    if k.dimension() != n {
        return Err(NctkError::invalid("kernel and quadrature dimensions differ"));
    }
    let mu0 = k.mean_cosine(q)?;
    if mu0 < 0.0 {
        log::warn!("mean scattering cosine {mu0} is negative; nu1 < 0");
    }
    let mean = d.first_moment();
    let nu0 = 1.0 / (1.0 - mu0);
    let nu1 = mean * mean * mu0 / (1.0 - mu0);
    let e = polar_axis(n);
    let m2 = q.integrate(|v| dot(v, &e).powi(2));

    let d0_moment = d.truncated_moment(2, f64::INFINITY).ok();
    let d1 = d0_moment.map(|dm| nu1 * m2 + 0.5 * m2 * dm);
    if let Some(v) = d1 {
        if v <= 0.0 {
            log::warn!("D1 = {v} is not positive");
        }
    }
    let alpha = d.tail_exponent();
    let tail_d0 = d.tail_coefficient();
    let d2 = match (alpha, tail_d0) {
        (Some(a), Some(c)) if a > 1.0 && a < 2.0 => Some(d2_coefficient(a, c, n, &e)?),
        _ => None,
    };
    let d3_without_d0 = 0.5 * m2;
    let d3 = match (alpha, tail_d0) {
        (Some(a), Some(c)) if (a - 2.0).abs() < 1e-12 => Some(if opts.d3_includes_d0 {
            c * d3_without_d0
        } else {
            d3_without_d0
        }),
        _ => None,
    };

    let set = CoefficientSet {
        n,
        regime: *regime,
        d0_moment,
        first_moment: mean,
        beta0: d.beta0(),
        mu0,
        nu0,
        nu1,
        m2,
        d1,
        d2,
        d3,
        d3_without_d0,
        tail_d0,
        provenance: provenance(opts),
    };
    match (regime.kind, set.limit_coefficient()) {
        (_, Some(_)) => Ok(set),
        (RegimeKind::Diffusive, None) => Err(NctkError::DivergentMoment {
            order: 2,
            alpha: alpha.unwrap_or(f64::NAN),
        }),
        (kind, None) => Err(NctkError::invalid(format!(
            "regime ({}) needs an algebraic tail matching its exponent",
            kind.tag()
        ))),
    }
}

fn provenance(opts: CoefficientOptions) -> BTreeMap<&'static str, &'static str> {
    let mut m = BTreeMap::new();
    m.insert("d0_moment", "int_0^inf s^2 p(s) ds");
    m.insert("mu0", "int sigma(v.v') (v.v') dv by direction quadrature");
    m.insert("nu0", "1 / (1 - mu0)");
    m.insert("nu1", "(int s p ds)^2 mu0 / (1 - mu0)");
    m.insert("d1", "nu1 m2 + D0 m2 / 2, m2 = int (v.e)^2 dv");
    m.insert(
        "d2",
        "2 d0 int_S int_0^inf sin^2(tau (v.e)/2) tau^(-alpha-1) dtau dv, nested adaptive quadrature",
    );
    m.insert(
        "d3",
        if opts.d3_includes_d0 {
            "d0 (1/2) int (v.e)^2 dv"
        } else {
            "(1/2) int (v.e)^2 dv"
        },
    );
    m.insert("beta0", "int_0^inf (1 - F(s)) ds");
    m
}

/// Upper limit of the explicit tau integral in `D2`; beyond it `sin^2` is
/// replaced by its mean `1/2`.
pub const D2_TAU_CUT: f64 = 1e4;

/// `g(mu) = int_0^inf sin^2(tau mu / 2) tau^(-alpha-1) dtau`.
pub(crate) fn d2_radial(alpha: f64, tail: &TailIntegrals, mu: f64) -> f64 {
    let m = mu.abs().min(1.0);
    if m == 0.0 {
        return 0.0;
    }
    // [0, 1]: (1/2) sum_k (-1)^{k+1} m^{2k} / ((2k)! (2k - alpha)), m <= 1
    let m2 = m * m;
    let mut pw = 1.0;
    let mut fact = 1.0;
    let mut head = 0.0;
    for k in 1..30 {
        let j = 2 * k;
        pw *= m2;
        fact *= ((j - 1) * j) as f64;
        let term = pw / (fact * (j as f64 - alpha));
        head += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 * head.abs() {
            break;
        }
    }
    head *= 0.5;
    // [1, cut]: (1/2) int tau^(-alpha-1) (1 - cos(m tau))
    let (a, _) = tail.eval(m);
    let (b, _) = tail.eval(m * D2_TAU_CUT);
    let mid = 0.5 * (a - b * D2_TAU_CUT.powf(-alpha));
    head + mid + D2_TAU_CUT.powf(-alpha) / (2.0 * alpha)
}

/// `D2 = 2 d0 int_S g(v . e) dv` with the sphere integral done by nested
/// adaptive quadrature in global coordinates, for an arbitrary unit `e`.
pub fn d2_coefficient(alpha: f64, d0: f64, n: usize, e: &Vec3) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(NctkError::invalid(format!(
            "D2 needs 1 < alpha < 2, got {alpha}"
        )));
    }
    let tail = TailIntegrals::new(alpha);
    let g = |mu: f64| d2_radial(alpha, &tail, mu);
    let inner_tol = Tolerance::new(1e-15, 1e-11);
    let outer_tol = Tolerance::new(1e-14, 1e-10);
    let phi0 = e[1].atan2(e[0]);
    let rxy = e[0].hypot(e[1]);
    // breakpoints of phi where A cos(phi - phi0) + B = 0
    let azimuth_breaks = |amp: f64, shift: f64| {
        let mut pts = vec![0.0, 2.0 * PI];
        if amp > shift.abs() {
            let c = (-shift / amp).acos();
            for p in [phi0 + c, phi0 - c] {
                pts.push(p.rem_euclid(2.0 * PI));
            }
        }
        pts.sort_by(f64::total_cmp);
        pts
    };
    let sphere_mean = match n {
        2 => {
            let pts = azimuth_breaks(rxy, 0.0);
            integrate_breaks(
                |phi: f64| g(rxy * (phi - phi0).cos()),
                &pts,
                inner_tol,
            )
            .value
                / (2.0 * PI)
        }
        3 => {
            let tc = (e[2].abs()).atan2(rxy);
            let mut outer = vec![0.0, tc, PI - tc, PI];
            outer.sort_by(f64::total_cmp);
            integrate_breaks(
                |th: f64| {
                    let (st, ct) = th.sin_cos();
                    let amp = st * rxy;
                    let shift = ct * e[2];
                    let pts = azimuth_breaks(amp, shift);
                    let inner = integrate_breaks(
                        |phi: f64| g(amp * (phi - phi0).cos() + shift),
                        &pts,
                        inner_tol,
                    )
                    .value;
                    0.5 * st * inner / (2.0 * PI)
                },
                &outer,
                outer_tol,
            )
            .value
        }
        other => return Err(NctkError::UnsupportedDimension(other)),
    };
    Ok(2.0 * d0 * sphere_mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathlen::PathLengthSpec;
    use crate::scatter::KernelSpec;
    use crate::sphere::{make_quadrature, normalize};
    use approx::assert_relative_eq;

    #[test]
    fn theta_values() {
        let a = Regime::new(RegimeKind::Diffusive, Some(3.0)).unwrap();
        let b = Regime::new(RegimeKind::SuperDiffusive, Some(1.5)).unwrap();
        let c = Regime::new(RegimeKind::Borderline, Some(2.0)).unwrap();
        assert_relative_eq!(a.theta(0.1).unwrap(), 0.01, epsilon = 1e-16);
        assert_relative_eq!(b.theta(0.01).unwrap(), 0.001, epsilon = 1e-16);
        assert_relative_eq!(c.theta(0.1).unwrap(), 0.01 * 10f64.ln(), epsilon = 1e-16);
        assert!(c.theta(1.0).is_err());
        assert!(Regime::new(RegimeKind::Diffusive, Some(1.5)).is_err());
        assert!(Regime::new(RegimeKind::Borderline, Some(2.5)).is_err());
    }

    #[test]
    fn borderline_theta_increases_below_inverse_e() {
        let c = Regime::new(RegimeKind::Borderline, Some(2.0)).unwrap();
        let mut prev = 0.0;
        for i in 1..100 {
            let eps = i as f64 / 100.0 * (-1.0f64).exp();
            let t = c.theta(eps).unwrap();
            assert!(t > prev);
            prev = t;
        }
    }

    #[test]
    fn exponential_isotropic_goldens() {
        let d = PathLengthDistribution::new(PathLengthSpec::Exponential { rate: 1.0 }).unwrap();
        let k = ScatterKernel::new(KernelSpec::Isotropic, 3).unwrap();
        let q = make_quadrature(3, 8).unwrap();
        let r = Regime::for_distribution(&d);
        let c = compute_coefficients(&d, &k, &q, &r, CoefficientOptions::default()).unwrap();
        assert_relative_eq!(c.d0_moment.unwrap(), 2.0, epsilon = 1e-12);
        assert!(c.nu1.abs() < 1e-14);
        assert_relative_eq!(c.d1.unwrap(), 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(c.d3_without_d0, 1.0 / 6.0, epsilon = 1e-13);
    }

    #[test]
    fn anisotropic_d1_includes_nu1() {
        let d = PathLengthDistribution::new(PathLengthSpec::Exponential { rate: 1.0 }).unwrap();
        let q = make_quadrature(3, 8).unwrap();
        let r = Regime::for_distribution(&d);
        for a in [0.3, -0.3] {
            let k = ScatterKernel::new(KernelSpec::LinearAnisotropic { a }, 3).unwrap();
            let c = compute_coefficients(&d, &k, &q, &r, CoefficientOptions::default()).unwrap();
            let mu0 = a / 3.0;
            assert_relative_eq!(c.nu1, mu0 / (1.0 - mu0), epsilon = 1e-12);
            assert_relative_eq!(c.d1.unwrap(), c.nu1 / 3.0 + 2.0 / 6.0, epsilon = 1e-12);
            assert!(c.d1.unwrap() > 0.0);
        }
    }

    #[test]
    fn d2_is_rotation_invariant() {
        let dirs = [
            [0.0, 0.0, 1.0],
            [0.3, -0.4, 0.2],
            [1.0, 0.0, 0.0],
            [-0.7, 0.1, 0.7],
            [0.2, 0.9, -0.3],
        ];
        let base = d2_coefficient(1.5, 1.0, 3, &dirs[0]).unwrap();
        for e in dirs {
            let v = d2_coefficient(1.5, 1.0, 3, &normalize(&e)).unwrap();
            assert!((v - base).abs() < 1e-8, "{v} vs {base}");
        }
    }

    #[test]
    fn coefficients_are_pure() {
        let d = PathLengthDistribution::new(PathLengthSpec::PowerLawTail { alpha: 1.5, d0: 1.0 }).unwrap();
        let k = ScatterKernel::new(KernelSpec::Isotropic, 3).unwrap();
        let q = make_quadrature(3, 8).unwrap();
        let r = Regime::for_distribution(&d);
        let a = compute_coefficients(&d, &k, &q, &r, CoefficientOptions::default()).unwrap();
        let b = compute_coefficients(&d, &k, &q, &r, CoefficientOptions::default()).unwrap();
        assert_eq!(a.d2.unwrap().to_bits(), b.d2.unwrap().to_bits());
        assert!(a.d1.is_none());
    }

    #[test]
    fn d3_toggle() {
        let d = PathLengthDistribution::new(PathLengthSpec::PowerLawTail { alpha: 2.0, d0: 0.5 }).unwrap();
        let k = ScatterKernel::new(KernelSpec::Isotropic, 3).unwrap();
        let q = make_quadrature(3, 8).unwrap();
        let r = Regime::for_distribution(&d);
        assert_eq!(r.kind, RegimeKind::Borderline);
        let with = compute_coefficients(&d, &k, &q, &r, CoefficientOptions { d3_includes_d0: true }).unwrap();
        let without = compute_coefficients(&d, &k, &q, &r, CoefficientOptions { d3_includes_d0: false }).unwrap();
        assert_relative_eq!(with.d3.unwrap(), 0.5 / 6.0, epsilon = 1e-13);
        assert_relative_eq!(without.d3.unwrap(), 1.0 / 6.0, epsilon = 1e-13);
    }

    #[test]
    fn regime_mismatch_is_reported() {
        let d = PathLengthDistribution::new(PathLengthSpec::PowerLawTail { alpha: 1.5, d0: 1.0 }).unwrap();
        let r = Regime::new(RegimeKind::Diffusive, Some(3.0)).unwrap();
        assert!(r.check_distribution(&d).is_err());
        let k = ScatterKernel::new(KernelSpec::Isotropic, 3).unwrap();
        let q = make_quadrature(3, 8).unwrap();
        assert!(matches!(
            compute_coefficients(&d, &k, &q, &r, CoefficientOptions::default()),
            Err(NctkError::DivergentMoment { .. })
        ));
    }
}
