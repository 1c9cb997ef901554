use std::f64::consts::PI;

use nctk::coeffs::{d2_coefficient, Regime, RegimeKind};
use nctk::config::parse_config;
use nctk::model::Model;
use nctk::pathlen::{PathLengthDistribution, PathLengthSpec};
use nctk::scatter::{KernelSpec, ScatterKernel};
use nctk::spectral::SourceSpec;
use nctk::sphere::polar_axis;

/// Frozen value of `D2` for `alpha = 1.5`, `d0 = 1`, `n = 3`.
const D2_GOLDEN: f64 = 0.668_434_206_568_266_8;

/// `2 d0 C(alpha) int |mu|^alpha dv` with
/// `C = int sin^2(t/2) t^(-alpha-1) dt = pi / (4 Gamma(1 + alpha) sin(pi alpha / 2))`.
fn d2_closed_form_three_halves() -> f64 {
    let alpha = 1.5;
    let gamma = 0.75 * PI.sqrt();
    let c = PI / (4.0 * gamma * (PI * alpha / 2.0).sin());
    2.0 * c / (alpha + 1.0)
}

#[test]
fn d2_matches_golden_and_closed_form() {
    let d2 = d2_coefficient(1.5, 1.0, 3, &polar_axis(3)).unwrap();
    let exact = d2_closed_form_three_halves();
    assert!((d2 - D2_GOLDEN).abs() <= 1e-7 * D2_GOLDEN, "{d2}");
    assert!((exact - D2_GOLDEN).abs() <= 1e-7 * D2_GOLDEN, "{exact}");
}

#[test]
fn d2_is_rotation_invariant() {
    let e = [0.48, -0.6, 0.64];
    let a = d2_coefficient(1.5, 1.0, 3, &e).unwrap();
    assert!((a - D2_GOLDEN).abs() <= 1e-7 * D2_GOLDEN, "{a}");
}

#[test]
fn d2_scales_with_tail_coefficient() {
    let a = d2_coefficient(1.5, 0.25, 3, &polar_axis(3)).unwrap();
    assert!((a - 0.25 * D2_GOLDEN).abs() <= 1e-7 * D2_GOLDEN);
}

#[test]
fn exponential_isotropic_coefficients() {
    let model = Model::new(
        3,
        0.5,
        ScatterKernel::new(KernelSpec::Isotropic, 3).unwrap(),
        PathLengthDistribution::new(PathLengthSpec::Exponential { rate: 1.0 }).unwrap(),
        Regime::new(RegimeKind::Diffusive, None).unwrap(),
        SourceSpec::IsotropicGaussian { width: 1.0, amplitude: 1.0 },
    )
    .unwrap();
    let set = model.coefficients().unwrap();
    assert!((set.d3_without_d0 - 1.0 / 6.0).abs() <= 1e-10);
    assert!((set.d0_moment.unwrap() - 2.0).abs() <= 1e-8);
    assert!(set.nu1.abs() <= 1e-8);
    assert!((set.d1.unwrap() - 1.0 / 3.0).abs() <= 1e-8);
    assert!((set.beta0 - 1.0).abs() <= 1e-8);
}

#[test]
fn config_and_direct_models_agree() {
    let cfg = parse_config(
        "n = 3\nc = 0.5\nkernel = isotropic\npath_length = power_law\nalpha = 1.5\neps = 0.1\n",
    )
    .unwrap();
    let set = cfg.model().unwrap().coefficients().unwrap();
    assert!((set.d2.unwrap() - D2_GOLDEN).abs() <= 1e-7 * D2_GOLDEN);
}
