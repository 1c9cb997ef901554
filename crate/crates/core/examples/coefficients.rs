//! Diffusion-limit coefficients for a few models.
//!
//! cargo run --example coefficients

use nctk::coeffs::{Regime, RegimeKind};
use nctk::model::Model;
use nctk::pathlen::{PathLengthDistribution, PathLengthSpec};
use nctk::scatter::{KernelSpec, ScatterKernel};
use nctk::spectral::SourceSpec;

fn model(path: PathLengthSpec, kernel: KernelSpec, kind: RegimeKind, alpha: Option<f64>) -> nctk::Result<Model> {
    Model::new(
        3,
        0.5,
        ScatterKernel::new(kernel, 3)?,
        PathLengthDistribution::new(path)?,
        Regime::new(kind, alpha)?,
        SourceSpec::IsotropicGaussian { width: 1.0, amplitude: 1.0 },
    )
}

fn main() -> nctk::Result<()> {
    let cases = [
        (
            "exponential, isotropic",
            model(PathLengthSpec::Exponential { rate: 1.0 }, KernelSpec::Isotropic, RegimeKind::Diffusive, None)?,
        ),
        (
            "exponential, a = 0.6",
            model(
                PathLengthSpec::Exponential { rate: 1.0 },
                KernelSpec::LinearAnisotropic { a: 0.6 },
                RegimeKind::Diffusive,
                None,
            )?,
        ),
        (
            "power law alpha = 3",
            model(
                PathLengthSpec::PowerLawTail { alpha: 3.0, d0: 1.0 },
                KernelSpec::Isotropic,
                RegimeKind::Diffusive,
                Some(3.0),
            )?,
        ),
        (
            "power law alpha = 1.5",
            model(
                PathLengthSpec::PowerLawTail { alpha: 1.5, d0: 1.0 },
                KernelSpec::Isotropic,
                RegimeKind::SuperDiffusive,
                Some(1.5),
            )?,
        ),
        (
            "power law alpha = 2",
            model(
                PathLengthSpec::PowerLawTail { alpha: 2.0, d0: 0.5 },
                KernelSpec::Isotropic,
                RegimeKind::Borderline,
                Some(2.0),
            )?,
        ),
    ];
    for (name, m) in &cases {
        let c = m.coefficients()?;
        println!("{name}");
        println!("  beta0 {:.10}  mu0 {:.6}  nu1 {:.6}", c.beta0, c.mu0, c.nu1);
        for (label, v) in [("D0", c.d0_moment), ("D1", c.d1), ("D2", c.d2), ("D3", c.d3)] {
            if let Some(v) = v {
                println!("  {label} {v:.12}");
            }
        }
        println!(
            "  limit: D |xi|^{} with D = {:.12}",
            m.regime.limit_exponent(),
            c.limit_coefficient().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
