//! The scaled symbol Lambda_eps approaching its limit, and the explicit
//! bounds on a small (|xi|, eps) grid.
//!
//! cargo run --example lambda_limits

use nctk::coeffs::{Regime, RegimeKind};
use nctk::pathlen::{PathLengthDistribution, PathLengthSpec};
use nctk::sphere::{make_quadrature, polar_axis};
use nctk::symbol::{
    extrapolate_to_zero, lambda_eps, lambda_limit_coefficient, verify_bounds, Kappa, LimitOptions,
};

fn main() -> nctk::Result<()> {
    let q = make_quadrature(3, 8)?;
    let e = polar_axis(3);
    for (alpha, kind, eps) in [
        (3.0, RegimeKind::Diffusive, vec![1e-1, 1e-2, 1e-3, 1e-4]),
        (1.5, RegimeKind::SuperDiffusive, vec![1e-1, 1e-2, 1e-3, 1e-4]),
        (2.0, RegimeKind::Borderline, vec![1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12]),
    ] {
        let d = PathLengthDistribution::new(PathLengthSpec::PowerLawTail { alpha, d0: 0.5 })?;
        let regime = Regime::new(kind, Some(alpha))?;
        let limit = lambda_limit_coefficient(&d, &regime, 3, LimitOptions::default())?;
        println!("alpha = {alpha}: Lambda -> -{limit:.10} |xi|^{}", regime.limit_exponent());
        let mut values = Vec::new();
        for &eps in &eps {
            let l = lambda_eps(&d, Kappa::Constant, &e, &e, eps, &regime, &q)?;
            println!("  eps {eps:8.1e}  Lambda {l:.10}  rel err {:.3e}", (l + limit).abs() / limit);
            values.push(l);
        }
        if kind == RegimeKind::Borderline {
            // the error decays like 1 / |ln eps|
            let x: Vec<f64> = eps.iter().map(|e| 1.0 / e.ln().abs()).collect();
            let extrapolated = -extrapolate_to_zero(&x, &values, 1);
            let without = lambda_limit_coefficient(&d, &regime, 3, LimitOptions { d3_includes_d0: false })?;
            println!("  extrapolated {extrapolated:.10}; with d0 {limit:.10}, without d0 {without:.10}");
        }

        let xi: Vec<f64> = (0..5).map(|i| 10f64.powf(-1.0 + 0.5 * i as f64)).collect();
        let rep = verify_bounds(&d, &regime, &xi, &eps, &q, LimitOptions::default())?;
        println!(
            "  bounds: {}/{} grid points pass, max |Lambda| / |xi|^beta = {:.4}",
            rep.rows.iter().filter(|r| r.pass).count(),
            rep.rows.len(),
            rep.c0
        );
    }
    Ok(())
}
