//! Uniform bound, zero-frequency identity and positivity of the solution
//! with an anisotropic kernel.
//!
//! cargo run --release --example well_posedness

use nctk::config::parse_config;
use nctk::spectral::{inverse_transform, l2_norms, FrequencyGrid, ModeSolver};

fn main() -> nctk::Result<()> {
    let cfg = parse_config(
        "n = 3\nc = 0.5\nkernel = linear\nanisotropy = 0.6\npath_length = power_law\nalpha = 1.5\n\
         source = gaussian\neps = 0.3, 0.1, 0.01, 0.001\nxi_count = 33\n",
    )?;
    let model = cfg.model()?;
    let solver = ModeSolver::new(&model)?;
    let lattice = FrequencyGrid::new(cfg.n, cfg.xi_max, cfg.xi_count)?;
    let radial = lattice.radial();
    for &eps in &cfg.eps {
        let sols = solver.solve_radial_grid(eps, &radial.r)?;
        let (phi, q) = l2_norms(&sols, &radial, &model.source);
        let zero = solver.solve_radial(eps, 0.0)?;
        let field = inverse_transform(&lattice, &solver.avg_phi_on_grid(eps, &lattice)?)?;
        println!(
            "eps {eps:6.0e}: |phi| / (|Q| / (1 - c)) = {:.4}, <G>(0) = {:.12}, min density {:.3e}, mass {:.6}",
            phi * (1.0 - model.c) / q,
            zero.avg_g.re,
            field.min(),
            field.mass()
        );
    }
    Ok(())
}
