//! Convergence of the transport solution to the diffusion limit, per regime,
//! with the superdiffusive data also compared against a classical multiplier.
//!
//! cargo run --release --example diffusion_limit

use nctk::config::parse_config;
use nctk::spectral::{convergence_sweep, FrequencyGrid, LimitMultiplier, ModeSolver};

fn main() -> nctk::Result<()> {
    let runs = [
        ("alpha = 3", "alpha = 3\nsource_width = 1\neps = 0.1, 0.01, 0.001\n"),
        ("alpha = 1.5", "alpha = 1.5\nsource_width = 0.5\neps = 0.1, 0.01, 0.001, 0.0001\n"),
        ("alpha = 2", "alpha = 2\nsource_width = 1\neps = 0.1, 1e-3, 1e-6, 1e-9, 1e-12\n"),
    ];
    for (name, extra) in runs {
        let cfg = parse_config(&format!(
            "n = 3\nc = 0.5\nkernel = isotropic\npath_length = power_law\nsource = gaussian\nxi_count = 65\n{extra}"
        ))?;
        let model = cfg.model()?;
        let d = model.coefficients()?.limit_coefficient().unwrap_or(f64::NAN);
        let solver = ModeSolver::new(&model)?;
        let grid = FrequencyGrid::new(cfg.n, cfg.xi_max, cfg.xi_count)?.radial();
        let mult = LimitMultiplier::for_regime(&model.regime, d);
        let rep = convergence_sweep(&solver, &cfg.eps, &grid, mult)?;
        println!("{name}: D = {d:.8}, beta = {}", mult.beta);
        for r in &rep.rows {
            println!("  eps {:8.1e}  E {:.3e}  E_eta {:.3e}", r.eps, r.error, r.eta_error);
        }
        if mult.beta < 2.0 {
            let wrong = LimitMultiplier { d, beta: 2.0 };
            let ctl = convergence_sweep(&solver, &cfg.eps, &grid, wrong)?;
            let errs: Vec<String> = ctl.rows.iter().map(|r| format!("{:.3e}", r.error)).collect();
            println!("  against D |xi|^2: E = [{}]", errs.join(", "));
        }
    }
    Ok(())
}
