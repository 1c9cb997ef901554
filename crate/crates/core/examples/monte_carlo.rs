//! Collision chains with Russian roulette, binned along x1 and compared with
//! the spectral collision density.
//!
//! cargo run --release --example monte_carlo [particles]

use nctk::config::parse_config;
use nctk::mc::{displacement_scaling, run_chains, LatticeSpec, McConfig, ThetaRule};
use nctk::spectral::{line_bin_masses, ModeSolver};

fn main() -> nctk::Result<()> {
    let particles: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let cfg = parse_config(
        "n = 3\nc = 0.5\nkernel = isotropic\npath_length = power_law\nalpha = 1.5\n\
         source = gaussian\neps = 0.01\nquad_order = 16\n",
    )?;
    let model = cfg.model()?;
    let eps = 0.01;
    let lattice = LatticeSpec { extent: 10.0, bins: 40, axes: 1 };
    let (hist, stats) = run_chains(
        &model,
        &McConfig { eps, particles, seed: 1, lattice, theta: None, record_displacements: false },
    )?;
    println!(
        "theta {:.4e}: {:.2} collisions per particle (expected {:.2}), longest chain {}",
        stats.theta, stats.mean_collisions, stats.expected_mean_collisions, stats.max_chain
    );
    println!(
        "weight per particle {:.5} +- {:.5} (expected {})",
        stats.weight_per_particle,
        stats.weight_per_particle_stderr,
        1.0 / (1.0 - model.c)
    );

    let dk = std::f64::consts::PI / (50.0 * lattice.extent);
    let radii: Vec<f64> = (0..=(cfg.xi_max / dk).ceil() as usize).map(|i| i as f64 * dk).collect();
    let f: Vec<f64> = ModeSolver::new(&model)?
        .solve_radial_grid(eps, &radii)?
        .iter()
        .map(|s| s.avg_phi.re)
        .collect();
    let reference = line_bin_masses(&f, dk, &lattice.centers(), lattice.width());
    println!("{:>8} {:>12} {:>12} {:>7}", "x1", "mc", "spectral", "z");
    for (i, x) in lattice.centers().into_iter().enumerate().step_by(4) {
        let z = (hist.mass(i) - reference[i]) / hist.mass_stderr(i);
        println!("{x:8.2} {:12.5e} {:12.5e} {z:7.2}", hist.mass(i), reference[i]);
    }

    // spread of the kill-time displacement as eps shrinks
    let thin = parse_config("n = 3\nc = 0.5\nkernel = isotropic\npath_length = power_law\nalpha = 3\neps = 0.1\n")?;
    let rep = displacement_scaling(&thin.model()?, &[0.2, 0.1, 0.05], 4_000, 3, ThetaRule::Regime)?;
    for r in &rep.rows {
        println!("eps {:.0e}: IQR of x1 {:.4}", r.eps, r.iqr);
    }
    println!("ratios {:?}, within {:?}: {}", rep.ratios, rep.band, rep.within_band);
    Ok(())
}
