//! Free-path law of the two-dimensional periodic Lorentz gas: tail, mass
//! and the logarithmic growth of the truncated second moment.
//!
//! cargo run --example lorentz_gas

use nctk::pathlen::{printed_profile, tail_study, PathLengthDistribution, PathLengthSpec};

fn main() -> nctk::Result<()> {
    let r = tail_study(16);
    println!("s^3 p(100) = {:.6} vs 2/pi^2 = {:.6}", r.s3p_at_100, r.tail_target);
    println!("mass of the closed form {:.10}", r.mass);
    println!("gap at s = 1/2: {:.2e}", r.continuity_gap);
    for (s, m) in r.moments.iter().step_by(3) {
        println!("  M2({s:9.1}) = {m:.6}");
    }
    println!("slope of M2 against ln S: {:.6} (rel err {:.2e})", r.slope, r.slope_rel_error);

    // the sampling law is the profile divided by its mass
    let d = PathLengthDistribution::new(PathLengthSpec::LorentzGas2D)?;
    for s in [0.25, 0.75, 2.0, 10.0] {
        println!("s {s:5.2}: profile {:.6}, density {:.6}", printed_profile(s), d.density(s));
    }
    println!("first moment {:.8}", d.first_moment());
    Ok(())
}
