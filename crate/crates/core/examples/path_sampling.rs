//! Sampling path lengths and scattering directions.
//!
//! cargo run --example path_sampling

use nctk::pathlen::{PathLengthDistribution, PathLengthSpec};
use nctk::scatter::{KernelSpec, ScatterKernel};
use nctk::sphere::polar_axis;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> nctk::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 200_000;
    for spec in [
        PathLengthSpec::Exponential { rate: 1.0 },
        PathLengthSpec::PowerLawTail { alpha: 3.0, d0: 1.0 },
        PathLengthSpec::PowerLawTail { alpha: 1.5, d0: 1.0 },
        PathLengthSpec::LorentzGas2D,
    ] {
        let d = PathLengthDistribution::new(spec.clone())?;
        let mut s: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        s.sort_by(f64::total_cmp);
        let mean = s.iter().sum::<f64>() / n as f64;
        let median = s[n / 2];
        println!(
            "{spec:?}\n  mean {mean:.4} (exact {:.4}), median {median:.4}, F(median) {:.4}, P(s > 100) {:.2e} vs {:.2e}",
            d.first_moment(),
            d.cdf(median),
            s.iter().filter(|&&x| x > 100.0).count() as f64 / n as f64,
            d.survival(100.0)
        );
    }

    let e = polar_axis(3);
    for a in [0.0, 0.3, 0.9] {
        let k = ScatterKernel::new(KernelSpec::LinearAnisotropic { a }, 3)?;
        let mean: f64 = (0..n)
            .map(|_| {
                let v = k.sample_direction(&e, &mut rng);
                v[2] * e[2] + v[0] * e[0] + v[1] * e[1]
            })
            .sum::<f64>()
            / n as f64;
        println!("a = {a}: mean cosine {mean:.4} (exact {:.4})", k.mean_cosine_exact());
    }
    Ok(())
}
