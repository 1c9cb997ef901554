//! Monte Carlo collision chains. Each source particle starts with weight
//! `theta`, flies `eps s` with `s ~ p`, scores its weight at every collision,
//! survives Russian roulette with probability `1 - theta (1 - c)` and is
//! redirected from the post-collision density `(sigma - theta (1 - c)) / (1 - theta (1 - c))`.
//! The histogram therefore estimates the collision density, whose transform
//! is `<phi^>`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{NctkError, Result};
use crate::model::Model;
use crate::scatter::sample_isotropic;
use crate::spectral::SourceSpec;
use crate::sphere::{dot, Vec3};

/// Particles per RNG stream. Results depend on the seed and this constant,
/// never on the number of worker threads.
pub const BATCH: u64 = 1024;

/// Uniform bins on `[-extent, extent]` along each of the first `axes`
/// coordinates; the remaining coordinates are integrated out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeSpec {
    pub extent: f64,
    pub bins: usize,
    pub axes: usize,
}

impl LatticeSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(NctkError::invalid(format!(
                "histogram extent {} must be positive",
                self.extent
            )));
        }
        if self.bins == 0 || self.axes == 0 || self.axes > n {
            return Err(NctkError::invalid(format!(
                "histogram needs bins >= 1 and 1 <= axes <= {n}"
            )));
        }
        if self.bins.checked_pow(self.axes as u32).is_none_or(|t| t > 1 << 26) {
            return Err(NctkError::invalid("histogram has too many bins"));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        2.0 * self.extent / self.bins as f64
    }

    pub fn len(&self) -> usize {
        self.bins.pow(self.axes as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bin centers along one axis.
    pub fn centers(&self) -> Vec<f64> {
        let h = self.width();
        (0..self.bins).map(|i| -self.extent + (i as f64 + 0.5) * h).collect()
    }

    fn index(&self, x: &[f64]) -> Option<usize> {
        let h = self.width();
        let mut flat = 0;
        let mut stride = 1;
        for &xa in &x[..self.axes] {
            let f = ((xa + self.extent) / h).floor();
            if !(f >= 0.0 && f < self.bins as f64) {
                return None;
            }
            flat += f as usize * stride;
            stride *= self.bins;
        }
        Some(flat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub eps: f64,
    pub particles: u64,
    pub seed: u64,
    pub lattice: LatticeSpec,
    /// Replaces the regime's `theta(eps)`.
    pub theta: Option<f64>,
    /// Keep every particle's `x_1` displacement at kill time.
    pub record_displacements: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CollisionHistogram {
    pub lattice: LatticeSpec,
    /// Per-bin sums of scored weight.
    pub sum: Vec<f64>,
    /// Per-bin sums over particles of the squared per-particle bin score.
    pub sum_sq: Vec<f64>,
    pub particles: u64,
    pub total_weight: f64,
    /// Weight scored outside the lattice.
    pub outside_weight: f64,
}

/// One histogram bin: its center, density estimate and standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub center: Vec<f64>,
    pub density: f64,
    pub stderr: f64,
}

impl CollisionHistogram {
    /// Estimated mass in bin `i`, per source particle.
    pub fn mass(&self, i: usize) -> f64 {
        self.sum[i] / self.particles as f64
    }

    /// Standard error of [`CollisionHistogram::mass`], from per-particle totals.
    pub fn mass_stderr(&self, i: usize) -> f64 {
        let n = self.particles as f64;
        let mean = self.sum[i] / n;
        let var = (self.sum_sq[i] / n - mean * mean).max(0.0);
        (var / (n - 1.0).max(1.0)).sqrt()
    }

    pub fn rows(&self) -> Vec<HistogramRow> {
        let centers = self.lattice.centers();
        let vol = self.lattice.width().powi(self.lattice.axes as i32);
        (0..self.sum.len())
            .map(|i| {
                let mut center = Vec::with_capacity(self.lattice.axes);
                let mut r = i;
                for _ in 0..self.lattice.axes {
                    center.push(centers[r % self.lattice.bins]);
                    r /= self.lattice.bins;
                }
                HistogramRow {
                    center,
                    density: self.mass(i) / vol,
                    stderr: self.mass_stderr(i) / vol,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainStats {
    pub particles: u64,
    pub eps: f64,
    pub theta: f64,
    /// Roulette survival probability `1 - theta (1 - c)`.
    pub survival: f64,
    pub total_collisions: u64,
    pub mean_collisions: f64,
    /// `1 / (theta (1 - c))`.
    pub expected_mean_collisions: f64,
    pub max_chain: u64,
    pub chain_cap: u64,
    /// Chains stopped by the cap rather than by roulette.
    pub capped_chains: u64,
    /// Total scored weight per particle; tends to `q^(0) / (1 - c)`.
    pub weight_per_particle: f64,
    pub weight_per_particle_stderr: f64,
    /// Mean of `v . v'` over all redirections; `None` on the 1D fast path.
    pub mean_cosine: Option<f64>,
    pub mean_cosine_stderr: Option<f64>,
    /// Range over particles of the accumulated angular weight correction.
    pub weight_correction_min: f64,
    pub weight_correction_max: f64,
    #[serde(skip)]
    pub displacements: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Partial {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    outside: f64,
    collisions: u64,
    max_chain: u64,
    capped: u64,
    weight: f64,
    weight_sq: f64,
    cos_sum: f64,
    cos_sq: f64,
    resamples: u64,
    corr_min: f64,
    corr_max: f64,
    displacements: Vec<f64>,
}

impl Partial {
    fn new(bins: usize) -> Self {
        Partial {
            sum: vec![0.0; bins],
            sum_sq: vec![0.0; bins],
            outside: 0.0,
            collisions: 0,
            max_chain: 0,
            capped: 0,
            weight: 0.0,
            weight_sq: 0.0,
            cos_sum: 0.0,
            cos_sq: 0.0,
            resamples: 0,
            corr_min: f64::INFINITY,
            corr_max: f64::NEG_INFINITY,
            displacements: Vec::new(),
        }
    }
}

/// Per-particle bin scores, flushed into the squared sums when the chain ends.
struct Scratch {
    bins: Vec<f64>,
    touched: Vec<usize>,
    total: f64,
}

impl Scratch {
    fn score(&mut self, lat: &LatticeSpec, x: &[f64], w: f64, out: &mut Partial) {
        self.total += w;
        match lat.index(x) {
            Some(b) => {
                if self.bins[b] == 0.0 {
                    self.touched.push(b);
                }
                self.bins[b] += w;
            }
            None => out.outside += w,
        }
    }

    fn flush(&mut self, out: &mut Partial) {
        for &b in &self.touched {
            let s = self.bins[b];
            out.sum[b] += s;
            out.sum_sq[b] += s * s;
            self.bins[b] = 0.0;
        }
        self.touched.clear();
        out.weight += self.total;
        out.weight_sq += self.total * self.total;
        self.total = 0.0;
    }
}

/// Runs `cfg.particles` collision chains and bins their collision sites.
pub fn run_chains(model: &Model, cfg: &McConfig) -> Result<(CollisionHistogram, ChainStats)> {
    model.validate()?;
    cfg.lattice.validate(model.n)?;
    if cfg.particles == 0 {
        return Err(NctkError::invalid("Monte Carlo needs at least one particle"));
    }
    let (width, amplitude) = match model.source {
        SourceSpec::IsotropicGaussian { width, amplitude } => (width, amplitude),
        SourceSpec::Tabulated { .. } => {
            return Err(NctkError::invalid(
                "Monte Carlo sampling needs a Gaussian source",
            ))
        }
    };
    let theta = match cfg.theta {
        Some(t) => {
            if !(t > 0.0 && t <= 1.0) {
                return Err(NctkError::invalid(format!("theta override {t} outside (0, 1]")));
            }
            let margin = model.kernel.sigma0() - t * (1.0 - model.c);
            if margin < 0.0 {
                return Err(NctkError::EpsilonTooLarge {
                    eps: cfg.eps,
                    margin,
                });
            }
            t
        }
        None => model.check_eps(cfg.eps)?,
    };
    let t = theta * (1.0 - model.c);
    let cap = (100.0 / t).ceil().min(u64::MAX as f64 / 2.0) as u64;
    let run = Run {
        model,
        cfg,
        width,
        w0: theta * amplitude,
        t,
        cap,
        fast: model.n == 3 && model.kernel.is_isotropic() && cfg.lattice.axes == 1,
    };
    let batches = cfg.particles.div_ceil(BATCH);
    let parts: Vec<Partial> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let count = BATCH.min(cfg.particles - b * BATCH);
            run.batch(b, count)
        })
        .collect();

    let mut acc = Partial::new(cfg.lattice.len());
    for p in parts {
        for (a, v) in acc.sum.iter_mut().zip(&p.sum) {
            *a += v;
        }
        for (a, v) in acc.sum_sq.iter_mut().zip(&p.sum_sq) {
            *a += v;
        }
        acc.outside += p.outside;
        acc.collisions += p.collisions;
        acc.max_chain = acc.max_chain.max(p.max_chain);
        acc.capped += p.capped;
        acc.weight += p.weight;
        acc.weight_sq += p.weight_sq;
        acc.cos_sum += p.cos_sum;
        acc.cos_sq += p.cos_sq;
        acc.resamples += p.resamples;
        acc.corr_min = acc.corr_min.min(p.corr_min);
        acc.corr_max = acc.corr_max.max(p.corr_max);
        acc.displacements.extend(p.displacements);
    }
    let n = cfg.particles as f64;
    let mean_w = acc.weight / n;
    let var_w = (acc.weight_sq / n - mean_w * mean_w).max(0.0);
    let (mean_cosine, mean_cosine_stderr) = if run.fast || acc.resamples == 0 {
        (None, None)
    } else {
        let r = acc.resamples as f64;
        let m = acc.cos_sum / r;
        let v = (acc.cos_sq / r - m * m).max(0.0);
        (Some(m), Some((v / r).sqrt()))
    };
    let hist = CollisionHistogram {
        lattice: cfg.lattice,
        sum: acc.sum,
        sum_sq: acc.sum_sq,
        particles: cfg.particles,
        total_weight: acc.weight,
        outside_weight: acc.outside,
    };
    let stats = ChainStats {
        particles: cfg.particles,
        eps: cfg.eps,
        theta,
        survival: 1.0 - t,
        total_collisions: acc.collisions,
        mean_collisions: acc.collisions as f64 / n,
        expected_mean_collisions: 1.0 / t,
        max_chain: acc.max_chain,
        chain_cap: cap,
        capped_chains: acc.capped,
        weight_per_particle: mean_w,
        weight_per_particle_stderr: (var_w / (n - 1.0).max(1.0)).sqrt(),
        mean_cosine,
        mean_cosine_stderr,
        weight_correction_min: acc.corr_min,
        weight_correction_max: acc.corr_max,
        displacements: acc.displacements,
    };
    Ok((hist, stats))
}

struct Run<'a> {
    model: &'a Model,
    cfg: &'a McConfig,
    width: f64,
    w0: f64,
    t: f64,
    cap: u64,
    fast: bool,
}

impl Run<'_> {
    fn batch(&self, b: u64, count: u64) -> Partial {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(b);
        let lat = &self.cfg.lattice;
        let mut out = Partial::new(lat.len());
        let mut scratch = Scratch {
            bins: vec![0.0; lat.len()],
            touched: Vec::new(),
            total: 0.0,
        };
        for _ in 0..count {
            if self.fast {
                self.chain_line(&mut rng, &mut scratch, &mut out);
            } else {
                self.chain(&mut rng, &mut scratch, &mut out);
            }
            scratch.flush(&mut out);
        }
        out
    }

    fn finish(&self, out: &mut Partial, k: u64, corr: f64, disp: f64) {
        out.collisions += k;
        out.max_chain = out.max_chain.max(k);
        if k >= self.cap {
            out.capped += 1;
        }
        out.corr_min = out.corr_min.min(corr);
        out.corr_max = out.corr_max.max(corr);
        if self.cfg.record_displacements {
            out.displacements.push(disp);
        }
    }

    /// Isotropic `n = 3` chain tracking only `x_1` and `v_1`, which is
    /// uniform on `[-1, 1]` after every isotropic redirection.
    fn chain_line(&self, rng: &mut ChaCha8Rng, scratch: &mut Scratch, out: &mut Partial) {
        let path = &self.model.path;
        let eps = self.cfg.eps;
        let lat = &self.cfg.lattice;
        let x0 = self.width * rng.sample::<f64, _>(StandardNormal);
        let mut x = x0;
        let mut k = 0;
        loop {
            let v1 = 2.0 * rng.random::<f64>() - 1.0;
            x += eps * v1 * path.sample(rng);
            scratch.score(lat, &[x], self.w0, out);
            k += 1;
            if k >= self.cap || rng.random::<f64>() < self.t {
                break;
            }
        }
        self.finish(out, k, 1.0, x - x0);
    }

    fn chain(&self, rng: &mut ChaCha8Rng, scratch: &mut Scratch, out: &mut Partial) {
        let model = self.model;
        let n = model.n;
        let eps = self.cfg.eps;
        let lat = &self.cfg.lattice;
        let mut x: Vec3 = [0.0; 3];
        for xa in x.iter_mut().take(n) {
            *xa = self.width * rng.sample::<f64, _>(StandardNormal);
        }
        let x0 = x[0];
        let mut v = sample_isotropic(n, rng);
        let mut w = self.w0;
        let mut corr = 1.0;
        let mut k = 0;
        loop {
            let s = eps * model.path.sample(rng);
            for a in 0..n {
                x[a] += s * v[a];
            }
            scratch.score(lat, &x, w, out);
            k += 1;
            if k >= self.cap || rng.random::<f64>() < self.t {
                break;
            }
            let next = model.kernel.sample_direction(&v, rng);
            let mu = dot(&next, &v).clamp(-1.0, 1.0);
            let sigma = model.kernel.sigma(mu);
            // sample from sigma, correct to (sigma - t) / (1 - t)
            let f = (sigma - self.t) / ((1.0 - self.t) * sigma);
            w *= f;
            corr *= f;
            out.cos_sum += mu;
            out.cos_sq += mu * mu;
            out.resamples += 1;
            v = next;
        }
        self.finish(out, k, corr, x[0] - x0);
    }
}

/// How `theta` is chosen per `eps` in [`displacement_scaling`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ThetaRule {
    /// The model regime's `theta(eps)`.
    Regime,
    /// `theta = eps^p`, for mismatched controls.
    Power(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub eps: f64,
    pub theta: f64,
    pub iqr: f64,
    pub mean_collisions: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub rule: ThetaRule,
    pub rows: Vec<ScalingRow>,
    /// `iqr[i] / iqr[i + 1]` for consecutive `eps`.
    pub ratios: Vec<f64>,
    pub band: (f64, f64),
    pub within_band: bool,
}

/// Band for consecutive interquartile-range ratios under O(1) scaling.
pub const SCALING_BAND: (f64, f64) = (0.8, 1.25);

/// Interquartile range of the `x_1` displacement at kill time for each `eps`.
pub fn displacement_scaling(
    model: &Model,
    eps_list: &[f64],
    particles: u64,
    seed: u64,
    rule: ThetaRule,
) -> Result<ScalingReport> {
    if eps_list.len() < 3 {
        return Err(NctkError::invalid("displacement scaling needs at least three eps values"));
    }
    let lattice = LatticeSpec {
        extent: 1.0,
        bins: 1,
        axes: 1,
    };
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let theta = match rule {
            ThetaRule::Regime => None,
            ThetaRule::Power(p) => Some(eps.powf(p)),
        };
        let cfg = McConfig {
            eps,
            particles,
            seed,
            lattice,
            theta,
            record_displacements: true,
        };
        let (_, mut stats) = run_chains(model, &cfg)?;
        stats.displacements.sort_by(f64::total_cmp);
        let d = &stats.displacements;
        rows.push(ScalingRow {
            eps,
            theta: stats.theta,
            iqr: quantile(d, 0.75) - quantile(d, 0.25),
            mean_collisions: stats.mean_collisions,
        });
    }
    let ratios: Vec<f64> = rows.windows(2).map(|w| w[0].iqr / w[1].iqr).collect();
    let within_band = ratios
        .iter()
        .all(|r| *r >= SCALING_BAND.0 && *r <= SCALING_BAND.1);
    Ok(ScalingReport {
        rule,
        rows,
        ratios,
        band: SCALING_BAND,
        within_band,
    })
}

/// Linearly interpolated quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let i = h.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (h - i as f64) * (sorted[j] - sorted[i])
}

#[cfg(test)]
mod tests;
