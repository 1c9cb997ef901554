//! Angular scattering kernels `sigma(v . v')` normalized to unit mass under
//! the unit measure on the sphere.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{NctkError, Result};
use crate::pathlen::read_two_columns;
use crate::quad::{integrate_breaks, Tolerance};
use crate::sphere::{dot, polar_axis, DirectionQuadrature, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Isotropic,
    /// `sigma(mu) = 1 + a mu`, `|a| < 1`.
    LinearAnisotropic { a: f64 },
    /// Piecewise-linear in `mu` through the given nodes covering `[-1, 1]`.
    Tabulated { mu: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct ScatterKernel {
    spec: KernelSpec,
    n: usize,
    /// Normalized tabulated values (empty otherwise).
    mu: Vec<f64>,
    values: Vec<f64>,
    /// Polar CDF on `mu` nodes for `n = 3` tabulated sampling.
    cdf: Vec<f64>,
    sigma0: f64,
    sigma_max: f64,
}

impl ScatterKernel {
    pub fn new(spec: KernelSpec, n: usize) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(NctkError::UnsupportedDimension(n));
        }
        let mut k = ScatterKernel {
            spec: spec.clone(),
            n,
            mu: Vec::new(),
            values: Vec::new(),
            cdf: Vec::new(),
            sigma0: 1.0,
            sigma_max: 1.0,
        };
        match spec {
            KernelSpec::Isotropic => {}
            KernelSpec::LinearAnisotropic { a } => {
                if !(a.abs() < 1.0) {
                    return Err(NctkError::invalid(format!(
                        "linear anisotropy a = {a} must satisfy |a| < 1 for a positive kernel"
                    )));
                }
                k.sigma0 = 1.0 - a.abs();
                k.sigma_max = 1.0 + a.abs();
            }
            KernelSpec::Tabulated { mu, values } => {
                if mu.len() != values.len() || mu.len() < 2 {
                    return Err(NctkError::Table("kernel table needs at least two rows".into()));
                }
                if (mu[0] + 1.0).abs() > 1e-12
                    || (mu[mu.len() - 1] - 1.0).abs() > 1e-12
                    || mu.windows(2).any(|w| w[1] <= w[0])
                {
                    return Err(NctkError::Table(
                        "kernel table mu must increase from -1 to 1".into(),
                    ));
                }
                if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                    return Err(NctkError::Table(
                        "kernel table values must be positive and finite".into(),
                    ));
                }
                k.mu = mu;
                k.values = values;
                let mass = k.raw_mass();
                for v in k.values.iter_mut() {
                    *v /= mass;
                }
                k.sigma0 = k.values.iter().copied().fold(f64::INFINITY, f64::min);
                k.sigma_max = k.values.iter().copied().fold(0.0, f64::max);
                let mut cdf = vec![0.0];
                for (m, v) in k.mu.windows(2).zip(k.values.windows(2)) {
                    let last = *cdf.last().unwrap();
                    cdf.push(last + 0.25 * (m[1] - m[0]) * (v[0] + v[1]));
                }
                k.cdf = cdf;
            }
        }
        Ok(k)
    }

    pub fn from_table_file(path: &Path, n: usize) -> Result<Self> {
        let (mu, values) = read_two_columns(path)?;
        Self::new(KernelSpec::Tabulated { mu, values }, n)
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn is_isotropic(&self) -> bool {
        matches!(self.spec, KernelSpec::Isotropic)
    }

    /// Lower bound `sigma0 = min sigma`.
    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    /// `sigma(mu)` for `mu in [-1, 1]`.
    pub fn sigma(&self, mu: f64) -> f64 {
        match &self.spec {
            KernelSpec::Isotropic => 1.0,
            KernelSpec::LinearAnisotropic { a } => 1.0 + a * mu,
            KernelSpec::Tabulated { .. } => {
                let mu = mu.clamp(-1.0, 1.0);
                let i = self.mu.partition_point(|&m| m <= mu).clamp(1, self.mu.len() - 1) - 1;
                let t = (mu - self.mu[i]) / (self.mu[i + 1] - self.mu[i]);
                self.values[i] + t * (self.values[i + 1] - self.values[i])
            }
        }
    }

    /// Exact mass of the stored (un-normalized) table.
    fn raw_mass(&self) -> f64 {
        let sig = |mu: f64| {
            let i = self.mu.partition_point(|&m| m <= mu).clamp(1, self.mu.len() - 1) - 1;
            let t = (mu - self.mu[i]) / (self.mu[i + 1] - self.mu[i]);
            self.values[i] + t * (self.values[i + 1] - self.values[i])
        };
        self.sphere_average(sig, |_| 1.0)
    }

    /// `int_{S^{n-1}} f(v . e) g(v . e) dv` as a one-dimensional integral.
    fn sphere_average(&self, f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> f64 {
        let tol = Tolerance::new(1e-15, 1e-13);
        if self.n == 3 {
            let mut pts = vec![-1.0];
            pts.extend(self.mu.iter().copied().filter(|&m| m > -1.0 && m < 1.0));
            pts.push(1.0);
            0.5 * integrate_breaks(|m| f(m) * g(m), &pts, tol).value
        } else {
            let mut pts: Vec<f64> = self
                .mu
                .iter()
                .map(|m| m.clamp(-1.0, 1.0).acos())
                .filter(|&a| a > 0.0 && a < PI)
                .collect();
            pts.push(0.0);
            pts.push(PI);
            pts.sort_by(f64::total_cmp);
            integrate_breaks(|a| f(a.cos()) * g(a.cos()), &pts, tol).value / PI
        }
    }

    /// Closed-form mean cosine from the one-dimensional angular integral.
    pub fn mean_cosine_exact(&self) -> f64 {
        self.sphere_average(|m| self.sigma(m), |m| m)
    }

    /// `mu0 = int sigma(v . v') (v . v') dv` by the direction quadrature,
    /// taken at the polar axis `v'`.
    pub fn mean_cosine(&self, q: &DirectionQuadrature) -> Result<f64> {
        self.mean_cosine_at(q, &polar_axis(self.n))
    }

    pub fn mean_cosine_at(&self, q: &DirectionQuadrature, v_prime: &Vec3) -> Result<f64> {
        self.check_dimension(q)?;
        let mu0 = q.integrate(|v| {
            let c = dot(v, v_prime);
            self.sigma(c) * c
        });
        if mu0.abs() >= 1.0 {
            return Err(NctkError::DegenerateMeanCosine(mu0));
        }
        Ok(mu0)
    }

    fn check_dimension(&self, q: &DirectionQuadrature) -> Result<()> {
        if q.dimension() != self.n {
            return Err(NctkError::invalid(format!(
                "kernel dimension {} does not match quadrature dimension {}",
                self.n,
                q.dimension()
            )));
        }
        Ok(())
    }

    /// `K_ij = sigma(v_i . v_j) w_j`.
    pub fn kernel_matrix(&self, q: &DirectionQuadrature) -> Result<DMatrix<f64>> {
        self.check_dimension(q)?;
        let nodes = q.nodes();
        let w = q.weights();
        Ok(DMatrix::from_fn(nodes.len(), nodes.len(), |i, j| {
            self.sigma(dot(&nodes[i], &nodes[j])) * w[j]
        }))
    }

    /// Kernel matrix `K_ij = d_i sigma_ij d_j w_j` with `d` chosen so every
    /// row sums to one; symmetry of `sigma_ij` then makes the weighted
    /// column sums `sum_i w_i K_ij` equal `w_j` as well.
    pub fn balanced_kernel_matrix(&self, q: &DirectionQuadrature) -> Result<DMatrix<f64>> {
        self.check_dimension(q)?;
        let nodes = q.nodes();
        let m = nodes.len();
        let s = DMatrix::from_fn(m, m, |i, j| self.sigma(dot(&nodes[i], &nodes[j])));
        Ok(sinkhorn_balance(&s, q.weights()))
    }

    /// Azimuth-averaged kernel between polar nodes of a product rule,
    /// `S_ab = mean_k sigma(mu_a mu_b + s_a s_b cos phi_k)`, balanced against
    /// the polar weights. Acts on functions of `mu` alone.
    pub fn polar_kernel_matrix(&self, q: &DirectionQuadrature) -> Result<DMatrix<f64>> {
        self.check_dimension(q)?;
        let lay = q.layout().ok_or_else(|| {
            NctkError::invalid("polar kernel needs a polar/azimuth product quadrature")
        })?;
        let g = lay.mu.len();
        let cosines: Vec<f64> = (0..lay.n_phi)
            .map(|k| (2.0 * PI * k as f64 / lay.n_phi as f64).cos())
            .collect();
        let sin: Vec<f64> = lay.mu.iter().map(|m| (1.0 - m * m).max(0.0).sqrt()).collect();
        let s = DMatrix::from_fn(g, g, |a, b| {
            let base = lay.mu[a] * lay.mu[b];
            let amp = sin[a] * sin[b];
            cosines.iter().map(|c| self.sigma(base + amp * c)).sum::<f64>() / lay.n_phi as f64
        });
        Ok(sinkhorn_balance(&s, &lay.mu_weights))
    }

    /// Draws the scattering cosine from the polar density of `sigma`.
    pub fn sample_mu<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match (&self.spec, self.n) {
            (KernelSpec::Isotropic, 3) => 2.0 * rng.random::<f64>() - 1.0,
            (KernelSpec::LinearAnisotropic { a }, 3) => {
                // solve (a/4) mu^2 + mu/2 + (1/2 - a/4 - u) = 0 stably
                let u: f64 = rng.random();
                let c = 0.5 - 0.25 * a - u;
                let disc = (0.25 - a * c).max(0.0);
                -2.0 * c / (0.5 + disc.sqrt())
            }
            (KernelSpec::Tabulated { .. }, 3) => {
                let u: f64 = rng.random();
                let i = self.cdf.partition_point(|&f| f <= u).clamp(1, self.cdf.len() - 1) - 1;
                let du = u - self.cdf[i];
                let p0 = 0.5 * self.values[i];
                let slope = 0.5 * (self.values[i + 1] - self.values[i]) / (self.mu[i + 1] - self.mu[i]);
                let disc = (p0 * p0 + 2.0 * slope * du).max(0.0);
                (self.mu[i] + 2.0 * du / (p0 + disc.sqrt())).min(self.mu[i + 1])
            }
            _ => self.sample_angle_2d(rng).cos(),
        }
    }

    /// Signed deflection angle for `n = 2`, by rejection against `sigma_max`.
    fn sample_angle_2d<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let phi = PI * (2.0 * rng.random::<f64>() - 1.0);
            if self.is_isotropic() || rng.random::<f64>() * self.sigma_max <= self.sigma(phi.cos()) {
                return phi;
            }
        }
    }

    /// Draws an outgoing direction given the incoming one.
    pub fn sample_direction<R: Rng + ?Sized>(&self, v_in: &Vec3, rng: &mut R) -> Vec3 {
        if self.n == 2 {
            let phi = self.sample_angle_2d(rng);
            let (s, c) = phi.sin_cos();
            return [c * v_in[0] - s * v_in[1], s * v_in[0] + c * v_in[1], 0.0];
        }
        let mu = self.sample_mu(rng);
        let phi = 2.0 * PI * rng.random::<f64>();
        rotate_into_frame(v_in, mu, phi)
    }
}

/// Symmetric Sinkhorn scaling: returns `K_ij = d_i s_ij d_j w_j` with unit
/// row sums, for symmetric positive `s`.
pub fn sinkhorn_balance(s: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let m = w.len();
    let mut d = vec![1.0; m];
    for _ in 0..200 {
        let mut worst: f64 = 0.0;
        let mut next = vec![0.0; m];
        for i in 0..m {
            let row: f64 = (0..m).map(|j| s[(i, j)] * d[j] * w[j]).sum();
            worst = worst.max((d[i] * row - 1.0).abs());
            next[i] = (d[i] / row).sqrt();
        }
        if worst < 1e-15 {
            break;
        }
        d = next;
    }
    DMatrix::from_fn(m, m, |i, j| d[i] * s[(i, j)] * d[j] * w[j])
}

/// Uniform direction on the unit circle (`n = 2`) or sphere (`n = 3`).
pub fn sample_isotropic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec3 {
    let phi = 2.0 * PI * rng.random::<f64>();
    if n == 2 {
        [phi.cos(), phi.sin(), 0.0]
    } else {
        let mu = 2.0 * rng.random::<f64>() - 1.0;
        let st = (1.0 - mu * mu).max(0.0).sqrt();
        [st * phi.cos(), st * phi.sin(), mu]
    }
}

/// Direction with cosine `mu` to `axis` and azimuth `phi` about it.
pub fn rotate_into_frame(axis: &Vec3, mu: f64, phi: f64) -> Vec3 {
    // branchless orthonormal basis (Duff et al.)
    let sign = 1.0f64.copysign(axis[2]);
    let a = -1.0 / (sign + axis[2]);
    let b = axis[0] * axis[1] * a;
    let e1 = [1.0 + sign * axis[0] * axis[0] * a, sign * b, -sign * axis[0]];
    let e2 = [b, sign + axis[1] * axis[1] * a, -axis[1]];
    let st = (1.0 - mu * mu).max(0.0).sqrt();
    let (sp, cp) = phi.sin_cos();
    let mut v = [0.0; 3];
    for k in 0..3 {
        v[k] = mu * axis[k] + st * (cp * e1[k] + sp * e2[k]);
    }
    v
}
