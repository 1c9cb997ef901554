//! Frequency lattices and discrete Fourier transforms between the frequency
//! lattice and its conjugate spatial lattice.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{NctkError, Result};
use crate::sphere::Vec3;

/// Symmetric lattice `xi = Delta (k_1, .., k_n)`, `|k_i| <= (m - 1) / 2`,
/// stored row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    n: usize,
    xi_max: f64,
    m: usize,
}

impl FrequencyGrid {
    /// `m` must be odd so that `xi = 0` is a node and the lattice is symmetric.
    pub fn new(n: usize, xi_max: f64, m: usize) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(NctkError::UnsupportedDimension(n));
        }
        if m < 3 || m.is_multiple_of(2) {
            return Err(NctkError::invalid(format!(
                "frequency count {m} per axis must be odd and at least 3"
            )));
        }
        if !(xi_max > 0.0 && xi_max.is_finite()) {
            return Err(NctkError::invalid(format!("xi_max = {xi_max} must be positive")));
        }
        Ok(FrequencyGrid { n, xi_max, m })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.m
    }

    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    pub fn half(&self) -> usize {
        (self.m - 1) / 2
    }

    pub fn delta(&self) -> f64 {
        self.xi_max / self.half() as f64
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed lattice indices of flat position `flat`.
    pub fn indices(&self, flat: usize) -> [i64; 3] {
        let h = self.half() as i64;
        let mut out = [0i64; 3];
        let mut rest = flat;
        for axis in (0..self.n).rev() {
            out[axis] = (rest % self.m) as i64 - h;
            rest /= self.m;
        }
        out
    }

    pub fn node(&self, flat: usize) -> Vec3 {
        let k = self.indices(flat);
        let d = self.delta();
        [k[0] as f64 * d, k[1] as f64 * d, k[2] as f64 * d]
    }

    /// Flat position of the node `-xi`.
    pub fn mirror(&self, flat: usize) -> usize {
        self.len() - 1 - flat
    }

    /// Nonnegative radial line `r_k = k Delta`, `k = 0..=half`, with weights
    /// `r^{n-1} Delta`.
    pub fn radial(&self) -> RadialGrid {
        let d = self.delta();
        let r: Vec<f64> = (0..=self.half()).map(|k| k as f64 * d).collect();
        let w = r.iter().map(|x| x.powi(self.n as i32 - 1) * d).collect();
        RadialGrid { r, w }
    }

    /// Fills the lattice from a function of `|k|^2` (in index units), calling
    /// it once per distinct value.
    pub fn fill_radial<T: Clone + Send>(
        &self,
        f: impl Fn(f64) -> Result<T> + Sync,
    ) -> Result<Vec<T>> {
        use rayon::prelude::*;
        let h = self.half() as i64;
        let max_sq = self.n as i64 * h * h;
        let mut present = vec![false; max_sq as usize + 1];
        for flat in 0..self.len() {
            let k = self.indices(flat);
            present[(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as usize] = true;
        }
        let keys: Vec<usize> = (0..present.len()).filter(|&i| present[i]).collect();
        let d = self.delta();
        let vals: Vec<T> = keys
            .par_iter()
            .map(|&sq| f((sq as f64).sqrt() * d))
            .collect::<Result<_>>()?;
        let mut table: Vec<Option<T>> = vec![None; present.len()];
        for (k, v) in keys.into_iter().zip(vals) {
            table[k] = Some(v);
        }
        Ok((0..self.len())
            .map(|flat| {
                let k = self.indices(flat);
                table[(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as usize]
                    .clone()
                    .expect("every radius was evaluated")
            })
            .collect())
    }
}

/// Radial frequency nodes with `r^{n-1} dr` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub r: Vec<f64>,
    pub w: Vec<f64>,
}

impl RadialGrid {
    /// `(sum_k w_k |f_k|^2)^{1/2}`.
    pub fn norm(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.w
            .iter()
            .enumerate()
            .map(|(k, w)| w * f(k).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Real field on the spatial lattice `x = dx (j_1, .., j_n)` conjugate to a
/// [`FrequencyGrid`], `dx = 2 pi / (m Delta)`, same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField {
    pub n: usize,
    pub m: usize,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl SpatialField {
    /// `dx^n sum f`.
    pub fn mass(&self) -> f64 {
        self.dx.powi(self.n as i32) * self.values.iter().sum::<f64>()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Relative Hermitian asymmetry above which the inverse transform warns.
pub const HERMITIAN_TOLERANCE: f64 = 1e-8;

/// `f(x_j) = (Delta / 2 pi)^n sum_k F(xi_k) e^{i xi_k . x_j}` after
/// replacing `F` by its Hermitian part, so the result is real.
pub fn inverse_transform(grid: &FrequencyGrid, field: &[Complex64]) -> Result<SpatialField> {
    if field.len() != grid.len() {
        return Err(NctkError::invalid(format!(
            "field has {} values, grid has {}",
            field.len(),
            grid.len()
        )));
    }
    let scale = field.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let mut worst: f64 = 0.0;
    let mut data: Vec<Complex64> = (0..field.len())
        .map(|i| {
            let mirror = field[grid.mirror(i)].conj();
            worst = worst.max((field[i] - mirror).norm());
            0.5 * (field[i] + mirror)
        })
        .collect();
    if worst > HERMITIAN_TOLERANCE * scale {
        log::warn!(
            "frequency field deviates from Hermitian symmetry by {:.3e} (relative); symmetrized",
            worst / scale
        );
    }
    transform_axes(grid, &mut data, true);
    let d = grid.delta();
    let norm = (d / (2.0 * PI)).powi(grid.n as i32);
    Ok(SpatialField {
        n: grid.n,
        m: grid.m,
        dx: 2.0 * PI / (grid.m as f64 * d),
        values: data.into_iter().map(|v| v.re * norm).collect(),
    })
}

/// `F(xi_k) = dx^n sum_j f(x_j) e^{-i xi_k . x_j}`.
pub fn forward_transform(grid: &FrequencyGrid, f: &SpatialField) -> Result<Vec<Complex64>> {
    if f.values.len() != grid.len() || f.n != grid.n || f.m != grid.m {
        return Err(NctkError::invalid("spatial field does not match the grid"));
    }
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_axes(grid, &mut data, false);
    let norm = f.dx.powi(grid.n as i32);
    Ok(data.into_iter().map(|v| v * norm).collect())
}

/// Unnormalized DFT along every axis of a centered lattice.
fn transform_axes(grid: &FrequencyGrid, data: &mut [Complex64], inverse: bool) {
    let m = grid.m;
    let h = grid.half();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    };
    let mut line = vec![Complex64::default(); m];
    for axis in 0..grid.n {
        let stride = m.pow((grid.n - 1 - axis) as u32);
        let block = stride * m;
        for base in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                // centered position p holds index p - h, which lives at
                // (p - h) mod m in FFT order
                for p in 0..m {
                    line[(p + m - h) % m] = data[start + p * stride];
                }
                fft.process(&mut line);
                for p in 0..m {
                    data[start + p * stride] = line[(p + m - h) % m];
                }
            }
        }
    }
}

/// Masses `int_bin f(x) dx` of a one-dimensional density with real, even
/// transform `F(k)` tabulated on the uniform line `k_i = i dk`, for bins of
/// width `h` centered at `centers`. Uses
/// `(1/pi) int_0^inf F(k) cos(k x) h sinc(k h / 2) dk` by the trapezoid rule.
pub fn line_bin_masses(f_hat: &[f64], dk: f64, centers: &[f64], h: f64) -> Vec<f64> {
    let sinc = |x: f64| if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    let avg: Vec<f64> = f_hat
        .iter()
        .enumerate()
        .map(|(i, f)| f * h * sinc(0.5 * i as f64 * dk * h))
        .collect();
    centers
        .iter()
        .map(|&x| {
            let mut s = 0.0;
            for (i, a) in avg.iter().enumerate() {
                let wt = if i == 0 || i + 1 == avg.len() { 0.5 } else { 1.0 };
                s += wt * a * (i as f64 * dk * x).cos();
            }
            s * dk / PI
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_layout() {
        let g = FrequencyGrid::new(3, 4.0, 9).unwrap();
        assert_eq!(g.len(), 729);
        assert_eq!(g.half(), 4);
        assert_relative_eq!(g.delta(), 1.0);
        let centre = (g.len() - 1) / 2;
        assert_eq!(g.node(centre), [0.0, 0.0, 0.0]);
        assert_eq!(g.node(0), [-4.0, -4.0, -4.0]);
        let i = 123;
        let a = g.node(i);
        let b = g.node(g.mirror(i));
        assert_eq!([a[0], a[1], a[2]], [-b[0], -b[1], -b[2]]);
        assert!(FrequencyGrid::new(3, 4.0, 8).is_err());
    }

    #[test]
    fn round_trip_is_identity() {
        let g = FrequencyGrid::new(2, 3.0, 11).unwrap();
        let vals: Vec<Complex64> = (0..g.len())
            .map(|i| {
                let x = g.node(i);
                Complex64::new((-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp(), 0.0)
            })
            .collect();
        let f = inverse_transform(&g, &vals).unwrap();
        let back = forward_transform(&g, &f).unwrap();
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_spectrum_is_a_lattice_delta() {
        let g = FrequencyGrid::new(3, 2.0, 7).unwrap();
        let vals = vec![Complex64::new(2.5, 0.0); g.len()];
        let f = inverse_transform(&g, &vals).unwrap();
        assert_relative_eq!(f.mass(), 2.5, epsilon = 1e-12);
        let centre = (g.len() - 1) / 2;
        for (i, v) in f.values.iter().enumerate() {
            if i != centre {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_transform_pair() {
        // F = exp(-|xi|^2 / 2) in 3D inverts to (2 pi)^{-3/2} exp(-|x|^2 / 2)
        let g = FrequencyGrid::new(3, 10.0, 41).unwrap();
        let vals = g.fill_radial(|r| Ok(Complex64::new((-0.5 * r * r).exp(), 0.0))).unwrap();
        let f = inverse_transform(&g, &vals).unwrap();
        let centre = (g.len() - 1) / 2;
        assert_relative_eq!(f.values[centre], (2.0 * PI).powf(-1.5), max_relative = 1e-10);
        assert_relative_eq!(f.mass(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn line_masses_of_a_gaussian() {
        let dk = 0.01;
        let f_hat: Vec<f64> = (0..2000).map(|i| (-0.5 * (i as f64 * dk).powi(2)).exp()).collect();
        let h = 0.2;
        let centers: Vec<f64> = (-10..=10).map(|j| j as f64 * h).collect();
        let m = line_bin_masses(&f_hat, dk, &centers, h);
        for (x, got) in centers.iter().zip(&m) {
            let n = |t: f64| 0.5 * (1.0 + libm_erf(t / 2f64.sqrt()));
            let want = n(x + 0.5 * h) - n(x - 0.5 * h);
            assert!((got - want).abs() < 1e-9, "{x}: {got} vs {want}");
        }
    }

    // Abramowitz-Stegun 7.1.26 is too coarse here; integrate instead.
    fn libm_erf(x: f64) -> f64 {
        let v = crate::quad::integrate(
            |t: f64| (-t * t).exp(),
            0.0,
            x.abs(),
            crate::quad::Tolerance::new(1e-16, 1e-14),
        );
        x.signum() * v * 2.0 / PI.sqrt()
    }
}
