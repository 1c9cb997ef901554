//! Isotropic sources `Q(x, v) = q(x)` described through `q^(|xi|)`.

use std::path::Path;

use crate::error::{NctkError, Result};
use crate::pathlen::read_two_columns;

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    /// `q(x) = amplitude (2 pi width^2)^{-n/2} exp(-|x|^2 / (2 width^2))`.
    IsotropicGaussian { width: f64, amplitude: f64 },
    /// Radial Fourier profile `(|xi|, q^)`, linear in between, zero past the
    /// last node.
    Tabulated { xi: Vec<f64>, q_hat: Vec<f64> },
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SourceSpec::IsotropicGaussian { width, amplitude } => {
                if !(*width > 0.0 && width.is_finite()) {
                    return Err(NctkError::invalid(format!("source width {width} must be positive")));
                }
                if !(*amplitude > 0.0 && amplitude.is_finite()) {
                    return Err(NctkError::invalid(format!(
                        "source amplitude {amplitude} must be positive"
                    )));
                }
            }
            SourceSpec::Tabulated { xi, q_hat } => {
                if xi.len() != q_hat.len() || xi.len() < 2 {
                    return Err(NctkError::Table("source table needs at least two rows".into()));
                }
                if xi[0] != 0.0 || xi.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(NctkError::Table(
                        "source table |xi| must start at 0 and increase strictly".into(),
                    ));
                }
                if q_hat.iter().any(|v| !v.is_finite()) || q_hat[0] <= 0.0 {
                    return Err(NctkError::Table(
                        "source table needs finite values and q^(0) > 0".into(),
                    ));
                }
                if q_hat.iter().any(|&v| v.abs() > q_hat[0] * (1.0 + 1e-12)) {
                    return Err(NctkError::Table(
                        "|q^(xi)| exceeds q^(0); not the transform of a nonnegative source".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn from_table_file(path: &Path) -> Result<Self> {
        let (xi, q_hat) = read_two_columns(path)?;
        let s = SourceSpec::Tabulated { xi, q_hat };
        s.validate()?;
        Ok(s)
    }

    /// `q^(|xi|)`, equal to the velocity average of `Q^`.
    pub fn q_hat(&self, r: f64) -> f64 {
        match self {
            SourceSpec::IsotropicGaussian { width, amplitude } => {
                amplitude * (-0.5 * (width * r).powi(2)).exp()
            }
            SourceSpec::Tabulated { xi, q_hat } => {
                let r = r.abs();
                if r >= *xi.last().unwrap() {
                    return if r == *xi.last().unwrap() { *q_hat.last().unwrap() } else { 0.0 };
                }
                let j = xi.partition_point(|&x| x <= r) - 1;
                let t = (r - xi[j]) / (xi[j + 1] - xi[j]);
                q_hat[j] + t * (q_hat[j + 1] - q_hat[j])
            }
        }
    }

    /// Total source mass `q^(0)`.
    pub fn mass(&self) -> f64 {
        self.q_hat(0.0)
    }

    /// Length scale used for default frequency extents.
    pub fn width(&self) -> f64 {
        match self {
            SourceSpec::IsotropicGaussian { width, .. } => *width,
            // first |xi| where the profile drops below 1e-4 of its peak
            SourceSpec::Tabulated { xi, q_hat } => {
                let cut = xi
                    .iter()
                    .zip(q_hat)
                    .find(|(_, q)| q.abs() < 1e-4 * q_hat[0])
                    .map(|(x, _)| *x)
                    .unwrap_or(*xi.last().unwrap());
                16.0 / cut
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_profile() {
        let s = SourceSpec::IsotropicGaussian { width: 2.0, amplitude: 3.0 };
        assert_eq!(s.mass(), 3.0);
        assert_relative_eq!(s.q_hat(1.0), 3.0 * (-2.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn table_interpolates_and_vanishes_outside() {
        let s = SourceSpec::Tabulated { xi: vec![0.0, 1.0, 2.0], q_hat: vec![1.0, 0.5, 0.0] };
        s.validate().unwrap();
        assert_relative_eq!(s.q_hat(0.5), 0.75);
        assert_eq!(s.q_hat(3.0), 0.0);
        let bad = SourceSpec::Tabulated { xi: vec![0.0, 1.0], q_hat: vec![1.0, 2.0] };
        assert!(bad.validate().is_err());
    }
}
