//! One instance of the transport problem: dimension, scattering ratio,
//! kernel, path-length law, regime and source.

use crate::coeffs::{compute_coefficients, CoefficientOptions, CoefficientSet, Regime};
use crate::error::{NctkError, Result};
use crate::pathlen::PathLengthDistribution;
use crate::scatter::ScatterKernel;
use crate::spectral::SourceSpec;
use crate::sphere::{make_quadrature, DirectionQuadrature};

#[derive(Debug, Clone)]
pub struct Model {
    pub n: usize,
    pub c: f64,
    pub kernel: ScatterKernel,
    pub path: PathLengthDistribution,
    pub regime: Regime,
    pub source: SourceSpec,
    pub quad_order: usize,
    pub coeff_opts: CoefficientOptions,
}

impl Model {
    pub fn new(
        n: usize,
        c: f64,
        kernel: ScatterKernel,
        path: PathLengthDistribution,
        regime: Regime,
        source: SourceSpec,
    ) -> Result<Self> {
        let m = Model {
            n,
            c,
            kernel,
            path,
            regime,
            source,
            quad_order: 8,
            coeff_opts: CoefficientOptions::default(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_quad_order(mut self, order: usize) -> Result<Self> {
        self.quad_order = order;
        make_quadrature(self.n, order)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n != 2 && self.n != 3 {
            return Err(NctkError::UnsupportedDimension(self.n));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(NctkError::invalid(format!(
                "scattering ratio c = {} must lie strictly in (0, 1)",
                self.c
            )));
        }
        if self.kernel.dimension() != self.n {
            return Err(NctkError::invalid("kernel dimension differs from n"));
        }
        self.regime.check_distribution(&self.path)?;
        self.source.validate()
    }

    pub fn quadrature(&self) -> Result<DirectionQuadrature> {
        make_quadrature(self.n, self.quad_order)
    }

    pub fn theta(&self, eps: f64) -> Result<f64> {
        self.regime.theta(eps)
    }

    /// Fails unless `min sigma - theta(eps)(1 - c) >= 0`.
    pub fn check_eps(&self, eps: f64) -> Result<f64> {
        let theta = self.theta(eps)?;
        let margin = self.kernel.sigma0() - theta * (1.0 - self.c);
        if margin < 0.0 {
            return Err(NctkError::EpsilonTooLarge { eps, margin });
        }
        Ok(theta)
    }

    pub fn coefficients(&self) -> Result<CoefficientSet> {
        let q = self.quadrature()?;
        compute_coefficients(&self.path, &self.kernel, &q, &self.regime, self.coeff_opts)
    }
}
