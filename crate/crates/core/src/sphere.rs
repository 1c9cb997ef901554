//! Direction quadratures on the unit circle and unit sphere under the
//! unit-measure convention (weights sum to one).

use std::f64::consts::PI;

use crate::error::{NctkError, Result};
use crate::quad::gauss_legendre_on;

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &Vec3) -> Vec3 {
    let r = norm(a);
    [a[0] / r, a[1] / r, a[2] / r]
}

/// Layout of a polar/azimuth product rule. Node `i * n_phi + k` sits at
/// polar cosine `mu[i]` and azimuth `2 pi k / n_phi`.
#[derive(Debug, Clone)]
pub struct ProductLayout {
    pub mu: Vec<f64>,
    /// Polar weights, summing to one.
    pub mu_weights: Vec<f64>,
    pub n_phi: usize,
}

#[derive(Debug, Clone)]
pub struct DirectionQuadrature {
    n: usize,
    order: usize,
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
    layout: Option<ProductLayout>,
}

/// Builds a direction quadrature.
///
/// For `n = 2` the rule uses `order + 1` equispaced angles, exact for
/// trigonometric polynomials of degree `order`. For `n = 3` it is a product of
/// Gauss-Legendre rules on `mu in [-1, 0]` and `[0, 1]` with
/// `ceil((order + 1) / 2)` nodes each, times an equispaced azimuth with twice
/// as many points as polar nodes. Splitting at `mu = 0` keeps integrands like
/// `|v . e|^alpha` accurate when `e` is the polar axis.
pub fn make_quadrature(n: usize, order: usize) -> Result<DirectionQuadrature> {
    if order < 4 {
        return Err(NctkError::QuadratureOrderTooSmall(order));
    }
    match n {
        2 => {
            let m = order + 1;
            let nodes = (0..m)
                .map(|k| {
                    let a = 2.0 * PI * k as f64 / m as f64;
                    [a.cos(), a.sin(), 0.0]
                })
                .collect();
            Ok(DirectionQuadrature {
                n,
                order,
                nodes,
                weights: vec![1.0 / m as f64; m],
                layout: None,
            })
        }
        3 => {
            let g = (order + 1).div_ceil(2);
            let (mut mu, mut wmu) = gauss_legendre_on(g, -1.0, 0.0);
            let (mu2, w2) = gauss_legendre_on(g, 0.0, 1.0);
            mu.extend(mu2);
            wmu.extend(w2);
            for w in wmu.iter_mut() {
                *w *= 0.5;
            }
            let n_phi = 2 * mu.len();
            let mut nodes = Vec::with_capacity(mu.len() * n_phi);
            let mut weights = Vec::with_capacity(mu.len() * n_phi);
            for (&m, &wm) in mu.iter().zip(&wmu) {
                let st = (1.0 - m * m).max(0.0).sqrt();
                for k in 0..n_phi {
                    let a = 2.0 * PI * k as f64 / n_phi as f64;
                    nodes.push([st * a.cos(), st * a.sin(), m]);
                    weights.push(wm / n_phi as f64);
                }
            }
            Ok(DirectionQuadrature {
                n,
                order,
                nodes,
                weights,
                layout: Some(ProductLayout {
                    mu,
                    mu_weights: wmu,
                    n_phi,
                }),
            })
        }
        other => Err(NctkError::UnsupportedDimension(other)),
    }
}

impl DirectionQuadrature {
    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Product structure, present for `n = 3`.
    pub fn layout(&self) -> Option<&ProductLayout> {
        self.layout.as_ref()
    }

    pub fn integrate(&self, mut f: impl FnMut(&Vec3) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * f(v))
            .sum()
    }

    pub fn integrate_vec(&self, mut f: impl FnMut(&Vec3) -> Vec3) -> Vec3 {
        let mut acc = [0.0; 3];
        for (v, w) in self.nodes.iter().zip(&self.weights) {
            let y = f(v);
            for k in 0..3 {
                acc[k] += w * y[k];
            }
        }
        acc
    }

    /// `int (v . e)^2 dv` in closed form: `1 / n`.
    pub fn second_moment_exact(&self) -> f64 {
        1.0 / self.n as f64
    }
}

/// Unit polar axis used for reduced (axisymmetric) computations.
pub fn polar_axis(n: usize) -> Vec3 {
    if n == 2 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    }
}
