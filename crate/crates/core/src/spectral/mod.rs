//! Per-frequency solution of the transport equation in Fourier space.
//!
//! For fixed `xi` the Fourier transform factorizes as
//! `Psi^(s, xi, v) = G(xi, v) e^{-i eps v.xi s}` with
//!
//! ```text
//! G(v) = int (sigma(v.v') - theta (1 - c)) W(eps v'.xi) G(v') dv' + theta Q^(xi, v),
//! W(z) = int p(s) e^{-izs} ds.
//! ```
//!
//! The default solver rewrites the discrete system as its velocity average
//! plus the mean-free remainder, which removes the `1/theta` loss of
//! conditioning. On node sets closed under `v -> -v` it further splits `G`
//! into its even real part and its odd imaginary part, the latter of size
//! `O(eps |xi|)` and solved for after rescaling, so that every coefficient
//! stays bounded as `eps -> 0`. The complex bordered form, the
//! unreformulated system and a fixed-point iteration are kept for
//! cross-checks.

mod fourier;
mod source;

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::Regime;
use crate::error::{NctkError, Result};
use crate::model::Model;
use crate::sphere::{dot, norm, polar_axis, DirectionQuadrature, Vec3};

pub use fourier::{
    forward_transform, inverse_transform, line_bin_masses, FrequencyGrid, RadialGrid,
    SpatialField, HERMITIAN_TOLERANCE,
};
pub use source::SourceSpec;

/// How the per-mode linear system is solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMethod {
    /// Even/odd real split when the nodes pair up under `v -> -v`,
    /// [`SolveMethod::Bordered`] otherwise (default).
    Stable,
    /// Average/remainder split with a rank-one border, in complex arithmetic.
    /// Loses accuracy once `eps |xi| / theta` approaches `1 / machine eps`.
    Bordered,
    /// LU of `I - K diag(W) + theta (1 - c) 1 (w W)^T` as written.
    Naive,
    /// Damped fixed-point iteration; stops when the update falls below
    /// `tol * theta (1 - c) * |G|`.
    Iterative { tol: f64, max_iter: usize, damping: f64 },
}

#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub xi: Vec3,
    pub eps: f64,
    /// Node weights of the system that was solved (sum to one).
    pub weights: Vec<f64>,
    pub g: Vec<Complex64>,
    pub phi: Vec<Complex64>,
    pub avg_g: Complex64,
    pub avg_phi: Complex64,
    pub eta: Complex64,
    /// Normwise backward error `|Mu - b| / (|M| |u| + |b|)` of the linear
    /// system that was solved, in the max norm; zero for the iteration.
    pub residual: f64,
    pub iterations: usize,
}

impl ModeSolution {
    /// `(sum_i w_i |phi_i|^2)^{1/2}`.
    pub fn phi_norm(&self) -> f64 {
        weighted_norm(&self.weights, &self.phi)
    }

    pub fn g_norm(&self) -> f64 {
        weighted_norm(&self.weights, &self.g)
    }
}

fn weighted_norm(w: &[f64], v: &[Complex64]) -> f64 {
    w.iter().zip(v).map(|(w, v)| w * v.norm_sqr()).sum::<f64>().sqrt()
}

/// Reduced system on polar nodes for `xi` along the polar axis.
#[derive(Debug, Clone)]
struct Polar {
    k: DMatrix<f64>,
    w: Vec<f64>,
    mu: Vec<f64>,
    pairs: Option<Vec<(usize, usize)>>,
}

/// Per-mode solver for one model; the angular matrices are built once and
/// shared across `eps` and `xi`.
#[derive(Debug)]
pub struct ModeSolver<'a> {
    model: &'a Model,
    q: DirectionQuadrature,
    full: OnceLock<DMatrix<f64>>,
    /// Antipodal node pairs `(a, -a)` of the full rule, one per pair.
    full_pairs: Option<Vec<(usize, usize)>>,
    polar: Option<Polar>,
    beta0: f64,
}

impl<'a> ModeSolver<'a> {
    pub fn new(model: &'a Model) -> Result<Self> {
        model.validate()?;
        let q = model.quadrature()?;
        let polar = match q.layout() {
            Some(lay) => {
                let (n_mu, g) = (lay.mu.len(), lay.mu.len() / 2);
                Some(Polar {
                    k: model.kernel.polar_kernel_matrix(&q)?,
                    w: lay.mu_weights.clone(),
                    mu: lay.mu.clone(),
                    // mu ascends and is symmetric about zero
                    pairs: (n_mu % 2 == 0).then(|| (0..g).map(|i| (g + i, g - 1 - i)).collect()),
                })
            }
            None => None,
        };
        let full_pairs = antipodal_pairs(&q);
        Ok(ModeSolver {
            model,
            q,
            full: OnceLock::new(),
            full_pairs,
            polar,
            beta0: model.path.beta0(),
        })
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn quadrature(&self) -> &DirectionQuadrature {
        &self.q
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    fn full_kernel(&self) -> Result<&DMatrix<f64>> {
        if let Some(k) = self.full.get() {
            return Ok(k);
        }
        let k = self.model.kernel.balanced_kernel_matrix(&self.q)?;
        Ok(self.full.get_or_init(|| k))
    }

    /// Solves over every direction node for an arbitrary `xi`.
    pub fn solve_mode(&self, eps: f64, xi: &Vec3) -> Result<ModeSolution> {
        self.solve_mode_with(eps, xi, SolveMethod::Stable)
    }

    pub fn solve_mode_with(&self, eps: f64, xi: &Vec3, method: SolveMethod) -> Result<ModeSolution> {
        let k = self.full_kernel()?;
        let proj: Vec<f64> = self.q.nodes().iter().map(|v| eps * dot(v, xi)).collect();
        let pairs = self.full_pairs.as_deref();
        self.solve_nodes(k, self.q.weights(), &proj, pairs, eps, *xi, method)
    }

    /// Solves for `xi = r e` with `e` the polar axis, on the reduced polar
    /// system when the quadrature is a product rule. Valid because the source
    /// is isotropic, so `G` depends on `v` only through `v . e`.
    pub fn solve_radial(&self, eps: f64, r: f64) -> Result<ModeSolution> {
        self.solve_radial_with(eps, r, SolveMethod::Stable)
    }

    pub fn solve_radial_with(&self, eps: f64, r: f64, method: SolveMethod) -> Result<ModeSolution> {
        let e = polar_axis(self.model.n);
        let xi = [r * e[0], r * e[1], r * e[2]];
        match &self.polar {
            Some(p) => {
                let proj: Vec<f64> = p.mu.iter().map(|m| eps * r * m).collect();
                self.solve_nodes(&p.k, &p.w, &proj, p.pairs.as_deref(), eps, xi, method)
            }
            None => self.solve_mode_with(eps, &xi, method),
        }
    }

    /// Radial solutions in parallel, returned in input order.
    pub fn solve_radial_grid(&self, eps: f64, radii: &[f64]) -> Result<Vec<ModeSolution>> {
        radii.par_iter().map(|&r| self.solve_radial(eps, r)).collect()
    }

    /// `<phi^>` on every node of a full lattice.
    pub fn avg_phi_on_grid(&self, eps: f64, grid: &FrequencyGrid) -> Result<Vec<Complex64>> {
        if grid.dimension() != self.model.n {
            return Err(NctkError::invalid("grid dimension differs from the model"));
        }
        grid.fill_radial(|r| Ok(self.solve_radial(eps, r)?.avg_phi))
    }

    #[allow(clippy::too_many_arguments)]
    fn solve_nodes(
        &self,
        k: &DMatrix<f64>,
        w: &[f64],
        z: &[f64],
        pairs: Option<&[(usize, usize)]>,
        eps: f64,
        xi: Vec3,
        method: SolveMethod,
    ) -> Result<ModeSolution> {
        let model = self.model;
        let theta = model.check_eps(eps)?;
        let c = model.c;
        let t = theta * (1.0 - c);
        let m = w.len();
        let qv = vec![model.source.q_hat(norm(&xi)); m];
        let q_avg: f64 = w.iter().zip(&qv).map(|(a, b)| a * b).sum();
        let parts: Vec<(f64, f64)> = z.iter().map(|&zj| model.path.char_parts(zj)).collect();
        let zeta: Vec<Complex64> = parts.iter().map(|&(cp, sp)| Complex64::new(cp, sp)).collect();
        let big_w: Vec<Complex64> = zeta.iter().map(|zt| 1.0 - zt).collect();

        let (g, residual, iterations) = match (method, pairs) {
            (SolveMethod::Stable, Some(pairs)) => {
                let (g, res) = solve_symmetric(k, w, &parts, pairs, theta, c, &qv, xi)?;
                (g, res, 0)
            }
            (SolveMethod::Stable | SolveMethod::Bordered, _) => {
                // A = (I - K) + K diag(zeta), kept apart from W = 1 - zeta to
                // avoid rounding in 1 - K diag(W) when zeta is tiny, plus the
                // border 1 b^T carrying the average equation
                let mat = DMatrix::from_fn(m, m, |i, j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    Complex64::new(id - k[(i, j)], 0.0)
                        + k[(i, j)] * zeta[j]
                        + w[j] * ((1.0 - c) * big_w[j] + zeta[j] * (1.0 / theta - 1.0))
                });
                // (R + 1 b^T) G = theta (Q - <Q>) + <Q>
                let rhs = DVector::from_iterator(
                    m,
                    qv.iter().map(|&qi| Complex64::new(theta * (qi - q_avg) + q_avg, 0.0)),
                );
                let g = lu_solve(mat.clone(), &rhs, xi)?;
                let res = backward_error(&mat, &g, &rhs);
                (g, res, 0)
            }
            (SolveMethod::Naive, _) => {
                let mat = DMatrix::from_fn(m, m, |i, j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    Complex64::new(id - k[(i, j)], 0.0) + k[(i, j)] * zeta[j] + t * w[j] * big_w[j]
                });
                let rhs =
                    DVector::from_iterator(m, qv.iter().map(|&qi| Complex64::new(theta * qi, 0.0)));
                let g = lu_solve(mat.clone(), &rhs, xi)?;
                let res = backward_error(&mat, &g, &rhs);
                (g, res, 0)
            }
            (
                SolveMethod::Iterative {
                    tol,
                    max_iter,
                    damping,
                },
                _,
            ) => {
                let mut g = DVector::from_element(m, Complex64::new(0.0, 0.0));
                let mut it = 0;
                loop {
                    it += 1;
                    let wg: Vec<Complex64> = (0..m).map(|j| big_w[j] * g[j]).collect();
                    let avg: Complex64 = (0..m).map(|j| w[j] * wg[j]).sum();
                    let next = DVector::from_fn(m, |i, _| {
                        let kg: Complex64 = (0..m).map(|j| k[(i, j)] * wg[j]).sum();
                        kg - t * avg + theta * qv[i]
                    });
                    let step = (&next - &g) * Complex64::new(damping, 0.0);
                    g += &step;
                    let size = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    let change = step.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    if change <= tol * t * size || it >= max_iter {
                        if it >= max_iter {
                            log::warn!("fixed-point iteration hit {max_iter} steps at xi = {xi:?}");
                        }
                        break;
                    }
                }
                (g, 0.0, it)
            }
        };

        let wg: Vec<Complex64> = (0..m).map(|j| big_w[j] * g[j]).collect();
        let phi: Vec<Complex64> = (0..m)
            .map(|i| (0..m).map(|j| k[(i, j)] * wg[j]).sum())
            .collect();
        let avg_phi: Complex64 = (0..m).map(|j| w[j] * wg[j]).sum();
        let avg_g: Complex64 = (0..m).map(|j| w[j] * g[j]).sum();
        let eta: Complex64 = (0..m)
            .map(|j| {
                let b = if z[j] == 0.0 {
                    Complex64::new(self.beta0, 0.0)
                } else {
                    let (cp, sp) = parts[j];
                    Complex64::new(sp / z[j], -cp / z[j])
                };
                w[j] * b * g[j]
            })
            .sum();
        Ok(ModeSolution {
            xi,
            eps,
            weights: w.to_vec(),
            g: g.iter().copied().collect(),
            phi,
            avg_g,
            avg_phi,
            eta,
            residual,
            iterations,
        })
    }
}

/// Antipodal pairing `(a, -a)` of a rule's nodes, one entry per pair, when
/// every node has its antipode in the rule with the same weight.
fn antipodal_pairs(q: &DirectionQuadrature) -> Option<Vec<(usize, usize)>> {
    let nodes = q.nodes();
    let w = q.weights();
    let m = nodes.len();
    if m % 2 == 1 {
        return None;
    }
    let partner = |a: usize| -> usize {
        match q.layout() {
            Some(lay) => {
                let np = lay.n_phi;
                let (i, k) = (a / np, a % np);
                (lay.mu.len() - 1 - i) * np + (k + np / 2) % np
            }
            None => (a + m / 2) % m,
        }
    };
    let mut pairs = Vec::with_capacity(m / 2);
    let mut seen = vec![false; m];
    for a in 0..m {
        if seen[a] {
            continue;
        }
        let b = partner(a);
        if b >= m || b == a || seen[b] {
            return None;
        }
        let (v, u) = (nodes[a], nodes[b]);
        let off = (v[0] + u[0]).abs() + (v[1] + u[1]).abs() + (v[2] + u[2]).abs();
        if off > 1e-12 || (w[a] - w[b]).abs() > 1e-15 {
            return None;
        }
        seen[a] = true;
        seen[b] = true;
        pairs.push((a, b));
    }
    Some(pairs)
}

/// Real even/odd form of the bordered system on antipodal pairs `(a, -a)`.
///
/// With `G_a = E_a + i s O_a`, `G_-a = conj(G_a)` and `s = max |sp|`, the
/// unknowns satisfy, for `a, b` over pair representatives,
/// `K+-_ab = K_ab +- K_a,-b`, `w~ = 2 w` and `X_b = (1 - cp_b) E_b + s sp_b O_b`:
///
/// ```text
/// even:  E_a - sum_b K+_ab X_b - sum_b w~_b (E_b - X_b)
///        + sum_b w~_b [(cp_b / theta + (1 - c)(1 - cp_b)) E_b
///                      + s sp_b ((1 - c) - 1 / theta) O_b]   = theta (Q_a - <Q>) + <Q>
/// odd:   O_a - sum_b K-_ab ((1 - cp_b) O_b - (sp_b / s) E_b)  = 0
/// ```
///
/// `s sp / theta` and `cp / theta` stay bounded as `eps -> 0`.
#[allow(clippy::too_many_arguments)]
fn solve_symmetric(
    k: &DMatrix<f64>,
    w: &[f64],
    parts: &[(f64, f64)],
    pairs: &[(usize, usize)],
    theta: f64,
    c: f64,
    qv: &[f64],
    xi: Vec3,
) -> Result<(DVector<Complex64>, f64)> {
    let g = pairs.len();
    let wt: Vec<f64> = pairs.iter().map(|&(a, _)| 2.0 * w[a]).collect();
    let cp: Vec<f64> = pairs.iter().map(|&(a, _)| parts[a].0).collect();
    let sp: Vec<f64> = pairs.iter().map(|&(a, _)| parts[a].1).collect();
    let qh: Vec<f64> = pairs.iter().map(|&(a, _)| qv[a]).collect();
    let q_avg: f64 = wt.iter().zip(&qh).map(|(a, b)| a * b).sum();
    let s = sp.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let s = if s > 0.0 { s } else { 1.0 };
    let kp = |i: usize, j: usize| k[(pairs[i].0, pairs[j].0)] + k[(pairs[i].0, pairs[j].1)];
    let km = |i: usize, j: usize| k[(pairs[i].0, pairs[j].0)] - k[(pairs[i].0, pairs[j].1)];
    let mat = DMatrix::from_fn(2 * g, 2 * g, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        match (i < g, j < g) {
            (true, true) => {
                let kk = kp(i, j);
                (id - kk) + kk * cp[j] - wt[j] * cp[j]
                    + wt[j] * (cp[j] / theta + (1.0 - c) * (1.0 - cp[j]))
            }
            (true, false) => {
                let b = j - g;
                let ss = s * sp[b];
                -kp(i, b) * ss + wt[b] * ss + wt[b] * ss * ((1.0 - c) - 1.0 / theta)
            }
            (false, true) => km(i - g, j) * sp[j] / s,
            (false, false) => {
                let kk = km(i - g, j - g);
                (id - kk) + kk * cp[j - g]
            }
        }
    });
    let rhs = DVector::from_fn(2 * g, |i, _| {
        if i < g {
            theta * (qh[i] - q_avg) + q_avg
        } else {
            0.0
        }
    });
    let u = mat
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|u| u.iter().all(|v| v.is_finite()))
        .ok_or(NctkError::SingularSystem(xi))?;
    let res = &mat * &u - &rhs;
    let inf = |v: &DVector<f64>| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mat_inf = mat
        .row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let residual = inf(&res) / (mat_inf * inf(&u) + inf(&rhs)).max(1e-300);
    let mut full = DVector::from_element(w.len(), Complex64::new(0.0, 0.0));
    for (i, &(a, b)) in pairs.iter().enumerate() {
        let v = Complex64::new(u[i], s * u[g + i]);
        full[a] = v;
        full[b] = v.conj();
    }
    Ok((full, residual))
}

fn backward_error(
    mat: &DMatrix<Complex64>,
    x: &DVector<Complex64>,
    rhs: &DVector<Complex64>,
) -> f64 {
    let res = mat * x - rhs;
    let inf = |v: &DVector<Complex64>| v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mat_inf = mat
        .row_iter()
        .map(|row| row.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    inf(&res) / (mat_inf * inf(x) + inf(rhs)).max(1e-300)
}

fn lu_solve(
    mat: DMatrix<Complex64>,
    rhs: &DVector<Complex64>,
    xi: Vec3,
) -> Result<DVector<Complex64>> {
    let sol = mat.lu().solve(rhs).ok_or(NctkError::SingularSystem(xi))?;
    if sol.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(NctkError::SingularSystem(xi));
    }
    Ok(sol)
}

/// Limit multiplier `D |xi|^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitMultiplier {
    pub d: f64,
    pub beta: f64,
}

impl LimitMultiplier {
    pub fn for_regime(regime: &Regime, d: f64) -> Self {
        LimitMultiplier {
            d,
            beta: regime.limit_exponent(),
        }
    }
}

/// `Psi0^(xi) = <Q^>(xi) / (D |xi|^beta + 1 - c)` at the given radii.
pub fn solve_limit(radii: &[f64], mult: LimitMultiplier, c: f64, q_avg: &[f64]) -> Result<Vec<f64>> {
    if !(mult.d > 0.0) {
        return Err(NctkError::invalid(format!("limit coefficient D = {} must be positive", mult.d)));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(NctkError::invalid(format!("c = {c} must lie in (0, 1)")));
    }
    if radii.len() != q_avg.len() {
        return Err(NctkError::invalid("radii and source values differ in length"));
    }
    Ok(radii
        .iter()
        .zip(q_avg)
        .map(|(r, q)| q / (mult.d * r.powf(mult.beta) + 1.0 - c))
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeRow {
    pub eps: f64,
    pub xi_norm: f64,
    pub avg_phi_re: f64,
    pub avg_phi_im: f64,
    pub psi0: f64,
    pub eta_over_beta0: f64,
    pub abs_err: f64,
}

impl ModeRow {
    pub const CSV_HEADER: &'static str =
        "eps,xi_norm,avg_phi_re,avg_phi_im,psi0,eta_over_beta0,abs_err";
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    /// Relative weighted L2 distance of `<phi^>` from `Psi0^`.
    pub error: f64,
    /// Same for `eta^ / beta0`.
    pub eta_error: f64,
    /// `|eta^(0) / beta0 - <Q^(0)> / (1 - c)|`, relative.
    pub eta_zero_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub multiplier: LimitMultiplier,
    pub rows: Vec<ConvergenceRow>,
    pub modes: Vec<ModeRow>,
    pub decreasing: bool,
    pub eta_decreasing: bool,
    pub final_error: f64,
    pub final_eta_error: f64,
}

/// Checks an `eps` list for a convergence study: at least three strictly
/// decreasing values spanning two decades.
pub fn check_eps_list(eps: &[f64]) -> Result<()> {
    if eps.len() < 3 {
        return Err(NctkError::invalid(format!(
            "a convergence study needs at least 3 eps values, got {}",
            eps.len()
        )));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(NctkError::invalid("eps values must be strictly decreasing"));
    }
    if eps[0] / eps[eps.len() - 1] < 100.0 * (1.0 - 1e-12) {
        return Err(NctkError::invalid("eps values must span at least two decades"));
    }
    Ok(())
}

/// Solves every radial mode for each `eps` and compares `<phi^>` and
/// `eta^ / beta0` with the limit profile.
pub fn convergence_sweep(
    solver: &ModeSolver<'_>,
    eps_list: &[f64],
    grid: &RadialGrid,
    mult: LimitMultiplier,
) -> Result<ConvergenceReport> {
    check_eps_list(eps_list)?;
    let model = solver.model();
    let q_avg: Vec<f64> = grid.r.iter().map(|&r| model.source.q_hat(r)).collect();
    let psi0 = solve_limit(&grid.r, mult, model.c, &q_avg)?;
    let psi_norm = grid.norm(|k| psi0[k]);
    let beta0 = solver.beta0();
    let mut rows = Vec::new();
    let mut modes = Vec::new();
    for &eps in eps_list {
        let sols = solver.solve_radial_grid(eps, &grid.r)?;
        let err = grid.norm(|k| (sols[k].avg_phi - psi0[k]).norm()) / psi_norm;
        let eta_err = grid.norm(|k| (sols[k].eta / beta0 - psi0[k]).norm()) / psi_norm;
        let zero = solver.solve_radial(eps, 0.0)?;
        let target = model.source.mass() / (1.0 - model.c);
        rows.push(ConvergenceRow {
            eps,
            error: err,
            eta_error: eta_err,
            eta_zero_defect: (zero.eta / beta0 - target).norm() / target,
        });
        for (k, s) in sols.iter().enumerate() {
            modes.push(ModeRow {
                eps,
                xi_norm: grid.r[k],
                avg_phi_re: s.avg_phi.re,
                avg_phi_im: s.avg_phi.im,
                psi0: psi0[k],
                eta_over_beta0: (s.eta / beta0).re,
                abs_err: (s.avg_phi - psi0[k]).norm(),
            });
        }
    }
    let decreasing = rows.windows(2).all(|w| w[1].error < w[0].error);
    let eta_decreasing = rows.windows(2).all(|w| w[1].eta_error < w[0].eta_error);
    let last = rows.last().expect("at least three rows");
    Ok(ConvergenceReport {
        multiplier: mult,
        final_error: last.error,
        final_eta_error: last.eta_error,
        rows,
        modes,
        decreasing,
        eta_decreasing,
    })
}

/// Discrete `L2(xi x v)` norms of `phi^` and of `Q^` on a radial grid.
pub fn l2_norms(solutions: &[ModeSolution], grid: &RadialGrid, source: &SourceSpec) -> (f64, f64) {
    let phi = grid.norm(|k| solutions[k].phi_norm());
    let q = grid.norm(|k| source.q_hat(grid.r[k]));
    (phi, q)
}
