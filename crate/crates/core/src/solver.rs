//! Alternating convex search over `(μ, w)` and the gradient-descent baseline.
//!
//! For fixed `μ` the loss is a linear least-squares problem in `w`; for fixed
//! `w` it is a scalar quadratic in `μ`. Alternating the two exact minimizers
//! never increases the loss.

use std::time::Instant;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::assembly::LossSystem;
use crate::error::{config_err, Error, Result};
use crate::lstsq::{self, dot, matvec, norm2_sq, SvdSolver};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcsConfig {
    pub max_iters: usize,
    /// Stop once `|𝓛ᵗ − 𝓛ᵗ⁻¹| ≤ loss_tol · max(1, 𝓛ᵗ⁻¹)`.
    pub loss_tol: f64,
    /// Tikhonov `γ`; zero selects the truncated-SVD pseudoinverse.
    pub tikhonov: f64,
    /// Relative singular-value cutoff of the pseudoinverse.
    pub svd_cutoff: f64,
}

impl Default for AcsConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            loss_tol: 1e-10,
            tikhonov: 0.0,
            svd_cutoff: 1e-12,
        }
    }
}

impl AcsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return config_err("acs.max_iters must be at least 1");
        }
        for (name, v) in [
            ("loss_tol", self.loss_tol),
            ("tikhonov", self.tikhonov),
            ("svd_cutoff", self.svd_cutoff),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return config_err(format!("acs.{name} must be finite and non-negative, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
    Degenerate,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenpairEstimate {
    pub mu: f64,
    /// `μ^{1/p}`; absent when `μ < 0` and `p > 1`.
    pub lambda_phys: Option<f64>,
    pub weights: Vec<f64>,
    /// Loss after every half-step (w-update, then μ-update).
    pub loss_history: Vec<f64>,
    pub iterations: usize,
    pub status: Status,
    /// `‖(A+μH)w‖ / (‖Aw‖ + |μ|‖Hw‖)`.
    pub relative_residual: f64,
    /// `|u(x_ref) − u_ref| / |u_ref|`.
    pub reference_error: f64,
    /// Set when the reference constraint is badly violated, typically
    /// because the reference point sits on a nodal line.
    pub suspect_reference: bool,
    /// w-updates rejected because they would have raised the loss.
    pub guarded_steps: usize,
    pub wall_time_s: f64,
}

impl EigenpairEstimate {
    pub fn final_loss(&self) -> f64 {
        self.loss_history.last().copied().unwrap_or(f64::INFINITY)
    }
}

pub fn physical_eigenvalue(mu: f64, exponent: u32) -> Option<f64> {
    match exponent {
        1 => Some(mu),
        p if mu >= 0.0 => Some(mu.powf(1.0 / p as f64)),
        _ => None,
    }
}

/// `argmin_w 𝓛(μ, w)` through the full stacked design matrix.
pub fn update_weights(sys: &LossSystem, mu: f64, cfg: &AcsConfig) -> Result<Vec<f64>> {
    if !mu.is_finite() {
        return Err(Error::Numerical(format!("eigenvalue parameter {mu} is not finite")));
    }
    let (g, y) = sys.design(mu);
    lstsq::solve(g.as_ref(), &y, cfg.tikhonov, cfg.svd_cutoff)
}

/// `argmin_μ 𝓛(μ, w) = −cᵀa / cᵀc`.
pub fn update_mu(sys: &LossSystem, w: &[f64]) -> Result<f64> {
    let (ca, cc) = sys.products(w).mu_moments();
    if cc < 1e-300 {
        return Err(Error::DegenerateDirection(cc));
    }
    Ok(-ca / cc)
}

/// The loss restricted to the joint row space of `G0` and `G1`.
///
/// With `V` spanning that row space and `[G0V | G1V] = Q[R0 | R1]`,
///
/// ```text
/// 𝓛(μ, Vz) = ‖(R0 + μR1)z − Qᵀy‖² + (‖y‖² − ‖Qᵀy‖²)
/// ```
///
/// exactly, and components of `w` outside `span V` change nothing, so both
/// subproblems can be solved on the small `2r × r` system.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    v: Mat<f64>,
    r0: Mat<f64>,
    r1: Mat<f64>,
    qy: Vec<f64>,
    offset: f64,
}

/// Relative threshold on singular values of `[G0; G1]` defining the row space.
const ROW_SPACE_CUTOFF: f64 = 1e-15;

impl ReducedSystem {
    pub fn new(sys: &LossSystem) -> Result<Self> {
        let g0 = sys.g0();
        let g1 = sys.g1();
        lstsq::ensure_finite(g0.as_ref(), "design matrix")?;
        let (n, m) = (g0.nrows(), g0.ncols());
        // QR first so the SVD runs on an M × M triangle rather than 2N × M.
        let stacked = Mat::from_fn(2 * n, m, |i, j| if i < n { g0[(i, j)] } else { g1[(i - n, j)] });
        let tri = if 2 * n > m {
            stacked.qr().thin_R().to_owned()
        } else {
            stacked
        };
        let svd = SvdSolver::new(tri.as_ref())?;
        let s = svd.singular_values();
        let smax = s.first().copied().unwrap_or(0.0);
        let rank = s.iter().take_while(|&&x| x > ROW_SPACE_CUTOFF * smax && x > 0.0).count();
        if rank == 0 {
            return Err(Error::Numerical("design matrix is identically zero".into()));
        }
        let v = svd.v().subcols(0, rank).to_owned();

        let g0v = &g0 * &v;
        let g1v = &g1 * &v;
        let joined = Mat::from_fn(n, 2 * rank, |i, j| if j < rank { g0v[(i, j)] } else { g1v[(i, j - rank)] });
        let qr = joined.qr();
        let k = n.min(2 * rank);
        let r = qr.thin_R();
        let r0 = Mat::from_fn(k, rank, |i, j| r[(i, j)]);
        let r1 = Mat::from_fn(k, rank, |i, j| r[(i, j + rank)]);
        let q = qr.compute_thin_Q();
        let y = sys.targets();
        let qy = lstsq::matvec_t(q.as_ref(), &y);
        let offset = (norm2_sq(&y) - norm2_sq(&qy)).max(0.0);
        Ok(Self { v, r0, r1, qy, offset })
    }

    pub fn rank(&self) -> usize {
        self.v.ncols()
    }

    pub fn lift(&self, z: &[f64]) -> Vec<f64> {
        matvec(self.v.as_ref(), z)
    }

    fn residuals(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut a = matvec(self.r0.as_ref(), z);
        for (ai, qi) in a.iter_mut().zip(&self.qy) {
            *ai -= qi;
        }
        (a, matvec(self.r1.as_ref(), z))
    }

    fn loss(&self, mu: f64, z: &[f64]) -> f64 {
        let (a, c) = self.residuals(z);
        a.iter().zip(&c).map(|(a, c)| (a + mu * c).powi(2)).sum::<f64>() + self.offset
    }

    fn update_z(&self, mu: f64, cfg: &AcsConfig) -> Result<Vec<f64>> {
        let g = Mat::from_fn(self.r0.nrows(), self.rank(), |i, j| self.r0[(i, j)] + mu * self.r1[(i, j)]);
        lstsq::ensure_finite(g.as_ref(), "design matrix")?;
        if cfg.tikhonov > 0.0 {
            let r = self.rank();
            let sg = cfg.tikhonov.sqrt();
            let aug = Mat::from_fn(g.nrows() + r, r, |i, j| {
                if i < g.nrows() {
                    g[(i, j)]
                } else if i - g.nrows() == j {
                    sg
                } else {
                    0.0
                }
            });
            let mut rhs = self.qy.clone();
            rhs.resize(g.nrows() + r, 0.0);
            return Ok(lstsq::qr_solve(aug.as_ref(), &rhs).0);
        }
        if g.nrows() >= g.ncols() {
            let (z, cond) = lstsq::qr_solve(g.as_ref(), &self.qy);
            // the diagonal ratio underestimates the condition number, hence the margin
            if cond * cfg.svd_cutoff < 1e-3 {
                return Ok(z);
            }
        }
        Ok(SvdSolver::new(g.as_ref())?.pinv_solve(&self.qy, cfg.svd_cutoff))
    }

    fn update_mu(&self, z: &[f64]) -> Result<f64> {
        let (a, c) = self.residuals(z);
        let cc = norm2_sq(&c);
        if cc < 1e-300 {
            return Err(Error::DegenerateDirection(cc));
        }
        Ok(-dot(&c, &a) / cc)
    }
}

/// Runs ACS from `mu0`, solving for `w` first.
pub fn run_acs(sys: &LossSystem, mu0: f64, cfg: &AcsConfig) -> Result<EigenpairEstimate> {
    let start = Instant::now();
    let reduced = ReducedSystem::new(sys)?;
    let mut est = run_acs_reduced(sys, &reduced, mu0, cfg)?;
    est.wall_time_s = start.elapsed().as_secs_f64();
    Ok(est)
}

/// ACS on a precomputed [`ReducedSystem`] of `sys`.
pub fn run_acs_reduced(
    sys: &LossSystem,
    reduced: &ReducedSystem,
    mu0: f64,
    cfg: &AcsConfig,
) -> Result<EigenpairEstimate> {
    cfg.validate()?;
    if !mu0.is_finite() {
        return config_err(format!("initial eigenvalue guess {mu0} is not finite"));
    }
    let start = Instant::now();
    let mut mu = mu0;
    let mut z: Option<Vec<f64>> = None;
    let mut history = Vec::with_capacity(2 * cfg.max_iters.min(4096));
    let mut status = Status::MaxIters;
    let mut guarded = 0;
    let mut iterations = 0;
    let mut prev: Option<f64> = None;

    for it in 0..cfg.max_iters {
        iterations = it + 1;
        let candidate = match reduced.update_z(mu, cfg) {
            Ok(c) => c,
            Err(Error::Numerical(msg)) => {
                log::debug!("w-update failed at iteration {it}: {msg}");
                status = Status::Degenerate;
                break;
            }
            Err(e) => return Err(e),
        };
        let l_new = reduced.loss(mu, &candidate);
        match (&z, history.last()) {
            (Some(_), Some(&l_prev)) if !(l_new <= l_prev) => {
                guarded += 1;
                history.push(l_prev);
            }
            _ => {
                z = Some(candidate);
                history.push(l_new);
            }
        }
        let zc = z.as_ref().expect("set on first iteration");
        match reduced.update_mu(zc) {
            Ok(m) if m.is_finite() => mu = m,
            _ => {
                status = Status::Degenerate;
                break;
            }
        }
        let l = reduced.loss(mu, zc);
        history.push(l);
        if let Some(p) = prev {
            if (l - p).abs() <= cfg.loss_tol * p.max(1.0) {
                status = Status::Converged;
                break;
            }
        }
        prev = Some(l);
    }

    let weights = z.map(|z| reduced.lift(&z)).unwrap_or_else(|| vec![0.0; sys.ncols()]);
    Ok(finish(sys, mu, weights, history, iterations, status, guarded, start))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    sys: &LossSystem,
    mu: f64,
    weights: Vec<f64>,
    loss_history: Vec<f64>,
    iterations: usize,
    mut status: Status,
    guarded_steps: usize,
    start: Instant,
) -> EigenpairEstimate {
    let lambda_phys = physical_eigenvalue(mu, sys.eigen_exponent);
    if lambda_phys.is_none() && status != Status::Diverged {
        status = Status::Degenerate;
    }
    let rw = dot(&sys.r, &weights);
    let reference_error = (rw - sys.y_ref).abs() / sys.y_ref.abs();
    EigenpairEstimate {
        mu,
        lambda_phys,
        relative_residual: sys.relative_residual(mu, &weights),
        reference_error,
        suspect_reference: reference_error > 0.5,
        weights,
        loss_history,
        iterations,
        status,
        guarded_steps,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Adaptive-moment gradient descent settings for [`gd_baseline`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GdConfig {
    pub lr: f64,
    pub steps: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Stop as soon as the loss falls to this value.
    pub target_loss: Option<f64>,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            steps: 20_000,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            target_loss: None,
        }
    }
}

impl GdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return config_err(format!("gd.lr must be finite and non-negative, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return config_err("gd.beta1 and gd.beta2 must lie in [0, 1)");
        }
        if !(self.eps > 0.0) {
            return config_err("gd.eps must be positive");
        }
        Ok(())
    }
}

/// Exact gradient `(∇_w 𝓛, ∂𝓛/∂μ)` at `(μ, w)`.
pub fn loss_gradient(sys: &LossSystem, mu: f64, w: &[f64]) -> (Vec<f64>, f64) {
    let p = sys.products(w);
    let pde: Vec<f64> = p.aw.iter().zip(&p.hw).map(|(a, h)| a + mu * h).collect();
    let bc: Vec<f64> = p.b0w.iter().zip(&p.b1w).map(|(a, h)| a + mu * h).collect();
    let rres = p.rw - sys.y_ref;
    let ta = lstsq::matvec_t(Mat::as_ref(&sys.a), &pde);
    let th = lstsq::matvec_t(Mat::as_ref(&sys.h), &pde);
    let tb0 = lstsq::matvec_t(Mat::as_ref(&sys.b0), &bc);
    let tb1 = lstsq::matvec_t(Mat::as_ref(&sys.b1), &bc);
    let tq = lstsq::matvec_t(Mat::as_ref(&sys.q), &p.qw);
    let gw = (0..w.len())
        .map(|j| 2.0 * (ta[j] + mu * th[j] + tb0[j] + mu * tb1[j] + sys.r[j] * rres + tq[j]))
        .collect();
    let gmu = 2.0 * (dot(&p.hw, &pde) + dot(&p.b1w, &bc));
    (gw, gmu)
}

/// Joint first-order descent on `(μ, w)`, kept as a runtime baseline.
pub fn gd_baseline(sys: &LossSystem, mu0: f64, w0: &[f64], cfg: &GdConfig) -> Result<EigenpairEstimate> {
    cfg.validate()?;
    if w0.len() != sys.ncols() {
        return config_err(format!("w0 has length {} but the basis has {} features", w0.len(), sys.ncols()));
    }
    let start = Instant::now();
    let n = w0.len() + 1;
    let mut x: Vec<f64> = w0.iter().copied().chain(std::iter::once(mu0)).collect();
    let (mut m, mut v) = (vec![0.0; n], vec![0.0; n]);
    let l0 = sys.loss_value(mu0, w0);
    let mut history = vec![l0];
    let mut status = Status::MaxIters;
    let mut steps = 0;
    let (mut b1t, mut b2t) = (1.0, 1.0);
    if cfg.target_loss.is_some_and(|t| l0 <= t) {
        status = Status::Converged;
    }
    while status == Status::MaxIters && steps < cfg.steps {
        steps += 1;
        let mu = x[n - 1];
        let (gw, gmu) = loss_gradient(sys, mu, &x[..n - 1]);
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        for (i, g) in gw.into_iter().chain(std::iter::once(gmu)).enumerate() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            let mh = m[i] / (1.0 - b1t);
            let vh = v[i] / (1.0 - b2t);
            x[i] -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
        }
        let l = sys.loss_value(x[n - 1], &x[..n - 1]);
        history.push(l);
        if !l.is_finite() || l > 1e12 * l0.max(f64::MIN_POSITIVE) {
            status = Status::Diverged;
        } else if cfg.target_loss.is_some_and(|t| l <= t) {
            status = Status::Converged;
        }
    }
    let mu = x.pop().expect("non-empty");
    Ok(finish(sys, mu, x, history, steps, status, 0, start))
}
