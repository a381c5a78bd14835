//! The discretized loss as stacked least-squares blocks.
//!
//! ```text
//! 𝓛(μ, w) = ‖(A + μH)w‖² + ‖(B0 + μB1)w‖² + (r·w − y_ref)² + ‖Qw‖²
//! ```
//!
//! Quadrature weights are folded into the rows as square roots, so each
//! term is a plain sum of squared row residuals.

use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::features::{FeatureBasis, MultiIndex};
use crate::lstsq::{dot, matvec, matvec_t, norm2_sq};
use crate::problems::{CollocationSet, ProblemSpec, Reference};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub bc: f64,
    pub reference: f64,
    pub ortho: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            bc: 100.0,
            reference: 1.0,
            ortho: 100.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("bc", self.bc), ("reference", self.reference), ("ortho", self.ortho)] {
            if !(v >= 0.0) || !v.is_finite() {
                return config_err(format!("weights.{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.reference == 0.0 {
            return config_err("weights.reference must be positive, otherwise w = 0 is optimal");
        }
        Ok(())
    }
}

/// A previously accepted eigenfunction, stored as output weights over the
/// basis it was found with.
#[derive(Debug, Clone)]
pub struct PriorMode {
    pub basis: Arc<FeatureBasis>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LossSystem {
    pub a: Arc<Mat<f64>>,
    pub h: Arc<Mat<f64>>,
    pub b0: Arc<Mat<f64>>,
    pub b1: Arc<Mat<f64>>,
    pub r: Vec<f64>,
    pub y_ref: f64,
    pub q: Arc<Mat<f64>>,
    pub weights: LossWeights,
    /// `Φ(X_int)`, kept for quadrature inner products between modes.
    pub phi: Arc<Mat<f64>>,
    /// `|Ω| / N_int`.
    pub interior_weight: f64,
    pub eigen_exponent: u32,
}

/// Block products `A·w`, `H·w`, ... for one weight vector.
#[derive(Debug, Clone)]
pub struct BlockProducts {
    pub aw: Vec<f64>,
    pub hw: Vec<f64>,
    pub b0w: Vec<f64>,
    pub b1w: Vec<f64>,
    pub rw: f64,
    pub qw: Vec<f64>,
}

impl BlockProducts {
    pub fn loss(&self, mu: f64, y_ref: f64) -> f64 {
        let pde: f64 = self.aw.iter().zip(&self.hw).map(|(a, h)| (a + mu * h).powi(2)).sum();
        let bc: f64 = self.b0w.iter().zip(&self.b1w).map(|(a, h)| (a + mu * h).powi(2)).sum();
        pde + bc + (self.rw - y_ref).powi(2) + norm2_sq(&self.qw)
    }

    /// `(cᵀa, cᵀc)` with `a = [Aw; B0w]`, `c = [Hw; B1w]`.
    pub fn mu_moments(&self) -> (f64, f64) {
        (
            dot(&self.hw, &self.aw) + dot(&self.b1w, &self.b0w),
            norm2_sq(&self.hw) + norm2_sq(&self.b1w),
        )
    }
}

impl LossSystem {
    /// Same blocks with a different reference point; the matrices are shared.
    pub fn with_reference(&self, basis: &FeatureBasis, reference: &Reference) -> Result<Self> {
        let mut out = self.clone();
        out.r = reference_row(basis, reference, self.weights.reference)?;
        out.y_ref = self.weights.reference.sqrt() * reference.value;
        Ok(out)
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols()
    }

    pub fn products(&self, w: &[f64]) -> BlockProducts {
        BlockProducts {
            aw: matvec(Mat::as_ref(&self.a), w),
            hw: matvec(Mat::as_ref(&self.h), w),
            b0w: matvec(Mat::as_ref(&self.b0), w),
            b1w: matvec(Mat::as_ref(&self.b1), w),
            rw: dot(&self.r, w),
            qw: matvec(Mat::as_ref(&self.q), w),
        }
    }

    pub fn loss_value(&self, mu: f64, w: &[f64]) -> f64 {
        self.products(w).loss(mu, self.y_ref)
    }

    /// `‖(A+μH)w‖ / (‖Aw‖ + |μ|‖Hw‖ + ε)`.
    pub fn relative_residual(&self, mu: f64, w: &[f64]) -> f64 {
        let p = self.products(w);
        let res: f64 = p.aw.iter().zip(&p.hw).map(|(a, h)| (a + mu * h).powi(2)).sum();
        res.sqrt() / (norm2_sq(&p.aw).sqrt() + mu.abs() * norm2_sq(&p.hw).sqrt() + f64::EPSILON)
    }

    /// μ-free design matrix `G0 = [A; B0; r; Q]`.
    pub fn g0(&self) -> Mat<f64> {
        self.stack(|blk| match blk {
            Block::Pde => &*self.a,
            Block::Bc => &*self.b0,
        }, true)
    }

    /// μ-carrier design matrix `G1 = [H; B1; 0; 0]`.
    pub fn g1(&self) -> Mat<f64> {
        self.stack(|blk| match blk {
            Block::Pde => &*self.h,
            Block::Bc => &*self.b1,
        }, false)
    }

    /// Stacked design `G(μ) = G0 + μ·G1` and targets `[0; 0; y_ref; 0]`.
    pub fn design(&self, mu: f64) -> (Mat<f64>, Vec<f64>) {
        let g0 = self.g0();
        let g1 = self.g1();
        let g = Mat::from_fn(g0.nrows(), g0.ncols(), |i, j| g0[(i, j)] + mu * g1[(i, j)]);
        (g, self.targets())
    }

    pub fn targets(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        y[self.a.nrows() + self.b0.nrows()] = self.y_ref;
        y
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows() + self.b0.nrows() + 1 + self.q.nrows()
    }

    /// Number of boundary rows whose μ-dependent part is not identically zero.
    pub fn active_eigen_boundary_rows(&self) -> usize {
        (0..self.b1.nrows())
            .filter(|&i| (0..self.b1.ncols()).any(|j| self.b1[(i, j)] != 0.0))
            .count()
    }

    /// Model output at the interior points.
    pub fn interior_values(&self, w: &[f64]) -> Vec<f64> {
        matvec(Mat::as_ref(&self.phi), w)
    }

    /// Quadrature inner product `(|Ω|/N) Σ u(x_n) v(x_n)` of two weight vectors.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.interior_weight * dot(&self.interior_values(u), &self.interior_values(v))
    }

    fn stack<'a>(&'a self, pick: impl Fn(Block) -> &'a Mat<f64>, with_fixed: bool) -> Mat<f64> {
        let top = pick(Block::Pde);
        let bc = pick(Block::Bc);
        let (na, nb, nq) = (self.a.nrows(), self.b0.nrows(), self.q.nrows());
        Mat::from_fn(self.nrows(), self.ncols(), |i, j| {
            if i < na {
                top[(i, j)]
            } else if i < na + nb {
                bc[(i - na, j)]
            } else if !with_fixed {
                0.0
            } else if i == na + nb {
                self.r[j]
            } else {
                debug_assert!(i - na - nb - 1 < nq);
                self.q[(i - na - nb - 1, j)]
            }
        })
    }
}

#[derive(Clone, Copy)]
enum Block {
    Pde,
    Bc,
}

/// Evaluates every block once on the fixed collocation points.
pub fn assemble(
    spec: &ProblemSpec,
    basis: &FeatureBasis,
    colloc: &CollocationSet,
    weights: LossWeights,
    prior_modes: &[PriorMode],
) -> Result<LossSystem> {
    spec.validate()?;
    weights.validate()?;
    if basis.dim() != spec.dim() {
        return config_err(format!(
            "basis dimension {} does not match problem dimension {}",
            basis.dim(),
            spec.dim()
        ));
    }
    if colloc.boundary.len() != spec.boundary.len() {
        return config_err("collocation set does not match the boundary condition list");
    }
    let m = basis.width();
    let n_int = colloc.interior.nrows();
    if n_int < m {
        log::warn!("{n_int} interior points for {m} features: the PDE block is underdetermined");
    }
    let iw = colloc.interior_weight;
    let s_int = iw.sqrt();

    let mut a = basis.eval_operator(&colloc.interior, &spec.diff_op)?;
    let mut h = basis.eval_operator(&colloc.interior, &spec.carrier_op)?;
    scale(&mut a, s_int);
    scale(&mut h, s_int);

    let nb: usize = colloc.boundary.iter().map(|b| b.points.nrows()).sum();
    let mut b0 = Mat::<f64>::zeros(nb, m);
    let mut b1 = Mat::<f64>::zeros(nb, m);
    let mut row = 0;
    for (bc, samples) in spec.boundary.iter().zip(&colloc.boundary) {
        let s = (weights.bc * samples.weight).sqrt();
        let base = basis.eval_operator(&samples.points, &bc.base)?;
        let eig = bc
            .eig
            .as_ref()
            .map(|op| basis.eval_operator(&samples.points, op))
            .transpose()?;
        for i in 0..samples.points.nrows() {
            for j in 0..m {
                b0[(row + i, j)] = s * base[(i, j)];
                if let Some(e) = &eig {
                    b1[(row + i, j)] = s * e[(i, j)];
                }
            }
        }
        row += samples.points.nrows();
    }

    let reference = &colloc.reference;
    let sr = weights.reference.sqrt();
    let r = reference_row(basis, reference, weights.reference)?;

    let phi = basis.eval(&colloc.interior, MultiIndex::zero(spec.dim()))?;
    let mut q = Mat::<f64>::zeros(prior_modes.len(), m);
    let so = weights.ortho.sqrt();
    for (k, mode) in prior_modes.iter().enumerate() {
        let u = normalized_mode_values(mode, &colloc.interior, iw)?;
        let qk = matvec_t(phi.as_ref(), &u);
        for j in 0..m {
            q[(k, j)] = so * iw * qk[j];
        }
    }

    Ok(LossSystem {
        a: Arc::new(a),
        h: Arc::new(h),
        b0: Arc::new(b0),
        b1: Arc::new(b1),
        r,
        y_ref: sr * reference.value,
        q: Arc::new(q),
        weights,
        phi: Arc::new(phi),
        interior_weight: iw,
        eigen_exponent: spec.eigen_exponent,
    })
}

fn reference_row(basis: &FeatureBasis, reference: &Reference, alpha_ref: f64) -> Result<Vec<f64>> {
    let dim = basis.dim();
    if reference.point.len() != dim {
        return config_err("reference point dimension does not match the basis");
    }
    let xr = Mat::from_fn(1, dim, |_, k| reference.point[k]);
    let phi_ref = basis.eval(&xr, MultiIndex::zero(dim))?;
    let sr = alpha_ref.sqrt();
    Ok((0..basis.width()).map(|j| sr * phi_ref[(0, j)]).collect())
}

/// Values of a stored mode at `points`, scaled to unit quadrature norm.
pub fn normalized_mode_values(mode: &PriorMode, points: &Mat<f64>, weight: f64) -> Result<Vec<f64>> {
    let mut u = mode.basis.evaluate_output(points, &mode.weights)?;
    let norm = (weight * norm2_sq(&u)).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Numerical("prior mode has zero or non-finite norm".into()));
    }
    u.iter_mut().for_each(|v| *v /= norm);
    Ok(u)
}

fn scale(m: &mut Mat<f64>, s: f64) {
    for j in 0..m.ncols() {
        for v in m.col_mut(j).iter_mut() {
            *v *= s;
        }
    }
}
