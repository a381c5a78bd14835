//! Dense least-squares kernels shared by the solver and the tests.

use faer::linalg::solvers::SolveLstsq;
use faer::{Mat, MatRef};

use crate::error::{Error, Result};

/// `m · x`.
pub fn matvec(m: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(m.ncols(), x.len());
    let mut out = vec![0.0; m.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let col = m.col(j);
        for (i, o) in out.iter_mut().enumerate() {
            *o += col[i] * xj;
        }
    }
    out
}

/// `mᵀ · x`.
pub fn matvec_t(m: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(m.nrows(), x.len());
    (0..m.ncols())
        .map(|j| {
            let col = m.col(j);
            x.iter().enumerate().map(|(i, &xi)| col[i] * xi).sum()
        })
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn ensure_finite(m: MatRef<'_, f64>, what: &str) -> Result<()> {
    for j in 0..m.ncols() {
        if m.col(j).iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("{what} contains non-finite entries")));
        }
    }
    Ok(())
}

/// Thin SVD `G = U Σ Vᵀ` reused for pseudoinverse and Tikhonov solves.
pub struct SvdSolver {
    u: Mat<f64>,
    s: Vec<f64>,
    v: Mat<f64>,
}

impl SvdSolver {
    pub fn new(g: MatRef<'_, f64>) -> Result<Self> {
        ensure_finite(g, "design matrix")?;
        let svd = g
            .thin_svd()
            .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
        Ok(Self {
            u: svd.U().to_owned(),
            s: svd.S().column_vector().iter().copied().collect(),
            v: svd.V().to_owned(),
        })
    }

    /// Singular values in non-increasing order.
    pub fn singular_values(&self) -> &[f64] {
        &self.s
    }

    /// Right singular vectors as columns.
    pub fn v(&self) -> MatRef<'_, f64> {
        self.v.as_ref()
    }

    /// Minimum-norm solution, dropping singular values below `cutoff · σ_max`.
    pub fn pinv_solve(&self, y: &[f64], cutoff: f64) -> Vec<f64> {
        let smax = self.s.first().copied().unwrap_or(0.0);
        self.filtered_solve(y, |s| if s > cutoff * smax && s > 0.0 { 1.0 / s } else { 0.0 })
    }

    /// `(GᵀG + γI)⁻¹ Gᵀ y`.
    pub fn tikhonov_solve(&self, y: &[f64], gamma: f64) -> Vec<f64> {
        self.filtered_solve(y, |s| if s > 0.0 { s / (s * s + gamma) } else { 0.0 })
    }

    fn filtered_solve(&self, y: &[f64], filter: impl Fn(f64) -> f64) -> Vec<f64> {
        let uty = matvec_t(self.u.as_ref(), y);
        let coef: Vec<f64> = uty.iter().zip(&self.s).map(|(c, &s)| c * filter(s)).collect();
        matvec(self.v.as_ref(), &coef)
    }
}

/// Least squares through Householder QR. Returns the solution together with
/// a cheap condition estimate `max|r_ii| / min|r_ii|` (infinite when a
/// diagonal entry vanishes). Requires `nrows ≥ ncols`.
pub fn qr_solve(g: MatRef<'_, f64>, y: &[f64]) -> (Vec<f64>, f64) {
    assert!(g.nrows() >= g.ncols());
    let qr = g.qr();
    let r = qr.thin_R();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..r.ncols() {
        let d = r[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let rhs = Mat::from_fn(y.len(), 1, |i, _| y[i]);
    let x = qr.solve_lstsq(&rhs);
    ((0..g.ncols()).map(|i| x[(i, 0)]).collect(), cond)
}

/// Solves `min ‖G w − y‖` by pseudoinverse (`gamma = 0`) or Tikhonov.
pub fn solve(g: MatRef<'_, f64>, y: &[f64], gamma: f64, cutoff: f64) -> Result<Vec<f64>> {
    let svd = SvdSolver::new(g)?;
    Ok(if gamma > 0.0 {
        svd.tikhonov_solve(y, gamma)
    } else {
        svd.pinv_solve(y, cutoff)
    })
}
