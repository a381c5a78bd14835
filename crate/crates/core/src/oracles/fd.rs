//! Five-point finite-difference Dirichlet Laplacian on grid-aligned domains.
//!
//! The smallest eigenvalues come from block inverse (subspace) iteration
//! with a banded Cholesky factor and Rayleigh–Ritz projection; a dense
//! symmetric eigensolve is kept for small grids and cross-checks.

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problems::Domain;

/// `−Δ_h` restricted to interior grid nodes.
#[derive(Debug, Clone)]
pub struct GridLaplacian {
    pub h: f64,
    /// Neighbour unknown indices (left, right, down, up); `None` on the boundary.
    neighbours: Vec<[Option<usize>; 4]>,
    bandwidth: usize,
}

impl GridLaplacian {
    pub fn new(domain: &Domain, h: f64) -> Result<Self> {
        let bbox = domain.bounding_box();
        if bbox.len() != 2 {
            return Err(Error::Oracle("finite differences need a 2-D domain".into()));
        }
        if !matches!(domain, Domain::Rectangle { .. } | Domain::LShape { .. }) {
            return Err(Error::Oracle(format!("no grid discretization for {domain:?}")));
        }
        let cells: Vec<usize> = bbox
            .iter()
            .map(|&(lo, hi)| grid_cells(hi - lo, h))
            .collect::<Result<_>>()?;
        if let Domain::LShape { .. } = domain {
            if !cells[0].is_multiple_of(2) {
                return Err(Error::Oracle("the L-shape re-entrant corner must be a grid node".into()));
            }
        }
        let (nx, ny) = (cells[0] - 1, cells[1] - 1);
        let coord = |axis: usize, i: usize| {
            let (lo, hi) = bbox[axis];
            lo + (i + 1) as f64 * (hi - lo) / cells[axis] as f64
        };
        let node = |i: usize, j: usize| [coord(0, i), coord(1, j)];
        let mut index = vec![None; nx * ny];
        let mut count = 0;
        for j in 0..ny {
            for i in 0..nx {
                if domain.contains(&node(i, j)) {
                    index[j * nx + i] = Some(count);
                    count += 1;
                }
            }
        }
        let at = |i: isize, j: isize| -> Option<usize> {
            if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
                None
            } else {
                index[j as usize * nx + i as usize]
            }
        };
        let mut neighbours = Vec::with_capacity(count);
        let mut bandwidth = 0;
        for j in 0..ny as isize {
            for i in 0..nx as isize {
                if let Some(me) = at(i, j) {
                    let nb = [at(i - 1, j), at(i + 1, j), at(i, j - 1), at(i, j + 1)];
                    for k in nb.iter().flatten() {
                        bandwidth = bandwidth.max(me.abs_diff(*k));
                    }
                    neighbours.push(nb);
                }
            }
        }
        Ok(Self { h, neighbours, bandwidth })
    }

    pub fn unknowns(&self) -> usize {
        self.neighbours.len()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let s = 1.0 / (self.h * self.h);
        for (k, nb) in self.neighbours.iter().enumerate() {
            let mut v = 4.0 * x[k];
            for n in nb.iter().flatten() {
                v -= x[*n];
            }
            out[k] = s * v;
        }
    }

    pub fn dense(&self) -> Mat<f64> {
        let n = self.unknowns();
        let s = 1.0 / (self.h * self.h);
        let mut m = Mat::zeros(n, n);
        for (k, nb) in self.neighbours.iter().enumerate() {
            m[(k, k)] = 4.0 * s;
            for j in nb.iter().flatten() {
                m[(k, *j)] = -s;
            }
        }
        m
    }

    /// All eigenvalues, ascending, by dense symmetric eigensolve.
    pub fn dense_eigenvalues(&self) -> Result<Vec<f64>> {
        self.dense()
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Oracle(format!("dense eigensolve failed: {e:?}")))
    }

    /// The `count` smallest eigenvalues, ascending.
    pub fn smallest_eigenvalues(&self, count: usize) -> Result<Vec<f64>> {
        let n = self.unknowns();
        if count == 0 || count > n {
            return Err(Error::Oracle(format!("cannot resolve {count} modes with {n} interior nodes")));
        }
        let p = (2 * count).max(count + 8).min(n);
        if p == n {
            let mut all = self.dense_eigenvalues()?;
            all.truncate(count);
            return Ok(all);
        }
        let chol = BandCholesky::factor(self)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut x = Mat::from_fn(n, p, |_, _| rng.gen::<f64>() - 0.5);
        let mut previous = vec![f64::INFINITY; count];
        let mut ax = vec![0.0; n];
        for _ in 0..1000 {
            for j in 0..p {
                let col: Vec<f64> = x.col(j).iter().copied().collect();
                let y = chol.solve(&col);
                for i in 0..n {
                    x[(i, j)] = y[i];
                }
            }
            let q = x.qr().compute_thin_Q();
            let mut aq = Mat::<f64>::zeros(n, p);
            for j in 0..p {
                let col: Vec<f64> = q.col(j).iter().copied().collect();
                self.apply(&col, &mut ax);
                for i in 0..n {
                    aq[(i, j)] = ax[i];
                }
            }
            let t = q.transpose() * &aq;
            let sym = Mat::from_fn(p, p, |i, j| 0.5 * (t[(i, j)] + t[(j, i)]));
            let eig = sym
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Oracle(format!("Rayleigh-Ritz eigensolve failed: {e:?}")))?;
            let theta: Vec<f64> = eig.S().column_vector().iter().copied().collect();
            x = &q * eig.U();
            let done = theta
                .iter()
                .zip(&previous)
                .all(|(t, p)| (t - p).abs() <= 1e-13 * t.abs());
            previous = theta[..count].to_vec();
            if done {
                return Ok(previous);
            }
        }
        Err(Error::Oracle("subspace iteration did not converge".into()))
    }
}

fn grid_cells(length: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) {
        return Err(Error::Oracle(format!("grid spacing must be positive, got {h}")));
    }
    let cells = length / h;
    let rounded = cells.round();
    if rounded < 2.0 || (cells - rounded).abs() > 1e-9 * cells {
        return Err(Error::Oracle(format!("grid spacing {h} does not divide side length {length}")));
    }
    Ok(rounded as usize)
}

/// Lower-triangular band factor `A = L Lᵀ`.
struct BandCholesky {
    n: usize,
    b: usize,
    /// Row `i` stores `L[i, i−b..=i]` at offsets `0..=b`.
    band: Vec<f64>,
}

impl BandCholesky {
    fn factor(op: &GridLaplacian) -> Result<Self> {
        let n = op.unknowns();
        let b = op.bandwidth;
        let w = b + 1;
        let s = 1.0 / (op.h * op.h);
        let mut band = vec![0.0; n * w];
        // entry (i, j) with j ≤ i lives at band[i*w + (j + b - i)]
        for (i, nb) in op.neighbours.iter().enumerate() {
            band[i * w + b] = 4.0 * s;
            for &j in nb.iter().flatten() {
                if j < i {
                    band[i * w + (j + b - i)] = -s;
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(b);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(b));
                let mut sum = band[i * w + (j + b - i)];
                for k in k0..j {
                    sum -= band[i * w + (k + b - i)] * band[j * w + (k + b - j)];
                }
                if i == j {
                    if !(sum > 0.0) {
                        return Err(Error::Oracle("matrix is not positive definite".into()));
                    }
                    band[i * w + b] = sum.sqrt();
                } else {
                    band[i * w + (j + b - i)] = sum / band[j * w + b];
                }
            }
        }
        Ok(Self { n, b, band })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, b, w) = (self.n, self.b, self.b + 1);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(b)..i {
                s -= self.band[i * w + (k + b - i)] * y[k];
            }
            y[i] = s / self.band[i * w + b];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + b + 1).min(n) {
                s -= self.band[k * w + (i + b - k)] * y[k];
            }
            y[i] = s / self.band[i * w + b];
        }
        y
    }
}
