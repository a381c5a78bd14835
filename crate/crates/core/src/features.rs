//! Frozen random cosine feature basis.
//!
//! A single hidden layer `cos(ω·x + b)` with frequencies and phases drawn
//! uniformly from `[-B, B]` and never trained afterwards. Because the layer
//! is fixed, every partial derivative of a feature is available in closed
//! form: differentiating once with respect to `x_k` multiplies by `ω_k` and
//! advances the phase by a quarter turn,
//!
//! ```text
//! ∂^α cos(ω·x + b) = (Π_k ω_k^{α_k}) · cos(ω·x + b + |α|·π/2)
//! ```
//!
//! The network output is `u(x; w) = Φ(x) w`, linear in the output weights.

use faer::Mat;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::problems::LinearOperator;

/// Highest total derivative order the basis evaluates.
pub const MAX_ORDER: u32 = 4;

/// Partial-derivative multi-index `α` over one or two spatial coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    orders: [u8; 2],
    dim: u8,
}

impl MultiIndex {
    /// Builds a multi-index from per-coordinate orders. The slice length is
    /// the spatial dimension.
    pub fn new(orders: &[u32]) -> Result<Self> {
        if orders.is_empty() || orders.len() > 2 {
            return config_err(format!(
                "multi-index must have 1 or 2 entries, got {}",
                orders.len()
            ));
        }
        let total: u32 = orders.iter().sum();
        if total > MAX_ORDER {
            return Err(Error::UnsupportedOrder {
                order: total,
                max: MAX_ORDER,
            });
        }
        let mut packed = [0u8; 2];
        for (slot, &o) in packed.iter_mut().zip(orders) {
            *slot = o as u8;
        }
        Ok(Self {
            orders: packed,
            dim: orders.len() as u8,
        })
    }

    /// The zeroth derivative (plain function value).
    pub fn zero(dim: usize) -> Self {
        Self {
            orders: [0, 0],
            dim: dim as u8,
        }
    }

    /// `d^k/dx^k` in one dimension.
    pub fn dx(k: u32) -> Self {
        Self::new(&[k]).expect("1-D derivative order within range")
    }

    /// `∂^{kx+ky} / ∂x^{kx} ∂y^{ky}` in two dimensions.
    pub fn dxy(kx: u32, ky: u32) -> Self {
        Self::new(&[kx, ky]).expect("2-D derivative order within range")
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn orders(&self) -> &[u8] {
        &self.orders[..self.dim as usize]
    }

    pub fn total_order(&self) -> u32 {
        self.orders().iter().map(|&o| o as u32).sum()
    }
}

/// Random Fourier feature layer with `width` neurons over `dim` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBasis {
    width: usize,
    dim: usize,
    /// Row-major `width × dim`.
    frequencies: Vec<f64>,
    phases: Vec<f64>,
    bandwidth: f64,
    seed: u64,
}

impl FeatureBasis {
    /// Draws frequencies and phases i.i.d. uniform on `[-bandwidth, bandwidth]`.
    pub fn new(width: usize, dim: usize, bandwidth: f64, seed: u64) -> Result<Self> {
        if width == 0 {
            return config_err("basis width must be at least 1");
        }
        if !(1..=2).contains(&dim) {
            return config_err(format!("basis dimension must be 1 or 2, got {dim}"));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return config_err(format!("bandwidth must be positive, got {bandwidth}"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(-bandwidth, bandwidth);
        let frequencies = (0..width * dim).map(|_| dist.sample(&mut rng)).collect();
        let phases = (0..width).map(|_| dist.sample(&mut rng)).collect();
        Ok(Self {
            width,
            dim,
            frequencies,
            phases,
            bandwidth,
            seed,
        })
    }

    /// Builds a basis from explicit parameters. Used for hand-checked cases.
    pub fn from_parts(
        dim: usize,
        frequencies: Vec<f64>,
        phases: Vec<f64>,
        bandwidth: f64,
    ) -> Result<Self> {
        let width = phases.len();
        if width == 0 || frequencies.len() != width * dim || !(1..=2).contains(&dim) {
            return config_err("frequency/phase shapes do not match");
        }
        Ok(Self {
            width,
            dim,
            frequencies,
            phases,
            bandwidth,
            seed: 0,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Frequency vector `ω_m`.
    pub fn frequency(&self, m: usize) -> &[f64] {
        &self.frequencies[m * self.dim..(m + 1) * self.dim]
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// `N × M` matrix with entry `(n, m) = ∂^α cos(ω_m·x_n + b_m)`.
    pub fn eval(&self, points: &Mat<f64>, alpha: MultiIndex) -> Result<Mat<f64>> {
        self.check_points(points, alpha)?;
        let mut out = Mat::<f64>::zeros(points.nrows(), self.width);
        self.accumulate(points, alpha, 1.0, &mut out);
        Ok(out)
    }

    /// Applies a linear differential operator to every feature:
    /// `Σ_t c_t ∂^{α_t} Φ`.
    pub fn eval_operator(&self, points: &Mat<f64>, op: &LinearOperator) -> Result<Mat<f64>> {
        let mut out = Mat::<f64>::zeros(points.nrows(), self.width);
        for term in op.terms() {
            self.check_points(points, term.index)?;
            self.accumulate(points, term.index, term.coefficient, &mut out);
        }
        Ok(out)
    }

    /// Network output `u(x_n; w) = Σ_m w_m cos(ω_m·x_n + b_m)` at every row of `points`.
    pub fn evaluate_output(&self, points: &Mat<f64>, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != self.width {
            return config_err(format!(
                "weight vector has length {}, basis width is {}",
                weights.len(),
                self.width
            ));
        }
        let phi = self.eval(points, MultiIndex::zero(self.dim))?;
        Ok((0..points.nrows())
            .map(|n| (0..self.width).map(|m| phi[(n, m)] * weights[m]).sum())
            .collect())
    }

    /// [`Self::evaluate_output`] on row-major coordinates `[x₀, y₀, x₁, y₁, …]`.
    pub fn evaluate_flat(&self, coords: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
        if !coords.len().is_multiple_of(self.dim) {
            return config_err(format!("{} coordinates do not split into {}-D points", coords.len(), self.dim));
        }
        let points = Mat::from_fn(coords.len() / self.dim, self.dim, |i, k| coords[i * self.dim + k]);
        self.evaluate_output(&points, weights)
    }

    fn check_points(&self, points: &Mat<f64>, alpha: MultiIndex) -> Result<()> {
        if points.ncols() != self.dim {
            return config_err(format!(
                "points have {} coordinates, basis dimension is {}",
                points.ncols(),
                self.dim
            ));
        }
        if alpha.dim() != self.dim {
            return config_err(format!(
                "multi-index dimension {} does not match basis dimension {}",
                alpha.dim(),
                self.dim
            ));
        }
        if alpha.total_order() > MAX_ORDER {
            return Err(Error::UnsupportedOrder {
                order: alpha.total_order(),
                max: MAX_ORDER,
            });
        }
        Ok(())
    }

    fn accumulate(&self, points: &Mat<f64>, alpha: MultiIndex, scale: f64, out: &mut Mat<f64>) {
        let orders = alpha.orders();
        let shift = alpha.total_order() % 4;
        for m in 0..self.width {
            let omega = self.frequency(m);
            let coef: f64 = scale
                * omega
                    .iter()
                    .zip(orders)
                    .map(|(&w, &k)| w.powi(k as i32))
                    .product::<f64>();
            if coef == 0.0 {
                continue;
            }
            let b = self.phases[m];
            for n in 0..points.nrows() {
                let mut arg = b;
                for k in 0..self.dim {
                    arg += omega[k] * points[(n, k)];
                }
                out[(n, m)] += coef * shifted_cos(arg, shift);
            }
        }
    }
}

/// `cos(t + q·π/2)` without rounding the quarter-turn shift.
#[inline]
fn shifted_cos(t: f64, quarter_turns: u32) -> f64 {
    match quarter_turns {
        0 => t.cos(),
        1 => -t.sin(),
        2 => -t.cos(),
        _ => t.sin(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(rows: &[&[f64]]) -> Mat<f64> {
        Mat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn bounds_and_determinism() {
        let a = FeatureBasis::new(500, 1, 1.0, 7).unwrap();
        assert!(a.frequencies.iter().all(|w| w.abs() <= 1.0));
        assert!(a.phases.iter().all(|b| b.abs() <= 1.0));
        let b = FeatureBasis::new(500, 1, 1.0, 7).unwrap();
        assert_eq!(a, b);
        let c = FeatureBasis::new(500, 1, 1.0, 8).unwrap();
        assert_ne!(a, c);

        let one = FeatureBasis::new(1, 1, 0.5, 99).unwrap();
        assert_eq!(one.width(), 1);
        assert!(one.frequency(0)[0].abs() <= 0.5);

        let helm = FeatureBasis::new(500, 2, 8.0 * std::f64::consts::PI, 3).unwrap();
        let bound = 8.0 * std::f64::consts::PI;
        assert!(helm.frequencies.iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(matches!(FeatureBasis::new(0, 1, 1.0, 0), Err(Error::Config(_))));
        assert!(matches!(FeatureBasis::new(5, 3, 1.0, 0), Err(Error::Config(_))));
        assert!(matches!(FeatureBasis::new(5, 1, 0.0, 0), Err(Error::Config(_))));
        assert!(matches!(FeatureBasis::new(5, 1, -1.0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn order_limit() {
        assert!(matches!(
            MultiIndex::new(&[3, 2]),
            Err(Error::UnsupportedOrder { order: 5, max: 4 })
        ));
        assert!(MultiIndex::new(&[2, 2]).is_ok());
    }

    #[test]
    fn zero_order_is_plain_cosine() {
        let basis = FeatureBasis::from_parts(1, vec![2.0, -0.5], vec![0.3, 1.0], 2.0).unwrap();
        let x = pts(&[&[0.25], &[0.7]]);
        let phi = basis.eval(&x, MultiIndex::zero(1)).unwrap();
        for (n, xv) in [0.25, 0.7].iter().enumerate() {
            assert_eq!(phi[(n, 0)], (2.0 * xv + 0.3_f64).cos());
            assert_eq!(phi[(n, 1)], (-0.5 * xv + 1.0_f64).cos());
        }
    }

    #[test]
    fn second_derivative_hand_value() {
        let basis = FeatureBasis::from_parts(1, vec![2.0], vec![0.0], 2.0).unwrap();
        let x = pts(&[&[0.0]]);
        let d2 = basis.eval(&x, MultiIndex::dx(2)).unwrap();
        assert_eq!(d2[(0, 0)], -4.0);
    }

    #[test]
    fn mixed_derivative_hand_value() {
        // ∂²/∂x∂y cos(ax + by + c) = -ab cos(ax + by + c)
        let basis = FeatureBasis::from_parts(2, vec![1.5, -2.0], vec![0.2], 2.0).unwrap();
        let x = pts(&[&[0.3, 0.4]]);
        let v = basis.eval(&x, MultiIndex::dxy(1, 1)).unwrap()[(0, 0)];
        let arg = 1.5 * 0.3 - 2.0 * 0.4 + 0.2;
        assert!((v - (3.0 * f64::cos(arg))).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let basis = FeatureBasis::new(4, 2, 1.0, 1).unwrap();
        let x = pts(&[&[0.1]]);
        assert!(matches!(basis.eval(&x, MultiIndex::zero(2)), Err(Error::Config(_))));
        let x2 = pts(&[&[0.1, 0.2]]);
        assert!(matches!(basis.eval(&x2, MultiIndex::dx(1)), Err(Error::Config(_))));
    }
}
