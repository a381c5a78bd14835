//! Independent reference spectra: closed forms, characteristic-equation
//! roots, and finite differences. Nothing in the solver path depends on
//! this module.

pub mod fd;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{catalog_entry, Domain, ProblemName};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ClosedForm,
    CharEquation,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub mu: f64,
    pub label: String,
    pub source: Source,
    /// Estimated absolute error of `mu` (finite differences only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdMetadata {
    pub h_coarse: f64,
    pub h_fine: f64,
    pub raw_coarse: Vec<f64>,
    pub raw_fine: Vec<f64>,
    /// How the reported value combines the two grids.
    pub extrapolation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpectrum {
    pub problem: String,
    /// Ascending in `mu`.
    pub values: Vec<OracleValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discretization: Option<FdMetadata>,
}

impl OracleSpectrum {
    pub fn mus(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.mu).collect()
    }

    /// Ascending values with repeated (degenerate) entries collapsed.
    pub fn distinct_mus(&self, rel_tol: f64) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for mu in self.mus() {
            if out.last().is_none_or(|&l| (mu - l).abs() > rel_tol * mu.abs().max(l.abs())) {
                out.push(mu);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BucklingFamily {
    PinPin,
    FixedFixed,
    FixedPin,
    FixedFree,
}

/// `μ_k = λ_k²` for a unit-length column, `k ≥ 1`.
pub fn buckling_oracle(family: BucklingFamily, k: usize) -> f64 {
    assert!(k >= 1, "mode index starts at 1");
    let kf = k as f64;
    match family {
        BucklingFamily::PinPin => (kf * PI).powi(2),
        BucklingFamily::FixedFree => ((2.0 * kf - 1.0) * PI / 2.0).powi(2),
        BucklingFamily::FixedPin => nth_root(fixed_pin_char, fixed_pin_char_deriv, k).powi(2),
        BucklingFamily::FixedFixed => nth_root(fixed_fixed_char, fixed_fixed_char_deriv, k).powi(2),
    }
}

/// `sin x − x cos x`, zero where `tan x = x`.
pub fn fixed_pin_char(x: f64) -> f64 {
    x.sin() - x * x.cos()
}

fn fixed_pin_char_deriv(x: f64) -> f64 {
    x * x.sin()
}

/// Clamped-clamped determinant `2(1 − cos x) − x sin x`.
pub fn fixed_fixed_char(x: f64) -> f64 {
    2.0 * (1.0 - x.cos()) - x * x.sin()
}

fn fixed_fixed_char_deriv(x: f64) -> f64 {
    x.sin() - x * x.cos()
}

/// k-th positive root by a sign-change scan followed by safeguarded Newton.
fn nth_root(f: fn(f64) -> f64, df: fn(f64) -> f64, k: usize) -> f64 {
    // Both characteristic functions vanish like x³ or x⁴ at the origin; start past it.
    let step = 0.05;
    let mut a = 0.5;
    let mut fa = f(a);
    let mut found = 0;
    loop {
        let b = a + step;
        let fb = f(b);
        if fa == 0.0 || fa.signum() != fb.signum() {
            found += 1;
            if found == k {
                return if fa == 0.0 { a } else { safeguarded_newton(f, df, a, b) };
            }
        }
        a = b;
        fa = fb;
    }
}

fn safeguarded_newton(f: fn(f64) -> f64, df: fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx.signum() == flo.signum() {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        let next = if d != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-15 * x.abs() || hi - lo <= 1e-15 * x.abs() {
            return next;
        }
        x = next;
    }
    x
}

/// Dirichlet Laplacian on `[ax,bx] × [ay,by]`: `π²(m²/Lx² + n²/Ly²)`.
pub fn rectangle_helmholtz_oracle(ax: f64, bx: f64, ay: f64, by: f64, m: usize, n: usize) -> f64 {
    let (lx, ly) = (bx - ax, by - ay);
    PI * PI * ((m * m) as f64 / (lx * lx) + (n * n) as f64 / (ly * ly))
}

/// Simply supported `a × b` plate: `((mπ/a)² + (nπ/b)²)²`.
pub fn plate_ss_oracle(a: f64, b: f64, m: usize, n: usize) -> f64 {
    ((m as f64 * PI / a).powi(2) + (n as f64 * PI / b).powi(2)).powi(2)
}

/// `count` smallest values of `f(m, n)` over `m, n ≥ 1`, degenerate pairs repeated.
fn lowest_pairs(count: usize, f: impl Fn(usize, usize) -> f64) -> Vec<(f64, usize, usize)> {
    let bound = count + 1;
    let mut all: Vec<(f64, usize, usize)> = (1..=bound)
        .flat_map(|m| (1..=bound).map(move |n| (m, n)))
        .map(|(m, n)| (f(m, n), m, n))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(count);
    all
}

/// Dirichlet spectrum of a domain by 5-point finite differences at `h` and
/// `h/2`, Richardson-extrapolated assuming `O(h²)` convergence.
pub fn fd_oracle(problem: &str, domain: &Domain, grid_h: f64, count: usize) -> Result<OracleSpectrum> {
    if count == 0 {
        return Err(Error::Oracle("count must be at least 1".into()));
    }
    let coarse = fd::GridLaplacian::new(domain, grid_h)?.smallest_eigenvalues(count)?;
    let fine = fd::GridLaplacian::new(domain, grid_h / 2.0)?.smallest_eigenvalues(count)?;
    let values = coarse
        .iter()
        .zip(&fine)
        .enumerate()
        .map(|(i, (c, f))| {
            let extrapolated = (4.0 * f - c) / 3.0;
            OracleValue {
                mu: extrapolated,
                label: format!("fd{}", i + 1),
                source: Source::FiniteDifference,
                error_estimate: Some((extrapolated - f).abs()),
            }
        })
        .collect();
    Ok(OracleSpectrum {
        problem: problem.to_string(),
        values,
        discretization: Some(FdMetadata {
            h_coarse: grid_h,
            h_fine: grid_h / 2.0,
            raw_coarse: coarse,
            raw_fine: fine,
            extrapolation: "richardson_h2".into(),
        }),
    })
}

pub const DEFAULT_LSHAPE_GRID_H: f64 = 1.0 / 32.0;

/// L-shaped membrane oracle over grids `grid_h` and `grid_h / 2`.
pub fn lshape_fd_oracle(grid_h: f64, count: usize) -> Result<OracleSpectrum> {
    let spec = catalog_entry(ProblemName::HelmholtzLshape);
    fd_oracle(&spec.name, &spec.domain, grid_h, count)
}

/// Reference spectrum for a catalog problem. `grid_h` only affects problems
/// without a closed form.
pub fn oracle_spectrum(name: ProblemName, count: usize, grid_h: Option<f64>) -> Result<OracleSpectrum> {
    if count == 0 {
        return Err(Error::Oracle("count must be at least 1".into()));
    }
    let buckling = |family, source| {
        (1..=count)
            .map(|k| OracleValue {
                mu: buckling_oracle(family, k),
                label: format!("k={k}"),
                source,
                error_estimate: None,
            })
            .collect::<Vec<_>>()
    };
    let pairs = |f: &dyn Fn(usize, usize) -> f64| {
        lowest_pairs(count, f)
            .into_iter()
            .map(|(mu, m, n)| OracleValue {
                mu,
                label: format!("({m},{n})"),
                source: Source::ClosedForm,
                error_estimate: None,
            })
            .collect::<Vec<_>>()
    };
    let values = match name {
        ProblemName::BucklingPinPin => buckling(BucklingFamily::PinPin, Source::ClosedForm),
        ProblemName::BucklingFixedFree => buckling(BucklingFamily::FixedFree, Source::ClosedForm),
        ProblemName::BucklingFixedPin => buckling(BucklingFamily::FixedPin, Source::CharEquation),
        ProblemName::BucklingFixedFixed => buckling(BucklingFamily::FixedFixed, Source::CharEquation),
        ProblemName::HelmholtzSquare => match catalog_entry(name).domain {
            Domain::Rectangle { ax, bx, ay, by } => {
                pairs(&|m, n| rectangle_helmholtz_oracle(ax, bx, ay, by, m, n))
            }
            _ => unreachable!("catalog square is a rectangle"),
        },
        ProblemName::PlateSs => match catalog_entry(name).domain {
            Domain::Rectangle { ax, bx, ay, by } => pairs(&|m, n| plate_ss_oracle(bx - ax, by - ay, m, n)),
            _ => unreachable!("catalog plate is a rectangle"),
        },
        ProblemName::HelmholtzLshape => {
            return lshape_fd_oracle(grid_h.unwrap_or(DEFAULT_LSHAPE_GRID_H), count);
        }
    };
    Ok(OracleSpectrum {
        problem: name.as_str().to_string(),
        values,
        discretization: None,
    })
}
