//! Output files: JSON reports, loss-history CSV, and field samples.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use eigenacs_core::{Domain, FeatureBasis};
use serde::Serialize;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Columns `iter,half_step,loss`; `half_step` is 0 after the w-update and 1
/// after the μ-update of iteration `iter` (1-based).
pub fn write_loss_history(path: &Path, history: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["iter", "half_step", "loss"])?;
    for (k, loss) in history.iter().enumerate() {
        w.write_record([(k / 2 + 1).to_string(), (k % 2).to_string(), loss.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Samples `u` on a `grid × grid` tensor grid over the bounding box (or
/// `grid` points on an interval), keeping points in the closed domain.
/// Columns `x,u` or `x,y,u`.
pub fn write_field(path: &Path, domain: &Domain, basis: &FeatureBasis, weights: &[f64], grid: usize) -> Result<usize> {
    let points = grid_points(domain, grid);
    let dim = domain.dim();
    let flat: Vec<f64> = points.iter().flatten().copied().collect();
    let u = basis.evaluate_flat(&flat, weights)?;
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    if dim == 1 {
        w.write_record(["x", "u"])?;
    } else {
        w.write_record(["x", "y", "u"])?;
    }
    for (p, v) in points.iter().zip(&u) {
        let mut rec: Vec<String> = p.iter().map(f64::to_string).collect();
        rec.push(v.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(points.len())
}

/// Uniform tensor grid over the bounding box, clipped to the closed domain.
pub fn grid_points(domain: &Domain, grid: usize) -> Vec<Vec<f64>> {
    let bbox = domain.bounding_box();
    let axis = |k: usize, i: usize| {
        let (lo, hi) = bbox[k];
        lo + (hi - lo) * i as f64 / (grid - 1) as f64
    };
    let mut out = Vec::new();
    if bbox.len() == 1 {
        out.extend((0..grid).map(|i| vec![axis(0, i)]));
        return out;
    }
    for j in 0..grid {
        for i in 0..grid {
            let p = vec![axis(0, i), axis(1, j)];
            if domain.contains_closure(&p) {
                out.push(p);
            }
        }
    }
    out
}
