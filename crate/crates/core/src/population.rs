//! Population of ACS strands with clustering and orthogonality deflation.
//!
//! Each generation draws one basis and one collocation set, starts a strand
//! per stratum of the search interval, and accepts at most one mode per
//! cluster of converged eigenvalues. Accepted modes enter the orthogonality
//! rows of every later generation.

use std::sync::Arc;
use std::time::Instant;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, normalized_mode_values, LossSystem, LossWeights, PriorMode};
use crate::error::{config_err, Error, Result};
use crate::features::FeatureBasis;
use crate::lstsq::dot;
use crate::problems::{sample_collocation, Domain, sample_reference, ProblemSpec, Reference, ReferencePolicy};
use crate::solver::{run_acs, AcsConfig, EigenpairEstimate, Status};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisConfig {
    pub width: usize,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollocationConfig {
    pub n_interior: usize,
    pub reference: ReferencePolicy,
    pub u_ref: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub strands_per_generation: usize,
    pub max_generations: usize,
    pub target_modes: usize,
    pub cluster_rel_tol: f64,
    pub accept_residual_tol: f64,
    /// Normalized overlap with an accepted mode above which a candidate is a duplicate.
    pub ortho_tol: f64,
    /// Re-run a strand once with a fresh reference point if its reference is suspect.
    pub respawn_suspect: bool,
    pub seed: u64,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self {
            strands_per_generation: 16,
            max_generations: 10,
            target_modes: 4,
            cluster_rel_tol: 1e-3,
            accept_residual_tol: 1e-3,
            ortho_tol: 1e-2,
            respawn_suspect: true,
            seed: 0,
        }
    }
}

impl PopulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.strands_per_generation == 0 || self.max_generations == 0 || self.target_modes == 0 {
            return config_err(
                "population.strands_per_generation, max_generations and target_modes must be at least 1",
            );
        }
        if !(self.cluster_rel_tol > 0.0 && self.cluster_rel_tol < 1.0) {
            return config_err(format!(
                "population.cluster_rel_tol must lie in (0, 1), got {}",
                self.cluster_rel_tol
            ));
        }
        for (name, v) in [("accept_residual_tol", self.accept_residual_tol), ("ortho_tol", self.ortho_tol)] {
            if !(v > 0.0) {
                return config_err(format!("population.{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Accepted,
    Duplicate,
    Degenerate,
    HighResidual,
    SuspectReference,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionCounts {
    pub duplicate: usize,
    pub degenerate: usize,
    pub high_residual: usize,
    pub suspect_reference: usize,
    /// Strands re-run with a fresh reference point (not a rejection).
    pub respawned: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AcceptedMode {
    pub estimate: EigenpairEstimate,
    pub generation: usize,
    pub strand: usize,
    pub basis_seed: u64,
    pub collocation_seed: u64,
    pub reference: Reference,
    #[serde(skip)]
    pub basis: Arc<FeatureBasis>,
}

impl AcceptedMode {
    pub fn prior(&self) -> PriorMode {
        PriorMode {
            basis: Arc::clone(&self.basis),
            weights: self.estimate.weights.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StrandSummary {
    pub generation: usize,
    pub strand: usize,
    pub mu0: f64,
    pub mu: f64,
    pub status: Status,
    pub iterations: usize,
    pub final_loss: f64,
    pub relative_residual: f64,
    pub respawned: bool,
    pub outcome: Outcome,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub problem: String,
    /// Ascending in `mu`.
    pub modes: Vec<AcceptedMode>,
    pub rejected: RejectionCounts,
    pub generations_used: usize,
    pub strands: Vec<StrandSummary>,
    pub wall_time_s: f64,
}

impl SpectrumReport {
    pub fn mus(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.estimate.mu).collect()
    }
}

/// Single-linkage clusters of `mus` under `|a − b| ≤ tol · max(|a|, |b|)`.
///
/// Clusters come out ordered by their smallest value; members are indices
/// into `mus`, ordered by value and then index.
pub fn cluster_values(mus: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..mus.len()).collect();
    order.sort_by(|&a, &b| mus[a].total_cmp(&mus[b]).then(a.cmp(&b)));
    let mut parent: Vec<usize> = (0..mus.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (p, &a) in order.iter().enumerate() {
        for &b in &order[p + 1..] {
            if (mus[a] - mus[b]).abs() <= tol * mus[a].abs().max(mus[b].abs()) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; mus.len()];
    for &i in &order {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[slot[root]].push(i);
    }
    clusters
}

pub fn cluster_estimates(estimates: &[EigenpairEstimate], tol: f64) -> Vec<Vec<usize>> {
    let mus: Vec<f64> = estimates.iter().map(|e| e.mu).collect();
    cluster_values(&mus, tol)
}

/// Independent stream seed for `(generation, stream)` under one master seed.
pub fn derive_seed(master: u64, generation: u64, stream: u64) -> u64 {
    splitmix(master ^ splitmix(generation.wrapping_mul(0x1_0000_0001).wrapping_add(stream)))
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_BASIS: u64 = 0;
const STREAM_COLLOCATION: u64 = 1;
const STREAM_MU0: u64 = 2;
const STREAM_REFERENCE: u64 = 1 << 20;
const STREAM_RESPAWN: u64 = 2 << 20;

/// Cells per axis of the midpoint grid used for overlap checks.
pub const OVERLAP_CELLS_2D: usize = 64;
pub const OVERLAP_CELLS_1D: usize = 512;

/// Midpoint quadrature on which mode overlaps are measured. Deterministic, so
/// orthogonal modes are not rejected for Monte-Carlo quadrature noise.
pub fn overlap_grid(domain: &Domain) -> (Mat<f64>, f64) {
    domain.midpoint_grid(if domain.dim() == 1 { OVERLAP_CELLS_1D } else { OVERLAP_CELLS_2D })
}

/// Matrix of normalized overlaps `|<u_i, u_j>| / (|u_i| |u_j|)` between modes.
pub fn overlap_matrix(domain: &Domain, modes: &[AcceptedMode]) -> Result<Vec<Vec<f64>>> {
    let (points, weight) = overlap_grid(domain);
    let values: Vec<Vec<f64>> = modes
        .iter()
        .map(|m| normalized_mode_values(&m.prior(), &points, weight))
        .collect::<Result<_>>()?;
    Ok(values
        .iter()
        .map(|a| values.iter().map(|b| (weight * dot(a, b)).abs()).collect())
        .collect())
}

/// One uniform draw per equal sub-interval of `(lo, hi)`.
pub fn stratified_starts(bounds: (f64, f64), count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = (bounds.1 - bounds.0) / count as f64;
    (0..count)
        .map(|k| bounds.0 + width * (k as f64 + rng.gen::<f64>()))
        .collect()
}

struct Strand {
    index: usize,
    mu0: f64,
    reference: Reference,
    estimate: Option<EigenpairEstimate>,
    respawned: bool,
}

/// Generation loop: run strands, cluster, accept, deflate, repeat.
pub fn run_population(
    spec: &ProblemSpec,
    basis_cfg: &BasisConfig,
    colloc_cfg: &CollocationConfig,
    weights: LossWeights,
    acs: &AcsConfig,
    pop: &PopulationConfig,
) -> Result<SpectrumReport> {
    spec.validate()?;
    acs.validate()?;
    pop.validate()?;
    let start = Instant::now();
    let mut accepted: Vec<AcceptedMode> = Vec::new();
    let mut rejected = RejectionCounts::default();
    let mut strands_out = Vec::new();
    let mut generations_used = 0;
    let (grid, grid_weight) = overlap_grid(&spec.domain);
    let mut accepted_values: Vec<Vec<f64>> = Vec::new();

    for generation in 0..pop.max_generations {
        generations_used = generation + 1;
        let g = generation as u64;
        let basis_seed = derive_seed(pop.seed, g, STREAM_BASIS);
        let colloc_seed = derive_seed(pop.seed, g, STREAM_COLLOCATION);
        let basis = Arc::new(FeatureBasis::new(
            basis_cfg.width,
            spec.dim(),
            basis_cfg.bandwidth,
            basis_seed,
        )?);
        let colloc = sample_collocation(
            spec,
            colloc_cfg.n_interior,
            &colloc_cfg.reference,
            colloc_cfg.u_ref,
            colloc_seed,
        )?;
        let priors: Vec<PriorMode> = accepted.iter().map(AcceptedMode::prior).collect();
        let base = assemble(spec, &basis, &colloc, weights, &priors)?;
        let starts = stratified_starts(spec.search_bounds, pop.strands_per_generation, derive_seed(pop.seed, g, STREAM_MU0));

        let strands: Vec<Strand> = starts
            .par_iter()
            .enumerate()
            .map(|(k, &mu0)| {
                run_strand(spec, &basis, &base, colloc_cfg, acs, pop, g, k, mu0)
            })
            .collect::<Result<_>>()?;

        let mut outcomes = vec![Outcome::Degenerate; strands.len()];
        let mut candidates = Vec::new();
        for s in &strands {
            match &s.estimate {
                None => outcomes[s.index] = Outcome::Degenerate,
                Some(e) if matches!(e.status, Status::Degenerate | Status::Diverged) => {
                    outcomes[s.index] = Outcome::Degenerate
                }
                Some(e) if e.suspect_reference => outcomes[s.index] = Outcome::SuspectReference,
                Some(_) => candidates.push(s.index),
            }
        }
        let cand_mus: Vec<f64> = candidates
            .iter()
            .map(|&i| strands[i].estimate.as_ref().expect("candidate").mu)
            .collect();
        for cluster in cluster_values(&cand_mus, pop.cluster_rel_tol) {
            let members: Vec<usize> = cluster.iter().map(|&c| candidates[c]).collect();
            let rep = *members
                .iter()
                .min_by(|&&a, &&b| {
                    let (ea, eb) = (strands[a].estimate.as_ref().unwrap(), strands[b].estimate.as_ref().unwrap());
                    ea.final_loss().total_cmp(&eb.final_loss()).then(a.cmp(&b))
                })
                .expect("clusters are non-empty");
            for &m in &members {
                outcomes[m] = Outcome::Duplicate;
            }
            let est = strands[rep].estimate.as_ref().unwrap();
            outcomes[rep] = if est.relative_residual > pop.accept_residual_tol {
                Outcome::HighResidual
            } else {
                let u = basis.evaluate_output(&grid, &est.weights)?;
                let norm = (grid_weight * dot(&u, &u)).sqrt();
                let near_mu = accepted.iter().any(|a| {
                    (a.estimate.mu - est.mu).abs() <= pop.cluster_rel_tol * a.estimate.mu.abs().max(est.mu.abs())
                });
                let overlaps = norm > 0.0
                    && accepted_values
                        .iter()
                        .any(|v| (grid_weight * dot(v, &u)).abs() / norm >= pop.ortho_tol);
                if near_mu || overlaps || norm == 0.0 {
                    Outcome::Duplicate
                } else {
                    Outcome::Accepted
                }
            };
            if outcomes[rep] == Outcome::Accepted {
                let mode = AcceptedMode {
                    estimate: est.clone(),
                    generation,
                    strand: rep,
                    basis_seed,
                    collocation_seed: colloc_seed,
                    reference: strands[rep].reference.clone(),
                    basis: Arc::clone(&basis),
                };
                accepted_values.push(normalized_mode_values(&mode.prior(), &grid, grid_weight)?);
                accepted.push(mode);
            }
        }

        for s in &strands {
            let outcome = outcomes[s.index];
            match outcome {
                Outcome::Accepted => {}
                Outcome::Duplicate => rejected.duplicate += 1,
                Outcome::Degenerate => rejected.degenerate += 1,
                Outcome::HighResidual => rejected.high_residual += 1,
                Outcome::SuspectReference => rejected.suspect_reference += 1,
            }
            rejected.respawned += s.respawned as usize;
            let e = s.estimate.as_ref();
            strands_out.push(StrandSummary {
                generation,
                strand: s.index,
                mu0: s.mu0,
                mu: e.map_or(f64::NAN, |e| e.mu),
                status: e.map_or(Status::Degenerate, |e| e.status),
                iterations: e.map_or(0, |e| e.iterations),
                final_loss: e.map_or(f64::NAN, |e| e.final_loss()),
                relative_residual: e.map_or(f64::NAN, |e| e.relative_residual),
                respawned: s.respawned,
                outcome,
                wall_time_s: e.map_or(0.0, |e| e.wall_time_s),
            });
        }
        log::info!(
            "generation {generation}: {} strands, {} modes accepted so far",
            strands.len(),
            accepted.len()
        );
        if accepted.len() >= pop.target_modes {
            break;
        }
    }

    accepted.sort_by(|a, b| a.estimate.mu.total_cmp(&b.estimate.mu));
    Ok(SpectrumReport {
        problem: spec.name.clone(),
        modes: accepted,
        rejected,
        generations_used,
        strands: strands_out,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_strand(
    spec: &ProblemSpec,
    basis: &FeatureBasis,
    base: &LossSystem,
    colloc_cfg: &CollocationConfig,
    acs: &AcsConfig,
    pop: &PopulationConfig,
    generation: u64,
    index: usize,
    mu0: f64,
) -> Result<Strand> {
    let attempt = |stream: u64| -> Result<(Reference, Option<EigenpairEstimate>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(pop.seed, generation, stream + index as u64));
        let reference = sample_reference(&spec.domain, &colloc_cfg.reference, colloc_cfg.u_ref, &mut rng)?;
        let sys = base.with_reference(basis, &reference)?;
        match run_acs(&sys, mu0, acs) {
            Ok(e) => Ok((reference, Some(e))),
            Err(Error::Numerical(msg)) => {
                log::debug!("strand {index} failed: {msg}");
                Ok((reference, None))
            }
            Err(e) => Err(e),
        }
    };
    let (mut reference, mut estimate) = attempt(STREAM_REFERENCE)?;
    let mut respawned = false;
    let suspect = estimate
        .as_ref()
        .is_some_and(|e| e.suspect_reference && e.status != Status::Degenerate);
    if suspect && pop.respawn_suspect && matches!(colloc_cfg.reference, ReferencePolicy::Random { .. }) {
        (reference, estimate) = attempt(STREAM_RESPAWN)?;
        respawned = true;
    }
    Ok(Strand {
        index,
        mu0,
        reference,
        estimate,
        respawned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clustering_examples() {
        assert_eq!(cluster_values(&[9.8696, 9.8697, 39.478], 1e-3).len(), 2);
        assert_eq!(cluster_values(&[3.0; 5], 1e-3).len(), 1);
        assert_eq!(cluster_values(&[1.0, 1.0009, 1.0018], 1e-3).len(), 1);
        assert_eq!(cluster_values(&[1.0018, 1.0, 1.0009], 1e-3), vec![vec![1, 2, 0]]);
    }

    #[test]
    fn stratified_covers_each_stratum() {
        let s = stratified_starts((10.0, 150.0), 16, 9);
        let w = 140.0 / 16.0;
        for (k, v) in s.iter().enumerate() {
            assert!(*v >= 10.0 + w * k as f64 && *v < 10.0 + w * (k + 1) as f64);
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, 0, 0);
        assert_ne!(a, derive_seed(1, 0, 1));
        assert_ne!(a, derive_seed(1, 1, 0));
        assert_ne!(a, derive_seed(2, 0, 0));
        assert_eq!(a, derive_seed(1, 0, 0));
    }
}
