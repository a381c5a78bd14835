//! Fixtures shared by the criterion benchmarks.

use eigenacs_core::problems::{catalog, sample_collocation, ReferencePolicy};
use eigenacs_core::{assemble, FeatureBasis, LossSystem, LossWeights, ProblemName};

/// Loss system for a catalog problem at its recommended bandwidth.
pub fn system(name: ProblemName, width: usize, n_interior: usize, seed: u64) -> LossSystem {
    let spec = catalog(name.as_str()).expect("catalog entry");
    let basis = FeatureBasis::new(width, spec.dim(), name.recommended().bandwidth, seed).expect("basis");
    let colloc = sample_collocation(&spec, n_interior, &ReferencePolicy::default(), 1.0, seed + 1).expect("collocation");
    assemble(&spec, &basis, &colloc, LossWeights::default(), &[]).expect("assembly")
}
