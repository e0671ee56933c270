//! Fixtures shared by the benchmarks.

use midlab_core::sim::{apply_missingness, generate_complete};
use midlab_core::{rng_stream, ExperimentCell, IncompleteDataset, MissingPattern};

/// A simulated dataset of `n` rows with MCAR deletion at rate `p`.
pub fn simulated(n: usize, p: f64, seed: u64) -> IncompleteDataset {
    let cell =
        ExperimentCell { n, rho12: 0.5, r2: 0.5, p, pattern: MissingPattern::Mcar, m: 5, rho_yz: None, d: 1, seed };
    let (complete, _) = generate_complete(&cell, &mut rng_stream(seed, 0, 0, 0));
    apply_missingness(&complete, MissingPattern::Mcar, p, &mut rng_stream(seed, 0, 0, 1)).expect("valid rate")
}
