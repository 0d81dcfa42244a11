//! Parallel Monte Carlo driver.
//!
//! Every path draws from its own `(seed, path_index)` stream and results are
//! collected in index order, so the output is identical to the serial
//! [`ctlseq_core::simulate::run_paths`] for any thread count.

use ctlseq_core::simulate::simulate_path;
use ctlseq_core::{PathOutcome, Result, SimConfig};
use rayon::prelude::*;

pub fn run_paths_parallel(cfg: &SimConfig) -> Result<Vec<PathOutcome>> {
    cfg.validate()?;
    (0..cfg.n_paths).into_par_iter().map(|i| simulate_path(cfg, i)).collect()
}
