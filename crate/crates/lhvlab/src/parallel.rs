//! Rayon driver for `lhv-core` sampling kernels.
//!
//! Chunks run in parallel and are merged in ascending chunk order, so results
//! are bit-identical to `lhv_core::montecarlo::run_serial`.

use lhv_core::montecarlo::{
    reduce_chunks, run_chunk, CellStats, McConfig, McEstimate, SampleKernel,
};
use lhv_core::povm::{self, RankOnePovm};
use lhv_core::projective::{self, SelfCorrelationKernel};
use lhv_core::qcore::{BipartitePureState, ProjectiveMeasurement};
use lhv_core::{nielsen, Result};
use rayon::prelude::*;

pub fn run_parallel<K>(kernel: &K, cfg: &McConfig) -> McEstimate
where
    K: SampleKernel + Sync + ?Sized,
{
    let chunks: Vec<CellStats> = (0..cfg.chunk_count())
        .into_par_iter()
        .map(|c| run_chunk(kernel, cfg, c))
        .collect();
    reduce_chunks(kernel.shape(), chunks)
}

pub fn mc_joint(
    q: &ProjectiveMeasurement,
    r: &ProjectiveMeasurement,
    cfg: &McConfig,
) -> Result<McEstimate> {
    Ok(run_parallel(&projective::joint_kernel(q, r)?, cfg))
}

pub fn mc_selfcorr(
    r: &ProjectiveMeasurement,
    outcome: usize,
    cfg: &McConfig,
) -> Result<McEstimate> {
    Ok(run_parallel(&SelfCorrelationKernel::new(r, outcome)?, cfg))
}

pub fn mc_joint_extended(
    psi: &BipartitePureState,
    q: &ProjectiveMeasurement,
    r: &ProjectiveMeasurement,
    cfg: &McConfig,
) -> Result<McEstimate> {
    Ok(run_parallel(&nielsen::extended_kernel(psi, q, r)?, cfg))
}

pub fn mc_joint_povm(m: &RankOnePovm, n: &RankOnePovm, cfg: &McConfig) -> Result<McEstimate> {
    Ok(run_parallel(&povm::joint_kernel(m, n)?, cfg))
}

pub fn mc_joint_extended_povm(
    psi: &BipartitePureState,
    m: &RankOnePovm,
    n: &RankOnePovm,
    cfg: &McConfig,
) -> Result<McEstimate> {
    Ok(run_parallel(&povm::extended_kernel(psi, m, n)?, cfg))
}
