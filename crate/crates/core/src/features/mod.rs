//! Preprocessing pipeline defining the working feature space: standardize,
//! optional PCA, optional random Fourier feature lift.

mod auto;
mod pca;
mod pipeline;
mod rff;
mod standardize;

pub use auto::{auto_candidates, auto_select_lift, CandidateScore, LiftSelection, ProbeConfig, AUTO_GAMMA_GRID, PROBE_RFF_DIM};
pub use pca::PcaMap;
pub use pipeline::{FeaturePipeline, PipelineConfig, PipelineScratch, RffConfig};
pub use rff::RffMap;
pub use standardize::Standardizer;
