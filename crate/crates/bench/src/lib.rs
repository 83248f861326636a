//! Shared fixtures for the criterion benchmarks under `benches/`.

use gmc::datasets::SyntheticKind;
use gmc::features::{FeaturePipeline, PipelineConfig, RffConfig};
use gmc::{Dataset, Result};
use ndarray::Array2;

/// Moons data with a fitted RFF pipeline and its lifted features.
pub struct LiftedMoons {
    pub data: Dataset,
    pub pipeline: FeaturePipeline,
    pub phi: Array2<f64>,
}

/// `n` moons points lifted by `frequencies` random Fourier pairs
/// (feature width `2·frequencies`) at γ = 1.
pub fn lifted_moons(n: usize, frequencies: usize, seed: u64) -> Result<LiftedMoons> {
    let data = SyntheticKind::Moons.generate(n, seed)?;
    let cfg = PipelineConfig {
        rff: Some(RffConfig {
            dim: frequencies,
            gamma: 1.0,
        }),
        seed,
        ..PipelineConfig::linear()
    };
    let pipeline = FeaturePipeline::fit(data.features(), &cfg)?;
    let phi = pipeline.apply(data.features())?;
    Ok(LiftedMoons { data, pipeline, phi })
}

/// Deterministic dense input of width `dim`.
pub fn probe_input(dim: usize) -> Vec<f64> {
    (0..dim).map(|j| (j as f64 * 0.37).sin()).collect()
}
