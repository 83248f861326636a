//! Accuracy, macro-F1, expected calibration error and temperature scaling.

mod metrics;
mod temperature;

pub use metrics::{
    accuracy, ece, ece_from_bins, macro_f1, reliability_data, write_reliability_csv, EceReport, ReliabilityBin,
    DEFAULT_BINS,
};
pub use temperature::{apply_temperature, fit_temperature, temperature_nll, TemperatureFit};
