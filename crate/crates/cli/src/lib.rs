//! Command-line front end for the `gmc` library: dataset generation,
//! fitting, prediction, evaluation, calibration, benchmarking and
//! interpretability bundles.

pub mod args;
pub mod commands;
pub mod data;
pub mod svg;

pub use args::{Cli, Command};

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Fit(a) => commands::fit(a).map(drop),
        Command::Predict(a) => commands::predict(a),
        Command::Evaluate(a) => commands::evaluate(a).map(drop),
        Command::Calibrate(a) => commands::calibrate(a).map(drop),
        Command::Bench(a) => commands::bench(a).map(drop),
        Command::Inspect(a) => commands::inspect(a).map(drop),
    }
}
