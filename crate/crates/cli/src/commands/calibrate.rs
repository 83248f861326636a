use gmc::calibration::fit_temperature;
use gmc::persist::save_model;
use serde::Serialize;

use super::{data_seed, labelled_data, open_model};
use crate::args::CalibrateArgs;

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub temperature: f64,
    pub nll_before: f64,
    pub nll_after: f64,
    pub ece_before: f64,
    pub ece_after: f64,
    pub degenerate: bool,
}

pub fn calibrate(args: &CalibrateArgs) -> anyhow::Result<CalibrationReport> {
    let (mut file, model) = open_model(&args.model, None)?;
    let data = labelled_data(&file, &args.data, args.split, data_seed(args.seed, &file))?;
    let fit = fit_temperature(model.class_scores(data.features())?.view(), data.labels())?;
    file.temperature = Some(fit.temperature);
    let out = args.out.as_ref().unwrap_or(&args.model);
    save_model(&file, out)?;
    println!(
        "temperature {:.4} on {} {} samples: NLL {:.5} -> {:.5}, ECE {:.4} -> {:.4}",
        fit.temperature,
        data.len(),
        args.split.name(),
        fit.val_nll_before,
        fit.val_nll_after,
        fit.ece_before,
        fit.ece_after
    );
    if fit.degenerate {
        eprintln!("warning: class scores are constant per row; kept T = 1");
    }
    println!("wrote {}", out.display());
    Ok(CalibrationReport {
        temperature: fit.temperature,
        nll_before: fit.val_nll_before,
        nll_after: fit.val_nll_after,
        ece_before: fit.ece_before,
        ece_after: fit.ece_after,
        degenerate: fit.degenerate,
    })
}
