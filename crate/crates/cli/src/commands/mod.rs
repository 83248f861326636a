mod bench;
mod calibrate;
mod evaluate;
mod fit;
mod generate;
mod inspect;
mod predict;

use std::fs;
use std::path::Path;

use anyhow::Context;
use gmc::persist::{load_model, ModelFile};
use gmc::{Dataset, GmcModel};

pub use bench::bench;
pub use calibrate::{calibrate, CalibrationReport};
pub use evaluate::{evaluate, evaluation, Evaluation};
pub use fit::{fit, FitReport};
pub use generate::generate;
pub use inspect::{inspect, Manifest, ManifestEntry};
pub use predict::predict;

use crate::args::{DataArgs, Part};
use crate::data;

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Loads a model file, optionally replacing the stored pooling α.
pub(crate) fn open_model(path: &Path, alpha: Option<f64>) -> anyhow::Result<(ModelFile, GmcModel)> {
    let file = load_model(path).with_context(|| format!("loading model {}", path.display()))?;
    let mut model = file.model()?;
    if let Some(a) = alpha {
        model = model.with_alpha(a).context("--alpha")?;
    }
    Ok((file, model))
}

/// Explicit seed, else the model's training seed, else 0.
pub(crate) fn data_seed(explicit: Option<u64>, file: &ModelFile) -> u64 {
    explicit.or(file.metadata.seed).unwrap_or(0)
}

/// Labelled rows of the requested split, indexed in the model's class order.
pub(crate) fn labelled_data(file: &ModelFile, args: &DataArgs, part: Part, seed: u64) -> anyhow::Result<Dataset> {
    let ds = data::select(data::load(args, seed)?, part, seed)?;
    if ds.dim() != file.pipeline.input_dim() {
        anyhow::bail!(
            "data has {} features but the model expects {}",
            ds.dim(),
            file.pipeline.input_dim()
        );
    }
    data::align_labels(ds, &file.class_names)
}

pub(crate) fn csv_text(write: impl FnOnce(&mut Vec<u8>) -> gmc::Result<()>) -> anyhow::Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf)?)
}
