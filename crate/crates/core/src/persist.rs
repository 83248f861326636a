//! Versioned JSON model files. Floats are written with round-trip
//! precision, so a saved model reloads bit-identical.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GmcError, Result};
use crate::features::FeaturePipeline;
use crate::model::{GmcModel, Planes};
use crate::recipe::RecipeConfig;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPlanes {
    /// One weight vector per plane.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

/// Provenance of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainingMetadata {
    pub recipe: Option<RecipeConfig>,
    pub seed: Option<u64>,
    /// SHA-256 of the training data.
    pub dataset_fingerprint: Option<String>,
    pub dataset: Option<String>,
    pub init_strategy: Option<String>,
    pub lift: Option<String>,
    pub best_epoch: Option<usize>,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub pipeline: FeaturePipeline,
    pub dim: usize,
    pub classes: Vec<ClassPlanes>,
    pub alpha: f64,
    pub temperature: Option<f64>,
    pub class_names: Vec<String>,
    pub feature_names: Option<Vec<String>>,
    pub metadata: TrainingMetadata,
}

impl ModelFile {
    pub fn new(model: &GmcModel, temperature: Option<f64>, feature_names: Option<Vec<String>>, metadata: TrainingMetadata) -> Self {
        let p = &model.planes;
        let classes = (0..p.class_count())
            .map(|c| ClassPlanes {
                weights: p.range(c).map(|k| p.weight(k).to_vec()).collect(),
                biases: p.range(c).map(|k| p.bias(k)).collect(),
            })
            .collect();
        Self {
            format_version: FORMAT_VERSION,
            pipeline: model.pipeline.clone(),
            dim: p.dim(),
            classes,
            alpha: model.alpha,
            temperature,
            class_names: model.class_names.clone(),
            feature_names,
            metadata,
        }
    }

    pub fn model(&self) -> Result<GmcModel> {
        let counts: Vec<usize> = self.classes.iter().map(|c| c.weights.len()).collect();
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (c, cls) in self.classes.iter().enumerate() {
            if cls.biases.len() != cls.weights.len() {
                return Err(GmcError::ModelFormat {
                    path: format!("classes[{c}].biases"),
                    message: format!("{} biases for {} planes", cls.biases.len(), cls.weights.len()),
                });
            }
            for (m, w) in cls.weights.iter().enumerate() {
                if w.len() != self.dim {
                    return Err(GmcError::ModelFormat {
                        path: format!("classes[{c}].weights[{m}]"),
                        message: format!("expected {} entries, found {}", self.dim, w.len()),
                    });
                }
                weights.extend_from_slice(w);
            }
            biases.extend_from_slice(&cls.biases);
        }
        let planes = Planes::from_parts(self.dim, &counts, &weights, &biases)?;
        GmcModel::new(self.pipeline.clone(), planes, self.alpha, self.class_names.clone())
    }

    fn ensure_finite(&self) -> Result<()> {
        let pipeline = &self.pipeline;
        let mut arrays: Vec<(&str, Vec<f64>)> = vec![
            ("pipeline.standardizer.mean", pipeline.standardizer.mean.to_vec()),
            ("pipeline.standardizer.scale", pipeline.standardizer.scale.to_vec()),
        ];
        if let Some(pca) = &pipeline.pca {
            arrays.push(("pipeline.pca.components", pca.components.iter().copied().collect()));
            arrays.push(("pipeline.pca.center", pca.center.to_vec()));
        }
        if let Some(rff) = &pipeline.rff {
            arrays.push(("pipeline.rff.omega", rff.omega.iter().copied().collect()));
            arrays.push(("pipeline.rff.phases", rff.phases.to_vec()));
            arrays.push(("pipeline.rff.gamma", vec![rff.gamma]));
        }
        for (c, cls) in self.classes.iter().enumerate() {
            if cls.weights.iter().flatten().chain(&cls.biases).any(|v| !v.is_finite()) {
                return Err(GmcError::NonFinite(format!("classes[{c}] parameters")));
            }
        }
        arrays.push(("alpha", vec![self.alpha]));
        if let Some(t) = self.temperature {
            arrays.push(("temperature", vec![t]));
        }
        for (name, values) in arrays {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(GmcError::NonFinite(name.into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.ensure_finite()?;
        serde_json::to_string_pretty(self).map_err(|e| GmcError::ModelFormat {
            path: String::new(),
            message: e.to_string(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| GmcError::ModelFormat {
            path: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => {
                return Err(GmcError::VersionMismatch {
                    found: u32::try_from(v).unwrap_or(u32::MAX),
                    expected: FORMAT_VERSION,
                })
            }
            None => {
                return Err(GmcError::ModelFormat {
                    path: "format_version".into(),
                    message: "missing or not an unsigned integer".into(),
                })
            }
        }
        let file: Self = serde_path_to_error::deserialize(value).map_err(|e| GmcError::ModelFormat {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        file.ensure_finite()?;
        Ok(file)
    }
}

pub fn save_model(file: &ModelFile, path: &Path) -> Result<()> {
    fs::write(path, file.to_json()?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    ModelFile::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::PipelineConfig;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_model(seed: u64) -> GmcModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = Array2::from_shape_fn((20, 3), |_| rng.random_range(-3.0..3.0));
        let pipeline = FeaturePipeline::fit(
            raw.view(),
            &PipelineConfig {
                pca_variance: Some(0.9),
                ..PipelineConfig::with_rff(8, 0.7, seed)
            },
        )
        .unwrap();
        let mut planes = Planes::zeros(pipeline.output_dim(), &[2, 3]).unwrap();
        for p in planes.params_mut() {
            *p = rng.random_range(-1.0..1.0) / 3.0;
        }
        GmcModel::new(pipeline, planes, 5.3, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let model = random_model(4);
        let file = ModelFile::new(&model, Some(1.234_567_890_123), None, TrainingMetadata::default());
        let back = ModelFile::from_json(&file.to_json().unwrap()).unwrap();
        assert_eq!(back, file);
        let reloaded = back.model().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((1000, 3), |_| rng.random_range(-4.0..4.0));
        let a = model.predict_proba(x.view()).unwrap();
        let b = reloaded.predict_proba(x.view()).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(u, v)| u.to_bits() == v.to_bits()));
    }

    #[test]
    fn corrupt_field_is_named() {
        let file = ModelFile::new(&random_model(1), None, None, TrainingMetadata::default());
        let mut value: serde_json::Value = serde_json::from_str(&file.to_json().unwrap()).unwrap();
        value["classes"][1]["biases"][2] = serde_json::json!("oops");
        let err = ModelFile::from_json(&value.to_string()).unwrap_err();
        match err {
            GmcError::ModelFormat { path, .. } => assert_eq!(path, "classes[1].biases[2]"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(ModelFile::from_json("{ not json"), Err(GmcError::ModelFormat { .. })));
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let file = ModelFile::new(&random_model(2), None, None, TrainingMetadata::default());
        let text = file.to_json().unwrap().replacen("\"format_version\": 1", "\"format_version\": 2", 1);
        assert!(matches!(
            ModelFile::from_json(&text),
            Err(GmcError::VersionMismatch { found: 2, expected: 1 })
        ));
    }

    #[test]
    fn non_finite_parameters_are_not_saved() {
        let mut file = ModelFile::new(&random_model(3), None, None, TrainingMetadata::default());
        file.classes[0].weights[0][0] = f64::NAN;
        assert!(matches!(file.to_json(), Err(GmcError::NonFinite(_))));
    }

    #[test]
    fn shape_errors_name_the_plane() {
        let mut file = ModelFile::new(&random_model(5), None, None, TrainingMetadata::default());
        file.classes[1].weights[0].pop();
        match file.model() {
            Err(GmcError::ModelFormat { path, .. }) => assert_eq!(path, "classes[1].weights[0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn file_io() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let file = ModelFile::new(&random_model(6), None, Some(vec!["f0".into(), "f1".into(), "f2".into()]), TrainingMetadata::default());
        save_model(&file, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), file);
    }
}
