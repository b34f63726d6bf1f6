use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{CrfModel, Header, ObsKey};
use super::template::LabelContext;
use super::CrfError;

pub const MODEL_FORMAT: &str = "finmwe-crf";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize)]
struct FileOut<'a> {
    format: &'static str,
    version: u32,
    header: Header,
    observations: Vec<(LabelContext, &'a str)>,
    /// `[name, value]` pairs in weight order.
    weights: Vec<(String, f64)>,
}

#[derive(Deserialize)]
struct Probe {
    format: Option<String>,
    version: Option<u64>,
}

#[derive(Deserialize)]
struct FileIn {
    header: Header,
    observations: Vec<(LabelContext, String)>,
    weights: Vec<(String, f64)>,
}

pub fn model_to_string(model: &CrfModel) -> Result<String, CrfError> {
    if !model.gaussian_variance.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
        return Err(CrfError::InvalidConfig("cannot save non-finite parameters".into()));
    }
    let out = FileOut {
        format: MODEL_FORMAT,
        version: MODEL_VERSION,
        header: model.header(),
        observations: model.alphabet().keys().map(|k| (k.context, k.text.as_str())).collect(),
        weights: model.named_weights(),
    };
    let mut s = serde_json::to_string_pretty(&out).map_err(|e| CrfError::CorruptFile(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_str(text: &str) -> Result<CrfModel, CrfError> {
    let probe: Probe = serde_json::from_str(text).map_err(|e| CrfError::CorruptFile(e.to_string()))?;
    if probe.format.as_deref() != Some(MODEL_FORMAT) {
        return Err(CrfError::CorruptFile("not a CRF model file".into()));
    }
    let version = probe
        .version
        .ok_or_else(|| CrfError::CorruptFile("missing version".into()))?;
    if version != u64::from(MODEL_VERSION) {
        return Err(CrfError::VersionMismatch {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let file: FileIn = serde_json::from_str(text).map_err(|e| CrfError::CorruptFile(e.to_string()))?;
    let observations = file
        .observations
        .into_iter()
        .map(|(context, text)| ObsKey { context, text })
        .collect();
    CrfModel::from_parts(file.header, observations, &file.weights)
}

pub fn save_model(model: &CrfModel, path: impl AsRef<Path>) -> Result<(), CrfError> {
    fs::write(path, model_to_string(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CrfModel, CrfError> {
    model_from_str(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::{train, viterbi, FeatureTemplate, TemplateSet, TrainConfig};
    use crate::features::{AttributeMatrix, Family};

    fn toy() -> (CrfModel, AttributeMatrix) {
        let mut m = AttributeMatrix::new([Family::F1].into_iter().collect(), 3);
        for (i, t) in ["we", "said", "so"].iter().enumerate() {
            m.push(i, "f1", *t);
        }
        let set = TemplateSet {
            templates: vec![FeatureTemplate::unigram("f1", 0), FeatureTemplate::unigram("f1", -1)],
            ..Default::default()
        };
        let data = vec![(m.clone(), vec!["B-agent", "B-direct-subjective", "O"])];
        let cfg = TrainConfig {
            order: 2,
            ..Default::default()
        };
        (train(&data, Some(set), &cfg).unwrap(), m)
    }

    #[test]
    fn round_trip_decodes_identically() {
        let (model, m) = toy();
        let text = model_to_string(&model).unwrap();
        let back = model_from_str(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(
            viterbi(&back, &back.compile(&m).unwrap()),
            viterbi(&model, &model.compile(&m).unwrap())
        );
        assert_eq!(model_to_string(&back).unwrap(), text);
    }

    #[test]
    fn truncated_and_future_files() {
        let (model, _) = toy();
        let text = model_to_string(&model).unwrap();
        assert!(matches!(model_from_str(&text[..text.len() / 2]), Err(CrfError::CorruptFile(_))));
        let future = text.replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(
            model_from_str(&future),
            Err(CrfError::VersionMismatch { found: 2, .. })
        ));
    }
}
