use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::crf::TrainConfig;
use crate::econ::{CovFlavor, MlogitConfig, PanelConfig};
use crate::features::{feature_set, Family, FeatureConfig};
use crate::lingdata::LabelClass;
use crate::mwe::MwefIdfConfig;
use crate::textprep::ExtractConfig;

/// Input and output locations. Relative paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// Directory of `<company>_<year>.html` filings.
    pub corpus: Option<PathBuf>,
    /// Word lists for the candidate-sentence filter.
    pub lexicons: Vec<PathBuf>,
    /// `token<TAB>lemma` map used by the candidate filter.
    pub lemma_map: Option<PathBuf>,
    /// Annotated records for training and evaluation.
    pub records: Option<PathBuf>,
    /// Records to tag; defaults to the sentences written by `extract`.
    pub tag_input: Option<PathBuf>,
    pub subjectivity: Option<PathBuf>,
    pub verb_clusters: Option<PathBuf>,
    pub frames: Option<PathBuf>,
    pub head_rules: Option<PathBuf>,
    /// Defaults to `<out>/model.json`.
    pub model: Option<PathBuf>,
    pub earnings: Option<PathBuf>,
    pub allow_list: Option<PathBuf>,
    /// `expression<TAB>polarity` annotations for the final report.
    pub polarity: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSelection {
    /// Named set `A` to `W`; ignored when `families` is non-empty.
    pub set: Option<String>,
    pub families: Vec<Family>,
    /// Relabel targets as `O` before training and evaluation. Set `W`
    /// implies it.
    pub drop_target: bool,
    pub srl_fallback: bool,
    pub strict_layers: bool,
}

impl Default for FeatureSelection {
    fn default() -> Self {
        FeatureSelection {
            set: Some("W".into()),
            families: Vec::new(),
            drop_target: false,
            srl_fallback: true,
            strict_layers: false,
        }
    }
}

impl FeatureSelection {
    pub fn resolve(&self) -> Result<(FeatureConfig, bool), PipelineError> {
        let (families, drop) = if !self.families.is_empty() {
            (self.families.clone(), self.drop_target)
        } else {
            let name = self.set.as_deref().unwrap_or("W");
            let def = feature_set(name)?;
            (def.families, def.drop_target || self.drop_target)
        };
        let mut cfg = FeatureConfig::new(families);
        cfg.srl_fallback = self.srl_fallback;
        cfg.strict_layers = self.strict_layers;
        Ok((cfg, drop))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub tau: f64,
    pub sig_level: f64,
    pub covariance: CovFlavor,
    pub controls: Vec<String>,
    pub fill_lag_sue: bool,
    /// Classes harvested as candidate expressions.
    pub mwe_classes: Vec<LabelClass>,
    /// Without an allow-list, the most frequent expressions up to this many.
    pub max_expressions: usize,
    /// Expressions seen in fewer documents are not selected automatically.
    pub min_doc_freq: usize,
    /// Refit without an expression whose column separates the outcomes.
    pub drop_separating: bool,
    /// Opinion holders matched against agent spans.
    pub agent_terms: Vec<String>,
    pub mlogit: MlogitConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            tau: 0.5,
            sig_level: 0.05,
            covariance: CovFlavor::Robust,
            controls: PanelConfig::default().controls,
            fill_lag_sue: true,
            mwe_classes: vec![LabelClass::ExpressiveSubjectivity, LabelClass::DirectSubjective],
            max_expressions: 10,
            min_doc_freq: 2,
            drop_separating: true,
            agent_terms: vec!["we".into(), "company".into(), "management".into(), "auditor".into()],
            mlogit: MlogitConfig::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn panel(&self) -> PanelConfig {
        PanelConfig {
            tau: self.tau,
            controls: self.controls.clone(),
            fill_lag_sue: self.fill_lag_sue,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Share of annotated records used for training; the rest is held out.
    pub train_fraction: f64,
    pub paths: Paths,
    pub extract: ExtractConfig,
    pub features: FeatureSelection,
    pub train: TrainConfig,
    pub mwef_idf: MwefIdfConfig,
    pub analysis: AnalysisConfig,
    /// Restrict evaluation to sentences with an explicit expression.
    pub explicit: bool,
    #[serde(skip)]
    source_digest: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            train_fraction: 0.7,
            paths: Paths {
                out: PathBuf::from("out"),
                ..Default::default()
            },
            extract: ExtractConfig::default(),
            features: FeatureSelection::default(),
            train: TrainConfig::default(),
            mwef_idf: MwefIdfConfig::default(),
            analysis: AnalysisConfig::default(),
            explicit: false,
            source_digest: None,
        }
    }
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.source_digest = Some(hex::encode(Sha256::digest(text.as_bytes())));
        cfg.rebase(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    /// Resolves every relative path against `base`.
    pub fn rebase(&mut self, base: &Path) {
        let p = &mut self.paths;
        for opt in [
            &mut p.corpus,
            &mut p.lemma_map,
            &mut p.records,
            &mut p.tag_input,
            &mut p.subjectivity,
            &mut p.verb_clusters,
            &mut p.frames,
            &mut p.head_rules,
            &mut p.model,
            &mut p.earnings,
            &mut p.allow_list,
            &mut p.polarity,
        ]
        .into_iter()
        .flatten()
        {
            rebase(base, opt);
        }
        for l in &mut p.lexicons {
            rebase(base, l);
        }
        rebase(base, &mut p.out);
    }

    /// Digest of the config file text, or of the serialized config when it
    /// was built in code.
    pub fn digest(&self) -> String {
        match &self.source_digest {
            Some(d) => d.clone(),
            None => {
                let text = toml::to_string(self).unwrap_or_default();
                hex::encode(Sha256::digest(text.as_bytes()))
            }
        }
    }

    /// Forget the file digest, e.g. after command-line overrides.
    pub fn mark_modified(&mut self) {
        self.source_digest = None;
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.analysis.tau > 0.0 && self.analysis.tau.is_finite()) {
            return Err(PipelineError::Config(format!("tau must be positive, got {}", self.analysis.tau)));
        }
        if !(self.analysis.sig_level > 0.0 && self.analysis.sig_level < 1.0) {
            return Err(PipelineError::Config("sig_level must lie in (0, 1)".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(PipelineError::Config("train_fraction must lie in (0, 1]".into()));
        }
        self.train.validate()?;
        self.analysis.panel().validate()?;
        self.features.resolve()?;
        let p = &self.paths;
        for path in [
            &p.corpus,
            &p.lemma_map,
            &p.records,
            &p.subjectivity,
            &p.verb_clusters,
            &p.frames,
            &p.head_rules,
            &p.earnings,
            &p.allow_list,
            &p.polarity,
        ]
        .into_iter()
        .flatten()
        .chain(&p.lexicons)
        {
            if !path.exists() {
                return Err(PipelineError::MissingInput(path.clone()));
            }
        }
        Ok(())
    }

    pub fn model_path(&self) -> PathBuf {
        self.paths.model.clone().unwrap_or_else(|| self.paths.out.join("model.json"))
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.paths.out.join(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_defaults_and_paths() {
        let text = r#"
seed = 3
[paths]
corpus = "filings"
lexicons = ["lex.txt", "/abs/other.txt"]
out = "run"
[features]
families = ["f1", "f3"]
[analysis]
tau = 1.0
controls = ["bm", "size"]
"#;
        let cfg = PipelineConfig::from_toml(text, Path::new("/data")).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.paths.corpus.as_deref(), Some(Path::new("/data/filings")));
        assert_eq!(cfg.paths.lexicons[1], Path::new("/abs/other.txt"));
        assert_eq!(cfg.model_path(), Path::new("/data/run/model.json"));
        assert_eq!(cfg.train.max_iterations, 500);
        assert_eq!(cfg.analysis.sig_level, 0.05);
        let (fc, drop) = cfg.features.resolve().unwrap();
        assert_eq!(fc.families.len(), 2);
        assert!(!drop);
        assert_eq!(cfg.digest().len(), 64);
        assert_eq!(cfg.digest(), PipelineConfig::from_toml(text, Path::new("/x")).unwrap().digest());
    }

    #[test]
    fn validation() {
        let mut cfg = PipelineConfig::default();
        assert!(FeatureSelection::default().resolve().unwrap().1);
        cfg.analysis.tau = 0.0;
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
        cfg.analysis.tau = 0.5;
        cfg.paths.earnings = Some("/definitely/not/here.csv".into());
        assert!(matches!(cfg.validate(), Err(PipelineError::MissingInput(_))));
        assert!(PipelineConfig::from_toml("seed = \"x\"", Path::new(".")).is_err());
    }
}
