use std::collections::HashMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::template::{instantiate, LabelContext, Observations, TemplateSet};
use super::CrfError;
use crate::features::{AttributeMatrix, FeatureConfig};

/// Why training stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    GradientTolerance,
    NoProgress,
    Untrained,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub objective: f64,
    pub sequences: usize,
    pub seed: u64,
}

impl Default for TrainMeta {
    fn default() -> Self {
        TrainMeta {
            iterations: 0,
            stop_reason: StopReason::Untrained,
            objective: 0.0,
            sequences: 0,
            seed: 0,
        }
    }
}

/// An observation string together with the labels it is paired with.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObsKey {
    pub context: LabelContext,
    pub text: String,
}

/// A position's observations resolved to weight-block offsets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompiledSeq {
    /// Base offsets of current-label blocks (`L` weights each).
    pub unigram: Vec<Vec<usize>>,
    /// Base offsets of transition blocks (`(L+1)·L` weights each).
    pub edge: Vec<Vec<usize>>,
}

impl CompiledSeq {
    pub fn len(&self) -> usize {
        self.unigram.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unigram.is_empty()
    }
}

/// Linear-chain CRF parameters.
///
/// Weights are laid out as the observation blocks in alphabet order, then the
/// `(L+1)·L` label-bigram block (row `L` is the start state), then for order 2
/// the `(L+1)·L·L` label-trigram block.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    labels: Vec<String>,
    label_index: HashMap<String, usize>,
    alphabet: IndexMap<ObsKey, usize>,
    obs_len: usize,
    pub weights: Vec<f64>,
    order: usize,
    pub gaussian_variance: f64,
    pub templates: TemplateSet,
    pub feature_config: Option<FeatureConfig>,
    pub meta: TrainMeta,
}

impl CrfModel {
    /// A zero-weight model over the given label and observation alphabets.
    pub fn new(
        labels: Vec<String>,
        observations: impl IntoIterator<Item = ObsKey>,
        order: usize,
        gaussian_variance: f64,
        templates: TemplateSet,
    ) -> Result<Self, CrfError> {
        if !(1..=2).contains(&order) {
            return Err(CrfError::InvalidConfig(format!("order {order} is not 1 or 2")));
        }
        if labels.is_empty() {
            return Err(CrfError::InvalidConfig("empty label alphabet".into()));
        }
        if !(gaussian_variance > 0.0) {
            return Err(CrfError::InvalidConfig("gaussian variance must be positive".into()));
        }
        let l = labels.len();
        let label_index: HashMap<String, usize> =
            labels.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        if label_index.len() != l {
            return Err(CrfError::InvalidConfig("duplicate label".into()));
        }
        let mut alphabet = IndexMap::new();
        let mut off = 0;
        for key in observations {
            if alphabet.contains_key(&key) {
                continue;
            }
            let size = match key.context {
                LabelContext::Current => l,
                LabelContext::Transition => (l + 1) * l,
            };
            alphabet.insert(key, off);
            off += size;
        }
        let mut m = CrfModel {
            labels,
            label_index,
            alphabet,
            obs_len: off,
            weights: Vec::new(),
            order,
            gaussian_variance,
            templates,
            feature_config: None,
            meta: TrainMeta::default(),
        };
        m.weights = vec![0.0; m.weight_len()];
        Ok(m)
    }

    fn weight_len(&self) -> usize {
        let l = self.labels.len();
        let tri = if self.order == 2 { (l + 1) * l * l } else { 0 };
        self.obs_len + (l + 1) * l + tri
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn label_id(&self, label: &str) -> Option<usize> {
        self.label_index.get(label).copied()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet(&self) -> &IndexMap<ObsKey, usize> {
        &self.alphabet
    }

    pub fn trans_offset(&self) -> usize {
        self.obs_len
    }

    pub fn trigram_offset(&self) -> Option<usize> {
        (self.order == 2).then(|| self.obs_len + (self.labels.len() + 1) * self.labels.len())
    }

    pub fn num_weights(&self) -> usize {
        self.weights.len()
    }

    /// Index of the label-bigram weight `prev → cur`; `prev = None` is the start state.
    pub fn transition_index(&self, prev: Option<usize>, cur: usize) -> usize {
        let l = self.labels.len();
        self.obs_len + prev.unwrap_or(l) * l + cur
    }

    /// Index of the label-trigram weight; `pp = None` is the start state.
    pub fn trigram_index(&self, pp: Option<usize>, p: usize, c: usize) -> Option<usize> {
        let l = self.labels.len();
        self.trigram_offset().map(|o| o + (pp.unwrap_or(l) * l + p) * l + c)
    }

    /// The same parameters as an order-2 model with zero trigram weights.
    pub fn to_order2(&self) -> CrfModel {
        let mut m = self.clone();
        if m.order == 1 {
            m.order = 2;
            m.weights.resize(m.weight_len(), 0.0);
        }
        m
    }

    /// Resolves observations to weight offsets, skipping unseen strings.
    pub fn index(&self, obs: &Observations) -> CompiledSeq {
        let mut seq = CompiledSeq {
            unigram: Vec::with_capacity(obs.len()),
            edge: Vec::with_capacity(obs.len()),
        };
        let mut key = ObsKey {
            context: LabelContext::Current,
            text: String::new(),
        };
        for pos in &obs.positions {
            let mut u = Vec::new();
            let mut e = Vec::new();
            for (ctx, text) in pos {
                key.context = *ctx;
                key.text.clone_from(text);
                if let Some(&off) = self.alphabet.get(&key) {
                    match ctx {
                        LabelContext::Current => u.push(off),
                        LabelContext::Transition => e.push(off),
                    }
                }
            }
            seq.unigram.push(u);
            seq.edge.push(e);
        }
        seq
    }

    pub fn compile(&self, matrix: &AttributeMatrix) -> Result<CompiledSeq, CrfError> {
        Ok(self.index(&instantiate(matrix, &self.templates)?))
    }

    pub fn label_ids<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>, CrfError> {
        labels
            .iter()
            .map(|s| {
                self.label_id(s.as_ref())
                    .ok_or_else(|| CrfError::UnknownLabel(s.as_ref().to_string()))
            })
            .collect()
    }

    /// `(feature string, weight)` in weight order.
    pub fn named_weights(&self) -> Vec<(String, f64)> {
        let l = self.labels.len();
        let label = |i: usize| -> &str {
            if i == l {
                "<START>"
            } else {
                &self.labels[i]
            }
        };
        let mut out = Vec::with_capacity(self.weights.len());
        for (key, &off) in &self.alphabet {
            match key.context {
                LabelContext::Current => {
                    for c in 0..l {
                        out.push((format!("U\t{}\t{}", key.text, label(c)), self.weights[off + c]));
                    }
                }
                LabelContext::Transition => {
                    for p in 0..=l {
                        for c in 0..l {
                            out.push((
                                format!("E\t{}\t{}\t{}", key.text, label(p), label(c)),
                                self.weights[off + p * l + c],
                            ));
                        }
                    }
                }
            }
        }
        for p in 0..=l {
            for c in 0..l {
                out.push((format!("T\t{}\t{}", label(p), label(c)), self.weights[self.obs_len + p * l + c]));
            }
        }
        if let Some(o) = self.trigram_offset() {
            for pp in 0..=l {
                for p in 0..l {
                    for c in 0..l {
                        out.push((
                            format!("T3\t{}\t{}\t{}", label(pp), label(p), label(c)),
                            self.weights[o + (pp * l + p) * l + c],
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Serialized header fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct Header {
    pub order: usize,
    pub gaussian_variance: f64,
    pub labels: Vec<String>,
    pub templates: TemplateSet,
    pub feature_config: Option<FeatureConfig>,
    pub meta: TrainMeta,
}

impl CrfModel {
    pub(crate) fn header(&self) -> Header {
        Header {
            order: self.order,
            gaussian_variance: self.gaussian_variance,
            labels: self.labels.clone(),
            templates: self.templates.clone(),
            feature_config: self.feature_config.clone(),
            meta: self.meta.clone(),
        }
    }

    /// Rebuilds a model from a header and `(feature string, weight)` pairs in
    /// weight order.
    pub(crate) fn from_parts(
        header: Header,
        observations: Vec<ObsKey>,
        body: &[(String, f64)],
    ) -> Result<Self, CrfError> {
        let l = header.labels.len();
        let corrupt = |m: String| CrfError::CorruptFile(m);
        let n_obs = observations.len();
        let keys = observations;
        let mut m = CrfModel::new(
            header.labels,
            keys,
            header.order,
            header.gaussian_variance,
            header.templates,
        )
        .map_err(|e| corrupt(e.to_string()))?;
        if m.alphabet.len() != n_obs {
            return Err(corrupt("duplicate observation".into()));
        }
        m.feature_config = header.feature_config;
        m.meta = header.meta;
        if body.len() != m.weights.len() {
            return Err(corrupt(format!(
                "expected {} weights for {l} labels, found {}",
                m.weights.len(),
                body.len()
            )));
        }
        for ((name, w), (expected, _)) in body.iter().zip(m.named_weights()) {
            if *name != expected {
                return Err(corrupt(format!("unexpected feature '{name}'")));
            }
            if !w.is_finite() {
                return Err(corrupt(format!("non-finite weight for '{name}'")));
            }
        }
        m.weights = body.iter().map(|(_, w)| *w).collect();
        Ok(m)
    }
}
