use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::inference::{add_counts, posteriors, Counts, Potentials};
use super::lbfgs::{minimize, LbfgsConfig};
use super::model::{CompiledSeq, CrfModel, ObsKey, TrainMeta};
use super::template::{instantiate, TemplateSet};
use super::CrfError;
use crate::features::AttributeMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_iterations: usize,
    pub gaussian_variance: f64,
    pub order: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub memory: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_iterations: 500,
            gaussian_variance: 10.0,
            order: 1,
            tolerance: 1e-5,
            seed: 0,
            memory: 7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), CrfError> {
        let bad = |m: &str| Err(CrfError::InvalidConfig(m.to_string()));
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.gaussian_variance > 0.0) {
            return bad("gaussian_variance must be positive");
        }
        if !(1..=2).contains(&self.order) {
            return bad("order must be 1 or 2");
        }
        if !(self.tolerance > 0.0) || self.memory == 0 {
            return bad("tolerance and memory must be positive");
        }
        Ok(())
    }
}

/// A compiled training sequence with gold label ids.
pub type Instance = (CompiledSeq, Vec<usize>);

fn chunk_size(n: usize) -> usize {
    n.div_ceil(32).max(8)
}

fn pairwise_sum(mut parts: Vec<(f64, Vec<f64>)>) -> (f64, Vec<f64>) {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some((fa, mut ga)) = it.next() {
            if let Some((fb, gb)) = it.next() {
                ga.iter_mut().zip(&gb).for_each(|(a, b)| *a += b);
                next.push((fa + fb, ga));
            } else {
                next.push((fa, ga));
            }
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// Penalized conditional log-likelihood and its gradient.
pub fn loglik_and_gradient(model: &CrfModel, data: &[Instance]) -> (f64, Vec<f64>) {
    let n = model.num_weights();
    let parts: Vec<(f64, Vec<f64>)> = data
        .par_chunks(chunk_size(data.len()))
        .map(|chunk| {
            let mut g = vec![0.0; n];
            let mut ll = 0.0;
            for (seq, y) in chunk {
                if seq.is_empty() {
                    continue;
                }
                let pot = Potentials::new(model, seq);
                let post = posteriors(&pot);
                ll += pot.path_score(y) - post.log_z;
                add_counts(model, seq, &mut g, Counts::Path(y), 1.0);
                add_counts(model, seq, &mut g, Counts::Expected(&post), -1.0);
            }
            (ll, g)
        })
        .collect();
    let (mut ll, mut g) = pairwise_sum(parts);
    if g.is_empty() {
        g = vec![0.0; n];
    }
    let s2 = model.gaussian_variance;
    for (gi, wi) in g.iter_mut().zip(&model.weights) {
        ll -= wi * wi / (2.0 * s2);
        *gi -= wi / s2;
    }
    if !model.templates.transitions {
        let from = model.trans_offset();
        g[from..].iter_mut().for_each(|v| *v = 0.0);
    }
    (ll, g)
}

/// Label alphabet: `O` first, then labels in order of first appearance.
fn label_alphabet<S: AsRef<str>>(sequences: &[(AttributeMatrix, Vec<S>)]) -> Vec<String> {
    let mut labels = vec!["O".to_string()];
    for (_, ys) in sequences {
        for y in ys {
            if !labels.iter().any(|l| l == y.as_ref()) {
                labels.push(y.as_ref().to_string());
            }
        }
    }
    labels
}

/// Fits a model to labelled attribute matrices. Without explicit templates
/// the default window set over all attributes present is used.
pub fn train<S: AsRef<str> + Sync>(
    data: &[(AttributeMatrix, Vec<S>)],
    templates: Option<TemplateSet>,
    config: &TrainConfig,
) -> Result<CrfModel, CrfError> {
    config.validate()?;
    if data.is_empty() {
        return Err(CrfError::EmptyDataset);
    }
    for (i, (m, y)) in data.iter().enumerate() {
        if m.len() != y.len() {
            return Err(CrfError::LengthMismatch {
                index: i,
                tokens: m.len(),
                labels: y.len(),
            });
        }
    }
    let templates = templates.unwrap_or_else(|| TemplateSet::default_for(data.iter().map(|(m, _)| m)));
    let observations = data
        .par_iter()
        .map(|(m, _)| instantiate(m, &templates))
        .collect::<Result<Vec<_>, _>>()?;
    let keys = observations.iter().flat_map(|o| {
        o.positions.iter().flatten().map(|(c, t)| ObsKey {
            context: *c,
            text: t.clone(),
        })
    });
    let mut model = CrfModel::new(
        label_alphabet(data),
        keys,
        config.order,
        config.gaussian_variance,
        templates,
    )?;
    let instances: Vec<Instance> = observations
        .iter()
        .zip(data)
        .map(|(o, (_, y))| Ok((model.index(o), model.label_ids(y)?)))
        .collect::<Result<_, CrfError>>()?;
    fit(&mut model, &instances, config)?;
    Ok(model)
}

/// Runs the optimizer from the model's current weights.
pub fn fit(model: &mut CrfModel, instances: &[Instance], config: &TrainConfig) -> Result<(), CrfError> {
    let lcfg = LbfgsConfig {
        max_iterations: config.max_iterations,
        memory: config.memory,
        tolerance: config.tolerance,
        ..Default::default()
    };
    let mut scratch = model.clone();
    let result = minimize(
        |w| {
            scratch.weights.copy_from_slice(w);
            let (ll, g) = loglik_and_gradient(&scratch, instances);
            (-ll, g.into_iter().map(|v| -v).collect())
        },
        model.weights.clone(),
        &lcfg,
    )?;
    log::info!(
        "crf: {} iterations, objective {:.6}, stopped by {:?}",
        result.iterations,
        -result.value,
        result.stop_reason
    );
    model.weights = result.x;
    model.meta = TrainMeta {
        iterations: result.iterations,
        stop_reason: result.stop_reason,
        objective: -result.value,
        sequences: instances.len(),
        seed: config.seed,
    };
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::{viterbi, FeatureTemplate};
    use crate::features::Family;

    fn matrix(tokens: &[&str]) -> AttributeMatrix {
        let mut m = AttributeMatrix::new([Family::F1].into_iter().collect(), tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            m.push(i, "f1", *t);
        }
        m
    }

    #[test]
    fn single_position_zero_weights() {
        let templates = TemplateSet {
            templates: vec![FeatureTemplate::unigram("f1", 0)],
            transitions: true,
            window: 2,
        };
        let m = matrix(&["a"]);
        let obs = instantiate(&m, &templates).unwrap();
        let keys = obs.positions[0].iter().map(|(c, t)| ObsKey { context: *c, text: t.clone() });
        let model = CrfModel::new(vec!["O".into(), "B".into()], keys, 1, f64::INFINITY, templates).unwrap();
        let inst = vec![(model.index(&obs), vec![1])];
        let (ll, g) = loglik_and_gradient(&model, &inst);
        assert!((ll + 2f64.ln()).abs() < 1e-15);
        assert_eq!(&g[..2], &[-0.5, 0.5]);
    }

    #[test]
    fn separable_tokens_are_learned() {
        let data = vec![
            (matrix(&["x", "a", "y"]), vec!["O", "B-agent", "O"]),
            (matrix(&["a", "b", "x"]), vec!["B-agent", "I-agent", "O"]),
            (matrix(&["y", "a", "b"]), vec!["O", "B-agent", "I-agent"]),
        ];
        let templates = TemplateSet {
            templates: vec![FeatureTemplate::unigram("f1", 0)],
            transitions: true,
            window: 2,
        };
        let model = train(&data, Some(templates), &TrainConfig::default()).unwrap();
        for (m, y) in &data {
            let got = viterbi(&model, &model.compile(m).unwrap());
            assert_eq!(got, model.label_ids(y).unwrap());
        }
        assert_eq!(model.labels()[0], "O");
    }

    #[test]
    fn no_features_stays_uniform() {
        let data = vec![(matrix(&["x", "y"]), vec!["O", "B-agent"])];
        let templates = TemplateSet {
            templates: vec![],
            transitions: false,
            window: 2,
        };
        let model = train(&data, Some(templates), &TrainConfig::default()).unwrap();
        assert!(model.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn training_is_deterministic() {
        let data: Vec<_> = (0..40)
            .map(|i| {
                let toks = ["a", "b", "c", "d"];
                let t: Vec<&str> = (0..5).map(|k| toks[(i * 7 + k * 3) % 4]).collect();
                let y: Vec<&str> = t.iter().map(|&w| if w == "a" { "B-target" } else { "O" }).collect();
                (matrix(&t), y)
            })
            .collect();
        let cfg = TrainConfig {
            max_iterations: 30,
            ..Default::default()
        };
        let a = train(&data, None, &cfg).unwrap();
        let b = train(&data, None, &cfg).unwrap();
        assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn config_checks() {
        let cfg = TrainConfig {
            order: 3,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let data: Vec<(AttributeMatrix, Vec<&str>)> = vec![];
        assert!(matches!(train(&data, None, &TrainConfig::default()), Err(CrfError::EmptyDataset)));
    }
}
