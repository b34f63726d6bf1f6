//! Trains first- and second-order CRFs on the annotated fixture records with
//! two feature sets and scores them on a held-out split.
//!
//! `cargo run --release --example train_crf`

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use finmwe::crf::{load_model, model_to_string, save_model, train, TrainConfig};
use finmwe::eval::{drop_target, phrase_prf_records, split_heldout};
use finmwe::lingdata::read_records;
use finmwe::pipeline::{featurize_records, load_resources, tag_records, FeatureSelection, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    let cfg = PipelineConfig::load(&data.join("config.toml"))?;
    let resources = load_resources(&cfg)?;
    let records = read_records(BufReader::new(File::open(data.join("annotated.jsonl"))?))?;
    let (train_set, heldout) = split_heldout(&records, 0.7, 42)?;

    println!("set  order  P      R      F     tokens");
    for set in ["D", "W"] {
        let selection = FeatureSelection {
            set: Some(set.into()),
            ..Default::default()
        };
        let (features, drop) = selection.resolve()?;
        let (train_set, heldout) = if drop {
            (drop_target(&train_set), drop_target(&heldout))
        } else {
            (train_set.clone(), heldout.clone())
        };
        let matrices = featurize_records(&train_set, &features, &resources)?;
        let labelled: Vec<_> = matrices
            .into_iter()
            .zip(&train_set)
            .map(|(m, r)| {
                let tags = r.labels.as_deref().unwrap_or_default();
                (m, tags.iter().map(|t| t.to_string()).collect::<Vec<_>>())
            })
            .collect();
        for order in [1, 2] {
            let tc = TrainConfig {
                order,
                max_iterations: 100,
                ..Default::default()
            };
            let mut model = train(&labelled, None, &tc)?;
            model.feature_config = Some(features.clone());
            let predicted = tag_records(&model, &heldout, &resources)?;
            let r = phrase_prf_records(&heldout, &predicted)?;
            println!(
                "{set}    {order}      {:5.1}  {:5.1}  {:5.1}  {:5.1}",
                r.micro.p, r.micro.r, r.micro.f, r.token_accuracy
            );

            let path = std::env::temp_dir().join(format!("finmwe-{set}-{order}.json"));
            save_model(&model, &path)?;
            assert_eq!(model_to_string(&load_model(&path)?)?, model_to_string(&model)?);
        }
    }
    Ok(())
}
