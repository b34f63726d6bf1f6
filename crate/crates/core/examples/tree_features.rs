//! Syntactic attributes of one parsed sentence: heads, paths, voice and the
//! full attribute matrix.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use finmwe::features::{
    assemble_attributes, detect_voice, feature_set, head_word, main_verb, phrase_type_levels, subcategorization,
    syntactic_path, FeatureConfig, FeatureResources, HeadRules, LookupTable, SubjectivityLexicon,
};
use finmwe::lingdata::read_records;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    let records = read_records(BufReader::new(File::open(data.join("annotated.jsonl"))?))?;
    let rec = &records[3];
    let tree = rec.tree().expect("fixture records carry parses")?;
    let rules = HeadRules::default();

    println!("{}", rec.tokens.join(" "));
    let verb = main_verb(&rules, &tree);
    println!("main verb: {} ({:?})", rec.tokens[verb], detect_voice(&tree, verb));
    println!("sentence head: {}", head_word(&rules, &tree, tree.root()).head.word);
    println!("sub-categorization: {}", subcategorization(&tree, verb)?);
    for i in 0..rec.len() {
        let path = syntactic_path(&tree, i, verb);
        let levels = phrase_type_levels(&rules, &tree, i, 3);
        println!("{:>12}  {:<28} {:<14} {}", rec.tokens[i], path.full, path.partial, levels.join(","));
    }

    let resources = FeatureResources {
        head_rules: rules,
        lexicon: Some(SubjectivityLexicon::from_reader(BufReader::new(File::open(data.join("subjectivity.tsv"))?))?),
        verb_clusters: Some(LookupTable::from_reader(BufReader::new(File::open(data.join("verb_clusters.tsv"))?))?),
        frames: Some(LookupTable::from_reader(BufReader::new(File::open(data.join("frames.tsv"))?))?),
    };
    let set = feature_set("W")?;
    let m = assemble_attributes(rec, &FeatureConfig::new(set.families), &resources)?;
    println!("\nattributes of '{}':", rec.tokens[verb]);
    for (name, value) in &m.rows[verb] {
        println!("  {name} = {value}");
    }
    Ok(())
}
