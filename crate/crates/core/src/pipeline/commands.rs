use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PipelineConfig, PipelineError, RunLog};
use crate::crf::{self, load_model, save_model, CrfModel};
use crate::econ::{
    design_matrix, fit_mlogit, merge_firm_years, polarity_table, rank_mwe, read_earnings, read_polarity,
    sue_table, EconError, MergeReport, MlogitFit, RegressionReport,
};
use crate::eval::{drop_target, phrase_prf_records, select_explicit, split_heldout, EvalReport};
use crate::features::{
    assemble_attributes, AttributeMatrix, FeatureConfig, FeatureResources, HeadRules, LookupTable,
    SubjectivityLexicon,
};
use crate::lingdata::{iob_spans, read_records, repair_iob, write_records, LabelClass, SentenceRecord, Tag};
use crate::mwe::{cooccurrence, harvest, mask_entities, read_allow_list, weight_matrix, MweTable, WeightMatrix};
use crate::textprep::{
    clean_lines, filter_candidates, read_candidates, records_from_sentences, segment_sentences, strip_markup,
    CandidateSentence, Lexicon, RawFiling, TextprepError,
};

pub const SENTENCES_FILE: &str = "sentences.tsv";
pub const HELDOUT_FILE: &str = "heldout.jsonl";
pub const TAGGED_FILE: &str = "tagged.jsonl";
pub const MWE_FILE: &str = "mwe.json";
pub const WEIGHTS_FILE: &str = "weights.tsv";
pub const FIT_FILE: &str = "fit.json";
pub const REGRESSION_FILE: &str = "regression.json";

fn open(path: &Path) -> Result<BufReader<File>, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::MissingInput(path.to_path_buf()));
    }
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PipelineError::io(path, e))
}

fn read_text(path: &Path) -> Result<String, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::MissingInput(path.to_path_buf()));
    }
    std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, PipelineError> {
    p.as_deref()
        .ok_or_else(|| PipelineError::Config(format!("paths.{key} is not set")))
}

fn load_records(path: &Path, log: &mut RunLog) -> Result<Vec<SentenceRecord>, PipelineError> {
    let records = read_records(open(path)?)?;
    log.input(path)?;
    Ok(records)
}

fn records_text(records: &[SentenceRecord]) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("records are UTF-8")
}

/// Head rules, subjectivity lexicon and lookup tables named in the config.
pub fn load_resources(cfg: &PipelineConfig) -> Result<FeatureResources, PipelineError> {
    let p = &cfg.paths;
    let head_rules = match &p.head_rules {
        Some(path) => HeadRules::parse(&read_text(path)?)?,
        None => HeadRules::default(),
    };
    let lexicon = p
        .subjectivity
        .as_deref()
        .map(|path| SubjectivityLexicon::from_reader(open(path)?).map_err(PipelineError::from))
        .transpose()?;
    let table = |o: &Option<PathBuf>| -> Result<Option<LookupTable>, PipelineError> {
        o.as_deref()
            .map(|path| LookupTable::from_reader(open(path)?).map_err(PipelineError::from))
            .transpose()
    };
    Ok(FeatureResources {
        head_rules,
        lexicon,
        verb_clusters: table(&p.verb_clusters)?,
        frames: table(&p.frames)?,
    })
}

/// Attribute matrices in input order.
pub fn featurize_records(
    records: &[SentenceRecord],
    features: &FeatureConfig,
    resources: &FeatureResources,
) -> Result<Vec<AttributeMatrix>, PipelineError> {
    records
        .par_iter()
        .map(|r| assemble_attributes(r, features, resources).map_err(PipelineError::from))
        .collect()
}

fn label_strings(r: &SentenceRecord) -> Vec<String> {
    match &r.labels {
        Some(tags) => tags.iter().map(Tag::to_string).collect(),
        None => vec!["O".to_string(); r.len()],
    }
}

fn count_spans(records: &[SentenceRecord], log: &mut RunLog, prefix: &str) {
    let mut per_class: BTreeMap<LabelClass, usize> = BTreeMap::new();
    for r in records {
        for s in r.labels.as_deref().map(iob_spans).unwrap_or_default() {
            *per_class.entry(s.class).or_default() += 1;
        }
    }
    for c in LabelClass::ALL {
        log.count(&format!("{prefix}{c}"), per_class.get(&c).copied().unwrap_or(0) as f64);
    }
}

fn read_lexicons(cfg: &PipelineConfig, log: &mut RunLog) -> Result<Lexicon, PipelineError> {
    let mut lex = Lexicon::default();
    for path in &cfg.paths.lexicons {
        lex.extend(Lexicon::from_reader(open(path)?)?);
        log.input(path)?;
    }
    Ok(lex)
}

fn read_lemma_map(path: &Path) -> Result<HashMap<String, String>, PipelineError> {
    let mut map = HashMap::new();
    for line in open(path)?.lines() {
        let line = line.map_err(|e| PipelineError::io(path, e))?;
        if let Some((t, l)) = line.split_once('\t') {
            map.insert(t.trim().to_lowercase(), l.trim().to_lowercase());
        }
    }
    Ok(map)
}

/// Filings to candidate sentences in `<out>/sentences.tsv`.
pub fn cmd_extract(cfg: &PipelineConfig) -> Result<RunLog, PipelineError> {
    let mut log = RunLog::new("extract", cfg);
    let dir = required(&cfg.paths.corpus, "corpus")?;
    if !dir.is_dir() {
        return Err(PipelineError::MissingInput(dir.to_path_buf()));
    }
    let lexicon = read_lexicons(cfg, &mut log)?;
    let lemmas = match &cfg.paths.lemma_map {
        Some(p) => {
            log.input(p)?;
            Some(read_lemma_map(p)?)
        }
        None => None,
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| PipelineError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    let (mut filings, mut skipped, mut empty, mut sentences) = (0usize, 0usize, 0usize, 0usize);
    let mut out: Vec<CandidateSentence> = Vec::new();
    for path in &files {
        let filing = match RawFiling::read(path) {
            Ok(f) => f,
            Err(TextprepError::BadFileName(name)) => {
                log::warn!("skipping {name}: not a <company>_<year>.html filing");
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if let Some((lo, hi)) = cfg.extract.years {
            if !(lo..=hi).contains(&filing.fiscal_year) {
                skipped += 1;
                continue;
            }
        }
        filings += 1;
        log.input(path)?;
        let text = match strip_markup(&filing.body) {
            Ok(t) => t,
            Err(TextprepError::EmptyDocument) => {
                empty += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let segmented = segment_sentences(&clean_lines(&text, &cfg.extract.clean).join("\n"));
        sentences += segmented.len();
        if lexicon.is_empty() {
            return Err(TextprepError::EmptyLexicon.into());
        }
        let kept = filter_candidates(
            &segmented,
            &lexicon,
            lemmas.as_ref(),
            cfg.extract.min_tokens,
            cfg.extract.max_tokens,
        )?;
        out.extend(kept.into_iter().map(|(index, s)| CandidateSentence {
            text: s.to_string(),
            token_count: crate::textprep::word_count(s),
            company_id: filing.company_id.clone(),
            fiscal_year: filing.fiscal_year,
            index,
        }));
    }
    let mut text = String::new();
    for c in &out {
        text.push_str(&c.to_line());
        text.push('\n');
    }
    log.write(&cfg.out(SENTENCES_FILE), &text)?;
    log.count("filings", filings as f64);
    log.count("skipped_files", skipped as f64);
    log.count("empty_filings", empty as f64);
    log.count("sentences", sentences as f64);
    log.count("candidates", out.len() as f64);
    log.save(&cfg.paths.out)?;
    Ok(log)
}

/// Attribute rows for the annotated records in `<out>/features.tsv`: one
/// token per line with `name=value` columns and the gold label last.
pub fn cmd_featurize(cfg: &PipelineConfig) -> Result<RunLog, PipelineError> {
    let mut log = RunLog::new("featurize", cfg);
    let path = cfg.paths.tag_input.as_deref().or(cfg.paths.records.as_deref());
    let path = path.ok_or_else(|| PipelineError::Config("paths.records is not set".into()))?;
    let records = load_records(path, &mut log)?;
    let (features, _) = cfg.features.resolve()?;
    let matrices = featurize_records(&records, &features, &load_resources(cfg)?)?;
    let mut text = String::new();
    let mut names = std::collections::BTreeSet::new();
    for (r, m) in records.iter().zip(&matrices) {
        let labels = label_strings(r);
        for (i, row) in m.rows.iter().enumerate() {
            text.push_str(&r.tokens[i]);
            for (k, v) in row {
                let _ = write!(text, "\t{k}={v}");
                names.insert(k.clone());
            }
            let _ = writeln!(text, "\t{}", labels[i]);
        }
        text.push('\n');
    }
    log.write(&cfg.out("features.tsv"), &text)?;
    log.count("records", records.len() as f64);
    log.count("tokens", records.iter().map(SentenceRecord::len).sum::<usize>() as f64);
    log.count("attributes", names.len() as f64);
    log.save(&cfg.paths.out)?;
    Ok(log)
}

fn labelled(records: &[SentenceRecord]) -> Result<(), PipelineError> {
    match records.iter().position(|r| r.labels.is_none()) {
        Some(i) => Err(crate::eval::EvalError::MissingLabels(i).into()),
        None => Ok(()),
    }
}

/// Trains on the annotated records, holding out `1 - train_fraction` of
/// them in `<out>/heldout.jsonl`.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<RunLog, PipelineError> {
    let mut log = RunLog::new("train", cfg);
    let path = required(&cfg.paths.records, "records")?;
    let mut records = load_records(path, &mut log)?;
    labelled(&records)?;
    let (features, drop) = cfg.features.resolve()?;
    if drop {
        records = drop_target(&records);
    }
    let (train, test) = if cfg.train_fraction < 1.0 {
        split_heldout(&records, cfg.train_fraction, cfg.seed)?
    } else {
        (records, Vec::new())
    };
    let matrices = featurize_records(&train, &features, &load_resources(cfg)?)?;
    let data: Vec<(AttributeMatrix, Vec<String>)> = matrices
        .into_iter()
        .zip(&train)
        .map(|(m, r)| (m, label_strings(r)))
        .collect();
    let mut tc = cfg.train.clone();
    tc.seed = cfg.seed;
    let mut model = crf::train(&data, None, &tc)?;
    model.feature_config = Some(features);
    let model_path = cfg.model_path();
    if let Some(dir) = model_path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    save_model(&model, &model_path)?;
    log.outputs.push(super::FileDigest::of(&model_path)?);
    log.write(&cfg.out(HELDOUT_FILE), &records_text(&test))?;
    log.count("train_sentences", train.len() as f64);
    log.count("heldout_sentences", test.len() as f64);
    log.count("labels", model.num_labels() as f64);
    log.count("weights", model.num_weights() as f64);
    log.count("iterations", model.meta.iterations as f64);
    log.count("objective", model.meta.objective);
    log.save(&cfg.paths.out)?;
    Ok(log)
}

fn describe(f: &Option<FeatureConfig>) -> String {
    match f {
        Some(f) => f.families.iter().map(|x| x.id()).collect::<Vec<_>>().join(","),
        None => "unknown".into(),
    }
}

/// Loads the model and checks it was trained with the configured features.
pub fn load_checked_model(cfg: &PipelineConfig) -> Result<CrfModel, PipelineError> {
    let path = cfg.model_path();
    if !path.exists() {
        return Err(PipelineError::MissingInput(path));
    }
    let model = load_model(&path)?;
    let (features, _) = cfg.features.resolve()?;
    if model.feature_config.as_ref().map(|f| &f.families) != Some(&features.families) {
        return Err(PipelineError::FeatureMismatch {
            model: describe(&model.feature_config),
            config: describe(&Some(features)),
        });
    }
    Ok(model)
}

/// Records with their label layer replaced by the model's decoding.
pub fn tag_records(
    model: &CrfModel,
    records: &[SentenceRecord],
    resources: &FeatureResources,
) -> Result<Vec<SentenceRecord>, PipelineError> {
    let features = model
        .feature_config
        .clone()
        .ok_or_else(|| PipelineError::Config("model has no feature configuration".into()))?;
    records
        .par_iter()
        .map(|r| {
            let m = assemble_attributes(r, &features, resources)?;
            let mut tags = crf::tag(model, &m)?
                .iter()
                .map(|t| t.parse::<Tag>())
                .collect::<Result<Vec<_>, _>>()?;
            repair_iob(&mut tags);
            let mut out = r.clone();
            out.labels = Some(tags);
            Ok(out)
        })
        .collect()
}

/// Tags `paths.tag_input`, or the extracted sentences, into
/// `<out>/tagged.jsonl`.
pub fn cmd_tag(cfg: &PipelineConfig) -> Result<RunLog, PipelineError> {
    let mut log = RunLog::new("tag", cfg);
    let model = load_checked_model(cfg)?;
    let records = match &cfg.paths.tag_input {
        Some(p) => load_records(p, &mut log)?,
        None => {
            let p = cfg.out(SENTENCES_FILE);
            let sentences = read_candidates(open(&p)?)?;
            log.input(&p)?;
            records_from_sentences(&sentences)
        }
    };
    let tagged = tag_records(&model, &records, &load_resources(cfg)?)?;
    log.write(&cfg.out(TAGGED_FILE), &records_text(&tagged))?;
    log.count("records", tagged.len() as f64);
    log.count("tokens", tagged.iter().map(SentenceRecord::len).sum::<usize>() as f64);
    count_spans(&tagged, &mut log, "spans.");
    log.save(&cfg.paths.out)?;
    Ok(log)
}

fn eval_pair(gold: &[SentenceRecord], pred: &[SentenceRecord]) -> Result<EvalReport, PipelineError> {
    Ok(phrase_prf_records(gold, pred)?)
}

/// Phrase-level scores on the held-out records (all annotated records when
/// nothing was held out): as configured, without targets, and optionally
/// restricted to explicit expressions.
pub fn cmd_eval(cfg: &PipelineConfig) -> Result<RunLog, PipelineError> {
    let mut log = RunLog::new("eval", cfg);
    let model = load_checked_model(cfg)?;
    let heldout = cfg.out(HELDOUT_FILE);
    let mut gold = if heldout.exists() && std::fs::metadata(&heldout).map(|m| m.len() > 0).unwrap_or(false) {
        load_records(&heldout, &mut log)?
    } else {
        load_records(required(&cfg.paths.records, "records")?, &mut log)?
    };
    labelled(&gold)?;
    let (_, drop) = cfg.features.resolve()?;
    if drop {
        gold = drop_target(&gold);
    }
    let pred = tag_records(&model, &gold, &load_resources(cfg)?)?;
    let report = eval_pair(&gold, &pred)?;
    log.write(&cfg.out("eval.tsv"), &report.to_tsv())?;
    log.write(&cfg.out("eval.json"), &report.to_json())?;
    let no_target = eval_pair(&drop_target(&gold), &drop_target(&pred))?;
    log.write(&cfg.out("eval-no-target.tsv"), &no_target.to_tsv())?;
    log.count("sentences", gold.len() as f64);
    log.count("micro_f", report.micro.f);
    log.count("macro_f", report.macro_avg.f);
    log.count("token_accuracy", report.token_accuracy);
    if cfg.explicit {
        let keep: Vec<usize> = gold
            .iter()
            .enumerate()
            .filter(|(_, r)| !select_explicit(std::slice::from_ref(*r)).is_empty())
            .map(|(i, _)| i)
            .collect();
        let g: Vec<SentenceRecord> = keep.iter().map(|&i| gold[i].clone()).collect();
        let p: Vec<SentenceRecord> = keep.iter().map(|&i| pred[i].clone()).collect();
        let explicit = eval_pair(&g, &p)?;
        log.write(&cfg.out("eval-explicit.tsv"), &explicit.to_tsv())?;
        log.count("explicit_sentences", g.len() as f64);
        log.count("explicit_micro_f", explicit.micro.f);
    }
    log.save(&cfg.paths.out)?;
    Ok(log)
}

fn mask_where_possible(records: &[SentenceRecord]) -> Result<(Vec<SentenceRecord>, usize), PipelineError> {
    let mut masked = 0;
    let out = records
        .iter()
        .map(|r| {
            if r.ner.is_some() {
                masked += 1;
                mask_entities(r)
            } else {
                Ok(r.clone())
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((out, masked))
}

/// Expressions used as regressors: the allow-list entries that were
/// harvested, or else the most frequent expressions seen in enough
/// documents.
pub fn select_expressions(table: &MweTable, allow: Option<&[String]>, cfg: &PipelineConfig) -> Vec<String> {
    let mut pooled: BTreeMap<&str, (usize, std::collections::BTreeSet<&str>)> = BTreeMap::new();
    for e in &table.entries {
        let p = pooled.entry(e.text.as_str()).or_default();
        p.0 += e.total_freq;
        p.1.extend(e.per_doc_freq.keys().map(String::as_str));
    }
    match allow {
        Some(list) => list.iter().filter(|t| pooled.contains_key(t.as_str())).cloned().collect(),
        None => {
            let mut v: Vec<(&str, usize)> = pooled
                .iter()
                .filter(|(_, (_, docs))| docs.len() >= cfg.analysis.min_doc_freq)
                .map(|(t, (f, _))| (*t, *f))
                .collect();
            v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            v.into_iter()
                .take(cfg.analysis.max_expressions)
                .map(|(t, _)| t.to_string())
                .collect()
        }
    }
}

fn load_allow_list(cfg: &PipelineConfig, log: &mut RunLog) -> Result<Option<Vec<String>>, PipelineError> {
    match &cfg.paths.allow_list {
        Some(p) => {
            let list = read_allow_list(open(p)?)?;
            log.input(p)?;
            Ok(Some(list))
        }
        None => Ok(None),
    }
}

fn load_tagged(cfg: &PipelineConfig, log: &mut RunLog) -> Result<Vec<SentenceRecord>, PipelineError> {
    load_records(&cfg.out(TAGGED_FILE), log)
}

/// Harvests expressions from the tagged records after entity masking.
pub fn cmd_harvest(cfg: &PipelineConfig) -> Result<RunLog, PipelineError> {
    let mut log = RunLog::new("harvest", cfg);
    let tagged = load_tagged(cfg, &mut log)?;
    let (masked, n_masked) = mask_where_possible(&tagged)?;
    let table = harvest(&masked, Some(&cfg.analysis.mwe_classes));
    log.write(&cfg.out("mwe.tsv"), &table.to_tsv())?;
    log.write(&cfg.out("mwe_docs.tsv"), &table.per_doc_tsv())?;
    log.write(&cfg.out(MWE_FILE), &serde_json::to_string_pretty(&table)?)?;
    for class in &cfg.analysis.mwe_classes {
        log.write(&cfg.out(&format!("top-{class}.tsv")), &table.frequency_table(*class, 8))?;
    }
    let allow = load_allow_list(cfg, &mut log)?;
    let selected = select_expressions(&table, allow.as_deref(), cfg);
    let mut co = String::from("combination\ttotal_freq\tdoc_freq\n");
    for term in &cfg.analysis.agent_terms {
        for expr in &selected {
            let (total, docs) = cooccurrence(&masked, &[term.as_str()], expr);
            let _ = writeln!(co, "{term} AND \"{expr}\"\t{total}\t{docs}");
        }
    }
    log.write(&cfg.out("cooccurrence.tsv"), &co)?;
    log.count("records", tagged.len() as f64);
    log.count("masked_records", n_masked as f64);
    log.count("documents", table.documents.len() as f64);
    log.count("expressions", table.entries.len() as f64);
    log.count("selected", selected.len() as f64);
    log.save(&cfg.paths.out)?;
    Ok(log)
}

fn load_table(cfg: &PipelineConfig, log: &mut RunLog) -> Result<MweTable, PipelineError> {
    let p = cfg.out(MWE_FILE);
    let table = serde_json::from_str(&read_text(&p)?)?;
    log.input(&p)?;
    Ok(table)
}

/// Document × expression weights for the selected expressions.
pub fn cmd_weight(cfg: &PipelineConfig) -> Result<RunLog, PipelineError> {
    let mut log = RunLog::new("weight", cfg);
    let table = load_table(cfg, &mut log)?;
    let allow = load_allow_list(cfg, &mut log)?;
    let selected = select_expressions(&table, allow.as_deref(), cfg);
    let wm = weight_matrix(&table, Some(&selected), &cfg.mwef_idf)?;
    log.write(&cfg.out(WEIGHTS_FILE), &wm.to_tsv())?;
    log.count("documents", wm.documents.len() as f64);
    log.count("expressions", wm.expressions.len() as f64);
    log.save(&cfg.paths.out)?;
    Ok(log)
}

fn load_earnings(cfg: &PipelineConfig, log: &mut RunLog) -> Result<Vec<crate::econ::EarningsRow>, PipelineError> {
    let p = required(&cfg.paths.earnings, "earnings")?;
    let rows = read_earnings(open(p)?)?;
    log.input(p)?;
    Ok(rows)
}

/// SUE and outcome category of every firm-year in the earnings file.
pub fn cmd_sue(cfg: &PipelineConfig) -> Result<RunLog, PipelineError> {
    let mut log = RunLog::new("sue", cfg);
    cfg.validate()?;
    let rows = load_earnings(cfg, &mut log)?;
    let (table, degenerate) = sue_table(&rows)?;
    let mut text = String::from("company_id\tfiscal_year\tsue\toutcome\n");
    let mut counts = [0usize; 3];
    for ((firm, year), s) in &table {
        let y = crate::econ::categorize(Some(*s), cfg.analysis.tau)?;
        counts[(y + 1) as usize] += 1;
        let _ = writeln!(text, "{firm}\t{year}\t{s:.6}\t{y}");
    }
    log.write(&cfg.out("sue.tsv"), &text)?;
    log.count("firm_years", table.len() as f64);
    log.count("degenerate_firms", degenerate.len() as f64);
    log.count("outcome.-1", counts[0] as f64);
    log.count("outcome.0", counts[1] as f64);
    log.count("outcome.+1", counts[2] as f64);
    log.save(&cfg.paths.out)?;
    Ok(log)
}

/// A fitted regression plus what is needed to report it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRun {
    pub tau: f64,
    pub n_controls: usize,
    pub category_counts: [usize; 3],
    pub merge: MergeReport,
    /// Expressions removed because their column separated the outcomes.
    pub dropped: Vec<String>,
    pub fit: MlogitFit,
}

fn split_doc_id(id: &str) -> Option<(String, i32)> {
    let (c, y) = id.rsplit_once('_')?;
    Some((c.to_string(), y.parse().ok()?))
}

/// Merges weights with earnings and fits the multinomial logit.
pub fn cmd_regress(cfg: &PipelineConfig) -> Result<RunLog, PipelineError> {
    let mut log = RunLog::new("regress", cfg);
    cfg.validate()?;
    let wp = cfg.out(WEIGHTS_FILE);
    let wm = WeightMatrix::from_tsv(&read_text(&wp)?)?;
    log.input(&wp)?;
    let rows = load_earnings(cfg, &mut log)?;
    let keys: Vec<(String, i32)> = wm.documents.iter().filter_map(|d| split_doc_id(d)).collect();
    let panel = merge_firm_years(&keys, &rows, &cfg.analysis.panel())?;
    let mut selected = wm.expressions.clone();
    let mut dropped = Vec::new();
    let fit = loop {
        let design = design_matrix(&panel, Some(&wm), &selected)?;
        match fit_mlogit(&design.x, &design.y, &design.columns, &cfg.analysis.mlogit) {
            Err(EconError::Separation(col)) if cfg.analysis.drop_separating && selected.contains(&col) => {
                log::warn!("dropping '{col}': it separates the outcomes");
                selected.retain(|s| s != &col);
                dropped.push(col);
            }
            other => break other?,
        }
    };
    let run = RegressionRun {
        tau: cfg.analysis.tau,
        n_controls: panel.controls.len(),
        category_counts: panel.category_counts(),
        merge: panel.report.clone(),
        dropped,
        fit,
    };
    log.write(&cfg.out(FIT_FILE), &serde_json::to_string_pretty(&run)?)?;
    log.count("observations", panel.rows.len() as f64);
    log.count("outcome.-1", run.category_counts[0] as f64);
    log.count("outcome.0", run.category_counts[1] as f64);
    log.count("outcome.+1", run.category_counts[2] as f64);
    log.count("dropped_missing_controls", panel.report.dropped_missing_controls as f64);
    log.count("dropped_missing_sue", panel.report.dropped_missing_sue as f64);
    log.count("dropped_expressions", run.dropped.len() as f64);
    log.count("iterations", run.fit.iterations as f64);
    log.count("log_likelihood", run.fit.log_likelihood);
    log.save(&cfg.paths.out)?;
    Ok(log)
}

/// Ranks rows of `variable, coef_neg, p_neg, coef_pos, p_pos` and appends
/// the rank column.
pub fn rank_table(text: &str, sig_level: f64) -> Result<String, PipelineError> {
    let mut out = String::from("variable\tcoef_neg\tp_neg\tcoef_pos\tp_pos\tR(w)\n");
    for (i, line) in text.lines().enumerate() {
        let cols: Vec<&str> = line.split('\t').collect();
        if line.trim().is_empty() || (i == 0 && cols.get(1).is_some_and(|c| c.parse::<f64>().is_err())) {
            continue;
        }
        let bad = || PipelineError::Config(format!("coefficient line {}: expected 5 columns", i + 1));
        if cols.len() < 5 {
            return Err(bad());
        }
        let nums: Vec<f64> = cols[1..5]
            .iter()
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let r = rank_mwe(nums[0], nums[1], nums[2], nums[3], sig_level);
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}\t{r}", cols[0], cols[1], cols[2], cols[3], cols[4]);
    }
    Ok(out)
}

/// Ranks the fitted expressions, or an external coefficient table when one
/// is given.
pub fn cmd_rank(cfg: &PipelineConfig, coefficients: Option<&Path>) -> Result<RunLog, PipelineError> {
    let mut log = RunLog::new("rank", cfg);
    if let Some(path) = coefficients {
        let ranked = rank_table(&read_text(path)?, cfg.analysis.sig_level)?;
        log.input(path)?;
        log.count("rows", (ranked.lines().count() - 1) as f64);
        log.write(&cfg.out("ranks.tsv"), &ranked)?;
        log.save(&cfg.paths.out)?;
        return Ok(log);
    }
    let fp = cfg.out(FIT_FILE);
    let run: RegressionRun = serde_json::from_str(&read_text(&fp)?)?;
    log.input(&fp)?;
    let report = RegressionReport::from_fit(
        &run.fit,
        run.n_controls,
        cfg.analysis.covariance,
        cfg.analysis.sig_level,
        run.tau,
        run.category_counts,
    );
    log.write(&cfg.out("regression.tsv"), &report.to_tsv())?;
    log.write(&cfg.out(REGRESSION_FILE), &serde_json::to_string_pretty(&report)?)?;
    for r in report.expressions() {
        let key = format!("rank.{}", r.rank.map_or("-".into(), |k| k.to_string()));
        *log.counts.entry(key).or_default() += 1.0;
    }
    log.count("expressions", report.expressions().count() as f64);
    log.save(&cfg.paths.out)?;
    Ok(log)
}

/// Opinion holder, polarity and rank of each ranked expression.
pub fn cmd_report(cfg: &PipelineConfig) -> Result<RunLog, PipelineError> {
    let mut log = RunLog::new("report", cfg);
    let rp = cfg.out(REGRESSION_FILE);
    let report: RegressionReport = serde_json::from_str(&read_text(&rp)?)?;
    log.input(&rp)?;
    let polarity = match &cfg.paths.polarity {
        Some(p) => {
            log.input(p)?;
            read_polarity(open(p)?)?
        }
        None => HashMap::new(),
    };
    let tagged = load_tagged(cfg, &mut log)?;
    let (masked, _) = mask_where_possible(&tagged)?;
    let mut holders = HashMap::new();
    for r in report.expressions() {
        let best = cfg
            .analysis
            .agent_terms
            .iter()
            .map(|t| (cooccurrence(&masked, &[t.as_str()], &r.variable).0, t))
            .filter(|(n, _)| *n > 0)
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(a.1)));
        if let Some((_, t)) = best {
            holders.insert(r.variable.clone(), t.clone());
        }
    }
    let table = polarity_table(&report, &polarity, &holders);
    log.write(&cfg.out("polarity.tsv"), &table)?;
    let mut ranked = String::from("id\tmwe\tR(w)\n");
    for r in report.ranked() {
        let _ = writeln!(
            ranked,
            "{}\t{}\t{}",
            r.id,
            r.variable,
            r.rank.map_or("-".into(), |k| k.to_string())
        );
    }
    log.write(&cfg.out("ranked.tsv"), &ranked)?;
    log.count("expressions", report.expressions().count() as f64);
    log.count("with_holder", holders.len() as f64);
    log.save(&cfg.paths.out)?;
    Ok(log)
}

/// Harvest, weight, regress, rank and report in sequence.
pub fn cmd_analyze(cfg: &PipelineConfig) -> Result<RunLog, PipelineError> {
    let mut log = RunLog::new("analyze", cfg);
    for step in [cmd_harvest, cmd_weight, cmd_regress, |c: &PipelineConfig| cmd_rank(c, None), cmd_report] {
        let sub = step(cfg)?;
        for (k, v) in sub.counts {
            log.counts.insert(format!("{}.{k}", sub.command), v);
        }
        log.outputs.extend(sub.outputs);
    }
    log.save(&cfg.paths.out)?;
    Ok(log)
}
