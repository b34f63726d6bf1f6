use std::collections::BTreeSet;

use finmwe::crf::{log_partition, marginals, sequence_score, CompiledSeq, CrfModel, LabelContext, ObsKey, TemplateSet};
use finmwe::econ::{compute_sue, fit_mlogit, MlogitConfig};
use finmwe::eval::{drop_target, phrase_prf, select_explicit};
use finmwe::features::syntax::{DOWN, UP};
use finmwe::features::{
    assemble_attributes, head_word, phrase_type_levels, syntactic_path, ConstituencyTree, Family, FeatureConfig,
    FeatureResources, HeadRules,
};
use finmwe::lingdata::{iob_spans, read_records, spans_to_iob, LabelClass, LabelSpan, SentenceRecord, Tag};
use finmwe::mwe::{cooccurrence, harvest, mask_entities, mwef_idf, MwefIdfConfig};
use finmwe::textprep::{filter_candidates, sentence_spans, strip_markup, word_count, Lexicon};
use proptest::prelude::*;
use proptest::sample::subsequence;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CLASSES: [LabelClass; 5] = [
    LabelClass::Agent,
    LabelClass::ExpressiveSubjectivity,
    LabelClass::ObjectiveSpeechEvent,
    LabelClass::DirectSubjective,
    LabelClass::Target,
];

fn span_set() -> impl Strategy<Value = (Vec<LabelSpan>, usize)> {
    prop::collection::vec((0usize..5, 1usize..4, 0usize..3), 0..8).prop_map(|parts| {
        let mut spans = Vec::new();
        let mut pos = 0;
        for (c, len, gap) in parts {
            pos += gap;
            spans.push(LabelSpan::new(CLASSES[c], pos, pos + len));
            pos += len;
        }
        (spans, pos)
    })
}

fn tag_seq() -> impl Strategy<Value = Vec<Tag>> {
    (span_set(), 0usize..3).prop_map(|((spans, n), extra)| spans_to_iob(&spans, n + extra).unwrap())
}

fn plain_text() -> impl Strategy<Value = String> {
    prop::collection::vec("[A-Za-z][a-z]{0,8}( [a-z0-9]{1,6}){0,10}[.?!]", 1..8).prop_map(|s| s.join(" "))
}

// ---------------------------------------------------------------- text

proptest! {
    #[test]
    fn strip_markup_idempotent_on_plain_text(text in plain_text()) {
        let once = strip_markup(&text).unwrap();
        prop_assert_eq!(strip_markup(&once).unwrap(), once);
    }

    #[test]
    fn sentence_spans_partition_input(text in plain_text()) {
        let spans = sentence_spans(&text);
        let mut last = 0;
        for s in &spans {
            prop_assert!(s.start >= last && s.start < s.end);
            last = s.end;
        }
        let joined: String = spans.iter().flat_map(|s| text[s.clone()].chars()).filter(|c| !c.is_whitespace()).collect();
        let all: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        prop_assert_eq!(joined, all);
    }

    #[test]
    fn candidates_are_a_filtered_subset(
        sentences in prop::collection::vec("(we|believe|sales|rose|the|risk|[a-z]{2,5})( (we|believe|sales|rose|the|risk|[a-z]{2,5})){0,14}\\.", 0..12),
        lo in 1usize..6,
        span in 0usize..10,
    ) {
        let lex = Lexicon::from_words(["believe", "risk"]);
        let hi = lo + span;
        let kept = filter_candidates(&sentences, &lex, None, lo, hi).unwrap();
        for (i, s) in &kept {
            prop_assert_eq!(&sentences[*i], s);
            let n = word_count(s);
            prop_assert!(n >= lo && n <= hi);
            prop_assert!(s.contains("believe") || s.contains("risk"));
        }
        let idx: Vec<usize> = kept.iter().map(|k| k.0).collect();
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }
}

// ---------------------------------------------------------------- IOB

proptest! {
    #[test]
    fn spans_round_trip((spans, n) in span_set(), extra in 0usize..4) {
        let tags = spans_to_iob(&spans, n + extra).unwrap();
        prop_assert_eq!(iob_spans(&tags), spans);
    }

    #[test]
    fn trailing_o_does_not_change_spans(tags in tag_seq(), extra in 0usize..5) {
        let mut longer = tags.clone();
        longer.extend(std::iter::repeat(Tag::O).take(extra));
        prop_assert_eq!(iob_spans(&tags), iob_spans(&longer));
    }
}

// ---------------------------------------------------------------- trees

#[derive(Clone, Debug)]
enum T {
    Leaf(String),
    Node(String, Vec<T>),
}

const PHRASES: [&str; 5] = ["NP", "VP", "S", "PP", "ADJP"];
const TAGS: [&str; 8] = ["NN", "NNS", "VB", "VBD", "DT", "JJ", "IN", "RB"];

fn random_tree(rng: &mut ChaCha8Rng, depth: usize, next: &mut usize) -> T {
    if depth == 0 || rng.gen_bool(0.3) {
        let w = format!("w{next}");
        *next += 1;
        return T::Node(TAGS.choose(rng).unwrap().to_string(), vec![T::Leaf(w)]);
    }
    let k = rng.gen_range(1..=3);
    let kids = (0..k).map(|_| random_tree(rng, depth - 1, next)).collect();
    T::Node(PHRASES.choose(rng).unwrap().to_string(), kids)
}

fn bracket(t: &T) -> String {
    match t {
        T::Leaf(w) => w.clone(),
        T::Node(l, kids) => format!("({l} {})", kids.iter().map(bracket).collect::<Vec<_>>().join(" ")),
    }
}

fn tree_from_seed(seed: u64) -> (T, ConstituencyTree) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = 0;
    let t = T::Node("ROOT".into(), vec![random_tree(&mut rng, 4, &mut next)]);
    let parsed = ConstituencyTree::parse(&bracket(&t)).unwrap();
    (t, parsed)
}

proptest! {
    #[test]
    fn paths_turn_once(seed in any::<u64>(), a in 0usize..64, b in 0usize..64) {
        let (_, tree) = tree_from_seed(seed);
        let n = tree.leaf_count();
        let (a, b) = (a % n, b % n);
        let path = syntactic_path(&tree, a, b).full;
        if a == b {
            prop_assert!(!path.contains(UP) && !path.contains(DOWN));
        } else {
            let arrows: Vec<char> = path.chars().filter(|c| *c == UP || *c == DOWN).collect();
            let turns = arrows.windows(2).filter(|w| w[0] != w[1]).count();
            prop_assert_eq!(arrows.first(), Some(&UP));
            prop_assert_eq!(arrows.last(), Some(&DOWN));
            prop_assert_eq!(turns, 1);
        }
    }

    #[test]
    fn head_ignores_non_head_sibling_order(seed in any::<u64>(), pick in any::<usize>()) {
        let rules = HeadRules::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut next = 0;
        let label = PHRASES.choose(&mut rng).unwrap().to_string();
        let kids: Vec<T> = (0..5).map(|_| random_tree(&mut rng, 2, &mut next)).collect();
        let t = T::Node(label.clone(), kids.clone());
        let tree = ConstituencyTree::parse(&bracket(&t)).unwrap();
        let head = head_word(&rules, &tree, tree.root()).head.word;
        let top = tree.root();
        let head_tok = rules.head_token(&tree, top);
        let h = tree.children(top).iter().position(|&c| rules.head_token(&tree, c) == head_tok).unwrap();
        // two non-head children on the same side of the head child
        let side: Vec<usize> = if h >= 2 { (0..h).collect() } else { (h + 1..5).collect() };
        let i = side[pick % side.len()];
        let j = side[(pick / side.len() + 1 + pick % side.len()) % side.len()];
        prop_assume!(i != j);
        let mut swapped = kids;
        swapped.swap(i, j);
        let tree2 = ConstituencyTree::parse(&bracket(&T::Node(label, swapped))).unwrap();
        prop_assert_eq!(head_word(&rules, &tree2, tree2.root()).head.word, head);
    }

    #[test]
    fn phrase_levels_are_a_short_head_chain_prefix(seed in any::<u64>(), leaf in 0usize..64) {
        let rules = HeadRules::default();
        let (_, tree) = tree_from_seed(seed);
        let leaf = leaf % tree.leaf_count();
        let levels = phrase_type_levels(&rules, &tree, leaf, 3);
        let chain = phrase_type_levels(&rules, &tree, leaf, usize::MAX);
        prop_assert!(levels.len() <= 3);
        prop_assert_eq!(&chain[..levels.len()], &levels[..]);
    }
}

// ---------------------------------------------------------------- features

fn fixture_records() -> Vec<SentenceRecord> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/fixtures/annotated.jsonl");
    let text = std::fs::read_to_string(path).unwrap();
    read_records(text.as_bytes()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn more_families_more_attributes(
        small in subsequence(Family::ALL.to_vec(), 0..=20),
        more in subsequence(Family::ALL.to_vec(), 0..=20),
        idx in 0usize..200,
    ) {
        let records = fixture_records();
        let rec = &records[idx % records.len()];
        let res = FeatureResources { head_rules: HeadRules::default(), lexicon: None, verb_clusters: None, frames: None };
        let big: BTreeSet<Family> = small.iter().chain(&more).copied().collect();
        let a = assemble_attributes(rec, &FeatureConfig::new(small.clone()), &res).unwrap();
        let b = assemble_attributes(rec, &FeatureConfig::new(big), &res).unwrap();
        prop_assert_eq!(a.len(), rec.len());
        prop_assert_eq!(b.len(), rec.len());
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            let na: BTreeSet<&str> = ra.iter().map(|(n, _)| n.as_str()).collect();
            let nb: BTreeSet<&str> = rb.iter().map(|(n, _)| n.as_str()).collect();
            prop_assert!(na.is_subset(&nb));
        }
    }
}

// ---------------------------------------------------------------- CRF

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posteriors_normalize(seed in any::<u64>(), order in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = rng.gen_range(1..=4);
        let keys = (0..3).map(|k| ObsKey {
            context: if k == 2 { LabelContext::Transition } else { LabelContext::Current },
            text: format!("o{k}"),
        });
        let mut m = CrfModel::new((0..l).map(|i| format!("y{i}")).collect(), keys, order, 10.0, TemplateSet::default()).unwrap();
        for w in &mut m.weights {
            *w = rng.gen_range(-5.0..5.0);
        }
        let offs: Vec<usize> = m.alphabet().values().copied().collect();
        let t = rng.gen_range(1..12);
        let mut seq = CompiledSeq::default();
        for _ in 0..t {
            seq.unigram.push(offs[..2].iter().copied().filter(|_| rng.gen_bool(0.5)).collect());
            seq.edge.push(if rng.gen_bool(0.5) { vec![offs[2]] } else { vec![] });
        }
        let y: Vec<usize> = (0..t).map(|_| rng.gen_range(0..l)).collect();
        let p = (sequence_score(&m, &seq, &y) - log_partition(&m, &seq)).exp();
        prop_assert!(p > 0.0 && p <= 1.0 + 1e-12);
        for row in marginals(&m, &seq) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}

// ---------------------------------------------------------------- eval

fn record_with(tags: Vec<Tag>) -> SentenceRecord {
    let mut r = SentenceRecord::from_tokens((0..tags.len()).map(|i| format!("t{i}")));
    r.labels = Some(tags);
    r
}

proptest! {
    #[test]
    fn micro_recall_is_exact(pairs in prop::collection::vec((tag_seq(), tag_seq()), 1..6)) {
        let (gold, pred): (Vec<Vec<Tag>>, Vec<Vec<Tag>>) = pairs
            .into_iter()
            .map(|(mut g, mut p)| {
                let n = g.len().max(p.len());
                g.resize(n, Tag::O);
                p.resize(n, Tag::O);
                (g, p)
            })
            .unzip();
        let report = phrase_prf(&gold, &pred).unwrap();
        for c in report.classes.iter().chain([&report.micro, &report.macro_avg]) {
            prop_assert!((0.0..=100.0).contains(&c.p) && (0.0..=100.0).contains(&c.r) && (0.0..=100.0).contains(&c.f));
            if c.p + c.r == 0.0 {
                prop_assert_eq!(c.f, 0.0);
            }
        }
        let m = &report.micro;
        if m.gold > 0 {
            prop_assert_eq!(m.r, 100.0 * m.correct as f64 / m.gold as f64);
        }
    }

    #[test]
    fn drop_target_keeps_everything_else(tags in prop::collection::vec(tag_seq(), 1..6)) {
        let recs: Vec<SentenceRecord> = tags.into_iter().map(record_with).collect();
        let dropped = drop_target(&recs);
        for (a, b) in recs.iter().zip(&dropped) {
            prop_assert_eq!(a.len(), b.len());
            let keep = |r: &SentenceRecord| -> Vec<LabelSpan> {
                iob_spans(r.labels.as_ref().unwrap()).into_iter().filter(|s| s.class != LabelClass::Target).collect()
            };
            prop_assert_eq!(keep(a), keep(b));
            prop_assert!(iob_spans(b.labels.as_ref().unwrap()).iter().all(|s| s.class != LabelClass::Target));
        }
    }

    #[test]
    fn explicit_selection_idempotent(tags in prop::collection::vec(tag_seq(), 0..8)) {
        let recs: Vec<SentenceRecord> = tags.into_iter().map(record_with).collect();
        let once = select_explicit(&recs);
        prop_assert_eq!(select_explicit(&once), once);
    }
}

// ---------------------------------------------------------------- MWE

fn mwe_record() -> impl Strategy<Value = SentenceRecord> {
    (tag_seq(), any::<u64>()).prop_map(|(tags, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words = ["we", "may", "be", "impaired", "John", "Smith", "Acme", "could", "fail"];
        let n = tags.len().max(1);
        let mut tags = tags;
        tags.resize(n, Tag::O);
        let mut r = SentenceRecord::from_tokens((0..n).map(|_| words.choose(&mut rng).unwrap().to_string()));
        let ner_spans: Vec<&str> = (0..n).map(|_| *["O", "O", "B-PERSON", "B-ORG", "B-LOC"].choose(&mut rng).unwrap()).collect();
        let mut ner: Vec<String> = Vec::with_capacity(n);
        for (i, t) in ner_spans.iter().enumerate() {
            if *t == "O" && i > 0 && ner[i - 1] != "O" && rng.gen_bool(0.5) {
                ner.push(format!("I-{}", &ner[i - 1][2..]));
            } else {
                ner.push(t.to_string());
            }
        }
        r.ner = Some(ner);
        r.lemmas = Some(r.tokens.iter().map(|t| t.to_lowercase()).collect());
        r.pos = Some(vec!["NN".to_string(); n]);
        r.labels = Some(tags);
        r.doc_id = Some(format!("acme_{}", 2000 + seed % 4));
        r
    })
}

proptest! {
    #[test]
    fn harvest_totals_match_spans(recs in prop::collection::vec(mwe_record(), 0..10)) {
        let table = harvest(&recs, None);
        for class in CLASSES {
            let decoded: usize = recs
                .iter()
                .map(|r| iob_spans(r.labels.as_ref().unwrap()).iter().filter(|s| s.class == class).count())
                .sum();
            let total: usize = table.class(class).map(|e| e.total_freq).sum();
            prop_assert_eq!(total, decoded);
        }
        for e in &table.entries {
            prop_assert!(e.doc_freq >= 1 && e.doc_freq <= e.total_freq && e.doc_freq <= table.documents.len());
            prop_assert_eq!(e.per_doc_freq.values().sum::<usize>(), e.total_freq);
            let all_classes: usize = table.entries.iter().filter(|o| o.text == e.text).map(|o| o.total_freq).sum();
            let (sentences, _) = cooccurrence(&recs, &["we", "john smith"], &e.text);
            prop_assert!(sentences <= all_classes);
        }
    }

    #[test]
    fn masking_keeps_alignment(rec in mwe_record()) {
        let mut masked = mask_entities(&rec).unwrap();
        let n = masked.len();
        for layer in [&masked.lemmas, &masked.pos, &masked.ner, &masked.chunks].into_iter().flatten() {
            prop_assert_eq!(layer.len(), n);
        }
        prop_assert_eq!(masked.labels.as_ref().unwrap().len(), n);
        prop_assert!(masked.validate().is_ok());
    }

    #[test]
    fn mwef_idf_monotone(f in 0usize..200, n in 1usize..100, extra in 0usize..100) {
        let cfg = MwefIdfConfig::default();
        let docs = n + extra;
        let w = mwef_idf(f, n, docs, &cfg).unwrap();
        prop_assert!(mwef_idf(f + 1, n, docs, &cfg).unwrap() >= w);
        if n < docs {
            prop_assert!(mwef_idf(f, n + 1, docs, &cfg).unwrap() <= w);
        }
        prop_assert_eq!(mwef_idf(0, n, docs, &cfg).unwrap(), 0.0);
        if f >= 1 {
            prop_assert!(mwef_idf(f, docs, docs, &cfg).unwrap() > 0.0);
        }
    }
}

// ---------------------------------------------------------------- econ

proptest! {
    #[test]
    fn sue_shift_and_scale(
        e in prop::collection::vec(-100.0f64..100.0, 4..12),
        shift in -1e3f64..1e3,
        scale in 0.01f64..100.0,
    ) {
        let Ok(base) = compute_sue(&e) else { return Ok(()); };
        let shifted: Vec<f64> = e.iter().map(|v| v + shift).collect();
        let scaled: Vec<f64> = e.iter().map(|v| v * scale).collect();
        for other in [compute_sue(&shifted).unwrap(), compute_sue(&scaled).unwrap()] {
            for (a, b) in base.iter().zip(&other) {
                match (a, b) {
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-6 * (1.0 + a.abs())),
                    (None, None) => {}
                    _ => prop_assert!(false, "definedness changed"),
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mlogit_base_relabel_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 150;
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(-2.0..2.0)]).collect();
        let y: Vec<i8> = x
            .iter()
            .map(|r| {
                let u: f64 = rng.gen::<f64>() + 0.15 * r[0];
                if u < 0.33 { -1 } else if u < 0.66 { 0 } else { 1 }
            })
            .collect();
        let cols = vec!["x".to_string()];
        let Ok(fit) = fit_mlogit(&x, &y, &cols, &MlogitConfig::default()) else { return Ok(()); };
        prop_assert!(fit.gradient_max_norm < 1e-8);
        // make the old -1 category the new base by swapping it with 0
        let swapped: Vec<i8> = y.iter().map(|&v| match v { -1 => 0, 0 => -1, o => o }).collect();
        let fit2 = fit_mlogit(&x, &swapped, &cols, &MlogitConfig::default()).unwrap();
        for r in &x {
            let p = fit.probabilities(r);
            let q = fit2.probabilities(r);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let gap = (p[0] - q[1]).abs().max((p[1] - q[0]).abs()).max((p[2] - q[2]).abs());
            prop_assert!(gap < 1e-10, "gap {:e}, gradients {:e} {:e}", gap, fit.gradient_max_norm, fit2.gradient_max_norm);
        }
        // transformed coefficients: new(-1) = -old(-1), new(+1) = old(+1) - old(-1)
        for j in 0..fit.k() {
            prop_assert!((fit2.coef(-1, j) + fit.coef(-1, j)).abs() < 1e-6);
            prop_assert!((fit2.coef(1, j) - (fit.coef(1, j) - fit.coef(-1, j))).abs() < 1e-6);
        }
    }
}
