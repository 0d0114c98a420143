mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use webrec::annotations::{
    annotations_to_json, parse_annotations, DataRecord, PageAnnotation, PredictionSet,
};
use webrec::dom::{CleanConfig, DomTree, ElementNode, Step, XPath};
use webrec::eval::overlap;
use webrec::eval::page_metrics;
use webrec::extract::llm::Candidate;
use webrec::extract::{mdr_extract, validate_predicted_records, MdrParams};
use webrec::represent::{
    estimate_tokens, flat_map, hierarchical_value, render, FlatStyle, RenderOptions,
    RepresentationKind, TokenizerSpec,
};

const TAGS: &[&str] = &["div", "span", "section", "em", "b", "ul", "article"];
const TEXTS: &[&str] = &[
    "",
    "",
    "alpha",
    "Beta gamma",
    "$12.50",
    "3 < 4 & 5",
    "naïve café",
    "x",
];

fn element() -> impl Strategy<Value = ElementNode> {
    let leaf = (0..TAGS.len(), 0..TEXTS.len())
        .prop_map(|(t, x)| ElementNode::new(TAGS[t]).with_text(TEXTS[x]));
    leaf.prop_recursive(5, 48, 5, |inner| {
        (
            0..TAGS.len(),
            0..TEXTS.len(),
            prop::collection::vec(inner, 0..5),
        )
            .prop_map(|(t, x, kids)| {
                ElementNode::new(TAGS[t])
                    .with_text(TEXTS[x])
                    .with_children(kids)
            })
    })
}

fn page() -> impl Strategy<Value = DomTree> {
    prop::collection::vec(element(), 1..4).prop_map(|kids| {
        let root =
            ElementNode::new("html").with_child(ElementNode::new("body").with_children(kids));
        DomTree::from_element("p", root)
    })
}

fn text_map(tree: &DomTree) -> BTreeMap<String, String> {
    tree.text_nodes()
        .into_iter()
        .map(|(x, t)| (x.to_string(), t.to_string()))
        .collect()
}

fn record(ids: &[u8]) -> DataRecord {
    ids.iter()
        .map(|i| XPath::new(vec![Step::new("p", u32::from(*i) + 1)]))
        .collect()
}

fn records() -> impl Strategy<Value = Vec<DataRecord>> {
    prop::collection::vec(prop::collection::vec(0u8..10, 0..5), 0..6)
        .prop_map(|rs| rs.iter().map(|r| record(r)).collect())
}

fn gold_records() -> impl Strategy<Value = Vec<DataRecord>> {
    prop::collection::vec(prop::collection::vec(0u8..10, 1..5), 1..6)
        .prop_map(|rs| rs.iter().map(|r| record(r)).collect())
}

fn score(p: &[DataRecord], g: &[DataRecord]) -> (f64, f64, f64, u8) {
    let mut pred = PredictionSet::new("p", "t");
    pred.records = p.to_vec();
    let ann = PageAnnotation {
        page_id: "p".into(),
        records: g.to_vec(),
    };
    let m = page_metrics(&pred, &ann).unwrap();
    (m.precision, m.recall, m.f1, m.hallucination_event)
}

fn close(a: (f64, f64, f64, u8), b: (f64, f64, f64, u8)) -> bool {
    (a.0 - b.0).abs() < 1e-12
        && (a.1 - b.1).abs() < 1e-12
        && (a.2 - b.2).abs() < 1e-12
        && a.3 == b.3
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonical_paths_round_trip(tree in page()) {
        for id in tree.ids() {
            prop_assert_eq!(tree.resolve(&tree.canonical_xpath(id)).unwrap(), id);
        }
    }

    #[test]
    fn cleaning_is_idempotent(tree in page()) {
        let again = DomTree::parse("p", &tree.to_html(true), CleanConfig::full()).unwrap();
        prop_assert_eq!(text_map(&again), text_map(&tree));
        let slim = DomTree::parse("p", &again.to_html(false), CleanConfig::default()).unwrap();
        prop_assert_eq!(text_map(&slim), text_map(&tree));
    }

    #[test]
    fn text_nodes_are_ordered_and_resolve(tree in page()) {
        let nodes = tree.text_nodes();
        let ids: Vec<_> = nodes.iter().map(|(x, _)| tree.resolve(x).unwrap()).collect();
        prop_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        for ((_, text), id) in nodes.iter().zip(&ids) {
            prop_assert_eq!(tree.text(*id), *text);
            prop_assert!(!text.is_empty());
        }
    }

    #[test]
    fn hierarchical_flattens_to_flat(tree in page()) {
        let flat: BTreeMap<String, String> = flat_map(&tree, FlatStyle::Indexed).into_iter().collect();
        prop_assert_eq!(common::flatten_hierarchical(&hierarchical_value(&tree)), flat);
    }

    #[test]
    fn flat_keys_resolve_in_both_styles(tree in page()) {
        for style in [FlatStyle::Indexed, FlatStyle::Compact] {
            for (k, text) in flat_map(&tree, style) {
                let id = tree.resolve(&k.parse().unwrap()).unwrap();
                prop_assert_eq!(tree.text(id), text.as_str());
            }
        }
    }

    #[test]
    fn rendering_is_deterministic(tree in page()) {
        for kind in RepresentationKind::ALL {
            let a = render(&tree, kind, &RenderOptions::default());
            let b = render(&tree.clone(), kind, &RenderOptions::default());
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn appending_never_lowers_token_estimates(a in ".{0,40}", b in ".{0,40}") {
        for spec in [TokenizerSpec::default(), TokenizerSpec::whitespace_punct()] {
            let joined = a.clone() + &b;
            prop_assert!(estimate_tokens(&joined, &spec) >= estimate_tokens(&a, &spec));
        }
    }

    #[test]
    fn annotation_files_round_trip(g in prop::collection::vec(gold_records(), 1..4)) {
        let pages: Vec<PageAnnotation> = g
            .into_iter()
            .enumerate()
            .map(|(i, records)| PageAnnotation { page_id: format!("page-{i}"), records })
            .collect();
        let text = annotations_to_json(&pages);
        let back = parse_annotations(&text).unwrap();
        prop_assert_eq!(&back, &pages);
        prop_assert_eq!(annotations_to_json(&back), text);
    }

    #[test]
    fn mdr_output_is_sound(tree in page()) {
        let pred = mdr_extract(&tree, &MdrParams::default());
        prop_assert_eq!(&pred, &mdr_extract(&tree, &MdrParams::default()));
        for r in &pred.records {
            prop_assert!(!r.is_empty());
            for x in r {
                prop_assert!(tree.is_text_bearing(tree.resolve(x).unwrap()));
            }
        }
    }

    #[test]
    fn validation_only_shrinks_records(tree in page(), picks in prop::collection::vec(prop::collection::vec((0usize..64, any::<bool>()), 0..5), 0..5)) {
        let all: Vec<_> = tree.ids().collect();
        let cands: Vec<Vec<Candidate>> = picks
            .iter()
            .map(|r| r.iter().map(|&(i, fake)| {
                let x = tree.canonical_xpath(all[i % all.len()]);
                if fake { Candidate::Path(x.child("blink", 9)) } else { Candidate::Path(x) }
            }).collect())
            .collect();
        let set = validate_predicted_records(&cands, &tree);
        prop_assert_eq!(set.records.len(), cands.len());
        for (r, c) in set.records.iter().zip(&cands) {
            prop_assert!(r.len() <= c.len());
            let kept: DataRecord = c
                .iter()
                .filter_map(|c| match c {
                    Candidate::Path(x) if tree.resolve(x).is_ok_and(|id| tree.is_text_bearing(id)) => Some(x.clone()),
                    _ => None,
                })
                .collect();
            prop_assert!(r.iter().eq(kept.iter()));
        }
    }

    #[test]
    fn overlap_is_a_similarity(a in prop::collection::vec(0u8..8, 0..6), b in prop::collection::vec(0u8..8, 0..6)) {
        let (a, b) = (record(&a), record(&b));
        let o = overlap(&a, &b);
        prop_assert_eq!(o, overlap(&b, &a));
        prop_assert!((0.0..=1.0).contains(&o));
        prop_assert_eq!(o == 1.0, a == b && !a.is_empty());
        prop_assert_eq!(o == 0.0, a.intersection_len(&b) == 0);
    }

    #[test]
    fn metrics_are_bounded(p in records(), g in gold_records()) {
        let (pr, rc, f1, _) = score(&p, &g);
        for v in [pr, rc, f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn record_order_does_not_matter(p in records(), g in gold_records(), seed in any::<u64>()) {
        let mut rng = webrec::synth::rng::SplitMix64::new(seed);
        let (mut p2, mut g2) = (p.clone(), g.clone());
        rng.shuffle(&mut p2);
        rng.shuffle(&mut g2);
        prop_assert!(close(score(&p, &g), score(&p2, &g2)));
    }

    #[test]
    fn empty_record_lowers_precision_only(p in records(), g in gold_records()) {
        let before = score(&p, &g);
        prop_assume!(before.0 > 0.0);
        let mut more = p.clone();
        more.push(DataRecord::new());
        let after = score(&more, &g);
        prop_assert!(after.0 < before.0);
        prop_assert!((after.1 - before.1).abs() < 1e-12);
        prop_assert_eq!(after.3, 1);
    }

    #[test]
    fn relabelling_xpaths_does_not_matter(p in records(), g in gold_records(), seed in any::<u64>()) {
        let mut rng = webrec::synth::rng::SplitMix64::new(seed);
        let mut perm: Vec<u8> = (0..10).collect();
        rng.shuffle(&mut perm);
        let relabel = |rs: &[DataRecord]| -> Vec<DataRecord> {
            rs.iter()
                .map(|r| r.iter().map(|x| {
                    let i = x.steps()[0].index as usize - 1;
                    XPath::new(vec![Step::new("q", u32::from(perm[i]) + 1)])
                }).collect())
                .collect()
        };
        prop_assert!(close(score(&p, &g), score(&relabel(&p), &relabel(&g))));
    }
}

#[test]
fn unindexed_steps_normalize() {
    let a: XPath = "/html/body/ul/li[2]/span".parse().unwrap();
    let b: XPath = "/html[1]/body[1]/ul[1]/li[2]/span[1]".parse().unwrap();
    assert_eq!(a, b);
}
