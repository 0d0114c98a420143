mod common;

use std::collections::BTreeMap;

use common::flatten_hierarchical;
use webrec::dom::{CleanConfig, DomTree};
use webrec::eval::page_metrics;
use webrec::extract::{mdr_extract, MdrParams};
use webrec::represent::{flat_map, hierarchical_value, render, RenderOptions, RepresentationKind};
use webrec::synth::{generate_listing_page, synthesize_page, ListingSpec, SynthConfig};

fn generated(records: usize, seed: u64) -> (DomTree, webrec::PageAnnotation) {
    let (html, ann) = generate_listing_page(&ListingSpec::new(
        format!("gen-{records}-{seed}"),
        records,
        seed,
    ));
    (
        DomTree::parse(ann.page_id.clone(), &html, CleanConfig::full()).unwrap(),
        ann,
    )
}

#[test]
fn mdr_recovers_every_generated_listing() {
    for k in [2, 5, 20, 100] {
        let (tree, ann) = generated(k, k as u64);
        let pred = mdr_extract(&tree, &MdrParams::default());
        let m = page_metrics(&pred, &ann).unwrap();
        assert_eq!(
            (m.precision, m.recall, m.f1, m.hallucination_event),
            (1.0, 1.0, 1.0, 0),
            "k = {k}"
        );
        assert_eq!(pred.records.len(), k);
    }
}

#[test]
fn synthetic_pages_round_trip() {
    for seed in 0..100u64 {
        let (tree, ann) = generated(2 + (seed % 7) as usize, seed);
        let (tree, _, _) = synthesize_page(
            &tree,
            &ann,
            &SynthConfig {
                seed,
                ..SynthConfig::default()
            },
        )
        .unwrap();
        for id in tree.ids() {
            assert_eq!(tree.resolve(&tree.canonical_xpath(id)).unwrap(), id);
        }
        let flat = flat_map(&tree, Default::default());
        for (k, text) in &flat {
            assert_eq!(tree.text(tree.resolve(&k.parse().unwrap()).unwrap()), text);
        }
        let flat: BTreeMap<_, _> = flat.into_iter().collect();
        assert_eq!(
            flatten_hierarchical(&hierarchical_value(&tree)),
            flat,
            "seed {seed}"
        );
    }
}

#[test]
fn token_ordering_on_large_deep_pages() {
    for (records, seed) in [(50, 1), (80, 2), (120, 3)] {
        let (tree, _) = generated(records, seed);
        let slim =
            DomTree::parse(tree.page_id(), &tree.to_html(false), CleanConfig::default()).unwrap();
        let max_depth = slim.ids().map(|id| slim.depth(id)).max().unwrap();
        assert!(max_depth >= 6);
        let est = |kind| render(&slim, kind, &RenderOptions::default()).token_estimate;
        let (hier, slim_t, flat) = (
            est(RepresentationKind::HierarchicalJson),
            est(RepresentationKind::SlimmedHtml),
            est(RepresentationKind::FlatJson),
        );
        assert!(hier < slim_t && slim_t < flat, "{hier} {slim_t} {flat}");
    }
}
