use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use webrec::annotations::{annotations_to_json, load_annotations, PageAnnotation};
use webrec::synth::{synthesize_page, SynthConfig, SynthOp};

use crate::store::{
    write_atomic, write_json, write_page, Manifest, ManifestEntry, PageMeta, Store, MANIFEST,
};
use crate::{Outcome, SynthArgs};

pub const TRANSFORM_LOG: &str = "transform_log.json";
pub const ANNOTATIONS: &str = "annotations.json";

fn synth_one(
    store: &Store,
    args: &SynthArgs,
    ann: &PageAnnotation,
    config: &SynthConfig,
) -> Result<PageAnnotation> {
    let id = ann.page_id.as_str();
    let tree = store.full_tree(id)?;
    let (out, new_ann, log) = synthesize_page(&tree, ann, config)?;
    let source = store.meta(id).map(|m| m.source).unwrap_or_default();
    let meta = PageMeta {
        page_id: id.to_string(),
        source,
        source_url: None,
        resource_count: 0,
        element_count: out.ids().count(),
        text_node_count: out.text_nodes().len(),
    };
    write_page(&args.out, &out, &meta)?;
    write_json(&args.out.join(id).join(TRANSFORM_LOG), &log)?;
    Ok(new_ann)
}

pub fn run(args: &SynthArgs) -> Result<Outcome> {
    let ops = args
        .ops
        .iter()
        .map(|s| s.trim().parse::<SynthOp>().map_err(anyhow::Error::msg))
        .collect::<Result<Vec<_>>>()?;
    let config = SynthConfig::with_ops(args.seed, ops, args.probability);
    config.validate()?;
    if args.out == args.store {
        bail!("--out must differ from --store");
    }
    let store = Store::open(&args.store)?;
    let gold: BTreeMap<String, PageAnnotation> = load_annotations(&args.gold)
        .with_context(|| format!("loading {}", args.gold.display()))?
        .into_iter()
        .map(|a| (a.page_id.clone(), a))
        .collect();

    let ids: Vec<&str> = store.page_ids().collect();
    let results: Vec<Result<PageAnnotation>> = ids
        .par_iter()
        .map(|id| match gold.get(*id) {
            None => bail!("no ground truth"),
            Some(ann) => synth_one(&store, args, ann, &config),
        })
        .collect();

    let mut manifest = Manifest::default();
    let mut anns = Vec::new();
    let mut skipped = 0;
    for (id, result) in ids.iter().zip(results) {
        match result {
            Ok(ann) => {
                manifest.pages.push(ManifestEntry {
                    page_id: id.to_string(),
                    source: store.page_dir(id).display().to_string(),
                });
                anns.push(ann);
            }
            Err(e) => {
                log::warn!("skipping page {id}: {e:#}");
                skipped += 1;
            }
        }
    }
    write_json(&args.out.join(MANIFEST), &manifest)?;
    write_atomic(
        &args.out.join(ANNOTATIONS),
        annotations_to_json(&anns).as_bytes(),
    )?;
    println!(
        "synthesized {} page(s) into {} (seed {}, {} skipped)",
        anns.len(),
        args.out.display(),
        args.seed,
        skipped
    );
    Ok(Outcome::from_skipped(skipped))
}
