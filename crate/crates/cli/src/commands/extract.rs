use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde_json::Value;
use webrec::annotations::{predictions_to_json, PagePrediction};
use webrec::dom::DomTree;
use webrec::extract::{mdr_extract, ExtractError, LlmClient, LlmConfig, MdrParams, PromptTemplate};
use webrec::represent::{estimate_tokens, render, Representation};

use crate::store::{write_atomic, Store};
use crate::{ExtractArgs, MdrInput, MethodArg, Outcome};

/// `preds.json` for a single run, `preds.run1.json`, `preds.run2.json`, ...
/// otherwise.
pub fn run_path(out: &Path, run: u32, runs: u32) -> PathBuf {
    if runs == 1 {
        return out.to_path_buf();
    }
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.run{run}.{}", ext.to_string_lossy()),
        None => format!("{stem}.run{run}"),
    };
    out.with_file_name(name)
}

fn mdr_page(
    store: &Store,
    id: &str,
    params: &MdrParams,
    input: MdrInput,
) -> Result<PagePrediction> {
    let (tree, label) = match input {
        MdrInput::Full => (store.full_tree(id)?, "full_html"),
        MdrInput::Slim => (store.slim_tree(id)?, "slimmed_html"),
    };
    let mut set = mdr_extract(&tree, params);
    set.meta.insert("input_type".into(), label.into());
    set.meta
        .insert("params".into(), serde_json::to_value(params)?);
    Ok(PagePrediction::Available(set))
}

fn representation(args: &ExtractArgs, tree: &DomTree) -> Result<Representation> {
    let opts = args.render.options();
    let kind = args.format.kind();
    match &args.reps {
        None => Ok(render(tree, kind, &opts)),
        Some(dir) => {
            let path = dir.join(format!("{}.{}", tree.page_id(), kind.file_suffix()));
            let payload = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            Ok(Representation {
                kind,
                token_estimate: estimate_tokens(&payload, &opts.tokenizer),
                payload,
                page_id: tree.page_id().to_string(),
            })
        }
    }
}

fn llm_page(
    store: &Store,
    id: &str,
    client: &LlmClient,
    args: &ExtractArgs,
) -> Result<PagePrediction> {
    let tree = store.slim_tree(id)?;
    let rep = representation(args, &tree)?;
    Ok(match client.extract(&rep, &tree) {
        Ok(set) => PagePrediction::Available(set),
        Err(e) => {
            let attempts = match &e {
                ExtractError::Transport { attempts, .. } => *attempts,
                _ => 1,
            };
            log::warn!("page {id}: no prediction: {e}");
            PagePrediction::Unavailable {
                page_id: id.to_string(),
                extractor: "llm".into(),
                reason: e.to_string(),
                meta: client.meta(rep.kind, attempts),
            }
        }
    })
}

fn llm_client(args: &ExtractArgs) -> Result<LlmClient> {
    let template = match &args.template {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            PromptTemplate::new(text)?
        }
        None => PromptTemplate::default(),
    };
    let config = LlmConfig {
        endpoint_url: args.endpoint.clone(),
        model: args.model.clone(),
        temperature: args.temperature,
        api_key_env: args.api_key_env.clone(),
        max_retries: args.max_retries,
        timeout: args.timeout,
        representation_kind: args.format.kind(),
        max_concurrent: args.max_concurrent,
        backoff_ms: args.backoff_ms,
    };
    Ok(LlmClient::new(config, template)?)
}

pub fn run(args: &ExtractArgs) -> Result<Outcome> {
    let store = Store::open(&args.store)?;
    let ids: Vec<&str> = store.page_ids().collect();
    let params = MdrParams {
        max_gnode_len: args.mdr_k,
        similarity_threshold: args.mdr_threshold,
        min_region_records: args.mdr_min_records,
    };
    let client = match args.method {
        MethodArg::Mdr => {
            params.validate()?;
            None
        }
        MethodArg::Llm => Some(llm_client(args)?),
    };

    let mut unavailable = 0;
    for run in 1..=args.runs {
        let results: Vec<Result<PagePrediction>> = ids
            .par_iter()
            .map(|id| match &client {
                None => mdr_page(&store, id, &params, args.mdr_input),
                Some(client) => llm_page(&store, id, client, args),
            })
            .collect();
        let mut preds = Vec::with_capacity(results.len());
        for (id, result) in ids.iter().zip(results) {
            match result {
                Ok(mut p) => {
                    if let PagePrediction::Available(set) = &mut p {
                        if args.runs > 1 {
                            set.meta.insert("run".into(), Value::from(run));
                        }
                    }
                    if matches!(p, PagePrediction::Unavailable { .. }) {
                        unavailable += 1;
                    }
                    preds.push(p);
                }
                Err(e) => {
                    log::warn!("skipping page {id}: {e:#}");
                    unavailable += 1;
                }
            }
        }
        let path = run_path(&args.out, run, args.runs);
        write_atomic(&path, predictions_to_json(&preds).as_bytes())?;
        let available = preds
            .iter()
            .filter(|p| matches!(p, PagePrediction::Available(_)))
            .count();
        println!(
            "run {run}: {available}/{} page(s) predicted -> {}",
            ids.len(),
            path.display()
        );
    }
    Ok(Outcome::from_skipped(unavailable))
}
