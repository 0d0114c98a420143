use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use webrec::dom::{parse_mhtml, CleanConfig, DomTree, RawPage};

use crate::store::{
    assign_ids, write_json, write_page, Failure, Manifest, ManifestEntry, PageMeta, MANIFEST,
};
use crate::{IngestArgs, Outcome};

const ARCHIVE_EXT: &[&str] = &["mhtml", "mht"];
const HTML_EXT: &[&str] = &["html", "htm"];

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

fn is_input(path: &Path) -> bool {
    let ext = extension(path);
    ARCHIVE_EXT.contains(&ext.as_str()) || HTML_EXT.contains(&ext.as_str())
}

fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .with_context(|| format!("listing {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && is_input(p))
                .collect();
            found.sort();
            files.extend(found);
        } else if input.is_file() {
            files.push(input.clone());
        } else {
            bail!("{} does not exist", input.display());
        }
    }
    Ok(files)
}

fn ingest_one(page_id: &str, path: &Path, args: &IngestArgs) -> Result<()> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let raw = if HTML_EXT.contains(&extension(path).as_str()) {
        RawPage {
            page_id: page_id.to_string(),
            html: String::from_utf8_lossy(&bytes).into_owned(),
            source_url: None,
            resource_count: 0,
        }
    } else {
        parse_mhtml(page_id, &bytes)?
    };
    let config = CleanConfig {
        keep_head: !args.drop_head,
        ..CleanConfig::full()
    };
    let full = DomTree::parse(page_id, &raw.html, config)?;
    let meta = PageMeta {
        page_id: page_id.to_string(),
        source: path.display().to_string(),
        source_url: raw.source_url.clone(),
        resource_count: raw.resource_count,
        element_count: full.ids().count(),
        text_node_count: full.text_nodes().len(),
    };
    write_page(&args.out, &full, &meta)
}

pub fn run(args: &IngestArgs) -> Result<Outcome> {
    let files = collect_inputs(&args.input)?;
    if files.is_empty() {
        bail!("no .mhtml, .mht, .html or .htm files found");
    }
    let stems: Vec<String> = files
        .iter()
        .map(|f| {
            f.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
        .collect();
    let ids = assign_ids(stems.iter().map(String::as_str));
    let results: Vec<Result<()>> = ids
        .par_iter()
        .zip(files.par_iter())
        .map(|(id, path)| ingest_one(id, path, args))
        .collect();

    let mut manifest = Manifest::default();
    for ((id, path), result) in ids.iter().zip(&files).zip(results) {
        let source = path.display().to_string();
        match result {
            Ok(()) => manifest.pages.push(ManifestEntry {
                page_id: id.clone(),
                source,
            }),
            Err(e) => {
                log::warn!("skipping {source}: {e:#}");
                manifest.failures.push(Failure {
                    source,
                    error: format!("{e:#}"),
                });
            }
        }
    }
    write_json(&args.out.join(MANIFEST), &manifest)?;
    println!(
        "ingested {} page(s) into {} ({} failed)",
        manifest.pages.len(),
        args.out.display(),
        manifest.failures.len()
    );
    Ok(Outcome::from_skipped(manifest.failures.len()))
}
