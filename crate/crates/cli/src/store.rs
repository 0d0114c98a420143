//! Page store layout:
//!
//! ```text
//! <store>/manifest.json
//! <store>/<page_id>/slim.html
//! <store>/<page_id>/full.html
//! <store>/<page_id>/meta.json
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use webrec::dom::{CleanConfig, DomTree};

pub const MANIFEST: &str = "manifest.json";
pub const SLIM: &str = "slim.html";
pub const FULL: &str = "full.html";
pub const META: &str = "meta.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub page_id: String,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub source: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub pages: Vec<ManifestEntry>,
    #[serde(default)]
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageMeta {
    pub page_id: String,
    pub source: String,
    pub source_url: Option<String>,
    pub resource_count: usize,
    pub element_count: usize,
    pub text_node_count: usize,
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Turns a file stem into a directory-safe page id.
pub fn sanitize_id(stem: &str) -> String {
    let id: String = stem
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect();
    let id = id.trim_start_matches('.');
    if id.is_empty() {
        "page".into()
    } else {
        id.to_string()
    }
}

/// Assigns ids from file stems in order, suffixing `-2`, `-3`, ... on clashes.
pub fn assign_ids<'a>(stems: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut taken = BTreeSet::new();
    stems
        .into_iter()
        .map(|stem| {
            let base = sanitize_id(stem);
            let mut id = base.clone();
            let mut n = 1;
            while !taken.insert(id.clone()) {
                n += 1;
                id = format!("{base}-{n}");
            }
            id
        })
        .collect()
}

pub struct Store {
    root: PathBuf,
    pub manifest: Manifest,
}

impl Store {
    pub fn open(root: &Path) -> Result<Store> {
        let path = root.join(MANIFEST);
        if !path.exists() {
            bail!("{} is not a page store (no {MANIFEST})", root.display());
        }
        Ok(Store {
            root: root.to_path_buf(),
            manifest: read_json(&path)?,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn page_ids(&self) -> impl Iterator<Item = &str> {
        self.manifest.pages.iter().map(|p| p.page_id.as_str())
    }

    pub fn page_dir(&self, page_id: &str) -> PathBuf {
        self.root.join(page_id)
    }

    pub fn read_html(&self, page_id: &str, file: &str) -> Result<String> {
        let path = self.page_dir(page_id).join(file);
        fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))
    }

    /// The cleaned tree without attributes.
    pub fn slim_tree(&self, page_id: &str) -> Result<DomTree> {
        Ok(DomTree::parse(
            page_id,
            &self.read_html(page_id, SLIM)?,
            CleanConfig::default(),
        )?)
    }

    /// The cleaned tree with attributes.
    pub fn full_tree(&self, page_id: &str) -> Result<DomTree> {
        Ok(DomTree::parse(
            page_id,
            &self.read_html(page_id, FULL)?,
            CleanConfig::full(),
        )?)
    }

    pub fn meta(&self, page_id: &str) -> Result<PageMeta> {
        read_json(&self.page_dir(page_id).join(META))
    }
}

/// Writes one page directory from its attribute-preserving tree.
pub fn write_page(root: &Path, full: &DomTree, meta: &PageMeta) -> Result<()> {
    let dir = root.join(&meta.page_id);
    let slim = DomTree::parse(full.page_id(), &full.to_html(false), CleanConfig::default())?;
    write_atomic(&dir.join(FULL), full.to_html(true).as_bytes())?;
    write_atomic(&dir.join(SLIM), slim.to_html(false).as_bytes())?;
    write_json(&dir.join(META), meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_collision_suffixed() {
        assert_eq!(
            assign_ids(["shop", "shop", "a b", "shop"]),
            vec!["shop", "shop-2", "a_b", "shop-3"]
        );
        assert_eq!(sanitize_id("..x"), "x");
        assert_eq!(sanitize_id(""), "page");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/f.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path().join("sub")).unwrap().count(), 1);
    }
}
