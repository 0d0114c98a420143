//! Mining Data Records: repeated sibling structures found by edit distance
//! over generalized nodes.

use serde::{Deserialize, Serialize};

use super::ExtractError;
use crate::annotations::{DataRecord, PredictionSet};
use crate::dom::{DomTree, NodeId, XPath};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdrParams {
    /// Longest generalized node, in siblings.
    pub max_gnode_len: usize,
    /// Generalized nodes match when their distance is at most `1 - T`.
    pub similarity_threshold: f64,
    pub min_region_records: usize,
}

impl Default for MdrParams {
    fn default() -> Self {
        MdrParams {
            max_gnode_len: 10,
            similarity_threshold: 0.7,
            min_region_records: 2,
        }
    }
}

impl MdrParams {
    pub fn validate(&self) -> Result<(), ExtractError> {
        if self.max_gnode_len == 0 {
            return Err(ExtractError::InvalidParams(
                "max_gnode_len must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.similarity_threshold) {
            return Err(ExtractError::InvalidParams(format!(
                "similarity_threshold {} outside [0, 1]",
                self.similarity_threshold
            )));
        }
        if self.min_region_records == 0 {
            return Err(ExtractError::InvalidParams(
                "min_region_records must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataRegion {
    pub parent: XPath,
    /// 1-based index into the parent's children.
    pub start_child: usize,
    pub gnode_len: usize,
    pub gnode_count: usize,
}

/// Levenshtein distance divided by the longer length; 0 for two empty inputs.
pub fn normalized_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()] as f64 / longest as f64
}

#[derive(Debug, Clone, Copy)]
struct Region {
    parent: NodeId,
    start: usize,
    gnode_len: usize,
    count: usize,
}

impl Region {
    fn end(&self) -> usize {
        self.start + self.gnode_len * self.count
    }
}

struct Miner<'a> {
    tree: &'a DomTree,
    params: MdrParams,
    heights: Vec<usize>,
    regions: Vec<Region>,
}

impl Miner<'_> {
    fn encode(&self, nodes: &[NodeId]) -> Vec<&str> {
        nodes
            .iter()
            .flat_map(|&n| self.tree.descendants(n).map(|d| self.tree.tag(d)))
            .collect()
    }

    fn similar(&self, a: &[&str], b: &[&str]) -> bool {
        let max_dist = 1.0 - self.params.similarity_threshold + 1e-12;
        let longest = a.len().max(b.len()) as f64;
        if longest > 0.0 && a.len().abs_diff(b.len()) as f64 / longest > max_dist {
            return false;
        }
        normalized_edit_distance(a, b) <= max_dist
    }

    fn mine(&mut self, node: NodeId) {
        let found = if self.heights[node.index()] >= 3 {
            self.regions_at(node)
        } else {
            Vec::new()
        };
        let kids = self.tree.children(node);
        for (k, &child) in kids.iter().enumerate() {
            if !found.iter().any(|r| (r.start..r.end()).contains(&k)) {
                self.mine(child);
            }
        }
        self.regions.extend(found);
    }

    fn regions_at(&self, parent: NodeId) -> Vec<Region> {
        let kids = self.tree.children(parent);
        let n = kids.len();
        let min_count = self.params.min_region_records.max(2);
        let mut candidates = Vec::new();
        for g in 1..=self.params.max_gnode_len {
            if 2 * g > n {
                break;
            }
            for phase in 0..g {
                let gnodes: Vec<Vec<&str>> = kids[phase..]
                    .chunks_exact(g)
                    .map(|c| self.encode(c))
                    .collect();
                let mut run_start = 0;
                for k in 1..=gnodes.len() {
                    if k < gnodes.len() && self.similar(&gnodes[k - 1], &gnodes[k]) {
                        continue;
                    }
                    let count = k - run_start;
                    if count >= min_count {
                        candidates.push(Region {
                            parent,
                            start: phase + run_start * g,
                            gnode_len: g,
                            count,
                        });
                    }
                    run_start = k;
                }
            }
        }
        candidates.sort_by_key(|r| (r.gnode_len, r.start));
        let mut chosen: Vec<Region> = Vec::new();
        for c in candidates {
            if chosen
                .iter()
                .all(|r| c.end() <= r.start || r.end() <= c.start)
            {
                chosen.push(c);
            }
        }
        chosen.sort_by_key(|r| r.start);
        chosen
    }
}

fn mine_regions(tree: &DomTree, params: &MdrParams) -> Vec<Region> {
    let mut miner = Miner {
        tree,
        params: *params,
        heights: tree.heights(),
        regions: Vec::new(),
    };
    miner.mine(tree.root());
    let mut regions = miner.regions;
    regions.sort_by_key(|r| tree.children(r.parent)[r.start]);
    regions
}

/// Data regions in document order.
pub fn find_data_regions(tree: &DomTree, params: &MdrParams) -> Vec<DataRegion> {
    mine_regions(tree, params)
        .into_iter()
        .map(|r| DataRegion {
            parent: tree.canonical_xpath(r.parent),
            start_child: r.start + 1,
            gnode_len: r.gnode_len,
            gnode_count: r.count,
        })
        .collect()
}

/// One record per generalized node, holding the paths of its text-bearing
/// nodes. Generalized nodes without text produce no record.
pub fn mdr_extract(tree: &DomTree, params: &MdrParams) -> PredictionSet {
    let mut set = PredictionSet::new(tree.page_id(), "mdr");
    for r in mine_regions(tree, params) {
        let kids = &tree.children(r.parent)[r.start..r.end()];
        for gnode in kids.chunks_exact(r.gnode_len) {
            let record: DataRecord = gnode
                .iter()
                .flat_map(|&n| tree.text_bearing_in(n))
                .map(|n| tree.canonical_xpath(n))
                .collect();
            if !record.is_empty() {
                set.records.push(record);
            }
        }
    }
    set.meta.insert(
        "params".into(),
        serde_json::to_value(params).expect("params always serialize"),
    );
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::CleanConfig;

    fn tree(html: &str) -> DomTree {
        DomTree::parse("t", html, CleanConfig::default()).unwrap()
    }

    fn dp_oracle(a: &[&str], b: &[&str]) -> usize {
        // full-table Levenshtein
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let c = usize::from(a[i - 1] != b[j - 1]);
                d[i][j] = (d[i - 1][j] + 1)
                    .min(d[i][j - 1] + 1)
                    .min(d[i - 1][j - 1] + c);
            }
        }
        d[a.len()][b.len()]
    }

    #[test]
    fn edit_distance_examples() {
        assert_eq!(
            normalized_edit_distance(&["li", "span"], &["li", "span"]),
            0.0
        );
        assert_eq!(normalized_edit_distance(&["li", "span"], &["li", "a"]), 0.5);
        assert_eq!(normalized_edit_distance::<&str>(&[], &["div"]), 1.0);
        assert_eq!(normalized_edit_distance::<&str>(&[], &[]), 0.0);
        let a = ["div", "span", "a", "img", "span"];
        let b = ["div", "a", "span", "span"];
        assert_eq!(
            normalized_edit_distance(&a, &b),
            dp_oracle(&a, &b) as f64 / 5.0
        );
    }

    const THREE_LI: &str = "<html><body><ul>\
        <li><span>A</span><span>$1</span></li>\
        <li><span>B</span><span>$2</span></li>\
        <li><span>C</span><span>$3</span></li></ul></body></html>";

    #[test]
    fn three_identical_items() {
        let t = tree(THREE_LI);
        let regions = find_data_regions(&t, &MdrParams::default());
        assert_eq!(
            regions,
            vec![DataRegion {
                parent: "/html[1]/body[1]/ul[1]".parse().unwrap(),
                start_child: 1,
                gnode_len: 1,
                gnode_count: 3,
            }]
        );
        let set = mdr_extract(&t, &MdrParams::default());
        assert_eq!(set.records.len(), 3);
        assert!(set.records.iter().all(|r| r.len() == 2));
        assert_eq!(set.extractor, "mdr");
    }

    #[test]
    fn fig1_two_records() {
        let t = tree("<html><body><ul><li><span>Sample Product</span></li><li><span>$999.00</span></li></ul></body></html>");
        let set = mdr_extract(&t, &MdrParams::default());
        assert_eq!(set.records.len(), 2);
        assert!(set.records.iter().all(|r| r.len() == 1));
    }

    #[test]
    fn table_rows_form_one_region() {
        let t = tree("<table><tr><td>Camera</td><td>$399</td></tr><tr><td>Laptop</td><td>$899</td></tr></table>");
        let regions = find_data_regions(&t, &MdrParams::default());
        assert_eq!(regions.len(), 1);
        assert_eq!((regions[0].gnode_len, regions[0].gnode_count), (1, 2));
    }

    #[test]
    fn dissimilar_siblings() {
        let t = tree("<div><p><b>x</b></p><ul><li>a</li><li><i>b</i></li></ul><table><tr><td>c</td></tr></table></div>");
        assert!(find_data_regions(&t, &MdrParams::default()).is_empty());
        assert!(mdr_extract(&t, &MdrParams::default()).records.is_empty());
    }

    #[test]
    fn pairs_of_siblings_become_generalized_nodes() {
        let t = tree(
            "<div><section>\
             <h3>A</h3><p><i>1</i></p><h3>B</h3><p><i>2</i></p><h3>C</h3><p><i>3</i></p>\
             </section></div>",
        );
        let regions = find_data_regions(&t, &MdrParams::default());
        assert_eq!(regions.len(), 1);
        assert_eq!(
            (
                regions[0].start_child,
                regions[0].gnode_len,
                regions[0].gnode_count
            ),
            (1, 2, 3)
        );
        let set = mdr_extract(&t, &MdrParams::default());
        assert_eq!(set.records.len(), 3);
        assert_eq!(
            set.records[1]
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>(),
            vec!["/div[1]/section[1]/h3[2]", "/div[1]/section[1]/p[2]/i[1]"]
        );
    }

    #[test]
    fn nested_region_below_uncovered_sibling() {
        let t = tree(
            "<body><div><ul><li><b>a</b></li><li><b>b</b></li></ul></div>\
             <article><p>x</p></article></body>",
        );
        let regions = find_data_regions(&t, &MdrParams::default());
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].parent.to_string(), "/body[1]/div[1]/ul[1]");
    }

    #[test]
    fn text_free_gnodes_are_dropped() {
        let t = tree("<div><ul><li><img></li><li><img></li></ul><ul><li><b>a</b></li><li><b>b</b></li></ul></div>");
        let set = mdr_extract(&t, &MdrParams::default());
        assert_eq!(set.records.len(), 2);
        assert!(set.records.iter().all(|r| !r.is_empty()));
    }

    #[test]
    fn params_are_checked() {
        assert!(MdrParams {
            max_gnode_len: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(MdrParams {
            similarity_threshold: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(MdrParams::default().validate().is_ok());
    }
}
