use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::annotations::DataRecord;

/// Largest side accepted by [`brute_force_matching`].
pub const BRUTE_FORCE_LIMIT: usize = 7;

/// Jaccard similarity of two records; 0 when both are empty.
pub fn overlap(a: &DataRecord, b: &DataRecord) -> f64 {
    let inter = a.intersection_len(b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Row-major `rows × cols` matrix of overlaps (predicted × ground truth).
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl OverlapMatrix {
    pub fn from_records(predicted: &[DataRecord], gold: &[DataRecord]) -> Self {
        let data = predicted
            .iter()
            .flat_map(|p| gold.iter().map(move |g| overlap(p, g)))
            .collect();
        OverlapMatrix {
            rows: predicted.len(),
            cols: gold.len(),
            data,
        }
    }

    /// Builds a matrix from explicit rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|r| r.len() == cols),
            "ragged overlap matrix"
        );
        OverlapMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    /// `(predicted, gold)` index pairs with positive overlap, ascending.
    pub pairs: Vec<(usize, usize)>,
    pub matched_total: f64,
}

pub fn optimal_matching(predicted: &[DataRecord], gold: &[DataRecord]) -> Matching {
    optimal_matching_matrix(&OverlapMatrix::from_records(predicted, gold))
}

/// Maximum-weight one-to-one matching.
///
/// Among optimal matchings the one whose sorted pair list is lexicographically
/// smallest is returned. `matched_total` is summed in row order.
pub fn optimal_matching_matrix(m: &OverlapMatrix) -> Matching {
    let mut rows: Vec<usize> = (0..m.rows).collect();
    let mut cols: Vec<usize> = (0..m.cols).collect();
    let (mut assign, mut value) = solve(m, &rows, &cols);
    let tol = 1e-12 * value.max(1.0);
    let mut pairs = Vec::new();

    for i in 0..m.rows {
        rows.retain(|&r| r != i);
        let current = assign[i];
        let mut accepted = None;
        for &j in cols.iter().filter(|&&j| m.get(i, j) > 0.0) {
            if current == Some(j) {
                accepted = Some(j);
                break;
            }
            let rest: Vec<usize> = cols.iter().copied().filter(|&c| c != j).collect();
            let (sub_assign, sub_value) = solve(m, &rows, &rest);
            if m.get(i, j) + sub_value >= value - tol {
                assign = sub_assign;
                assign[i] = Some(j);
                accepted = Some(j);
                break;
            }
        }
        if let Some(j) = accepted {
            value -= m.get(i, j);
            cols.retain(|&c| c != j);
            pairs.push((i, j));
        }
    }

    let mut matched_total = 0.0;
    for &(i, j) in &pairs {
        matched_total += m.get(i, j);
    }
    Matching {
        pairs,
        matched_total,
    }
}

/// Hungarian algorithm on the sub-matrix `rows × cols`, zero-padded to a
/// square. Returns the column assigned to each original row index (only
/// entries of `rows` are filled) and the optimum value.
fn solve(m: &OverlapMatrix, rows: &[usize], cols: &[usize]) -> (Vec<Option<usize>>, f64) {
    let mut assign = vec![None; m.rows];
    let n = rows.len().max(cols.len());
    if n == 0 {
        return (assign, 0.0);
    }
    let weight = |r: usize, c: usize| -> f64 {
        if r < rows.len() && c < cols.len() {
            m.get(rows[r], cols[c])
        } else {
            0.0
        }
    };

    // 1-based arrays; index 0 is the virtual root of each augmenting search.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = -weight(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut by_row = vec![None; n];
    for j in 1..=n {
        if p[j] != 0 {
            by_row[p[j] - 1] = Some(j - 1);
        }
    }
    let mut value = 0.0;
    for (r, &row) in rows.iter().enumerate() {
        if let Some(c) = by_row[r].filter(|&c| c < cols.len()) {
            value += m.get(row, cols[c]);
            assign[row] = Some(cols[c]);
        }
    }
    (assign, value)
}

pub fn brute_force_matching(
    predicted: &[DataRecord],
    gold: &[DataRecord],
) -> Result<f64, EvalError> {
    brute_force_matrix(&OverlapMatrix::from_records(predicted, gold))
}

/// Exhaustive maximum over all injective partial assignments.
pub fn brute_force_matrix(m: &OverlapMatrix) -> Result<f64, EvalError> {
    if m.rows > BRUTE_FORCE_LIMIT || m.cols > BRUTE_FORCE_LIMIT {
        return Err(EvalError::SizeExceeded {
            rows: m.rows,
            cols: m.cols,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    fn go(m: &OverlapMatrix, i: usize, used: &mut [bool], acc: f64, best: &mut f64) {
        if i == m.rows {
            if acc > *best {
                *best = acc;
            }
            return;
        }
        go(m, i + 1, used, acc, best);
        for j in 0..m.cols {
            if !used[j] && m.get(i, j) > 0.0 {
                used[j] = true;
                go(m, i + 1, used, acc + m.get(i, j), best);
                used[j] = false;
            }
        }
    }
    let mut best = 0.0;
    go(m, 0, &mut vec![false; m.cols], 0.0, &mut best);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::XPath;
    use proptest::prelude::*;

    fn rec(paths: &[&str]) -> DataRecord {
        paths.iter().map(|p| p.parse::<XPath>().unwrap()).collect()
    }

    #[test]
    fn jaccard_values() {
        let a = rec(&["/a", "/b"]);
        let b = rec(&["/b", "/c"]);
        assert!((overlap(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(overlap(&a, &a), 1.0);
        assert_eq!(overlap(&a, &rec(&["/z"])), 0.0);
        assert_eq!(overlap(&DataRecord::new(), &a), 0.0);
    }

    #[test]
    fn two_by_one() {
        let m = OverlapMatrix::from_rows(&[vec![0.5], vec![0.8]]);
        let r = optimal_matching_matrix(&m);
        assert_eq!(r.pairs, vec![(1, 0)]);
        assert_eq!(r.matched_total, 0.8);
        assert_eq!(brute_force_matrix(&m).unwrap(), 0.8);
    }

    #[test]
    fn empty_sides() {
        let m = OverlapMatrix::from_rows(&[]);
        assert_eq!(optimal_matching_matrix(&m).matched_total, 0.0);
        assert_eq!(brute_force_matrix(&m).unwrap(), 0.0);
        let m = OverlapMatrix::from_records(&[], &[rec(&["/a"])]);
        assert_eq!(optimal_matching_matrix(&m).pairs, vec![]);
    }

    #[test]
    fn greedy_is_not_optimal_here() {
        // greedy takes (0,0)=0.9 and is left with 0.1; optimum is 0.8 + 0.8
        let m = OverlapMatrix::from_rows(&[vec![0.9, 0.8], vec![0.8, 0.1]]);
        let r = optimal_matching_matrix(&m);
        assert_eq!(r.pairs, vec![(0, 1), (1, 0)]);
        assert!((r.matched_total - 1.6).abs() < 1e-12);
    }

    #[test]
    fn ties_pick_lexicographically_smallest() {
        let m = OverlapMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert_eq!(optimal_matching_matrix(&m).pairs, vec![(0, 0), (1, 1)]);
        let m = OverlapMatrix::from_rows(&[vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 1.0]]);
        assert_eq!(optimal_matching_matrix(&m).pairs, vec![(0, 1), (1, 2)]);
        // a zero row is never reported
        let m = OverlapMatrix::from_rows(&[vec![0.0, 0.0], vec![0.3, 0.3]]);
        assert_eq!(optimal_matching_matrix(&m).pairs, vec![(1, 0)]);
    }

    #[test]
    fn brute_force_limit() {
        let m = OverlapMatrix::from_rows(&vec![vec![0.1; 2]; 8]);
        assert!(matches!(
            brute_force_matrix(&m),
            Err(EvalError::SizeExceeded { .. })
        ));
    }

    fn matrix() -> impl Strategy<Value = OverlapMatrix> {
        (0usize..=6, 0usize..=6).prop_flat_map(|(r, c)| {
            proptest::collection::vec(
                proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..=1.0], c),
                r,
            )
            .prop_map(move |rows| {
                if rows.is_empty() {
                    OverlapMatrix {
                        rows: 0,
                        cols: c,
                        data: vec![],
                    }
                } else {
                    OverlapMatrix::from_rows(&rows)
                }
            })
        })
    }

    fn greedy(m: &OverlapMatrix) -> f64 {
        let mut cells: Vec<(f64, usize, usize)> = (0..m.rows())
            .flat_map(|i| (0..m.cols()).map(move |j| (i, j)))
            .map(|(i, j)| (m.get(i, j), i, j))
            .collect();
        cells.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (mut ru, mut cu) = (vec![false; m.rows()], vec![false; m.cols()]);
        let mut total = 0.0;
        for (w, i, j) in cells {
            if !ru[i] && !cu[j] {
                ru[i] = true;
                cu[j] = true;
                total += w;
            }
        }
        total
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn hungarian_equals_brute_force(m in matrix()) {
            let h = optimal_matching_matrix(&m);
            prop_assert_eq!(h.matched_total, brute_force_matrix(&m).unwrap());
            prop_assert!(h.matched_total + 1e-9 >= greedy(&m));
            let mut seen_r = std::collections::HashSet::new();
            let mut seen_c = std::collections::HashSet::new();
            for &(i, j) in &h.pairs {
                prop_assert!(seen_r.insert(i) && seen_c.insert(j));
                prop_assert!(m.get(i, j) > 0.0);
            }
        }

        #[test]
        fn overlap_symmetric_and_bounded(
            a in proptest::collection::btree_set(0u8..12, 0..8),
            b in proptest::collection::btree_set(0u8..12, 0..8),
        ) {
            let ra: DataRecord = a.iter().map(|k| format!("/x[{}]", k + 1).parse::<XPath>().unwrap()).collect();
            let rb: DataRecord = b.iter().map(|k| format!("/x[{}]", k + 1).parse::<XPath>().unwrap()).collect();
            let o = overlap(&ra, &rb);
            prop_assert_eq!(o, overlap(&rb, &ra));
            prop_assert!((0.0..=1.0).contains(&o));
            if !a.is_empty() || !b.is_empty() {
                prop_assert_eq!(o == 1.0, a == b);
            }
            prop_assert_eq!(o == 0.0, a.is_disjoint(&b));
        }
    }
}
