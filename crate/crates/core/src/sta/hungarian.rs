//! Rectangular minimum-cost assignment (Kuhn–Munkres with potentials).
//!
//! Among all optimal assignments the one returned is the lexicographically
//! smallest sequence of `(row, col)` pairs, which makes results reproducible
//! when costs tie.

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CostMatrix { rows, cols, data }
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged cost matrix");
        CostMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AssignmentResult {
    /// Matched `(row, col)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

impl AssignmentResult {
    pub fn total_cost(&self, cost: &CostMatrix) -> f64 {
        self.pairs.iter().map(|&(i, j)| cost.get(i, j)).sum()
    }

    fn from_pairs(rows: usize, cols: usize, pairs: Vec<(usize, usize)>) -> Self {
        let mut row_used = vec![false; rows];
        let mut col_used = vec![false; cols];
        for &(i, j) in &pairs {
            row_used[i] = true;
            col_used[j] = true;
        }
        AssignmentResult {
            pairs,
            unmatched_rows: (0..rows).filter(|&i| !row_used[i]).collect(),
            unmatched_cols: (0..cols).filter(|&j| !col_used[j]).collect(),
        }
    }
}

/// Minimum-cost matching of size `min(rows, cols)`.
///
/// Panics on non-finite costs.
pub fn hungarian_min(cost: &CostMatrix) -> AssignmentResult {
    let (rows, cols) = (cost.rows, cost.cols);
    if rows == 0 || cols == 0 {
        return AssignmentResult::from_pairs(rows, cols, Vec::new());
    }
    assert!(
        cost.data.iter().all(|c| c.is_finite()),
        "assignment costs must be finite"
    );
    let n = rows.max(cols);
    // padded square matrix; dummy rows/cols cost nothing
    let a = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            cost.get(i, j)
        } else {
            0.0
        }
    };

    // 1-based potentials; p[j] is the row (1-based) assigned to column j
    let mut u = vec![0f64; n + 1];
    let mut v = vec![0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
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

    let mut col_of_row = vec![0usize; n];
    let mut row_of_col = vec![0usize; n];
    for j in 1..=n {
        col_of_row[p[j] - 1] = j - 1;
        row_of_col[j - 1] = p[j] - 1;
    }

    // Every optimal assignment lives on the tight edges of an optimal dual, so
    // the lexicographic choice is a search over perfect matchings of that graph.
    let scale = cost.data.iter().fold(1f64, |m, c| m.max(c.abs()));
    let eps = 1e-9 * scale;
    let tight = |i: usize, j: usize| (a(i, j) - u[i + 1] - v[j + 1]).abs() <= eps;
    let mut fixed = vec![false; n];
    for i in 0..n {
        for c in 0..n {
            if !tight(i, c) {
                continue;
            }
            if col_of_row[i] == c {
                break;
            }
            let owner = row_of_col[c];
            if fixed[owner] {
                continue;
            }
            let target = col_of_row[i];
            let mut visited = vec![false; n];
            visited[c] = true;
            let mut path = Vec::new();
            if reroute(owner, target, i, &tight, &fixed, &row_of_col, &mut visited, &mut path) {
                // path holds (row, new col) hops starting at `owner`
                for &(r, nc) in &path {
                    col_of_row[r] = nc;
                    row_of_col[nc] = r;
                }
                col_of_row[i] = c;
                row_of_col[c] = i;
                break;
            }
        }
        fixed[i] = true;
    }

    let pairs = (0..rows)
        .filter_map(|i| {
            let j = col_of_row[i];
            (j < cols).then_some((i, j))
        })
        .collect();
    AssignmentResult::from_pairs(rows, cols, pairs)
}

/// Depth-first search for an alternating path that lets `row` give up its
/// column, ending on `target` (the column being released by `anchor`).
#[allow(clippy::too_many_arguments)]
fn reroute(
    row: usize,
    target: usize,
    anchor: usize,
    tight: &dyn Fn(usize, usize) -> bool,
    fixed: &[bool],
    row_of_col: &[usize],
    visited: &mut [bool],
    path: &mut Vec<(usize, usize)>,
) -> bool {
    let n = visited.len();
    for c in 0..n {
        if visited[c] || !tight(row, c) {
            continue;
        }
        visited[c] = true;
        if c == target {
            path.push((row, c));
            return true;
        }
        let owner = row_of_col[c];
        if owner == anchor || fixed[owner] {
            continue;
        }
        path.push((row, c));
        if reroute(owner, target, anchor, tight, fixed, row_of_col, visited, path) {
            return true;
        }
        path.pop();
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive optimum over injective maps from the smaller side.
    fn brute_force(cost: &CostMatrix) -> (f64, Vec<(usize, usize)>) {
        let (r, c) = (cost.rows(), cost.cols());
        let transpose = r > c;
        let (small, large) = if transpose { (c, r) } else { (r, c) };
        let mut best = (f64::INFINITY, Vec::new());
        let mut chosen = Vec::with_capacity(small);
        let mut used = vec![false; large];
        fn rec(
            k: usize,
            small: usize,
            large: usize,
            transpose: bool,
            cost: &CostMatrix,
            chosen: &mut Vec<usize>,
            used: &mut [bool],
            best: &mut (f64, Vec<(usize, usize)>),
        ) {
            if k == small {
                let mut pairs: Vec<(usize, usize)> = chosen
                    .iter()
                    .enumerate()
                    .map(|(s, &l)| if transpose { (l, s) } else { (s, l) })
                    .collect();
                pairs.sort();
                let total: f64 = pairs.iter().map(|&(i, j)| cost.get(i, j)).sum();
                if total < best.0 || (total == best.0 && pairs < best.1) {
                    *best = (total, pairs);
                }
                return;
            }
            for l in 0..large {
                if !used[l] {
                    used[l] = true;
                    chosen.push(l);
                    rec(k + 1, small, large, transpose, cost, chosen, used, best);
                    chosen.pop();
                    used[l] = false;
                }
            }
        }
        rec(0, small, large, transpose, cost, &mut chosen, &mut used, &mut best);
        best
    }

    #[test]
    fn two_by_two_anti_diagonal() {
        let m = CostMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        let r = hungarian_min(&m);
        assert_eq!(r.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(r.total_cost(&m), 4.0);
    }

    #[test]
    fn diagonal_preferred() {
        let m = CostMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 5.0 });
        assert_eq!(hungarian_min(&m).pairs, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
    }

    #[test]
    fn empty_and_rectangular() {
        let r = hungarian_min(&CostMatrix::from_fn(0, 3, |_, _| 0.0));
        assert!(r.pairs.is_empty());
        assert_eq!(r.unmatched_cols, vec![0, 1, 2]);
        let m = CostMatrix::from_rows(&[vec![3.0], vec![1.0], vec![2.0]]);
        let r = hungarian_min(&m);
        assert_eq!(r.pairs, vec![(1, 0)]);
        assert_eq!(r.unmatched_rows, vec![0, 2]);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let m = CostMatrix::from_fn(3, 3, |_, _| 1.0);
        assert_eq!(hungarian_min(&m).pairs, vec![(0, 0), (1, 1), (2, 2)]);
        let m = CostMatrix::from_fn(2, 3, |_, _| 0.0);
        assert_eq!(hungarian_min(&m).pairs, vec![(0, 0), (1, 1)]);
        let m = CostMatrix::from_fn(3, 2, |_, _| 0.0);
        assert_eq!(hungarian_min(&m).pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn three_by_three_matches_enumeration() {
        let m = CostMatrix::from_rows(&[
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ]);
        let r = hungarian_min(&m);
        let (best, pairs) = brute_force(&m);
        assert_eq!(r.total_cost(&m), best);
        assert_eq!(r.pairs, pairs);
    }

    proptest! {
        #[test]
        fn integer_costs_match_brute_force(
            rows in 1usize..=6,
            cols in 1usize..=6,
            seed in proptest::collection::vec(0u8..6, 36),
        ) {
            let m = CostMatrix::from_fn(rows, cols, |i, j| seed[i * 6 + j] as f64 - 2.0);
            let r = hungarian_min(&m);
            let (best, pairs) = brute_force(&m);
            prop_assert_eq!(r.total_cost(&m), best);
            prop_assert_eq!(r.pairs, pairs);
        }

        #[test]
        fn real_costs_match_brute_force(
            rows in 1usize..=5,
            cols in 1usize..=5,
            seed in proptest::collection::vec(-1.0f64..1.0, 25),
        ) {
            let m = CostMatrix::from_fn(rows, cols, |i, j| seed[i * 5 + j]);
            let r = hungarian_min(&m);
            let (best, _) = brute_force(&m);
            prop_assert!((r.total_cost(&m) - best).abs() < 1e-9);
            prop_assert_eq!(r.pairs.len(), rows.min(cols));
        }
    }
}
