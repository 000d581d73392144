//! Rectangular maximum-weight assignment.

/// Injective row-to-column assignment and its total weight.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub columns: Vec<usize>,
    pub total: f64,
}

/// Reduced costs within this (relative) tolerance count as tight.
const TIGHT_TOL: f64 = 1e-11;

/// Maximum-weight assignment of every row of `weights` (`n x m`, `n <= m`) to a
/// distinct column. Among optimal assignments the lexicographically smallest
/// column vector is returned.
///
/// Panics if `n > m` or a row has the wrong length.
pub fn hungarian_max(weights: &[Vec<f64>]) -> Assignment {
    let n = weights.len();
    if n == 0 {
        return Assignment {
            columns: Vec::new(),
            total: 0.0,
        };
    }
    let m = weights[0].len();
    assert!(n <= m, "more rows than columns");
    assert!(weights.iter().all(|r| r.len() == m), "ragged weight matrix");
    let scale = weights
        .iter()
        .flatten()
        .fold(0.0f64, |acc, w| acc.max(w.abs()));
    let cost: Vec<Vec<f64>> = weights
        .iter()
        .map(|r| {
            r.iter()
                .map(|w| if scale > 0.0 { -w / scale } else { 0.0 })
                .collect()
        })
        .collect();

    let (u, v) = potentials(&cost, n, m);
    let tight = |i: usize, j: usize| (cost[i][j] - u[i] - v[j]).abs() <= TIGHT_TOL;
    // Columns with a nonzero dual must be matched by any optimal assignment.
    let free_column: Vec<bool> = v.iter().map(|x| x.abs() <= TIGHT_TOL).collect();

    let mut fixed: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        let choice = (0..m)
            .filter(|&j| tight(i, j) && !fixed.contains(&j))
            .find(|&j| {
                let mut trial = fixed.clone();
                trial.push(j);
                completes(&trial, n, m, &tight, &free_column)
            })
            .expect("dual solution admits an optimal assignment");
        fixed.push(choice);
    }
    let total = fixed.iter().enumerate().map(|(i, &j)| weights[i][j]).sum();
    Assignment {
        columns: fixed,
        total,
    }
}

/// Row and column potentials of an optimal min-cost assignment (`n <= m`).
fn potentials(cost: &[Vec<f64>], n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    // 1-based arrays; column 0 is the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
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
    (u[1..].to_vec(), v[1..].to_vec())
}

/// Whether the rows after `fixed` plus `m - n` dummy rows (which may only take
/// free columns) can be perfectly matched on tight edges to the columns left.
fn completes(
    fixed: &[usize],
    n: usize,
    m: usize,
    tight: &dyn Fn(usize, usize) -> bool,
    free_column: &[bool],
) -> bool {
    let rows: Vec<Option<usize>> = (fixed.len()..n)
        .map(Some)
        .chain((0..m - n).map(|_| None))
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; m];
    let blocked: Vec<bool> = (0..m).map(|j| fixed.contains(&j)).collect();
    let allowed = |r: Option<usize>, j: usize| match r {
        Some(i) => tight(i, j),
        None => free_column[j],
    };
    fn augment(
        r: usize,
        rows: &[Option<usize>],
        owner: &mut [Option<usize>],
        seen: &mut [bool],
        blocked: &[bool],
        allowed: &dyn Fn(Option<usize>, usize) -> bool,
    ) -> bool {
        for j in 0..owner.len() {
            if blocked[j] || seen[j] || !allowed(rows[r], j) {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none() || augment(owner[j].unwrap(), rows, owner, seen, blocked, allowed)
            {
                owner[j] = Some(r);
                return true;
            }
        }
        false
    }
    for r in 0..rows.len() {
        let mut seen = vec![false; m];
        if !augment(r, &rows, &mut owner, &mut seen, &blocked, &allowed) {
            return false;
        }
    }
    true
}
