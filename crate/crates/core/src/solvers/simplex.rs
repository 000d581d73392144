//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Variables are shifted onto `y >= 0` (free variables are split); finite
//! upper bounds become ordinary `<=` rows.

/// Pivot budget shared by both phases.
pub const MAX_PIVOTS: usize = 10_000;

const EPS: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    IterLimit,
    Infeasible,
}

/// `maximize c^T x` subject to `A x <= b` and `lo <= x <= hi`.
/// Bounds may be infinite.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: LpStatus,
    pub pivots: usize,
}

/// How an original variable maps onto nonnegative tableau columns.
#[derive(Clone, Copy)]
enum Map {
    /// `x = lo + y`.
    Shift(usize, f64),
    /// `x = hi - y`.
    Flip(usize, f64),
    /// `x = y+ - y-`.
    Split(usize, usize),
}

struct Tableau {
    /// `rows x (cols + 1)`; last column is the right-hand side.
    t: Vec<Vec<f64>>,
    /// Reduced costs, last entry is minus the current objective.
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                    row[c] = 0.0;
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs Bland's rule over columns `< allowed`; returns the final status.
    fn optimize(&mut self, allowed: usize, pivots: &mut usize) -> LpStatus {
        loop {
            let Some(enter) = (0..allowed).find(|&j| self.obj[j] > EPS) else {
                return LpStatus::Optimal;
            };
            let rhs = self.cols;
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[enter] > EPS {
                    let ratio = row[rhs] / row[enter];
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - EPS * lr.abs().max(1.0)
                                || (ratio <= lr + EPS * lr.abs().max(1.0)
                                    && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return LpStatus::Unbounded;
            };
            if *pivots >= MAX_PIVOTS {
                return LpStatus::IterLimit;
            }
            *pivots += 1;
            self.pivot(r, enter);
        }
    }
}

pub fn simplex_solve(lp: &LinearProgram) -> LpSolution {
    let n = lp.objective.len();
    assert!(
        lp.lower.len() == n && lp.upper.len() == n,
        "bound dimensions"
    );
    assert!(
        lp.rows.iter().all(|r| r.len() == n) && lp.rows.len() == lp.rhs.len(),
        "row dimensions"
    );

    // Variable mapping onto y >= 0.
    let mut maps = Vec::with_capacity(n);
    let mut ny = 0;
    for (&lo, &hi) in lp.lower.iter().zip(&lp.upper) {
        assert!(lo <= hi, "inverted bounds");
        maps.push(if lo.is_finite() {
            ny += 1;
            Map::Shift(ny - 1, lo)
        } else if hi.is_finite() {
            ny += 1;
            Map::Flip(ny - 1, hi)
        } else {
            ny += 2;
            Map::Split(ny - 2, ny - 1)
        });
    }

    // Constraint rows in y: original rows, then finite upper bounds of shifted variables.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let to_y = |coeffs: &[f64], b: f64| -> (Vec<f64>, f64) {
        let mut a = vec![0.0; ny];
        let mut b = b;
        for (j, &c) in coeffs.iter().enumerate() {
            match maps[j] {
                Map::Shift(y, lo) => {
                    a[y] += c;
                    b -= c * lo;
                }
                Map::Flip(y, hi) => {
                    a[y] -= c;
                    b -= c * hi;
                }
                Map::Split(yp, ym) => {
                    a[yp] += c;
                    a[ym] -= c;
                }
            }
        }
        (a, b)
    };
    for (r, &b) in lp.rows.iter().zip(&lp.rhs) {
        rows.push(to_y(r, b));
    }
    for (j, m) in maps.iter().enumerate() {
        if let Map::Shift(y, lo) = *m {
            if lp.upper[j].is_finite() {
                let mut a = vec![0.0; ny];
                a[y] = 1.0;
                rows.push((a, lp.upper[j] - lo));
            }
        }
    }
    let (c_y, c_const) = {
        let mut c = vec![0.0; ny];
        let mut k = 0.0;
        for (j, &cj) in lp.objective.iter().enumerate() {
            match maps[j] {
                Map::Shift(y, lo) => {
                    c[y] += cj;
                    k += cj * lo;
                }
                Map::Flip(y, hi) => {
                    c[y] -= cj;
                    k += cj * hi;
                }
                Map::Split(yp, ym) => {
                    c[yp] += cj;
                    c[ym] -= cj;
                }
            }
        }
        (c, k)
    };

    // Columns: y, one slack/surplus per row, artificials for negative right-hand sides.
    let m = rows.len();
    let negative: Vec<usize> = (0..m).filter(|&i| rows[i].1 < 0.0).collect();
    let n_art = negative.len();
    let cols = ny + m + n_art;
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0; m];
    let mut art_index = 0;
    for (i, (a, b)) in rows.iter().enumerate() {
        let sign = if *b < 0.0 { -1.0 } else { 1.0 };
        for j in 0..ny {
            t[i][j] = sign * a[j];
        }
        t[i][ny + i] = sign;
        t[i][cols] = sign * b;
        if *b < 0.0 {
            t[i][ny + m + art_index] = 1.0;
            basis[i] = ny + m + art_index;
            art_index += 1;
        } else {
            basis[i] = ny + i;
        }
    }
    let mut tab = Tableau {
        t,
        obj: vec![0.0; cols + 1],
        basis,
        cols,
    };
    let mut pivots = 0;

    if n_art > 0 {
        // Phase 1: maximize -sum(artificials); reduced costs are the row sums.
        for &i in &negative {
            for j in 0..=cols {
                tab.obj[j] += tab.t[i][j];
            }
        }
        for a in ny + m..cols {
            tab.obj[a] = 0.0;
        }
        let status = tab.optimize(cols, &mut pivots);
        if status == LpStatus::IterLimit {
            return finish(lp, &maps, &tab, ny, c_const, LpStatus::IterLimit, pivots);
        }
        let scale = rows.iter().map(|r| r.1.abs()).fold(1.0, f64::max);
        if tab.obj[cols] > 1e-9 * scale {
            return finish(lp, &maps, &tab, ny, c_const, LpStatus::Infeasible, pivots);
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= ny + m {
                if let Some(c) = (0..ny + m).find(|&j| tab.t[r][j].abs() > EPS) {
                    tab.pivot(r, c);
                }
            }
        }
    }

    // Phase 2 reduced costs: c_j - c_B B^{-1} A_j.
    let mut obj = vec![0.0; cols + 1];
    obj[..ny].copy_from_slice(&c_y);
    for r in 0..m {
        let b = tab.basis[r];
        let cb = if b < ny { c_y[b] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..=cols {
                obj[j] -= cb * tab.t[r][j];
            }
        }
    }
    tab.obj = obj;
    let status = tab.optimize(ny + m, &mut pivots);
    finish(lp, &maps, &tab, ny, c_const, status, pivots)
}

fn finish(
    lp: &LinearProgram,
    maps: &[Map],
    tab: &Tableau,
    ny: usize,
    _c_const: f64,
    status: LpStatus,
    pivots: usize,
) -> LpSolution {
    let mut y = vec![0.0; ny];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < ny {
            y[b] = tab.t[r][tab.cols];
        }
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            Map::Shift(i, lo) => lo + y[i],
            Map::Flip(i, hi) => hi - y[i],
            Map::Split(p, q) => y[p] - y[q],
        })
        .collect();
    let objective = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
    LpSolution {
        x,
        objective,
        status,
        pivots,
    }
}
