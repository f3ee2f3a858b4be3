//! Dense simplex method for `max c·x  s.t.  A x ≤ b` with free `x` and `b ≥ 0`.
//!
//! The origin is always feasible, so phase one is unnecessary. Free variables
//! are split as `x = x⁺ − x⁻`. Pivoting follows Bland's rule, which makes the
//! result a deterministic function of the input ordering.

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, point: Vec<f64> },
    Unbounded,
}

const PIVOT_EPS: f64 = 1e-12;

/// Maximize `objective · x` over `{x : rows[i] · x ≤ rhs[i]}`. Requires `rhs ≥ 0`.
pub fn maximize(objective: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> LpOutcome {
    let n = objective.len();
    let m = rows.len();
    debug_assert!(rhs.iter().all(|&b| b >= 0.0));
    let k = 2 * n;
    let width = k + 1;

    // Dictionary: basic_i = tab[i][k] + Σ_j tab[i][j] · nonbasic_j,
    //             z       = tab[m][k] + Σ_j tab[m][j] · nonbasic_j.
    let mut tab = vec![0.0; (m + 1) * width];
    for (i, row) in rows.iter().enumerate() {
        for t in 0..n {
            tab[i * width + 2 * t] = -row[t];
            tab[i * width + 2 * t + 1] = row[t];
        }
        tab[i * width + k] = rhs[i];
    }
    for t in 0..n {
        tab[m * width + 2 * t] = objective[t];
        tab[m * width + 2 * t + 1] = -objective[t];
    }
    // Variable labels: structural 0..k, slacks k..k+m.
    let mut nonbasic: Vec<usize> = (0..k).collect();
    let mut basic: Vec<usize> = (k..k + m).collect();

    let cost_scale = objective.iter().fold(0.0_f64, |a, c| a.max(c.abs())).max(1e-300);
    let max_iter = 50 * (m + k) + 1000;
    for _ in 0..max_iter {
        // Entering: smallest label with positive reduced cost.
        let mut enter: Option<usize> = None;
        for j in 0..k {
            if tab[m * width + j] > PIVOT_EPS * cost_scale
                && enter.is_none_or(|e| nonbasic[j] < nonbasic[e])
            {
                enter = Some(j);
            }
        }
        let Some(col) = enter else {
            let mut point = vec![0.0; n];
            for (i, &label) in basic.iter().enumerate() {
                if label < k {
                    let v = tab[i * width + k];
                    if label % 2 == 0 {
                        point[label / 2] += v;
                    } else {
                        point[label / 2] -= v;
                    }
                }
            }
            return LpOutcome::Optimal { value: tab[m * width + k], point };
        };
        // Leaving: minimum ratio, ties broken by smallest label.
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let d = tab[i * width + col];
            if d < -PIVOT_EPS {
                let ratio = tab[i * width + k] / -d;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best || (ratio == best && basic[i] < basic[r]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((row, _)) = leave else {
            return LpOutcome::Unbounded;
        };
        pivot(&mut tab, width, m, row, col);
        std::mem::swap(&mut basic[row], &mut nonbasic[col]);
    }
    // Bland's rule terminates; reaching this point means numerical trouble.
    LpOutcome::Unbounded
}

fn pivot(tab: &mut [f64], width: usize, m: usize, row: usize, col: usize) {
    let d = tab[row * width + col];
    let inv = 1.0 / d;
    for l in 0..width {
        if l == col {
            tab[row * width + l] = inv;
        } else {
            tab[row * width + l] = -tab[row * width + l] * inv;
        }
    }
    let (before, rest) = tab.split_at_mut(row * width);
    let (pivot_row, after) = rest.split_at_mut(width);
    let update = |r: &mut [f64]| {
        let f = r[col];
        if f != 0.0 {
            for l in 0..width {
                if l == col {
                    r[l] = f * pivot_row[col];
                } else {
                    r[l] += f * pivot_row[l];
                }
            }
        }
    };
    for r in before.chunks_mut(width) {
        update(r);
    }
    for r in after.chunks_mut(width).take(m - row) {
        update(r);
    }
}
