//! Minimum-cost one-to-one assignment on rectangular cost matrices.

/// Cost standing in for a forbidden pair.
pub const FORBIDDEN: f64 = 1e6;

/// Optimal assignment of rows to columns minimizing total cost. Every row
/// gets a column when there are at least as many columns as rows, and vice
/// versa. `costs[r][c]` must be finite.
pub fn hungarian(costs: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = costs.len();
    let cols = costs.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    debug_assert!(costs.iter().all(|r| r.len() == cols));
    if rows <= cols {
        solve(rows, cols, |r, c| costs[r][c])
    } else {
        let by_col = solve(cols, rows, |c, r| costs[r][c]);
        let mut out = vec![None; rows];
        for (c, r) in by_col.into_iter().enumerate() {
            if let Some(r) = r {
                out[r] = Some(c);
            }
        }
        out
    }
}

/// Shortest augmenting paths with potentials, `n <= m`.
fn solve(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<Option<usize>> {
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    // p[j]: row (1-based) matched to column j; column 0 is the root.
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
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
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
    let mut out = vec![None; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = Some(j - 1);
        }
    }
    out
}

/// Pairs `(row, col)` of the optimal assignment whose cost is within `gate`.
/// Pairs beyond the gate are priced at [`FORBIDDEN`] before solving, so the
/// solver avoids them whenever a gated alternative exists.
pub fn gated_assignment(costs: &[Vec<f64>], gate: f64) -> Vec<(usize, usize)> {
    let priced: Vec<Vec<f64>> = costs
        .iter()
        .map(|r| {
            r.iter()
                .map(|&c| if c <= gate { c } else { FORBIDDEN })
                .collect()
        })
        .collect();
    hungarian(&priced)
        .into_iter()
        .enumerate()
        .filter_map(|(r, c)| c.filter(|&c| costs[r][c] <= gate).map(|c| (r, c)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn total(costs: &[Vec<f64>], a: &[Option<usize>]) -> f64 {
        a.iter()
            .enumerate()
            .filter_map(|(r, c)| c.map(|c| costs[r][c]))
            .sum()
    }

    /// Best total over all injective maps of the smaller side.
    fn brute(costs: &[Vec<f64>]) -> f64 {
        let (n, m) = (costs.len(), costs[0].len());
        fn rec(costs: &[Vec<f64>], r: usize, used: &mut Vec<bool>, flip: bool) -> f64 {
            let (n, m) = if flip {
                (costs[0].len(), costs.len())
            } else {
                (costs.len(), costs[0].len())
            };
            if r == n {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for c in 0..m {
                if used[c] {
                    continue;
                }
                used[c] = true;
                let w = if flip { costs[c][r] } else { costs[r][c] };
                best = best.min(w + rec(costs, r + 1, used, flip));
                used[c] = false;
            }
            best
        }
        if n <= m {
            rec(costs, 0, &mut vec![false; m], false)
        } else {
            rec(costs, 0, &mut vec![false; n], true)
        }
    }

    #[test]
    fn small_cases() {
        assert!(hungarian(&[]).is_empty());
        let c = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = hungarian(&c);
        assert_eq!(total(&c, &a), 5.0);
        let wide = vec![vec![10.0, 1.0, 7.0]];
        assert_eq!(hungarian(&wide), vec![Some(1)]);
        let tall = vec![vec![3.0], vec![1.0], vec![2.0]];
        assert_eq!(hungarian(&tall), vec![None, Some(0), None]);
    }

    #[test]
    fn gate_drops_far_pairs() {
        let c = vec![vec![1.0, 9.0], vec![8.0, 7.0]];
        assert_eq!(gated_assignment(&c, 5.0), vec![(0, 0)]);
        // The solver should not trade a gated pair for a cheaper total.
        let c = vec![vec![4.0, 0.5], vec![6.0, 6.0]];
        assert_eq!(gated_assignment(&c, 5.0), vec![(0, 1)]);
    }

    fn matrix(n: usize, m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.0..100.0f64, m), n)
    }

    proptest! {
        #[test]
        fn square_matches_permutation_oracle(c in (6usize..=8).prop_flat_map(|n| matrix(n, n))) {
            let a = hungarian(&c);
            prop_assert!(a.iter().all(Option::is_some));
            prop_assert!((total(&c, &a) - brute(&c)).abs() < 1e-9);
        }

        #[test]
        fn rectangular_matches_oracle(c in (1usize..=6, 1usize..=6).prop_flat_map(|(n, m)| matrix(n, m))) {
            let a = hungarian(&c);
            let used: Vec<usize> = a.iter().flatten().copied().collect();
            prop_assert_eq!(used.len(), c.len().min(c[0].len()));
            let mut dedup = used.clone();
            dedup.sort_unstable();
            dedup.dedup();
            prop_assert_eq!(dedup.len(), used.len());
            prop_assert!((total(&c, &a) - brute(&c)).abs() < 1e-9);
        }
    }
}
