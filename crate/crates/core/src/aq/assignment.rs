//! Exact linear assignment on small dense square cost matrices.
//!
//! Shortest-augmenting-path Hungarian method with row/column potentials,
//! O(n³). The returned cost is re-summed from the original matrix in
//! ascending order of the selected entries, so the total depends only on
//! the multiset of entries: transposing the problem or permuting rows does
//! not change it.

/// Optimal assignment of an `n × n` row-major cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `perm[row] = column`.
    pub perm: Vec<usize>,
    /// `Σ_row cost[row][perm[row]]`, summed in ascending order.
    pub cost: f64,
}

/// Sum of the selected entries in ascending order.
pub fn permutation_cost(cost: &[f64], n: usize, perm: &[usize]) -> f64 {
    let mut picked: Vec<f64> = perm.iter().enumerate().map(|(i, &j)| cost[i * n + j]).collect();
    picked.sort_by(f64::total_cmp);
    picked.iter().sum()
}

/// Solves the assignment problem exactly.
pub fn solve(cost: &[f64], n: usize) -> Assignment {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    match n {
        0 => Assignment {
            perm: Vec::new(),
            cost: 0.0,
        },
        1 => Assignment {
            perm: vec![0],
            cost: cost[0],
        },
        2 => {
            let straight = cost[0] + cost[3];
            let crossed = cost[1] + cost[2];
            if crossed < straight {
                Assignment {
                    perm: vec![1, 0],
                    cost: crossed,
                }
            } else {
                Assignment {
                    perm: vec![0, 1],
                    cost: straight,
                }
            }
        }
        _ => {
            let mut perm = hungarian(cost, n, None);
            polish(cost, n, &mut perm);
            let total = permutation_cost(cost, n, &perm);
            Assignment { perm, cost: total }
        }
    }
}

/// Cost of the best assignment that differs from `best` in at least one
/// row. Returns `+inf` when `n < 2`.
///
/// Any permutation other than `best` avoids at least one pair
/// `(i, best[i])`, so the minimum over "forbid one pair" subproblems is the
/// second-best value.
pub fn second_best_cost(cost: &[f64], n: usize, best: &[usize]) -> f64 {
    if n < 2 {
        return f64::INFINITY;
    }
    if n == 2 {
        let other = if best[0] == 0 { [1, 0] } else { [0, 1] };
        return permutation_cost(cost, n, &other);
    }
    let mut second = f64::INFINITY;
    for (i, &j) in best.iter().enumerate() {
        let mut perm = hungarian(cost, n, Some((i, j)));
        polish_forbidding(cost, n, &mut perm, Some((i, j)));
        let c = permutation_cost(cost, n, &perm);
        if c < second {
            second = c;
        }
    }
    second
}

/// Pairwise-swap improvement pass. The potential-based solver is exact in
/// real arithmetic; this removes last-ulp suboptimality from rounding in the
/// potentials so the row-order total is a true local minimum.
fn polish(cost: &[f64], n: usize, perm: &mut [usize]) {
    polish_forbidding(cost, n, perm, None)
}

fn polish_forbidding(cost: &[f64], n: usize, perm: &mut [usize], forbid: Option<(usize, usize)>) {
    let allowed = |i: usize, j: usize| forbid != Some((i, j));
    let mut improved = true;
    let mut rounds = 0;
    while improved && rounds < 4 {
        improved = false;
        rounds += 1;
        for a in 0..n {
            for b in (a + 1)..n {
                let (ja, jb) = (perm[a], perm[b]);
                if !allowed(a, jb) || !allowed(b, ja) {
                    continue;
                }
                let before = cost[a * n + ja] + cost[b * n + jb];
                let after = cost[a * n + jb] + cost[b * n + ja];
                if after < before {
                    let mut trial = perm.to_vec();
                    trial.swap(a, b);
                    if permutation_cost(cost, n, &trial) < permutation_cost(cost, n, perm) {
                        perm.swap(a, b);
                        improved = true;
                    }
                }
            }
        }
    }
}

fn hungarian(cost: &[f64], n: usize, forbid: Option<(usize, usize)>) -> Vec<usize> {
    // Forbidden entry gets a penalty larger than any feasible total.
    let max_abs = cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let penalty = (max_abs + 1.0) * (n as f64 + 1.0) * 4.0;
    let entry = |i: usize, j: usize| -> f64 {
        if forbid == Some((i, j)) {
            penalty
        } else {
            cost[i * n + j]
        }
    };

    // 1-indexed arrays; column 0 is the virtual source.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
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
                let cur = entry(i0 - 1, j - 1) - u[i0] - v[j];
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
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(cost: &[f64], n: usize) -> f64 {
        fn rec(cost: &[f64], n: usize, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(cost, n, row + 1, used, acc + cost[row * n + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, n, 0, &mut vec![false; n], 0.0, &mut best);
        best
    }

    #[test]
    fn classic_three_by_three() {
        let c = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = solve(&c, 3);
        assert_eq!(a.cost, 5.0);
        assert_eq!(a.perm, vec![1, 0, 2]);
    }

    #[test]
    fn matches_enumeration_on_pseudo_random_matrices() {
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in 1..=6 {
            for _ in 0..50 {
                let c: Vec<f64> = (0..n * n).map(|_| next() * 10.0).collect();
                let a = solve(&c, n);
                assert!((a.cost - brute(&c, n)).abs() <= 1e-12 * (1.0 + a.cost));
            }
        }
    }

    #[test]
    fn second_best_is_next_permutation_value() {
        let c = [0.0, 1.0, 5.0, 1.0, 0.0, 5.0, 5.0, 5.0, 0.0];
        let a = solve(&c, 3);
        assert_eq!(a.cost, 0.0);
        assert_eq!(second_best_cost(&c, 3, &a.perm), 2.0);
        assert_eq!(second_best_cost(&[3.0], 1, &[0]), f64::INFINITY);
    }
}
