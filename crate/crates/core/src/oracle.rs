//! Reference implementations used by verification campaigns.
//!
//! Nothing here shares code with the production paths it checks.

use crate::aq::QPoint;

/// `min_σ Σ_i |a_i − b_σ(i)|²` by enumerating all `q!` permutations
/// (Heap's algorithm). Selected entries are summed in ascending order,
/// exactly as the assignment solver reports its total.
pub fn brute_force_dist_sq(a: &QPoint, b: &QPoint) -> f64 {
    assert_eq!(a.q(), b.q());
    assert_eq!(a.dim(), b.dim());
    let q = a.q();
    let mut cost = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..q {
            let mut s = 0.0;
            for (x, y) in a.point(i).iter().zip(b.point(j)) {
                s += (x - y) * (x - y);
            }
            cost[i * q + j] = s;
        }
    }
    let total = |perm: &[usize]| {
        let mut entries = Vec::with_capacity(q);
        for (i, &j) in perm.iter().enumerate() {
            entries.push(cost[i * q + j]);
        }
        entries.sort_by(|x: &f64, y| x.partial_cmp(y).expect("finite costs"));
        let mut s = 0.0;
        for e in entries {
            s += e;
        }
        s
    };
    let mut perm: Vec<usize> = (0..q).collect();
    let mut best = total(&perm);
    let mut c = vec![0usize; q];
    let mut i = 1;
    while i < q {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(total(&perm));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// `G(a, b)` by exhaustive enumeration.
pub fn brute_force_dist(a: &QPoint, b: &QPoint) -> f64 {
    brute_force_dist_sq(a, b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_all_permutations() {
        let a = QPoint::new(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let b = QPoint::new(vec![vec![2.0], vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(brute_force_dist_sq(&a, &b), 0.0);
        let c = QPoint::new(vec![vec![1.0], vec![1.0]]).unwrap();
        let d = QPoint::new(vec![vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(brute_force_dist_sq(&c, &d), 2.0);
    }
}
