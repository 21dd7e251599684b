use proptest::prelude::*;
use qvlab_core::aq::{split, QPoint};
use qvlab_core::campaign::random_balanced;
use qvlab_core::combinatorics::{key_chain, split_point};
use qvlab_core::oracle::brute_force_dist_sq;
use qvlab_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `(q, dim, coords)` with coordinates drawn from a small lattice half the
/// time, so repeated points and exact ties are common.
fn qpoint(max_q: usize) -> impl Strategy<Value = QPoint> {
    (1..=max_q, 1usize..=3, any::<bool>()).prop_flat_map(|(q, dim, lattice)| {
        let coord = if lattice {
            (-3i32..=3).prop_map(|v| v as f64 * 0.5).boxed()
        } else {
            (-10.0..10.0f64).boxed()
        };
        prop::collection::vec(coord, q * dim).prop_map(move |c| QPoint::from_flat(q, dim, c).unwrap())
    })
}

fn pair(max_q: usize) -> impl Strategy<Value = (QPoint, QPoint)> {
    qpoint(max_q).prop_flat_map(|a| {
        let (q, dim) = (a.q(), a.dim());
        (Just(a), prop::collection::vec(-10.0..10.0f64, q * dim))
            .prop_map(move |(a, c)| (a, QPoint::from_flat(q, dim, c).unwrap()))
    })
}

fn triple(max_q: usize) -> impl Strategy<Value = (QPoint, QPoint, QPoint)> {
    pair(max_q).prop_flat_map(|(a, b)| {
        let (q, dim) = (a.q(), a.dim());
        (Just((a, b)), prop::collection::vec(-10.0..10.0f64, q * dim))
            .prop_map(move |((a, b), c)| (a, b, QPoint::from_flat(q, dim, c).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1024))]

    #[test]
    fn distance_matches_exhaustive_search((a, b) in pair(6)) {
        prop_assert_eq!(a.dist_sq(&b).unwrap(), brute_force_dist_sq(&a, &b));
    }

    #[test]
    fn distance_is_a_metric((a, b, c) in triple(6)) {
        let ab = a.dist(&b).unwrap();
        prop_assert_eq!(ab, b.dist(&a).unwrap());
        prop_assert_eq!(a.dist(&a).unwrap(), 0.0);
        let bound = a.dist(&c).unwrap() + c.dist(&b).unwrap();
        prop_assert!(ab <= bound + 1e-10 * (1.0 + bound), "{} > {}", ab, bound);
    }

    #[test]
    fn distance_is_translation_invariant((a, b) in pair(5), v in prop::collection::vec(-50.0..50.0f64, 3)) {
        let v = &v[..a.dim()];
        let d0 = a.dist(&b).unwrap();
        let d1 = a.translate(v, 1.0).unwrap().dist(&b.translate(v, 1.0).unwrap()).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-9 * (1.0 + d0), "{} vs {}", d0, d1);
    }

    #[test]
    fn distance_is_homogeneous((a, b) in pair(5), lambda in -4.0..4.0f64) {
        let d0 = a.dist(&b).unwrap();
        let d1 = a.scale(lambda).unwrap().dist(&b.scale(lambda).unwrap()).unwrap();
        prop_assert!((d1 - lambda.abs() * d0).abs() <= 1e-10 * (1.0 + d1));
    }

    #[test]
    fn support_reassembles_the_point(a in qpoint(8), tol in 0.0..2.0f64) {
        let exact = a.support(0.0);
        prop_assert_eq!(QPoint::from_atoms(&exact).unwrap(), a.clone());
        let mut distinct: Vec<&[f64]> = a.points().collect();
        distinct.dedup();
        prop_assert_eq!(exact.len(), distinct.len());

        let atoms = a.support(tol);
        prop_assert_eq!(atoms.iter().map(|s| s.multiplicity).sum::<usize>(), a.q());
        // Connected components of the graph joining points within tol,
        // found by flood fill.
        let near = |i: usize, j: usize| {
            a.point(i).iter().zip(a.point(j)).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() <= tol * tol
        };
        let mut comp = vec![usize::MAX; a.q()];
        let mut n = 0;
        for start in 0..a.q() {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            comp[start] = n;
            while let Some(i) = stack.pop() {
                for j in 0..a.q() {
                    if comp[j] == usize::MAX && near(i, j) {
                        comp[j] = n;
                        stack.push(j);
                    }
                }
            }
            n += 1;
        }
        let clusters = a.clusters(tol);
        prop_assert_eq!(clusters.len(), n);
        prop_assert_eq!(atoms.len(), n);
        for (c, atom) in clusters.iter().zip(&atoms) {
            prop_assert_eq!(c.len(), atom.multiplicity);
            prop_assert!(c.iter().all(|&i| comp[i] == comp[c[0]]));
        }
    }

    #[test]
    fn split_certificates_are_valid(a in qpoint(6), fine in any::<bool>()) {
        let eps = if fine { 0.0625 } else { 0.125 };
        if a.diam() == 0.0 {
            prop_assert!(matches!(split_point(&a, eps), Err(Error::Degenerate)));
            return Ok(());
        }
        let c = split_point(&a, eps).unwrap();
        prop_assert!(c.is_valid(), "{:?}", c);
        let k = key_chain(&a, eps).unwrap();
        prop_assert!(k.is_valid() && k.len() <= a.q());
    }

    #[test]
    fn split_sum_is_additive(seed in any::<u64>(), q in 1usize..=6, dim in 1usize..=3, eps in 0.01..0.25f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (atoms, t) = random_balanced(&mut rng, q, dim, eps);
        let s = QPoint::from_atoms(&atoms).unwrap();
        let sp = split(&atoms, &t, eps).unwrap();
        prop_assert!(sp.balanced);
        let g2 = s.dist_sq(&t).unwrap();
        prop_assert!((g2 - sp.split_sum_sq()).abs() <= 1e-10 * (1.0 + g2));
    }
}
