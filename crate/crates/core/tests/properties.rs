use num_traits::{One, Signed};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hbspline::fixture::{mesh_round_trip, parse_fixture, FixtureFile};
use hbspline::hierarchy::{build_hierarchical_basis, build_htilde, compute_weights, expand_exact};
use hbspline::random::{random_enlargement, random_hierarchy};
use hbspline::tensor::{build_level_sequence, RefinementRule};
use hbspline::univariate::{Breakpoints, KnotVector};

/// Breakpoints on a 1/64 grid with random interior multiplicities up to `p`.
fn knot_vector() -> impl Strategy<Value = KnotVector> {
    (1usize..=4).prop_flat_map(|p| {
        (Just(p), prop::collection::btree_map(1u32..64, 1usize..=p, 1..8)).prop_map(|(p, interior)| {
            let mut values = vec![0.0];
            let mut multiplicities = vec![p + 1];
            for (k, m) in interior {
                values.push(k as f64 / 64.0);
                multiplicities.push(m);
            }
            values.push(1.0);
            multiplicities.push(p + 1);
            KnotVector::from_breakpoints(p, &Breakpoints { values, multiplicities }).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn univariate_basis_is_a_partition_of_unity(kv in knot_vector(), x in 0.0f64..=1.0) {
        let sum: f64 = (0..kv.num_basis()).map(|j| kv.eval(j, x)).sum();
        prop_assert!((sum - 1.0).abs() < 1e-13, "sum {sum}");
        prop_assert!((0..kv.num_basis()).all(|j| kv.eval(j, x) >= 0.0));
    }

    #[test]
    fn dyadic_refinement_reproduces_every_function(kv in knot_vector(), x in 0.0f64..=1.0) {
        let seq = build_level_sequence(vec![kv.clone()], 2, RefinementRule::Dyadic).unwrap();
        for j in 0..kv.num_basis() {
            let children = seq.children(hbspline::tensor::FnId::new(0, j)).unwrap();
            let fine = seq.level(1).dir(0);
            let sum: f64 = children.iter().map(|(c, _, v)| v * fine.eval(c.index, x)).sum();
            prop_assert!((sum - kv.eval(j, x)).abs() < 1e-12);
        }
    }

    #[test]
    fn random_hierarchies_keep_their_invariants(seed in any::<u64>(), d in 1usize..=2, p in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = (0..d).map(|_| KnotVector::uniform(p, 4).unwrap()).collect();
        let seq = build_level_sequence(init, 3, RefinementRule::Dyadic).unwrap();
        let h = random_hierarchy(&mut rng, seq).unwrap();

        let (basis, _) = build_hierarchical_basis(&h).unwrap();
        let htilde = build_htilde(&h).unwrap();
        prop_assert!(htilde.active.is_subset(&basis.active));
        let weights = compute_weights(&h);
        for f in &basis.active {
            let w = &weights.get(*f).unwrap().exact;
            prop_assert!(!w.is_negative() && *w <= num_rational::BigRational::one());
        }
        let coeffs = htilde.weights.iter().map(|(f, w)| (*f, w.exact.clone())).collect();
        prop_assert!(expand_exact(&h, &coeffs).unwrap().iter().all(|c| c.is_one()));

        prop_assert!(mesh_round_trip(&h).unwrap());
        let text = FixtureFile::from_hierarchy(&h, Some("random".into())).to_toml();
        let back = parse_fixture(&text, "generated", "random").unwrap();
        prop_assert_eq!(back.hierarchy.mesh(), h.mesh());

        let big = random_enlargement(&mut rng, &h).unwrap();
        for (k, dom) in h.subdomains().domains().iter().enumerate() {
            prop_assert!(dom.cells.is_subset(&big.subdomains().domains()[k].cells));
        }
    }
}
