use itertools::Itertools;
use num::complex::Complex64;
use num::{BigInt, BigRational, One, Zero};
use proptest::prelude::*;
use qexch::algebra::{CMatrix, Ring};
use qexch::cumulants::{
    cumulants_to_moments, free_iid_moment, letter_operands, moments_to_cumulants, nested_eval,
    nested_eval_all_orders, CumulantSpec, MatrixProbabilitySpace, MomentFunctional,
    TableFunctional,
};
use qexch::partitions::{enumerate_nc, kernel, nc_lattice, SetPartition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn r(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn letters(n: usize) -> Vec<String> {
    ["a", "b", "c"][..n].iter().map(|s| s.to_string()).collect()
}

fn words(alphabet: usize, k: usize) -> Vec<Vec<usize>> {
    (0..k)
        .map(|_| 0..alphabet)
        .multi_cartesian_product()
        .collect()
}

prop_compose! {
    fn rational()(p in -9i64..=9, q in 1i64..=7) -> BigRational { r(p, q) }
}

prop_compose! {
    fn spec(k_max: usize)(alphabet in 1usize..=2)(
        alphabet in Just(alphabet),
        values in proptest::collection::vec(proptest::option::of(rational()), (1..=k_max).map(|s| alphabet.pow(s as u32)).sum::<usize>()),
    ) -> CumulantSpec {
        let mut spec = CumulantSpec::new(letters(alphabet), k_max, BigRational::one()).unwrap();
        let all = (1..=k_max).flat_map(|s| words(alphabet, s));
        for (w, v) in all.zip(values) {
            if let Some(v) = v {
                spec.set(&w, v).unwrap();
            }
        }
        spec
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn round_trip_both_directions(spec in spec(4)) {
        let mf = MomentFunctional::from_fn(spec.alphabet().to_vec(), 4, BigRational::one(), |w| {
            cumulants_to_moments(&spec, w)
        }).unwrap();
        for w in mf.values().keys() {
            let kappa = moments_to_cumulants(&mf, &SetPartition::one(w.len()).unwrap(), w).unwrap();
            prop_assert_eq!(kappa, spec.get(w).unwrap());
        }
        // Moments → cumulants → moments.
        let mut back = CumulantSpec::new(spec.alphabet().to_vec(), 4, BigRational::one()).unwrap();
        for w in mf.values().keys() {
            back.set(w, moments_to_cumulants(&mf, &SetPartition::one(w.len()).unwrap(), w).unwrap()).unwrap();
        }
        for (w, m) in mf.values() {
            prop_assert_eq!(&cumulants_to_moments(&back, w).unwrap(), m);
        }
    }

    #[test]
    fn partitioned_cumulants_multiply_over_blocks(spec in spec(4)) {
        // For scalars, κ^{(π)}[w] is the product of the block cumulants.
        let mf = MomentFunctional::from_fn(spec.alphabet().to_vec(), 4, BigRational::one(), |w| {
            cumulants_to_moments(&spec, w)
        }).unwrap();
        for pi in enumerate_nc(4).unwrap() {
            for w in words(spec.alphabet().len(), 4).into_iter().take(5) {
                let direct: BigRational = pi.blocks().iter()
                    .map(|b| spec.get(&b.iter().map(|&x| w[x - 1]).collect::<Vec<_>>()).unwrap())
                    .product();
                prop_assert_eq!(moments_to_cumulants(&mf, &pi, &w).unwrap(), direct);
            }
        }
    }
}

#[test]
fn interval_choice_independence_up_to_five() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mf = MomentFunctional::from_fn(letters(2), 5, BigRational::one(), |_| {
        Ok(r(rng.random_range(-5..=5), rng.random_range(1..=4)))
    })
    .unwrap();
    for k in 1..=5 {
        for pi in enumerate_nc(k).unwrap() {
            for w in words(2, k).into_iter().step_by(3) {
                let ops = letter_operands(&w, &BigRational::one());
                let all = nested_eval_all_orders(&pi, &ops, &TableFunctional(&mf)).unwrap();
                assert!(all.iter().all_equal(), "{pi} {w:?}");
                assert_eq!(
                    all[0],
                    nested_eval(&pi, &ops, &TableFunctional(&mf)).unwrap()
                );
            }
        }
    }
}

/// Brute-force free i.i.d. moment: enumerate NC(k), filter by the kernel,
/// multiply block cumulants.
fn free_oracle(spec: &CumulantSpec, w: &[usize], labels: &[usize]) -> BigRational {
    let ker = kernel(labels).unwrap();
    enumerate_nc(w.len())
        .unwrap()
        .into_iter()
        .filter(|p| p.leq(&ker).unwrap())
        .map(|p| {
            p.blocks()
                .iter()
                .map(|b| {
                    spec.get(&b.iter().map(|&x| w[x - 1]).collect::<Vec<_>>())
                        .unwrap()
                })
                .product::<BigRational>()
        })
        .sum()
}

#[test]
fn free_iid_against_oracle() {
    let semi = CumulantSpec::semicircular(4).unwrap();
    assert!(free_iid_moment(&semi, &[0; 4], &[1, 2, 1, 2])
        .unwrap()
        .is_zero());
    assert_eq!(
        free_oracle(&semi, &[0; 4], &[1, 2, 1, 2]),
        BigRational::zero()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut spec = CumulantSpec::new(letters(2), 5, BigRational::one()).unwrap();
    for s in 1..=5 {
        for w in words(2, s) {
            spec.set(&w, r(rng.random_range(-4..=4), rng.random_range(1..=3)))
                .unwrap();
        }
    }
    for _ in 0..200 {
        let k = rng.random_range(1..=5);
        let w: Vec<usize> = (0..k).map(|_| rng.random_range(0..2)).collect();
        let labels: Vec<usize> = (0..k).map(|_| rng.random_range(1..=3)).collect();
        assert_eq!(
            free_iid_moment(&spec, &w, &labels).unwrap(),
            free_oracle(&spec, &w, &labels)
        );
    }
}

#[test]
fn centred_distinct_labels_vanish() {
    let spec = CumulantSpec::new(letters(1), 5, BigRational::one())
        .unwrap()
        .with(&[0, 0], r(3, 2))
        .unwrap()
        .with(&[0, 0, 0], r(-1, 2))
        .unwrap();
    for k in 1..=5 {
        let labels: Vec<usize> = (1..=k).collect();
        assert!(free_iid_moment(&spec, &vec![0; k], &labels)
            .unwrap()
            .is_zero());
    }
}

#[test]
fn degree_overflow_is_reported() {
    let semi = CumulantSpec::semicircular(4).unwrap();
    assert!(cumulants_to_moments(&semi, &[0; 5]).is_err());
    assert!(cumulants_to_moments(&semi, &[1]).is_err());
}

fn random_matrix(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

#[test]
fn matrix_expectation_properties() {
    let space = MatrixProbabilitySpace::new(2, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let id = CMatrix::identity(6);
    assert!(space
        .expectation(&id)
        .unwrap()
        .approx_eq(&CMatrix::identity(2), 1e-12));
    for _ in 0..20 {
        let a = random_matrix(&mut rng, 6);
        let (b1, b2) = (random_matrix(&mut rng, 2), random_matrix(&mut rng, 2));
        let lhs = space
            .expectation(
                &space
                    .embed(&b1)
                    .unwrap()
                    .mul(&a)
                    .mul(&space.embed(&b2).unwrap()),
            )
            .unwrap();
        let rhs = b1.mul(&space.expectation(&a).unwrap()).mul(&b2);
        assert!(lhs.approx_eq(&rhs, 1e-9));
        assert!(space
            .expectation(&space.embed(&b1).unwrap())
            .unwrap()
            .approx_eq(&b1, 1e-12));
        let ea = space.expectation(&a).unwrap();
        let twice = space.expectation(&space.embed(&ea).unwrap()).unwrap();
        assert!(twice.approx_eq(&ea, 1e-12));
    }
    assert!(space.expectation(&CMatrix::identity(5)).is_err());
}

#[test]
fn matrix_cumulants_two_routes_agree() {
    let space = MatrixProbabilitySpace::new(2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 1..=4 {
        let ops: Vec<CMatrix> = (0..k).map(|_| random_matrix(&mut rng, 4)).collect();
        for pi in nc_lattice(k).unwrap().elements() {
            let recursive = space.cumulant_partition(pi, &ops).unwrap();
            let mobius = space.cumulant_mobius(pi, &ops).unwrap();
            assert!(recursive.approx_eq(&mobius, 1e-9), "k={k} {pi}");
        }
        // Moment–cumulant formula closes up.
        let total = nc_lattice(k)
            .unwrap()
            .elements()
            .iter()
            .fold(CMatrix::zeros(2, 2), |acc, pi| {
                acc.add(&space.cumulant_partition(pi, &ops).unwrap())
            });
        assert!(total.approx_eq(&space.moment(&ops).unwrap(), 1e-9));
    }
}

#[test]
fn scalar_like_matrix_semicircular_matches_scalar_case() {
    // κ₂ = identity acts as η(b) = b; moments are Catalan numbers on the
    // diagonal.
    let unit = CMatrix::identity(3);
    let spec = CumulantSpec::new(vec!["s".into()], 6, unit.clone())
        .unwrap()
        .with(&[0, 0], unit.clone())
        .unwrap();
    let scalar = CumulantSpec::semicircular(6).unwrap();
    for k in 1..=6 {
        let m = cumulants_to_moments(&spec, &vec![0; k]).unwrap();
        let c: f64 =
            num::ToPrimitive::to_f64(&cumulants_to_moments(&scalar, &vec![0; k]).unwrap()).unwrap();
        assert!(
            m.approx_eq(&CMatrix::identity(3).scale(&r((c as i64).max(0), 1)), 1e-12),
            "k={k}"
        );
    }
}

#[test]
fn json_schema() {
    let mf = MomentFunctional::from_fn(letters(2), 2, BigRational::one(), |w| {
        Ok(r(w.len() as i64, 3))
    })
    .unwrap();
    let v = mf.to_json();
    assert_eq!(v["alphabet"], serde_json::json!(["a", "b"]));
    assert_eq!(v["k_max"], 2);
    assert_eq!(v["moments"]["a,b"], "2/3");
    let back = MomentFunctional::from_json(&v).unwrap();
    assert_eq!(back.values(), mf.values());
}
