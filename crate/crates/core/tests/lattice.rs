use qexch::oracles::{brute_force_nc, brute_force_partitions, mobius_by_chains};
use qexch::partitions::{
    enumerate_nc, enumerate_partitions, kernel, mobius_nc, nc_lattice, SetPartition,
};

#[test]
fn enumeration_matches_brute_force() {
    for k in 1..=6 {
        assert_eq!(
            enumerate_partitions(k).unwrap(),
            brute_force_partitions(k).unwrap(),
            "P({k})"
        );
        assert_eq!(
            enumerate_nc(k).unwrap(),
            brute_force_nc(k).unwrap(),
            "NC({k})"
        );
    }
}

#[test]
fn lattice_laws_exhaustive() {
    for k in 1..=5 {
        let all = enumerate_partitions(k).unwrap();
        for a in &all {
            for b in &all {
                let j = a.join(b).unwrap();
                let m = a.meet(b).unwrap();
                assert!(a.leq(&j).unwrap() && b.leq(&j).unwrap());
                assert!(m.leq(a).unwrap() && m.leq(b).unwrap());
                assert_eq!(j, b.join(a).unwrap());
                assert_eq!(m, b.meet(a).unwrap());
                assert_eq!(a.join(&m).unwrap(), *a, "absorption");
                assert_eq!(a.meet(&j).unwrap(), *a, "absorption");
                assert_eq!(a.leq(b).unwrap(), j == *b);
                // Least upper bound: any common upper bound lies above the join.
                for c in &all {
                    if a.leq(c).unwrap() && b.leq(c).unwrap() {
                        assert!(j.leq(c).unwrap());
                    }
                }
            }
        }
    }
}

#[test]
fn order_is_antisymmetric_and_transitive() {
    let all = enumerate_partitions(4).unwrap();
    for a in &all {
        for b in &all {
            if a.leq(b).unwrap() && b.leq(a).unwrap() {
                assert_eq!(a, b);
            }
            for c in &all {
                if a.leq(b).unwrap() && b.leq(c).unwrap() {
                    assert!(a.leq(c).unwrap());
                }
            }
        }
    }
}

#[test]
fn mobius_recursion_matches_chain_count() {
    for k in 1..=5 {
        let lattice = nc_lattice(k).unwrap();
        let els = lattice.elements();
        for a in 0..lattice.len() {
            for b in 0..lattice.len() {
                let chains = mobius_by_chains(els, &els[a], &els[b]);
                let recursion = if lattice.leq(a, b) {
                    lattice.mobius(a, b)
                } else {
                    0
                };
                assert_eq!(recursion, chains, "k={k} {} {}", els[a], els[b]);
                if lattice.leq(a, b) {
                    assert_eq!(mobius_nc(&els[a], &els[b]).unwrap(), chains);
                }
            }
        }
    }
}

#[test]
fn certificates_exist_exactly_for_noncrossing() {
    for k in 1..=6 {
        for p in enumerate_partitions(k).unwrap() {
            match p.noncrossing_certificate() {
                Some(cert) => {
                    assert!(p.is_noncrossing());
                    assert!(cert.verify());
                }
                None => assert!(!p.is_noncrossing()),
            }
        }
    }
}

#[test]
fn kernel_is_finest_constant_partition() {
    let words: [&[u32]; 4] = [
        &[7, 7, 7],
        &[1, 2, 1, 3],
        &[5, 4, 3, 2, 1],
        &[9, 1, 1, 9, 2],
    ];
    for w in words {
        let ker = kernel(w).unwrap();
        for p in enumerate_partitions(w.len()).unwrap() {
            let constant = p
                .blocks()
                .iter()
                .all(|b| b.iter().all(|&x| w[x - 1] == w[b[0] - 1]));
            assert_eq!(p.leq(&ker).unwrap(), constant, "{p} vs {w:?}");
        }
    }
}

#[test]
fn worked_examples() {
    let p: SetPartition = "1,8,9,10|2,7|3,4,5|6".parse().unwrap();
    assert!(p.is_noncrossing());
    let q: SetPartition = "1,3|2,4".parse().unwrap();
    assert!(!q.is_noncrossing());
    assert_eq!(kernel(&[3, 1, 3, 2]).unwrap(), "1,3|2|4".parse().unwrap());
    let zero = SetPartition::zero(4).unwrap();
    let one = SetPartition::one(4).unwrap();
    assert_eq!(mobius_nc(&zero, &one).unwrap(), -5);
    assert!(mobius_nc(&q, &one).is_err());
}
