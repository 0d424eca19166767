//! Slow, independent reference computations used to cross-check the
//! production paths. Each one takes a different route from the code it
//! checks and is only intended for desk-scale inputs.

use std::collections::HashSet;

use itertools::Itertools;
use num::{BigInt, BigRational, One, Zero};

use crate::error::Result;
use crate::partitions::{kernel, SetPartition};

/// Every function `{1..k} → {1..k}`, reduced to its kernel and deduplicated.
/// Cost `k^k`.
pub fn brute_force_partitions(k: usize) -> Result<Vec<SetPartition>> {
    let mut seen = HashSet::new();
    for word in (0..k).map(|_| 0..k).multi_cartesian_product() {
        seen.insert(kernel(&word)?);
    }
    let mut out: Vec<_> = seen.into_iter().collect();
    out.sort();
    Ok(out)
}

/// Brute-force partitions kept when no `s1 < t1 < s2 < t2` pattern exists,
/// checked over all quadruples of positions.
pub fn brute_force_nc(k: usize) -> Result<Vec<SetPartition>> {
    Ok(brute_force_partitions(k)?
        .into_iter()
        .filter(|p| {
            (0..k).combinations(4).all(|q| {
                let (a, b, c, d) = (q[0] + 1, q[1] + 1, q[2] + 1, q[3] + 1);
                !(p.same_block(a, c) && p.same_block(b, d) && !p.same_block(a, b))
            })
        })
        .collect())
}

/// Möbius function of `NC(k)` by counting strict chains:
/// `μ(σ,π) = -1 + Σ_{l≥1} (-1)^{l+1} #{σ < ν_1 < … < ν_l < π}`.
///
/// Every strict step drops the block count, so `l ≤ |σ| - |π| - 1`. Chains are
/// enumerated explicitly by depth-first search.
pub fn mobius_by_chains(nc: &[SetPartition], sigma: &SetPartition, pi: &SetPartition) -> i64 {
    let lt = |a: &SetPartition, b: &SetPartition| a != b && a.leq(b).unwrap_or(false);
    if sigma == pi {
        return 1;
    }
    if !lt(sigma, pi) {
        return 0;
    }
    let inner: Vec<&SetPartition> = nc.iter().filter(|t| lt(sigma, t) && lt(t, pi)).collect();
    let max_len = sigma.block_count() - pi.block_count() - 1;
    let mut counts = vec![0i64; max_len + 1];
    fn extend(
        last: &SetPartition,
        len: usize,
        inner: &[&SetPartition],
        counts: &mut [i64],
        lt: &dyn Fn(&SetPartition, &SetPartition) -> bool,
    ) {
        for t in inner {
            if lt(last, t) {
                counts[len + 1] += 1;
                extend(t, len + 1, inner, counts, lt);
            }
        }
    }
    extend(sigma, 0, &inner, &mut counts, &lt);
    let mut mu = -1;
    for (l, &c) in counts.iter().enumerate().skip(1) {
        mu += if l % 2 == 1 { c } else { -c };
    }
    mu
}

/// Number of permutations `τ ∈ S_n` with `i_t = τ(j_t)` for all `t`, divided
/// by `n!`. Nonzero exactly when `ker i = ker j`, in which case `τ` is fixed
/// on `r = |ker j|` points and the value is `(n - r)! / n!`.
pub fn symmetric_group_moment(n: usize, i: &[usize], j: &[usize]) -> Result<BigRational> {
    if kernel(i)? != kernel(j)? {
        return Ok(BigRational::zero());
    }
    let r = kernel(j)?.block_count();
    if r > n {
        return Ok(BigRational::zero());
    }
    let falling: BigInt = (n - r + 1..=n).map(BigInt::from).product();
    Ok(BigRational::new(BigInt::one(), falling))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;

    #[test]
    fn bell_and_catalan_counts() {
        let bell = [1, 2, 5, 15, 52, 203];
        let catalan = [1, 2, 5, 14, 42, 132];
        for k in 1..=6 {
            assert_eq!(brute_force_partitions(k).unwrap().len(), bell[k - 1]);
            assert_eq!(brute_force_nc(k).unwrap().len(), catalan[k - 1]);
        }
    }

    #[test]
    fn chain_mobius_small() {
        let nc = crate::partitions::enumerate_nc(4).unwrap();
        let zero = SetPartition::zero(4).unwrap();
        let one = SetPartition::one(4).unwrap();
        assert_eq!(mobius_by_chains(&nc, &zero, &one), -5);
    }

    #[test]
    fn symmetric_moment_values() {
        assert_eq!(symmetric_group_moment(3, &[1], &[2]).unwrap(), rat(1, 3));
        assert_eq!(
            symmetric_group_moment(3, &[1, 2], &[3, 3]).unwrap(),
            rat(0, 1)
        );
        assert_eq!(
            symmetric_group_moment(3, &[1, 2], &[3, 1]).unwrap(),
            rat(1, 6)
        );
    }
}
