//! Gram and Weingarten matrices of the quantum permutation group `A_s(n)`,
//! the Haar-state integration formula, and the entrywise asymptotics that
//! control the finite de Finetti bound.
//!
//! All arithmetic here is exact. Matrices are indexed by `NC(k)` in the
//! canonical enumeration order (see [`crate::partitions`]).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use itertools::Itertools;
use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::algebra::rational_to_string;
use crate::error::{Error, Result};
use crate::linalg::{invert_fraction_free, is_identity, mul_int_rational};
use crate::partitions::{kernel, nc_lattice, NcLattice, SetPartition, DEFAULT_K_MAX};

/// `G_kn(π,σ) = n^{|π ∨ σ|}` over `NC(k)`, join taken in `P(k)`.
#[derive(Clone, Debug)]
pub struct GramTable {
    pub k: usize,
    pub n: usize,
    pub index: Vec<SetPartition>,
    pub entries: Vec<Vec<BigInt>>,
}

/// `W_kn = G_kn⁻¹`, exact.
#[derive(Clone, Debug)]
pub struct WeingartenTable {
    pub k: usize,
    pub n: usize,
    pub index: Vec<SetPartition>,
    pub entries: Vec<Vec<BigRational>>,
}

impl WeingartenTable {
    pub fn get(&self, a: usize, b: usize) -> &BigRational {
        &self.entries[a][b]
    }

    /// Entry by partitions; `None` if either is not in `NC(k)`.
    pub fn entry(&self, pi: &SetPartition, sigma: &SetPartition) -> Option<&BigRational> {
        let a = self.index.iter().position(|x| x == pi)?;
        let b = self.index.iter().position(|x| x == sigma)?;
        Some(&self.entries[a][b])
    }

    pub fn is_symmetric(&self) -> bool {
        crate::linalg::is_symmetric(&self.entries)
    }
}

fn check_kn(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > DEFAULT_K_MAX {
        return Err(Error::Bound {
            what: "word length k",
            value: k,
            min: 1,
            max: DEFAULT_K_MAX,
        });
    }
    if n == 0 {
        return Err(Error::Bound {
            what: "n",
            value: 0,
            min: 1,
            max: usize::MAX,
        });
    }
    Ok(())
}

pub fn gram(k: usize, n: usize) -> Result<GramTable> {
    check_kn(k, n)?;
    let lattice = nc_lattice(k)?;
    let index = lattice.elements().to_vec();
    let base = BigInt::from(n);
    let entries = index
        .iter()
        .map(|p| {
            index
                .iter()
                .map(|q| num::pow(base.clone(), p.join(q).expect("same k").block_count()))
                .collect()
        })
        .collect();
    Ok(GramTable {
        k,
        n,
        index,
        entries,
    })
}

/// Exact inverse of [`gram`]. Small `n` can make `G_kn` singular; that is
/// reported as [`Error::Singular`].
pub fn weingarten(k: usize, n: usize) -> Result<WeingartenTable> {
    let g = gram(k, n)?;
    let entries = invert_fraction_free(&g.entries).ok_or(Error::Singular { k, n })?;
    Ok(WeingartenTable {
        k,
        n,
        index: g.index,
        entries,
    })
}

/// Shared cache of Weingarten tables keyed by `(k, n)`.
pub fn weingarten_cached(k: usize, n: usize) -> Result<Arc<WeingartenTable>> {
    type Cache = Mutex<HashMap<(usize, usize), Arc<WeingartenTable>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache
        .lock()
        .expect("weingarten cache poisoned")
        .get(&(k, n))
    {
        return Ok(Arc::clone(t));
    }
    let table = Arc::new(weingarten(k, n)?);
    let mut guard = cache.lock().expect("weingarten cache poisoned");
    Ok(Arc::clone(guard.entry((k, n)).or_insert(table)))
}

/// Checks `G_kn · W_kn = I` exactly.
pub fn verify_inverse(k: usize, n: usize) -> Result<bool> {
    let g = gram(k, n)?;
    let w = weingarten_cached(k, n)?;
    Ok(is_identity(&mul_int_rational(&g.entries, &w.entries)))
}

fn check_words(n: usize, i: &[usize], j: &[usize]) -> Result<()> {
    if i.len() != j.len() {
        return Err(Error::Dimension {
            context: "haar_moment index words",
            expected: i.len(),
            found: j.len(),
        });
    }
    check_kn(i.len(), n)?;
    if let Some(&bad) = i.iter().chain(j).find(|&&x| x == 0 || x > n) {
        return Err(Error::IndexOutOfRange { index: bad, n });
    }
    Ok(())
}

/// `ψ_n(u_{i1 j1} ⋯ u_{ik jk})` for the Haar state of `A_s(n)`.
///
/// For `n ≥ 4` this uses the Weingarten formula; for `n ≤ 3`, where
/// `A_s(n) = C(S_n)`, it averages over the symmetric group.
pub fn haar_moment(n: usize, i: &[usize], j: &[usize]) -> Result<BigRational> {
    if n <= 3 {
        haar_moment_symmetric(n, i, j)
    } else {
        haar_moment_weingarten(n, i, j)
    }
}

/// Weingarten branch: `Σ_{π ≤ ker i, σ ≤ ker j} W_kn(π,σ)` over `NC(k)`.
pub fn haar_moment_weingarten(n: usize, i: &[usize], j: &[usize]) -> Result<BigRational> {
    check_words(n, i, j)?;
    let k = i.len();
    let table = weingarten_cached(k, n)?;
    let lattice = nc_lattice(k)?;
    let rows = lattice.below(&kernel(i)?);
    let cols = lattice.below(&kernel(j)?);
    let mut acc = BigRational::zero();
    for &a in &rows {
        for &b in &cols {
            acc += table.get(a, b);
        }
    }
    Ok(acc)
}

/// Symmetric-group branch: the average over `τ ∈ S_n` of the product of the
/// coordinate functions `f_{i j}(τ) = δ_{i, τ(j)}`.
pub fn haar_moment_symmetric(n: usize, i: &[usize], j: &[usize]) -> Result<BigRational> {
    check_words(n, i, j)?;
    let mut hits = 0u64;
    let mut total = 0u64;
    for perm in (1..=n).permutations(n) {
        total += 1;
        // perm[x - 1] = τ(x)
        if i.iter().zip(j).all(|(&a, &b)| perm[b - 1] == a) {
            hits += 1;
        }
    }
    Ok(BigRational::new(BigInt::from(hits), BigInt::from(total)))
}

/// Which rescaling [`weingarten_asymptotics`] applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticMode {
    /// `π ≤ σ`: `n·(W(π,σ)·n^{|π|} − μ(π,σ))`.
    MobiusResidual,
    /// General pair: `W(π,σ)·n^{|π|+|σ|−|π∨σ|}`.
    ScaledEntry,
}

#[derive(Clone, Debug)]
pub struct AsymptoticRow {
    pub n: usize,
    pub entry: BigRational,
    pub value: BigRational,
}

/// Growth above this log-log slope between the middle and the end of a sweep
/// counts as unbounded. Bounded rational functions of `n` approach a constant
/// and give slopes near zero; anything growing at least linearly gives ≥ 1.
pub const GROWTH_EXPONENT_LIMIT: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct AsymptoticReport {
    pub k: usize,
    pub pi: SetPartition,
    pub sigma: SetPartition,
    pub mode: AsymptoticMode,
    pub mobius: Option<i64>,
    pub rows: Vec<AsymptoticRow>,
    pub trend: GrowthTrend,
}

/// Summary of how a sequence indexed by `n` behaves over a finite sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GrowthTrend {
    pub max_abs: f64,
    /// Log-log slope of `|v|` between the sweep point nearest `n_max/2` and
    /// `n_max`.
    pub growth_exponent: f64,
    pub bounded: bool,
}

impl GrowthTrend {
    pub fn from_points(points: &[(usize, f64)]) -> Self {
        let max_abs = points.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        let Some(&(n_hi, v_hi)) = points.last() else {
            return GrowthTrend {
                max_abs,
                growth_exponent: 0.0,
                bounded: true,
            };
        };
        let target = n_hi as f64 / 2.0;
        let &(n_mid, v_mid) = points
            .iter()
            .min_by(|a, b| {
                (a.0 as f64 - target)
                    .abs()
                    .partial_cmp(&(b.0 as f64 - target).abs())
                    .expect("finite")
            })
            .expect("non-empty");
        let (a, b) = (v_mid.abs(), v_hi.abs());
        let growth_exponent = if n_mid == n_hi || b == 0.0 {
            0.0
        } else if a == 0.0 {
            f64::INFINITY
        } else {
            (b / a).ln() / (n_hi as f64 / n_mid as f64).ln()
        };
        GrowthTrend {
            max_abs,
            growth_exponent,
            bounded: max_abs.is_finite() && growth_exponent <= GROWTH_EXPONENT_LIMIT,
        }
    }
}

/// Tracks a single Weingarten entry over a sweep of `n`: the Möbius residual
/// when `π ≤ σ`, the rescaled entry otherwise.
pub fn weingarten_asymptotics(
    k: usize,
    ns: &[usize],
    pi: &SetPartition,
    sigma: &SetPartition,
) -> Result<AsymptoticReport> {
    let lattice = nc_lattice(k)?;
    let a = lattice
        .position(pi)
        .ok_or_else(|| Error::domain(format!("{pi} is not in NC({k})")))?;
    let b = lattice
        .position(sigma)
        .ok_or_else(|| Error::domain(format!("{sigma} is not in NC({k})")))?;
    let below = lattice.leq(a, b);
    let mobius = below.then(|| lattice.mobius(a, b));
    let join_blocks = pi.join(sigma)?.block_count();
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let table = weingarten_cached(k, n)?;
        let entry = table.get(a, b).clone();
        let nn = BigRational::from_integer(BigInt::from(n));
        let value = match mobius {
            Some(mu) => {
                let scaled = &entry * num::pow(nn.clone(), pi.block_count());
                nn * (scaled - BigRational::from_integer(BigInt::from(mu)))
            }
            None => {
                let e = (pi.block_count() + sigma.block_count()) as i32 - join_blocks as i32;
                &entry * nn.pow(e)
            }
        };
        rows.push(AsymptoticRow { n, entry, value });
    }
    let points: Vec<(usize, f64)> = rows
        .iter()
        .map(|r| (r.n, r.value.to_f64().unwrap_or(f64::INFINITY)))
        .collect();
    Ok(AsymptoticReport {
        k,
        pi: pi.clone(),
        sigma: sigma.clone(),
        mode: if below {
            AsymptoticMode::MobiusResidual
        } else {
            AsymptoticMode::ScaledEntry
        },
        mobius,
        rows,
        trend: GrowthTrend::from_points(&points),
    })
}

/// `d_k(n) = n · Σ_{π,σ ∈ NC(k)} |W_kn(π,σ)·n^{|π|} − μ_k(π,σ)|`, with
/// `μ_k(π,σ) = 0` when `π ≰ σ`.
pub fn dk_for_table(table: &WeingartenTable, lattice: &NcLattice) -> BigRational {
    let nn = BigRational::from_integer(BigInt::from(table.n));
    let powers: Vec<BigRational> = (0..=table.k).map(|e| num::pow(nn.clone(), e)).collect();
    let mut acc = BigRational::zero();
    for a in 0..lattice.len() {
        let scale = &powers[lattice.elements()[a].block_count()];
        let mu_row = lattice.mobius_row(a);
        for (b, &m) in mu_row.iter().enumerate() {
            let mu = BigRational::from_integer(BigInt::from(m));
            acc += (table.get(a, b) * scale - mu).abs();
        }
    }
    nn * acc
}

#[derive(Clone, Debug)]
pub struct DkReport {
    pub k: usize,
    pub rows: Vec<(usize, BigRational)>,
    pub max: BigRational,
    pub argmax: usize,
}

/// `d_k(n)` over a sweep of `n`, and its maximum. The maximum is a lower
/// bound for `sup_n d_k(n)`, which no finite sweep determines.
pub fn dk_value(k: usize, ns: &[usize]) -> Result<DkReport> {
    if ns.is_empty() {
        return Err(Error::domain("empty n range"));
    }
    let lattice = nc_lattice(k)?;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let table = weingarten_cached(k, n)?;
        rows.push((n, dk_for_table(&table, &lattice)));
    }
    let (argmax, max) = rows
        .iter()
        .max_by(|x, y| x.1.cmp(&y.1))
        .map(|(n, v)| (*n, v.clone()))
        .expect("non-empty");
    Ok(DkReport {
        k,
        rows,
        max,
        argmax,
    })
}

/// JSON form of a matrix table: `{"k","n","index","matrix"}` with rationals
/// as `"p/q"` strings.
pub fn table_json(
    k: usize,
    n: usize,
    index: &[SetPartition],
    matrix: &[Vec<String>],
) -> serde_json::Value {
    serde_json::json!({
        "k": k,
        "n": n,
        "index": index.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "matrix": matrix,
    })
}

impl WeingartenTable {
    pub fn to_json(&self) -> serde_json::Value {
        let m: Vec<Vec<String>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(rational_to_string).collect())
            .collect();
        table_json(self.k, self.n, &self.index, &m)
    }
}

impl GramTable {
    pub fn to_json(&self) -> serde_json::Value {
        let m: Vec<Vec<String>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(|x| format!("{x}/1")).collect())
            .collect();
        table_json(self.k, self.n, &self.index, &m)
    }
}

/// True when the diagonal entries of `W_kn` are all strictly positive.
pub fn diagonal_positive(table: &WeingartenTable) -> bool {
    (0..table.index.len()).all(|a| table.get(a, a).is_positive())
}

#[cfg(test)]
pub(crate) fn one_over(n: usize) -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{int, rat};

    fn nn(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn gram_small_cases() {
        assert_eq!(gram(1, 7).unwrap().entries, vec![vec![nn(7)]]);
        let g = gram(2, 5).unwrap();
        assert_eq!(g.entries, vec![vec![nn(25), nn(5)], vec![nn(5), nn(5)]]);
        let g3 = gram(3, 4).unwrap();
        let diag: Vec<BigInt> = (0..5).map(|a| g3.entries[a][a].clone()).collect();
        assert_eq!(diag, vec![nn(64), nn(16), nn(16), nn(16), nn(4)]);
        assert!(crate::linalg::is_symmetric(&g3.entries));
    }

    #[test]
    fn weingarten_closed_form_k2() {
        for n in 2..10i64 {
            let w = weingarten(2, n as usize).unwrap();
            let d = n * (n - 1);
            assert_eq!(w.entries[0][0], rat(1, d));
            assert_eq!(w.entries[0][1], rat(-1, d));
            assert_eq!(w.entries[1][0], rat(-1, d));
            assert_eq!(w.entries[1][1], rat(1, n - 1));
        }
        assert_eq!(weingarten(2, 5).unwrap().entries[1][1], rat(1, 4));
        assert_eq!(weingarten(1, 9).unwrap().entries, vec![vec![rat(1, 9)]]);
    }

    #[test]
    fn singular_gram_is_reported() {
        // NC(2) vectors coincide when n = 1.
        assert_eq!(
            weingarten(2, 1).unwrap_err(),
            Error::Singular { k: 2, n: 1 }
        );
        assert_eq!(
            weingarten(3, 2).unwrap_err(),
            Error::Singular { k: 3, n: 2 }
        );
    }

    #[test]
    fn inverse_and_symmetry_small() {
        for k in 1..=4 {
            for n in 4..=7 {
                assert!(verify_inverse(k, n).unwrap());
                let w = weingarten_cached(k, n).unwrap();
                assert!(w.is_symmetric());
                assert!(diagonal_positive(&w));
            }
        }
    }

    #[test]
    fn haar_examples() {
        for n in 1..=6 {
            assert_eq!(haar_moment(n, &[1], &[n]).unwrap(), one_over(n));
        }
        assert_eq!(haar_moment(4, &[1, 2], &[3, 3]).unwrap(), int(0));
        assert_eq!(haar_moment(4, &[1, 1], &[2, 2]).unwrap(), rat(1, 4));
        assert!(matches!(
            haar_moment(4, &[5], &[1]),
            Err(Error::IndexOutOfRange { index: 5, n: 4 })
        ));
        assert!(matches!(
            haar_moment(4, &[1, 2], &[1]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn row_sum_telescopes() {
        let n = 5;
        for j1 in 1..=n {
            for i2 in 1..=n {
                for j2 in 1..=n {
                    let s: BigRational = (1..=n)
                        .map(|i1| haar_moment(n, &[i1, i2], &[j1, j2]).unwrap())
                        .sum();
                    assert_eq!(s, haar_moment(n, &[i2], &[j2]).unwrap());
                }
            }
        }
    }

    #[test]
    fn relabeling_invariance() {
        let n = 5;
        let relabel = [3, 5, 1, 2, 4];
        for i in [[1, 2, 1, 3], [4, 4, 2, 2], [1, 2, 3, 4]] {
            for j in [[2, 2, 1, 1], [1, 3, 1, 3], [5, 4, 3, 2]] {
                let ri: Vec<usize> = i.iter().map(|&x| relabel[x - 1]).collect();
                let rj: Vec<usize> = j.iter().map(|&x| relabel[x - 1]).collect();
                assert_eq!(
                    haar_moment(n, &i, &j).unwrap(),
                    haar_moment(n, &ri, &rj).unwrap()
                );
            }
        }
    }

    #[test]
    fn small_n_branches_agree_where_invertible() {
        for n in 1..=3 {
            for k in 1..=4 {
                if weingarten(k, n).is_err() {
                    continue;
                }
                for i in (0..k).map(|_| 1..=n).multi_cartesian_product() {
                    for j in (0..k).map(|_| 1..=n).multi_cartesian_product() {
                        assert_eq!(
                            haar_moment_weingarten(n, &i, &j).unwrap(),
                            haar_moment_symmetric(n, &i, &j).unwrap(),
                            "n={n} i={i:?} j={j:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn asymptotics_k2() {
        let one = SetPartition::one(2).unwrap();
        let zero = SetPartition::zero(2).unwrap();
        let ns: Vec<usize> = (4..=40).collect();
        let r = weingarten_asymptotics(2, &ns, &one, &one).unwrap();
        assert_eq!(r.mode, AsymptoticMode::MobiusResidual);
        for row in &r.rows {
            let n = row.n as i64;
            assert_eq!(row.value, rat(n, n - 1));
        }
        assert!(r.trend.bounded && r.trend.max_abs <= 2.0);
        let r = weingarten_asymptotics(2, &ns, &zero, &one).unwrap();
        assert_eq!(r.mobius, Some(-1));
        for row in &r.rows {
            let n = row.n as i64;
            // n·(−n/(n−1) + 1) = −n/(n−1)
            assert_eq!(row.value, rat(-n, n - 1));
        }
        let r = weingarten_asymptotics(2, &ns, &one, &zero).unwrap();
        assert_eq!(r.mode, AsymptoticMode::ScaledEntry);
        assert!(r.trend.bounded);
    }

    #[test]
    fn growth_trend_flags_linear_growth() {
        let linear: Vec<(usize, f64)> = (4..=60).map(|n| (n, n as f64)).collect();
        assert!(!GrowthTrend::from_points(&linear).bounded);
        let settling: Vec<(usize, f64)> = (4..=60).map(|n| (n, 3.0 - 1.0 / n as f64)).collect();
        assert!(GrowthTrend::from_points(&settling).bounded);
    }

    #[test]
    fn dk_small() {
        let r = dk_value(1, &[4, 5, 6]).unwrap();
        assert!(r.rows.iter().all(|(_, v)| v.is_zero()));
        let r = dk_value(2, &[4]).unwrap();
        assert_eq!(r.rows[0].1, rat(16, 3));
    }
}
