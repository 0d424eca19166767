//! Magic unitaries, quantum-permutation invariance, urn sequences and the
//! finite de Finetti gap.
//!
//! The noncommutative urn `x_j = Σ_i λ_i u_ij` is handled purely at the level
//! of moments through the Haar integration formula of `A_s(n)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use itertools::Itertools;
use num::{BigInt, BigRational, One, Signed, Zero};
use rayon::prelude::*;

use crate::algebra::{CMatrix, Ring};
use crate::cumulants::{free_iid_moment, moments_to_cumulants, CumulantSpec, MomentFunctional};
use crate::error::{Error, Result};
use crate::partitions::{enumerate_partitions, kernel, nc_lattice, SetPartition, DEFAULT_K_MAX};
use crate::weingarten::{dk_value, haar_moment_symmetric, weingarten_cached};

/// Largest `n` for which sums over `S_n` are attempted.
pub const MAX_PERMUTATION_N: usize = 8;

/// Angle of the second projection in [`witness_magic_unitary`].
pub const WITNESS_ANGLE: f64 = PI / 5.0;

/// An `n×n` matrix of blocks `u_ij` (row-major, 1-based accessors).
#[derive(Clone, Debug)]
pub struct MagicUnitary<R> {
    n: usize,
    blocks: Vec<R>,
}

impl<R: Ring> MagicUnitary<R> {
    /// Wraps `n²` blocks in row-major order. Call [`Self::validate`] to check
    /// the magic-unitary relations.
    pub fn new(n: usize, blocks: Vec<R>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Bound {
                what: "magic unitary size",
                value: 0,
                min: 1,
                max: usize::MAX,
            });
        }
        if blocks.len() != n * n {
            return Err(Error::Dimension {
                context: "magic unitary blocks",
                expected: n * n,
                found: blocks.len(),
            });
        }
        Ok(MagicUnitary { n, blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `u_ij`, with `1 ≤ i, j ≤ n`.
    pub fn block(&self, i: usize, j: usize) -> &R {
        &self.blocks[(i - 1) * self.n + (j - 1)]
    }

    pub fn unit(&self) -> R {
        self.blocks[0].one_like()
    }

    /// Projections, orthogonality within rows and columns, and unit row and
    /// column sums. Exact for exact rings, within `tol` otherwise.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let n = self.n;
        let one = self.unit();
        let zero = one.zero_like();
        let fail = |what: String| Err(Error::domain(what));
        for i in 1..=n {
            for j in 1..=n {
                let u = self.block(i, j);
                if !u.mul(u).approx_eq(u, tol) || !u.adjoint().approx_eq(u, tol) {
                    return fail(format!("u_{i}{j} is not a projection"));
                }
            }
        }
        for a in 1..=n {
            let mut row = zero.clone();
            let mut col = zero.clone();
            for b in 1..=n {
                row = row.add(self.block(a, b));
                col = col.add(self.block(b, a));
                for c in 1..=n {
                    if b == c {
                        continue;
                    }
                    if !self.block(a, b).mul(self.block(a, c)).approx_eq(&zero, tol) {
                        return fail(format!("u_{a}{b} u_{a}{c} ≠ 0"));
                    }
                    if !self.block(b, a).mul(self.block(c, a)).approx_eq(&zero, tol) {
                        return fail(format!("u_{b}{a} u_{c}{a} ≠ 0"));
                    }
                }
            }
            if !row.approx_eq(&one, tol) {
                return fail(format!("row {a} does not sum to 1"));
            }
            if !col.approx_eq(&one, tol) {
                return fail(format!("column {a} does not sum to 1"));
            }
        }
        Ok(())
    }

    /// Whether all blocks commute pairwise.
    pub fn is_commutative(&self, tol: f64) -> bool {
        self.blocks
            .iter()
            .tuple_combinations()
            .all(|(a, b)| a.mul(b).approx_eq(&b.mul(a), tol))
    }

    /// Direct sum with the identity pattern on the extra indices.
    pub fn extend_identity(&self, n: usize) -> Result<Self> {
        if n < self.n {
            return Err(Error::Bound {
                what: "extended size",
                value: n,
                min: self.n,
                max: usize::MAX,
            });
        }
        let one = self.unit();
        let zero = one.zero_like();
        let mut blocks = Vec::with_capacity(n * n);
        for i in 1..=n {
            for j in 1..=n {
                blocks.push(if i <= self.n && j <= self.n {
                    self.block(i, j).clone()
                } else if i == j {
                    one.clone()
                } else {
                    zero.clone()
                });
            }
        }
        MagicUnitary::new(n, blocks)
    }
}

/// Scalar magic unitary of `τ`, given as `perm[j-1] = τ(j)`:
/// `u_ij = 1` iff `i = τ(j)`.
pub fn permutation_magic_unitary(perm: &[usize]) -> Result<MagicUnitary<BigRational>> {
    let n = perm.len();
    let mut seen = vec![false; n + 1];
    for &x in perm {
        if x == 0 || x > n || std::mem::replace(&mut seen[x], true) {
            return Err(Error::domain(format!(
                "{perm:?} is not a permutation of 1..{n}"
            )));
        }
    }
    let mut blocks = vec![BigRational::zero(); n * n];
    for (j, &i) in perm.iter().enumerate() {
        blocks[(i - 1) * n + j] = BigRational::one();
    }
    MagicUnitary::new(n, blocks)
}

/// Every permutation magic unitary of size `n`, in lexicographic order of the
/// permutation.
pub fn all_permutation_magic_unitaries(n: usize) -> Result<Vec<MagicUnitary<BigRational>>> {
    check_permutation_n(n)?;
    (1..=n)
        .permutations(n)
        .map(|p| permutation_magic_unitary(&p))
        .collect()
}

fn check_permutation_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_PERMUTATION_N {
        return Err(Error::Bound {
            what: "n for a symmetric-group sweep",
            value: n,
            min: 1,
            max: MAX_PERMUTATION_N,
        });
    }
    Ok(())
}

/// `[[p, 1−p, 0, 0], [1−p, p, 0, 0], [0, 0, q, 1−q], [0, 0, 1−q, q]]`.
pub fn two_projection_magic_unitary(
    p: &CMatrix,
    q: &CMatrix,
    tol: f64,
) -> Result<MagicUnitary<CMatrix>> {
    let d = p.nrows();
    if !p.is_square() || !q.is_square() || q.nrows() != d {
        return Err(Error::Dimension {
            context: "two-projection input",
            expected: d,
            found: q.nrows(),
        });
    }
    for (name, x) in [("p", p), ("q", q)] {
        if !x.mul(x).approx_eq(x, tol) || !x.adjoint().approx_eq(x, tol) {
            return Err(Error::domain(format!("{name} is not a projection")));
        }
    }
    let one = CMatrix::identity(d);
    let zero = CMatrix::zeros(d, d);
    let (pc, qc) = (one.sub(p), one.sub(q));
    let z = || zero.clone();
    let blocks = vec![
        p.clone(),
        pc.clone(),
        z(),
        z(),
        pc,
        p.clone(),
        z(),
        z(),
        z(),
        z(),
        q.clone(),
        qc.clone(),
        z(),
        z(),
        qc,
        q.clone(),
    ];
    MagicUnitary::new(4, blocks)
}

/// `diag(1, 0)` rotated by `θ`: the projection onto `(cos θ, sin θ)`.
pub fn rotated_projection(theta: f64) -> CMatrix {
    let (s, c) = theta.sin_cos();
    CMatrix::from_real_rows(&[&[c * c, c * s], &[c * s, s * s]])
}

/// The two-projection magic unitary with `p = diag(1,0)` and `q` its rotation
/// by [`WITNESS_ANGLE`].
pub fn witness_magic_unitary() -> MagicUnitary<CMatrix> {
    two_projection_magic_unitary(
        &rotated_projection(0.0),
        &rotated_projection(WITNESS_ANGLE),
        1e-12,
    )
    .expect("rank-one projections")
}

/// Symbols `c_i` for letters `c` of `C` and positions `1 ≤ i ≤ n`, named
/// `"{letter}_{i}"` and ordered position-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceLayout {
    letters: Vec<String>,
    n: usize,
}

impl SequenceLayout {
    pub fn new(letters: Vec<String>, n: usize) -> Result<Self> {
        if letters.is_empty() || n == 0 {
            return Err(Error::domain(
                "a sequence needs at least one letter and one position",
            ));
        }
        Ok(SequenceLayout { letters, n })
    }

    pub fn letters(&self) -> &[String] {
        &self.letters
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Symbol index of letter `letter` at 1-based position `label`.
    pub fn symbol(&self, letter: usize, label: usize) -> usize {
        (label - 1) * self.letters.len() + letter
    }

    pub fn alphabet(&self) -> Vec<String> {
        (1..=self.n)
            .flat_map(|i| self.letters.iter().map(move |c| format!("{c}_{i}")))
            .collect()
    }

    /// Recovers the layout from an alphabet produced by [`Self::alphabet`].
    pub fn detect(alphabet: &[String]) -> Result<Self> {
        let mut letters = Vec::new();
        let mut n = 0;
        for s in alphabet {
            let (c, i) = s.rsplit_once('_').ok_or_else(|| {
                Error::parse(format!("symbol {s:?} is not of the form letter_index"))
            })?;
            let i: usize = i
                .parse()
                .map_err(|_| Error::parse(format!("bad index in {s:?}")))?;
            if !letters.iter().any(|l| l == c) {
                letters.push(c.to_owned());
            }
            n = n.max(i);
        }
        let layout = SequenceLayout::new(letters, n)?;
        if layout.alphabet() != alphabet {
            return Err(Error::parse(
                "alphabet is not a complete position-major sequence layout",
            ));
        }
        Ok(layout)
    }

    /// Tabulates `f(letters, labels)` into a moment functional on
    /// [`Self::alphabet`].
    pub fn moment_functional(
        &self,
        k_max: usize,
        mut f: impl FnMut(&[usize], &[usize]) -> Result<BigRational>,
    ) -> Result<MomentFunctional> {
        let l = self.letters.len();
        MomentFunctional::from_fn(self.alphabet(), k_max, BigRational::one(), |w| {
            let letters: Vec<usize> = w.iter().map(|s| s % l).collect();
            let labels: Vec<usize> = w.iter().map(|s| s / l + 1).collect();
            f(&letters, &labels)
        })
    }
}

/// Moments of the free, identically distributed sequence with cumulants
/// `spec`, on `layout.n()` positions.
pub fn free_iid_functional(
    spec: &CumulantSpec,
    n: usize,
    k_max: usize,
) -> Result<MomentFunctional> {
    let layout = SequenceLayout::new(spec.alphabet().to_vec(), n)?;
    layout.moment_functional(k_max, |letters, labels| {
        free_iid_moment(spec, letters, labels)
    })
}

/// Moments of tensor-independent, identically distributed symmetric `±1`
/// variables `x_1..x_n`: a word has moment 1 iff every position occurs an
/// even number of times.
pub fn tensor_bernoulli_functional(n: usize, k_max: usize) -> Result<MomentFunctional> {
    let layout = SequenceLayout::new(vec!["x".into()], n)?;
    layout.moment_functional(k_max, |_, labels| {
        let even = labels.iter().counts().values().all(|c| c % 2 == 0);
        Ok(if even {
            BigRational::one()
        } else {
            BigRational::zero()
        })
    })
}

#[derive(Clone, Debug)]
pub struct InvarianceWitness {
    pub letters: Vec<String>,
    pub j: Vec<usize>,
    pub deviation: f64,
}

#[derive(Clone, Debug)]
pub struct InvarianceVerdict {
    pub max_degree: usize,
    pub words_checked: usize,
    pub max_deviation: f64,
    /// The first word attaining `max_deviation`, if any deviation is nonzero.
    pub witness: Option<InvarianceWitness>,
}

impl InvarianceVerdict {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation <= tol
    }
}

/// Compares `Σ_i φ(c_{i1}⋯c_{ik}) u_{i1 j1}⋯u_{ik jk}` with `φ(c_{j1}⋯c_{jk})·1`
/// for every letter word and index word up to `max_degree`.
///
/// Deviations are sup-norm distances; with exact blocks a deviation is zero
/// only on exact equality. Passing for every permutation `U` is classical
/// exchangeability; passing for a particular noncommutative `U` is a
/// necessary condition for quantum exchangeability, not a sufficient one.
pub fn invariance_check<R: Ring>(
    mf: &MomentFunctional,
    u: &MagicUnitary<R>,
    max_degree: usize,
) -> Result<InvarianceVerdict> {
    let layout = SequenceLayout::detect(mf.alphabet())?;
    if layout.n() != u.n() {
        return Err(Error::Dimension {
            context: "invariance_check magic unitary size",
            expected: layout.n(),
            found: u.n(),
        });
    }
    if max_degree == 0 || max_degree > mf.k_max() {
        return Err(Error::Bound {
            what: "invariance degree",
            value: max_degree,
            min: 1,
            max: mf.k_max(),
        });
    }
    let n = layout.n();
    let nl = layout.letters().len();
    let mut cells = Vec::new();
    for k in 1..=max_degree {
        for letters in (0..k).map(|_| 0..nl).multi_cartesian_product() {
            for j in (0..k).map(|_| 1..=n).multi_cartesian_product() {
                cells.push((letters.clone(), j));
            }
        }
    }
    let deviations: Vec<f64> = cells
        .par_iter()
        .map(|(letters, j)| {
            let target = u.unit().scale(mf.moment(&symbols(&layout, letters, j))?);
            let mut i = Vec::with_capacity(j.len());
            let got = transported_sum(mf, &layout, u, letters, j, &mut i, None)?;
            Ok(got.distance(&target))
        })
        .collect::<Result<_>>()?;
    let mut verdict = InvarianceVerdict {
        max_degree,
        words_checked: cells.len(),
        max_deviation: 0.0,
        witness: None,
    };
    for ((letters, j), dev) in cells.into_iter().zip(deviations) {
        if dev > verdict.max_deviation {
            verdict.max_deviation = dev;
            verdict.witness = Some(InvarianceWitness {
                letters: letters
                    .iter()
                    .map(|&c| layout.letters()[c].clone())
                    .collect(),
                j,
                deviation: dev,
            });
        }
    }
    Ok(verdict)
}

fn symbols(layout: &SequenceLayout, letters: &[usize], labels: &[usize]) -> Vec<usize> {
    letters
        .iter()
        .zip(labels)
        .map(|(&c, &i)| layout.symbol(c, i))
        .collect()
}

/// Depth-first `Σ_i φ(c at i) u_{i1 j1}⋯u_{ik jk}` with zero-product pruning.
fn transported_sum<R: Ring>(
    mf: &MomentFunctional,
    layout: &SequenceLayout,
    u: &MagicUnitary<R>,
    letters: &[usize],
    j: &[usize],
    i: &mut Vec<usize>,
    prefix: Option<&R>,
) -> Result<R> {
    let t = i.len();
    if t == j.len() {
        let p = prefix.expect("non-empty word");
        return Ok(p.scale(mf.moment(&symbols(layout, letters, i))?));
    }
    let mut acc = u.unit().zero_like();
    for x in 1..=layout.n() {
        let block = u.block(x, j[t]);
        if block.vanishes() {
            continue;
        }
        let next = match prefix {
            Some(p) => p.mul(block),
            None => block.clone(),
        };
        if next.vanishes() {
            continue;
        }
        i.push(x);
        acc = acc.add(&transported_sum(mf, layout, u, letters, j, i, Some(&next))?);
        i.pop();
    }
    Ok(acc)
}

/// `Σ_{i : π ≤ ker i} u_{i1 j1}⋯u_{ik jk}`: one label per block of `π`.
pub fn block_sum_identity<R: Ring>(
    u: &MagicUnitary<R>,
    pi: &SetPartition,
    j: &[usize],
) -> Result<R> {
    let k = pi.ground_size();
    if j.len() != k {
        return Err(Error::Dimension {
            context: "block_sum_identity index word",
            expected: k,
            found: j.len(),
        });
    }
    if !pi.is_noncrossing() {
        return Err(Error::domain(format!("{pi} is crossing")));
    }
    if let Some(&bad) = j.iter().find(|&&x| x == 0 || x > u.n()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            n: u.n(),
        });
    }
    let labels = pi.labels();
    let mut acc = u.unit().zero_like();
    for assignment in (0..pi.block_count())
        .map(|_| 1..=u.n())
        .multi_cartesian_product()
    {
        let mut prod = u.unit();
        for t in 0..k {
            prod = prod.mul(u.block(assignment[labels[t]], j[t]));
            if prod.vanishes() {
                break;
            }
        }
        acc = acc.add(&prod);
    }
    Ok(acc)
}

/// Urn contents `λ_1..λ_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct UrnModel {
    lambda: Vec<BigRational>,
}

impl UrnModel {
    pub fn new(lambda: Vec<BigRational>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::Bound {
                what: "urn size",
                value: 0,
                min: 1,
                max: usize::MAX,
            });
        }
        Ok(UrnModel { lambda })
    }

    /// `n` entries repeating `profile` cyclically.
    pub fn from_profile(profile: &[BigRational], n: usize) -> Result<Self> {
        if profile.is_empty() {
            return Err(Error::domain("empty urn profile"));
        }
        UrnModel::new((0..n).map(|i| profile[i % profile.len()].clone()).collect())
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[BigRational] {
        &self.lambda
    }

    /// `p_s = Σ_i λ_i^s`.
    pub fn power_sum(&self, s: usize) -> BigRational {
        self.lambda.iter().map(|x| num::pow(x.clone(), s)).sum()
    }

    /// `m_s = p_s / n`, the moments of one draw.
    pub fn marginal_moment(&self, s: usize) -> BigRational {
        self.power_sum(s) / BigRational::from_integer(BigInt::from(self.n()))
    }

    /// Largest `|λ_i|`.
    pub fn sup_norm(&self) -> BigRational {
        self.lambda
            .iter()
            .map(|x| x.abs())
            .max()
            .expect("non-empty")
    }

    fn check_word(&self, j: &[usize]) -> Result<()> {
        if j.is_empty() || j.len() > DEFAULT_K_MAX {
            return Err(Error::Bound {
                what: "word length",
                value: j.len(),
                min: 1,
                max: DEFAULT_K_MAX,
            });
        }
        if let Some(&bad) = j.iter().find(|&&x| x == 0 || x > self.n()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                n: self.n(),
            });
        }
        Ok(())
    }

    /// Distinct values of `λ` with multiplicities, in first-seen order.
    fn value_classes(&self) -> Vec<(BigRational, usize)> {
        let mut classes: Vec<(BigRational, usize)> = Vec::new();
        for x in &self.lambda {
            match classes.iter_mut().find(|c| &c.0 == x) {
                Some(c) => c.1 += 1,
                None => classes.push((x.clone(), 1)),
            }
        }
        classes
    }

    /// `m_λ(τ) = Σ_{f injective: blocks → {1..n}} Π_V λ_{f(V)}^{|V|}`,
    /// counted by assigning value classes and taking falling factorials of
    /// their multiplicities.
    pub fn injection_weight(&self, tau: &SetPartition) -> BigRational {
        let sizes: Vec<usize> = tau.blocks().iter().map(Vec::len).collect();
        let classes = self.value_classes();
        let mut used = vec![0usize; classes.len()];
        fn go(
            sizes: &[usize],
            classes: &[(BigRational, usize)],
            used: &mut [usize],
        ) -> BigRational {
            let Some((&s, rest)) = sizes.split_first() else {
                return BigRational::one();
            };
            let mut acc = BigRational::zero();
            for c in 0..classes.len() {
                let free = classes[c].1 - used[c];
                if free == 0 || classes[c].0.is_zero() {
                    continue;
                }
                used[c] += 1;
                let w = num::pow(classes[c].0.clone(), s) * BigInt::from(free);
                acc += w * go(rest, classes, used);
                used[c] -= 1;
            }
            acc
        }
        go(&sizes, &classes, &mut used)
    }
}

/// `ψ_n(x_{j1}⋯x_{jk})` for the noncommutative urn `x_j = Σ_i λ_i u_ij`.
///
/// For `n ≥ 4`:
/// `Σ_{τ ∈ P(k)} m_λ(τ) Σ_{π ∈ NC(k), π ≤ τ} Σ_{σ ≤ ker j} W_kn(π,σ)`.
/// For `n ≤ 3`, where `A_s(n) = C(S_n)`, the index tuples are summed directly
/// against the symmetric-group average.
pub fn urn_moment_quantum(model: &UrnModel, j: &[usize]) -> Result<BigRational> {
    model.check_word(j)?;
    let n = model.n();
    let k = j.len();
    if n <= 3 {
        let mut acc = BigRational::zero();
        for i in (0..k).map(|_| 1..=n).multi_cartesian_product() {
            let w: BigRational = i.iter().map(|&x| model.lambda[x - 1].clone()).product();
            if !w.is_zero() {
                acc += w * haar_moment_symmetric(n, &i, j)?;
            }
        }
        return Ok(acc);
    }
    let lattice = nc_lattice(k)?;
    let table = weingarten_cached(k, n)?;
    let cols = lattice.below(&kernel(j)?);
    let colsum: Vec<BigRational> = (0..lattice.len())
        .map(|a| cols.iter().map(|&b| table.get(a, b).clone()).sum())
        .collect();
    let mut acc = BigRational::zero();
    for tau in enumerate_partitions(k)? {
        let m = model.injection_weight(&tau);
        if m.is_zero() {
            continue;
        }
        let inner: BigRational = lattice
            .below(&tau)
            .into_iter()
            .map(|a| colsum[a].clone())
            .sum();
        acc += m * inner;
    }
    Ok(acc)
}

/// `(1/n!) Σ_{τ ∈ S_n} Π_t λ_{τ(j_t)}`: drawing without replacement.
pub fn urn_moment_classical(model: &UrnModel, j: &[usize]) -> Result<BigRational> {
    model.check_word(j)?;
    let n = model.n();
    check_permutation_n(n)?;
    let mut total = BigRational::zero();
    let mut count = 0u64;
    for perm in (0..n).permutations(n) {
        count += 1;
        total += j
            .iter()
            .map(|&x| model.lambda[perm[x - 1]].clone())
            .product::<BigRational>();
    }
    Ok(total / BigRational::from_integer(BigInt::from(count)))
}

/// Single-letter cumulants of one urn draw, `κ_s` from `m_s = p_s / n`.
pub fn marginal_cumulants(model: &UrnModel, k_max: usize) -> Result<CumulantSpec> {
    let x = vec!["x".to_owned()];
    let marginal = MomentFunctional::from_fn(x.clone(), k_max, BigRational::one(), |w| {
        Ok(model.marginal_moment(w.len()))
    })?;
    let mut spec = CumulantSpec::new(x, k_max, BigRational::one())?;
    for s in 1..=k_max {
        let word = vec![0; s];
        let kappa = moments_to_cumulants(&marginal, &SetPartition::one(s)?, &word)?;
        spec.set(&word, kappa)?;
    }
    Ok(spec)
}

#[derive(Clone, Debug)]
pub struct GapReport {
    pub n: usize,
    pub j: Vec<usize>,
    pub urn: BigRational,
    pub free: BigRational,
    pub gap: BigRational,
    /// `d_k(n)`.
    pub dk: BigRational,
    /// `d_k(n)/n · max(1, max|λ_i|)^k`.
    pub bound: BigRational,
    pub within: bool,
}

/// Quantum urn moment against the free i.i.d. sequence whose single-variable
/// distribution matches one urn draw.
pub fn definetti_gap(model: &UrnModel, j: &[usize]) -> Result<GapReport> {
    model.check_word(j)?;
    let n = model.n();
    if n < 4 {
        return Err(Error::Bound {
            what: "n for the de Finetti gap",
            value: n,
            min: 4,
            max: usize::MAX,
        });
    }
    let k = j.len();
    let urn = urn_moment_quantum(model, j)?;
    let spec = marginal_cumulants(model, k)?;
    let free = free_iid_moment(&spec, &vec![0; k], j)?;
    let gap = (&urn - &free).abs();
    let dk = dk_value(k, &[n])?.max;
    let norm = num::pow(model.sup_norm().max(BigRational::one()), k);
    let bound = &dk / BigRational::from_integer(BigInt::from(n)) * norm;
    Ok(GapReport {
        n,
        j: j.to_vec(),
        within: gap <= bound,
        urn,
        free,
        gap,
        dk,
        bound,
    })
}

/// `n^{-|π|} Σ_{i : π ≤ ker i} λ_{i1}⋯λ_{ik}`, by direct summation.
pub fn kernel_restricted_average(model: &UrnModel, pi: &SetPartition) -> BigRational {
    let n = model.n();
    let labels = pi.labels();
    let mut acc = BigRational::zero();
    for assignment in (0..pi.block_count())
        .map(|_| 0..n)
        .multi_cartesian_product()
    {
        acc += labels
            .iter()
            .map(|&b| model.lambda[assignment[b]].clone())
            .product::<BigRational>();
    }
    acc / num::pow(BigRational::from_integer(BigInt::from(n)), pi.block_count())
}

/// `‖(1/n) Σ_i ρ_i(c)‖₂² = (1/n²) Σ_{i1,i2} φ(ρ_{i1}(c*) ρ_{i2}(c))` for a
/// free i.i.d. sequence with cumulants `spec`. `c` must be centred.
pub fn cesaro_variance(
    spec: &CumulantSpec,
    c: usize,
    c_star: usize,
    n: usize,
) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::Bound {
            what: "n",
            value: 0,
            min: 1,
            max: usize::MAX,
        });
    }
    for x in [c, c_star] {
        if !spec.get(&[x])?.is_zero() {
            return Err(Error::domain("cesaro_variance needs κ₁ = 0"));
        }
    }
    let mut acc = BigRational::zero();
    for i1 in 1..=n {
        for i2 in 1..=n {
            acc += free_iid_moment(spec, &[c_star, c], &[i1, i2])?;
        }
    }
    Ok(acc / BigRational::from_integer(BigInt::from(n * n)))
}

/// Distinct-index classes of `P(k)`: one canonical index word per kernel,
/// labelling blocks `1, 2, …` in order of first appearance.
pub fn canonical_index_words(k: usize, n: usize) -> Result<Vec<Vec<usize>>> {
    Ok(enumerate_partitions(k)?
        .into_iter()
        .filter(|p| p.block_count() <= n)
        .map(|p| p.labels().iter().map(|&b| b + 1).collect())
        .collect())
}

/// Urn moments for every canonical index word, keyed by the word.
pub fn urn_moment_table(model: &UrnModel, k: usize) -> Result<BTreeMap<Vec<usize>, BigRational>> {
    canonical_index_words(k, model.n())?
        .into_iter()
        .map(|j| urn_moment_quantum(model, &j).map(|v| (j, v)))
        .collect()
}
