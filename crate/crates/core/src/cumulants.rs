//! Moment and cumulant functionals indexed by non-crossing partitions.
//!
//! The central routine is [`nested_eval`], which evaluates `ρ^{(π)}` for a
//! non-crossing `π` by repeatedly collapsing an interval block and
//! multiplying its value onto the operand just before it. Everything else
//! (moment–cumulant conversion, free i.i.d. moments, the freeness check, the
//! matrix-valued instance) is a choice of [`BlockFunctional`].
//!
//! Operands are opaque algebra elements. Words over an alphabet use
//! [`LetterOperand`], i.e. a letter followed by a base-algebra coefficient on
//! its right; base-algebra elements interleaved between letters are absorbed
//! into the preceding operand.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, One};
use serde_json::{json, Value as Json};

use crate::algebra::{parse_rational, rational_to_string, CMatrix, Ring};
use crate::error::{Error, Result};
use crate::partitions::{kernel, nc_lattice, SetPartition, DEFAULT_K_MAX};

/// Block values for [`nested_eval`].
pub trait BlockFunctional {
    type Operand: Clone;
    type Value: Clone;

    /// `ρ^{(s)}(a_1 ⊗ … ⊗ a_s)` for one contiguous window.
    fn block(&self, window: &[Self::Operand]) -> Result<Self::Value>;

    /// `a · b`: multiplies a block value onto the operand on its left.
    fn absorb(&self, operand: &Self::Operand, value: &Self::Value) -> Result<Self::Operand>;

    /// `b · v` for a block collapsed at the very front.
    fn left_mul(&self, value: &Self::Value, rest: &Self::Value) -> Self::Value;
}

/// Evaluates `ρ^{(π)}[a_1 ⊗ … ⊗ a_k]` by interval extraction.
pub fn nested_eval<F: BlockFunctional>(
    pi: &SetPartition,
    operands: &[F::Operand],
    f: &F,
) -> Result<F::Value> {
    let ops = prepare(pi, operands)?;
    Ok(eval_orders(ops, f, false)?
        .pop()
        .expect("one evaluation order"))
}

/// Every value reachable by varying the choice of interval block at each
/// step. All entries coincide when `f` is a genuine bimodule functional.
pub fn nested_eval_all_orders<F: BlockFunctional>(
    pi: &SetPartition,
    operands: &[F::Operand],
    f: &F,
) -> Result<Vec<F::Value>> {
    eval_orders(prepare(pi, operands)?, f, true)
}

fn prepare<T: Clone>(pi: &SetPartition, operands: &[T]) -> Result<Vec<(usize, T)>> {
    if pi.ground_size() != operands.len() {
        return Err(Error::Dimension {
            context: "nested_eval operands",
            expected: pi.ground_size(),
            found: operands.len(),
        });
    }
    if !pi.is_noncrossing() {
        return Err(Error::domain(format!("{pi} is crossing")));
    }
    Ok(pi
        .labels()
        .iter()
        .copied()
        .zip(operands.iter().cloned())
        .collect())
}

/// Contiguous runs of `ops` that hold a whole block: `(start, end)` inclusive.
fn interval_blocks<T>(ops: &[(usize, T)]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < ops.len() {
        let b = ops[start].0;
        let mut end = start;
        while end + 1 < ops.len() && ops[end + 1].0 == b {
            end += 1;
        }
        if ops.iter().filter(|o| o.0 == b).count() == end - start + 1 {
            out.push((start, end));
        }
        start = end + 1;
    }
    out
}

fn eval_orders<F: BlockFunctional>(
    ops: Vec<(usize, F::Operand)>,
    f: &F,
    all: bool,
) -> Result<Vec<F::Value>> {
    let window = |s: usize, e: usize| ops[s..=e].iter().map(|o| o.1.clone()).collect::<Vec<_>>();
    if ops.iter().all(|o| o.0 == ops[0].0) {
        return Ok(vec![f.block(&window(0, ops.len() - 1))?]);
    }
    let mut choices = interval_blocks(&ops);
    if !all {
        // Prefer an interval with a left neighbour, as in the textbook recursion.
        let pick = choices
            .iter()
            .copied()
            .find(|c| c.0 > 0)
            .unwrap_or(choices[0]);
        choices = vec![pick];
    }
    let mut results = Vec::new();
    for (s, e) in choices {
        let value = f.block(&window(s, e))?;
        let mut rest: Vec<(usize, F::Operand)> =
            ops[..s].iter().chain(&ops[e + 1..]).cloned().collect();
        if s > 0 {
            rest[s - 1].1 = f.absorb(&rest[s - 1].1, &value)?;
            results.extend(eval_orders(rest, f, all)?);
        } else {
            for tail in eval_orders(rest, f, all)? {
                results.push(f.left_mul(&value, &tail));
            }
        }
    }
    Ok(results)
}

/// The element `c_letter · coeff`.
#[derive(Clone, Debug, PartialEq)]
pub struct LetterOperand<V> {
    pub letter: usize,
    pub coeff: V,
}

/// Operands for a bare word: every coefficient is the unit.
pub fn letter_operands<V: Ring>(word: &[usize], unit: &V) -> Vec<LetterOperand<V>> {
    word.iter()
        .map(|&letter| LetterOperand {
            letter,
            coeff: unit.one_like(),
        })
        .collect()
}

/// Anything that assigns a value to a word of letters.
pub trait WordValues {
    type Value: Ring;
    fn word_value(&self, word: &[usize]) -> Result<Self::Value>;
}

/// Block functional reading block values from a word table. A block value
/// acts on the coefficients inside the block as `K_w · b_1 ⋯ b_s`.
pub struct TableFunctional<'a, T>(pub &'a T);

impl<T: WordValues> BlockFunctional for TableFunctional<'_, T> {
    type Operand = LetterOperand<T::Value>;
    type Value = T::Value;

    fn block(&self, window: &[Self::Operand]) -> Result<T::Value> {
        let word: Vec<usize> = window.iter().map(|o| o.letter).collect();
        let mut v = self.0.word_value(&word)?;
        for o in window {
            v = v.mul(&o.coeff);
        }
        Ok(v)
    }

    fn absorb(&self, operand: &Self::Operand, value: &T::Value) -> Result<Self::Operand> {
        Ok(LetterOperand {
            letter: operand.letter,
            coeff: operand.coeff.mul(value),
        })
    }

    fn left_mul(&self, value: &T::Value, rest: &T::Value) -> T::Value {
        value.mul(rest)
    }
}

fn check_alphabet_word(alphabet_len: usize, k_max: usize, word: &[usize]) -> Result<()> {
    if word.is_empty() || word.len() > k_max {
        return Err(Error::Bound {
            what: "word length",
            value: word.len(),
            min: 1,
            max: k_max,
        });
    }
    if let Some(&bad) = word.iter().find(|&&l| l >= alphabet_len) {
        return Err(Error::IndexOutOfRange {
            index: bad + 1,
            n: alphabet_len,
        });
    }
    Ok(())
}

fn all_words(alphabet_len: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..alphabet_len).map(move |l| {
                    let mut x = w.clone();
                    x.push(l);
                    x
                })
            })
            .collect();
    }
    out
}

/// Exact moments `φ(w)` for every non-empty word `w` up to length `k_max`.
#[derive(Clone, Debug)]
pub struct MomentFunctional<V = BigRational> {
    alphabet: Vec<String>,
    k_max: usize,
    values: BTreeMap<Vec<usize>, V>,
    unit: V,
    involution: Option<Vec<usize>>,
}

impl<V: Ring> MomentFunctional<V> {
    /// Tabulates `f` on every word of length `1..=k_max`.
    pub fn from_fn(
        alphabet: Vec<String>,
        k_max: usize,
        unit: V,
        mut f: impl FnMut(&[usize]) -> Result<V>,
    ) -> Result<Self> {
        check_k_max(k_max)?;
        let mut values = BTreeMap::new();
        for k in 1..=k_max {
            for w in all_words(alphabet.len(), k) {
                let v = f(&w)?;
                values.insert(w, v);
            }
        }
        Ok(MomentFunctional {
            alphabet,
            k_max,
            values,
            unit,
            involution: None,
        })
    }

    /// Builds from explicit values; every word up to `k_max` must be present.
    pub fn from_values(
        alphabet: Vec<String>,
        k_max: usize,
        unit: V,
        values: BTreeMap<Vec<usize>, V>,
    ) -> Result<Self> {
        check_k_max(k_max)?;
        for k in 1..=k_max {
            for w in all_words(alphabet.len(), k) {
                if !values.contains_key(&w) {
                    let names: Vec<&str> = w.iter().map(|&l| alphabet[l].as_str()).collect();
                    return Err(Error::domain(format!(
                        "moment of word {} is missing",
                        names.join(",")
                    )));
                }
            }
        }
        Ok(MomentFunctional {
            alphabet,
            k_max,
            values,
            unit,
            involution: None,
        })
    }

    /// Declares the symbol-wise involution `c ↦ c*` used by
    /// [`Self::is_state_like`].
    pub fn with_involution(mut self, involution: Vec<usize>) -> Result<Self> {
        if involution.len() != self.alphabet.len()
            || involution.iter().any(|&x| x >= self.alphabet.len())
        {
            return Err(Error::Dimension {
                context: "involution",
                expected: self.alphabet.len(),
                found: involution.len(),
            });
        }
        self.involution = Some(involution);
        Ok(self)
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn unit(&self) -> &V {
        &self.unit
    }

    pub fn values(&self) -> &BTreeMap<Vec<usize>, V> {
        &self.values
    }

    pub fn moment(&self, word: &[usize]) -> Result<&V> {
        check_alphabet_word(self.alphabet.len(), self.k_max, word)?;
        Ok(self.values.get(word).expect("complete table"))
    }

    pub fn symbol(&self, name: &str) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::parse(format!("unknown symbol {name:?}")))
    }

    /// Parses `"a,b,a"` into symbol indices.
    pub fn parse_word(&self, text: &str) -> Result<Vec<usize>> {
        parse_word(&self.alphabet, text)
    }

    /// `φ(w*) = φ(w)*` with `w*` the reversed word under the declared
    /// involution. Vacuously true when none is declared.
    pub fn is_state_like(&self, tol: f64) -> bool {
        let Some(inv) = &self.involution else {
            return true;
        };
        self.values.iter().all(|(w, v)| {
            let star: Vec<usize> = w.iter().rev().map(|&l| inv[l]).collect();
            self.values[&star].approx_eq(&v.adjoint(), tol)
        })
    }
}

impl<V: Ring> WordValues for MomentFunctional<V> {
    type Value = V;
    fn word_value(&self, word: &[usize]) -> Result<V> {
        self.moment(word).cloned()
    }
}

fn check_k_max(k_max: usize) -> Result<()> {
    if k_max == 0 || k_max > DEFAULT_K_MAX {
        return Err(Error::Bound {
            what: "k_max",
            value: k_max,
            min: 1,
            max: DEFAULT_K_MAX,
        });
    }
    Ok(())
}

pub(crate) fn parse_word(alphabet: &[String], text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            alphabet
                .iter()
                .position(|a| a == s)
                .ok_or_else(|| Error::parse(format!("unknown symbol {s:?}")))
        })
        .collect()
}

fn word_key(alphabet: &[String], word: &[usize]) -> String {
    word.iter()
        .map(|&l| alphabet[l].as_str())
        .collect::<Vec<_>>()
        .join(",")
}

fn json_alphabet(v: &Json) -> Result<Vec<String>> {
    v.get("alphabet")
        .and_then(Json::as_array)
        .ok_or_else(|| Error::parse("missing \"alphabet\" array"))?
        .iter()
        .map(|s| {
            s.as_str()
                .map(str::to_owned)
                .ok_or_else(|| Error::parse("alphabet entries must be strings"))
        })
        .collect()
}

fn json_k_max(v: &Json) -> Result<usize> {
    v.get("k_max")
        .and_then(Json::as_u64)
        .map(|k| k as usize)
        .ok_or_else(|| Error::parse("missing integer \"k_max\""))
}

fn json_word_map(
    v: &Json,
    key: &str,
    alphabet: &[String],
) -> Result<BTreeMap<Vec<usize>, BigRational>> {
    let obj = v
        .get(key)
        .and_then(Json::as_object)
        .ok_or_else(|| Error::parse(format!("missing \"{key}\" object")))?;
    obj.iter()
        .map(|(w, q)| {
            let word = parse_word(alphabet, w)?;
            let q = q
                .as_str()
                .ok_or_else(|| Error::parse(format!("value for {w:?} must be a \"p/q\" string")))?;
            Ok((word, parse_rational(q)?))
        })
        .collect()
}

impl MomentFunctional<BigRational> {
    /// `{"alphabet":[…], "k_max":…, "moments":{"a,b":"p/q", …}}`.
    pub fn to_json(&self) -> Json {
        let moments: serde_json::Map<String, Json> = self
            .values
            .iter()
            .map(|(w, v)| {
                (
                    word_key(&self.alphabet, w),
                    Json::String(rational_to_string(v)),
                )
            })
            .collect();
        json!({ "alphabet": self.alphabet, "k_max": self.k_max, "moments": moments })
    }

    pub fn from_json(v: &Json) -> Result<Self> {
        let alphabet = json_alphabet(v)?;
        let k_max = json_k_max(v)?;
        let values = json_word_map(v, "moments", &alphabet)?;
        Self::from_values(alphabet, k_max, BigRational::one(), values)
    }
}

/// Block values `κ_s(w)` of a cumulant family, keyed by letter words. Words
/// not listed have cumulant zero.
#[derive(Clone, Debug)]
pub struct CumulantSpec<V = BigRational> {
    alphabet: Vec<String>,
    k_max: usize,
    values: BTreeMap<Vec<usize>, V>,
    unit: V,
}

impl<V: Ring> CumulantSpec<V> {
    pub fn new(alphabet: Vec<String>, k_max: usize, unit: V) -> Result<Self> {
        check_k_max(k_max)?;
        Ok(CumulantSpec {
            alphabet,
            k_max,
            values: BTreeMap::new(),
            unit,
        })
    }

    pub fn set(&mut self, word: &[usize], value: V) -> Result<()> {
        check_alphabet_word(self.alphabet.len(), self.k_max, word)?;
        self.values.insert(word.to_vec(), value);
        Ok(())
    }

    pub fn with(mut self, word: &[usize], value: V) -> Result<Self> {
        self.set(word, value)?;
        Ok(self)
    }

    pub fn get(&self, word: &[usize]) -> Result<V> {
        check_alphabet_word(self.alphabet.len(), self.k_max, word)?;
        Ok(self
            .values
            .get(word)
            .cloned()
            .unwrap_or_else(|| self.unit.zero_like()))
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn unit(&self) -> &V {
        &self.unit
    }

    pub fn parse_word(&self, text: &str) -> Result<Vec<usize>> {
        parse_word(&self.alphabet, text)
    }
}

impl<V: Ring> WordValues for CumulantSpec<V> {
    type Value = V;
    fn word_value(&self, word: &[usize]) -> Result<V> {
        self.get(word)
    }
}

impl CumulantSpec<BigRational> {
    /// Single letter with `κ_2 = 1` and every other cumulant zero.
    pub fn semicircular(k_max: usize) -> Result<Self> {
        let x = vec!["x".to_owned()];
        CumulantSpec::new(x, k_max, BigRational::one())?.with(&[0, 0], BigRational::one())
    }

    /// Single letter with every cumulant equal to one.
    pub fn free_poisson(k_max: usize) -> Result<Self> {
        let mut spec = CumulantSpec::new(vec!["x".to_owned()], k_max, BigRational::one())?;
        for s in 1..=k_max {
            spec.set(&vec![0; s], BigRational::one())?;
        }
        Ok(spec)
    }

    /// `{"alphabet":[…], "k_max":…, "cumulants":{"a,b":"p/q", …}}`.
    pub fn to_json(&self) -> Json {
        let cumulants: serde_json::Map<String, Json> = self
            .values
            .iter()
            .map(|(w, v)| {
                (
                    word_key(&self.alphabet, w),
                    Json::String(rational_to_string(v)),
                )
            })
            .collect();
        json!({ "alphabet": self.alphabet, "k_max": self.k_max, "cumulants": cumulants })
    }

    pub fn from_json(v: &Json) -> Result<Self> {
        let alphabet = json_alphabet(v)?;
        let k_max = json_k_max(v)?;
        let mut spec = CumulantSpec::new(alphabet.clone(), k_max, BigRational::one())?;
        for (w, q) in json_word_map(v, "cumulants", &alphabet)? {
            spec.set(&w, q)?;
        }
        Ok(spec)
    }
}

/// `E[c_{w1} ⋯ c_{wk}] = Σ_{π ∈ NC(k)} κ^{(π)}[c_{w1} ⊗ … ⊗ c_{wk}]`.
pub fn cumulants_to_moments<V: Ring>(spec: &CumulantSpec<V>, word: &[usize]) -> Result<V> {
    check_alphabet_word(spec.alphabet.len(), spec.k_max, word)?;
    let ops = letter_operands(word, &spec.unit);
    let f = TableFunctional(spec);
    let lattice = nc_lattice(word.len())?;
    let mut acc = spec.unit.zero_like();
    for pi in lattice.elements() {
        acc = acc.add(&nested_eval(pi, &ops, &f)?);
    }
    Ok(acc)
}

/// `κ^{(π)}[w] = Σ_{σ ∈ NC(k), σ ≤ π} μ(σ,π) E^{(σ)}[w]`.
pub fn moments_to_cumulants<V: Ring>(
    mf: &MomentFunctional<V>,
    pi: &SetPartition,
    word: &[usize],
) -> Result<V> {
    check_alphabet_word(mf.alphabet.len(), mf.k_max, word)?;
    if pi.ground_size() != word.len() {
        return Err(Error::Dimension {
            context: "moments_to_cumulants",
            expected: word.len(),
            found: pi.ground_size(),
        });
    }
    let lattice = nc_lattice(word.len())?;
    let b = lattice
        .position(pi)
        .ok_or_else(|| Error::domain(format!("{pi} is crossing")))?;
    let ops = letter_operands(word, &mf.unit);
    let f = TableFunctional(mf);
    let mut acc = mf.unit.zero_like();
    for a in 0..=b {
        if !lattice.leq(a, b) {
            continue;
        }
        let mu = lattice.mobius(a, b);
        if mu == 0 {
            continue;
        }
        let term = nested_eval(&lattice.elements()[a], &ops, &f)?;
        acc = acc.add(&term.scale(&BigRational::from_integer(BigInt::from(mu))));
    }
    Ok(acc)
}

/// Moment of a free, identically distributed family with common cumulants
/// `spec`: `Σ_{π ∈ NC(k), π ≤ ker i} κ^{(π)}[c_1 ⊗ … ⊗ c_k]`.
pub fn free_iid_moment<V: Ring, L: Eq + std::hash::Hash>(
    spec: &CumulantSpec<V>,
    letters: &[usize],
    labels: &[L],
) -> Result<V> {
    check_alphabet_word(spec.alphabet.len(), spec.k_max, letters)?;
    if letters.len() != labels.len() {
        return Err(Error::Dimension {
            context: "free_iid_moment labels",
            expected: letters.len(),
            found: labels.len(),
        });
    }
    let ker = kernel(labels)?;
    let lattice = nc_lattice(letters.len())?;
    let ops = letter_operands(letters, &spec.unit);
    let f = TableFunctional(spec);
    let mut acc = spec.unit.zero_like();
    for a in lattice.below(&ker) {
        acc = acc.add(&nested_eval(&lattice.elements()[a], &ops, &f)?);
    }
    Ok(acc)
}

/// A mixed cumulant that failed to vanish.
#[derive(Clone, Debug)]
pub struct FreenessViolation {
    pub partition: SetPartition,
    pub word: Vec<String>,
    pub magnitude: f64,
}

#[derive(Clone, Debug)]
pub struct FreenessVerdict {
    pub free: bool,
    pub checked: usize,
    pub violation_count: usize,
    /// The first violations found, in word order (at most
    /// [`MAX_REPORTED_VIOLATIONS`]).
    pub violations: Vec<FreenessViolation>,
}

pub const MAX_REPORTED_VIOLATIONS: usize = 64;

/// Vanishing of mixed cumulants: for every word up to `k_max` and every
/// `π ∈ NC(k)` with `π ≰ ker(labels)`, `κ^{(π)}` must vanish. Exact values
/// must be exactly zero; inexact ones within `tol`.
pub fn freeness_check<V: Ring>(
    mf: &MomentFunctional<V>,
    family: &[usize],
    tol: f64,
) -> Result<FreenessVerdict> {
    if family.len() != mf.alphabet.len() {
        return Err(Error::Dimension {
            context: "freeness_check family labels",
            expected: mf.alphabet.len(),
            found: family.len(),
        });
    }
    let mut verdict = FreenessVerdict {
        free: true,
        checked: 0,
        violation_count: 0,
        violations: Vec::new(),
    };
    for k in 2..=mf.k_max {
        let lattice = nc_lattice(k)?;
        for w in all_words(mf.alphabet.len(), k) {
            let labels: Vec<usize> = w.iter().map(|&l| family[l]).collect();
            let ker = kernel(&labels)?;
            if ker.block_count() == 1 {
                continue;
            }
            for pi in lattice.elements() {
                if pi.leq(&ker)? {
                    continue;
                }
                verdict.checked += 1;
                let kappa = moments_to_cumulants(mf, pi, &w)?;
                let vanishes = if V::EXACT {
                    kappa.vanishes()
                } else {
                    kappa.max_abs() <= tol
                };
                if !vanishes {
                    verdict.free = false;
                    verdict.violation_count += 1;
                    if verdict.violations.len() < MAX_REPORTED_VIOLATIONS {
                        verdict.violations.push(FreenessViolation {
                            partition: pi.clone(),
                            word: w.iter().map(|&l| mf.alphabet[l].clone()).collect(),
                            magnitude: kappa.max_abs(),
                        });
                    }
                }
            }
        }
    }
    Ok(verdict)
}

/// `M_d(ℂ) ⊗ M_m(ℂ)` with the conditional expectation `id ⊗ tr_m` onto
/// `M_d(ℂ) ⊗ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatrixProbabilitySpace {
    pub d: usize,
    pub m: usize,
}

impl MatrixProbabilitySpace {
    pub fn new(d: usize, m: usize) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::Bound {
                what: "matrix space dimension",
                value: 0,
                min: 1,
                max: usize::MAX,
            });
        }
        Ok(MatrixProbabilitySpace { d, m })
    }

    pub fn dim(&self) -> usize {
        self.d * self.m
    }

    fn check_element(&self, a: &CMatrix) -> Result<()> {
        if a.nrows() != self.dim() || a.ncols() != self.dim() {
            return Err(Error::Dimension {
                context: "matrix space element",
                expected: self.dim(),
                found: a.nrows().max(a.ncols()),
            });
        }
        Ok(())
    }

    /// `b ⊗ 1_m`.
    pub fn embed(&self, b: &CMatrix) -> Result<CMatrix> {
        if b.nrows() != self.d || b.ncols() != self.d {
            return Err(Error::Dimension {
                context: "base algebra element",
                expected: self.d,
                found: b.nrows().max(b.ncols()),
            });
        }
        Ok(b.kron_identity(self.m))
    }

    /// `E[a]_{αβ} = (1/m) Σ_x a_{(α,x),(β,x)}`.
    pub fn expectation(&self, a: &CMatrix) -> Result<CMatrix> {
        self.check_element(a)?;
        let m = self.m;
        let scale = 1.0 / m as f64;
        Ok(CMatrix::from_fn(self.d, self.d, |alpha, beta| {
            (0..m)
                .map(|x| a.0[(alpha * m + x, beta * m + x)])
                .sum::<num::complex::Complex64>()
                * scale
        }))
    }

    /// `E[a_1 ⋯ a_k]`.
    pub fn moment(&self, operands: &[CMatrix]) -> Result<CMatrix> {
        let first = operands
            .first()
            .ok_or_else(|| Error::domain("empty operand list"))?;
        let mut prod = first.clone();
        for a in &operands[1..] {
            self.check_element(a)?;
            prod = prod.mul(a);
        }
        self.expectation(&prod)
    }

    /// Full cumulant `κ_k(a_1,…,a_k)`, solved recursively from the
    /// moment–cumulant formula.
    pub fn cumulant(&self, operands: &[CMatrix]) -> Result<CMatrix> {
        let k = operands.len();
        let lattice = nc_lattice(k)?;
        let f = MatrixCumulants(self);
        let mut acc = self.moment(operands)?;
        let top = lattice.len() - 1;
        for pi in &lattice.elements()[..top] {
            acc = acc.sub(&nested_eval(pi, operands, &f)?);
        }
        Ok(acc)
    }

    /// `κ^{(π)}` by nesting the recursive full cumulants.
    pub fn cumulant_partition(&self, pi: &SetPartition, operands: &[CMatrix]) -> Result<CMatrix> {
        nested_eval(pi, operands, &MatrixCumulants(self))
    }

    /// `κ^{(π)}` by Möbius inversion of nested moments.
    pub fn cumulant_mobius(&self, pi: &SetPartition, operands: &[CMatrix]) -> Result<CMatrix> {
        let lattice = nc_lattice(operands.len())?;
        let b = lattice
            .position(pi)
            .ok_or_else(|| Error::domain(format!("{pi} is crossing")))?;
        let f = MatrixMoments(self);
        let mut acc = CMatrix::zeros(self.d, self.d);
        for a in 0..=b {
            let mu = if lattice.leq(a, b) {
                lattice.mobius(a, b)
            } else {
                0
            };
            if mu != 0 {
                let term = nested_eval(&lattice.elements()[a], operands, &f)?;
                acc = acc.add(&term.scale(&BigRational::from_integer(BigInt::from(mu))));
            }
        }
        Ok(acc)
    }
}

/// `matrix_expectation(space, a) = (id ⊗ tr_m)(a)`.
pub fn matrix_expectation(space: &MatrixProbabilitySpace, element: &CMatrix) -> Result<CMatrix> {
    space.expectation(element)
}

/// Nested moments `E^{(π)}` in a [`MatrixProbabilitySpace`].
pub struct MatrixMoments<'a>(pub &'a MatrixProbabilitySpace);

/// Nested cumulants `κ^{(π)}` in a [`MatrixProbabilitySpace`].
pub struct MatrixCumulants<'a>(pub &'a MatrixProbabilitySpace);

impl BlockFunctional for MatrixMoments<'_> {
    type Operand = CMatrix;
    type Value = CMatrix;

    fn block(&self, window: &[CMatrix]) -> Result<CMatrix> {
        self.0.moment(window)
    }
    fn absorb(&self, operand: &CMatrix, value: &CMatrix) -> Result<CMatrix> {
        Ok(operand.mul(&self.0.embed(value)?))
    }
    fn left_mul(&self, value: &CMatrix, rest: &CMatrix) -> CMatrix {
        value.mul(rest)
    }
}

impl BlockFunctional for MatrixCumulants<'_> {
    type Operand = CMatrix;
    type Value = CMatrix;

    fn block(&self, window: &[CMatrix]) -> Result<CMatrix> {
        self.0.cumulant(window)
    }
    fn absorb(&self, operand: &CMatrix, value: &CMatrix) -> Result<CMatrix> {
        Ok(operand.mul(&self.0.embed(value)?))
    }
    fn left_mul(&self, value: &CMatrix, rest: &CMatrix) -> CMatrix {
        value.mul(rest)
    }
}

/// Catalan number `C_p`, exact.
pub fn catalan(p: usize) -> BigInt {
    // C_p = binom(2p, p) / (p + 1)
    let mut c = BigInt::one();
    for i in 0..p {
        c = c * BigInt::from(2 * (2 * i + 1)) / BigInt::from(i + 2);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{int, rat};
    use crate::partitions::enumerate_nc;

    fn p(s: &str) -> SetPartition {
        s.parse().unwrap()
    }

    /// Records the order in which block values are combined, symbolically.
    struct Trace;

    impl BlockFunctional for Trace {
        type Operand = String;
        type Value = String;
        fn block(&self, window: &[String]) -> Result<String> {
            Ok(format!("f{}({})", window.len(), window.join(",")))
        }
        fn absorb(&self, operand: &String, value: &String) -> Result<String> {
            Ok(format!("{operand}·{value}"))
        }
        fn left_mul(&self, value: &String, rest: &String) -> String {
            format!("{value}·{rest}")
        }
    }

    #[test]
    fn nested_eval_traces() {
        let ops: Vec<String> = ["a1", "a2", "a3"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            nested_eval(&p("1,2,3"), &ops, &Trace).unwrap(),
            "f3(a1,a2,a3)"
        );
        assert_eq!(
            nested_eval(&p("1,3|2"), &ops, &Trace).unwrap(),
            "f2(a1·f1(a2),a3)"
        );
        assert!(matches!(
            nested_eval(
                &p("1,3|2,4"),
                &[ops.clone(), vec!["a4".into()]].concat(),
                &Trace
            ),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            nested_eval(&p("1,2"), &ops, &Trace),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn discrete_partition_is_product() {
        let spec = CumulantSpec::new(vec!["a".into(), "b".into()], 4, BigRational::one())
            .unwrap()
            .with(&[0], rat(1, 2))
            .unwrap()
            .with(&[1], rat(-3, 5))
            .unwrap();
        let ops = letter_operands(&[0, 1, 1, 0], &BigRational::one());
        let v = nested_eval(
            &SetPartition::zero(4).unwrap(),
            &ops,
            &TableFunctional(&spec),
        )
        .unwrap();
        assert_eq!(v, rat(1, 2) * rat(-3, 5) * rat(-3, 5) * rat(1, 2));
    }

    #[test]
    fn semicircular_and_free_poisson_moments() {
        let semi = CumulantSpec::semicircular(8).unwrap();
        for p_ in 1..=4usize {
            assert_eq!(
                cumulants_to_moments(&semi, &vec![0; 2 * p_]).unwrap(),
                BigRational::from_integer(catalan(p_))
            );
            assert_eq!(
                cumulants_to_moments(&semi, &vec![0; 2 * p_ - 1]).unwrap(),
                int(0)
            );
        }
        let poisson = CumulantSpec::free_poisson(6).unwrap();
        for k in 1..=6 {
            assert_eq!(
                cumulants_to_moments(&poisson, &vec![0; k]).unwrap(),
                BigRational::from_integer(catalan(k))
            );
        }
    }

    fn two_letter_moments() -> MomentFunctional {
        // Arbitrary non-symmetric moments on {a, b}.
        let alphabet = vec!["a".to_owned(), "b".to_owned()];
        MomentFunctional::from_fn(alphabet, 3, BigRational::one(), |w| {
            let mut v = int(1);
            for (t, &l) in w.iter().enumerate() {
                v = v * rat(2 + l as i64 + t as i64, 3) + int(l as i64);
            }
            Ok(v)
        })
        .unwrap()
    }

    #[test]
    fn low_order_cumulants() {
        let mf = two_letter_moments();
        let k1 = moments_to_cumulants(&mf, &p("1"), &[1]).unwrap();
        assert_eq!(&k1, mf.moment(&[1]).unwrap());
        let k2 = moments_to_cumulants(&mf, &p("1,2"), &[0, 1]).unwrap();
        assert_eq!(
            k2,
            mf.moment(&[0, 1]).unwrap() - mf.moment(&[0]).unwrap() * mf.moment(&[1]).unwrap()
        );
    }

    #[test]
    fn nested_eval_is_order_independent() {
        let mf = two_letter_moments();
        for k in 1..=3 {
            for pi in enumerate_nc(k).unwrap() {
                for w in all_words(2, k) {
                    let ops = letter_operands(&w, &BigRational::one());
                    let vals = nested_eval_all_orders(&pi, &ops, &TableFunctional(&mf)).unwrap();
                    assert!(vals.windows(2).all(|x| x[0] == x[1]));
                }
            }
        }
    }

    #[test]
    fn free_iid_examples() {
        let semi = CumulantSpec::semicircular(4).unwrap();
        let x = [0usize; 4];
        assert_eq!(
            free_iid_moment(&semi, &x, &[1, 1, 1, 1]).unwrap(),
            cumulants_to_moments(&semi, &x).unwrap()
        );
        // Oracle: among NC pairings of 4 points, {1,4}{2,3} and {1,2}{3,4}
        // both join unequal labels under (1,2,1,2); the pairing {1,3}{2,4}
        // fits the labels but crosses. Nothing survives.
        assert_eq!(free_iid_moment(&semi, &x, &[1, 2, 1, 2]).unwrap(), int(0));
        assert_eq!(free_iid_moment(&semi, &x, &[1, 1, 2, 2]).unwrap(), int(1));
        assert_eq!(free_iid_moment(&semi, &x[..2], &[1, 2]).unwrap(), int(0));
        assert!(free_iid_moment(&semi, &x[..2], &[1]).is_err());
    }

    #[test]
    fn freeness_check_examples() {
        // Free family built from cumulants over labelled symbols a_1, a_2.
        let spec = CumulantSpec::new(vec!["a".into()], 4, BigRational::one())
            .unwrap()
            .with(&[0], rat(1, 3))
            .unwrap()
            .with(&[0, 0], rat(2, 1))
            .unwrap()
            .with(&[0, 0, 0, 0], rat(-1, 7))
            .unwrap();
        let names = vec!["a_1".to_owned(), "a_2".to_owned()];
        let mf = MomentFunctional::from_fn(names, 4, BigRational::one(), |w| {
            free_iid_moment(&spec, &vec![0; w.len()], w)
        })
        .unwrap();
        let v = freeness_check(&mf, &[0, 1], 0.0).unwrap();
        assert!(v.free && v.violations.is_empty() && v.checked > 0);

        // Tensor-independent ±1 Bernoulli pair.
        let mf =
            MomentFunctional::from_fn(vec!["a".into(), "b".into()], 4, BigRational::one(), |w| {
                let even = (0..2).all(|l| w.iter().filter(|&&x| x == l).count() % 2 == 0);
                Ok(if even { int(1) } else { int(0) })
            })
            .unwrap();
        let v = freeness_check(&mf, &[0, 1], 0.0).unwrap();
        assert!(!v.free);
        assert!(v.violations.iter().any(|x| x.word == ["a", "b", "a", "b"]));
        let kappa =
            moments_to_cumulants(&mf, &SetPartition::one(4).unwrap(), &[0, 1, 0, 1]).unwrap();
        assert_eq!(kappa, int(1));

        let single = MomentFunctional::from_fn(vec!["a".into()], 4, BigRational::one(), |w| {
            Ok(int(w.len() as i64))
        })
        .unwrap();
        assert!(freeness_check(&single, &[0], 0.0).unwrap().free);
    }

    #[test]
    fn json_round_trip() {
        let mf = two_letter_moments();
        let back = MomentFunctional::from_json(&mf.to_json()).unwrap();
        assert_eq!(back.values(), mf.values());
        let spec = CumulantSpec::semicircular(4).unwrap();
        let back = CumulantSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back.get(&[0, 0]).unwrap(), int(1));
        assert_eq!(back.get(&[0, 0, 0]).unwrap(), int(0));
        let missing = json!({"alphabet": ["a"], "k_max": 2, "moments": {"a": "1/2"}});
        assert!(MomentFunctional::from_json(&missing).is_err());
    }

    #[test]
    fn state_like_check() {
        let alphabet = vec!["c".to_owned(), "c*".to_owned()];
        let mf = MomentFunctional::from_fn(alphabet, 3, BigRational::one(), |w| {
            // Symmetric under reversal composed with swapping c ↔ c*.
            let star: Vec<usize> = w.iter().rev().map(|&l| 1 - l).collect();
            let key = |x: &[usize]| x.iter().fold(0i64, |acc, &l| acc * 3 + l as i64 + 1);
            Ok(int(key(w) + key(&star)))
        })
        .unwrap()
        .with_involution(vec![1, 0])
        .unwrap();
        assert!(mf.is_state_like(0.0));
    }

    #[test]
    fn catalan_values() {
        let c: Vec<BigInt> = (0..8).map(catalan).collect();
        let expect = [1, 1, 2, 5, 14, 42, 132, 429];
        assert!(c.iter().zip(expect).all(|(a, b)| *a == BigInt::from(b)));
    }
}
