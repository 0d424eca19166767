//! Set partitions of `{1..k}`, the non-crossing sublattice `NC(k)`, and its
//! Möbius function.
//!
//! A [`SetPartition`] is stored canonically: blocks sorted by their minimum
//! element, elements ascending inside a block. Equality and hashing are
//! therefore structural. The total order on partitions (`Ord`) sorts by
//! decreasing block count and then lexicographically by blocks, which is a
//! linear extension of the refinement order read upwards: `0_k` comes first
//! and `1_k` last.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Default bound on the ground-set size for enumerations (`|NC(8)| = 1430`).
pub const DEFAULT_K_MAX: usize = 8;

/// A partition of `{1..k}` in canonical form.
#[derive(Clone)]
pub struct SetPartition {
    /// `labels[p]` is the block index of position `p + 1`; blocks are indexed
    /// by order of first appearance, i.e. by minimum element.
    labels: Vec<usize>,
    /// 1-indexed elements.
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    /// Builds the canonical partition whose blocks are the classes of equal
    /// entries in `raw` (any `Eq + Hash` labels).
    fn from_raw_labels<T: Eq + Hash>(raw: &[T]) -> Self {
        let mut seen: HashMap<&T, usize> = HashMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (pos, x) in raw.iter().enumerate() {
            let next = seen.len();
            let b = *seen.entry(x).or_insert(next);
            if b == blocks.len() {
                blocks.push(Vec::new());
            }
            blocks[b].push(pos + 1);
            labels.push(b);
        }
        SetPartition { labels, blocks }
    }

    /// Validates and canonicalizes an explicit list of blocks over `{1..k}`.
    pub fn from_blocks(k: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        if k == 0 {
            return Err(Error::Bound {
                what: "ground size k",
                value: 0,
                min: 1,
                max: usize::MAX,
            });
        }
        let mut owner: Vec<Option<usize>> = vec![None; k];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::domain("partition has an empty block"));
            }
            for &e in block {
                if e == 0 || e > k {
                    return Err(Error::IndexOutOfRange { index: e, n: k });
                }
                if owner[e - 1].is_some() {
                    return Err(Error::domain(format!("element {e} appears twice")));
                }
                owner[e - 1] = Some(b);
            }
        }
        let raw = owner
            .into_iter()
            .enumerate()
            .map(|(pos, o)| {
                o.ok_or_else(|| Error::domain(format!("element {} is missing", pos + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_raw_labels(&raw))
    }

    /// The discrete partition `0_k` (all singletons).
    pub fn zero(k: usize) -> Result<Self> {
        check_ground(k)?;
        Ok(Self::from_raw_labels(&(0..k).collect::<Vec<_>>()))
    }

    /// The one-block partition `1_k`.
    pub fn one(k: usize) -> Result<Self> {
        check_ground(k)?;
        Ok(Self::from_raw_labels(&vec![0usize; k]))
    }

    pub fn ground_size(&self) -> usize {
        self.labels.len()
    }

    /// `|π|`.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Blocks with 1-indexed elements, in canonical order.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Block index of each position (0-indexed positions and blocks).
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Whether 1-indexed elements `a` and `b` share a block.
    pub fn same_block(&self, a: usize, b: usize) -> bool {
        self.labels[a - 1] == self.labels[b - 1]
    }

    /// Quadratic-in-blocks crossing test: looks for `s1 < t1 < s2 < t2` with
    /// `s1, s2` in one block and `t1, t2` in another.
    pub fn is_noncrossing(&self) -> bool {
        let l = &self.labels;
        let k = l.len();
        for a in 0..k {
            for c in a + 1..k {
                if l[a] != l[c] {
                    continue;
                }
                for b in a + 1..c {
                    if l[b] == l[a] {
                        continue;
                    }
                    if (c + 1..k).any(|d| l[d] == l[b]) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Recursive interval removal. Returns a replayable certificate when the
    /// partition is non-crossing.
    pub fn noncrossing_certificate(&self) -> Option<NonCrossingCertificate> {
        let mut remaining: Vec<usize> = (1..=self.ground_size()).collect();
        let mut alive: Vec<bool> = vec![true; self.block_count()];
        let mut peel_order = Vec::with_capacity(self.block_count());
        while !remaining.is_empty() {
            let step = find_interval_block(&remaining, &self.labels, &alive)?;
            alive[step.0] = false;
            let (b, start, end) = step;
            peel_order.push(PeelStep {
                block: self.blocks[b].clone(),
                start,
                end,
            });
            remaining.drain(start..=end);
        }
        Some(NonCrossingCertificate {
            partition: self.clone(),
            peel_order,
        })
    }

    /// `π ≤ σ`: every block of `self` lies inside a block of `other`.
    pub fn leq(&self, other: &SetPartition) -> Result<bool> {
        self.check_same_size(other, "leq")?;
        let mut image: Vec<Option<usize>> = vec![None; self.block_count()];
        for (&a, &b) in self.labels.iter().zip(&other.labels) {
            match image[a] {
                None => image[a] = Some(b),
                Some(prev) if prev != b => return Ok(false),
                Some(_) => {}
            }
        }
        Ok(true)
    }

    /// Join in the full partition lattice `P(k)`; the result may cross even
    /// when both inputs are non-crossing.
    pub fn join(&self, other: &SetPartition) -> Result<SetPartition> {
        self.check_same_size(other, "join")?;
        let k = self.ground_size();
        let mut parent: Vec<usize> = (0..k).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for part in [self, other] {
            for block in &part.blocks {
                let root = block[0] - 1;
                for &e in &block[1..] {
                    let (ra, rb) = (find(&mut parent, root), find(&mut parent, e - 1));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
        let roots: Vec<usize> = (0..k).map(|x| find(&mut parent, x)).collect();
        Ok(Self::from_raw_labels(&roots))
    }

    /// Meet in `P(k)`: non-empty pairwise intersections of blocks.
    pub fn meet(&self, other: &SetPartition) -> Result<SetPartition> {
        self.check_same_size(other, "meet")?;
        let pairs: Vec<(usize, usize)> = self
            .labels
            .iter()
            .copied()
            .zip(other.labels.iter().copied())
            .collect();
        Ok(Self::from_raw_labels(&pairs))
    }

    /// Removes the listed 1-indexed elements and renumbers the rest to
    /// `1..k'` preserving order.
    pub fn restrict_complement(&self, removed: &[usize]) -> Option<SetPartition> {
        let keep: Vec<usize> = (0..self.ground_size())
            .filter(|p| !removed.contains(&(p + 1)))
            .map(|p| self.labels[p])
            .collect();
        if keep.is_empty() {
            None
        } else {
            Some(Self::from_raw_labels(&keep))
        }
    }

    fn check_same_size(&self, other: &SetPartition, context: &'static str) -> Result<()> {
        if self.ground_size() != other.ground_size() {
            return Err(Error::Dimension {
                context,
                expected: self.ground_size(),
                found: other.ground_size(),
            });
        }
        Ok(())
    }
}

/// Finds a live block occupying a contiguous run of `remaining`; returns the
/// block index and the run bounds (0-indexed, inclusive) within `remaining`.
fn find_interval_block(
    remaining: &[usize],
    labels: &[usize],
    alive: &[bool],
) -> Option<(usize, usize, usize)> {
    let mut start = 0;
    while start < remaining.len() {
        let b = labels[remaining[start] - 1];
        let mut end = start;
        while end + 1 < remaining.len() && labels[remaining[end + 1] - 1] == b {
            end += 1;
        }
        let total = remaining.iter().filter(|&&e| labels[e - 1] == b).count();
        if alive[b] && total == end - start + 1 {
            return Some((b, start, end));
        }
        start = end + 1;
    }
    None
}

fn check_ground(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::Bound {
            what: "ground size k",
            value: 0,
            min: 1,
            max: usize::MAX,
        })
    } else {
        Ok(())
    }
}

impl PartialEq for SetPartition {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl Eq for SetPartition {}

impl Hash for SetPartition {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.labels.hash(state);
    }
}

impl Ord for SetPartition {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ground_size()
            .cmp(&other.ground_size())
            .then_with(|| other.block_count().cmp(&self.block_count()))
            .then_with(|| self.blocks.cmp(&other.blocks))
    }
}

impl PartialOrd for SetPartition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (b, block) in self.blocks.iter().enumerate() {
            if b > 0 {
                f.write_str("|")?;
            }
            for (i, e) in block.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SetPartition({self})")
    }
}

impl FromStr for SetPartition {
    type Err = Error;

    /// Parses `"1,8,9,10|2,7|3,4,5|6"`. Block and element order are free; the
    /// ground size is the number of elements listed.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::parse("empty partition"));
        }
        let blocks = s
            .split('|')
            .map(|block| {
                block
                    .split(',')
                    .map(|e| {
                        e.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::parse(format!("invalid element {e:?} in {s:?}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let k = blocks.iter().map(Vec::len).sum();
        Self::from_blocks(k, &blocks)
    }
}

/// One interval removal: the block and the positions it occupied in the
/// ordered set of elements still present (0-indexed, inclusive).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeelStep {
    pub block: Vec<usize>,
    pub start: usize,
    pub end: usize,
}

/// Witness that a partition is non-crossing: removing the listed blocks in
/// order, each is an interval of what remains.
#[derive(Clone, Debug)]
pub struct NonCrossingCertificate {
    pub partition: SetPartition,
    pub peel_order: Vec<PeelStep>,
}

impl NonCrossingCertificate {
    /// Replays the peel order and checks it empties the partition.
    pub fn verify(&self) -> bool {
        let mut remaining: Vec<usize> = (1..=self.partition.ground_size()).collect();
        let mut used = vec![false; self.partition.block_count()];
        for step in &self.peel_order {
            if step.end >= remaining.len() || step.start > step.end {
                return false;
            }
            if remaining[step.start..=step.end] != step.block[..] {
                return false;
            }
            let Some(b) = self
                .partition
                .blocks()
                .iter()
                .position(|blk| *blk == step.block)
            else {
                return false;
            };
            if used[b] {
                return false;
            }
            used[b] = true;
            remaining.drain(step.start..=step.end);
        }
        remaining.is_empty()
    }
}

/// Partition of positions by equal symbols (`ker i`).
pub fn kernel<T: Eq + Hash>(indices: &[T]) -> Result<SetPartition> {
    if indices.is_empty() {
        return Err(Error::Bound {
            what: "index word length",
            value: 0,
            min: 1,
            max: usize::MAX,
        });
    }
    Ok(SetPartition::from_raw_labels(indices))
}

fn check_k(k: usize, k_max: usize) -> Result<()> {
    if k == 0 || k > k_max {
        return Err(Error::Bound {
            what: "ground size k",
            value: k,
            min: 1,
            max: k_max,
        });
    }
    Ok(())
}

/// All partitions of `{1..k}`, `1 ≤ k ≤ DEFAULT_K_MAX`, in canonical order.
pub fn enumerate_partitions(k: usize) -> Result<Vec<SetPartition>> {
    enumerate_partitions_bounded(k, DEFAULT_K_MAX)
}

/// As [`enumerate_partitions`] with an explicit bound on `k`.
pub fn enumerate_partitions_bounded(k: usize, k_max: usize) -> Result<Vec<SetPartition>> {
    check_k(k, k_max)?;
    // Restricted growth strings: label[p] ≤ 1 + max(label[..p]).
    fn grow(labels: &mut Vec<usize>, k: usize, top: usize, out: &mut Vec<SetPartition>) {
        if labels.len() == k {
            out.push(SetPartition::from_raw_labels(labels));
            return;
        }
        for l in 0..=top {
            labels.push(l);
            grow(labels, k, top.max(l + 1), out);
            labels.pop();
        }
    }
    let mut out = Vec::new();
    let mut labels = vec![0];
    grow(&mut labels, k, 1, &mut out);
    out.sort();
    Ok(out)
}

/// All non-crossing partitions of `{1..k}` in canonical order.
pub fn enumerate_nc(k: usize) -> Result<Vec<SetPartition>> {
    enumerate_nc_bounded(k, DEFAULT_K_MAX)
}

/// As [`enumerate_nc`] with an explicit bound on `k`.
pub fn enumerate_nc_bounded(k: usize, k_max: usize) -> Result<Vec<SetPartition>> {
    check_k(k, k_max)?;
    // The block holding the first element of an interval splits the rest
    // into gaps, each filled independently by a non-crossing partition.
    fn fill(lo: usize, hi: usize) -> Vec<Vec<Vec<usize>>> {
        if lo > hi {
            return vec![Vec::new()];
        }
        let rest = hi - lo;
        let mut out = Vec::new();
        for mask in 0u32..(1u32 << rest) {
            let mut block = vec![lo];
            block.extend(
                (0..rest)
                    .filter(|b| mask & (1 << b) != 0)
                    .map(|b| lo + 1 + b),
            );
            let mut gaps: Vec<(usize, usize)> =
                block.windows(2).map(|w| (w[0] + 1, w[1] - 1)).collect();
            gaps.push((block[block.len() - 1] + 1, hi));
            let mut partial: Vec<Vec<Vec<usize>>> = vec![vec![block]];
            for (a, b) in gaps {
                let fills = fill(a, b);
                partial = partial
                    .iter()
                    .flat_map(|p| {
                        fills.iter().map(move |f| {
                            let mut q = p.clone();
                            q.extend(f.iter().cloned());
                            q
                        })
                    })
                    .collect();
            }
            out.extend(partial);
        }
        out
    }
    let mut out = fill(1, k)
        .into_iter()
        .map(|blocks| SetPartition::from_blocks(k, &blocks))
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    Ok(out)
}

/// `NC(k)` with its order relation and Möbius function, indexed by the
/// canonical enumeration order.
pub struct NcLattice {
    k: usize,
    elements: Vec<SetPartition>,
    index: HashMap<SetPartition, usize>,
    leq: Vec<Vec<bool>>,
    mobius_rows: Vec<OnceLock<Vec<i64>>>,
}

impl NcLattice {
    pub fn new(k: usize) -> Result<Self> {
        let elements = enumerate_nc(k)?;
        let index = elements
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, p)| (p, i))
            .collect();
        let leq = elements
            .iter()
            .map(|p| {
                elements
                    .iter()
                    .map(|q| p.leq(q).expect("same ground size"))
                    .collect()
            })
            .collect();
        let mobius_rows = (0..elements.len()).map(|_| OnceLock::new()).collect();
        Ok(NcLattice {
            k,
            elements,
            index,
            leq,
            mobius_rows,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[SetPartition] {
        &self.elements
    }

    pub fn position(&self, p: &SetPartition) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    /// Indices of the elements of `NC(k)` below `upper` (any partition of
    /// `{1..k}`, crossing or not).
    pub fn below(&self, upper: &SetPartition) -> Vec<usize> {
        self.elements
            .iter()
            .enumerate()
            .filter(|(_, p)| p.leq(upper).unwrap_or(false))
            .map(|(i, _)| i)
            .collect()
    }

    /// `μ(a, ·)` for every element, by the defining recursion
    /// `μ(a,a) = 1`, `μ(a,b) = -Σ_{a ≤ c < b} μ(a,c)`.
    pub fn mobius_row(&self, a: usize) -> &[i64] {
        self.mobius_rows[a].get_or_init(|| {
            let n = self.len();
            let mut row = vec![0i64; n];
            row[a] = 1;
            // Canonical order is a linear extension, so everything strictly
            // below b precedes it.
            for b in a + 1..n {
                if !self.leq[a][b] {
                    continue;
                }
                let s: i64 = (a..b)
                    .filter(|&c| self.leq[a][c] && self.leq[c][b])
                    .map(|c| row[c])
                    .sum();
                row[b] = -s;
            }
            row
        })
    }

    pub fn mobius(&self, a: usize, b: usize) -> i64 {
        self.mobius_row(a)[b]
    }
}

/// Shared, lazily built `NC(k)` lattices.
pub fn nc_lattice(k: usize) -> Result<Arc<NcLattice>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<NcLattice>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(l) = cache.lock().expect("lattice cache poisoned").get(&k) {
        return Ok(Arc::clone(l));
    }
    let built = Arc::new(NcLattice::new(k)?);
    let mut guard = cache.lock().expect("lattice cache poisoned");
    Ok(Arc::clone(guard.entry(k).or_insert(built)))
}

/// Möbius function of `NC(k)` on a single pair, by the defining recursion
/// restricted to the interval `[p, q]`.
pub fn mobius_nc(p: &SetPartition, q: &SetPartition) -> Result<i64> {
    if p.ground_size() != q.ground_size() {
        return Err(Error::Dimension {
            context: "mobius_nc",
            expected: p.ground_size(),
            found: q.ground_size(),
        });
    }
    for x in [p, q] {
        if !x.is_noncrossing() {
            return Err(Error::domain(format!("{x} is not non-crossing")));
        }
    }
    if !p.leq(q)? {
        return Ok(0);
    }
    let interval: Vec<SetPartition> = enumerate_nc(p.ground_size())?
        .into_iter()
        .filter(|t| p.leq(t).unwrap_or(false) && t.leq(q).unwrap_or(false))
        .collect();
    // `interval` is sorted by a linear extension; p is first, q last.
    let mut memo: Vec<i64> = Vec::with_capacity(interval.len());
    for (i, t) in interval.iter().enumerate() {
        if i == 0 {
            memo.push(1);
            continue;
        }
        let s: i64 = (0..i)
            .filter(|&c| interval[c].leq(t).unwrap_or(false))
            .map(|c| memo[c])
            .sum();
        memo.push(-s);
    }
    Ok(*memo.last().expect("interval contains p"))
}
