//! Inductive block family `{A_i}` defining the subgroup `H ⊂ G` whose shift
//! orbits meet `H` exactly `n_p` times, and the brute-force orbit counter
//! that checks it.
//!
//! Step 1 emits the singletons `{3^0}, …, {3^{n_1-1}}`. Step `k+1` takes every
//! `(k+1)`-basic set `B` (a union of complete existing blocks with `#B = k+1`)
//! in sorted-tuple order and appends `n_{k+1} - 1` translates of it, each as a
//! single new block. A translate is placed at the smallest offset with
//! `min(new) > 2·max(placed) + 1`, which keeps `2·max A_i < min A_{i+1}`.
//! After each step every new pattern is re-scanned; if some pattern has an
//! accidental extra translate inside `H`, the gap is doubled and the step is
//! rebuilt.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::bitgroup::{GroupElement, Site};
use crate::{Error, Result};

/// Enumeration `n_1, n_2, …` of the target set `E`, with `n_1 ≠ 1` and every
/// element recurring infinitely often.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSequence {
    /// Finite `E`, enumerated round-robin in the stored order.
    Finite(Vec<u64>),
    /// `E = {start, start+1, …}`, enumerated by the rows
    /// `start; start, start+1; start, start+1, start+2; …`.
    From(String),
}

impl TargetSequence {
    /// Round-robin enumeration of a finite set, smallest non-1 element first.
    pub fn from_set<I: IntoIterator<Item = u64>>(values: I) -> Result<Self> {
        let set: BTreeSet<u64> = values.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidArgument("target set E is empty".into()));
        }
        if set.contains(&0) {
            return Err(Error::InvalidArgument("E must contain positive integers".into()));
        }
        if set.len() == 1 && set.contains(&1) {
            return Err(Error::TrivialTarget);
        }
        let mut order: Vec<u64> = set.into_iter().collect();
        if order[0] == 1 {
            order.rotate_left(1);
        }
        Ok(TargetSequence::Finite(order))
    }

    /// `E = {start, start+1, …}` with `start ≥ 1`.
    pub fn from_start(start: u64) -> Result<Self> {
        if start == 0 {
            return Err(Error::InvalidArgument("E must contain positive integers".into()));
        }
        Ok(TargetSequence::From(format!("from:{start}")))
    }

    fn start(&self) -> Option<u64> {
        match self {
            TargetSequence::Finite(_) => None,
            TargetSequence::From(text) => text.strip_prefix("from:").and_then(|s| s.parse().ok()),
        }
    }

    /// `n_k` for `k ≥ 1`.
    pub fn term(&self, k: usize) -> u64 {
        assert!(k >= 1, "terms are 1-based");
        match self {
            TargetSequence::Finite(order) => order[(k - 1) % order.len()],
            TargetSequence::From(_) => {
                let start = self.start().expect("validated pattern");
                // a leading 2 keeps n_1 ≠ 1 when E = ℕ
                let (k, base) = if start == 1 {
                    if k == 1 {
                        return 2;
                    }
                    (k - 1, 1)
                } else {
                    (k, start)
                };
                let mut row = 1;
                let mut rest = k - 1;
                while rest >= row {
                    rest -= row;
                    row += 1;
                }
                base + rest as u64
            }
        }
    }

    pub fn terms(&self, count: usize) -> Vec<u64> {
        (1..=count).map(|k| self.term(k)).collect()
    }

    /// Membership in `E`.
    pub fn contains(&self, value: u64) -> bool {
        match self {
            TargetSequence::Finite(order) => order.contains(&value),
            TargetSequence::From(_) => value >= self.start().unwrap_or(u64::MAX),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            TargetSequence::Finite(order) => {
                if order.is_empty() || order.contains(&0) {
                    return Err(Error::InvalidArgument(
                        "E must be a nonempty set of positive integers".into(),
                    ));
                }
                if order[0] == 1 {
                    return Err(if order.len() == 1 {
                        Error::TrivialTarget
                    } else {
                        Error::InvalidArgument("n_1 must differ from 1".into())
                    });
                }
                Ok(())
            }
            TargetSequence::From(_) => match self.start() {
                Some(s) if s >= 1 => Ok(()),
                _ => Err(Error::InvalidArgument("malformed `from:` pattern".into())),
            },
        }
    }
}

/// Limits on the super-exponential growth of the construction.
#[derive(Debug, Clone, Copy)]
pub struct BlockCaps {
    pub max_blocks: usize,
    /// Maximal number of H-elements enumerated by [`BlockSystem::verify`].
    pub max_combinations: usize,
}

impl Default for BlockCaps {
    fn default() -> Self {
        BlockCaps {
            max_blocks: 200_000,
            max_combinations: 1_000_000,
        }
    }
}

/// Element of `H`: a union of complete blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HElement {
    pub block_indices: Vec<usize>,
    pub support: GroupElement,
}

impl HElement {
    /// `p = #supp`.
    pub fn cardinality(&self) -> usize {
        self.support.weight()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BlockSystemRepr {
    #[serde(rename = "E")]
    e: TargetSequence,
    steps: usize,
    terms: Vec<u64>,
    blocks: Vec<Vec<Site>>,
    step_boundaries: Vec<usize>,
    offsets_used: Vec<Site>,
}

/// The family `A_1, …, A_L` after a number of completed steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BlockSystemRepr", into = "BlockSystemRepr")]
pub struct BlockSystem {
    target: TargetSequence,
    steps: usize,
    blocks: Vec<Vec<Site>>,
    step_boundaries: Vec<usize>,
    offsets_used: Vec<Site>,
    site_to_block: HashMap<Site, usize>,
}

impl From<BlockSystem> for BlockSystemRepr {
    fn from(sys: BlockSystem) -> Self {
        BlockSystemRepr {
            terms: sys.target.terms(sys.steps),
            e: sys.target,
            steps: sys.steps,
            blocks: sys.blocks,
            step_boundaries: sys.step_boundaries,
            offsets_used: sys.offsets_used,
        }
    }
}

impl TryFrom<BlockSystemRepr> for BlockSystem {
    type Error = Error;

    fn try_from(repr: BlockSystemRepr) -> Result<Self> {
        repr.e.validate()?;
        let sys = BlockSystem::assemble(repr.e, repr.steps, repr.blocks, repr.step_boundaries, repr.offsets_used)?;
        sys.check_structure()?;
        Ok(sys)
    }
}

/// Builds the block system through `steps` steps.
pub fn build_blocks(target: &TargetSequence, steps: usize, caps: BlockCaps) -> Result<BlockSystem> {
    target.validate()?;
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    let n1 = target.term(1) as usize;
    if n1 > caps.max_blocks {
        return Err(Error::CapExceeded {
            what: "block count",
            cap: caps.max_blocks as u128,
        });
    }
    let mut blocks: Vec<Vec<Site>> = Vec::with_capacity(n1);
    let mut power: Site = 1;
    for _ in 0..n1 {
        blocks.push(vec![power]);
        power = power.checked_mul(3).ok_or(Error::CapExceeded {
            what: "site magnitude",
            cap: Site::MAX as u128,
        })?;
    }
    let mut step_boundaries = vec![blocks.len()];
    let mut offsets_used = Vec::new();

    for k in 1..steps {
        let next = target.term(k + 1) as usize;
        let basic = basic_subsets(&blocks, k + 1, caps.max_combinations)?;
        let added = basic.len().saturating_mul(next.saturating_sub(1));
        if blocks.len().saturating_add(added) > caps.max_blocks {
            return Err(Error::CapExceeded {
                what: "block count",
                cap: caps.max_blocks as u128,
            });
        }
        let mut gap_multiplier: Site = 1;
        let mut attempts = 0;
        loop {
            let (new_blocks, offsets) = place_translates(&blocks, &basic, next, gap_multiplier)?;
            let mut candidate = blocks.clone();
            candidate.extend(new_blocks);
            let index = index_sites(&candidate);
            let clean = basic
                .iter()
                .all(|b| count_translates_in_h(b, &candidate, &index) == next);
            if clean {
                blocks = candidate;
                offsets_used.extend(offsets);
                break;
            }
            attempts += 1;
            if attempts > 16 {
                return Err(Error::Construction(format!(
                    "step {} keeps producing accidental translates",
                    k + 1
                )));
            }
            gap_multiplier = gap_multiplier.checked_mul(2).ok_or(Error::CapExceeded {
                what: "site magnitude",
                cap: Site::MAX as u128,
            })?;
        }
        step_boundaries.push(blocks.len());
    }

    let sys = BlockSystem::assemble(target.clone(), steps, blocks, step_boundaries, offsets_used)?;
    sys.check_structure()?;
    Ok(sys)
}

/// All unions of complete blocks of total cardinality `size`, as sorted site
/// vectors in lexicographic order.
fn basic_subsets(blocks: &[Vec<Site>], size: usize, cap: usize) -> Result<Vec<Vec<Site>>> {
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    enumerate_unions(blocks, 0, size, &mut chosen, &mut |indices| {
        if out.len() >= cap {
            return false;
        }
        let mut sites: Vec<Site> = indices.iter().flat_map(|&i| blocks[i].iter().copied()).collect();
        sites.sort_unstable();
        out.push(sites);
        true
    });
    if out.len() >= cap {
        return Err(Error::CapExceeded {
            what: "basic subset count",
            cap: cap as u128,
        });
    }
    out.sort();
    Ok(out)
}

/// Calls `visit` on every index set (increasing) of blocks with total
/// cardinality exactly `remaining`; stops when `visit` returns false.
fn enumerate_unions(
    blocks: &[Vec<Site>],
    from: usize,
    remaining: usize,
    chosen: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if remaining == 0 {
        return visit(chosen);
    }
    for i in from..blocks.len() {
        let len = blocks[i].len();
        if len <= remaining {
            chosen.push(i);
            let go_on = enumerate_unions(blocks, i + 1, remaining - len, chosen, visit);
            chosen.pop();
            if !go_on {
                return false;
            }
        }
    }
    true
}

fn place_translates(
    existing: &[Vec<Site>],
    basic: &[Vec<Site>],
    copies_plus_one: usize,
    gap_multiplier: Site,
) -> Result<(Vec<Vec<Site>>, Vec<Site>)> {
    let overflow = || Error::CapExceeded {
        what: "site magnitude",
        cap: Site::MAX as u128,
    };
    let mut max_placed = existing.iter().filter_map(|b| b.last().copied()).max().unwrap_or(0);
    let mut new_blocks = Vec::new();
    let mut offsets = Vec::new();
    for b in basic {
        for _ in 1..copies_plus_one {
            let threshold = max_placed
                .checked_mul(2)
                .and_then(|x| x.checked_add(1))
                .and_then(|x| x.checked_mul(gap_multiplier))
                .ok_or_else(overflow)?;
            let offset = threshold + 1 - b[0];
            let moved: Vec<Site> = b
                .iter()
                .map(|s| s.checked_add(offset))
                .collect::<Option<_>>()
                .ok_or_else(overflow)?;
            max_placed = *moved.last().unwrap();
            new_blocks.push(moved);
            offsets.push(offset);
        }
    }
    Ok((new_blocks, offsets))
}

fn index_sites(blocks: &[Vec<Site>]) -> HashMap<Site, usize> {
    let mut index = HashMap::new();
    for (i, b) in blocks.iter().enumerate() {
        for &s in b {
            index.insert(s, i);
        }
    }
    index
}

fn is_union_of_blocks(sites: &[Site], blocks: &[Vec<Site>], index: &HashMap<Site, usize>) -> bool {
    let mut hit = BTreeSet::new();
    for s in sites {
        match index.get(s) {
            Some(&b) => {
                hit.insert(b);
            }
            None => return false,
        }
    }
    let covered: usize = hit.iter().map(|&b| blocks[b].len()).sum();
    covered == sites.len()
}

/// Number of translates `sites + t` that are unions of complete blocks.
fn count_translates_in_h(sites: &[Site], blocks: &[Vec<Site>], index: &HashMap<Site, usize>) -> usize {
    let anchor = sites[0];
    let mut anchors: Vec<Site> = index.keys().copied().collect();
    anchors.sort_unstable();
    anchors
        .into_iter()
        .filter(|&a| {
            let t = a - anchor;
            let moved: Vec<Site> = sites.iter().map(|s| s + t).collect();
            is_union_of_blocks(&moved, blocks, index)
        })
        .count()
}

impl BlockSystem {
    fn assemble(
        target: TargetSequence,
        steps: usize,
        blocks: Vec<Vec<Site>>,
        step_boundaries: Vec<usize>,
        offsets_used: Vec<Site>,
    ) -> Result<Self> {
        let site_to_block = index_sites(&blocks);
        Ok(BlockSystem {
            target,
            steps,
            blocks,
            step_boundaries,
            offsets_used,
            site_to_block,
        })
    }

    /// Re-checks separation, block sizes per step, disjointness and the
    /// step-boundary bookkeeping.
    pub fn check_structure(&self) -> Result<()> {
        if self.step_boundaries.len() != self.steps {
            return Err(Error::Construction("one step boundary per step expected".into()));
        }
        if self.step_boundaries.last().copied() != Some(self.blocks.len()) {
            return Err(Error::Construction("last step boundary must equal block count".into()));
        }
        let mut start = 0;
        for (k, &end) in self.step_boundaries.iter().enumerate() {
            if end < start {
                return Err(Error::Construction("step boundaries must be nondecreasing".into()));
            }
            for b in &self.blocks[start..end] {
                if b.len() != k + 1 {
                    return Err(Error::Construction(format!(
                        "block {b:?} from step {} has cardinality {}",
                        k + 1,
                        b.len()
                    )));
                }
            }
            start = end;
        }
        for b in &self.blocks {
            if b.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Construction(format!("block {b:?} is not sorted")));
            }
            if b[0] < 1 {
                return Err(Error::Construction(format!("block {b:?} leaves the positive integers")));
            }
        }
        for pair in self.blocks.windows(2) {
            let lhs = pair[0].last().unwrap().checked_mul(2);
            if lhs.is_none_or(|l| l >= pair[1][0]) {
                return Err(Error::Construction(format!(
                    "separation 2·max A_i < min A_(i+1) fails for {:?}, {:?}",
                    pair[0], pair[1]
                )));
            }
        }
        let total: usize = self.blocks.iter().map(Vec::len).sum();
        if self.site_to_block.len() != total {
            return Err(Error::Construction("blocks are not pairwise disjoint".into()));
        }
        Ok(())
    }

    pub fn target(&self) -> &TargetSequence {
        &self.target
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn blocks(&self) -> &[Vec<Site>] {
        &self.blocks
    }

    /// `l_k` for every completed step.
    pub fn step_boundaries(&self) -> &[usize] {
        &self.step_boundaries
    }

    pub fn offsets_used(&self) -> &[Site] {
        &self.offsets_used
    }

    /// Whether `supp g` is a (possibly empty) union of complete blocks.
    pub fn is_in_h(&self, g: &GroupElement) -> bool {
        is_union_of_blocks(g.support(), &self.blocks, &self.site_to_block)
    }

    /// The H-element made of the listed blocks.
    pub fn h_element(&self, block_indices: &[usize]) -> Result<HElement> {
        let mut indices = block_indices.to_vec();
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.blocks.len()) {
            return Err(Error::InvalidArgument(format!("no block with index {bad}")));
        }
        let support = GroupElement::from_sites(indices.iter().flat_map(|&i| self.blocks[i].iter().copied()));
        Ok(HElement {
            block_indices: indices,
            support,
        })
    }

    /// `#{i ∈ ℤ : v^i(g) ∈ H}` for nonzero `g ∈ H` with `#supp g ≤ steps`.
    ///
    /// Every shift landing in `H` must carry `min supp g` onto a site of `A`,
    /// so scanning those shifts is exhaustive.
    pub fn orbit_count(&self, g: &GroupElement) -> Result<usize> {
        if g.is_zero() {
            return Err(Error::Precondition("orbit count of the zero element".into()));
        }
        if !self.is_in_h(g) {
            return Err(Error::Precondition(format!("{g} is not in H")));
        }
        if g.weight() > self.steps {
            return Err(Error::IncompleteWindow(format!(
                "support size {} needs at least {} steps, system has {}",
                g.weight(),
                g.weight(),
                self.steps
            )));
        }
        Ok(count_translates_in_h(g.support(), &self.blocks, &self.site_to_block))
    }

    /// Every nonzero H-element with `#supp ≤ p_max`, ordered by block indices.
    /// The flag is true when the enumeration hit `cap`.
    pub fn h_elements(&self, p_max: usize, cap: usize) -> (Vec<HElement>, bool) {
        let mut out = Vec::new();
        let mut truncated = false;
        for size in 1..=p_max {
            let mut chosen = Vec::new();
            enumerate_unions(&self.blocks, 0, size, &mut chosen, &mut |indices| {
                if out.len() >= cap {
                    truncated = true;
                    return false;
                }
                let support = GroupElement::from_sites(indices.iter().flat_map(|&i| self.blocks[i].iter().copied()));
                out.push(HElement {
                    block_indices: indices.to_vec(),
                    support,
                });
                true
            });
            if truncated {
                break;
            }
        }
        (out, truncated)
    }

    /// Checks `orbit_count(g) = n_{#supp g}` for every nonzero H-element with
    /// `#supp g ≤ p_max`.
    pub fn verify(&self, p_max: usize, caps: BlockCaps) -> Result<LemmaReport> {
        if p_max > self.steps {
            return Err(Error::IncompleteWindow(format!(
                "p_max = {p_max} exceeds the {} built steps",
                self.steps
            )));
        }
        let (elements, truncated) = self.h_elements(p_max, caps.max_combinations);
        let mut entries = Vec::with_capacity(elements.len());
        for h in elements {
            let p = h.cardinality();
            let count = self.orbit_count(&h.support)? as u64;
            let expected = self.target.term(p);
            entries.push(LemmaEntry {
                support: h.support,
                block_indices: h.block_indices,
                cardinality: p,
                orbit_count: count,
                expected,
                pass: count == expected,
            });
        }
        let realized: BTreeSet<u64> = entries.iter().map(|e| e.orbit_count).collect();
        let required: BTreeSet<u64> = (1..=p_max).map(|p| self.target.term(p)).collect();
        let subset_of_e = realized.iter().all(|&v| self.target.contains(v));
        let covers_required = truncated || required.is_subset(&realized);
        let pass = entries.iter().all(|e| e.pass) && subset_of_e && covers_required;
        Ok(LemmaReport {
            p_max,
            entries,
            realized,
            required,
            subset_of_e,
            covers_required,
            truncated,
            pass,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LemmaEntry {
    pub support: GroupElement,
    pub block_indices: Vec<usize>,
    pub cardinality: usize,
    pub orbit_count: u64,
    pub expected: u64,
    pub pass: bool,
}

/// Outcome of [`BlockSystem::verify`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    pub p_max: usize,
    pub entries: Vec<LemmaEntry>,
    /// Orbit counts actually observed.
    pub realized: BTreeSet<u64>,
    /// `{n_1, …, n_{p_max}}`.
    pub required: BTreeSet<u64>,
    pub subset_of_e: bool,
    pub covers_required: bool,
    pub truncated: bool,
    pub pass: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(e: &[u64], steps: usize) -> BlockSystem {
        build_blocks(
            &TargetSequence::from_set(e.iter().copied()).unwrap(),
            steps,
            BlockCaps::default(),
        )
        .unwrap()
    }

    fn g(sites: &[Site]) -> GroupElement {
        GroupElement::from_sites(sites.iter().copied())
    }

    #[test]
    fn step_one_singletons() {
        assert_eq!(build(&[2], 1).blocks(), &[vec![1], vec![3]]);
        assert_eq!(build(&[3], 1).blocks(), &[vec![1], vec![3], vec![9]]);
    }

    #[test]
    fn step_two_for_constant_two() {
        let sys = build(&[2], 2);
        // only 2-basic set is {1,3}; one translate with min > 2·3 + 1
        assert_eq!(sys.blocks(), &[vec![1], vec![3], vec![8, 10]]);
        assert_eq!(sys.step_boundaries(), &[2, 3]);
        assert_eq!(sys.offsets_used(), &[7]);
    }

    #[test]
    fn membership_examples() {
        let sys = build(&[2], 1);
        assert!(sys.is_in_h(&GroupElement::zero()));
        assert!(!sys.is_in_h(&g(&[2])));
        assert!(sys.is_in_h(&g(&[1, 3])));
        let sys2 = build(&[2], 2);
        assert!(!sys2.is_in_h(&g(&[8])));
        assert!(sys2.is_in_h(&g(&[1, 8, 10])));
    }

    #[test]
    fn orbit_count_examples() {
        assert_eq!(build(&[2], 1).orbit_count(&g(&[1])).unwrap(), 2);
        assert_eq!(build(&[3], 1).orbit_count(&g(&[1])).unwrap(), 3);
    }

    #[test]
    fn orbit_count_window_is_enforced() {
        let sys = build(&[2], 1);
        assert!(matches!(sys.orbit_count(&g(&[1, 3])), Err(Error::IncompleteWindow(_))));
        assert!(matches!(
            sys.orbit_count(&GroupElement::zero()),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(sys.orbit_count(&g(&[2])), Err(Error::Precondition(_))));
    }

    #[test]
    fn verify_examples() {
        let r = build(&[2], 2).verify(2, BlockCaps::default()).unwrap();
        assert!(r.pass);
        assert_eq!(r.realized, BTreeSet::from([2]));
        assert!(r.entries.iter().all(|e| e.orbit_count == 2));

        let r = build(&[2, 3], 2).verify(2, BlockCaps::default()).unwrap();
        assert!(r.pass);
        for e in &r.entries {
            assert_eq!(e.orbit_count, if e.cardinality == 1 { 2 } else { 3 });
        }

        let r = build(&[2], 1).verify(0, BlockCaps::default()).unwrap();
        assert!(r.entries.is_empty() && r.pass);
    }

    #[test]
    fn verify_rejects_incomplete_window() {
        assert!(matches!(
            build(&[2], 1).verify(2, BlockCaps::default()),
            Err(Error::IncompleteWindow(_))
        ));
    }

    #[test]
    fn trivial_target_rejected() {
        assert_eq!(TargetSequence::from_set([1]), Err(Error::TrivialTarget));
        assert!(TargetSequence::from_set([]).is_err());
    }

    #[test]
    fn enumeration_puts_non_one_first_and_cycles() {
        let t = TargetSequence::from_set([1, 4]).unwrap();
        assert_eq!(t.terms(5), vec![4, 1, 4, 1, 4]);
        let t = TargetSequence::from_set([7, 2, 5]).unwrap();
        assert_eq!(t.terms(6), vec![2, 5, 7, 2, 5, 7]);
    }

    #[test]
    fn infinite_enumeration_recurs() {
        let t = TargetSequence::from_start(3).unwrap();
        assert_eq!(t.terms(6), vec![3, 3, 4, 3, 4, 5]);
        let t = TargetSequence::from_start(1).unwrap();
        assert_eq!(t.terms(4), vec![2, 1, 1, 2]);
        assert!(t.contains(1) && t.contains(40));
    }

    #[test]
    fn one_in_e_gives_singleton_orbits() {
        // E = {1, 2}: n = 2, 1, 2, …; two-element supports have a single translate
        let sys = build(&[1, 2], 3);
        let r = sys.verify(3, BlockCaps::default()).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.realized, BTreeSet::from([1, 2]));
    }

    #[test]
    fn build_is_deterministic() {
        assert_eq!(build(&[2, 5, 7], 2), build(&[2, 5, 7], 2));
    }

    #[test]
    fn cap_on_block_count() {
        let t = TargetSequence::from_set([2, 5, 7]).unwrap();
        let caps = BlockCaps {
            max_blocks: 10,
            ..BlockCaps::default()
        };
        assert!(matches!(build_blocks(&t, 3, caps), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn json_roundtrip_and_mutation_detection() {
        let sys = build(&[2], 2);
        let json = serde_json::to_value(&sys).unwrap();
        assert_eq!(json["E"], serde_json::json!([2]));
        assert_eq!(json["blocks"], serde_json::json!([[1], [3], [8, 10]]));
        let back: BlockSystem = serde_json::from_value(json.clone()).unwrap();
        assert_eq!(back, sys);

        let mut broken = json.clone();
        broken["blocks"] = serde_json::json!([[1], [3], [5, 10]]);
        assert!(serde_json::from_value::<BlockSystem>(broken).is_err());

        // structurally valid but no longer realising the counts
        let mut mutated = json;
        mutated["blocks"] = serde_json::json!([[1], [3], [8, 11]]);
        let sys: BlockSystem = serde_json::from_value(mutated).unwrap();
        let r = sys.verify(2, BlockCaps::default()).unwrap();
        assert!(!r.pass);
        assert!(r.entries.iter().any(|e| !e.pass && e.support == g(&[1, 3])));
    }
}
