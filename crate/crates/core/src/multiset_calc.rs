//! Multiplicity-set algebra: `E ∪ {2}`, the character-orbit decomposition
//! behind it and the product formula for `T^{×k} × T_{α,H}`.
//!
//! Characters of `K/H` are identified with elements of the subgroup
//! `H ⊂ G` itself (`K = Ĝ`, and the annihilator of `H` has dual `H`), so
//! nonzero characters are enumerated as nonzero H-elements of the block
//! system.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Serialize, Serializer};

use crate::bitgroup::GroupElement;
use crate::blocksys::{build_blocks, BlockCaps, BlockSystem, TargetSequence};
use crate::{Error, Result};

/// Rule that produced a multiplicity value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Provenance {
    /// `U_T ⊗ U_T` on the `χ = 0` component has homogeneous multiplicity 2.
    TrivialCharacter,
    /// A shift-orbit of `size` characters, each with simple spectrum.
    CharacterOrbit {
        size: u64,
        #[serde(skip_serializing_if = "Option::is_none")]
        representative: Option<GroupElement>,
        #[serde(skip_serializing_if = "Option::is_none")]
        orbits_seen: Option<usize>,
    },
    /// `(k+1)k⋯(k+1-j)` from the trivial-character part of `T^{×k}`.
    FallingChain { k: u64, length: usize },
    /// `k(k-1)⋯(k+1-j) · e`.
    ScaledChain { k: u64, length: usize, e: u64 },
}

/// Finite set of essential multiplicity values with provenance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultiplicitySet {
    provenance: BTreeMap<u64, Vec<Provenance>>,
}

impl MultiplicitySet {
    fn add(&mut self, value: u64, why: Provenance) {
        let entry = self.provenance.entry(value).or_default();
        if !entry.contains(&why) {
            entry.push(why);
        }
    }

    pub fn values(&self) -> BTreeSet<u64> {
        self.provenance.keys().copied().collect()
    }

    pub fn provenance(&self, value: u64) -> &[Provenance] {
        self.provenance.get(&value).map_or(&[], Vec::as_slice)
    }
}

impl Serialize for MultiplicitySet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            values: Vec<u64>,
            provenance: BTreeMap<String, &'a Vec<Provenance>>,
        }
        Repr {
            values: self.provenance.keys().copied().collect(),
            provenance: self.provenance.iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
        .serialize(s)
    }
}

fn check_set(e: &[u64]) -> Result<()> {
    if e.is_empty() {
        return Err(Error::InvalidArgument("E must be nonempty".into()));
    }
    if e.contains(&0) {
        return Err(Error::InvalidArgument("E must contain positive integers only".into()));
    }
    Ok(())
}

/// `E ∪ {2}`.
pub fn predicted_main(e: &[u64]) -> Result<MultiplicitySet> {
    check_set(e)?;
    let mut out = MultiplicitySet::default();
    out.add(2, Provenance::TrivialCharacter);
    for &v in e {
        out.add(
            v,
            Provenance::CharacterOrbit {
                size: v,
                representative: None,
                orbits_seen: None,
            },
        );
    }
    Ok(out)
}

/// Orbit sizes of the nonzero characters with support at most `p_max`,
/// together with `2` from `χ = 0`.
pub fn orbit_decomposition(blocks: &BlockSystem, p_max: usize, caps: BlockCaps) -> Result<MultiplicitySet> {
    if p_max > blocks.steps() {
        return Err(Error::IncompleteWindow(format!(
            "p_max = {p_max} exceeds the {} built steps",
            blocks.steps()
        )));
    }
    let (elements, truncated) = blocks.h_elements(p_max, caps.max_combinations);
    if truncated {
        return Err(Error::CapExceeded {
            what: "H-element enumeration",
            cap: caps.max_combinations as u128,
        });
    }
    let mut orbits: BTreeMap<u64, (GroupElement, BTreeSet<GroupElement>)> = BTreeMap::new();
    for h in &elements {
        let size = blocks.orbit_count(&h.support)? as u64;
        let entry = orbits
            .entry(size)
            .or_insert_with(|| (h.support.clone(), BTreeSet::new()));
        entry.1.insert(h.support.normalized());
    }
    let mut out = MultiplicitySet::default();
    out.add(2, Provenance::TrivialCharacter);
    for (size, (rep, seen)) in orbits {
        out.add(
            size,
            Provenance::CharacterOrbit {
                size,
                representative: Some(rep),
                orbits_seen: Some(seen.len()),
            },
        );
    }
    Ok(out)
}

/// Builds the block system for `e` through `p_max` steps and decomposes it;
/// `E = {1}` has no block system and goes straight to [`predicted_main`].
pub fn decompose_target(e: &[u64], p_max: usize, caps: BlockCaps) -> Result<MultiplicitySet> {
    check_set(e)?;
    if e.iter().all(|&v| v == 1) {
        return predicted_main(e);
    }
    let target = TargetSequence::from_set(e.iter().copied())?;
    let blocks = build_blocks(&target, p_max.max(1), caps)?;
    orbit_decomposition(&blocks, p_max, caps)
}

fn falling_chain(start: u64) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    let mut acc: u64 = 1;
    for f in (1..=start).rev() {
        acc = acc.checked_mul(f).ok_or(Error::CapExceeded {
            what: "falling factorial",
            cap: u64::MAX as u128,
        })?;
        out.push(acc);
        if f == 2 {
            break;
        }
    }
    if out.is_empty() {
        out.push(1);
    }
    Ok(out)
}

/// `{k+1, (k+1)k, …, (k+1)!} ∪ {k, k(k-1), …, k!}·E`.
pub fn product_formula(k: u64, e: &[u64]) -> Result<MultiplicitySet> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    check_set(e)?;
    let mut out = MultiplicitySet::default();
    for (j, v) in falling_chain(k + 1)?.into_iter().enumerate() {
        out.add(v, Provenance::FallingChain { k, length: j + 1 });
    }
    for (j, c) in falling_chain(k)?.into_iter().enumerate() {
        for &x in e {
            let v = c.checked_mul(x).ok_or(Error::CapExceeded {
                what: "product formula term",
                cap: u64::MAX as u128,
            })?;
            out.add(v, Provenance::ScaledChain { k, length: j + 1, e: x });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: &[u64]) -> BTreeSet<u64> {
        v.iter().copied().collect()
    }

    #[test]
    fn predicted_examples() {
        assert_eq!(predicted_main(&[2]).unwrap().values(), set(&[2]));
        assert_eq!(predicted_main(&[5]).unwrap().values(), set(&[2, 5]));
        assert_eq!(predicted_main(&[3, 7]).unwrap().values(), set(&[2, 3, 7]));
        let both = predicted_main(&[2]).unwrap();
        assert_eq!(both.provenance(2).len(), 2);
    }

    #[test]
    fn product_examples() {
        assert_eq!(product_formula(2, &[5]).unwrap().values(), set(&[3, 6, 10]));
        assert_eq!(product_formula(3, &[1]).unwrap().values(), set(&[3, 4, 6, 12, 24]));
        assert!(product_formula(0, &[5]).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let caps = BlockCaps::default();
        assert_eq!(decompose_target(&[2], 2, caps).unwrap().values(), set(&[2]));
        assert_eq!(decompose_target(&[3], 1, caps).unwrap().values(), set(&[2, 3]));
        assert_eq!(decompose_target(&[3], 0, caps).unwrap().values(), set(&[2]));
        assert_eq!(decompose_target(&[2, 3], 2, caps).unwrap().values(), set(&[2, 3]));
        assert_eq!(decompose_target(&[1], 2, caps).unwrap().values(), set(&[1, 2]));
    }

    #[test]
    fn window_beyond_steps_rejected() {
        let target = TargetSequence::from_set([2]).unwrap();
        let blocks = build_blocks(&target, 1, BlockCaps::default()).unwrap();
        assert!(matches!(
            orbit_decomposition(&blocks, 2, BlockCaps::default()),
            Err(Error::IncompleteWindow(_))
        ));
    }

    #[test]
    fn json_shape() {
        let json = serde_json::to_value(predicted_main(&[5]).unwrap()).unwrap();
        assert_eq!(json["values"], serde_json::json!([2, 5]));
        assert_eq!(json["provenance"]["2"][0]["rule"], "trivial_character");
    }

    proptest! {
        #[test]
        fn product_with_k_one_is_prediction(e in proptest::collection::btree_set(1u64..50, 1..5)) {
            let e: Vec<u64> = e.into_iter().collect();
            prop_assert_eq!(product_formula(1, &e).unwrap().values(), predicted_main(&e).unwrap().values());
        }

        #[test]
        fn prediction_contains_two_and_e(e in proptest::collection::btree_set(1u64..50, 1..5)) {
            let e: Vec<u64> = e.into_iter().collect();
            let p = predicted_main(&e).unwrap();
            prop_assert!(p.values().contains(&2));
            for v in &e {
                prop_assert!(p.values().contains(v));
                prop_assert!(!p.provenance(*v).is_empty());
            }
        }
    }
}
