//! Arithmetic in `G = ⊕_{i∈ℤ} ℤ/2ℤ` and in the `v`-periodic part of its dual
//! `K = ∏_{i∈ℤ} ℤ/2ℤ`.
//!
//! # Shift convention
//!
//! The shift `v` acts by `(v g)_j = g_{j+1}`. On supports this is a
//! translation by `-1`: [`GroupElement::shift`]`(g, i)` moves every support
//! position `s` to `s - i`. Periodic points of `K` use the same convention,
//! so `KValue::shift(a, i)` has word `new[j] = old[(j + i) mod m]`.
//!
//! Characters of `K` are elements of `G`; the pairing is the parity of the
//! overlap, `χ(a) = (-1)^{Σ_{s ∈ supp χ} a_s}`.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Rational, Result};

/// Support position in `ℤ`.
pub type Site = i128;

/// Finite-support element of `G`, stored as the sorted set of positions
/// carrying a 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct GroupElement {
    support: Vec<Site>,
}

impl GroupElement {
    pub fn zero() -> Self {
        GroupElement::default()
    }

    /// Builds an element from positions; repeated positions cancel in pairs.
    pub fn from_sites<I: IntoIterator<Item = Site>>(sites: I) -> Self {
        let mut odd = BTreeSet::new();
        for s in sites {
            if !odd.insert(s) {
                odd.remove(&s);
            }
        }
        GroupElement {
            support: odd.into_iter().collect(),
        }
    }

    pub fn support(&self) -> &[Site] {
        &self.support
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    /// Number of ones.
    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn min_site(&self) -> Option<Site> {
        self.support.first().copied()
    }

    pub fn max_site(&self) -> Option<Site> {
        self.support.last().copied()
    }

    /// Symmetric difference of supports.
    pub fn add(&self, other: &GroupElement) -> GroupElement {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.support, &other.support);
        let mut out = Vec::with_capacity(a.len() + b.len());
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        GroupElement { support: out }
    }

    /// `v^i(g)`: support translated by `-i`.
    pub fn shift(&self, i: Site) -> GroupElement {
        GroupElement {
            support: self.support.iter().map(|s| s - i).collect(),
        }
    }

    /// Translate of `self` whose support starts at 0 (zero stays zero).
    pub fn normalized(&self) -> GroupElement {
        match self.min_site() {
            Some(m) => self.shift(m),
            None => self.clone(),
        }
    }

    /// True when `other = v^i(self)` for some `i ∈ ℤ`.
    pub fn is_translate_of(&self, other: &GroupElement) -> bool {
        self.normalized() == other.normalized()
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, s) in self.support.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.support.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let sites = Vec::<Site>::deserialize(d)?;
        if sites.windows(2).any(|w| w[0] >= w[1]) {
            return Err(D::Error::custom("support must be strictly increasing"));
        }
        Ok(GroupElement { support: sites })
    }
}

/// `v`-periodic point of `K`: the bi-infinite sequence `a_i = word[i mod m]`.
///
/// Always stored at its least period, so [`KValue::period`] is `m_a`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KValue {
    word: Vec<bool>,
}

impl KValue {
    pub fn zero() -> Self {
        KValue { word: vec![false] }
    }

    /// Canonicalises `word` to its least period. Errors on an empty word.
    pub fn from_word(word: Vec<bool>) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::InvalidArgument("KValue word must be nonempty".into()));
        }
        Ok(KValue {
            word: reduce_to_least_period(word),
        })
    }

    /// Parses a `0`/`1` string such as `"0110"`.
    pub fn parse(text: &str) -> Result<Self> {
        let word = text
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!(
                    "KValue word may contain only 0/1, got {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        KValue::from_word(word)
    }

    /// Least period `m_a`.
    pub fn period(&self) -> usize {
        self.word.len()
    }

    pub fn word(&self) -> &[bool] {
        &self.word
    }

    pub fn word_string(&self) -> String {
        self.word.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.word.iter().all(|b| !b)
    }

    /// Coordinate `a_i`.
    pub fn bit(&self, i: Site) -> bool {
        let m = self.word.len() as Site;
        self.word[i.rem_euclid(m) as usize]
    }

    pub fn add(&self, other: &KValue) -> KValue {
        let l = common_period(self, other);
        let word = (0..l)
            .map(|i| self.word[i % self.period()] ^ other.word[i % other.period()])
            .collect();
        KValue {
            word: reduce_to_least_period(word),
        }
    }

    /// `v^i(a)`; rotations keep the least period.
    pub fn shift(&self, i: Site) -> KValue {
        let m = self.word.len() as Site;
        let r = i.rem_euclid(m) as usize;
        let mut word = self.word.clone();
        word.rotate_left(r);
        KValue { word }
    }

    /// `v(a)`.
    pub fn v(&self) -> KValue {
        self.shift(1)
    }
}

impl fmt::Display for KValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})^∞", self.word_string())
    }
}

#[derive(Serialize, Deserialize)]
struct KValueRepr {
    period: usize,
    word: String,
}

impl Serialize for KValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KValueRepr {
            period: self.period(),
            word: self.word_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for KValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = KValueRepr::deserialize(d)?;
        if repr.word.len() != repr.period {
            return Err(D::Error::custom("period does not match word length"));
        }
        let value = KValue::parse(&repr.word).map_err(D::Error::custom)?;
        if value.period() != repr.period {
            return Err(D::Error::custom("word is not at its least period"));
        }
        Ok(value)
    }
}

fn reduce_to_least_period(word: Vec<bool>) -> Vec<bool> {
    let m = word.len();
    for d in 1..=m {
        if m.is_multiple_of(d) && (0..m).all(|i| word[i] == word[(i + d) % m]) {
            return word[..d].to_vec();
        }
    }
    word
}

/// `χ(a) ∈ {+1, -1}`.
pub fn char_eval(chi: &GroupElement, a: &KValue) -> i8 {
    let ones = chi.support().iter().filter(|&&s| a.bit(s)).count();
    if ones % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `l_χ(a) = m_a^{-1} Σ_{i<m_a} χ(v^i a)`, exact.
pub fn l_value(chi: &GroupElement, a: &KValue) -> Rational {
    let m = a.period();
    let total: i64 = (0..m as Site).map(|i| char_eval(chi, &a.shift(i)) as i64).sum();
    Rational::new(BigInt::from(total), BigInt::from(m))
}

/// `m_{a,b}`: least common period.
pub fn common_period(a: &KValue, b: &KValue) -> usize {
    a.period().lcm(&b.period())
}

/// Largest `period_cap` accepted by [`find_separating_point`].
pub const MAX_SEARCH_PERIOD: usize = 24;

/// Searches periodic points by increasing period, then lexicographic word,
/// for `a` with `l_χ(a) ≠ l_ξ(a)`.
///
/// Requires `χ` and `ξ` not to be shift-translates of each other.
pub fn find_separating_point(chi: &GroupElement, xi: &GroupElement, period_cap: usize) -> Result<KValue> {
    if chi.is_translate_of(xi) {
        return Err(Error::Precondition(format!(
            "{chi} and {xi} lie on the same shift orbit"
        )));
    }
    if period_cap > MAX_SEARCH_PERIOD {
        return Err(Error::InvalidArgument(format!(
            "period cap {period_cap} exceeds {MAX_SEARCH_PERIOD}"
        )));
    }
    for m in 1..=period_cap {
        for code in 0u32..(1u32 << m) {
            // most significant bit first gives lexicographic order on words
            let word: Vec<bool> = (0..m).map(|k| code >> (m - 1 - k) & 1 == 1).collect();
            let a = KValue::from_word(word)?;
            if a.period() != m {
                continue;
            }
            if l_value(chi, &a) != l_value(xi, &a) {
                return Ok(a);
            }
        }
    }
    Err(Error::NotFound(period_cap))
}
