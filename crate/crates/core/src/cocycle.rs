//! Per-level cocycle tables `α_k : C_k → K` and the tail-relation cocycle.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::bitgroup::KValue;
use crate::cfsystem::{CfLevel, CfSystem, Label, LevelKind, Point};
use crate::{Error, Rational, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    A,
    B,
}

/// `C^e_{n,i}`: columns `c` with `c - step ∈ C` and
/// `α(c) - α(c - step) = v^i(e)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IncrementClass {
    pub family: Family,
    pub index: usize,
    pub step: u64,
    pub increment: KValue,
    pub members: Vec<u64>,
}

/// `α_k` on `C_k`, with its increment classes when built by a recipe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CocycleTable {
    pub level: usize,
    pub n: usize,
    c: Vec<u64>,
    values: Vec<KValue>,
    z: u64,
    pub classes: Vec<IncrementClass>,
    /// Target class frequency: `1/m_a`, resp. `1/(2 m_{a,b})`.
    pub target: Option<Rational>,
    /// Allowed deviation `2/(n m)`.
    pub bound: Option<Rational>,
}

/// Frequency of one increment class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassStat {
    pub family: Family,
    pub index: usize,
    pub step: u64,
    pub count: usize,
    #[serde(with = "crate::interval::rat_serde")]
    pub frequency: Rational,
    #[serde(with = "crate::interval::rat_serde")]
    pub deviation: Rational,
}

impl CocycleTable {
    /// Table with explicit values, aligned with `level.c`.
    pub fn explicit(k: usize, level: &CfLevel, values: Vec<KValue>) -> Result<Self> {
        if values.len() != level.c.len() {
            return Err(Error::InvalidArgument(format!(
                "level {k}: {} values for {} columns",
                values.len(),
                level.c.len()
            )));
        }
        Ok(CocycleTable {
            level: k,
            n: level.n,
            c: level.c.clone(),
            values,
            z: level.z,
            classes: Vec::new(),
            target: None,
            bound: None,
        })
    }

    pub fn columns(&self) -> &[u64] {
        &self.c
    }

    pub fn values(&self) -> &[KValue] {
        &self.values
    }

    pub fn value(&self, c: u64) -> Option<&KValue> {
        self.c.binary_search(&c).ok().map(|i| &self.values[i])
    }

    /// Overwrites one entry; used to plant deliberate defects.
    pub fn set_value(&mut self, position: usize, value: KValue) {
        self.values[position] = value;
    }

    /// `α(0) = 0` and `α(c + z) = v(α(c))` on `C ∩ (C - z)`; one message per
    /// violation.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.value(0).is_some_and(|v| !v.is_zero()) {
            out.push(format!("level {}: alpha(0) != 0", self.level));
        }
        if self.z == 0 {
            return out;
        }
        for (i, &c) in self.c.iter().enumerate() {
            if let Some(next) = self.value(c + self.z) {
                if *next != self.values[i].v() {
                    out.push(format!("level {}: alpha({}) != v(alpha({c}))", self.level, c + self.z));
                }
            }
        }
        out
    }

    /// Recorded increment of each class member matches the table.
    pub fn class_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for class in &self.classes {
            for &c in &class.members {
                let ok = match (self.value(c), self.value(c - class.step)) {
                    (Some(x), Some(y)) => x.add(y) == class.increment,
                    _ => false,
                };
                if !ok {
                    out.push(format!(
                        "level {}: column {c} misfiled in class {:?}{}",
                        self.level, class.family, class.index
                    ));
                }
            }
        }
        out
    }

    pub fn class_stats(&self) -> Vec<ClassStat> {
        let card = BigInt::from(self.c.len());
        let target = self.target.clone().unwrap_or_else(Rational::zero);
        self.classes
            .iter()
            .map(|class| {
                let frequency = Rational::new(BigInt::from(class.members.len()), card.clone());
                ClassStat {
                    family: class.family,
                    index: class.index,
                    step: class.step,
                    count: class.members.len(),
                    deviation: (&frequency - &target).abs(),
                    frequency,
                }
            })
            .collect()
    }

    /// `1 - Σ #class / #C`.
    pub fn unclassified_fraction(&self) -> Rational {
        let classified: usize = self.classes.iter().map(|c| c.members.len()).sum();
        Rational::one() - Rational::new(BigInt::from(classified), BigInt::from(self.c.len()))
    }

    pub fn class(&self, family: Family, index: usize) -> Option<&IncrementClass> {
        self.classes.iter().find(|c| c.family == family && c.index == index)
    }
}

struct ClassBuilder {
    classes: Vec<IncrementClass>,
}

impl ClassBuilder {
    fn new(families: &[(Family, &KValue, u64)], m: usize) -> Self {
        let mut classes = Vec::new();
        for &(family, e, step) in families {
            for i in 0..m {
                classes.push(IncrementClass {
                    family,
                    index: i,
                    step,
                    increment: e.shift(i as i128),
                    members: Vec::new(),
                });
            }
        }
        ClassBuilder { classes }
    }

    fn push(&mut self, family: Family, index: usize, c: u64) {
        let class = self
            .classes
            .iter_mut()
            .find(|cl| cl.family == family && cl.index == index)
            .expect("class exists");
        class.members.push(c);
    }

    /// Files a step whose increment is not fixed by the recipe under the
    /// first class of `family` with the same increment and step, if any.
    fn classify(&mut self, family: Family, step: u64, increment: &KValue, c: u64) {
        let found = self
            .classes
            .iter()
            .position(|cl| cl.family == family && cl.step == step && cl.increment == *increment);
        if let Some(i) = found {
            self.classes[i].members.push(c);
        }
    }
}

/// Case I recipe for level `C_{n+1}` with label `a`.
///
/// On the base window `t < n·m` the increment from `h(t-1)` to `ht` is
/// `v^{⌊(t-1)/n⌋}(a)`; the window `j` copies it through `v^j`.
pub fn assign_case_one(k: usize, level: &CfLevel, a: &KValue) -> Result<CocycleTable> {
    let n = level.n;
    let m = a.period();
    let w = n * m;
    if level.c.len() != w * n * n || level.z != (w as u64) * level.h {
        return Err(Error::InvalidArgument(format!(
            "level {k} does not have the case I shape"
        )));
    }
    let h = level.h;
    let mut base = Vec::with_capacity(w);
    base.push(KValue::zero());
    for s in 1..w {
        let inc = a.shift(((s - 1) / n) as i128);
        base.push(base[s - 1].add(&inc));
    }
    let values: Vec<KValue> = (0..level.c.len()).map(|t| base[t % w].shift((t / w) as i128)).collect();
    let mut classes = ClassBuilder::new(&[(Family::A, a, h)], m);
    for t in 1..level.c.len() {
        let (j, s) = (t / w, t % w);
        let c = level.c[t];
        if s >= 1 {
            classes.push(Family::A, ((s - 1) / n + j) % m, c);
        } else {
            let inc = values[t].add(&values[t - 1]);
            classes.classify(Family::A, h, &inc, c);
        }
    }
    Ok(CocycleTable {
        level: k,
        n,
        c: level.c.clone(),
        values,
        z: level.z,
        classes: classes.classes,
        target: Some(Rational::new(BigInt::one(), BigInt::from(m))),
        bound: Some(Rational::new(BigInt::from(2), BigInt::from(n * m))),
    })
}

/// Case II recipe for level `C_{n+1}` with label `(a, b)`.
///
/// Along `D` the `h`-steps of the first run carry `v^i(a)` (each `i < m`
/// repeated `n` times), the seam step carries `0`, and the `(h+1)`-steps of
/// the second run carry `v^i(b)`. The copy `D + jz` is the base shifted by
/// `v^j`.
pub fn assign_case_two(k: usize, level: &CfLevel, a: &KValue, b: &KValue) -> Result<CocycleTable> {
    let n = level.n;
    let m = crate::bitgroup::common_period(a, b);
    let w = n * m;
    let base_d = level
        .base
        .as_ref()
        .filter(|d| d.len() == 2 * w && level.c.len() == 2 * w * n * n)
        .ok_or_else(|| Error::InvalidArgument(format!("level {k} does not have the case II shape")))?;
    let h = level.h;
    let mut base = Vec::with_capacity(2 * w);
    base.push(KValue::zero());
    for p in 1..2 * w {
        let inc = if p < w {
            a.shift(((p - 1) / n) as i128)
        } else if p == w {
            KValue::zero()
        } else {
            b.shift(((p - w - 1) / n) as i128)
        };
        base.push(base[p - 1].add(&inc));
    }
    debug_assert_eq!(base_d.len(), base.len());
    let values: Vec<KValue> = (0..level.c.len())
        .map(|t| base[t % (2 * w)].shift((t / (2 * w)) as i128))
        .collect();
    let mut classes = ClassBuilder::new(&[(Family::A, a, h), (Family::B, b, h + 1)], m);
    for t in 1..level.c.len() {
        let (j, p) = (t / (2 * w), t % (2 * w));
        let c = level.c[t];
        let inc = values[t].add(&values[t - 1]);
        match p {
            0 => classes.classify(Family::A, h, &inc, c),
            p if p < w => classes.push(Family::A, ((p - 1) / n + j) % m, c),
            p if p == w => classes.classify(Family::B, h + 1, &inc, c),
            p => classes.push(Family::B, ((p - w - 1) / n + j) % m, c),
        }
    }
    Ok(CocycleTable {
        level: k,
        n,
        c: level.c.clone(),
        values,
        z: level.z,
        classes: classes.classes,
        target: Some(Rational::new(BigInt::one(), BigInt::from(2 * m))),
        bound: Some(Rational::new(BigInt::from(2), BigInt::from(n * m))),
    })
}

/// The family `(α_k)_{k ≤ depth}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cocycle {
    tables: Vec<CocycleTable>,
}

impl Cocycle {
    /// Recipe tables for every formula level; the bootstrap level is `0`.
    pub fn assign(sys: &CfSystem) -> Result<Self> {
        let mut tables = Vec::with_capacity(sys.depth());
        for (i, level) in sys.levels().iter().enumerate() {
            let k = i + 1;
            let table = match &level.kind {
                LevelKind::Formula(Label::Single(a)) => assign_case_one(k, level, a)?,
                LevelKind::Formula(Label::Pair(a, b)) => assign_case_two(k, level, a, b)?,
                LevelKind::Bootstrap => CocycleTable::explicit(k, level, vec![KValue::zero(); level.c.len()])?,
                LevelKind::Custom => {
                    return Err(Error::InvalidArgument(format!(
                        "level {k} has custom columns; supply its values explicitly"
                    )))
                }
            };
            let broken = table.class_violations();
            if let Some(msg) = broken.first() {
                return Err(Error::Construction(msg.clone()));
            }
            tables.push(table);
        }
        Ok(Cocycle { tables })
    }

    /// Explicit values for every level.
    pub fn from_values(sys: &CfSystem, values: Vec<Vec<KValue>>) -> Result<Self> {
        if values.len() != sys.depth() {
            return Err(Error::InvalidArgument("one value table per level is required".into()));
        }
        let tables = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| CocycleTable::explicit(i + 1, sys.level(i + 1), v))
            .collect::<Result<_>>()?;
        Ok(Cocycle { tables })
    }

    pub fn tables(&self) -> &[CocycleTable] {
        &self.tables
    }

    /// `α_k` for `1 ≤ k ≤ depth`.
    pub fn table(&self, k: usize) -> &CocycleTable {
        &self.tables[k - 1]
    }

    pub fn table_mut(&mut self, k: usize) -> &mut CocycleTable {
        &mut self.tables[k - 1]
    }

    /// `α_k(c)`.
    pub fn value(&self, k: usize, c: u64) -> Result<&KValue> {
        self.tables[k - 1]
            .value(c)
            .ok_or_else(|| Error::InvalidArgument(format!("{c} is not in C_{k}")))
    }

    /// Invariant violations over all recipe-built levels.
    pub fn violations(&self) -> Vec<String> {
        self.tables
            .iter()
            .flat_map(|t| {
                let mut v = t.invariant_violations();
                v.extend(t.class_violations());
                v
            })
            .collect()
    }
}

/// `Σ_{k ≤ D} α_k(π(x)_k)`, where `π` zeroes the coordinates `1,…,n` for the
/// least positive `n` with `x ∈ X_n`.
///
/// Coordinates past the built depth are not included; two tail-equivalent
/// points share them, so they cancel in [`cocycle_between`].
pub fn potential(sys: &CfSystem, cocycle: &Cocycle, x: &Point) -> Result<KValue> {
    let p = x.minimal(sys);
    let mut acc = KValue::zero();
    for k in 1..=sys.depth() {
        let c = if k <= p.depth { 0 } else { p.coordinate(sys, k)? };
        acc = acc.add(cocycle.value(k, c)?);
    }
    Ok(acc)
}

/// `α(x, y)` for tail-equivalent `x, y`.
pub fn cocycle_between(sys: &CfSystem, cocycle: &Cocycle, x: &Point, y: &Point) -> Result<KValue> {
    let d = sys.depth();
    let a = x.at_depth(sys, d)?;
    let b = y.at_depth(sys, d)?;
    if a.ext != b.ext {
        return Err(Error::Precondition(
            "points are not tail-equivalent within the built depth".into(),
        ));
    }
    Ok(potential(sys, cocycle, x)?.add(&potential(sys, cocycle, y)?))
}

/// One formula level of [`summability_report`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SummabilityRow {
    pub n: usize,
    pub card: usize,
    pub sym_diff: usize,
    #[serde(with = "crate::interval::rat_serde")]
    pub sym_diff_ratio: Rational,
    #[serde(with = "crate::interval::rat_serde")]
    pub expected: Rational,
    /// `C° = {c ∈ C ∩ (C - z) : α(c + z) = v(α(c))}` equals `C ∩ (C - z)`.
    pub interior_is_full: bool,
    /// `1 - #C°/#C`.
    #[serde(with = "crate::interval::rat_serde")]
    pub interior_deficit: Rational,
    #[serde(with = "crate::interval::rat_serde")]
    pub partial_sum: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SummabilityReport {
    pub rows: Vec<SummabilityRow>,
    pub pass: bool,
}

/// Per-level quantities whose sums control `S_z̄` and `α ∘ S_z̄ = v ∘ α`.
pub fn summability_report(sys: &CfSystem, cocycle: &Cocycle) -> SummabilityReport {
    let mut rows = Vec::new();
    let mut partial = Rational::zero();
    for (i, level) in sys.levels().iter().enumerate() {
        if level.n == 0 || level.z == 0 {
            continue;
        }
        let table = cocycle.table(i + 1);
        let card = level.c.len();
        let shifted_in = level.c.iter().filter(|&&c| level.contains(c + level.z)).count();
        let sym_diff = 2 * (card - shifted_in);
        let interior = level
            .c
            .iter()
            .zip(table.values())
            .filter(|(&c, v)| table.value(c + level.z).is_some_and(|next| *next == v.v()))
            .count();
        let sym_diff_ratio = Rational::new(BigInt::from(sym_diff), BigInt::from(card));
        let expected = Rational::new(BigInt::from(2), BigInt::from(level.n * level.n));
        partial += &sym_diff_ratio;
        rows.push(SummabilityRow {
            n: level.n,
            card,
            sym_diff,
            expected,
            interior_is_full: interior == shifted_in,
            interior_deficit: Rational::one() - Rational::new(BigInt::from(interior), BigInt::from(card)),
            sym_diff_ratio,
            partial_sum: partial.clone(),
        });
    }
    let pass = rows
        .iter()
        .all(|r| r.interior_is_full && r.sym_diff_ratio == r.expected);
    SummabilityReport { rows, pass }
}

/// JSON view of one table.
#[derive(Serialize)]
struct TableRepr<'a> {
    level: usize,
    n: usize,
    #[serde(rename = "C")]
    c: &'a [u64],
    alpha: Vec<String>,
    classes: Vec<ClassStat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<String>,
}

impl Serialize for CocycleTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableRepr {
            level: self.level,
            n: self.n,
            c: &self.c,
            alpha: self.values.iter().map(KValue::word_string).collect(),
            classes: self.class_stats(),
            target: self.target.as_ref().map(ToString::to_string),
            bound: self.bound.as_ref().map(ToString::to_string),
        }
        .serialize(s)
    }
}

impl Serialize for Cocycle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.tables.serialize(s)
    }
}
