//! (C,F) construction: levels `C_{n+1}`, heights `h_n`, shift data `z_{n+1}`,
//! exact tower measures and point-level dynamics.
//!
//! Indexing: `levels()[k - 1]` describes `C_k` and the passage from
//! `F_{k-1} = {0,…,h_{k-1}-1}` to `F_k`. Level `k = 1` is a bootstrap with
//! `C_1 = {0, 1}` and `h_1 = 2`; every later level `k = n + 1` is produced by
//! the case formulas at index `n`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

use crate::bitgroup::{common_period, KValue};
use crate::interval::{MeasureInterval, RatInterval};
use crate::{Error, Rational, Result};

/// Label attached to a formula level by the character schedule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Single(KValue),
    Pair(KValue, KValue),
}

impl Label {
    /// `m_a`, resp. `m_{a,b}`.
    pub fn period(&self) -> usize {
        match self {
            Label::Single(a) => a.period(),
            Label::Pair(a, b) => common_period(a, b),
        }
    }

    pub fn zero_pair() -> Self {
        Label::Pair(KValue::zero(), KValue::zero())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Single(a) => write!(f, "{}", a.word_string()),
            Label::Pair(a, b) => write!(f, "{}:{}", a.word_string(), b.word_string()),
        }
    }
}

/// Finite prefix of the partition of ℕ into the sets `𝒩_a` and `𝒩_{a,b}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub singles: Vec<KValue>,
    pub pairs: Vec<(KValue, KValue)>,
    /// `assignment[n - 1]` labels formula index `n`.
    pub assignment: Vec<Label>,
}

impl Schedule {
    pub fn label(&self, n: usize) -> Option<&Label> {
        n.checked_sub(1).and_then(|i| self.assignment.get(i))
    }

    pub fn n_max(&self) -> usize {
        self.assignment.len()
    }

    /// Formula indices carrying `label`, in increasing order.
    pub fn indices_of(&self, label: &Label) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, l)| *l == label)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

/// Round-robin assignment over `pairs` followed by `singles`.
pub fn plan_schedule(singles: Vec<KValue>, pairs: Vec<(KValue, KValue)>, n_max: usize) -> Result<Schedule> {
    let zero = (KValue::zero(), KValue::zero());
    if !pairs.contains(&zero) {
        return Err(Error::InvalidArgument("pair labels must include (0,0)".into()));
    }
    let labels: Vec<Label> = pairs
        .iter()
        .map(|(a, b)| Label::Pair(a.clone(), b.clone()))
        .chain(singles.iter().cloned().map(Label::Single))
        .collect();
    let assignment = (0..n_max).map(|i| labels[i % labels.len()].clone()).collect();
    Ok(Schedule {
        singles,
        pairs,
        assignment,
    })
}

/// How a level was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelKind {
    Bootstrap,
    Formula(Label),
    /// Hand-specified columns (toy systems).
    Custom,
}

/// One passage `F_{k-1} → F_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfLevel {
    /// Formula index `n` (`k = n + 1`); 0 for bootstrap.
    pub n: usize,
    pub kind: LevelKind,
    /// `h_n`, the height of the tower being cut.
    pub h: u64,
    /// `z_{n+1}`.
    pub z: u64,
    /// `r_n`.
    pub r: u64,
    /// `C_{n+1}`, sorted.
    pub c: Vec<u64>,
    /// `h_{n+1}`.
    pub h_next: u64,
    pub spacer_total: u64,
    /// Case-II base block `D_{n+1}`; `C = D + z·{0,…,n²-1}`.
    pub base: Option<Vec<u64>>,
}

impl CfLevel {
    pub fn card(&self) -> u64 {
        self.c.len() as u64
    }

    pub fn contains(&self, c: u64) -> bool {
        self.c.binary_search(&c).is_ok()
    }

    /// Position of `c` in the sorted `C`.
    pub fn position(&self, c: u64) -> Option<usize> {
        self.c.binary_search(&c).ok()
    }

    pub fn label(&self) -> Option<&Label> {
        match &self.kind {
            LevelKind::Formula(l) => Some(l),
            _ => None,
        }
    }

    /// `h_{n+1} / (h_n · #C_{n+1})`.
    pub fn ratio(&self) -> Rational {
        Rational::new(
            BigInt::from(self.h_next),
            BigInt::from(self.h) * BigInt::from(self.card()),
        )
    }

    /// Largest tower-`n+1` level covered by a column, `max(F_n + C_{n+1})`.
    pub fn top_covered(&self) -> u64 {
        self.c.last().unwrap() + self.h - 1
    }

    /// Decomposes `level ∈ F_{n+1}` as `f + c` with `c ∈ C_{n+1}`,
    /// `f ∈ F_n`; `None` for spacer levels.
    pub fn split(&self, level: u64) -> Option<(u64, u64)> {
        let idx = match self.c.binary_search(&level) {
            Ok(i) => i,
            Err(0) => return None,
            Err(i) => i - 1,
        };
        let c = self.c[idx];
        let f = level - c;
        (f < self.h).then_some((f, c))
    }

    fn check(&self) -> Result<()> {
        if self.c.is_empty() || self.c[0] != 0 {
            return Err(Error::Construction(format!("C at level n={} must start at 0", self.n)));
        }
        for w in self.c.windows(2) {
            if w[1] < w[0] + self.h {
                return Err(Error::Construction(format!(
                    "columns {} and {} overlap at level n={}",
                    w[0], w[1], self.n
                )));
            }
        }
        if self.top_covered() >= self.h_next {
            return Err(Error::Construction(format!(
                "F_n + C escapes F_(n+1) at level n={}",
                self.n
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CSetRepr {
    Runs { base: Vec<u64>, stride: u64, count: u64 },
    Plain(Vec<u64>),
}

#[derive(Serialize, Deserialize)]
struct CfLevelRepr {
    n: usize,
    label: LevelKind,
    h: u64,
    z: u64,
    r: u64,
    #[serde(rename = "C")]
    c: CSetRepr,
    h_next: u64,
}

impl Serialize for CfLevel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let c = match &self.base {
            Some(base) => CSetRepr::Runs {
                base: base.clone(),
                stride: self.z,
                count: self.c.len() as u64 / base.len() as u64,
            },
            None => CSetRepr::Plain(self.c.clone()),
        };
        CfLevelRepr {
            n: self.n,
            label: self.kind.clone(),
            h: self.h,
            z: self.z,
            r: self.r,
            c,
            h_next: self.h_next,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CfLevel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = CfLevelRepr::deserialize(d)?;
        let (c, base) = match repr.c {
            CSetRepr::Plain(c) => (c, None),
            CSetRepr::Runs { base, stride, count } => {
                let mut c = Vec::with_capacity(base.len() * count as usize);
                for j in 0..count {
                    c.extend(base.iter().map(|d| d + j * stride));
                }
                (c, Some(base))
            }
        };
        if c.windows(2).any(|w| w[0] >= w[1]) {
            return Err(D::Error::custom("C must be strictly increasing"));
        }
        let top = c.last().copied().unwrap_or(0) + repr.h;
        let level = CfLevel {
            n: repr.n,
            kind: repr.label,
            h: repr.h,
            z: repr.z,
            r: repr.r,
            spacer_total: repr.h_next.saturating_sub(top),
            c,
            h_next: repr.h_next,
            base,
        };
        level.check().map_err(D::Error::custom)?;
        Ok(level)
    }
}

/// Limits on level growth.
#[derive(Debug, Clone, Copy)]
pub struct SystemCaps {
    pub max_h: u64,
    pub max_columns: u64,
}

impl Default for SystemCaps {
    fn default() -> Self {
        SystemCaps {
            max_h: 1_000_000_000_000_000,
            max_columns: 5_000_000,
        }
    }
}

/// Builds the level for formula index `n ≥ 1` cutting a tower of height `h_n`.
pub fn build_level(h: u64, n: usize, label: &Label, caps: SystemCaps) -> Result<CfLevel> {
    if n == 0 {
        return Err(Error::InvalidArgument("formula levels start at n = 1".into()));
    }
    if h == 0 {
        return Err(Error::InvalidArgument("tower height must be positive".into()));
    }
    let over = |what| {
        move || Error::CapExceeded {
            what,
            cap: caps.max_h as u128,
        }
    };
    let n64 = n as u64;
    let m = label.period() as u64;
    let level = match label {
        Label::Single(_) => {
            let r = n64.pow(3) * m;
            if r < 2 {
                return Err(Error::InvalidArgument(format!(
                    "single label of period {m} at n = {n} gives #C = {r}; #C > 1 is required"
                )));
            }
            if r > caps.max_columns {
                return Err(Error::CapExceeded {
                    what: "column count",
                    cap: caps.max_columns as u128,
                });
            }
            let h_next = r.checked_mul(h).ok_or_else(over("tower height"))?;
            let z = m * n64 * h;
            let c: Vec<u64> = (0..r).map(|t| t * h).collect();
            CfLevel {
                n,
                kind: LevelKind::Formula(label.clone()),
                h,
                z,
                r,
                spacer_total: h_next - (c.last().unwrap() + h),
                c,
                h_next,
                base: None,
            }
        }
        Label::Pair(_, _) => {
            let r = 2 * n64.pow(3) * m;
            if r > caps.max_columns {
                return Err(Error::CapExceeded {
                    what: "column count",
                    cap: caps.max_columns as u128,
                });
            }
            let z = (2 * h + 1).checked_mul(m * n64).ok_or_else(over("tower height"))?;
            let h_next = r
                .checked_mul(h)
                .and_then(|x| x.checked_add(r / 2))
                .ok_or_else(over("tower height"))?;
            let w = n64 * m;
            let mut base: Vec<u64> = (0..w).map(|t| t * h).collect();
            base.extend((1..=w).map(|s| (h + 1) * s + h * (w - 1)));
            let mut c = Vec::with_capacity(r as usize);
            for j in 0..n64 * n64 {
                c.extend(base.iter().map(|d| d + j * z));
            }
            CfLevel {
                n,
                kind: LevelKind::Formula(label.clone()),
                h,
                z,
                r,
                spacer_total: h_next - (c.last().unwrap() + h),
                c,
                h_next,
                base: Some(base),
            }
        }
    };
    if level.h_next > caps.max_h {
        return Err(Error::CapExceeded {
            what: "tower height",
            cap: caps.max_h as u128,
        });
    }
    level.check()?;
    Ok(level)
}

/// A finite prefix `(C_k, F_k)_{k ≤ depth}` of a (C,F) construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfSystem {
    levels: Vec<CfLevel>,
    schedule: Option<Schedule>,
}

impl CfSystem {
    /// Bootstrap level followed by one formula level per scheduled index.
    pub fn build(schedule: Schedule, caps: SystemCaps) -> Result<Self> {
        let mut levels = vec![CfLevel {
            n: 0,
            kind: LevelKind::Bootstrap,
            h: 1,
            z: 0,
            r: 2,
            c: vec![0, 1],
            h_next: 2,
            spacer_total: 0,
            base: None,
        }];
        for n in 1..=schedule.n_max() {
            let h = levels.last().unwrap().h_next;
            let label = schedule.label(n).unwrap();
            levels.push(build_level(h, n, label, caps)?);
        }
        Ok(CfSystem {
            levels,
            schedule: Some(schedule),
        })
    }

    /// System from explicit column sets `C_1, C_2, …` with heights `h_1, h_2, …`.
    pub fn from_columns(columns: Vec<(Vec<u64>, u64)>) -> Result<Self> {
        let mut levels = Vec::with_capacity(columns.len());
        let mut h = 1;
        for (k, (c, h_next)) in columns.into_iter().enumerate() {
            if c.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument("columns must be strictly increasing".into()));
            }
            let top = c.last().map_or(0, |&x| x + h);
            let level = CfLevel {
                n: k,
                kind: LevelKind::Custom,
                h,
                z: 0,
                r: c.len() as u64,
                spacer_total: h_next.saturating_sub(top),
                c,
                h_next,
                base: None,
            };
            level.check()?;
            h = h_next;
            levels.push(level);
        }
        Ok(CfSystem { levels, schedule: None })
    }

    /// Number of built levels `D`; the deepest tower is `F_D`.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[CfLevel] {
        &self.levels
    }

    pub fn schedule(&self) -> Option<&Schedule> {
        self.schedule.as_ref()
    }

    /// `C_k` for `1 ≤ k ≤ depth`.
    pub fn level(&self, k: usize) -> &CfLevel {
        &self.levels[k - 1]
    }

    /// The level built from formula index `n`, i.e. `C_{n+1}`.
    pub fn formula_level(&self, n: usize) -> Option<&CfLevel> {
        self.levels.get(n).filter(|l| matches!(l.kind, LevelKind::Formula(_)))
    }

    /// `h_k` for `0 ≤ k ≤ depth`.
    pub fn height(&self, k: usize) -> u64 {
        if k == 0 {
            1
        } else {
            self.levels[k - 1].h_next
        }
    }

    /// `z_1 + ⋯ + z_m`.
    pub fn z_sum(&self, m: usize) -> u64 {
        self.levels[..m].iter().map(|l| l.z).sum()
    }

    /// `∏_{k=from+1}^{to} #C_k`.
    pub fn column_product(&self, from: usize, to: usize) -> BigInt {
        self.levels[from..to]
            .iter()
            .fold(BigInt::one(), |acc, l| acc * BigInt::from(l.card()))
    }

    /// Upper bound on `∏_{k>depth} h_k / (h_{k-1} #C_k)` for any continuation
    /// by the case formulas: the ratios are at most `1 + 1/(2h_k)` and the
    /// heights at least double, so the product is below `exp(1/(2h_D))`,
    /// which is below `2h_D / (2h_D - 1)`.
    pub fn tail_factor_bound(&self) -> Rational {
        let h = BigInt::from(self.height(self.depth())) * BigInt::from(2u8);
        Rational::new(h.clone(), h - 1)
    }

    /// Measure of one level of tower `L`, bracketed.
    pub fn level_measure(&self, l: usize) -> Result<RatInterval> {
        if l > self.depth() {
            return Err(Error::InvalidArgument(format!(
                "conditioning level {l} exceeds built depth {}",
                self.depth()
            )));
        }
        let rest: Rational = self.levels[l..].iter().map(CfLevel::ratio).product();
        let hi = Rational::one() / (Rational::from_integer(BigInt::from(self.height(l))) * rest);
        let lo = &hi / self.tail_factor_bound();
        Ok(RatInterval::new(lo, hi))
    }

    /// Validates a point's level and its materialised tail.
    pub fn point(&self, depth: usize, f: u64, tail: Vec<u64>) -> Result<Point> {
        if depth > self.depth() || depth + tail.len() > self.depth() {
            return Err(Error::InvalidArgument("point deeper than the built system".into()));
        }
        if f >= self.height(depth) {
            return Err(Error::InvalidArgument(format!("f = {f} outside F_{depth}")));
        }
        for (i, &c) in tail.iter().enumerate() {
            if !self.level(depth + 1 + i).contains(c) {
                return Err(Error::InvalidArgument(format!("{c} is not in C_{}", depth + 1 + i)));
            }
        }
        Ok(Point { depth, f, tail, ext: 0 })
    }
}

/// Result of [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelCheck {
    pub k: usize,
    pub n: usize,
    pub more_than_one_column: bool,
    pub nested: bool,
    pub disjoint: bool,
    /// `max(F_n + C_{n+1}) = h_{n+1} - 1` (case II) or `F_n + C = F_{n+1}` (case I).
    pub exact_fit: Option<bool>,
    #[serde(with = "crate::interval::rat_serde")]
    pub ratio: Rational,
    pub ratio_as_expected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub levels: Vec<LevelCheck>,
    /// `h_D / (#C_1 ⋯ #C_D)`, the product of all level ratios.
    #[serde(with = "crate::interval::rat_serde")]
    pub ratio_product: Rational,
    /// `Σ 1/(2h_n)` over case-II levels.
    #[serde(with = "crate::interval::rat_serde")]
    pub log_bound_sum: Rational,
    /// `1 / (1 - Σ)`, a rational upper bound on `exp(Σ)` and hence on the
    /// limit of the ratio product.
    #[serde(with = "crate::interval::rat_serde")]
    pub limit_bound: Rational,
    pub pass: bool,
}

/// Checks the four structural requirements on every level.
pub fn validate(sys: &CfSystem) -> ValidationReport {
    let mut checks = Vec::new();
    let mut sum = Rational::zero();
    for (i, level) in sys.levels().iter().enumerate() {
        let more_than_one_column = level.c.len() > 1;
        let nested = level.c.first() == Some(&0) && level.top_covered() < level.h_next;
        let disjoint = level.c.windows(2).all(|w| w[1] >= w[0] + level.h);
        let ratio = level.ratio();
        let (exact_fit, expected_ratio) = match level.label() {
            Some(Label::Single(_)) => (
                Some(level.spacer_total == 0 && level.c.windows(2).all(|w| w[1] == w[0] + level.h)),
                Rational::one(),
            ),
            Some(Label::Pair(_, _)) => {
                let half = Rational::new(BigInt::one(), BigInt::from(2 * level.h));
                sum += &half;
                (Some(level.top_covered() == level.h_next - 1), Rational::one() + half)
            }
            None => (None, ratio.clone()),
        };
        checks.push(LevelCheck {
            k: i + 1,
            n: level.n,
            more_than_one_column,
            nested,
            disjoint,
            exact_fit,
            ratio_as_expected: ratio == expected_ratio,
            ratio,
        });
    }
    let ratio_product: Rational = checks.iter().map(|c| c.ratio.clone()).product();
    let limit_bound = if sum < Rational::one() {
        Rational::one() / (Rational::one() - &sum)
    } else {
        Rational::zero()
    };
    let pass = checks
        .iter()
        .all(|c| c.more_than_one_column && c.nested && c.disjoint && c.ratio_as_expected && c.exact_fit != Some(false))
        && sum < Rational::one()
        && ratio_product <= limit_bound;
    ValidationReport {
        levels: checks,
        ratio_product,
        log_bound_sum: sum,
        limit_bound,
        pass,
    }
}

/// `μ([A]_N)` resolved at tower `L`: `|A|·∏_{k=N+1}^{L} #C_k` levels of
/// tower `L`, each of measure [`CfSystem::level_measure`].
pub fn measure_cylinder(sys: &CfSystem, a: &[u64], n: usize, l: usize) -> Result<MeasureInterval> {
    if n > l || l > sys.depth() {
        return Err(Error::InvalidArgument(format!(
            "need N <= L <= depth, got N = {n}, L = {l}, depth = {}",
            sys.depth()
        )));
    }
    let h = sys.height(n);
    if let Some(bad) = a.iter().find(|&&f| f >= h) {
        return Err(Error::InvalidArgument(format!("{bad} is not in F_{n}")));
    }
    let mut distinct = a.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let count = BigInt::from(distinct.len()) * sys.column_product(n, l);
    let lambda = sys.level_measure(l)?;
    let scaled = lambda.scale(&Rational::from_integer(count));
    Ok(MeasureInterval {
        lower: scaled.lo,
        upper: scaled.hi,
        conditioning_level: l,
    })
}

/// Point `(f, c_{depth+1}, c_{depth+2}, …) ∈ X_depth`.
///
/// Coordinates past the materialised `tail` are `ext · z_k`; `ext = 0` is the
/// canonical all-zero tail and `ext` grows by one under each application of
/// [`s_z_apply`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub depth: usize,
    pub f: u64,
    pub tail: Vec<u64>,
    pub ext: u64,
}

impl Point {
    /// Coordinate `c_k` for `k > depth`, if level `k` is built.
    pub fn coordinate(&self, sys: &CfSystem, k: usize) -> Result<u64> {
        assert!(k > self.depth);
        if k > sys.depth() {
            return Err(Error::Undefined(format!(
                "coordinate c_{k} lies beyond the built depth"
            )));
        }
        let c = match self.tail.get(k - self.depth - 1) {
            Some(&c) => c,
            None => self.ext * sys.level(k).z,
        };
        if !sys.level(k).contains(c) {
            return Err(Error::Undefined(format!("extension coordinate {c} is not in C_{k}")));
        }
        Ok(c)
    }

    /// Re-expresses the point in `X_{depth+1}`.
    pub fn promote(&self, sys: &CfSystem) -> Result<Point> {
        let c = self.coordinate(sys, self.depth + 1)?;
        Ok(Point {
            depth: self.depth + 1,
            f: self.f + c,
            tail: self.tail.iter().skip(1).copied().collect(),
            ext: self.ext,
        })
    }

    /// Re-expresses the point in `X_{depth-1}`, if its level is covered by a
    /// column of `C_depth`.
    pub fn demote(&self, sys: &CfSystem) -> Option<Point> {
        if self.depth == 0 {
            return None;
        }
        let (f, c) = sys.level(self.depth).split(self.f)?;
        let mut tail = Vec::with_capacity(self.tail.len() + 1);
        tail.push(c);
        tail.extend_from_slice(&self.tail);
        Some(Point {
            depth: self.depth - 1,
            f,
            tail,
            ext: self.ext,
        })
    }

    /// Representation at the least positive depth.
    pub fn minimal(&self, sys: &CfSystem) -> Point {
        let mut p = self.clone();
        while p.depth > 1 {
            match p.demote(sys) {
                Some(q) => p = q,
                None => break,
            }
        }
        if p.depth == 0 {
            p = p.promote(sys).expect("level 1 is always built");
        }
        p
    }

    /// Representation at exactly `depth`.
    pub fn at_depth(&self, sys: &CfSystem, depth: usize) -> Result<Point> {
        let mut p = self.clone();
        while p.depth < depth {
            p = p.promote(sys)?;
        }
        while p.depth > depth {
            p = p
                .demote(sys)
                .ok_or_else(|| Error::Undefined(format!("point is not in X_{depth}")))?;
        }
        Ok(p)
    }

    /// Same point of `X`, compared at a common depth.
    pub fn same_as(&self, other: &Point, sys: &CfSystem) -> Result<bool> {
        let d = self.depth.max(other.depth);
        let a = self.at_depth(sys, d)?;
        let b = other.at_depth(sys, d)?;
        let deepest = sys.depth();
        if a.f != b.f || a.ext != b.ext {
            return Ok(false);
        }
        for k in d + 1..=deepest {
            if a.coordinate(sys, k)? != b.coordinate(sys, k)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Largest `|steps|` accepted by [`apply_t`].
pub const MAX_T_STEPS: u64 = 1 << 40;

/// `T^steps x`, promoting the point as often as needed.
pub fn apply_t(sys: &CfSystem, x: &Point, steps: i64) -> Result<Point> {
    if steps.unsigned_abs() > MAX_T_STEPS {
        return Err(Error::CapExceeded {
            what: "|steps|",
            cap: MAX_T_STEPS as u128,
        });
    }
    let mut p = x.clone();
    if steps >= 0 {
        let s = steps as u64;
        while p.f + s > sys.height(p.depth) - 1 {
            p = p.promote(sys)?;
        }
        p.f += s;
    } else {
        let s = steps.unsigned_abs();
        while p.f < s {
            p = p.promote(sys)?;
        }
        p.f -= s;
    }
    Ok(p)
}

/// `S_z̄(x) = (z_1+⋯+z_m+f_m, z_{m+1}+c_{m+1}, …)` on
/// `X^z̄_m = {0,…,h_m - z_1 - ⋯ - z_m - 1} × ∏_{k>m} (C_k ∩ (C_k - z_k))`,
/// trying the point's own depth first, then deeper representations.
pub fn s_z_apply(sys: &CfSystem, x: &Point) -> Result<Point> {
    let mut p = x.clone();
    loop {
        if let Some(image) = s_z_at_depth(sys, &p) {
            return Ok(image);
        }
        if p.depth >= sys.depth() {
            return Err(Error::Undefined(
                "point is outside the domain of S_z at every built depth".into(),
            ));
        }
        p = p.promote(sys)?;
    }
}

fn s_z_at_depth(sys: &CfSystem, x: &Point) -> Option<Point> {
    let m = x.depth;
    let shift = sys.z_sum(m);
    if x.f + shift >= sys.height(m) {
        return None;
    }
    let mut tail = Vec::with_capacity(x.tail.len());
    for (i, &c) in x.tail.iter().enumerate() {
        let level = sys.level(m + 1 + i);
        if !level.contains(c + level.z) {
            return None;
        }
        tail.push(c + level.z);
    }
    for k in m + 1 + x.tail.len()..=sys.depth() {
        let level = sys.level(k);
        if !level.contains((x.ext + 1) * level.z) {
            return None;
        }
    }
    Some(Point {
        depth: m,
        f: x.f + shift,
        tail,
        ext: x.ext + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(word: &str) -> KValue {
        KValue::parse(word).unwrap()
    }

    fn rat(p: i64, q: i64) -> Rational {
        Rational::new(p.into(), q.into())
    }

    fn demo_system(n_max: usize) -> CfSystem {
        let schedule = plan_schedule(
            vec![k("10")],
            vec![(KValue::zero(), KValue::zero()), (KValue::zero(), k("10"))],
            n_max,
        )
        .unwrap();
        CfSystem::build(schedule, SystemCaps::default()).unwrap()
    }

    #[test]
    fn schedule_round_robin() {
        let s = plan_schedule(vec![k("10")], vec![(KValue::zero(), KValue::zero())], 4).unwrap();
        let zero = Label::zero_pair();
        let a = Label::Single(k("10"));
        assert_eq!(s.assignment, vec![zero.clone(), a.clone(), zero.clone(), a]);
        let s = plan_schedule(vec![], vec![(KValue::zero(), KValue::zero())], 2).unwrap();
        assert_eq!(s.assignment, vec![zero.clone(), zero]);
        assert!(plan_schedule(vec![k("10")], vec![(k("1"), k("1"))], 3).is_err());
    }

    #[test]
    fn case_one_worked_level() {
        // period 1, n = 2, h = 5; a period-1 nonzero point is "1"
        let l = build_level(5, 2, &Label::Single(k("1")), SystemCaps::default()).unwrap();
        assert_eq!((l.z, l.r, l.h_next), (10, 8, 40));
        assert_eq!(l.c, vec![0, 5, 10, 15, 20, 25, 30, 35]);
        assert_eq!(l.spacer_total, 0);
    }

    #[test]
    fn case_two_worked_level() {
        let l = build_level(5, 2, &Label::zero_pair(), SystemCaps::default()).unwrap();
        assert_eq!((l.z, l.r, l.h_next), (22, 16, 88));
        assert_eq!(l.base.as_deref(), Some(&[0, 5, 11, 17][..]));
        let expected: Vec<u64> = (0..4).flat_map(|j| [0, 5, 11, 17].map(|d| d + 22 * j)).collect();
        assert_eq!(l.c, expected);
        assert_eq!(l.top_covered(), 87);
        assert_eq!(l.r % 2, 0);
    }

    #[test]
    fn degenerate_single_level_rejected() {
        assert!(build_level(3, 1, &Label::Single(KValue::zero()), SystemCaps::default()).is_err());
    }

    #[test]
    fn height_cap_enforced() {
        let caps = SystemCaps {
            max_h: 100,
            ..SystemCaps::default()
        };
        assert!(matches!(
            build_level(50, 2, &Label::zero_pair(), caps),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn built_system_validates() {
        let sys = demo_system(6);
        let report = validate(&sys);
        assert!(report.pass, "{report:?}");
        assert_eq!(sys.height(1), 2);
        assert_eq!(sys.height(2), 5);
        assert_eq!(sys.height(3), 176);
        assert_eq!(sys.height(4), 9504);
        for check in &report.levels {
            if check.n >= 1 {
                assert_eq!(check.exact_fit, Some(true));
            }
        }
    }

    #[test]
    fn overlapping_custom_level_rejected() {
        // h_1 = 5 after C_1 = {0,1,3}; C_2 = {0,3} overlaps
        assert!(CfSystem::from_columns(vec![(vec![0, 1, 3], 5), (vec![0, 3], 12)]).is_err());
    }

    #[test]
    fn validate_flags_overlap() {
        let mut sys = demo_system(2);
        sys.levels[1].c = vec![0, 1];
        let report = validate(&sys);
        assert!(!report.levels[1].disjoint);
        assert!(!report.pass);
    }

    #[test]
    fn measure_examples() {
        let sys = demo_system(4);
        let empty = measure_cylinder(&sys, &[], 2, 4).unwrap();
        assert_eq!((empty.lower.clone(), empty.upper.clone()), (rat(0, 1), rat(0, 1)));

        let full: Vec<u64> = (0..sys.height(2)).collect();
        let m = measure_cylinder(&sys, &full, 2, sys.depth()).unwrap();
        let conditioned = Rational::new(
            BigInt::from(sys.height(2)) * sys.column_product(2, sys.depth()),
            BigInt::from(sys.height(sys.depth())),
        );
        assert_eq!(m.upper, conditioned);
        assert!(m.upper <= rat(1, 1));
        assert!(m.lower < m.upper);

        let a1 = measure_cylinder(&sys, &[0, 1], 2, 3).unwrap();
        let a2 = measure_cylinder(&sys, &[3], 2, 3).unwrap();
        let both = measure_cylinder(&sys, &[0, 1, 3], 2, 3).unwrap();
        assert_eq!(&a1.lower + &a2.lower, both.lower);
        assert_eq!(&a1.upper + &a2.upper, both.upper);

        assert!(measure_cylinder(&sys, &[5], 2, 3).is_err());
    }

    #[test]
    fn measure_refines_over_next_columns() {
        let sys = demo_system(4);
        let a = [1u64, 3];
        let coarse = measure_cylinder(&sys, &a, 2, 4).unwrap();
        let level = sys.level(3);
        let fine: Vec<u64> = level.c.iter().flat_map(|c| a.iter().map(move |f| f + c)).collect();
        let refined = measure_cylinder(&sys, &fine, 3, 4).unwrap();
        assert_eq!(coarse, refined);
        // equal-measure rungs: level f and its T-image f + 1
        let l0 = measure_cylinder(&sys, &[7], 3, 4).unwrap();
        let l1 = measure_cylinder(&sys, &[8], 3, 4).unwrap();
        assert_eq!(l0, l1);
    }

    #[test]
    fn apply_t_examples() {
        let sys = demo_system(3);
        let x = sys.point(1, 0, vec![]).unwrap();
        assert_eq!(apply_t(&sys, &x, 1).unwrap().f, 1);
        assert_eq!(apply_t(&sys, &x, 0).unwrap(), x);
        let top = sys.point(sys.depth(), sys.height(sys.depth()) - 1, vec![]).unwrap();
        assert!(matches!(apply_t(&sys, &top, 1), Err(Error::Undefined(_))));
    }

    #[test]
    fn apply_t_crosses_columns_with_spacers() {
        let sys = demo_system(3);
        // level 2 is the (0,0) level with h_1 = 2: C_2 = {0, 3}, h_2 = 5
        assert_eq!(sys.level(2).c, vec![0, 3]);
        let x = sys.point(1, 1, vec![0]).unwrap();
        let y = apply_t(&sys, &x, 1).unwrap();
        assert_eq!((y.depth, y.f), (2, 2));
        let back = apply_t(&sys, &y, -1).unwrap();
        assert!(back.same_as(&x, &sys).unwrap());
        let stepwise = (0..7).try_fold(x.clone(), |p, _| apply_t(&sys, &p, 1)).unwrap();
        assert!(stepwise.same_as(&apply_t(&sys, &x, 7).unwrap(), &sys).unwrap());
    }

    #[test]
    fn s_z_canonical_point() {
        let sys = demo_system(4);
        // z_2 = h_2 = 5, so the canonical point needs depth 3
        let x = sys.point(2, 0, vec![]).unwrap();
        let y = s_z_apply(&sys, &x).unwrap();
        assert_eq!(y.depth, 3);
        assert_eq!(y.f, sys.z_sum(3));
        assert_eq!(y.ext, 1);
        assert_eq!(y.coordinate(&sys, 4).unwrap(), sys.level(4).z);
        assert_eq!(y.coordinate(&sys, 5).unwrap(), sys.level(5).z);
    }

    #[test]
    fn s_z_rejects_outside_domain() {
        let sys = demo_system(4);
        // last column of C_4 has no z-successor, at every depth
        let d = sys.depth();
        let last = *sys.level(d).c.last().unwrap();
        let x = sys.point(d - 1, 0, vec![last]).unwrap();
        assert!(matches!(s_z_apply(&sys, &x), Err(Error::Undefined(_))));
    }

    #[test]
    fn s_z_commutes_with_t_on_interior_points() {
        let sys = demo_system(4);
        let mut checked = 0;
        for f in 0..sys.height(2) {
            for &c3 in sys.level(3).c.iter().step_by(7) {
                let x = sys.point(2, f, vec![c3]).unwrap();
                let (Ok(sx), Ok(tx)) = (s_z_apply(&sys, &x), apply_t(&sys, &x, 1)) else {
                    continue;
                };
                let (Ok(tsx), Ok(stx)) = (apply_t(&sys, &sx, 1), s_z_apply(&sys, &tx)) else {
                    continue;
                };
                assert!(tsx.same_as(&stx, &sys).unwrap(), "x = {x:?}");
                checked += 1;
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn system_json_roundtrip() {
        let sys = demo_system(3);
        let json = serde_json::to_value(&sys).unwrap();
        // case II level stored run-length encoded
        assert!(json["levels"][1]["C"]["base"].is_array());
        let back: CfSystem = serde_json::from_value(json).unwrap();
        assert_eq!(back, sys);
    }
}
