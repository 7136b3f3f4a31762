//! Matrix elements `⟨U_{T,χ}^m 1_{[A]_N}, 1_{[B]_N}⟩` of the twisted Koopman
//! operator `U_{T,χ} g(x) = χ(α(Tx, x)) g(Tx)`, weak-limit traces along the
//! character schedule and the evidence bundle for the multiplicity claims.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::bitgroup::{char_eval, find_separating_point, l_value, GroupElement, KValue, MAX_SEARCH_PERIOD};
use crate::cfsystem::{CfSystem, Label};
use crate::cocycle::{summability_report, Cocycle, SummabilityReport};
use crate::interval::{rat_serde, RatInterval};
use crate::{Error, Rational, Result};

/// Sign tables `χ(α_k(c))` for one character.
pub struct Phases<'a> {
    sys: &'a CfSystem,
    signs: Vec<Vec<i8>>,
    /// `zero_prefix[k] = ∏_{j ≤ k} χ(α_j(0))`.
    zero_prefix: Vec<i8>,
}

impl<'a> Phases<'a> {
    pub fn new(sys: &'a CfSystem, cocycle: &Cocycle, chi: &GroupElement) -> Self {
        let signs: Vec<Vec<i8>> = (1..=sys.depth())
            .map(|k| cocycle.table(k).values().iter().map(|v| char_eval(chi, v)).collect())
            .collect();
        let mut zero_prefix = vec![1i8];
        for k in 1..=sys.depth() {
            let s = cocycle.table(k).value(0).map_or(1, |v| char_eval(chi, v));
            zero_prefix.push(zero_prefix[k - 1] * s);
        }
        Phases {
            sys,
            signs,
            zero_prefix,
        }
    }

    /// `χ(α_k(c))` for `c ∈ C_k`.
    pub fn column_sign(&self, k: usize, c: u64) -> i8 {
        let idx = self.sys.level(k).position(c).expect("column of C_k");
        self.signs[k - 1][idx]
    }

    /// `χ(P_L(ℓ))`, the character of the potential of a tower-`L` level.
    pub fn phase(&self, level: u64, l: usize) -> i8 {
        let mut sign = 1i8;
        let mut f = level;
        let mut k = l;
        while k > 1 {
            let lv = self.sys.level(k);
            let idx = match lv.c.binary_search(&f) {
                Ok(i) => i,
                Err(0) => break,
                Err(i) => i - 1,
            };
            let c = lv.c[idx];
            if f - c >= lv.h {
                break;
            }
            sign *= self.signs[k - 1][idx];
            f -= c;
            k -= 1;
        }
        sign * self.zero_prefix[k.max(1)]
    }
}

/// `f_N` of a tower-`L` level, if the level lies in `F_N + C_{N+1} + ⋯ + C_L`.
pub fn descend(sys: &CfSystem, level: u64, l: usize, n: usize) -> Option<u64> {
    let mut f = level;
    for k in (n + 1..=l).rev() {
        f = sys.level(k).split(f)?.0;
    }
    Some(f)
}

fn sorted_levels(sys: &CfSystem, set: &[u64], n: usize, name: &str) -> Result<Vec<u64>> {
    let h = sys.height(n);
    if let Some(bad) = set.iter().find(|&&f| f >= h) {
        return Err(Error::InvalidArgument(format!("{name}: {bad} is not in F_{n}")));
    }
    let mut v = set.to_vec();
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

/// Input of [`inner_product`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InnerProductQuery {
    pub chi: GroupElement,
    pub power: i64,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub level: usize,
    pub conditioning: usize,
}

/// Output of [`inner_product`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InnerProduct {
    pub value: RatInterval,
    /// Signed count of tower-`L` levels of `[B]` landing in `[A]`.
    #[serde(serialize_with = "big_str")]
    pub signed_count: BigInt,
    /// Levels of `[B]` whose image leaves tower `L`.
    pub escapes: u64,
    pub level_measure: RatInterval,
}

fn big_str<S: serde::Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Default cap on enumerated tower levels.
pub const DEFAULT_ENUMERATION_CAP: u64 = 2_000_000;

/// Generic enumerating engine.
///
/// Every tower-`L` level `ℓ` of `[B]_N` is moved to `ℓ + m`; inside the tower
/// the phase is `χ(P_L(ℓ + m)) χ(P_L(ℓ))`, outside it the contribution is
/// unknown and widens the interval by one level measure.
pub fn inner_product(sys: &CfSystem, cocycle: &Cocycle, q: &InnerProductQuery, cap: u64) -> Result<InnerProduct> {
    let (n, l) = (q.level, q.conditioning);
    if n == 0 || n > l || l > sys.depth() {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= N <= L <= depth, got N = {n}, L = {l}, depth = {}",
            sys.depth()
        )));
    }
    let a = sorted_levels(sys, &q.a, n, "A")?;
    let mut levels = sorted_levels(sys, &q.b, n, "B")?;
    let size = BigInt::from(levels.len()) * sys.column_product(n, l);
    if size > BigInt::from(cap) {
        return Err(Error::CapExceeded {
            what: "enumerated tower levels (use hn_power_element)",
            cap: cap as u128,
        });
    }
    for k in n + 1..=l {
        let cs = &sys.level(k).c;
        levels = cs.iter().flat_map(|&c| levels.iter().map(move |&f| f + c)).collect();
    }
    let phases = Phases::new(sys, cocycle, &q.chi);
    let top = sys.height(l) as i128;
    let mut count = 0i64;
    let mut escapes = 0u64;
    for &lv in &levels {
        let target = lv as i128 + q.power as i128;
        if target < 0 || target >= top {
            escapes += 1;
            continue;
        }
        let target = target as u64;
        if descend(sys, target, l, n).is_some_and(|f| a.binary_search(&f).is_ok()) {
            count += (phases.phase(lv, l) * phases.phase(target, l)) as i64;
        }
    }
    let lambda = sys.level_measure(l)?;
    let known = lambda.scale(&Rational::from_integer(count.into()));
    let slack = RatInterval::symmetric(&lambda.hi * Rational::from_integer(escapes.into()));
    Ok(InnerProduct {
        value: &known + &slack,
        signed_count: count.into(),
        escapes,
        level_measure: lambda,
    })
}

/// Output of [`hn_power_element`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HnElement {
    pub n: usize,
    pub value: RatInterval,
    /// `Σ χ(α(c + h) - α(c))` over `c, c + h ∈ C_{n+1}`.
    pub identity_sum: i64,
    /// `Σ χ(α(c + h + 1) - α(c))` over `c + h ∉ C_{n+1}`, `c + h + 1 ∈ C_{n+1}`.
    pub star_sum: i64,
    /// Columns whose `h_n`-shift lands in neither form.
    pub unknown_columns: u64,
    /// `|A_n ∩ B_n|`.
    #[serde(serialize_with = "big_str")]
    pub overlap: BigInt,
    /// `Σ_{f ∈ B_n, f-1 ∈ A_n} χ(P_n(f-1)) χ(P_n(f))`.
    #[serde(serialize_with = "big_str")]
    pub star_weight: BigInt,
    pub level_measure: RatInterval,
}

struct Refinement {
    overlap: Vec<BigInt>,
    star: Vec<BigInt>,
    b_size: Vec<BigInt>,
}

/// `|A_j ∩ B_j|`, `W_j` and `|B_j|` for `j = N, …, top`.
fn refine(sys: &CfSystem, phases: &Phases<'_>, a: &[u64], b: &[u64], n: usize, top: usize) -> Refinement {
    let common = a.iter().filter(|f| b.binary_search(f).is_ok()).count();
    let mut w = BigInt::zero();
    for &f in b {
        if f >= 1 && a.binary_search(&(f - 1)).is_ok() {
            w += phases.phase(f - 1, n) * phases.phase(f, n);
        }
    }
    let zero_in_b = b.first() == Some(&0);
    let mut out = Refinement {
        overlap: vec![BigInt::from(common)],
        star: vec![w],
        b_size: vec![BigInt::from(b.len())],
    };
    for j in n..top {
        let level = sys.level(j + 1);
        let card = BigInt::from(level.card());
        let h = sys.height(j);
        let mut next = &out.star[j - n] * &card;
        let top_in_a = descend(sys, h - 1, j, n).is_some_and(|f| a.binary_search(&f).is_ok());
        if zero_in_b && top_in_a {
            let edge = phases.phase(h - 1, j) * phases.phase(0, j);
            let mut s = 0i64;
            for &c in &level.c {
                if c >= h && level.contains(c - h) {
                    s += (phases.column_sign(j + 1, c - h) * phases.column_sign(j + 1, c)) as i64;
                }
            }
            next += BigInt::from(s * edge as i64);
        }
        out.star.push(next);
        out.overlap.push(&out.overlap[j - n] * &card);
        out.b_size.push(&out.b_size[j - n] * &card);
    }
    out
}

/// `⟨U_{T,χ}^{h_n} 1_{[A]_N}, 1_{[B]_N}⟩` from the column pairs of `C_{n+1}`.
///
/// A point in column `c` at level `f ∈ B_n` is sent by `T^{h_n}` to column
/// `c + h_n` at the same level, or to column `c + h_n + 1` one level lower.
pub fn hn_power_element(
    sys: &CfSystem,
    cocycle: &Cocycle,
    chi: &GroupElement,
    n: usize,
    a: &[u64],
    b: &[u64],
    level: usize,
) -> Result<HnElement> {
    if level == 0 || level > n || n + 1 > sys.depth() {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= N <= n < depth, got N = {level}, n = {n}, depth = {}",
            sys.depth()
        )));
    }
    let a = sorted_levels(sys, a, level, "A")?;
    let b = sorted_levels(sys, b, level, "B")?;
    let phases = Phases::new(sys, cocycle, chi);
    let refined = refine(sys, &phases, &a, &b, level, n);
    let idx = n - level;
    let next = sys.level(n + 1);
    let h = sys.height(n);
    let (mut identity_sum, mut star_sum, mut unknown) = (0i64, 0i64, 0u64);
    for &c in &next.c {
        let s = phases.column_sign(n + 1, c);
        if next.contains(c + h) {
            identity_sum += (s * phases.column_sign(n + 1, c + h)) as i64;
        } else if next.contains(c + h + 1) {
            star_sum += (s * phases.column_sign(n + 1, c + h + 1)) as i64;
        } else {
            unknown += 1;
        }
    }
    let known = BigInt::from(identity_sum) * &refined.overlap[idx] + BigInt::from(star_sum) * &refined.star[idx];
    let lambda = sys.level_measure(n + 1)?;
    let width = &lambda.hi * Rational::from_integer(BigInt::from(unknown) * &refined.b_size[idx]);
    let value = &lambda.scale(&Rational::from_integer(known)) + &RatInterval::symmetric(width);
    Ok(HnElement {
        n,
        value,
        identity_sum,
        star_sum,
        unknown_columns: unknown,
        overlap: refined.overlap[idx].clone(),
        star_weight: refined.star[idx].clone(),
        level_measure: lambda,
    })
}

/// `μ([A]_N ∩ [B]_N)` and `⟨U*_{T,χ} 1_{[A]_N}, 1_{[B]_N}⟩` resolved at tower `L`.
pub fn limit_terms(
    sys: &CfSystem,
    cocycle: &Cocycle,
    chi: &GroupElement,
    a: &[u64],
    b: &[u64],
    level: usize,
    l: usize,
) -> Result<(RatInterval, RatInterval)> {
    if level == 0 || level > l || l > sys.depth() {
        return Err(Error::InvalidArgument("need 1 <= N <= L <= depth".into()));
    }
    let a = sorted_levels(sys, a, level, "A")?;
    let b = sorted_levels(sys, b, level, "B")?;
    let phases = Phases::new(sys, cocycle, chi);
    let refined = refine(sys, &phases, &a, &b, level, l);
    let lambda = sys.level_measure(l)?;
    let idx = l - level;
    let overlap = lambda.scale(&Rational::from_integer(refined.overlap[idx].clone()));
    let mut adjoint = lambda.scale(&Rational::from_integer(refined.star[idx].clone()));
    if b.first() == Some(&0) {
        adjoint = &adjoint + &RatInterval::symmetric(lambda.hi.clone());
    }
    Ok((overlap, adjoint))
}

/// One row of a [`WeakLimitTrace`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRow {
    pub n: usize,
    pub h_n: u64,
    pub achieved: RatInterval,
    pub predicted: RatInterval,
    /// Worst-case `|achieved - predicted|`.
    #[serde(with = "rat_serde")]
    pub err: Rational,
    /// Closed-form budget from the class tallies and interval widths.
    #[serde(with = "rat_serde")]
    pub budget: Rational,
    /// `err ≤ 6/n` (only asserted for `n ≥ 3`).
    pub within_law: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeakLimitTrace {
    pub chi: GroupElement,
    pub label: Label,
    pub level: usize,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub rows: Vec<TraceRow>,
    pub law_holds: bool,
    pub endpoint_improves: bool,
}

/// Trace law constant: `err ≤ LAW_CONSTANT / n` for `n ≥ LAW_FROM`.
pub const LAW_CONSTANT: u64 = 6;
pub const LAW_FROM: usize = 3;

impl WeakLimitTrace {
    /// CSV lines (no header): `n,h_n,label,chi,achieved_lo,achieved_hi,predicted,err_bound`.
    pub fn csv_rows(&self) -> Vec<String> {
        let chi = format!(
            "{{{}}}",
            self.chi
                .support()
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        );
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{},{},{}",
                    r.n,
                    r.h_n,
                    self.label,
                    chi,
                    r.achieved.lo,
                    r.achieved.hi,
                    r.predicted.center(),
                    r.err
                )
            })
            .collect()
    }
}

pub const CSV_HEADER: &str = "n,h_n,label,chi,achieved_lo,achieved_hi,predicted,err_bound";

#[allow(clippy::too_many_arguments)]
fn trace_row(
    sys: &CfSystem,
    cocycle: &Cocycle,
    chi: &GroupElement,
    label: &Label,
    a: &[u64],
    b: &[u64],
    level: usize,
    n: usize,
) -> Result<TraceRow> {
    let achieved = hn_power_element(sys, cocycle, chi, n, a, b, level)?.value;
    let (overlap, adjoint) = limit_terms(sys, cocycle, chi, a, b, level, n + 1)?;
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let predicted = match label {
        Label::Single(x) => overlap.scale(&l_value(chi, x)),
        Label::Pair(x, y) => (&overlap.scale(&l_value(chi, x)) + &adjoint.scale(&l_value(chi, y))).scale(&half),
    };
    let err = achieved.max_distance(&predicted);
    let table = cocycle.table(n + 1);
    let deviations: Rational = table.class_stats().iter().map(|s| s.deviation.clone()).sum();
    let one_level = sys.level_measure(n)?.hi;
    let two = Rational::from_integer(BigInt::from(2));
    let budget = &two * deviations
        + &two * table.unclassified_fraction()
        + &two * one_level
        + achieved.width()
        + predicted.width();
    if err > budget {
        return Err(Error::Construction(format!(
            "trace error {err} at n = {n} exceeds its closed-form budget {budget}"
        )));
    }
    let law = Rational::new(BigInt::from(LAW_CONSTANT), BigInt::from(n));
    Ok(TraceRow {
        n,
        h_n: sys.height(n),
        within_law: err <= law,
        achieved,
        predicted,
        err,
        budget,
    })
}

/// Achieved versus predicted `h_n`-power matrix elements along the scheduled
/// indices `ns` of `label`.
#[allow(clippy::too_many_arguments)]
pub fn weak_limit_trace(
    sys: &CfSystem,
    cocycle: &Cocycle,
    chi: &GroupElement,
    label: &Label,
    a: &[u64],
    b: &[u64],
    level: usize,
    ns: &[usize],
) -> Result<WeakLimitTrace> {
    let schedule = sys
        .schedule()
        .ok_or_else(|| Error::Precondition("system has no character schedule".into()))?;
    for &n in ns {
        if schedule.label(n) != Some(label) {
            return Err(Error::Precondition(format!("n = {n} does not carry label {label}")));
        }
    }
    let rows = ns
        .iter()
        .map(|&n| trace_row(sys, cocycle, chi, label, a, b, level, n))
        .collect::<Result<Vec<_>>>()?;
    let law_holds = rows.iter().filter(|r| r.n >= LAW_FROM).all(|r| r.within_law);
    let endpoint_improves = match (rows.first(), rows.last()) {
        (Some(first), Some(last)) if rows.len() > 1 => last.err < first.err,
        _ => true,
    };
    Ok(WeakLimitTrace {
        chi: chi.clone(),
        label: label.clone(),
        level,
        a: a.to_vec(),
        b: b.to_vec(),
        rows,
        law_holds,
        endpoint_improves,
    })
}

/// Scheduled indices of `label` usable for traces at cylinder level `level`.
pub fn traceable_indices(sys: &CfSystem, label: &Label, level: usize) -> Vec<usize> {
    sys.schedule().map_or_else(Vec::new, |s| {
        s.indices_of(label)
            .into_iter()
            .filter(|&n| n >= level && n < sys.depth())
            .collect()
    })
}

/// Cylinders shared by every trace in a premise suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceWindow {
    pub level: usize,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub point: KValue,
    pub scheduled: bool,
    #[serde(with = "rat_serde")]
    pub l_chi: Rational,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_rat")]
    pub l_xi: Option<Rational>,
}

mod opt_rat {
    use serde::Serializer;

    use crate::Rational;

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => s.serialize_str(&r.to_string()),
            None => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimA {
    pub trace: WeakLimitTrace,
    pub premise_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimB {
    pub chi: GroupElement,
    pub witness: Witness,
    pub traces: Vec<WeakLimitTrace>,
    pub premise_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimC {
    pub chi: GroupElement,
    pub xi: GroupElement,
    pub summability_pass: bool,
    pub premise_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimD {
    pub chi: GroupElement,
    pub xi: GroupElement,
    pub witness: Witness,
    pub traces: Vec<WeakLimitTrace>,
    pub premise_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PremiseReport {
    pub a: Vec<ClaimA>,
    pub b: Vec<ClaimB>,
    pub c: Vec<ClaimC>,
    pub d: Vec<ClaimD>,
    pub summability: SummabilityReport,
    pub conclusions: &'static str,
    pub pass: bool,
}

const CONCLUSIONS: &str = "Spectral conclusions (homogeneous multiplicity 2, simplicity, unitary \
equivalence, mutual singularity) are cited implications of the verified premises; this report \
does not prove them.";

fn trace_ok(t: &WeakLimitTrace) -> bool {
    t.law_holds && t.endpoint_improves && !t.rows.is_empty()
}

fn trace_for(
    sys: &CfSystem,
    cocycle: &Cocycle,
    chi: &GroupElement,
    label: &Label,
    window: &TraceWindow,
) -> Result<WeakLimitTrace> {
    let ns = traceable_indices(sys, label, window.level);
    weak_limit_trace(sys, cocycle, chi, label, &window.a, &window.b, window.level, &ns)
}

/// Finite evidence for claims (a)–(d) over `characters`; every unordered pair
/// of distinct characters is examined for (c) or (d).
pub fn premise_suite(
    sys: &CfSystem,
    cocycle: &Cocycle,
    characters: &[GroupElement],
    window: &TraceWindow,
) -> Result<PremiseReport> {
    let schedule = sys
        .schedule()
        .ok_or_else(|| Error::Precondition("system has no character schedule".into()))?;
    let zero_pair = Label::zero_pair();
    let zero_chi = GroupElement::zero();
    let summability = summability_report(sys, cocycle);

    let mut report = PremiseReport {
        a: Vec::new(),
        b: Vec::new(),
        c: Vec::new(),
        d: Vec::new(),
        summability: summability.clone(),
        conclusions: CONCLUSIONS,
        pass: true,
    };

    let mut chars: Vec<GroupElement> = characters.to_vec();
    chars.sort();
    chars.dedup();

    if chars.iter().any(GroupElement::is_zero) {
        let trace = trace_for(sys, cocycle, &zero_chi, &zero_pair, window)?;
        report.a.push(ClaimA {
            premise_holds: trace_ok(&trace),
            trace,
        });
    }

    for chi in chars.iter().filter(|c| !c.is_zero()) {
        let scheduled = schedule
            .pairs
            .iter()
            .find(|(x, y)| x.is_zero() && l_value(chi, y) != Rational::one())
            .map(|(_, y)| y.clone());
        let (point, is_scheduled) = match scheduled {
            Some(p) => (p, true),
            None => (find_separating_point(chi, &zero_chi, MAX_SEARCH_PERIOD)?, false),
        };
        let mut traces = vec![trace_for(sys, cocycle, chi, &zero_pair, window)?];
        if is_scheduled {
            let label = Label::Pair(KValue::zero(), point.clone());
            traces.push(trace_for(sys, cocycle, chi, &label, window)?);
        }
        report.b.push(ClaimB {
            chi: chi.clone(),
            premise_holds: is_scheduled && traces.iter().all(trace_ok),
            witness: Witness {
                l_chi: l_value(chi, &point),
                l_xi: None,
                point,
                scheduled: is_scheduled,
            },
            traces,
        });
    }

    for (i, chi) in chars.iter().enumerate() {
        for xi in &chars[i + 1..] {
            if chi.is_translate_of(xi) {
                report.c.push(ClaimC {
                    chi: chi.clone(),
                    xi: xi.clone(),
                    summability_pass: summability.pass,
                    premise_holds: summability.pass,
                });
                continue;
            }
            let scheduled = schedule
                .singles
                .iter()
                .find(|a| l_value(chi, a) != l_value(xi, a))
                .cloned();
            let (point, is_scheduled) = match scheduled {
                Some(p) => (p, true),
                None => (find_separating_point(chi, xi, MAX_SEARCH_PERIOD)?, false),
            };
            let mut traces = Vec::new();
            if is_scheduled {
                let label = Label::Single(point.clone());
                traces.push(trace_for(sys, cocycle, chi, &label, window)?);
                traces.push(trace_for(sys, cocycle, xi, &label, window)?);
            }
            report.d.push(ClaimD {
                chi: chi.clone(),
                xi: xi.clone(),
                premise_holds: is_scheduled && traces.iter().all(trace_ok),
                witness: Witness {
                    l_chi: l_value(chi, &point),
                    l_xi: Some(l_value(xi, &point)),
                    point,
                    scheduled: is_scheduled,
                },
                traces,
            });
        }
    }

    report.pass = report.a.iter().all(|c| c.premise_holds)
        && report.b.iter().all(|c| c.premise_holds)
        && report.c.iter().all(|c| c.premise_holds)
        && report.d.iter().all(|c| c.premise_holds);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfsystem::{measure_cylinder, plan_schedule, SystemCaps};

    fn k(word: &str) -> KValue {
        KValue::parse(word).unwrap()
    }

    fn demo(n_max: usize) -> (CfSystem, Cocycle) {
        let schedule = plan_schedule(
            vec![k("10")],
            vec![(KValue::zero(), KValue::zero()), (KValue::zero(), k("10"))],
            n_max,
        )
        .unwrap();
        let sys = CfSystem::build(schedule, SystemCaps::default()).unwrap();
        let cocycle = Cocycle::assign(&sys).unwrap();
        (sys, cocycle)
    }

    fn chi1() -> GroupElement {
        GroupElement::from_sites([0])
    }

    fn query(chi: GroupElement, power: i64, a: &[u64], b: &[u64], level: usize, l: usize) -> InnerProductQuery {
        InnerProductQuery {
            chi,
            power,
            a: a.to_vec(),
            b: b.to_vec(),
            level,
            conditioning: l,
        }
    }

    #[test]
    fn power_zero_diagonal_is_measure() {
        let (sys, cocycle) = demo(3);
        let a = [0u64, 2, 3];
        let q = query(chi1(), 0, &a, &a, 2, 4);
        let ip = inner_product(&sys, &cocycle, &q, DEFAULT_ENUMERATION_CAP).unwrap();
        let m = measure_cylinder(&sys, &a, 2, 4).unwrap();
        assert_eq!(ip.value, m.as_interval());
    }

    #[test]
    fn single_step_moves_one_level() {
        // U 1_A = 1_{T^{-1}A}, so ⟨U 1_{[f+1]}, 1_{[f]}⟩ = μ([f])
        let (sys, cocycle) = demo(3);
        let q = query(GroupElement::zero(), 1, &[3], &[2], 2, 4);
        let ip = inner_product(&sys, &cocycle, &q, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(ip.value, measure_cylinder(&sys, &[2], 2, 4).unwrap().as_interval());
        let q = query(GroupElement::zero(), 1, &[2], &[3], 2, 4);
        let ip = inner_product(&sys, &cocycle, &q, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(ip.value, RatInterval::zero());
    }

    #[test]
    fn trivial_character_is_measure_of_shifted_set() {
        let (sys, cocycle) = demo(3);
        let (a, b) = ([0u64, 1, 4], [1u64, 2, 3]);
        for m in 0..4i64 {
            let q = query(GroupElement::zero(), m, &a, &b, 2, 3);
            let ip = inner_product(&sys, &cocycle, &q, DEFAULT_ENUMERATION_CAP).unwrap();
            assert!(ip.signed_count >= BigInt::zero());
        }
    }

    #[test]
    fn cap_is_enforced() {
        let (sys, cocycle) = demo(4);
        let q = query(GroupElement::zero(), 1, &[0], &[0, 1], 1, 5);
        assert!(matches!(
            inner_product(&sys, &cocycle, &q, 10),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn engines_intersect() {
        let (sys, cocycle) = demo(4);
        let cases: [(&[u64], &[u64]); 3] = [
            (&[0, 1, 2, 3, 4], &[0, 1, 2, 3, 4]),
            (&[1, 3], &[0, 2, 4]),
            (&[2], &[2, 3]),
        ];
        for chi in [GroupElement::zero(), chi1()] {
            for n in 2..=3 {
                for (a, b) in cases {
                    let hn = hn_power_element(&sys, &cocycle, &chi, n, a, b, 2).unwrap();
                    for l in n + 1..=sys.depth().min(n + 2) {
                        let q = query(chi.clone(), sys.height(n) as i64, a, b, 2, l);
                        let ip = inner_product(&sys, &cocycle, &q, DEFAULT_ENUMERATION_CAP).unwrap();
                        assert!(
                            hn.value.intersects(&ip.value),
                            "n = {n}, l = {l}: {} vs {}",
                            hn.value,
                            ip.value
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn adjoint_path_agrees() {
        let (sys, cocycle) = demo(3);
        let (a, b) = ([1u64, 2], [0u64, 3, 4]);
        for chi in [GroupElement::zero(), chi1()] {
            let back = inner_product(
                &sys,
                &cocycle,
                &query(chi.clone(), -1, &a, &b, 2, 4),
                DEFAULT_ENUMERATION_CAP,
            )
            .unwrap();
            let fwd = inner_product(
                &sys,
                &cocycle,
                &query(chi.clone(), 1, &b, &a, 2, 4),
                DEFAULT_ENUMERATION_CAP,
            )
            .unwrap();
            assert_eq!(back.signed_count, fwd.signed_count);
            assert!(back.value.intersects(&fwd.value));
            // neither set touches the tower ends here
            if back.escapes == 0 && fwd.escapes == 0 {
                assert_eq!(back.value, fwd.value);
            }
        }
    }

    #[test]
    fn adjoint_term_matches_generic_engine() {
        let (sys, cocycle) = demo(3);
        let (a, b) = ([1u64, 2, 4], [0u64, 2, 3]);
        let (_, adj) = limit_terms(&sys, &cocycle, &chi1(), &a, &b, 2, 4).unwrap();
        let ip = inner_product(
            &sys,
            &cocycle,
            &query(chi1(), -1, &a, &b, 2, 4),
            DEFAULT_ENUMERATION_CAP,
        )
        .unwrap();
        assert_eq!(adj, ip.value);
    }

    #[test]
    fn zero_pair_trace_follows_law() {
        let (sys, cocycle) = demo(6);
        let label = Label::zero_pair();
        let ns = traceable_indices(&sys, &label, 1);
        assert_eq!(ns, vec![1, 4]);
        let t = weak_limit_trace(&sys, &cocycle, &GroupElement::zero(), &label, &[0], &[0, 1], 1, &ns).unwrap();
        assert!(t.law_holds && t.endpoint_improves, "{t:?}");
    }

    #[test]
    fn single_label_trivial_character_predicts_overlap() {
        let (sys, cocycle) = demo(3);
        let label = Label::Single(k("10"));
        let t = weak_limit_trace(&sys, &cocycle, &GroupElement::zero(), &label, &[0, 1], &[1], 1, &[3]).unwrap();
        let (overlap, _) = limit_terms(&sys, &cocycle, &GroupElement::zero(), &[0, 1], &[1], 1, 4).unwrap();
        assert_eq!(t.rows[0].predicted, overlap);
    }

    #[test]
    fn schedule_mismatch_rejected() {
        let (sys, cocycle) = demo(3);
        let r = weak_limit_trace(
            &sys,
            &cocycle,
            &GroupElement::zero(),
            &Label::zero_pair(),
            &[0],
            &[0],
            1,
            &[2],
        );
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn csv_rows_have_eight_fields() {
        let (sys, cocycle) = demo(4);
        let label = Label::Pair(KValue::zero(), k("10"));
        let t = weak_limit_trace(&sys, &cocycle, &chi1(), &label, &[0], &[0, 1], 1, &[2]).unwrap();
        let rows = t.csv_rows();
        assert_eq!(rows[0].split(',').count(), 8);
        assert!(rows[0].starts_with("2,5,0:10,{0},"));
    }

    #[test]
    fn premise_suite_covers_all_claims() {
        let (sys, cocycle) = demo(6);
        let chars = [
            GroupElement::zero(),
            chi1(),
            GroupElement::from_sites([3]),
            GroupElement::from_sites([0, 1]),
        ];
        let window = TraceWindow {
            level: 1,
            a: vec![0],
            b: vec![0, 1],
        };
        let report = premise_suite(&sys, &cocycle, &chars, &window).unwrap();
        assert_eq!(report.a.len(), 1);
        assert_eq!(report.b.len(), 3);
        // {0} and {3} are translates
        assert_eq!(report.c.len(), 1);
        assert_eq!(report.d.len(), 5);
        assert!(report.conclusions.contains("cited"));
    }
}
