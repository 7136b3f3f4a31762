//! Brute-force point-dynamics oracle and hand-built toy systems.
//!
//! The oracle walks every tower level as an explicit [`Point`], applies `T`
//! one step at a time and reads phases from [`cocycle_between`]. It shares no
//! code with the level arithmetic in [`crate::koopman`].

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitgroup::{char_eval, GroupElement, KValue};
use crate::cfsystem::{apply_t, CfSystem, Point};
use crate::cocycle::{cocycle_between, Cocycle};
use crate::interval::RatInterval;
use crate::koopman::{hn_power_element, inner_product, InnerProductQuery, DEFAULT_ENUMERATION_CAP};
use crate::{Error, Rational, Result};

/// Column sets `C_k` and heights `h_k` of a hand-built system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToySpec {
    pub name: String,
    pub columns: Vec<Vec<u64>>,
    pub heights: Vec<u64>,
}

/// Toy system with a seeded random cocycle.
#[derive(Debug, Clone)]
pub struct ToySystem {
    pub name: String,
    pub sys: CfSystem,
    pub cocycle: Cocycle,
}

/// Largest cocycle value period used for toy tables.
pub const TOY_MAX_PERIOD: usize = 3;

impl ToySpec {
    pub fn build(&self, seed: u64) -> Result<ToySystem> {
        if self.columns.len() != self.heights.len() || self.columns.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "toy {}: need one height per column set",
                self.name
            )));
        }
        let sys = CfSystem::from_columns(self.columns.iter().cloned().zip(self.heights.iter().copied()).collect())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = self
            .columns
            .iter()
            .map(|cs| cs.iter().map(|_| random_kvalue(&mut rng)).collect())
            .collect();
        let cocycle = Cocycle::from_values(&sys, values)?;
        Ok(ToySystem {
            name: self.name.clone(),
            sys,
            cocycle,
        })
    }
}

fn random_kvalue(rng: &mut ChaCha8Rng) -> KValue {
    let period = rng.gen_range(1..=TOY_MAX_PERIOD);
    let word = (0..period).map(|_| rng.gen_bool(0.5)).collect();
    KValue::from_word(word).expect("nonempty word")
}

/// Three systems with `h_D ≤ 500` and at least 50 top spacers.
pub fn default_toys() -> Vec<ToySpec> {
    vec![
        ToySpec {
            name: "spaced".into(),
            columns: vec![vec![0, 1, 3], vec![0, 6, 11], vec![0, 18, 37, 55, 74, 93]],
            heights: vec![5, 18, 161],
        },
        ToySpec {
            name: "seamed".into(),
            columns: vec![vec![0, 2], vec![0, 3, 7, 11], vec![0, 15, 31, 47, 62]],
            heights: vec![3, 15, 137],
        },
        ToySpec {
            name: "deep".into(),
            columns: vec![
                vec![0, 1],
                vec![0, 2, 4, 6],
                vec![0, 8, 16, 24, 33, 41],
                vec![0, 109, 219],
            ],
            heights: vec![2, 8, 109, 388],
        },
    ]
}

/// Oracle value at the full built depth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleValue {
    pub signed_count: i64,
    /// Points whose orbit segment ran past the built depth.
    pub undetermined: u64,
    pub value: RatInterval,
}

/// `⟨U^m 1_{[A]_N}, 1_{[B]_N}⟩` by stepping every level of the deepest tower.
pub fn brute_force(sys: &CfSystem, cocycle: &Cocycle, q: &InnerProductQuery) -> Result<OracleValue> {
    let d = sys.depth();
    let n = q.level;
    if n == 0 || n > d {
        return Err(Error::InvalidArgument("need 1 <= N <= depth".into()));
    }
    let in_set = |p: &Point, set: &[u64]| p.at_depth(sys, n).is_ok_and(|r| set.contains(&r.f));
    let step = q.power.signum();
    let (mut count, mut undetermined) = (0i64, 0u64);
    for f in 0..sys.height(d) {
        let x = sys.point(d, f, Vec::new())?;
        if !in_set(&x, &q.b) {
            continue;
        }
        let mut y = x.clone();
        let mut escaped = false;
        for _ in 0..q.power.unsigned_abs() {
            match apply_t(sys, &y, step) {
                Ok(next) => y = next,
                Err(Error::Undefined(_)) => {
                    escaped = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if escaped {
            undetermined += 1;
            continue;
        }
        if in_set(&y, &q.a) {
            count += char_eval(&q.chi, &cocycle_between(sys, cocycle, &y, &x)?) as i64;
        }
    }
    let lambda = sys.level_measure(d)?;
    let known = lambda.scale(&Rational::from_integer(count.into()));
    let slack = RatInterval::symmetric(&lambda.hi * Rational::from_integer(BigInt::from(undetermined)));
    Ok(OracleValue {
        signed_count: count,
        undetermined,
        value: &known + &slack,
    })
}

/// Randomised query generator settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleConfig {
    pub queries_per_system: usize,
    pub max_power: i64,
    pub seed: u64,
    /// Nonzero character used for half of the queries.
    pub chi: Vec<i128>,
    /// Cap passed to [`inner_product`].
    pub enumeration_cap: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            queries_per_system: 80,
            max_power: 50,
            seed: 7,
            chi: vec![0],
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub query: InnerProductQuery,
    pub engine: String,
    pub oracle: RatInterval,
    pub reported: RatInterval,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SystemComparison {
    pub name: String,
    pub heights: Vec<u64>,
    pub generic_queries: usize,
    pub hn_queries: usize,
    pub undetermined: usize,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub systems: Vec<SystemComparison>,
    pub total_queries: usize,
    pub total_violations: usize,
    pub verdict: String,
}

fn random_subset(rng: &mut ChaCha8Rng, h: u64) -> Vec<u64> {
    let mut v: Vec<u64> = (0..h).filter(|_| rng.gen_bool(0.4)).collect();
    if v.is_empty() {
        v.push(rng.gen_range(0..h));
    }
    v
}

/// Compares both engines against [`brute_force`] on every toy.
///
/// The generic engine is queried at every conditioning level `L ≥ N`; the
/// `h_n`-power engine at every `n` with `N ≤ n < D`. A violation is an
/// engine interval that fails to contain the oracle interval.
pub fn compare(toys: &[ToySystem], cfg: &OracleConfig) -> Result<OracleReport> {
    let nonzero = GroupElement::from_sites(cfg.chi.iter().copied());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut systems = Vec::new();
    for toy in toys {
        let (sys, cocycle) = (&toy.sys, &toy.cocycle);
        let d = sys.depth();
        let mut cmp = SystemComparison {
            name: toy.name.clone(),
            heights: (0..=d).map(|k| sys.height(k)).collect(),
            generic_queries: 0,
            hn_queries: 0,
            undetermined: 0,
            violations: Vec::new(),
        };
        for i in 0..cfg.queries_per_system {
            let chi = if i % 2 == 0 {
                GroupElement::zero()
            } else {
                nonzero.clone()
            };
            let n = rng.gen_range(1..=d);
            let h = sys.height(n);
            let q = InnerProductQuery {
                chi: chi.clone(),
                power: rng.gen_range(0..=cfg.max_power),
                a: random_subset(&mut rng, h),
                b: random_subset(&mut rng, h),
                level: n,
                conditioning: n,
            };
            let truth = brute_force(sys, cocycle, &q)?;
            if truth.undetermined > 0 {
                cmp.undetermined += 1;
            }
            for l in n..=d {
                let q = InnerProductQuery {
                    conditioning: l,
                    ..q.clone()
                };
                let got = inner_product(sys, cocycle, &q, cfg.enumeration_cap)?;
                cmp.generic_queries += 1;
                if !got.value.contains_interval(&truth.value) {
                    cmp.violations.push(Violation {
                        query: q,
                        engine: "inner_product".into(),
                        oracle: truth.value.clone(),
                        reported: got.value,
                    });
                }
            }
            let hn_levels: Vec<usize> = (n..d).collect();
            if let Some(&m) = hn_levels.choose(&mut rng) {
                let q = InnerProductQuery {
                    power: sys.height(m) as i64,
                    ..q.clone()
                };
                let truth = brute_force(sys, cocycle, &q)?;
                let got = hn_power_element(sys, cocycle, &chi, m, &q.a, &q.b, n)?;
                cmp.hn_queries += 1;
                if !got.value.contains_interval(&truth.value) {
                    cmp.violations.push(Violation {
                        query: q,
                        engine: format!("hn_power_element(n = {m})"),
                        oracle: truth.value,
                        reported: got.value,
                    });
                }
            }
        }
        systems.push(cmp);
    }
    let total_queries = systems.iter().map(|s| s.generic_queries + s.hn_queries).sum();
    let total_violations = systems.iter().map(|s| s.violations.len()).sum();
    Ok(OracleReport {
        systems,
        total_queries,
        total_violations,
        verdict: if total_violations == 0 {
            "engines agree".into()
        } else {
            "engines disagree".into()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_toy() -> ToySystem {
        ToySpec {
            name: "small".into(),
            columns: vec![vec![0, 2], vec![0, 3, 7]],
            heights: vec![3, 18],
        }
        .build(11)
        .unwrap()
    }

    #[test]
    fn default_toys_are_valid() {
        for spec in default_toys() {
            let toy = spec.build(1).unwrap();
            let d = toy.sys.depth();
            assert!(toy.sys.height(d) <= 500);
            assert!(toy.sys.levels()[d - 1].spacer_total >= 50);
        }
    }

    #[test]
    fn small_toy_matches_generic_engine_exactly() {
        let toy = small_toy();
        let chi = GroupElement::from_sites([0]);
        for power in 0..6 {
            let q = InnerProductQuery {
                chi: chi.clone(),
                power,
                a: vec![0, 2],
                b: vec![0, 1, 2],
                level: 1,
                conditioning: 2,
            };
            let truth = brute_force(&toy.sys, &toy.cocycle, &q).unwrap();
            let got = inner_product(&toy.sys, &toy.cocycle, &q, 1000).unwrap();
            assert_eq!(truth.undetermined, 0);
            assert_eq!(BigInt::from(truth.signed_count), got.signed_count);
            assert_eq!(truth.value, got.value);
        }
    }

    #[test]
    fn oracle_escapes_are_undetermined() {
        let toy = small_toy();
        let q = InnerProductQuery {
            chi: GroupElement::zero(),
            power: 20,
            a: vec![0],
            b: vec![0],
            level: 1,
            conditioning: 2,
        };
        let truth = brute_force(&toy.sys, &toy.cocycle, &q).unwrap();
        assert!(truth.undetermined > 0);
    }

    #[test]
    fn compare_reports_agreement() {
        let toys: Vec<ToySystem> = default_toys().iter().map(|s| s.build(3).unwrap()).collect();
        let cfg = OracleConfig {
            queries_per_system: 12,
            ..OracleConfig::default()
        };
        let report = compare(&toys, &cfg).unwrap();
        assert_eq!(report.verdict, "engines agree", "{:?}", report.systems);
    }

    #[test]
    fn planted_error_is_detected() {
        // a toy whose cocycle is changed after the oracle value is recorded
        let mut toy = small_toy();
        let q = InnerProductQuery {
            chi: GroupElement::from_sites([0]),
            power: 3,
            a: vec![0, 1, 2],
            b: vec![0, 1, 2],
            level: 1,
            conditioning: 2,
        };
        let before = brute_force(&toy.sys, &toy.cocycle, &q).unwrap();
        let table = toy.cocycle.table_mut(2);
        let flipped = table.values()[1].add(&KValue::parse("1").unwrap());
        table.set_value(1, flipped);
        let after = inner_product(&toy.sys, &toy.cocycle, &q, 1000).unwrap();
        assert_ne!(before.value, after.value);
    }
}
