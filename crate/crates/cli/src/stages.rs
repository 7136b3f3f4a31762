use std::collections::BTreeSet;

use multiplicity::bitgroup::{find_separating_point, l_value, GroupElement, KValue, MAX_SEARCH_PERIOD};
use multiplicity::blocksys::{build_blocks, BlockSystem, LemmaReport};
use multiplicity::cfsystem::{plan_schedule, validate, CfSystem, Label, ValidationReport};
use multiplicity::cocycle::{summability_report, ClassStat, Cocycle, SummabilityReport};
use multiplicity::koopman::{premise_suite, traceable_indices, weak_limit_trace, WeakLimitTrace, CSV_HEADER};
use multiplicity::multiset_calc::{orbit_decomposition, predicted_main, product_formula, MultiplicitySet};
use multiplicity::oracle::{compare, OracleReport, ToySystem};
use multiplicity::{Rational, Result as CoreResult};
use rayon::prelude::*;
use serde::Serialize;

use crate::artifact::OutDir;
use crate::config::RunConfig;
use crate::{CliError, Outcome};

fn core<T>(r: CoreResult<T>) -> Result<T, CliError> {
    r.map_err(CliError::from)
}

#[derive(Serialize)]
struct BlocksFile<'a> {
    blocks: &'a BlockSystem,
}

pub fn construct(cfg: &RunConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let target = cfg
        .target
        .as_ref()
        .ok_or_else(|| CliError::from(multiplicity::Error::TrivialTarget))?;
    let blocks = core(build_blocks(target, cfg.steps, cfg.block_caps))?;
    let path = out.write_json("blocks.json", &BlocksFile { blocks: &blocks })?;
    Ok(Outcome::pass(vec![path]))
}

#[derive(Serialize)]
struct FormulaCheck {
    m: usize,
    chi: GroupElement,
    ones: usize,
    #[serde(with = "multiplicity::interval::rat_serde")]
    expected: Rational,
    #[serde(with = "multiplicity::interval::rat_serde")]
    got: Rational,
    pass: bool,
}

#[derive(Serialize)]
struct SeparationCheck {
    chi: GroupElement,
    xi: GroupElement,
    witness: KValue,
    #[serde(with = "multiplicity::interval::rat_serde")]
    l_chi: Rational,
    #[serde(with = "multiplicity::interval::rat_serde")]
    l_xi: Rational,
    pass: bool,
}

#[derive(Serialize)]
struct LemmaFile {
    lemma: LemmaReport,
    averages: Vec<FormulaCheck>,
    separation: Vec<SeparationCheck>,
    pass: bool,
}

/// `l_χ(δ_m) = (m - 2j)/m` for `χ` with `j` ones in distinct residues.
fn average_checks() -> Vec<FormulaCheck> {
    let mut out = Vec::new();
    for m in [4usize, 8] {
        let mut word = vec![false; m];
        word[0] = true;
        let delta = KValue::from_word(word).expect("nonempty");
        for j in 0..=m / 2 {
            let chi = GroupElement::from_sites((0..j as i128).map(|r| r + (r % 3) * m as i128));
            let expected = Rational::new(((m - 2 * j) as i64).into(), (m as i64).into());
            let got = l_value(&chi, &delta);
            out.push(FormulaCheck {
                m,
                pass: got == expected,
                chi,
                ones: j,
                expected,
                got,
            });
        }
    }
    out
}

/// Separating periodic points for pairs of non-translate H-elements.
fn separation_checks(blocks: &BlockSystem, p_max: usize, cap: usize) -> CoreResult<Vec<SeparationCheck>> {
    let (elements, _) = blocks.h_elements(p_max, cap);
    let mut reps: Vec<GroupElement> = Vec::new();
    for h in elements {
        if !reps.iter().any(|r| r.is_translate_of(&h.support)) {
            reps.push(h.support);
        }
        if reps.len() == 4 {
            break;
        }
    }
    let mut out = Vec::new();
    for (i, chi) in reps.iter().enumerate() {
        for xi in &reps[i + 1..] {
            let witness = find_separating_point(chi, xi, MAX_SEARCH_PERIOD)?;
            let (l_chi, l_xi) = (l_value(chi, &witness), l_value(xi, &witness));
            out.push(SeparationCheck {
                chi: chi.clone(),
                xi: xi.clone(),
                pass: l_chi != l_xi,
                witness,
                l_chi,
                l_xi,
            });
        }
    }
    Ok(out)
}

pub fn verify_lemma(cfg: &RunConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let blocks: BlockSystem = out.read_json("blocks.json", Some("blocks"))?;
    if cfg.p_max > blocks.steps() {
        return Err(CliError::new(
            "E_PRECONDITION",
            2,
            format!("p_max = {} exceeds the {} built steps", cfg.p_max, blocks.steps()),
        ));
    }
    let lemma = core(blocks.verify(cfg.p_max, cfg.block_caps))?;
    let averages = average_checks();
    let separation = core(separation_checks(&blocks, cfg.p_max, cfg.block_caps.max_combinations))?;
    let pass = lemma.pass && averages.iter().all(|c| c.pass) && separation.iter().all(|c| c.pass);
    let failing: Vec<String> = lemma
        .entries
        .iter()
        .filter(|e| !e.pass)
        .map(|e| format!("{} (orbit count {} != {})", e.support, e.orbit_count, e.expected))
        .collect();
    let file = LemmaFile {
        lemma,
        averages,
        separation,
        pass,
    };
    let path = out.write_json("lemma_report.json", &file)?;
    Ok(Outcome::verdict(pass, vec![path], failing))
}

#[derive(Serialize)]
struct SystemFile<'a> {
    system: &'a CfSystem,
}

#[derive(Serialize)]
struct CocycleFile<'a> {
    tables: &'a Cocycle,
}

#[derive(Serialize)]
struct LevelDeviation {
    level: usize,
    n: usize,
    #[serde(with = "multiplicity::interval::rat_serde")]
    bound: Rational,
    classes: Vec<ClassStat>,
    within_bound: bool,
}

#[derive(Serialize)]
struct SystemReport {
    validation: ValidationReport,
    summability: SummabilityReport,
    deviations: Vec<LevelDeviation>,
    violations: Vec<String>,
    pass: bool,
}

pub fn build_system(cfg: &RunConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let (singles, pairs, n_max) = cfg.require_schedule()?.clone();
    let schedule = core(plan_schedule(singles, pairs, n_max))?;
    let sys = core(CfSystem::build(schedule, cfg.system_caps))?;
    let cocycle = core(Cocycle::assign(&sys))?;
    let validation = validate(&sys);
    let summability = summability_report(&sys, &cocycle);
    let deviations: Vec<LevelDeviation> = cocycle
        .tables()
        .iter()
        .filter(|t| t.n >= 2)
        .filter_map(|t| {
            let bound = t.bound.clone()?;
            let classes = t.class_stats();
            Some(LevelDeviation {
                level: t.level,
                n: t.n,
                within_bound: classes.iter().all(|c| c.deviation < bound),
                bound,
                classes,
            })
        })
        .collect();
    let violations = cocycle.violations();
    let pass =
        validation.pass && summability.pass && deviations.iter().all(|d| d.within_bound) && violations.is_empty();
    let paths = vec![
        out.write_json("system.json", &SystemFile { system: &sys })?,
        out.write_json("cocycle.json", &CocycleFile { tables: &cocycle })?,
        out.write_json(
            "system_report.json",
            &SystemReport {
                validation,
                summability,
                deviations,
                violations: violations.clone(),
                pass,
            },
        )?,
    ];
    Ok(Outcome::verdict(pass, paths, violations))
}

fn distinct_labels(sys: &CfSystem) -> Vec<Label> {
    let mut labels: Vec<Label> = Vec::new();
    for l in sys.schedule().map(|s| s.assignment.as_slice()).unwrap_or_default() {
        if !labels.contains(l) {
            labels.push(l.clone());
        }
    }
    labels
}

pub fn weak_limits(cfg: &RunConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let sys: CfSystem = out.read_json("system.json", Some("system"))?;
    let cocycle = core(Cocycle::assign(&sys))?;
    let (window, chars) = cfg.require_traces()?;
    if window.level >= sys.depth() {
        return Err(CliError::new(
            "E_PRECONDITION",
            2,
            format!("traces.level = {} leaves no level to trace", window.level),
        ));
    }
    let jobs: Vec<(GroupElement, Label)> = chars
        .iter()
        .flat_map(|chi| distinct_labels(&sys).into_iter().map(move |l| (chi.clone(), l)))
        .collect();
    let traces: Vec<WeakLimitTrace> = jobs
        .par_iter()
        .map(|(chi, label)| {
            let ns = traceable_indices(&sys, label, window.level);
            weak_limit_trace(&sys, &cocycle, chi, label, &window.a, &window.b, window.level, &ns)
        })
        .collect::<CoreResult<_>>()
        .map_err(CliError::from)?;
    let rows: Vec<String> = traces.iter().flat_map(WeakLimitTrace::csv_rows).collect();
    let premises = core(premise_suite(&sys, &cocycle, chars, window))?;
    let mut failing: Vec<String> = traces
        .iter()
        .filter(|t| !t.rows.is_empty() && !(t.law_holds && t.endpoint_improves))
        .map(|t| format!("trace for label {} and chi {} misses the error law", t.label, t.chi))
        .collect();
    if !premises.pass {
        failing.push("premise suite has claims without complete evidence".into());
    }
    let paths = vec![
        out.write_csv("traces.csv", CSV_HEADER, &rows)?,
        out.write_json("premises.json", &premises)?,
    ];
    Ok(Outcome::verdict(failing.is_empty(), paths, failing))
}

#[derive(Serialize)]
struct ProductEntry {
    k: u64,
    #[serde(flatten)]
    set: MultiplicitySet,
}

#[derive(Serialize)]
struct PredictionFile {
    #[serde(flatten)]
    predicted: MultiplicitySet,
    p_max: usize,
    orbit_decomposition: MultiplicitySet,
    consistent: bool,
    product_formula: Vec<ProductEntry>,
}

pub fn predict(cfg: &RunConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let predicted = core(predicted_main(&cfg.e_values))?;
    let (decomposition, window): (MultiplicitySet, BTreeSet<u64>) = match &cfg.target {
        None => (predicted.clone(), predicted.values()),
        Some(t) => {
            let blocks = core(build_blocks(t, cfg.p_max.max(1), cfg.block_caps))?;
            let d = core(orbit_decomposition(&blocks, cfg.p_max, cfg.block_caps))?;
            let mut w: BTreeSet<u64> = (1..=cfg.p_max).map(|p| t.term(p)).collect();
            w.insert(2);
            (d, w)
        }
    };
    let realized = decomposition.values();
    let consistent = realized.is_subset(&predicted.values()) && realized == window;
    let product = cfg
        .predict_k
        .iter()
        .map(|&k| {
            Ok(ProductEntry {
                k,
                set: core(product_formula(k, &cfg.e_values))?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let file = PredictionFile {
        predicted,
        p_max: cfg.p_max,
        orbit_decomposition: decomposition,
        consistent,
        product_formula: product,
    };
    let path = out.write_json("prediction.json", &file)?;
    let failing = if consistent {
        Vec::new()
    } else {
        vec!["orbit decomposition disagrees with the prediction".into()]
    };
    Ok(Outcome::verdict(consistent, vec![path], failing))
}

#[derive(Serialize)]
struct OracleFile {
    report: OracleReport,
}

pub fn oracle(cfg: &RunConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let toys = cfg
        .toys
        .iter()
        .enumerate()
        .map(|(i, spec)| spec.build(cfg.oracle.seed.wrapping_add(i as u64)))
        .collect::<CoreResult<Vec<ToySystem>>>()
        .map_err(CliError::from)?;
    let report = core(compare(&toys, &cfg.oracle))?;
    let pass = report.total_violations == 0;
    let verdict = report.verdict.clone();
    let path = out.write_json("oracle_report.json", &OracleFile { report })?;
    Ok(Outcome::verdict(
        pass,
        vec![path],
        if pass { Vec::new() } else { vec![verdict] },
    ))
}
