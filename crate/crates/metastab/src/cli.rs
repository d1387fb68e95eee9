//! Batch experiment runner: JSON experiment configs in, JSON/CSV reports out.
//!
//! Reports are byte-deterministic for a fixed config: rows are emitted in
//! scenario order and the runtime column stays zero unless timing capture is
//! switched on, so repeated runs diff clean.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::counterfn::{default_cap, nat, Bound, CounterFn, LambdaSeq, Nat};
use crate::iterations::{
    bauschke_sequence, browder_sequence, halpern_sequence, EpsSchedule, IterationTrace,
};
use crate::rates::{self, PrimitiveArg, ProblemParams};
use crate::space::{
    BodyKind, ConvexBody, Halfspace, Operator, OperatorFamily, Point,
};
use crate::verify::{
    self, check_asymptotic_regularity, check_metastability, check_projection_lemmas,
    minimal_window_oracle, LemmaReport, LemmaTolerances, MetastabilityReport, ModuliCheckConfig,
    Verdict,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const CAP_ENV_VAR: &str = "METASTAB_CAP";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("run error: {0}")]
    Run(String),
}

impl CliError {
    fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    fn run(err: impl std::fmt::Display) -> Self {
        CliError::Run(err.to_string())
    }
}

/// Exit status contract: 0 all non-vacuous checks passed, 1 a check failed,
/// 2 configuration or runtime error.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG_ERROR: i32 = 2;

// ---------------------------------------------------------------------------
// Config schema.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub scheme: SchemeKind,
    #[serde(default)]
    pub space: Option<SpaceConfig>,
    #[serde(default)]
    pub operator: Option<OperatorConfig>,
    #[serde(default)]
    pub family: Option<Vec<OperatorConfig>>,
    #[serde(default)]
    pub anchor: Option<Vec<f64>>,
    #[serde(default)]
    pub moduli: Option<ModuliConfig>,
    #[serde(default)]
    pub tau: Option<FnConfig>,
    #[serde(default)]
    pub k_list: Vec<u64>,
    #[serde(default)]
    pub f_list: Vec<FnConfig>,
    pub budget: u64,
    #[serde(default)]
    pub store_limit: Option<u64>,
    #[serde(default)]
    pub cap: Option<NatConfig>,
    #[serde(default)]
    pub tolerances: Option<TolerancesConfig>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub checks: Option<ChecksConfig>,
    #[serde(default)]
    pub projection_samples: Option<usize>,
    #[serde(default)]
    pub timings: Option<bool>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Browder,
    Halpern,
    Bauschke,
    Counterexample,
}

impl SchemeKind {
    fn name(&self) -> &'static str {
        match self {
            SchemeKind::Browder => "browder",
            SchemeKind::Halpern => "halpern",
            SchemeKind::Bauschke => "bauschke",
            SchemeKind::Counterexample => "counterexample",
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub dim: usize,
    pub b: u64,
    pub body: BodyConfig,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BodyConfig {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Segment {
        start: Vec<f64>,
        end: Vec<f64>,
    },
    Halfspaces {
        halfspaces: Vec<HalfspaceConfig>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceConfig {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorConfig {
    Identity,
    Constant {
        point: Vec<f64>,
    },
    Rotation {
        angle_deg: f64,
        center: Vec<f64>,
        #[serde(default)]
        plane: Option<(usize, usize)>,
    },
    Reflection {
        normal: Vec<f64>,
        offset: f64,
    },
    Projection {
        body: BodyConfig,
        b: u64,
    },
    Compose {
        ops: Vec<OperatorConfig>,
    },
    Combine {
        parts: Vec<WeightedOpConfig>,
    },
    Negation {
        center: Vec<f64>,
    },
    L1Shift,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedOpConfig {
    pub weight: f64,
    pub op: OperatorConfig,
}

/// Counter-function vocabulary for configs and reports.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FnConfig {
    Identity,
    PlusC { c: u64 },
    TimesC { c: u64 },
    Const { c: u64 },
    Affine { a: u64, c: u64 },
    Power { base: u64 },
    Table { values: Vec<u64> },
}

impl FnConfig {
    pub fn build(&self) -> Result<CounterFn, CliError> {
        let f = match self {
            FnConfig::Identity => CounterFn::identity(),
            FnConfig::PlusC { c } => CounterFn::plus_const(*c),
            FnConfig::TimesC { c } => CounterFn::times_const(*c),
            FnConfig::Const { c } => CounterFn::constant(nat(*c)),
            FnConfig::Affine { a, c } => CounterFn::affine(nat(*a), nat(*c)),
            FnConfig::Power { base } => CounterFn::power(nat(*base)).map_err(CliError::run)?,
            FnConfig::Table { values } => {
                CounterFn::table(values.iter().map(|v| nat(*v)).collect())
                    .map_err(CliError::run)?
            }
        };
        Ok(f)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ModuliConfig {
    Named(String),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum NatConfig {
    Number(u64),
    Text(String),
}

impl NatConfig {
    pub fn to_nat(&self) -> Result<Nat, CliError> {
        match self {
            NatConfig::Number(v) => Ok(nat(*v)),
            NatConfig::Text(s) => Nat::parse_bytes(s.as_bytes(), 10)
                .ok_or_else(|| CliError::config(format!("invalid natural `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    #[serde(default = "default_meta_tol")]
    pub metastability: f64,
    #[serde(default = "default_premise_tol")]
    pub premise: f64,
    #[serde(default = "default_conclusion_tol")]
    pub conclusion: f64,
}

fn default_meta_tol() -> f64 {
    1e-7
}
fn default_premise_tol() -> f64 {
    1e-12
}
fn default_conclusion_tol() -> f64 {
    1e-9
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        TolerancesConfig {
            metastability: default_meta_tol(),
            premise: default_premise_tol(),
            conclusion: default_conclusion_tol(),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    #[serde(default = "yes")]
    pub metastability: bool,
    #[serde(default = "yes")]
    pub regularity: bool,
    #[serde(default)]
    pub projection_lemmas: bool,
    #[serde(default)]
    pub moduli: bool,
    #[serde(default = "yes")]
    pub oracle_agreement: bool,
}

fn yes() -> bool {
    true
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            metastability: true,
            regularity: true,
            projection_lemmas: false,
            moduli: false,
            oracle_agreement: true,
        }
    }
}

/// Override knobs from the command line; each wins over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub cap: Option<Nat>,
    pub budget: Option<u64>,
    pub seed: Option<u64>,
}

// ---------------------------------------------------------------------------
// Config → domain objects.
// ---------------------------------------------------------------------------

fn build_body(cfg: &BodyConfig, b: u64) -> Result<ConvexBody, CliError> {
    let kind = match cfg {
        BodyConfig::Ball { center, radius } => BodyKind::Ball {
            center: center.clone(),
            radius: *radius,
        },
        BodyConfig::Box { lower, upper } => BodyKind::Box {
            lower: lower.clone(),
            upper: upper.clone(),
        },
        BodyConfig::Segment { start, end } => BodyKind::Segment {
            start: start.clone(),
            end: end.clone(),
        },
        BodyConfig::Halfspaces {
            halfspaces,
            lower,
            upper,
        } => BodyKind::HalfspaceIntersection {
            halfspaces: halfspaces
                .iter()
                .map(|h| Halfspace {
                    normal: h.normal.clone(),
                    offset: h.offset,
                })
                .collect(),
            lower: lower.clone(),
            upper: upper.clone(),
        },
    };
    ConvexBody::new(kind, b).map_err(CliError::run)
}

fn build_operator(cfg: &OperatorConfig) -> Result<Operator, CliError> {
    Ok(match cfg {
        OperatorConfig::Identity => Operator::Identity,
        OperatorConfig::Constant { point } => {
            Operator::Constant(Point::euclidean(point.clone()).map_err(CliError::run)?)
        }
        OperatorConfig::Rotation {
            angle_deg,
            center,
            plane,
        } => Operator::Rotation {
            angle: angle_deg.to_radians(),
            center: center.clone(),
            plane: plane.unwrap_or((0, 1)),
        },
        OperatorConfig::Reflection { normal, offset } => Operator::Reflection {
            normal: normal.clone(),
            offset: *offset,
        },
        OperatorConfig::Projection { body, b } => {
            Operator::MetricProjection(build_body(body, *b)?)
        }
        OperatorConfig::Compose { ops } => Operator::Composition(
            ops.iter().map(build_operator).collect::<Result<_, _>>()?,
        ),
        OperatorConfig::Combine { parts } => Operator::ConvexCombination(
            parts
                .iter()
                .map(|p| build_operator(&p.op).map(|op| (p.weight, op)))
                .collect::<Result<_, _>>()?,
        ),
        OperatorConfig::Negation { center } => Operator::PointNegation {
            center: center.clone(),
        },
        OperatorConfig::L1Shift => Operator::L1Shift,
    })
}

struct ResolvedExperiment {
    scheme: SchemeKind,
    body: Option<ConvexBody>,
    family: Option<OperatorFamily>,
    anchor: Option<Point>,
    params: ProblemParams,
    k_list: Vec<u64>,
    f_list: Vec<(String, CounterFn)>,
    budget: u64,
    store_limit: u64,
    tols: TolerancesConfig,
    checks: ChecksConfig,
    seed: u64,
    timings: bool,
    projection_samples: Option<usize>,
}

fn resolve(config: &ExperimentConfig, over: &Overrides) -> Result<ResolvedExperiment, CliError> {
    if config.schema_version != SCHEMA_VERSION {
        return Err(CliError::config(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            config.schema_version
        )));
    }
    let cap = match &over.cap {
        Some(c) => c.clone(),
        None => match &config.cap {
            Some(c) => c.to_nat()?,
            None => cap_from_env().unwrap_or_else(default_cap),
        },
    };
    let budget = over.budget.unwrap_or(config.budget);
    let seed = over.seed.or(config.seed).unwrap_or(0);
    let tols = config.tolerances.unwrap_or_default();
    let checks = config.checks.unwrap_or_default();
    let timings = config.timings.unwrap_or(false);
    let store_limit = config.store_limit.unwrap_or(100_000);

    if config.scheme == SchemeKind::Counterexample {
        let params = ProblemParams::harmonic(1, 1, cap).map_err(CliError::run)?;
        return Ok(ResolvedExperiment {
            scheme: config.scheme,
            body: None,
            family: None,
            anchor: None,
            params,
            k_list: config.k_list.clone(),
            f_list: Vec::new(),
            budget,
            store_limit,
            tols,
            checks,
            seed,
            timings,
            projection_samples: None,
        });
    }

    let space = config
        .space
        .as_ref()
        .ok_or_else(|| CliError::config("scheme requires a `space` section"))?;
    let body = build_body(&space.body, space.b)?;
    if body.dim() != space.dim {
        return Err(CliError::config(format!(
            "body dimension {} does not match declared dim {}",
            body.dim(),
            space.dim
        )));
    }
    let operators: Vec<Operator> = match config.scheme {
        SchemeKind::Bauschke => {
            let fam = config
                .family
                .as_ref()
                .ok_or_else(|| CliError::config("bauschke scheme requires `family`"))?;
            fam.iter().map(build_operator).collect::<Result<_, _>>()?
        }
        _ => {
            let op = config
                .operator
                .as_ref()
                .ok_or_else(|| CliError::config("scheme requires `operator`"))?;
            vec![build_operator(op)?]
        }
    };
    let tau = config.tau.as_ref().map(|t| t.build()).transpose()?;
    let family =
        OperatorFamily::new(operators, tau.clone()).map_err(CliError::run)?;
    let anchor = Point::euclidean(
        config
            .anchor
            .clone()
            .ok_or_else(|| CliError::config("scheme requires `anchor`"))?,
    )
    .map_err(CliError::run)?;
    if let Some(ModuliConfig::Named(name)) = &config.moduli {
        if name != "harmonic" {
            return Err(CliError::config(format!("unknown moduli `{name}`")));
        }
    }
    let ell = family.ell();
    let moduli = crate::counterfn::default_harmonic_moduli(ell).map_err(CliError::run)?;
    let params = ProblemParams::new(space.b, ell, moduli, tau, cap).map_err(CliError::run)?;
    let f_list = config
        .f_list
        .iter()
        .map(|f| f.build().map(|g| (g.describe(), g)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ResolvedExperiment {
        scheme: config.scheme,
        body: Some(body),
        family: Some(family),
        anchor: Some(anchor),
        params,
        k_list: config.k_list.clone(),
        f_list,
        budget,
        store_limit,
        tols,
        checks,
        seed,
        timings,
        projection_samples: config.projection_samples,
    })
}

pub fn cap_from_env() -> Option<Nat> {
    std::env::var(CAP_ENV_VAR)
        .ok()
        .and_then(|s| Nat::parse_bytes(s.as_bytes(), 10))
}

// ---------------------------------------------------------------------------
// Report rows and emission.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub scheme: String,
    pub k: u64,
    pub f: String,
    pub bound: Bound,
    pub witness_n: Option<u64>,
    pub max_gap: Option<f64>,
    pub verdict: Verdict,
    pub margins: serde_json::Value,
    pub ms: u64,
}

#[derive(Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub scheme: String,
    pub rows: Vec<ReportRow>,
    pub metastability: Vec<MetastabilityReport>,
    pub lemmas: Vec<LemmaReport>,
    pub exit_code: i32,
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn bound_cell(b: &Bound) -> String {
    match b {
        Bound::Exact(v) => v.to_string(),
        Bound::Saturated(c) => format!(">={c}"),
    }
}

fn opt_cell<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn verdict_cell(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::BoundSaturatedButWindowPass => "bound-saturated-but-window-pass",
        Verdict::BudgetExceeded => "budget-exceeded",
        Verdict::Vacuous => "vacuous",
    }
}

/// Fixed-order CSV of the per-(k, f) rows.
pub fn rows_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("scheme,k,f,bound,witnessN,maxGap,verdict,marginsJSON,ms\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.scheme,
            r.k,
            csv_escape(&r.f),
            csv_escape(&bound_cell(&r.bound)),
            opt_cell(&r.witness_n),
            opt_cell(&r.max_gap),
            verdict_cell(r.verdict),
            csv_escape(&r.margins.to_string()),
            r.ms
        ));
    }
    out
}

/// Plot-ready residual series: n, coordinates, residual, per-operator
/// residuals, solver certificate.
pub fn series_csv(trace: &IterationTrace) -> String {
    let dim = trace
        .points
        .first()
        .and_then(|p| p.dim())
        .unwrap_or(0);
    let ops = trace
        .per_op_residuals
        .first()
        .map(|r| r.len())
        .unwrap_or(0);
    let mut header = String::from("n");
    for i in 0..dim {
        header.push_str(&format!(",x{i}"));
    }
    header.push_str(",residual");
    for i in 0..ops {
        header.push_str(&format!(",res_op{i}"));
    }
    if !trace.solver_certs.is_empty() {
        header.push_str(",cert");
    }
    header.push('\n');
    let mut out = header;
    for n in 0..trace.len() {
        out.push_str(&n.to_string());
        if let Ok(c) = trace.points[n].coords() {
            for v in c {
                out.push_str(&format!(",{v}"));
            }
        }
        out.push_str(&format!(",{}", trace.residuals[n]));
        if ops > 0 {
            for v in &trace.per_op_residuals[n] {
                out.push_str(&format!(",{v}"));
            }
        }
        if !trace.solver_certs.is_empty() {
            out.push_str(&format!(",{}", trace.solver_certs[n]));
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| CliError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write report.json, rows.csv and series.csv under `out_dir`.
pub fn emit_report(
    report: &ExperimentReport,
    traces: &[&IterationTrace],
    out_dir: &Path,
) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write_file(&out_dir.join("report.json"), &json)?;
    write_file(&out_dir.join("rows.csv"), &rows_csv(&report.rows))?;
    for (i, trace) in traces.iter().enumerate() {
        let name = if traces.len() == 1 {
            "series.csv".to_string()
        } else {
            format!("series_{i}.csv")
        };
        write_file(&out_dir.join(name), &series_csv(trace))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// The experiment driver.
// ---------------------------------------------------------------------------

fn scheme_bound(
    scheme: SchemeKind,
    params: &ProblemParams,
    k: u64,
    f: &CounterFn,
) -> Result<Bound, CliError> {
    let b = match scheme {
        SchemeKind::Browder => rates::phi_browder(params, &nat(k), f),
        SchemeKind::Halpern => rates::phi_wittmann(params, &nat(k), f),
        SchemeKind::Bauschke => rates::phi_bauschke(params, &nat(k), f),
        SchemeKind::Counterexample => {
            return Err(CliError::config("counterexample scheme has no bound"))
        }
    };
    b.map_err(CliError::run)
}

/// Run one experiment config end to end. Returns the report and the exit
/// code mandated by the exit-status contract.
pub fn run_experiment(
    config: &ExperimentConfig,
    over: &Overrides,
    out_dir: &Path,
) -> Result<(ExperimentReport, i32), CliError> {
    let exp = resolve(config, over)?;
    let started = Instant::now();

    if exp.scheme == SchemeKind::Counterexample {
        let rep = verify::run_counterexample(exp.budget.min(10_000));
        let failed = rep.verdict.is_gating_failure();
        let row = ReportRow {
            scheme: "counterexample".into(),
            k: 0,
            f: "-".into(),
            bound: Bound::Exact(nat(0)),
            witness_n: None,
            max_gap: None,
            verdict: rep.verdict,
            margins: json!({ "worst": rep.worst_margin }),
            ms: elapsed_ms(&started, exp.timings),
        };
        let report = ExperimentReport {
            schema_version: SCHEMA_VERSION,
            scheme: "counterexample".into(),
            rows: vec![row],
            metastability: Vec::new(),
            lemmas: vec![rep],
            exit_code: if failed { EXIT_CHECK_FAILED } else { EXIT_OK },
        };
        let code = report.exit_code;
        emit_report(&report, &[], out_dir)?;
        return Ok((report, code));
    }

    let body = exp.body.as_ref().expect("resolved above");
    let family = exp.family.as_ref().expect("resolved above");
    let anchor = exp.anchor.as_ref().expect("resolved above");
    let lambda = LambdaSeq::Harmonic;
    let stored_budget = exp.budget.min(exp.store_limit);
    let trace = compute_trace(&exp, stored_budget)?;

    let mut rows = Vec::new();
    let mut metastability = Vec::new();
    let mut lemmas = Vec::new();
    let mut any_failure = false;
    let ltols = LemmaTolerances {
        premise: exp.tols.premise,
        conclusion: exp.tols.conclusion,
    };

    for &k in &exp.k_list {
        for (fname, f) in &exp.f_list {
            let row_start = Instant::now();
            let bound = scheme_bound(exp.scheme, &exp.params, k, f)?;
            let mut verdict = Verdict::Vacuous;
            let mut witness = None;
            let mut max_gap = None;
            let mut margins = serde_json::Map::new();
            if exp.checks.metastability {
                let rep = check_metastability(&trace, k, f, &bound, exp.tols.metastability);
                verdict = rep.verdict;
                witness = rep.witness_n;
                max_gap = rep.max_pair_gap;
                if let Some(g) = rep.max_pair_gap {
                    margins.insert(
                        "window_gap_margin".into(),
                        json!(1.0 / (k as f64 + 1.0) + exp.tols.metastability - g),
                    );
                }
                if exp.checks.oracle_agreement {
                    let oracle = minimal_window_oracle(&trace, k, f, exp.tols.metastability);
                    if rep.witness_n.is_some() && oracle != rep.witness_n {
                        any_failure = true;
                        margins.insert("oracle_disagreement".into(), json!(true));
                    }
                }
                any_failure |= rep.verdict.is_gating_failure();
                metastability.push(rep);
            }
            rows.push(ReportRow {
                scheme: exp.scheme.name().into(),
                k,
                f: fname.clone(),
                bound,
                witness_n: witness,
                max_gap,
                verdict,
                margins: serde_json::Value::Object(margins),
                ms: elapsed_ms(&row_start, exp.timings),
            });
        }
    }

    if exp.checks.regularity {
        match exp.scheme {
            SchemeKind::Bauschke if exp.budget > stored_budget => {
                // Full-budget streaming pass; the stored prefix only feeds
                // the window searches above.
                let reps = verify::check_bauschke_regularity_streamed(
                    family,
                    body,
                    anchor,
                    &lambda,
                    &exp.params,
                    &exp.k_list,
                    exp.budget,
                    exp.tols.conclusion,
                )
                .map_err(CliError::run)?;
                for r in reps {
                    any_failure |= r.verdict.is_gating_failure();
                    lemmas.push(r);
                }
            }
            _ => {
                for &k in &exp.k_list {
                    let window_f = exp.f_list.first().map(|(_, f)| f);
                    let reps = check_asymptotic_regularity(
                        &trace,
                        &exp.params,
                        k,
                        window_f,
                        Some(family),
                        exp.tols.conclusion,
                    )
                    .map_err(CliError::run)?;
                    for r in reps {
                        any_failure |= r.verdict.is_gating_failure();
                        lemmas.push(r);
                    }
                }
            }
        }
    }

    if exp.scheme == SchemeKind::Bauschke && exp.checks.regularity {
        // Telescoping gap inequality on sampled (n, m) pairs of the stored
        // prefix.
        let mut pairs = Vec::new();
        for n in [1u64, 2, 5, 10, 50, 100] {
            for m in [0u64, 1, 3, 10, 100, 1000] {
                pairs.push((n, m));
            }
        }
        let rep = verify::check_telescoping(
            &trace,
            &lambda,
            family.ell(),
            exp.params.b,
            &pairs,
            1e-9,
        )
        .map_err(CliError::run)?;
        any_failure |= rep.verdict.is_gating_failure();
        lemmas.push(rep);
    }

    if exp.checks.projection_lemmas {
        let samples = exp.projection_samples.unwrap_or(12);
        for &k in &exp.k_list {
            let reps = check_projection_lemmas(
                family,
                body,
                anchor,
                &exp.params,
                k,
                samples,
                exp.seed,
                Some(&trace),
                &ltols,
            )
            .map_err(CliError::run)?;
            for r in reps {
                any_failure |= r.verdict.is_gating_failure();
                lemmas.push(r);
            }
        }
    }

    if exp.checks.moduli {
        let cfg = ModuliCheckConfig {
            seed: exp.seed,
            ..Default::default()
        };
        let reps = verify::validate_moduli(&exp.params, Some((family, body)), &cfg)
            .map_err(CliError::run)?;
        for r in reps {
            any_failure |= r.verdict.is_gating_failure();
            lemmas.push(r);
        }
    }

    let exit_code = if any_failure { EXIT_CHECK_FAILED } else { EXIT_OK };
    let report = ExperimentReport {
        schema_version: SCHEMA_VERSION,
        scheme: exp.scheme.name().into(),
        rows,
        metastability,
        lemmas,
        exit_code,
    };
    emit_report(&report, &[&trace], out_dir)?;
    Ok((report, exit_code))
}

fn compute_trace(exp: &ResolvedExperiment, budget: u64) -> Result<IterationTrace, CliError> {
    let body = exp.body.as_ref().expect("euclidean scheme");
    let family = exp.family.as_ref().expect("euclidean scheme");
    let anchor = exp.anchor.as_ref().expect("euclidean scheme");
    let op = &family.operators()[0];
    let lambda = LambdaSeq::Harmonic;
    match exp.scheme {
        SchemeKind::Browder => {
            browder_sequence(op, body, anchor, budget, &EpsSchedule::default())
                .map_err(CliError::run)
        }
        SchemeKind::Halpern => {
            halpern_sequence(op, body, anchor, &lambda, budget).map_err(CliError::run)
        }
        SchemeKind::Bauschke => {
            bauschke_sequence(family, body, anchor, &lambda, budget).map_err(CliError::run)
        }
        SchemeKind::Counterexample => Err(CliError::config(
            "counterexample scheme computes no euclidean trace",
        )),
    }
}

fn elapsed_ms(start: &Instant, timings: bool) -> u64 {
    if timings {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

#[derive(Serialize)]
pub struct OracleWitness {
    pub k: u64,
    pub f: String,
    pub witness_n: Option<u64>,
}

/// Minimal-window search only: brute-force witnesses for every (k, f) pair in
/// the config, no bound evaluation.
pub fn run_oracle(
    config: &ExperimentConfig,
    over: &Overrides,
) -> Result<Vec<OracleWitness>, CliError> {
    let exp = resolve(config, over)?;
    let trace = compute_trace(&exp, exp.budget.min(exp.store_limit))?;
    let mut out = Vec::new();
    for &k in &exp.k_list {
        for (fname, f) in &exp.f_list {
            out.push(OracleWitness {
                k,
                f: fname.clone(),
                witness_n: minimal_window_oracle(&trace, k, f, exp.tols.metastability),
            });
        }
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let raw = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&raw).map_err(|e| CliError::config(format!("{e}")))
}

// ---------------------------------------------------------------------------
// `bounds` subcommand plumbing.
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsParams {
    pub b: u64,
    #[serde(default = "one")]
    pub ell: u64,
    #[serde(default)]
    pub tau: Option<FnConfig>,
    #[serde(default)]
    pub cap: Option<NatConfig>,
}

fn one() -> u64 {
    1
}

impl BoundsParams {
    pub fn build(&self, over: &Overrides) -> Result<ProblemParams, CliError> {
        let cap = match &over.cap {
            Some(c) => c.clone(),
            None => match &self.cap {
                Some(c) => c.to_nat()?,
                None => cap_from_env().unwrap_or_else(default_cap),
            },
        };
        let moduli =
            crate::counterfn::default_harmonic_moduli(self.ell).map_err(CliError::run)?;
        let tau = self.tau.as_ref().map(|t| t.build()).transpose()?;
        ProblemParams::new(self.b, self.ell, moduli, tau, cap).map_err(CliError::run)
    }
}

/// Parse the JSON argument vector of the `bounds` subcommand: numbers and
/// decimal strings are naturals, objects are counter-function descriptors.
pub fn parse_primitive_args(raw: &str) -> Result<Vec<PrimitiveArg>, CliError> {
    let values: Vec<serde_json::Value> =
        serde_json::from_str(raw).map_err(|e| CliError::config(format!("args: {e}")))?;
    values
        .into_iter()
        .map(|v| match v {
            serde_json::Value::Number(n) => n
                .as_u64()
                .map(|x| PrimitiveArg::Nat(nat(x)))
                .ok_or_else(|| CliError::config("numeric args must be nonnegative integers")),
            serde_json::Value::String(s) => Nat::parse_bytes(s.as_bytes(), 10)
                .map(PrimitiveArg::Nat)
                .ok_or_else(|| CliError::config(format!("invalid natural `{s}`"))),
            obj @ serde_json::Value::Object(_) => {
                let cfg: FnConfig = serde_json::from_value(obj)
                    .map_err(|e| CliError::config(format!("fn descriptor: {e}")))?;
                Ok(PrimitiveArg::Fn(cfg.build()?))
            }
            other => Err(CliError::config(format!("unsupported arg {other}"))),
        })
        .collect()
}

pub fn eval_bounds(
    params: &ProblemParams,
    name: &str,
    args: &[PrimitiveArg],
) -> Result<Bound, CliError> {
    rates::eval_primitive(params, name, args).map_err(CliError::run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn browder_config() -> ExperimentConfig {
        serde_json::from_value(json!({
            "schema_version": 1,
            "scheme": "browder",
            "space": {"dim": 2, "b": 1, "body": {"kind": "ball", "center": [0.0, 0.0], "radius": 0.5}},
            "operator": {"kind": "rotation", "angle_deg": 90.0, "center": [0.0, 0.0]},
            "anchor": [0.5, 0.0],
            "k_list": [0, 1],
            "f_list": [{"kind": "identity"}, {"kind": "times-c", "c": 2}],
            "budget": 300,
            "seed": 7
        }))
        .unwrap()
    }

    #[test]
    fn browder_config_runs_clean() {
        let dir = tempfile::tempdir().unwrap();
        let (report, code) =
            run_experiment(&browder_config(), &Overrides::default(), dir.path()).unwrap();
        assert_eq!(code, EXIT_OK);
        assert_eq!(report.rows.len(), 4);
        for row in &report.rows {
            assert!(row.verdict.is_pass(), "row {:?}", row);
        }
        assert!(dir.path().join("report.json").exists());
        assert!(dir.path().join("rows.csv").exists());
        assert!(dir.path().join("series.csv").exists());
    }

    #[test]
    fn invalid_b_is_a_config_error() {
        let mut cfg = browder_config();
        if let Some(space) = cfg.space.as_mut() {
            space.b = 0;
        }
        let dir = tempfile::tempdir().unwrap();
        let err = run_experiment(&cfg, &Overrides::default(), dir.path());
        assert!(err.is_err());
    }

    #[test]
    fn reports_are_byte_deterministic() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        run_experiment(&browder_config(), &Overrides::default(), dir1.path()).unwrap();
        run_experiment(&browder_config(), &Overrides::default(), dir2.path()).unwrap();
        for name in ["report.json", "rows.csv", "series.csv"] {
            let a = fs::read(dir1.path().join(name)).unwrap();
            let b = fs::read(dir2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between runs");
        }
    }

    #[test]
    fn counterexample_config_passes() {
        let cfg: ExperimentConfig = serde_json::from_value(json!({
            "schema_version": 1,
            "scheme": "counterexample",
            "budget": 100
        }))
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (report, code) = run_experiment(&cfg, &Overrides::default(), dir.path()).unwrap();
        assert_eq!(code, EXIT_OK);
        assert_eq!(report.lemmas[0].lemma, "l1_shift_counterexample");
    }

    #[test]
    fn csv_layout_is_fixed() {
        let rows = vec![ReportRow {
            scheme: "browder".into(),
            k: 0,
            f: "identity".into(),
            bound: Bound::Exact(nat(12)),
            witness_n: Some(3),
            max_gap: Some(0.25),
            verdict: Verdict::Pass,
            margins: json!({"a": 1}),
            ms: 0,
        }];
        let csv = rows_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "scheme,k,f,bound,witnessN,maxGap,verdict,marginsJSON,ms"
        );
        assert_eq!(
            lines.next().unwrap(),
            "browder,0,identity,12,3,0.25,pass,\"{\"\"a\"\":1}\",0"
        );
    }

    #[test]
    fn fn_descriptors_round_trip() {
        for (raw, expect) in [
            (json!({"kind": "identity"}), "identity"),
            (json!({"kind": "plus-c", "c": 10}), "plus-10"),
            (json!({"kind": "times-c", "c": 2}), "times-2"),
            (json!({"kind": "table", "values": [3, 1, 2]}), "table[3,3,3]"),
        ] {
            let cfg: FnConfig = serde_json::from_value(raw).unwrap();
            assert_eq!(cfg.build().unwrap().describe(), expect);
        }
    }

    #[test]
    fn bounds_args_parse() {
        let args = parse_primitive_args(r#"[0, "18446744073709551616", {"kind":"identity"}]"#)
            .unwrap();
        assert_eq!(args.len(), 3);
        assert!(matches!(&args[0], PrimitiveArg::Nat(n) if n == &nat(0)));
        assert!(matches!(&args[1], PrimitiveArg::Nat(n) if n > &nat(u64::MAX)));
        assert!(matches!(&args[2], PrimitiveArg::Fn(_)));
    }

    #[test]
    fn unknown_config_fields_are_rejected() {
        let raw = json!({
            "schema_version": 1,
            "scheme": "counterexample",
            "budget": 10,
            "surprise": true
        });
        assert!(serde_json::from_value::<ExperimentConfig>(raw).is_err());
    }
}
