//! Executes the actions of one scenario and collects summary rows.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;

use solitonlab_core::charts::{self, ConformalChart};
use solitonlab_core::geometry::{self, WarpedMetric};
use solitonlab_core::identities::{self, CompactRotMetric, IdentityReport};
use solitonlab_core::io::{self as csvio, fmt_num};
use solitonlab_core::ode::{self, SolutionCurve};
use solitonlab_core::profile::RadialProfile;
use solitonlab_core::verify::{self, ClassificationResult, SolitonCase, SolitonSpec};

use crate::scenario::{self, input_err, Action, Overrides, Scenario};

/// One line of `summary.csv`.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub scenario: String,
    pub action: &'static str,
    pub key: String,
    pub value: String,
    pub pass: bool,
}

pub const SUMMARY_HEADER: &str = "scenario,action,key,value,pass";

impl SummaryRow {
    pub fn csv_line(&self) -> String {
        format!("{},{},{},{},{}", quote(&self.scenario), self.action, quote(&self.key), quote(&self.value), self.pass)
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> anyhow::Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    out.flush()?;
    Ok(())
}

struct Ctx<'a> {
    name: String,
    dir: PathBuf,
    rows: Vec<SummaryRow>,
    scenario: &'a Scenario,
    tol: Option<f64>,
}

impl Ctx<'_> {
    fn row(&mut self, action: Action, key: &str, value: impl ToString, pass: bool) {
        self.rows.push(SummaryRow {
            scenario: self.name.clone(),
            action: action.name(),
            key: key.to_owned(),
            value: value.to_string(),
            pass,
        });
    }

    fn file(&self, action: Action) -> anyhow::Result<BufWriter<File>> {
        let path = self.dir.join(format!("{}.csv", action.name()));
        Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
    }

    /// Records a failed action instead of aborting the scenario.
    fn failed(&mut self, action: Action, err: impl std::fmt::Display) {
        self.row(action, "error", err, false);
    }
}

/// Runs one scenario into `dir`. Input problems are returned as errors;
/// numerical failures become failing summary rows.
pub fn run_scenario(s: &Scenario, label: &str, ov: &Overrides, base: &Path, dir: &Path) -> anyhow::Result<Vec<SummaryRow>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut ctx = Ctx {
        name: label.to_owned(),
        dir: dir.to_path_buf(),
        rows: Vec::new(),
        scenario: s,
        tol: ov.tol.or(s.tolerance),
    };

    let mut actions = s.actions.clone();
    actions.sort();
    actions.dedup();

    let mut curve = None;
    if actions.contains(&Action::Solve) {
        let p = scenario::ode_problem(s, ov)?;
        match ode::shoot(&p) {
            Ok(c) => {
                solve_report(&mut ctx, &c)?;
                curve = Some(c);
            }
            Err(e) => ctx.failed(Action::Solve, e),
        }
    }

    let pair_actions: Vec<Action> = actions.iter().copied().filter(|a| *a != Action::Solve).collect();
    if !pair_actions.is_empty() {
        let pair = if s.warp.is_some() {
            Some(scenario::pair(s, ov, base)?)
        } else {
            match curve.as_ref().map(SolutionCurve::to_pair) {
                Some(Ok(p)) => Some(p),
                Some(Err(e)) => {
                    for a in &pair_actions {
                        ctx.failed(*a, format!("solved curve is unusable: {e}"));
                    }
                    None
                }
                None => {
                    for a in &pair_actions {
                        ctx.failed(*a, "the solve step produced no curve");
                    }
                    None
                }
            }
        };
        if let Some((m, f)) = pair {
            run_pair_actions(&mut ctx, &pair_actions, &m, &f)?;
        }
    }
    Ok(ctx.rows)
}

fn run_pair_actions(ctx: &mut Ctx<'_>, actions: &[Action], m: &WarpedMetric, f: &RadialProfile) -> anyhow::Result<()> {
    let mut classification: Option<ClassificationResult> = None;
    for &action in actions {
        match action {
            Action::Curvature => match geometry::curvature_sweep(m) {
                Ok(reports) => {
                    csvio::write_curvature(ctx.file(action)?, &reports)?;
                    let min = reports.iter().map(|c| c.scalar).fold(f64::INFINITY, f64::min);
                    let max = reports.iter().map(|c| c.scalar).fold(f64::NEG_INFINITY, f64::max);
                    ctx.row(action, "scalar_min", fmt_num(min), true);
                    ctx.row(action, "scalar_max", fmt_num(max), true);
                }
                Err(e) => ctx.failed(action, e),
            },
            Action::Verify => {
                let spec = scenario::soliton_spec(ctx.scenario);
                let rep = match &spec {
                    Some(spec) => verify::soliton_residual_with_tol(m, f, spec, ctx.tol),
                    None => verify::conformal_residual_with_tol(m, f, ctx.tol),
                };
                match rep {
                    Ok(rep) => {
                        csvio::write_residual(ctx.file(action)?, &rep)?;
                        let label = spec.as_ref().map_or("conformal".to_owned(), |s| format!("{s:?}"));
                        ctx.row(action, "structure", label, true);
                        ctx.row(action, "tolerance", fmt_num(rep.tolerance), true);
                        ctx.row(action, "max_residual", fmt_num(rep.sup()), rep.pass);
                    }
                    Err(e) => ctx.failed(action, e),
                }
            }
            Action::Classify => match verify::classify(m, f) {
                Ok(c) => {
                    write_classification(ctx.file(action)?, &c)?;
                    ctx.row(action, "case", c.case, c.case != SolitonCase::Invalid);
                    ctx.row(action, "critical_points", c.critical.count(), c.critical.valid_as_soliton());
                    ctx.row(action, "min_ricci", fmt_num(c.min_ricci), true);
                    classification = Some(c);
                }
                Err(e) => ctx.failed(action, e),
            },
            Action::Chart => {
                let case = match &classification {
                    Some(c) => Ok(c.case),
                    None => verify::classify(m, f).map(|c| c.case),
                };
                match case.and_then(|case| chart_for(m, case)) {
                    Ok(chart) => {
                        csvio::write_chart(ctx.file(action)?, &chart)?;
                        ctx.row(action, "kind", format!("{:?}", chart.kind), true);
                        ctx.row(action, "t_lower", endpoint(chart.t_lower), true);
                        ctx.row(action, "t_upper", endpoint(chart.t_upper), true);
                        match charts::pullback_verify(m, &chart) {
                            Ok(defect) => {
                                let tol = ctx.tol.unwrap_or(if m.warp().is_analytic() { 1e-8 } else { 1e-6 });
                                ctx.row(action, "pullback_defect", fmt_num(defect), defect < tol);
                            }
                            Err(e) => ctx.failed(action, e),
                        }
                    }
                    Err(e) => ctx.failed(action, e),
                }
            }
            Action::Identities => identities_report(ctx, m, f)?,
            Action::Solve => unreachable!("solve runs before the pair actions"),
        }
    }
    Ok(())
}

fn endpoint(e: charts::Endpoint) -> String {
    if e.bounded {
        fmt_num(e.value)
    } else if e.value > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}

fn chart_for(m: &WarpedMetric, case: SolitonCase) -> solitonlab_core::Result<ConformalChart> {
    match case {
        SolitonCase::Case1 | SolitonCase::Case1Prime => charts::chart_case1(m),
        SolitonCase::Case2 | SolitonCase::Case2Prime => charts::chart_case2(m),
        SolitonCase::Case3 => charts::chart_case3(m),
        SolitonCase::Invalid => Err(solitonlab_core::SolitonError::WrongCase {
            expected: "at most two critical points",
            found: "an invalid profile".to_owned(),
        }),
    }
}

fn write_classification<W: Write>(mut out: W, c: &ClassificationResult) -> anyhow::Result<()> {
    writeln!(out, "case,critical_points,closes_at_min,closes_at_max,interior_roots,min_ricci,ricci_nonnegative")?;
    let roots: Vec<String> = c.critical.roots.iter().map(|r| fmt_num(r.location)).collect();
    writeln!(
        out,
        "{},{},{},{},{},{},{}",
        c.case,
        c.critical.count(),
        c.critical.closes_at_min,
        c.critical.closes_at_max,
        roots.join(";"),
        fmt_num(c.min_ricci),
        c.ricci_nonnegative
    )?;
    out.flush()?;
    Ok(())
}

type Check<'a> = Box<dyn Fn() -> solitonlab_core::Result<Vec<IdentityReport>> + Send + Sync + 'a>;

fn identities_report(ctx: &mut Ctx<'_>, m: &WarpedMetric, f: &RadialProfile) -> anyhow::Result<()> {
    let action = Action::Identities;
    let compact = CompactRotMetric::new(m.clone());
    let mut checks: Vec<Check<'_>> = vec![Box::new(|| Ok(vec![identities::check_schur(m)?]))];
    match &compact {
        Ok(cm) => {
            let spec = scenario::soliton_spec(ctx.scenario);
            checks.push(Box::new(move || Ok(vec![identities::check_divergence(cm, f)?])));
            match spec {
                Some(SolitonSpec::Yamabe { lambda }) => {
                    checks.push(Box::new(move || Ok(vec![identities::check_lambda_mean(cm, f, lambda)?])));
                    checks.push(Box::new(move || {
                        let chain = identities::check_bochner_chain(cm, f, lambda)?;
                        Ok(vec![chain.soliton_link, chain.bianchi_link, chain.chain, chain.premise])
                    }));
                }
                Some(SolitonSpec::KYamabe { k, .. }) => {
                    checks.push(Box::new(move || {
                        let kw = identities::check_kazdan_warner_integral(cm, f, k)?;
                        Ok(vec![kw.vanishing, kw.contraction])
                    }));
                }
                _ => {
                    checks.push(Box::new(move || Ok(vec![identities::check_kazdan_warner_integral(cm, f, 1)?.vanishing])));
                }
            }
        }
        Err(e) => ctx.row(action, "compact", format!("false ({e})"), true),
    }
    // Independent identities run in parallel; the order of `checks` fixes
    // the output order.
    let results: Vec<solitonlab_core::Result<Vec<IdentityReport>>> = checks.par_iter().map(|c| c()).collect();
    let mut reports = Vec::new();
    for r in results {
        match r {
            Ok(mut v) => reports.append(&mut v),
            Err(e) => ctx.failed(action, e),
        }
    }
    if let Ok(cm) = &compact {
        let vol = identities::volume(cm);
        ctx.row(action, "volume", fmt_num(vol.value), true);
    }
    csvio::write_identities(ctx.file(action)?, &reports)?;
    for r in &reports {
        ctx.row(action, &r.name, fmt_num(r.defect), r.pass);
    }
    Ok(())
}

fn solve_report(ctx: &mut Ctx<'_>, c: &SolutionCurve) -> anyhow::Result<()> {
    let action = Action::Solve;
    csvio::write_solution(ctx.file(action)?, c)?;
    ctx.row(action, "termination", format!("{:?}", c.termination), c.termination.is_success());
    ctx.row(action, "s_end", fmt_num(c.s_end()), true);
    let sup = c.identity_residual().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = ctx.tol.unwrap_or(verify::TABULATED_RESIDUAL_TOL);
    ctx.row(action, "max_identity_residual", fmt_num(sup), sup < tol);
    let hand = ode::closing_detect(c);
    ctx.row(action, "candidate", hand.candidate, !hand.contradiction);
    if let Some(cls) = &hand.classification {
        ctx.row(action, "case", cls.case, hand.consistent());
    }
    Ok(())
}

/// Output directory of a scenario: `--out`, then the scenario's `output`,
/// then `./solitonlab-out`. Relative scenario paths resolve against `base`.
pub fn output_dir(s: &Scenario, ov: &Overrides, base: &Path) -> PathBuf {
    match (&ov.out, &s.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) if o.is_absolute() => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => PathBuf::from("solitonlab-out"),
    }
}

pub fn any_failed(rows: &[SummaryRow]) -> bool {
    rows.iter().any(|r| !r.pass)
}

/// Scenario label used in file names and the summary.
pub fn scenario_name(s: &Scenario, index: usize) -> String {
    s.name.clone().unwrap_or_else(|| format!("scenario{index}"))
}

pub fn ensure_safe_name(name: &str) -> anyhow::Result<()> {
    if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
        return Err(input_err(format!("scenario name `{name}` cannot be used as a directory name")));
    }
    Ok(())
}
