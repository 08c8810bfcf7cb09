//! Scenario files: JSON with a fixed schema, validated before anything runs.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

use solitonlab_core::geometry::{FiberDescriptor, WarpedMetric};
use solitonlab_core::io;
use solitonlab_core::ode::{Family, OdeProblem, Start};
use solitonlab_core::profile::{Basis, Elementary, RadialGrid, RadialProfile, StencilOrder};
use solitonlab_core::verify::SolitonSpec;

/// A problem with the user's input. Maps to exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_err(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Curvature,
    Verify,
    Classify,
    Chart,
    Identities,
    Solve,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Curvature => "curvature",
            Action::Verify => "verify",
            Action::Classify => "classify",
            Action::Chart => "chart",
            Action::Identities => "identities",
            Action::Solve => "solve",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FiberSpec {
    Named(String),
    Scalar(f64),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub nodes: usize,
    #[serde(default)]
    pub spacing: Option<String>,
}

/// A built-in analytic profile, a CSV file, or a sum of profiles.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub name: Option<String>,
    pub csv: Option<PathBuf>,
    pub order: Option<usize>,
    pub sum: Option<Vec<ProfileSpec>>,
    pub amp: Option<f64>,
    pub freq: Option<f64>,
    pub shift: Option<f64>,
    pub offset: Option<f64>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub coef: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolitonSpecInput {
    Conformal,
    Yamabe { lambda: f64 },
    KYamabe { k: usize, lambda: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StartSpec {
    Named(String),
    Cylinder { w0: f64, a0: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    pub family: String,
    pub k: Option<usize>,
    pub lambda: f64,
    pub start: Option<StartSpec>,
    pub span: f64,
    pub nodes: Option<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// JSON pointer into the scenario, e.g. `/solve/lambda`.
    pub path: String,
    pub values: Option<Vec<Value>>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: Option<String>,
    pub n: usize,
    pub fiber: Option<FiberSpec>,
    pub grid: Option<GridSpec>,
    pub warp: Option<ProfileSpec>,
    pub potential: Option<ProfileSpec>,
    pub soliton: Option<SolitonSpecInput>,
    pub actions: Vec<Action>,
    pub solve: Option<SolveSpec>,
    pub tolerance: Option<f64>,
    pub output: Option<PathBuf>,
    pub sweep: Option<Vec<SweepAxis>>,
}

/// Overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
}

/// One-based line of the first occurrence of `"key"` in `text`.
pub fn line_of(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

fn at_line(text: &str, key: &str, msg: impl fmt::Display) -> anyhow::Error {
    match line_of(text, key) {
        Some(l) => input_err(format!("line {l}: {msg}")),
        None => input_err(msg.to_string()),
    }
}

fn json_error(e: serde_json::Error) -> anyhow::Error {
    input_err(format!("line {}, column {}: {e}", e.line(), e.column()))
}

/// Parses a scenario file: either one scenario object or an array of them.
/// Relative CSV paths are resolved against `base`.
pub fn parse(text: &str, base: &Path) -> anyhow::Result<Vec<(Value, Scenario)>> {
    let value: Value = serde_json::from_str(text).map_err(json_error)?;
    let items = match value {
        Value::Array(items) => items,
        other => vec![other],
    };
    if items.is_empty() {
        return Err(input_err("line 1: empty scenario list"));
    }
    // Deserializing from the text again keeps serde's line numbers for
    // schema errors.
    let typed: Vec<Scenario> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text).map_err(json_error)?
    } else {
        vec![serde_json::from_str(text).map_err(json_error)?]
    };
    for s in &typed {
        validate(s, text, base)?;
    }
    Ok(items.into_iter().zip(typed).collect())
}

pub fn validate(s: &Scenario, text: &str, base: &Path) -> anyhow::Result<()> {
    if s.n < 3 {
        return Err(at_line(text, "n", format!("n = {} is not supported; n >= 3 is required", s.n)));
    }
    if s.actions.is_empty() {
        return Err(at_line(text, "actions", "at least one action is required"));
    }
    let needs_pair = s.actions.iter().any(|a| *a != Action::Solve);
    if s.actions.contains(&Action::Solve) && s.solve.is_none() {
        return Err(at_line(text, "actions", "action `solve` needs a `solve` block"));
    }
    if needs_pair && s.warp.is_none() && s.solve.is_none() {
        return Err(at_line(text, "actions", "a `warp` profile (or a `solve` block) is required"));
    }
    if let Some(w) = &s.warp {
        check_profile(w, text, "warp", base)?;
        if w.csv.is_none() && s.grid.is_none() {
            return Err(at_line(text, "warp", "an analytic warp needs a `grid` block"));
        }
    }
    if let Some(p) = &s.potential {
        check_profile(p, text, "potential", base)?;
    }
    if let Some(SolitonSpecInput::KYamabe { k, .. }) = s.soliton {
        if k == 0 || k > s.n {
            return Err(at_line(text, "k", format!("k = {k} is outside 1..={}", s.n)));
        }
    }
    if let Some(sv) = &s.solve {
        solve_family(sv, s.n).map_err(|e| at_line(text, "family", e))?;
        if !(sv.span > 0.0) {
            return Err(at_line(text, "span", "span must be positive"));
        }
    }
    if let Some(t) = s.tolerance {
        if !(t > 0.0) {
            return Err(at_line(text, "tolerance", "tolerance must be positive"));
        }
    }
    Ok(())
}

fn check_profile(p: &ProfileSpec, text: &str, key: &str, base: &Path) -> anyhow::Result<()> {
    let sources = [p.name.is_some(), p.csv.is_some(), p.sum.is_some()].iter().filter(|b| **b).count();
    if sources != 1 {
        return Err(at_line(text, key, "a profile needs exactly one of `name`, `csv` or `sum`"));
    }
    if let Some(path) = &p.csv {
        if !resolve(path, base).exists() {
            return Err(at_line(text, "csv", format!("file `{}` does not exist", path.display())));
        }
    }
    if let Some(name) = &p.name {
        elementary(p).map_err(|_| at_line(text, key, format!("unknown profile name `{name}`")))?;
    }
    if let Some(parts) = &p.sum {
        for q in parts {
            check_profile(q, text, key, base)?;
        }
    }
    Ok(())
}

/// Analytic profile from a name and parameters. `amp * g(freq (r - shift)) + offset`
/// for the transcendental names; `slope r + intercept` and `coef r^2 + offset`
/// for the polynomial ones.
pub fn elementary(p: &ProfileSpec) -> anyhow::Result<Elementary> {
    if let Some(parts) = &p.sum {
        let mut acc = Elementary::constant(0.0);
        for q in parts {
            acc = acc.plus(elementary(q)?);
        }
        return Ok(acc);
    }
    let name = p.name.as_deref().ok_or_else(|| input_err("profile has no name"))?;
    let (amp, freq, shift, offset) = (p.amp.unwrap_or(1.0), p.freq.unwrap_or(1.0), p.shift.unwrap_or(0.0), p.offset.unwrap_or(0.0));
    let basis = match name {
        "linear" => return Ok(Elementary::linear(p.slope.unwrap_or(1.0), p.intercept.unwrap_or(0.0))),
        "quadratic" => return Ok(Elementary::quadratic(p.coef.unwrap_or(1.0)).plus(Elementary::constant(offset))),
        "constant" => return Ok(Elementary::constant(offset + amp)),
        "sin" => Basis::Sin,
        "cos" => Basis::Cos,
        "sinh" => Basis::Sinh,
        "cosh" => Basis::Cosh,
        "exp" => Basis::Exp,
        other => return Err(input_err(format!("unknown profile name `{other}`"))),
    };
    let e = Elementary::term(basis, amp, freq, shift);
    Ok(if offset != 0.0 { e.plus(Elementary::constant(offset)) } else { e })
}

pub fn fiber(s: &Scenario) -> anyhow::Result<FiberDescriptor> {
    let f = match &s.fiber {
        None => FiberDescriptor::round_sphere(s.n),
        Some(FiberSpec::Named(name)) => match name.as_str() {
            "round" | "sphere" => FiberDescriptor::round_sphere(s.n),
            "flat" => FiberDescriptor::flat(s.n),
            other => return Err(input_err(format!("unknown fiber `{other}` (round, flat or a number)"))),
        },
        Some(FiberSpec::Scalar(r)) => FiberDescriptor::constant_scalar(s.n, *r),
    };
    f.map_err(|e| input_err(e.to_string()))
}

pub fn grid(spec: &GridSpec, ov: &Overrides) -> anyhow::Result<RadialGrid> {
    let nodes = ov.grid.unwrap_or(spec.nodes);
    let g = match spec.spacing.as_deref().unwrap_or("uniform") {
        "uniform" => RadialGrid::uniform(spec.r_min, spec.r_max, nodes),
        "chebyshev" => RadialGrid::chebyshev(spec.r_min, spec.r_max, nodes),
        other => return Err(input_err(format!("unknown spacing `{other}`"))),
    };
    g.map_err(|e| input_err(e.to_string()))
}

fn resolve(path: &Path, base: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn stencil(p: &ProfileSpec) -> anyhow::Result<StencilOrder> {
    StencilOrder::from_usize(p.order.unwrap_or(4)).map_err(|e| input_err(e.to_string()))
}

fn load_profile(p: &ProfileSpec, grid: Option<&RadialGrid>, base: &Path) -> anyhow::Result<RadialProfile> {
    if let Some(path) = &p.csv {
        let path = resolve(path, base);
        return io::read_profile_file(&path, stencil(p)?).map_err(|e| input_err(format!("{}: {e}", path.display())));
    }
    let g = grid.ok_or_else(|| input_err("analytic profile needs a grid"))?;
    RadialProfile::elementary(g.clone(), &elementary(p)?).map_err(|e| input_err(e.to_string()))
}

/// `f = ∫ w` with `f' = w`, `f'' = w'`, `f''' = w''`. Values by the
/// two-point Hermite rule, fourth order on smooth warps.
pub fn potential_from_warp(w: &RadialProfile) -> anyhow::Result<RadialProfile> {
    let x = w.nodes();
    let mut f = vec![0.0; x.len()];
    for i in 1..x.len() {
        let h = x[i] - x[i - 1];
        f[i] = f[i - 1] + 0.5 * h * (w.values()[i - 1] + w.values()[i]) + h * h / 12.0 * (w.d1()[i - 1] - w.d1()[i]);
    }
    RadialProfile::tabulated(w.grid().clone(), f, w.values().to_vec(), w.d1().to_vec(), w.d2().to_vec())
        .map_err(|e| input_err(e.to_string()))
}

/// Metric and potential described by the scenario. Without a potential the
/// normalized one `f' = w` is used.
pub fn pair(s: &Scenario, ov: &Overrides, base: &Path) -> anyhow::Result<(WarpedMetric, RadialProfile)> {
    let wspec = s.warp.as_ref().ok_or_else(|| input_err("no warp profile"))?;
    let grid = s.grid.as_ref().map(|g| grid(g, ov)).transpose()?;
    let warp = load_profile(wspec, grid.as_ref(), base)?;
    let shared = warp.grid().clone();
    let metric = WarpedMetric::new(s.n, warp, fiber(s)?).map_err(|e| input_err(e.to_string()))?;
    let f = match &s.potential {
        Some(p) if p.csv.is_some() => load_profile(p, None, base)?,
        Some(p) => load_profile(p, Some(&shared), base)?,
        None => {
            let w = metric.warp();
            match (wspec.csv.is_none()).then(|| elementary(wspec)).transpose()? {
                Some(e) => match e.antiderivative() {
                    Ok(anti) => RadialProfile::elementary(shared, &anti).map_err(|e| input_err(e.to_string()))?,
                    Err(_) => potential_from_warp(w)?,
                },
                None => potential_from_warp(w)?,
            }
        }
    };
    Ok((metric, f))
}

/// The structure to verify; `None` means the plain conformal equation.
/// A scenario that only solves verifies the solved family by default.
pub fn soliton_spec(s: &Scenario) -> Option<SolitonSpec> {
    match &s.soliton {
        Some(SolitonSpecInput::Yamabe { lambda }) => Some(SolitonSpec::Yamabe { lambda: *lambda }),
        Some(SolitonSpecInput::KYamabe { k, lambda }) => Some(SolitonSpec::KYamabe { k: *k, lambda: *lambda }),
        Some(SolitonSpecInput::Conformal) => None,
        None => match &s.solve {
            Some(sv) if s.warp.is_none() => solve_family(sv, s.n).ok().map(|f| f.soliton_spec(sv.lambda)),
            _ => None,
        },
    }
}

pub fn solve_family(sv: &SolveSpec, n: usize) -> Result<Family, String> {
    match sv.family.as_str() {
        "yamabe" => Ok(Family::Yamabe),
        "k_yamabe" => {
            let k = sv.k.ok_or("family `k_yamabe` needs `k`")?;
            if k == 0 || k > n {
                return Err(format!("k = {k} is outside 1..={n}"));
            }
            Ok(Family::KYamabe(k))
        }
        other => Err(format!("unknown family `{other}` (yamabe or k_yamabe)")),
    }
}

pub fn ode_problem(s: &Scenario, ov: &Overrides) -> anyhow::Result<OdeProblem> {
    let sv = s.solve.as_ref().ok_or_else(|| input_err("no solve block"))?;
    let family = solve_family(sv, s.n).map_err(input_err)?;
    let start = match &sv.start {
        None => Start::SmoothOrigin,
        Some(StartSpec::Named(name)) if name == "origin" => Start::SmoothOrigin,
        Some(StartSpec::Named(other)) => return Err(input_err(format!("unknown start `{other}`"))),
        Some(StartSpec::Cylinder { w0, a0 }) => Start::Cylinder { w0: *w0, a0: *a0 },
    };
    let mut p = OdeProblem::new(s.n, family, sv.lambda, start, sv.span);
    if let Some(t) = sv.tolerance {
        p = p.with_tolerance(t);
    }
    if let Some(nodes) = ov.grid.or(sv.nodes) {
        p = p.with_output_nodes(nodes);
    }
    Ok(p)
}

/// Expands the `sweep` axes into the cartesian product of scenario values,
/// each paired with a label such as `solve.lambda=-0.5`.
pub fn expand_sweep(raw: &Value, axes: &[SweepAxis]) -> anyhow::Result<Vec<(String, Value)>> {
    let mut out = vec![(String::new(), raw.clone())];
    for axis in axes {
        let values: Vec<Value> = match (&axis.values, axis.from, axis.to, axis.steps) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(steps)) if steps >= 1 => (0..steps)
                .map(|i| {
                    let t = if steps == 1 { 0.0 } else { i as f64 / (steps - 1) as f64 };
                    Value::from(a + (b - a) * t)
                })
                .collect(),
            _ => return Err(input_err(format!("sweep axis `{}` needs `values` or `from`/`to`/`steps`", axis.path))),
        };
        if values.is_empty() {
            return Err(input_err(format!("sweep axis `{}` has no values", axis.path)));
        }
        let mut next = Vec::new();
        for (label, base) in &out {
            for v in &values {
                let mut doc = base.clone();
                let slot = doc
                    .pointer_mut(&axis.path)
                    .ok_or_else(|| input_err(format!("sweep path `{}` does not exist in the scenario", axis.path)))?;
                *slot = v.clone();
                let key = axis.path.trim_start_matches('/').replace('/', ".");
                let sep = if label.is_empty() { "" } else { " " };
                next.push((format!("{label}{sep}{key}={v}"), doc));
            }
        }
        out = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_errors_carry_lines() {
        let text = "{\n  \"n\": 3,\n  \"actions\": [\"verify\"],\n  \"bogus\": 1\n}";
        let err = parse(text, Path::new(".")).unwrap_err().to_string();
        assert!(err.starts_with("line 4"), "{err}");
        let text = "{\n  \"n\": 2,\n  \"actions\": [\"verify\"],\n  \"warp\": {\"name\": \"sin\"},\n  \"grid\": {\"r_min\": 0, \"r_max\": 3, \"nodes\": 33}\n}";
        let err = parse(text, Path::new(".")).unwrap_err().to_string();
        assert!(err.starts_with("line 2"), "{err}");
    }

    #[test]
    fn named_profiles() {
        let p = ProfileSpec { name: Some("sin".into()), amp: Some(2.0), ..Default::default() };
        assert!((elementary(&p).unwrap().value(0.5) - 2.0 * 0.5f64.sin()).abs() < 1e-15);
        let p = ProfileSpec { name: Some("linear".into()), slope: Some(3.0), intercept: Some(1.0), ..Default::default() };
        assert_eq!(elementary(&p).unwrap().value(2.0), 7.0);
        assert!(elementary(&ProfileSpec { name: Some("tan".into()), ..Default::default() }).is_err());
    }

    #[test]
    fn hermite_potential_is_fourth_order() {
        let err = |nodes| {
            let g = RadialGrid::uniform(0.0, 3.0, nodes).unwrap();
            let w = RadialProfile::sampled(g.clone(), g.nodes().iter().map(|r| r.sin()).collect(), StencilOrder::Six).unwrap();
            let f = potential_from_warp(&w).unwrap();
            f.values().iter().zip(g.nodes()).fold(0.0f64, |a, (v, r)| a.max((v - (1.0 - r.cos())).abs()))
        };
        let (a, b) = (err(65), err(129));
        assert!((a / b).log2() > 3.8, "{a} {b}");
    }

    #[test]
    fn sweep_expansion() {
        let raw: Value = serde_json::json!({"n": 3, "solve": {"lambda": 0.0}});
        let axes = vec![
            SweepAxis { path: "/solve/lambda".into(), values: None, from: Some(-1.0), to: Some(1.0), steps: Some(3) },
            SweepAxis { path: "/n".into(), values: Some(vec![3.into(), 4.into()]), from: None, to: None, steps: None },
        ];
        let v = expand_sweep(&raw, &axes).unwrap();
        assert_eq!(v.len(), 6);
        assert_eq!(v[5].1["n"], 4);
        assert_eq!(v[5].1["solve"]["lambda"], 1.0);
        assert_eq!(v[0].0, "solve.lambda=-1.0 n=3");
        let bad = vec![SweepAxis { path: "/nope".into(), values: Some(vec![1.into()]), from: None, to: None, steps: None }];
        assert!(expand_sweep(&raw, &bad).is_err());
    }
}
