//! CSV formats. Numbers are written with 17 significant digits so that every
//! value round-trips exactly.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::charts::ConformalChart;
use crate::error::{Result, SolitonError};
use crate::geometry::CurvatureReport;
use crate::identities::IdentityReport;
use crate::ode::SolutionCurve;
use crate::profile::{RadialGrid, RadialProfile, StencilOrder};
use crate::verify::ResidualReport;

/// Round-trip formatting: 17 significant digits in scientific notation.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_rows<W: Write, I>(out: W, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Profile columns `r,f,f1,f2,f3`.
pub fn write_profile<W: Write>(out: W, p: &RadialProfile) -> Result<()> {
    let rows = (0..p.len()).map(|i| {
        let j = p.jet_at_node(i);
        vec![fmt_num(p.nodes()[i]), fmt_num(j.value), fmt_num(j.d1), fmt_num(j.d2), fmt_num(j.d3)]
    });
    write_rows(out, &strings(&["r", "f", "f1", "f2", "f3"]), rows)
}

/// Reads a profile with columns `r,f` and optionally `f1,f2,f3`. All three
/// derivative columns make it tabulated; otherwise derivatives come from
/// finite differences of order `order`. Lines starting with `#` are skipped.
pub fn read_profile<R: Read>(input: R, order: StencilOrder) -> Result<RadialProfile> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let r_col = col("r").ok_or_else(|| SolitonError::input("profile CSV needs an `r` column"))?;
    let f_col = col("f").ok_or_else(|| SolitonError::input("profile CSV needs an `f` column"))?;
    let derivs = [col("f1"), col("f2"), col("f3")];
    let tabulated = derivs.iter().all(Option::is_some);
    let mut data: Vec<[f64; 5]> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |c: usize| -> Result<f64> {
            let s = rec.get(c).unwrap_or("");
            s.parse::<f64>()
                .map_err(|_| SolitonError::input(format!("row {}: `{s}` is not a number", line + 2)))
        };
        let mut row = [get(r_col)?, get(f_col)?, 0.0, 0.0, 0.0];
        if tabulated {
            for (k, c) in derivs.iter().enumerate() {
                row[2 + k] = get(c.expect("checked"))?;
            }
        }
        data.push(row);
    }
    let grid = RadialGrid::from_nodes(data.iter().map(|r| r[0]).collect())?;
    let column = |k: usize| data.iter().map(|r| r[k]).collect::<Vec<f64>>();
    if tabulated {
        RadialProfile::tabulated(grid, column(1), column(2), column(3), column(4))
    } else {
        RadialProfile::sampled(grid, column(1), order)
    }
}

pub fn read_profile_file(path: &Path, order: StencilOrder) -> Result<RadialProfile> {
    read_profile(File::open(path)?, order)
}

/// Curvature columns `r,ric_rr,ric_tan,scalar,mu_r,mu_t,sigma_1..sigma_n`.
pub fn write_curvature<W: Write>(out: W, reports: &[CurvatureReport]) -> Result<()> {
    let n = reports.first().map_or(0, |c| c.sigma.len());
    let mut header = strings(&["r", "ric_rr", "ric_tan", "scalar", "mu_r", "mu_t"]);
    header.extend((1..=n).map(|k| format!("sigma_{k}")));
    let rows = reports.iter().map(|c| {
        let mut row = vec![fmt_num(c.r), fmt_num(c.ric_rr), fmt_num(c.ric_tan), fmt_num(c.scalar), fmt_num(c.mu_r), fmt_num(c.mu_t)];
        row.extend(c.sigma.iter().map(|&v| fmt_num(v)));
        row
    });
    write_rows(out, &header, rows)
}

/// Residual columns `r,radial,tangential`.
pub fn write_residual<W: Write>(out: W, rep: &ResidualReport) -> Result<()> {
    let rows = (0..rep.r.len()).map(|i| vec![fmt_num(rep.r[i]), fmt_num(rep.radial[i]), fmt_num(rep.tangential[i])]);
    write_rows(out, &strings(&["r", "radial", "tangential"]), rows)
}

/// Chart columns `t,r,factor`.
pub fn write_chart<W: Write>(out: W, chart: &ConformalChart) -> Result<()> {
    let rows = (0..chart.t.len()).map(|i| vec![fmt_num(chart.t[i]), fmt_num(chart.r[i]), fmt_num(chart.factor[i])]);
    write_rows(out, &strings(&["t", "r", "factor"]), rows)
}

/// Solution columns `s,w,w1,R,sigma_k,f`, followed by the event log as `#`
/// comment lines.
pub fn write_solution<W: Write>(mut out: W, curve: &SolutionCurve) -> Result<()> {
    let rows = (0..curve.s.len()).map(|i| {
        vec![
            fmt_num(curve.s[i]),
            fmt_num(curve.w[i]),
            fmt_num(curve.w1[i]),
            fmt_num(curve.scalar[i]),
            fmt_num(curve.sigma[i]),
            fmt_num(curve.f[i]),
        ]
    });
    write_rows(&mut out, &strings(&["s", "w", "w1", "R", "sigma_k", "f"]), rows)?;
    writeln!(out, "# termination: {:?}", curve.termination)?;
    writeln!(out, "# steps: {} accepted, {} rejected", curve.accepted_steps, curve.rejected_steps)?;
    for e in &curve.events {
        writeln!(out, "# event: {} at s = {}", e.kind, fmt_num(e.s))?;
    }
    Ok(())
}

/// Identity columns `identity,lhs,rhs,defect,estimate,pass`.
pub fn write_identities<W: Write>(out: W, reports: &[IdentityReport]) -> Result<()> {
    let rows = reports.iter().map(|r| {
        vec![r.name.clone(), fmt_num(r.lhs), fmt_num(r.rhs), fmt_num(r.defect), fmt_num(r.estimate), r.pass.to_string()]
    });
    write_rows(out, &strings(&["identity", "lhs", "rhs", "defect", "estimate", "pass"]), rows)
}

/// A numeric table read back from any of the CSV outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

/// Reads a CSV with a header row; non-numeric cells become NaN and `#`
/// lines are skipped.
pub fn read_table<R: Read>(input: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut columns = vec![Vec::new(); headers.len()];
    for rec in rdr.records() {
        let rec = rec?;
        for (i, col) in columns.iter_mut().enumerate() {
            col.push(rec.get(i).and_then(|s| s.parse::<f64>().ok()).unwrap_or(f64::NAN));
        }
    }
    Ok(Table { headers, columns })
}
