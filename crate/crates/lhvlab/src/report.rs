//! JSON, CSV and text rendering of bounds tables and verification reports.

use std::fmt::Write as _;

use lhv_core::bell::BoundsRow;
use lhv_core::montecarlo::McEstimate;
use lhv_core::povm::RankOnePovm;
use lhv_core::qcore::ProjectiveMeasurement;
use lhv_core::{CMatrix, CVector, RMatrix};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};

/// Row-major `[[re, im], ...]` rows.
pub fn complex_matrix_json(m: &CMatrix) -> Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect();
    json!(rows)
}

pub fn complex_vector_json(v: &CVector) -> Value {
    json!(v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
}

pub fn real_matrix_json(m: &RMatrix) -> Value {
    let rows: Vec<Vec<f64>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect();
    json!(rows)
}

pub fn projective_json(m: &ProjectiveMeasurement) -> Value {
    json!(m
        .projectors()
        .iter()
        .map(complex_matrix_json)
        .collect::<Vec<_>>())
}

/// `[{weight, direction}, ...]`.
pub fn povm_json(m: &RankOnePovm) -> Value {
    let elems: Vec<Value> = m
        .weights()
        .iter()
        .zip(m.directions())
        .map(|(w, v)| json!({ "weight": w, "direction": complex_vector_json(v) }))
        .collect();
    json!(elems)
}

/// One Monte Carlo run against its oracle.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub d: usize,
    pub samples: u64,
    pub seed: u64,
    pub estimate: Value,
    pub stderr: Value,
    pub oracle: Value,
    pub max_sigma_deviation: f64,
    pub total_variation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schmidt: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measurements: Option<Value>,
}

impl RunRecord {
    pub fn new(d: usize, seed: u64, est: &McEstimate, oracle: &RMatrix) -> Self {
        Self {
            d,
            samples: est.samples,
            seed,
            estimate: real_matrix_json(&est.estimate),
            stderr: real_matrix_json(&est.stderr),
            oracle: real_matrix_json(oracle),
            max_sigma_deviation: est.max_sigma_deviation(oracle),
            total_variation: est.total_variation(oracle),
            schmidt: None,
            measurements: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    /// Deviation in standard errors.
    Sigma,
    /// Absolute deviation.
    Abs,
}

/// One verification case. Passes iff `metric ≤ threshold`.
#[derive(Debug, Clone, Serialize)]
pub struct CaseRecord {
    pub d: usize,
    pub check: String,
    pub descriptor: String,
    pub metric: f64,
    pub threshold: f64,
    pub unit: Unit,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunRecord>,
}

impl CaseRecord {
    pub fn new(
        d: usize,
        check: &str,
        descriptor: String,
        metric: f64,
        threshold: f64,
        unit: Unit,
    ) -> Self {
        Self {
            d,
            check: check.to_string(),
            descriptor,
            metric,
            threshold,
            unit,
            // NaN fails
            pass: metric <= threshold,
            run: None,
        }
    }

    pub fn from_run(check: &str, descriptor: String, sigma_tol: f64, run: RunRecord) -> Self {
        let mut c = Self::new(
            run.d,
            check,
            descriptor,
            run.max_sigma_deviation,
            sigma_tol,
            Unit::Sigma,
        );
        c.run = Some(run);
        c
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Summary {
    pub cases: usize,
    pub failures: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossoverRow {
    pub d: usize,
    pub p_chsh: f64,
    pub p_phi: f64,
    pub chsh_below_phi: bool,
}

#[derive(Debug, Clone)]
pub enum Body {
    Bounds(Vec<BoundsRow>),
    Crossover(Vec<CrossoverRow>),
    Cases(Vec<CaseRecord>),
}

#[derive(Debug, Clone)]
pub struct Report {
    pub config: RunConfig,
    pub body: Body,
    pub summary: Summary,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.summary.failures == 0
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
            Format::Text => self.to_text(),
        }
    }

    pub fn to_json_value(&self) -> Value {
        let c = &self.config;
        let config = json!({
            "dims": c.dims,
            "samples": c.samples,
            "seed": c.seed,
            "sigma_tolerance": c.sigma_tolerance,
            "format": c.format,
            "output_path": c.output_path,
            "chunk_size": c.chunk_size,
            "cases": c.cases,
            "restarts": c.restarts,
        });
        let (key, items) = match &self.body {
            Body::Bounds(rows) => (
                "rows",
                json!(rows.iter().map(bounds_row_json).collect::<Vec<_>>()),
            ),
            Body::Crossover(rows) => ("rows", json!(rows)),
            Body::Cases(cases) => ("cases", json!(cases)),
        };
        let mut out = serde_json::Map::new();
        out.insert("command".into(), json!(c.command.name()));
        out.insert("config".into(), config);
        out.insert(key.into(), items);
        out.insert("summary".into(), json!(self.summary));
        Value::Object(out)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(&self.to_json_value()).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let write = |w: &mut csv::Writer<Vec<u8>>, rec: Vec<String>| {
            w.write_record(rec).expect("in-memory write")
        };
        match &self.body {
            Body::Bounds(rows) => {
                write(
                    &mut w,
                    BOUNDS_COLUMNS.iter().map(|s| s.to_string()).collect(),
                );
                for r in rows {
                    let mut rec = vec![r.d.to_string()];
                    rec.extend(bounds_values(r).iter().map(|&x| fmt_sig(x)));
                    write(&mut w, rec);
                }
            }
            Body::Crossover(rows) => {
                write(
                    &mut w,
                    ["d", "p_chsh", "p_phi", "chsh_below_phi"]
                        .map(String::from)
                        .to_vec(),
                );
                for r in rows {
                    write(
                        &mut w,
                        vec![
                            r.d.to_string(),
                            fmt_sig(r.p_chsh),
                            fmt_sig(r.p_phi),
                            r.chsh_below_phi.to_string(),
                        ],
                    );
                }
            }
            Body::Cases(cases) => {
                write(
                    &mut w,
                    [
                        "d",
                        "check",
                        "descriptor",
                        "metric",
                        "threshold",
                        "unit",
                        "pass",
                    ]
                    .map(String::from)
                    .to_vec(),
                );
                for c in cases {
                    write(
                        &mut w,
                        vec![
                            c.d.to_string(),
                            c.check.clone(),
                            c.descriptor.clone(),
                            fmt_sig(c.metric),
                            fmt_sig(c.threshold),
                            unit_name(c.unit).to_string(),
                            c.pass.to_string(),
                        ],
                    );
                }
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "lhvlab {}", self.config.command.name());
        match &self.body {
            Body::Bounds(rows) => {
                let _ = writeln!(
                    s,
                    "{:>9} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11} {:>8}",
                    "d",
                    "p_sep_iso",
                    "p_sep_lo",
                    "p_sep_hi",
                    "p_phi",
                    "p_phi_povm",
                    "p_rho",
                    "p_rho_povm",
                    "p_chsh",
                    "cglmp"
                );
                for r in rows {
                    let _ = writeln!(
                        s,
                        "{:>9} {:>11.5e} {:>11.5e} {:>11.5e} {:>11.5e} {:>11.5e} {:>11.5e} {:>11.5e} {:>11.5e} {:>8.4}",
                        r.d,
                        r.p_sep_iso,
                        r.p_sep_lower,
                        r.p_sep_upper,
                        r.p_phi,
                        r.p_phi_povm,
                        r.p_rho,
                        r.p_rho_povm,
                        r.p_chsh,
                        r.cglmp_const
                    );
                }
                let _ = writeln!(s, "\nasymptotic ratios (→ 1)");
                let _ = writeln!(
                    s,
                    "{:>9} {:>13} {:>13} {:>13} {:>13} {:>13}",
                    "d", "phi·d/ln d", "povm·ed/3", "rho·d²/ln d", "povm·ed²/3", "chsh·(√2−1)d/4"
                );
                for r in rows {
                    let _ = writeln!(
                        s,
                        "{:>9} {:>13.6} {:>13.6} {:>13.6} {:>13.6} {:>13.6}",
                        r.d,
                        r.ratio_phi(),
                        r.ratio_phi_povm(),
                        r.ratio_rho(),
                        r.ratio_rho_povm(),
                        r.ratio_chsh()
                    );
                }
            }
            Body::Crossover(rows) => {
                for r in rows {
                    let _ = writeln!(
                        s,
                        "d = {:>7}  p_chsh = {:.12}  p_phi = {:.12}  {}",
                        r.d,
                        r.p_chsh,
                        r.p_phi,
                        if r.chsh_below_phi {
                            "p_chsh < p_phi"
                        } else {
                            "p_chsh ≥ p_phi"
                        }
                    );
                }
            }
            Body::Cases(cases) => {
                for c in cases {
                    let _ = writeln!(
                        s,
                        "{} d={:<3} {:<22} {:<40} {:>12} ≤ {:<8} {}",
                        if c.pass { "PASS" } else { "FAIL" },
                        c.d,
                        c.check,
                        c.descriptor,
                        fmt_metric(c.metric, c.unit),
                        fmt_sig(c.threshold),
                        unit_name(c.unit)
                    );
                }
            }
        }
        let sm = &self.summary;
        let _ = writeln!(
            s,
            "\n{} cases, {} failures, {} ms",
            sm.cases, sm.failures, sm.wall_ms
        );
        s
    }
}

pub const BOUNDS_COLUMNS: [&str; 15] = [
    "d",
    "p_sep_iso",
    "p_sep_lower",
    "p_sep_upper",
    "p_phi",
    "p_phi_povm",
    "p_rho",
    "p_rho_povm",
    "p_chsh",
    "cglmp_const",
    "ratio_phi",
    "ratio_phi_povm",
    "ratio_rho",
    "ratio_rho_povm",
    "ratio_chsh",
];

fn bounds_values(r: &BoundsRow) -> [f64; 14] {
    [
        r.p_sep_iso,
        r.p_sep_lower,
        r.p_sep_upper,
        r.p_phi,
        r.p_phi_povm,
        r.p_rho,
        r.p_rho_povm,
        r.p_chsh,
        r.cglmp_const,
        r.ratio_phi(),
        r.ratio_phi_povm(),
        r.ratio_rho(),
        r.ratio_rho_povm(),
        r.ratio_chsh(),
    ]
}

pub fn bounds_row_json(r: &BoundsRow) -> Value {
    let mut m = serde_json::Map::new();
    m.insert("d".into(), json!(r.d));
    for (k, v) in BOUNDS_COLUMNS[1..].iter().zip(bounds_values(r)) {
        m.insert((*k).into(), json!(v));
    }
    Value::Object(m)
}

fn unit_name(u: Unit) -> &'static str {
    match u {
        Unit::Sigma => "sigma",
        Unit::Abs => "abs",
    }
}

fn fmt_metric(x: f64, unit: Unit) -> String {
    match unit {
        Unit::Sigma => format!("{x:.3}"),
        Unit::Abs => format!("{x:.3e}"),
    }
}

/// `%.12g`: 12 significant digits, trailing zeros dropped, exponent form
/// outside `[1e-4, 1e12)`.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
