//! CSV and JSON-lines writers; every float is printed with 17 significant digits.

use std::fmt::Write;

use crate::dynamics::BasePoint;
use crate::hyperbolicity::Classification;
use crate::johnson::{BandEdge, ScanPoint, SpectralScan, TruncatedSpectrum};

/// `{:.16e}` for finite values, `NaN` / `inf` / `-inf` otherwise.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// As [`num`], with `null` for non-finite values.
pub fn json_num(x: f64) -> String {
    if x.is_finite() {
        num(x)
    } else {
        "null".into()
    }
}

fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Minimal builder for one JSON object on one line.
#[derive(Default)]
pub struct JsonObject {
    body: String,
}

impl JsonObject {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(&mut self, k: &str) {
        if !self.body.is_empty() {
            self.body.push(',');
        }
        self.body.push_str(&json_str(k));
        self.body.push(':');
    }

    pub fn raw(mut self, k: &str, v: &str) -> Self {
        self.key(k);
        self.body.push_str(v);
        self
    }

    pub fn num(self, k: &str, v: f64) -> Self {
        let v = json_num(v);
        self.raw(k, &v)
    }

    pub fn opt_num(self, k: &str, v: Option<f64>) -> Self {
        let v = v.map_or("null".to_string(), json_num);
        self.raw(k, &v)
    }

    pub fn int(self, k: &str, v: i64) -> Self {
        self.raw(k, &v.to_string())
    }

    pub fn opt_int(self, k: &str, v: Option<i64>) -> Self {
        let v = v.map_or("null".to_string(), |x| x.to_string());
        self.raw(k, &v)
    }

    pub fn bool(self, k: &str, v: bool) -> Self {
        self.raw(k, if v { "true" } else { "false" })
    }

    pub fn str(self, k: &str, v: &str) -> Self {
        let v = json_str(v);
        self.raw(k, &v)
    }

    pub fn nums(self, k: &str, v: &[f64]) -> Self {
        let items: Vec<String> = v.iter().map(|x| json_num(*x)).collect();
        self.raw(k, &format!("[{}]", items.join(",")))
    }

    pub fn finish(self) -> String {
        format!("{{{}}}", self.body)
    }
}

pub fn base_point_json(w: &BasePoint) -> String {
    match w {
        BasePoint::OrbitIndex(i) => JsonObject::new().int("orbit_index", *i as i64).finish(),
        BasePoint::CircleCoordinate(x) => JsonObject::new().num("circle_coordinate", *x).finish(),
    }
}

fn base_point_csv(w: &BasePoint) -> String {
    match w {
        BasePoint::OrbitIndex(i) => format!("orbit_index:{i}"),
        BasePoint::CircleCoordinate(x) => format!("circle_coordinate:{}", num(*x)),
    }
}

/// Flat per-point summary shared by the CSV and JSON-lines scan files.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRecord {
    pub theta: f64,
    pub class: &'static str,
    pub margin: f64,
    pub certificate_n: Option<usize>,
    pub epsilon: Option<f64>,
    pub min_max_growth: Option<f64>,
    pub witness_sup_norm: Option<f64>,
    pub witness_horizon: Option<usize>,
    pub splitting_rate: Option<f64>,
    pub splitting_gap: Option<f64>,
}

impl ScanRecord {
    pub fn from_point(p: &ScanPoint, epsilon: f64, slack: f64) -> Self {
        let mut r = ScanRecord {
            theta: p.theta,
            class: p.classification.label(),
            margin: p.margin(epsilon, slack),
            certificate_n: None,
            epsilon: None,
            min_max_growth: None,
            witness_sup_norm: None,
            witness_horizon: None,
            splitting_rate: None,
            splitting_gap: None,
        };
        match &p.classification {
            Classification::Uh(e) => {
                r.certificate_n = Some(e.certificate.n);
                r.epsilon = Some(e.certificate.epsilon);
                r.min_max_growth = Some(e.certificate.min_max_growth);
                r.splitting_rate = Some(e.splitting.rate);
                r.splitting_gap = Some(e.splitting.gap);
            }
            Classification::NotUh(w) => {
                r.witness_sup_norm = Some(w.sup_norm);
                r.witness_horizon = Some(w.horizon);
            }
            Classification::Undetermined(m) => {
                r.certificate_n = Some(m.n);
                r.min_max_growth = Some(m.min_max_growth);
            }
        }
        r
    }
}

pub const SCAN_CSV_HEADER: &str =
    "theta,class,margin,certificate_n,epsilon,min_max_growth,witness_sup_norm,witness_horizon,splitting_rate,splitting_gap";

fn scan_records(scan: &SpectralScan) -> Vec<ScanRecord> {
    let (eps, slack) = (scan.params.search.epsilon, scan.params.search.slack);
    scan.points.iter().map(|p| ScanRecord::from_point(p, eps, slack)).collect()
}

pub fn scan_csv(scan: &SpectralScan) -> String {
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let opt_u = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from(SCAN_CSV_HEADER);
    out.push('\n');
    for r in scan_records(scan) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            num(r.theta),
            r.class,
            num(r.margin),
            opt_u(r.certificate_n),
            opt(r.epsilon),
            opt(r.min_max_growth),
            opt(r.witness_sup_norm),
            opt_u(r.witness_horizon),
            opt(r.splitting_rate),
            opt(r.splitting_gap)
        );
    }
    out
}

pub fn scan_jsonl(scan: &SpectralScan) -> String {
    let mut out = String::new();
    for r in scan_records(scan) {
        let line = JsonObject::new()
            .num("theta", r.theta)
            .str("class", r.class)
            .num("margin", r.margin)
            .opt_int("certificate_n", r.certificate_n.map(|v| v as i64))
            .opt_num("epsilon", r.epsilon)
            .opt_num("min_max_growth", r.min_max_growth)
            .opt_num("witness_sup_norm", r.witness_sup_norm)
            .opt_int("witness_horizon", r.witness_horizon.map(|v| v as i64))
            .opt_num("splitting_rate", r.splitting_rate)
            .opt_num("splitting_gap", r.splitting_gap)
            .finish();
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub const EDGES_CSV_HEADER: &str = "theta,bracket_lo,bracket_hi,entering_spectrum";

pub fn edges_csv(edges: &[BandEdge]) -> String {
    let mut out = String::from(EDGES_CSV_HEADER);
    out.push('\n');
    for e in edges {
        let _ = writeln!(out, "{},{},{},{}", num(e.theta), num(e.bracket.0), num(e.bracket.1), e.entering_spectrum);
    }
    out
}

/// One truncated spectrum with its window metadata; `phase_turns` is the boundary phase `t` in `η = e^{2πit}`.
pub fn spectrum_json(s: &TruncatedSpectrum, phase_turns: f64) -> String {
    let angles = s.eigenangles();
    let boundary: Vec<i64> = s.eigenpairs.iter().enumerate().filter(|(_, e)| e.is_boundary()).map(|(i, _)| i as i64).collect();
    let idx: Vec<String> = boundary.iter().map(|i| i.to_string()).collect();
    let edge: Vec<f64> = s.eigenpairs.iter().map(|e| e.edge_fraction).collect();
    JsonObject::new()
        .int("n", s.n as i64)
        .raw("omega", &base_point_json(&s.omega))
        .num("phase_turns", phase_turns)
        .raw("range", &format!("[{},{}]", s.range.0, s.range.1))
        .num("unitarity_residual", s.unitarity_residual)
        .num("max_residual", s.max_residual)
        .nums("eigenangles", &angles)
        .nums("edge_fraction", &edge)
        .raw("boundary_indices", &format!("[{}]", idx.join(",")))
        .finish()
}

pub const SPECTRA_CSV_HEADER: &str = "n,omega,phase_turns,angle,edge_fraction,boundary,residual";

pub fn spectrum_csv_rows(s: &TruncatedSpectrum, phase_turns: f64, out: &mut String) {
    let w = base_point_csv(&s.omega);
    for e in &s.eigenpairs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.n,
            w,
            num(phase_turns),
            num(e.angle),
            num(e.edge_fraction),
            e.is_boundary(),
            num(e.residual)
        );
    }
}
