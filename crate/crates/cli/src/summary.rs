use std::collections::BTreeMap;

use cmvuh::cmv::VerblunskySequence;
use cmvuh::johnson::{deep_in_region, hausdorff_distance, monodromy_verdict, unit};
use cmvuh::output::JsonObject;

/// Grid cells an eigenangle must clear before it counts as inside `U`.
pub const DEEP_CELLS: usize = 2;
/// Oracle margin below which a grid point is not compared.
pub const ORACLE_MARGIN: f64 = 0.02;

pub struct ScanRow {
    pub theta: f64,
    pub class: String,
}

pub struct SpectrumRow {
    pub n: usize,
    pub omega: String,
    pub bulk: Vec<f64>,
}

fn union(rows: &[&SpectrumRow]) -> Vec<f64> {
    let mut v: Vec<f64> = rows.iter().flat_map(|r| r.bulk.iter().copied()).collect();
    v.sort_by(f64::total_cmp);
    v
}

pub struct Summary {
    pub json: String,
    pub deep_failures: usize,
}

/// Scan counts, oracle agreement, and how truncated spectra sit against the scan.
pub fn summarize(seq: &VerblunskySequence, scan: &[ScanRow], spectra: &[SpectrumRow]) -> Summary {
    let thetas: Vec<f64> = scan.iter().map(|r| r.theta).collect();
    let uh: Vec<bool> = scan.iter().map(|r| r.class == "UH").collect();
    let not_uh: Vec<f64> = scan.iter().filter(|r| r.class == "NotUH").map(|r| r.theta).collect();
    let count = |c: &str| scan.iter().filter(|r| r.class == c).count() as i64;

    let oracle = match seq {
        VerblunskySequence::Periodic { .. } => {
            let mut compared = 0i64;
            let mut disagree = 0i64;
            for r in scan {
                if let Ok(v) = monodromy_verdict(seq, unit(r.theta)) {
                    if v.margin > ORACLE_MARGIN {
                        compared += 1;
                        let ok = if v.uh { r.class == "UH" } else { r.class == "NotUH" };
                        disagree += i64::from(!ok);
                    }
                }
            }
            JsonObject::new().int("compared", compared).int("disagreements", disagree).finish()
        }
        _ => "null".into(),
    };

    let mut by_n: BTreeMap<usize, Vec<&SpectrumRow>> = BTreeMap::new();
    for s in spectra {
        by_n.entry(s.n).or_default().push(s);
    }
    let mut deep_failures = 0usize;
    let mut per_n = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    for (n, rows) in &by_n {
        let all = union(rows);
        let deep = if thetas.is_empty() { 0 } else { all.iter().filter(|&&t| deep_in_region(&thetas, &uh, t, DEEP_CELLS)).count() };
        deep_failures += deep;
        let to_scan = hausdorff_distance(&all, &not_uh).ok();
        let mut by_omega: BTreeMap<&str, Vec<&SpectrumRow>> = BTreeMap::new();
        for r in rows {
            by_omega.entry(r.omega.as_str()).or_default().push(r);
        }
        let sets: Vec<Vec<f64>> = by_omega.values().map(|v| union(v)).collect();
        let mut spread: Option<f64> = None;
        for i in 0..sets.len() {
            for j in (i + 1)..sets.len() {
                if let Ok(d) = hausdorff_distance(&sets[i], &sets[j]) {
                    spread = Some(spread.map_or(d, |s: f64| s.max(d)));
                }
            }
        }
        let stab = prev.as_ref().and_then(|p| hausdorff_distance(p, &all).ok());
        per_n.push(
            JsonObject::new()
                .int("n", *n as i64)
                .int("spectra", rows.len() as i64)
                .int("bulk_eigenangles", all.len() as i64)
                .int("deep_uh_eigenangles", deep as i64)
                .opt_num("hausdorff_to_not_uh", to_scan)
                .opt_num("omega_spread", spread)
                .opt_num("hausdorff_to_previous_n", stab)
                .finish(),
        );
        prev = Some(all);
    }
    let json = JsonObject::new()
        .int("grid_size", scan.len() as i64)
        .int("uh", count("UH"))
        .int("not_uh", count("NotUH"))
        .int("undetermined", count("Undetermined"))
        .raw("oracle", &oracle)
        .int("deep_cells", DEEP_CELLS as i64)
        .int("deep_uh_failures", deep_failures as i64)
        .raw("truncations", &format!("[{}]", per_n.join(",")))
        .finish();
    Summary { json, deep_failures }
}
