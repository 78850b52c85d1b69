//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use cmvuh::cmv::{solve_difference, weyl_cutoff_residual, VerblunskySequence};
use cmvuh::dynamics::BasePoint;
use cmvuh::hyperbolicity::{classify_uh, robustness_probe, Classification, ClassifyParams};
use cmvuh::johnson::{
    band_edges, bounded_orbit_to_eigenfunction, deep_in_region, gz_cocycle, hausdorff_distance, monodromy_verdict,
    szego_cocycle, truncated_spectrum, uh_scan, uniform_grid, unit, SpectralScan,
};
use cmvuh::linalg::{c, C64};
use cmvuh::par::Execution;
use cmvuh::suites;

const GRID: usize = 720;
const ORACLE_MARGIN: f64 = 0.02;

struct Outcome {
    passed: bool,
    detail: String,
}

fn report(id: usize, name: &str, start: Instant, limit_s: f64, out: Outcome) -> bool {
    let secs = start.elapsed().as_secs_f64();
    let ok = out.passed && secs < limit_s;
    println!(
        "{} criterion {id} {name}: {} [{secs:.1}s / {limit_s:.0}s]",
        if ok { "PASS" } else { "FAIL" },
        out.detail
    );
    ok
}

fn families() -> Vec<(&'static str, VerblunskySequence)> {
    let p = |cs: Vec<C64>| VerblunskySequence::Periodic { coefficients: cs };
    vec![
        ("const-0.5", p(vec![c(0.5, 0.0)])),
        ("p2-real", p(vec![c(0.5, 0.0), c(-0.3, 0.0)])),
        ("p2-complex", p(vec![c(0.8, 0.0), c(0.0, 0.25)])),
        ("p3", p(vec![c(0.0, 0.4), c(0.2, 0.0), c(-0.5, 0.0)])),
        ("p4", p(vec![c(0.6, 0.0), c(0.3, 0.3), c(-0.2, 0.0), c(0.0, 0.1)])),
    ]
}

fn period(seq: &VerblunskySequence) -> usize {
    match seq {
        VerblunskySequence::Periodic { coefficients } => coefficients.len(),
        _ => unreachable!(),
    }
}

fn phases() -> Vec<(C64, C64)> {
    [0.0, 0.25, 0.5, 0.75].iter().map(|t| (unit(TAU * t), unit(TAU * t))).collect()
}

fn union_bulk(seq: &VerblunskySequence, omega: &BasePoint, n: usize) -> Result<Vec<f64>, String> {
    let mut all = Vec::new();
    for ph in phases() {
        let s = truncated_spectrum(seq, omega, n, ph).map_err(|e| e.to_string())?;
        all.extend(s.bulk());
    }
    Ok(all)
}

fn criterion_1() -> Outcome {
    let mut checks = suites::identity_suite(1, 10_000);
    let seq = VerblunskySequence::Periodic { coefficients: vec![c(0.3, -0.2), c(-0.5, 0.1), c(0.0, 0.6)] };
    checks.extend(suites::cocycle_suite(&seq, 1, 10_000));
    let rot = VerblunskySequence::Rotation { frequency: golden(), amplitude: 0.5, phase: 0.0 };
    checks.extend(suites::cocycle_suite(&rot, 2, 10_000));
    summarize_checks(&checks)
}

fn criterion_2() -> Outcome {
    summarize_checks(&suites::singular_suite(2, 1000))
}

fn summarize_checks(checks: &[suites::PropertyCheck]) -> Outcome {
    let detail = checks.iter().map(|k| format!("{}={:.2e}", k.name, k.max_deviation)).collect::<Vec<_>>().join(", ");
    Outcome { passed: checks.iter().all(|k| k.passed), detail }
}

struct FamilyScan {
    name: &'static str,
    seq: VerblunskySequence,
    scan: SpectralScan,
}

fn scan_families(params: &ClassifyParams) -> Vec<FamilyScan> {
    families()
        .into_iter()
        .map(|(name, seq)| {
            let scan = uh_scan(&seq, &uniform_grid(GRID), params, Execution::default()).expect("scan runs");
            FamilyScan { name, seq, scan }
        })
        .collect()
}

/// Criteria 3 and 4 share one scan per family.
fn criteria_3_4(scans: &[FamilyScan]) -> (Outcome, Outcome) {
    let mut compared = 0;
    let mut mismatches = Vec::new();
    let mut uh_points = 0;
    let mut worst_invariance: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    let mut worst_rate: f64 = 0.0;
    for f in scans {
        let p = period(&f.seq) as f64;
        for pt in &f.scan.points {
            let v = monodromy_verdict(&f.seq, unit(pt.theta)).expect("oracle");
            if v.margin <= ORACLE_MARGIN {
                continue;
            }
            compared += 1;
            let agrees = if v.uh { pt.classification.is_uh() } else { pt.classification.is_not_uh() };
            if !agrees {
                mismatches.push(format!("{}@{:.4}:{}", f.name, pt.theta, pt.classification.label()));
            }
            if let Classification::Uh(ev) = &pt.classification {
                uh_points += 1;
                worst_invariance = worst_invariance.max(ev.report.invariance_stable).max(ev.report.invariance_unstable);
                min_gap = min_gap.min(ev.splitting.gap);
                let expected = v.eigenvalues.0.norm().powf(1.0 / p);
                worst_rate = worst_rate.max((ev.splitting.rate / expected - 1.0).abs());
            }
        }
    }
    let c3 = Outcome {
        passed: mismatches.is_empty() && uh_points > 0 && worst_invariance < 1e-8 && min_gap > 0.0,
        detail: format!(
            "{compared} points compared, {} mismatches {:?}, {uh_points} UH splittings, max invariance {worst_invariance:.2e}, min gap {min_gap:.3e}",
            mismatches.len(),
            mismatches.iter().take(5).collect::<Vec<_>>()
        ),
    };
    let c4 = Outcome {
        passed: uh_points > 0 && worst_rate < 0.02,
        detail: format!("{uh_points} UH points, max relative deviation of L from |λ₁|^(1/p) = {worst_rate:.3e}"),
    };
    (c3, c4)
}

fn criterion_5(scan: &SpectralScan, seq: &VerblunskySequence) -> Outcome {
    let cell = TAU / GRID as f64;
    let (e1, e2) = (PI / 3.0, 5.0 * PI / 3.0);
    let in_band = |t: f64| (t / 2.0).cos().abs() <= 3f64.sqrt() / 2.0;
    let mut wrong = 0;
    for pt in &scan.points {
        let near_edge = cmvuh::johnson::arc_distance(pt.theta, e1).min(cmvuh::johnson::arc_distance(pt.theta, e2)) <= cell;
        if !near_edge && pt.classification.is_not_uh() != in_band(pt.theta) {
            wrong += 1;
        }
    }
    let edges = band_edges(seq, scan, 1e-10, Execution::default()).unwrap_or_default();
    let edge_err = [e1, e2]
        .iter()
        .map(|&e| edges.iter().map(|b| cmvuh::johnson::arc_distance(b.theta, e)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let bulk = match union_bulk(seq, &BasePoint::OrbitIndex(0), 256) {
        Ok(b) => b,
        Err(e) => return Outcome { passed: false, detail: e },
    };
    let outside = bulk.iter().filter(|&&t| !(t.rem_euclid(TAU) >= e1 - 0.05 && t.rem_euclid(TAU) <= e2 + 0.05)).count();
    let band: Vec<f64> = (0..=4000).map(|k| e1 + (e2 - e1) * k as f64 / 4000.0).collect();
    let fill = hausdorff_distance(&bulk, &band).unwrap_or(f64::INFINITY);
    Outcome {
        passed: wrong == 0 && edges.len() == 2 && edge_err <= cell && outside == 0 && fill < 0.05,
        detail: format!(
            "{wrong} misclassified away from edges, {} refined edges with max error {edge_err:.2e}, {} bulk angles at N=256, {outside} outside dilated band, Hausdorff fill {fill:.4}",
            edges.len(),
            bulk.len()
        ),
    }
}

fn criterion_6(params: &ClassifyParams) -> (Outcome, FamilyScan) {
    let seq = VerblunskySequence::constant(c(0.0, 0.0));
    let scan = uh_scan(&seq, &uniform_grid(GRID), params, Execution::default()).expect("scan runs");
    let not_uh = scan.points.iter().filter(|p| p.classification.is_not_uh()).count();
    let spec = truncated_spectrum(&seq, &BasePoint::OrbitIndex(0), 256, (c(1.0, 0.0), c(1.0, 0.0))).expect("spectrum");
    let mut a = spec.eigenangles();
    a.sort_by(f64::total_cmp);
    let mut max_gap: f64 = TAU - a[a.len() - 1] + a[0];
    for w in a.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    let mean_gap = TAU / a.len() as f64;
    let out = Outcome {
        passed: not_uh == GRID && max_gap < 3.0 * mean_gap,
        detail: format!("{not_uh}/{GRID} NotUH, {} eigenangles, max gap / mean gap = {:.3}", a.len(), max_gap / mean_gap),
    };
    (out, FamilyScan { name: "free", seq, scan })
}

fn golden() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

fn criterion_7(params: &ClassifyParams) -> (Outcome, FamilyScan) {
    let seq = VerblunskySequence::Rotation { frequency: golden(), amplitude: 0.5, phase: 0.0 };
    let scan = uh_scan(&seq, &uniform_grid(GRID), params, Execution::default()).expect("scan runs");
    let thetas = scan.thetas();
    let flags: Vec<bool> = scan.points.iter().map(|p| p.classification.is_uh()).collect();
    let mut spectra = Vec::new();
    let mut failures = 0;
    for k in 0..5 {
        let omega = BasePoint::circle(k as f64 / 5.0 + 0.1);
        let bulk = match union_bulk(&seq, &omega, 512) {
            Ok(b) => b,
            Err(e) => return (Outcome { passed: false, detail: e }, FamilyScan { name: "golden", seq, scan }),
        };
        failures += bulk.iter().filter(|&&t| deep_in_region(&thetas, &flags, t, 2)).count();
        spectra.push(bulk);
    }
    let mut worst: f64 = 0.0;
    for i in 0..spectra.len() {
        for j in i + 1..spectra.len() {
            worst = worst.max(hausdorff_distance(&spectra[i], &spectra[j]).unwrap_or(f64::INFINITY));
        }
    }
    let counts = |f: fn(&Classification) -> bool| scan.points.iter().filter(|p| f(&p.classification)).count();
    let out = Outcome {
        passed: worst < 0.05 && failures == 0,
        detail: format!(
            "scan UH/NotUH/Undetermined = {}/{}/{}, max pairwise Hausdorff at N=512 = {worst:.4}, {failures} deep-UH eigenangles",
            counts(Classification::is_uh),
            counts(Classification::is_not_uh),
            counts(|c| matches!(c, Classification::Undetermined(_)))
        ),
    };
    (out, FamilyScan { name: "golden", seq, scan })
}

fn criterion_8(scans: &[&FamilyScan], params: &ClassifyParams) -> Outcome {
    let per_family = 50usize.div_ceil(scans.len());
    let mut tried = 0;
    let mut failures = Vec::new();
    let mut worst_rel: f64 = 0.0;
    for f in scans {
        let pts: Vec<f64> = f.scan.points.iter().filter(|p| p.classification.is_not_uh()).map(|p| p.theta).collect();
        if pts.is_empty() {
            continue;
        }
        let take = per_family.min(pts.len());
        for k in 0..take {
            if tried == 50 {
                break;
            }
            let theta = pts[k * pts.len() / take];
            tried += 1;
            let z = unit(theta);
            let res = gz_cocycle(&f.seq, z).map_err(|e| e.to_string()).and_then(|cocycle| match classify_uh(&cocycle, params) {
                Classification::NotUh(w) => bounded_orbit_to_eigenfunction(&f.seq, z, &w).map_err(|e| e.to_string()),
                other => Err(format!("GZ cocycle classified {}", other.label())),
            });
            match res {
                Ok(sol) => worst_rel = worst_rel.max(sol.interior_residual() / sol.sup_u()),
                Err(e) => failures.push(format!("{}@{theta:.4}: {e}", f.name)),
            }
        }
    }
    Outcome {
        passed: tried == 50 && failures.is_empty() && worst_rel < 1e-8,
        detail: format!("{tried} NotUH points, {} failures {:?}, max residual/sup|u| = {worst_rel:.2e}", failures.len(), failures.iter().take(3).collect::<Vec<_>>()),
    }
}

fn criterion_9(scans: &[FamilyScan], params: &ClassifyParams) -> Outcome {
    let mut robust = Vec::new();
    'outer: for f in scans {
        let mut taken = 0;
        for pt in f.scan.points.iter().step_by(7) {
            if let Classification::Uh(ev) = &pt.classification {
                if ev.certificate.margin() > 0.1 {
                    robust.push((f.seq.clone(), pt.theta, ev.certificate.clone()));
                    taken += 1;
                    if robust.len() == 20 {
                        break 'outer;
                    }
                    if taken == 4 {
                        break;
                    }
                }
            }
        }
    }
    let mut probe_failures = 0;
    for (seq, theta, cert) in &robust {
        let cocycle = szego_cocycle(seq, unit(*theta)).expect("cocycle");
        for seed in 0..100 {
            if !robustness_probe(&cocycle, cert, 1e-3, &params.search, seed) {
                probe_failures += 1;
            }
        }
    }
    let mut near_edge = Vec::new();
    for f in scans {
        for e in band_edges(&f.seq, &f.scan, 1e-12, Execution::default()).unwrap_or_default() {
            if near_edge.len() < 5 {
                near_edge.push((f.seq.clone(), e.theta + if near_edge.len() % 2 == 0 { 5e-4 } else { -5e-4 }));
            }
        }
    }
    let mut flipped = 0;
    for (seq, theta) in &near_edge {
        let cocycle = szego_cocycle(seq, unit(*theta)).expect("cocycle");
        let base = classify_uh(&cocycle, params);
        let any = (0..10).any(|seed| {
            let pert = cmvuh::hyperbolicity::perturb(&cocycle, 1e-1, seed);
            let after = classify_uh(&pert, params);
            (base.is_uh() && after.is_not_uh()) || (base.is_not_uh() && after.is_uh())
        });
        if any {
            flipped += 1;
        }
    }
    Outcome {
        passed: robust.len() == 20 && probe_failures == 0 && near_edge.len() == 5 && flipped == 5,
        detail: format!(
            "{} robust points x 100 seeds: {probe_failures} probe failures; {}/{} near-edge points flipped by a 1e-1 perturbation",
            robust.len(),
            flipped,
            near_edge.len()
        ),
    }
}

fn criterion_10() -> Outcome {
    let seq = VerblunskySequence::constant(c(0.0, 0.0));
    let sol = match solve_difference(&seq, &BasePoint::OrbitIndex(0), c(1.0, 0.0), (c(1.0, 0.0), c(1.0, 0.0)), (-1030, 1030)) {
        Ok(s) => s,
        Err(e) => return Outcome { passed: false, detail: e.to_string() },
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut inequality = true;
    for k in 3..=9 {
        let n = 1usize << k;
        let w = weyl_cutoff_residual(&sol, n).expect("window large enough");
        inequality &= w.inequality_holds;
        xs.push((n as f64).ln());
        ys.push(w.normalized.ln());
    }
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Outcome {
        passed: (slope + 0.5).abs() <= 0.1 && inequality,
        detail: format!("log-log slope {slope:.4} over N = 8..512, boundary inequality holds at every N: {inequality}"),
    }
}

fn main() {
    let params = ClassifyParams::default();
    let mut ok = true;

    let t = Instant::now();
    ok &= report(1, "algebraic identities", t, 10.0, criterion_1());
    let t = Instant::now();
    ok &= report(2, "singular directions", t, 10.0, criterion_2());

    let t = Instant::now();
    let scans = scan_families(&params);
    let (c3, c4) = criteria_3_4(&scans);
    let elapsed = t.elapsed().as_secs_f64();
    ok &= report(3, "UH equivalence on periodic families", t, 600.0, c3);
    println!("  (criterion 4 reuses the criterion 3 scans, {elapsed:.1}s)");
    ok &= report(4, "splitting decay rate", t, 600.0, c4);

    let t = Instant::now();
    ok &= report(5, "periodic band", t, 300.0, criterion_5(&scans[0].scan, &scans[0].seq));

    let t = Instant::now();
    let (c6, free) = criterion_6(&params);
    ok &= report(6, "free case", t, 120.0, c6);

    let t = Instant::now();
    let (c7, golden) = criterion_7(&params);
    ok &= report(7, "golden rotation", t, 1200.0, c7);

    let t = Instant::now();
    let mut all: Vec<&FamilyScan> = scans.iter().collect();
    all.push(&free);
    all.push(&golden);
    ok &= report(8, "bounded orbits to eigenfunctions", t, 300.0, criterion_8(&all, &params));

    let t = Instant::now();
    ok &= report(9, "robustness", t, 300.0, criterion_9(&scans, &params));

    let t = Instant::now();
    ok &= report(10, "cutoff residual decay", t, 60.0, criterion_10());

    if !ok {
        std::process::exit(1);
    }
}
