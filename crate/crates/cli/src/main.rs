//! `cmvuh`: batch front end for UH scans, truncated CMV spectra and property suites.

mod summary;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cmvuh::config::ExperimentConfig;
use cmvuh::hyperbolicity::{classify_uh, Classification};
use cmvuh::johnson::{band_edges, monodromy_verdict, szego_cocycle, truncated_spectrum_with, uh_scan, unit};
use cmvuh::output::{self, num, JsonObject};
use cmvuh::par::Execution;
use cmvuh::suites::verify_all;

use summary::{summarize, ScanRow, SpectrumRow};

#[derive(Parser, Debug)]
#[command(name = "cmvuh", version, about = "Uniform hyperbolicity scans and truncated spectra of extended CMV matrices")]
struct Cli {
    /// Experiment config (TOML); built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true, value_name = "INT")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the identity, singular-direction and factorization suites.
    Verify,
    /// Classify the Szegő cocycle at one spectral angle.
    UhTest {
        /// Angle θ of z = e^{iθ}, radians.
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
    },
    /// Scan the grid, refine band edges, compute truncated spectra and a summary.
    Scan,
    /// Truncated spectra only.
    Spectrum,
    /// Recompute the summary from scan.jsonl and spectra.jsonl in the output directory.
    Compare,
}

enum Failure {
    Usage(String),
    Property(String),
}

struct Ctx {
    cfg: ExperimentConfig,
    out: PathBuf,
    seed: u64,
    exec: Execution,
}

impl Ctx {
    fn write(&self, name: &str, body: &str) -> Result<(), Failure> {
        fs::create_dir_all(&self.out).map_err(|e| Failure::Usage(format!("{}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        fs::write(&path, body).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Property(m)) => {
            eprintln!("property failure: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| Failure::Usage(e.to_string()))?,
        None => ExperimentConfig::default(),
    };
    let exec = match cli.threads {
        Some(0) => return Err(Failure::Usage("--threads must be at least 1".into())),
        Some(1) => Execution::Sequential,
        Some(t) => {
            cmvuh::par::init_threads(t).map_err(Failure::Usage)?;
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    let out = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let seed = cli.seed.unwrap_or(cfg.seed);
    let ctx = Ctx { cfg, out, seed, exec };
    match cli.command {
        Command::Verify => cmd_verify(&ctx),
        Command::UhTest { theta } => cmd_uh_test(&ctx, theta),
        Command::Scan => cmd_scan(&ctx),
        Command::Spectrum => cmd_spectrum(&ctx).map(|_| ()),
        Command::Compare => cmd_compare(&ctx),
    }
}

fn cmd_verify(ctx: &Ctx) -> Result<(), Failure> {
    let checks = verify_all(ctx.cfg.sequence(), ctx.cfg.truncation.parity, &ctx.cfg.verify, ctx.seed);
    let mut report = String::from("property,max_deviation,tolerance,samples,passed\n");
    for c in &checks {
        let _ = writeln!(report, "{},{},{},{},{}", c.name, num(c.max_deviation), num(c.tolerance), c.samples, c.passed);
    }
    print!("{report}");
    ctx.write("verify.csv", &report)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Property(failed.join(", ")))
    }
}

fn classification_json(theta: f64, class: &Classification, eps: f64, slack: f64) -> JsonObject {
    let point = cmvuh::johnson::ScanPoint { theta, classification: class.clone() };
    let mut obj = JsonObject::new().num("theta", theta).str("class", class.label()).num("margin", point.margin(eps, slack));
    match class {
        Classification::Uh(e) => {
            obj = obj
                .int("certificate_n", e.certificate.n as i64)
                .num("epsilon", e.certificate.epsilon)
                .num("min_max_growth", e.certificate.min_max_growth)
                .num("max_fiber_norm", e.certificate.max_fiber_norm)
                .num("splitting_rate", e.splitting.rate)
                .num("splitting_c", e.splitting.c)
                .num("splitting_gap", e.splitting.gap)
                .num("invariance_residual", e.report.invariance_stable.max(e.report.invariance_unstable))
                .num("growth_lambda", e.growth.lambda)
                .num("growth_c", e.growth.c);
        }
        Classification::NotUh(w) => {
            obj = obj
                .raw("omega", &output::base_point_json(&w.omega))
                .nums("v", &[w.v[0].re, w.v[0].im, w.v[1].re, w.v[1].im])
                .int("horizon", w.horizon as i64)
                .num("sup_norm", w.sup_norm);
        }
        Classification::Undetermined(m) => {
            obj = obj.int("n", m.n as i64).num("min_max_growth", m.min_max_growth).str("reason", &m.reason);
        }
    }
    obj
}

fn cmd_uh_test(ctx: &Ctx, theta: f64) -> Result<(), Failure> {
    if !theta.is_finite() {
        return Err(Failure::Usage("--theta must be finite".into()));
    }
    let seq = ctx.cfg.sequence();
    let params = ctx.cfg.classify_params().with_execution(ctx.exec);
    let cocycle = szego_cocycle(seq, unit(theta)).map_err(|e| Failure::Usage(e.to_string()))?;
    let class = classify_uh(&cocycle, &params);
    let mut obj = classification_json(theta, &class, params.search.epsilon, params.search.slack);
    if let Ok(v) = monodromy_verdict(seq, unit(theta)) {
        obj = obj.bool("oracle_uh", v.uh).num("oracle_margin", v.margin);
    }
    let line = obj.finish();
    println!("{line}");
    ctx.write("uh_test.jsonl", &format!("{line}\n"))
}

fn cmd_spectrum(ctx: &Ctx) -> Result<Vec<SpectrumRow>, Failure> {
    let seq = ctx.cfg.sequence();
    let mut jsonl = String::new();
    let mut csv = format!("{}\n", output::SPECTRA_CSV_HEADER);
    let mut rows = Vec::new();
    for &n in &ctx.cfg.truncation.sizes {
        for w in ctx.cfg.base_points() {
            for (turns, phases) in ctx.cfg.boundary_phases() {
                let s = truncated_spectrum_with(seq, &w, n, phases, ctx.exec).map_err(|e| Failure::Usage(e.to_string()))?;
                jsonl.push_str(&output::spectrum_json(&s, turns));
                jsonl.push('\n');
                output::spectrum_csv_rows(&s, turns, &mut csv);
                rows.push(SpectrumRow { n, omega: output::base_point_json(&w), bulk: s.bulk() });
            }
        }
    }
    ctx.write("spectra.jsonl", &jsonl)?;
    ctx.write("spectra.csv", &csv)?;
    eprintln!("wrote {} spectra to {}", rows.len(), ctx.out.display());
    Ok(rows)
}

fn cmd_scan(ctx: &Ctx) -> Result<(), Failure> {
    let seq = ctx.cfg.sequence();
    let params = ctx.cfg.classify_params();
    let grid = ctx.cfg.theta_grid();
    let scan = uh_scan(seq, &grid, &params, ctx.exec).map_err(|e| Failure::Usage(e.to_string()))?;
    let edges = band_edges(seq, &scan, ctx.cfg.scan.edge_tol, ctx.exec).map_err(|e| Failure::Usage(e.to_string()))?;
    ctx.write("scan.csv", &output::scan_csv(&scan))?;
    ctx.write("scan.jsonl", &output::scan_jsonl(&scan))?;
    ctx.write("edges.csv", &output::edges_csv(&edges))?;
    let spectra = cmd_spectrum(ctx)?;
    let rows: Vec<ScanRow> = scan.points.iter().map(|p| ScanRow { theta: p.theta, class: p.classification.label().into() }).collect();
    let s = summarize(seq, &rows, &spectra);
    println!("{}", s.json);
    ctx.write("summary.json", &format!("{}\n", s.json))
}

fn read_jsonl(path: &Path) -> Result<Vec<serde_json::Value>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Failure::Usage(format!("{}:{}:{}: {e}", path.display(), i + 1, e.column()))))
        .collect()
}

fn field<'a>(v: &'a serde_json::Value, key: &str, path: &Path) -> Result<&'a serde_json::Value, Failure> {
    v.get(key).ok_or_else(|| Failure::Usage(format!("{}: record without `{key}`", path.display())))
}

fn cmd_compare(ctx: &Ctx) -> Result<(), Failure> {
    let scan_path = ctx.out.join("scan.jsonl");
    let spectra_path = ctx.out.join("spectra.jsonl");
    let mut scan = Vec::new();
    for v in read_jsonl(&scan_path)? {
        let theta = field(&v, "theta", &scan_path)?.as_f64().ok_or_else(|| Failure::Usage("theta is not a number".into()))?;
        let class = field(&v, "class", &scan_path)?.as_str().unwrap_or_default().to_string();
        scan.push(ScanRow { theta, class });
    }
    let mut spectra = Vec::new();
    for v in read_jsonl(&spectra_path)? {
        let n = field(&v, "n", &spectra_path)?.as_u64().unwrap_or(0) as usize;
        let omega = field(&v, "omega", &spectra_path)?.to_string();
        let angles: Vec<f64> = field(&v, "eigenangles", &spectra_path)?.as_array().map(|a| a.iter().filter_map(|x| x.as_f64()).collect()).unwrap_or_default();
        let boundary: Vec<usize> = field(&v, "boundary_indices", &spectra_path)?
            .as_array()
            .map(|a| a.iter().filter_map(|x| x.as_u64().map(|u| u as usize)).collect())
            .unwrap_or_default();
        let bulk = angles.iter().enumerate().filter(|(i, _)| !boundary.contains(i)).map(|(_, a)| *a).collect();
        spectra.push(SpectrumRow { n, omega, bulk });
    }
    let s = summarize(ctx.cfg.sequence(), &scan, &spectra);
    println!("{}", s.json);
    ctx.write("compare.json", &format!("{}\n", s.json))?;
    if s.deep_failures > 0 {
        return Err(Failure::Property(format!("{} bulk eigenangles lie deep inside UH regions", s.deep_failures)));
    }
    Ok(())
}
