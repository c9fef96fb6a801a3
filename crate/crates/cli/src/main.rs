use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::value::RawValue;

use copack::copositivity::{is_copositive_exact, refute_copositive_grid, CopResult};
use copack::cpdual::{dual_optimum, dual_optimizer};
use copack::graphs::{
    alpha, alpha_weighted, dkp_threshold, parse_dimacs, parse_weights, weighted_dkp_threshold,
};
use copack::kissing::{run, BoundReport, KissingInstance, Mode};
use copack::{eig_sym, Error, SymmatN};

const EXIT_OK: u8 = 0;
const EXIT_INTERNAL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_SIZE_CAP: u8 = 4;
const EXIT_INFEASIBLE: u8 = 5;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "copack", version, about = "Copositive and completely positive bounds for stability and kissing numbers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stability number of a DIMACS graph with its copositive threshold and dual optimum.
    Stab {
        #[arg(long)]
        graph: PathBuf,
        /// One nonnegative weight per line, one line per vertex.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Copositivity of a whitespace-separated symmetric matrix.
    Copositive {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_enum)]
        mode: CopMode,
        #[arg(long, default_value_t = 50)]
        resolution: usize,
    },
    /// Linear programming upper bound for the kissing number.
    Kissing {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        degree: usize,
        #[arg(long, value_enum)]
        mode: KissMode,
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        #[arg(long, default_value_t = 50)]
        max_iters: usize,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        /// Largest configuration searched for cuts [default: 4 * dim].
        #[arg(long)]
        nmax: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report format [default: json with --out, text otherwise].
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CopMode {
    Exact,
    Grid,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KissMode {
    Delsarte,
    Copositive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            msg: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. } => EXIT_PARSE,
            Error::SizeCap { .. } => EXIT_SIZE_CAP,
            Error::Infeasible(_) => EXIT_INFEASIBLE,
            _ => EXIT_INTERNAL,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let outcome = configure_threads().and_then(|()| match cli.command {
        Command::Stab {
            graph,
            weights,
            tol,
        } => cmd_stab(&graph, weights.as_deref(), tol),
        Command::Copositive {
            matrix,
            mode,
            resolution,
        } => cmd_copositive(&matrix, mode, resolution),
        Command::Kissing {
            dim,
            degree,
            mode,
            grid,
            max_iters,
            restarts,
            nmax,
            seed,
            out,
            format,
        } => {
            let mut inst = KissingInstance::new(
                dim,
                degree,
                match mode {
                    KissMode::Delsarte => Mode::Delsarte,
                    KissMode::Copositive => Mode::Copositive,
                },
            );
            inst.grid_size = grid;
            inst.budget.max_iters = max_iters;
            inst.budget.restarts = restarts;
            if let Some(n) = nmax {
                inst.budget.n_max = n;
            }
            inst.seed = seed;
            let format = format.unwrap_or(if out.is_some() { Format::Json } else { Format::Text });
            cmd_kissing(&inst, out.as_deref(), format)
        }
    });
    match outcome {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> CmdResult {
    let Ok(raw) = std::env::var("COPACK_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::usage(format!("COPACK_THREADS must be a nonnegative integer, got {raw:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot size worker pool: {e}")))?;
    }
    Ok(())
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_PARSE,
        msg: format!("cannot read {}: {e}", path.display()),
    })
}

fn cmd_stab(graph_path: &Path, weights_path: Option<&Path>, tol: f64) -> CmdResult {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::usage(format!("--tol must be positive, got {tol}")));
    }
    let g = parse_dimacs(&read_input(graph_path)?)?;
    let weights = match weights_path {
        Some(p) => Some(parse_weights(&read_input(p)?, g.n())?),
        None => None,
    };
    println!("vertices={} edges={}", g.n(), g.edges().len());
    match weights {
        Some(w) => {
            let a = alpha_weighted(&g, &w)?;
            let t = weighted_dkp_threshold(&g, &w, tol)?;
            println!("alpha_w={}", fmt(a));
            println!("threshold={}", fmt(t));
            println!("gap={}", fmt((t - a).abs()));
        }
        None => {
            let a = alpha(&g)?;
            let t = dkp_threshold(&g, tol)?;
            let dual = dual_optimum(&g)?;
            let opt = dual_optimizer(&g)?;
            println!("alpha={a}");
            println!("threshold={}", fmt(t));
            println!("dual={}", fmt(dual));
            println!("dual_support={:?}", opt.indices);
            println!("gap={}", fmt((t - dual).abs()));
        }
    }
    Ok(())
}

/// Whitespace-separated rows; blank lines and `#` comments are skipped.
fn parse_matrix(text: &str) -> Result<SymmatN, Failure> {
    let parse_err = |line: usize, msg: String| Failure::from(Error::Parse { line, msg });
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let row = content
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(i + 1, format!("not a finite number: {tok:?}")))
            })
            .collect::<Result<Vec<f64>, Failure>>()?;
        rows.push(row);
        lines.push(i + 1);
    }
    let n = rows.len();
    if n == 0 {
        return Err(parse_err(1, "empty matrix".into()));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(parse_err(lines[r], format!("row has {} entries, expected {n}", row.len())));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (rows[i][j] - rows[j][i]).abs() > SYMMETRY_TOL {
                return Err(parse_err(
                    lines[j],
                    format!("matrix is not symmetric: entry ({}, {}) = {} but ({}, {}) = {}", i + 1, j + 1, rows[i][j], j + 1, i + 1, rows[j][i]),
                ));
            }
        }
    }
    Ok(SymmatN::from_rows(&rows, SYMMETRY_TOL)?)
}

fn cmd_copositive(path: &Path, mode: CopMode, resolution: usize) -> CmdResult {
    if resolution < 1 {
        return Err(Failure::usage("--resolution must be at least 1"));
    }
    let k = parse_matrix(&read_input(path)?)?;
    let res: CopResult = match mode {
        CopMode::Exact => is_copositive_exact(&k)?,
        CopMode::Grid => refute_copositive_grid(&k, resolution)?,
    };
    let verdict = if res.is_copositive() { "Copositive" } else { "NotCopositive" };
    println!("verdict={verdict}");
    if res.heuristic && res.is_copositive() {
        println!("note: grid search found no violation (not a proof)");
    }
    if let (Some(w), Some(v)) = (&res.witness, res.witness_value) {
        let w: Vec<String> = w.iter().map(|x| fmt(*x)).collect();
        println!("witness=[{}]", w.join(", "));
        println!("witness_value={}", fmt(v));
    }
    if let Some(cert) = &res.certificate {
        println!(
            "certificate: {} principal submatrices screened, {} borderline",
            cert.subsets.len(),
            cert.borderline.len()
        );
    }
    if res.is_copositive() {
        let min_eig = eig_sym(&k)?.min_eigenvalue();
        if min_eig < -1e-10 * k.max_abs().max(1.0) {
            println!("note: not positive semidefinite (min eigenvalue {})", fmt(min_eig));
        }
    }
    Ok(())
}

fn cmd_kissing(inst: &KissingInstance, out: Option<&Path>, format: Format) -> CmdResult {
    inst.validate().map_err(|e| match e {
        Error::InvalidInput(msg) => Failure::usage(msg),
        e => e.into(),
    })?;
    let (body, summary, result) = match run(inst) {
        Ok(report) => {
            let summary = format!(
                "mode={} dim={} d={} bound={} certified={}",
                inst.mode.name(),
                inst.dim,
                inst.degree,
                fmt(report.bound),
                report.certified
            );
            (render(inst, Some(&report), None, format), summary, Ok(()))
        }
        Err(e @ Error::Infeasible(_)) => {
            let summary = format!(
                "mode={} dim={} d={} bound=inf certified=false",
                inst.mode.name(),
                inst.dim,
                inst.degree
            );
            let body = render(inst, None, Some(&e.to_string()), format);
            (body, summary, Err(Failure::from(e)))
        }
        Err(e) => return Err(e.into()),
    };
    match out {
        Some(path) => {
            fs::write(path, &body).map_err(|e| Failure {
                code: EXIT_INTERNAL,
                msg: format!("cannot write {}: {e}", path.display()),
            })?;
            println!("{summary}");
        }
        None if format == Format::Text => print!("{body}"),
        None => {
            eprintln!("{summary}");
            print!("{body}");
        }
    }
    result
}

fn render(inst: &KissingInstance, report: Option<&BoundReport>, failure: Option<&str>, format: Format) -> String {
    match format {
        Format::Json => render_json(inst, report, failure),
        Format::Csv => {
            let mut s = String::from("iteration,objective\n");
            for (i, v) in report.map(|r| r.trace.as_slice()).unwrap_or(&[]).iter().enumerate() {
                s.push_str(&format!("{},{}\n", i + 1, fmt(*v)));
            }
            s
        }
        Format::Text => {
            let mut s = format!("mode={} dim={} d={} ", inst.mode.name(), inst.dim, inst.degree);
            match report {
                Some(r) => {
                    s.push_str(&format!("bound={} certified={}\n", fmt(r.bound), r.certified));
                    s.push_str(&format!("lp_value={}\n", fmt(r.lp_value)));
                    s.push_str(&format!("constraint_check={}\n", fmt(r.constraint_check)));
                    s.push_str(&format!("iterations={} cuts={}\n", r.iterations, r.cuts.len()));
                    for (i, v) in r.trace.iter().enumerate() {
                        s.push_str(&format!("trace[{}]={}\n", i + 1, fmt(*v)));
                    }
                }
                None => {
                    s.push_str("bound=inf certified=false\n");
                    s.push_str(&format!("status=infeasible: {}\n", failure.unwrap_or("")));
                }
            }
            s
        }
    }
}

/// 17 significant digits, round-trip exact.
fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn num(x: f64) -> Box<RawValue> {
    RawValue::from_string(fmt(x)).expect("formatted float is valid JSON")
}

#[derive(Serialize)]
struct JsonInputs {
    dim: usize,
    degree: usize,
    grid: usize,
    max_iters: usize,
    restarts: usize,
    nmax: usize,
}

#[derive(Serialize)]
struct JsonCut {
    points: Vec<Vec<Box<RawValue>>>,
    energy: Box<RawValue>,
}

#[derive(Serialize)]
struct JsonReport {
    tool_version: &'static str,
    subcommand: &'static str,
    inputs: JsonInputs,
    mode: &'static str,
    status: String,
    bound: Option<Box<RawValue>>,
    lp_value: Option<Box<RawValue>>,
    constraint_check: Option<Box<RawValue>>,
    certified: bool,
    iterations: usize,
    cuts: Vec<JsonCut>,
    trace: Vec<Box<RawValue>>,
    coefficients: Vec<Box<RawValue>>,
    seed: u64,
}

fn render_json(inst: &KissingInstance, report: Option<&BoundReport>, failure: Option<&str>) -> String {
    let json = JsonReport {
        tool_version: env!("CARGO_PKG_VERSION"),
        subcommand: "kissing",
        inputs: JsonInputs {
            dim: inst.dim,
            degree: inst.degree,
            grid: inst.grid_size,
            max_iters: inst.budget.max_iters,
            restarts: inst.budget.restarts,
            nmax: inst.budget.n_max,
        },
        mode: inst.mode.name(),
        status: match failure {
            Some(msg) => format!("infeasible: {msg}"),
            None => "ok".into(),
        },
        bound: report.map(|r| num(r.bound)),
        lp_value: report.map(|r| num(r.lp_value)),
        constraint_check: report.map(|r| num(r.constraint_check)),
        certified: report.is_some_and(|r| r.certified),
        iterations: report.map_or(0, |r| r.iterations),
        cuts: report
            .map(|r| {
                r.cuts
                    .iter()
                    .map(|c| JsonCut {
                        points: c
                            .config
                            .points()
                            .iter()
                            .map(|p| p.iter().map(|&x| num(x)).collect())
                            .collect(),
                        energy: num(c.energy),
                    })
                    .collect()
            })
            .unwrap_or_default(),
        trace: report.map(|r| r.trace.iter().map(|&v| num(v)).collect()).unwrap_or_default(),
        coefficients: report
            .map(|r| r.coefficients.iter().map(|&v| num(v)).collect())
            .unwrap_or_default(),
        seed: inst.seed,
    };
    let mut s = serde_json::to_string_pretty(&json).expect("report serializes");
    s.push('\n');
    s
}
