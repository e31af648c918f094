//! `sasd`: single solves, seeded sweeps, digit deblurring and heatmaps.
//!
//! Exit status is 0 on success, 1 for command-line misuse and 2 when the
//! command itself fails (unreadable input, solver error, write failure).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sasd::data::{
    fmt_f64, read_idx_images, read_idx_labels, read_results_csv, synthetic_glyph, write_image_pgm,
    write_results_csv,
};
use sasd::harness::deblur::{
    deblur_image, psnr_csv, render_table, rescale_for_display, run_deblur, DeblurConfig,
    DigitResult,
};
use sasd::harness::heatmap::{render_heatmap, HeatMetric};
use sasd::harness::sweep::{summary_csv_bytes, summary_path};
use sasd::harness::{run_sweep, solve, summarize, Method, SolverSettings, SweepConfig, Trace};
use sasd::metrics::recovery_error;
use sasd::roco::RocoConfig;

#[derive(Debug, Parser)]
#[command(
    name = "sasd",
    version,
    about = "Short-and-sparse blind deconvolution experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recover a sparse signal and a short kernel from one observation
    Solve(SolveArgs),
    /// Run every method over a seeded (N, theta) grid and write per-trial CSV
    Sweep {
        /// TOML file describing the grid and solver settings
        config: PathBuf,
        /// Per-trial results; the cell summary goes next to it
        out: PathBuf,
    },
    /// Blur digit images with a seeded kernel and deblur them
    Deblur(DeblurArgs),
    /// Render an SVG heatmap (one panel per method) from sweep results
    Heatmap {
        csv: PathBuf,
        /// failure_rate or mean_success_error
        metric: HeatMetric,
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct SolverFlags {
    /// ADMM penalty parameter (roco)
    #[arg(long)]
    rho: Option<f64>,
    /// Sparsity weight (bilinear methods)
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Stopping tolerance on the change between iterates
    #[arg(long)]
    tol: Option<f64>,
}

impl SolverFlags {
    fn apply(&self, mut s: SolverSettings) -> Result<SolverSettings, Failure> {
        if let Some(rho) = self.rho {
            s.roco.rho = rho;
        }
        if let Some(lambda) = self.lambda {
            s.bilinear.lambda = Some(lambda);
        }
        if let Some(k) = self.max_iters {
            s.roco.max_iters = k;
            s.bilinear.max_iters = k;
        }
        if let Some(tol) = self.tol {
            s.roco.tol = tol;
            s.bilinear.tol = tol;
        }
        s.roco.validate().map_err(usage)?;
        s.bilinear.validate().map_err(usage)?;
        Ok(s)
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Observation, one value per line
    #[arg(long)]
    y: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    kernel_len: u64,
    #[arg(long, default_value = "roco")]
    method: Method,
    #[command(flatten)]
    solver: SolverFlags,
    /// Ground-truth kernel; when given, the recovery error is reported
    #[arg(long)]
    h_true: Option<PathBuf>,
    /// Output directory for x.txt, h.txt and diagnostics.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DeblurArgs {
    /// IDX image file (for example t10k-images-idx3-ubyte)
    #[arg(long, required_unless_present = "glyph")]
    mnist: Option<PathBuf>,
    /// IDX label file; defaults to the matching labels file next to the images
    #[arg(long, requires = "mnist")]
    labels: Option<PathBuf>,
    /// Use the built-in 28x28 test glyph instead of a dataset
    #[arg(long, conflicts_with = "mnist")]
    glyph: bool,
    #[arg(long, value_delimiter = ',', default_value = "5,0,9,3")]
    digits: Vec<u8>,
    #[arg(long, default_value_t = 9, value_parser = clap::value_parser!(u64).range(1..))]
    kernel_len: u64,
    #[arg(long, default_value_t = 1)]
    kernel_seed: u64,
    /// Comma-separated methods; all five by default
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<sasd::Error> for Failure {
    fn from(e: sasd::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| io_failure(path, e))
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(|e| io_failure(path, e))
}

/// Reads whitespace-separated numbers, reporting the first bad line.
fn read_vector(path: &Path) -> Result<Vec<f64>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| {
                Failure::Runtime(format!(
                    "{}:{}: `{tok}` is not a number",
                    path.display(),
                    i + 1
                ))
            })?;
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(Failure::Runtime(format!("{}: no values", path.display())));
    }
    Ok(out)
}

fn vector_text(v: &[f64]) -> String {
    v.iter().fold(String::new(), |mut s, x| {
        let _ = writeln!(s, "{}", fmt_f64(*x));
        s
    })
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    method: Method,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    iterations: usize,
    converged: bool,
    sigma: f64,
    degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    e_rec: Option<f64>,
    settings: &'a SolverSettings,
    trace: &'a Trace,
}

fn cmd_solve(args: &SolveArgs) -> Result<(), Failure> {
    let settings = args.solver.apply(SolverSettings::default())?;
    let y = read_vector(&args.y)?;
    let m = args.kernel_len as usize;
    let h_true = args.h_true.as_deref().map(read_vector).transpose()?;
    if let Some(h) = &h_true {
        if h.len() != m {
            return Err(Failure::Runtime(format!(
                "dimension mismatch: ground-truth kernel has {} entries but --kernel-len is {m}",
                h.len()
            )));
        }
    }
    let report = solve(args.method, &y, m, &settings)?;
    let e_rec = h_true.map(|h| recovery_error(&report.factors.h, &h, y.len()));

    create_dir(&args.out)?;
    write_file(&args.out.join("x.txt"), vector_text(&report.factors.x))?;
    write_file(&args.out.join("h.txt"), vector_text(&report.factors.h))?;
    let diag = Diagnostics {
        method: args.method,
        n: y.len(),
        m,
        iterations: report.iterations,
        converged: report.converged,
        sigma: report.factors.sigma,
        degenerate: report.factors.degenerate,
        e_rec,
        settings: &settings,
        trace: &report.trace,
    };
    let mut json = serde_json::to_string_pretty(&diag).expect("diagnostics serialise");
    json.push('\n');
    write_file(&args.out.join("diagnostics.json"), json)?;

    let status = if report.converged {
        "converged"
    } else {
        "stopped at the iteration limit"
    };
    print!(
        "{}: {} iterations, {status}",
        args.method, report.iterations
    );
    match e_rec {
        Some(e) => println!(", e_rec = {e:.3e}"),
        None => println!(),
    }
    Ok(())
}

fn cmd_sweep(config: &Path, out: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(config).map_err(|e| io_failure(config, e))?;
    let cfg = SweepConfig::parse(&text)?;
    let records = run_sweep(&cfg.grid, &cfg.settings)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_results_csv(&records, out)?;
    let cells = summarize(&records);
    let summary = summary_path(out);
    write_file(&summary, summary_csv_bytes(&cells))?;

    println!(
        "{:<14} {:>6} {:>7} {:>9} {:>12}",
        "method", "N", "theta", "fail", "mean e_rec"
    );
    for c in &cells {
        let mean = c
            .mean_success_error
            .map_or("-".to_string(), |e| format!("{e:.3e}"));
        println!(
            "{:<14} {:>6} {:>7} {:>9.3} {:>12}",
            c.method, c.n, c.theta, c.failure_rate, mean
        );
    }
    println!("wrote {} and {}", out.display(), summary.display());
    Ok(())
}

/// `t10k-images-idx3-ubyte` -> `t10k-labels-idx1-ubyte`, also for the
/// dotted variant of the name.
fn sibling_labels(images: &Path) -> Option<PathBuf> {
    let name = images.file_name()?.to_str()?;
    let swapped = name
        .replace("images-idx3", "labels-idx1")
        .replace("images.idx3", "labels.idx1");
    (swapped != name).then(|| images.with_file_name(swapped))
}

fn write_digit_images(d: &DigitResult, dir: &Path) -> Result<(), Failure> {
    let side = (d.truth.len() as f64).sqrt() as usize;
    let stem = format!("digit{}", d.label);
    write_image_pgm(&d.truth, side, side, dir.join(format!("{stem}_truth.pgm")))?;
    write_image_pgm(
        &rescale_for_display(&d.blurred),
        side,
        side,
        dir.join(format!("{stem}_blurred.pgm")),
    )?;
    for r in &d.results {
        write_image_pgm(
            &r.recovered,
            side,
            side,
            dir.join(format!("{stem}_{}.pgm", r.method)),
        )?;
    }
    Ok(())
}

fn cmd_deblur(args: &DeblurArgs) -> Result<(), Failure> {
    let base = SolverSettings {
        roco: RocoConfig::images(),
        ..SolverSettings::default()
    };
    let cfg = DeblurConfig {
        digits: args.digits.clone(),
        kernel_len: args.kernel_len as usize,
        kernel_seed: args.kernel_seed,
        methods: if args.method.is_empty() {
            Method::ALL.to_vec()
        } else {
            args.method.clone()
        },
        settings: args.solver.apply(base)?,
    };
    let results = match &args.mnist {
        Some(images) => {
            let mut set = read_idx_images(images)?;
            let labels = match args.labels.clone().or_else(|| sibling_labels(images)) {
                Some(p) => p,
                None => return Err(usage("cannot infer the label file; pass --labels")),
            };
            let labels = read_idx_labels(&labels)?;
            if labels.len() != set.len() {
                return Err(Failure::Runtime(format!(
                    "dimension mismatch: {} images but {} labels",
                    set.len(),
                    labels.len()
                )));
            }
            set.labels = Some(labels);
            run_deblur(&set, &cfg)?
        }
        None => vec![deblur_image("glyph", &synthetic_glyph(), &cfg)?],
    };

    create_dir(&args.out)?;
    for d in &results {
        write_digit_images(d, &args.out)?;
    }
    write_file(&args.out.join("psnr.csv"), psnr_csv(&results))?;
    let table = render_table(&results);
    write_file(&args.out.join("table.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn cmd_heatmap(csv: &Path, metric: HeatMetric, out: &Path) -> Result<(), Failure> {
    let records = read_results_csv(csv)?;
    let svg = render_heatmap(&records, metric)?;
    write_file(out, svg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Sweep { config, out } => cmd_sweep(config, out),
        Command::Deblur(args) => cmd_deblur(args),
        Command::Heatmap { csv, metric, out } => cmd_heatmap(csv, *metric, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
