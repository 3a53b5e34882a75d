use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use mkc::baselines::{knn_impute, KnnConfig};
use mkc::eval::{are, eigenspectrum, run_experiment, write_tables, EvalMethod, ExperimentPlan};
use mkc::io::{load_dataset, manifest_path, read_matrix_csv, save_dataset, write_matrix_csv, KeyValues};
use mkc::solvers::complete;
use mkc::synth::{generate_toy, induce_missing, MissingnessPlan, ToyName, ToyRecipe};
use mkc::{CompletionResult, Dataset64, KernelMatrix, MkcError, SolverConfig};

const RESULT_FILE: &str = "result.txt";

#[derive(Parser)]
#[command(name = "mkc", version, about = "Multi-view kernel completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a complete synthetic dataset.
    Generate {
        #[arg(long)]
        recipe: ToyName,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Remove views from a complete dataset.
    Mask {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        missing_views: usize,
        #[arg(long, default_value_t = 0.5)]
        affected_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Complete every view of a dataset.
    Complete(CompleteArgs),
    /// Print the per-view ARE of a completion.
    Evaluate {
        /// Output directory of `complete`.
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Run a benchmark plan and write its tables.
    Benchmark {
        #[arg(long)]
        plan: PathBuf,
        /// Overrides the plan's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the plan's worker count.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Eigenvalues of every view, one column per view.
    Spectrum {
        /// A dataset (its true kernels) or an output directory of `complete`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CompleteArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    method: EvalMethod,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    clamp_known: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// A failure and the exit code it maps to.
enum Failure {
    Usage(String),
    Runtime(MkcError),
}

impl From<MkcError> for Failure {
    fn from(e: MkcError) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn usage(e: MkcError) -> Failure {
    Failure::Usage(e.to_string())
}

fn existing(path: &Path) -> Result<PathBuf, Failure> {
    if path.exists() {
        Ok(path.to_path_buf())
    } else {
        Err(Failure::Usage(format!("{} does not exist", path.display())))
    }
}

fn existing_manifest(path: &Path) -> Result<PathBuf, Failure> {
    existing(&manifest_path(&existing(path)?))
}

/// Refuses to write into the directory being read.
fn separate(input: &Path, out: &Path) -> Outcome {
    let a = fs::canonicalize(input).ok();
    let b = fs::canonicalize(out).ok();
    let input_dir = a.as_ref().map(|p| if p.is_file() { p.parent().unwrap_or(p).to_path_buf() } else { p.clone() });
    if input_dir.is_some() && input_dir == b {
        return Err(Failure::Usage(format!("--out {} would overwrite the input", out.display())));
    }
    Ok(())
}

fn generate(recipe: ToyName, seed: u64, out: &Path) -> Outcome {
    let ds = generate_toy::<f64>(&ToyRecipe::new(recipe, seed))?;
    let path = save_dataset(&ds, out)?;
    println!("{}", path.display());
    Ok(())
}

fn mask(input: &Path, missing_views: usize, affected_fraction: f64, seed: u64, out: &Path) -> Outcome {
    let manifest = existing_manifest(input)?;
    separate(&manifest, out)?;
    let plan = MissingnessPlan {
        affected_fraction,
        views_removed_per_point: missing_views,
        seed,
        ..MissingnessPlan::default()
    };
    let ds: Dataset64 = load_dataset(&manifest)?;
    plan.validate(ds.m()).map_err(usage)?;
    let masked = induce_missing(&ds, &plan)?;
    let path = save_dataset(&masked, out)?;
    println!("{}", path.display());
    Ok(())
}

fn run_completion(ds: &Dataset64, args: &CompleteArgs) -> Result<CompletionResult<f64>, Failure> {
    match args.method {
        EvalMethod::Mkc(method) => {
            let mut cfg = SolverConfig::new(method);
            cfg.c = args.c;
            cfg.c1 = args.c1;
            cfg.c2 = args.c2;
            cfg.max_outer_iters = args.max_iters;
            cfg.rel_tol = args.tol;
            cfg.clamp_known_output = args.clamp_known;
            cfg.seed = args.seed;
            cfg.validate().map_err(usage)?;
            Ok(complete(ds, &cfg)?)
        }
        EvalMethod::Knn | EvalMethod::Wknn => {
            let cfg = KnnConfig::new(args.k, args.method == EvalMethod::Wknn).map_err(usage)?;
            Ok(knn_impute(ds, &cfg)?)
        }
    }
}

fn complete_cmd(args: &CompleteArgs) -> Outcome {
    let manifest = existing_manifest(&args.input)?;
    separate(&manifest, &args.out)?;
    let ds: Dataset64 = load_dataset(&manifest)?;
    let res = run_completion(&ds, args)?;
    fs::create_dir_all(&args.out)?;

    let mut summary = String::new();
    writeln!(summary, "dataset={}", fs::canonicalize(&manifest)?.display()).unwrap();
    writeln!(summary, "method={}", args.method).unwrap();
    match args.method {
        EvalMethod::Mkc(mkc::Method::Sdp) => writeln!(summary, "c={}", args.c).unwrap(),
        EvalMethod::Mkc(mkc::Method::EmbdHm) => writeln!(summary, "c2={}", args.c2).unwrap(),
        EvalMethod::Mkc(_) => writeln!(summary, "c1={}\nc2={}", args.c1, args.c2).unwrap(),
        EvalMethod::Knn | EvalMethod::Wknn => writeln!(summary, "k={}", args.k).unwrap(),
    }
    writeln!(summary, "iterations={}", res.iterations).unwrap();
    writeln!(summary, "converged={}", res.converged).unwrap();
    writeln!(summary, "seconds={:.6}", res.seconds).unwrap();
    writeln!(summary, "views={}", res.kernels.len()).unwrap();
    for (v, k) in res.kernels.iter().enumerate() {
        let name = format!("completed_{v}.csv");
        write_matrix_csv(&args.out.join(&name), k.values())?;
        writeln!(summary, "completed.{v}={name}").unwrap();
    }
    if let Some(s) = &res.s {
        write_matrix_csv(&args.out.join("S.csv"), s.matrix())?;
        writeln!(summary, "s=S.csv").unwrap();
    }
    let mut trace = String::from("iteration,objective,wall_ms\n");
    for t in &res.trace {
        writeln!(trace, "{},{:e},{:.3}", t.iteration, t.objective, t.wall_ms).unwrap();
    }
    fs::write(args.out.join("objective_trace.csv"), trace)?;
    fs::write(args.out.join(RESULT_FILE), summary)?;
    log::info!(
        "{} finished after {} iterations in {:.3}s",
        args.method,
        res.iterations,
        res.seconds
    );
    println!("{}", args.out.join(RESULT_FILE).display());
    Ok(())
}

/// Completed kernels listed in a result file.
fn completed_kernels(result: &KeyValues) -> Result<Vec<KernelMatrix<f64>>, Failure> {
    let views: usize = result
        .parse_value("views")?
        .ok_or_else(|| Failure::Usage(format!("{} lists no views", result.path().display())))?;
    (0..views)
        .map(|v| {
            let path = result
                .path_value(&format!("completed.{v}"))
                .ok_or_else(|| Failure::Usage(format!("{} lacks completed.{v}", result.path().display())))?;
            Ok(KernelMatrix::new(read_matrix_csv(&path)?)?)
        })
        .collect()
}

fn evaluate(input: &Path) -> Outcome {
    let result_path = existing(&existing(input)?.join(RESULT_FILE))?;
    let result = KeyValues::read(&result_path)?;
    let dataset = result
        .path_value("dataset")
        .ok_or_else(|| Failure::Usage(format!("{} names no dataset", result_path.display())))?;
    let ds: Dataset64 = load_dataset(&existing(&dataset)?)?;
    let truth = ds
        .truth()
        .ok_or_else(|| Failure::Usage(format!("{} has no ground truth to evaluate against", dataset.display())))?;
    let kernels = completed_kernels(&result)?;
    if kernels.len() != ds.m() {
        return Err(Failure::Runtime(MkcError::Shape(format!(
            "{} completed views for a {}-view dataset",
            kernels.len(),
            ds.m()
        ))));
    }
    let mut out = String::from("view,are\n");
    let mut present = Vec::new();
    for (v, (k, t)) in kernels.iter().zip(truth).enumerate() {
        let value = are(k, t, ds.mask(v))?;
        match value.percent() {
            Some(p) => {
                present.push(p);
                writeln!(out, "{v},{p:.4}").unwrap();
            }
            None => writeln!(out, "{v},n/a").unwrap(),
        }
    }
    if present.is_empty() {
        writeln!(out, "mean,n/a").unwrap();
    } else {
        writeln!(out, "mean,{:.4}", present.iter().sum::<f64>() / present.len() as f64).unwrap();
    }
    print!("{out}");
    Ok(())
}

fn benchmark(plan_path: &Path, seed: Option<u64>, jobs: Option<usize>, out: &Path) -> Outcome {
    let mut plan = ExperimentPlan::read(&existing(plan_path)?).map_err(usage)?;
    if let Some(seed) = seed {
        plan.seed = seed;
    }
    if let Some(jobs) = jobs {
        plan.jobs = jobs;
    }
    plan.validate().map_err(usage)?;
    let report = run_experiment(&plan)?;
    for f in report.failures() {
        eprintln!(
            "warning: {} repeat {} {} {} failed: {}",
            f.recipe,
            f.repeat,
            f.method,
            f.hyper,
            f.error.as_deref().unwrap_or("")
        );
    }
    for path in write_tables(&report, out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn spectrum(input: &Path, out: Option<&Path>) -> Outcome {
    let input = existing(input)?;
    let result_path = input.join(RESULT_FILE);
    let kernels = if result_path.exists() {
        completed_kernels(&KeyValues::read(&result_path)?)?
    } else {
        let manifest = existing_manifest(&input)?;
        let ds: Dataset64 = load_dataset(&manifest)?;
        match ds.truth() {
            Some(t) => t.to_vec(),
            None if ds.is_complete() => ds
                .kernels()
                .iter()
                .map(|k| KernelMatrix::new(k.known_block()))
                .collect::<mkc::Result<_>>()?,
            None => {
                return Err(Failure::Usage(format!(
                    "{} has missing views and no ground truth",
                    manifest.display()
                )))
            }
        }
    };
    let spectra = kernels.iter().map(eigenspectrum).collect::<mkc::Result<Vec<_>>>()?;
    let n = spectra.iter().map(Vec::len).max().unwrap_or(0);
    let mut text = String::from("rank");
    for v in 0..spectra.len() {
        write!(text, ",view_{v}").unwrap();
    }
    text.push('\n');
    for i in 0..n {
        write!(text, "{}", i + 1).unwrap();
        for s in &spectra {
            match s.get(i) {
                Some(v) => write!(text, ",{v}").unwrap(),
                None => text.push(','),
            }
        }
        text.push('\n');
    }
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Generate { recipe, seed, out } => generate(recipe, seed, &out),
        Command::Mask {
            input,
            missing_views,
            affected_fraction,
            seed,
            out,
        } => mask(&input, missing_views, affected_fraction, seed, &out),
        Command::Complete(args) => complete_cmd(&args),
        Command::Evaluate { input } => evaluate(&input),
        Command::Benchmark { plan, seed, jobs, out } => benchmark(&plan, seed, jobs, &out),
        Command::Spectrum { input, out } => spectrum(&input, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
