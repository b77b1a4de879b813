use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nbspectra::config::{load_config, ExperimentKind};
use nbspectra::matrix_io::{parse_matrix, write_matrix};
use nbspectra::records::{records_to_string, write_results};
use nbspectra::run_experiment;
use nbspectra_core::checks::random_hermitian;
use nbspectra_core::ensembles::{sample, EnsembleKind, EnsembleSpec, SeedSpec};
use nbspectra_core::iharabass::{check_equivalence, norm_bound};
use nbspectra_core::model::{EntryNorms, SparseMatrix};
use nbspectra_core::nbop::{build_nb_operator, NbMode};
use nbspectra_core::spectra::{hermitian_extremes, spectral_radius, SpectralConfig};
use nbspectra_core::walks::{
    enumerate_normal, format_labels, format_zeta, parse_walk, plain_key, reduce_path, verify_reduction, write_walk, WalkMode,
};

/// Largest dimension the CLI materialises as an explicit matrix.
const MATERIALISE_LIMIT: usize = 4096;

#[derive(Parser)]
#[command(name = "nbspectra", version, about = "Nonbacktracking spectra of sparse random matrices")]
struct Cli {
    /// Worker threads (overridden by NBSPECTRA_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one matrix from an ensemble and write it in triplet format.
    Sample {
        #[command(flatten)]
        src: Draw,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral radius of the nonbacktracking operator.
    RhoB {
        #[command(flatten)]
        src: Source,
        #[arg(long, value_enum, default_value_t = ModeArg::Restricted)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Operator norm of H and the deterministic bound in terms of rho(B).
    NormH {
        #[command(flatten)]
        src: Source,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Determinant identity on a matrix or on random Hermitian instances.
    IbCheck {
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Random instances when no matrix is given.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relative determinant tolerance.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Walk reduction tools.
    Walks {
        #[command(subcommand)]
        cmd: WalksCmd,
    },
    /// Monte Carlo experiments.
    Experiment {
        #[command(subcommand)]
        cmd: ExperimentCmd,
    },
}

#[derive(Subcommand)]
enum WalksCmd {
    /// Check every reduction property on a path file.
    Verify { path: PathBuf },
    /// Enumerate all normal paths and check each reduction.
    Enumerate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        ell: usize,
        #[arg(long, default_value = "hermitian")]
        mode: String,
        /// Print every path.
        #[arg(long)]
        list: bool,
    },
    /// Print the reduced triple of a path file.
    Reduce { path: PathBuf },
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Run a config and write its CSV.
    Run {
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Output path ("-" for stdout); defaults to the config's output key.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the solver tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// List the available experiments.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Restricted,
    Full,
}

#[derive(Args)]
struct Draw {
    #[arg(long, default_value = "hermitian-er")]
    ensemble: String,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 5.0)]
    d: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    trial: u64,
}

#[derive(Args)]
struct Source {
    /// Matrix file in triplet format; otherwise a sample is drawn.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[command(flatten)]
    draw: Draw,
}

/// Errors that map to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct ConfigFailure(String);

enum Outcome {
    Ok,
    CheckFailed,
}

fn draw(d: &Draw) -> Result<SparseMatrix> {
    let spec = match EnsembleKind::parse(&d.ensemble) {
        Some(EnsembleKind::HermitianEr) => EnsembleSpec::homogeneous_er(d.n, d.d)?,
        Some(EnsembleKind::DirectedEr) => EnsembleSpec::directed_er(d.n, d.d)?,
        _ => return Err(ConfigFailure(format!("ensemble must be hermitian-er or directed-er, got '{}'", d.ensemble)).into()),
    };
    Ok(sample(&spec, SeedSpec::new(d.seed, d.trial))?.h_sparse(MATERIALISE_LIMIT)?)
}

fn load(src: &Source) -> Result<SparseMatrix> {
    match &src.matrix {
        Some(p) => read_matrix(p),
        None => draw(&src.draw),
    }
}

fn read_matrix(p: &Path) -> Result<SparseMatrix> {
    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    parse_matrix(&text).map_err(|e| ConfigFailure(format!("{}: {e}", p.display())).into())
}

fn read_text(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).map_err(|e| ConfigFailure(format!("reading {}: {e}", p.display())).into())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) if p != Path::new("-") => {
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
            eprintln!("wrote {}", p.display());
        }
        _ => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Sample { src, out } => {
            emit(out.as_deref(), &write_matrix(&draw(&src)?))?;
            Ok(Outcome::Ok)
        }
        Command::RhoB { src, mode, tol } => {
            let h = load(&src)?;
            let mode = match mode {
                ModeArg::Restricted => NbMode::SupportRestricted,
                ModeArg::Full => NbMode::Full,
            };
            let cfg = SpectralConfig::default().with_tol(tol).with_seed(SeedSpec::new(src.draw.seed, 1));
            let r = spectral_radius(&build_nb_operator(&h, mode)?, &cfg)?;
            println!("rho_b = {}", r.rho);
            println!("method = {:?}, converged = {}, matvecs = {}", r.method, r.converged, r.iterations);
            Ok(if r.converged { Outcome::Ok } else { Outcome::CheckFailed })
        }
        Command::NormH { src, tol } => {
            let h = load(&src)?;
            if !h.is_hermitian() {
                return Err(ConfigFailure("norm-h needs a Hermitian matrix".into()).into());
            }
            let cfg = SpectralConfig::default().with_tol(tol).with_seed(SeedSpec::new(src.draw.seed, 1));
            let ext = hermitian_extremes(&h, &cfg)?;
            let rho = spectral_radius(&build_nb_operator(&h, NbMode::SupportRestricted)?, &cfg)?.rho;
            let b = norm_bound(&h, rho, ext.opnorm);
            println!("opnorm = {}", ext.opnorm);
            println!("lambda_max = {}, lambda_min = {}", ext.lambda_max, ext.lambda_min);
            println!("norm_2inf = {}, norm_1inf = {}, rho_b = {rho}", h.norm_2_to_inf(), h.norm_1_to_inf());
            println!("bound_slack = {}, cor_slack = {}", b.thm_slack(), b.cor_slack());
            Ok(if b.thm_slack() >= -1e-8 && b.cor_slack() >= -1e-8 { Outcome::Ok } else { Outcome::CheckFailed })
        }
        Command::IbCheck { matrix, trials, n, seed, tol } => {
            let instances: Vec<(String, SparseMatrix)> = match matrix {
                Some(p) => vec![(p.display().to_string(), read_matrix(&p)?)],
                None => {
                    let mut rng = SeedSpec::new(seed, 0).rng();
                    (0..trials)
                        .map(|k| Ok((format!("instance {k}"), random_hermitian(&mut rng, n, 0.6, k % 2 == 1)?)))
                        .collect::<Result<_>>()?
                }
            };
            let mut ok = true;
            for (name, h) in instances {
                let r = check_equivalence(&h, tol, 1e-6)?;
                println!(
                    "{name}: checked {}, skipped {}, worst ratio {:.3e}, {}",
                    r.checked,
                    r.skipped,
                    r.worst_ratio,
                    if r.passed() { "pass" } else { "FAIL" }
                );
                if !r.passed() {
                    println!("  forward {:?} missed {:?} spurious {:?}", r.forward_failures, r.missed_real, r.spurious_roots);
                }
                ok &= r.passed();
            }
            Ok(if ok { Outcome::Ok } else { Outcome::CheckFailed })
        }
        Command::Walks { cmd } => run_walks(cmd),
        Command::Experiment { cmd } => run_experiment_cmd(cmd),
    }
}

fn run_walks(cmd: WalksCmd) -> Result<Outcome> {
    match cmd {
        WalksCmd::Verify { path } => {
            let p = parse_walk(&read_text(&path)?).map_err(|e| ConfigFailure(e.to_string()))?;
            let r = verify_reduction(&p);
            for c in &r.checks {
                println!("{:<40} {}", c.name, if c.passed { "pass" } else { "FAIL" });
            }
            println!("ambiguous loop traversals: {}", r.ambiguous_loop_traversals);
            Ok(if r.all_passed() { Outcome::Ok } else { Outcome::CheckFailed })
        }
        WalksCmd::Reduce { path } => {
            let p = parse_walk(&read_text(&path)?).map_err(|e| ConfigFailure(e.to_string()))?;
            let t = reduce_path(&p)?;
            println!("gamma = {}", t.gamma);
            println!("k = {:?}", t.k);
            println!("U: {} vertices, {} edges", t.u.num_vertices(), t.u.num_edges());
            for (i, (z, s)) in t.zeta.iter().zip(format_zeta(&t)).enumerate() {
                println!("zeta{} = {}", i + 1, format_labels(&z.vertices));
                println!("zeta{} edges = {s}", i + 1);
            }
            Ok(Outcome::Ok)
        }
        WalksCmd::Enumerate { n, ell, mode, list } => {
            let mode = WalkMode::parse(&mode).map_err(|e| ConfigFailure(e.to_string()))?;
            let paths = enumerate_normal(n, ell, mode)?;
            let mut keys = std::collections::BTreeSet::new();
            let mut failures = 0usize;
            for p in &paths {
                let r = verify_reduction(p);
                let unique = r.triple.as_ref().is_some_and(|t| keys.insert(plain_key(t)));
                if !r.all_passed() || !unique {
                    failures += 1;
                    println!("FAIL {} {:?}", write_walk(p).trim_end().replace('\n', " | "), r.failures());
                } else if list {
                    println!("{}", write_walk(p).trim_end().replace('\n', " | "));
                }
            }
            println!("{} normal paths (n = {n}, l = {ell}, {}), {failures} failures", paths.len(), mode.name());
            Ok(if failures == 0 { Outcome::Ok } else { Outcome::CheckFailed })
        }
    }
}

fn run_experiment_cmd(cmd: ExperimentCmd) -> Result<Outcome> {
    match cmd {
        ExperimentCmd::List => {
            for k in ExperimentKind::ALL {
                println!("{:<18} {}", k.name(), k.description());
            }
            Ok(Outcome::Ok)
        }
        ExperimentCmd::Run { config, seed, trials, out, tol } => {
            let mut cfg = load_config(&config).map_err(|e| ConfigFailure(format!("{}: {e}", config.display())))?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(t) = trials {
                if t == 0 {
                    return Err(ConfigFailure("trials must be at least 1".into()).into());
                }
                cfg.trials = t;
            }
            if let Some(t) = tol {
                cfg.tol = t;
            }
            let records = run_experiment(&cfg)?;
            let target = out.or_else(|| cfg.output.as_ref().map(|o| config.parent().unwrap_or(Path::new(".")).join(o)));
            match target {
                Some(p) if p != Path::new("-") => {
                    write_results(&records, &p)?;
                    eprintln!("wrote {} records to {}", records.len(), p.display());
                }
                _ => print!("{}", records_to_string(&records)?),
            }
            Ok(Outcome::Ok)
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var("NBSPECTRA_THREADS") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| ConfigFailure(format!("NBSPECTRA_THREADS: bad value '{v}'")).into()),
        Err(_) => Ok(flag),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = thread_count(cli.threads).and_then(|threads| {
        if let Some(t) = threads {
            rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("configuring thread pool")?;
        }
        run(cli)
    });
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) if e.is::<ConfigFailure>() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
