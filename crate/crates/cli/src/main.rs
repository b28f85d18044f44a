//! `fracvolt`: command-line driver for the experiments.
//!
//! Exit codes: 0 success, 1 usage or numerical error, 2 divergence detected
//! (informative), 3 invariant violation.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fracvolt::experiments::{self as ex, Corpus, ExperimentConfig, Format, Table};
use fracvolt::{Error, RadialWeight};

#[derive(Parser, Debug)]
#[command(name = "fracvolt", version, about = "Fractional derivatives, Volterra-type operators and their norms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Weight: `std:<beta>`, `exp:<c>:<gamma>`, `expr:<density>`, `tail:<tail>` or a JSON descriptor.
    #[arg(long, global = true)]
    weight: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Matrix truncation N.
    #[arg(long, global = true)]
    trunc: Option<usize>,
    /// Classifier depth, or anchor depth for BMOA quantities.
    #[arg(long, global = true)]
    depth: Option<u32>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Fmt>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON experiment configuration; explicit flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Fmt {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Moments μ_x with an independent quadrature column.
    Moments {
        /// Comma-separated exponents.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 3.0, 5.0])]
        x: Vec<f64>,
    },
    /// Doubling-class verdicts.
    Classify,
    /// Coefficients of D^μ f and I^μ f, and the representation-identity residuals.
    Frac {
        #[arg(long, default_value = "z")]
        symbol: String,
    },
    /// A single norm or seminorm.
    Norm {
        /// One of hardy2, hardy2-lp, hardy-ref, tent, bmoa, bmoa-kernel, bmoa-classical, bloch, besov, besov-classical, bergman.
        name: String,
        #[arg(long, default_value = "z")]
        symbol: String,
    },
    /// Singular values and Schatten norms of V_{μ,g} on A²_α.
    Volterra {
        #[arg(long, default_value = "z")]
        symbol: String,
        /// Comma-separated Schatten exponents (default: --p).
        #[arg(long, value_delimiter = ',')]
        ps: Vec<f64>,
        /// Write the spectrum as CSV (index, lambda).
        #[arg(long)]
        spectrum: Option<PathBuf>,
        /// Write the matrix as JSON.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Both sides of a norm equivalence over a corpus.
    Equivalence {
        /// One of h2-lp, tent-hp, bmoa, besov, schatten.
        name: String,
        /// `monomials:<min>:<max>`, `random:<count>:<max_degree>`, `log:<N>,<N>,…`.
        #[arg(long)]
        corpus: Option<String>,
    },
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn parse_corpus(s: &str) -> Result<Corpus, Failure> {
    let bad = || Failure::Usage(format!("bad corpus '{s}'"));
    let num = |t: Option<&str>| t.and_then(|v| v.parse::<usize>().ok()).ok_or_else(bad);
    let mut parts = s.splitn(3, ':');
    match parts.next() {
        Some("monomials") => Ok(Corpus::Monomials { min: num(parts.next())?, max: num(parts.next())? }),
        Some("random") => Ok(Corpus::Random { count: num(parts.next())?, max_degree: num(parts.next())? }),
        Some("log") => {
            let list = parts.next().ok_or_else(bad)?;
            let terms = list.split(',').map(|t| t.trim().parse::<usize>().map_err(|_| bad())).collect::<Result<_, _>>()?;
            Ok(Corpus::LogBranch { terms })
        }
        _ => Err(bad()),
    }
}

fn config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(w) = &cli.weight {
        cfg.weight = RadialWeight::parse(w)?.descriptor();
    }
    if let Some(a) = cli.alpha {
        cfg.alpha = a;
    }
    if let Some(p) = cli.p {
        cfg.p = p;
    }
    if let Some(n) = cli.trunc {
        cfg.trunc = n;
    }
    if let Some(f) = cli.format {
        cfg.format = match f {
            Fmt::Csv => Format::Csv,
            Fmt::Json => Format::Json,
        };
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn write(path: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let mut cfg = config(cli)?;
    let w = RadialWeight::from_descriptor(&cfg.weight)?;
    let table: Table = match &cli.cmd {
        Cmd::Moments { x } => ex::cmd_moments(&w, x)?,
        Cmd::Classify => {
            let depth = cli.depth.unwrap_or(fracvolt::weight_class::DEFAULT_DEPTH);
            let (rep, table) = ex::cmd_classify(&w, depth)?;
            if let Format::Json = cfg.format {
                write(&cli.out, &format!("{:#}\n", serde_json::to_value(&rep).unwrap_or_default()))?;
                return Ok(false);
            }
            table
        }
        Cmd::Frac { symbol } => ex::cmd_frac(&w, &ex::parse_symbol(symbol)?, symbol)?,
        Cmd::Norm { name, symbol } => {
            if let Some(d) = cli.depth {
                cfg.depth = d;
            }
            ex::cmd_norm(name, &w, &ex::parse_symbol(symbol)?, symbol, &cfg)?
        }
        Cmd::Volterra { symbol, ps, spectrum, matrix } => {
            let g = ex::parse_symbol(symbol)?;
            let ps = if ps.is_empty() { vec![cfg.p] } else { ps.clone() };
            let (spec, table) = ex::cmd_volterra(&w, &g, symbol, cfg.alpha, cfg.trunc, &ps)?;
            if let Some(path) = spectrum {
                write(&Some(path.clone()), &spec.to_csv())?;
            }
            if let Some(path) = matrix {
                let m = fracvolt::volterra::volterra_matrix(&w, &g, cfg.alpha, cfg.trunc)?;
                write(&Some(path.clone()), &format!("{:#}\n", m.to_json()))?;
            }
            table
        }
        Cmd::Equivalence { name, corpus } => {
            if let Some(c) = corpus {
                cfg.corpus = parse_corpus(c)?;
            }
            if let Some(d) = cli.depth {
                cfg.depth = d;
            }
            ex::cmd_equivalence(name, &cfg)?
        }
    };
    write(&cli.out, &table.render(cfg.format)?)?;
    Ok(table.divergent())
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("FRACVOLT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // only fails if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("fracvolt: divergence detected");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e @ Error::Invariant(_))) => {
            eprintln!("fracvolt: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("fracvolt: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("fracvolt: {m}");
            ExitCode::from(1)
        }
    }
}
