use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kphylo::exactcount::{internal_count, labeled_t_pow, LimitDistribution};
use kphylo::report::{decimal, ratio_string, SIG_DIGITS};
use kphylo::{convergence_table, estimate_rank_distribution, sample_batch, CountTable, Error};
use serde::Serialize;

mod verify;

#[derive(Parser, Debug)]
#[command(
    name = "kphylo",
    version,
    about = "Exact counts, limits and uniform samples of k-phylogenetic trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug)]
struct Global {
    /// Output format; defaults to newick for `sample` and tsv elsewhere.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Sampling threads (0 = one per available core).
    #[arg(long, global = true, env = "KPHYLO_WORKERS", default_value_t = 0)]
    workers: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Tsv,
    Json,
    Newick,
}

#[derive(Args, Debug)]
struct KArg {
    /// Children per internal vertex (k >= 2).
    #[arg(long, short, value_parser = clap::value_parser!(u32).range(2..))]
    k: u32,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Number of trees on n labeled leaves.
    Count {
        #[command(flatten)]
        k: KArg,
        #[arg(long, short)]
        n: usize,
    },
    /// Vertices of each rank, summed over all trees on [n].
    Census {
        #[command(flatten)]
        k: KArg,
        #[arg(long, short)]
        n: usize,
        /// Highest rank reported (default: highest possible).
        #[arg(long)]
        max_rank: Option<u32>,
    },
    /// Limiting rank probabilities as n grows.
    Limits {
        #[command(flatten)]
        k: KArg,
        #[arg(long, default_value_t = 5)]
        max_rank: u32,
    },
    /// Uniformly random trees.
    Sample {
        #[command(flatten)]
        k: KArg,
        #[arg(long, short)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo rank frequencies against the limiting law.
    Estimate {
        #[command(flatten)]
        k: KArg,
        #[arg(long, short)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        max_rank: u32,
    },
    /// Cross-checks enumeration, recurrences, closed forms, series and the sampler.
    Verify {
        #[command(flatten)]
        k: KArg,
        #[arg(long)]
        n_max: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write every enumerated tree, one Newick line each.
        #[arg(long)]
        dump_newick: Option<PathBuf>,
    },
    /// Exact ratio m_i(n)/m_0(n) along a grid of n.
    Convergence {
        #[command(flatten)]
        k: KArg,
        #[arg(long, short)]
        i: u32,
        #[arg(long, value_delimiter = ',', required = true)]
        n_grid: Vec<usize>,
        /// Powers l of T whose weight [x^n]T^l / [x^n]M_0 is tabulated.
        #[arg(long, value_delimiter = ',')]
        ells: Vec<usize>,
    },
}

/// Failure of a command, mapped to the process exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_internal() {
            Failure::Internal(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("i/o error: {e}"))
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    #[serde(flatten)]
    body: T,
}

fn write_json<T: Serialize>(out: &mut dyn Write, command: &str, body: T) -> CmdResult {
    serde_json::to_writer_pretty(&mut *out, &Envelope { command, body })
        .map_err(|e| Failure::Usage(format!("cannot write json: {e}")))?;
    writeln!(out)?;
    Ok(())
}

fn no_newick(command: &str) -> Failure {
    Failure::Usage(format!(
        "--format newick is only available for `sample`, not `{command}`"
    ))
}

/// Highest rank any vertex can have in a tree on `[n]`.
fn top_rank(k: u32, n: usize) -> u32 {
    let mut i = 0;
    let mut p = k as usize;
    while p <= n {
        i += 1;
        p = p.saturating_mul(k as usize);
    }
    i
}

fn workers(requested: usize) -> usize {
    if requested > 0 {
        requested
    } else {
        std::thread::available_parallelism().map_or(1, |p| p.get())
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> CmdResult {
    let g = &cli.global;
    let fmt = |default: Format| g.format.unwrap_or(default);
    match cli.command {
        Command::Count { k: KArg { k }, n } => {
            let count = if internal_count(k, n)?.is_some() {
                labeled_t_pow(k, 1, n)?
            } else {
                0u32.into()
            };
            match fmt(Format::Tsv) {
                Format::Tsv => writeln!(out, "{count}")?,
                Format::Json => {
                    #[derive(Serialize)]
                    struct Body {
                        k: u32,
                        n: usize,
                        count: String,
                    }
                    write_json(
                        out,
                        "count",
                        Body {
                            k,
                            n,
                            count: count.to_string(),
                        },
                    )?
                }
                Format::Newick => return Err(no_newick("count")),
            }
        }
        Command::Census {
            k: KArg { k },
            n,
            max_rank,
        } => {
            internal_count(k, n)?;
            let max_rank = max_rank.unwrap_or_else(|| top_rank(k, n));
            let rows = (max_rank + 1).min(top_rank(k, n));
            let table = CountTable::with_max_rank(k, n, rows)?;
            let census = table.rank_census(n, max_rank)?;
            let counts: Vec<String> = (0..=max_rank as usize)
                .map(|i| census.by_rank.get(i).map_or("0".to_string(), |c| c.to_string()))
                .collect();
            match fmt(Format::Tsv) {
                Format::Tsv => {
                    writeln!(out, "rank\tcount\tfraction\tfraction_decimal")?;
                    for (i, c) in counts.iter().enumerate() {
                        let (p, d) = census.ratio(i).map_or(("0/1".into(), "0".into()), |r| {
                            (ratio_string(&r), decimal(&r, SIG_DIGITS))
                        });
                        writeln!(out, "{i}\t{c}\t{p}\t{d}")?;
                    }
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct Body {
                        k: u32,
                        n: usize,
                        max_rank: u32,
                        by_rank: Vec<String>,
                        tail: String,
                        total: String,
                    }
                    let body = Body {
                        k,
                        n,
                        max_rank,
                        by_rank: counts,
                        tail: census.tail.to_string(),
                        total: census.total.to_string(),
                    };
                    write_json(out, "census", body)?
                }
                Format::Newick => return Err(no_newick("census")),
            }
        }
        Command::Limits {
            k: KArg { k },
            max_rank,
        } => {
            let dist = LimitDistribution::new(k, max_rank)?;
            match fmt(Format::Tsv) {
                Format::Tsv => {
                    writeln!(out, "rank\tc\tprobability\tprobability_decimal\ttail\ttail_decimal")?;
                    for e in &dist.entries {
                        writeln!(
                            out,
                            "{}\t{}\t{}\t{}\t{}\t{}",
                            e.rank,
                            e.c,
                            ratio_string(&e.point_prob),
                            decimal(&e.point_prob, SIG_DIGITS),
                            ratio_string(&e.tail_prob),
                            decimal(&e.tail_prob, SIG_DIGITS)
                        )?;
                    }
                }
                Format::Json => write_json(out, "limits", &dist)?,
                Format::Newick => return Err(no_newick("limits")),
            }
        }
        Command::Sample {
            k: KArg { k },
            n,
            count,
            seed,
        } => {
            internal_count(k, n)?.ok_or(Error::Inadmissible { k, n })?;
            let table = CountTable::trees_only(k, n)?;
            let trees: Vec<String> = sample_batch(&table, n, count, seed, workers(g.workers))?
                .iter()
                .map(|t| t.to_newick())
                .collect();
            match fmt(Format::Newick) {
                Format::Newick => {
                    for t in &trees {
                        writeln!(out, "{t}")?;
                    }
                }
                Format::Tsv => {
                    writeln!(out, "index\tnewick")?;
                    for (j, t) in trees.iter().enumerate() {
                        writeln!(out, "{j}\t{t}")?;
                    }
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct Body {
                        k: u32,
                        n: usize,
                        seed: u64,
                        trees: Vec<String>,
                    }
                    write_json(out, "sample", Body { k, n, seed, trees })?
                }
            }
        }
        Command::Estimate {
            k: KArg { k },
            n,
            samples,
            seed,
            max_rank,
        } => {
            internal_count(k, n)?.ok_or(Error::Inadmissible { k, n })?;
            let table = CountTable::trees_only(k, n)?;
            let report = estimate_rank_distribution(&table, n, samples, seed, max_rank, workers(g.workers))?;
            match fmt(Format::Tsv) {
                Format::Tsv => write!(out, "{}", report.to_tsv())?,
                Format::Json => write_json(out, "estimate", &report)?,
                Format::Newick => return Err(no_newick("estimate")),
            }
        }
        Command::Verify {
            k: KArg { k },
            n_max,
            seed,
            dump_newick,
        } => {
            if fmt(Format::Tsv) == Format::Newick {
                return Err(no_newick("verify"));
            }
            let report = verify::run(k, n_max, seed, workers(g.workers), dump_newick.as_deref())?;
            match fmt(Format::Tsv) {
                Format::Json => write_json(out, "verify", &report)?,
                _ => {
                    for c in &report.checks {
                        writeln!(
                            out,
                            "{}\t{}\t{}",
                            if c.passed { "PASS" } else { "FAIL" },
                            c.name,
                            c.detail
                        )?;
                    }
                    writeln!(out, "{}", if report.passed { "PASS" } else { "FAIL" })?;
                }
            }
            if !report.passed {
                out.flush()?;
                let failed = report.checks.iter().filter(|c| !c.passed).count();
                return Err(Failure::Internal(format!("{failed} verification check(s) failed")));
            }
        }
        Command::Convergence {
            k: KArg { k },
            i,
            n_grid,
            ells,
        } => {
            let n_max = n_grid.iter().copied().max().unwrap_or(1);
            internal_count(k, n_max)?;
            let table = CountTable::with_max_rank(k, n_max, i)?;
            let conv = convergence_table(&table, i, &n_grid, &ells)?;
            match fmt(Format::Tsv) {
                Format::Tsv => write!(out, "{}", conv.to_tsv())?,
                Format::Json => write_json(out, "convergence", &conv)?,
                Format::Newick => return Err(no_newick("convergence")),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out: Box<dyn Write> = match &cli.global.output {
        Some(path) => match File::create(path) {
            Ok(f) => Box::new(BufWriter::new(f)),
            Err(e) => {
                eprintln!("error: cannot create {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let result = run(cli, &mut *out).and_then(|()| out.flush().map_err(Failure::from));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}
