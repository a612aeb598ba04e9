use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use bridge_extrema::distributions::Law;
use bridge_extrema::gof::{run_test, GofOptions, NullDist, Sample, TestKind};
use bridge_extrema::laplace::ThetaParam;
use bridge_extrema::mc::{McConfig, Refinement};
use bridge_extrema::verify::{self, Grid, Suite};
use bridge_extrema::{Accuracy, Error};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

const THREADS_ENV: &str = "BRIDGE_EXTREMA_THREADS";

#[derive(Parser)]
#[command(name = "bridge-extrema", version, about = "Laws of Brownian-bridge extrema and their verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one law at one point.
    Eval {
        #[arg(long, value_parser = parse_law)]
        dist: Law,
        /// `x`, or `z,w` for the joint law.
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_terms: usize,
    },
    /// Tabulate a law on `from, from + step, ..., to` as CSV.
    Table {
        #[arg(long, value_parser = parse_law)]
        dist: Law,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long, allow_negative_numbers = true)]
        step: f64,
        /// Fixed second argument for the joint law.
        #[arg(long, allow_negative_numbers = true)]
        y: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_terms: usize,
    },
    /// Goodness-of-fit test of a sample file against a null distribution.
    Test {
        /// One value per line; a non-numeric first line is taken as a header.
        #[arg(long)]
        file: PathBuf,
        #[arg(long, value_parser = parse_test)]
        test: TestKind,
        /// uniform | normal:mu,sigma | exp:rate | gamma-half:theta | arcsine
        #[arg(long, value_parser = parse_null)]
        null: NullDist,
        /// Samples smaller than this are flagged as outside the asymptotic regime.
        #[arg(long, default_value_t = bridge_extrema::gof::DEFAULT_SMALL_N)]
        small_n: usize,
    },
    /// Compare Monte Carlo estimates with the closed forms.
    McVerify {
        #[arg(long)]
        paths: usize,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, value_enum, default_value_t = RefinementArg::Exact)]
        refinement: RefinementArg,
        /// Worker threads; overrides BRIDGE_EXTREMA_THREADS.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check the gamma-mixture identities on a grid.
    LaplaceVerify {
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
        /// `from:to:step`
        #[arg(long, default_value = "0.2:3:0.2", value_parser = parse_grid)]
        grid: Grid,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Extrema,
    Excursion,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum RefinementArg {
    Exact,
    Grid,
}

fn parse_law(s: &str) -> Result<Law, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_test(s: &str) -> Result<TestKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_null(s: &str) -> Result<NullDist, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    /// Bad arguments or input; exit 2.
    Usage(anyhow::Error),
    /// A computation failed to reach its tolerance; exit 1.
    Numeric(anyhow::Error),
    /// Output was produced but at least one check failed; exit 1.
    Verification(usize),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let numeric = e.chain().any(|c| {
            matches!(
                c.downcast_ref::<Error>(),
                Some(Error::Accuracy { .. } | Error::Quadrature { .. } | Error::OutOfRange { .. })
            )
        });
        if numeric {
            Failure::Numeric(e)
        } else {
            Failure::Usage(e)
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn accuracy(tol: f64, max_terms: usize) -> Result<Accuracy, Failure> {
    Ok(Accuracy::new(tol, max_terms)?)
}

fn parse_point(at: &str, law: Law) -> anyhow::Result<Vec<f64>> {
    let args = at
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("`{p}` in --at is not a number"))
        })
        .collect::<anyhow::Result<Vec<f64>>>()?;
    if args.len() != law.arity() {
        bail!(
            "--dist {} takes {} comma-separated value(s), got {}",
            law.name(),
            law.arity(),
            args.len()
        );
    }
    Ok(args)
}

fn eval_json(law: Law, args: &[f64], acc: &Accuracy) -> Result<Value, Failure> {
    let e = law.evaluate(args, acc)?;
    Ok(json!({
        "args": args,
        "dist": law.name(),
        "trunc_bound": e.trunc_bound,
        "value": e.value(),
    }))
}

fn table_csv(law: Law, grid: &Grid, y: Option<f64>, acc: &Accuracy) -> Result<String, Failure> {
    match (law.arity(), y) {
        (2, None) => return Err(Failure::Usage(anyhow!("--dist joint needs --y"))),
        (1, Some(_)) => return Err(Failure::Usage(anyhow!("--y only applies to --dist joint"))),
        _ => {}
    }
    let mut csv = String::from("x,value\n");
    for x in grid.points() {
        let args: Vec<f64> = std::iter::once(x).chain(y).collect();
        let v = law
            .evaluate(&args, acc)
            .map_err(|e| anyhow::Error::from(e).context(format!("at x = {x}")))?;
        csv.push_str(&format!("{},{}\n", number(x), number(v.value())));
    }
    Ok(csv)
}

/// Shortest round-trip form, identical to the JSON rendering of the number.
fn number(v: f64) -> String {
    Value::from(v).to_string()
}

fn read_sample(path: &PathBuf) -> anyhow::Result<Sample> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.trim().trim_end_matches(',');
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => bail!("{}:{}: `{field}` is not a number", path.display(), i + 1),
        }
    }
    Sample::new(values).with_context(|| format!("in {}", path.display()))
}

fn threads(flag: Option<usize>) -> anyhow::Result<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map(Some)
            .with_context(|| format!("{THREADS_ENV}=`{s}` is not a thread count")),
        Err(_) => Ok(None),
    }
}

fn print_json(value: &Value) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn failures(checks: &Value) -> usize {
    checks
        .as_array()
        .map_or(0, |a| a.iter().filter(|c| c["pass"] == Value::Bool(false)).count())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Eval {
            dist,
            at,
            tol,
            max_terms,
        } => {
            let acc = accuracy(tol, max_terms)?;
            let args = parse_point(&at, dist)?;
            print_json(&eval_json(dist, &args, &acc)?)?;
        }
        Command::Table {
            dist,
            from,
            to,
            step,
            y,
            out,
            tol,
            max_terms,
        } => {
            let acc = accuracy(tol, max_terms)?;
            let grid = Grid::new(from, to, step)?;
            let csv = table_csv(dist, &grid, y, &acc)?;
            match out {
                Some(path) => fs::write(&path, csv)
                    .with_context(|| format!("cannot write {}", path.display()))?,
                None => io::stdout().lock().write_all(csv.as_bytes()).map_err(anyhow::Error::from)?,
            }
        }
        Command::Test {
            file,
            test,
            null,
            small_n,
        } => {
            let sample = read_sample(&file)?;
            let opts = GofOptions {
                small_n,
                ..GofOptions::default()
            };
            let report = run_test(test, &sample, |x| null.cdf(x), &opts)?;
            if report.small_n_warning {
                eprintln!(
                    "warning: n = {} is below {small_n}; the asymptotic p-value is approximate",
                    report.n
                );
            }
            print_json(&serde_json::to_value(report).map_err(anyhow::Error::from)?)?;
        }
        Command::McVerify {
            paths,
            steps,
            seed,
            suite,
            refinement,
            threads: flag,
        } => {
            let mut config = McConfig::new(paths, steps, seed).with_refinement(match refinement {
                RefinementArg::Exact => Refinement::Exact,
                RefinementArg::Grid => Refinement::Grid,
            });
            if let Some(n) = threads(flag)? {
                config = config.with_workers(n);
            }
            let suite = match suite {
                SuiteArg::Extrema => Suite::Extrema,
                SuiteArg::Excursion => Suite::Excursion,
                SuiteArg::All => Suite::All,
            };
            let checks = verify::mc_verify(&config, suite)?;
            let value = serde_json::to_value(checks).map_err(anyhow::Error::from)?;
            print_json(&value)?;
            let failed = failures(&value);
            if failed > 0 {
                return Err(Failure::Verification(failed));
            }
        }
        Command::LaplaceVerify { theta, grid } => {
            let tp = ThetaParam::new(theta)?;
            let checks = verify::laplace_verify(tp, &grid)?;
            let value = serde_json::to_value(checks).map_err(anyhow::Error::from)?;
            print_json(&value)?;
            let failed = failures(&value);
            if failed > 0 {
                return Err(Failure::Verification(failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(n)) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(1)
        }
    }
}
