use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use majvote::asymptotic::majority_complement_asymptotic;
use majvote::edgeworth::{lemma3_integral, sup_edgeworth_error};
use majvote::ensemble::{
    c_coefficient, err_exact, err_star, estimate_class, estimate_mixtures, minimal_t_with, ClassEstimate,
    EnsembleSpec, EstimateOptions, SizeMode, SizeOptions, VoteMatrix, DEFAULT_T_MAX,
};
use majvote::error::require_odd;
use majvote::exact::{build_curve, majority_complement_exact, scaled_residual};
use majvote::io::{curve_to_json, fmt_num, write_curve_csv, Cell, Table};
use majvote::simulate::{simulate_majority_with, CountMethod};
use majvote::MixtureSpec;

mod error;
mod tspec;

use error::CliError;
use tspec::{parse_list, TRange};

#[derive(Parser)]
#[command(name = "majvote", version, about = "Error rates of majority vote over exchangeable votes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact miss probability 1 - E[M_t]
    Exact(SpecAndT),
    /// First-order approximation F(1/2) + F''(1/2) / (8t)
    Asymptotic(SpecAndT),
    /// Exact, first-order and scaled residual over a range of t
    Curve(CurveArgs),
    /// Scaled residual t (1 - E[M_t] - F(1/2)) against its limit F''(1/2) / 8
    RateCheck(CurveArgs),
    /// Sup error of the lattice Edgeworth expansion over a theta x t grid
    EdgeworthCheck(EdgeworthArgs),
    /// Integral of the higher-order expansion term against the mixture
    Lemma3Check(CurveArgs),
    /// Ensemble test error err_t, its limit err* and the 1/t coefficient c
    Ensemble(SpecAndT),
    /// Smallest odd ensemble size within epsilon of err*
    Size(SizeArgs),
    /// Monte Carlo estimate of 1 - E[M_t]
    Simulate(SimulateArgs),
    /// Smoothed mixture estimates from a CSV vote matrix
    Estimate(EstimateArgs),
}

#[derive(Args)]
struct Output {
    /// Output format; each subcommand has its own default
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct SpecAndT {
    /// Mixture (or ensemble) specification: a JSON file path or inline JSON
    #[arg(long)]
    spec: String,
    /// Number of votes, odd
    #[arg(long)]
    t: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    spec: String,
    /// start:stop:step, every value odd
    #[arg(long, conflicts_with = "ts")]
    t_range: Option<TRange>,
    /// Comma-separated odd values of t
    #[arg(long)]
    ts: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct EdgeworthArgs {
    /// Comma-separated success probabilities in (0, 1)
    #[arg(long, default_value = "0.3,0.5,0.7")]
    thetas: String,
    #[arg(long, conflicts_with = "ts")]
    t_range: Option<TRange>,
    #[arg(long)]
    ts: Option<String>,
    /// Uniform grid points on [-6, 6], at least 1000
    #[arg(long, default_value_t = 2001)]
    grid: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SizeArgs {
    /// Ensemble specification: a JSON file path or inline JSON
    #[arg(long)]
    spec: String,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value = "asymptotic", value_parser = parse_mode)]
    mode: SizeMode,
    /// Largest t tried by the exact scan
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    t_max: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: String,
    #[arg(long)]
    t: u64,
    #[arg(long, default_value_t = 100_000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draw each vote count as one binomial or as t Bernoulli votes
    #[arg(long, value_enum, default_value = "binomial")]
    method: Method,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Binomial,
    Bernoulli,
}

#[derive(Args)]
struct EstimateArgs {
    /// CSV with header label,v1,...,vT
    #[arg(long)]
    votes: PathBuf,
    /// Estimate only this class (0 for g, 1 for g_tilde)
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    class: Option<u8>,
    #[arg(long, default_value_t = 30)]
    min_points: usize,
    #[arg(long, default_value_t = 10)]
    min_votes: usize,
    #[arg(long, default_value_t = 0.01)]
    bandwidth_floor: f64,
    #[command(flatten)]
    output: Output,
}

fn parse_mode(s: &str) -> Result<SizeMode, String> {
    s.parse().map_err(|e: majvote::Error| e.to_string())
}

/// A spec argument is inline JSON when it starts with `{`, a file path otherwise.
fn read_spec_text(arg: &str) -> Result<String, CliError> {
    if arg.trim_start().starts_with('{') {
        Ok(arg.to_string())
    } else {
        std::fs::read_to_string(arg).map_err(|e| CliError::io(arg, e))
    }
}

fn mixture(arg: &str) -> Result<MixtureSpec, CliError> {
    Ok(MixtureSpec::from_json(&read_spec_text(arg)?)?)
}

fn ensemble(arg: &str) -> Result<EnsembleSpec, CliError> {
    Ok(EnsembleSpec::from_json(&read_spec_text(arg)?)?)
}

fn t_values(range: &Option<TRange>, list: &Option<String>, default: &[u64]) -> Result<Vec<u64>, CliError> {
    let ts = match (range, list) {
        (Some(r), _) => r.values(),
        (None, Some(l)) => parse_list::<u64>(l, "t")?,
        (None, None) => default.to_vec(),
    };
    for &t in &ts {
        require_odd(t)?;
    }
    Ok(ts)
}

enum Artifact {
    Text(String),
    Json(Value),
    Table(Table),
    Raw(String),
}

fn emit(artifact: Artifact, output: &Output, default: Format) -> Result<(), CliError> {
    let format = output.format.unwrap_or(default);
    let mut sink: Box<dyn Write> = match &output.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| CliError::io(&path.display().to_string(), e))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    let io_err = |e: io::Error| CliError::io("output", e);
    match (artifact, format) {
        (Artifact::Raw(s), _) | (Artifact::Text(s), Format::Text) => writeln!(sink, "{s}").map_err(io_err)?,
        (Artifact::Table(t), Format::Csv) => t.write_csv(&mut sink)?,
        (Artifact::Table(t), Format::Json) => writeln!(sink, "{}", t.to_json()?).map_err(io_err)?,
        (Artifact::Table(t), Format::Text) => t.write_text(&mut sink)?,
        (Artifact::Json(v), Format::Json) | (Artifact::Json(v), Format::Text) => {
            writeln!(sink, "{}", serde_json::to_string_pretty(&v).expect("values serialize")).map_err(io_err)?
        }
        (Artifact::Json(_), Format::Csv) => {
            return Err(CliError::Usage("this subcommand has no CSV output; use --format json".into()))
        }
        (Artifact::Text(_), _) => unreachable!("single values are converted before emitting"),
    }
    sink.flush().map_err(io_err)
}

/// A single named value, as text, a one-row CSV, or a JSON object.
fn single(name: &str, t: u64, value: f64, output: &Output) -> Result<(), CliError> {
    match output.format.unwrap_or(Format::Text) {
        Format::Text => emit(Artifact::Text(fmt_num(value)), output, Format::Text),
        Format::Json => emit(Artifact::Json(json!({ "t": t, name: value })), output, Format::Json),
        Format::Csv => {
            let mut table = Table::new(&["t", name]);
            table.push(vec![t.into(), value.into()]);
            emit(Artifact::Table(table), output, Format::Csv)
        }
    }
}

fn class_json(est: &ClassEstimate) -> Value {
    json!({
        "mixture": est.mixture,
        "n_points": est.n_points,
        "bandwidth": est.bandwidth,
        "bandwidth_floored": est.bandwidth_floored,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Exact(a) => {
            require_odd(a.t)?;
            let spec = mixture(&a.spec)?;
            single("exact", a.t, majority_complement_exact(&spec, a.t)?, &a.output)
        }
        Command::Asymptotic(a) => {
            require_odd(a.t)?;
            let spec = mixture(&a.spec)?;
            single("asymptotic", a.t, majority_complement_asymptotic(&spec, a.t)?, &a.output)
        }
        Command::Curve(a) => {
            let ts = t_values(&a.t_range, &a.ts, &[1, 3, 5, 11, 21, 51, 101, 201, 501, 1001])?;
            let spec = mixture(&a.spec)?;
            let curve = build_curve(&spec, &ts)?;
            match a.output.format.unwrap_or(Format::Csv) {
                Format::Json => emit(Artifact::Raw(curve_to_json(&curve)?), &a.output, Format::Json),
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_curve_csv(&curve, &mut buf)?;
                    let text = String::from_utf8(buf).expect("CSV output is UTF-8");
                    emit(Artifact::Raw(text.trim_end().to_string()), &a.output, Format::Csv)
                }
                Format::Text => {
                    let mut table = Table::new(&["t", "exact", "asymptotic", "scaled_residual"]);
                    for e in &curve.entries {
                        table.push(vec![e.t.into(), e.exact.into(), e.asymptotic.into(), e.scaled_residual.into()]);
                    }
                    emit(Artifact::Table(table), &a.output, Format::Text)
                }
            }
        }
        Command::RateCheck(a) => {
            let ts = t_values(&a.t_range, &a.ts, &[101, 201, 401, 801, 1601, 2001])?;
            let spec = mixture(&a.spec)?;
            let target = spec.cdf_second_derivative(0.5)? / 8.0;
            let mut table = Table::new(&["t", "scaled_residual", "target", "abs_gap"]);
            for &t in &ts {
                let r = scaled_residual(&spec, t).map_err(|e| e.at_t(t))?;
                table.push(vec![t.into(), r.into(), target.into(), (r - target).abs().into()]);
            }
            emit(Artifact::Table(table), &a.output, Format::Csv)
        }
        Command::EdgeworthCheck(a) => {
            let thetas = parse_list::<f64>(&a.thetas, "theta")?;
            let ts = match (&a.t_range, &a.ts) {
                (Some(r), _) => r.values(),
                (None, Some(l)) => parse_list::<u64>(l, "t")?,
                (None, None) => vec![201, 801, 3201],
            };
            let mut table = Table::new(&["theta", "t", "sup_error", "t_times_sup_error"]);
            for &theta in &thetas {
                for &t in &ts {
                    let sup = sup_edgeworth_error(theta, t, a.grid)?;
                    table.push(vec![theta.into(), t.into(), sup.into(), (t as f64 * sup).into()]);
                }
            }
            emit(Artifact::Table(table), &a.output, Format::Csv)
        }
        Command::Lemma3Check(a) => {
            let ts = t_values(&a.t_range, &a.ts, &[101, 401, 1601])?;
            let spec = mixture(&a.spec)?;
            let mut table = Table::new(&["t", "integral", "abs_integral"]);
            for &t in &ts {
                let v = lemma3_integral(&spec, t).map_err(|e| e.at_t(t))?;
                table.push(vec![t.into(), v.into(), v.abs().into()]);
            }
            emit(Artifact::Table(table), &a.output, Format::Csv)
        }
        Command::Ensemble(a) => {
            require_odd(a.t)?;
            let spec = ensemble(&a.spec)?;
            let err_t = err_exact(&spec, a.t)?;
            let star = err_star(&spec)?;
            // c needs second derivatives, which point masses do not have
            let c = match c_coefficient(&spec) {
                Ok(c) => Some(c),
                Err(majvote::Error::NonSmoothMixture(_)) => None,
                Err(e) => return Err(e.into()),
            };
            match a.output.format.unwrap_or(Format::Json) {
                Format::Csv => {
                    let mut table = Table::new(&["t", "err_t", "err_star", "c"]);
                    table.push(vec![
                        a.t.into(),
                        err_t.into(),
                        star.into(),
                        c.map_or(Cell::Text(String::new()), Cell::Num),
                    ]);
                    emit(Artifact::Table(table), &a.output, Format::Csv)
                }
                _ => emit(
                    Artifact::Json(json!({ "t": a.t, "err_t": err_t, "err_star": star, "c": c })),
                    &a.output,
                    Format::Json,
                ),
            }
        }
        Command::Size(a) => {
            let spec = ensemble(&a.spec)?;
            let r = minimal_t_with(&spec, a.epsilon, a.mode, &SizeOptions { t_max: a.t_max })?;
            match a.output.format.unwrap_or(Format::Text) {
                Format::Text => emit(Artifact::Text(r.t.to_string()), &a.output, Format::Text),
                _ => emit(
                    Artifact::Json(serde_json::to_value(r).expect("size result serializes")),
                    &a.output,
                    Format::Json,
                ),
            }
        }
        Command::Simulate(a) => {
            require_odd(a.t)?;
            let spec = mixture(&a.spec)?;
            let method = match a.method {
                Method::Binomial => CountMethod::Binomial,
                Method::Bernoulli => CountMethod::Bernoulli,
            };
            let r = simulate_majority_with(&spec, a.t, a.reps, a.seed, method)?;
            emit(
                Artifact::Json(serde_json::to_value(r).expect("simulation result serializes")),
                &a.output,
                Format::Json,
            )
        }
        Command::Estimate(a) => {
            let file = File::open(&a.votes).map_err(|e| CliError::io(&a.votes.display().to_string(), e))?;
            let votes = VoteMatrix::read_csv(io::BufReader::new(file))?;
            let opts = EstimateOptions {
                min_points_per_class: a.min_points,
                min_votes: a.min_votes,
                bandwidth_floor: a.bandwidth_floor,
            };
            let value = match a.class {
                Some(label) => class_json(&estimate_class(&votes, label, &opts)?),
                None => {
                    let est = estimate_mixtures(&votes, &opts)?;
                    json!({ "g": class_json(&est.g), "g_tilde": class_json(&est.g_tilde) })
                }
            };
            emit(Artifact::Json(value), &a.output, Format::Json)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            // first paragraph of clap's message, without the usage block
            let text = e.to_string();
            let first = text.split("\n\n").next().unwrap_or_default();
            let joined = first.split_whitespace().collect::<Vec<_>>().join(" ");
            let err = CliError::Usage(joined.strip_prefix("error: ").unwrap_or(&joined).to_string());
            eprintln!("{}", err.diagnostic());
            return ExitCode::from(err.exit_code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code())
        }
    }
}
