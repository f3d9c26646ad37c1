mod input;

use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use expdet::expdet::{effective_log_upper, hadamard_log_upper, logdet_exp, theorem_bounds};
use expdet::gaussrbf::{
    gaussian_bounds, geometric_grid, interpolate, logdet_gaussian, select_shape_detail, sweep,
    SweepRow,
};
use expdet::quadcheck::{
    check_corollary_identity, check_lemma1_reduction, check_theorem_identity, QuadratureConfig,
};
use expdet::verify::{run_verify, VerifyConfig, SANDWICH_SLACK};
use expdet::{Error, ExpMatrixSpec, GaussianModel, PrecisionConfig, Result};

use input::{parse_grid, parse_interval, parse_nodes, parse_shape, parse_size_range, parse_values};

const COROLLARY_THRESHOLD: f64 = 1e-10;
const THEOREM_THRESHOLD: f64 = 1e-8;
const LEMMA1_THRESHOLD: f64 = 1e-8;
/// Largest `|log_det|` for which the plain determinant is also reported.
const REPRESENTABLE_LOG: f64 = 700.0;

#[derive(Parser, Debug)]
#[command(name = "expdet", version, about = "Determinant bounds for exponential and Gaussian matrices")]
struct Cli {
    /// Mantissa bits of the first oracle evaluation.
    #[arg(long, global = true, env = "EXPDET_PREC", default_value_t = 256)]
    precision: usize,

    /// Output format (sweeps default to csv, everything else to json).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bounds and oracle log-determinant of [exp(x_i y_j)].
    Bounds(BoundsArgs),
    /// Randomized sandwich, Hadamard and total-positivity checks.
    Verify(VerifyArgs),
    /// Quadrature checks of the integral identities.
    Identity(IdentityArgs),
    /// Gaussian kernel matrix [exp(-lambda (t_j - t_i)^2 / 2)].
    #[command(subcommand)]
    Gauss(GaussCommand),
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// Strictly increasing row nodes, comma-separated or @file.
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    /// Strictly increasing column nodes, comma-separated or @file.
    #[arg(long, allow_hyphen_values = true)]
    y: String,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Matrix sizes, `a..b` inclusive or a single size.
    #[arg(long, default_value = "1..7")]
    n: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Node interval `lo:hi`.
    #[arg(long, default_value = "-3:3", allow_hyphen_values = true)]
    range: String,
    /// Smallest gap between consecutive random nodes.
    #[arg(long, default_value_t = 1e-3)]
    min_gap: f64,
    /// Shape parameter interval `lo:hi` for the Gaussian trials.
    #[arg(long, default_value = "0.1:10")]
    lambda_range: String,
    /// Largest n whose minors are all enumerated.
    #[arg(long, default_value_t = 4)]
    tp_max_n: usize,
}

#[derive(Args, Debug)]
struct IdentityArgs {
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    /// Enables the exponential identity with c = u_sum / (n - 1).
    #[arg(long)]
    u_sum: Option<f64>,
    /// Column nodes; enables the reduction check against the oracle.
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    /// Gauss points per dimension.
    #[arg(long, default_value_t = 24)]
    order: usize,
    /// Largest number of integration dimensions.
    #[arg(long, default_value_t = 3)]
    max_dims: usize,
}

#[derive(Subcommand, Debug)]
enum GaussCommand {
    /// Bounds and oracle log-determinant.
    Bounds {
        #[arg(long, allow_hyphen_values = true)]
        t: String,
        /// Positive shape parameter or `auto`.
        #[arg(long, default_value = "auto")]
        lambda: String,
    },
    /// The shape parameter N / S.
    Select {
        #[arg(long, allow_hyphen_values = true)]
        t: String,
    },
    /// Objective, bounds and oracle over a geometric lambda grid.
    Sweep {
        #[arg(long, allow_hyphen_values = true)]
        t: String,
        /// Grid `min:max:count`.
        #[arg(long)]
        lambda: String,
        /// Data values, required for --loocv.
        #[arg(long, allow_hyphen_values = true)]
        values: Option<String>,
        /// Adds the leave-one-out error column.
        #[arg(long)]
        loocv: bool,
    },
    /// Interpolation coefficients for data at the nodes.
    Interp {
        #[arg(long, allow_hyphen_values = true)]
        t: String,
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long, default_value = "auto")]
        lambda: String,
    },
}

/// A command's result: the document to print and whether its checks held.
struct Outcome {
    body: Body,
    passed: bool,
}

enum Body {
    Report(Value),
    Sweep { rows: Vec<SweepRow>, loocv: bool },
}

fn report<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("reports serialize")
}

fn gap_ok(gap: f64) -> bool {
    gap >= -SANDWICH_SLACK
}

fn cmd_bounds(args: &BoundsArgs, precision: &PrecisionConfig) -> Result<Outcome> {
    let x = parse_nodes(&args.x, "--x")?;
    let y = parse_nodes(&args.y, "--y")?;
    let spec = ExpMatrixSpec::new(x, y)?;
    let bounds = theorem_bounds(&spec);
    let det = logdet_exp(&spec, precision)?;
    let log_det = det.value.log_abs;
    let lower_gap = log_det - bounds.log_lower;
    let upper_gap = bounds.log_upper - log_det;
    let mut out = json!({
        "x": spec.x(),
        "y": spec.y(),
        "precision": precision.mantissa_bits,
        "n": spec.n(),
        "log_lower": bounds.log_lower,
        "log_det": log_det,
        "log_upper": bounds.log_upper,
        "log_hadamard": hadamard_log_upper(&spec),
        "log_effective_upper": effective_log_upper(&spec),
        "lower_gap": lower_gap,
        "upper_gap": upper_gap,
        "precision_achieved": det.achieved_rel_tol,
        "mantissa_bits": det.mantissa_bits,
    });
    if log_det.abs() < REPRESENTABLE_LOG {
        out["det_if_representable"] = json!(log_det.exp());
    }
    Ok(Outcome {
        body: Body::Report(out),
        passed: gap_ok(lower_gap) && gap_ok(upper_gap),
    })
}

fn cmd_verify(args: &VerifyArgs, precision: &PrecisionConfig) -> Result<Outcome> {
    let (n_min, n_max) = parse_size_range(&args.n)?;
    let (node_lo, node_hi) = parse_interval(&args.range, "--range")?;
    let (lambda_lo, lambda_hi) = parse_interval(&args.lambda_range, "--lambda-range")?;
    let cfg = VerifyConfig {
        n_min,
        n_max,
        trials: args.trials,
        seed: args.seed,
        node_lo,
        node_hi,
        min_gap: args.min_gap,
        lambda_lo,
        lambda_hi,
        tp_max_n: args.tp_max_n,
        precision: *precision,
    };
    let summary = run_verify(&cfg)?;
    Ok(Outcome {
        passed: summary.passed(),
        body: Body::Report(report(&summary)),
    })
}

fn residual_entry(residual: f64, threshold: f64) -> Value {
    json!({ "residual": residual, "threshold": threshold, "passed": residual <= threshold })
}

fn cmd_identity(args: &IdentityArgs, precision: &PrecisionConfig) -> Result<Outcome> {
    let x = parse_nodes(&args.x, "--x")?;
    let qcfg = QuadratureConfig {
        order: args.order,
        max_dims: args.max_dims,
    };
    let mut checks = Map::new();
    let mut passed = true;
    let mut record = |name: &str, residual: f64, threshold: f64| {
        passed &= residual <= threshold;
        checks.insert(name.to_string(), residual_entry(residual, threshold));
    };
    record(
        "corollary",
        check_corollary_identity(&x, &qcfg)?,
        COROLLARY_THRESHOLD,
    );
    if let Some(u_sum) = args.u_sum {
        record(
            "theorem",
            check_theorem_identity(&x, u_sum, &qcfg)?,
            THEOREM_THRESHOLD,
        );
    }
    let y = match &args.y {
        Some(raw) => Some(parse_nodes(raw, "--y")?),
        None => None,
    };
    if let Some(y) = &y {
        let spec = ExpMatrixSpec::new(x.clone(), y.clone())?;
        if spec.n() >= 2 {
            record(
                "lemma1_reduction",
                check_lemma1_reduction(&spec, &qcfg, precision)?,
                LEMMA1_THRESHOLD,
            );
        }
    }
    let out = json!({
        "x": x,
        "y": y,
        "u_sum": args.u_sum,
        "order": qcfg.order,
        "max_dims": qcfg.max_dims,
        "precision": precision.mantissa_bits,
        "checks": checks,
        "passed": passed,
    });
    Ok(Outcome {
        body: Body::Report(out),
        passed,
    })
}

fn cmd_gauss(cmd: &GaussCommand, precision: &PrecisionConfig) -> Result<Outcome> {
    match cmd {
        GaussCommand::Bounds { t, lambda } => {
            let t = parse_nodes(t, "--t")?;
            let lambda = parse_shape(lambda)?.resolve(&t)?;
            let model = GaussianModel::new(t, lambda)?;
            let bounds = gaussian_bounds(&model);
            let det = logdet_gaussian(&model, precision)?;
            let log_det = det.value.log_abs;
            let mut out = json!({
                "t": model.t(),
                "lambda": lambda,
                "precision": precision.mantissa_bits,
                "n": model.n(),
                "log_lower": bounds.log_lower,
                "log_det": log_det,
                "log_upper": bounds.log_upper,
                "lower_gap": log_det - bounds.log_lower,
                "upper_gap": bounds.log_upper - log_det,
                "precision_achieved": det.achieved_rel_tol,
                "mantissa_bits": det.mantissa_bits,
            });
            if log_det.abs() < REPRESENTABLE_LOG {
                out["det_if_representable"] = json!(log_det.exp());
            }
            Ok(Outcome {
                passed: bounds.contains(log_det, SANDWICH_SLACK),
                body: Body::Report(out),
            })
        }
        GaussCommand::Select { t } => {
            let t = parse_nodes(t, "--t")?;
            let sel = select_shape_detail(&t)?;
            Ok(Outcome {
                body: Body::Report(json!({
                    "t": t,
                    "lambda_star": sel.lambda_star,
                    "N": sel.pairs,
                    "S": sel.spread,
                })),
                passed: true,
            })
        }
        GaussCommand::Sweep {
            t,
            lambda,
            values,
            loocv,
        } => {
            let t = parse_nodes(t, "--t")?;
            let (min, max, count) = parse_grid(lambda)?;
            let grid = geometric_grid(min, max, count)?;
            let values = match (values, loocv) {
                (Some(raw), true) => Some(parse_values(raw, "--values")?),
                (None, true) => {
                    return Err(Error::InvalidArgument("--loocv requires --values".into()))
                }
                (_, false) => None,
            };
            let rows = sweep(&t, values.as_deref(), &grid, precision)?;
            let passed = rows
                .iter()
                .all(|r| r.within_bounds(SANDWICH_SLACK).unwrap_or(true));
            Ok(Outcome {
                body: Body::Sweep {
                    rows,
                    loocv: *loocv,
                },
                passed,
            })
        }
        GaussCommand::Interp { t, values, lambda } => {
            let t = parse_nodes(t, "--t")?;
            let values = parse_values(values, "--values")?;
            let fit = interpolate(&t, &values, parse_shape(lambda)?, precision)?;
            Ok(Outcome {
                body: Body::Report(json!({
                    "t": t,
                    "values": values,
                    "lambda": fit.lambda,
                    "precision": precision.mantissa_bits,
                    "coefficients": fit.coefficients,
                    "node_residual_inf": fit.residual_inf,
                })),
                passed: true,
            })
        }
    }
}

fn csv_cell(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(csv_cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn render(body: &Body, format: Option<Format>) -> String {
    match body {
        Body::Report(value) => match format.unwrap_or(Format::Json) {
            Format::Json => serde_json::to_string_pretty(value).expect("json") + "\n",
            Format::Csv => {
                // one header line and one row of the top-level fields
                let obj = value.as_object().cloned().unwrap_or_default();
                let header: Vec<&str> = obj.keys().map(String::as_str).collect();
                let row: Vec<String> = obj.values().map(csv_cell).collect();
                format!("{}\n{}\n", header.join(","), row.join(","))
            }
        },
        Body::Sweep { rows, loocv } => match format.unwrap_or(Format::Csv) {
            Format::Json => serde_json::to_string_pretty(rows).expect("json") + "\n",
            Format::Csv => {
                let mut out = String::from("lambda,log_f,log_lower,log_det,log_upper");
                if *loocv {
                    out.push_str(",loocv");
                }
                out.push('\n');
                for r in rows {
                    out.push_str(&format!(
                        "{},{},{},{},{}",
                        r.lambda,
                        r.log_f,
                        r.log_lower,
                        opt_cell(r.log_det),
                        r.log_upper
                    ));
                    if *loocv {
                        out.push(',');
                        out.push_str(&opt_cell(r.loocv));
                    }
                    out.push('\n');
                }
                out
            }
        },
    }
}

fn sweep_warnings(body: &Body) -> Vec<Value> {
    match body {
        Body::Sweep { rows, .. } => rows
            .iter()
            .filter_map(|r| {
                r.error
                    .as_ref()
                    .map(|e| json!({ "warning": { "lambda": r.lambda, "message": e } }))
            })
            .collect(),
        Body::Report(_) => Vec::new(),
    }
}

fn exit_code(err: &Error) -> u8 {
    if err.is_precision_exhausted() {
        3
    } else if err.is_check_failure() {
        1
    } else {
        2
    }
}

fn error_details(err: &Error) -> Value {
    match err {
        Error::NonFinite { index } | Error::NotStrictlyIncreasing { index } => {
            json!({ "index": index })
        }
        Error::LengthMismatch { left, right } => json!({ "left": left, "right": right }),
        Error::PrecisionExhausted { mantissa_bits, .. } => {
            json!({ "mantissa_bits": mantissa_bits })
        }
        Error::PositivityViolated { rows, cols, .. } => json!({ "rows": rows, "cols": cols }),
        Error::NTooLarge { n, max_n } => json!({ "n": n, "max_n": max_n }),
        Error::TooManyDims { dims, max_dims } => json!({ "dims": dims, "max_dims": max_dims }),
        _ => json!({}),
    }
}

fn emit_error(kind: &str, message: &str, details: Value) {
    let mut body = json!({ "kind": kind, "message": message });
    if let (Some(obj), Value::Object(extra)) = (body.as_object_mut(), details) {
        obj.extend(extra);
    }
    eprintln!("{}", json!({ "error": body }));
}

fn run(cli: &Cli) -> Result<Outcome> {
    let precision = PrecisionConfig::with_bits(cli.precision)?;
    match &cli.command {
        Command::Bounds(args) => cmd_bounds(args, &precision),
        Command::Verify(args) => cmd_verify(args, &precision),
        Command::Identity(args) => cmd_identity(args, &precision),
        Command::Gauss(cmd) => cmd_gauss(cmd, &precision),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            emit_error("Usage", e.to_string().trim(), json!({}));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            for w in sweep_warnings(&outcome.body) {
                eprintln!("{w}");
            }
            let text = render(&outcome.body, cli.format);
            let mut stdout = io::stdout().lock();
            if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(2);
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            emit_error(err.kind(), &err.to_string(), error_details(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
