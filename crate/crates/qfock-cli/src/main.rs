//! `qfock` — tables, evaluations, and the verification suites as
//! deterministic text or JSON.
//!
//! Exit codes: 0 = all checks passed, 1 = a mathematical check failed,
//! 2 = usage or domain error.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qfock::qnum::{eq_exp, ExpMethod, QContext, Truncated, DEFAULT_TAIL_TOL};
use qfock::realization::{build_realization, eval_sq};
use qfock::report::Report;
use qfock::spaces::{kernel_eval, KernelId};
use qfock::suites;
use qfock::transform::jackson_integral;
use qfock::{Error, NumScalar};

#[derive(Parser)]
#[command(name = "qfock", version, about = "q-calculus suites, tables, and evaluators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the q-Stirling number table.
    Stirling(StirlingArgs),
    /// Evaluate a function at numeric q.
    Eval(EvalArgs),
    /// Run a verification suite and report per-identity results.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct StirlingArgs {
    /// Number of rows (n_max >= 1).
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Also check the recursion against the operator-expansion oracle
    /// (exit 1 on mismatch).
    #[arg(long)]
    check_oracle: bool,
    /// Write the document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(subcommand)]
    kind: EvalKind,
}

#[derive(Subcommand)]
enum EvalKind {
    /// q-exponential E_q(z).
    #[command(name = "eq_exp")]
    EqExp {
        #[arg(long)]
        q: f64,
        /// Complex point: "re" or "re,im".
        #[arg(long)]
        z: Complex,
        #[arg(long, value_enum, default_value = "series")]
        method: Method,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Reproducing kernel K(z, w).
    Kernel {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        z: Complex,
        #[arg(long)]
        w: Complex,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Transfer function S_q(z) of the truncated realization.
    #[command(name = "Sq", alias = "sq")]
    Sq {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        z: Complex,
        /// Truncation order of the state space.
        #[arg(long = "N", default_value_t = 48)]
        order: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Jackson integral of x^pow over [0, a].
    Jackson {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        pow: u32,
        #[arg(long)]
        a: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Series,
    Product,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Which {
    K1,
    K2,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Numeric q in [0, 1], or "exact".
    #[arg(long)]
    q: Option<String>,
    /// Shorthand for --q exact.
    #[arg(long)]
    exact: bool,
    /// Truncation order N (defaults: 32 exact, 64 numeric, 48 for the
    /// realization suite).
    #[arg(long = "N")]
    order: Option<usize>,
    /// Seed for the randomized checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Series,
    Stirling,
    Spaces,
    Transform,
    Realization,
    All,
}

/// Complex argument: "re" or "re,im".
#[derive(Clone, Copy, Debug)]
struct Complex(NumScalar);

impl std::str::FromStr for Complex {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| e.to_string());
        match s.split_once(',') {
            Some((re, im)) => Ok(Complex(NumScalar::new(parse(re)?, parse(im)?))),
            None => Ok(Complex(NumScalar::new(parse(s)?, 0.0))),
        }
    }
}

/// Mode requested on the command line.
enum QArg {
    Exact,
    Numeric(f64),
}

fn parse_q(q: &Option<String>, exact: bool) -> Result<QArg, String> {
    match (q, exact) {
        (None, true) => Ok(QArg::Exact),
        (Some(s), _) if s == "exact" => Ok(QArg::Exact),
        (Some(s), false) => s
            .parse::<f64>()
            .map(QArg::Numeric)
            .map_err(|_| format!("--q expects a number in [0,1] or \"exact\", got {s:?}")),
        (Some(_), true) => Err("--exact conflicts with a numeric --q".to_string()),
        (None, false) => Err("one of --q or --exact is required".to_string()),
    }
}

fn tail_tol_from_env() -> Result<f64, String> {
    match std::env::var("QFOCK_TAIL_TOL") {
        Ok(v) => v
            .parse::<f64>()
            .ok()
            .filter(|t| *t > 0.0 && *t < 1.0)
            .ok_or_else(|| format!("QFOCK_TAIL_TOL must be a tolerance in (0,1), got {v:?}")),
        Err(_) => Ok(DEFAULT_TAIL_TOL),
    }
}

/// 17 significant digits: enough to round-trip any double.
fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

fn emit(out: &Option<PathBuf>, body: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, body).map_err(|e| e.to_string()),
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

fn eval_payload(kind: &str, q: f64, params: serde_json::Value, v: &Truncated<NumScalar>) -> serde_json::Value {
    json!({
        "kind": kind,
        "q": q,
        "params": params,
        "value": {"re": v.value.re, "im": v.value.im},
        "terms": v.terms,
        "tail_bound": v.tail_bound,
    })
}

fn eval_text(v: &Truncated<NumScalar>) -> String {
    let mut s = String::new();
    if v.value.im == 0.0 {
        let _ = write!(s, "{}", fmt_f64(v.value.re));
    } else {
        let _ = write!(s, "{} + {}i", fmt_f64(v.value.re), fmt_f64(v.value.im));
    }
    let _ = write!(s, "  (terms: {}, tail bound: {:.3e})", v.terms, v.tail_bound);
    s
}

fn run_stirling(args: &StirlingArgs) -> Result<ExitCode, Error> {
    let table = qfock::stirling::stirling_recursive(args.n)?;
    let mut oracle_ok = true;
    if args.check_oracle {
        let ctx = QContext::exact((2 * args.n.min(8)).max(16));
        for n in 1..=args.n.min(8) {
            let row = qfock::stirling::stirling_oracle_row(n, &ctx)?;
            for (k, val) in row.iter().enumerate() {
                let expect = qfock::QRat::from_poly(table.entry(n, k + 1).unwrap().clone());
                oracle_ok &= *val == expect;
            }
        }
    }
    let body = match args.format {
        Format::Text => {
            let mut t = qfock::stirling::render_text(&table);
            if args.check_oracle {
                let _ = write!(
                    t,
                    "\noracle check (n <= {}): {}",
                    args.n.min(8),
                    if oracle_ok { "PASS" } else { "FAIL" }
                );
            }
            t
        }
        Format::Json => {
            let doc = qfock::stirling::to_json(&table)?;
            let mut v = serde_json::to_value(&doc).expect("serializable");
            if args.check_oracle {
                v["oracle_check"] = json!(oracle_ok);
            }
            serde_json::to_string_pretty(&v).expect("serializable")
        }
    };
    emit(&args.out, &body).map_err(Error::InvalidParameter)?;
    Ok(if oracle_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run_eval(args: &EvalArgs, tail_tol: f64) -> Result<ExitCode, Error> {
    match &args.kind {
        EvalKind::EqExp { q, z, method, format } => {
            let ctx = QContext::numeric(*q, 64)?.with_tail_tol(tail_tol);
            let m = match method {
                Method::Series => ExpMethod::Series,
                Method::Product => ExpMethod::Product,
            };
            let v = eq_exp(z.0, &ctx, m)?;
            let body = match format {
                Format::Text => eval_text(&v),
                Format::Json => serde_json::to_string_pretty(&eval_payload(
                    "eq_exp",
                    *q,
                    json!({"z": [z.0.re, z.0.im], "method": format!("{method:?}").to_lowercase()}),
                    &v,
                ))
                .expect("serializable"),
            };
            println!("{body}");
            Ok(ExitCode::SUCCESS)
        }
        EvalKind::Kernel { which, q, z, w, format } => {
            let ctx = QContext::numeric(*q, 64)?.with_tail_tol(tail_tol);
            let kid = match which {
                Which::K1 => KernelId::K1Q,
                Which::K2 => KernelId::K2Q,
            };
            let v = kernel_eval(kid, z.0, w.0, &ctx)?;
            let body = match format {
                Format::Text => eval_text(&v),
                Format::Json => serde_json::to_string_pretty(&eval_payload(
                    "kernel",
                    *q,
                    json!({"which": format!("{which:?}").to_lowercase(), "z": [z.0.re, z.0.im], "w": [w.0.re, w.0.im]}),
                    &v,
                ))
                .expect("serializable"),
            };
            println!("{body}");
            Ok(ExitCode::SUCCESS)
        }
        EvalKind::Sq { q, z, order, format } => {
            let ctx = QContext::numeric(*q, *order)?.with_tail_tol(tail_tol);
            let sys = build_realization(&ctx)?;
            let s = eval_sq(&sys, z.0)?;
            let v = Truncated {
                value: s,
                terms: sys.state_dim(),
                tail_bound: 0.0,
            };
            let body = match format {
                Format::Text => eval_text(&v),
                Format::Json => serde_json::to_string_pretty(&eval_payload(
                    "Sq",
                    *q,
                    json!({"z": [z.0.re, z.0.im], "N": order, "defect_rank": sys.defect_rank()}),
                    &v,
                ))
                .expect("serializable"),
            };
            println!("{body}");
            Ok(ExitCode::SUCCESS)
        }
        EvalKind::Jackson { q, pow, a, format } => {
            let ctx = QContext::numeric(*q, 64)?.with_tail_tol(tail_tol);
            let p = *pow as i32;
            let v = jackson_integral(|x| x.powi(p), *a, &ctx)?;
            let tv = Truncated {
                value: NumScalar::new(v.value, 0.0),
                terms: v.terms,
                tail_bound: v.tail_bound,
            };
            let body = match format {
                Format::Text => eval_text(&tv),
                Format::Json => serde_json::to_string_pretty(&eval_payload(
                    "jackson",
                    *q,
                    json!({"pow": pow, "a": a}),
                    &tv,
                ))
                .expect("serializable"),
            };
            println!("{body}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_verify(args: &VerifyArgs, tail_tol: f64) -> Result<ExitCode, Error> {
    let qarg = parse_q(&args.q, args.exact).map_err(Error::InvalidParameter)?;
    let (reports, q_label): (Vec<Report>, serde_json::Value) = match qarg {
        QArg::Exact => {
            let order = args.order.unwrap_or(qfock::qnum::DEFAULT_EXACT_ORDER);
            let reports = match args.suite {
                Suite::Series => suites::series_suite_exact(order, args.seed)?,
                Suite::Stirling => suites::stirling_suite(8)?,
                Suite::Spaces => suites::spaces_suite_exact(order)?,
                Suite::Transform | Suite::Realization => {
                    return Err(Error::Unsupported(format!(
                        "the {:?} suite is numeric; pass --q <value in (0,1)>",
                        args.suite
                    )));
                }
                Suite::All => suites::all_exact(order, args.seed)?,
            };
            (reports, json!("exact"))
        }
        QArg::Numeric(q0) => {
            let order = args.order.unwrap_or(match args.suite {
                Suite::Realization => 48,
                _ => qfock::qnum::DEFAULT_NUMERIC_ORDER,
            });
            let reports = match args.suite {
                Suite::Series => suites::series_suite_numeric(q0, order, args.seed)?,
                Suite::Stirling => suites::stirling_suite(8)?,
                Suite::Spaces => suites::spaces_suite_numeric(q0, order, args.seed, tail_tol)?,
                Suite::Transform => suites::transform_suite(q0, order, tail_tol)?,
                Suite::Realization => suites::realization_suite(q0, order, args.seed)?,
                Suite::All => suites::all_numeric(q0, order, args.seed, tail_tol)?,
            };
            (reports, json!(q0))
        }
    };

    let all_hold = reports.iter().all(|r| r.holds);
    let body = match args.format {
        Format::Text => {
            let mut t = String::new();
            for r in &reports {
                let _ = writeln!(t, "{}", r.to_line());
            }
            let _ = write!(
                t,
                "{} of {} identities hold",
                reports.iter().filter(|r| r.holds).count(),
                reports.len()
            );
            t
        }
        Format::Json => serde_json::to_string_pretty(&json!({
            "suite": format!("{:?}", args.suite).to_lowercase(),
            "q": q_label,
            "seed": args.seed,
            "all_hold": all_hold,
            "reports": reports,
        }))
        .expect("serializable"),
    };
    emit(&args.out, &body).map_err(Error::InvalidParameter)?;
    Ok(if all_hold {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tail_tol = match tail_tol_from_env() {
        Ok(t) => t,
        Err(msg) => return usage_error(&msg),
    };
    let result = match &cli.command {
        Command::Stirling(args) => run_stirling(args),
        Command::Eval(args) => run_eval(args, tail_tol),
        Command::Verify(args) => run_verify(args, tail_tol),
    };
    match result {
        Ok(code) => code,
        Err(err) => usage_error(&err.to_string()),
    }
}

/// Domain/usage failures: a structured error object on stderr, exit 2.
fn usage_error(msg: &str) -> ExitCode {
    let obj = json!({"error": msg});
    eprintln!("{}", serde_json::to_string(&obj).expect("serializable"));
    ExitCode::from(2)
}
