//! `smm`: sample closed-form soliton solutions onto CSV grids, run
//! verification scenarios, and check field-expression syntax.
//!
//! Exit status: 0 on success, 1 when a verification (or parse) check
//! fails, 2 on usage or input errors.

use clap::{Args, Parser, Subcommand};
use smm_core::fields::{parse_field, Point2};
use smm_core::residuals::{GridBox, DEFAULT_GRID_N};
use smm_core::scenario::{
    builtin_descriptions, fmt_float, parse_scenario, run_builtin, run_suite, GridField,
    ResidualReport,
};
use smm_core::solitons::{Family, Mode, SolitonSpec};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "smm",
    version,
    about = "Exact soliton constructions with residual-verified transformations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a closed-form soliton solution onto a CSV grid.
    Soliton(SolitonArgs),
    /// Run a verification scenario and report every residual check.
    Verify(VerifyArgs),
    /// Parse a field expression; optionally evaluate it and its partials.
    ParseCheck(ParseCheckArgs),
}

#[derive(Args)]
struct SolitonArgs {
    /// Solution family: akns or nlbq.
    #[arg(long)]
    family: String,
    /// Number of solitons; must match the number of --mode flags.
    #[arg(long)]
    solitons: usize,
    /// Background parameter of the seed solution.
    #[arg(long)]
    a0: f64,
    /// One mode per soliton, as k=R[,x0=R] (a= is accepted for k=).
    #[arg(long = "mode")]
    modes: Vec<String>,
    /// Sampling grid, as a=min:max:n,b=min:max:n (default -3:3:20 each).
    #[arg(long)]
    grid: Option<String>,
    /// Which field to sample: M or Mx (the localized profile).
    #[arg(long, default_value = "Mx")]
    field: String,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Path to a scenario file.
    #[arg(long, conflicts_with = "builtin")]
    scenario: Option<std::path::PathBuf>,
    /// Name of a built-in scenario (see --builtin list).
    #[arg(long)]
    builtin: Option<String>,
    /// Also write the report to this path.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct ParseCheckArgs {
    /// Expression over x and y (or t), e.g. "exp(2*x) / (1 + y^2)".
    #[arg(long)]
    expr: String,
    /// Evaluate at a,b and print the value and partials through order 3.
    #[arg(long, value_name = "A,B")]
    eval_at: Option<String>,
}

/// Failures split by exit status: input errors are the caller's to fix,
/// verification failures are the verdict the command exists to deliver.
enum CliError {
    Input(String),
    Verification(String),
}

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

/// Write to stdout. A closed pipe (`smm ... | head`) just stops the
/// output; the exit status still carries the verdict.
fn write_stdout(text: &str) -> Result<(), CliError> {
    use std::io::Write as _;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(input_err(format!("cannot write to stdout: {e}"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Soliton(args) => cmd_soliton(args),
        Command::Verify(args) => cmd_verify(args),
        Command::ParseCheck(args) => cmd_parse_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Verification(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Parse one `--mode` value: `k=R[,x0=R]`, with `a=` accepted for `k=`.
fn parse_mode(text: &str) -> Result<Mode, CliError> {
    let mut k: Option<f64> = None;
    let mut x0 = 0.0;
    for part in text.split(',') {
        let Some((key, value)) = part.split_once('=') else {
            return Err(input_err(format!(
                "mode `{text}`: expected key=value parts, got `{part}`"
            )));
        };
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| input_err(format!("mode `{text}`: `{value}` is not a number")))?;
        match key.trim() {
            "k" | "a" => k = Some(value),
            "x0" => x0 = value,
            other => {
                return Err(input_err(format!(
                    "mode `{text}`: unknown key `{other}` (expected k, a, or x0)"
                )))
            }
        }
    }
    let k = k.ok_or_else(|| input_err(format!("mode `{text}`: missing k= (or a=) value")))?;
    Ok(Mode { k_or_a: k, x0 })
}

/// Parse one grid axis `min:max:n`; `n = 1` pins the axis to `min`.
fn parse_axis(key: &str, text: &str) -> Result<(f64, f64, usize), CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let [min, max, n] = parts.as_slice() else {
        return Err(input_err(format!("grid axis {key}=`{text}`: expected min:max:n")));
    };
    let min: f64 = min
        .trim()
        .parse()
        .map_err(|_| input_err(format!("grid axis {key}: `{min}` is not a number")))?;
    let max: f64 = max
        .trim()
        .parse()
        .map_err(|_| input_err(format!("grid axis {key}: `{max}` is not a number")))?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| input_err(format!("grid axis {key}: `{n}` is not a sample count")))?;
    if n == 0 {
        return Err(input_err(format!("grid axis {key}: needs at least one sample")));
    }
    if n == 1 {
        if min != max {
            return Err(input_err(format!(
                "grid axis {key}: a single sample needs min = max"
            )));
        }
    } else if !(min < max) {
        return Err(input_err(format!("grid axis {key}: min must be below max")));
    }
    Ok((min, max, n))
}

fn parse_grid(text: &str) -> Result<(GridBox, usize, usize), CliError> {
    let mut a: Option<(f64, f64, usize)> = None;
    let mut b: Option<(f64, f64, usize)> = None;
    for part in text.split(',') {
        let Some((key, spec)) = part.split_once('=') else {
            return Err(input_err(format!(
                "grid `{text}`: expected a=min:max:n,b=min:max:n, got `{part}`"
            )));
        };
        match key.trim() {
            "a" => a = Some(parse_axis("a", spec)?),
            "b" => b = Some(parse_axis("b", spec)?),
            other => {
                return Err(input_err(format!(
                    "grid `{text}`: unknown axis `{other}` (expected a or b)"
                )))
            }
        }
    }
    let (a_min, a_max, n_a) = a.ok_or_else(|| input_err("grid: missing a=min:max:n axis"))?;
    let (b_min, b_max, n_b) = b.ok_or_else(|| input_err("grid: missing b=min:max:n axis"))?;
    Ok((GridBox { a_min, a_max, b_min, b_max }, n_a, n_b))
}

fn cmd_soliton(args: SolitonArgs) -> Result<(), CliError> {
    let family: Family = args.family.parse().map_err(CliError::Input)?;
    let field = GridField::parse(&args.field)
        .ok_or_else(|| input_err(format!("unknown field `{}` (expected M or Mx)", args.field)))?;
    if !(args.solitons == 1 || args.solitons == 2) {
        return Err(input_err(format!(
            "--solitons must be 1 or 2, got {}",
            args.solitons
        )));
    }
    if args.modes.len() != args.solitons {
        return Err(input_err(format!(
            "--solitons {} requires exactly {} --mode flags, got {}",
            args.solitons,
            args.solitons,
            args.modes.len()
        )));
    }
    let modes = args
        .modes
        .iter()
        .map(|m| parse_mode(m))
        .collect::<Result<Vec<_>, _>>()?;
    let (bounds, n_a, n_b) = match &args.grid {
        Some(g) => parse_grid(g)?,
        None => (GridBox::standard(), DEFAULT_GRID_N, DEFAULT_GRID_N),
    };
    let spec = SolitonSpec { family, a0: args.a0, modes };
    let grid = smm_core::scenario::solution_grid(&spec, field, bounds, n_a, n_b)
        .map_err(|e| input_err(e.to_string()))?;
    let csv = grid.to_csv();
    match &args.out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| input_err(format!("cannot write {}: {e}", path.display())))?,
        None => write_stdout(&csv)?,
    }
    Ok(())
}

fn load_report(args: &VerifyArgs) -> Result<ResidualReport, CliError> {
    match (&args.scenario, &args.builtin) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
            let scenario = parse_scenario(&text).map_err(|e| input_err(e.to_string()))?;
            run_suite(&scenario).map_err(|e| input_err(e.to_string()))
        }
        (None, Some(name)) => run_builtin(name).map_err(|e| input_err(e.to_string())),
        _ => Err(input_err("verify needs exactly one of --scenario PATH or --builtin NAME")),
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    if args.builtin.as_deref() == Some("list") {
        let mut listing = String::new();
        for (name, description) in builtin_descriptions() {
            listing.push_str(name);
            listing.push_str(": ");
            listing.push_str(description);
            listing.push('\n');
        }
        return write_stdout(&listing);
    }
    let report = load_report(&args)?;
    let rendered = report.render();
    write_stdout(&rendered)?;
    if let Some(path) = &args.out {
        std::fs::write(path, &rendered)
            .map_err(|e| input_err(format!("cannot write {}: {e}", path.display())))?;
    }
    if report.pass {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .entries
            .iter()
            .filter(|e| !e.pass)
            .map(|e| e.label.as_str())
            .collect();
        Err(CliError::Verification(format!(
            "verification failed: {} of {} checks ({})",
            failed.len(),
            report.entries.len(),
            failed.join(", ")
        )))
    }
}

fn cmd_parse_check(args: ParseCheckArgs) -> Result<(), CliError> {
    let expr = parse_field(&args.expr).map_err(|e| CliError::Verification(e.to_string()))?;
    let mut out = format!("expr = \"{}\"\n", expr.to_text());
    if let Some(at) = &args.eval_at {
        let Some((a_text, b_text)) = at.split_once(',') else {
            return Err(input_err(format!("--eval-at `{at}`: expected A,B")));
        };
        let a: f64 = a_text
            .trim()
            .parse()
            .map_err(|_| input_err(format!("--eval-at: `{a_text}` is not a number")))?;
        let b: f64 = b_text
            .trim()
            .parse()
            .map_err(|_| input_err(format!("--eval-at: `{b_text}` is not a number")))?;
        let jet = expr
            .evaluate(Point2::new(a, b), 3, 3)
            .map_err(|e| input_err(format!("evaluation failed: {e}")))?;
        out.push_str(&format!("at = [{}, {}]\n", fmt_float(a), fmt_float(b)));
        // Fixed order and fixed formatting so two invocations can be
        // diffed line by line to compare expressions numerically.
        for i in 0..=3usize {
            for k in 0..=3usize {
                let v = jet
                    .partial(i, k)
                    .map_err(|e| input_err(format!("partial d{i}{k} failed: {e}")))?;
                out.push_str(&format!("d{i}{k} = {}\n", fmt_float(v)));
            }
        }
    }
    write_stdout(&out)
}
