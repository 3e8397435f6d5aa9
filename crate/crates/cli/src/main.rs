//! `enhance`: command-line front end.
//!
//! Exit codes: 0 on success with every check passing, 1 on usage or runtime
//! errors (including a failed isolated-critical-point check), 2 when a
//! computed check fails.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use enhance_core::combinat::{
    closed_braid_components, exponent_sum, hirasawa_lambda, parse_braid, plumbing_invariants, plumbing_mirror,
    PlumbingTree,
};
use enhance_core::dsl::{parse_map, MapSource};
use enhance_core::enhancement::{full_report, EnhanceConfig, EnhancementReport, MethodChoice};
use enhance_core::hopf::{curves_to_csv, hopf_linking_at, normalized_map, trace_all, TraceConfig, DEFAULT_GUARD};
use enhance_core::identities::{identity_suite, Fault};
use enhance_core::mapcore::{gauss_components, Half};
use enhance_core::Error;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "enhance", version, about = "Enhancement of the Milnor number via Hopf invariants")]
struct Cli {
    /// Worker threads for tracing and Monte Carlo batches (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute λ, ρ and μ for a map with an isolated critical point at 0.
    ///
    /// Maps are written either as `f = <poly>; g = <poly>` in x, y, u, v or as
    /// `F = <expr>` in z = x+iy, w = u+iv, conj(z), conj(w). Precedence:
    /// `^` (integer exponent) > unary `-` > `*` > `+ -`.
    Enhance(EnhanceArgs),
    /// λ = n - e(β) + 1 for the braid-axis construction on a braid word.
    Braid {
        /// Braid word, e.g. "B3: s1 s2^-1".
        word: String,
        #[arg(long)]
        json: bool,
    },
    /// λ and μ of a Hopf-plumbed surface given as a signed tree.
    Plumb {
        /// Tree JSON, e.g. '{"signs": ["+", "-"], "edges": [[0, 1]]}'.
        tree: Option<String>,
        #[arg(long, conflicts_with = "tree")]
        file: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Trace the preimage curves of a point of S² under one Gauss factor.
    Trace(TraceArgs),
    /// Run the algebraic identity battery.
    Check {
        #[arg(long, default_value_t = 20)]
        n_random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random points per map.
        #[arg(long, default_value_t = 1000)]
        points: usize,
        #[arg(long)]
        json: bool,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Args, Debug)]
struct MapInput {
    /// Map definition (same as --expr).
    #[arg(conflicts_with_all = ["expr", "file"])]
    source: Option<String>,
    #[arg(long, conflicts_with = "file")]
    expr: Option<String>,
    /// File containing one map definition.
    #[arg(long)]
    file: Option<PathBuf>,
}

impl MapInput {
    fn load(&self) -> Result<MapSource, String> {
        let text = match (&self.source, &self.expr, &self.file) {
            (Some(s), _, _) | (_, Some(s), _) => s.clone(),
            (_, _, Some(path)) => std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?,
            _ => return Err("no map given; use --expr or --file".into()),
        };
        parse_map(&text).map_err(|e| describe_input_error(&text, &e))
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Linking,
    Whitehead,
    Both,
}

#[derive(Args, Debug)]
struct EnhanceArgs {
    #[command(flatten)]
    input: MapInput,
    #[arg(long, value_enum, default_value = "linking")]
    method: MethodArg,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Point pairs for the Whitehead integral.
    #[arg(long, default_value_t = 10_000_000)]
    budget: u64,
    /// Curve tracing step.
    #[arg(long, default_value_t = 0.02)]
    step: f64,
    /// Also compute the invariants at this radius and compare.
    #[arg(long)]
    compare_radius: Option<f64>,
    #[arg(long)]
    no_mirror: bool,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    timings: bool,
    /// Write the traced preimage curves to <PATH>-plus.csv and <PATH>-minus.csv.
    #[arg(long)]
    curve_export: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WhichArg {
    Plus,
    Minus,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[command(flatten)]
    input: MapInput,
    #[arg(long, value_enum, default_value = "minus")]
    which: WhichArg,
    /// Point of S² as `a,b,c`.
    #[arg(long, allow_hyphen_values = true)]
    q: String,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 0.02)]
    step: f64,
    #[arg(long, default_value = "curves.csv")]
    out: PathBuf,
}

fn describe_input_error(text: &str, e: &Error) -> String {
    let pos = match e {
        Error::Syntax { pos, .. } | Error::UnknownIdentifier { pos, .. } | Error::NonPolynomial { pos, .. } => *pos,
        _ => return e.to_string(),
    };
    let line = text.lines().next().unwrap_or("");
    if pos <= line.len() {
        format!("{e}\n  {line}\n  {}^", " ".repeat(pos))
    } else {
        e.to_string()
    }
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn report_json(report: &EnhancementReport) -> Value {
    let mut v = serde_json::to_value(report).expect("report serializes");
    if let Value::Object(map) = &mut v {
        map.insert("timestamp".into(), json!(timestamp()));
    }
    v
}

fn method_name(m: MethodChoice) -> &'static str {
    match m {
        MethodChoice::Linking => "linking",
        MethodChoice::Whitehead => "whitehead",
        MethodChoice::Both => "both",
    }
}

fn fmt_opt(v: Option<i64>) -> String {
    v.map_or("-".into(), |x| x.to_string())
}

fn report_text(report: &EnhancementReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "map:     {}", report.map_source);
    let _ = writeln!(
        s,
        "radius:  {}   seed: {}   method: {}",
        report.radius,
        report.seed,
        method_name(report.method)
    );
    let _ = writeln!(
        s,
        "lambda = {}   rho = {}   mu = {}",
        fmt_opt(report.lambda),
        fmt_opt(report.rho),
        fmt_opt(report.mu)
    );
    for (name, est) in [
        ("lambda", &report.lambda_estimate),
        ("rho", &report.rho_estimate),
        ("lambda (whitehead)", &report.lambda_whitehead),
        ("rho (whitehead)", &report.rho_whitehead),
    ] {
        if let Some(e) = est {
            let se = e
                .diagnostics
                .standard_error
                .map(|x| format!(", stderr {x:.4}"))
                .unwrap_or_default();
            let _ = writeln!(s, "  {name}: raw {:.6}, residual {:.2e}{se}", e.raw, e.residual);
        }
    }
    if let Some(m) = report.mirror_lambda {
        let _ = writeln!(s, "lambda(mirror) = {m}");
    }
    let _ = writeln!(s, "checks:");
    for c in &report.checks {
        let _ = writeln!(s, "  [{}] {:<24} {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(t) = &report.timings {
        let _ = writeln!(
            s,
            "timings (ms): isolation {:.1}, lambda {:.1}, rho {:.1}, checks {:.1}",
            t.isolation_ms, t.lambda_ms, t.rho_ms, t.checks_ms
        );
    }
    for w in &report.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

fn cmd_enhance(args: &EnhanceArgs) -> Result<u8, String> {
    let source = args.input.load()?;
    let cfg = EnhanceConfig {
        method: match args.method {
            MethodArg::Linking => MethodChoice::Linking,
            MethodArg::Whitehead => MethodChoice::Whitehead,
            MethodArg::Both => MethodChoice::Both,
        },
        radius: args.radius,
        seed: args.seed,
        budget: args.budget,
        step: args.step,
        mirror_check: !args.no_mirror,
        compare_radius: args.compare_radius,
        record_timings: args.timings,
        ..EnhanceConfig::default()
    };
    let mut report = full_report(&source.map, &cfg).map_err(|e| format!("computation failed: {e}"))?;
    report.warnings.splice(0..0, source.warnings.iter().cloned());
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report_json(&report)).expect("json"));
    } else {
        print!("{}", report_text(&report));
    }
    if !report.isolated() {
        return Err("isolated critical point check failed".into());
    }
    if let Some(path) = &args.curve_export {
        export_curves(&source, &report, &cfg, path)?;
    }
    Ok(if report.all_pass() { 0 } else { 2 })
}

fn export_curves(source: &MapSource, report: &EnhancementReport, cfg: &EnhanceConfig, path: &std::path::Path) -> Result<(), String> {
    let comps = gauss_components(&source.map);
    for (half, est) in [(Half::SelfDual, &report.lambda_estimate), (Half::AntiSelfDual, &report.rho_estimate)] {
        let Some(est) = est else { continue };
        let [q1, q2] = match est.diagnostics.regular_values.as_slice() {
            [a, b] => [*a, *b],
            _ => continue,
        };
        let map = normalized_map(&comps, half, cfg.radius, DEFAULT_GUARD);
        let trace = TraceConfig {
            step: cfg.step,
            ..TraceConfig::default()
        };
        let (_, c1, c2, _) = hopf_linking_at(&map, q1, q2, &trace).map_err(|e| e.to_string())?;
        let all: Vec<_> = c1.into_iter().chain(c2).collect();
        let out = PathBuf::from(format!("{}-{}.csv", path.display(), half.label()));
        std::fs::write(&out, curves_to_csv(&all)).map_err(|e| format!("{}: {e}", out.display()))?;
        eprintln!("wrote {} curve(s) to {}", all.len(), out.display());
    }
    Ok(())
}

fn cmd_braid(word: &str, as_json: bool) -> Result<u8, String> {
    let b = parse_braid(word).map_err(|e| e.to_string())?;
    let (lambda, e, comps) = (hirasawa_lambda(&b), exponent_sum(&b), closed_braid_components(&b));
    if as_json {
        let v = json!({
            "braid": b.to_string(),
            "n": b.strands(),
            "exponent_sum": e,
            "components": comps,
            "lambda": lambda,
        });
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    } else {
        println!("braid:      {b}");
        println!("n = {}   e = {e}   components = {comps}", b.strands());
        println!("lambda = {lambda}");
    }
    Ok(0)
}

fn cmd_plumb(tree: Option<&str>, file: Option<&PathBuf>, as_json: bool) -> Result<u8, String> {
    let text = match (tree, file) {
        (Some(t), _) => t.to_string(),
        (None, Some(p)) => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
        (None, None) => return Err("no tree given".into()),
    };
    let t = PlumbingTree::from_json(&text).map_err(|e| e.to_string())?;
    let inv = plumbing_invariants(&t).map_err(|e| e.to_string())?;
    let mirror = plumbing_invariants(&plumbing_mirror(&t)).map_err(|e| e.to_string())?;
    if as_json {
        let v = json!({
            "lambda": inv.lambda,
            "mu": inv.mu,
            "mirror_lambda": mirror.lambda,
        });
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    } else {
        println!("bands = {}   negative = {}", inv.mu, inv.lambda);
        println!("lambda = {}   mu = {}   lambda(mirror) = {}", inv.lambda, inv.mu, mirror.lambda);
    }
    Ok(0)
}

fn parse_q(text: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("invalid q `{text}`: {e}"))?;
    let [a, b, c] = parts[..] else {
        return Err(format!("q needs three components, got {}", parts.len()));
    };
    let n = (a * a + b * b + c * c).sqrt();
    if (n - 1.0).abs() > 1e-6 {
        return Err(format!("q must be a unit vector (|q| = {n})"));
    }
    Ok([a / n, b / n, c / n])
}

fn cmd_trace(args: &TraceArgs) -> Result<u8, String> {
    let q = parse_q(&args.q)?;
    if !(args.radius > 0.0) || !(args.step > 0.0 && args.step <= 0.2) {
        return Err("radius must be positive and step in (0, 0.2]".into());
    }
    let source = args.input.load()?;
    let half = match args.which {
        WhichArg::Plus => Half::SelfDual,
        WhichArg::Minus => Half::AntiSelfDual,
    };
    let map = normalized_map(&gauss_components(&source.map), half, args.radius, DEFAULT_GUARD);
    let cfg = TraceConfig {
        step: args.step,
        ..TraceConfig::default()
    };
    let curves = trace_all(&map, &q, &cfg).map_err(|e| e.to_string())?;
    if curves.is_empty() {
        println!("no preimage: q = {q:?} is not attained by the {} factor", half.label());
        return Ok(0);
    }
    std::fs::write(&args.out, curves_to_csv(&curves)).map_err(|e| format!("{}: {e}", args.out.display()))?;
    for (k, c) in curves.iter().enumerate() {
        println!(
            "curve {k}: {} points, length {:.6}, max residual {:.2e}",
            c.points.len(),
            c.length(),
            c.max_residual
        );
    }
    println!("wrote {}", args.out.display());
    Ok(0)
}

fn cmd_check(n_random: usize, seed: u64, points: usize, as_json: bool, fault: bool) -> Result<u8, String> {
    let rows = identity_suite(n_random, seed, points, fault.then_some(Fault::PerturbTriples));
    let failures = rows.iter().filter(|r| !r.pass).count();
    if as_json {
        let v = json!({ "seed": seed, "n_random": n_random, "rows": rows, "failures": failures });
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    } else {
        let width = rows.iter().map(|r| r.map.len()).max().unwrap_or(0).min(48);
        for r in &rows {
            let mut label = r.map.clone();
            if label.len() > width {
                label.truncate(width - 3);
                label.push_str("...");
            }
            println!(
                "[{}] {:<width$}  {:<17} {:.3e}",
                if r.pass { "pass" } else { "FAIL" },
                label,
                r.check,
                r.value
            );
        }
        println!("{} checks, {} failed", rows.len(), failures);
    }
    Ok(if failures == 0 { 0 } else { 2 })
}

fn run(cli: Cli) -> Result<u8, String> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    match &cli.command {
        Command::Enhance(a) => cmd_enhance(a),
        Command::Braid { word, json } => cmd_braid(word, *json),
        Command::Plumb { tree, file, json } => cmd_plumb(tree.as_deref(), file.as_ref(), *json),
        Command::Trace(a) => cmd_trace(a),
        Command::Check {
            n_random,
            seed,
            points,
            json,
            inject_fault,
        } => cmd_check(*n_random, *seed, *points, *json, *inject_fault),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
