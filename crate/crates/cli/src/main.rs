mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use rsrforge::bench::{self, emit_report, BenchConfig, BenchmarkEntry, ReportFormat, Selection};
use rsrforge::discovery::{count_report, infer, property_from_text, Method, Property, PropertyRecord};
use rsrforge::expr::ClosedForm;
use rsrforge::rng::derive_seed;
use rsrforge::sampling::{taylor_program, Interval, Oracle};
use rsrforge::verification::{classify, VerifyOutcome};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "rsrforge", version, about = "Discover randomized self-reductions of black-box functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Discover identities of a function from samples.
    Infer(InferArgs),
    /// Check an identity against a function.
    Verify(VerifyArgs),
    /// Run the benchmark over a selection of registered functions.
    Bench(BenchArgs),
    /// Print the function registry.
    ListFunctions(ListArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML file overlaid on the defaults before flags are applied.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, env = "RSRFORGE_SEED")]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Include wall-clock times in the output.
    #[arg(long)]
    timing: bool,
    /// Increase log verbosity on stderr.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Debug, Clone)]
#[group(id = "source", required = true, multiple = false)]
struct Source {
    /// Registered function name.
    #[arg(long)]
    function: Option<String>,
    /// Approximate program, e.g. `taylor:sigmoid:30`.
    #[arg(long)]
    program: Option<String>,
    /// Closed form over the parameters given by `--params`.
    #[arg(long = "closed-form")]
    closed_form: Option<String>,
}

#[derive(Args, Debug)]
struct InferArgs {
    #[command(flatten)]
    common: Common,
    /// Registered function name.
    #[arg(long, conflicts_with_all = ["program", "expr"])]
    function: Option<String>,
    /// Approximate program, e.g. `taylor:sigmoid:30`.
    #[arg(long, conflicts_with = "expr")]
    program: Option<String>,
    /// Closed form of the function over `--params`, e.g. `exp(t)`.
    #[arg(long)]
    expr: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "t")]
    params: Vec<String>,
    #[arg(long, visible_alias = "max-degree")]
    degree: Option<u32>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// Integer coefficient bound for `--method integer`.
    #[arg(long)]
    var_bound: Option<i64>,
    #[arg(long)]
    max_denominator: Option<u64>,
    /// Comma-separated query list, e.g. `x+r,x-r,r,x`.
    #[arg(long)]
    queries: Option<String>,
    /// Sampling box as `LO,HI`, or `B` for `[-B, B]`.
    #[arg(long = "box", allow_hyphen_values = true, value_parser = parse_box)]
    sample_box: Option<Interval>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Identity to check, e.g. `f(x)+f(y)-f(x+y)`.
    #[arg(long, conflicts_with = "property")]
    expr: Option<String>,
    /// JSON file holding a property record or an infer result.
    #[arg(long, required_unless_present = "expr")]
    property: Option<PathBuf>,
    #[command(flatten)]
    source: Source,
    /// Parameters of `--closed-form`.
    #[arg(long, value_delimiter = ',', default_value = "t")]
    params: Vec<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long = "box", allow_hyphen_values = true, value_parser = parse_box)]
    sample_box: Option<Interval>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', conflicts_with = "filter")]
    names: Vec<String>,
    /// `category=<name>` or `name=<a>,<b>`.
    #[arg(long)]
    filter: Option<String>,
    /// json, csv or text.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// Use the truncated-series program where one is registered.
    #[arg(long)]
    approx: bool,
}

#[derive(Args, Debug)]
struct ListArgs {
    #[arg(long)]
    filter: Option<String>,
    /// json or text.
    #[arg(long, default_value = "json")]
    format: String,
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "regression" => Ok(Method::Regression),
        "integer" => Ok(Method::Integer),
        other => Err(format!("unknown method `{other}`")),
    }
}

fn parse_box(s: &str) -> Result<Interval, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    let b = match s.split_once(',') {
        Some((lo, hi)) => Interval::new(num(lo)?, num(hi)?),
        None => Interval::symmetric(num(s)?.abs()),
    };
    if b.lo < b.hi {
        Ok(b)
    } else {
        Err(format!("empty box `{s}`"))
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

type CmdResult = Result<(String, u8), Failure>;

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("RUST_LOG")
        .format(|buf, rec| writeln!(buf, "[{}] {}", rec.level(), rec.args()))
        .try_init();
}

/// Defaults, then `base` adjustments, then the config file, then flags.
fn resolve(common: &Common, base: RunConfig) -> Result<RunConfig, Failure> {
    let mut run = match &common.config {
        Some(path) => base.overlay_file(path).map_err(|m| Failure { code: 1, message: m })?,
        None => base,
    };
    if let Some(s) = common.seed {
        run.seed = s;
    }
    if let Some(w) = common.workers {
        run.workers = w;
    }
    if let Some(e) = common.epsilon {
        run.infer.epsilon = e;
        run.verify.epsilon = e;
    }
    run.timing |= common.timing;
    run.infer.seed = run.seed;
    if run.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(run.workers).build_global() {
            log::debug!("worker pool already set: {e}");
        }
    }
    Ok(run)
}

fn to_json(v: &Value) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn program_oracle(spec: &str) -> Result<(Oracle, String), Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["taylor", series, terms] => {
            let n: usize = terms.parse().map_err(|_| format!("bad term count in `{spec}`"))?;
            Ok((taylor_program(series, n)?, series.to_string()))
        }
        _ => Err(format!("program `{spec}` is not of the form taylor:<series>:<terms>").into()),
    }
}

fn expr_oracle(body: &str, params: &[String]) -> Result<(Oracle, ClosedForm), Failure> {
    let refs: Vec<&str> = params.iter().map(String::as_str).collect();
    let cf = ClosedForm::parse(&refs, body)?;
    let oracle = Oracle::from_closed_form("f", cf.clone(), vec![Interval::REAL; refs.len()]);
    Ok((oracle, cf))
}

fn classify_all(
    props: &[Property],
    oracle: &Oracle,
    closed: Option<&ClosedForm>,
    run: &RunConfig,
    seed: u64,
) -> Vec<(Property, Vec<VerifyOutcome>)> {
    use rayon::prelude::*;
    props.par_iter().map(|p| classify(p, oracle, closed, &run.verify, seed)).collect()
}

fn cmd_infer(a: InferArgs) -> CmdResult {
    let mut base = RunConfig::default();
    let (oracle, closed, label) = if let Some(name) = &a.function {
        let entry = bench::lookup(name)?;
        base.infer = entry.infer_config(&base.infer);
        (entry.oracle(), Some(entry.closed_form.clone()), name.clone())
    } else if let Some(spec) = &a.program {
        let (oracle, series) = program_oracle(spec)?;
        if let Ok(entry) = bench::lookup(&series) {
            base.infer.max_degree = entry.degree_setting;
        }
        (oracle, None, spec.clone())
    } else if let Some(body) = &a.expr {
        let (oracle, cf) = expr_oracle(body, &a.params)?;
        (oracle, Some(cf), body.clone())
    } else {
        return Err("one of --function, --program or --expr is required".into());
    };
    let mut run = resolve(&a.common, base)?;
    let ic = &mut run.infer;
    if let Some(d) = a.degree {
        ic.max_degree = d;
    }
    if let Some(m) = a.samples {
        ic.m = Some(m);
    }
    if let Some(m) = a.method {
        ic.method = m;
    }
    if let Some(v) = a.var_bound {
        ic.var_bound = v;
    }
    if let Some(q) = a.max_denominator {
        ic.max_denominator = q;
    }
    if let Some(q) = &a.queries {
        ic.queries = q.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    if let Some(b) = a.sample_box {
        ic.sample_box = b;
    }
    run.verify.sample_box = run.infer.sample_box;
    run.verify.epsilon = run.infer.epsilon;
    log::info!("infer {label}: degree {} box {}", run.infer.max_degree, run.infer.sample_box);

    let start = Instant::now();
    let out = infer(&oracle, &run.infer)?;
    let classified = classify_all(&out.properties, &oracle, closed.as_ref(), &run, derive_seed(run.seed, "verify", 0));
    let props: Vec<Property> = classified.iter().map(|(p, _)| p.clone()).collect();
    let (rsr, verified, unverified) = count_report(&props);
    let records: Vec<PropertyRecord> = classified.iter().map(|(p, o)| p.to_record(o)).collect();
    let mut doc = json!({
        "function": label,
        "properties": records,
        "mean_errors": out.mean_errors,
        "sample_complexities": out.sample_complexities,
        "error": out.error,
        "samples": out.m,
        "monomials": out.monomials,
        "counts": { "rsr": rsr, "verified": verified, "unverified": unverified },
        "config": run,
    });
    if run.timing {
        doc["wall_time_seconds"] = json!(start.elapsed().as_secs_f64());
    }
    let code = if props.is_empty() { 2 } else { 0 };
    Ok((to_json(&doc)?, code))
}

fn read_properties(path: &PathBuf) -> Result<Vec<Property>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let records: Vec<Value> = match &v {
        Value::Array(items) => items.clone(),
        Value::Object(obj) => match obj.get("properties") {
            Some(Value::Array(items)) => items.clone(),
            _ => vec![v.clone()],
        },
        _ => return Err(format!("{}: expected a property record", path.display()).into()),
    };
    records
        .into_iter()
        .map(|r| {
            let mut r = r;
            if let Some(obj) = r.as_object_mut() {
                obj.remove("verification");
            }
            let rec: PropertyRecord = serde_json::from_value(r)?;
            Ok(Property::from_record(&rec)?)
        })
        .collect()
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let mut base = RunConfig::default();
    let (oracle, closed, label) = if let Some(name) = &a.source.function {
        let entry: BenchmarkEntry = bench::lookup(name)?;
        base.infer = entry.infer_config(&base.infer);
        base.verify.sample_box = base.infer.sample_box;
        (entry.oracle(), Some(entry.closed_form.clone()), name.clone())
    } else if let Some(spec) = &a.source.program {
        let (oracle, _) = program_oracle(spec)?;
        (oracle, None, spec.clone())
    } else if let Some(body) = &a.source.closed_form {
        let (oracle, cf) = expr_oracle(body, &a.params)?;
        (oracle, Some(cf), body.clone())
    } else {
        return Err("one of --function, --program or --closed-form is required".into());
    };
    let mut run = resolve(&a.common, base)?;
    if let Some(n) = a.samples {
        run.verify.n_test = n;
    }
    if let Some(b) = a.sample_box {
        run.verify.sample_box = b;
    }
    let props = match (&a.expr, &a.property) {
        (Some(text), _) => vec![property_from_text(0, text)?],
        (None, Some(path)) => read_properties(path)?,
        (None, None) => return Err("one of --expr or --property is required".into()),
    };
    if props.is_empty() {
        return Err("no property to verify".into());
    }
    let classified = classify_all(&props, &oracle, closed.as_ref(), &run, run.seed);
    let all_pass = classified.iter().all(|(p, _)| p.status.is_verified());
    let results: Vec<Value> = classified
        .iter()
        .map(|(p, outcomes)| {
            json!({
                "identity": format!("{} = 0", p.identity),
                "pass": p.status.is_verified(),
                "status": p.status,
                "outcomes": outcomes,
            })
        })
        .collect();
    for (p, outcomes) in &classified {
        if !p.status.is_verified() {
            for o in outcomes {
                log::warn!("{} = 0 fails: {}", p.identity, o.reason);
            }
        }
    }
    let doc = json!({
        "function": label,
        "status": if all_pass { "pass" } else { "fail" },
        "results": results,
        "config": run,
    });
    Ok((to_json(&doc)?, if all_pass { 0 } else { 2 }))
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let mut run = resolve(&a.common, RunConfig::default())?;
    if let Some(f) = &a.format {
        run.format = f.clone();
    }
    if let Some(r) = a.repetitions {
        run.bench.repetitions = r;
    }
    run.bench.use_approx |= a.approx;
    let format: ReportFormat = run.format.parse()?;
    let selection = match (&a.filter, a.names.is_empty()) {
        (Some(f), _) => Selection::parse_filter(f)?,
        (None, false) => Selection::Names(a.names.clone()),
        (None, true) => Selection::All,
    };
    let entries = bench::select(&bench::registry(), &selection)?;
    log::info!("bench over {} function(s)", entries.len());
    let cfg = BenchConfig {
        infer: run.infer.clone(),
        verify: run.verify.clone(),
        repetitions: run.bench.repetitions,
        workers: run.workers,
        seed: run.seed,
        use_approx: run.bench.use_approx,
    };
    let report = bench::run_bench(&entries, &cfg)?;
    Ok((emit_report(&report, format, run.timing)?, 0))
}

fn cmd_list(a: ListArgs) -> CmdResult {
    let selection = match &a.filter {
        Some(f) => Selection::parse_filter(f)?,
        None => Selection::All,
    };
    let entries = bench::select(&bench::registry(), &selection)?;
    match a.format.as_str() {
        "json" => {
            let items: Vec<Value> = entries
                .iter()
                .map(|e| {
                    json!({
                        "name": e.name,
                        "closed_form": e.closed_form_text,
                        "arity": e.arity,
                        "category": e.category,
                        "degree": e.degree_setting,
                        "box": e.box_override,
                        "approx_program": e.approx_program,
                        "ground_truth": e.ground_truth.iter().map(|g| &g.text).collect::<Vec<_>>(),
                        "note": e.note,
                    })
                })
                .collect();
            Ok((to_json(&Value::Array(items))?, 0))
        }
        "text" | "table" => {
            let w = entries.iter().map(|e| e.name.len()).max().unwrap_or(4);
            let mut s = String::new();
            for e in &entries {
                s.push_str(&format!("{:<w$}  {:<16}  {}  {}\n", e.name, e.category.name(), e.degree_setting, e.closed_form_text));
            }
            Ok((s, 0))
        }
        other => Err(format!("unknown format `{other}`").into()),
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
    let verbose = match &cli.command {
        Command::Infer(a) => a.common.verbose,
        Command::Verify(a) => a.common.verbose,
        Command::Bench(a) => a.common.verbose,
        Command::ListFunctions(_) => 0,
    };
    init_logging(verbose);
    let result = match cli.command {
        Command::Infer(a) => cmd_infer(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::ListFunctions(a) => cmd_list(a),
    };
    match result {
        Ok((out, code)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
