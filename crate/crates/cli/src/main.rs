//! `qmarket`: run pricing experiments on two-sided queueing markets.
//!
//! Successful commands print JSON on stdout. Failures print
//! `{"error": {"kind": ..., "message": ...}}` on stderr and exit with status 1
//! (2 for command-line usage errors).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qmarket_core::config::{load_scenario, load_warm_start};
use qmarket_core::experiment::{preset_parameters, run_plan, Corollary, PlanFile, WarmStartFile};
use qmarket_core::fluid::solve_fluid;
use qmarket_core::geometry::compute_r;
use qmarket_core::metrics::bound_prediction;
use qmarket_core::pricing::{error_radii, Learner};
use qmarket_core::trace::Variant;

#[derive(Parser, Debug)]
#[command(name = "qmarket", version, about = "Learning-based pricing for two-sided queueing markets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute an experiment plan (from --plan, or assembled from flags).
    Run(RunArgs),
    /// Solve the fluid baseline of a scenario.
    Fluid {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Print the parameters a corollary schedule resolves to.
    Preset(PresetArgs),
    /// Check a scenario file, and optionally a warm-start file against it.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Standard,
    Balanced,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Standard => Variant::Standard,
            VariantArg::Balanced => Variant::Balanced,
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed of the sweep.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long)]
    corollary: Option<Corollary>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Comma-separated horizon grid.
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<u64>>,
    #[arg(long)]
    reps: Option<usize>,
    /// Warm-start file for the balanced variant; without it the oracle warm start is used.
    #[arg(long)]
    warm_start: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PresetArgs {
    #[arg(long)]
    corollary: Corollary,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    horizons: Vec<u64>,
    /// Also report the shrink radius check and error radii for this scenario.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, requires_all = ["corollary", "horizons"])]
    warm_start: Option<PathBuf>,
    #[arg(long)]
    corollary: Option<Corollary>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<u64>>,
}

/// A failure reported as JSON: `kind` names the error variant chain, e.g. `Preset.GammaOutOfRange`.
struct Failure {
    kind: String,
    message: String,
}

impl<E: std::error::Error + std::fmt::Debug> From<E> for Failure {
    fn from(e: E) -> Self {
        Self { kind: variant_path(&format!("{e:?}")), message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { kind: "Usage".into(), message: message.into() }
}

/// Extracts `A.B.C` from a Debug rendering such as `A(B(C { .. }))`.
fn variant_path(debug: &str) -> String {
    let mut parts = Vec::new();
    let mut rest = debug;
    loop {
        let end = rest.find(|c: char| !(c.is_alphanumeric() || c == '_')).unwrap_or(rest.len());
        if end == 0 {
            break;
        }
        parts.push(&rest[..end]);
        match rest[end..].strip_prefix('(') {
            Some(inner) if inner.starts_with(|c: char| c.is_ascii_uppercase()) => rest = inner,
            _ => break,
        }
    }
    if parts.is_empty() {
        "Error".into()
    } else {
        parts.join(".")
    }
}

fn absolute(p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        std::env::current_dir().map(|d| d.join(p)).unwrap_or_else(|_| p.to_path_buf())
    }
}

fn run(args: RunArgs) -> Result<Value, Failure> {
    let (mut file, base) = match &args.plan {
        Some(p) => {
            let p = absolute(p);
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            (PlanFile::load(&p)?, base)
        }
        None => {
            let cwd = absolute(Path::new("."));
            let scenario = args.scenario.clone().ok_or_else(|| usage("run needs --plan or --scenario"))?;
            let file = PlanFile {
                scenario,
                horizons: args.horizons.clone().ok_or_else(|| usage("run without --plan needs --horizons"))?,
                replications: args.reps.ok_or_else(|| usage("run without --plan needs --reps"))?,
                ..PlanFile::default()
            };
            (file, cwd)
        }
    };
    if let Some(s) = &args.scenario {
        file.scenario = absolute(s);
    }
    if let Some(o) = &args.out {
        file.out = Some(absolute(o));
    }
    if let Some(seed) = args.seed {
        file.base_seed = seed;
    }
    if let Some(t) = args.threads {
        file.threads = Some(t);
    }
    if let Some(h) = &args.horizons {
        file.horizons = h.clone();
    }
    if let Some(r) = args.reps {
        file.replications = r;
    }
    if let Some(c) = args.corollary {
        file.params = Default::default();
        file.params.corollary = Some(c);
    }
    if args.gamma.is_some() {
        file.params.gamma = args.gamma;
    }
    if let Some(v) = args.variant {
        file.variant = Some(v.into());
        if matches!(v, VariantArg::Standard) {
            file.warm_start = None;
        }
    }
    if let Some(w) = &args.warm_start {
        file.warm_start = Some(WarmStartFile { oracle: false, path: Some(absolute(w)) });
    } else if file.variant == Some(Variant::Balanced) && file.warm_start.is_none() {
        file.warm_start = Some(WarmStartFile { oracle: true, path: None });
    }
    let plan = file.resolve(&base)?;
    let outcome = run_plan(&plan)?;
    Ok(json!({
        "out": plan.out.display().to_string(),
        "runs": outcome.records.len(),
        "complete": outcome.manifest.complete,
        "regret_slope": outcome.manifest.regret_slope,
        "f_star": outcome.manifest.f_star,
    }))
}

fn fluid(scenario: &Path) -> Result<Value, Failure> {
    let s = load_scenario::<f64>(scenario)?;
    let sol = solve_fluid(&s, 1e-9)?;
    Ok(json!({
        "scenario": s.name(),
        "x_star": sol.x_star,
        "lambda_star": sol.lambda_star,
        "mu_star": sol.mu_star,
        "f_star": sol.f_star,
        "boundary_active": sol.boundary_active,
        "iterations": sol.iterations,
        "r": compute_r(&s),
        "center": s.center(),
    }))
}

fn preset(args: PresetArgs) -> Result<Value, Failure> {
    let scenario = args.scenario.as_deref().map(load_scenario::<f64>).transpose()?;
    let mut rows = Vec::with_capacity(args.horizons.len());
    for &t in &args.horizons {
        let p = preset_parameters::<f64>(args.corollary, args.gamma, t)?;
        let mut row = json!({
            "horizon": t,
            "params": p,
            "bound_standard": bound_prediction(&p, Variant::Standard),
            "bound_balanced": bound_prediction(&p, Variant::Balanced),
            "slots_per_outer_iteration": 2 * u64::from(p.bisection_steps) * p.samples_per_price,
        });
        if let Some(s) = &scenario {
            let r = compute_r(s);
            let radii = error_radii(s, &p);
            row["r"] = json!(r);
            row["delta_below_r"] = json!(p.delta < r);
            row["error_radii"] = json!({ "customers": radii.customers, "servers": radii.servers });
            if let Ok(l) = Learner::standard(s, p) {
                row["warnings"] = json!(l.warnings());
            }
        }
        rows.push(row);
    }
    Ok(json!({ "corollary": args.corollary.number(), "gamma": args.gamma, "presets": rows }))
}

fn validate(args: ValidateArgs) -> Result<Value, Failure> {
    let s = load_scenario::<f64>(&args.scenario)?;
    let t = s.topology();
    let mut out = json!({
        "valid": true,
        "scenario": s.name(),
        "customers": t.customers(),
        "servers": t.servers(),
        "edges": t.edges().iter().map(|&(i, j)| [i + 1, j + 1]).collect::<Vec<_>>(),
        "a_min": s.a_min(),
        "r": compute_r(&s),
    });
    if let Some(w) = &args.warm_start {
        let warm = load_warm_start::<f64>(w)?;
        let corollary = args.corollary.ok_or_else(|| usage("--warm-start needs --corollary"))?;
        let horizons = args.horizons.unwrap_or_default();
        for &h in &horizons {
            let p = preset_parameters::<f64>(corollary, args.gamma, h)?;
            Learner::balanced(&s, p, warm.clone())?;
        }
        out["warm_start"] = json!({ "valid": true, "horizons": horizons });
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            eprintln!("{}", json!({ "error": { "kind": "Usage", "message": message.trim_end() } }));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Fluid { scenario } => fluid(&scenario),
        Command::Preset(a) => preset(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json output"));
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", json!({ "error": { "kind": f.kind, "message": f.message } }));
            ExitCode::from(if f.kind == "Usage" { 2 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::variant_path;

    #[test]
    fn variant_paths() {
        assert_eq!(variant_path("Preset(GammaOutOfRange { corollary: C2, gamma: 0.8 })"), "Preset.GammaOutOfRange");
        assert_eq!(variant_path("Config(Invalid(AminOutOfRange(0.0)))"), "Config.Invalid.AminOutOfRange");
        assert_eq!(variant_path("Invalid(\"x\")"), "Invalid");
        assert_eq!(variant_path("RunsFailed { failed: 1, total: 2 }"), "RunsFailed");
    }
}
