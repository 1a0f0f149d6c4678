//! The `curvestab` command line.
//!
//! Inputs are catalog names or `.gms` files. Parameters of the metric are
//! overridden with `--<name> <value>` (for example `--m 2`). Reports go to
//! standard output as JSON; exit codes are
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | parse or usage error |
//! | 3 | geometric precondition failed (e.g. not Einstein) |
//! | 4 | pipeline or verdict failure (trivial form, failed identity, `--strict`) |

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::json;

use crate::catalog::{get_entry, CatalogEntry, CatalogError};
use crate::expr::ParamEnv;
use crate::gms::{parse_gms, to_gms};
use crate::identities::{run_identities, SuiteConfig};
use crate::stability::{
    build_destabilizer, golden_fit, json17, second_variation, sweep_cutoff, GridPolicy, StabilityError, Verdict,
};

/// Residual below which `check-einstein` accepts a metric.
pub const EINSTEIN_TOL: f64 = 1e-6;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_GEOMETRY: i32 = 3;
pub const EXIT_VERDICT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "curvestab", version, about = "Curvature, identity and second-variation checks for Einstein 4-metrics")]
struct Cli {
    /// Worker threads for quadrature (defaults to all cores).
    #[arg(long, global = true, env = "CURVESTAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check `Ric = Λg` at random sample points.
    CheckEinstein(CheckArgs),
    /// Run the operator identity suite.
    Identities(InputArgs),
    /// Build the destabilizing direction and sample it.
    Destabilize(DestabilizeArgs),
    /// Evaluate the second variation on the cut-off destabilizing direction.
    SecondVariation(VariationArgs),
    /// Print an entry as a `.gms` file.
    ExportGms(ExportArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Catalog name or path to a `.gms` file; extra `--name value` pairs override its parameters.
    input: String,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Catalog name or path to a `.gms` file; extra `--name value` pairs override its parameters.
    input: String,
    /// Number of random sample points.
    #[arg(long, default_value_t = 32)]
    samples: usize,
    /// Seed for the sample points.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
struct DestabilizeArgs {
    /// Catalog name or path to a `.gms` file; extra `--name value` pairs override its parameters.
    input: String,
    /// Write the summary here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of diagnostic sample points.
    #[arg(long, default_value_t = 8)]
    samples: usize,
}

#[derive(Debug, Args)]
struct VariationArgs {
    /// Catalog name or path to a `.gms` file; extra `--name value` pairs override its parameters.
    input: String,
    /// Cutoff radius.
    #[arg(long = "R", conflicts_with = "sweep")]
    r_cut: Option<f64>,
    /// Comma-separated increasing cutoff radii.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<f64>>,
    /// Radial quadrature nodes.
    #[arg(long, default_value_t = GridPolicy::default().nodes_r)]
    nodes: usize,
    /// Polar-angle quadrature nodes.
    #[arg(long, default_value_t = GridPolicy::default().nodes_theta)]
    nodes_theta: usize,
    /// Write the JSON report here and the sweep CSV next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit 4 unless the verdict is `unstable`.
    #[arg(long)]
    strict: bool,
    /// Write 0 in the CSV runtime column so output is reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// Catalog name or path to a `.gms` file; extra `--name value` pairs override its parameters.
    input: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

type Outcome = Result<i32, Failure>;

fn stability_failure(e: StabilityError) -> Failure {
    let code = match e {
        StabilityError::GridTooSmall { .. }
        | StabilityError::RadiiNotIncreasing(_)
        | StabilityError::NoRadial
        | StabilityError::TooFewRadii { .. }
        | StabilityError::RadiusOutsideChart(_) => EXIT_USAGE,
        _ => EXIT_VERDICT,
    };
    Failure::new(code, e.to_string())
}

/// Split `--<param> <value>` overrides, which are not declared options of the
/// chosen subcommand, from the arguments clap should see.
fn split_params(args: Vec<String>) -> Result<(Vec<String>, ParamEnv, Vec<String>), Failure> {
    let cmd = Cli::command();
    let mut known: HashSet<String> = cmd.get_arguments().filter_map(|a| a.get_long().map(String::from)).collect();
    known.extend(["help".to_string(), "version".to_string()]);
    let mut names: HashSet<String> = HashSet::new();
    let sub_pos = args.iter().skip(1).position(|a| {
        cmd.get_subcommands().any(|s| {
            if s.get_name() == a {
                names.extend(s.get_arguments().filter_map(|x| x.get_long().map(String::from)));
                true
            } else {
                false
            }
        })
    });
    let Some(sub_pos) = sub_pos.map(|p| p + 1) else { return Ok((args, ParamEnv::new(), Vec::new())) };
    known.extend(names);
    let mut kept: Vec<String> = args[..=sub_pos].to_vec();
    let mut env = ParamEnv::new();
    let mut overridden = Vec::new();
    let mut it = args[sub_pos + 1..].iter();
    while let Some(a) = it.next() {
        let Some(body) = a.strip_prefix("--") else {
            kept.push(a.clone());
            continue;
        };
        let (name, inline) = match body.split_once('=') {
            Some((n, v)) => (n, Some(v.to_string())),
            None => (body, None),
        };
        if name.is_empty() || known.contains(name) {
            kept.push(a.clone());
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it.next().cloned().ok_or_else(|| Failure::new(EXIT_USAGE, format!("parameter --{name} needs a value")))?,
        };
        let v: f64 = value
            .parse()
            .map_err(|_| Failure::new(EXIT_USAGE, format!("parameter --{name}: `{value}` is not a number")))?;
        env.set(name, v);
        overridden.push(name.to_string());
    }
    Ok((kept, env, overridden))
}

/// Resolve a catalog name or `.gms` path into an entry.
fn load(input: &str, env: &ParamEnv, overridden: &[String]) -> Result<CatalogEntry, Failure> {
    let path = Path::new(input);
    let entry = if input.ends_with(".gms") || path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_USAGE, format!("{input}: {e}")))?;
        let spec = parse_gms(&text).map_err(|e| Failure::new(EXIT_USAGE, format!("{input}: {e}")))?;
        CatalogEntry::from_spec(spec, env).map_err(|e| Failure::new(EXIT_GEOMETRY, format!("{input}: {e}")))?
    } else {
        get_entry(input, env).map_err(|e| {
            let code = match e {
                CatalogError::UnknownEntry { .. } | CatalogError::OutOfRange { .. } => EXIT_USAGE,
                _ => EXIT_GEOMETRY,
            };
            Failure::new(code, e.to_string())
        })?
    };
    if let Some(p) = overridden.iter().find(|p| entry.spec.params.get(p).is_none()) {
        let declared: Vec<&str> = entry.spec.params.iter().map(|(k, _)| k).collect();
        return Err(Failure::new(
            EXIT_USAGE,
            format!("`{}` has no parameter `{p}` (parameters: {})", entry.name, declared.join(", ")),
        ));
    }
    Ok(entry)
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", p.display()))),
        None => writeln!(out, "{text}").map_err(|e| Failure::new(EXIT_USAGE, e.to_string())),
    }
}

fn check_einstein(a: &CheckArgs, env: &ParamEnv, ov: &[String], out: &mut dyn Write) -> Outcome {
    let entry = load(&a.input, env, ov)?;
    let report = entry.einstein_check(a.samples, a.seed).map_err(|e| Failure::new(EXIT_GEOMETRY, e.to_string()))?;
    let pass = report.max_residual < EINSTEIN_TOL;
    let v = json!({
        "entry": entry.name,
        "lambda": report.lambda,
        "max_residual": report.max_residual,
        "samples": a.samples,
        "tolerance": EINSTEIN_TOL,
        "pass": pass,
    });
    emit(out, None, &json17(&v))?;
    Ok(if pass { EXIT_OK } else { EXIT_GEOMETRY })
}

fn identities(a: &InputArgs, env: &ParamEnv, ov: &[String], out: &mut dyn Write) -> Outcome {
    let entry = load(&a.input, env, ov)?;
    let report = run_identities(&entry, &SuiteConfig::default());
    let mut v = serde_json::to_value(&report).expect("report serializes");
    v["pass"] = json!(report.all_pass());
    emit(out, None, &json17(&v))?;
    Ok(if report.all_pass() { EXIT_OK } else { EXIT_VERDICT })
}

fn destabilize(a: &DestabilizeArgs, env: &ParamEnv, ov: &[String], out: &mut dyn Write) -> Outcome {
    let entry = load(&a.input, env, ov)?;
    let b = build_destabilizer(&entry).map_err(stability_failure)?;
    let golden = golden_fit(&b, &entry.samples(50, 36)).map_err(stability_failure)?;
    let mut samples = Vec::new();
    for p in entry.samples(a.samples, 0xd1a9) {
        let value = |f: &crate::fieldops::TensorField| f.value(&p).map_err(|e| stability_failure(e.into()));
        samples.push(json!({
            "point": p,
            "f": value(&b.f)?[0],
            "tau": value(&b.tau)?,
            "omega_minus": value(&b.omega_minus)?,
            "h": value(&b.h)?,
        }));
    }
    let v = json!({
        "entry": entry.name,
        "class": entry.class.tag(),
        "eigen_residual": b.eigen_residual,
        "trace_residual": b.trace_residual,
        "omega_minus_sup": b.seed.sup_norm,
        "radial_profile": b.seed.profile.is_some(),
        "golden_fit": golden,
        "components": "row-major coordinate components",
        "samples": samples,
    });
    emit(out, a.out.as_deref(), &json17(&v))?;
    Ok(EXIT_OK)
}

fn variation(a: &VariationArgs, env: &ParamEnv, ov: &[String], out: &mut dyn Write) -> Outcome {
    let entry = load(&a.input, env, ov)?;
    let needs_cutoff = entry.radial.is_some() && entry.class != crate::catalog::EntryClass::CompactPositive;
    if needs_cutoff && a.r_cut.is_none() && a.sweep.is_none() {
        return Err(Failure::new(EXIT_USAGE, format!("`{}` is non-compact: give --R <radius> or --sweep <r1,r2,...>", entry.name)));
    }
    let policy = GridPolicy { nodes_r: a.nodes, nodes_theta: a.nodes_theta, ..GridPolicy::default() };
    let b = build_destabilizer(&entry).map_err(stability_failure)?;
    let report = match &a.sweep {
        Some(radii) => sweep_cutoff(&b, radii, policy),
        None => second_variation(&b, a.r_cut, policy),
    }
    .map_err(stability_failure)?;
    let json = report.to_json();
    if let Some(path) = &a.out {
        emit(out, Some(path), &format!("{json}\n"))?;
        emit(out, Some(&path.with_extension("csv")), &report.to_csv(!a.no_timing))?;
    }
    emit(out, None, &json)?;
    Ok(if a.strict && report.verdict != Verdict::Unstable { EXIT_VERDICT } else { EXIT_OK })
}

fn export(a: &ExportArgs, env: &ParamEnv, ov: &[String], out: &mut dyn Write) -> Outcome {
    let entry = load(&a.input, env, ov)?;
    let text = to_gms(&entry.spec);
    match &a.out {
        Some(p) => emit(out, Some(p), &text)?,
        None => write!(out, "{text}").map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?,
    }
    Ok(EXIT_OK)
}

fn dispatch(cli: &Cli, env: &ParamEnv, ov: &[String], out: &mut dyn Write) -> Outcome {
    match &cli.command {
        Command::CheckEinstein(a) => check_einstein(a, env, ov, out),
        Command::Identities(a) => identities(a, env, ov, out),
        Command::Destabilize(a) => destabilize(a, env, ov, out),
        Command::SecondVariation(a) => variation(a, env, ov, out),
        Command::ExportGms(a) => export(a, env, ov, out),
    }
}

/// Run the command line `args` (including the program name), writing reports
/// to `out` and diagnostics to `err`; returns the exit code.
pub fn run(args: impl IntoIterator<Item = String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = (|| -> Outcome {
        let (args, env, overridden) = split_params(args.into_iter().collect())?;
        let matches = match Cli::command().try_get_matches_from(&args) {
            Ok(m) => m,
            Err(e) => {
                let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
                let text = e.render().to_string();
                if code == EXIT_OK {
                    let _ = write!(out, "{text}");
                }
                return Err(Failure::new(code, text.trim_end().to_string()));
            }
        };
        let cli = Cli::from_arg_matches(&matches).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
        // Reports are buffered so the worker pool never holds the writer.
        let mut buf: Vec<u8> = Vec::new();
        let code = match cli.threads {
            Some(0) => Err(Failure::new(EXIT_USAGE, "--threads must be at least 1")),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
                pool.install(|| dispatch(&cli, &env, &overridden, &mut buf))
            }
            None => dispatch(&cli, &env, &overridden, &mut buf),
        };
        out.write_all(&buf).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
        code
    })();
    match result {
        Ok(code) => code,
        Err(f) => {
            if f.code != EXIT_OK {
                let _ = writeln!(err, "error: {}", f.message);
            }
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("curvestab").chain(args.iter().copied()).map(String::from);
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn parameter_overrides_are_split_from_options() {
        let args: Vec<String> =
            ["curvestab", "second-variation", "kerr", "--a", "0.2", "--R=20", "--m=1.5", "--strict"].map(String::from).to_vec();
        let (kept, env, ov) = split_params(args).unwrap();
        assert_eq!(kept, ["curvestab", "second-variation", "kerr", "--R=20", "--strict"]);
        assert_eq!((env.get("a"), env.get("m")), (Some(0.2), Some(1.5)));
        assert_eq!(ov, ["a", "m"]);
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(call(&["check-einstein", "nowhere"]).0, EXIT_USAGE);
        assert_eq!(call(&["check-einstein", "schwarzschild", "--m", "x"]).0, EXIT_USAGE);
        assert_eq!(call(&["check-einstein", "schwarzschild", "--q", "1"]).0, EXIT_USAGE);
        assert_eq!(call(&["check-einstein", "schwarzschild", "--m", "-1"]).0, EXIT_USAGE);
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        let (code, _, err) = call(&["second-variation", "schwarzschild"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--R"), "{err}");
        assert_eq!(call(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn check_einstein_reports_json() {
        let (code, out, _) = call(&["check-einstein", "schwarzschild", "--m", "1", "--samples", "8"]);
        assert_eq!(code, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v["lambda"].as_f64().unwrap().abs() < 1e-9);
        assert!(v["max_residual"].as_f64().unwrap() < 1e-9);
    }

    #[test]
    fn destabilize_controls_exit_4() {
        let (code, _, err) = call(&["destabilize", "taub_nut"]);
        assert_eq!(code, EXIT_VERDICT);
        assert!(err.contains("trivial"), "{err}");
        assert_eq!(call(&["destabilize", "round_s4"]).0, EXIT_VERDICT);
    }

    #[test]
    fn export_reads_back() {
        let (code, out, _) = call(&["export-gms", "taub_bolt", "--n", "1.5"]);
        assert_eq!(code, EXIT_OK);
        let spec = parse_gms(&out).unwrap();
        assert_eq!(spec.params.get("n"), Some(1.5));
    }
}
