use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hamcat_core::catalog::ErrataLine;
use hamcat_core::dynamics::{fmt17, monitored_functions};
use hamcat_core::verify::{curated_pass, reports_to_json, reports_to_text};
use hamcat_core::{
    drift_report, integrate, verify_catalog, Catalog, CatalogError, DynamicsError, Method, Params,
    VerifyOptions,
};
use serde_json::json;
use thiserror::Error;

#[derive(Parser, Debug)]
#[command(
    name = "hamcat",
    version,
    about = "Audit integrable systems built from four-dimensional Lie algebras"
)]
struct Cli {
    /// Extra catalog file(s) merged into the built-in catalog.
    #[arg(long = "catalog", global = true, value_name = "FILE")]
    catalogs: Vec<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List systems whose id matches a glob pattern.
    Catalog {
        #[arg(default_value = "*")]
        pattern: String,
        #[arg(long)]
        json: bool,
    },
    /// Run every check on matching systems.
    Verify(VerifyArgs),
    /// Integrate the Hamiltonian flow and report invariant drift.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TrajectoryFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct Common {
    /// Parameter override `name=value`; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Write the main output here instead of stdout.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// System ids or glob patterns.
    ids: Vec<String>,
    /// Verify every system in the catalog.
    #[arg(long)]
    all: bool,
    #[arg(long, env = "HAMCAT_SEED", default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Shorthand for `--format json`.
    #[arg(long)]
    json: bool,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
    /// Also print the printed-versus-curated formulas of each system.
    #[arg(long)]
    errata: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    id: String,
    /// Initial point, comma separated, in coordinate order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long = "T", default_value_t = 10.0)]
    t_end: f64,
    #[arg(long, default_value = "rk4")]
    method: Method,
    #[arg(long, value_enum, default_value_t = TrajectoryFormat::Csv)]
    format: TrajectoryFormat,
    #[command(flatten)]
    common: Common,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.trim().to_string(), value))
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Failed(_) | Self::Io(_) => 1,
            Self::Usage(_) | Self::Catalog(_) => 2,
        }
    }
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load(paths: &[PathBuf]) -> Result<Catalog, CliError> {
    let mut c = Catalog::builtin();
    for p in paths {
        c.load_file(p)?;
    }
    Ok(c)
}

/// Overrides restricted to the parameters one system declares.
fn params_for(catalog: &Catalog, id: &str, all: &[(String, f64)]) -> Params {
    let spec = catalog.spec(id).expect("id comes from the catalog");
    let mut p = Params::new();
    for (name, value) in all {
        if spec.params.contains_key(name) || spec.derived.contains_key(name) {
            p.set(name, *value);
        }
    }
    p
}

fn check_param_names(
    catalog: &Catalog,
    ids: &[String],
    all: &[(String, f64)],
) -> Result<(), CliError> {
    for (name, _) in all {
        let known = ids.iter().any(|id| {
            let s = catalog.spec(id).expect("id comes from the catalog");
            s.params.contains_key(name) || s.derived.contains_key(name)
        });
        if !known {
            return Err(CliError::Usage(format!(
                "unknown parameter `{name}` for the selected system(s)"
            )));
        }
    }
    Ok(())
}

fn cmd_catalog(catalog: &Catalog, pattern: &str, json: bool) -> Result<(), CliError> {
    let rows = catalog.matching(pattern)?;
    let text = if json {
        let v: Vec<_> = rows
            .iter()
            .map(|r| {
                json!({
                    "id": r.id,
                    "kind": r.kind.as_str(),
                    "algebra": r.algebra,
                    "claimed_class": r.claimed_class.as_str(),
                })
            })
            .collect();
        serde_json::to_string_pretty(&v).expect("listing serializes") + "\n"
    } else {
        let w = |f: fn(&hamcat_core::SystemInfo) -> usize| rows.iter().map(f).max().unwrap_or(0);
        let (wi, wk, wa) = (
            w(|r| r.id.len()),
            w(|r| r.kind.as_str().len()),
            w(|r| r.algebra.len()),
        );
        rows.iter()
            .map(|r| {
                format!(
                    "{:<wi$}  {:<wk$}  {:<wa$}  {}\n",
                    r.id,
                    r.kind.as_str(),
                    r.algebra,
                    r.claimed_class.as_str()
                )
            })
            .collect()
    };
    emit(&None, &text)
}

fn select(catalog: &Catalog, patterns: &[String], all: bool) -> Result<Vec<String>, CliError> {
    if all {
        return Ok(catalog.ids());
    }
    if patterns.is_empty() {
        return Err(CliError::Usage(
            "name at least one system or pattern, or pass --all".to_string(),
        ));
    }
    let mut chosen = BTreeSet::new();
    for p in patterns {
        let m = catalog.matching(p)?;
        if m.is_empty() {
            return Err(CatalogError::UnknownSystem(p.clone()).into());
        }
        chosen.extend(m.into_iter().map(|s| s.id));
    }
    // Keep catalog order.
    Ok(catalog
        .ids()
        .into_iter()
        .filter(|id| chosen.contains(id))
        .collect())
}

fn errata_lines(
    catalog: &Catalog,
    ids: &[String],
) -> Result<Vec<(String, Vec<ErrataLine>)>, CliError> {
    let mut out = Vec::new();
    for id in ids {
        let d = catalog.errata_diff(id)?;
        if !d.is_empty() {
            out.push((id.clone(), d));
        }
    }
    Ok(out)
}

fn cmd_verify(catalog: &Catalog, a: &VerifyArgs) -> Result<(), CliError> {
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(CliError::Usage("--tol must be positive".to_string()));
    }
    let ids = select(catalog, &a.ids, a.all)?;
    check_param_names(catalog, &ids, &a.common.params)?;
    let opts = VerifyOptions {
        samples: a.samples as usize,
        tol: a.tol,
        seed: a.seed,
    };
    // Materialize with per-system overrides so one system's parameters do not
    // leak into another's.
    let mut reports = Vec::new();
    let mut groups: Vec<(Params, Vec<String>)> = Vec::new();
    for id in &ids {
        let p = params_for(catalog, id, &a.common.params);
        match groups.iter_mut().find(|(q, _)| *q == p) {
            Some((_, v)) => v.push(id.clone()),
            None => groups.push((p, vec![id.clone()])),
        }
    }
    for (p, group) in &groups {
        reports.extend(verify_catalog(catalog, group, p, opts)?);
    }
    let order = |id: &str| ids.iter().position(|x| x == id).unwrap_or(usize::MAX);
    reports.sort_by_key(|r| (order(&r.system), r.variant != "curated"));

    let json = a.json || a.format == ReportFormat::Json;
    let errata = if a.errata {
        errata_lines(catalog, &ids)?
    } else {
        Vec::new()
    };
    let text = if json {
        let body = reports_to_json(&reports);
        if a.errata {
            let e: Vec<_> = errata
                .iter()
                .flat_map(|(id, lines)| {
                    lines.iter().map(move |l| {
                        json!({"system": id, "field": l.field, "printed": l.printed, "curated": l.curated})
                    })
                })
                .collect();
            let reports: serde_json::Value = serde_json::from_str(&body).expect("valid json");
            serde_json::to_string_pretty(&json!({"reports": reports, "errata": e}))
                .expect("serializes")
                + "\n"
        } else {
            body + "\n"
        }
    } else {
        let mut t = reports_to_text(&reports);
        for (id, lines) in &errata {
            t.push_str(&format!("errata {id}\n"));
            for l in lines {
                t.push_str(&format!(
                    "  {}: printed `{}`  curated `{}`\n",
                    l.field, l.printed, l.curated
                ));
            }
        }
        let curated: Vec<_> = reports.iter().filter(|r| r.variant == "curated").collect();
        let failed = curated.iter().filter(|r| !r.passed()).count();
        t.push_str(&format!(
            "{} system(s) verified, {} failed; {} as-printed reading(s) with discrepancies\n",
            curated.len(),
            failed,
            reports
                .iter()
                .filter(|r| r.variant != "curated" && !r.passed())
                .count()
        ));
        t
    };
    emit(&a.common.output, &text)?;
    if curated_pass(&reports) {
        Ok(())
    } else {
        Err(CliError::Failed("verification failed".to_string()))
    }
}

fn cmd_simulate(catalog: &Catalog, a: &SimulateArgs) -> Result<(), CliError> {
    if !catalog.contains(&a.id) {
        return Err(CatalogError::UnknownSystem(a.id.clone()).into());
    }
    check_param_names(catalog, std::slice::from_ref(&a.id), &a.common.params)?;
    let params = params_for(catalog, &a.id, &a.common.params);
    let sys = catalog.get_system(&a.id, &params)?;
    let (z0, from_catalog) = match &a.z0 {
        Some(z) => (z.clone(), None),
        None => {
            let (z, listed) = sys.default_z0();
            (z, Some(listed))
        }
    };
    if z0.len() != sys.dim() {
        return Err(CliError::Usage(format!(
            "--z0 needs {} values for {}, got {}",
            sys.dim(),
            sys.id,
            z0.len()
        )));
    }
    if let Some(listed) = from_catalog {
        let what = if listed {
            "catalog start point"
        } else {
            "centre of the sampling box"
        };
        let pts: Vec<String> = z0.iter().map(|v| v.to_string()).collect();
        eprintln!("note: --z0 not given; using the {what} ({})", pts.join(","));
    }
    let (traj, failure) = match integrate(&sys, &z0, a.dt, a.t_end, a.method) {
        Ok(t) => (t, None),
        Err(e @ (DynamicsError::Step { .. } | DynamicsError::Dimension { .. })) => {
            return Err(CliError::Usage(e.to_string()))
        }
        Err(e) => (
            e.partial()
                .expect("runtime failures keep the partial trajectory")
                .clone(),
            Some(e),
        ),
    };
    let monitored = monitored_functions(&sys);
    let drift = drift_report(&traj, &monitored).map_err(|e| CliError::Failed(e.to_string()))?;
    match a.format {
        TrajectoryFormat::Csv => {
            emit(&a.common.output, &traj.to_csv())?;
            let w = drift
                .iter()
                .map(|d| d.label.len())
                .max()
                .unwrap_or(0)
                .max(9);
            let mut summary = format!(
                "{} {} dt={} T={} steps={}\n{:<w$}  {:>24}  {:>24}\n",
                sys.id,
                a.method,
                a.dt,
                a.t_end,
                traj.len() - 1,
                "invariant",
                "initial",
                "max_drift"
            );
            for d in &drift {
                summary.push_str(&format!(
                    "{:<w$}  {:>24}  {:>24}\n",
                    d.label,
                    fmt17(d.initial),
                    fmt17(d.max_drift)
                ));
            }
            eprint!("{summary}");
        }
        TrajectoryFormat::Json => {
            let v = json!({
                "system": sys.id,
                "method": a.method.as_str(),
                "dt": a.dt,
                "T": a.t_end,
                "z0": z0,
                "steps": traj.len() - 1,
                "final": traj.last(),
                "drift": drift.iter().map(|d| json!({"invariant": d.label, "initial": d.initial, "max_drift": d.max_drift})).collect::<Vec<_>>(),
                "error": failure.as_ref().map(|e| e.to_string()),
            });
            emit(
                &a.common.output,
                &(serde_json::to_string_pretty(&v).expect("serializes") + "\n"),
            )?;
        }
    }
    match failure {
        Some(e) => Err(CliError::Failed(e.to_string())),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let catalog = load(&cli.catalogs)?;
    match &cli.command {
        Command::Catalog { pattern, json } => cmd_catalog(&catalog, pattern, *json),
        Command::Verify(a) => cmd_verify(&catalog, a),
        Command::Simulate(a) => cmd_simulate(&catalog, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hamcat: {e}");
            ExitCode::from(e.code())
        }
    }
}
