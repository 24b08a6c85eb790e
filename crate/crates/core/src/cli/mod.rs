//! Command line experiment runner.
//!
//! Every subcommand reads an optional TOML [`ExperimentConfig`], applies the
//! global flag overrides, runs one experiment and writes `<command>.json`
//! (versioned report) and `<command>.csv` (plot-ready table) to the output
//! directory. Reports carry no timings or absolute paths, so reruns with the
//! same config and seed are byte-identical.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 input error, 3 numeric
//! error.

pub mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::comparison::{distortion_lower_bound, rs_gap_grid};
use crate::entropy::{check_convexity, jacobian_concavity_along, probe_sweep, ConvexityTolerances, ProbeOptions};
use crate::error::{Error, Result};
use crate::geometry::{CurvatureField, ManifoldModel, Point};
use crate::growth::verify_growth;
use crate::jacobi::volume_distortion;
use crate::par::{with_workers, Execution};
use crate::presets::{catalog, ModelSpec};
use crate::suite::{run_suite, SuiteOptions};
use crate::transport::{plan_particles, Method, MonotoneRadialMap};

pub use config::{ExperimentConfig, TransportMethod};

pub const COMPARE_SCHEMA: &str = "riccilab.compare/1";
pub const DISTORTION_SCHEMA: &str = "riccilab.distortion/1";
pub const TRANSPORT_SCHEMA: &str = "riccilab.transport/1";

#[derive(Debug, Parser)]
#[command(
    name = "riccilab",
    version,
    about = "Optimal-transport checks of variable Ricci lower bounds"
)]
pub struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving the JSON report and CSV tables.
    #[arg(long, global = true, default_value = "riccilab-out")]
    pub out_dir: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Multiplier on ODE and quadrature tolerances.
    #[arg(long, global = true)]
    pub tolerance_scale: Option<f64>,
    /// Write only the CSV tables or only the JSON report (default: both).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Built-in model overriding the config's `[model]` table.
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Grid of the scalar convexity gap.
    Compare,
    /// Volume distortion along a geodesic against its comparison bound.
    Distortion,
    /// Optimal transport between the source and target measures.
    Transport,
    /// Entropy inequality along the Wasserstein geodesic.
    CheckEntropyConvexity,
    /// Small-ball probe of the curvature bound at a point.
    ProbeCurvature,
    /// Ball volumes against the growth bound.
    VolumeGrowth,
    /// The acceptance battery.
    Suite {
        /// Comma-separated criterion ids (default: all, or the config's list).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
    /// Built-in models, measures and curvature fields.
    ListPresets {
        /// Emit the catalog as JSON.
        #[arg(long)]
        json: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Compare => "compare",
            Command::Distortion => "distortion",
            Command::Transport => "transport",
            Command::CheckEntropyConvexity => "check-entropy-convexity",
            Command::ProbeCurvature => "probe-curvature",
            Command::VolumeGrowth => "volume-growth",
            Command::Suite { .. } => "suite",
            Command::ListPresets { .. } => "list-presets",
        }
    }
}

/// Result of one experiment before it is written out.
pub struct Outcome {
    pub pass: bool,
    pub report: Value,
    /// Header and rows of the CSV table.
    pub table: (Vec<&'static str>, Vec<Vec<f64>>),
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs the parsed command; `Ok(pass)` on completion.
pub fn run(cli: &Cli) -> Result<bool> {
    if let Command::ListPresets { json } = cli.command {
        let cat = catalog();
        let mut out = std::io::stdout().lock();
        let text = if json {
            serde_json::to_string_pretty(&cat)? + "\n"
        } else {
            render_catalog(&cat)
        };
        out.write_all(text.as_bytes())
            .map_err(|e| Error::input(format!("cannot write to stdout: {e}")))?;
        return Ok(true);
    }
    let cfg = effective_config(cli)?;
    let outcome = with_workers(cfg.workers, || execute(&cli.command, &cfg))?;
    write_outputs(&cli.out_dir, cli.command.name(), cli.format, &outcome)?;
    println!(
        "{}: {} ({})",
        cli.command.name(),
        if outcome.pass { "pass" } else { "FAIL" },
        cli.out_dir.display()
    );
    Ok(outcome.pass)
}

/// Config file (or defaults) with the command line overrides applied.
pub fn effective_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    if let Some(t) = cli.tolerance_scale {
        cfg.tolerance_scale = t;
    }
    if let Some(m) = &cli.model {
        cfg.model = ModelSpec::named(m);
    }
    if let Command::Suite { criteria } = &cli.command {
        if !criteria.is_empty() {
            cfg.suite.criteria = criteria.clone();
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Dispatches a config-driven command.
pub fn execute(command: &Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    match command {
        Command::Compare => compare(cfg),
        Command::Distortion => distortion(cfg),
        Command::Transport => transport(cfg),
        Command::CheckEntropyConvexity => convexity(cfg),
        Command::ProbeCurvature => probe(cfg),
        Command::VolumeGrowth => growth(cfg),
        Command::Suite { .. } => suite(cfg),
        Command::ListPresets { .. } => Err(Error::input("list-presets writes no report")),
    }
}

fn exec() -> Execution {
    Execution::default()
}

fn build_model(cfg: &ExperimentConfig) -> Result<ManifoldModel> {
    cfg.model.build(cfg.base_dir.as_deref(), cfg.tolerance_scale)
}

fn build_curvature(cfg: &ExperimentConfig, model: &ManifoldModel) -> Result<CurvatureField> {
    cfg.curvature.build(model, cfg.curvature_samples, cfg.seed)
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn compare(cfg: &ExperimentConfig) -> Result<Outcome> {
    let c = &cfg.compare;
    let samples = rs_gap_grid(c.r_max, c.r_count, c.k_min, c.k_count, &c.dims, exec())?;
    let worst = samples
        .iter()
        .min_by(|a, b| a.gap.total_cmp(&b.gap))
        .ok_or_else(|| Error::input("comparison grid is empty"))?;
    let pass = worst.gap >= -c.tolerance;
    let report = json!({
        "schema": COMPARE_SCHEMA,
        "grid": c,
        "samples": samples.len(),
        "min_gap": worst.gap,
        "argmin": worst,
        "pass": pass,
    });
    let rows = samples.iter().map(|s| vec![s.t, s.r, s.k, s.n as f64, s.gap]).collect();
    Ok(Outcome {
        pass,
        report,
        table: (vec!["t", "r", "k", "n", "gap"], rows),
    })
}

fn distortion(cfg: &ExperimentConfig) -> Result<Outcome> {
    let model = build_model(cfg)?;
    let k = build_curvature(cfg, &model)?;
    let d = &cfg.distortion;
    let (x, y) = (Point::from(d.x), Point::from(d.y));
    let g = model.geodesic(x, y)?;
    let length = g.length;
    // Ric ≥ −K on the ball about the midpoint that contains the segment
    let k_min = -k.sup_on_ball(g.midpoint()?, 0.5 * length)?;
    let rows = d
        .t_grid
        .iter()
        .map(|&t| -> Result<Vec<f64>> {
            let v = volume_distortion(&model, x, y, t)?.value;
            let b = distortion_lower_bound(t, length, k_min, 2)?;
            Ok(vec![t, v, b, v - b])
        })
        .collect::<Result<Vec<_>>>()?;
    let min_slack = rows.iter().map(|r| r[3]).fold(f64::INFINITY, f64::min);
    let pass = min_slack >= -d.tolerance;
    let report = json!({
        "schema": DISTORTION_SCHEMA,
        "model": model.summary(),
        "x": x,
        "y": y,
        "length": length,
        "k_min": k_min,
        "t_grid": d.t_grid,
        "v_t": rows.iter().map(|r| r[1]).collect::<Vec<_>>(),
        "bound": rows.iter().map(|r| r[2]).collect::<Vec<_>>(),
        "slack": rows.iter().map(|r| r[3]).collect::<Vec<_>>(),
        "min_slack": min_slack,
        "tolerance": d.tolerance,
        "pass": pass,
    });
    Ok(Outcome {
        pass,
        report,
        table: (vec!["t", "v_t", "bound", "slack"], rows),
    })
}

fn transport(cfg: &ExperimentConfig) -> Result<Outcome> {
    let model = build_model(cfg)?;
    let tc = &cfg.transport;
    match tc.method {
        TransportMethod::Radial => {
            let mu0 = cfg.resolved(&cfg.source).build(&model, cfg.resolution)?;
            let mu1 = cfg.resolved(&cfg.target).build(&model, cfg.resolution)?;
            let map = MonotoneRadialMap::new(&model, &mu0, &mu1)?;
            let rows: Vec<Vec<f64>> = mu0
                .edges()
                .iter()
                .map(|&s| {
                    let (r, d) = map.radius_and_derivative(s);
                    vec![s, r, d]
                })
                .collect();
            let monotone = rows.windows(2).all(|w| w[1][1] >= w[0][1]);
            let report = json!({
                "schema": TRANSPORT_SCHEMA,
                "model": model.summary(),
                "method": "radial",
                "source": cfg.source,
                "target": cfg.target,
                "grid_resolution": cfg.resolution,
                "w2_sq": map.cost(),
                "monotone": monotone,
                "pass": monotone,
            });
            Ok(Outcome {
                pass: monotone,
                report,
                table: (vec!["s", "R", "dR"], rows),
            })
        }
        TransportMethod::Exact | TransportMethod::Sinkhorn => {
            let mu = cfg.resolved(&cfg.source).build(&model, tc.particles)?.to_particles();
            let nu = cfg.resolved(&cfg.target).build(&model, tc.particles)?.to_particles();
            let method = match tc.method {
                TransportMethod::Exact => Method::Exact,
                _ => Method::Sinkhorn {
                    relative_epsilon: tc.relative_epsilon,
                },
            };
            let plan = plan_particles(&model, &mu, &nu, method, exec())?;
            let marginal_error = plan.marginal_error(&mu.weights, &nu.weights);
            let certificate = plan
                .certificate
                .as_ref()
                .map(|c| json!({ "min_reduced_cost": c.min_reduced_cost, "duality_gap": c.duality_gap }));
            let pass = marginal_error <= tc.tolerance;
            let report = json!({
                "schema": TRANSPORT_SCHEMA,
                "model": model.summary(),
                "method": method,
                "source": cfg.source,
                "target": cfg.target,
                "particles": [mu.len(), nu.len()],
                "cost": plan.cost,
                "w2": plan.cost.max(0.0).sqrt(),
                "marginal_error": marginal_error,
                "certificate": certificate,
                "tolerance": tc.tolerance,
                "pass": pass,
            });
            let rows = plan
                .entries
                .iter()
                .map(|e| vec![e.i as f64, e.j as f64, e.mass])
                .collect();
            Ok(Outcome {
                pass,
                report,
                table: (vec!["i", "j", "mass"], rows),
            })
        }
    }
}

fn convexity(cfg: &ExperimentConfig) -> Result<Outcome> {
    let model = build_model(cfg)?;
    let k = build_curvature(cfg, &model)?;
    let mu0 = cfg.resolved(&cfg.source).build(&model, cfg.resolution)?;
    let mu1 = cfg.resolved(&cfg.target).build(&model, cfg.resolution)?;
    let cc = &cfg.convexity;
    let tol = ConvexityTolerances {
        slack: cc.slack_tolerance,
    };
    let rep = check_convexity(&model, &k, &mu0, &mu1, &cc.t_grid, tol, exec())?;
    let mut report = to_value(&rep)?;
    if cc.concavity_samples > 0 {
        let map = MonotoneRadialMap::new(&model, &mu0, &mu1)?;
        let interior: Vec<f64> = cc.t_grid.iter().copied().filter(|t| *t > 0.0 && *t < 1.0).collect();
        if !interior.is_empty() {
            let slack = jacobian_concavity_along(&map, &interior, cc.concavity_samples, exec())?;
            report["jacobian_concavity_min_slack"] = json!(slack);
        }
    }
    let rows = (0..rep.t_grid.len())
        .map(|i| vec![rep.t_grid[i], rep.ent[i], rep.ent_rebinned[i], rep.rhs[i], rep.slack[i]])
        .collect();
    Ok(Outcome {
        pass: rep.pass,
        report,
        table: (vec!["t", "ent", "ent_rebinned", "rhs", "slack"], rows),
    })
}

fn probe(cfg: &ExperimentConfig) -> Result<Outcome> {
    let model = build_model(cfg)?;
    let k = build_curvature(cfg, &model)?;
    let p = &cfg.probe;
    let opts = ProbeOptions {
        rings: p.rings,
        directions: p.directions,
        epsilon0: p.epsilon0,
        tolerance: p.tolerance,
    };
    let sweep = probe_sweep(&model, &k, Point::from(p.z0), &p.radii, &opts, cfg.seed, exec())?;
    let pass = !sweep.violation;
    let mut report = to_value(&sweep)?;
    report["model"] = to_value(&model.summary())?;
    report["pass"] = json!(pass);
    let rows = sweep
        .trials
        .iter()
        .map(|t| vec![t.r, t.direction, t.estimate, t.comparison, t.ent_gap, t.w2_sq])
        .collect();
    Ok(Outcome {
        pass,
        report,
        table: (
            vec!["r", "direction", "estimate", "comparison", "ent_gap", "w2_sq"],
            rows,
        ),
    })
}

fn growth(cfg: &ExperimentConfig) -> Result<Outcome> {
    let model = build_model(cfg)?;
    let k = build_curvature(cfg, &model)?;
    let g = &cfg.growth;
    let rep = verify_growth(&model, &k, Point::from(g.x0), g.eps, &g.r_grid, g.linear_c, exec())?;
    let rows = (0..rep.r_grid.len())
        .map(|i| vec![rep.r_grid[i], rep.volumes[i], rep.bound[i], rep.log_margins[i]])
        .collect();
    Ok(Outcome {
        pass: rep.pass,
        report: to_value(&rep)?,
        table: (vec!["R", "V_R", "bound", "log_margin"], rows),
    })
}

fn suite(cfg: &ExperimentConfig) -> Result<Outcome> {
    let opts = SuiteOptions {
        seed: cfg.seed,
        tolerance_scale: cfg.tolerance_scale,
        exec: exec(),
    };
    let rep = run_suite(&cfg.suite.criteria, &opts)?;
    let rows = rep
        .criteria
        .iter()
        .map(|c| vec![c.id as f64, if c.pass { 1.0 } else { 0.0 }])
        .collect();
    Ok(Outcome {
        pass: rep.pass,
        report: to_value(&rep)?,
        table: (vec!["criterion", "pass"], rows),
    })
}

/// Writes `<name>.json` and `<name>.csv` as selected by `format`.
pub fn write_outputs(dir: &Path, name: &str, format: Option<Format>, outcome: &Outcome) -> Result<()> {
    let io = |what: &Path, e: std::io::Error| Error::input(format!("cannot write {}: {e}", what.display()));
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    if format != Some(Format::Csv) {
        let path = dir.join(format!("{name}.json"));
        let text = serde_json::to_string_pretty(&outcome.report)? + "\n";
        fs::write(&path, text).map_err(|e| io(&path, e))?;
    }
    if format != Some(Format::Json) {
        let path = dir.join(format!("{name}.csv"));
        let file = fs::File::create(&path).map_err(|e| io(&path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        let err = |e: csv::Error| Error::input(format!("cannot write {}: {e}", path.display()));
        w.write_record(&outcome.table.0).map_err(err)?;
        for row in &outcome.table.1 {
            w.serialize(row).map_err(err)?;
        }
        w.flush().map_err(|e| io(&path, e))?;
    }
    Ok(())
}

fn render_catalog(cat: &crate::presets::Catalog) -> String {
    let mut s = String::new();
    for (title, entries) in [
        ("models", &cat.models),
        ("measures", &cat.measures),
        ("curvature", &cat.curvature),
    ] {
        s.push_str(title);
        s.push_str(":\n");
        for e in entries {
            s.push_str(&format!("  {:<22} {}\n", e.name, e.description));
            for (p, doc) in &e.parameters {
                s.push_str(&format!("      {p:<20} {doc}\n"));
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("riccilab").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_config() {
        let c = cli(&[
            "--seed",
            "9",
            "--tolerance-scale",
            "0.5",
            "--model",
            "sphere-cap",
            "suite",
            "--criteria",
            "1,5",
        ]);
        let cfg = effective_config(&c).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.tolerance_scale, 0.5);
        assert_eq!(cfg.model, ModelSpec::named("sphere-cap"));
        assert_eq!(cfg.suite.criteria, vec![1, 5]);
        assert!(effective_config(&cli(&["--workers", "0", "compare"])).is_err());
    }

    #[test]
    fn small_compare_grid_passes() {
        let mut cfg = ExperimentConfig::default();
        cfg.compare.r_count = 5;
        cfg.compare.k_count = 7;
        let out = execute(&Command::Compare, &cfg).unwrap();
        assert!(out.pass);
        assert_eq!(out.table.1.len(), 3 * 5 * 7 * 19);
        assert!(out.report["min_gap"].as_f64().unwrap() >= -1e-12);
    }

    #[test]
    fn hyperbolic_distortion_is_above_its_bound() {
        let mut cfg = ExperimentConfig::default();
        cfg.distortion.t_grid = vec![0.25, 0.5, 1.0];
        let out = execute(&Command::Distortion, &cfg).unwrap();
        assert!(out.pass);
        // constant curvature: the bound is attained
        for row in &out.table.1 {
            assert!(row[3].abs() < 1e-8, "{row:?}");
        }
    }

    #[test]
    fn discrete_transport_reports_plan() {
        let mut cfg = ExperimentConfig::default();
        cfg.transport.method = TransportMethod::Exact;
        cfg.transport.particles = crate::transport::GridResolution::new(2, 4);
        let out = execute(&Command::Transport, &cfg).unwrap();
        assert!(out.pass, "{}", out.report);
        assert!(out.report["certificate"]["min_reduced_cost"].as_f64().unwrap() >= -1e-12);
        let total: f64 = out.table.1.iter().map(|r| r[2]).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outputs_respect_format() {
        let dir = tempfile::tempdir().unwrap();
        let out = Outcome {
            pass: true,
            report: json!({ "pass": true }),
            table: (vec!["a", "b"], vec![vec![1.0, 2.5]]),
        };
        write_outputs(dir.path(), "x", Some(Format::Csv), &out).unwrap();
        assert!(!dir.path().join("x.json").exists());
        assert_eq!(fs::read_to_string(dir.path().join("x.csv")).unwrap(), "a,b\n1.0,2.5\n");
        write_outputs(dir.path(), "x", None, &out).unwrap();
        assert!(dir.path().join("x.json").exists());
    }
}
