//! Command-line interface: argument parsing, flat key=value config files,
//! flag > file > default precedence, and the subcommand runners.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error. Data files contain
//! no timestamps so identical invocations produce byte-identical outputs; a
//! `.manifest` sidecar next to each output carries the run time, tool
//! version, and every resolved parameter with its provenance.

use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::fit::{fit_scaling, ModelForm};
use crate::harness::{
    fit_sweep, robustness_experiment, run_sweep, write_fit_csv, write_robustness_csv,
    write_sweep_csv, RobustnessSpec, SweepSpec,
};
use crate::immune::{compare_policies, log_spaced, ArchitecturePolicy, OrganismParams};
use crate::overlay::{build_overlay, OverlayConfig, DEFAULT_NODE_BUDGET};
use crate::policy::{
    balance_cluster_size, densified_link_count, minimize_cluster_size, model_total_time,
    radar_cluster_size, SizingPolicy, TotalTimeModel,
};
use crate::routing::{flood_local, route_global_trace, FailureMask, LinkKind, Query};
use crate::util::fmt_f64;

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "SWLAB_OUT_DIR";

const AFTER_HELP: &str = "\
Examples:
  swlab build --n 1024 --policy baseline:c=16,l=1 --seed 7 --dump topo.tsv
  swlab route --n 1024 --policy baseline:c=16,l=1 --seed 7 --source 0 --target 1000
  swlab sweep --grid 4096,16384,65536 --policy baseline:c=16,l=1 --policy radar --queries 1000 --trials 5 --seed 0 --out sweep.csv
  swlab optimize --n 1000000 --a1 1 --a2 1
  swlab immune --m-min 0.01 --m-max 10000 --points 50 --out immune.csv
  swlab robustness --n 16384 --policy radar --policy explicit:c=4,l=1 --p-grid 0,0.1,0.2 --redundancy --out robust.csv";

#[derive(Parser, Debug)]
#[command(
    name = "swlab",
    version,
    about = "Scaling laboratory for clustered small-world overlays",
    after_help = AFTER_HELP
)]
pub struct Cli {
    /// Flat key=value config file; flags override file values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Cap on worker threads (results are identical at any setting).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output directory for data files (default: $SWLAB_OUT_DIR or `.`).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build an overlay and print its resolved shape (optionally dump the
    /// topology).
    ///
    /// Example: swlab build --n 1024 --policy baseline:c=16,l=1 --dump topo.tsv
    Build(BuildArgs),
    /// Trace a single query through an overlay.
    ///
    /// Example: swlab route --n 1024 --policy baseline:c=16,l=1 --source 0 --target 1000
    Route(RouteArgs),
    /// Sweep network sizes and policies, writing per-point statistics and
    /// scaling fits.
    ///
    /// Example: swlab sweep --grid 4096,16384 --policy radar --out sweep.csv
    Sweep(SweepArgs),
    /// Analytic cluster-size optimizers for the total-time model.
    ///
    /// Example: swlab optimize --n 1000000 --a1 1 --a2 1
    Optimize(OptimizeArgs),
    /// Module-architecture scaling table (fixed-V / fixed-N / optimal) and
    /// power-law fits.
    ///
    /// Example: swlab immune --m-min 0.01 --m-max 10000 --points 50 --out immune.csv
    Immune(ImmuneArgs),
    /// Success rate across a node-failure probability grid.
    ///
    /// Example: swlab robustness --n 16384 --policy radar --p-grid 0,0.1 --out robust.csv
    Robustness(RobustnessArgs),
}

#[derive(Args, Debug, Default)]
pub struct BuildArgs {
    /// Requested node count.
    #[arg(long)]
    pub n: Option<u64>,
    /// Sizing policy, e.g. baseline:c=16,l=1 | radar:b1=1,b2=1,base=2 | explicit:c=64,l=4.
    #[arg(long)]
    pub policy: Option<String>,
    /// Long-link decay exponent.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cluster_dim: Option<usize>,
    #[arg(long)]
    pub intra_dim: Option<usize>,
    /// Node budget; builds resolving above it fail.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Write the per-node topology dump here.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct RouteArgs {
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Source node id (default: drawn from the seed).
    #[arg(long)]
    pub source: Option<u32>,
    /// Target node id (default: drawn from the seed).
    #[arg(long)]
    pub target: Option<u32>,
    /// Local-time weight.
    #[arg(long)]
    pub a1: Option<f64>,
    /// Global-time weight.
    #[arg(long)]
    pub a2: Option<f64>,
    /// Node-failure probability.
    #[arg(long)]
    pub fail_p: Option<f64>,
    #[arg(long)]
    pub mask_seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct SweepArgs {
    /// Comma-separated requested node counts, strictly increasing.
    #[arg(long)]
    pub grid: Option<String>,
    /// Sizing policy; repeat the flag to compare several.
    #[arg(long = "policy")]
    pub policies: Vec<String>,
    #[arg(long)]
    pub queries: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub a2: Option<f64>,
    #[arg(long)]
    pub fail_p: Option<f64>,
    /// Count cluster arrival as success (semantic redundancy).
    #[arg(long)]
    pub redundancy: bool,
    #[arg(long)]
    pub cluster_dim: Option<usize>,
    #[arg(long)]
    pub intra_dim: Option<usize>,
    #[arg(long)]
    pub budget: Option<u64>,
    /// Sweep table output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fit-summary output path (default: derived from --out).
    #[arg(long)]
    pub fit_out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub a2: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct ImmuneArgs {
    #[arg(long)]
    pub m_min: Option<f64>,
    #[arg(long)]
    pub m_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Module volume used by the fixed-V policy.
    #[arg(long)]
    pub v0: Option<f64>,
    /// Module count used by the fixed-N policy.
    #[arg(long)]
    pub n0: Option<f64>,
    /// Total module volume per unit mass.
    #[arg(long)]
    pub k: Option<f64>,
    /// Transport-time coefficient.
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub beta_b: Option<f64>,
    #[arg(long)]
    pub beta_cell: Option<f64>,
    #[arg(long)]
    pub beta_rate: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub fit_out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct RobustnessArgs {
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long = "policy")]
    pub policies: Vec<String>,
    /// Comma-separated failure probabilities.
    #[arg(long)]
    pub p_grid: Option<String>,
    #[arg(long)]
    pub queries: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub redundancy: bool,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// All keys accepted in config files.
const KNOWN_KEYS: &[&str] = &[
    "n", "grid", "policy", "r", "seed", "queries", "trials", "a1", "a2", "fail-p", "p-grid",
    "redundancy", "cluster-dim", "intra-dim", "budget", "out", "fit-out", "dump", "source",
    "target", "mask-seed", "m-min", "m-max", "points", "v0", "n0", "k", "b", "beta-b",
    "beta-cell", "beta-rate", "threads", "out-dir",
];

/// Parse a flat key=value config file. `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("config line {}: expected key=value", lineno + 1))
        })?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::InvalidArgument(format!(
                "config line {}: unknown key `{key}`",
                lineno + 1
            )));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Resolves one parameter at a time with flag > file > default precedence,
/// recording provenance for the manifest.
struct Resolver<'a> {
    file: &'a HashMap<String, String>,
    entries: Vec<(String, String, &'static str)>,
}

impl<'a> Resolver<'a> {
    fn new(file: &'a HashMap<String, String>) -> Self {
        Self {
            file,
            entries: Vec::new(),
        }
    }

    fn record(&mut self, key: &str, value: impl Display, source: &'static str) {
        self.entries.push((key.to_string(), value.to_string(), source));
    }

    fn parse_file_value<T: FromStr>(&self, key: &str, raw: &str) -> Result<T> {
        raw.parse().map_err(|_| {
            Error::InvalidArgument(format!("config key `{key}`: cannot parse `{raw}`"))
        })
    }

    /// Scalar with a default.
    fn scalar<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        if let Some(v) = flag {
            self.record(key, &v, "flag");
            return Ok(v);
        }
        if let Some(raw) = self.file.get(key) {
            let v: T = self.parse_file_value(key, raw)?;
            self.record(key, &v, "file");
            return Ok(v);
        }
        self.record(key, &default, "default");
        Ok(default)
    }

    /// Scalar that must come from the flag or the file.
    fn required<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<T> {
        if let Some(v) = flag {
            self.record(key, &v, "flag");
            return Ok(v);
        }
        if let Some(raw) = self.file.get(key) {
            let v: T = self.parse_file_value(key, raw)?;
            self.record(key, &v, "file");
            return Ok(v);
        }
        Err(Error::InvalidArgument(format!("missing required `{key}`")))
    }

    /// Optional scalar with no default.
    fn optional<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        if let Some(v) = flag {
            self.record(key, &v, "flag");
            return Ok(Some(v));
        }
        if let Some(raw) = self.file.get(key) {
            let v: T = self.parse_file_value(key, raw)?;
            self.record(key, &v, "file");
            return Ok(Some(v));
        }
        Ok(None)
    }

    fn path(&mut self, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        if let Some(p) = flag {
            self.record(key, p.display(), "flag");
            return Some(p);
        }
        if let Some(raw) = self.file.get(key) {
            self.record(key, raw, "file");
            return Some(PathBuf::from(raw));
        }
        None
    }

    fn boolean(&mut self, key: &str, flag_set: bool) -> Result<bool> {
        if flag_set {
            self.record(key, true, "flag");
            return Ok(true);
        }
        if let Some(raw) = self.file.get(key) {
            let v: bool = self.parse_file_value(key, raw)?;
            self.record(key, v, "file");
            return Ok(v);
        }
        self.record(key, false, "default");
        Ok(false)
    }

    /// Policy list: repeated flags, or a `;`-separated file value.
    fn policies(&mut self, flag: &[String]) -> Result<Vec<SizingPolicy>> {
        let raw: Vec<String> = if !flag.is_empty() {
            self.record("policy", flag.join(";"), "flag");
            flag.to_vec()
        } else if let Some(raw) = self.file.get("policy") {
            self.record("policy", raw, "file");
            raw.split(';').map(|s| s.trim().to_string()).collect()
        } else {
            return Err(Error::InvalidArgument(
                "missing required `policy` (e.g. --policy baseline:c=16,l=1)".into(),
            ));
        };
        raw.iter().map(|s| s.parse()).collect()
    }

    fn u64_list(&mut self, key: &str, flag: Option<&str>) -> Result<Vec<u64>> {
        let raw = match flag {
            Some(v) => {
                self.record(key, v, "flag");
                v.to_string()
            }
            None => match self.file.get(key) {
                Some(v) => {
                    self.record(key, v, "file");
                    v.clone()
                }
                None => return Err(Error::InvalidArgument(format!("missing required `{key}`"))),
            },
        };
        raw.split(',')
            .map(|t| {
                t.trim().parse().map_err(|_| {
                    Error::InvalidArgument(format!("`{key}`: cannot parse `{}`", t.trim()))
                })
            })
            .collect()
    }

    fn f64_list(&mut self, key: &str, flag: Option<&str>) -> Result<Vec<f64>> {
        let raw = match flag {
            Some(v) => {
                self.record(key, v, "flag");
                v.to_string()
            }
            None => match self.file.get(key) {
                Some(v) => {
                    self.record(key, v, "file");
                    v.clone()
                }
                None => return Err(Error::InvalidArgument(format!("missing required `{key}`"))),
            },
        };
        raw.split(',')
            .map(|t| {
                t.trim().parse().map_err(|_| {
                    Error::InvalidArgument(format!("`{key}`: cannot parse `{}`", t.trim()))
                })
            })
            .collect()
    }
}

fn resolve_out_dir(cli_dir: &Option<PathBuf>, file: &HashMap<String, String>) -> PathBuf {
    if let Some(d) = cli_dir {
        return d.clone();
    }
    if let Some(d) = file.get("out-dir") {
        return PathBuf::from(d);
    }
    match std::env::var(OUT_DIR_ENV) {
        Ok(d) if !d.is_empty() => PathBuf::from(d),
        _ => PathBuf::from("."),
    }
}

fn out_path(dir: &Path, chosen: Option<&PathBuf>, default_name: &str) -> PathBuf {
    match chosen {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => dir.join(p),
        None => dir.join(default_name),
    }
}

/// Sibling fit-summary name: `sweep.csv` -> `sweep_fits.csv`.
fn derived_fit_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let ext = out
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    out.with_file_name(format!("{stem}_fits.{ext}"))
}

fn write_manifest(
    data_path: &Path,
    command: &str,
    resolver: &Resolver<'_>,
    notes: &[String],
) -> Result<()> {
    let manifest_path = PathBuf::from(format!("{}.manifest", data_path.display()));
    let mut out = fs::File::create(&manifest_path)?;
    writeln!(out, "# swlab manifest v1")?;
    writeln!(out, "version={}", env!("CARGO_PKG_VERSION"))?;
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    writeln!(out, "created_unix_ms={now}")?;
    writeln!(out, "command={command}")?;
    for (key, value, source) in &resolver.entries {
        writeln!(out, "{key}={value} ({source})")?;
    }
    for note in notes {
        writeln!(out, "note={note}")?;
    }
    Ok(())
}

fn overlay_config_from(
    resolver: &mut Resolver<'_>,
    n: Option<u64>,
    policy: Option<String>,
    r: Option<f64>,
    seed: Option<u64>,
    cluster_dim: Option<usize>,
    intra_dim: Option<usize>,
    budget: Option<u64>,
) -> Result<OverlayConfig> {
    let n = resolver.required("n", n)?;
    let policy: SizingPolicy = resolver.required::<String>("policy", policy)?.parse()?;
    let r = resolver.scalar("r", r, 2.0)?;
    let seed = resolver.scalar("seed", seed, 0)?;
    let cluster_dim = resolver.scalar("cluster-dim", cluster_dim, 2)?;
    let intra_dim = resolver.scalar("intra-dim", intra_dim, 2)?;
    let budget = resolver.scalar("budget", budget, DEFAULT_NODE_BUDGET)?;
    let mut config = OverlayConfig::new(n, policy, seed);
    config.link_exponent = r;
    config.cluster_dim = cluster_dim;
    config.intra_dim = intra_dim;
    config.node_budget = budget;
    Ok(config)
}

fn run_build(args: &BuildArgs, file: &HashMap<String, String>, out_dir: &Path) -> Result<()> {
    let mut resolver = Resolver::new(file);
    let config = overlay_config_from(
        &mut resolver,
        args.n,
        args.policy.clone(),
        args.r,
        args.seed,
        args.cluster_dim,
        args.intra_dim,
        args.budget,
    )?;
    let net = build_overlay(&config)?;
    println!(
        "built n={} clusters={} ({}^{}) cluster_size={} ({}^{}) l={} r={} seed={}",
        net.actual_n(),
        net.cluster_count(),
        net.cluster_side(),
        net.cluster_dim(),
        net.cluster_size(),
        net.intra_side(),
        net.intra_dim(),
        net.links_per_node(),
        config.link_exponent,
        config.seed,
    );
    if net.long_links_skipped() {
        println!("note: single cluster, long links skipped");
    }
    let dump = resolver.path("dump", args.dump.clone());
    if let Some(dump) = dump {
        let path = out_path(out_dir, Some(&dump), "topology.tsv");
        let mut f = fs::File::create(&path)?;
        net.dump(&mut f)?;
        write_manifest(&path, "build", &resolver, &[])?;
        println!("dump written to {}", path.display());
    }
    Ok(())
}

fn run_route(args: &RouteArgs, file: &HashMap<String, String>) -> Result<()> {
    let mut resolver = Resolver::new(file);
    let config = overlay_config_from(
        &mut resolver,
        args.n,
        args.policy.clone(),
        args.r,
        args.seed,
        None,
        None,
        None,
    )?;
    let a1 = resolver.scalar("a1", args.a1, 1.0)?;
    let a2 = resolver.scalar("a2", args.a2, 1.0)?;
    let model = TotalTimeModel::new(a1, a2)?;
    let net = build_overlay(&config)?;

    let mask = match resolver.optional("fail-p", args.fail_p)? {
        Some(p) => {
            let mask_seed = resolver.scalar("mask-seed", args.mask_seed, config.seed ^ 1)?;
            Some(FailureMask::sample(net.actual_n(), p, mask_seed)?)
        }
        None => None,
    };

    let (source, target) = match (args.source, args.target) {
        (Some(s), Some(t)) => (s, t),
        _ => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed ^ 0x51);
            let n = net.actual_n() as u32;
            (
                args.source.unwrap_or_else(|| rng.gen_range(0..n)),
                args.target.unwrap_or_else(|| rng.gen_range(0..n)),
            )
        }
    };
    let query = Query::new(&net, source, target)?;

    println!(
        "shape: n={} clusters={} cluster_size={} l={}",
        net.actual_n(),
        net.cluster_count(),
        net.cluster_size(),
        net.links_per_node()
    );
    let fmt_axes = |axes: &[u32]| {
        axes.iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    println!(
        "query: source={} (cluster {}) target={} (cluster {})",
        source,
        fmt_axes(net.cluster_axes_of(net.cluster_of(query.source))),
        target,
        fmt_axes(net.cluster_axes_of(net.cluster_of(query.target))),
    );

    let (route, trace) = route_global_trace(&net, &query, mask.as_ref());
    for (i, step) in trace.iter().enumerate() {
        println!(
            "hop {}: {} -> {} via {} link, cluster ({}), distance {}",
            i + 1,
            step.from.0,
            step.to.0,
            match step.kind {
                LinkKind::Long => "long",
                LinkKind::Gateway => "gateway",
            },
            fmt_axes(net.cluster_axes_of(net.cluster_of(step.to))),
            step.distance_after,
        );
    }
    if !route.success {
        println!("route failed after {} hops", route.global_hops);
        return Ok(());
    }
    println!(
        "entered target cluster at node {} after {} hops",
        route.entry.0, route.global_hops
    );
    let flood = flood_local(&net, route.entry, query.target, mask.as_ref());
    println!(
        "flood: rounds={} messages={} success={}",
        flood.rounds, flood.messages, flood.success
    );
    let total = model.alpha1 * flood.rounds as f64 + model.alpha2 * route.global_hops as f64;
    println!("total_time={} (a1={a1} a2={a2})", fmt_f64(total));
    Ok(())
}

fn run_sweep_cmd(args: &SweepArgs, file: &HashMap<String, String>, out_dir: &Path) -> Result<()> {
    let mut resolver = Resolver::new(file);
    let grid = resolver.u64_list("grid", args.grid.as_deref())?;
    let policies = resolver.policies(&args.policies)?;
    let seed = resolver.scalar("seed", args.seed, 0)?;
    let mut spec = SweepSpec::new(grid, policies, seed);
    spec.queries = resolver.scalar("queries", args.queries, 1000)?;
    spec.trials = resolver.scalar("trials", args.trials, 5)?;
    spec.link_exponent = resolver.scalar("r", args.r, 2.0)?;
    let a1 = resolver.scalar("a1", args.a1, 1.0)?;
    let a2 = resolver.scalar("a2", args.a2, 1.0)?;
    spec.model = TotalTimeModel::new(a1, a2)?;
    spec.failure_p = resolver.optional("fail-p", args.fail_p)?;
    spec.cluster_redundancy = resolver.boolean("redundancy", args.redundancy)?;
    spec.cluster_dim = resolver.scalar("cluster-dim", args.cluster_dim, 2)?;
    spec.intra_dim = resolver.scalar("intra-dim", args.intra_dim, 2)?;
    spec.node_budget = resolver.scalar("budget", args.budget, DEFAULT_NODE_BUDGET)?;

    let out = out_path(out_dir, args.out.as_ref(), "sweep.csv");
    let fit_out = match &args.fit_out {
        Some(p) => out_path(out_dir, Some(p), "sweep_fits.csv"),
        None => derived_fit_path(&out),
    };

    let output = run_sweep(&spec)?;
    let mut f = fs::File::create(&out)?;
    write_sweep_csv(&output.rows, &mut f)?;

    let fits = fit_sweep(
        &output,
        &[
            ModelForm::Log,
            ModelForm::LogSquared,
            ModelForm::LogMinusLogLog,
            ModelForm::PowerLaw,
        ],
    );
    let mut f = fs::File::create(&fit_out)?;
    write_fit_csv(&fits, &mut f)?;

    let notes: Vec<String> = output
        .skipped
        .iter()
        .map(|s| format!("skipped n={} policy={}: {}", s.requested_n, s.policy, s.reason))
        .collect();
    for note in &notes {
        eprintln!("{note}");
    }
    write_manifest(&out, "sweep", &resolver, &notes)?;
    println!(
        "sweep: {} rows ({} skipped) -> {} ; fits -> {}",
        output.rows.len(),
        output.skipped.len(),
        out.display(),
        fit_out.display()
    );
    Ok(())
}

fn run_optimize(args: &OptimizeArgs, file: &HashMap<String, String>) -> Result<()> {
    let mut resolver = Resolver::new(file);
    let n = resolver.required("n", args.n)?;
    let a1 = resolver.scalar("a1", args.a1, 1.0)?;
    let a2 = resolver.scalar("a2", args.a2, 1.0)?;
    let model = TotalTimeModel::new(a1, a2)?;

    println!("n={n} a1={a1} a2={a2}");
    let (c_star, t_star) = minimize_cluster_size(n, &model);
    println!("pointwise minimum: c*={c_star} T={}", fmt_f64(t_star));

    if n >= 2 && a1 > 0.0 {
        let c_bal = balance_cluster_size(n as f64, &model)?;
        let t_bal = model_total_time(n as f64, c_bal.clamp(1.0, n as f64), &model)?;
        println!(
            "balance rule (natural log): c={} T={}",
            fmt_f64(c_bal),
            fmt_f64(t_bal)
        );
    }

    // Base-2 reporting: what the radar policy would pick at this n.
    let c_radar = radar_cluster_size(n, 1.0, 2.0);
    let l_radar = densified_link_count(n, c_radar.min(n), 1.0, 2.0)?;
    println!("radar policy (base 2, b1=b2=1): c={c_radar} l={l_radar}");
    Ok(())
}

fn run_immune(args: &ImmuneArgs, file: &HashMap<String, String>, out_dir: &Path) -> Result<()> {
    let mut resolver = Resolver::new(file);
    let m_min = resolver.scalar("m-min", args.m_min, 1e-2)?;
    let m_max = resolver.scalar("m-max", args.m_max, 1e4)?;
    let points = resolver.scalar("points", args.points, 50)?;
    let v0 = resolver.scalar("v0", args.v0, 1.0)?;
    let n0 = resolver.scalar("n0", args.n0, 1.0)?;
    let k = resolver.scalar("k", args.k, 1.0)?;
    let b = resolver.scalar("b", args.b, 1.0)?;
    let beta_b = resolver.scalar("beta-b", args.beta_b, 1.0)?;
    let beta_cell = resolver.scalar("beta-cell", args.beta_cell, 1.0)?;
    let beta_rate = resolver.scalar("beta-rate", args.beta_rate, 1.0)?;

    if points < 2 || m_min <= 0.0 || m_max <= m_min {
        return Err(Error::InvalidArgument(
            "need points >= 2 and 0 < m-min < m-max".into(),
        ));
    }
    let base = OrganismParams::new(1.0, k, b, beta_b, beta_cell, beta_rate)?;
    let masses = log_spaced(m_min, m_max, points);
    let rows = compare_policies(&base, &masses, v0, n0)?;

    let out = out_path(out_dir, args.out.as_ref(), "immune.csv");
    let fit_out = match &args.fit_out {
        Some(p) => out_path(out_dir, Some(p), "immune_fits.csv"),
        None => derived_fit_path(&out),
    };

    let mut f = fs::File::create(&out)?;
    writeln!(f, "# swlab immune v1")?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["M", "policy", "V", "N", "t_comm", "t_migrate", "T"])?;
    for r in &rows {
        w.write_record([
            fmt_f64(r.mass),
            r.policy.label().to_string(),
            fmt_f64(r.volume),
            fmt_f64(r.count),
            fmt_f64(r.t_comm),
            fmt_f64(r.t_migrate),
            fmt_f64(r.total),
        ])?;
    }
    w.flush()?;
    drop(w);

    // Companion power-law fits of T against M, one row per policy.
    let mut f = fs::File::create(&fit_out)?;
    writeln!(f, "# swlab immune fits v1")?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["policy", "slope", "intercept", "r_squared"])?;
    for policy in [
        ArchitecturePolicy::FixedVolume,
        ArchitecturePolicy::FixedCount,
        ArchitecturePolicy::Optimal,
    ] {
        let xs: Vec<f64> = rows
            .iter()
            .filter(|r| r.policy == policy)
            .map(|r| r.mass)
            .collect();
        let ys: Vec<f64> = rows
            .iter()
            .filter(|r| r.policy == policy)
            .map(|r| r.total)
            .collect();
        // Power-law fits need x >= 2; restrict to that part of the grid.
        let usable: Vec<(f64, f64)> = xs
            .iter()
            .zip(&ys)
            .filter(|(&x, _)| x >= 2.0)
            .map(|(&x, &y)| (x, y))
            .collect();
        let fxs: Vec<f64> = usable.iter().map(|p| p.0).collect();
        let fys: Vec<f64> = usable.iter().map(|p| p.1).collect();
        let fit = fit_scaling(&fxs, &fys, ModelForm::PowerLaw)?;
        w.write_record([
            policy.label().to_string(),
            fmt_f64(fit.coefficients[1]),
            fmt_f64(fit.coefficients[0].ln()),
            fmt_f64(fit.r_squared),
        ])?;
    }
    w.flush()?;

    write_manifest(&out, "immune", &resolver, &[])?;
    println!(
        "immune: {} rows -> {} ; fits -> {}",
        rows.len(),
        out.display(),
        fit_out.display()
    );
    Ok(())
}

fn run_robustness(
    args: &RobustnessArgs,
    file: &HashMap<String, String>,
    out_dir: &Path,
) -> Result<()> {
    let mut resolver = Resolver::new(file);
    let n = resolver.required("n", args.n)?;
    let policies = resolver.policies(&args.policies)?;
    let p_grid = resolver.f64_list("p-grid", args.p_grid.as_deref())?;
    let seed = resolver.scalar("seed", args.seed, 0)?;
    let mut spec = RobustnessSpec::new(n, policies, p_grid, seed);
    spec.queries = resolver.scalar("queries", args.queries, 1000)?;
    spec.trials = resolver.scalar("trials", args.trials, 5)?;
    spec.link_exponent = resolver.scalar("r", args.r, 2.0)?;
    spec.cluster_redundancy = resolver.boolean("redundancy", args.redundancy)?;
    spec.node_budget = resolver.scalar("budget", args.budget, DEFAULT_NODE_BUDGET)?;

    let rows = robustness_experiment(&spec)?;
    let out = out_path(out_dir, args.out.as_ref(), "robustness.csv");
    let mut f = fs::File::create(&out)?;
    write_robustness_csv(&rows, &mut f)?;
    write_manifest(&out, "robustness", &resolver, &[])?;
    println!("robustness: {} rows -> {}", rows.len(), out.display());
    Ok(())
}

/// Parse argv and dispatch. Returns the process exit code.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };

    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                1
            } else {
                2
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => parse_config_file(&fs::read_to_string(path)?)?,
        None => HashMap::new(),
    };

    let threads = match cli.threads {
        Some(t) => Some(t),
        None => file
            .get("threads")
            .map(|v| {
                v.parse::<usize>().map_err(|_| {
                    Error::InvalidArgument(format!("config key `threads`: cannot parse `{v}`"))
                })
            })
            .transpose()?,
    };
    if let Some(t) = threads {
        if t < 1 {
            return Err(Error::InvalidArgument("threads must be >= 1".into()));
        }
        // Ignore the error if a pool already exists (e.g. repeated calls in
        // tests); results do not depend on the pool size.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }

    let out_dir = resolve_out_dir(&cli.out_dir, &file);
    if !out_dir.as_os_str().is_empty() {
        fs::create_dir_all(&out_dir)?;
    }

    match &cli.command {
        Command::Build(args) => run_build(args, &file, &out_dir),
        Command::Route(args) => run_route(args, &file),
        Command::Sweep(args) => run_sweep_cmd(args, &file, &out_dir),
        Command::Optimize(args) => run_optimize(args, &file),
        Command::Immune(args) => run_immune(args, &file, &out_dir),
        Command::Robustness(args) => run_robustness(args, &file, &out_dir),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing() {
        let map = parse_config_file("# comment\nqueries=500\n\npolicy=radar\n").unwrap();
        assert_eq!(map["queries"], "500");
        assert_eq!(map["policy"], "radar");

        assert!(parse_config_file("nonsense-key=1").is_err());
        assert!(parse_config_file("queries").is_err());
    }

    #[test]
    fn precedence_flag_over_file_over_default() {
        let file = parse_config_file("queries=500\ntrials=9").unwrap();
        let mut r = Resolver::new(&file);
        // Flag wins.
        assert_eq!(r.scalar("queries", Some(100usize), 1000).unwrap(), 100);
        // File wins over default.
        assert_eq!(r.scalar("trials", None::<usize>, 5).unwrap(), 9);
        // Default when absent everywhere.
        assert_eq!(r.scalar("seed", None::<u64>, 7).unwrap(), 7);
        let sources: Vec<&str> = r.entries.iter().map(|(_, _, s)| *s).collect();
        assert_eq!(sources, vec!["flag", "file", "default"]);
    }

    #[test]
    fn file_values_that_fail_to_parse_name_the_key() {
        let file = parse_config_file("queries=abc").unwrap();
        let mut r = Resolver::new(&file);
        let err = r.scalar("queries", None::<usize>, 1000).unwrap_err();
        assert!(err.to_string().contains("queries"));
        assert!(err.to_string().contains("abc"));
    }

    #[test]
    fn policy_list_from_file_is_semicolon_separated() {
        let file = parse_config_file("policy=baseline:c=16,l=1;explicit:c=4,l=2").unwrap();
        let mut r = Resolver::new(&file);
        let policies = r.policies(&[]).unwrap();
        assert_eq!(policies.len(), 2);
        assert_eq!(policies[1], SizingPolicy::Explicit { c: 4, l: 2 });
    }

    #[test]
    fn derived_fit_path_names() {
        assert_eq!(
            derived_fit_path(Path::new("out/sweep.csv")),
            Path::new("out/sweep_fits.csv")
        );
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(parse_and_dispatch(["swlab"]), 1);
        assert_eq!(parse_and_dispatch(["swlab", "bogus-subcommand"]), 1);
        assert_eq!(parse_and_dispatch(["swlab", "optimize"]), 1); // missing --n
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(parse_and_dispatch(["swlab", "--help"]), 0);
        assert_eq!(parse_and_dispatch(["swlab", "sweep", "--help"]), 0);
    }
}
