//! Experiment orchestration: scaling sweeps over the node-count grid,
//! robustness grids over failure probability, per-policy scaling fits, and
//! CSV export.
//!
//! Every work unit (grid point x trial) derives its seed from
//! `(master seed, point index, trial index)`, so sweeps are pure functions
//! of their spec, results never depend on execution order, and work units
//! can run in parallel with an index-ordered merge.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::{compare_models, ModelForm, RankedFit};
use crate::overlay::{build_overlay, OverlayConfig, DEFAULT_NODE_BUDGET};
use crate::policy::{SizingPolicy, TotalTimeModel};
use crate::routing::{batch_queries, BatchSummary, FailureMask, QueryOptions};
use crate::stats::{bootstrap_stderr, mean};
use crate::util::{derive_seed, derive_seed2, fmt_f64};

/// Number of bootstrap resamples behind every standard-error column.
const BOOTSTRAP_RESAMPLES: usize = 200;

/// Specification of a scaling sweep.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// Requested node counts, strictly increasing.
    pub n_grid: Vec<u64>,
    pub policies: Vec<SizingPolicy>,
    pub link_exponent: f64,
    /// Queries per (point, trial). Keep >= 100 for points that feed fits.
    pub queries: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub model: TotalTimeModel,
    /// Node-failure probability applied to every point, if any.
    pub failure_p: Option<f64>,
    pub cluster_redundancy: bool,
    pub cluster_dim: usize,
    pub intra_dim: usize,
    pub node_budget: u64,
}

impl SweepSpec {
    pub fn new(n_grid: Vec<u64>, policies: Vec<SizingPolicy>, master_seed: u64) -> Self {
        Self {
            n_grid,
            policies,
            link_exponent: 2.0,
            queries: 1000,
            trials: 5,
            master_seed,
            model: TotalTimeModel::unit(),
            failure_p: None,
            cluster_redundancy: false,
            cluster_dim: 2,
            intra_dim: 2,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.policies.is_empty() {
            return Err(Error::InvalidArgument(
                "sweep needs a non-empty grid and at least one policy".into(),
            ));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "n grid must be strictly increasing".into(),
            ));
        }
        if self.queries < 1 || self.trials < 1 {
            return Err(Error::InvalidArgument(
                "queries and trials must be >= 1".into(),
            ));
        }
        if let Some(p) = self.failure_p {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "failure probability must be in [0, 1], got {p}"
                )));
            }
        }
        Ok(())
    }
}

/// Aggregated result for one (n, policy) grid point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub requested_n: u64,
    pub actual_n: u64,
    pub cluster_size: u32,
    pub links_per_node: u32,
    pub policy: SizingPolicy,
    pub queries: usize,
    pub trials: usize,
    pub mean_global_hops: f64,
    pub se_global_hops: f64,
    pub mean_local_rounds: f64,
    pub se_local_rounds: f64,
    pub mean_local_messages: f64,
    pub mean_total_time: f64,
    pub se_total_time: f64,
    pub success_rate: f64,
    pub se_success_rate: f64,
    /// Per-trial summaries, for confidence comparisons between rows.
    pub per_trial: Vec<BatchSummary>,
}

/// A grid point that could not be built.
#[derive(Debug, Clone)]
pub struct SkippedPoint {
    pub requested_n: u64,
    pub policy: SizingPolicy,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<SkippedPoint>,
}

fn run_point(
    spec: &SweepSpec,
    point_index: usize,
    requested_n: u64,
    policy: &SizingPolicy,
) -> std::result::Result<SweepRow, SkippedPoint> {
    let skip = |reason: String| SkippedPoint {
        requested_n,
        policy: policy.clone(),
        reason,
    };

    // Trials are independent realizations: topology, failure mask, and
    // query endpoints all re-randomize per trial.
    let trial_results: Vec<std::result::Result<(BatchSummary, u64, u32, u32), String>> = (0..spec
        .trials)
        .into_par_iter()
        .map(|trial| {
            let unit_seed = derive_seed2(spec.master_seed, point_index as u64, trial as u64);
            let mut config = OverlayConfig::new(requested_n, policy.clone(), derive_seed(unit_seed, 1));
            config.link_exponent = spec.link_exponent;
            config.cluster_dim = spec.cluster_dim;
            config.intra_dim = spec.intra_dim;
            config.node_budget = spec.node_budget;
            let net = build_overlay(&config).map_err(|e| e.to_string())?;

            let mask = match spec.failure_p {
                Some(p) => Some(
                    FailureMask::sample(net.actual_n(), p, derive_seed(unit_seed, 2))
                        .map_err(|e| e.to_string())?,
                ),
                None => None,
            };
            let batch = batch_queries(
                &net,
                spec.queries,
                &spec.model,
                mask.as_ref(),
                derive_seed(unit_seed, 3),
                QueryOptions {
                    cluster_redundancy: spec.cluster_redundancy,
                },
            );
            Ok((
                batch.summary(),
                net.actual_n(),
                net.cluster_size(),
                net.links_per_node(),
            ))
        })
        .collect();

    let mut summaries = Vec::with_capacity(spec.trials);
    let mut shape = None;
    for r in trial_results {
        match r {
            Ok((summary, n, c, l)) => {
                shape.get_or_insert((n, c, l));
                summaries.push(summary);
            }
            Err(reason) => return Err(skip(reason)),
        }
    }
    let (actual_n, cluster_size, links_per_node) = shape.expect("at least one trial ran");

    let collect = |f: fn(&BatchSummary) -> f64| -> Vec<f64> { summaries.iter().map(f).collect() };
    let hops = collect(|s| s.mean_global_hops);
    let rounds = collect(|s| s.mean_local_rounds);
    let messages = collect(|s| s.mean_local_messages);
    let times = collect(|s| s.mean_total_time);
    let successes = collect(|s| s.success_rate);
    let se_seed = derive_seed2(spec.master_seed, point_index as u64, u64::MAX);

    Ok(SweepRow {
        requested_n,
        actual_n,
        cluster_size,
        links_per_node,
        policy: policy.clone(),
        queries: spec.queries,
        trials: spec.trials,
        mean_global_hops: mean(&hops),
        se_global_hops: bootstrap_stderr(&hops, BOOTSTRAP_RESAMPLES, derive_seed(se_seed, 0)),
        mean_local_rounds: mean(&rounds),
        se_local_rounds: bootstrap_stderr(&rounds, BOOTSTRAP_RESAMPLES, derive_seed(se_seed, 1)),
        mean_local_messages: mean(&messages),
        mean_total_time: mean(&times),
        se_total_time: bootstrap_stderr(&times, BOOTSTRAP_RESAMPLES, derive_seed(se_seed, 2)),
        success_rate: mean(&successes),
        se_success_rate: bootstrap_stderr(&successes, BOOTSTRAP_RESAMPLES, derive_seed(se_seed, 3)),
        per_trial: summaries,
    })
}

/// Run the sweep: for every (n, policy) point, build overlays and run query
/// batches over the configured trials. Deterministic in the master seed;
/// unbuildable points are recorded and skipped.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let points: Vec<(usize, u64, &SizingPolicy)> = spec
        .n_grid
        .iter()
        .flat_map(|&n| spec.policies.iter().map(move |p| (n, p)))
        .enumerate()
        .map(|(i, (n, p))| (i, n, p))
        .collect();

    let results: Vec<std::result::Result<SweepRow, SkippedPoint>> = points
        .par_iter()
        .map(|&(i, n, policy)| run_point(spec, i, n, policy))
        .collect();

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(s) => skipped.push(s),
        }
    }
    Ok(SweepOutput { rows, skipped })
}

pub const SWEEP_CSV_HEADER: [&str; 16] = [
    "requested_n",
    "actual_n",
    "cluster_size",
    "links_per_node",
    "policy",
    "trials",
    "queries",
    "mean_global_hops",
    "se_global_hops",
    "mean_local_rounds",
    "se_local_rounds",
    "mean_local_messages",
    "mean_total_time",
    "se_total_time",
    "success_rate",
    "se_success_rate",
];

/// Write sweep rows as CSV behind a format-version comment line.
pub fn write_sweep_csv(rows: &[SweepRow], out: &mut impl Write) -> Result<()> {
    writeln!(out, "# swlab sweep v1")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.requested_n.to_string(),
            r.actual_n.to_string(),
            r.cluster_size.to_string(),
            r.links_per_node.to_string(),
            r.policy.to_string(),
            r.trials.to_string(),
            r.queries.to_string(),
            fmt_f64(r.mean_global_hops),
            fmt_f64(r.se_global_hops),
            fmt_f64(r.mean_local_rounds),
            fmt_f64(r.se_local_rounds),
            fmt_f64(r.mean_local_messages),
            fmt_f64(r.mean_total_time),
            fmt_f64(r.se_total_time),
            fmt_f64(r.success_rate),
            fmt_f64(r.se_success_rate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-policy scaling fits of a sweep metric against actual n.
#[derive(Debug, Clone)]
pub struct FitSummaryRow {
    pub policy: SizingPolicy,
    pub metric: &'static str,
    pub ranked: Vec<RankedFit>,
}

/// Fit mean hops and mean total time against actual n for every policy in
/// the sweep, ranking the standard forms.
pub fn fit_sweep(output: &SweepOutput, forms: &[ModelForm]) -> Vec<FitSummaryRow> {
    let mut summaries = Vec::new();
    let mut policies: Vec<SizingPolicy> = Vec::new();
    for row in &output.rows {
        if !policies.contains(&row.policy) {
            policies.push(row.policy.clone());
        }
    }
    for policy in policies {
        let rows: Vec<&SweepRow> = output
            .rows
            .iter()
            .filter(|r| r.policy == policy)
            .collect();
        let xs: Vec<f64> = rows.iter().map(|r| r.actual_n as f64).collect();
        for (metric, ys) in [
            (
                "mean_global_hops",
                rows.iter().map(|r| r.mean_global_hops).collect::<Vec<_>>(),
            ),
            (
                "mean_total_time",
                rows.iter().map(|r| r.mean_total_time).collect::<Vec<_>>(),
            ),
        ] {
            if let Ok(ranked) = compare_models(&xs, &ys, forms) {
                summaries.push(FitSummaryRow {
                    policy: policy.clone(),
                    metric,
                    ranked,
                });
            }
        }
    }
    summaries
}

/// Write fit summaries as CSV: one row per (policy, metric, form), ranked.
pub fn write_fit_csv(summaries: &[FitSummaryRow], out: &mut impl Write) -> Result<()> {
    writeln!(out, "# swlab fits v1")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "policy", "metric", "rank", "form", "c0", "c1", "c2", "r_squared", "aicc",
    ])?;
    for s in summaries {
        for (rank, rf) in s.ranked.iter().enumerate() {
            let c = &rf.fit.coefficients;
            w.write_record([
                s.policy.to_string(),
                s.metric.to_string(),
                (rank + 1).to_string(),
                rf.fit.form.label().to_string(),
                fmt_f64(c[0]),
                c.get(1).map(|&v| fmt_f64(v)).unwrap_or_default(),
                c.get(2).map(|&v| fmt_f64(v)).unwrap_or_default(),
                fmt_f64(rf.fit.r_squared),
                fmt_f64(rf.score),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Specification of a robustness experiment: success rate across a failure
/// probability grid.
#[derive(Debug, Clone)]
pub struct RobustnessSpec {
    pub requested_n: u64,
    pub policies: Vec<SizingPolicy>,
    pub p_grid: Vec<f64>,
    pub link_exponent: f64,
    pub queries: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub model: TotalTimeModel,
    /// Cluster-level success semantics (similar data from cluster
    /// neighbors counts as a hit).
    pub cluster_redundancy: bool,
    pub cluster_dim: usize,
    pub intra_dim: usize,
    pub node_budget: u64,
}

impl RobustnessSpec {
    pub fn new(requested_n: u64, policies: Vec<SizingPolicy>, p_grid: Vec<f64>, seed: u64) -> Self {
        Self {
            requested_n,
            policies,
            p_grid,
            link_exponent: 2.0,
            queries: 1000,
            trials: 5,
            master_seed: seed,
            model: TotalTimeModel::unit(),
            cluster_redundancy: true,
            cluster_dim: 2,
            intra_dim: 2,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RobustnessRow {
    pub failure_p: f64,
    pub policy: SizingPolicy,
    pub success_rate: f64,
    pub se_success_rate: f64,
    pub per_trial: Vec<f64>,
}

/// Success rate per (failure probability, policy) cell.
pub fn robustness_experiment(spec: &RobustnessSpec) -> Result<Vec<RobustnessRow>> {
    if spec.p_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidArgument(
            "failure grid must lie in [0, 1]".into(),
        ));
    }
    let sweep = SweepSpec {
        n_grid: vec![spec.requested_n],
        policies: spec.policies.clone(),
        link_exponent: spec.link_exponent,
        queries: spec.queries,
        trials: spec.trials,
        master_seed: spec.master_seed,
        model: spec.model,
        failure_p: None,
        cluster_redundancy: spec.cluster_redundancy,
        cluster_dim: spec.cluster_dim,
        intra_dim: spec.intra_dim,
        node_budget: spec.node_budget,
    };

    let cells: Vec<(usize, f64, &SizingPolicy)> = spec
        .p_grid
        .iter()
        .flat_map(|&p| spec.policies.iter().map(move |pol| (p, pol)))
        .enumerate()
        .map(|(i, (p, pol))| (i, p, pol))
        .collect();

    let results: Vec<Result<RobustnessRow>> = cells
        .par_iter()
        .map(|&(i, p, policy)| {
            let mut cell_spec = sweep.clone();
            cell_spec.policies = vec![policy.clone()];
            cell_spec.failure_p = if p > 0.0 { Some(p) } else { None };
            cell_spec.master_seed = derive_seed(spec.master_seed, i as u64);
            let out = run_sweep(&cell_spec)?;
            let row = out.rows.into_iter().next().ok_or_else(|| {
                Error::InvalidArgument(
                    out.skipped
                        .first()
                        .map(|s| s.reason.clone())
                        .unwrap_or_else(|| "empty robustness cell".into()),
                )
            })?;
            Ok(RobustnessRow {
                failure_p: p,
                policy: policy.clone(),
                success_rate: row.success_rate,
                se_success_rate: row.se_success_rate,
                per_trial: row.per_trial.iter().map(|s| s.success_rate).collect(),
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Write robustness rows as CSV behind a format-version comment line.
pub fn write_robustness_csv(rows: &[RobustnessRow], out: &mut impl Write) -> Result<()> {
    writeln!(out, "# swlab robustness v1")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["failure_p", "policy", "success_rate", "se_success_rate"])?;
    for r in rows {
        w.write_record([
            fmt_f64(r.failure_p),
            r.policy.to_string(),
            fmt_f64(r.success_rate),
            fmt_f64(r.se_success_rate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn explicit(c: u64, l: u32) -> SizingPolicy {
        SizingPolicy::Explicit { c, l }
    }

    #[test]
    fn single_cluster_rows_have_zero_hops() {
        let mut spec = SweepSpec::new(vec![16], vec![explicit(16, 0)], 7);
        spec.queries = 100;
        spec.trials = 2;
        let out = run_sweep(&spec).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert!(out.skipped.is_empty());
        let row = &out.rows[0];
        assert_eq!(row.actual_n, 16);
        assert_eq!(row.mean_global_hops, 0.0);
        assert_eq!(row.success_rate, 1.0);
    }

    #[test]
    fn sweep_is_deterministic() {
        let mut spec = SweepSpec::new(vec![1024], vec![explicit(16, 1)], 123);
        spec.queries = 200;
        spec.trials = 2;
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        assert_eq!(a.rows.len(), b.rows.len());
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_sweep_csv(&a.rows, &mut csv_a).unwrap();
        write_sweep_csv(&b.rows, &mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
    }

    #[test]
    fn hops_increase_with_n_under_constant_policy() {
        let mut spec = SweepSpec::new(
            vec![1 << 8, 1 << 10, 1 << 12, 1 << 14],
            vec![explicit(16, 1)],
            99,
        );
        spec.queries = 300;
        spec.trials = 2;
        let out = run_sweep(&spec).unwrap();
        assert_eq!(out.rows.len(), 4);
        let hops: Vec<f64> = out.rows.iter().map(|r| r.mean_global_hops).collect();
        for w in hops.windows(2) {
            assert!(w[0] < w[1], "mean hops must grow with n: {hops:?}");
        }
    }

    #[test]
    fn budget_violations_are_recorded_not_fatal() {
        let mut spec = SweepSpec::new(vec![16, 4096], vec![explicit(16, 1)], 5);
        spec.queries = 50;
        spec.trials = 1;
        spec.node_budget = 1000;
        let out = run_sweep(&spec).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].requested_n, 4096);
        assert!(out.skipped[0].reason.contains("budget"));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let spec = SweepSpec::new(vec![1024, 512], vec![explicit(16, 1)], 0);
        assert!(spec.validate().is_err());
        let spec = SweepSpec::new(vec![], vec![explicit(16, 1)], 0);
        assert!(spec.validate().is_err());
        let mut spec = SweepSpec::new(vec![512], vec![explicit(16, 1)], 0);
        spec.failure_p = Some(1.5);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn trial_reordering_leaves_aggregates_unchanged() {
        // Aggregates are means over per-trial summaries; check directly that
        // permuting the per-trial list does not change them.
        let mut spec = SweepSpec::new(vec![256], vec![explicit(16, 1)], 17);
        spec.queries = 100;
        spec.trials = 4;
        let out = run_sweep(&spec).unwrap();
        let row = &out.rows[0];
        let mut perm = row.per_trial.clone();
        perm.reverse();
        let m: f64 = perm.iter().map(|s| s.mean_global_hops).sum::<f64>() / perm.len() as f64;
        assert!((m - row.mean_global_hops).abs() < 1e-12);
    }

    #[test]
    fn robustness_endpoints() {
        let spec = RobustnessSpec::new(
            256,
            vec![explicit(16, 1)],
            vec![0.0, 1.0],
            3,
        );
        let mut spec = spec;
        spec.queries = 100;
        spec.trials = 2;
        let rows = robustness_experiment(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].success_rate, 1.0, "p=0 always succeeds");
        assert_eq!(rows[1].success_rate, 0.0, "p=1 always fails");
    }

    #[test]
    fn robustness_degrades_with_failure_probability() {
        let mut spec = RobustnessSpec::new(
            1024,
            vec![explicit(16, 1)],
            vec![0.0, 0.2, 0.5],
            21,
        );
        spec.queries = 200;
        spec.trials = 2;
        let rows = robustness_experiment(&spec).unwrap();
        assert!(rows[0].success_rate >= rows[1].success_rate);
        assert!(rows[1].success_rate >= rows[2].success_rate);
    }

    #[test]
    fn fit_sweep_reports_per_policy_rankings() {
        let mut spec = SweepSpec::new(
            vec![1 << 8, 1 << 9, 1 << 10, 1 << 11, 1 << 12, 1 << 13],
            vec![explicit(16, 1)],
            42,
        );
        spec.queries = 200;
        spec.trials = 2;
        let out = run_sweep(&spec).unwrap();
        let fits = fit_sweep(&out, &[ModelForm::Log, ModelForm::LogSquared]);
        assert_eq!(fits.len(), 2);
        for f in &fits {
            assert_eq!(f.ranked.len(), 2);
            assert!(f.ranked[0].score <= f.ranked[1].score);
        }
    }
}
