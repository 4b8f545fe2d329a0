//! Query execution over a built overlay: greedy inter-cluster forwarding
//! followed by synchronous-round neighbor flooding inside the target
//! cluster.
//!
//! Forwarding is strictly local: each handling node only sees its own link
//! table and moves the query to whichever live link endpoint minimizes the
//! cluster-lattice distance to the target cluster. Without failures the
//! mirror gateways always offer a distance-1 improvement, so progress is
//! strict and every query terminates at the target cluster. With failures,
//! greedy can stall; a stall is a failed query, not an error.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::overlay::{NodeId, OverlayNetwork};
use crate::policy::TotalTimeModel;
use crate::util::{derive_seed, fmt_f64};

/// A single search: find `target` starting from `source`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Query {
    pub source: NodeId,
    pub target: NodeId,
}

impl Query {
    /// Validates both endpoints against the network's shape.
    pub fn new(net: &OverlayNetwork, source: u32, target: u32) -> Result<Self> {
        let n = net.actual_n() as u32;
        if source >= n || target >= n {
            return Err(Error::InvalidArgument(format!(
                "query endpoints ({source}, {target}) out of range for n={n}"
            )));
        }
        Ok(Self {
            source: NodeId(source),
            target: NodeId(target),
        })
    }
}

/// Bernoulli node-failure mask, sampled once per experiment.
#[derive(Debug, Clone)]
pub struct FailureMask {
    p: f64,
    seed: u64,
    dead: Vec<bool>,
}

impl FailureMask {
    pub fn sample(n: u64, p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "failure probability must be in [0, 1], got {p}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dead = (0..n).map(|_| rng.gen::<f64>() < p).collect();
        Ok(Self { p, seed, dead })
    }

    pub fn is_alive(&self, node: NodeId) -> bool {
        !self.dead[node.0 as usize]
    }

    pub fn dead_count(&self) -> u64 {
        self.dead.iter().filter(|&&d| d).count() as u64
    }

    pub fn probability(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

#[inline]
fn alive(mask: Option<&FailureMask>, node: NodeId) -> bool {
    mask.is_none_or(|m| m.is_alive(node))
}

/// Which link carried a forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Long,
    Gateway,
}

/// One inter-cluster forward, for traces and progress checks.
#[derive(Debug, Clone, Copy)]
pub struct TraceStep {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: LinkKind,
    /// Cluster-lattice distance to the target cluster after the forward.
    pub distance_after: u32,
}

#[derive(Debug, Clone, Copy)]
pub struct RouteOutcome {
    /// Node handling the query inside the target cluster (the source itself
    /// when no forwarding was needed). Meaningless when `success` is false.
    pub entry: NodeId,
    pub global_hops: u32,
    pub success: bool,
}

/// Greedy inter-cluster forwarding from the query source to its target
/// cluster.
pub fn route_global(
    net: &OverlayNetwork,
    query: &Query,
    mask: Option<&FailureMask>,
) -> RouteOutcome {
    route_global_impl(net, query, mask, None)
}

/// As [`route_global`], also recording every forward.
pub fn route_global_trace(
    net: &OverlayNetwork,
    query: &Query,
    mask: Option<&FailureMask>,
) -> (RouteOutcome, Vec<TraceStep>) {
    let mut trace = Vec::new();
    let outcome = route_global_impl(net, query, mask, Some(&mut trace));
    (outcome, trace)
}

fn route_global_impl(
    net: &OverlayNetwork,
    query: &Query,
    mask: Option<&FailureMask>,
    mut trace: Option<&mut Vec<TraceStep>>,
) -> RouteOutcome {
    let mut current = query.source;
    let mut hops = 0u32;

    if !alive(mask, current) {
        return RouteOutcome {
            entry: current,
            global_hops: 0,
            success: false,
        };
    }

    let target_cluster = net.cluster_of(query.target);
    let target_axes = net.cluster_axes_of(target_cluster).to_vec();
    let side = net.cluster_side();
    let hop_budget = 4 * net.cluster_count() as u64;

    loop {
        let current_cluster = net.cluster_of(current);
        if current_cluster == target_cluster {
            return RouteOutcome {
                entry: current,
                global_hops: hops,
                success: true,
            };
        }
        if hops as u64 >= hop_budget {
            return RouteOutcome {
                entry: current,
                global_hops: hops,
                success: false,
            };
        }

        let current_distance =
            crate::torus::axes_distance(net.cluster_axes_of(current_cluster), &target_axes, side);

        // Best live candidate by (distance, lexicographic cluster
        // coordinate, long before gateway).
        fn consider<'a>(
            best: &mut Option<(u32, &'a [u32], u8, NodeId)>,
            dist: u32,
            axes: &'a [u32],
            kind: u8,
            node: NodeId,
        ) {
            let replace = match best {
                None => true,
                Some((bd, baxes, bkind, _)) => (dist, axes, kind) < (*bd, *baxes, *bkind),
            };
            if replace {
                *best = Some((dist, axes, kind, node));
            }
        }
        let mut best: Option<(u32, &[u32], u8, NodeId)> = None;

        for ll in net.long_links_of(current) {
            if alive(mask, ll.node) {
                let axes = net.cluster_axes_of(ll.cluster);
                let d = crate::torus::axes_distance(axes, &target_axes, side);
                consider(&mut best, d, axes, 0, ll.node);
            }
        }
        for &g in net.gateways(current) {
            let node = NodeId(g);
            if alive(mask, node) {
                let cluster = net.cluster_of(node);
                let axes = net.cluster_axes_of(cluster);
                let d = crate::torus::axes_distance(axes, &target_axes, side);
                consider(&mut best, d, axes, 1, node);
            }
        }

        match best {
            Some((dist, _, kind, node)) if dist < current_distance => {
                hops += 1;
                if let Some(t) = trace.as_deref_mut() {
                    t.push(TraceStep {
                        from: current,
                        to: node,
                        kind: if kind == 0 {
                            LinkKind::Long
                        } else {
                            LinkKind::Gateway
                        },
                        distance_after: dist,
                    });
                }
                current = node;
            }
            // No live link strictly helps: the walk has stalled.
            _ => {
                return RouteOutcome {
                    entry: current,
                    global_hops: hops,
                    success: false,
                };
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FloodOutcome {
    pub rounds: u32,
    pub messages: u64,
    pub success: bool,
}

/// Synchronous-round neighbor flooding inside one cluster, restricted to
/// live nodes.
///
/// Every informed node activates all of its intra-cluster short links in the
/// next round; `messages` counts link activations, `rounds` is the round at
/// which the target is first informed. Fails when the target is unreachable
/// through live nodes.
pub fn flood_local(
    net: &OverlayNetwork,
    entry: NodeId,
    target: NodeId,
    mask: Option<&FailureMask>,
) -> FloodOutcome {
    debug_assert_eq!(net.cluster_of(entry), net.cluster_of(target));
    if !alive(mask, entry) {
        return FloodOutcome {
            rounds: 0,
            messages: 0,
            success: false,
        };
    }
    if entry == target {
        return FloodOutcome {
            rounds: 0,
            messages: 0,
            success: true,
        };
    }

    let c = net.cluster_size() as usize;
    let cluster = net.cluster_of(entry);
    let entry_intra = net.intra_index_of(entry);
    let target_intra = net.intra_index_of(target);

    let mut informed = vec![false; c];
    informed[entry_intra as usize] = true;
    let mut frontier = vec![entry_intra];
    let mut rounds = 0u32;
    let mut messages = 0u64;

    while !frontier.is_empty() {
        rounds += 1;
        let mut next = Vec::new();
        let mut reached_target = false;
        for &u in &frontier {
            let node = net.node_at(cluster, u);
            for &v in net.intra_neighbors(node) {
                messages += 1;
                let v_node = NodeId(v);
                let v_intra = net.intra_index_of(v_node);
                if alive(mask, v_node) && !informed[v_intra as usize] {
                    informed[v_intra as usize] = true;
                    next.push(v_intra);
                    if v_intra == target_intra {
                        reached_target = true;
                    }
                }
            }
        }
        if reached_target {
            return FloodOutcome {
                rounds,
                messages,
                success: true,
            };
        }
        frontier = next;
    }

    FloodOutcome {
        rounds,
        messages,
        success: false,
    }
}

/// Per-query result: inter-cluster hops, flooding rounds and messages,
/// success flag, and the weighted total time
/// `alpha1 * local_rounds + alpha2 * global_hops`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryOutcome {
    pub global_hops: u32,
    pub local_rounds: u32,
    pub local_messages: u64,
    pub success: bool,
    pub total_time: f64,
}

/// Success semantics for queries under failure masks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryOptions {
    /// When set, a query counts as successful once it reaches any live node
    /// in the target cluster (semantically similar data is assumed to be
    /// available from cluster neighbors). Default: the exact target node
    /// must be reached.
    pub cluster_redundancy: bool,
}

pub fn run_query(
    net: &OverlayNetwork,
    query: &Query,
    model: &TotalTimeModel,
    mask: Option<&FailureMask>,
) -> QueryOutcome {
    run_query_with(net, query, model, mask, QueryOptions::default())
}

pub fn run_query_with(
    net: &OverlayNetwork,
    query: &Query,
    model: &TotalTimeModel,
    mask: Option<&FailureMask>,
    options: QueryOptions,
) -> QueryOutcome {
    let route = route_global(net, query, mask);
    let mut rounds = 0u32;
    let mut messages = 0u64;
    let mut success = false;
    if route.success {
        let flood = flood_local(net, route.entry, query.target, mask);
        rounds = flood.rounds;
        messages = flood.messages;
        // The route only forwards to live endpoints, so a successful route
        // has delivered the query to a live node in the target cluster.
        success = flood.success || options.cluster_redundancy;
    }
    QueryOutcome {
        global_hops: route.global_hops,
        local_rounds: rounds,
        local_messages: messages,
        success,
        total_time: model.alpha1 * rounds as f64 + model.alpha2 * route.global_hops as f64,
    }
}

/// Aggregate statistics over a batch of queries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchSummary {
    pub count: usize,
    pub mean_global_hops: f64,
    pub max_global_hops: u32,
    pub mean_local_rounds: f64,
    pub max_local_rounds: u32,
    pub mean_local_messages: f64,
    pub mean_total_time: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub outcomes: Vec<QueryOutcome>,
}

impl BatchResult {
    pub fn summary(&self) -> BatchSummary {
        let n = self.outcomes.len().max(1) as f64;
        let mut s = BatchSummary {
            count: self.outcomes.len(),
            mean_global_hops: 0.0,
            max_global_hops: 0,
            mean_local_rounds: 0.0,
            max_local_rounds: 0,
            mean_local_messages: 0.0,
            mean_total_time: 0.0,
            success_rate: 0.0,
        };
        for o in &self.outcomes {
            s.mean_global_hops += o.global_hops as f64;
            s.max_global_hops = s.max_global_hops.max(o.global_hops);
            s.mean_local_rounds += o.local_rounds as f64;
            s.max_local_rounds = s.max_local_rounds.max(o.local_rounds);
            s.mean_local_messages += o.local_messages as f64;
            s.mean_total_time += o.total_time;
            s.success_rate += f64::from(o.success);
        }
        s.mean_global_hops /= n;
        s.mean_local_rounds /= n;
        s.mean_local_messages /= n;
        s.mean_total_time /= n;
        s.success_rate /= n;
        s
    }

    /// One CSV row per query, preceded by a format-version comment.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "# swlab queries v1")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "query_index",
            "global_hops",
            "local_rounds",
            "local_messages",
            "success",
            "total_time",
        ])?;
        for (i, o) in self.outcomes.iter().enumerate() {
            w.write_record([
                i.to_string(),
                o.global_hops.to_string(),
                o.local_rounds.to_string(),
                o.local_messages.to_string(),
                (o.success as u8).to_string(),
                fmt_f64(o.total_time),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Run `count` queries with endpoints drawn uniformly over live node pairs
/// (all pairs when every node is dead, in which case every query fails).
/// Per-query RNG streams derive from `(seed, query index)`, so results are
/// independent of execution order.
pub fn batch_queries(
    net: &OverlayNetwork,
    count: usize,
    model: &TotalTimeModel,
    mask: Option<&FailureMask>,
    seed: u64,
    options: QueryOptions,
) -> BatchResult {
    assert!(count >= 1, "batch needs at least one query");
    let all: Vec<u32> = (0..net.actual_n() as u32).collect();
    let live: Vec<u32> = all
        .iter()
        .copied()
        .filter(|&id| alive(mask, NodeId(id)))
        .collect();
    let pool = if live.is_empty() { &all } else { &live };

    let outcomes = (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let source = pool[rng.gen_range(0..pool.len())];
            let target = pool[rng.gen_range(0..pool.len())];
            let query = Query {
                source: NodeId(source),
                target: NodeId(target),
            };
            run_query_with(net, &query, model, mask, options)
        })
        .collect();
    BatchResult { outcomes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::overlay::{build_overlay, OverlayConfig};
    use crate::policy::SizingPolicy;
    use std::collections::VecDeque;

    fn explicit(c: u64, l: u32) -> SizingPolicy {
        SizingPolicy::Explicit { c, l }
    }

    fn build(n: u64, c: u64, l: u32, seed: u64) -> OverlayNetwork {
        build_overlay(&OverlayConfig::new(n, explicit(c, l), seed)).unwrap()
    }

    /// Independent shortest-path oracle on the live intra-cluster subgraph,
    /// computed from coordinate arithmetic rather than the link tables.
    fn bfs_oracle(
        net: &OverlayNetwork,
        entry: NodeId,
        target: NodeId,
        mask: Option<&FailureMask>,
    ) -> Option<u32> {
        let cluster = net.cluster_of(entry);
        let side = net.intra_side();
        let dim = net.intra_dim();
        if !alive(mask, entry) || !alive(mask, target) {
            return None;
        }
        let start = net.intra_index_of(entry);
        let goal = net.intra_index_of(target);
        let mut dist = vec![u32::MAX; net.cluster_size() as usize];
        dist[start as usize] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            if u == goal {
                return Some(dist[u as usize]);
            }
            let axes = net.intra_axes_of(u).to_vec();
            for axis in 0..dim {
                for delta in [1, side - 1] {
                    let mut next = axes.clone();
                    next[axis] = (axes[axis] + delta) % side;
                    let v = next.iter().fold(0u32, |acc, &a| acc * side + a);
                    let v_node = net.node_at(cluster, v);
                    if alive(mask, v_node) && dist[v as usize] == u32::MAX {
                        dist[v as usize] = dist[u as usize] + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        None
    }

    #[test]
    fn same_cluster_query_needs_no_hops() {
        let net = build(64, 16, 1, 1);
        let q = Query::new(&net, 0, 5).unwrap();
        let r = route_global(&net, &q, None);
        assert!(r.success);
        assert_eq!(r.global_hops, 0);
        assert_eq!(r.entry, NodeId(0));
    }

    #[test]
    fn adjacent_clusters_take_one_gateway_hop() {
        // 2-cluster ring (cluster_dim 1), two nodes per cluster.
        let mut config = OverlayConfig::new(4, explicit(2, 0), 1);
        config.cluster_dim = 1;
        config.intra_dim = 1;
        let net = build_overlay(&config).unwrap();
        assert_eq!(net.cluster_count(), 2);
        let q = Query::new(&net, 0, 2).unwrap();
        let (r, trace) = route_global_trace(&net, &q, None);
        assert!(r.success);
        assert_eq!(r.global_hops, 1);
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].kind, LinkKind::Gateway);
        // Mirror gateway preserves the intra coordinate.
        assert_eq!(net.intra_index_of(r.entry), 0);
    }

    #[test]
    fn progress_is_strictly_monotone_without_failures() {
        let net = build(1024, 16, 1, 42);
        let target_cluster_axes: Vec<u32> = Vec::new();
        drop(target_cluster_axes);
        for (s, t) in [(0u32, 1000u32), (17, 900), (512, 3), (100, 101)] {
            let q = Query::new(&net, s, t).unwrap();
            let (r, trace) = route_global_trace(&net, &q, None);
            assert!(r.success);
            let target_cluster = net.cluster_of(q.target);
            let mut last = net.cluster_distance(net.cluster_of(q.source), target_cluster);
            for step in &trace {
                assert!(step.distance_after < last, "progress must be strict");
                last = step.distance_after;
            }
            assert_eq!(last, 0);
            assert!(r.global_hops <= net.cluster_count());
        }
    }

    #[test]
    fn dead_source_fails_immediately() {
        let net = build(64, 16, 1, 1);
        let mask = FailureMask::sample(net.actual_n(), 1.0, 9).unwrap();
        let q = Query::new(&net, 0, 40).unwrap();
        let r = route_global(&net, &q, Some(&mask));
        assert!(!r.success);
        assert_eq!(r.global_hops, 0);
    }

    #[test]
    fn flooding_trivial_and_antipodal_cases() {
        let net = build(64, 16, 0, 1);
        let f = flood_local(&net, NodeId(0), NodeId(0), None);
        assert_eq!((f.rounds, f.messages, f.success), (0, 0, true));

        // Entry (0,0), target (2,2) on the 4x4 intra torus: the diameter.
        let target_intra = net
            .intra_axes_of(0)
            .iter()
            .map(|_| 2u32)
            .fold(0u32, |acc, a| acc * net.intra_side() + a);
        let f = flood_local(&net, NodeId(0), NodeId(target_intra), None);
        assert!(f.success);
        assert_eq!(f.rounds, 4);
    }

    #[test]
    fn flooding_rounds_match_bfs_oracle() {
        use rand::Rng;
        let net = build(100, 25, 0, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..500 {
            let entry = NodeId(rng.gen_range(0..25));
            let target = NodeId(rng.gen_range(0..25));
            let f = flood_local(&net, entry, target, None);
            let oracle = bfs_oracle(&net, entry, target, None);
            assert!(f.success);
            assert_eq!(Some(f.rounds), oracle);
        }
    }

    #[test]
    fn flooding_respects_failure_masks() {
        use rand::Rng;
        let net = build(144, 36, 0, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..300 {
            let mask = FailureMask::sample(net.actual_n(), 0.2, trial).unwrap();
            let entry = NodeId(rng.gen_range(0..36));
            let target = NodeId(rng.gen_range(0..36));
            if !mask.is_alive(entry) {
                continue;
            }
            let f = flood_local(&net, entry, target, Some(&mask));
            match bfs_oracle(&net, entry, target, Some(&mask)) {
                Some(d) => {
                    assert!(f.success, "oracle reaches target at distance {d}");
                    assert_eq!(f.rounds, d);
                }
                None => assert!(!f.success),
            }
        }
    }

    #[test]
    fn run_query_composes_and_projects_weights() {
        let net = build(1024, 16, 1, 9);
        let unit = TotalTimeModel::unit();

        let q = Query::new(&net, 5, 5).unwrap();
        let o = run_query(&net, &q, &unit, None);
        assert_eq!(
            (o.global_hops, o.local_rounds, o.local_messages, o.success),
            (0, 0, 0, true)
        );
        assert_eq!(o.total_time, 0.0);

        let hops_only = TotalTimeModel::new(0.0, 1.0).unwrap();
        let q = Query::new(&net, 0, 999).unwrap();
        let o = run_query(&net, &q, &hops_only, None);
        assert_eq!(o.total_time, o.global_hops as f64);
    }

    #[test]
    fn single_cluster_network_never_hops() {
        let net = build(16, 16, 1, 2);
        assert_eq!(net.cluster_count(), 1);
        for s in 0..16u32 {
            for t in 0..16u32 {
                let q = Query::new(&net, s, t).unwrap();
                let o = run_query(&net, &q, &TotalTimeModel::unit(), None);
                assert_eq!(o.global_hops, 0);
                assert!(o.success);
            }
        }
    }

    #[test]
    fn total_time_is_exactly_additive() {
        let net = build(256, 16, 1, 4);
        let model = TotalTimeModel::new(0.7, 1.3).unwrap();
        let batch = batch_queries(&net, 200, &model, None, 8, QueryOptions::default());
        for o in &batch.outcomes {
            assert_eq!(
                o.total_time,
                0.7 * o.local_rounds as f64 + 1.3 * o.global_hops as f64
            );
        }
    }

    #[test]
    fn all_pairs_succeed_without_failures() {
        // Exhaustive over a 4-cluster, c=4 network.
        let net = build(16, 4, 1, 6);
        assert_eq!(net.cluster_count(), 4);
        for s in 0..16u32 {
            for t in 0..16u32 {
                let q = Query::new(&net, s, t).unwrap();
                let o = run_query(&net, &q, &TotalTimeModel::unit(), None);
                assert!(o.success, "({s}, {t}) must succeed at p=0");
            }
        }
    }

    #[test]
    fn batch_under_total_failure_has_zero_success() {
        let net = build(64, 16, 1, 3);
        let mask = FailureMask::sample(net.actual_n(), 1.0, 1).unwrap();
        let batch = batch_queries(
            &net,
            50,
            &TotalTimeModel::unit(),
            Some(&mask),
            2,
            QueryOptions::default(),
        );
        assert_eq!(batch.summary().success_rate, 0.0);
    }

    #[test]
    fn batch_is_deterministic() {
        let net = build(1024, 16, 2, 12);
        let a = batch_queries(&net, 300, &TotalTimeModel::unit(), None, 55, QueryOptions::default());
        let b = batch_queries(&net, 300, &TotalTimeModel::unit(), None, 55, QueryOptions::default());
        assert_eq!(a.outcomes, b.outcomes);
    }

    #[test]
    fn single_query_with_coincident_endpoints() {
        let net = build(16, 4, 1, 6);
        // Hunt for a seed whose first query draws source == target.
        let seed = (0..200u64)
            .find(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(s, 0));
                let a = rng.gen_range(0..16usize);
                let b = rng.gen_range(0..16usize);
                a == b
            })
            .expect("some small seed draws a coincident pair");
        let batch = batch_queries(&net, 1, &TotalTimeModel::unit(), None, seed, QueryOptions::default());
        let s = batch.summary();
        assert_eq!(s.success_rate, 1.0);
        assert_eq!(s.mean_global_hops, 0.0);
        assert_eq!(s.mean_local_rounds, 0.0);
        assert_eq!(s.mean_total_time, 0.0);
    }

    #[test]
    fn mask_dead_fraction_is_binomially_plausible() {
        let n = 10_000u64;
        for (p, seed) in [(0.1, 1u64), (0.5, 2), (0.9, 3)] {
            let mask = FailureMask::sample(n, p, seed).unwrap();
            let expected = p * n as f64;
            let sigma = (n as f64 * p * (1.0 - p)).sqrt();
            let dead = mask.dead_count() as f64;
            assert!(
                (dead - expected).abs() <= 3.0 * sigma,
                "p={p}: dead={dead}, expected={expected}±{sigma}"
            );
        }
    }

    #[test]
    fn redundancy_flag_upgrades_cluster_arrival() {
        let net = build(1024, 16, 1, 17);
        // Kill exactly one node: the target.
        let target = NodeId(700);
        let mask_seed = (0..5000u64)
            .find(|&s| {
                let m = FailureMask::sample(net.actual_n(), 0.001, s).unwrap();
                !m.is_alive(target) && m.dead_count() == 1
            })
            .expect("some seed kills exactly the target");
        let mask = FailureMask::sample(net.actual_n(), 0.001, mask_seed).unwrap();
        let q = Query::new(&net, 0, target.0).unwrap();

        let strict = run_query(&net, &q, &TotalTimeModel::unit(), Some(&mask));
        assert!(!strict.success, "dead target is unreachable exactly");

        let relaxed = run_query_with(
            &net,
            &q,
            &TotalTimeModel::unit(),
            Some(&mask),
            QueryOptions {
                cluster_redundancy: true,
            },
        );
        assert!(relaxed.success, "cluster arrival counts with redundancy");
    }

    #[test]
    fn golden_mean_hops_on_8x8_clusters() {
        // 8x8 cluster torus, c=16, l=1, r=2; frozen seeded regression value.
        let net = build(1024, 16, 1, 20260809);
        assert_eq!(net.cluster_count(), 64);
        let batch = batch_queries(&net, 1000, &TotalTimeModel::unit(), None, 99, QueryOptions::default());
        let mean = batch.summary().mean_global_hops;
        let diameter = crate::torus::torus_diameter(net.cluster_side(), net.cluster_dim());
        assert!(mean >= 1.0 && mean <= (diameter * 4) as f64);
        assert_eq!(mean, GOLDEN_MEAN_HOPS_8X8, "seeded regression anchor");
    }

    // Recorded from the seeded run above; any drift means the build or
    // routing path changed behavior.
    const GOLDEN_MEAN_HOPS_8X8: f64 = 3.587;
}
