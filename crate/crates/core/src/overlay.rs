//! Construction of the two-level clustered small-world overlay.
//!
//! The network is a torus of clusters, each cluster a torus of nodes. Every
//! node carries three link groups:
//!
//! * intra-cluster short links to its grid neighbors (flooding fabric);
//! * gateway links to its "mirror" node (same intra coordinate) in each of
//!   the adjacent clusters (guaranteed one-step progress at cluster level);
//! * `l` long links whose target cluster is drawn with probability
//!   proportional to `d^(-r)` in cluster-lattice distance, endpoint node
//!   uniform within the target cluster.
//!
//! Long links are pinned at build time; a built network is immutable.
//! Useful exponent presets: `r = 1` is literal inverse-distance decay,
//! `r = cluster_dim` is the navigable regime where greedy routing stays
//! polylogarithmic — scaling runs use the latter.

use std::collections::BTreeMap;
use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::policy::SizingPolicy;
use crate::torus::{axes_distance, distance_census, TorusCoord};
use crate::util::fmt_f64;

/// Hard cap on resolved network size unless the config raises it.
pub const DEFAULT_NODE_BUDGET: u64 = 1 << 24;

/// Identifies a node by its global index: `cluster_index * cluster_size +
/// intra_index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

/// Identifies a cluster by its row-major rank on the cluster torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClusterId(pub u32);

/// A long link: target cluster plus the exact endpoint node inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LongLink {
    pub cluster: ClusterId,
    pub node: NodeId,
}

/// Everything needed to build an overlay deterministically.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlayConfig {
    /// Total node budget to aim for; the resolved size lands near it.
    pub requested_n: u64,
    pub policy: SizingPolicy,
    /// Long-link decay exponent `r` in `P(target) ∝ d^(-r)`.
    pub link_exponent: f64,
    pub cluster_dim: usize,
    pub intra_dim: usize,
    pub seed: u64,
    /// Builds whose resolved size exceeds this fail with a resource error.
    pub node_budget: u64,
}

impl OverlayConfig {
    pub fn new(requested_n: u64, policy: SizingPolicy, seed: u64) -> Self {
        Self {
            requested_n,
            policy,
            link_exponent: 2.0,
            cluster_dim: 2,
            intra_dim: 2,
            seed,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn with_link_exponent(mut self, r: f64) -> Self {
        self.link_exponent = r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.requested_n < 1 {
            return Err(Error::InvalidArgument("requested_n must be >= 1".into()));
        }
        if !self.link_exponent.is_finite() || self.link_exponent < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "link exponent must be finite and >= 0, got {}",
                self.link_exponent
            )));
        }
        if self.cluster_dim < 1 || self.intra_dim < 1 {
            return Err(Error::InvalidArgument(
                "cluster_dim and intra_dim must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Discretized network shape: the requested size and policy cluster size
/// coerced onto the two tori.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedShape {
    pub cluster_side: u32,
    pub intra_side: u32,
    pub cluster_count: u64,
    pub cluster_size: u64,
    pub actual_n: u64,
}

fn nearest_root(target: u64, exp: usize) -> u32 {
    let guess = (target as f64).powf(1.0 / exp as f64).round().max(1.0) as i64;
    let mut best = 1u32;
    let mut best_err = u64::MAX;
    for cand in (guess - 1).max(1)..=(guess + 1) {
        let cand = cand as u32;
        let power = (cand as u64).pow(exp as u32);
        let err = power.abs_diff(target);
        if err < best_err {
            best_err = err;
            best = cand;
        }
    }
    best
}

/// Coerce the policy cluster size to the nearest perfect `intra_dim`-power
/// and pick the cluster-torus side whose total lands nearest `requested_n`
/// in log distance (nearest such grid is always within a factor of 2 on a
/// 2-D cluster torus).
pub fn resolve_shape(
    requested_n: u64,
    policy: &SizingPolicy,
    cluster_dim: usize,
    intra_dim: usize,
) -> Result<ResolvedShape> {
    if requested_n < 1 {
        return Err(Error::InvalidArgument("requested_n must be >= 1".into()));
    }
    let c_target = policy.cluster_size(requested_n).max(1);
    let intra_side = nearest_root(c_target, intra_dim);
    let cluster_size = (intra_side as u64).pow(intra_dim as u32);

    let ratio = requested_n as f64 / cluster_size as f64;
    let guess = ratio.powf(1.0 / cluster_dim as f64).round().max(1.0) as i64;
    let mut best: Option<(u32, f64)> = None;
    for cand in (guess - 1).max(1)..=(guess + 1) {
        let m = cand as u32;
        let total = (m as u128).pow(cluster_dim as u32) * cluster_size as u128;
        let log_err = ((total as f64).ln() - (requested_n as f64).ln()).abs();
        if best.is_none_or(|(_, err)| log_err < err) {
            best = Some((m, log_err));
        }
    }
    let (cluster_side, _) = best.expect("candidate window is non-empty");
    let cluster_count = (cluster_side as u64).pow(cluster_dim as u32);
    Ok(ResolvedShape {
        cluster_side,
        intra_side,
        cluster_count,
        cluster_size,
        actual_n: cluster_count * cluster_size,
    })
}

/// Exact sampler for long-link target clusters.
///
/// Draws a distance class with probability proportional to
/// `census(d) * d^(-r)` (normalized over all distances >= 1 via the exact
/// census), then a uniform cluster within the class. Each individual
/// cluster at distance `d` therefore has probability exactly
/// `d^(-r) / W` with `W = sum census(d') * d'^(-r)`.
pub struct LongLinkSampler {
    side: u32,
    dim: usize,
    distances: Vec<u32>,
    class_weights: WeightedIndex<f64>,
    /// Offsets from the origin, grouped by distance class; flattened
    /// `dim`-strided axes.
    offset_axes: Vec<u32>,
    class_ranges: Vec<std::ops::Range<usize>>,
    /// Probability of each distance class, in `distances` order.
    class_pmf: Vec<f64>,
    census: BTreeMap<u32, u64>,
}

impl LongLinkSampler {
    pub fn new(side: u32, dim: usize, exponent: f64) -> Result<Self> {
        let cluster_count = (side as u64).pow(dim as u32);
        if cluster_count < 2 {
            return Err(Error::InvalidArgument(
                "long-link sampling needs at least 2 clusters".into(),
            ));
        }
        let census = distance_census(side, dim);
        let distances: Vec<u32> = census.keys().copied().filter(|&d| d > 0).collect();
        let raw_weights: Vec<f64> = distances
            .iter()
            .map(|&d| census[&d] as f64 * (d as f64).powf(-exponent))
            .collect();
        let total: f64 = raw_weights.iter().sum();
        let class_pmf: Vec<f64> = raw_weights.iter().map(|w| w / total).collect();
        let class_weights = WeightedIndex::new(&raw_weights)
            .map_err(|e| Error::InvalidArgument(format!("degenerate link weights: {e}")))?;

        // Group all non-zero offsets from the origin by their distance.
        let mut grouped: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
        for rank in 1..cluster_count {
            let coord = TorusCoord::from_rank(rank, side, dim);
            let origin = vec![0u32; dim];
            let d = axes_distance(coord.axes(), &origin, side);
            grouped.entry(d).or_default().push(rank);
        }
        let mut offset_axes = Vec::with_capacity((cluster_count as usize - 1) * dim);
        let mut class_ranges = Vec::with_capacity(distances.len());
        for &d in &distances {
            let start = offset_axes.len() / dim;
            for &rank in &grouped[&d] {
                offset_axes.extend_from_slice(TorusCoord::from_rank(rank, side, dim).axes());
            }
            class_ranges.push(start..offset_axes.len() / dim);
        }

        Ok(Self {
            side,
            dim,
            distances,
            class_weights,
            offset_axes,
            class_ranges,
            class_pmf,
            census,
        })
    }

    /// Draw a target cluster for a source cluster. Never returns the source.
    pub fn sample(&self, source: &TorusCoord, rng: &mut impl Rng) -> TorusCoord {
        debug_assert_eq!(source.side(), self.side);
        debug_assert_eq!(source.dim(), self.dim);
        let class = self.class_weights.sample(rng);
        let range = self.class_ranges[class].clone();
        let pick = rng.gen_range(range.start..range.end);
        let offset = &self.offset_axes[pick * self.dim..(pick + 1) * self.dim];
        let axes = source
            .axes()
            .iter()
            .zip(offset)
            .map(|(&s, &o)| (s + o) % self.side)
            .collect();
        TorusCoord::new(axes, self.side).expect("offset arithmetic stays on the torus")
    }

    /// Exact probability that a draw lands at lattice distance `d`.
    pub fn distance_pmf(&self, d: u32) -> f64 {
        self.distances
            .iter()
            .position(|&x| x == d)
            .map_or(0.0, |i| self.class_pmf[i])
    }

    /// Exact probability of one specific cluster at distance `d`.
    pub fn cluster_pmf(&self, d: u32) -> f64 {
        match self.census.get(&d) {
            Some(&count) if d > 0 => self.distance_pmf(d) / count as f64,
            _ => 0.0,
        }
    }

    pub fn distances(&self) -> &[u32] {
        &self.distances
    }
}

/// Immutable clustered small-world topology with per-node link tables.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlayNetwork {
    config: OverlayConfig,
    shape: ResolvedShape,
    cluster_dim: usize,
    intra_dim: usize,
    links_per_node: u32,
    /// True when a single-cluster shape forced `l = 0`.
    long_links_skipped: bool,
    /// Row-major cluster coordinates, `cluster_dim`-strided.
    cluster_axes: Vec<u32>,
    /// Row-major intra coordinates, `intra_dim`-strided.
    intra_axes: Vec<u32>,
    /// Per node, `2 * intra_dim` intra-cluster neighbor ids.
    intra_links: Vec<u32>,
    /// Per node, `2 * cluster_dim` mirror-gateway node ids.
    gateway_links: Vec<u32>,
    /// Per node, `links_per_node` long links.
    long_links: Vec<LongLink>,
}

/// Build the overlay described by `config`. Deterministic in the seed.
pub fn build_overlay(config: &OverlayConfig) -> Result<OverlayNetwork> {
    config.validate()?;
    let shape = resolve_shape(
        config.requested_n,
        &config.policy,
        config.cluster_dim,
        config.intra_dim,
    )?;
    let budget = config.node_budget.min(u32::MAX as u64);
    if shape.actual_n > budget {
        return Err(Error::NodeBudgetExceeded {
            actual_n: shape.actual_n,
            budget,
        });
    }

    let kc = config.cluster_dim;
    let ki = config.intra_dim;
    let m = shape.cluster_side;
    let intra_side = shape.intra_side;
    let cluster_count = shape.cluster_count as u32;
    let c = shape.cluster_size as u32;
    let n = shape.actual_n as u32;

    let mut cluster_axes = Vec::with_capacity(cluster_count as usize * kc);
    for rank in 0..cluster_count {
        cluster_axes.extend_from_slice(TorusCoord::from_rank(rank as u64, m, kc).axes());
    }
    let mut intra_axes = Vec::with_capacity(c as usize * ki);
    for rank in 0..c {
        intra_axes.extend_from_slice(TorusCoord::from_rank(rank as u64, intra_side, ki).axes());
    }

    // Neighbor ranks within one torus, per axis and direction; shared by
    // every cluster (intra grid) or every intra coordinate (gateways).
    let axis_neighbors = |axes: &[u32], side: u32, dim: usize| -> Vec<u64> {
        let mut out = Vec::with_capacity(2 * dim);
        for axis in 0..dim {
            for delta in [1, side - 1] {
                let mut shifted = axes.to_vec();
                shifted[axis] = (axes[axis] + delta) % side;
                out.push(
                    shifted
                        .iter()
                        .fold(0u64, |acc, &a| acc * side as u64 + a as u64),
                );
            }
        }
        out
    };

    let mut intra_links = Vec::with_capacity(n as usize * 2 * ki);
    let mut gateway_links = Vec::with_capacity(n as usize * 2 * kc);
    for cluster in 0..cluster_count {
        let cluster_base = cluster * c;
        let cluster_coord = &cluster_axes[cluster as usize * kc..(cluster as usize + 1) * kc];
        let adjacent: Vec<u32> = axis_neighbors(cluster_coord, m, kc)
            .iter()
            .map(|&r| r as u32)
            .collect();
        for intra in 0..c {
            let intra_coord = &intra_axes[intra as usize * ki..(intra as usize + 1) * ki];
            for neighbor in axis_neighbors(intra_coord, intra_side, ki) {
                intra_links.push(cluster_base + neighbor as u32);
            }
            for &adj in &adjacent {
                gateway_links.push(adj * c + intra);
            }
        }
    }

    let mut links_per_node = config
        .policy
        .link_count(shape.actual_n, shape.cluster_size)?;
    let mut long_links_skipped = false;
    if cluster_count == 1 && links_per_node > 0 {
        links_per_node = 0;
        long_links_skipped = true;
    }

    let mut long_links = Vec::with_capacity(n as usize * links_per_node as usize);
    if links_per_node > 0 {
        let sampler = LongLinkSampler::new(m, kc, config.link_exponent)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for cluster in 0..cluster_count {
            let coord = TorusCoord::new(
                cluster_axes[cluster as usize * kc..(cluster as usize + 1) * kc].to_vec(),
                m,
            )
            .expect("precomputed cluster coordinates are valid");
            for _intra in 0..c {
                for _ in 0..links_per_node {
                    let target = sampler.sample(&coord, &mut rng);
                    let target_cluster = target.rank() as u32;
                    let endpoint = target_cluster * c + rng.gen_range(0..c);
                    long_links.push(LongLink {
                        cluster: ClusterId(target_cluster),
                        node: NodeId(endpoint),
                    });
                }
            }
        }
    }

    Ok(OverlayNetwork {
        config: config.clone(),
        shape,
        cluster_dim: kc,
        intra_dim: ki,
        links_per_node,
        long_links_skipped,
        cluster_axes,
        intra_axes,
        intra_links,
        gateway_links,
        long_links,
    })
}

impl OverlayNetwork {
    pub fn config(&self) -> &OverlayConfig {
        &self.config
    }

    pub fn shape(&self) -> ResolvedShape {
        self.shape
    }

    pub fn actual_n(&self) -> u64 {
        self.shape.actual_n
    }

    pub fn cluster_count(&self) -> u32 {
        self.shape.cluster_count as u32
    }

    pub fn cluster_size(&self) -> u32 {
        self.shape.cluster_size as u32
    }

    pub fn cluster_side(&self) -> u32 {
        self.shape.cluster_side
    }

    pub fn intra_side(&self) -> u32 {
        self.shape.intra_side
    }

    pub fn cluster_dim(&self) -> usize {
        self.cluster_dim
    }

    pub fn intra_dim(&self) -> usize {
        self.intra_dim
    }

    /// Resolved long links per node.
    pub fn links_per_node(&self) -> u32 {
        self.links_per_node
    }

    /// True when the resolved shape had a single cluster and long links were
    /// dropped.
    pub fn long_links_skipped(&self) -> bool {
        self.long_links_skipped
    }

    pub fn cluster_of(&self, node: NodeId) -> ClusterId {
        ClusterId(node.0 / self.cluster_size())
    }

    pub fn intra_index_of(&self, node: NodeId) -> u32 {
        node.0 % self.cluster_size()
    }

    pub fn node_at(&self, cluster: ClusterId, intra_index: u32) -> NodeId {
        NodeId(cluster.0 * self.cluster_size() + intra_index)
    }

    pub fn cluster_axes_of(&self, cluster: ClusterId) -> &[u32] {
        let kc = self.cluster_dim;
        &self.cluster_axes[cluster.0 as usize * kc..(cluster.0 as usize + 1) * kc]
    }

    pub fn intra_axes_of(&self, intra_index: u32) -> &[u32] {
        let ki = self.intra_dim;
        &self.intra_axes[intra_index as usize * ki..(intra_index as usize + 1) * ki]
    }

    pub fn cluster_coord(&self, cluster: ClusterId) -> TorusCoord {
        TorusCoord::new(self.cluster_axes_of(cluster).to_vec(), self.cluster_side())
            .expect("stored cluster coordinates are valid")
    }

    /// Lattice distance between two clusters.
    pub fn cluster_distance(&self, a: ClusterId, b: ClusterId) -> u32 {
        axes_distance(
            self.cluster_axes_of(a),
            self.cluster_axes_of(b),
            self.cluster_side(),
        )
    }

    /// Lattice distance between two intra coordinates.
    pub fn intra_distance(&self, a: u32, b: u32) -> u32 {
        axes_distance(
            self.intra_axes_of(a),
            self.intra_axes_of(b),
            self.intra_side(),
        )
    }

    pub fn intra_neighbors(&self, node: NodeId) -> &[u32] {
        let k = 2 * self.intra_dim;
        &self.intra_links[node.0 as usize * k..(node.0 as usize + 1) * k]
    }

    pub fn gateways(&self, node: NodeId) -> &[u32] {
        let k = 2 * self.cluster_dim;
        &self.gateway_links[node.0 as usize * k..(node.0 as usize + 1) * k]
    }

    pub fn long_links_of(&self, node: NodeId) -> &[LongLink] {
        let l = self.links_per_node as usize;
        &self.long_links[node.0 as usize * l..(node.0 as usize + 1) * l]
    }

    /// Write the line-oriented topology dump: one record per node with its
    /// cluster coordinate, intra coordinate, and long-link endpoints.
    pub fn dump(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "# swlab topology v1")?;
        writeln!(
            out,
            "# n={} clusters={} cluster_side={} cluster_size={} l={} r={}",
            self.actual_n(),
            self.cluster_count(),
            self.cluster_side(),
            self.cluster_size(),
            self.links_per_node,
            fmt_f64(self.config.link_exponent),
        )?;
        writeln!(out, "node_id\tcluster\tintra\tlong_targets")?;
        let join = |axes: &[u32]| {
            axes.iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        for id in 0..self.actual_n() as u32 {
            let node = NodeId(id);
            let cluster = self.cluster_of(node);
            let longs = self
                .long_links_of(node)
                .iter()
                .map(|ll| format!("{}:{}", ll.cluster.0, ll.node.0))
                .collect::<Vec<_>>()
                .join(",");
            writeln!(
                out,
                "{id}\t{}\t{}\t{longs}",
                join(self.cluster_axes_of(cluster)),
                join(self.intra_axes_of(self.intra_index_of(node))),
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::chi_square_gof;

    fn explicit(c: u64, l: u32) -> SizingPolicy {
        SizingPolicy::Explicit { c, l }
    }

    #[test]
    fn resolve_shape_examples() {
        let s = resolve_shape(16, &explicit(4, 1), 2, 2).unwrap();
        assert_eq!((s.cluster_side, s.intra_side, s.actual_n), (2, 2, 16));

        let s = resolve_shape(1000, &explicit(16, 1), 2, 2).unwrap();
        assert_eq!((s.cluster_side, s.intra_side, s.actual_n), (8, 4, 1024));

        let s = resolve_shape(1, &explicit(1, 0), 2, 2).unwrap();
        assert_eq!((s.cluster_side, s.intra_side, s.actual_n), (1, 1, 1));
    }

    #[test]
    fn resolved_size_stays_within_factor_two() {
        for requested in [16u64, 35, 100, 999, 4097, 30_000, 262_145] {
            for c in [1u64, 4, 9, 16, 100] {
                if c > requested {
                    continue;
                }
                let s = resolve_shape(requested, &explicit(c, 1), 2, 2).unwrap();
                let ratio = s.actual_n as f64 / requested as f64;
                assert!(
                    (0.5..=2.0).contains(&ratio),
                    "requested={requested} c={c} actual={} ratio={ratio}",
                    s.actual_n
                );
            }
        }
    }

    #[test]
    fn cluster_size_coerced_to_nearest_perfect_square() {
        for (target, side) in [(1u64, 1u32), (2, 1), (3, 2), (5, 2), (7, 3), (190, 14)] {
            let s = resolve_shape(1024, &explicit(target, 1), 2, 2).unwrap();
            assert_eq!(s.intra_side, side, "target={target}");
            assert_eq!(s.cluster_size, (side as u64).pow(2));
        }
    }

    #[test]
    fn sampler_two_clusters_always_picks_the_other() {
        use rand::SeedableRng;
        let sampler = LongLinkSampler::new(2, 1, 1.0).unwrap();
        let source = TorusCoord::new(vec![0], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let t = sampler.sample(&source, &mut rng);
            assert_eq!(t.axes(), &[1]);
        }
    }

    #[test]
    fn sampler_exact_pmf_ratio_on_3x3() {
        // Census {1:4, 2:4}: each cluster at distance 1 is 4x as likely as
        // each cluster at distance 2 when r = 2.
        let sampler = LongLinkSampler::new(3, 2, 2.0).unwrap();
        let ratio = sampler.cluster_pmf(1) / sampler.cluster_pmf(2);
        assert_eq!(ratio, 4.0);
        let total: f64 = sampler
            .distances()
            .iter()
            .map(|&d| sampler.distance_pmf(d))
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampler_uniform_when_exponent_zero() {
        use rand::SeedableRng;
        let sampler = LongLinkSampler::new(4, 2, 0.0).unwrap();
        let source = TorusCoord::new(vec![0, 0], 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = vec![0u64; 16];
        let draws = 100_000;
        for _ in 0..draws {
            counts[sampler.sample(&source, &mut rng).rank() as usize] += 1;
        }
        assert_eq!(counts[0], 0, "self-cluster draws are impossible");
        let observed: Vec<u64> = counts[1..].to_vec();
        let expected = vec![draws as f64 / 15.0; 15];
        let result = chi_square_gof(&observed, &expected).unwrap();
        assert!(result.p_value > 0.01, "p = {}", result.p_value);
    }

    #[test]
    fn build_is_deterministic() {
        let config = OverlayConfig::new(16, explicit(4, 1), 7);
        let a = build_overlay(&config).unwrap();
        let b = build_overlay(&config).unwrap();
        assert_eq!(a, b);
        let mut dump_a = Vec::new();
        let mut dump_b = Vec::new();
        a.dump(&mut dump_a).unwrap();
        b.dump(&mut dump_b).unwrap();
        assert_eq!(dump_a, dump_b);
        assert!(dump_a.starts_with(b"# swlab topology v1\n"));
    }

    #[test]
    fn link_tables_have_exact_counts() {
        let config = OverlayConfig::new(1024, explicit(16, 2), 3);
        let net = build_overlay(&config).unwrap();
        assert_eq!(net.actual_n(), 1024);
        assert_eq!(net.links_per_node(), 2);
        for id in 0..net.actual_n() as u32 {
            let node = NodeId(id);
            assert_eq!(net.intra_neighbors(node).len(), 2 * net.intra_dim());
            assert_eq!(net.gateways(node).len(), 2 * net.cluster_dim());
            assert_eq!(net.long_links_of(node).len(), 2);
            let own = net.cluster_of(node);
            for ll in net.long_links_of(node) {
                assert_ne!(ll.cluster, own, "no self-cluster long links");
                assert_eq!(net.cluster_of(ll.node), ll.cluster);
            }
            for &g in net.gateways(node) {
                assert_eq!(
                    net.cluster_distance(own, net.cluster_of(NodeId(g))),
                    1,
                    "gateways reach adjacent clusters"
                );
                assert_eq!(net.intra_index_of(NodeId(g)), net.intra_index_of(node));
            }
            for &nb in net.intra_neighbors(node) {
                assert_eq!(net.cluster_of(NodeId(nb)), own);
                assert_eq!(
                    net.intra_distance(net.intra_index_of(node), net.intra_index_of(NodeId(nb))),
                    1
                );
            }
        }
    }

    #[test]
    fn long_link_distances_match_exact_pmf() {
        let config = OverlayConfig::new(4096, explicit(16, 25), 11).with_link_exponent(2.0);
        let net = build_overlay(&config).unwrap();
        assert_eq!(net.cluster_count(), 256);
        let sampler = LongLinkSampler::new(net.cluster_side(), net.cluster_dim(), 2.0).unwrap();

        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        let mut total = 0u64;
        for id in 0..net.actual_n() as u32 {
            let own = net.cluster_of(NodeId(id));
            for ll in net.long_links_of(NodeId(id)) {
                *counts.entry(net.cluster_distance(own, ll.cluster)).or_insert(0) += 1;
                total += 1;
            }
        }
        assert_eq!(total, net.actual_n() * 25);

        let observed: Vec<u64> = sampler
            .distances()
            .iter()
            .map(|d| counts.get(d).copied().unwrap_or(0))
            .collect();
        let expected: Vec<f64> = sampler
            .distances()
            .iter()
            .map(|&d| sampler.distance_pmf(d) * total as f64)
            .collect();
        let result = chi_square_gof(&observed, &expected).unwrap();
        assert!(result.p_value > 0.01, "p = {}", result.p_value);
    }

    #[test]
    fn single_cluster_skips_long_links() {
        let config = OverlayConfig::new(16, explicit(16, 3), 1);
        let net = build_overlay(&config).unwrap();
        assert_eq!(net.cluster_count(), 1);
        assert_eq!(net.links_per_node(), 0);
        assert!(net.long_links_skipped());
    }

    #[test]
    fn node_budget_is_enforced() {
        let mut config = OverlayConfig::new(1024, explicit(16, 1), 1);
        config.node_budget = 100;
        match build_overlay(&config) {
            Err(Error::NodeBudgetExceeded { actual_n, budget }) => {
                assert_eq!(actual_n, 1024);
                assert_eq!(budget, 100);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn radar_policy_densifies_links() {
        let policy: SizingPolicy = "radar:b1=1,b2=1,base=2".parse().unwrap();
        let config = OverlayConfig::new(1 << 16, policy, 5);
        let net = build_overlay(&config).unwrap();
        assert_eq!(net.cluster_size(), 256);
        assert_eq!(net.cluster_count(), 256);
        assert_eq!(net.links_per_node(), 8);
    }
}
