//! Cluster-size and link-count policies, the analytic total-time model, and
//! its minimizers.
//!
//! Three policy families map a node count `n` to a cluster size `c` and a
//! per-node long-link count `l`:
//!
//! * `baseline` keeps both constant regardless of `n`;
//! * `radar` grows the cluster as `c = round(b1 * log_base(n)^2)` and
//!   densifies links as `l = round(b2 * log_base(n / c))`;
//! * `explicit` pins exact values.
//!
//! The analytic model `T(n, c) = a1 * sqrt(c) + a2 * ln(n / c)` has two
//! distinct "optimal c" notions, and we implement both: the pointwise integer
//! minimizer for fixed `n` (which is n-independent, `c = (2 a2 / a1)^2`), and
//! the balance rule that equates the local and global terms, giving
//! `c = (a2 ln n / a1)^2`. The radar policy follows the balance rule.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Weights of the local (flooding rounds) and global (inter-cluster hops)
/// terms in total search time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalTimeModel {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl TotalTimeModel {
    /// Weights must be finite and non-negative. Zero weights are accepted so
    /// a single term can be projected out.
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self> {
        if !alpha1.is_finite() || !alpha2.is_finite() || alpha1 < 0.0 || alpha2 < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "time weights must be finite and >= 0, got alpha1={alpha1} alpha2={alpha2}"
            )));
        }
        Ok(Self { alpha1, alpha2 })
    }

    pub fn unit() -> Self {
        Self {
            alpha1: 1.0,
            alpha2: 1.0,
        }
    }
}

/// Rule mapping total node count `n` to cluster size `c` and long-link
/// count `l`.
#[derive(Debug, Clone, PartialEq)]
pub enum SizingPolicy {
    /// Constant cluster size and link count.
    Baseline { c0: u64, l0: u32 },
    /// Cluster size `round(b1 * log_base(n)^2)`, links
    /// `round(b2 * log_base(n / c))`.
    Radar { b1: f64, b2: f64, base: f64 },
    /// Exact cluster size and link count.
    Explicit { c: u64, l: u32 },
}

impl SizingPolicy {
    /// Target cluster size for a network of `n` nodes (before the builder
    /// coerces it to a perfect power).
    pub fn cluster_size(&self, n: u64) -> u64 {
        match *self {
            SizingPolicy::Baseline { c0, .. } => c0,
            SizingPolicy::Radar { b1, base, .. } => radar_cluster_size(n, b1, base),
            SizingPolicy::Explicit { c, .. } => c,
        }
    }

    /// Long-link count for a resolved network of `n` nodes in clusters of
    /// size `c`.
    pub fn link_count(&self, n: u64, c: u64) -> Result<u32> {
        match *self {
            SizingPolicy::Baseline { l0, .. } => Ok(l0),
            SizingPolicy::Radar { b2, base, .. } => densified_link_count(n, c, b2, base),
            SizingPolicy::Explicit { l, .. } => Ok(l),
        }
    }
}

impl fmt::Display for SizingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizingPolicy::Baseline { c0, l0 } => write!(f, "baseline:c={c0},l={l0}"),
            SizingPolicy::Radar { b1, b2, base } => {
                write!(f, "radar:b1={b1},b2={b2},base={base}")
            }
            SizingPolicy::Explicit { c, l } => write!(f, "explicit:c={c},l={l}"),
        }
    }
}

impl FromStr for SizingPolicy {
    type Err = Error;

    /// Parse a policy specification string: `baseline:c=16,l=1`,
    /// `radar:b1=1,b2=1,base=2`, or `explicit:c=64,l=4`. Keys may be omitted
    /// for `baseline` and `radar`, which have defaults.
    fn from_str(input: &str) -> Result<Self> {
        let parse_err = |token: &str| Error::PolicyParse {
            token: token.to_string(),
            input: input.to_string(),
        };
        let (variant, params) = match input.split_once(':') {
            Some((v, p)) => (v, p),
            None => (input, ""),
        };

        let mut pairs = Vec::new();
        if !params.is_empty() {
            for item in params.split(',') {
                let (key, value) = item.split_once('=').ok_or_else(|| parse_err(item))?;
                pairs.push((key.trim(), value.trim()));
            }
        }
        let lookup = |key: &str| pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let known = |allowed: &[&str]| -> Result<()> {
            for (k, _) in &pairs {
                if !allowed.contains(k) {
                    return Err(parse_err(k));
                }
            }
            Ok(())
        };

        fn num<T: FromStr>(value: &str, err: Error) -> Result<T> {
            value.parse().map_err(|_| err)
        }

        match variant {
            "baseline" => {
                known(&["c", "l"])?;
                let c0 = match lookup("c") {
                    Some(v) => num(v, parse_err(v))?,
                    None => 16,
                };
                let l0 = match lookup("l") {
                    Some(v) => num(v, parse_err(v))?,
                    None => 1,
                };
                if c0 < 1 {
                    return Err(parse_err("c=0"));
                }
                Ok(SizingPolicy::Baseline { c0, l0 })
            }
            "radar" => {
                known(&["b1", "b2", "base"])?;
                let b1: f64 = match lookup("b1") {
                    Some(v) => num(v, parse_err(v))?,
                    None => 1.0,
                };
                let b2: f64 = match lookup("b2") {
                    Some(v) => num(v, parse_err(v))?,
                    None => 1.0,
                };
                let base: f64 = match lookup("base") {
                    Some(v) => num(v, parse_err(v))?,
                    None => 2.0,
                };
                if !(b1 > 0.0) || !(b2 > 0.0) || !(base > 1.0) {
                    return Err(parse_err(params));
                }
                Ok(SizingPolicy::Radar { b1, b2, base })
            }
            "explicit" => {
                known(&["c", "l"])?;
                let c = num(lookup("c").ok_or_else(|| parse_err("c"))?, parse_err("c"))?;
                let l = num(lookup("l").ok_or_else(|| parse_err("l"))?, parse_err("l"))?;
                if c < 1 {
                    return Err(parse_err("c=0"));
                }
                Ok(SizingPolicy::Explicit { c, l })
            }
            other => Err(parse_err(other)),
        }
    }
}

fn log_base(x: f64, base: f64) -> f64 {
    x.ln() / base.ln()
}

/// Balance-rule cluster size rounded to an integer:
/// `max(1, round(b1 * log_base(n)^2))`.
pub fn radar_cluster_size(n: u64, b1: f64, base: f64) -> u64 {
    let log_n = log_base(n as f64, base);
    (b1 * log_n * log_n).round().max(1.0) as u64
}

/// Densified long-link count `max(0, round(b2 * log_base(n / c)))`.
///
/// Zero exactly when `n == c` (a single cluster needs no long links).
pub fn densified_link_count(n: u64, c: u64, b2: f64, base: f64) -> Result<u32> {
    if c < 1 || n < c {
        return Err(Error::InvalidArgument(format!(
            "link count needs n >= c >= 1, got n={n} c={c}"
        )));
    }
    let l = b2 * log_base(n as f64 / c as f64, base);
    Ok(l.round().max(0.0) as u32)
}

/// Analytic total search time `a1 * sqrt(c) + a2 * ln(n / c)`.
///
/// Natural log throughout; a different log base is an `a2` rescaling.
pub fn model_total_time(n: f64, c: f64, model: &TotalTimeModel) -> Result<f64> {
    if !(c >= 1.0) || !(c <= n) {
        return Err(Error::InvalidArgument(format!(
            "cluster size must satisfy 1 <= c <= n, got c={c} n={n}"
        )));
    }
    Ok(model.alpha1 * c.sqrt() + model.alpha2 * (n / c).ln())
}

/// Integer cluster size minimizing [`model_total_time`] at fixed `n`.
///
/// Uses the exhaustive scan up to `n = 10^6` and the golden-section path
/// above that. Ties break toward the smaller cluster size.
pub fn minimize_cluster_size(n: u64, model: &TotalTimeModel) -> (u64, f64) {
    if n <= 1_000_000 {
        minimize_cluster_size_exhaustive(n, model)
    } else {
        minimize_cluster_size_golden(n, model)
    }
}

/// Exhaustive integer scan over `c in 1..=n`. This is the oracle the fast
/// path is checked against.
pub fn minimize_cluster_size_exhaustive(n: u64, model: &TotalTimeModel) -> (u64, f64) {
    let nf = n as f64;
    let mut best_c = 1u64;
    let mut best_t = model_total_time(nf, 1.0, model).expect("c=1 is always valid");
    for c in 2..=n {
        let t = model_total_time(nf, c as f64, model).expect("scan stays in range");
        if t < best_t {
            best_t = t;
            best_c = c;
        }
    }
    (best_c, best_t)
}

/// Golden-section search on the continuous relaxation followed by an integer
/// neighbor check. Agrees with the exhaustive scan because the model is
/// unimodal in `c`.
pub fn minimize_cluster_size_golden(n: u64, model: &TotalTimeModel) -> (u64, f64) {
    let nf = n as f64;
    let objective = |c: f64| model_total_time(nf, c, model).expect("bracketed in [1, n]");
    let (c_cont, _) = golden_section(&objective, 1.0, nf, 1e-10, 300);

    let center = c_cont.round() as i128;
    let mut best: Option<(u64, f64)> = None;
    for cand in (center - 2)..=(center + 2) {
        let c = cand.clamp(1, n as i128) as u64;
        let t = objective(c as f64);
        match best {
            Some((bc, bt)) if t > bt || (t == bt && c >= bc) => {}
            _ => best = Some((c, t)),
        }
    }
    let (mut c, mut t) = best.expect("candidate window is non-empty");
    // Walk downhill in case rounding landed one step off the integer minimum.
    loop {
        let mut moved = false;
        if c > 1 {
            let tl = objective((c - 1) as f64);
            if tl <= t {
                c -= 1;
                t = tl;
                moved = true;
            }
        }
        if !moved && c < n {
            let tr = objective((c + 1) as f64);
            if tr < t {
                c += 1;
                t = tr;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    (c, t)
}

/// Balance-rule cluster size `(a2 * ln n / a1)^2`, the value that equates
/// the local and global terms of the model. Strictly increasing in `n`.
pub fn balance_cluster_size(n: f64, model: &TotalTimeModel) -> Result<f64> {
    if !(n >= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "balance rule needs n >= 2, got {n}"
        )));
    }
    if model.alpha1 <= 0.0 {
        return Err(Error::InvalidArgument(
            "balance rule needs alpha1 > 0".into(),
        ));
    }
    let root = model.alpha2 * n.ln() / model.alpha1;
    Ok(root * root)
}

/// Minimize `f(d) + g(n / d)` over `d` in `[lo, hi]`.
///
/// Logarithmic grid scan (1024 points) plus golden-section refinement around
/// the best grid point, to relative tolerance 1e-6. Guaranteed global only
/// for unimodal totals; otherwise returns the refined best-of-grid.
pub fn minimize_tradeoff(
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    n: f64,
    lo: f64,
    hi: f64,
) -> Result<(f64, f64)> {
    if !(lo > 0.0) || !(hi >= lo) || !n.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "tradeoff domain must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
        )));
    }
    let total = |d: f64| f(d) + g(n / d);

    const GRID: usize = 1024;
    let log_lo = lo.ln();
    let log_hi = hi.ln();
    let mut best_i = 0;
    let mut best_d = lo;
    let mut best_t = f64::INFINITY;
    for i in 0..GRID {
        let frac = i as f64 / (GRID - 1) as f64;
        let d = (log_lo + frac * (log_hi - log_lo)).exp();
        let t = total(d);
        if !t.is_finite() {
            return Err(Error::NonFiniteCost { at: d });
        }
        if t < best_t {
            best_t = t;
            best_d = d;
            best_i = i;
        }
    }

    if hi > lo {
        let step = (log_hi - log_lo) / (GRID - 1) as f64;
        let a = (log_lo + step * best_i.saturating_sub(1) as f64).exp().max(lo);
        let b = (log_lo + step * (best_i + 1).min(GRID - 1) as f64).exp().min(hi);
        let (d, t) = golden_section(&total, a, b, 1e-7, 200);
        if t < best_t {
            best_d = d;
            best_t = t;
        }
    }
    Ok((best_d, best_t))
}

/// Golden-section search for the minimum of `f` on `[a, b]`.
/// Returns `(x_min, f_min)`. Converges to a local minimum of a unimodal
/// function; the interval shrinks by the golden ratio each iteration.
pub(crate) fn golden_section(
    f: &impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    rel_tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_895;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iter {
        if (b - a) <= rel_tol * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
