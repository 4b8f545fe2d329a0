//! Discrete k-dimensional torus coordinates and distances.
//!
//! Both levels of the overlay live on uniform tori: clusters sit on a torus
//! of side `m`, and the nodes inside a cluster sit on a torus of side
//! `intra_side`. Distance is Manhattan with wraparound (minimum image per
//! axis), which keeps the lattice boundary-free so fitted hop exponents are
//! not polluted by edge effects.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A point on a uniform discrete torus: `dim` coordinates, each in
/// `0..side`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TorusCoord {
    axes: Vec<u32>,
    side: u32,
}

impl TorusCoord {
    /// Build a coordinate, validating that every axis value is `< side`.
    pub fn new(axes: Vec<u32>, side: u32) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidArgument("torus side must be >= 1".into()));
        }
        if axes.is_empty() {
            return Err(Error::InvalidArgument(
                "torus coordinate needs at least one axis".into(),
            ));
        }
        if let Some(&bad) = axes.iter().find(|&&a| a >= side) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {bad} out of range for side {side}"
            )));
        }
        Ok(Self { axes, side })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn axes(&self) -> &[u32] {
        &self.axes
    }

    /// Row-major rank of this coordinate within its torus.
    pub fn rank(&self) -> u64 {
        self.axes
            .iter()
            .fold(0u64, |acc, &a| acc * self.side as u64 + a as u64)
    }

    /// Inverse of [`TorusCoord::rank`].
    pub fn from_rank(mut rank: u64, side: u32, dim: usize) -> Self {
        let mut axes = vec![0u32; dim];
        for a in axes.iter_mut().rev() {
            *a = (rank % side as u64) as u32;
            rank /= side as u64;
        }
        Self { axes, side }
    }
}

/// Minimum-image distance along one axis of a torus with the given side.
#[inline]
pub(crate) fn axis_distance(a: u32, b: u32, side: u32) -> u32 {
    let d = a.abs_diff(b);
    d.min(side - d)
}

/// Wraparound Manhattan distance between two raw coordinate slices.
/// Callers guarantee equal length and a shared side.
#[inline]
pub(crate) fn axes_distance(a: &[u32], b: &[u32], side: u32) -> u32 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| axis_distance(x, y, side))
        .sum()
}

/// Wraparound Manhattan (L1) distance between two torus coordinates.
///
/// Symmetric, zero iff `a == b`. Errors if the coordinates disagree on
/// dimension or side.
pub fn lattice_distance(a: &TorusCoord, b: &TorusCoord) -> Result<u32> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    if a.side != b.side {
        return Err(Error::SideMismatch {
            left: a.side,
            right: b.side,
        });
    }
    Ok(axes_distance(&a.axes, &b.axes, a.side))
}

/// Maximum lattice distance between any two coordinates: `dim * (side / 2)`.
pub fn torus_diameter(side: u32, dim: usize) -> u32 {
    assert!(side >= 1 && dim >= 1, "side and dim must be >= 1");
    dim as u32 * (side / 2)
}

/// Count of coordinates at each distance from the origin.
///
/// The census is origin-independent (the torus is vertex-transitive), and its
/// values sum to `side^dim`. It is the exact normalizer for the long-link
/// distance distribution.
pub fn distance_census(side: u32, dim: usize) -> BTreeMap<u32, u64> {
    assert!(side >= 1 && dim >= 1, "side and dim must be >= 1");
    // 1-D census: distance 0 once, every other distance twice, except the
    // antipode on even sides which is reached one way only.
    let half = side / 2;
    let mut one_dim = vec![0u64; half as usize + 1];
    one_dim[0] = 1;
    for d in 1..=half {
        one_dim[d as usize] = if side % 2 == 0 && d == half { 1 } else { 2 };
    }

    // Convolve dim times.
    let mut census = one_dim.clone();
    for _ in 1..dim {
        let mut next = vec![0u64; census.len() + one_dim.len() - 1];
        for (i, &ci) in census.iter().enumerate() {
            for (j, &oj) in one_dim.iter().enumerate() {
                next[i + j] += ci * oj;
            }
        }
        census = next;
    }

    census
        .into_iter()
        .enumerate()
        .filter(|&(_, count)| count > 0)
        .map(|(d, count)| (d as u32, count))
        .collect()
}
