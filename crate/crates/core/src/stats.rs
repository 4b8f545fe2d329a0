//! Statistics helpers shared by the harness and the test suites:
//! chi-square goodness of fit, one-sided Welch comparison of trial means,
//! and seeded bootstrap standard errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::util::derive_seed;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (ddof = 1); zero for fewer than two samples.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    var.sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square goodness-of-fit test of observed counts against
/// expected counts.
///
/// Bins with expected count below 5 are pooled with their neighbors before
/// computing the statistic, the usual validity guard for the chi-square
/// approximation.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::InvalidArgument(
            "chi-square needs equal-length, non-empty bins".into(),
        ));
    }
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc_obs = 0.0;
    let mut acc_exp = 0.0;
    for (&obs, &exp) in observed.iter().zip(expected) {
        acc_obs += obs as f64;
        acc_exp += exp;
        if acc_exp >= 5.0 {
            pooled.push((acc_obs, acc_exp));
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    if acc_exp > 0.0 || acc_obs > 0.0 {
        if let Some(last) = pooled.last_mut() {
            last.0 += acc_obs;
            last.1 += acc_exp;
        } else {
            pooled.push((acc_obs, acc_exp));
        }
    }
    if pooled.len() < 2 {
        return Err(Error::InvalidArgument(
            "chi-square needs at least 2 bins after pooling".into(),
        ));
    }
    let statistic: f64 = pooled
        .iter()
        .map(|&(obs, exp)| (obs - exp) * (obs - exp) / exp)
        .sum();
    let dof = pooled.len() - 1;
    let dist = ChiSquared::new(dof as f64)
        .map_err(|e| Error::InvalidArgument(format!("chi-square dof: {e}")))?;
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    })
}

/// One-sided Welch t-test: is `mean(a) > mean(b)` at the given confidence
/// level? Degrees of freedom by Welch–Satterthwaite. With no variance on
/// either side this degenerates to a direct mean comparison.
pub fn mean_exceeds_with_confidence(a: &[f64], b: &[f64], confidence: f64) -> Result<bool> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 samples per side".into(),
        ));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (sa, sb) = (sample_std(a), sample_std(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let va = sa * sa / na;
    let vb = sb * sb / nb;
    if va + vb == 0.0 {
        return Ok(ma > mb);
    }
    let t = (ma - mb) / (va + vb).sqrt();
    let df = (va + vb) * (va + vb)
        / (va * va / (na - 1.0) + vb * vb / (nb - 1.0)).max(f64::MIN_POSITIVE);
    let dist = StudentsT::new(0.0, 1.0, df.max(1.0))
        .map_err(|e| Error::InvalidArgument(format!("t distribution: {e}")))?;
    let t_crit = dist.inverse_cdf(confidence);
    Ok(t > t_crit)
}

/// Bootstrap standard error of the mean of `values`: resample with
/// replacement `resamples` times and report the standard deviation of the
/// resampled means. Deterministic in the seed.
pub fn bootstrap_stderr(values: &[f64], resamples: usize, seed: u64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xB007));
    let mut means = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let s: f64 = (0..values.len())
            .map(|_| values[rng.gen_range(0..values.len())])
            .sum();
        means.push(s / values.len() as f64);
    }
    // Population std of the bootstrap distribution.
    let m = mean(&means);
    (means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / resamples as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn chi_square_accepts_its_own_distribution() {
        // Perfect agreement: statistic 0, p-value 1.
        let observed = vec![100u64, 200, 300];
        let expected = vec![100.0, 200.0, 300.0];
        let r = chi_square_gof(&observed, &expected).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_relative_eq!(r.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn chi_square_rejects_gross_mismatch() {
        let observed = vec![500u64, 10, 10];
        let expected = vec![173.0, 173.0, 174.0];
        let r = chi_square_gof(&observed, &expected).unwrap();
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn chi_square_pools_small_bins() {
        // The two sub-5 tail bins merge into the second bin: 2 bins, dof 1.
        let observed = vec![50u64, 30, 2, 1];
        let expected = vec![48.0, 29.0, 2.5, 2.0];
        let r = chi_square_gof(&observed, &expected).unwrap();
        assert_eq!(r.dof, 1);
    }

    #[test]
    fn welch_detects_separated_means() {
        let a = [10.0, 10.5, 9.8, 10.2, 10.1];
        let b = [5.0, 5.3, 4.9, 5.1, 5.2];
        assert!(mean_exceeds_with_confidence(&a, &b, 0.95).unwrap());
        assert!(!mean_exceeds_with_confidence(&b, &a, 0.95).unwrap());
    }

    #[test]
    fn welch_rejects_overlapping_means() {
        let a = [10.0, 9.0, 11.0, 10.5, 9.5];
        let b = [10.1, 9.2, 10.8, 10.4, 9.6];
        assert!(!mean_exceeds_with_confidence(&a, &b, 0.95).unwrap());
    }

    #[test]
    fn bootstrap_stderr_tracks_sample_spread() {
        let tight = [10.0, 10.01, 9.99, 10.0, 10.0];
        let loose = [5.0, 15.0, 8.0, 12.0, 10.0];
        let se_tight = bootstrap_stderr(&tight, 200, 42);
        let se_loose = bootstrap_stderr(&loose, 200, 42);
        assert!(se_tight < se_loose);
        assert_eq!(se_tight, bootstrap_stderr(&tight, 200, 42));
    }
}
