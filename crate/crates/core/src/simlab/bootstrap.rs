use rand::Rng;

use crate::error::{Error, Result};

/// Percentile bootstrap interval for the mean of `samples`.
pub fn bootstrap_ci<R: Rng + ?Sized>(
    samples: &[f64],
    level: f64,
    resamples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("bootstrap needs at least two samples".into()));
    }
    if resamples < 100 {
        return Err(Error::InvalidInput("bootstrap needs at least 100 resamples".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!("level must be in (0, 1), got {level}")));
    }
    let n = samples.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| samples[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((quantile_sorted(&means, tail), quantile_sorted(&means, 1.0 - tail)))
}

/// Linear interpolation between order statistics.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn degenerate_samples() {
        let (lo, hi) = bootstrap_ci(&[2.5; 10], 0.95, 200, &mut seed::stream(0, &[])).unwrap();
        assert_eq!((lo, hi), (2.5, 2.5));
    }

    #[test]
    fn width_matches_clt() {
        let (mu, sigma, n) = (3.0, 2.0, 1000);
        let mut rng = seed::stream(1, &[]);
        let normal = Normal::new(mu, sigma).unwrap();
        let xs: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let (lo, hi) = bootstrap_ci(&xs, 0.95, 1000, &mut rng).unwrap();
        let expected = 2.0 * 1.96 * sigma / (n as f64).sqrt();
        assert!(((hi - lo) - expected).abs() < 0.25 * expected, "{lo} {hi}");
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!(lo <= mean && mean <= hi);
    }

    #[test]
    fn levels_nest() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin()).collect();
        let wide = bootstrap_ci(&xs, 0.95, 500, &mut seed::stream(5, &[])).unwrap();
        let narrow = bootstrap_ci(&xs, 0.5, 500, &mut seed::stream(5, &[])).unwrap();
        assert!(wide.0 <= narrow.0 && narrow.1 <= wide.1);
    }

    #[test]
    fn argument_checks() {
        let mut rng = seed::stream(0, &[]);
        assert!(bootstrap_ci(&[1.0], 0.95, 1000, &mut rng).is_err());
        assert!(bootstrap_ci(&[1.0, 2.0], 0.95, 10, &mut rng).is_err());
        assert!(bootstrap_ci(&[1.0, 2.0], 1.5, 1000, &mut rng).is_err());
    }
}
