use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// One-sided paired bootstrap p-value for `mean(treatment − control) > 0`:
/// the share of resampled mean differences at or below zero, with the
/// `(count + 1) / (resamples + 1)` correction.
pub fn paired_bootstrap_p(control: &[f64], treatment: &[f64], resamples: usize, seed: u64) -> f64 {
    assert_eq!(control.len(), treatment.len(), "paired samples differ in length");
    let diffs: Vec<f64> = treatment.iter().zip(control).map(|(t, c)| t - c).collect();
    if diffs.is_empty() {
        return 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = diffs.len();
    let mut at_or_below = 0usize;
    for _ in 0..resamples {
        let s: f64 = (0..n).map(|_| diffs[rng.random_range(0..n)]).sum();
        if s <= 0.0 {
            at_or_below += 1;
        }
    }
    (at_or_below + 1) as f64 / (resamples + 1) as f64
}

/// Percentile bootstrap interval for a success rate from `successes` out of
/// `n` Bernoulli trials.
pub fn bootstrap_rate_interval(successes: usize, n: usize, level: f64, resamples: usize, seed: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let p = successes as f64 / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rates: Vec<f64> = (0..resamples)
        .map(|_| (0..n).filter(|_| rng.random_bool(p)).count() as f64 / n as f64)
        .collect();
    rates.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let at = |q: f64| rates[((q * resamples as f64).floor() as usize).min(resamples - 1)];
    (at(alpha), at(1.0 - alpha))
}
