use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Result, SeedSpec};

/// Monte Carlo result: sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n_samples)`.
    pub std_error: f64,
    pub n_samples: u64,
    /// Seed that produced the samples; `None` for deterministic inputs.
    pub seed: Option<SeedSpec>,
}

impl Estimate {
    pub fn from_samples(samples: &[f64], seed: Option<SeedSpec>) -> Self {
        let n = samples.len();
        assert!(n > 0, "an estimate needs at least one sample");
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Estimate {
            mean,
            std_error: (var / n as f64).sqrt(),
            n_samples: n as u64,
            seed,
        }
    }

    /// An exactly known value.
    pub fn exact(value: f64) -> Self {
        Estimate {
            mean: value,
            std_error: 0.0,
            n_samples: 1,
            seed: None,
        }
    }

    /// `|mean - target| <= k * std_error`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// Evaluates `f(i, seed.child(i))` for `i in 0..n` on the rayon pool and
/// returns the values in index order.
pub fn replicate<T, F>(n: u64, seed: SeedSpec, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, SeedSpec) -> Result<T> + Sync,
{
    (0..n).into_par_iter().map(|i| f(i, seed.child(i))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_error() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0], None);
        assert_eq!(e.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.std_error - sd / 2.0).abs() < 1e-15);
        assert!(e.within(2.5 + e.std_error, 1.0));
        assert_eq!(Estimate::from_samples(&[3.0], None).std_error, 0.0);
    }

    #[test]
    fn replicate_is_thread_count_independent() {
        use rand::Rng;
        let seed = SeedSpec::new(11, 0);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| replicate(257, seed, |_, s| Ok(s.rng().random::<f64>())).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}
