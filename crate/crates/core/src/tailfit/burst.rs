use serde::Serialize;

use crate::stats::{mean, sample_std};

/// `B = (σ − μ)/(σ + μ)`: −1 periodic, 0 Poisson-like, → 1 maximally bursty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BurstinessResult {
    pub b: f64,
    pub mean_tau: f64,
    pub std_tau: f64,
    pub n: usize,
}

/// Burstiness from the sample mean and (n − 1) standard deviation.
/// `None` for an empty sample.
pub fn burstiness(lengths: &[f64]) -> Option<BurstinessResult> {
    let mean_tau = mean(lengths)?;
    let std_tau = sample_std(lengths)?;
    let denom = std_tau + mean_tau;
    if denom <= 0.0 {
        return None;
    }
    let b = if std_tau == 0.0 { -1.0 } else { (std_tau - mean_tau) / denom };
    Some(BurstinessResult { b, mean_tau, std_tau, n: lengths.len() })
}

/// Burstiness of the values at or above `xmin` only.
pub fn burstiness_tail(lengths: &[f64], xmin: f64) -> Option<BurstinessResult> {
    let tail: Vec<f64> = lengths.iter().copied().filter(|&x| x >= xmin).collect();
    burstiness(&tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn anchors() {
        assert_eq!(burstiness(&[5.0; 4]).unwrap().b, -1.0);
        assert_eq!(burstiness(&[3.0]).unwrap().b, -1.0);
        assert!(burstiness(&[]).is_none());
        // mean 2, sample std √2
        let r = burstiness(&[1.0, 3.0]).unwrap();
        assert!((r.mean_tau - 2.0).abs() < 1e-15);
        assert!((r.std_tau - 2f64.sqrt()).abs() < 1e-15);
        assert!((r.b - (2f64.sqrt() - 2.0) / (2f64.sqrt() + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn tail_mode_filters() {
        let r = burstiness_tail(&[1.0, 1.0, 4.0, 4.0], 2.0).unwrap();
        assert_eq!((r.n, r.b), (2, -1.0));
        assert!(burstiness_tail(&[1.0], 2.0).is_none());
    }

    proptest! {
        #[test]
        fn scale_invariant(xs in prop::collection::vec(0.5f64..100.0, 1..100), c in 0.01f64..100.0) {
            let a = burstiness(&xs).unwrap();
            let scaled: Vec<f64> = xs.iter().map(|x| x * c).collect();
            let b = burstiness(&scaled).unwrap();
            prop_assert!((a.b - b.b).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&a.b));
        }
    }
}
