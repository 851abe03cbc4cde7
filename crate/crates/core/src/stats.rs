//! Small descriptive-statistics toolkit shared across the analytics modules.

use serde::Serialize;

/// Streaming central moments up to fourth order (mergeable).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MomentAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl MomentAccumulator {
    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2 - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let d3 = d2 * delta;
        let d4 = d2 * d2;
        let mean = self.mean + delta * nb / n;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 = self.m3 + other.m3 + d3 * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        MomentAccumulator { n: self.n + other.n, mean, m2, m3, m4 }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn summary(&self) -> Option<Moments> {
        if self.n < 2 {
            return None;
        }
        let n = self.n as f64;
        let var_pop = self.m2 / n;
        Some(Moments {
            n: self.n,
            mean: self.mean,
            std: (self.m2 / (n - 1.0)).sqrt(),
            excess_kurtosis: if var_pop > 0.0 { (self.m4 / n) / (var_pop * var_pop) - 3.0 } else { f64::NAN },
        })
    }
}

impl FromIterator<f64> for MomentAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = MomentAccumulator::default();
        iter.into_iter().for_each(|x| acc.push(x));
        acc
    }
}

/// Mean, sample standard deviation and excess kurtosis (normal = 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub std: f64,
    pub excess_kurtosis: f64,
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample standard deviation (n − 1 denominator); zero for a single value.
pub fn sample_std(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    if xs.len() == 1 {
        return Some(0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Pearson correlation; `None` when fewer than two points or either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "pearson inputs must align");
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // a constant series can leave rounding residue of a few ulps of the mean
    let constant = |ss: f64, m: f64| {
        let ulp = 64.0 * f64::EPSILON * m.abs();
        ss <= n as f64 * ulp * ulp
    };
    if constant(sxx, mx) || constant(syy, my) {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!((0.0..=1.0).contains(&q));
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Box-plot summary with Tukey fences at 1.5 × IQR.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FiveNumberSummary {
    pub n: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    /// Smallest observation inside the fences.
    pub whisker_low: f64,
    /// Largest observation inside the fences.
    pub whisker_high: f64,
    pub n_outliers: usize,
}

impl FiveNumberSummary {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q1 = quantile_sorted(&v, 0.25);
        let median = quantile_sorted(&v, 0.5);
        let q3 = quantile_sorted(&v, 0.75);
        let h = q3 - q1;
        let (lower_fence, upper_fence) = (q1 - 1.5 * h, q3 + 1.5 * h);
        let inside: Vec<f64> = v.iter().copied().filter(|x| (lower_fence..=upper_fence).contains(x)).collect();
        Some(FiveNumberSummary {
            n: v.len(),
            q1,
            median,
            q3,
            lower_fence,
            upper_fence,
            // the median always lies inside the fences, so `inside` is non-empty
            whisker_low: inside[0],
            whisker_high: inside[inside.len() - 1],
            n_outliers: v.len() - inside.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn moments_match_two_pass() {
        let xs = [0.2, -0.1, 0.0, 0.5, 0.9, -0.7, 0.3];
        let m = xs.iter().copied().collect::<MomentAccumulator>().summary().unwrap();
        let n = xs.len() as f64;
        let mu = xs.iter().sum::<f64>() / n;
        let c = |k: i32| xs.iter().map(|x| (x - mu).powi(k)).sum::<f64>() / n;
        assert!((m.mean - mu).abs() < 1e-15);
        assert!((m.std - (c(2) * n / (n - 1.0)).sqrt()).abs() < 1e-14);
        assert!((m.excess_kurtosis - (c(4) / (c(2) * c(2)) - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn uniform_kurtosis_is_platykurtic() {
        let xs: Vec<f64> = (0..100_001).map(|i| -1.0 + 2.0 * i as f64 / 100_000.0).collect();
        let m = xs.iter().copied().collect::<MomentAccumulator>().summary().unwrap();
        assert!((m.excess_kurtosis + 1.2).abs() < 1e-3);
    }

    #[test]
    fn pearson_edges() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(pearson(&x, &x), Some(1.0));
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &neg), Some(-1.0));
        assert_eq!(pearson(&x, &[2.0; 4]), None);
        assert_eq!(pearson(&[0.1; 4], &x), None);
        assert_eq!(pearson(&[1.0], &[1.0]), None);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.25), 1.75);
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 0.75), 3.25);
        assert_eq!(quantile_sorted(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn five_numbers_with_outlier() {
        let s = FiveNumberSummary::from_values(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (2.0, 3.0, 4.0));
        assert_eq!((s.lower_fence, s.upper_fence), (-1.0, 7.0));
        assert_eq!((s.whisker_low, s.whisker_high, s.n_outliers), (1.0, 4.0, 1));
        assert!(FiveNumberSummary::from_values(&[]).is_none());
    }

    proptest! {
        #[test]
        fn merge_equals_sequential(xs in prop::collection::vec(-1.0f64..1.0, 2..200), split in 0usize..200) {
            let split = split.min(xs.len());
            let all: MomentAccumulator = xs.iter().copied().collect();
            let a: MomentAccumulator = xs[..split].iter().copied().collect();
            let b: MomentAccumulator = xs[split..].iter().copied().collect();
            let m = a.merge(&b);
            prop_assert_eq!(m.count(), all.count());
            prop_assert!((m.mean - all.mean).abs() < 1e-12);
            prop_assert!((m.m2 - all.m2).abs() < 1e-9);
            prop_assert!((m.m4 - all.m4).abs() < 1e-9);
        }

        #[test]
        fn pearson_affine_invariance(
            pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..60),
            a in 0.1f64..5.0, b in -3.0f64..3.0,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            if let Some(r) = pearson(&x, &y) {
                let xt: Vec<f64> = x.iter().map(|v| a * v + b).collect();
                let yn: Vec<f64> = y.iter().map(|v| -v).collect();
                prop_assert!((pearson(&xt, &y).unwrap() - r).abs() < 1e-9);
                prop_assert!((pearson(&x, &yn).unwrap() + r).abs() < 1e-12);
            }
        }
    }
}
