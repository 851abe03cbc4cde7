use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal, Zeta};

/// Discrete power law `P(x) ∝ x^−alpha` on `x ≥ xmin`, by rejection from the
/// zeta distribution.
pub fn discrete_power_law<R: Rng>(rng: &mut R, alpha: f64, xmin: u32, n: usize) -> Vec<u32> {
    let zeta = Zeta::new(alpha).expect("alpha > 1");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: f64 = zeta.sample(rng);
        if x >= xmin as f64 && x < u32::MAX as f64 {
            out.push(x as u32);
        }
    }
    out
}

pub fn exponential<R: Rng>(rng: &mut R, rate: f64, n: usize) -> Vec<f64> {
    let d = Exp::new(rate).expect("rate > 0");
    (0..n).map(|_| d.sample(rng)).collect()
}

/// Pairs of standard normals with correlation `rho`.
pub fn correlated_normals<R: Rng>(rng: &mut R, rho: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let c = (1.0 - rho * rho).sqrt();
    (0..n)
        .map(|_| {
            let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            (a, rho * a + c * b)
        })
        .unzip()
}

/// `y_t = beta·x_{t−lag} + noise_t` with exogenous white-noise `x`.
pub fn lagged_pair<R: Rng>(rng: &mut R, beta: f64, lag: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let y = (0..n)
        .map(|t| {
            let e: f64 = rng.sample(StandardNormal);
            if t >= lag { beta * x[t - lag] + e } else { e }
        })
        .collect();
    (x, y)
}
