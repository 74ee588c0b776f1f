//! Discrete Gaussian over the integers, `Pr(k) ~ e^{-pi k^2 / sigma^2}`,
//! sampled from an inverse-CDF table.
//!
//! The table covers `[-ceil(12 sigma), ceil(12 sigma)]`; the mass beyond the
//! cutoff is below 2^-100 for every desk sigma, so the truncation never shows
//! up in sampled values.

use rand::Rng;

#[derive(Clone, Debug)]
pub struct DiscreteGaussian {
    cutoff: i64,
    /// cdf[i] = Pr(X <= i - cutoff); last entry is exactly 1.
    cdf: Vec<f64>,
}

impl DiscreteGaussian {
    pub fn new(sigma: f64) -> Self {
        assert!(sigma > 0.0 && sigma.is_finite());
        let cutoff = (12.0 * sigma).ceil() as i64;
        let mut mass = Vec::with_capacity((2 * cutoff + 1) as usize);
        for k in -cutoff..=cutoff {
            let kf = k as f64;
            mass.push((-std::f64::consts::PI * kf * kf / (sigma * sigma)).exp());
        }
        let total: f64 = mass.iter().sum();
        let mut cdf = Vec::with_capacity(mass.len());
        let mut acc = 0.0;
        for m in &mass {
            acc += m / total;
            cdf.push(acc);
        }
        *cdf.last_mut().unwrap() = 1.0;
        DiscreteGaussian { cutoff, cdf }
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    pub fn sample(&self, rng: &mut impl Rng) -> i64 {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx as i64 - self.cutoff
    }
}
