//! Monte Carlo output analysis: compensated means, batch-means standard
//! errors, integrated autocorrelation times, and two-sample KS tests.

use alloc::vec::Vec;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut acc = CompensatedSum::default();
    xs.iter().for_each(|&x| acc.add(x));
    acc.value() / xs.len() as f64
}

fn sample_variance(xs: &[f64], m: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mut acc = CompensatedSum::default();
    xs.iter().for_each(|&x| acc.add((x - m) * (x - m)));
    acc.value() / (xs.len() - 1) as f64
}

/// Pooled batch-means summary of one or more chains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchMeans {
    pub mean: f64,
    pub stderr: f64,
    pub batches: usize,
    pub batch_size: usize,
    pub samples: usize,
}

impl BatchMeans {
    /// Effective sample size implied by the batch-means standard error.
    pub fn n_effective(&self, naive_variance: f64) -> f64 {
        if self.stderr > 0.0 {
            (naive_variance / (self.stderr * self.stderr)).min(self.samples as f64)
        } else {
            self.samples as f64
        }
    }
}

/// Batch means with a common batch size `⌊√L_min⌋`, batches taken per chain.
pub fn batch_means(chains: &[&[f64]]) -> BatchMeans {
    let samples: usize = chains.iter().map(|c| c.len()).sum();
    let mut all = CompensatedSum::default();
    chains.iter().flat_map(|c| c.iter()).for_each(|&x| all.add(x));
    let mean = if samples == 0 { f64::NAN } else { all.value() / samples as f64 };
    let min_len = chains.iter().map(|c| c.len()).filter(|&l| l > 0).min().unwrap_or(0);
    let batch_size = (min_len as f64).sqrt().floor().max(1.0) as usize;
    let mut means = Vec::new();
    for c in chains {
        for batch in c.chunks_exact(batch_size) {
            means.push(self::mean(batch));
        }
    }
    let batches = means.len();
    let stderr = if samples <= 1 {
        0.0
    } else if batches < 2 {
        let flat: Vec<f64> = chains.iter().flat_map(|c| c.iter().copied()).collect();
        (sample_variance(&flat, mean) / samples as f64).sqrt()
    } else {
        let bm = self::mean(&means);
        (sample_variance(&means, bm) / batches as f64).sqrt()
    };
    BatchMeans { mean, stderr, batches, batch_size, samples }
}

/// Naive variance of all samples pooled.
pub fn pooled_variance(chains: &[&[f64]]) -> f64 {
    let flat: Vec<f64> = chains.iter().flat_map(|c| c.iter().copied()).collect();
    sample_variance(&flat, mean(&flat))
}

/// Integrated autocorrelation time `τ = 1 + 2Σρ_k`, truncated by Geyer's
/// initial positive sequence rule. Returns 1 for constant or short series.
pub fn integrated_autocorrelation_time(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 1.0;
    }
    let m = mean(xs);
    let centered: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let autocov = |lag: usize| -> f64 {
        let mut acc = CompensatedSum::default();
        for i in 0..n - lag {
            acc.add(centered[i] * centered[i + lag]);
        }
        acc.value() / n as f64
    };
    let c0 = autocov(0);
    if c0 <= 0.0 {
        return 1.0;
    }
    let mut tau = -1.0;
    let mut pair_prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n / 2 {
        let pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        // initial monotone sequence
        let pair = pair.min(pair_prev);
        tau += 2.0 * pair;
        pair_prev = pair;
        k += 1;
    }
    tau.max(1.0)
}

/// Effective sample size `n / τ` of a single chain.
pub fn effective_sample_size(xs: &[f64]) -> f64 {
    xs.len() as f64 / integrated_autocorrelation_time(xs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl KsResult {
    /// True when the null hypothesis survives at level `alpha`.
    pub fn accepts(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

/// Kolmogorov survival function `Q(λ) = 2Σ(−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = f64::from(k);
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut a: Vec<f64> = a.to_vec();
    let mut b: Vec<f64> = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    if na == 0 || nb == 0 {
        return KsResult { statistic: 0.0, p_value: 1.0 };
    }
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let sq = ne.sqrt();
    KsResult { statistic: d, p_value: kolmogorov_q((sq + 0.12 + 0.11 / sq) * d) }
}
