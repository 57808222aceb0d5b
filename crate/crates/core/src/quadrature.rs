//! Adaptive Gauss–Kronrod quadrature.
//!
//! Globally adaptive bisection driven by the 21-point Kronrod extension of the
//! 10-point Gauss rule, with the usual QUADPACK error rescaling. Semi-infinite
//! ranges are mapped onto `[0, 1)` before integration.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;
use thiserror::Error;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not reach tolerance: value {value:e}, error estimate {error:e} after {intervals} intervals")]
    NotConverged { value: f64, error: f64, intervals: usize },
    #[error("integrand is not finite at x = {at}")]
    NonFinite { at: f64 },
}

/// Tolerances for [`integrate`]. The target is `max(abs_tol, rel_tol·|I|)`,
/// floored at `100ε·∫|f|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { abs_tol: 0.0, rel_tol: 1e-10, max_intervals: 2000 }
    }
}

impl QuadConfig {
    pub fn with_rel(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    pub fn with_abs(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > err {
            err = min_err;
        }
    }
    err
}

/// One 21-point Kronrod panel on `[a, b]`: `(value, error estimate)`.
pub fn kronrod21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    kronrod21_abs(f, a, b).map(|(v, e, _)| (v, e))
}

/// As [`kronrod21`], also returning the Kronrod estimate of `∫|f|`.
fn kronrod21_abs<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64, f64), QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { at: center });
    }
    let mut res_k = fc * WGK[10];
    let mut res_abs = fc.abs() * WGK[10];
    let mut res_g = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let (x1, x2) = (center - dx, center + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(QuadError::NonFinite { at: x1 });
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite { at: x2 });
        }
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let err = rescale_error((res_k - res_g) * half, res_abs * half.abs(), res_asc * half.abs());
    Ok((value, err, res_abs * half.abs()))
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> Result<Quadrature, QuadError> {
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let (value, error, abs) = kronrod21_abs(&mut f, a, b)?;
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error, abs });
    let mut total = value;
    let mut total_err = error;
    let mut total_abs = abs;
    loop {
        // below 100ε·∫|f| further bisection only chases rounding noise
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs()).max(100.0 * f64::EPSILON * total_abs);
        if total_err <= target {
            break;
        }
        if heap.len() >= cfg.max_intervals {
            return Err(QuadError::NotConverged { value: total, error: total_err, intervals: heap.len() });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        // interval exhausted at machine resolution
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            heap.push(worst);
            return Err(QuadError::NotConverged { value: total, error: total_err, intervals: heap.len() });
        }
        let (v1, e1, a1) = kronrod21_abs(&mut f, worst.a, mid)?;
        let (v2, e2, a2) = kronrod21_abs(&mut f, mid, worst.b)?;
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        total_abs += a1 + a2 - worst.abs;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1, abs: a1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2, abs: a2 });
        if heap.len() % 64 == 0 {
            // resum to shed accumulated cancellation in the running totals
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
            total_abs = heap.iter().map(|s| s.abs).sum();
        }
    }
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(Quadrature { value, error, evaluations })
}

/// Integrates `f` over `[a, ∞)` using `x = a + s/(1 - s)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    cfg: &QuadConfig,
) -> Result<Quadrature, QuadError> {
    integrate(
        |s| {
            let one_minus = 1.0 - s;
            let x = a + s / one_minus;
            let jac = 1.0 / (one_minus * one_minus);
            let y = f(x);
            if y == 0.0 {
                0.0
            } else {
                y * jac
            }
        },
        0.0,
        1.0,
        cfg,
    )
}
