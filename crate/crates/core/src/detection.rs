//! Two-component Poisson model of single-shot photon counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson as PoissonSampler};
use serde::{Deserialize, Serialize};
use statrs::distribution::{DiscreteCDF, Poisson};
use statrs::function::gamma::ln_gamma;

use crate::error::FitError;
use crate::fit::levenberg_marquardt;
use crate::sim::Campaign;

/// Histogram of photon counts; `bins[k]` is the number of shots with `k` counts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountHistogram {
    pub bins: Vec<u64>,
}

impl CountHistogram {
    pub fn from_counts<I: IntoIterator<Item = u32>>(counts: I) -> Self {
        let mut bins: Vec<u64> = Vec::new();
        for c in counts {
            let k = c as usize;
            if k >= bins.len() {
                bins.resize(k + 1, 0);
            }
            bins[k] += 1;
        }
        Self { bins }
    }

    /// Every record of the campaign, omitted subsequences included.
    pub fn from_campaign(c: &Campaign) -> Self {
        Self::from_counts(
            c.subsequences
                .iter()
                .flat_map(|s| s.records.iter().map(|r| r.photon_count)),
        )
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        let s: f64 = self.bins.iter().enumerate().map(|(k, &n)| k as f64 * n as f64).sum();
        s / self.total() as f64
    }
}

/// Draws `n` counts from `w_dark * Pois(lambda_dark) + (1 - w_dark) * Pois(lambda_bright)`.
pub fn sample_mixture(n: usize, w_dark: f64, lambda_dark: f64, lambda_bright: f64, seed: u64) -> Vec<u32> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dark = PoissonSampler::new(lambda_dark).expect("positive mean");
    let bright = PoissonSampler::new(lambda_bright).expect("positive mean");
    (0..n)
        .map(|_| {
            let x: f64 = if rng.random::<f64>() < w_dark {
                dark.sample(&mut rng)
            } else {
                bright.sample(&mut rng)
            };
            x as u32
        })
        .collect()
}

fn pmf(k: f64, lambda: f64) -> f64 {
    let l = lambda.abs().max(1e-300);
    (k * l.ln() - l - ln_gamma(k + 1.0)).exp()
}

/// Probability that a dark shot is read as bright and vice versa at a given threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Misclassification {
    pub threshold: f64,
    /// `P(Pois(lambda_dark) > threshold)`
    pub dark_as_bright: f64,
    /// `P(Pois(lambda_bright) <= threshold)`
    pub bright_as_dark: f64,
}

pub fn misclassification(lambda_dark: f64, lambda_bright: f64, threshold: f64) -> Misclassification {
    let k = threshold.floor().max(0.0) as u64;
    let below = threshold < 0.0;
    let d = Poisson::new(lambda_dark).expect("positive mean");
    let b = Poisson::new(lambda_bright).expect("positive mean");
    Misclassification {
        threshold,
        dark_as_bright: if below { 1.0 } else { d.sf(k) },
        bright_as_dark: if below { 0.0 } else { b.cdf(k) },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    pub lambda_dark: f64,
    pub lambda_bright: f64,
    pub weight_dark: f64,
    pub weight_bright: f64,
    pub lambda_errors: [f64; 2],
    pub residual: f64,
    /// Half-integer between the last count favouring dark and the first favouring bright.
    pub crossing_threshold: f64,
    pub at_crossing: Misclassification,
}

/// Minimum weight of either component before the histogram counts as single-component.
pub const MIN_COMPONENT_WEIGHT: f64 = 0.01;

fn em_start(h: &CountHistogram) -> (f64, f64, f64) {
    let mean = h.mean();
    let (mut w, mut ld, mut lb) = (0.5, (0.5 * mean).max(0.05), (1.5 * mean).max(0.1));
    for _ in 0..200 {
        let (mut nd, mut sd, mut sb, mut nb) = (0.0, 0.0, 0.0, 0.0);
        for (k, &n) in h.bins.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let kf = k as f64;
            let a = w * pmf(kf, ld);
            let b = (1.0 - w) * pmf(kf, lb);
            let r = if a + b > 0.0 { a / (a + b) } else { 0.5 };
            nd += n as f64 * r;
            sd += n as f64 * r * kf;
            nb += n as f64 * (1.0 - r);
            sb += n as f64 * (1.0 - r) * kf;
        }
        w = nd / (nd + nb);
        if nd > 0.0 {
            ld = (sd / nd).max(1e-3);
        }
        if nb > 0.0 {
            lb = (sb / nb).max(1e-3);
        }
    }
    (w, ld, lb)
}

fn degeneracy(weight_dark: f64, ld: f64, lb: f64) -> Option<FitError> {
    let weight_bright = 1.0 - weight_dark;
    if weight_dark.is_nan() || weight_bright.is_nan() || weight_dark.min(weight_bright) < MIN_COMPONENT_WEIGHT {
        return Some(FitError::Degenerate(format!(
            "component weights {weight_dark:.4} / {weight_bright:.4}"
        )));
    }
    if lb - ld < ld.sqrt() + lb.sqrt() {
        return Some(FitError::Degenerate(format!(
            "means {ld:.3} and {lb:.3} are not separated"
        )));
    }
    None
}

/// Least-squares fit of two scaled Poisson distributions to a count histogram.
pub fn fit_poisson_mixture(h: &CountHistogram) -> Result<MixtureFit, FitError> {
    let total = h.total();
    if total == 0 {
        return Err(FitError::Empty);
    }
    let (w0, ld0, lb0) = em_start(h);
    // a single component leaves the least-squares problem without a minimum
    let (wd0, ld_lo, lb_hi) = if ld0 <= lb0 { (w0, ld0, lb0) } else { (1.0 - w0, lb0, ld0) };
    if let Some(e) = degeneracy(wd0, ld_lo, lb_hi) {
        return Err(e);
    }
    let xs: Vec<f64> = (0..h.bins.len().max(4)).map(|k| k as f64).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&k| h.bins.get(k as usize).copied().unwrap_or(0) as f64)
        .collect();
    let n = total as f64;
    let fit = levenberg_marquardt(
        |k, p| p[0] * pmf(k, p[1]) + p[2] * pmf(k, p[3]),
        &xs,
        &ys,
        &[n * w0, ld0, n * (1.0 - w0), lb0],
    )?;
    let (mut ad, mut ld, mut ab, mut lb) = (fit.params[0], fit.params[1].abs(), fit.params[2], fit.params[3].abs());
    let (mut ed, mut eb) = (fit.errors[1], fit.errors[3]);
    if ld > lb {
        std::mem::swap(&mut ad, &mut ab);
        std::mem::swap(&mut ld, &mut lb);
        std::mem::swap(&mut ed, &mut eb);
    }
    let weight_dark = ad / (ad + ab);
    let weight_bright = ab / (ad + ab);
    if let Some(e) = degeneracy(weight_dark, ld, lb) {
        return Err(e);
    }
    let crossing_threshold = crossing(weight_dark, ld, lb);
    Ok(MixtureFit {
        lambda_dark: ld,
        lambda_bright: lb,
        weight_dark,
        weight_bright,
        lambda_errors: [ed, eb],
        residual: fit.residual,
        crossing_threshold,
        at_crossing: misclassification(ld, lb, crossing_threshold),
    })
}

/// First count above the dark mean where the weighted bright term dominates, minus one half.
pub fn crossing(weight_dark: f64, lambda_dark: f64, lambda_bright: f64) -> f64 {
    let start = lambda_dark.floor() as u64;
    for k in start..=(lambda_bright.ceil() as u64 + 1) {
        let kf = k as f64;
        if (1.0 - weight_dark) * pmf(kf, lambda_bright) > weight_dark * pmf(kf, lambda_dark) {
            return kf - 0.5;
        }
    }
    lambda_bright
}
