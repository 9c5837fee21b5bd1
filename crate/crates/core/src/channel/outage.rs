use rand::Rng;
use serde::Serialize;

use super::{mutual_info, run_shards, sample_unchecked, FadingModel};
use crate::error::{Error, Result};
use crate::rng::complex_gaussian;
use crate::CMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutageEstimate {
    pub p: f64,
    /// 95% confidence half-width.
    pub half_width: f64,
    pub trials: u64,
    /// Sampled channels found in outage.
    pub events: u64,
}

/// Fraction of sampled channels with `log2 det(I + SNR H H*) < rate`.
pub fn outage_prob_mc(model: &FadingModel, rate: f64, snr: f64, trials: u64, seed: u64) -> Result<OutageEstimate> {
    model.validate()?;
    if trials == 0 {
        return Err(Error::Invalid("need at least one trial".into()));
    }
    let counts = run_shards(trials, seed, 0, |rng, n| {
        (0..n)
            .filter(|_| {
                let h = sample_unchecked(model, rng);
                mutual_info(&h, snr).expect("finite channel") < rate
            })
            .count() as u64
    });
    let events: u64 = counts.iter().sum();
    let p = events as f64 / trials as f64;
    Ok(OutageEstimate {
        p,
        half_width: 1.96 * (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
        events,
    })
}

/// Outage probability of an iid Rayleigh `nr x nt` channel by importance
/// sampling. Channels are drawn from an equal mixture of CN(0, σ²) laws
/// with `σ² = 2^-j`, `j = 0..=ceil(log2 SNR)`, which puts mass on the small
/// channels that cause outage at high SNR; each draw is weighted by the
/// likelihood ratio to the CN(0, 1) law.
pub fn outage_prob_is(nt: usize, nr: usize, rate: f64, snr: f64, trials: u64, seed: u64) -> Result<OutageEstimate> {
    if nt == 0 || nr == 0 || trials == 0 || !(snr > 0.0) {
        return Err(Error::Invalid("need positive dimensions, trials and SNR".into()));
    }
    let levels = snr.log2().ceil().max(0.0) as usize + 1;
    let n = (nt * nr) as f64;
    let vars: Vec<f64> = (0..levels).map(|j| (-(j as f64)).exp2()).collect();
    let weight = |energy: f64| {
        // log q_j(H) - log p(H), up to the common pi^-N factor
        let logs: Vec<f64> = vars.iter().map(|&v| -n * v.ln() - energy / v + energy).collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = logs.iter().map(|l| (l - top).exp()).sum::<f64>() / levels as f64;
        (-(top + mean.ln())).exp()
    };
    let parts = run_shards(trials, seed, 0, |rng, count| {
        let (mut s, mut s2, mut ev) = (0.0f64, 0.0f64, 0u64);
        for _ in 0..count {
            let v = vars[rng.random_range(0..levels)];
            let scale = v.sqrt();
            let h = CMatrix::from_fn(nr, nt, |_, _| complex_gaussian(rng) * scale);
            if mutual_info(&h, snr).expect("finite channel") < rate {
                let w = weight(h.frobenius_norm_sq());
                s += w;
                s2 += w * w;
                ev += 1;
            }
        }
        (s, s2, ev)
    });
    let (mut s, mut s2, mut events) = (0.0, 0.0, 0u64);
    for (a, b, e) in parts {
        s += a;
        s2 += b;
        events += e;
    }
    let t = trials as f64;
    let p = s / t;
    let var = (s2 / t - p * p).max(0.0);
    Ok(OutageEstimate {
        p,
        half_width: 1.96 * (var / t).sqrt(),
        trials,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_channel_outage_is_deterministic() {
        let h = CMatrix::identity(1);
        let m = FadingModel::Fixed { h };
        // capacity at SNR 3 is exactly 2 bits
        assert_eq!(outage_prob_mc(&m, 2.5, 3.0, 100, 1).unwrap().p, 1.0);
        assert_eq!(outage_prob_mc(&m, 1.5, 3.0, 100, 1).unwrap().p, 0.0);
    }

    #[test]
    fn scalar_rayleigh_matches_closed_form() {
        // |h|^2 ~ Exp(1): P(log2(1 + snr |h|^2) < R) = 1 - exp(-(2^R - 1) / snr)
        let (rate, snr) = (1.0f64, 100.0f64);
        let exact = 1.0 - (-(rate.exp2() - 1.0) / snr).exp();
        let m = FadingModel::IidRayleigh { nt: 1, nr: 1 };
        let mc = outage_prob_mc(&m, rate, snr, 400_000, 3).unwrap();
        assert!((mc.p - exact).abs() < 3.0 * mc.half_width, "{mc:?} vs {exact}");
        let is = outage_prob_is(1, 1, rate, snr, 100_000, 4).unwrap();
        assert!((is.p - exact).abs() < 3.0 * is.half_width.max(1e-4 * exact), "{is:?} vs {exact}");
    }

    #[test]
    fn importance_sampling_agrees_with_plain_mc() {
        let m = FadingModel::IidRayleigh { nt: 2, nr: 2 };
        let snr = 10f64.powf(1.5);
        let rate = 0.5 * snr.log2();
        let mc = outage_prob_mc(&m, rate, snr, 400_000, 5).unwrap();
        let is = outage_prob_is(2, 2, rate, snr, 200_000, 6).unwrap();
        let tol = 3.0 * (mc.half_width.powi(2) + is.half_width.powi(2)).sqrt();
        assert!((mc.p - is.p).abs() < tol, "{mc:?} {is:?}");
    }
}
