//! Fading models, outage analysis and error-probability simulation.

mod curve;
mod dblast;
mod outage;
mod sim;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::gram_schmidt;
use crate::rng::{complex_gaussian, stream_rng, SimRng};
use crate::CMatrix;

pub use curve::{dblast_effective_curve, miso_outage_curve, outage_curve_analytic, rayleigh_exponents, OutageCurve};
pub use dblast::{staged_dblast_decode, DblastTwoStream, StagedDecision};
pub use outage::{outage_prob_is, outage_prob_mc, OutageEstimate};
pub use sim::{
    db_to_linear, estimate_diversity, fit_slope, ml_decode, simulate_pe, snr_at_pe, DiversityFit, SimResult,
};

/// Trials per independently seeded shard.
pub const SHARD: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FadingModel {
    /// iid CN(0, 1) entries, `nr x nt`.
    IidRayleigh { nt: usize, nr: usize },
    /// `n x n` right-unitarily invariant channel whose squared singular
    /// values `φ_l` have density `∝ φ^{k_l}` near zero and an exponential tail
    /// with rate `tail`.
    Isotropic { n: usize, exponents: Vec<f64>, tail: f64 },
    /// Deterministic channel.
    Fixed { h: CMatrix },
    /// `nr x nt` Rayleigh with the listed transmit antennas (0-based)
    /// permanently faded.
    DegenerateMiso { nt: usize, nr: usize, zeroed: Vec<usize> },
}

impl FadingModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            FadingModel::IidRayleigh { nt, nr } | FadingModel::DegenerateMiso { nt, nr, .. } => {
                if *nt == 0 || *nr == 0 {
                    return Err(Error::Invalid("channel dimensions must be positive".into()));
                }
                if let FadingModel::DegenerateMiso { zeroed, .. } = self {
                    if let Some(&z) = zeroed.iter().find(|&&z| z >= *nt) {
                        return Err(Error::Invalid(format!("zeroed antenna {z} outside 0..{nt}")));
                    }
                }
            }
            FadingModel::Isotropic { n, exponents, tail } => {
                if *n == 0 || exponents.len() != *n {
                    return Err(Error::Invalid(format!("need {n} decay exponents, got {}", exponents.len())));
                }
                if exponents.iter().any(|&k| !(k > -1.0) || !k.is_finite()) {
                    return Err(Error::Invalid("decay exponents must exceed -1".into()));
                }
                if exponents.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::Invalid("decay exponents must be sorted".into()));
                }
                if !(*tail > 0.0 && tail.is_finite()) {
                    return Err(Error::Invalid(format!("tail rate {tail} must be positive")));
                }
            }
            FadingModel::Fixed { .. } => {}
        }
        Ok(())
    }

    pub fn nt(&self) -> usize {
        match self {
            FadingModel::IidRayleigh { nt, .. } | FadingModel::DegenerateMiso { nt, .. } => *nt,
            FadingModel::Isotropic { n, .. } => *n,
            FadingModel::Fixed { h } => h.cols(),
        }
    }

    pub fn nr(&self) -> usize {
        match self {
            FadingModel::IidRayleigh { nr, .. } | FadingModel::DegenerateMiso { nr, .. } => *nr,
            FadingModel::Isotropic { n, .. } => *n,
            FadingModel::Fixed { h } => h.rows(),
        }
    }
}

/// Haar-distributed unitary from Gram-Schmidt on a complex Gaussian matrix.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    loop {
        let g = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
        if let Ok(u) = gram_schmidt(&g) {
            return u;
        }
    }
}

pub fn sample_channel<R: Rng + ?Sized>(model: &FadingModel, rng: &mut R) -> Result<CMatrix> {
    model.validate()?;
    Ok(sample_unchecked(model, rng))
}

pub(crate) fn sample_unchecked<R: Rng + ?Sized>(model: &FadingModel, rng: &mut R) -> CMatrix {
    match model {
        FadingModel::IidRayleigh { nt, nr } => CMatrix::from_fn(*nr, *nt, |_, _| complex_gaussian(rng)),
        FadingModel::DegenerateMiso { nt, nr, zeroed } => CMatrix::from_fn(*nr, *nt, |_, c| {
            let z = complex_gaussian(rng);
            if zeroed.contains(&c) {
                Complex64::new(0.0, 0.0)
            } else {
                z
            }
        }),
        FadingModel::Fixed { h } => h.clone(),
        FadingModel::Isotropic { n, exponents, tail } => {
            let mut phi: Vec<f64> = exponents
                .iter()
                .map(|&k| {
                    // inverse CDF of density (k+1) φ^k on (0, 1]
                    let u: f64 = 1.0 - rng.random::<f64>();
                    let e: f64 = Exp1.sample(rng);
                    u.powf(1.0 / (k + 1.0)) * (1.0 + e / tail)
                })
                .collect();
            phi.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let u = haar_unitary(*n, rng);
            let v = haar_unitary(*n, rng);
            let sigma = CMatrix::diag(&phi.iter().map(|p| Complex64::new(p.sqrt(), 0.0)).collect::<Vec<_>>());
            u.mul(&sigma)
                .and_then(|m| m.mul(&v.conj_transpose()))
                .expect("conformable")
        }
    }
}

/// `log2 det(I + SNR H H*)`.
pub fn mutual_info(h: &CMatrix, snr: f64) -> Result<f64> {
    let (r, c) = h.shape();
    if r == 1 || c == 1 {
        return Ok((snr * h.frobenius_norm_sq()).ln_1p() / std::f64::consts::LN_2);
    }
    if r == 2 && c == 2 {
        let det = (h.get(0, 0) * h.get(1, 1) - h.get(0, 1) * h.get(1, 0)).norm_sqr();
        let v = snr * h.frobenius_norm_sq() + snr * snr * det;
        return Ok(v.ln_1p() / std::f64::consts::LN_2);
    }
    let sv = h.singular_values()?;
    Ok(sv.iter().map(|s| (snr * s * s).ln_1p()).sum::<f64>() / std::f64::consts::LN_2)
}

/// Run `trials` in fixed-size shards; shard `s` draws from stream
/// `(tag << 32) | s` of `seed`. Results come back in shard order, so any
/// sequential reduction of them is independent of the thread count.
pub(crate) fn run_shards<T, F>(trials: u64, seed: u64, tag: u32, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SimRng, u64) -> T + Sync,
{
    let shards = trials.div_ceil(SHARD);
    (0..shards)
        .into_par_iter()
        .map(|s| {
            let n = SHARD.min(trials - s * SHARD);
            let mut rng = stream_rng(seed, ((tag as u64) << 32) | s);
            f(&mut rng, n)
        })
        .collect()
}
