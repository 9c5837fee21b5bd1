use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{run_shards, sample_unchecked, FadingModel};
use crate::constellation::Codebook;
use crate::error::{Error, Result};
use crate::rng::{complex_gaussian, RNG_NAME};
use crate::CMatrix;

/// Points with fewer errors than this are left out of slope fits.
pub const MIN_ERRORS: u64 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub snr_db: Vec<f64>,
    pub p_e: Vec<f64>,
    /// 95% confidence half-widths.
    pub ci: Vec<f64>,
    pub trials: Vec<u64>,
    pub errors: Vec<u64>,
    pub seed: u64,
    pub rng: String,
}

impl SimResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("snr_db,p_e,ci,trials,errors\n");
        for i in 0..self.snr_db.len() {
            s.push_str(&format!(
                "{},{:e},{:e},{},{}\n",
                self.snr_db[i], self.p_e[i], self.ci[i], self.trials[i], self.errors[i]
            ));
        }
        s
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn check_shapes(code: &Codebook, y: &CMatrix, h: &CMatrix) -> Result<()> {
    if code.is_empty() {
        return Err(Error::EmptyCodebook(0));
    }
    if h.cols() != code.nt || y.rows() != h.rows() || y.cols() != code.t {
        return Err(Error::Shape {
            expected: format!("H r x {}, Y r x {}", code.nt, code.t),
            got: format!("H {}x{}, Y {}x{}", h.rows(), h.cols(), y.rows(), y.cols()),
        });
    }
    Ok(())
}

/// `||Y - a H X||^2`, abandoned once it exceeds `bound`.
pub(crate) fn metric(y: &CMatrix, h: &CMatrix, x: &CMatrix, a: f64, bound: f64) -> f64 {
    let (nr, nt) = h.shape();
    let t = x.cols();
    let (yd, hd, xd) = (y.data(), h.data(), x.data());
    let mut acc = 0.0;
    for r in 0..nr {
        for c in 0..t {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..nt {
                s += hd[r * nt + k] * xd[k * t + c];
            }
            acc += (yd[r * t + c] - s * a).norm_sqr();
        }
        if acc > bound {
            return acc;
        }
    }
    acc
}

fn ml_unchecked(code: &Codebook, y: &CMatrix, h: &CMatrix, snr: f64) -> usize {
    let a = snr.sqrt();
    let mut best = (f64::INFINITY, 0);
    for (i, x) in code.codewords().iter().enumerate() {
        let m = metric(y, h, x, a, best.0);
        if m < best.0 {
            best = (m, i);
        }
    }
    best.1
}

/// Index minimizing `||Y - sqrt(SNR) H X||^2`; ties go to the smallest index.
pub fn ml_decode(code: &Codebook, y: &CMatrix, h: &CMatrix, snr: f64) -> Result<usize> {
    check_shapes(code, y, h)?;
    Ok(ml_unchecked(code, y, h, snr))
}

/// Received block `sqrt(SNR) H X + W` with CN(0, 1) noise.
pub(crate) fn receive<R: Rng + ?Sized>(h: &CMatrix, x: &CMatrix, snr: f64, rng: &mut R) -> CMatrix {
    let a = snr.sqrt();
    let hx = h.mul(x).expect("conformable");
    CMatrix::from_fn(hx.rows(), hx.cols(), |r, c| hx.get(r, c) * a + complex_gaussian(rng))
}

/// Codeword error rate under ML decoding at each SNR (dB). Each point draws
/// a uniform codeword, a channel and noise per trial, from its own seeded
/// stream.
pub fn simulate_pe(code: &Codebook, model: &FadingModel, snr_db: &[f64], trials: u64, seed: u64) -> Result<SimResult> {
    model.validate()?;
    if trials < 100 {
        return Err(Error::Invalid(format!("need at least 100 trials per point, got {trials}")));
    }
    if code.is_empty() {
        return Err(Error::EmptyCodebook(0));
    }
    if model.nt() != code.nt {
        return Err(Error::Shape {
            expected: format!("{} transmit antennas", code.nt),
            got: format!("{}", model.nt()),
        });
    }
    let n = code.len();
    let mut out = SimResult {
        snr_db: snr_db.to_vec(),
        p_e: vec![],
        ci: vec![],
        trials: vec![],
        errors: vec![],
        seed,
        rng: RNG_NAME.to_string(),
    };
    for (i, &db) in snr_db.iter().enumerate() {
        let snr = db_to_linear(db);
        let counts = run_shards(trials, seed, i as u32, |rng, count| {
            let mut err = 0u64;
            for _ in 0..count {
                let sent = rng.random_range(0..n);
                let h = sample_unchecked(model, rng);
                let y = receive(&h, code.get(sent), snr, rng);
                if ml_unchecked(code, &y, &h, snr) != sent {
                    err += 1;
                }
            }
            err
        });
        let errors: u64 = counts.iter().sum();
        let p = errors as f64 / trials as f64;
        out.p_e.push(p);
        out.ci.push(1.96 * (p * (1.0 - p) / trials as f64).sqrt());
        out.trials.push(trials);
        out.errors.push(errors);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiversityFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// Points used in the fit.
    pub points: usize,
}

/// Ordinary least squares `y = slope x + intercept`, with the standard error
/// of the slope.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<DiversityFit> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return Err(Error::InsufficientData(format!("need 3 or more paired points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(DiversityFit {
        slope,
        intercept,
        stderr: (sse / (nf - 2.0) / sxx).sqrt(),
        points: n,
    })
}

/// Slope of `-log2 P_e` against `log2 SNR`, skipping points with fewer than
/// ten observed errors.
pub fn estimate_diversity(sim: &SimResult) -> Result<DiversityFit> {
    let (mut x, mut y) = (vec![], vec![]);
    for i in 0..sim.snr_db.len() {
        if sim.errors[i] >= MIN_ERRORS && sim.p_e[i] > 0.0 {
            x.push(db_to_linear(sim.snr_db[i]).log2());
            y.push(-sim.p_e[i].log2());
        }
    }
    fit_slope(&x, &y)
}

/// SNR (dB) where the error curve crosses `target`, interpolating `log10 P_e`
/// linearly in dB between the first bracketing pair of points.
pub fn snr_at_pe(sim: &SimResult, target: f64) -> Option<f64> {
    if !(target > 0.0) {
        return None;
    }
    let lt = target.log10();
    for i in 1..sim.snr_db.len() {
        let (p0, p1) = (sim.p_e[i - 1], sim.p_e[i]);
        if p0 <= 0.0 || p1 <= 0.0 {
            continue;
        }
        let (l0, l1) = (p0.log10(), p1.log10());
        if (l0 - lt) * (l1 - lt) <= 0.0 && l0 != l1 {
            let f = (lt - l0) / (l1 - l0);
            return Some(sim.snr_db[i - 1] + f * (sim.snr_db[i] - sim.snr_db[i - 1]));
        }
    }
    None
}
