use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A PAM with `q^n` points numbered left to right, optionally with
/// irregular gaps.
///
/// With gap parameter `g > 0`, each step from index `t - 1` to `t` whose
/// highest changed base-`q` digit is the `j`-th least significant one
/// (`j = 1` for the lowest digit) is widened by `g * q^j` raw units. Points
/// whose indices first differ in a high digit are therefore far apart, and
/// the total width grows to `q^n (1 + g n)` for `q = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PamSpec {
    pub q: u32,
    pub n: u32,
    pub gap: f64,
}

impl PamSpec {
    pub fn new(q: u32, n: u32, gap: f64) -> Result<Self> {
        if q < 2 {
            return Err(Error::Invalid(format!("digit alphabet size {q} < 2")));
        }
        if n == 0 {
            return Err(Error::Invalid("PAM needs at least one digit".into()));
        }
        if (q as u64).checked_pow(n).is_none_or(|s| s > 1 << 16) {
            return Err(Error::Invalid(format!("{q}^{n} points exceeds 2^16")));
        }
        if !(gap.is_finite() && gap >= 0.0) {
            return Err(Error::Invalid(format!("gap {gap} must be finite and nonnegative")));
        }
        Ok(Self { q, n, gap })
    }

    pub fn uniform(q: u32, n: u32) -> Result<Self> {
        Self::new(q, n, 0.0)
    }

    /// Uniform binary PAM with `2^bits` points.
    pub fn binary(bits: u32) -> Result<Self> {
        Self::uniform(2, bits)
    }

    pub fn size(&self) -> usize {
        (self.q as usize).pow(self.n)
    }

    /// Uncentered, unscaled coordinate: `i` plus accumulated gaps.
    pub fn raw_position(&self, i: usize) -> f64 {
        let q = self.q as usize;
        let mut extra = 0.0;
        if self.gap > 0.0 {
            let mut lo = 1usize; // q^{j-1}
            for j in 1..=self.n {
                let hi = lo * q;
                let steps = i / lo - i / hi;
                extra += self.gap * (q as f64).powi(j as i32) * steps as f64;
                lo = hi;
            }
        }
        i as f64 + extra
    }

    pub fn raw_width(&self) -> f64 {
        self.raw_position(self.size() - 1)
    }

    /// Raw coordinate of the center, subtracted from every point.
    pub fn offset(&self) -> f64 {
        self.raw_width() / 2.0
    }

    /// Scale from raw units to transmitted amplitude. A uniform `N`-PAM gets
    /// spacing `sqrt(2) / N`, so a square QAM built from two of them has
    /// `d_min^2 = 2 / M` and peak energy below one.
    pub fn spacing(&self) -> f64 {
        std::f64::consts::SQRT_2 / (self.raw_width() + 1.0)
    }

    /// Width increase relative to the uniform PAM of the same size.
    pub fn width_overhead(&self) -> f64 {
        (self.raw_width() + 1.0) / self.size() as f64 - 1.0
    }

    /// Most-significant-first base-`q` digits of `i`.
    pub fn digits(&self, i: usize) -> Vec<u32> {
        let mut d = vec![0u32; self.n as usize];
        let mut x = i;
        for slot in d.iter_mut().rev() {
            *slot = (x % self.q as usize) as u32;
            x /= self.q as usize;
        }
        d
    }

    pub fn from_digits(&self, d: &[u32]) -> usize {
        d.iter().fold(0usize, |acc, &x| acc * self.q as usize + x as usize)
    }
}

pub fn pam_point(spec: &PamSpec, index: usize) -> Result<f64> {
    if index >= spec.size() {
        return Err(Error::Invalid(format!("PAM index {index} out of range 0..{}", spec.size())));
    }
    Ok(spec.spacing() * (spec.raw_position(index) - spec.offset()))
}

/// All points of a PAM in index order.
pub fn pam_points(spec: &PamSpec) -> Vec<f64> {
    let (s, o) = (spec.spacing(), spec.offset());
    (0..spec.size()).map(|i| s * (spec.raw_position(i) - o)).collect()
}

/// QAM with `2^ceil(bits/2)` in-phase and `2^floor(bits/2)` quadrature
/// levels, common spacing `s` with `s^2 = 2 / 2^bits`. Point `a * NQ + b`
/// has in-phase index `a`, quadrature index `b`.
pub fn rect_qam_points(bits: u32) -> Vec<Complex64> {
    let ni = 1usize << bits.div_ceil(2);
    let nq = 1usize << (bits / 2);
    let s = (2.0 / (ni * nq) as f64).sqrt();
    let ci = (ni as f64 - 1.0) / 2.0;
    let cq = (nq as f64 - 1.0) / 2.0;
    let mut pts = Vec::with_capacity(ni * nq);
    for a in 0..ni {
        for b in 0..nq {
            pts.push(Complex64::new(s * (a as f64 - ci), s * (b as f64 - cq)));
        }
    }
    pts
}

/// Square QAM with `per_rail` levels on each rail, `d_min^2 = 2 / per_rail^2`.
pub fn square_qam_points(per_rail: usize) -> Vec<Complex64> {
    let s = std::f64::consts::SQRT_2 / per_rail as f64;
    let c = (per_rail as f64 - 1.0) / 2.0;
    let mut pts = Vec::with_capacity(per_rail * per_rail);
    for a in 0..per_rail {
        for b in 0..per_rail {
            pts.push(Complex64::new(s * (a as f64 - c), s * (b as f64 - c)));
        }
    }
    pts
}
