//! Exact universality checks over explicit codebooks.
//!
//! Every check scans all codeword pairs of a unit-scale codebook, computes a
//! per-pair criterion on the difference `D = X_a - X_b`, and compares the
//! minimum against `c * 2^-R`.

use std::cmp::Ordering;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::constellation::{alt_flip_reversal_perm, Codebook};
use crate::error::{Error, Result};
use crate::CMatrix;

/// Pair scans larger than this are refused.
pub const PAIR_LIMIT: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    Scalar,
    Parallel,
    Miso,
    Mimo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniversalityReport {
    pub kind: CriterionKind,
    pub rate: f64,
    pub c: f64,
    pub min_value: f64,
    pub threshold: f64,
    pub pair: (usize, usize),
    pub pass: bool,
}

impl UniversalityReport {
    fn new(kind: CriterionKind, rate: f64, c: f64, (min_value, pair): (f64, (usize, usize))) -> Self {
        let threshold = c * (-rate).exp2();
        Self {
            kind,
            rate,
            c,
            min_value,
            threshold,
            pair,
            pass: min_value >= threshold,
        }
    }
}

fn pair_guard(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::EmptyCodebook(n));
    }
    let pairs = n as u64 * (n as u64 - 1) / 2;
    if pairs > PAIR_LIMIT {
        return Err(Error::TooManyPairs { pairs, limit: PAIR_LIMIT });
    }
    Ok(())
}

fn better(a: (f64, (usize, usize)), b: (f64, (usize, usize))) -> (f64, (usize, usize)) {
    match a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => {
            if a.1 <= b.1 {
                a
            } else {
                b
            }
        }
    }
}

/// Minimum of `f(i, j)` over `i < j < n` with the smallest pair winning ties.
/// The result does not depend on thread scheduling.
pub fn min_over_pairs<F>(n: usize, f: F) -> Result<(f64, (usize, usize))>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    pair_guard(n)?;
    let best = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let mut b = (f64::INFINITY, (i, i + 1));
            for j in i + 1..n {
                let v = f(i, j);
                if v < b.0 {
                    b = (v, (i, j));
                }
            }
            b
        })
        .reduce(|| (f64::INFINITY, (usize::MAX, usize::MAX)), better);
    Ok(best)
}

/// `X_a - X_b` at unit scale.
pub fn normalized_difference(xa: &CMatrix, xb: &CMatrix) -> Result<CMatrix> {
    xa.sub(xb)
}

/// `prod_l |d_l|^2` over the given branch differences.
pub fn product_distance(diffs: &[Vec<Complex64>]) -> f64 {
    diffs
        .iter()
        .map(|d| d.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .product()
}

/// Product of squared row norms of `X_a - X_b`, rows being branches.
pub fn pair_product_distance(xa: &CMatrix, xb: &CMatrix) -> f64 {
    let mut p = 1.0;
    for r in 0..xa.rows() {
        let s: f64 = xa.row(r).iter().zip(xb.row(r)).map(|(a, b)| (a - b).norm_sqr()).sum();
        p *= s;
    }
    p
}

fn squared_distance(xa: &CMatrix, xb: &CMatrix) -> f64 {
    xa.data().iter().zip(xb.data()).map(|(a, b)| (a - b).norm_sqr()).sum()
}

/// Product of the `k` smallest squared singular values of `D`.
pub fn smallest_sv_product(d: &CMatrix, k: usize) -> Result<f64> {
    if d.rows() == 2 && d.cols() >= 2 && k <= 2 {
        return Ok(two_row_sv_product(d, k));
    }
    let sv = d.singular_values()?;
    Ok(sv.iter().rev().take(k).map(|s| s * s).product())
}

// Closed form from the 2x2 Gram matrix D D*.
fn two_row_sv_product(d: &CMatrix, k: usize) -> f64 {
    let (r0, r1) = (d.row(0), d.row(1));
    let a: f64 = r0.iter().map(|z| z.norm_sqr()).sum();
    let c: f64 = r1.iter().map(|z| z.norm_sqr()).sum();
    let b: Complex64 = r0.iter().zip(r1).map(|(x, y)| x * y.conj()).sum();
    let det = if d.cols() == 2 {
        (r0[0] * r1[1] - r0[1] * r1[0]).norm_sqr()
    } else {
        (a * c - b.norm_sqr()).max(0.0)
    };
    if k == 2 {
        return det;
    }
    if k == 0 {
        return 1.0;
    }
    let big = 0.5 * (a + c) + (0.25 * (a - c) * (a - c) + b.norm_sqr()).sqrt();
    if big == 0.0 {
        0.0
    } else {
        det / big
    }
}

pub fn check_scalar(code: &Codebook, rate: f64, c: f64) -> Result<UniversalityReport> {
    let cw = code.codewords();
    let best = min_over_pairs(cw.len(), |i, j| squared_distance(&cw[i], &cw[j]))?;
    Ok(UniversalityReport::new(CriterionKind::Scalar, rate, c, best))
}

pub fn check_parallel(code: &Codebook, rate: f64, c: f64) -> Result<UniversalityReport> {
    let cw = code.codewords();
    let best = min_over_pairs(cw.len(), |i, j| pair_product_distance(&cw[i], &cw[j]))?;
    Ok(UniversalityReport::new(CriterionKind::Parallel, rate, c, best))
}

pub fn check_mimo(code: &Codebook, rate: f64, nr: usize, c: f64) -> Result<UniversalityReport> {
    if code.t < code.nt {
        return Err(Error::Shape {
            expected: format!("T >= nt = {}", code.nt),
            got: format!("T = {}", code.t),
        });
    }
    let k = nr.min(code.nt);
    let kind = if k == 1 { CriterionKind::Miso } else { CriterionKind::Mimo };
    let cw = code.codewords();
    // surface SVD failures instead of folding them into the minimum
    let failed = std::sync::atomic::AtomicBool::new(false);
    let best = min_over_pairs(cw.len(), |i, j| {
        let d = cw[i].sub(&cw[j]).expect("equal shapes");
        smallest_sv_product(&d, k).unwrap_or_else(|_| {
            failed.store(true, std::sync::atomic::Ordering::Relaxed);
            f64::NAN
        })
    })?;
    if failed.into_inner() {
        return Err(Error::NoConvergence(crate::linalg::MAX_SWEEPS));
    }
    Ok(UniversalityReport::new(kind, rate, c, best))
}

pub fn check_miso(code: &Codebook, rate: f64, c: f64) -> Result<UniversalityReport> {
    check_mimo(code, rate, 1, c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbfReport {
    pub nbits: u32,
    /// `min |a1 - a2| |B(a1) - B(a2)|` in index units.
    pub min_unnormalized: u64,
    /// The same divided by `2^{2 nbits}`.
    pub min_normalized: f64,
    pub bound: f64,
    pub pair: (usize, usize),
    pub pass: bool,
}

/// Exhaustive check of `|Δa| |ΔB| / 2^{2n} >= 1 / (8 * 2^n)` over a
/// `2^n`-PAM, `B` the alternate-flip bit reversal and `n = R/2`.
pub fn abf_bound_check(nbits: u32) -> Result<AbfReport> {
    if nbits == 0 || nbits > 12 {
        return Err(Error::Invalid(format!("nbits {nbits} outside 1..=12")));
    }
    let b = alt_flip_reversal_perm(nbits);
    let n = 1usize << nbits;
    let (v, pair) = min_over_pairs(n, |i, j| ((j - i) * b.apply(i).abs_diff(b.apply(j))) as f64)?;
    let scale = (n * n) as f64;
    let bound = 1.0 / (8.0 * n as f64);
    Ok(AbfReport {
        nbits,
        min_unnormalized: v as u64,
        min_normalized: v / scale,
        bound,
        pair,
        pass: v / scale >= bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdHistogram {
    pub thresholds: Vec<f64>,
    /// Pairs with `0 < pd < threshold`.
    pub counts: Vec<u64>,
    pub zero_pairs: u64,
    pub total_pairs: u64,
}

impl PdHistogram {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,count\n");
        for (t, c) in self.thresholds.iter().zip(&self.counts) {
            s.push_str(&format!("{t:e},{c}\n"));
        }
        s
    }
}

/// All pairwise product distances, in pair order `(0,1), (0,2), ...`.
pub fn all_product_distances(code: &Codebook) -> Result<Vec<f64>> {
    let cw = code.codewords();
    pair_guard(cw.len())?;
    Ok((0..cw.len() - 1)
        .into_par_iter()
        .flat_map_iter(|i| (i + 1..cw.len()).map(move |j| pair_product_distance(&cw[i], &cw[j])))
        .collect())
}

pub fn pd_histogram(code: &Codebook, thresholds: &[f64]) -> Result<PdHistogram> {
    let mut pd = all_product_distances(code)?;
    pd.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let zero = pd.partition_point(|&x| x <= 0.0);
    let counts = thresholds
        .iter()
        .map(|&t| (pd.partition_point(|&x| x < t).max(zero) - zero) as u64)
        .collect();
    Ok(PdHistogram {
        thresholds: thresholds.to_vec(),
        counts,
        zero_pairs: zero as u64,
        total_pairs: pd.len() as u64,
    })
}

/// `g(i) = sum_{j != i} 1 / pd(i, j)`.
pub fn inverse_pd_profile(code: &Codebook) -> Result<Vec<f64>> {
    let cw = code.codewords();
    pair_guard(cw.len())?;
    Ok((0..cw.len())
        .into_par_iter()
        .map(|i| {
            (0..cw.len())
                .filter(|&j| j != i)
                .map(|j| 1.0 / pair_product_distance(&cw[i], &cw[j]))
                .sum()
        })
        .collect())
}

/// Keep codewords whose inverse product distance sum is at most the median
/// (the `ceil(N/2)`-th smallest), preserving order. At least half survive.
pub fn expurgate(code: &Codebook) -> Result<Codebook> {
    if code.len() < 2 {
        return Err(Error::EmptyCodebook(code.len()));
    }
    let g = inverse_pd_profile(code)?;
    let mut sorted = g.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let median = sorted[code.len().div_ceil(2) - 1];
    let keep: Vec<usize> = (0..code.len()).filter(|&i| g[i] <= median).collect();
    code.subset(&keep, format!("{}-expurgated", code.family))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{make_qam, Normalization};

    fn scalar(points: &[Complex64]) -> Codebook {
        let cw = points.iter().map(|&z| CMatrix::new(1, 1, vec![z]).unwrap()).collect();
        Codebook::new("test", 1, 1, Normalization::FixedSpacing, cw).unwrap()
    }

    #[test]
    fn difference_basics() {
        let q = make_qam(4).unwrap();
        let (a, b) = (q.get(3), q.get(9));
        assert_eq!(normalized_difference(a, a).unwrap().frobenius_norm_sq(), 0.0);
        let d1 = normalized_difference(a, b).unwrap();
        let d2 = normalized_difference(b, a).unwrap();
        assert_eq!(d1.add(&d2).unwrap().frobenius_norm_sq(), 0.0);
    }

    #[test]
    fn product_distance_examples() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(product_distance(&[vec![one, one], vec![zero, zero]]), 0.0);
        assert_eq!(product_distance(&[vec![one, one], vec![one, one, one]]), 6.0);
    }

    #[test]
    fn scalar_checks() {
        let q = make_qam(4).unwrap();
        let r = check_scalar(&q, 4.0, 1.0).unwrap();
        assert!((r.min_value - 2.0 / 16.0).abs() < 1e-15);
        assert!(r.pass);

        let z = Complex64::new(0.3, 0.1);
        let dup = scalar(&[z, Complex64::new(0.0, 0.0), z]);
        let r = check_scalar(&dup, 1.0, 1.0).unwrap();
        assert_eq!(r.min_value, 0.0);
        assert_eq!(r.pair, (0, 2));
        assert!(!r.pass);

        let bpsk = scalar(&[Complex64::new(-0.5, 0.0), Complex64::new(0.5, 0.0)]);
        assert!(check_scalar(&bpsk, 1.0, 1.0).unwrap().pass);
    }

    #[test]
    fn scans_refuse_tiny_codebooks() {
        let one = scalar(&[Complex64::new(0.0, 0.0)]);
        assert_eq!(check_scalar(&one, 1.0, 1.0).unwrap_err(), Error::EmptyCodebook(1));
    }

    #[test]
    fn ties_resolve_to_smallest_pair() {
        let (v, p) = min_over_pairs(50, |_, _| 1.0).unwrap();
        assert_eq!((v, p), (1.0, (0, 1)));
        let (_, p) = min_over_pairs(50, |i, j| if (i + j) % 7 == 3 { 0.0 } else { 1.0 }).unwrap();
        assert_eq!(p, (0, 3));
    }

    #[test]
    fn abf_small_cases() {
        let r = abf_bound_check(2).unwrap();
        assert_eq!(r.min_unnormalized, 2);
        assert!((r.min_normalized - 2.0 / 16.0).abs() < 1e-15);
        assert!((r.bound - 1.0 / 32.0).abs() < 1e-15);
        assert!(r.pass);
        assert!(abf_bound_check(1).unwrap().pass);
    }

    #[test]
    fn two_row_closed_form_matches_svd() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for cols in [2, 3, 4] {
            for _ in 0..200 {
                let d = CMatrix::from_fn(2, cols, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                let sv = d.singular_values().unwrap();
                for k in 1..=2 {
                    let want: f64 = sv.iter().rev().take(k).map(|s| s * s).product();
                    let got = two_row_sv_product(&d, k);
                    assert!((want - got).abs() <= 1e-12 * want.max(1e-12), "k={k} {want} {got}");
                }
            }
        }
    }

    #[test]
    fn histogram_counts() {
        let q = make_qam(2).unwrap();
        let all = (q.len() * (q.len() - 1) / 2) as u64;
        let h = pd_histogram(&q, &[0.0, 1e9]).unwrap();
        assert_eq!(h.counts, vec![0, all]);
        assert_eq!(h.zero_pairs, 0);
        assert!(h.to_csv().starts_with("threshold,count\n"));
    }

    #[test]
    fn expurgation_removes_a_collision() {
        let pts: Vec<Complex64> = (0..6).map(|k| Complex64::new(k as f64, 0.0)).collect();
        let mut with_dup = pts.clone();
        with_dup.push(Complex64::new(2.0, 0.0));
        let code = scalar(&with_dup);
        let e = expurgate(&code).unwrap();
        assert!(e.len() >= code.len() / 2);
        assert!(check_scalar(&e, 1.0, 0.0).unwrap().min_value > 0.0);
    }
}
