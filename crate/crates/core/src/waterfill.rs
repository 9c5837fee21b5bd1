//! Worst channel not in outage for a codeword pair.
//!
//! Given the singular values `λ_1 <= ... <= λ_m` of a normalized difference
//! matrix, the channel with `sum log2(1 + x_l) >= R` that minimizes the
//! received separation `sum x_l λ_l^2` is found by inverse waterfilling:
//! `x_l λ_l^2 = (w - λ_l^2)^+` with water level `w` chosen so that
//! `sum log2(w / λ_l^2)^+ = R`.

use rayon::prelude::*;
use serde::Serialize;

use crate::constellation::Codebook;
use crate::criteria::PAIR_LIMIT;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCase<T: Real> {
    /// Lagrange multiplier; the water level is its reciprocal.
    pub lambda: T,
    pub water_level: T,
    /// Number of active (weakest) branches.
    pub k: usize,
    /// Received energy `Q_l = SNR ψ_l^2 λ_l^2` per branch, same order as the
    /// sorted input.
    pub allocations: Vec<T>,
    /// Worst channel singular values `ψ_l`.
    pub psi: Vec<T>,
    pub criterion: T,
    pub pairwise_error: T,
}

impl<T: Real> WorstCase<T> {
    /// `sum log2(w / λ_l^2)^+ - R`; zero at the solution.
    pub fn rate_residual(&self, sv: &[T], rate: T) -> T {
        let w = self.water_level;
        let mut s = T::zero();
        for &x in sv {
            let sq = x * x;
            if sq < w {
                s = s + (w / sq).log2();
            }
        }
        s - rate
    }
}

fn sorted_checked<T: Real>(sv: &[T], rate: T) -> Result<Vec<T>> {
    if sv.is_empty() {
        return Err(Error::Invalid("no singular values".into()));
    }
    if !(rate.is_finite() && rate > T::zero()) {
        return Err(Error::Invalid(format!("rate {rate} must be positive")));
    }
    if sv.iter().any(|&x| !x.is_finite() || x < T::zero()) {
        return Err(Error::Invalid("singular values must be finite and nonnegative".into()));
    }
    if sv.iter().all(|&x| x == T::zero()) {
        return Err(Error::Invalid("all singular values are zero".into()));
    }
    let mut s = sv.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(s)
}

/// Active set size and water level: the largest `k` with
/// `λ_k^2 <= 2^{R/k} (prod_{l<=k} λ_l^2)^{1/k} <= λ_{k+1}^2`, `λ_{m+1} = ∞`.
fn active_set<T: Real>(sorted: &[T], rate: T) -> (usize, T) {
    let m = sorted.len();
    let mut log_prod = vec![T::zero(); m + 1];
    for (i, &x) in sorted.iter().enumerate() {
        log_prod[i + 1] = log_prod[i] + (x * x).log2();
    }
    for k in (1..=m).rev() {
        let kk = T::lit(k as f64);
        let level = ((rate + log_prod[k]) / kk).exp2();
        let lo = sorted[k - 1] * sorted[k - 1];
        let fits_low = lo <= level;
        let fits_high = k == m || level <= sorted[k] * sorted[k];
        if fits_low && fits_high {
            return (k, level);
        }
    }
    // k = 1 always satisfies the lower inequality; reached only through
    // rounding at a tie, where the k = 1 level is still the solution
    (1, (rate + log_prod[1]).exp2())
}

fn gaussian_tail<T: Real>(x: T) -> T {
    let v = 0.5 * libm::erfc(x.to_f64().expect("finite") / std::f64::consts::SQRT_2);
    T::lit(v)
}

/// Solve for the worst channel. `sv` need not be sorted; outputs follow the
/// ascending order.
pub fn solve_worst_channel<T: Real>(sv: &[T], rate: T, snr: T) -> Result<WorstCase<T>> {
    let s = sorted_checked(sv, rate)?;
    if !(snr.is_finite() && snr > T::zero()) {
        return Err(Error::Invalid(format!("SNR {snr} must be positive")));
    }
    let zeros = s.iter().take_while(|&&x| x == T::zero()).count();
    if zeros > 0 {
        // a zero singular value lets the channel put unbounded gain on a
        // direction that does not separate the pair
        let psi = s
            .iter()
            .map(|&x| if x == T::zero() { T::infinity() } else { T::zero() })
            .collect();
        return Ok(WorstCase {
            lambda: T::infinity(),
            water_level: T::zero(),
            k: zeros,
            allocations: vec![T::zero(); s.len()],
            psi,
            criterion: T::zero(),
            pairwise_error: T::lit(0.5),
        });
    }
    let (k, w) = active_set(&s, rate);
    let allocations: Vec<T> = s.iter().map(|&x| (w - x * x).max(T::zero())).collect();
    let criterion = allocations.iter().fold(T::zero(), |a, &q| a + q);
    let psi = allocations
        .iter()
        .zip(&s)
        .map(|(&q, &x)| (q / (snr * x * x)).sqrt())
        .collect();
    Ok(WorstCase {
        lambda: T::one() / w,
        water_level: w,
        k,
        allocations,
        psi,
        criterion,
        pairwise_error: gaussian_tail((criterion / T::lit(2.0)).sqrt()),
    })
}

/// `k (2^R prod_{l<=k} λ_l^2)^{1/k} - sum_{l<=k} λ_l^2`.
pub fn universal_criterion<T: Real>(sv: &[T], rate: T) -> Result<T> {
    let s = sorted_checked(sv, rate)?;
    if s[0] == T::zero() {
        return Ok(T::zero());
    }
    let (k, w) = active_set(&s, rate);
    let kk = T::lit(k as f64);
    let head = s[..k].iter().fold(T::zero(), |a, &x| a + x * x);
    Ok(kk * w - head)
}

/// `Q(sqrt(criterion / 2))`, `Q` the standard Gaussian tail.
pub fn worst_pairwise_error<T: Real>(sv: &[T], rate: T) -> Result<T> {
    let c = universal_criterion(sv, rate)?;
    Ok(gaussian_tail((c / T::lit(2.0)).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRow {
    pub i: usize,
    pub j: usize,
    /// Smallest `min(nr, nt)` singular values, ascending.
    pub sv: Vec<f64>,
    pub k: usize,
    pub lambda: f64,
    pub criterion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstReport {
    pub min_criterion: f64,
    pub pair: (usize, usize),
    pub table: Vec<PairRow>,
}

impl WorstReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,singular_values,k,lambda,criterion\n");
        for r in &self.table {
            let sv: Vec<String> = r.sv.iter().map(|x| format!("{x:e}")).collect();
            s.push_str(&format!("{},{},{},{},{:e},{:e}\n", r.i, r.j, sv.join(";"), r.k, r.lambda, r.criterion));
        }
        s
    }
}

/// Worst-case criterion for every codeword pair, using the smallest
/// `min(nr, nt)` singular values of each difference.
pub fn codebook_worst_report(code: &Codebook, rate: f64, nr: usize) -> Result<WorstReport> {
    if code.t < code.nt {
        return Err(Error::Shape {
            expected: format!("T >= nt = {}", code.nt),
            got: format!("T = {}", code.t),
        });
    }
    let n = code.len();
    if n < 2 {
        return Err(Error::EmptyCodebook(n));
    }
    let pairs = n as u64 * (n as u64 - 1) / 2;
    if pairs > PAIR_LIMIT {
        return Err(Error::TooManyPairs { pairs, limit: PAIR_LIMIT });
    }
    let keep = nr.min(code.nt);
    let cw = code.codewords();
    let rows: Vec<Result<PairRow>> = (0..n - 1)
        .into_par_iter()
        .flat_map_iter(|i| {
            (i + 1..n).map(move |j| {
                let d = cw[i].sub(&cw[j])?;
                let mut sv = d.singular_values()?;
                sv.reverse();
                sv.truncate(keep);
                if sv.iter().all(|&x| x == 0.0) {
                    return Err(Error::ZeroDifference(i, j));
                }
                let wc = solve_worst_channel(&sv, rate, 1.0)?;
                Ok(PairRow {
                    i,
                    j,
                    sv,
                    k: wc.k,
                    lambda: wc.lambda,
                    criterion: wc.criterion,
                })
            })
        })
        .collect();
    let table = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let best = table
        .iter()
        .fold(None::<&PairRow>, |b, r| match b {
            Some(x) if x.criterion <= r.criterion => Some(x),
            _ => Some(r),
        })
        .expect("at least one pair");
    Ok(WorstReport {
        min_criterion: best.criterion,
        pair: (best.i, best.j),
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_values_closed_form() {
        for m in 1..=4 {
            for &r in &[0.5, 2.0, 5.0] {
                let sv = vec![0.7f64; m];
                let c = universal_criterion(&sv, r).unwrap();
                let want = m as f64 * ((r / m as f64).exp2() - 1.0) * 0.49;
                assert!((c - want).abs() < 1e-12 * want.max(1.0));
            }
        }
        let c = universal_criterion(&[1.0f64, 1.0], 2.0).unwrap();
        assert!((c - 2.0).abs() < 1e-14);
    }

    #[test]
    fn skewed_values_use_one_branch() {
        let wc = solve_worst_channel(&[1e-3f64, 10.0], 1.0, 1.0).unwrap();
        assert_eq!(wc.k, 1);
        assert!((wc.criterion - 1e-6).abs() < 1e-18);
        assert_eq!(wc.allocations[1], 0.0);
    }

    #[test]
    fn matches_sum_of_allocations() {
        let sv = [0.2f64, 0.5, 0.9];
        let wc = solve_worst_channel(&sv, 3.0, 10.0).unwrap();
        let c = universal_criterion(&sv, 3.0).unwrap();
        assert!((wc.criterion - c).abs() < 1e-12);
        assert!(wc.rate_residual(&sv, 3.0).abs() < 1e-12);
    }

    #[test]
    fn pairwise_error_values() {
        let q0 = gaussian_tail(0.0f64);
        assert_eq!(q0, 0.5);
        let p = worst_pairwise_error(&[1.0f64, 1.0], 2.0).unwrap();
        assert!((p - 0.158_655_253_931_457_05).abs() < 1e-15);
    }

    #[test]
    fn zero_values() {
        let wc = solve_worst_channel(&[0.0f64, 1.0], 2.0, 1.0).unwrap();
        assert_eq!(wc.criterion, 0.0);
        assert_eq!(wc.pairwise_error, 0.5);
        assert!(wc.psi[0].is_infinite());
        assert!(solve_worst_channel(&[0.0f64, 0.0], 2.0, 1.0).is_err());
        assert!(universal_criterion(&[1.0f64], 0.0).is_err());
    }

    #[test]
    fn single_precision() {
        let c32 = universal_criterion(&[0.3f32, 0.8], 2.5).unwrap();
        let c64 = universal_criterion(&[0.3f64, 0.8], 2.5).unwrap();
        assert!((c32 as f64 - c64).abs() < 1e-5);
    }
}
