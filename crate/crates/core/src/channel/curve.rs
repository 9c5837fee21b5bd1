use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear diversity curve `d(r)` through its breakpoints; zero
/// beyond the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageCurve {
    pub breakpoints: Vec<(f64, f64)>,
}

impl OutageCurve {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::Invalid("curve needs breakpoints".into()));
        }
        if breakpoints.windows(2).any(|w| w[1].0 <= w[0].0 || w[1].1 > w[0].1) {
            return Err(Error::Invalid("breakpoints must increase in r and not increase in d".into()));
        }
        Ok(Self { breakpoints })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let b = &self.breakpoints;
        if r <= b[0].0 {
            return b[0].1;
        }
        for w in b.windows(2) {
            let ((r0, d0), (r1, d1)) = (w[0], w[1]);
            if r <= r1 {
                return d0 + (d1 - d0) * (r - r0) / (r1 - r0);
            }
        }
        0.0
    }

    /// Largest multiplexing gain on the curve.
    pub fn max_rate(&self) -> f64 {
        self.breakpoints.last().expect("nonempty").0
    }

    /// `(r0, d0, r1, d1)` per linear piece.
    pub fn segments(&self) -> Vec<(f64, f64, f64, f64)> {
        self.breakpoints
            .windows(2)
            .map(|w| (w[0].0, w[0].1, w[1].0, w[1].1))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,d\n");
        for (r, d) in &self.breakpoints {
            s.push_str(&format!("{r},{d}\n"));
        }
        s
    }
}

/// Near-zero exponents of the ordered squared singular values of an iid
/// Rayleigh `nr x nt` channel: `|nt - nr| + 2(l - 1)`.
pub fn rayleigh_exponents(nt: usize, nr: usize) -> Vec<f64> {
    let m = nt.min(nr);
    (0..m).map(|l| (nt.abs_diff(nr) + 2 * l) as f64).collect()
}

/// Outage curve for squared singular values with density near zero
/// `∝ prod φ_l^{k_l}`. At integer `r = s` the optimum drives the `m - s`
/// weakest values to zero at full speed, giving
/// `d(s) = sum_{l=1}^{m-s} (k_l + 1)`, linear in between.
pub fn outage_curve_analytic(exponents: &[f64]) -> Result<OutageCurve> {
    if exponents.is_empty() {
        return Err(Error::Invalid("need at least one exponent".into()));
    }
    if exponents.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("exponents must be strictly increasing".into()));
    }
    if exponents.iter().any(|&k| !(k > -1.0) || !k.is_finite()) {
        return Err(Error::Invalid("exponents must exceed -1".into()));
    }
    let m = exponents.len();
    let bps = (0..=m)
        .map(|s| {
            let d: f64 = exponents[..m - s].iter().map(|k| k + 1.0).sum();
            // an empty sum is -0.0
            (s as f64, d + 0.0)
        })
        .collect();
    OutageCurve::new(bps)
}

/// `a nt (1 - r)` on `[0, 1]`.
pub fn miso_outage_curve(a: f64, nt: usize) -> Result<OutageCurve> {
    if !(a > 0.0) || nt == 0 {
        return Err(Error::Invalid("need a > 0 and nt >= 1".into()));
    }
    OutageCurve::new(vec![(0.0, a * nt as f64), (1.0, 0.0)])
}

/// `r -> base(T r / (T - nt + 1))`: the rate loss of a D-BLAST block of
/// length `T` that spends `nt - 1` symbols filling the pipeline.
pub fn dblast_effective_curve(base: &OutageCurve, t: usize, nt: usize) -> Result<OutageCurve> {
    if t < nt || nt == 0 {
        return Err(Error::Invalid(format!("block length {t} shorter than {nt} antennas")));
    }
    let f = (t - nt + 1) as f64 / t as f64;
    OutageCurve::new(base.breakpoints.iter().map(|&(r, d)| (r * f, d)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rayleigh_two_by_two() {
        let c = outage_curve_analytic(&rayleigh_exponents(2, 2)).unwrap();
        assert_eq!(c.breakpoints, vec![(0.0, 4.0), (1.0, 1.0), (2.0, 0.0)]);
        assert_eq!(c.eval(0.5), 2.5);
    }

    #[test]
    fn rayleigh_breakpoints_follow_product_formula() {
        for nt in 1..=4 {
            for nr in 1..=4 {
                let c = outage_curve_analytic(&rayleigh_exponents(nt, nr)).unwrap();
                for &(r, d) in &c.breakpoints {
                    let k = r as usize;
                    assert_eq!(d, ((nt - k) * (nr - k)) as f64);
                }
            }
        }
    }

    #[test]
    fn single_branch() {
        let c = outage_curve_analytic(&[2.0]).unwrap();
        assert_eq!(c.eval(0.25), 3.0 * 0.75);
        assert!(outage_curve_analytic(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn miso_curve() {
        let c = miso_outage_curve(1.0, 2).unwrap();
        assert_eq!(c.eval(0.0), 2.0);
        assert_eq!(c.eval(1.0), 0.0);
        assert_eq!(c.eval(0.5), 1.0);
    }

    #[test]
    fn dblast_curve() {
        let base = outage_curve_analytic(&rayleigh_exponents(2, 2)).unwrap();
        let eff = dblast_effective_curve(&base, 3, 2).unwrap();
        assert_eq!(eff.eval(2.0 / 3.0), base.eval(1.0));
        let long = dblast_effective_curve(&base, 1_000_000, 2).unwrap();
        for i in 0..=20 {
            let r = i as f64 * 0.1;
            assert!(eff.eval(r) <= base.eval(r));
            assert!((long.eval(r) - base.eval(r)).abs() < 1e-4);
        }
        assert!(dblast_effective_curve(&base, 1, 2).is_err());
    }
}
