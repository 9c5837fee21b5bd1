use num_complex::Complex64;
use serde::Serialize;

use super::sim::ml_decode;
use crate::constellation::{dblast_two_stream_codebook, pam_points, permutation_codebook, Codebook, DigitPermutation, PamSpec};
use crate::error::{Error, Result};
use crate::CMatrix;

/// Two-antenna D-BLAST code whose streams are two-branch permutation codes:
/// component 1 is the `2^{2b}`-QAM point with rail indices `(a, c)`,
/// component 2 the point `(f(a), f(c))`.
#[derive(Debug, Clone)]
pub struct DblastTwoStream {
    pub nbits: u32,
    pub perm: DigitPermutation,
    pam: PamSpec,
    rail: Vec<f64>,
    stream: Codebook,
    code: Codebook,
}

impl DblastTwoStream {
    /// `nbits` per rail, so each stream carries `2 nbits` bits.
    pub fn new(nbits: u32, perm: DigitPermutation) -> Result<Self> {
        let pam = PamSpec::binary(nbits)?;
        let stream = permutation_codebook(2, 2 * nbits, std::slice::from_ref(&perm), &pam)?;
        let code = dblast_two_stream_codebook(2, &stream)?;
        Ok(Self {
            nbits,
            perm,
            rail: pam_points(&pam),
            pam,
            stream,
            code,
        })
    }

    pub fn pam(&self) -> &PamSpec {
        &self.pam
    }

    pub fn stream(&self) -> &Codebook {
        &self.stream
    }

    pub fn codebook(&self) -> &Codebook {
        &self.code
    }

    fn rail_index(&self, x: f64) -> usize {
        let s = self.pam.spacing();
        let n = self.rail.len();
        let i = ((x - self.rail[0]) / s).round();
        i.clamp(0.0, (n - 1) as f64) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StagedDecision {
    /// Joint codeword index `p * N + q`.
    pub index: usize,
    pub p: usize,
    pub q: usize,
    /// True when the margin tests failed and joint ML was run instead.
    pub used_fallback: bool,
}

fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `||y - a h x||^2` for column vectors.
fn residual(y: &[Complex64], h: &[Complex64], x: Complex64, a: f64) -> f64 {
    y.iter().zip(h).map(|(&yi, &hi)| (yi - hi * x * a).norm_sqr()).sum()
}

/// Staged decoding of the `nt = 2` two-stream code
/// `[[0, p2, q2], [p1, q1, 0]]`.
///
/// Time 1 sees only `p1` through `h2` and time 3 only `q2` through `h1`.
/// Each is matched-filtered and the top `floor(log2(1 + SNR |h|^2) / 2)`
/// bits of both rails are fixed, leaving sparse candidate sets `P'` and `Q'`
/// for the stream messages. Time 2 then carries a 2x2 V-BLAST problem over
/// `P' x Q'`, solved exhaustively with the full metric
/// `M(p, q) = t1(p) + t2(p, q) + t3(q)`.
///
/// Since `M(p, q) >= t1(p)` and `M(p, q) >= t3(q)`, the restricted optimum
/// `M*` is the joint ML decision whenever every excluded `p` has
/// `t1(p) > M*` and every excluded `q` has `t3(q) > M*`. Otherwise, or when
/// a channel is too weak to fix any bit, the decoder runs joint ML.
pub fn staged_dblast_decode(code: &DblastTwoStream, y: &CMatrix, h: &CMatrix, snr: f64) -> Result<StagedDecision> {
    let nr = h.rows();
    if h.cols() != 2 || y.rows() != nr || y.cols() != 3 {
        return Err(Error::Shape {
            expected: "H r x 2 and Y r x 3".into(),
            got: format!("H {}x{}, Y {}x{}", h.rows(), h.cols(), y.rows(), y.cols()),
        });
    }
    let n = code.stream.len();
    let side = code.rail.len();
    let a = snr.sqrt();
    let (h1, h2) = (h.column(0), h.column(1));
    let (y1, y2, y3) = (y.column(0), y.column(1), y.column(2));

    let fallback = || -> Result<StagedDecision> {
        let index = ml_decode(&code.code, y, h, snr)?;
        Ok(StagedDecision { index, p: index / n, q: index % n, used_fallback: true })
    };

    // stream message m has rail indices (m / side, m % side) in component 1
    // and their images under the permutation in component 2
    let prefix = |hv: &[Complex64], yv: &[Complex64]| -> Option<(u32, usize, usize)> {
        let g = norm_sq(hv);
        let k = (((snr * g).ln_1p() / std::f64::consts::LN_2 / 2.0).floor() as u32).min(code.nbits);
        if k == 0 {
            return None;
        }
        let z: Complex64 = hv.iter().zip(yv).map(|(hi, yi)| hi.conj() * yi).sum::<Complex64>() / (a * g);
        Some((k, code.rail_index(z.re), code.rail_index(z.im)))
    };
    let (Some(pp), Some(qp)) = (prefix(&h2, &y1), prefix(&h1, &y3)) else {
        return fallback();
    };
    let keep = |(k, ri, rq): (u32, usize, usize), (a, b): (usize, usize)| {
        let shift = code.nbits - k;
        a >> shift == ri >> shift && b >> shift == rq >> shift
    };
    let f = |i: usize| code.perm.apply(i);

    let comps: Vec<Vec<Complex64>> = code.stream.codewords().iter().map(|x| x.column(0)).collect();
    let t1: Vec<f64> = comps.iter().map(|c| residual(&y1, &h2, c[0], a)).collect();
    let t3: Vec<f64> = comps.iter().map(|c| residual(&y3, &h1, c[1], a)).collect();
    let ps: Vec<usize> = (0..n).filter(|&m| keep(pp, (m / side, m % side))).collect();
    let qs: Vec<usize> = (0..n).filter(|&m| keep(qp, (f(m / side), f(m % side)))).collect();

    let mut best = (f64::INFINITY, 0, 0);
    for &p in &ps {
        for &q in &qs {
            let base = t1[p] + t3[q];
            if base > best.0 {
                continue;
            }
            let t2: f64 = (0..nr)
                .map(|r| (y2[r] - (h1[r] * comps[p][1] + h2[r] * comps[q][0]) * a).norm_sqr())
                .sum();
            let m = t1[p] + t2 + t3[q];
            if m < best.0 {
                best = (m, p, q);
            }
        }
    }
    let min_excluded = |t: &[f64], kept: &[usize]| {
        let mut mask = vec![false; n];
        kept.iter().for_each(|&i| mask[i] = true);
        (0..n).filter(|&i| !mask[i]).map(|i| t[i]).fold(f64::INFINITY, f64::min)
    };
    if best.0 < min_excluded(&t1, &ps) && best.0 < min_excluded(&t3, &qs) {
        let (_, p, q) = best;
        return Ok(StagedDecision { index: p * n + q, p, q, used_fallback: false });
    }
    fallback()
}
