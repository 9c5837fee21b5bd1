use num_complex::Complex64;
use rand::Rng;

use super::codebook::{Codebook, Normalization};
use super::pam::{pam_points, rect_qam_points, square_qam_points, PamSpec};
use super::perm::{random_perm, DigitPermutation};
use crate::error::{Error, Result};
use crate::udm::UdmFamily;
use crate::CMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn column(entries: Vec<Complex64>) -> CMatrix {
    let n = entries.len();
    CMatrix::new(n, 1, entries).expect("finite entries")
}

fn scalar_codebook(family: &str, pts: Vec<Complex64>) -> Result<Codebook> {
    Codebook::new(family, 1, 1, Normalization::FixedSpacing, pts.into_iter().map(|z| column(vec![z])).collect())
}

/// Square `2^R`-QAM from two `2^{R/2}`-PAMs, `d_min^2 = 2 * 2^-R`.
pub fn make_qam(bits: u32) -> Result<Codebook> {
    if bits == 0 || bits % 2 == 1 || bits > 16 {
        return Err(Error::Invalid(format!("QAM needs an even number of bits in 2..=16, got {bits}")));
    }
    scalar_codebook("qam", square_qam_points(1 << (bits / 2)))
}

/// Scalar QAM with rectangular shape when `bits` is odd.
pub fn make_rect_qam(bits: u32) -> Result<Codebook> {
    if bits == 0 || bits > 16 {
        return Err(Error::Invalid(format!("QAM needs 1..=16 bits, got {bits}")));
    }
    scalar_codebook("qam", rect_qam_points(bits))
}

/// Square QAM with `per_rail` levels per rail (not necessarily a power of
/// two).
pub fn make_square_qam(per_rail: usize) -> Result<Codebook> {
    if per_rail < 2 {
        return Err(Error::Invalid(format!("need at least 2 levels per rail, got {per_rail}")));
    }
    scalar_codebook("qam", square_qam_points(per_rail))
}

/// Parallel code over `L` branches: branch 1 carries the QAM point with
/// rail indices `(a, b)`, branch `l` carries `(f_l(a), f_l(b))`.
pub fn permutation_codebook(l: usize, bits: u32, perms: &[DigitPermutation], pam: &PamSpec) -> Result<Codebook> {
    let n = pam.size();
    if bits % 2 == 1 || (n * n) as u64 != 1u64 << bits {
        return Err(Error::Invalid(format!(
            "{n}-point PAM per rail does not carry {bits} bits"
        )));
    }
    if l == 0 || perms.len() + 1 != l {
        return Err(Error::Invalid(format!("{l} branches need {} permutations, got {}", l.saturating_sub(1), perms.len())));
    }
    if let Some(p) = perms.iter().find(|p| p.len() != n) {
        return Err(Error::Shape {
            expected: format!("permutations of {n} PAM indices"),
            got: format!("{}", p.len()),
        });
    }
    let pts = pam_points(pam);
    let mut cw = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let mut e = Vec::with_capacity(l);
            e.push(Complex64::new(pts[a], pts[b]));
            for p in perms {
                e.push(Complex64::new(pts[p.apply(a)], pts[p.apply(b)]));
            }
            cw.push(column(e));
        }
    }
    let family = if perms.iter().all(DigitPermutation::is_identity) {
        "repetition"
    } else {
        "permutation"
    };
    Codebook::new(family, l, 1, Normalization::FixedSpacing, cw)
}

/// Parallel code whose branch `l` carries QAM point `f_l(i)` for message
/// `i`, the permutations acting on whole QAM points.
pub fn qam_permutation_codebook(bits: u32, perms: &[DigitPermutation]) -> Result<Codebook> {
    let base = make_qam(bits)?;
    let pts: Vec<Complex64> = base.codewords().iter().map(|x| x.get(0, 0)).collect();
    if let Some(p) = perms.iter().find(|p| p.len() != pts.len()) {
        return Err(Error::Shape {
            expected: format!("permutations of {} QAM points", pts.len()),
            got: format!("{}", p.len()),
        });
    }
    let cw = (0..pts.len())
        .map(|i| {
            let mut e = vec![pts[i]];
            e.extend(perms.iter().map(|p| pts[p.apply(i)]));
            column(e)
        })
        .collect();
    Codebook::new("qam-permutation", perms.len() + 1, 1, Normalization::FixedSpacing, cw)
}

/// Sum over codeword pairs of the inverse product distance, the objective of
/// the random permutation search. Infinite if some pair collides.
pub fn inverse_pd_sum(code: &Codebook) -> f64 {
    let cw = code.codewords();
    let mut s = 0.0;
    for i in 0..cw.len() {
        for j in i + 1..cw.len() {
            let pd: f64 = (0..code.nt).map(|r| (cw[i].get(r, 0) - cw[j].get(r, 0)).norm_sqr()).product();
            s += 1.0 / pd;
        }
    }
    s
}

/// Draw `draws` sets of `L - 1` uniform permutations of the `2^bits`-QAM
/// and keep the code with the smallest inverse product distance sum.
pub fn random_permutation_search<R: Rng + ?Sized>(
    l: usize,
    bits: u32,
    draws: usize,
    rng: &mut R,
) -> Result<(Codebook, Vec<DigitPermutation>)> {
    if l < 2 || draws == 0 {
        return Err(Error::Invalid("need L >= 2 and at least one draw".into()));
    }
    let size = 1usize << bits;
    let mut best: Option<(f64, Codebook, Vec<DigitPermutation>)> = None;
    for _ in 0..draws {
        let perms: Vec<DigitPermutation> = (1..l).map(|_| random_perm(size, rng)).collect();
        let code = qam_permutation_codebook(bits, &perms)?;
        let score = inverse_pd_sum(&code);
        if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
            best = Some((score, code, perms));
        }
    }
    let (_, mut code, perms) = best.expect("at least one draw");
    code.family = "random-permutation".into();
    Ok((code, perms))
}

/// Parallel code from a UDM family: each rail carries `n` base-`q` digits
/// `u`, and branch `l` sends the PAM point whose most-significant-first
/// digits are `A_l u`.
pub fn udm_codebook(family: &UdmFamily, pam: &PamSpec) -> Result<Codebook> {
    let field = family.field();
    if field.order() != pam.q || family.n() != pam.n as usize {
        return Err(Error::Invalid(format!(
            "UDM over GF({}) of size {} does not match PAM with q = {}, n = {}",
            field.order(),
            family.n(),
            pam.q,
            pam.n
        )));
    }
    let size = pam.size();
    let pts = pam_points(pam);
    // branch index map per rail message
    let maps: Vec<Vec<usize>> = family
        .matrices()
        .iter()
        .map(|a| {
            (0..size)
                .map(|i| {
                    let v = a.mul_vec(&pam.digits(i)).expect("square family matrix");
                    pam.from_digits(&v)
                })
                .collect()
        })
        .collect();
    let mut cw = Vec::with_capacity(size * size);
    for a in 0..size {
        for b in 0..size {
            cw.push(column(maps.iter().map(|m| Complex64::new(pts[m[a]], pts[m[b]])).collect()));
        }
    }
    Codebook::new("udm", family.l(), 1, Normalization::FixedSpacing, cw)
}

pub fn rotation_angles() -> (f64, f64) {
    (0.5 * 2f64.atan(), 0.5 * 0.5f64.atan())
}

/// Two-antenna rotated QAM code over two symbol times. The four symbols
/// `u_i` are `2^{R/2}`-point QAMs (rectangular when `R/2` is odd):
/// `(x11, x22) = Q(θ1)(u1, u2)`, `(x21, x12) = Q(θ2)(u3, u4)`.
pub fn rotated_qam_codebook(bits: u32) -> Result<Codebook> {
    if bits == 0 || bits % 2 == 1 || bits > 10 {
        return Err(Error::Invalid(format!("rotated QAM needs an even rate in 2..=10, got {bits}")));
    }
    let u = rect_qam_points(bits / 2);
    let (t1, t2) = rotation_angles();
    let (c1, s1, c2, s2) = (t1.cos(), t1.sin(), t2.cos(), t2.sin());
    let m = u.len();
    let mut cw = Vec::with_capacity(m.pow(4));
    for &u1 in &u {
        for &u2 in &u {
            let x11 = u1 * c1 - u2 * s1;
            let x22 = u1 * s1 + u2 * c1;
            for &u3 in &u {
                for &u4 in &u {
                    let x21 = u3 * c2 - u4 * s2;
                    let x12 = u3 * s2 + u4 * c2;
                    cw.push(CMatrix::new(2, 2, vec![x11, x12, x21, x22])?);
                }
            }
        }
    }
    Codebook::new("rotated-qam", 2, 2, Normalization::FixedSpacing, cw)
}

/// Alamouti stacking `[[x1, -x2*], [x2, x1*]]` of pairs of scalar symbols.
pub fn alamouti_codebook(scalar: &Codebook) -> Result<Codebook> {
    if scalar.nt != 1 || scalar.t != 1 {
        return Err(Error::Shape {
            expected: "scalar codebook".into(),
            got: format!("{}x{}", scalar.nt, scalar.t),
        });
    }
    let pts: Vec<Complex64> = scalar.codewords().iter().map(|x| x.get(0, 0)).collect();
    let mut cw = Vec::with_capacity(pts.len() * pts.len());
    for &x1 in &pts {
        for &x2 in &pts {
            cw.push(CMatrix::new(2, 2, vec![x1, -x2.conj(), x2, x1.conj()])?);
        }
    }
    Codebook::new("alamouti", 2, 2, scalar.normalization, cw)
}

/// Independent uncoded QAMs on each antenna, one symbol time.
pub fn vblast_codebook(nt: usize, bits_per_antenna: u32) -> Result<Codebook> {
    let q = make_qam(bits_per_antenna)?;
    let pts: Vec<Complex64> = q.codewords().iter().map(|x| x.get(0, 0)).collect();
    vblast_from_points(nt, &pts)
}

/// V-BLAST codebook from an arbitrary per-antenna constellation. Codeword
/// index is the base-`|points|` number with antenna 1 most significant.
pub fn vblast_from_points(nt: usize, points: &[Complex64]) -> Result<Codebook> {
    if nt == 0 || points.is_empty() {
        return Err(Error::Invalid("V-BLAST needs antennas and points".into()));
    }
    let m = points.len();
    let total = m.checked_pow(nt as u32).filter(|&t| t <= 1 << 24);
    let total = total.ok_or_else(|| Error::Invalid(format!("{m}^{nt} codewords is too many")))?;
    let cw = (0..total)
        .map(|mut idx| {
            let mut e = vec![ZERO; nt];
            for slot in e.iter_mut().rev() {
                *slot = points[idx % m];
                idx /= m;
            }
            column(e)
        })
        .collect();
    Codebook::new("vblast", nt, 1, Normalization::FixedSpacing, cw)
}

fn stream_branches(stream: &Codebook, nt: usize) -> Result<Vec<Vec<Complex64>>> {
    if stream.t != 1 || stream.nt != nt {
        return Err(Error::Shape {
            expected: format!("parallel stream code with {nt} branches"),
            got: format!("{}x{}", stream.nt, stream.t),
        });
    }
    Ok(stream.codewords().iter().map(|x| x.column(0)).collect())
}

/// Two-stream D-BLAST layout on `nt` antennas over `nt + 1` symbol times.
/// Stream `p` occupies the diagonal ending at time `nt - 1`, stream `q` the
/// next one; component `j` of each stream goes to antenna `nt - j`. For
/// `nt = 2` the codeword is `[[0, p2, q2], [p1, q1, 0]]`. Codeword `a * N + b`
/// carries stream codewords `a` and `b`.
pub fn dblast_two_stream_codebook(nt: usize, stream: &Codebook) -> Result<Codebook> {
    let s = stream_branches(stream, nt)?;
    let mut cw = Vec::with_capacity(s.len() * s.len());
    for p in &s {
        for q in &s {
            let mut x = CMatrix::zeros(nt, nt + 1);
            for j in 1..=nt {
                x.set(nt - j, j - 1, p[j - 1]);
                x.set(nt - j, j, q[j - 1]);
            }
            cw.push(x);
        }
    }
    Codebook::new("dblast", nt, nt + 1, stream.normalization, cw)
}

/// Time-space version of the D-BLAST code: antenna and time swapped, giving
/// `(nt + 1) x nt` codewords.
pub fn timespace_codebook(nt: usize, stream: &Codebook) -> Result<Codebook> {
    let st = dblast_two_stream_codebook(nt, stream)?;
    let cw = st.codewords().iter().map(CMatrix::transpose).collect();
    Codebook::new("timespace", nt + 1, nt, stream.normalization, cw)
}

/// Stream code component `l` sent from antenna `l` at time `l`.
pub fn diagonal_miso_codebook(stream: &Codebook) -> Result<Codebook> {
    let s = stream_branches(stream, stream.nt)?;
    let cw = s.iter().map(|p| CMatrix::diag(p)).collect();
    Codebook::new("diagonal-miso", stream.nt, stream.nt, stream.normalization, cw)
}
