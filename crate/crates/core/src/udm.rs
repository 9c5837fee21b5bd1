//! Universally decodable matrices: `L` square matrices over GF(q) such that
//! stacking the first `k_l` rows of each `A_l` gives rank `n` whenever
//! `sum k_l >= n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galois::{binomial_mod, field_make, FieldMatrix, FieldSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "identity-pair")]
    IdentityPair,
    #[serde(rename = "tensor-T")]
    TensorT,
    #[serde(rename = "L4-F3")]
    L4F3,
    #[serde(rename = "pascal")]
    Pascal,
    #[serde(rename = "rs-mds")]
    RsMds,
    #[serde(rename = "custom")]
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UdmFamily {
    field: FieldSpec,
    n: usize,
    matrices: Vec<FieldMatrix>,
    provenance: Provenance,
    verified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UdmVerdict {
    Pass,
    /// First failing composition in lexicographic order.
    Fail(Vec<usize>),
}

impl UdmVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, UdmVerdict::Pass)
    }
}

impl UdmFamily {
    pub fn new(field: &FieldSpec, matrices: Vec<FieldMatrix>, provenance: Provenance) -> Result<Self> {
        let n = matrices.first().map_or(0, FieldMatrix::rows);
        if n == 0 {
            return Err(Error::Invalid("UDM family needs nonempty square matrices".into()));
        }
        for a in &matrices {
            if a.field() != field {
                return Err(Error::FieldMismatch);
            }
            if a.rows() != n || a.cols() != n {
                return Err(Error::Shape {
                    expected: format!("{n}x{n}"),
                    got: format!("{}x{}", a.rows(), a.cols()),
                });
            }
        }
        Ok(Self {
            field: field.clone(),
            n,
            matrices,
            provenance,
            verified: false,
        })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[FieldMatrix] {
        &self.matrices
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn verified(&self) -> bool {
        self.verified
    }

    /// Run [`udm_verify`] and record the outcome.
    pub fn certify(&mut self) -> UdmVerdict {
        let v = udm_verify(self);
        self.verified = v.passed();
        v
    }

    pub fn to_json(&self) -> Result<String> {
        let j = UdmJson {
            p: self.field.characteristic(),
            m: self.field.degree(),
            n: self.n,
            l: self.l(),
            provenance: self.provenance,
            matrices: self
                .matrices
                .iter()
                .map(|a| (0..a.rows()).map(|r| a.row(r).to_vec()).collect())
                .collect(),
        };
        Ok(serde_json::to_string(&j)?)
    }

    /// Parse a family; the verified flag starts cleared.
    pub fn from_json(text: &str) -> Result<Self> {
        let j: UdmJson = serde_json::from_str(text)?;
        let field = field_make(j.p, j.m)?;
        if j.matrices.len() != j.l {
            return Err(Error::Invalid(format!("L = {} but {} matrices given", j.l, j.matrices.len())));
        }
        let mats = j
            .matrices
            .iter()
            .map(|rows| FieldMatrix::from_rows(&field, rows))
            .collect::<Result<Vec<_>>>()?;
        let fam = Self::new(&field, mats, j.provenance)?;
        if fam.n != j.n {
            return Err(Error::Invalid(format!("n = {} but matrices are {}x{}", j.n, fam.n, fam.n)));
        }
        Ok(fam)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UdmJson {
    p: u32,
    m: u32,
    n: usize,
    #[serde(rename = "L")]
    l: usize,
    provenance: Provenance,
    matrices: Vec<Vec<Vec<u32>>>,
}

fn gf2() -> FieldSpec {
    field_make(2, 1).expect("GF(2)")
}

fn gf3() -> FieldSpec {
    field_make(3, 1).expect("GF(3)")
}

/// `{I_n, D_n}` over GF(2), `D_n` the unit anti-diagonal.
pub fn build_identity_pair(n: usize) -> Result<UdmFamily> {
    if n == 0 {
        return Err(Error::Invalid("n must be positive".into()));
    }
    let f = gf2();
    UdmFamily::new(&f, vec![FieldMatrix::identity(&f, n), FieldMatrix::cross_diagonal(&f, n)], Provenance::IdentityPair)
}

/// Leading `n x n` block of the smallest Kronecker power of `base` that is
/// at least `n` wide.
fn kron_power_principal(base: &FieldMatrix, n: usize) -> FieldMatrix {
    let f = base.field();
    let mut t = FieldMatrix::identity(f, 1);
    while t.rows() < n {
        t = base.kron(&t).expect("same field");
    }
    t.principal(n)
}

/// `{I_n, D_n, T_n}` over GF(2) with `T_2n = T_2 ⊗ T_n`, `T_1 = [1]`.
pub fn build_tensor_t(n: usize) -> Result<UdmFamily> {
    if n == 0 {
        return Err(Error::Invalid("n must be positive".into()));
    }
    let f = gf2();
    let t2 = FieldMatrix::from_rows(&f, &[vec![1, 1], vec![0, 1]])?;
    UdmFamily::new(
        &f,
        vec![
            FieldMatrix::identity(&f, n),
            FieldMatrix::cross_diagonal(&f, n),
            kron_power_principal(&t2, n),
        ],
        Provenance::TensorT,
    )
}

pub fn t3_gf3() -> FieldMatrix {
    FieldMatrix::from_rows(&gf3(), &[vec![1, 2, 1], vec![0, 1, 1], vec![0, 0, 1]]).expect("valid")
}

pub fn r3_gf3() -> FieldMatrix {
    FieldMatrix::from_rows(&gf3(), &[vec![1, 1, 1], vec![0, 1, 2], vec![0, 0, 1]]).expect("valid")
}

/// `{I_n, D_n, T_n, R_n}` over GF(3) from Kronecker powers of `T_3`, `R_3`.
pub fn build_l4_f3(n: usize) -> Result<UdmFamily> {
    if n == 0 {
        return Err(Error::Invalid("n must be positive".into()));
    }
    let f = gf3();
    UdmFamily::new(
        &f,
        vec![
            FieldMatrix::identity(&f, n),
            FieldMatrix::cross_diagonal(&f, n),
            kron_power_principal(&t3_gf3(), n),
            kron_power_principal(&r3_gf3(), n),
        ],
        Provenance::L4F3,
    )
}

/// `A_1 = I`, `A_2 = D`, and for `l >= 3` the upper-triangular Pascal matrix
/// `[A_l]_{j,k} = C(k, j) alpha^{(l-2)(k-j)}` with `j, k` counted from zero.
pub fn build_pascal(n: usize, l: usize, field: &FieldSpec) -> Result<UdmFamily> {
    let q = field.order() as usize;
    if n == 0 || l == 0 {
        return Err(Error::Invalid("n and L must be positive".into()));
    }
    if l > q + 1 {
        return Err(Error::Invalid(format!("L = {l} exceeds q + 1 = {}", q + 1)));
    }
    let mut mats = vec![FieldMatrix::identity(field, n)];
    if l >= 2 {
        mats.push(FieldMatrix::cross_diagonal(field, n));
    }
    for ell in 3..=l {
        let mut a = FieldMatrix::zeros(field, n, n);
        for j in 0..n {
            for k in j..n {
                let c = binomial_mod(k as u64, j as u64, field.characteristic());
                let w = field.alpha_pow(((ell - 2) * (k - j)) as i64);
                a.set(j, k, field.mul(c, w));
            }
        }
        mats.push(a);
    }
    UdmFamily::new(field, mats, Provenance::Pascal)
}

/// Extended Reed-Solomon generator: `n x (q + 1)` Vandermonde columns
/// `(1, x, ..., x^{n-1})` for `x = 0, 1, alpha, ..., alpha^{q-2}`, then the
/// point at infinity `(0, ..., 0, 1)`. Any `n` columns are independent.
/// The first `L n` columns, sliced into `L` blocks and transposed, give a
/// family where any `n` rows drawn from any of the matrices span.
pub fn build_rs_mds(n: usize, l: usize, field: &FieldSpec) -> Result<(FieldMatrix, UdmFamily)> {
    let q = field.order() as usize;
    if n == 0 || l == 0 {
        return Err(Error::Invalid("n and L must be positive".into()));
    }
    if q + 1 < l * n {
        return Err(Error::Invalid(format!("GF({q}) too small for {} MDS columns", l * n)));
    }
    let mut points: Vec<Option<u32>> = vec![Some(0)];
    points.extend((0..q - 1).map(|i| Some(field.alpha_pow(i as i64))));
    points.push(None);
    let cols = l * n;
    let mut g = FieldMatrix::zeros(field, n, cols);
    for (c, pt) in points.iter().take(cols).enumerate() {
        match pt {
            Some(x) => {
                for r in 0..n {
                    g.set(r, c, field.pow(*x, r as i64)?);
                }
            }
            None => g.set(n - 1, c, 1),
        }
    }
    let gt = g.transpose();
    let mats = (0..l)
        .map(|b| gt.select_rows(&(b * n..(b + 1) * n).collect::<Vec<_>>()))
        .collect();
    Ok((g, UdmFamily::new(field, mats, Provenance::RsMds)?))
}

/// All `k in N^parts` with `sum k = total`, lexicographic order.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(left - k, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

/// Rank of the stack of the first `k_l` rows of each matrix.
pub fn stacked_rank(mats: &[FieldMatrix], k: &[usize]) -> usize {
    let field = mats[0].field();
    let n = mats[0].cols();
    let mut data = Vec::new();
    let mut rows = 0;
    for (a, &kl) in mats.iter().zip(k) {
        for r in 0..kl {
            data.extend_from_slice(a.row(r));
        }
        rows += kl;
    }
    FieldMatrix::new(field, rows, n, data).expect("consistent shapes").rank()
}

/// Check every composition `sum k_l = n`. Larger totals cannot fail when
/// these pass, since adding rows never lowers rank and any `k` with
/// `sum k > n` dominates some composition of `n`.
pub fn udm_verify(family: &UdmFamily) -> UdmVerdict {
    let comps = compositions(family.n, family.l());
    match comps
        .par_iter()
        .position_first(|k| stacked_rank(&family.matrices, k) < family.n)
    {
        Some(i) => UdmVerdict::Fail(comps[i].clone()),
        None => UdmVerdict::Pass,
    }
}

/// Exhaustively search all `L`-tuples of `n x n` matrices over `field` for a
/// UDM family. Returns the first found, in lexicographic order of the
/// concatenated entry codes. Refuses search spaces beyond `2^32`.
pub fn exhaustive_udm_search(field: &FieldSpec, n: usize, l: usize) -> Result<Option<Vec<FieldMatrix>>> {
    let q = field.order() as u64;
    let per = q
        .checked_pow((n * n) as u32)
        .ok_or_else(|| Error::Invalid("search space too large".into()))?;
    if per.checked_pow(l as u32).is_none_or(|t| t > 1 << 32) {
        return Err(Error::Invalid("search space too large".into()));
    }
    let decode = |mut code: u64| {
        let data: Vec<u32> = (0..n * n)
            .map(|_| {
                let d = (code % q) as u32;
                code /= q;
                d
            })
            .collect();
        FieldMatrix::new(field, n, n, data).expect("codes in range")
    };
    // Every member must be invertible (composition with one k_l = n).
    let invertible: Vec<FieldMatrix> = (0..per).map(decode).filter(|a| a.rank() == n).collect();
    let comps = compositions(n, l);
    let count = invertible.len();
    let total = (count as u64).pow(l as u32);
    let found = (0..total).into_par_iter().find_first(|&idx| {
        let mut x = idx;
        let mats: Vec<FieldMatrix> = (0..l)
            .map(|_| {
                let m = invertible[(x % count as u64) as usize].clone();
                x /= count as u64;
                m
            })
            .collect();
        comps.iter().all(|k| stacked_rank(&mats, k) == n)
    });
    Ok(found.map(|idx| {
        let mut x = idx;
        (0..l)
            .map(|_| {
                let m = invertible[(x % count as u64) as usize].clone();
                x /= count as u64;
                m
            })
            .collect()
    }))
}
