//! Finite fields GF(p^m) and linear algebra over them.
//!
//! Elements are stored as integer codes: the polynomial `c_0 + c_1 x + ... +
//! c_{m-1} x^{m-1}` has code `c_0 + c_1 p + ... + c_{m-1} p^{m-1}`. Codes
//! `0` and `1` are the additive and multiplicative identities. Multiplication
//! goes through exp/log tables built from the canonical primitive element.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest supported field order.
pub const MAX_FIELD_ORDER: u64 = 1 << 16;

struct Tables {
    p: u32,
    m: u32,
    order: u32,
    /// Monic modulus, low-order coefficient first, length `m + 1`.
    modulus: Vec<u32>,
    alpha: u32,
    /// `exp[i] = alpha^i` for `0 <= i < order - 1`.
    exp: Vec<u32>,
    /// `log[exp[i]] = i`; `log[0]` unused.
    log: Vec<u32>,
}

/// A concrete finite field with a fixed irreducible modulus and primitive
/// element. Cloning is cheap (shared tables).
#[derive(Clone)]
pub struct FieldSpec(Arc<Tables>);

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("p", &self.0.p)
            .field("m", &self.0.m)
            .field("modulus", &self.0.modulus)
            .field("alpha", &self.0.alpha)
            .finish()
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.m == other.0.m && self.0.modulus == other.0.modulus)
    }
}

impl Eq for FieldSpec {}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// Polynomial helpers over GF(p), coefficients low-order first.

fn poly_trim(a: &mut Vec<u32>) {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
}

fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    // b is monic
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let db = b.len() - 1;
    while r.len() > db && !(r.len() == 1 && r[0] == 0) {
        let shift = r.len() - 1 - db;
        let lead = *r.last().unwrap();
        if lead != 0 {
            for (i, &bc) in b.iter().enumerate() {
                let idx = shift + i;
                r[idx] = (r[idx] + p - (lead * bc) % p) % p;
            }
        }
        r.pop();
        poly_trim(&mut r);
        if r.len() <= db {
            break;
        }
    }
    r
}

fn poly_mulmod(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
    let mut prod = vec![0u32; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    poly_rem(&prod, modulus, p)
}

fn poly_powmod(base: &[u32], mut e: u64, modulus: &[u32], p: u32) -> Vec<u32> {
    let mut result = vec![1u32];
    let mut b = base.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mulmod(&result, &b, modulus, p);
        }
        b = poly_mulmod(&b, &b, modulus, p);
        e >>= 1;
    }
    result
}

fn code_to_poly(mut code: u32, p: u32, m: u32) -> Vec<u32> {
    let mut v = Vec::with_capacity(m as usize);
    for _ in 0..m {
        v.push(code % p);
        code /= p;
    }
    v
}

fn poly_to_code(poly: &[u32], p: u32) -> u32 {
    poly.iter().rev().fold(0u32, |acc, &c| acc * p + c)
}

fn is_one(poly: &[u32]) -> bool {
    poly[0] == 1 && poly[1..].iter().all(|&c| c == 0)
}

fn is_irreducible(f: &[u32], p: u32) -> bool {
    let m = f.len() - 1;
    for d in 1..=m / 2 {
        let count = (p as u64).pow(d as u32);
        for low in 0..count {
            let mut g = code_to_poly(low as u32, p, d as u32);
            g.push(1);
            let r = poly_rem(f, &g, p);
            if r.iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

/// Build GF(p^m) with the lexicographically smallest monic irreducible
/// modulus and the smallest primitive element under that modulus.
pub fn field_make(p: u32, m: u32) -> Result<FieldSpec> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if m == 0 {
        return Err(Error::ZeroDegree);
    }
    let order = (p as u64).checked_pow(m).filter(|&q| q <= MAX_FIELD_ORDER);
    let order = order.ok_or(Error::FieldTooLarge { p, m })? as u32;

    let modulus = (0..p.pow(m))
        .map(|low| {
            let mut f = code_to_poly(low, p, m);
            f.push(1);
            f
        })
        .find(|f| is_irreducible(f, p))
        .expect("an irreducible polynomial of every degree exists");

    let group = order - 1;
    let factors = prime_factors(group);
    let alpha = (1..order)
        .find(|&code| {
            let a = code_to_poly(code, p, m);
            is_one(&pad(poly_powmod(&a, group as u64, &modulus, p), m))
                && factors
                    .iter()
                    .all(|&f| !is_one(&pad(poly_powmod(&a, (group / f) as u64, &modulus, p), m)))
        })
        .expect("multiplicative group of a finite field is cyclic");

    let mut exp = Vec::with_capacity(group as usize);
    let mut log = vec![0u32; order as usize];
    let alpha_poly = code_to_poly(alpha, p, m);
    let mut cur = vec![1u32];
    for i in 0..group {
        let code = poly_to_code(&pad(cur.clone(), m), p);
        exp.push(code);
        log[code as usize] = i;
        cur = poly_mulmod(&cur, &alpha_poly, &modulus, p);
    }

    Ok(FieldSpec(Arc::new(Tables {
        p,
        m,
        order,
        modulus,
        alpha,
        exp,
        log,
    })))
}

fn pad(mut v: Vec<u32>, m: u32) -> Vec<u32> {
    v.resize(m.max(1) as usize, 0);
    v
}

impl FieldSpec {
    pub fn characteristic(&self) -> u32 {
        self.0.p
    }

    pub fn degree(&self) -> u32 {
        self.0.m
    }

    /// Number of elements `q = p^m`.
    pub fn order(&self) -> u32 {
        self.0.order
    }

    /// Monic irreducible modulus, low-order coefficient first.
    pub fn modulus(&self) -> &[u32] {
        &self.0.modulus
    }

    pub fn alpha(&self) -> FieldElement {
        self.element(self.0.alpha)
    }

    pub fn alpha_code(&self) -> u32 {
        self.0.alpha
    }

    pub fn zero(&self) -> FieldElement {
        self.element(0)
    }

    pub fn one(&self) -> FieldElement {
        self.element(1)
    }

    /// Wrap a code as an element. Panics if the code is out of range.
    pub fn element(&self, code: u32) -> FieldElement {
        assert!(code < self.0.order, "code {code} outside GF({})", self.0.order);
        FieldElement {
            field: self.clone(),
            code,
        }
    }

    pub fn from_coefficients(&self, coeffs: &[u32]) -> Result<FieldElement> {
        if coeffs.len() != self.0.m as usize || coeffs.iter().any(|&c| c >= self.0.p) {
            return Err(Error::Invalid(format!(
                "coefficient vector {coeffs:?} is not a GF({})^{} element",
                self.0.p, self.0.m
            )));
        }
        Ok(self.element(poly_to_code(coeffs, self.0.p)))
    }

    pub fn contains(&self, code: u32) -> bool {
        code < self.0.order
    }

    // Raw arithmetic on codes.

    pub fn add(&self, a: u32, b: u32) -> u32 {
        let p = self.0.p;
        if p == 2 {
            return a ^ b;
        }
        if self.0.m == 1 {
            return (a + b) % p;
        }
        let (mut a, mut b) = (a, b);
        let mut out = 0u32;
        let mut w = 1u32;
        for _ in 0..self.0.m {
            out += ((a % p + b % p) % p) * w;
            a /= p;
            b /= p;
            w *= p;
        }
        out
    }

    pub fn neg(&self, a: u32) -> u32 {
        let p = self.0.p;
        if p == 2 {
            return a;
        }
        let mut a = a;
        let mut out = 0u32;
        let mut w = 1u32;
        for _ in 0..self.0.m {
            out += ((p - a % p) % p) * w;
            a /= p;
            w *= p;
        }
        out
    }

    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let g = self.0.order - 1;
        let s = (self.0.log[a as usize] + self.0.log[b as usize]) % g;
        self.0.exp[s as usize]
    }

    pub fn inv(&self, a: u32) -> Result<u32> {
        if a == 0 {
            return Err(Error::InverseOfZero);
        }
        let g = self.0.order - 1;
        let l = self.0.log[a as usize];
        Ok(self.0.exp[((g - l) % g) as usize])
    }

    /// `a^k`, negative `k` meaning powers of the inverse. `0^0 = 1`.
    pub fn pow(&self, a: u32, k: i64) -> Result<u32> {
        if k == 0 {
            return Ok(1);
        }
        if a == 0 {
            return if k > 0 { Ok(0) } else { Err(Error::InverseOfZero) };
        }
        let g = (self.0.order - 1) as i64;
        let l = self.0.log[a as usize] as i64;
        let e = (l * (k.rem_euclid(g))).rem_euclid(g);
        Ok(self.0.exp[e as usize])
    }

    /// `alpha^k` for any integer `k`.
    pub fn alpha_pow(&self, k: i64) -> u32 {
        let g = (self.0.order - 1) as i64;
        self.0.exp[k.rem_euclid(g) as usize]
    }

    /// Natural number embedded in the prime subfield.
    pub fn from_integer(&self, n: u64) -> u32 {
        (n % self.0.p as u64) as u32
    }
}

/// A field element tied to its field.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    field: FieldSpec,
    code: u32,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})[{:?}]", self.field.order(), self.coefficients())
    }
}

impl FieldElement {
    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn code(&self) -> u32 {
        self.code
    }

    /// Coefficients over GF(p), constant term first.
    pub fn coefficients(&self) -> Vec<u32> {
        code_to_poly(self.code, self.field.0.p, self.field.0.m)
    }

    pub fn is_zero(&self) -> bool {
        self.code == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Mul,
    Inv,
    Pow(i64),
}

/// Checked arithmetic. `b` is ignored for `Inv` and `Pow`.
pub fn field_arith(a: &FieldElement, b: &FieldElement, op: FieldOp) -> Result<FieldElement> {
    if a.field != b.field {
        return Err(Error::FieldMismatch);
    }
    let f = &a.field;
    let code = match op {
        FieldOp::Add => f.add(a.code, b.code),
        FieldOp::Mul => f.mul(a.code, b.code),
        FieldOp::Inv => f.inv(a.code)?,
        FieldOp::Pow(k) => f.pow(a.code, k)?,
    };
    Ok(f.element(code))
}

/// `C(k, j) mod p` by Lucas' theorem; zero when `j > k`.
pub fn binomial_mod(k: u64, j: u64, p: u32) -> u32 {
    if j > k {
        return 0;
    }
    let p = p as u64;
    let (mut k, mut j) = (k, j);
    let mut acc = 1u64;
    while k > 0 || j > 0 {
        let (kd, jd) = (k % p, j % p);
        if jd > kd {
            return 0;
        }
        acc = acc * small_binomial(kd, jd) % p;
        k /= p;
        j /= p;
    }
    acc as u32
}

fn small_binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

pub fn binomial_in_field(k: u64, j: u64, f: &FieldSpec) -> FieldElement {
    f.element(binomial_mod(k, j, f.characteristic()))
}

/// Dense matrix over a finite field, entries stored as codes.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FieldMatrix over GF({}) {}x{}", self.field.order(), self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl FieldMatrix {
    pub fn new(field: &FieldSpec, rows: usize, cols: usize, data: Vec<u32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                expected: format!("{} entries", rows * cols),
                got: format!("{}", data.len()),
            });
        }
        if let Some(&bad) = data.iter().find(|&&c| !field.contains(c)) {
            return Err(Error::Invalid(format!("entry {bad} outside GF({})", field.order())));
        }
        Ok(Self {
            field: field.clone(),
            rows,
            cols,
            data,
        })
    }

    pub fn from_rows(field: &FieldSpec, rows: &[Vec<u32>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Invalid("ragged rows".into()));
        }
        Self::new(field, r, c, rows.concat())
    }

    pub fn zeros(field: &FieldSpec, rows: usize, cols: usize) -> Self {
        Self {
            field: field.clone(),
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: &FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Unit entries on the anti-diagonal.
    pub fn cross_diagonal(field: &FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + (n - 1 - i)] = 1;
        }
        m
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, code: u32) {
        assert!(self.field.contains(code));
        self.data[r * self.cols + c] = code;
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(&self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        let mut out = Self::zeros(&self.field, r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a == 0 {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.data[(i * other.rows + k) * c + j * other.cols + l] =
                            self.field.mul(a, other.get(k, l));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Leading `n x n` principal submatrix.
    pub fn principal(&self, n: usize) -> Self {
        assert!(n <= self.rows && n <= self.cols);
        let mut out = Self::zeros(&self.field, n, n);
        for r in 0..n {
            out.data[r * n..(r + 1) * n].copy_from_slice(&self.row(r)[..n]);
        }
        out
    }

    /// Matrix-vector product on codes.
    pub fn mul_vec(&self, v: &[u32]) -> Result<Vec<u32>> {
        if v.len() != self.cols {
            return Err(Error::Shape {
                expected: format!("vector of length {}", self.cols),
                got: format!("{}", v.len()),
            });
        }
        let f = &self.field;
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(0u32, |acc, (&a, &x)| f.add(acc, f.mul(a, x)))
            })
            .collect())
    }

    /// Select rows by index, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            field: self.field.clone(),
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn rank(&self) -> usize {
        rank_over_field(self)
    }
}

/// Rank by Gaussian elimination.
pub fn rank_over_field(m: &FieldMatrix) -> usize {
    let f = &m.field;
    let (rows, cols) = (m.rows, m.cols);
    let mut a = m.data.clone();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| a[r * cols + col] != 0) else {
            continue;
        };
        if piv != rank {
            for c in 0..cols {
                a.swap(piv * cols + c, rank * cols + c);
            }
        }
        let inv = f.inv(a[rank * cols + col]).expect("pivot is nonzero");
        for c in col..cols {
            a[rank * cols + c] = f.mul(a[rank * cols + c], inv);
        }
        for r in 0..rows {
            if r == rank {
                continue;
            }
            let factor = a[r * cols + col];
            if factor == 0 {
                continue;
            }
            for c in col..cols {
                let t = f.mul(factor, a[rank * cols + c]);
                a[r * cols + c] = f.sub(a[r * cols + c], t);
            }
        }
        rank += 1;
    }
    rank
}
