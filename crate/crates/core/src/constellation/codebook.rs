use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::CMatrix;

/// How codeword amplitudes relate to the transmit power budget `nt * T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Constellation spacing fixed by construction; every codeword has
    /// energy at most `nt * T`.
    FixedSpacing,
    /// Scaled so the mean codeword energy is exactly `nt * T`.
    UnitAverage,
}

/// A finite set of `nt x T` complex codewords. The transmitted signal is
/// `sqrt(SNR) * X`. Parallel-channel codes use `T = 1` with one row per
/// branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub family: String,
    pub nt: usize,
    pub t: usize,
    /// Bits per channel use: `log2 |C| / T`.
    pub rate: f64,
    pub normalization: Normalization,
    pub seed: Option<u64>,
    codewords: Vec<CMatrix>,
}

impl Codebook {
    pub fn new(
        family: impl Into<String>,
        nt: usize,
        t: usize,
        normalization: Normalization,
        codewords: Vec<CMatrix>,
    ) -> Result<Self> {
        if codewords.is_empty() {
            return Err(Error::EmptyCodebook(0));
        }
        if let Some(bad) = codewords.iter().find(|x| x.shape() != (nt, t)) {
            return Err(Error::Shape {
                expected: format!("{nt}x{t} codewords"),
                got: format!("{}x{}", bad.rows(), bad.cols()),
            });
        }
        let rate = (codewords.len() as f64).log2() / t as f64;
        Ok(Self {
            family: family.into(),
            nt,
            t,
            rate,
            normalization,
            seed: None,
            codewords,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codewords(&self) -> &[CMatrix] {
        &self.codewords
    }

    pub fn get(&self, i: usize) -> &CMatrix {
        &self.codewords[i]
    }

    /// Number of parallel branches for `T = 1` codes.
    pub fn branches(&self) -> usize {
        self.nt
    }

    pub fn pair_count(&self) -> u64 {
        let n = self.codewords.len() as u64;
        n * n.saturating_sub(1) / 2
    }

    pub fn energies(&self) -> Vec<f64> {
        self.codewords.iter().map(CMatrix::frobenius_norm_sq).collect()
    }

    pub fn mean_energy(&self) -> f64 {
        self.energies().iter().sum::<f64>() / self.len() as f64
    }

    pub fn max_energy(&self) -> f64 {
        self.energies().into_iter().fold(0.0, f64::max)
    }

    /// Power budget per codeword, `nt * T`.
    pub fn budget(&self) -> f64 {
        (self.nt * self.t) as f64
    }

    /// Whether the energies match the declared normalization within `tol`.
    pub fn power_ok(&self, tol: f64) -> bool {
        match self.normalization {
            Normalization::FixedSpacing => self.max_energy() <= self.budget() + tol,
            Normalization::UnitAverage => (self.mean_energy() - self.budget()).abs() <= tol,
        }
    }

    /// Rescale so the mean energy equals the budget.
    pub fn to_unit_average(&self) -> Self {
        let k = (self.budget() / self.mean_energy()).sqrt();
        let mut out = self.clone();
        out.codewords = self.codewords.iter().map(|x| x.scale_real(k)).collect();
        out.normalization = Normalization::UnitAverage;
        out
    }

    /// Keep only the codewords at `indices`, in that order.
    pub fn subset(&self, indices: &[usize], family: impl Into<String>) -> Result<Self> {
        let cw = indices.iter().map(|&i| self.codewords[i].clone()).collect();
        let mut out = Self::new(family, self.nt, self.t, self.normalization, cw)?;
        out.seed = self.seed;
        Ok(out)
    }

    /// Each `L x 1` codeword placed on the diagonal of an `L x L` matrix.
    pub fn diagonal_embedding(&self) -> Result<Self> {
        if self.t != 1 {
            return Err(Error::Shape {
                expected: "parallel codebook (T = 1)".into(),
                got: format!("T = {}", self.t),
            });
        }
        let cw = self
            .codewords
            .iter()
            .map(|x| CMatrix::diag(&x.column(0)))
            .collect();
        let mut out = Self::new(format!("{}-diagonal", self.family), self.nt, self.nt, self.normalization, cw)?;
        out.seed = self.seed;
        Ok(out)
    }

    /// Whether all codewords are pairwise distinct (exact comparison).
    pub fn all_distinct(&self) -> bool {
        let mut keys: Vec<Vec<(u64, u64)>> = self
            .codewords
            .iter()
            .map(|x| x.data().iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect())
            .collect();
        keys.sort();
        keys.windows(2).all(|w| w[0] != w[1])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&CodebookJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: CodebookJson = serde_json::from_str(text)?;
        raw.try_into()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodebookJson {
    family: String,
    nt: usize,
    #[serde(rename = "T")]
    t: usize,
    #[serde(rename = "R")]
    rate: f64,
    normalization: Normalization,
    seed: Option<u64>,
    codewords: Vec<Vec<[f64; 2]>>,
}

impl From<&Codebook> for CodebookJson {
    fn from(c: &Codebook) -> Self {
        Self {
            family: c.family.clone(),
            nt: c.nt,
            t: c.t,
            rate: c.rate,
            normalization: c.normalization,
            seed: c.seed,
            codewords: c
                .codewords
                .iter()
                .map(|x| x.data().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }
}

impl TryFrom<CodebookJson> for Codebook {
    type Error = Error;

    fn try_from(j: CodebookJson) -> Result<Self> {
        let cw = j
            .codewords
            .into_iter()
            .map(|flat| CMatrix::new(j.nt, j.t, flat.into_iter().map(|[re, im]| Complex64::new(re, im)).collect()))
            .collect::<Result<Vec<_>>>()?;
        let mut c = Codebook::new(j.family, j.nt, j.t, j.normalization, cw)?;
        c.seed = j.seed;
        // keep the stored rate bit-exact
        c.rate = j.rate;
        Ok(c)
    }
}
