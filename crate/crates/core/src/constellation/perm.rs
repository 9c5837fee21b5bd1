use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bijection on `0..size`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct DigitPermutation {
    map: Vec<u32>,
}

impl TryFrom<Vec<u32>> for DigitPermutation {
    type Error = Error;

    fn try_from(map: Vec<u32>) -> Result<Self> {
        Self::new(map)
    }
}

impl From<DigitPermutation> for Vec<u32> {
    fn from(p: DigitPermutation) -> Self {
        p.map
    }
}

impl DigitPermutation {
    pub fn new(map: Vec<u32>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &x in &map {
            let slot = seen
                .get_mut(x as usize)
                .ok_or_else(|| Error::Invalid(format!("image {x} outside 0..{}", map.len())))?;
            if *slot {
                return Err(Error::Invalid(format!("image {x} repeated")));
            }
            *slot = true;
        }
        Ok(Self { map })
    }

    pub fn identity(size: usize) -> Self {
        Self {
            map: (0..size as u32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i] as usize
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &x)| i as u32 == x)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u32; self.map.len()];
        for (i, &x) in self.map.iter().enumerate() {
            inv[x as usize] = i as u32;
        }
        Self { map: inv }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Shape {
                expected: format!("permutation of size {}", self.len()),
                got: format!("{}", other.len()),
            });
        }
        Ok(Self {
            map: other.map.iter().map(|&x| self.map[x as usize]).collect(),
        })
    }
}

/// Reverse the `nbits`-bit binary representation of each index.
pub fn bit_reversal_perm(nbits: u32) -> DigitPermutation {
    let size = 1u32 << nbits;
    DigitPermutation {
        map: (0..size).map(|a| a.reverse_bits() >> (32 - nbits)).collect(),
    }
}

/// Bit reversal followed by complementing every other bit, starting with
/// the most significant bit of the result: `b_n ... b_1` maps to
/// `!b_1 b_2 !b_3 b_4 ...`.
pub fn alt_flip_reversal_perm(nbits: u32) -> DigitPermutation {
    let size = 1u32 << nbits;
    let map = (0..size)
        .map(|a| {
            (1..=nbits).fold(0u32, |acc, i| {
                let bit = (a >> (i - 1)) & 1;
                let out = bit ^ (i & 1);
                acc | (out << (nbits - i))
            })
        })
        .collect();
    DigitPermutation { map }
}

pub fn random_perm<R: Rng + ?Sized>(size: usize, rng: &mut R) -> DigitPermutation {
    let mut map: Vec<u32> = (0..size as u32).collect();
    map.shuffle(rng);
    DigitPermutation { map }
}

/// Exhaustive branch-and-bound search for a permutation `f` of integer
/// lattice points maximizing `min_{i != j} |x_i - x_j|^2 |x_f(i) - x_f(j)|^2`.
///
/// `floor` is a known achievable value; only strictly better permutations
/// are explored. Returns the best permutation found (None if nothing beats
/// `floor`) and its minimum product. The first image is restricted to
/// `first_choices`, which lets the caller quotient out symmetries of the
/// point set.
pub fn max_min_product_permutation(
    points: &[(i64, i64)],
    floor: u64,
    first_choices: &[usize],
) -> (Option<DigitPermutation>, u64) {
    let n = points.len();
    let d2 = |a: usize, b: usize| {
        let (dx, dy) = (points[a].0 - points[b].0, points[a].1 - points[b].1);
        (dx * dx + dy * dy) as u64
    };
    let dist: Vec<u64> = (0..n * n).map(|k| d2(k / n, k % n)).collect();

    struct Search<'a> {
        n: usize,
        dist: &'a [u64],
        best: u64,
        best_map: Option<Vec<u32>>,
        map: Vec<usize>,
        used: Vec<bool>,
    }

    impl Search<'_> {
        fn go(&mut self, depth: usize, choices: Option<&[usize]>) {
            if depth == self.n {
                let value = self.evaluate();
                if value > self.best {
                    self.best = value;
                    self.best_map = Some(self.map.iter().map(|&x| x as u32).collect());
                }
                return;
            }
            let all: Vec<usize> = match choices {
                Some(c) => c.to_vec(),
                None => (0..self.n).collect(),
            };
            for img in all {
                if self.used[img] {
                    continue;
                }
                let ok = (0..depth).all(|prev| {
                    self.dist[prev * self.n + depth] * self.dist[self.map[prev] * self.n + img] > self.best
                });
                if !ok {
                    continue;
                }
                self.used[img] = true;
                self.map.push(img);
                self.go(depth + 1, None);
                self.map.pop();
                self.used[img] = false;
            }
        }

        fn evaluate(&self) -> u64 {
            let mut m = u64::MAX;
            for i in 0..self.n {
                for j in i + 1..self.n {
                    m = m.min(self.dist[i * self.n + j] * self.dist[self.map[i] * self.n + self.map[j]]);
                }
            }
            m
        }
    }

    let mut s = Search {
        n,
        dist: &dist,
        best: floor,
        best_map: None,
        map: Vec::with_capacity(n),
        used: vec![false; n],
    };
    s.go(0, Some(first_choices));
    let best = s.best;
    (s.best_map.map(|m| DigitPermutation { map: m }), best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bit_reversal_small() {
        assert_eq!(bit_reversal_perm(2).as_slice(), &[0, 2, 1, 3]);
        assert_eq!(bit_reversal_perm(1).as_slice(), &[0, 1]);
        assert_eq!(bit_reversal_perm(3).as_slice(), &[0, 4, 2, 6, 1, 5, 3, 7]);
    }

    #[test]
    fn bit_reversal_is_an_involution() {
        for n in 1..=12 {
            let p = bit_reversal_perm(n);
            assert!(p.compose(&p).unwrap().is_identity());
        }
    }

    #[test]
    fn alt_flip_small() {
        assert_eq!(alt_flip_reversal_perm(2).as_slice(), &[2, 0, 3, 1]);
        let p = alt_flip_reversal_perm(6);
        assert_eq!(p.apply(0b111111), 0b010101);
    }

    #[test]
    fn alt_flip_is_bijective() {
        for n in 1..=12 {
            let p = alt_flip_reversal_perm(n);
            assert!(DigitPermutation::new(p.as_slice().to_vec()).is_ok());
        }
    }

    #[test]
    fn alt_flip_matches_bitwise_definition() {
        // independent spelling: reverse, then xor with 1010...
        for n in 1..=10u32 {
            let rev = bit_reversal_perm(n);
            let mask: u32 = (0..n).filter(|k| (n - 1 - k) % 2 == 0).map(|k| 1 << k).sum();
            let p = alt_flip_reversal_perm(n);
            for a in 0..(1usize << n) {
                assert_eq!(p.apply(a), rev.apply(a) ^ mask as usize);
            }
        }
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(DigitPermutation::new(vec![0, 0]).is_err());
        assert!(DigitPermutation::new(vec![0, 2]).is_err());
    }

    #[test]
    fn inverse_and_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_perm(50, &mut rng);
        assert!(p.compose(&p.inverse()).unwrap().is_identity());
        assert!(p.inverse().compose(&p).unwrap().is_identity());
    }

    #[test]
    fn serde_rejects_invalid() {
        let p: DigitPermutation = serde_json::from_str("[1,0,2]").unwrap();
        assert_eq!(p.apply(0), 1);
        assert!(serde_json::from_str::<DigitPermutation>("[1,1]").is_err());
    }

    #[test]
    fn branch_and_bound_on_four_points() {
        // 2x2 grid: four unit pairs but only two diagonals, so some unit pair
        // maps to a unit pair and the optimum is 1
        let pts = [(0, 0), (0, 1), (1, 0), (1, 1)];
        let (perm, best) = max_min_product_permutation(&pts, 0, &[0, 1, 2, 3]);
        assert_eq!(best, 1);
        let perm = perm.unwrap();
        let brute = brute_force(&pts);
        assert_eq!(best, brute);
        assert_eq!(perm.len(), 4);
    }

    fn brute_force(pts: &[(i64, i64)]) -> u64 {
        fn permute(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if k == a.len() {
                out.push(a.clone());
                return;
            }
            for i in k..a.len() {
                a.swap(k, i);
                permute(k + 1, a, out);
                a.swap(k, i);
            }
        }
        let n = pts.len();
        let mut all = Vec::new();
        permute(0, &mut (0..n).collect(), &mut all);
        let d = |a: usize, b: usize| {
            let (x, y) = (pts[a].0 - pts[b].0, pts[a].1 - pts[b].1);
            (x * x + y * y) as u64
        };
        all.iter()
            .map(|f| {
                let mut m = u64::MAX;
                for i in 0..n {
                    for j in i + 1..n {
                        m = m.min(d(i, j) * d(f[i], f[j]));
                    }
                }
                m
            })
            .max()
            .unwrap()
    }

    #[test]
    fn branch_and_bound_matches_brute_force_on_six_points() {
        let pts = [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1)];
        let (_, best) = max_min_product_permutation(&pts, 0, &[0, 1, 2, 3, 4, 5]);
        assert_eq!(best, brute_force(&pts));
    }
}
