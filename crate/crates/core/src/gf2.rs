//! Dense bit vectors and row-reduced bases over GF(2).

use serde::{Deserialize, Serialize};

const WORD: usize = 64;

/// Fixed-length bit vector with word-parallel XOR and popcount.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; len.div_ceil(WORD)] }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self::zeros(len);
        for i in 0..len {
            v.set(i, true);
        }
        v
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in indices {
            assert!(i < len, "bit index {i} out of range for length {len}");
            v.toggle(i);
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self::from_indices(bits.len(), bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Size of the intersection with `other`.
    pub fn and_count(&self, other: &BitVec) -> usize {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * WORD + w.trailing_zeros() as usize)
    }

    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(k * WORD + bit)
            })
        })
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

impl std::fmt::Debug for BitVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: String = (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect();
        write!(f, "BitVec({s})")
    }
}

/// Row-reduced basis of a GF(2) subspace, kept in echelon form keyed by pivot column.
#[derive(Clone, Debug)]
pub struct Basis {
    len: usize,
    rows: Vec<BitVec>,
    pivots: Vec<usize>,
}

impl Basis {
    pub fn new(len: usize) -> Self {
        Self { len, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn from_rows<'a>(len: usize, rows: impl IntoIterator<Item = &'a BitVec>) -> Self {
        let mut basis = Self::new(len);
        for r in rows {
            basis.insert(r.clone());
        }
        basis
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    /// Reduces `v` against the basis; the result is zero iff `v` lies in the span.
    pub fn reduce(&self, v: &BitVec) -> BitVec {
        assert_eq!(v.len(), self.len, "bit vector length mismatch");
        let mut out = v.clone();
        for (row, &pivot) in self.rows.iter().zip(&self.pivots) {
            if out.get(pivot) {
                out.xor_assign(row);
            }
        }
        out
    }

    pub fn contains(&self, v: &BitVec) -> bool {
        self.reduce(v).is_zero()
    }

    /// Adds `v` to the span. Returns false if it was already dependent.
    pub fn insert(&mut self, v: BitVec) -> bool {
        let reduced = self.reduce(&v);
        let Some(pivot) = reduced.first_one() else {
            return false;
        };
        // keep the basis fully reduced so that `reduce` is a single pass
        for row in &mut self.rows {
            if row.get(pivot) {
                row.xor_assign(&reduced);
            }
        }
        self.rows.push(reduced);
        self.pivots.push(pivot);
        true
    }
}

/// Null space of the linear map sending basis vector `j` to `images[j]`.
///
/// Returned vectors live in the domain, of length `images.len()`.
pub fn null_space(images: &[BitVec], codomain_len: usize) -> Vec<BitVec> {
    let n = images.len();
    // augmented rows: [image | identity]
    let mut rows: Vec<(BitVec, BitVec)> = images
        .iter()
        .enumerate()
        .map(|(j, img)| {
            assert_eq!(img.len(), codomain_len, "image length mismatch");
            (img.clone(), BitVec::from_indices(n, [j]))
        })
        .collect();
    let mut kernel = Vec::new();
    let mut pivot_rows: Vec<(usize, usize)> = Vec::new();
    for r in 0..rows.len() {
        for &(pivot, pr) in &pivot_rows {
            if rows[r].0.get(pivot) {
                let (img, tag) = rows[pr].clone();
                rows[r].0.xor_assign(&img);
                rows[r].1.xor_assign(&tag);
            }
        }
        match rows[r].0.first_one() {
            Some(pivot) => pivot_rows.push((pivot, r)),
            None => kernel.push(rows[r].1.clone()),
        }
    }
    kernel
}
