//! Words over the two-letter alphabet {1, 2} and their evaluation as
//! ordered products of a shift-operator pair.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A finite sequence over {1, 2}. The empty word maps to the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    pub symbols: Vec<u8>,
}

impl Word {
    pub fn new(symbols: Vec<u8>) -> Result<Self> {
        if symbols.iter().any(|&s| s != 1 && s != 2) {
            return Err(Error::Domain(format!(
                "word symbols must be 1 or 2, got {symbols:?}"
            )));
        }
        Ok(Self { symbols })
    }

    pub fn empty() -> Self {
        Self { symbols: vec![] }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.symbols.is_empty() {
            write!(f, "e")
        } else {
            for s in &self.symbols {
                write!(f, "{s}")?;
            }
            Ok(())
        }
    }
}

/// A pair of shift operators acting on the same n nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftPair {
    pub s1: Tensor,
    pub s2: Tensor,
}

impl ShiftPair {
    pub fn new(s1: Tensor, s2: Tensor) -> Result<Self> {
        if s1.shape().len() != 2 || s1.rows() != s1.cols() {
            return Err(Error::Dimension(format!(
                "shift operator must be square, got {:?}",
                s1.shape()
            )));
        }
        if s1.shape() != s2.shape() {
            return Err(Error::Dimension(format!(
                "shift operators must match: {:?} vs {:?}",
                s1.shape(),
                s2.shape()
            )));
        }
        if !s1.is_finite() || !s2.is_finite() {
            return Err(Error::Numeric("shift operators must be finite".into()));
        }
        Ok(Self { s1, s2 })
    }

    pub fn n(&self) -> usize {
        self.s1.rows()
    }

    pub fn sum(&self) -> Tensor {
        self.s1.add(&self.s2).expect("same shape by construction")
    }

    /// `[S1, S2] = S1 S2 - S2 S1`.
    pub fn commutator(&self) -> Tensor {
        let ab = self.s1.matmul(&self.s2).expect("square");
        let ba = self.s2.matmul(&self.s1).expect("square");
        ab.sub(&ba).expect("same shape")
    }

    /// Frobenius norm of the commutator; zero iff the pair commutes.
    pub fn commutator_fro(&self) -> f64 {
        self.commutator().frob_norm()
    }
}

/// All words of length at most `m` in length-then-lexicographic order
/// (1 before 2), starting with the empty word. Count is `2^(m+1) - 1`.
pub fn enumerate_words(m: usize) -> Vec<Word> {
    let mut out = Vec::with_capacity((1usize << (m + 1)) - 1);
    for len in 0..=m {
        out.extend(words_of_length(len));
    }
    out
}

/// All words of exactly length `len`, lexicographic (1 before 2).
pub fn words_of_length(len: usize) -> Vec<Word> {
    let count = 1usize << len;
    let mut out = Vec::with_capacity(count);
    for code in 0..count {
        let symbols = (0..len)
            .map(|b| 1 + ((code >> (len - 1 - b)) & 1) as u8)
            .collect();
        out.push(Word { symbols });
    }
    out
}

/// Left-to-right product `S_{w_1} S_{w_2} ... S_{w_l}`; the empty word
/// gives the identity.
pub fn word_matrix(word: &Word, s: &ShiftPair) -> Tensor {
    let n = s.n();
    let mut acc = Tensor::eye(n);
    for &sym in &word.symbols {
        let factor = if sym == 1 { &s.s1 } else { &s.s2 };
        acc = acc.matmul(factor).expect("square");
    }
    acc
}
