use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{LweError, Residue};

/// Dense row-major matrix of plaintext database entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlainMatrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Copy + Default> PlainMatrix<E> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![E::default(); rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<E>) -> Result<Self, LweError> {
        if data.len() != rows * cols {
            return Err(LweError::DimensionMismatch {
                what: "matrix data",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix whose column `j` is `columns[j]`.
    pub fn from_columns(columns: &[Vec<E>]) -> Result<Self, LweError> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(LweError::DimensionMismatch {
                    what: "column length",
                    expected: rows,
                    found: col.len(),
                });
            }
            for (i, &v) in col.iter().enumerate() {
                m.data[i * cols + j] = v;
            }
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Self
    where
        E: From<u8>,
    {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = E::from(1u8);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> E {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: E) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<E> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[E] {
        &self.data
    }
}

/// The public LWE matrix `A` (`rows x lwe_dim`), row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicMatrix<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Residue> PublicMatrix<R> {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<R>) -> Result<Self, LweError> {
        if data.len() != rows * cols {
            return Err(LweError::DimensionMismatch {
                what: "public matrix data",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[R] {
        &self.data
    }
}

/// Expands a 32-byte seed into a `rows x cols` matrix of uniform residues.
///
/// Entries are drawn from ChaCha20 in row-major order, one word per entry,
/// so the flattened output depends only on `(seed, rows * cols)`.
pub fn expand_matrix<R: Residue>(seed: &[u8; 32], rows: usize, cols: usize) -> PublicMatrix<R> {
    let mut rng = ChaCha20Rng::from_seed(*seed);
    let data = (0..rows * cols)
        .map(|_| match R::BITS {
            32 => R::from_u64(rng.next_u32() as u64),
            _ => R::from_u64(rng.next_u64()),
        })
        .collect();
    PublicMatrix { rows, cols, data }
}
