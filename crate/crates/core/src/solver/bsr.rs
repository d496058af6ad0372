//! Symmetric block sparse row matrix storing the diagonal and upper blocks.

use crate::{Mat3, Vec3};

#[derive(Clone, Debug)]
pub struct BlockSparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    blocks: Vec<Mat3>,
    /// Index of the diagonal block of each row.
    diag: Vec<usize>,
}

/// Collects `(i, j, block)` contributions and merges duplicates.
#[derive(Clone, Debug)]
pub struct BsrBuilder {
    n: usize,
    entries: Vec<(usize, usize, Mat3)>,
}

impl BsrBuilder {
    pub fn new(n: usize) -> Self {
        BsrBuilder { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        BsrBuilder {
            n,
            entries: Vec::with_capacity(cap),
        }
    }

    /// Adds block `(i, j)`. Lower blocks are stored transposed in the upper triangle.
    pub fn add(&mut self, i: usize, j: usize, b: Mat3) {
        if i <= j {
            self.entries.push((i, j, b));
        } else {
            self.entries.push((j, i, b.transpose()));
        }
    }

    /// Adds the upper half of a symmetric element matrix over distinct vertices.
    pub fn add_element<const K: usize>(&mut self, verts: &[usize; K], blocks: &[[Mat3; K]; K]) {
        for a in 0..K {
            for b in 0..K {
                if verts[a] < verts[b] || a == b {
                    self.entries.push((verts[a], verts[b], blocks[a][b]));
                }
            }
        }
    }

    /// Sorts by `(row, col)` and sums duplicates in insertion order, so equal
    /// inputs always produce bit-identical matrices. Every row gets a diagonal block.
    pub fn build(mut self) -> BlockSparseMatrix {
        for i in 0..self.n {
            self.entries.push((i, i, Mat3::zeros()));
        }
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; self.n + 1];
        let mut cols = Vec::new();
        let mut blocks: Vec<Mat3> = Vec::new();
        let mut last = None;
        for (i, j, b) in self.entries {
            if last == Some((i, j)) {
                *blocks.last_mut().unwrap() += b;
            } else {
                cols.push(j);
                blocks.push(b);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let diag = (0..self.n).map(|i| row_ptr[i]).collect();
        BlockSparseMatrix {
            n: self.n,
            row_ptr,
            cols,
            blocks,
            diag,
        }
    }
}

impl BlockSparseMatrix {
    pub fn num_block_rows(&self) -> usize {
        self.n
    }

    pub fn num_stored_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn diagonal_block(&self, i: usize) -> &Mat3 {
        &self.blocks[self.diag[i]]
    }

    /// `y = A x` using the symmetric upper storage.
    pub fn mul_vec(&self, x: &[Vec3], y: &mut [Vec3]) {
        y.iter_mut().for_each(|v| *v = Vec3::zeros());
        for i in 0..self.n {
            let mut acc = Vec3::zeros();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                let b = &self.blocks[k];
                acc += b * x[j];
                if j != i {
                    y[j] += b.tr_mul(&x[i]);
                }
            }
            y[i] += acc;
        }
    }

    /// Zeroes rows and columns of prescribed vertices and puts `m_i I` on their diagonal.
    pub fn apply_dirichlet(&mut self, fixed: &[bool], masses: &[f64]) {
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                if fixed[i] || fixed[j] {
                    self.blocks[k] = if i == j { Mat3::identity() * masses[i] } else { Mat3::zeros() };
                }
            }
        }
    }

    /// Largest diagonal scalar entry over rows selected by `mask`.
    pub fn max_diagonal_entry(&self, mask: impl Fn(usize) -> bool) -> f64 {
        (0..self.n)
            .filter(|&i| mask(i))
            .flat_map(|i| {
                let b = self.diagonal_block(i);
                [b[(0, 0)], b[(1, 1)], b[(2, 2)]]
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(3 * self.n, 3 * self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                let b = &self.blocks[k];
                for r in 0..3 {
                    for c in 0..3 {
                        m[(3 * i + r, 3 * j + c)] = b[(r, c)];
                        if i != j {
                            m[(3 * j + c, 3 * i + r)] = b[(r, c)];
                        }
                    }
                }
            }
        }
        m
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> BlockSparseMatrix {
        let mut b = BsrBuilder::new(n);
        for i in 0..n {
            b.add(i, i, Mat3::identity() * 4.0);
        }
        for _ in 0..2 * n {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if i == j {
                continue;
            }
            let g = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let outer = g * g.transpose();
            // (e_i - e_j) (e_i - e_j)^T (x) g g^T is PSD
            b.add(i, i, outer);
            b.add(j, j, outer);
            b.add(i, j, -outer);
        }
        b.build()
    }

    #[test]
    fn mul_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_spd(20, &mut rng);
        let dense = a.to_dense();
        assert!((dense.clone() - dense.transpose()).norm() == 0.0);
        let x: Vec<Vec3> = (0..20).map(|_| Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0))).collect();
        let mut y = vec![Vec3::zeros(); 20];
        a.mul_vec(&x, &mut y);
        let xd = nalgebra::DVector::from_iterator(60, x.iter().flat_map(|v| v.iter().copied()));
        let yd = dense * xd;
        for i in 0..20 {
            for r in 0..3 {
                assert!((y[i][r] - yd[3 * i + r]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lower_blocks_are_transposed() {
        let mut b = BsrBuilder::new(2);
        let m = Mat3::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0);
        b.add(1, 0, m);
        let d = b.build().to_dense();
        assert_eq!(d[(3, 1)], m[(0, 1)]);
        assert_eq!(d[(1, 3)], m[(0, 1)]);
    }

    #[test]
    fn dirichlet_masking() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut a = random_spd(6, &mut rng);
        let fixed = [false, true, false, false, true, false];
        a.apply_dirichlet(&fixed, &[2.0; 6]);
        let d = a.to_dense();
        for i in [1usize, 4] {
            for c in 0..18 {
                for r in 0..3 {
                    let expected = if c == 3 * i + r { 2.0 } else { 0.0 };
                    assert_eq!(d[(3 * i + r, c)], expected);
                    assert_eq!(d[(c, 3 * i + r)], expected);
                }
            }
        }
    }
}
