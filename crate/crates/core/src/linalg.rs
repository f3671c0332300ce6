//! Dense LU and a block-tridiagonal direct solver for the polar stencil.
//!
//! The discrete operator couples each ring only to its two radial
//! neighbours, and within a ring only to the two angular neighbours
//! (periodically). Grouping unknowns by ring gives a block-tridiagonal
//! system whose off-diagonal blocks are diagonal matrices and whose
//! diagonal blocks are cyclic tridiagonal. Block forward elimination with
//! partially pivoted dense LU of the Schur complements is a direct,
//! deterministic solve; the factorization is kept so that repeated solves
//! with new right-hand sides cost only the two block sweeps.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("singular pivot in ring block {ring} (column {col})")]
    SingularBlock { ring: usize, col: usize },
}

/// Column-major square matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    n: usize,
    a: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> DenseMatrix {
        DenseMatrix {
            n,
            a: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.a[col * self.n + row]
    }

    #[inline]
    pub fn at_mut(&mut self, row: usize, col: usize) -> &mut f64 {
        &mut self.a[col * self.n + row]
    }

    fn column(&self, col: usize) -> &[f64] {
        &self.a[col * self.n..(col + 1) * self.n]
    }

    fn column_mut(&mut self, col: usize) -> &mut [f64] {
        &mut self.a[col * self.n..(col + 1) * self.n]
    }
}

/// LU factorization with partial pivoting, stored in place.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: DenseMatrix,
    piv: Vec<usize>,
}

impl LuFactor {
    /// Factors `m`; on a zero pivot returns the offending column.
    pub fn factor(mut m: DenseMatrix) -> Result<LuFactor, usize> {
        let n = m.n;
        let mut piv = vec![0usize; n];
        for k in 0..n {
            // pivot search in column k
            let mut p = k;
            let mut best = m.at(k, k).abs();
            for r in k + 1..n {
                let v = m.at(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return Err(k);
            }
            piv[k] = p;
            if p != k {
                for c in 0..n {
                    let col = m.column_mut(c);
                    col.swap(p, k);
                }
            }
            let pivot = m.at(k, k);
            // scale multipliers
            {
                let col = m.column_mut(k);
                for r in k + 1..n {
                    col[r] /= pivot;
                }
            }
            // trailing update, column by column
            for c in k + 1..n {
                let mkc = m.at(k, c);
                if mkc != 0.0 {
                    let (lo, hi) = m.a.split_at_mut(c * n);
                    let lcol = &lo[k * n..(k + 1) * n];
                    let ccol = &mut hi[..n];
                    for r in k + 1..n {
                        ccol[r] -= lcol[r] * mkc;
                    }
                }
            }
        }
        Ok(LuFactor { lu: m, piv })
    }

    /// Solves in place for a single right-hand side.
    pub fn solve_vec(&self, b: &mut [f64]) {
        let n = self.lu.n;
        debug_assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(p, k);
            }
            let bk = b[k];
            if bk != 0.0 {
                let col = self.lu.column(k);
                for r in k + 1..n {
                    b[r] -= col[r] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let col = self.lu.column(k);
            b[k] /= col[k];
            let bk = b[k];
            if bk != 0.0 {
                for r in 0..k {
                    b[r] -= col[r] * bk;
                }
            }
        }
    }

    /// Solves in place for every column of `x`.
    pub fn solve_mat(&self, x: &mut DenseMatrix) {
        debug_assert_eq!(x.n, self.lu.n);
        for c in 0..x.n {
            self.solve_vec(x.column_mut(c));
        }
    }
}

/// Per-ring stencil data for one ring of unknowns (length `n_theta` each).
/// `sub`/`sup` couple to ring `i-1` / `i+1`; `diag`, `left`, `right` are the
/// cyclic tridiagonal in-ring coefficients (`left` multiplies `j-1`,
/// `right` multiplies `j+1`, periodically).
#[derive(Debug, Clone)]
pub struct RingStencil {
    pub diag: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub sub: Vec<f64>,
    pub sup: Vec<f64>,
}

impl RingStencil {
    pub fn identity(n: usize) -> RingStencil {
        RingStencil {
            diag: vec![1.0; n],
            left: vec![0.0; n],
            right: vec![0.0; n],
            sub: vec![0.0; n],
            sup: vec![0.0; n],
        }
    }
}

struct RingFactor {
    /// LU of the Schur complement block; `None` for identity boundary rings.
    lu: Option<LuFactor>,
    /// Back-substitution coupling `S_i^{-1} B_i`; `None` when `B_i = 0`.
    coupling: Option<DenseMatrix>,
    /// Diagonal of the sub-block `A_i` (coupling to the previous ring).
    sub: Vec<f64>,
}

/// Factorized block-tridiagonal system over rings `0..=n_r`.
pub struct BlockTridiagonal {
    rings: Vec<RingFactor>,
    n_theta: usize,
}

impl BlockTridiagonal {
    /// Block forward elimination. `rings[0]` and `rings[n_r]` must be
    /// identity rows (Dirichlet boundary rings).
    pub fn factor(rings: &[RingStencil], n_theta: usize) -> Result<BlockTridiagonal, LinalgError> {
        let n_rings = rings.len();
        let mut factors: Vec<RingFactor> = Vec::with_capacity(n_rings);
        factors.push(RingFactor {
            lu: None,
            coupling: None,
            sub: Vec::new(),
        });

        for (ring, st) in rings.iter().enumerate().take(n_rings - 1).skip(1) {
            // S_i = D_i - A_i * C_{i-1}
            let mut s = DenseMatrix::zeros(n_theta);
            for j in 0..n_theta {
                *s.at_mut(j, j) = st.diag[j];
                let jm = (j + n_theta - 1) % n_theta;
                let jp = (j + 1) % n_theta;
                *s.at_mut(j, jm) += st.left[j];
                *s.at_mut(j, jp) += st.right[j];
            }
            if let Some(c_prev) = factors.last().and_then(|f| f.coupling.as_ref()) {
                for col in 0..n_theta {
                    for row in 0..n_theta {
                        let v = st.sub[row] * c_prev.at(row, col);
                        if v != 0.0 {
                            *s.at_mut(row, col) -= v;
                        }
                    }
                }
            }
            let lu = LuFactor::factor(s).map_err(|col| LinalgError::SingularBlock { ring, col })?;

            // C_i = S_i^{-1} * diag(sup)
            let mut coupling = DenseMatrix::zeros(n_theta);
            for j in 0..n_theta {
                *coupling.at_mut(j, j) = st.sup[j];
            }
            lu.solve_mat(&mut coupling);

            factors.push(RingFactor {
                lu: Some(lu),
                coupling: Some(coupling),
                sub: st.sub.clone(),
            });
        }

        factors.push(RingFactor {
            lu: None,
            coupling: None,
            sub: Vec::new(),
        });
        Ok(BlockTridiagonal {
            rings: factors,
            n_theta,
        })
    }

    /// Solves for a right-hand side laid out ring by ring.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n_theta;
        let n_rings = self.rings.len();
        debug_assert_eq!(b.len(), n_rings * n);

        // forward sweep: z_i = S_i^{-1} (b_i - A_i z_{i-1})
        let mut z = b.to_vec();
        for i in 1..n_rings - 1 {
            let rf = &self.rings[i];
            let (prev, cur) = z.split_at_mut(i * n);
            let zp = &prev[(i - 1) * n..];
            let zi = &mut cur[..n];
            for j in 0..n {
                zi[j] -= rf.sub[j] * zp[j];
            }
            rf.lu.as_ref().unwrap().solve_vec(zi);
        }

        // back substitution: u_i = z_i - C_i u_{i+1}
        for i in (0..n_rings - 1).rev() {
            if let Some(c) = &self.rings[i].coupling {
                let (cur, next) = z.split_at_mut((i + 1) * n);
                let ui = &mut cur[i * n..];
                let un = &next[..n];
                for (col, &unc) in un.iter().enumerate() {
                    if unc != 0.0 {
                        let ccol = c.column(col);
                        for row in 0..n {
                            ui[row] -= ccol[row] * unc;
                        }
                    }
                }
            }
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rng: &mut StdRng, n: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n);
        for c in 0..n {
            for r in 0..n {
                *m.at_mut(r, c) = rng.random_range(-1.0..1.0);
            }
            // diagonally dominant, so the forward error stays small
            *m.at_mut(c, c) += n as f64 + 1.0;
        }
        m
    }

    fn matvec(m: &DenseMatrix, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; m.n];
        for c in 0..m.n {
            let col = m.column(c);
            for r in 0..m.n {
                y[r] += col[r] * x[c];
            }
        }
        y
    }

    #[test]
    fn lu_solves_random_systems() {
        let mut rng = StdRng::seed_from_u64(7);
        for n in [1usize, 2, 5, 17, 40] {
            let m = random_matrix(&mut rng, n);
            let x_true: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b = matvec(&m, &x_true);
            let lu = LuFactor::factor(m.clone()).unwrap();
            let mut x = b.clone();
            lu.solve_vec(&mut x);
            for (a, b) in x.iter().zip(&x_true) {
                assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn lu_rejects_singular() {
        let mut m = DenseMatrix::zeros(3);
        *m.at_mut(0, 0) = 1.0;
        *m.at_mut(1, 1) = 1.0;
        // third column linearly dependent on nothing: all zeros
        assert!(LuFactor::factor(m).is_err());
    }

    #[test]
    fn block_solver_matches_dense_reference() {
        let mut rng = StdRng::seed_from_u64(42);
        let n_theta = 6;
        let n_rings = 5;

        let mut rings = vec![RingStencil::identity(n_theta)];
        for _ in 1..n_rings - 1 {
            let mut st = RingStencil::identity(n_theta);
            for j in 0..n_theta {
                st.diag[j] = rng.random_range(4.0..6.0);
                st.left[j] = rng.random_range(-1.0..0.0);
                st.right[j] = rng.random_range(-1.0..0.0);
                st.sub[j] = rng.random_range(-1.0..0.0);
                st.sup[j] = rng.random_range(-1.0..0.0);
            }
            rings.push(st);
        }
        rings.push(RingStencil::identity(n_theta));

        // assemble the same system densely
        let dim = n_rings * n_theta;
        let mut dense = DenseMatrix::zeros(dim);
        for (i, st) in rings.iter().enumerate() {
            for j in 0..n_theta {
                let row = i * n_theta + j;
                *dense.at_mut(row, row) += st.diag[j];
                let jm = i * n_theta + (j + n_theta - 1) % n_theta;
                let jp = i * n_theta + (j + 1) % n_theta;
                *dense.at_mut(row, jm) += st.left[j];
                *dense.at_mut(row, jp) += st.right[j];
                if i > 0 {
                    *dense.at_mut(row, (i - 1) * n_theta + j) += st.sub[j];
                }
                if i + 1 < n_rings {
                    *dense.at_mut(row, (i + 1) * n_theta + j) += st.sup[j];
                }
            }
        }

        let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let block = BlockTridiagonal::factor(&rings, n_theta).unwrap();
        let x_block = block.solve(&b);

        let lu = LuFactor::factor(dense).unwrap();
        let mut x_dense = b.clone();
        lu.solve_vec(&mut x_dense);

        for (a, bb) in x_block.iter().zip(&x_dense) {
            assert!((a - bb).abs() < 1e-10, "{a} vs {bb}");
        }
    }
}
