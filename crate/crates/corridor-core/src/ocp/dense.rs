//! Small dense linear solves for the boundary-condition systems.
//!
//! The systems are at most 10x10, so plain Gaussian elimination with
//! partial pivoting plus one step of iterative refinement is used.

/// Row-major square matrix of fixed small size.
#[derive(Debug, Clone)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularSystem {
    /// 1-norm condition estimate at the point of failure, if computable.
    pub condition: f64,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "row {i} has wrong length");
            for (j, v) in row.iter().enumerate() {
                m.data[i * n + j] = *v;
            }
        }
        m
    }


    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }


    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.data[i * n + j] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    fn norm_1(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.at(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// LU factorization with partial pivoting, in place on a copy.
    fn factorize(&self) -> Result<LuFactors, SingularSystem> {
        let n = self.n;
        let mut lu = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_val = lu[col * n + col].abs();
            for r in (col + 1)..n {
                let v = lu[r * n + col].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = r;
                }
            }
            if pivot_val == 0.0 || !pivot_val.is_finite() {
                return Err(SingularSystem {
                    condition: f64::INFINITY,
                });
            }
            if pivot_row != col {
                for j in 0..n {
                    lu.swap(col * n + j, pivot_row * n + j);
                }
                perm.swap(col, pivot_row);
            }
            let pivot = lu[col * n + col];
            for r in (col + 1)..n {
                let factor = lu[r * n + col] / pivot;
                lu[r * n + col] = factor;
                for j in (col + 1)..n {
                    lu[r * n + j] -= factor * lu[col * n + j];
                }
            }
        }
        Ok(LuFactors { n, lu, perm })
    }

    /// Solves `A x = b`, returning the solution and a 1-norm condition
    /// estimate of the equilibrated system. The cubic-in-time rows mix
    /// magnitudes badly, so rows and columns are scaled to unit max before
    /// factorization, and one step of iterative refinement against the
    /// original matrix keeps the defining-row residuals near machine
    /// precision.
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, f64), SingularSystem> {
        assert_eq!(b.len(), self.n);
        let n = self.n;

        let mut row_scale = vec![1.0; n];
        for i in 0..n {
            let m = (0..n).map(|j| self.at(i, j).abs()).fold(0.0, f64::max);
            if m > 0.0 && m.is_finite() {
                row_scale[i] = 1.0 / m;
            }
        }
        let mut scaled = self.clone();
        for i in 0..n {
            for j in 0..n {
                scaled.data[i * n + j] *= row_scale[i];
            }
        }
        let mut col_scale = vec![1.0; n];
        for j in 0..n {
            let m = (0..n).map(|i| scaled.at(i, j).abs()).fold(0.0, f64::max);
            if m > 0.0 && m.is_finite() {
                col_scale[j] = 1.0 / m;
            }
        }
        for i in 0..n {
            for j in 0..n {
                scaled.data[i * n + j] *= col_scale[j];
            }
        }

        let factors = scaled.factorize()?;
        let solve_scaled = |rhs: &[f64]| -> Vec<f64> {
            let rb: Vec<f64> = rhs.iter().zip(&row_scale) .map(|(v, s)| v * s).collect();
            let y = factors.solve(&rb);
            y.iter().zip(&col_scale).map(|(v, s)| v * s).collect()
        };

        let mut x = solve_scaled(b);
        // Refinement against the unscaled system.
        for _ in 0..2 {
            let ax = self.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
            let dx = solve_scaled(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }

        let condition = scaled.condition_estimate(&factors);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(SingularSystem { condition });
        }
        Ok((x, condition))
    }

    fn condition_estimate(&self, factors: &LuFactors) -> f64 {
        let n = self.n;
        let mut inv_norm: f64 = 0.0;
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = factors.solve(&e);
            e[j] = 0.0;
            let s: f64 = col.iter().map(|v| v.abs()).sum();
            inv_norm = inv_norm.max(s);
        }
        self.norm_1() * inv_norm
    }
}

struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[self.perm[i]];
            for j in 0..i {
                acc -= self.lu[i * n + j] * y[j];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc -= self.lu[i * n + j] * y[j];
            }
            y[i] = acc / self.lu[i * n + i];
        }
        y
    }
}
