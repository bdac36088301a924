//! Small dense-vector helpers, the discrete H¹ Gram operator and a banded LU
//! with partial pivoting used by the Newton refinement.

/// Euclidean dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Gram matrix of the discrete H¹ inner product restricted to the interior
/// nodes of a uniform grid (Dirichlet ends), one tridiagonal block per
/// coordinate: `K/h + h I` with `K = tridiag(-1, 2, -1)`.
///
/// Vectors are node-major: entry `i * k + a` is coordinate `a` of interior
/// node `i`.
#[derive(Debug, Clone)]
pub struct H1Gram {
    n: usize,
    k: usize,
    off: f64,
    // Thomas factorization: modified super-diagonal and pivots.
    c_prime: Vec<f64>,
    pivots: Vec<f64>,
}

impl H1Gram {
    pub fn new(interior_nodes: usize, k: usize, h: f64) -> Self {
        let diag = 2.0 / h + h;
        let off = -1.0 / h;
        let n = interior_nodes;
        let mut c_prime = vec![0.0; n];
        let mut pivots = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let piv = if i == 0 { diag } else { diag - off * prev_c };
            pivots[i] = piv;
            prev_c = off / piv;
            c_prime[i] = prev_c;
        }
        H1Gram {
            n,
            k,
            off,
            c_prime,
            pivots,
        }
    }

    /// `P x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (n, k) = (self.n, self.k);
        let diag = self.pivots[0];
        let mut y = vec![0.0; n * k];
        for i in 0..n {
            for a in 0..k {
                let mut v = diag * x[i * k + a];
                if i > 0 {
                    v += self.off * x[(i - 1) * k + a];
                }
                if i + 1 < n {
                    v += self.off * x[(i + 1) * k + a];
                }
                y[i * k + a] = v;
            }
        }
        y
    }

    /// `P^{-1} b`
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, k) = (self.n, self.k);
        let mut x = vec![0.0; n * k];
        if n == 0 {
            return x;
        }
        for a in 0..k {
            let mut d = vec![0.0; n];
            d[0] = b[a] / self.pivots[0];
            for i in 1..n {
                d[i] = (b[i * k + a] - self.off * d[i - 1]) / self.pivots[i];
            }
            x[(n - 1) * k + a] = d[n - 1];
            for i in (0..n - 1).rev() {
                x[i * k + a] = d[i] - self.c_prime[i] * x[(i + 1) * k + a];
            }
        }
        x
    }

    /// H¹ inner product of two interior vectors.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        dot(a, &self.apply(b))
    }
}

/// Banded matrix with `kl` sub- and `ku` super-diagonals, factorized in place
/// by Gaussian elimination with partial pivoting (row interchanges widen the
/// upper band to `kl + ku`).
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    factored: bool,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            pivots: Vec::new(),
            factored: false,
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        // column j of row i is stored at offset j + kl - i
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.kl + self.ku {
            return 0.0;
        }
        self.data[self.idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside the band"
        );
        let idx = self.idx(i, j);
        self.data[idx] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    /// Replace row `i` by the unit row `e_i`.
    pub fn set_identity_row(&mut self, i: usize) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        for j in lo..=hi {
            self.set(i, j, if i == j { 1.0 } else { 0.0 });
        }
    }

    /// LU-factorize in place. Returns `false` on an exactly singular pivot.
    pub fn factor(&mut self) -> bool {
        let n = self.n;
        let kl = self.kl;
        let upper = kl + self.ku;
        self.pivots = (0..n).collect();
        for j in 0..n {
            let last = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.data[self.idx(j, j)].abs();
            for r in j + 1..=last {
                let v = self.data[self.idx(r, j)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return false;
            }
            self.pivots[j] = p;
            let col_hi = (j + upper).min(n - 1);
            if p != j {
                for c in j..=col_hi {
                    let a = self.idx(j, c);
                    let b = self.idx(p, c);
                    self.data.swap(a, b);
                }
            }
            let piv = self.data[self.idx(j, j)];
            for r in j + 1..=last {
                let ir = self.idx(r, j);
                let l = self.data[ir] / piv;
                self.data[ir] = l;
                if l != 0.0 {
                    for c in j + 1..=col_hi {
                        let src = self.data[self.idx(j, c)];
                        let dst = self.idx(r, c);
                        self.data[dst] -= l * src;
                    }
                }
            }
        }
        self.factored = true;
        true
    }

    /// Solve `A x = b` using a previous successful `factor`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert!(self.factored, "matrix must be factored before solving");
        let n = self.n;
        let kl = self.kl;
        let upper = kl + self.ku;
        let mut x = b.to_vec();
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                x.swap(j, p);
            }
            let last = (j + kl).min(n - 1);
            for r in j + 1..=last {
                x[r] -= self.data[self.idx(r, j)] * x[j];
            }
        }
        for j in (0..n).rev() {
            let col_hi = (j + upper).min(n - 1);
            let mut s = x[j];
            for c in j + 1..=col_hi {
                s -= self.data[self.idx(j, c)] * x[c];
            }
            x[j] = s / self.data[self.idx(j, j)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(m: &BandedMatrix, x: &[f64]) -> Vec<f64> {
        (0..m.n)
            .map(|i| (0..m.n).map(|j| m.get(i, j) * x[j]).sum())
            .collect()
    }

    #[test]
    fn h1_gram_solve_inverts_apply() {
        let g = H1Gram::new(7, 2, 0.1);
        let x: Vec<f64> = (0..14).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = g.apply(&x);
        let back = g.solve(&y);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn banded_lu_solves_indefinite_system() {
        // tridiagonal with a sign-changing diagonal forces row interchanges
        let n = 9;
        let mut m = BandedMatrix::zeros(n, 2, 2);
        for i in 0..n {
            m.set(i, i, if i % 3 == 0 { 1e-3 } else { -2.0 + i as f64 * 0.1 });
            if i + 1 < n {
                m.set(i, i + 1, 1.5);
                m.set(i + 1, i, -0.7);
            }
            if i + 2 < n {
                m.set(i, i + 2, 0.3);
                m.set(i + 2, i, 0.2);
            }
        }
        let original = m.clone();
        let x_true: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let b = dense_mul(&original, &x_true);
        assert!(m.factor());
        let x = m.solve(&b);
        for (a, e) in x.iter().zip(&x_true) {
            assert!((a - e).abs() < 1e-9, "{a} vs {e}");
        }
    }
}
