//! Double-double arithmetic: a value is the unevaluated sum `hi + lo`,
//! giving roughly 106 bits of significand. Used where plain `f64`
//! accumulation loses too much to cancellation.

use super::dense::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    pub(crate) const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub(crate) fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub(crate) fn to_f64(self) -> f64 {
        self.hi
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    pub(crate) fn add(self, other: Dd) -> Dd {
        let s = self.hi + other.hi;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (other.hi - bb);
        Dd::renorm(s, err + self.lo + other.lo)
    }

    pub(crate) fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub(crate) fn mul(self, other: Dd) -> Dd {
        let p = self.hi * other.hi;
        let err = self.hi.mul_add(other.hi, -p) + (self.hi * other.lo + self.lo * other.hi);
        Dd::renorm(p, err)
    }

    pub(crate) fn mul_f64(self, x: f64) -> Dd {
        let p = self.hi * x;
        let err = self.hi.mul_add(x, -p);
        Dd::renorm(p, err + self.lo * x)
    }

    pub(crate) fn div_f64(self, x: f64) -> Dd {
        let q = self.hi / x;
        let p = q * x;
        let err = q.mul_add(x, -p);
        let r = ((self.hi - p) - err + self.lo) / x;
        Dd::renorm(q, r)
    }
}

/// Row-major matrix of double-doubles, just enough for products.
#[derive(Debug, Clone)]
pub(crate) struct DdMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Dd>,
}

impl DdMatrix {
    pub(crate) fn from_matrix(m: &Matrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m.as_slice().iter().map(|&x| Dd::from(x)).collect(),
        }
    }

    pub(crate) fn identity_minus(&self) -> Self {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let data = (0..n * n)
            .map(|i| {
                let id = Dd::from(if i / n == i % n { 1.0 } else { 0.0 });
                id.add(self.data[i].neg())
            })
            .collect();
        Self { rows: n, cols: n, data }
    }

    /// `self * rhs`, or `self * rhsᵀ` when `transpose_rhs`.
    pub(crate) fn matmul(&self, rhs: &DdMatrix, transpose_rhs: bool) -> Self {
        let (inner, cols) = if transpose_rhs { (rhs.cols, rhs.rows) } else { (rhs.rows, rhs.cols) };
        assert_eq!(self.cols, inner, "dd matmul shape mismatch");
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            for j in 0..cols {
                let mut acc = Dd::ZERO;
                for l in 0..inner {
                    let b = if transpose_rhs { rhs.data[j * rhs.cols + l] } else { rhs.data[l * rhs.cols + j] };
                    acc = acc.add(self.data[i * self.cols + l].mul(b));
                }
                data.push(acc);
            }
        }
        Self { rows: self.rows, cols, data }
    }

    pub(crate) fn add(&self, rhs: &DdMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a.add(*b)).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// `(A + Aᵀ) / 2`.
    pub(crate) fn symmetrized(&self) -> Self {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let data = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                if i == j {
                    self.data[idx]
                } else {
                    self.data[idx].add(self.data[j * n + i]).mul_f64(0.5)
                }
            })
            .collect();
        Self { rows: n, cols: n, data }
    }

    /// `vᵀ A v` accumulated in double-double.
    pub(crate) fn quad_form(&self, v: &[f64]) -> Dd {
        assert_eq!((self.rows, self.cols), (v.len(), v.len()));
        let n = v.len();
        let mut acc = Dd::ZERO;
        for i in 0..n {
            let mut row = Dd::ZERO;
            for j in 0..n {
                row = row.add(self.data[i * n + j].mul_f64(v[j]));
            }
            acc = acc.add(row.mul_f64(v[i]));
        }
        acc
    }

    pub(crate) fn trace(&self) -> Dd {
        (0..self.rows).fold(Dd::ZERO, |acc, i| acc.add(self.data[i * self.cols + i]))
    }

    /// Rounds every entry to the nearest `f64`.
    pub(crate) fn to_matrix(&self) -> Matrix {
        Matrix::from_row_major(self.rows, self.cols, self.data.iter().map(|d| d.to_f64()).collect())
            .expect("shape preserved")
    }
}
