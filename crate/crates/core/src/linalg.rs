//! Small dense helpers on complex slices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;

/// `a^H b`
#[inline]
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

#[inline]
pub fn norm(a: &[C64]) -> f64 {
    norm_sqr(a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [C64]) {
    for v in x.iter_mut() {
        *v *= alpha;
    }
}

pub fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn to_dvector(v: &[C64]) -> DVector<C64> {
    DVector::from_column_slice(v)
}

/// Columns as a dense matrix.
pub fn columns_to_matrix(cols: &[Vec<C64>], rows: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for (i, v) in c.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    m
}

/// Solves `(shift * I + W W^H) y = b` through the `r x r` capacitance matrix,
/// where `W` has the given columns.
#[derive(Debug, Clone)]
pub struct ShiftedLowRank {
    shift: f64,
    cols: Vec<Vec<C64>>,
    capacitance: Option<nalgebra::Cholesky<C64, nalgebra::Dyn>>,
}

impl ShiftedLowRank {
    pub fn new(shift: f64, cols: Vec<Vec<C64>>) -> Self {
        assert!(shift > 0.0, "shift must be positive");
        let r = cols.len();
        let capacitance = if r == 0 {
            None
        } else {
            let mut cap = DMatrix::<C64>::zeros(r, r);
            for i in 0..r {
                for j in 0..r {
                    cap[(i, j)] = dot(&cols[i], &cols[j]);
                }
                cap[(i, i)] += C64::new(shift, 0.0);
            }
            // shift > 0 keeps the capacitance matrix positive definite
            Some(
                cap.cholesky()
                    .expect("capacitance matrix is positive definite"),
            )
        };
        Self {
            shift,
            cols,
            capacitance,
        }
    }

    pub fn rank(&self) -> usize {
        self.cols.len()
    }

    pub fn columns(&self) -> &[Vec<C64>] {
        &self.cols
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut y = b.to_vec();
        if let Some(chol) = &self.capacitance {
            let rhs = DVector::from_iterator(self.cols.len(), self.cols.iter().map(|c| dot(c, b)));
            let coef = chol.solve(&rhs);
            for (c, a) in self.cols.iter().zip(coef.iter()) {
                axpy(-*a, c, &mut y);
            }
        }
        scale(1.0 / self.shift, &mut y);
        y
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<C64> {
        let mut m = DMatrix::<C64>::identity(n, n) * C64::new(self.shift, 0.0);
        for c in &self.cols {
            let v = to_dvector(c);
            m += &v * v.adjoint();
        }
        m
    }
}
