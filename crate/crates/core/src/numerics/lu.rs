//! Dense LU factorization with partial pivoting, row-major, for the small
//! systems this crate solves (5x5 populations, 15x15 stage systems).

use crate::error::CoreError;

/// Packed L and U factors with the pivot sequence.
#[derive(Clone, Debug)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

/// Factor the row-major n x n matrix `a`. Fails with `SingularMatrix` when
/// a pivot column has no usable entry.
pub fn lu_factor(a: &[f64], n: usize) -> Result<LuFactors, CoreError> {
    assert_eq!(a.len(), n * n, "matrix buffer does not match dimension");
    let mut lu = a.to_vec();
    let mut piv = vec![0usize; n];
    for k in 0..n {
        let mut p = k;
        let mut pmax = lu[k * n + k].abs();
        for r in k + 1..n {
            let v = lu[r * n + k].abs();
            if v > pmax {
                pmax = v;
                p = r;
            }
        }
        if !(pmax > 1e-300) {
            return Err(CoreError::SingularMatrix {
                pivot: lu[p * n + k],
                col: k,
            });
        }
        piv[k] = p;
        if p != k {
            for c in 0..n {
                lu.swap(k * n + c, p * n + c);
            }
        }
        let pivot = lu[k * n + k];
        for r in k + 1..n {
            let f = lu[r * n + k] / pivot;
            lu[r * n + k] = f;
            for c in k + 1..n {
                lu[r * n + c] -= f * lu[k * n + c];
            }
        }
    }
    Ok(LuFactors { n, lu, piv })
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve A x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n, "rhs length does not match dimension");
        for k in 0..n {
            b.swap(k, self.piv[k]);
        }
        // Forward substitution with unit lower triangle.
        for r in 1..n {
            let mut acc = b[r];
            for c in 0..r {
                acc -= self.lu[r * n + c] * b[c];
            }
            b[r] = acc;
        }
        // Back substitution.
        for r in (0..n).rev() {
            let mut acc = b[r];
            for c in r + 1..n {
                acc -= self.lu[r * n + c] * b[c];
            }
            b[r] = acc / self.lu[r * n + r];
        }
    }
}

/// One-shot solve of the row-major n x n system A x = b.
pub fn lu_solve(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>, CoreError> {
    let f = lu_factor(a, n)?;
    let mut x = b.to_vec();
    f.solve_in_place(&mut x);
    Ok(x)
}
