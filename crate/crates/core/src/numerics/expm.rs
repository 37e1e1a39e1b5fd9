//! Action of the matrix exponential, exp(A t) y, by Pade approximation with
//! scaling and squaring.
//!
//! The [13/13] Pade step is standard, but the arithmetic is not plain f64.
//! Stiff kinetic generators mix rates spanning ~9 orders of magnitude; the
//! slow channels appear as Pade-result entries near 1e-9 whose *relative*
//! accuracy decides the long-time populations. A plain f64 solve leaves
//! those entries with absolute error near machine epsilon, i.e. relative
//! error near 1e-7, and ~30 squarings carry that straight into the answer.
//! The matrix powers, the polynomial assembly, the solve (by iterative
//! refinement), and the squaring chain therefore all run in double-double
//! arithmetic.

use crate::error::CoreError;
use crate::kinetics::N_STATES;
use crate::numerics::dd::Dd;
use crate::numerics::lu::lu_factor;

const N: usize = N_STATES;

/// Pade order-13 threshold on the scaled 1-norm.
const THETA_13: f64 = 5.371920351148152;

/// Refinement sweeps for each column of the Pade solve.
const REFINE_SWEEPS: usize = 3;

/// Pade-13 numerator coefficients.
const B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

type Mat = [[f64; N]; N];
type MatDd = [[Dd; N]; N];

fn norm_1(a: &Mat) -> f64 {
    let mut best: f64 = 0.0;
    for c in 0..N {
        let mut s = 0.0;
        for row in a.iter() {
            s += row[c].abs();
        }
        best = best.max(s);
    }
    best
}

/// a * t * 2^neg_pow, entrywise, with no rounding: the products are exact
/// two-products and the power-of-two scale only shifts exponents. Keeping
/// this exact preserves the column-sum structure of kinetic generators,
/// which otherwise decays into a visible trace drift over long times.
fn scaled_product_dd(a: &Mat, t: f64, neg_pow: i32) -> MatDd {
    let scale = 0.5f64.powi(neg_pow);
    let mut out = [[Dd::default(); N]; N];
    for r in 0..N {
        for c in 0..N {
            let p = Dd::prod(a[r][c], t);
            out[r][c] = Dd {
                hi: p.hi * scale,
                lo: p.lo * scale,
            };
        }
    }
    out
}

fn matmul_dd(a: &MatDd, b: &MatDd) -> MatDd {
    let mut out = [[Dd::default(); N]; N];
    for r in 0..N {
        for c in 0..N {
            let mut acc = Dd::default();
            for k in 0..N {
                acc = acc.add(a[r][k].mul(b[k][c]));
            }
            out[r][c] = acc;
        }
    }
    out
}

/// diag * I + sum of coef * M over `terms`, accumulated in double-double.
fn mat_scale_add_dd(terms: &[(f64, &MatDd)], diag: f64) -> MatDd {
    let mut out = [[Dd::default(); N]; N];
    for r in 0..N {
        for c in 0..N {
            let mut acc = if r == c {
                Dd::from_f64(diag)
            } else {
                Dd::default()
            };
            for (s, m) in terms {
                acc = acc.add(m[r][c].mul(Dd::from_f64(*s)));
            }
            out[r][c] = acc;
        }
    }
    out
}

fn mat_add_dd(a: &MatDd, b: &MatDd) -> MatDd {
    let mut out = [[Dd::default(); N]; N];
    for r in 0..N {
        for c in 0..N {
            out[r][c] = a[r][c].add(b[r][c]);
        }
    }
    out
}

/// exp(matrix * t) applied to y.
///
/// `matrix` is any real 5x5 matrix; for kinetic generators the result of
/// acting on a population is again a population up to rounding.
pub fn matrix_exponential_apply(
    matrix: &Mat,
    t: f64,
    y: &[f64; N],
) -> Result<[f64; N], CoreError> {
    for row in matrix {
        for v in row {
            if !v.is_finite() {
                return Err(CoreError::InvalidInput(format!(
                    "non-finite generator entry {v}"
                )));
            }
        }
    }
    if !t.is_finite() {
        return Err(CoreError::InvalidInput(format!("non-finite time {t}")));
    }

    // Scale so the Pade argument norm sits below the order-13 threshold.
    let mut at = [[0.0; N]; N];
    for r in 0..N {
        for c in 0..N {
            at[r][c] = matrix[r][c] * t;
        }
    }
    let norm = norm_1(&at);
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };

    // U and V of the [13/13] Pade form; exp(B) ~ (V - U)^-1 (V + U).
    let bdd = scaled_product_dd(matrix, t, squarings as i32);
    let b2 = matmul_dd(&bdd, &bdd);
    let b4 = matmul_dd(&b2, &b2);
    let b6 = matmul_dd(&b2, &b4);
    let u_poly = {
        let inner = mat_scale_add_dd(&[(B[13], &b6), (B[11], &b4), (B[9], &b2)], 0.0);
        let low = mat_scale_add_dd(&[(B[7], &b6), (B[5], &b4), (B[3], &b2)], B[1]);
        matmul_dd(&bdd, &mat_add_dd(&matmul_dd(&b6, &inner), &low))
    };
    let v_poly = {
        let inner = mat_scale_add_dd(&[(B[12], &b6), (B[10], &b4), (B[8], &b2)], 0.0);
        let low = mat_scale_add_dd(&[(B[6], &b6), (B[4], &b4), (B[2], &b2)], B[0]);
        mat_add_dd(&matmul_dd(&b6, &inner), &low)
    };
    let mut lhs_dd = [[Dd::default(); N]; N];
    let mut rhs_dd = [[Dd::default(); N]; N];
    for r in 0..N {
        for c in 0..N {
            lhs_dd[r][c] = v_poly[r][c].add(u_poly[r][c].neg());
            rhs_dd[r][c] = v_poly[r][c].add(u_poly[r][c]);
        }
    }

    // Solve (V - U) R = (V + U) column by column. The f64 factorization is
    // only a preconditioner; refinement against the double-double system
    // drives every entry of R to small relative error, including the tiny
    // slow-channel entries an f64 solve would leave 1e-7 off.
    let mut lhs = vec![0.0; N * N];
    for r in 0..N {
        for c in 0..N {
            lhs[r * N + c] = lhs_dd[r][c].hi;
        }
    }
    let factors = lu_factor(&lhs, N)?;
    let mut r_mat = [[Dd::default(); N]; N];
    for c in 0..N {
        let mut col = [0.0; N];
        for r in 0..N {
            col[r] = rhs_dd[r][c].hi;
        }
        factors.solve_in_place(&mut col);
        let mut x = col.map(Dd::from_f64);
        for _ in 0..REFINE_SWEEPS {
            let mut resid = [0.0; N];
            for r in 0..N {
                let mut acc = rhs_dd[r][c];
                for (k, xk) in x.iter().enumerate() {
                    acc = acc.add(lhs_dd[r][k].mul(*xk).neg());
                }
                resid[r] = acc.hi + acc.lo;
            }
            factors.solve_in_place(&mut resid);
            for (xk, d) in x.iter_mut().zip(resid) {
                *xk = xk.add(Dd::from_f64(d));
            }
        }
        for r in 0..N {
            r_mat[r][c] = x[r];
        }
    }

    // Compensated squaring chain, then one compensated matrix-vector apply.
    for _ in 0..squarings {
        r_mat = matmul_dd(&r_mat, &r_mat);
    }
    let mut out = [0.0; N];
    for r in 0..N {
        let mut acc = Dd::default();
        for c in 0..N {
            acc = acc.add(r_mat[r][c].mul(Dd::from_f64(y[c])));
        }
        out[r] = acc.hi + acc.lo;
    }
    Ok(out)
}
