//! Globally adaptive Gauss-Kronrod quadrature.
//!
//! 15-point Kronrod rule with the embedded 7-point Gauss rule for the error
//! estimate, bisecting the worst interval until the summed estimate meets the
//! tolerance. Plenty for the smooth barrier-action integrands used here.

use crate::error::CoreError;

// Kronrod abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights on the odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Kronrod/Gauss evaluation on [a, b]: returns (k15, |k15 - g7|).
fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let f_mid = f(mid);
    let mut k = WGK[7] * f_mid;
    let mut g = WG[3] * f_mid;
    for i in 0..7 {
        let x = half * XGK[i];
        let pair = f(mid - x) + f(mid + x);
        k += WGK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    (k * half, ((k - g) * half).abs())
}

/// Integrate `f` over [a, b] to relative tolerance `rel_tol` with absolute
/// floor `abs_floor`. Fails with `QuadratureFailure` if the interval budget
/// is exhausted before the error estimate converges.
pub(crate) fn adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<f64, CoreError> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_PANELS: usize = 4096;
    // (a, b, value, error) per live panel.
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    let (v, e) = kronrod_panel(&f, a, b);
    panels.push((a, b, v, e));

    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        let tol = abs_floor.max(rel_tol * total.abs());
        if err <= tol {
            if !total.is_finite() {
                return Err(CoreError::QuadratureFailure(format!(
                    "non-finite integral over [{a}, {b}]"
                )));
            }
            return Ok(total);
        }
        if panels.len() >= MAX_PANELS {
            return Err(CoreError::QuadratureFailure(format!(
                "error estimate {err:.3e} above tolerance {tol:.3e} after {MAX_PANELS} panels on [{a}, {b}]"
            )));
        }
        // Bisect the panel with the largest error estimate.
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (pa, pb, _, _) = panels.swap_remove(worst);
        let pm = 0.5 * (pa + pb);
        let (v1, e1) = kronrod_panel(&f, pa, pm);
        let (v2, e2) = kronrod_panel(&f, pm, pb);
        panels.push((pa, pm, v1, e1));
        panels.push((pm, pb, v2, e2));
    }
}
