//! Microscopic rate formulas: dipole coupling, radiative pumping, thermal
//! occupations, and tunneling escape through the tilted barrier.
//!
//! Everything works in the canonical units (eV, nm, ns, K). Masses are
//! dimensionless multiples of the free-electron mass and enter through the
//! electron rest energy, so no SI constants appear outside `constants`.

use crate::constants::{C_LIGHT, COULOMB_FACTOR, ELECTRON_REST_ENERGY, HBAR, HBAR_C, K_B};
use crate::error::CoreError;
use crate::model::DeviceParams;
use crate::quad;

/// Dipole-dipole coupling J in eV for two parallel dipoles of length
/// `mu_len` (nm) stacked a distance `d_perp` (nm) apart in a host with
/// relative permittivity `eps_r`.
pub fn coupling_strength(mu_len: f64, eps_r: f64, d_perp: f64) -> f64 {
    COULOMB_FACTOR * mu_len * mu_len / (eps_r * d_perp.powi(3))
}

/// Energies of the symmetric/antisymmetric combinations of two degenerate
/// levels at `e_site` mixed by a coupling `j`: (e_site + j, e_site - j).
pub fn eigenstate_energies(e_site: f64, j: f64) -> (f64, f64) {
    (e_site + j, e_site - j)
}

/// Transition dipole magnitudes of the symmetric and antisymmetric
/// combinations, (|mu1 + mu2|/sqrt(2), |mu1 - mu2|/sqrt(2)). For identical
/// parallel dipoles all oscillator strength concentrates in the first.
pub fn eigenstate_dipoles(mu1: [f64; 3], mu2: [f64; 3]) -> (f64, f64) {
    let mut sum_sq = 0.0;
    let mut diff_sq = 0.0;
    for k in 0..3 {
        sum_sq += (mu1[k] + mu2[k]).powi(2);
        diff_sq += (mu1[k] - mu2[k]).powi(2);
    }
    ((sum_sq / 2.0).sqrt(), (diff_sq / 2.0).sqrt())
}

/// Radiative rate in 1/ns of a transition at `energy` (eV) with dipole
/// length `mu_len` (nm, as |mu|/e).
pub fn pumping_rate(energy: f64, mu_len: f64) -> f64 {
    8.0 * COULOMB_FACTOR * energy.powi(3) * mu_len * mu_len / (HBAR.powi(4) * C_LIGHT.powi(3))
}

/// Bose-Einstein occupation at energy gap `delta_e` (eV) and temperature
/// `temperature` (K). Uses expm1 so small gaps stay accurate.
pub fn planck_occupation(delta_e: f64, temperature: f64) -> f64 {
    1.0 / (delta_e / (K_B * temperature)).exp_m1()
}

fn mass_energy(m_eff: f64) -> f64 {
    m_eff * ELECTRON_REST_ENERGY
}

/// Confinement radius seen by a carrier at `e_star` above the dot-center
/// band minimum: the classically allowed stretch of the tilted dot floor,
/// clamped to the dot height.
fn confinement_radius_raw(e_star: f64, p: &DeviceParams) -> f64 {
    e_star / p.f_d + p.w_d / 2.0
}

/// Semiclassical attempt frequency in 1/ns: carrier speed at `e_star` over
/// the round trip across the confinement radius.
pub fn assault_frequency(e_star: f64, p: &DeviceParams) -> f64 {
    let r = confinement_radius_raw(e_star, p).min(p.w_d);
    carrier_speed(e_star, p) / (2.0 * r)
}

/// `assault_frequency` without the dot-height clamp on the radius. Exposed
/// so the clamp itself is testable; the physical rate uses the clamped form.
pub fn assault_frequency_unclamped(e_star: f64, p: &DeviceParams) -> f64 {
    carrier_speed(e_star, p) / (2.0 * confinement_radius_raw(e_star, p))
}

fn carrier_speed(e_star: f64, p: &DeviceParams) -> f64 {
    // Kinetic energy at the downhill dot edge, where the tilted floor sits
    // F_d * w_d / 2 below the dot center.
    let kinetic = e_star + p.f_d * p.w_d / 2.0;
    C_LIGHT * (2.0 * kinetic / mass_energy(p.m_e_eff)).sqrt()
}

/// Which physical region a profile segment describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Dot,
    Barrier,
    Bulk,
}

/// One linear piece of the conduction-band edge: V runs from `v0` at `x0`
/// to `v1` at `x1` (nm, eV).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub region: Region,
    pub x0: f64,
    pub x1: f64,
    pub v0: f64,
    pub v1: f64,
}

impl Segment {
    fn v_at(&self, x: f64) -> f64 {
        if self.x1 == self.x0 {
            return self.v0;
        }
        self.v0 + (self.v1 - self.v0) * (x - self.x0) / (self.x1 - self.x0)
    }
}

/// Piecewise-linear conduction-band profile along the escape direction,
/// with the carrier energy on the same absolute scale.
///
/// The energy reference (V = 0) is the downhill dot edge at x = 0. The dot
/// floor climbs uphill to F_d * w_d at x = -w_d; the barrier rises from
/// delta_E_c with the dot slope until it has gained F_br * w_br, then the
/// profile drops to the bulk at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct BandProfile {
    pub segments: Vec<Segment>,
    /// Carrier energy above the profile reference: e_star + F_d * w_d / 2.
    pub electron_energy: f64,
}

/// Build the escape-path band profile for a carrier at `e_star` above the
/// dot-center band minimum.
pub fn build_profile(e_star: f64, p: &DeviceParams) -> BandProfile {
    let dot = Segment {
        region: Region::Dot,
        x0: -p.w_d,
        x1: 0.0,
        v0: p.f_d * p.w_d,
        v1: 0.0,
    };
    // The barrier continues the dot tilt until it has climbed by the full
    // barrier drop F_br * w_br. A vanishing dot field degenerates to a ramp
    // of slope F_br over the physical thickness (rectangular when both
    // fields vanish).
    let climb = p.f_br * p.w_br;
    let barrier_len = if p.f_d > 0.0 { climb / p.f_d } else { p.w_br };
    let barrier = Segment {
        region: Region::Barrier,
        x0: 0.0,
        x1: barrier_len,
        v0: p.delta_e_c,
        v1: p.delta_e_c + climb,
    };
    let bulk = Segment {
        region: Region::Bulk,
        x0: barrier_len,
        x1: barrier_len + p.w_br.max(1.0),
        v0: 0.0,
        v1: 0.0,
    };
    BandProfile {
        segments: vec![dot, barrier, bulk],
        electron_energy: e_star + p.f_d * p.w_d / 2.0,
    }
}

/// WKB transmission through the profile by direct quadrature of the decay
/// exponent over every classically forbidden stretch on the escape side
/// (the dot interior is excluded; escape proceeds downhill).
pub fn wkb_transmission_numeric(profile: &BandProfile, m_eff: f64) -> Result<f64, CoreError> {
    let e = profile.electron_energy;
    let two_m = 2.0 * mass_energy(m_eff);
    let mut action_half = 0.0;
    for seg in &profile.segments {
        if seg.region == Region::Dot || seg.x1 <= seg.x0 {
            continue;
        }
        // Clip to the forbidden part of the segment. V is linear, so the
        // turning point is a single interpolation.
        let (mut a, mut b) = (seg.x0, seg.x1);
        let (va, vb) = (seg.v0, seg.v1);
        if va <= e && vb <= e {
            continue;
        }
        if va <= e || vb <= e {
            let x_turn = seg.x0 + (e - va) * (seg.x1 - seg.x0) / (vb - va);
            if va <= e {
                a = x_turn;
            } else {
                b = x_turn;
            }
        }
        let kappa = |x: f64| ((seg.v_at(x) - e).max(0.0) * two_m).sqrt() / HBAR_C;
        action_half += quad::adaptive(kappa, a, b, 1e-10, 1e-14)?;
    }
    Ok((-2.0 * action_half).exp())
}

/// Closed-form WKB transmission for the tilted dot-plus-barrier profile.
///
/// Strict variant: fails with `AboveBarrier` when the carrier energy reaches
/// the barrier edge, where the forbidden region no longer spans the assumed
/// brackets. Requires a nonzero dot field.
pub fn tunneling_rate_closed_form(e_star: f64, p: &DeviceParams) -> Result<f64, CoreError> {
    let barrier_edge = p.delta_e_c - p.f_d * p.w_d / 2.0;
    let base_lo = barrier_edge - e_star;
    if base_lo < 0.0 {
        return Err(CoreError::AboveBarrier {
            energy: e_star,
            barrier: barrier_edge,
        });
    }
    let base_hi = base_lo + p.f_br * p.w_br;
    let coef = 4.0 * (2.0 * mass_energy(p.m_e_eff)).sqrt() / (3.0 * HBAR_C * p.f_d);
    let action = coef * (base_hi.powf(1.5) - base_lo.powf(1.5));
    Ok(assault_frequency(e_star, p) * (-action).exp())
}

/// Tunneling escape rate in 1/ns: attempt frequency times the closed-form
/// WKB transmission, with the forbidden-region brackets clamped at zero so
/// carriers above the barrier transmit freely.
pub fn tunneling_rate(e_star: f64, p: &DeviceParams) -> f64 {
    let raw_lo = p.delta_e_c - p.f_d * p.w_d / 2.0 - e_star;
    let base_lo = raw_lo.max(0.0);
    let base_hi = (raw_lo + p.f_br * p.w_br).max(0.0);
    let coef = 4.0 * (2.0 * mass_energy(p.m_e_eff)).sqrt() / (3.0 * HBAR_C * p.f_d);
    let action = coef * (base_hi.powf(1.5) - base_lo.powf(1.5));
    assault_frequency(e_star, p) * (-action).exp()
}
