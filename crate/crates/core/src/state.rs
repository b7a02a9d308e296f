//! One-sided unknown vector `U = (p, u1, u2, H1, H2, S)`.

use crate::eos::Eos;
use crate::error::{Error, Result};
use crate::matrices::Vec6;
use serde::Serialize;

/// Default admissibility margin for `rho` and `rho_p`.
pub const DEFAULT_ADMISSIBILITY_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    pub fn both() -> [Side; 2] {
        [Side::Plus, Side::Minus]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysState {
    pub p: f64,
    pub u1: f64,
    pub u2: f64,
    pub h1: f64,
    pub h2: f64,
    pub s: f64,
    pub side: Side,
}

/// Result of the hyperbolicity test `rho >= k`, `rho_p >= k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperbolicityCertificate {
    pub ok: bool,
    pub rho: f64,
    pub rho_p: f64,
    pub margin: f64,
    /// `min(rho, rho_p) - k`; negative when the test fails.
    pub deficit: f64,
}

impl PhysState {
    pub fn new(p: f64, u1: f64, u2: f64, h1: f64, h2: f64, s: f64, side: Side) -> Self {
        Self { p, u1, u2, h1, h2, s, side }
    }

    pub fn from_vec(v: &Vec6, side: Side) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5], side)
    }

    pub fn to_vec(&self) -> Vec6 {
        Vec6::new(self.p, self.u1, self.u2, self.h1, self.h2, self.s)
    }

    pub fn h_sq(&self) -> f64 {
        self.h1 * self.h1 + self.h2 * self.h2
    }

    /// Total pressure `q = p + |H|^2 / 2`.
    pub fn q(&self) -> f64 {
        self.p + 0.5 * self.h_sq()
    }

    pub fn density(&self, eos: &dyn Eos) -> f64 {
        eos.density(self.p, self.s)
    }

    pub fn check_hyperbolicity(&self, eos: &dyn Eos, k: f64) -> HyperbolicityCertificate {
        let rho = eos.density(self.p, self.s);
        let rho_p = eos.density_dp(self.p, self.s);
        let deficit = rho.min(rho_p) - k;
        // NaN compares false, so undefined densities fail the test.
        let ok = rho >= k && rho_p >= k && rho.is_finite() && rho_p.is_finite();
        HyperbolicityCertificate { ok, rho, rho_p, margin: k, deficit }
    }

    pub fn ensure_admissible(&self, eos: &dyn Eos, k: f64) -> Result<()> {
        let cert = self.check_hyperbolicity(eos, k);
        if cert.ok {
            return Ok(());
        }
        if !(cert.rho >= k) {
            return Err(Error::Inadmissible { quantity: "rho", value: cert.rho, margin: k });
        }
        Err(Error::Inadmissible { quantity: "rho_p", value: cert.rho_p, margin: k })
    }

    /// `c = sqrt(1 / rho_p)`.
    pub fn sound_speed(&self, eos: &dyn Eos, k: f64) -> Result<f64> {
        self.ensure_admissible(eos, k)?;
        Ok((1.0 / eos.density_dp(self.p, self.s)).sqrt())
    }

    /// Alfven speed `|H| / sqrt(rho)`.
    pub fn alfven_speed(&self, eos: &dyn Eos) -> f64 {
        (self.h_sq() / self.density(eos)).sqrt()
    }
}

/// `c = sqrt(1 / rho_p)` at an admissible state, using the default margin.
pub fn sound_speed(state: &PhysState, eos: &dyn Eos) -> Result<f64> {
    state.sound_speed(eos, DEFAULT_ADMISSIBILITY_MARGIN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::IdealGas;

    #[test]
    fn unit_density_unit_rho_p_gives_unit_sound_speed() {
        // rho = 1 and rho_p = rho/(gamma p) = 1 force p = 1/gamma.
        let eos = IdealGas::default();
        let p = 1.0 / eos.gamma;
        let s = eos.entropy_for(p, 1.0);
        let st = PhysState::new(p, 0.0, 0.0, 0.0, 0.0, s, Side::Plus);
        assert!((st.density(&eos) - 1.0).abs() < 1e-14);
        assert!((sound_speed(&st, &eos).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ideal_gas_sound_speed_at_unit_pressure() {
        let eos = IdealGas::default();
        let st = PhysState::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, Side::Plus);
        let c = sound_speed(&st, &eos).unwrap();
        assert!((c - (5.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn nonpositive_pressure_is_a_domain_error() {
        let eos = IdealGas::default();
        for p in [0.0, -1.0] {
            let st = PhysState::new(p, 0.0, 0.0, 0.0, 0.0, 0.0, Side::Minus);
            let err = sound_speed(&st, &eos).unwrap_err();
            assert!(matches!(err, Error::Inadmissible { quantity: "rho", .. }));
        }
    }

    #[test]
    fn hyperbolicity_reports_rho_p_deficit() {
        // rho = 1, rho_p = 0.1 means gamma p = 10.
        let eos = IdealGas::default();
        let p = 10.0 / eos.gamma;
        let st = PhysState::new(p, 0.0, 0.0, 0.0, 0.0, eos.entropy_for(p, 1.0), Side::Plus);
        let cert = st.check_hyperbolicity(&eos, 0.5);
        assert!(!cert.ok);
        assert!((cert.rho - 1.0).abs() < 1e-12);
        assert!((cert.rho_p - 0.1).abs() < 1e-12);
        assert!((cert.deficit + 0.4).abs() < 1e-12);
        let unit = PhysState::new(1.0 / eos.gamma, 0.0, 0.0, 0.0, 0.0, eos.entropy_for(1.0 / eos.gamma, 1.0), Side::Plus);
        assert!(unit.check_hyperbolicity(&eos, 0.5).ok);
    }

    #[test]
    fn total_pressure() {
        let st = PhysState::new(2.0, 0.0, 0.0, 1.0, 2.0, 0.0, Side::Plus);
        assert_eq!(st.q(), 4.5);
    }
}
