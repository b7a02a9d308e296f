//! Equation of state closures `rho(p, S)`.

/// Density as a function of pressure and entropy, with the derivatives the
/// linearization needs.
pub trait Eos: Send + Sync {
    fn name(&self) -> &'static str;
    fn density(&self, p: f64, s: f64) -> f64;
    fn density_dp(&self, p: f64, s: f64) -> f64;
    fn density_ds(&self, p: f64, s: f64) -> f64;
    fn density_dpp(&self, p: f64, s: f64) -> f64;
    fn density_dps(&self, p: f64, s: f64) -> f64;

    /// `1/(rho c^2) = rho_p / rho`, the (1,1) entry of `A0`.
    fn inv_rho_c2(&self, p: f64, s: f64) -> f64 {
        self.density_dp(p, s) / self.density(p, s)
    }

    /// Gradient of `inv_rho_c2` with respect to `(p, S)`.
    fn inv_rho_c2_grad(&self, p: f64, s: f64) -> (f64, f64) {
        let r = self.density(p, s);
        let rp = self.density_dp(p, s);
        let rs = self.density_ds(p, s);
        (
            self.density_dpp(p, s) / r - rp * rp / (r * r),
            self.density_dps(p, s) / r - rp * rs / (r * r),
        )
    }
}

/// Ideal gas `rho = p^(1/gamma) exp(-S/gamma)`, so that `c^2 = gamma p / rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealGas {
    pub gamma: f64,
}

impl Default for IdealGas {
    fn default() -> Self {
        Self { gamma: 5.0 / 3.0 }
    }
}

impl IdealGas {
    pub fn new(gamma: f64) -> Self {
        Self { gamma }
    }

    /// Entropy giving density `rho` at pressure `p`.
    pub fn entropy_for(&self, p: f64, rho: f64) -> f64 {
        self.gamma * (p.ln() / self.gamma - rho.ln())
    }
}

impl Eos for IdealGas {
    fn name(&self) -> &'static str {
        "ideal-gas"
    }

    fn density(&self, p: f64, s: f64) -> f64 {
        if p <= 0.0 {
            return f64::NAN;
        }
        p.powf(1.0 / self.gamma) * (-s / self.gamma).exp()
    }

    fn density_dp(&self, p: f64, s: f64) -> f64 {
        self.density(p, s) / (self.gamma * p)
    }

    fn density_ds(&self, p: f64, s: f64) -> f64 {
        -self.density(p, s) / self.gamma
    }

    fn density_dpp(&self, p: f64, s: f64) -> f64 {
        let g = self.gamma;
        self.density(p, s) * (1.0 - g) / (g * g * p * p)
    }

    fn density_dps(&self, p: f64, s: f64) -> f64 {
        -self.density_dp(p, s) / self.gamma
    }

    fn inv_rho_c2(&self, p: f64, _s: f64) -> f64 {
        1.0 / (self.gamma * p)
    }

    fn inv_rho_c2_grad(&self, p: f64, _s: f64) -> (f64, f64) {
        (-1.0 / (self.gamma * p * p), 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let eos = IdealGas::default();
        let (p, s, e) = (1.3, 0.4, 1e-6);
        let fd_p = (eos.density(p + e, s) - eos.density(p - e, s)) / (2.0 * e);
        let fd_s = (eos.density(p, s + e) - eos.density(p, s - e)) / (2.0 * e);
        let fd_pp = (eos.density_dp(p + e, s) - eos.density_dp(p - e, s)) / (2.0 * e);
        let fd_ps = (eos.density_dp(p, s + e) - eos.density_dp(p, s - e)) / (2.0 * e);
        assert!((fd_p - eos.density_dp(p, s)).abs() < 1e-9);
        assert!((fd_s - eos.density_ds(p, s)).abs() < 1e-9);
        assert!((fd_pp - eos.density_dpp(p, s)).abs() < 1e-8);
        assert!((fd_ps - eos.density_dps(p, s)).abs() < 1e-8);
    }

    #[test]
    fn entropy_for_inverts_density() {
        let eos = IdealGas::default();
        let s = eos.entropy_for(2.5, 0.7);
        assert!((eos.density(2.5, s) - 0.7).abs() < 1e-14);
    }

    #[test]
    fn specialised_inv_rho_c2_matches_generic() {
        let eos = IdealGas::default();
        let (p, s) = (0.8, -0.3);
        let generic = eos.density_dp(p, s) / eos.density(p, s);
        assert!((eos.inv_rho_c2(p, s) - generic).abs() < 1e-14);
    }
}
