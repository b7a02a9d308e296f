//! Symmetric coefficient matrices `A0`, `A1`, `A2` of the quasilinear system
//! and the reduced Rankine-Hugoniot residual.

use crate::eos::Eos;
use crate::error::Result;
use crate::state::PhysState;
use nalgebra::{SMatrix, SVector};
use serde::Serialize;

pub type Mat6 = SMatrix<f64, 6, 6>;
pub type Vec6 = SVector<f64, 6>;
/// A 6x6 coefficient matrix; symmetric for every matrix assembled here.
pub type CoeffMatrix = Mat6;

/// EOS-derived scalars entering the matrices: `g = 1/(rho c^2)` and `rho`.
#[derive(Debug, Clone, Copy)]
pub struct Thermo {
    pub g: f64,
    pub rho: f64,
}

impl Thermo {
    pub fn of(eos: &dyn Eos, p: f64, s: f64) -> Self {
        Self { g: eos.inv_rho_c2(p, s), rho: eos.density(p, s) }
    }

    /// Directional derivative along `(dp, dS)`.
    pub fn derivative(eos: &dyn Eos, p: f64, s: f64, dp: f64, ds: f64) -> Self {
        let (gp, gs) = eos.inv_rho_c2_grad(p, s);
        Self {
            g: gp * dp + gs * ds,
            rho: eos.density_dp(p, s) * dp + eos.density_ds(p, s) * ds,
        }
    }
}

pub fn a0_raw(t: Thermo) -> Mat6 {
    Mat6::from_diagonal(&Vec6::new(t.g, t.rho, t.rho, 1.0, 1.0, 1.0))
}

/// `A1` from thermodynamic scalars and `u`, `H`.
pub fn a1_raw(t: Thermo, u: &Vec6) -> Mat6 {
    let (u1, h1, h2) = (u[1], u[3], u[4]);
    #[rustfmt::skip]
    let m = Mat6::new(
        u1 * t.g, 1.0,        0.0,        0.0, 0.0, 0.0,
        1.0,      t.rho * u1, 0.0,        0.0, h2,  0.0,
        0.0,      0.0,        t.rho * u1, 0.0, -h1, 0.0,
        0.0,      0.0,        0.0,        u1,  0.0, 0.0,
        0.0,      h2,         -h1,        0.0, u1,  0.0,
        0.0,      0.0,        0.0,        0.0, 0.0, u1,
    );
    m
}

pub fn a2_raw(t: Thermo, u: &Vec6) -> Mat6 {
    let (u2, h1, h2) = (u[2], u[3], u[4]);
    #[rustfmt::skip]
    let m = Mat6::new(
        u2 * t.g, 0.0,        1.0,        0.0, 0.0, 0.0,
        0.0,      t.rho * u2, 0.0,        -h2, 0.0, 0.0,
        1.0,      0.0,        t.rho * u2, h1,  0.0, 0.0,
        0.0,      -h2,        h1,         u2,  0.0, 0.0,
        0.0,      0.0,        0.0,        0.0, u2,  0.0,
        0.0,      0.0,        0.0,        0.0, 0.0, u2,
    );
    m
}

pub fn assemble_a0(state: &PhysState, eos: &dyn Eos, k: f64) -> Result<CoeffMatrix> {
    state.ensure_admissible(eos, k)?;
    Ok(a0_raw(Thermo::of(eos, state.p, state.s)))
}

pub fn assemble_a1(state: &PhysState, eos: &dyn Eos, k: f64) -> Result<CoeffMatrix> {
    state.ensure_admissible(eos, k)?;
    Ok(a1_raw(Thermo::of(eos, state.p, state.s), &state.to_vec()))
}

pub fn assemble_a2(state: &PhysState, eos: &dyn Eos, k: f64) -> Result<CoeffMatrix> {
    state.ensure_admissible(eos, k)?;
    Ok(a2_raw(Thermo::of(eos, state.p, state.s), &state.to_vec()))
}

/// `A0(U)`, `A1(U)`, `A2(U)` at a raw vector, without admissibility checks.
pub fn a_matrices(eos: &dyn Eos, u: &Vec6) -> [Mat6; 3] {
    let t = Thermo::of(eos, u[0], u[5]);
    [a0_raw(t), a1_raw(t, u), a2_raw(t, u)]
}

/// Directional derivatives `(Y . grad_U) A_j(U)` for `j = 0, 1, 2`.
pub fn a_matrices_derivative(eos: &dyn Eos, u: &Vec6, y: &Vec6) -> [Mat6; 3] {
    let t = Thermo::of(eos, u[0], u[5]);
    let dt = Thermo::derivative(eos, u[0], u[5], y[0], y[5]);
    let d0 = Mat6::from_diagonal(&Vec6::new(dt.g, dt.rho, dt.rho, 0.0, 0.0, 0.0));

    let mut d1 = Mat6::zeros();
    let m1 = dt.rho * u[1] + t.rho * y[1];
    d1[(0, 0)] = dt.g * u[1] + t.g * y[1];
    d1[(1, 1)] = m1;
    d1[(2, 2)] = m1;
    d1[(3, 3)] = y[1];
    d1[(4, 4)] = y[1];
    d1[(5, 5)] = y[1];
    d1[(1, 4)] = y[4];
    d1[(4, 1)] = y[4];
    d1[(2, 4)] = -y[3];
    d1[(4, 2)] = -y[3];

    let mut d2 = Mat6::zeros();
    let m2 = dt.rho * u[2] + t.rho * y[2];
    d2[(0, 0)] = dt.g * u[2] + t.g * y[2];
    d2[(1, 1)] = m2;
    d2[(2, 2)] = m2;
    d2[(3, 3)] = y[2];
    d2[(4, 4)] = y[2];
    d2[(5, 5)] = y[2];
    d2[(1, 3)] = -y[4];
    d2[(3, 1)] = -y[4];
    d2[(2, 3)] = y[3];
    d2[(3, 2)] = y[3];
    [d0, d1, d2]
}

pub fn is_symmetric(m: &Mat6) -> bool {
    (0..6).all(|i| (0..6).all(|j| m[(i, j)] == m[(j, i)]))
}

/// Reduced Rankine-Hugoniot residual on a current-vortex sheet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhResidual {
    /// `(dt phi - u+_N, dt phi - u-_N, H+_N, H-_N, [q])`.
    pub components: [f64; 5],
    /// `j = rho (u_N - dt phi)` on each side.
    pub mass_flux: [f64; 2],
}

impl RhResidual {
    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0f64, |a, b| a.max(b.abs()))
    }
}

/// Residual of `dt phi = u_N`, `H_N = 0`, `[q] = 0` with `N = (1, -d2 phi)`.
pub fn rh_residual(
    plus: &PhysState,
    minus: &PhysState,
    dphi_t: f64,
    dphi_2: f64,
    eos: &dyn Eos,
) -> RhResidual {
    let un = |s: &PhysState| s.u1 - s.u2 * dphi_2;
    let hn = |s: &PhysState| s.h1 - s.h2 * dphi_2;
    RhResidual {
        components: [
            dphi_t - un(plus),
            dphi_t - un(minus),
            hn(plus),
            hn(minus),
            plus.q() - minus.q(),
        ],
        mass_flux: [
            plus.density(eos) * (un(plus) - dphi_t),
            minus.density(eos) * (un(minus) - dphi_t),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::IdealGas;
    use crate::state::Side;

    #[test]
    fn a1_second_row_example() {
        let eos = IdealGas::default();
        let s = eos.entropy_for(1.0, 2.0);
        let st = PhysState::new(1.0, 0.0, 0.0, -1.0, 3.0, s, Side::Plus);
        let a1 = assemble_a1(&st, &eos, 1e-6).unwrap();
        let row: Vec<f64> = a1.row(1).iter().copied().collect();
        let want = [1.0, 0.0, 0.0, 0.0, 3.0, 0.0];
        for (a, b) in row.iter().zip(want) {
            assert!((a - b).abs() < 1e-14, "{row:?}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let eos = IdealGas::default();
        let u = Vec6::new(1.3, 0.2, -0.4, 0.7, -0.3, 0.1);
        let y = Vec6::new(0.3, -0.5, 0.8, 0.2, 0.9, -0.6);
        let d = a_matrices_derivative(&eos, &u, &y);
        let h = 1e-6;
        let p = a_matrices(&eos, &(u + y * h));
        let m = a_matrices(&eos, &(u - y * h));
        for j in 0..3 {
            let fd = (p[j] - m[j]) / (2.0 * h);
            assert!((fd - d[j]).amax() < 1e-8, "j={j}\n{fd}\n{}", d[j]);
        }
    }

    #[test]
    fn rh_residual_vanishes_on_tangential_sheet() {
        let eos = IdealGas::default();
        let a = PhysState::new(1.0, 0.0, 1.0, 0.0, 1.0, 0.0, Side::Plus);
        let b = PhysState::new(1.5, 0.0, -1.0, 0.0, 0.0, 0.0, Side::Minus);
        let r = rh_residual(&a, &b, 0.0, 0.0, &eos);
        assert!(r.max_abs() < 1e-15);
        assert_eq!(r.mass_flux, [0.0, 0.0]);
    }
}
