//! Front lifting into the fixed half-plane and the transformed coefficients.

use crate::error::{Error, Result};
use crate::grid::{Grid, Sided};
use crate::matrices::{Mat6, Vec6};
use crate::ramp::CutoffChi;
use crate::state::Side;
use ndarray::{Array1, Array2};
use serde::Serialize;

/// Smallest admissible `|d1 Phi|` before the change of variables is declared degenerate.
pub const JACOBIAN_FLOOR: f64 = 1e-3;

/// The front `phi(t, x2)` sampled on the periodic `x2` grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontField {
    pub phi: Array1<f64>,
    pub dphi_t: Option<Array1<f64>>,
    pub dphi_2: Option<Array1<f64>>,
}

impl FrontField {
    pub fn new(phi: Array1<f64>) -> Self {
        Self { phi, dphi_t: None, dphi_2: None }
    }

    pub fn flat(n2: usize) -> Self {
        Self {
            phi: Array1::zeros(n2),
            dphi_t: Some(Array1::zeros(n2)),
            dphi_2: Some(Array1::zeros(n2)),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.phi.fold(0.0, |a, b| a.max(b.abs()))
    }

    /// `||phi||_inf < 1/2`, which keeps `d1 Phi^+ >= 1/2` for the default cutoff.
    pub fn is_small(&self) -> bool {
        self.sup_norm() < 0.5
    }

    pub fn slope(&self, grid: &Grid) -> Array1<f64> {
        match &self.dphi_2 {
            Some(d) => d.clone(),
            None => grid.d2_boundary(&self.phi),
        }
    }

    pub fn speed(&self) -> Array1<f64> {
        self.dphi_t.clone().unwrap_or_else(|| Array1::zeros(self.phi.len()))
    }
}

/// `N = (1, -d2 phi)` and `tau = (d2 phi, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangentFrame {
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
}

impl TangentFrame {
    pub fn from_slope(d2phi: f64) -> Self {
        Self { normal: [1.0, -d2phi], tangent: [d2phi, 1.0] }
    }

    /// `N . tau`, which vanishes identically.
    pub fn orthogonality(&self) -> f64 {
        self.normal[0] * self.tangent[0] + self.normal[1] * self.tangent[1]
    }

    pub fn normal_component(&self, v: [f64; 2]) -> f64 {
        self.normal[0] * v[0] + self.normal[1] * v[1]
    }

    pub fn tangential_component(&self, v: [f64; 2]) -> f64 {
        self.tangent[0] * v[0] + self.tangent[1] * v[1]
    }
}

/// `Psi = chi(x1) phi`, its derivatives, and `d1 Phi^{+-} = +-1 + d1 Psi^{+-}`.
/// Both sides share `Psi` because `chi` is even.
#[derive(Debug, Clone)]
pub struct LiftedFront {
    pub psi: Array2<f64>,
    pub dt_psi: Array2<f64>,
    pub d2_psi: Array2<f64>,
    pub d1_phi: Sided<Array2<f64>>,
    pub min_d1_phi_plus: f64,
    pub max_d1_phi_minus: f64,
}

impl LiftedFront {
    pub fn d1_phi_at(&self, side: Side, i: usize, j: usize) -> f64 {
        self.d1_phi.get(side)[[i, j]]
    }

    pub fn ensure_nondegenerate(&self) -> Result<()> {
        let worst = self.min_d1_phi_plus.min(-self.max_d1_phi_minus);
        if worst < JACOBIAN_FLOOR {
            return Err(Error::DegenerateJacobian { value: worst, threshold: JACOBIAN_FLOOR });
        }
        Ok(())
    }
}

pub fn lift_front(grid: &Grid, front: &FrontField, chi: &CutoffChi) -> LiftedFront {
    let slope = front.slope(grid);
    let speed = front.speed();
    let shape = grid.shape();
    let chi_at = |i: usize| chi.value(grid.x1(i));
    let dchi_at = |i: usize| chi.derivative(grid.x1(i));
    let psi = Array2::from_shape_fn(shape, |(i, j)| chi_at(i) * front.phi[j]);
    let dt_psi = Array2::from_shape_fn(shape, |(i, j)| chi_at(i) * speed[j]);
    let d2_psi = Array2::from_shape_fn(shape, |(i, j)| chi_at(i) * slope[j]);
    let plus = Array2::from_shape_fn(shape, |(i, j)| 1.0 + dchi_at(i) * front.phi[j]);
    let minus = Array2::from_shape_fn(shape, |(i, j)| -1.0 + dchi_at(i) * front.phi[j]);
    let min_d1_phi_plus = plus.fold(f64::INFINITY, |a, &b| a.min(b));
    let max_d1_phi_minus = minus.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    LiftedFront {
        psi,
        dt_psi,
        d2_psi,
        d1_phi: Sided::new(plus, minus),
        min_d1_phi_plus,
        max_d1_phi_minus,
    }
}

/// `A1~ = (A1 - A0 dt Psi - A2 d2 Psi) / d1 Phi` at one point.
pub fn a1_tilde(a: &[Mat6; 3], dt_psi: f64, d2_psi: f64, d1_phi: f64) -> Result<Mat6> {
    if d1_phi.abs() < JACOBIAN_FLOOR {
        return Err(Error::DegenerateJacobian { value: d1_phi, threshold: JACOBIAN_FLOOR });
    }
    Ok((a[1] - a[0] * dt_psi - a[2] * d2_psi) / d1_phi)
}

/// Field version of [`a1_tilde`] for one side.
pub fn assemble_a1_tilde(
    grid: &Grid,
    states: &[Array2<f64>; 6],
    lifted: &LiftedFront,
    side: Side,
    eos: &dyn crate::eos::Eos,
) -> Result<Array2<Mat6>> {
    lifted.ensure_nondegenerate()?;
    let mut out = Array2::from_elem(grid.shape(), Mat6::zeros());
    for ((i, j), m) in out.indexed_iter_mut() {
        let u = Vec6::from_fn(|k, _| states[k][[i, j]]);
        let a = crate::matrices::a_matrices(eos, &u);
        *m = a1_tilde(
            &a,
            lifted.dt_psi[[i, j]],
            lifted.d2_psi[[i, j]],
            lifted.d1_phi_at(side, i, j),
        )?;
    }
    Ok(out)
}

/// Normal components and the transformed vectors `v`, `w`, `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformedVectors {
    pub u_n: f64,
    pub h_n: f64,
    pub v: [f64; 2],
    pub w: [f64; 2],
    pub h: [f64; 2],
}

pub fn transformed_vectors(u: &Vec6, dt_psi: f64, d2_psi: f64, d1_phi: f64) -> TransformedVectors {
    let u_n = u[1] - u[2] * d2_psi;
    let h_n = u[3] - u[4] * d2_psi;
    let v = [u_n, u[2] * d1_phi];
    TransformedVectors { u_n, h_n, v, w: [v[0] - dt_psi, v[1]], h: [h_n, u[4] * d1_phi] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::IdealGas;
    use crate::matrices::a_matrices;
    use crate::ramp::make_cutoff;

    fn grid() -> Grid {
        Grid::new(40, 32, 8.0, 2.0 * std::f64::consts::PI).unwrap()
    }

    #[test]
    fn flat_front_lifts_to_identity_map() {
        let g = grid();
        let l = lift_front(&g, &FrontField::flat(g.n2), &make_cutoff());
        assert!(l.psi.iter().all(|&v| v == 0.0));
        assert_eq!(l.min_d1_phi_plus, 1.0);
        assert_eq!(l.max_d1_phi_minus, -1.0);
    }

    #[test]
    fn small_front_keeps_jacobian_above_half() {
        let g = grid();
        let front = FrontField::new(g.boundary_from_fn(|x2| 0.3 * (2.0 * x2).cos()));
        let l = lift_front(&g, &front, &make_cutoff());
        assert!(l.min_d1_phi_plus >= 0.5);
        assert!(l.max_d1_phi_minus <= -0.5);
    }

    #[test]
    fn boundary_trace_of_psi_is_phi() {
        let g = grid();
        let front = FrontField::new(g.boundary_from_fn(|x2| 0.1 * x2.sin()));
        let l = lift_front(&g, &front, &make_cutoff());
        for j in 0..g.n2 {
            assert_eq!(l.psi[[0, j]], 0.1 * g.x2(j).sin());
        }
    }

    #[test]
    fn a1_tilde_reduces_to_plus_minus_a1() {
        let eos = IdealGas::default();
        let u = Vec6::new(1.2, 0.3, -0.1, 0.2, 0.7, 0.05);
        let a = a_matrices(&eos, &u);
        assert_eq!(a1_tilde(&a, 0.0, 0.0, 1.0).unwrap(), a[1]);
        assert_eq!(a1_tilde(&a, 0.0, 0.0, -1.0).unwrap(), -a[1]);
        assert!(matches!(a1_tilde(&a, 0.0, 0.0, 1e-4), Err(Error::DegenerateJacobian { .. })));
    }

    #[test]
    fn steady_front_scales_by_inverse_jacobian() {
        let eos = IdealGas::default();
        let u = Vec6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let a = a_matrices(&eos, &u);
        let m = a1_tilde(&a, 0.0, 0.0, 0.8).unwrap();
        assert!((m[(0, 1)] - 1.0 / 0.8).abs() < 1e-15);
        assert!((m - m.transpose()).amax() == 0.0);
    }

    #[test]
    fn transformed_vectors_on_flat_front() {
        let u = Vec6::new(1.0, 0.4, -0.2, 0.3, 0.9, 0.0);
        let p = transformed_vectors(&u, 0.0, 0.0, 1.0);
        let m = transformed_vectors(&u, 0.0, 0.0, -1.0);
        assert_eq!(p.u_n, 0.4);
        assert_eq!(p.h, [0.3, 0.9]);
        assert_eq!(m.h, [0.3, -0.9]);
    }

    #[test]
    fn frame_is_orthogonal() {
        let f = TangentFrame::from_slope(0.37);
        assert_eq!(f.orthogonality(), 0.0);
        assert_eq!(f.normal_component([1.0, 2.0]), 1.0 - 0.74);
    }
}
