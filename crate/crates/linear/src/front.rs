//! Front derivatives recovered from boundary traces: `d2 phi` from the two
//! normal-field constraints, `dt phi` from the kinematic row of the `+` side.

use crate::basic::BoundaryTraces;
use crate::solver::LinearState;
use ndarray::Array1;
use vsheet_core::{Error, Grid, Result};

/// Smallest admissible `(H2+)^2 + (H2-)^2` on the boundary.
pub const TANGENTIAL_FIELD_FLOOR: f64 = 1e-12;

/// `d2 phi = d1 H'+_N + d2 H'-_N + d3 phi` and
/// `dt phi = u'+_N + D1 H'+_N + D2 H'-_N + D3 phi`.
#[derive(Debug, Clone)]
pub struct FrontCoefficients {
    pub d: [Array1<f64>; 3],
    pub big_d: [Array1<f64>; 3],
}

pub fn front_coefficients(traces: &BoundaryTraces) -> Result<FrontCoefficients> {
    let (hp, hm) = (&traces.h2.plus, &traces.h2.minus);
    let n = hp.len();
    let denom = hp * hp + hm * hm;
    let worst = denom.fold(f64::INFINITY, |a, &b| a.min(b));
    if worst < TANGENTIAL_FIELD_FLOOR {
        return Err(Error::StabilityViolated { margin: worst, k: TANGENTIAL_FIELD_FLOOR });
    }
    let d1 = hp / &denom;
    let d2 = hm / &denom;
    let d3 = Array1::from_shape_fn(n, |j| (hp[j] * traces.d1_hn.plus[j] - hm[j] * traces.d1_hn.minus[j]) / denom[j]);
    let u2 = &traces.u2.plus;
    let big_d = [-(u2 * &d1), -(u2 * &d2), &traces.d1_un.plus - &(u2 * &d3)];
    Ok(FrontCoefficients { d: [d1, d2, d3], big_d })
}

#[derive(Debug, Clone)]
pub struct FrontReconstruction {
    pub dt_phi: Array1<f64>,
    pub d2_phi: Array1<f64>,
    /// `max |d2 phi - D2 phi|` against periodic differencing of `phi`.
    pub d2_residual: f64,
}

/// Reconstruct `(dt phi, d2 phi)` from the traces of `H'_N+-`, `u'+_N` and `phi`.
pub fn reconstruct_front_derivatives(grid: &Grid, state: &LinearState, traces: &BoundaryTraces) -> Result<FrontReconstruction> {
    let c = front_coefficients(traces)?;
    let hn_p = state.v.plus[3].row(0).to_owned();
    let hn_m = state.v.minus[3].row(0).to_owned();
    let un_p = state.v.plus[1].row(0).to_owned();
    let phi = &state.phi;
    let d2_phi = &c.d[0] * &hn_p + &c.d[1] * &hn_m + &c.d[2] * phi;
    let dt_phi = &un_p + &(&c.big_d[0] * &hn_p) + &c.big_d[1] * &hn_m + &c.big_d[2] * phi;
    let direct = grid.d2_boundary(phi);
    let d2_residual = (&d2_phi - &direct).fold(0.0f64, |a, &b| a.max(b.abs()));
    Ok(FrontReconstruction { dt_phi, d2_phi, d2_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use vsheet_core::Sided;

    fn traces(n: usize, h2p: f64, h2m: f64) -> BoundaryTraces {
        let c = |v: f64| Array1::from_elem(n, v);
        BoundaryTraces {
            u2: Sided::new(c(0.3), c(-0.3)),
            h2: Sided::new(c(h2p), c(h2m)),
            d1_un: Sided::new(c(0.0), c(0.0)),
            d1_hn: Sided::new(c(0.0), c(0.0)),
            d1_q: Sided::new(c(0.0), c(0.0)),
            d2_phi: c(0.0),
        }
    }

    #[test]
    fn zero_traces_give_flat_front() {
        let g = Grid::new(8, 16, 1.0, 1.0).unwrap();
        let s = LinearState::zeros(&g);
        let r = reconstruct_front_derivatives(&g, &s, &traces(16, 1.0, 0.5)).unwrap();
        assert!(r.d2_phi.iter().all(|&v| v == 0.0));
        assert!(r.dt_phi.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_field_side_reads_off_normal_field() {
        let g = Grid::new(8, 16, 1.0, 1.0).unwrap();
        let mut s = LinearState::zeros(&g);
        for j in 0..16 {
            s.v.plus[3][[0, j]] = (j as f64 * 0.4).sin();
            s.v.minus[3][[0, j]] = 7.0;
            s.phi[j] = 0.1 * j as f64;
        }
        let r = reconstruct_front_derivatives(&g, &s, &traces(16, 1.0, 0.0)).unwrap();
        for j in 0..16 {
            assert_eq!(r.d2_phi[j], s.v.plus[3][[0, j]]);
        }
    }

    #[test]
    fn vanishing_tangential_field_is_rejected() {
        let g = Grid::new(8, 16, 1.0, 1.0).unwrap();
        let s = LinearState::zeros(&g);
        assert!(matches!(reconstruct_front_derivatives(&g, &s, &traces(16, 0.0, 0.0)), Err(Error::StabilityViolated { .. })));
    }
}
