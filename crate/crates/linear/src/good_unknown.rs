//! Alinhac's good unknown `U' = dU - (d1 U^ / d1 Phi^) Psi` and its inverse.

use crate::basic::{BasicGeometry, BasicSnapshot};
use ndarray::Array2;
use vsheet_core::geometry::JACOBIAN_FLOOR;
use vsheet_core::{Error, Result, Side, Sided, StateField};

fn shift(
    fields: &Sided<StateField>,
    psi: &Array2<f64>,
    geo: &BasicGeometry,
    sign: f64,
) -> Result<Sided<StateField>> {
    let l = &geo.lifted;
    l.ensure_nondegenerate()?;
    let mut out = fields.clone();
    for side in Side::both() {
        let d1u = geo.d1_u.get(side);
        let d1_phi = l.d1_phi.get(side);
        let o = out.get_mut(side);
        for k in 0..6 {
            ndarray::Zip::from(&mut o[k]).and(&d1u[k]).and(d1_phi).and(psi).for_each(|v, &d, &j, &p| {
                *v += sign * d / j * p;
            });
        }
    }
    Ok(out)
}

/// Forward map; `psi` is the lifted front perturbation `chi(x1) phi`.
pub fn good_unknown(
    delta_u: &Sided<StateField>,
    psi: &Array2<f64>,
    _snap: &BasicSnapshot,
    geo: &BasicGeometry,
) -> Result<Sided<StateField>> {
    shift(delta_u, psi, geo, -1.0)
}

/// Inverse map `dU = U' + (d1 U^ / d1 Phi^) Psi`.
pub fn from_good_unknown(
    dot_u: &Sided<StateField>,
    psi: &Array2<f64>,
    _snap: &BasicSnapshot,
    geo: &BasicGeometry,
) -> Result<Sided<StateField>> {
    shift(dot_u, psi, geo, 1.0)
}

/// Guard used by callers that divide by `d1 Phi` pointwise.
pub fn check_jacobian(value: f64) -> Result<()> {
    if value.abs() < JACOBIAN_FLOOR {
        return Err(Error::DegenerateJacobian { value, threshold: JACOBIAN_FLOOR });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basic::ManufacturedBasic;
    use rand::{Rng, SeedableRng};
    use vsheet_core::{Grid, IdealGas, Vec6};

    fn random_field(grid: &Grid, rng: &mut impl Rng) -> Sided<StateField> {
        Sided::from_fn(|_| std::array::from_fn(|_| Array2::from_shape_fn(grid.shape(), |_| rng.random_range(-1.0..1.0))))
    }

    #[test]
    fn zero_psi_is_identity() {
        let g = Grid::new(12, 12, 4.0, 6.0).unwrap();
        let snap = BasicSnapshot::constant(&g, Vec6::new(1.0, 0.0, 0.1, 0.0, 1.0, 0.0), Vec6::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0));
        let geo = snap.geometry(&g);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let du = random_field(&g, &mut rng);
        let out = good_unknown(&du, &g.zeros(), &snap, &geo).unwrap();
        assert_eq!(out, du);
        // A constant basic state has d1 U^ = 0, so any Psi leaves dU unchanged.
        let psi = Array2::from_shape_fn(g.shape(), |_| rng.random_range(-0.3..0.3));
        let shifted = good_unknown(&du, &psi, &snap, &geo).unwrap();
        for side in Side::both() {
            for k in 0..6 {
                let d = &shifted.get(side)[k] - &du.get(side)[k];
                assert!(d.iter().all(|v| v.abs() < 1e-13));
            }
        }
    }

    #[test]
    fn round_trip_is_exact_to_rounding() {
        let eos = IdealGas::default();
        let g = Grid::new(24, 24, 4.0, 2.0 * std::f64::consts::PI).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let m = ManufacturedBasic::random(&mut rng, &eos);
        let snap = m.snapshot(&g, &eos, 0.1);
        let geo = snap.geometry(&g);
        let du = random_field(&g, &mut rng);
        let psi = Array2::from_shape_fn(g.shape(), |_| rng.random_range(-0.3..0.3));
        let dot = good_unknown(&du, &psi, &snap, &geo).unwrap();
        let back = from_good_unknown(&dot, &psi, &snap, &geo).unwrap();
        let mut err = 0.0f64;
        for side in Side::both() {
            for k in 0..6 {
                err = err.max((&back.get(side)[k] - &du.get(side)[k]).fold(0.0, |a, b| a.max(b.abs())));
            }
        }
        assert!(err <= 1e-14, "{err}");
    }
}
