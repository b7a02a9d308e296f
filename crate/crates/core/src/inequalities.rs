//! Empirical harness for the Moser-type, embedding and trace inequalities:
//! sampled ratios `LHS / RHS` on random smooth fields, compared across grids.

use crate::error::Result;
use crate::grid::Grid;
use crate::norms::{
    conormal_derivative, hm_star_norm, trace, w1_inf, w_star_norm, GridFunction, MultiIndex,
    NormDomain,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InequalityKind {
    Moser3,
    Moser4,
    Moser6,
    Sobolev1,
    Sobolev2,
    TraceIn,
}

impl InequalityKind {
    pub const ALL: [Self; 6] =
        [Self::Moser3, Self::Moser4, Self::Moser6, Self::Sobolev1, Self::Sobolev2, Self::TraceIn];

    fn needs_pair(self) -> bool {
        matches!(self, Self::Moser3 | Self::Moser4)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnessConfig {
    pub samples: usize,
    /// Cells per direction at each refinement level.
    pub levels: Vec<usize>,
    /// Order `m` for the Moser inequalities.
    pub moser_order: usize,
    pub seed: u64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self { samples: 8, levels: vec![12, 18, 24], moser_order: 2, seed: 7 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnessReport {
    pub kind: InequalityKind,
    /// `(cells, max ratio)` per level.
    pub levels: Vec<(usize, f64)>,
    /// Largest over smallest level constant.
    pub drift: f64,
    /// `drift <= 2`.
    pub bounded: bool,
}

/// Parameters of one smooth sample field: a few Fourier modes in `(t, x1, x2)`
/// damped to negligible size at the far end in `x1`.
#[derive(Debug, Clone)]
pub struct SmoothSample {
    modes: Vec<[f64; 5]>,
}

impl SmoothSample {
    pub fn random(rng: &mut impl Rng) -> Self {
        let modes = (0..3)
            .map(|_| {
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.5..1.5),
                    rng.random_range(-1.5..1.5),
                    rng.random_range(-2i32..=2) as f64,
                    rng.random_range(0.0..std::f64::consts::TAU),
                ]
            })
            .collect();
        Self { modes }
    }

    pub fn eval(&self, t: f64, x1: f64, x2: f64) -> f64 {
        // Gaussian damping keeps every conormal derivative smooth.
        let damp = (-2.0 * x1 * x1).exp();
        damp * self
            .modes
            .iter()
            .map(|[a, kt, k1, k2, ph]| a * (kt * t + k1 * x1 + k2 * x2 + ph).cos())
            .sum::<f64>()
    }

    pub fn sample(&self, grid: Grid, nt: usize) -> GridFunction {
        let dt = 1.0 / (nt - 1) as f64;
        GridFunction::from_fn(grid, 0.0, dt, nt, |t, x1, x2| self.eval(t, x1, x2))
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 && rhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

fn l2_space_time(u: &GridFunction) -> Result<f64> {
    Ok(hm_star_norm(u, 0, NormDomain::SpaceTime)?.total)
}

fn product(u: &GridFunction, v: &GridFunction) -> GridFunction {
    GridFunction { data: &u.data * &v.data, ..u.clone() }
}

/// `LHS / RHS` of one inequality for the given field(s).
pub fn inequality_ratio(kind: InequalityKind, m: usize, u: &GridFunction, v: &GridFunction) -> Result<f64> {
    match kind {
        InequalityKind::Moser3 => {
            let (um, vm) = (
                hm_star_norm(u, m, NormDomain::SpaceTime)?.total,
                hm_star_norm(v, m, NormDomain::SpaceTime)?.total,
            );
            let rhs = um * w_star_norm(v, 1)? + vm * w_star_norm(u, 1)?;
            let mut worst = 0.0f64;
            let all = MultiIndex::enumerate(m, true);
            for a in &all {
                let du = conormal_derivative(u, *a)?;
                for b in all.iter().filter(|b| a.weight() + b.weight() <= m) {
                    let dv = conormal_derivative(v, *b)?;
                    worst = worst.max(ratio(l2_space_time(&product(&du, &dv))?, rhs));
                }
            }
            Ok(worst)
        }
        InequalityKind::Moser4 => {
            let lhs = hm_star_norm(&product(u, v), m, NormDomain::SpaceTime)?.total;
            let rhs = hm_star_norm(u, m, NormDomain::SpaceTime)?.total * w_star_norm(v, 1)?
                + hm_star_norm(v, m, NormDomain::SpaceTime)?.total * w_star_norm(u, 1)?;
            Ok(ratio(lhs, rhs))
        }
        InequalityKind::Moser6 => {
            let fu = GridFunction { data: u.data.mapv(|x| x.sin() + 0.5 * x * x), ..u.clone() };
            Ok(ratio(
                hm_star_norm(&fu, m, NormDomain::SpaceTime)?.total,
                hm_star_norm(u, m, NormDomain::SpaceTime)?.total,
            ))
        }
        InequalityKind::Sobolev1 => Ok(ratio(u.sup(), hm_star_norm(u, 3, NormDomain::SpaceTime)?.total)
            .max(ratio(w_star_norm(u, 1)?, hm_star_norm(u, 4, NormDomain::SpaceTime)?.total))),
        InequalityKind::Sobolev2 => Ok(ratio(w1_inf(u)?, hm_star_norm(u, 5, NormDomain::SpaceTime)?.total)
            .max(ratio(w_star_norm(u, 2)?, hm_star_norm(u, 6, NormDomain::SpaceTime)?.total))),
        InequalityKind::TraceIn => {
            let b = trace(u);
            let per_t: Vec<f64> =
                b.outer_iter().map(|r| u.grid.h2() * r.dot(&r)).collect();
            let lhs = crate::norms::trapezoid(&per_t, u.dt);
            let d1 = u.map_slices(|f| u.grid.d1(f));
            let rhs = l2_space_time(u)?.powi(2) + l2_space_time(&d1)?.powi(2);
            Ok(ratio(lhs, rhs))
        }
    }
}

pub fn inequality_harness(kind: InequalityKind, config: &HarnessConfig) -> Result<HarnessReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let samples: Vec<(SmoothSample, SmoothSample)> = (0..config.samples)
        .map(|_| (SmoothSample::random(&mut rng), SmoothSample::random(&mut rng)))
        .collect();
    let mut levels = Vec::new();
    for &n in &config.levels {
        let grid = Grid::new(n, n, 2.0, std::f64::consts::TAU)?;
        let nt = n / 2 + 1;
        let mut worst = 0.0f64;
        for (a, b) in &samples {
            let u = a.sample(grid, nt);
            let v = if kind.needs_pair() { b.sample(grid, nt) } else { u.clone() };
            worst = worst.max(inequality_ratio(kind, config.moser_order, &u, &v)?);
        }
        levels.push((n, worst));
    }
    let max = levels.iter().map(|l| l.1).fold(0.0, f64::max);
    let min = levels.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
    let drift = if min > 0.0 { max / min } else if max == 0.0 { 1.0 } else { f64::INFINITY };
    Ok(HarnessReport { kind, levels, drift, bounded: drift <= 2.0 })
}
