//! Conormal derivatives `D^alpha_* = dt^a0 (sigma d1)^a1 d2^a2 d1^a3` and the
//! anisotropic norms built from them, plus trace and lifting.

use crate::error::{Error, Result};
use crate::fd;
use crate::grid::Grid;
use crate::ramp::{smoothstep, smoothstep_d, SigmaWeight};
use ndarray::{s, Array1, Array2, Array3, Axis};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct MultiIndex {
    pub a0: usize,
    pub a1: usize,
    pub a2: usize,
    pub a3: usize,
}

impl MultiIndex {
    pub const ZERO: Self = Self { a0: 0, a1: 0, a2: 0, a3: 0 };

    pub fn new(a0: usize, a1: usize, a2: usize, a3: usize) -> Self {
        Self { a0, a1, a2, a3 }
    }

    pub fn order(&self) -> usize {
        self.a0 + self.a1 + self.a2 + self.a3
    }

    /// `<alpha> = |alpha| + alpha_3`: a plain normal derivative counts twice.
    pub fn weight(&self) -> usize {
        self.order() + self.a3
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.a0 + o.a0, self.a1 + o.a1, self.a2 + o.a2, self.a3 + o.a3)
    }

    /// All indices with `<alpha> <= m`, optionally restricted to `a0 = 0`.
    pub fn enumerate(m: usize, with_time: bool) -> Vec<Self> {
        let mut out = Vec::new();
        let t_max = if with_time { m } else { 0 };
        for a3 in 0..=m / 2 {
            for a0 in 0..=t_max {
                for a1 in 0..=m {
                    for a2 in 0..=m {
                        let a = Self::new(a0, a1, a2, a3);
                        if a.weight() <= m {
                            out.push(a);
                        }
                    }
                }
            }
        }
        out.sort_by_key(|a| (a.weight(), a.a0, a.a1, a.a2, a.a3));
        out
    }
}

/// Which norm a [`NormReport`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NormDomain {
    /// `H^m_*(Omega)` at one instant.
    Space,
    /// `H^m_*(Omega_T)`.
    SpaceTime,
    /// `H^m(Gamma_T)`.
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub order: usize,
    pub domain: NormDomain,
    /// `(alpha, ||D^alpha u||)` for every index summed.
    pub contributions: Vec<(MultiIndex, f64)>,
    pub total: f64,
}

impl NormReport {
    fn from_squares(order: usize, domain: NormDomain, sq: Vec<(MultiIndex, f64)>) -> Self {
        let total = sq.iter().map(|(_, v)| v).sum::<f64>().sqrt();
        Self {
            order,
            domain,
            contributions: sq.into_iter().map(|(a, v)| (a, v.sqrt())).collect(),
            total,
        }
    }
}

/// A real field on `nt` time levels of the half-plane grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub t0: f64,
    pub dt: f64,
    /// Shape `(nt, n1 + 1, n2)`.
    pub data: Array3<f64>,
    /// Set when the function is known to vanish for `t < t0`.
    pub causal: bool,
}

impl GridFunction {
    pub fn space(grid: Grid, field: Array2<f64>) -> Self {
        let data = field.insert_axis(Axis(0));
        Self { grid, t0: 0.0, dt: 0.0, data, causal: false }
    }

    pub fn space_time(grid: Grid, t0: f64, dt: f64, data: Array3<f64>) -> Self {
        Self { grid, t0, dt, data, causal: false }
    }

    pub fn from_fn(grid: Grid, t0: f64, dt: f64, nt: usize, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let data = Array3::from_shape_fn((nt, grid.n1 + 1, grid.n2), |(k, i, j)| {
            f(t0 + k as f64 * dt, grid.x1(i), grid.x2(j))
        });
        Self::space_time(grid, t0, dt, data)
    }

    pub fn nt(&self) -> usize {
        self.data.len_of(Axis(0))
    }

    pub fn slice(&self, k: usize) -> Array2<f64> {
        self.data.index_axis(Axis(0), k).to_owned()
    }

    fn with_data(&self, data: Array3<f64>) -> Self {
        Self { data, ..self.clone() }
    }

    pub fn map_slices(&self, f: impl Fn(&Array2<f64>) -> Array2<f64>) -> Self {
        let mut out = self.data.clone();
        for k in 0..self.nt() {
            let v = f(&self.slice(k));
            out.index_axis_mut(Axis(0), k).assign(&v);
        }
        self.with_data(out)
    }

    /// Second-order `d/dt` from the stored history, one-sided at both ends.
    pub fn dt_derivative(&self) -> Result<Self> {
        let nt = self.nt();
        if nt < 3 {
            return Err(Error::GridTooSmall(format!("time derivative needs 3 levels, have {nt}")));
        }
        let d = &self.data;
        let h = self.dt;
        let mut out = Array3::zeros(d.raw_dim());
        out.index_axis_mut(Axis(0), 0).assign(
            &((&d.index_axis(Axis(0), 1) * 4.0 - &d.index_axis(Axis(0), 0) * 3.0
                - &d.index_axis(Axis(0), 2))
                / (2.0 * h)),
        );
        for k in 1..nt - 1 {
            out.index_axis_mut(Axis(0), k).assign(
                &((&d.index_axis(Axis(0), k + 1) - &d.index_axis(Axis(0), k - 1)) / (2.0 * h)),
            );
        }
        out.index_axis_mut(Axis(0), nt - 1).assign(
            &((&d.index_axis(Axis(0), nt - 1) * 3.0 - &d.index_axis(Axis(0), nt - 2) * 4.0
                + &d.index_axis(Axis(0), nt - 3))
                / (2.0 * h)),
        );
        Ok(self.with_data(out))
    }

    /// Time integral of `f(slice)` by the trapezoid rule; a single slice
    /// is returned as is.
    fn time_integral(&self, f: impl Fn(&Array2<f64>) -> f64) -> f64 {
        let nt = self.nt();
        if nt == 1 {
            return f(&self.slice(0));
        }
        (0..nt)
            .map(|k| {
                let w = if k == 0 || k == nt - 1 { 0.5 } else { 1.0 };
                w * self.dt * f(&self.slice(k))
            })
            .sum()
    }

    pub fn sup(&self) -> f64 {
        self.data.fold(0.0, |a, b| a.max(b.abs()))
    }
}

pub fn sigma_d1(grid: &Grid, f: &Array2<f64>) -> Array2<f64> {
    let sigma = SigmaWeight;
    let mut d = grid.d1(f);
    for (i, mut row) in d.axis_iter_mut(Axis(0)).enumerate() {
        row *= sigma.value(grid.x1(i));
    }
    d
}

/// Accuracy order of the direct difference stencils behind the norms.
pub const NORM_STENCIL_ACCURACY: usize = 4;

/// Coefficients `c_j(x)` with `(sigma d1)^a = sum_{j=1..a} c_j(x) d1^j`
/// (`c_0` for `a = 0`).
pub fn sigma_power_coefficients(x: f64, a: usize) -> Vec<f64> {
    let sigma = SigmaWeight;
    let sd: Vec<f64> = (0..=a).map(|n| sigma.derivative_n(x, n)).collect();
    let binom = |n: usize, k: usize| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    // c[j][r] holds the r-th derivative of c_j.
    let mut c = vec![vec![0.0; a + 1]];
    c[0][0] = 1.0;
    for step in 0..a {
        let depth = a - step;
        let mut next = vec![vec![0.0; depth]; c.len() + 1];
        for (j, nj) in next.iter_mut().enumerate() {
            for (r, v) in nj.iter_mut().enumerate() {
                let mut acc = 0.0;
                for s in 0..=r {
                    let mut inner = 0.0;
                    if j < c.len() {
                        inner += c[j][r - s + 1];
                    }
                    if j > 0 {
                        inner += c[j - 1][r - s];
                    }
                    acc += binom(r, s) * sd[s] * inner;
                }
                *v = acc;
            }
        }
        c = next;
    }
    c.into_iter().map(|v| v[0]).collect()
}

/// Apply `D^alpha_*`. Every factor is expanded into plain derivatives that
/// are taken with direct, consistent stencils of each order, so high orders
/// stay accurate next to `x1 = 0` and at the ends of the time window.
pub fn conormal_derivative(u: &GridFunction, alpha: MultiIndex) -> Result<GridFunction> {
    if alpha.a0 > 0 && u.nt() < 3 {
        return Err(Error::GridTooSmall("time derivatives need a stored history".into()));
    }
    let g = u.grid;
    let p = NORM_STENCIL_ACCURACY;
    let base = fd::derivative_along(&u.data, 2, g.h2(), alpha.a2, p, true);
    let base = fd::derivative_along(&base, 0, u.dt, alpha.a0, p, false);
    let mut out = Array3::zeros(base.raw_dim());
    let coeffs: Vec<Vec<f64>> = (0..=g.n1).map(|i| sigma_power_coefficients(g.x1(i), alpha.a1)).collect();
    for j in 0..=alpha.a1 {
        if (0..=g.n1).all(|i| coeffs[i][j] == 0.0) {
            continue;
        }
        let d = fd::derivative_along(&base, 1, g.h1(), j + alpha.a3, p, false);
        for (i, c) in coeffs.iter().enumerate() {
            let mut o = out.index_axis_mut(Axis(1), i);
            o.scaled_add(c[j], &d.index_axis(Axis(1), i));
        }
    }
    Ok(u.with_data(out))
}

/// `H^m_*` norm over the indices the chosen domain enumerates. For
/// [`NormDomain::Space`] the first time level is used.
pub fn hm_star_norm(u: &GridFunction, m: usize, domain: NormDomain) -> Result<NormReport> {
    match domain {
        NormDomain::Space => {
            let slice = GridFunction::space(u.grid, u.slice(0));
            let mut sq = Vec::new();
            for a in MultiIndex::enumerate(m, false) {
                let d = conormal_derivative(&slice, a)?;
                sq.push((a, u.grid.l2_sq(&d.slice(0))));
            }
            Ok(NormReport::from_squares(m, domain, sq))
        }
        NormDomain::SpaceTime => {
            let mut sq = Vec::new();
            for a in MultiIndex::enumerate(m, true) {
                let d = conormal_derivative(u, a)?;
                sq.push((a, d.time_integral(|f| u.grid.l2_sq(f))));
            }
            Ok(NormReport::from_squares(m, domain, sq))
        }
        NormDomain::Boundary => {
            let b = trace(u);
            boundary_norm(&b, &u.grid, u.dt, m)
        }
    }
}

/// `|||u(t_k)|||_{m,*}^2 = sum_j ||dt^j u(t_k)||^2_{H^{m-j}_*}`.
pub fn triple_norm(u: &GridFunction, k: usize, m: usize) -> Result<NormReport> {
    let mut sq = Vec::new();
    for j in 0..=m {
        let dtj = conormal_derivative(u, MultiIndex::new(j, 0, 0, 0))?;
        let slice = GridFunction::space(u.grid, dtj.slice(k));
        for a in MultiIndex::enumerate(m - j, false) {
            let d = conormal_derivative(&slice, a)?;
            sq.push((MultiIndex { a0: j, ..a }, u.grid.l2_sq(&d.slice(0))));
        }
    }
    Ok(NormReport::from_squares(m, NormDomain::SpaceTime, sq))
}

/// `W^{1,inf}_*` (`k = 1`) or `W^{2,inf}_*` (`k = 2`) norm.
pub fn w_star_norm(u: &GridFunction, k: usize) -> Result<f64> {
    let with_time = u.nt() >= 3;
    let mut total = 0.0;
    for a in MultiIndex::enumerate(1, with_time) {
        let d = conormal_derivative(u, a)?;
        total += match k {
            1 => d.sup(),
            2 => w1_inf(&d)?,
            _ => return Err(Error::Domain(format!("W^{{k,inf}}_* is defined for k = 1, 2, got {k}"))),
        };
    }
    Ok(total)
}

/// Plain `W^{1,inf}` norm: sup of the function and of `dt`, `d1`, `d2`.
pub fn w1_inf(u: &GridFunction) -> Result<f64> {
    let mut total = u.sup();
    total += conormal_derivative(u, MultiIndex::new(0, 0, 0, 1))?.sup();
    total += conormal_derivative(u, MultiIndex::new(0, 0, 1, 0))?.sup();
    if u.nt() >= 3 {
        total += conormal_derivative(u, MultiIndex::new(1, 0, 0, 0))?.sup();
    }
    Ok(total)
}

/// Restriction to `x1 = 0`, shape `(nt, n2)`.
pub fn trace(u: &GridFunction) -> Array2<f64> {
    u.data.slice(s![.., 0, ..]).to_owned()
}

/// `H^m(Gamma_T)` norm of boundary data of shape `(nt, n2)`.
pub fn boundary_norm(b: &Array2<f64>, grid: &Grid, dt: f64, m: usize) -> Result<NormReport> {
    let nt = b.nrows();
    let p = NORM_STENCIL_ACCURACY;
    let mut sq = Vec::new();
    for a0 in 0..=m {
        if a0 > 0 && nt < 3 {
            break;
        }
        let dtk = fd::derivative_along(b, 0, dt, a0, p, false);
        for a2 in 0..=m - a0 {
            let d = fd::derivative_along(&dtk, 1, grid.h2(), a2, p, true);
            let per_t: Vec<f64> = d.axis_iter(Axis(0)).map(|r| grid.h2() * r.dot(&r)).collect();
            let v = if nt == 1 {
                per_t[0]
            } else {
                trapezoid(&per_t, dt)
            };
            sq.push((MultiIndex::new(a0, 0, a2, 0), v));
        }
    }
    Ok(NormReport::from_squares(m, NormDomain::Boundary, sq))
}


pub fn trapezoid(v: &[f64], h: f64) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n - 1]))
}

/// Lifting `R v = chi_R(x1) sum_j v_j x1^j / j!` whose normal derivatives at
/// `x1 = 0` reproduce `v_j`; `chi_R` is 1 on `[0, plateau]` and 0 past `plateau + ramp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lifting {
    pub plateau: f64,
    pub ramp: f64,
}

impl Default for Lifting {
    fn default() -> Self {
        Self { plateau: 0.5, ramp: 0.5 }
    }
}

impl Lifting {
    pub fn profile(&self, x1: f64) -> f64 {
        1.0 - smoothstep((x1 - self.plateau) / self.ramp)
    }

    pub fn profile_d(&self, x1: f64) -> f64 {
        -smoothstep_d((x1 - self.plateau) / self.ramp) / self.ramp
    }

    /// Lift boundary data `v_j` (each shape `(nt, n2)`) into the half-plane.
    pub fn lift(&self, grid: &Grid, t0: f64, dt: f64, v: &[Array2<f64>]) -> GridFunction {
        let (nt, n2) = v.first().map(|a| a.dim()).unwrap_or((1, grid.n2));
        let data = Array3::from_shape_fn((nt, grid.n1 + 1, n2), |(k, i, j)| {
            let x = grid.x1(i);
            let mut sum = 0.0;
            let mut pow = 1.0;
            for (order, vj) in v.iter().enumerate() {
                if order > 0 {
                    pow *= x / order as f64;
                }
                sum += vj[[k, j]] * pow;
            }
            self.profile(x) * sum
        });
        GridFunction::space_time(*grid, t0, dt, data)
    }

    /// Lift a single boundary function at one instant.
    pub fn lift_slice(&self, grid: &Grid, v0: &Array1<f64>) -> Array2<f64> {
        Array2::from_shape_fn(grid.shape(), |(i, j)| self.profile(grid.x1(i)) * v0[j])
    }
}
