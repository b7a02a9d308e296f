//! Fields on the space-time grid `t_k = k dt`, `k < nt`, over the spatial
//! grid: both-sided interior fields, boundary rows and states with a front.

use ndarray::{Array1, Array2, Array3, Axis};
use serde::Serialize;
use vsheet_core::fd::derivative_along;
use vsheet_core::grid::zero_state_field;
use vsheet_core::{Error, Grid, Result, Side, Sided, StateField};

/// Accuracy of the time-difference stencils.
pub const TIME_ACCURACY: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceTimeGrid {
    pub grid: Grid,
    pub t_end: f64,
    pub nt: usize,
}

impl SpaceTimeGrid {
    pub fn new(grid: Grid, t_end: f64, nt: usize) -> Result<Self> {
        if nt < TIME_ACCURACY + 1 {
            return Err(Error::GridTooSmall(format!("need at least {} time levels, got {nt}", TIME_ACCURACY + 1)));
        }
        if t_end <= 0.0 || !t_end.is_finite() {
            return Err(Error::Domain(format!("time window must be positive, got {t_end}")));
        }
        Ok(Self { grid, t_end, nt })
    }

    pub fn dt(&self) -> f64 {
        self.t_end / (self.nt - 1) as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn zeros3(&self) -> Array3<f64> {
        let (a, b) = self.grid.shape();
        Array3::zeros((self.nt, a, b))
    }

    pub fn zeros2(&self) -> Array2<f64> {
        Array2::zeros((self.nt, self.grid.n2))
    }

    pub fn dt_of3(&self, f: &Array3<f64>) -> Array3<f64> {
        derivative_along(f, 0, self.dt(), 1, TIME_ACCURACY, false)
    }

    pub fn dt_of2(&self, f: &Array2<f64>) -> Array2<f64> {
        derivative_along(f, 0, self.dt(), 1, TIME_ACCURACY, false)
    }

    /// Trapezoid weight of level `k`.
    pub fn time_weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.nt {
            0.5 * self.dt()
        } else {
            self.dt()
        }
    }

    /// Squared `L2(Omega_T)` norm of one component.
    pub fn l2_sq3(&self, f: &Array3<f64>) -> f64 {
        (0..self.nt).map(|k| self.time_weight(k) * self.grid.l2_sq(&f.index_axis(Axis(0), k).to_owned())).sum()
    }

    /// Squared `L2(Gamma_T)` norm of a boundary function.
    pub fn l2_sq2(&self, f: &Array2<f64>) -> f64 {
        let h2 = self.grid.h2();
        (0..self.nt).map(|k| self.time_weight(k) * h2 * f.row(k).iter().map(|v| v * v).sum::<f64>()).sum()
    }
}

/// Vector-space operations shared by the field containers.
pub trait FieldSet: Clone {
    /// `a self + b other`.
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self;
    fn max_abs(&self) -> f64;

    fn add(&self, other: &Self) -> Self {
        self.lin(1.0, other, 1.0)
    }

    fn sub(&self, other: &Self) -> Self {
        self.lin(1.0, other, -1.0)
    }

    fn scale(&self, a: f64) -> Self {
        self.lin(a, self, 0.0)
    }
}

fn max_abs3(f: &Array3<f64>) -> f64 {
    f.fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Six components per side on the space-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Interior {
    pub fields: Sided<[Array3<f64>; 6]>,
}

impl Interior {
    pub fn zeros(st: &SpaceTimeGrid) -> Self {
        Self { fields: Sided::from_fn(|_| std::array::from_fn(|_| st.zeros3())) }
    }

    pub fn from_slices(st: &SpaceTimeGrid, slices: &[Sided<StateField>]) -> Self {
        let mut out = Self::zeros(st);
        for (k, s) in slices.iter().enumerate() {
            out.set_slice(k, s);
        }
        out
    }

    pub fn slice(&self, k: usize) -> Sided<StateField> {
        self.fields.map(|_, f| std::array::from_fn(|c| f[c].index_axis(Axis(0), k).to_owned()))
    }

    pub fn set_slice(&mut self, k: usize, s: &Sided<StateField>) {
        for side in Side::both() {
            for c in 0..6 {
                self.fields.get_mut(side)[c].index_axis_mut(Axis(0), k).assign(&s.get(side)[c]);
            }
        }
    }

    pub fn nt(&self) -> usize {
        self.fields.plus[0].len_of(Axis(0))
    }

    pub fn l2(&self, st: &SpaceTimeGrid) -> f64 {
        Side::both().iter().flat_map(|&s| self.fields.get(s).iter()).map(|f| st.l2_sq3(f)).sum::<f64>().sqrt()
    }

    /// `L2` norm of the slice at level `k`.
    pub fn slice_l2(&self, grid: &Grid, k: usize) -> f64 {
        Side::both()
            .iter()
            .flat_map(|&s| self.fields.get(s).iter())
            .map(|f| grid.l2_sq(&f.index_axis(Axis(0), k).to_owned()))
            .sum::<f64>()
            .sqrt()
    }
}

impl FieldSet for Interior {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self {
        let comb = |s: Side| -> [Array3<f64>; 6] {
            std::array::from_fn(|c| &self.fields.get(s)[c] * a + &other.fields.get(s)[c] * b)
        };
        Self { fields: Sided::new(comb(Side::Plus), comb(Side::Minus)) }
    }

    fn max_abs(&self) -> f64 {
        Side::both().iter().flat_map(|&s| self.fields.get(s).iter()).fold(0.0, |m, f| m.max(max_abs3(f)))
    }
}

/// Boundary rows on `Gamma_T`: kinematic `+`, kinematic `-`, pressure jump.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRows {
    pub rows: [Array2<f64>; 3],
}

impl BoundaryRows {
    pub fn zeros(st: &SpaceTimeGrid) -> Self {
        Self { rows: std::array::from_fn(|_| st.zeros2()) }
    }

    pub fn l2(&self, st: &SpaceTimeGrid) -> f64 {
        self.rows.iter().map(|r| st.l2_sq2(r)).sum::<f64>().sqrt()
    }
}

impl FieldSet for BoundaryRows {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self {
        Self { rows: std::array::from_fn(|r| &self.rows[r] * a + &other.rows[r] * b) }
    }

    fn max_abs(&self) -> f64 {
        self.rows.iter().fold(0.0f64, |m, r| r.fold(m, |a, b| a.max(b.abs())))
    }
}

/// Both states and the front `phi(t, x2)` on the space-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeState {
    pub u: Interior,
    pub phi: Array2<f64>,
}

impl SpaceTimeState {
    pub fn zeros(st: &SpaceTimeGrid) -> Self {
        Self { u: Interior::zeros(st), phi: st.zeros2() }
    }

    pub fn phi_slice(&self, k: usize) -> Array1<f64> {
        self.phi.row(k).to_owned()
    }

    pub fn l2(&self, st: &SpaceTimeGrid) -> f64 {
        (self.u.l2(st).powi(2) + st.l2_sq2(&self.phi)).sqrt()
    }
}

impl FieldSet for SpaceTimeState {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self {
        Self { u: self.u.lin(a, &other.u, b), phi: &self.phi * a + &other.phi * b }
    }

    fn max_abs(&self) -> f64 {
        self.u.max_abs().max(self.phi.fold(0.0f64, |a, b| a.max(b.abs())))
    }
}

/// Pointwise combination of two sided state fields.
pub fn lin_slice(x: &Sided<StateField>, a: f64, y: &Sided<StateField>, b: f64) -> Sided<StateField> {
    Sided::from_fn(|s| std::array::from_fn(|c| &x.get(s)[c] * a + &y.get(s)[c] * b))
}

pub fn zero_slice(grid: &Grid) -> Sided<StateField> {
    Sided::new(zero_state_field(grid), zero_state_field(grid))
}
