//! Coefficients of the effective linear operator in the characteristic
//! variables `V = (q, u_n, u2, H_n, H2, S)`: the congruences `J^T A J`,
//! `J^T B J` and the zeroth-order matrices.

use crate::basic::{BasicGeometry, BasicSnapshot, BasicState};
use nalgebra::{Cholesky, SymmetricEigen};
use ndarray::{Array1, Array2};
use serde::Serialize;
use vsheet_core::geometry::a1_tilde;
use vsheet_core::matrices::{a_matrices, a_matrices_derivative};
use vsheet_core::symmetrizer::{assemble_symmetrizer, LambdaField};
use vsheet_core::{Eos, Error, Grid, Mat6, Result, Side, Sided, Vec6};

/// A matrix-valued grid field, stored once when it is constant.
#[derive(Debug, Clone, PartialEq)]
pub enum CoeffField {
    Uniform(Mat6),
    Varying(Array2<Mat6>),
}

impl CoeffField {
    pub fn at(&self, i: usize, j: usize) -> Mat6 {
        match self {
            CoeffField::Uniform(m) => *m,
            CoeffField::Varying(a) => a[[i, j]],
        }
    }

    /// Collapse to [`CoeffField::Uniform`] when every entry is identical.
    pub fn compress(a: Array2<Mat6>) -> Self {
        let first = a[[0, 0]];
        if a.iter().all(|m| *m == first) {
            CoeffField::Uniform(first)
        } else {
            CoeffField::Varying(a)
        }
    }

    pub fn map(&self, shape: (usize, usize), f: impl Fn(usize, usize, &Mat6) -> Mat6) -> Self {
        match self {
            CoeffField::Uniform(m) => CoeffField::Uniform(f(0, 0, m)),
            CoeffField::Varying(a) => CoeffField::Varying(Array2::from_shape_fn(shape, |(i, j)| f(i, j, &a[[i, j]]))),
        }
    }

    /// Entrywise `d/dx1` (axis 0) or `d/dx2` (axis 1) with the grid stencils.
    pub fn derivative(&self, grid: &Grid, axis: usize) -> Self {
        match self {
            CoeffField::Uniform(_) => CoeffField::Uniform(Mat6::zeros()),
            CoeffField::Varying(a) => {
                let mut out = Array2::from_elem(a.raw_dim(), Mat6::zeros());
                for r in 0..6 {
                    for c in 0..6 {
                        let e = a.map(|m| m[(r, c)]);
                        let d = if axis == 0 { grid.d1(&e) } else { grid.d2(&e) };
                        for (o, v) in out.iter_mut().zip(d.iter()) {
                            o[(r, c)] = *v;
                        }
                    }
                }
                CoeffField::compress(out)
            }
        }
    }
}

/// `J` with `U' = J V`, and its derivatives, from the basic state.
pub fn j_matrix(u: &Vec6, d2_psi: f64) -> Mat6 {
    let h_tau = u[3] * d2_psi + u[4];
    let mut j = Mat6::identity();
    j[(0, 3)] = -u[3];
    j[(0, 4)] = -h_tau;
    j[(1, 2)] = d2_psi;
    j[(3, 4)] = d2_psi;
    j
}

/// Derivative of [`j_matrix`] along a direction in which `U` changes by
/// `du` and `d2 Psi` by `dd2_psi`.
pub fn j_derivative(u: &Vec6, d2_psi: f64, du: &Vec6, dd2_psi: f64) -> Mat6 {
    let mut j = Mat6::zeros();
    j[(0, 3)] = -du[3];
    j[(0, 4)] = -(du[3] * d2_psi + u[3] * dd2_psi + du[4]);
    j[(1, 2)] = dd2_psi;
    j[(3, 4)] = dd2_psi;
    j
}

/// The zeroth-order matrix `C` of the linearized operator at one point:
/// `C Y = (Y.grad A0) dt U + (Y.grad A1~) d1 U + (Y.grad A2) d2 U`.
pub fn c_matrix(eos: &dyn Eos, u: &Vec6, dt_u: &Vec6, d1_u: &Vec6, d2_u: &Vec6, dt_psi: f64, d2_psi: f64, d1_phi: f64) -> Mat6 {
    let mut c = Mat6::zeros();
    for k in 0..6 {
        let e = Vec6::from_fn(|r, _| if r == k { 1.0 } else { 0.0 });
        let d = a_matrices_derivative(eos, u, &e);
        let d1t = (d[1] - d[0] * dt_psi - d[2] * d2_psi) / d1_phi;
        let col = d[0] * dt_u + d1t * d1_u + d[2] * d2_u;
        c.set_column(k, &col);
    }
    c
}

/// Effective coefficients for one side.
#[derive(Debug, Clone)]
pub struct SideCoefficients {
    pub j: CoeffField,
    pub a: [CoeffField; 4],
    /// `B` matrices when a `lambda` field was supplied.
    pub b: Option<[CoeffField; 4]>,
    /// `J^T S` mapping the forcing of the `U'` system to the `B` system.
    pub jt_s: Option<CoeffField>,
    /// `A0^-1 J^T`, `A0^-1 A1`, `A0^-1 A2`, `A0^-1 A3` (calligraphic) for time stepping.
    pub step: [CoeffField; 4],
}

/// Boundary-structure diagnostics of the calligraphic `A1` at `x1 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryStructure {
    /// Largest entrywise deviation from `diag(E12, -E12)`.
    pub deviation: f64,
    /// Eigenvalue counts `(positive, negative, zero)` per side at the worst point.
    pub signature: [(usize, usize, usize); 2],
    /// `max |u_n - dt Psi|` and `max |H_n|` on the boundary.
    pub jump_residual: f64,
    pub normal_field_residual: f64,
}

#[derive(Debug, Clone)]
pub struct EffectiveOperator {
    pub grid: Grid,
    pub t: f64,
    pub sides: Sided<SideCoefficients>,
    pub boundary: BoundaryStructure,
}

/// Tolerance on the boundary-structure check.
pub const BOUNDARY_STRUCTURE_TOLERANCE: f64 = 1e-8;

fn e12(sign: f64) -> Mat6 {
    let mut m = Mat6::zeros();
    m[(0, 1)] = sign;
    m[(1, 0)] = sign;
    m
}

fn signature(m: &Mat6, tol: f64) -> (usize, usize, usize) {
    let ev = SymmetricEigen::new(*m).eigenvalues;
    let pos = ev.iter().filter(|&&v| v > tol).count();
    let neg = ev.iter().filter(|&&v| v < -tol).count();
    (pos, neg, 6 - pos - neg)
}

/// Assemble all coefficients at time `t`. Fails with the violated
/// constraint named when `A1` at the boundary deviates from
/// `diag(E12, -E12)` by more than `tolerance`.
pub fn assemble_effective(
    basic: &BasicState,
    t: f64,
    lambda: Option<&LambdaField>,
    tolerance: f64,
) -> Result<EffectiveOperator> {
    let snap = basic.at(t);
    let geo = snap.geometry(&basic.grid);
    assemble_snapshot(&basic.grid, basic.eos.as_ref(), &snap, &geo, lambda, tolerance)
}

pub fn assemble_snapshot(
    grid: &Grid,
    eos: &dyn Eos,
    snap: &BasicSnapshot,
    geo: &BasicGeometry,
    lambda: Option<&LambdaField>,
    tolerance: f64,
) -> Result<EffectiveOperator> {
    geo.lifted.ensure_nondegenerate()?;
    let shape = grid.shape();
    let l = &geo.lifted;
    let mut sides = Vec::with_capacity(2);
    for side in Side::both() {
        let u = snap.u.get(side);
        let zero = || Array2::from_elem(shape, Mat6::zeros());
        let (mut jf, mut a0f, mut a1f, mut a2f, mut a3f) = (zero(), zero(), zero(), zero(), zero());
        let mut bf = lambda.map(|_| [zero(), zero(), zero(), zero()]);
        let mut jsf = lambda.map(|_| zero());
        let mut sf = [zero(), zero(), zero(), zero()];
        for i in 0..shape.0 {
            for j in 0..shape.1 {
                let at = |f: &vsheet_core::StateField| Vec6::from_fn(|k, _| f[k][[i, j]]);
                let uv = at(u);
                let dtu = at(snap.dt_u.get(side));
                let d1u = at(geo.d1_u.get(side));
                let d2u = at(geo.d2_u.get(side));
                let (dt_psi, d2_psi, d1_phi) = (l.dt_psi[[i, j]], l.d2_psi[[i, j]], l.d1_phi.get(side)[[i, j]]);
                let am = a_matrices(eos, &uv);
                let a1t = a1_tilde(&am, dt_psi, d2_psi, d1_phi)?;
                let c = c_matrix(eos, &uv, &dtu, &d1u, &d2u, dt_psi, d2_psi, d1_phi);
                let jm = j_matrix(&uv, d2_psi);
                let dtj = j_derivative(&uv, d2_psi, &dtu, geo.dt_d2_psi[[i, j]]);
                let d1j = j_derivative(&uv, d2_psi, &d1u, geo.d1_d2_psi[[i, j]]);
                let d2j = j_derivative(&uv, d2_psi, &d2u, geo.d2_d2_psi[[i, j]]);
                let jt = jm.transpose();
                let a0 = jt * am[0] * jm;
                let a1 = jt * a1t * jm;
                let a2 = jt * am[2] * jm;
                let a3 = jt * (c * jm + am[0] * dtj + a1t * d1j + am[2] * d2j);
                let a0_inv = a0.try_inverse().ok_or(Error::PositivityLost { min_eig: 0.0 })?;
                sf[0][[i, j]] = a0_inv * jt;
                sf[1][[i, j]] = a0_inv * a1;
                sf[2][[i, j]] = a0_inv * a2;
                sf[3][[i, j]] = a0_inv * a3;
                if let (Some(lf), Some(b), Some(js)) = (lambda, bf.as_mut(), jsf.as_mut()) {
                    let lam = lf.values.get(side)[[i, j]];
                    let sb = assemble_symmetrizer(&uv, lam, eos);
                    let b1t = sb.b1_tilde(dt_psi, d2_psi, d1_phi);
                    let sc = sb.s * c;
                    b[0][[i, j]] = jt * sb.b0 * jm;
                    b[1][[i, j]] = jt * b1t * jm;
                    b[2][[i, j]] = jt * sb.b2 * jm;
                    b[3][[i, j]] = jt * (sc * jm + sb.b0 * dtj + b1t * d1j + sb.b2 * d2j);
                    js[[i, j]] = jt * sb.s;
                }
                jf[[i, j]] = jm;
                a0f[[i, j]] = a0;
                a1f[[i, j]] = a1;
                a2f[[i, j]] = a2;
                a3f[[i, j]] = a3;
            }
        }
        sides.push(SideCoefficients {
            j: CoeffField::compress(jf),
            a: [a0f, a1f, a2f, a3f].map(CoeffField::compress),
            b: bf.map(|b| b.map(CoeffField::compress)),
            jt_s: jsf.map(CoeffField::compress),
            step: sf.map(CoeffField::compress),
        });
    }
    let minus = sides.pop().expect("two sides");
    let plus = sides.pop().expect("two sides");
    let sides = Sided::new(plus, minus);
    let boundary = boundary_structure(grid, snap, geo, &sides);
    if boundary.deviation > tolerance {
        let (constraint, residual) = if boundary.jump_residual >= boundary.normal_field_residual {
            ("jump", boundary.jump_residual)
        } else {
            ("normal-field", boundary.normal_field_residual)
        };
        return Err(Error::ConstraintViolated { constraint, residual });
    }
    Ok(EffectiveOperator { grid: *grid, t: snap.t, sides, boundary })
}

fn boundary_structure(grid: &Grid, snap: &BasicSnapshot, geo: &BasicGeometry, sides: &Sided<SideCoefficients>) -> BoundaryStructure {
    let mut deviation = 0.0f64;
    let mut signature_at = [(0, 0, 0); 2];
    let mut jump_residual = 0.0f64;
    let mut normal_field_residual = 0.0f64;
    for (s, side) in Side::both().into_iter().enumerate() {
        let target = e12(side.sign());
        let mut worst = -1.0;
        for j in 0..grid.n2 {
            let a1 = sides.get(side).a[1].at(0, j);
            let dev = (a1 - target).abs().max();
            deviation = deviation.max(dev);
            if dev > worst {
                worst = dev;
                signature_at[s] = signature(&a1, 1e-8);
            }
            let tv = crate::basic::transformed_at(snap, geo, side, 0, j);
            jump_residual = jump_residual.max((tv.u_n - geo.lifted.dt_psi[[0, j]]).abs());
            normal_field_residual = normal_field_residual.max(tv.h_n.abs());
        }
    }
    BoundaryStructure { deviation, signature: signature_at, jump_residual, normal_field_residual }
}

/// Generalized eigenpairs of the pencil `(A1, A0)` at one point, normalized
/// so that `r^T A0 r = 1`; eigenvalues ascending.
pub fn characteristic_pencil(a1: &Mat6, a0: &Mat6) -> Result<(Vec6, Mat6)> {
    let chol = Cholesky::new(*a0).ok_or(Error::PositivityLost { min_eig: f64::NAN })?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse().ok_or(Error::PositivityLost { min_eig: 0.0 })?;
    let m = l_inv * a1 * l_inv.transpose();
    let m = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..6).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = Vec6::from_fn(|k, _| eig.eigenvalues[idx[k]]);
    let mut vectors = Mat6::zeros();
    for (k, &c) in idx.iter().enumerate() {
        vectors.set_column(k, &(l_inv.transpose() * eig.eigenvectors.column(c)));
    }
    Ok((values, vectors))
}

/// Largest characteristic speed of the operator in each direction.
pub fn max_speeds(op: &EffectiveOperator) -> Result<[f64; 2]> {
    let mut speeds = [0.0f64; 2];
    let shape = op.grid.shape();
    for side in Side::both() {
        let c = op.sides.get(side);
        let uniform = c.a.iter().all(|f| matches!(f, CoeffField::Uniform(_)));
        let points: Vec<(usize, usize)> =
            if uniform { vec![(0, 0)] } else { (0..shape.0).flat_map(|i| (0..shape.1).map(move |j| (i, j))).collect() };
        for (i, j) in points {
            let a0 = c.a[0].at(i, j);
            for (d, s) in speeds.iter_mut().enumerate() {
                let (ev, _) = characteristic_pencil(&c.a[d + 1].at(i, j), &a0)?;
                *s = s.max(ev.amax());
            }
        }
    }
    Ok(speeds)
}

/// Helper returning a boundary row of coefficient values for tests and reports.
pub fn boundary_row(field: &CoeffField, n2: usize) -> Array1<Mat6> {
    Array1::from_shape_fn(n2, |j| field.at(0, j))
}
