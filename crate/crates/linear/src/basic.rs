//! Basic states about which the problem is linearized, a manufactured family
//! that satisfies the background constraints exactly, and their validation.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::Serialize;
use std::borrow::Cow;
use std::sync::Arc;
use vsheet_core::geometry::{lift_front, transformed_vectors, FrontField, LiftedFront};
use vsheet_core::grid::{state_at, zero_state_field};
use vsheet_core::ramp::{make_cutoff, CutoffChi};
use vsheet_core::symmetrizer::{check_stability_vec, AlfvenData};
use vsheet_core::{Eos, Error, Grid, PhysState, Result, Side, Sided, StateField, Vec6};

/// Basic state and front at one instant, with their time derivatives.
#[derive(Debug, Clone)]
pub struct BasicSnapshot {
    pub t: f64,
    pub u: Sided<StateField>,
    pub dt_u: Sided<StateField>,
    pub phi: Array1<f64>,
    pub dt_phi: Array1<f64>,
    /// `d2 phi`; exact when the generator knows it, differenced otherwise.
    pub d2_phi: Array1<f64>,
}

impl BasicSnapshot {
    /// Piecewise-constant state with a flat front.
    pub fn constant(grid: &Grid, plus: Vec6, minus: Vec6) -> Self {
        let fill = |v: Vec6| -> StateField { std::array::from_fn(|k| Array2::from_elem(grid.shape(), v[k])) };
        Self {
            t: 0.0,
            u: Sided::new(fill(plus), fill(minus)),
            dt_u: Sided::new(zero_state_field(grid), zero_state_field(grid)),
            phi: Array1::zeros(grid.n2),
            dt_phi: Array1::zeros(grid.n2),
            d2_phi: Array1::zeros(grid.n2),
        }
    }

    pub fn at(&self, side: Side, i: usize, j: usize) -> Vec6 {
        state_at(self.u.get(side), i, j)
    }

    fn lerp(a: &Self, b: &Self, w: f64, t: f64) -> Self {
        let mix2 = |x: &Array2<f64>, y: &Array2<f64>| x * (1.0 - w) + y * w;
        let mix_field = |x: &StateField, y: &StateField| -> StateField { std::array::from_fn(|k| mix2(&x[k], &y[k])) };
        let mix_sided = |x: &Sided<StateField>, y: &Sided<StateField>| {
            Sided::new(mix_field(&x.plus, &y.plus), mix_field(&x.minus, &y.minus))
        };
        Self {
            t,
            u: mix_sided(&a.u, &b.u),
            dt_u: mix_sided(&a.dt_u, &b.dt_u),
            phi: &a.phi * (1.0 - w) + &b.phi * w,
            dt_phi: &a.dt_phi * (1.0 - w) + &b.dt_phi * w,
            d2_phi: &a.d2_phi * (1.0 - w) + &b.d2_phi * w,
        }
    }

    /// Lifted front and the spatial derivatives the effective operator needs.
    pub fn geometry(&self, grid: &Grid) -> BasicGeometry {
        let chi = make_cutoff();
        let d2_phi = self.d2_phi.clone();
        let front = FrontField { phi: self.phi.clone(), dphi_t: Some(self.dt_phi.clone()), dphi_2: Some(d2_phi.clone()) };
        let lifted = lift_front(grid, &front, &chi);
        let d22_phi = grid.d2_boundary(&d2_phi);
        let dt2_phi = grid.d2_boundary(&self.dt_phi);
        let by_chi = |f: &dyn Fn(&CutoffChi, f64) -> f64, g: &Array1<f64>| {
            Array2::from_shape_fn(grid.shape(), |(i, j)| f(&chi, grid.x1(i)) * g[j])
        };
        let d = |f: &StateField, op: &dyn Fn(&Array2<f64>) -> Array2<f64>| -> StateField { std::array::from_fn(|k| op(&f[k])) };
        BasicGeometry {
            d1_u: self.u.map(|_, f| d(f, &|a| grid.d1(a))),
            d2_u: self.u.map(|_, f| d(f, &|a| grid.d2(a))),
            dt_d2_psi: by_chi(&|c, x| c.value(x), &dt2_phi),
            d1_d2_psi: by_chi(&|c, x| c.derivative(x), &d2_phi),
            d2_d2_psi: by_chi(&|c, x| c.value(x), &d22_phi),
            d2_phi,
            lifted,
        }
    }
}

/// Derived fields of a snapshot on its grid.
#[derive(Debug, Clone)]
pub struct BasicGeometry {
    pub lifted: LiftedFront,
    pub d1_u: Sided<StateField>,
    pub d2_u: Sided<StateField>,
    pub d2_phi: Array1<f64>,
    pub dt_d2_psi: Array2<f64>,
    pub d1_d2_psi: Array2<f64>,
    pub d2_d2_psi: Array2<f64>,
}

type SnapshotFn = dyn Fn(f64) -> BasicSnapshot + Send + Sync;

#[derive(Clone)]
enum Source {
    Stationary(Arc<BasicSnapshot>),
    Sampled { t0: f64, dt: f64, snapshots: Arc<Vec<BasicSnapshot>> },
    Analytic(Arc<SnapshotFn>),
}

/// A basic state on `Omega_T`: stationary, sampled in time (linear
/// interpolation between snapshots), or evaluated from a closure.
#[derive(Clone)]
pub struct BasicState {
    pub grid: Grid,
    pub eos: Arc<dyn Eos>,
    source: Source,
}

impl std::fmt::Debug for BasicState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.source {
            Source::Stationary(_) => "stationary",
            Source::Sampled { .. } => "sampled",
            Source::Analytic(_) => "analytic",
        };
        f.debug_struct("BasicState").field("grid", &self.grid).field("kind", &kind).finish()
    }
}

impl BasicState {
    pub fn stationary(grid: Grid, eos: Arc<dyn Eos>, snapshot: BasicSnapshot) -> Self {
        Self { grid, eos, source: Source::Stationary(Arc::new(snapshot)) }
    }

    pub fn constant(grid: Grid, eos: Arc<dyn Eos>, plus: Vec6, minus: Vec6) -> Self {
        Self::stationary(grid, eos, BasicSnapshot::constant(&grid, plus, minus))
    }

    pub fn sampled(grid: Grid, eos: Arc<dyn Eos>, t0: f64, dt: f64, snapshots: Vec<BasicSnapshot>) -> Result<Self> {
        if snapshots.is_empty() || dt <= 0.0 {
            return Err(Error::Domain("a sampled basic state needs snapshots and dt > 0".into()));
        }
        Ok(Self { grid, eos, source: Source::Sampled { t0, dt, snapshots: Arc::new(snapshots) } })
    }

    pub fn analytic(grid: Grid, eos: Arc<dyn Eos>, f: impl Fn(f64) -> BasicSnapshot + Send + Sync + 'static) -> Self {
        Self { grid, eos, source: Source::Analytic(Arc::new(f)) }
    }

    pub fn is_stationary(&self) -> bool {
        matches!(self.source, Source::Stationary(_))
    }

    pub fn at(&self, t: f64) -> Cow<'_, BasicSnapshot> {
        match &self.source {
            Source::Stationary(s) => Cow::Borrowed(s.as_ref()),
            Source::Sampled { t0, dt, snapshots } => {
                let x = ((t - t0) / dt).clamp(0.0, (snapshots.len() - 1) as f64);
                let k = (x.floor() as usize).min(snapshots.len().saturating_sub(2));
                if snapshots.len() == 1 {
                    return Cow::Borrowed(&snapshots[0]);
                }
                Cow::Owned(BasicSnapshot::lerp(&snapshots[k], &snapshots[k + 1], x - k as f64, t))
            }
            Source::Analytic(f) => Cow::Owned(f(t)),
        }
    }
}

/// Per-side parameters of [`ManufacturedBasic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManufacturedSide {
    pub p0: f64,
    pub rho0: f64,
    /// Relative pressure bump amplitude.
    pub dp: f64,
    /// Tangential field far from the perturbation.
    pub h0: f64,
    /// Field perturbation amplitude.
    pub eps: f64,
    /// Velocity aligned with the field, `u = kappa H + (0, drift)`.
    pub kappa: f64,
}

/// Exact family of basic states. On each side the physical field is
/// `H = (d psi / dX2, -d psi / dX1)` with the stream function
/// `psi = -xi (H0 + eps exp(-xi^2) cos(k eta))`, `xi = X1 - phi(t, X2)`,
/// `eta = X2 - drift t`, and `phi(t, x2) = a sin(k_phi (x2 - drift t))`.
/// The field is divergence-free, tangent to the front, and advected by the
/// drift, while `u = kappa H + (0, drift)` makes the induction equation hold
/// exactly and gives `u_N = dt phi` on the front.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManufacturedBasic {
    pub plus: ManufacturedSide,
    pub minus: ManufacturedSide,
    pub drift: f64,
    pub front_amplitude: f64,
    pub front_mode: u32,
    pub field_mode: u32,
}

impl ManufacturedBasic {
    /// Random admissible member: `|kappa+-|` at most 60% of the boundary
    /// `a+-` so the stability condition holds with room to spare.
    pub fn random(rng: &mut impl Rng, eos: &dyn Eos) -> Self {
        let side = |rng: &mut dyn rand::RngCore| {
            let p0 = rng.random_range(0.8..1.6);
            let rho0 = rng.random_range(0.8..1.4);
            let h0 = rng.random_range(0.6..1.4) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let eps = rng.random_range(0.0..0.15);
            let dp = rng.random_range(0.0..0.1);
            (p0, rho0, h0, eps, dp)
        };
        let (pp, rp, hp, ep, dpp) = side(rng);
        let (pm, rm, hm, em, dpm) = side(rng);
        let a_of = |p: f64, rho: f64, h: f64, eps: f64| {
            let s = Self::entropy(eos, p, rho);
            // Lower bound on a over the bump range.
            let hmax = h.abs() + eps;
            let u = Vec6::new(p * 1.1, 0.0, 0.0, 0.0, hmax, s);
            AlfvenData::of(&u, eos).a_hat
        };
        let kp = rng.random_range(-0.6..0.6) * a_of(pp, rp, hp, ep);
        let km = rng.random_range(-0.6..0.6) * a_of(pm, rm, hm, em);
        Self {
            plus: ManufacturedSide { p0: pp, rho0: rp, dp: dpp, h0: hp, eps: ep, kappa: kp },
            minus: ManufacturedSide { p0: pm, rho0: rm, dp: dpm, h0: hm, eps: em, kappa: km },
            drift: rng.random_range(-0.5..0.5),
            front_amplitude: rng.random_range(0.0..0.1),
            front_mode: rng.random_range(1..3),
            field_mode: rng.random_range(1..3),
        }
    }

    fn entropy(eos: &dyn Eos, p: f64, rho: f64) -> f64 {
        // Bisection on S for rho(p, S) = rho; density decreases with S.
        let (mut lo, mut hi) = (-50.0, 50.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if eos.density(p, mid) > rho {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn side(&self, side: Side) -> &ManufacturedSide {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    fn wavenumbers(&self, grid: &Grid) -> (f64, f64) {
        let base = 2.0 * std::f64::consts::PI / grid.l2;
        (base * self.front_mode as f64, base * self.field_mode as f64)
    }

    pub fn front(&self, grid: &Grid, t: f64, x2: f64) -> f64 {
        let (kf, _) = self.wavenumbers(grid);
        self.front_amplitude * (kf * (x2 - self.drift * t)).sin()
    }

    pub fn front_d2(&self, grid: &Grid, t: f64, x2: f64) -> f64 {
        let (kf, _) = self.wavenumbers(grid);
        kf * self.front_amplitude * (kf * (x2 - self.drift * t)).cos()
    }

    pub fn front_dt(&self, grid: &Grid, t: f64, x2: f64) -> f64 {
        let (kf, _) = self.wavenumbers(grid);
        -self.drift * kf * self.front_amplitude * (kf * (x2 - self.drift * t)).cos()
    }

    /// Physical state at `(X1, X2)` on one side of the front.
    pub fn physical(&self, grid: &Grid, eos: &dyn Eos, side: Side, t: f64, x1p: f64, x2: f64) -> Vec6 {
        let (kf, kh) = self.wavenumbers(grid);
        let m = self.side(side);
        let eta = x2 - self.drift * t;
        let xi = x1p - self.front(grid, t, x2);
        let dphi = kf * self.front_amplitude * (kf * eta).cos();
        let g = (-xi * xi).exp();
        let (c, s) = ((kh * eta).cos(), (kh * eta).sin());
        // psi = -xi (h0 + eps g cos), derivatives in (xi, eta).
        let psi_xi = -(m.h0 + m.eps * (1.0 - 2.0 * xi * xi) * g * c);
        let psi_eta = xi * m.eps * g * kh * s;
        let h1 = psi_xi * (-dphi) + psi_eta;
        let h2 = -psi_xi;
        let p = m.p0 * (1.0 + m.dp * g * c);
        let s_ent = Self::entropy(eos, m.p0, m.rho0);
        Vec6::new(p, m.kappa * h1, m.kappa * h2 + self.drift, h1, h2, s_ent)
    }

    /// Sample the basic state in the fixed half-plane at time `t`.
    pub fn snapshot(&self, grid: &Grid, eos: &dyn Eos, t: f64) -> BasicSnapshot {
        let chi = make_cutoff();
        let eval = |t: f64| -> Sided<StateField> {
            Sided::from_fn(|side| {
                let mut f = zero_state_field(grid);
                for i in 0..=grid.n1 {
                    let x1 = grid.x1(i);
                    for j in 0..grid.n2 {
                        let x2 = grid.x2(j);
                        let x1p = side.sign() * x1 + chi.value(x1) * self.front(grid, t, x2);
                        let v = self.physical(grid, eos, side, t, x1p, x2);
                        for k in 0..6 {
                            f[k][[i, j]] = v[k];
                        }
                    }
                }
                f
            })
        };
        let u = eval(t);
        // Fourth-order central difference in time; step chosen for ~1e-12 accuracy.
        let d = 1e-3;
        let (a, b, c, e) = (eval(t + 2.0 * d), eval(t + d), eval(t - d), eval(t - 2.0 * d));
        let dt_u = Sided::from_fn(|side| {
            std::array::from_fn(|k| {
                (-&a.get(side)[k] + &(&b.get(side)[k] * 8.0) - &(&c.get(side)[k] * 8.0) + &e.get(side)[k])
                    / (12.0 * d)
            })
        });
        BasicSnapshot {
            t,
            u,
            dt_u,
            phi: grid.boundary_from_fn(|x2| self.front(grid, t, x2)),
            dt_phi: grid.boundary_from_fn(|x2| self.front_dt(grid, t, x2)),
            d2_phi: grid.boundary_from_fn(|x2| self.front_d2(grid, t, x2)),
        }
    }

    pub fn into_state(self, grid: Grid, eos: Arc<dyn Eos>) -> BasicState {
        let e = eos.clone();
        BasicState::analytic(grid, eos, move |t| self.snapshot(&grid, e.as_ref(), t))
    }
}

/// Tolerances for [`validate_basic_state`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationTolerances {
    /// Kinematic jump `dt phi = u_N` at `x1 = 0`.
    pub jump: f64,
    /// Induction constraint on the basic field.
    pub induction: f64,
    /// `div h = 0` in the interior.
    pub divergence: f64,
    /// `H_N = 0` at `x1 = 0`.
    pub normal_field: f64,
    /// Hyperbolicity margin `k`.
    pub k: f64,
    /// Stability margin.
    pub stability: f64,
}

impl Default for ValidationTolerances {
    fn default() -> Self {
        Self { jump: 1e-10, induction: 1e-2, divergence: 1e-2, normal_field: 1e-10, k: 1e-3, stability: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasicStateReport {
    pub t: f64,
    pub jump: f64,
    pub induction: f64,
    pub divergence: f64,
    pub normal_field: f64,
    /// `min(rho, rho_p)` over the domain.
    pub min_hyperbolicity: f64,
    /// Smallest stability margin along the boundary.
    pub stability_margin: f64,
    pub front_sup: f64,
    pub passed: bool,
    pub failures: Vec<&'static str>,
}

/// Residuals of the background constraints at time `t`. Interior residuals
/// are maxima of the discrete residual; the induction residual excludes the
/// far-boundary strip where the one-sided closure is used.
pub fn validate_basic_state(basic: &BasicState, t: f64, tol: &ValidationTolerances) -> BasicStateReport {
    let grid = &basic.grid;
    let eos = basic.eos.as_ref();
    let snap = basic.at(t);
    let geo = snap.geometry(grid);
    let l = &geo.lifted;
    let mut jump = 0.0f64;
    let mut induction = 0.0f64;
    let mut divergence = 0.0f64;
    let mut normal_field = 0.0f64;
    let mut min_hyp = f64::INFINITY;
    for side in Side::both() {
        let u = snap.u.get(side);
        let du_t = snap.dt_u.get(side);
        let d1 = geo.d1_u.get(side);
        let d2 = geo.d2_u.get(side);
        let d1_phi = l.d1_phi.get(side);
        // h = (H_n, H2 d1 Phi), v = (u_n, u2 d1 Phi), w = v - (dt Psi, 0).
        let h_n = &u[3] - &(&u[4] * &l.d2_psi);
        let h_b = &u[4] * d1_phi;
        let u_n = &u[1] - &(&u[2] * &l.d2_psi);
        let v_b = &u[2] * d1_phi;
        let div_h = grid.d1(&h_n) + grid.d2(&h_b);
        let div_v = grid.d1(&u_n) + grid.d2(&v_b);
        for i in 0..=grid.n1 {
            for j in 0..grid.n2 {
                let w1 = u_n[[i, j]] - l.dt_psi[[i, j]];
                let w2 = v_b[[i, j]];
                let (hn, hb) = (h_n[[i, j]], h_b[[i, j]]);
                divergence = divergence.max(div_h[[i, j]].abs());
                if i + 2 <= grid.n1 {
                    for (k, uk) in [(3usize, 1usize), (4, 2)] {
                        let res = du_t[k][[i, j]]
                            + (w1 * d1[k][[i, j]] + w2 * d2[k][[i, j]] - hn * d1[uk][[i, j]] - hb * d2[uk][[i, j]]
                                + u[k][[i, j]] * div_v[[i, j]])
                                / d1_phi[[i, j]];
                        induction = induction.max(res.abs());
                    }
                }
                let state = PhysState::from_vec(&state_at(u, i, j), side);
                let cert = state.check_hyperbolicity(eos, tol.k);
                min_hyp = min_hyp.min(cert.rho.min(cert.rho_p));
            }
        }
        for j in 0..grid.n2 {
            let v = state_at(u, 0, j);
            let un = v[1] - v[2] * geo.d2_phi[j];
            jump = jump.max((snap.dt_phi[j] - un).abs());
            normal_field = normal_field.max((v[3] - v[4] * geo.d2_phi[j]).abs());
        }
    }
    let mut stability_margin = f64::INFINITY;
    for j in 0..grid.n2 {
        let r = check_stability_vec(&snap.at(Side::Plus, 0, j), &snap.at(Side::Minus, 0, j), eos, tol.stability);
        stability_margin = stability_margin.min(r.margin);
    }
    let front_sup = snap.phi.fold(0.0f64, |a, b| a.max(b.abs()));
    let mut failures = Vec::new();
    let checks: [(&'static str, bool); 7] = [
        ("jump", jump <= tol.jump),
        ("induction", induction <= tol.induction),
        ("divergence", divergence <= tol.divergence),
        ("normal-field", normal_field <= tol.normal_field),
        ("hyperbolicity", min_hyp >= tol.k),
        ("stability", stability_margin >= tol.stability),
        ("front-size", front_sup < 0.5),
    ];
    for (name, ok) in checks {
        if !ok {
            failures.push(name);
        }
    }
    BasicStateReport {
        t,
        jump,
        induction,
        divergence,
        normal_field,
        min_hyperbolicity: min_hyp,
        stability_margin,
        front_sup,
        passed: failures.is_empty(),
        failures,
    }
}

/// `u_N`-type boundary traces used by the boundary conditions.
#[derive(Debug, Clone)]
pub struct BoundaryTraces {
    pub u2: Sided<Array1<f64>>,
    pub h2: Sided<Array1<f64>>,
    pub d1_un: Sided<Array1<f64>>,
    pub d1_hn: Sided<Array1<f64>>,
    pub d1_q: Sided<Array1<f64>>,
    pub d2_phi: Array1<f64>,
}

impl BoundaryTraces {
    pub fn of(grid: &Grid, snap: &BasicSnapshot, geo: &BasicGeometry) -> Self {
        let n2 = grid.n2;
        let trace = |f: &dyn Fn(Side, usize) -> f64| Sided::from_fn(|s| Array1::from_shape_fn(n2, |j| f(s, j)));
        let u = &snap.u;
        let d1 = &geo.d1_u;
        let s = &geo.d2_phi;
        Self {
            u2: trace(&|side, j| u.get(side)[2][[0, j]]),
            h2: trace(&|side, j| u.get(side)[4][[0, j]]),
            // d1 of u_n = u1 - u2 d2 Psi; d1 d2 Psi vanishes at x1 = 0.
            d1_un: trace(&|side, j| d1.get(side)[1][[0, j]] - d1.get(side)[2][[0, j]] * s[j]),
            d1_hn: trace(&|side, j| d1.get(side)[3][[0, j]] - d1.get(side)[4][[0, j]] * s[j]),
            d1_q: trace(&|side, j| {
                let v = snap.at(side, 0, j);
                let dv = state_at(d1.get(side), 0, j);
                dv[0] + v[3] * dv[3] + v[4] * dv[4]
            }),
            d2_phi: s.clone(),
        }
    }
}

/// Normal components `u_n`, `H_n` and the transformed vectors at one point.
pub fn transformed_at(snap: &BasicSnapshot, geo: &BasicGeometry, side: Side, i: usize, j: usize) -> vsheet_core::geometry::TransformedVectors {
    let l = &geo.lifted;
    transformed_vectors(&snap.at(side, i, j), l.dt_psi[[i, j]], l.d2_psi[[i, j]], l.d1_phi_at(side, i, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use vsheet_core::IdealGas;

    fn grid(n: usize) -> Grid {
        Grid::new(n, n, 4.0, 2.0 * std::f64::consts::PI).unwrap()
    }

    #[test]
    fn constant_state_has_zero_residuals() {
        let g = grid(16);
        let eos = Arc::new(IdealGas::default());
        let plus = Vec6::new(1.0, 0.0, 0.2, 0.0, 1.0, 0.0);
        let minus = Vec6::new(1.0, 0.0, -0.2, 0.0, 1.0, 0.0);
        let b = BasicState::constant(g, eos, plus, minus);
        let r = validate_basic_state(&b, 0.0, &ValidationTolerances::default());
        assert_eq!((r.jump, r.induction, r.divergence, r.normal_field), (0.0, 0.0, 0.0, 0.0));
        assert!(r.passed, "{:?}", r.failures);
    }

    #[test]
    fn manufactured_states_satisfy_constraints() {
        let eos = Arc::new(IdealGas::default());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let m = ManufacturedBasic::random(&mut rng, eos.as_ref());
            let b = m.into_state(grid(48), eos.clone());
            let r = validate_basic_state(&b, 0.3, &ValidationTolerances::default());
            assert!(r.passed, "{r:?}");
            assert!(r.jump < 1e-12 && r.normal_field < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn sampled_state_interpolates_linearly() {
        let g = grid(8);
        let eos: Arc<dyn Eos> = Arc::new(IdealGas::default());
        let a = BasicSnapshot::constant(&g, Vec6::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0), Vec6::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0));
        let b = BasicSnapshot::constant(&g, Vec6::new(2.0, 0.0, 0.0, 0.0, 1.0, 0.0), Vec6::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0));
        let s = BasicState::sampled(g, eos, 0.0, 1.0, vec![a, b]).unwrap();
        assert!((s.at(0.25).u.plus[0][[3, 3]] - 1.25).abs() < 1e-15);
    }
}
