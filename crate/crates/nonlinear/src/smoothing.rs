//! The `theta` schedule and the smoothing operators `S_theta`: a radial
//! spectral low-pass in `(t, x2)` applied line by line in `x1`, with a
//! harness measuring the constants of the smoothing estimates.

use crate::spacetime::{BoundaryRows, Interior, SpaceTimeState};
use ndarray::{s, Array2, Array3, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use std::sync::Arc;
use vsheet_core::ramp::smoothstep;
use vsheet_core::{Error, Result};

/// `theta_i = sqrt(theta0^2 + i)` and `Delta_i = theta_{i+1} - theta_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaSchedule {
    pub theta0: f64,
}

impl ThetaSchedule {
    pub fn new(theta0: f64) -> Result<Self> {
        if !(theta0 >= 1.0) || !theta0.is_finite() {
            return Err(Error::Domain(format!("theta0 must be at least 1, got {theta0}")));
        }
        Ok(Self { theta0 })
    }

    pub fn theta(&self, i: usize) -> f64 {
        (self.theta0 * self.theta0 + i as f64).sqrt()
    }

    /// `theta_{i+1} - theta_i` in the cancellation-free form `1/(theta_{i+1} + theta_i)`.
    pub fn delta(&self, i: usize) -> f64 {
        1.0 / (self.theta(i + 1) + self.theta(i))
    }

    /// First `i <= i_max` with `Delta_i` outside `[1/(3 theta_i), 1/(2 theta_i)]`.
    pub fn first_violation(&self, i_max: usize) -> Option<usize> {
        (0..=i_max).find(|&i| {
            let (t, d) = (self.theta(i), self.delta(i));
            !(d >= 1.0 / (3.0 * t) && d <= 1.0 / (2.0 * t))
        })
    }
}

/// Symbol profile: 1 on `[0, 1]`, 0 on `[2, inf)`, monotone quintic between.
pub fn symbol(r: f64) -> f64 {
    1.0 - smoothstep(r - 1.0)
}

/// `d/dr symbol(r)`.
pub fn symbol_d(r: f64) -> f64 {
    -vsheet_core::ramp::smoothstep_d(r - 1.0)
}

/// Spectral smoother on `(nt, n2)` planes: the time axis is extended evenly
/// to period `2 (nt - 1)` (a cosine basis), `x2` is periodic, and mode
/// `(k, m)` is scaled by `symbol(|(k, m)| / theta)` with integer mode numbers.
#[derive(Clone)]
pub struct Smoother {
    pub nt: usize,
    pub n2: usize,
    fwd_t: Arc<dyn Fft<f64>>,
    inv_t: Arc<dyn Fft<f64>>,
    fwd_2: Arc<dyn Fft<f64>>,
    inv_2: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Smoother {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Smoother").field("nt", &self.nt).field("n2", &self.n2).finish()
    }
}

type Spectrum = Array2<Complex<f64>>;

impl Smoother {
    pub fn new(nt: usize, n2: usize) -> Result<Self> {
        if nt < 2 || n2 < 2 {
            return Err(Error::GridTooSmall(format!("smoother needs nt, n2 >= 2, got ({nt}, {n2})")));
        }
        let mut p = FftPlanner::new();
        let m = 2 * (nt - 1);
        Ok(Self { nt, n2, fwd_t: p.plan_fft_forward(m), inv_t: p.plan_fft_inverse(m), fwd_2: p.plan_fft_forward(n2), inv_2: p.plan_fft_inverse(n2) })
    }

    fn period(&self) -> usize {
        2 * (self.nt - 1)
    }

    /// Mode numbers of spectrum entry `(r, c)`.
    pub fn modes(&self, r: usize, c: usize) -> (f64, f64) {
        let m = self.period();
        (r.min(m - r) as f64, c.min(self.n2 - c) as f64)
    }

    fn transform_axis(&self, data: &mut Spectrum, axis: usize, fft: &Arc<dyn Fft<f64>>) {
        let mut buf = vec![Complex::default(); data.len_of(Axis(axis))];
        for mut lane in data.lanes_mut(Axis(axis)) {
            buf.iter_mut().zip(lane.iter()).for_each(|(b, v)| *b = *v);
            fft.process(&mut buf);
            lane.iter_mut().zip(&buf).for_each(|(v, b)| *v = *b);
        }
    }

    /// Normalized spectrum of the even extension of `plane`.
    pub fn spectrum(&self, plane: ArrayView2<f64>) -> Spectrum {
        let m = self.period();
        let mut data = Array2::from_shape_fn((m, self.n2), |(r, c)| {
            let k = if r < self.nt { r } else { m - r };
            Complex::new(plane[[k, c]], 0.0)
        });
        self.transform_axis(&mut data, 1, &self.fwd_2);
        self.transform_axis(&mut data, 0, &self.fwd_t);
        data.mapv_inplace(|v| v / (m * self.n2) as f64);
        data
    }

    pub fn from_spectrum(&self, mut data: Spectrum) -> Array2<f64> {
        self.transform_axis(&mut data, 0, &self.inv_t);
        self.transform_axis(&mut data, 1, &self.inv_2);
        data.slice(s![..self.nt, ..]).mapv(|v| v.re)
    }

    fn multiply(&self, plane: ArrayView2<f64>, f: impl Fn(f64) -> f64) -> Array2<f64> {
        let mut spec = self.spectrum(plane);
        for ((r, c), v) in spec.indexed_iter_mut() {
            let (a, b) = self.modes(r, c);
            *v *= f(a.hypot(b));
        }
        self.from_spectrum(spec)
    }

    /// `S_theta` on one `(t, x2)` plane.
    pub fn smooth_plane(&self, plane: ArrayView2<f64>, theta: f64) -> Array2<f64> {
        self.multiply(plane, |r| symbol(r / theta))
    }

    /// `d/dtheta S_theta` on one plane, by the exact symbol derivative.
    pub fn smooth_plane_dtheta(&self, plane: ArrayView2<f64>, theta: f64) -> Array2<f64> {
        self.multiply(plane, |r| -symbol_d(r / theta) * r / (theta * theta))
    }

    /// `S_theta` on `(nt, n1 + 1, n2)` data, one `x1` line at a time.
    pub fn smooth3(&self, f: &Array3<f64>, theta: f64) -> Array3<f64> {
        let mut out = Array3::zeros(f.raw_dim());
        for i in 0..f.len_of(Axis(1)) {
            let plane = self.smooth_plane(f.index_axis(Axis(1), i), theta);
            out.index_axis_mut(Axis(1), i).assign(&plane);
        }
        out
    }

    pub fn smooth2(&self, f: &Array2<f64>, theta: f64) -> Array2<f64> {
        self.smooth_plane(f.view(), theta)
    }

    pub fn smooth_interior(&self, u: &Interior, theta: f64) -> Interior {
        Interior { fields: u.fields.map(|_, f| std::array::from_fn(|c| self.smooth3(&f[c], theta))) }
    }

    pub fn smooth_rows(&self, b: &BoundaryRows, theta: f64) -> BoundaryRows {
        BoundaryRows { rows: std::array::from_fn(|r| self.smooth2(&b.rows[r], theta)) }
    }

    pub fn smooth_state(&self, s: &SpaceTimeState, theta: f64) -> SpaceTimeState {
        SpaceTimeState { u: self.smooth_interior(&s.u, theta), phi: self.smooth2(&s.phi, theta) }
    }

    /// `sum (1 + |m|^2)^k |u_m|^2`, square-rooted.
    pub fn sobolev_norm(&self, plane: ArrayView2<f64>, k: u32) -> f64 {
        self.weighted_norm(&self.spectrum(plane), k)
    }

    fn weighted_norm(&self, spec: &Spectrum, k: u32) -> f64 {
        spec.indexed_iter()
            .map(|((r, c), v)| {
                let (a, b) = self.modes(r, c);
                (1.0 + a * a + b * b).powi(k as i32) * v.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// `max |S_theta u - u|` on the first level: smoothing does not keep data
/// that vanish at `t = 0` vanishing there.
pub fn causal_defect(smoothed: &Array2<f64>, original: &Array2<f64>) -> f64 {
    (&smoothed.row(0) - &original.row(0)).fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Largest constant of each smoothing estimate over the sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnessReport {
    /// `|S u|_k / (theta^{(k-j)+} |u|_j)`.
    pub as1: f64,
    /// `|S u - u|_k / (theta^{k-j} |u|_j)`, `k <= j`.
    pub as2: f64,
    /// `|d/dtheta S u|_k / (theta^{k-j-1} |u|_j)`.
    pub as3: f64,
    /// Per `(nt, n2, theta)`: the three maxima.
    pub rows: Vec<HarnessRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarnessRow {
    pub nt: usize,
    pub n2: usize,
    pub theta: f64,
    pub as1: f64,
    pub as2: f64,
    pub as3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnessConfig {
    pub grids: Vec<(usize, usize)>,
    pub thetas: Vec<f64>,
    pub max_order: u32,
    pub samples: usize,
    pub seed: u64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self { grids: vec![(33, 64), (65, 128)], thetas: vec![2.0, 4.0, 8.0, 16.0], max_order: 4, samples: 16, seed: 7 }
    }
}

/// Pinned bound on every harness constant; the symbol gives the analytic
/// suprema `as1, as2 <= 4.25^{3/2}` and `as3 <= 1.875 * 2 * 4.25^{3/2} < 33`
/// for orders up to 4 and `theta >= 2`.
pub const HARNESS_BOUND: f64 = 40.0;

/// Relative step of the centred `theta` difference in the harness.
pub const THETA_STEP: f64 = 1e-3;

/// Mode number drawn log-uniformly from `0..n`, so every scale is sampled.
fn log_uniform(n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let x: f64 = rng.random_range(0.0..(n as f64).ln());
    (x.exp() - 1.0).floor()
}

/// Random sample: separable cosine/Fourier modes with a random spectral
/// decay exponent.
fn sample(nt: usize, n2: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let decay: f64 = rng.random_range(0.0..3.0);
    let terms = rng.random_range(4..24);
    let mut u = Array2::zeros((nt, n2));
    for _ in 0..terms {
        let k = log_uniform(nt, rng);
        let m = log_uniform(n2 / 2, rng);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let amp = rng.random_range(-1.0..1.0) / (1.0 + k * k + m * m).powf(0.5 * decay);
        for ((a, b), v) in u.indexed_iter_mut() {
            let t = std::f64::consts::PI * a as f64 / (nt - 1) as f64;
            let x = std::f64::consts::TAU * b as f64 / n2 as f64;
            *v += amp * (k * t).cos() * (m * x + phase).cos();
        }
    }
    u
}

/// Sweep of the smoothing estimates over grids, `theta` and orders `1..=max_order`;
/// `as3` uses centred differences in `theta`.
pub fn smoothing_harness(cfg: &HarnessConfig) -> Result<HarnessReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    for &(nt, n2) in &cfg.grids {
        let sm = Smoother::new(nt, n2)?;
        let samples: Vec<Array2<f64>> = (0..cfg.samples).map(|_| sample(nt, n2, &mut rng)).collect();
        for &theta in &cfg.thetas {
            let mut row = HarnessRow { nt, n2, theta, as1: 0.0, as2: 0.0, as3: 0.0 };
            let eps = THETA_STEP * theta;
            for u in &samples {
                let su = sm.smooth_plane(u.view(), theta);
                let diff = &su - u;
                let dsu = (&sm.smooth_plane(u.view(), theta + eps) - &sm.smooth_plane(u.view(), theta - eps)) / (2.0 * eps);
                let (ns, nd, ndt) = (sm.spectrum(su.view()), sm.spectrum(diff.view()), sm.spectrum(dsu.view()));
                let nu = sm.spectrum(u.view());
                for k in 1..=cfg.max_order {
                    for j in 1..=cfg.max_order {
                        let uj = sm.weighted_norm(&nu, j);
                        if uj == 0.0 {
                            continue;
                        }
                        let kj = k as i32 - j as i32;
                        row.as1 = row.as1.max(sm.weighted_norm(&ns, k) / (theta.powi(kj.max(0)) * uj));
                        if k <= j {
                            row.as2 = row.as2.max(sm.weighted_norm(&nd, k) / (theta.powi(kj) * uj));
                        }
                        row.as3 = row.as3.max(sm.weighted_norm(&ndt, k) / (theta.powi(kj - 1) * uj));
                    }
                }
            }
            rows.push(row);
        }
    }
    let max = |f: fn(&HarnessRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    Ok(HarnessReport { as1: max(|r| r.as1), as2: max(|r| r.as2), as3: max(|r| r.as3), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_bounds_hold() {
        for theta0 in [1.0, 2.0, 10.0] {
            assert_eq!(ThetaSchedule::new(theta0).unwrap().first_violation(10_000), None);
        }
        assert!(ThetaSchedule::new(0.5).is_err());
    }

    #[test]
    fn symbol_profile_has_the_stated_plateaus() {
        assert_eq!(symbol(0.0), 1.0);
        assert_eq!(symbol(1.0), 1.0);
        assert_eq!(symbol(2.0), 0.0);
        assert_eq!(symbol(5.0), 0.0);
        assert!((symbol(1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn band_limited_plane_is_a_fixed_point() {
        let sm = Smoother::new(17, 32).unwrap();
        let u = Array2::from_shape_fn((17, 32), |(a, b)| {
            let t = std::f64::consts::PI * a as f64 / 16.0;
            let x = std::f64::consts::TAU * b as f64 / 32.0;
            1.0 + (2.0 * t).cos() * (x).sin() + 0.3 * (3.0 * x).cos()
        });
        let su = sm.smooth2(&u, 3.0);
        assert!((&su - &u).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn high_modes_are_removed() {
        let sm = Smoother::new(9, 16).unwrap();
        let u = Array2::from_shape_fn((9, 16), |(_, b)| (std::f64::consts::TAU * 7.0 * b as f64 / 16.0).cos());
        assert!(sm.smooth2(&u, 2.0).iter().all(|v| v.abs() < 1e-13));
    }
}
