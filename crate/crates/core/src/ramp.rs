//! Smooth ramps: the front cutoff `chi`, the conormal weight `sigma`, the
//! interior cutoff `eta` used to extend `lambda`, and a temporal bump.

use serde::Serialize;

/// Quintic smoothstep: 0 for `t <= 0`, 1 for `t >= 1`, C2 in between.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

pub fn smoothstep_d(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        30.0 * t * t * (1.0 - t) * (1.0 - t)
    }
}

pub fn smoothstep_dd(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
    }
}

/// Maximum of `smoothstep_d`, attained at `t = 1/2`.
pub const SMOOTHSTEP_MAX_SLOPE: f64 = 1.875;

/// Even cutoff `chi`: 1 on `[-inner, inner]`, 0 outside `[-outer, outer]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffChi {
    pub inner: f64,
    pub outer: f64,
}

impl Default for CutoffChi {
    fn default() -> Self {
        make_cutoff()
    }
}

/// The front cutoff: plateau `[-1, 1]`, ramp width 4 so `max |chi'| = 0.46875`.
pub fn make_cutoff() -> CutoffChi {
    CutoffChi { inner: 1.0, outer: 5.0 }
}

impl CutoffChi {
    fn width(&self) -> f64 {
        self.outer - self.inner
    }

    pub fn value(&self, x: f64) -> f64 {
        1.0 - smoothstep((x.abs() - self.inner) / self.width())
    }

    pub fn derivative(&self, x: f64) -> f64 {
        -x.signum() * smoothstep_d((x.abs() - self.inner) / self.width()) / self.width()
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let w = self.width();
        -smoothstep_dd((x.abs() - self.inner) / w) / (w * w)
    }

    pub fn max_slope(&self) -> f64 {
        SMOOTHSTEP_MAX_SLOPE / self.width()
    }
}

/// Conormal weight: `sigma = x` on `[0, 1/2]`, 1 beyond 1, monotone quintic between.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SigmaWeight;

impl SigmaWeight {
    pub fn value(&self, x: f64) -> f64 {
        if x <= 0.5 {
            x
        } else if x >= 1.0 {
            1.0
        } else {
            let s = 2.0 * (x - 0.5);
            // P(s) = s + 4s^3 - 7s^4 + 3s^5 matches value, slope and curvature at both ends.
            0.5 + 0.5 * s * (1.0 + s * s * (4.0 + s * (-7.0 + 3.0 * s)))
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x <= 0.5 {
            1.0
        } else if x >= 1.0 {
            0.0
        } else {
            let s = 2.0 * (x - 0.5);
            (1.0 - s) * (1.0 - s) * (15.0 * s * s + 2.0 * s + 1.0)
        }
    }

    /// `n`-th derivative, taking the left branch at the breakpoints.
    pub fn derivative_n(&self, x: f64, n: usize) -> f64 {
        match n {
            0 => return self.value(x),
            1 => return self.derivative(x),
            _ => {}
        }
        if x <= 0.5 || x > 1.0 {
            return 0.0;
        }
        let s = 2.0 * (x - 0.5);
        // Coefficients of P(s) = s + 4s^3 - 7s^4 + 3s^5, differentiated n times.
        let mut c = vec![0.0, 1.0, 0.0, 4.0, -7.0, 3.0];
        for _ in 0..n {
            c = c.iter().enumerate().skip(1).map(|(k, v)| k as f64 * v).collect();
        }
        let p = c.iter().rev().fold(0.0, |acc, v| acc * s + v);
        0.5 * 2f64.powi(n as i32) * p
    }
}

/// Interior cutoff `eta(x1) = 1 - smoothstep(x1 / eps)`: `eta(0) = 1`, zero past `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaProfile {
    pub epsilon: f64,
}

impl EtaProfile {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon }
    }

    pub fn value(&self, x1: f64) -> f64 {
        1.0 - smoothstep(x1 / self.epsilon)
    }

    pub fn derivative(&self, x1: f64) -> f64 {
        -smoothstep_d(x1 / self.epsilon) / self.epsilon
    }
}

/// C2 temporal cutoff equal to 1 on `[-T/2, T/2]` and 0 outside `[-T, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeCutoff {
    pub t_max: f64,
}

impl TimeCutoff {
    pub fn value(&self, t: f64) -> f64 {
        let h = 0.5 * self.t_max;
        1.0 - smoothstep((t.abs() - h) / h)
    }

    /// `k`-th derivative for `k <= 2`.
    pub fn derivative(&self, t: f64, k: usize) -> f64 {
        let h = 0.5 * self.t_max;
        let s = (t.abs() - h) / h;
        match k {
            0 => self.value(t),
            1 => -t.signum() * smoothstep_d(s) / h,
            2 => -smoothstep_dd(s) / (h * h),
            _ => panic!("TimeCutoff derivative of order {k} is not C2-defined"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_plateau_and_support() {
        let chi = make_cutoff();
        assert_eq!(chi.value(0.0), 1.0);
        assert_eq!(chi.value(0.9), 1.0);
        assert_eq!(chi.value(-1.0), 1.0);
        assert_eq!(chi.value(5.0), 0.0);
        assert_eq!(chi.value(-7.0), 0.0);
    }

    #[test]
    fn chi_slope_bound_on_dense_sample() {
        let chi = make_cutoff();
        let n = 100_000;
        let max = (0..=n)
            .map(|i| chi.derivative(-6.0 + 12.0 * i as f64 / n as f64).abs())
            .fold(0.0, f64::max);
        assert!(max <= 0.5, "{max}");
        assert!((max - chi.max_slope()).abs() < 1e-6);
    }

    #[test]
    fn chi_derivatives_match_finite_differences() {
        let chi = make_cutoff();
        let h = 1e-5;
        for &x in &[-4.2, -2.5, -1.3, 1.7, 3.0, 4.9] {
            let fd = (chi.value(x + h) - chi.value(x - h)) / (2.0 * h);
            assert!((fd - chi.derivative(x)).abs() < 1e-8);
            let fd2 = (chi.derivative(x + h) - chi.derivative(x - h)) / (2.0 * h);
            assert!((fd2 - chi.second_derivative(x)).abs() < 1e-7);
        }
    }

    #[test]
    fn sigma_shape() {
        let s = SigmaWeight;
        assert_eq!(s.value(0.3), 0.3);
        assert_eq!(s.value(1.5), 1.0);
        let n = 10_000;
        let mut prev = s.value(0.5);
        for i in 1..=n {
            let v = s.value(0.5 + 0.5 * i as f64 / n as f64);
            assert!(v >= prev);
            prev = v;
        }
        assert!((s.value(1.0 - 1e-12) - 1.0).abs() < 1e-10);
        let h = 1e-6;
        for &x in &[0.55, 0.7, 0.95] {
            let fd = (s.value(x + h) - s.value(x - h)) / (2.0 * h);
            assert!((fd - s.derivative(x)).abs() < 1e-7);
        }
    }

    #[test]
    fn eta_and_time_cutoff() {
        let eta = EtaProfile::new(0.2);
        assert_eq!(eta.value(0.0), 1.0);
        assert_eq!(eta.value(0.25), 0.0);
        let tc = TimeCutoff { t_max: 2.0 };
        assert_eq!(tc.value(0.9), 1.0);
        assert_eq!(tc.value(2.1), 0.0);
        let h = 1e-6;
        let fd = (tc.value(1.4 + h) - tc.value(1.4 - h)) / (2.0 * h);
        assert!((fd - tc.derivative(1.4, 1)).abs() < 1e-7);
    }
}
