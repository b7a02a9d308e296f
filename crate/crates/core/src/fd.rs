//! Finite-difference weights for derivatives of any order on arbitrary nodes
//! (Fornberg's recursion), and direct `k`-th derivatives along an array axis.

use ndarray::{Array, Axis, Dimension, Zip};

/// Weights `w[k][j]` such that `f^(k)(z) ~ sum_j w[k][j] f(x[j])` for `k <= m`.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Stencil of the `k`-th derivative at every node of an axis with `n` nodes
/// and spacing `h`: `(offsets, weights)`. Windows of `k + accuracy` points
/// are centred where possible and clamped at the ends of a bounded axis.
pub fn axis_stencils(n: usize, h: f64, k: usize, accuracy: usize, periodic: bool) -> Vec<(Vec<isize>, Vec<f64>)> {
    // Odd width keeps interior stencils centred.
    let width = ((k + accuracy) | 1).min(n);
    let half = (width / 2) as isize;
    (0..n)
        .map(|i| {
            let start: isize = if periodic {
                -half
            } else {
                let lo = (i as isize - half).max(0);
                let lo = lo.min(n as isize - width as isize);
                lo - i as isize
            };
            let offsets: Vec<isize> = (start..start + width as isize).collect();
            let nodes: Vec<f64> = offsets.iter().map(|&o| o as f64 * h).collect();
            let w = fornberg_weights(0.0, &nodes, k);
            (offsets, w[k].clone())
        })
        .collect()
}

/// Direct `k`-th derivative along `axis`.
pub fn derivative_along<D: Dimension>(
    data: &Array<f64, D>,
    axis: usize,
    h: f64,
    k: usize,
    accuracy: usize,
    periodic: bool,
) -> Array<f64, D> {
    if k == 0 {
        return data.clone();
    }
    let n = data.len_of(Axis(axis));
    let stencils = axis_stencils(n, h, k, accuracy, periodic);
    let mut out = Array::zeros(data.raw_dim());
    Zip::from(out.lanes_mut(Axis(axis)))
        .and(data.lanes(Axis(axis)))
        .for_each(|mut o, f| {
            for (i, (offs, w)) in stencils.iter().enumerate() {
                let mut s = 0.0;
                for (off, wt) in offs.iter().zip(w) {
                    let idx = (i as isize + off).rem_euclid(n as isize) as usize;
                    s += wt * f[idx];
                }
                o[i] = s;
            }
        });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    #[test]
    fn weights_reproduce_central_second_difference() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w[2], vec![1.0, -2.0, 1.0]);
        assert_eq!(w[1], vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn high_derivatives_are_consistent_near_ends() {
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let f = Array1::from_shape_fn(n + 1, |i| (1.3 * i as f64 * h).exp());
            let d = derivative_along(&f, 0, h, 5, 4, false);
            (0..=n)
                .map(|i| (d[i] - 1.3f64.powi(5) * (1.3 * i as f64 * h).exp()).abs())
                .fold(0.0, f64::max)
        };
        let (a, b) = (err(20), err(40));
        assert!(b < 1e-3 && (a / b).log2() > 3.0, "{a} {b}");
    }
}
