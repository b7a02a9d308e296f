//! Truncated half-plane grid `[0, L1] x [-L2/2, L2/2)`, periodic in `x2`,
//! with fourth-order difference operators and field I/O.

use crate::error::{Error, Result};
use crate::state::Side;
use ndarray::{Array1, Array2, ArrayD, IxDyn};
use serde::Serialize;
use std::io::{Read, Write};

/// Per-side pair of values, indexed by [`Side`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sided<T> {
    pub plus: T,
    pub minus: T,
}

impl<T> Sided<T> {
    pub fn new(plus: T, minus: T) -> Self {
        Self { plus, minus }
    }

    pub fn from_fn(mut f: impl FnMut(Side) -> T) -> Self {
        Self { plus: f(Side::Plus), minus: f(Side::Minus) }
    }

    pub fn get(&self, side: Side) -> &T {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    pub fn get_mut(&mut self, side: Side) -> &mut T {
        match side {
            Side::Plus => &mut self.plus,
            Side::Minus => &mut self.minus,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Side, &T) -> U) -> Sided<U> {
        Sided { plus: f(Side::Plus, &self.plus), minus: f(Side::Minus, &self.minus) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    /// Number of cells in `x1`; there are `n1 + 1` nodes including both ends.
    pub n1: usize,
    /// Number of periodic nodes in `x2`.
    pub n2: usize,
    pub l1: f64,
    pub l2: f64,
}

impl Grid {
    pub fn new(n1: usize, n2: usize, l1: f64, l2: f64) -> Result<Self> {
        if n1 < 7 || n2 < 7 {
            return Err(Error::GridTooSmall(format!(
                "need at least 7 points per direction for the difference stencils, got {n1}x{n2}"
            )));
        }
        Ok(Self { n1, n2, l1, l2 })
    }

    pub fn h1(&self) -> f64 {
        self.l1 / self.n1 as f64
    }

    pub fn h2(&self) -> f64 {
        self.l2 / self.n2 as f64
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1 + 1, self.n2)
    }

    pub fn x1(&self, i: usize) -> f64 {
        i as f64 * self.h1()
    }

    pub fn x2(&self, j: usize) -> f64 {
        -0.5 * self.l2 + j as f64 * self.h2()
    }

    pub fn zeros(&self) -> Array2<f64> {
        Array2::zeros(self.shape())
    }

    pub fn from_fn(&self, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
        Array2::from_shape_fn(self.shape(), |(i, j)| f(self.x1(i), self.x2(j)))
    }

    pub fn boundary_from_fn(&self, f: impl Fn(f64) -> f64) -> Array1<f64> {
        Array1::from_shape_fn(self.n2, |j| f(self.x2(j)))
    }

    /// Fourth-order `d/dx1`, third-order one-sided closures at both ends.
    pub fn d1(&self, f: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(f.raw_dim());
        let n = self.n1;
        let h = self.h1();
        for j in 0..self.n2 {
            let c = |i: usize| f[[i, j]];
            out[[0, j]] = (-11.0 * c(0) + 18.0 * c(1) - 9.0 * c(2) + 2.0 * c(3)) / (6.0 * h);
            out[[1, j]] = (-2.0 * c(0) - 3.0 * c(1) + 6.0 * c(2) - c(3)) / (6.0 * h);
            for i in 2..n - 1 {
                out[[i, j]] =
                    (-c(i + 2) + 8.0 * c(i + 1) - 8.0 * c(i - 1) + c(i - 2)) / (12.0 * h);
            }
            out[[n - 1, j]] =
                (2.0 * c(n) + 3.0 * c(n - 1) - 6.0 * c(n - 2) + c(n - 3)) / (6.0 * h);
            out[[n, j]] =
                (11.0 * c(n) - 18.0 * c(n - 1) + 9.0 * c(n - 2) - 2.0 * c(n - 3)) / (6.0 * h);
        }
        out
    }

    /// Fourth-order periodic `d/dx2`.
    pub fn d2(&self, f: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(f.raw_dim());
        for i in 0..=self.n1 {
            let row = f.row(i);
            let d = periodic_d1(row.as_slice().expect("standard layout"), self.h2());
            out.row_mut(i).assign(&Array1::from(d));
        }
        out
    }

    /// Periodic fourth-order derivative of a boundary function.
    pub fn d2_boundary(&self, f: &Array1<f64>) -> Array1<f64> {
        Array1::from(periodic_d1(f.as_slice().expect("contiguous"), self.h2()))
    }

    /// Sixth-order Kreiss-Oliger dissipation `Delta^6 / (64 h)` in both
    /// directions; in `x1` it is applied only where the stencil fits.
    pub fn ko6(&self, f: &Array2<f64>) -> Array2<f64> {
        const W: [f64; 7] = [1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0];
        let mut out = Array2::zeros(f.raw_dim());
        let (h1, h2) = (self.h1(), self.h2());
        let n2 = self.n2;
        for i in 0..=self.n1 {
            for j in 0..n2 {
                let mut s2 = 0.0;
                for (k, w) in W.iter().enumerate() {
                    s2 += w * f[[i, (j + n2 + k - 3) % n2]];
                }
                let mut v = s2 / (64.0 * h2);
                if i >= 3 && i + 3 <= self.n1 {
                    let mut s1 = 0.0;
                    for (k, w) in W.iter().enumerate() {
                        s1 += w * f[[i + k - 3, j]];
                    }
                    v += s1 / (64.0 * h1);
                }
                out[[i, j]] = v;
            }
        }
        out
    }

    /// Trapezoid weight of node `i` in `x1` times `h2`.
    pub fn weight(&self, i: usize) -> f64 {
        let w = if i == 0 || i == self.n1 { 0.5 } else { 1.0 };
        w * self.h1() * self.h2()
    }

    /// `int f g dx` with the trapezoid rule in `x1` and the periodic rule in `x2`.
    pub fn inner(&self, f: &Array2<f64>, g: &Array2<f64>) -> f64 {
        let mut s = 0.0;
        for i in 0..=self.n1 {
            let mut row = 0.0;
            for j in 0..self.n2 {
                row += f[[i, j]] * g[[i, j]];
            }
            s += self.weight(i) * row;
        }
        s
    }

    pub fn l2_sq(&self, f: &Array2<f64>) -> f64 {
        self.inner(f, f)
    }

    pub fn boundary_inner(&self, f: &Array1<f64>, g: &Array1<f64>) -> f64 {
        self.h2() * f.dot(g)
    }

    pub fn area(&self) -> f64 {
        self.l1 * self.l2
    }
}

/// Fourth-order central derivative of periodic samples with spacing `h`.
pub fn periodic_d1(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|j| {
            let at = |k: isize| f[(j as isize + k).rem_euclid(n as isize) as usize];
            (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h)
        })
        .collect()
}

/// The six components of a one-sided state as separate grid fields.
pub type StateField = [Array2<f64>; 6];

pub fn state_at(field: &StateField, i: usize, j: usize) -> crate::matrices::Vec6 {
    crate::matrices::Vec6::from_fn(|k, _| field[k][[i, j]])
}

pub fn zero_state_field(grid: &Grid) -> StateField {
    std::array::from_fn(|_| grid.zeros())
}

const MAGIC: &[u8; 8] = b"VSGRID01";

/// Write an array in the binary grid layout: magic, `ndim` (u64), dims (u64),
/// spacings (f64), then the row-major body, all little-endian.
pub fn write_binary<W: Write>(mut w: W, data: &ArrayD<f64>, spacings: &[f64]) -> Result<()> {
    if spacings.len() != data.ndim() {
        return Err(Error::Domain(format!(
            "{} spacings for a {}-dimensional array",
            spacings.len(),
            data.ndim()
        )));
    }
    w.write_all(MAGIC)?;
    w.write_all(&(data.ndim() as u64).to_le_bytes())?;
    for &d in data.shape() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &s in spacings {
        w.write_all(&s.to_le_bytes())?;
    }
    for v in data.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<(ArrayD<f64>, Vec<f64>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Io("not a grid file".into()));
    }
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let ndim = u64::from_le_bytes(next(&mut r)?) as usize;
    if ndim > 8 {
        return Err(Error::Io(format!("implausible rank {ndim}")));
    }
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        dims.push(u64::from_le_bytes(next(&mut r)?) as usize);
    }
    let mut spacings = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        spacings.push(f64::from_le_bytes(next(&mut r)?));
    }
    let len: usize = dims.iter().product();
    let mut body = Vec::with_capacity(len);
    for _ in 0..len {
        body.push(f64::from_le_bytes(next(&mut r)?));
    }
    let arr = ArrayD::from_shape_vec(IxDyn(&dims), body)
        .map_err(|e| Error::Io(format!("shape mismatch: {e}")))?;
    Ok((arr, spacings))
}

/// CSV with columns `x1,x2,value`.
pub fn write_csv<W: Write>(mut w: W, grid: &Grid, f: &Array2<f64>) -> Result<()> {
    writeln!(w, "x1,x2,value")?;
    for i in 0..=grid.n1 {
        for j in 0..grid.n2 {
            writeln!(w, "{},{},{}", grid.x1(i), grid.x2(j), f[[i, j]])?;
        }
    }
    Ok(())
}
