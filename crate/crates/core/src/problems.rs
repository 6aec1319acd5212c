//! Analytical benchmark models.
//!
//! Ackley fields are enumerated row-major over the grid: node
//! `iy * nx + ix` sits at `(x_ix, y_iy)`, x varying fastest. Burgers fields
//! are `N_e x N_t` with node `i` at `x_i = i / (N_e - 1)` and times
//! `t_j = j * dt` for `j = 1..=N_t`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};

use faer::Mat;

use crate::rom::Model;
use crate::{Error, Matrix, Result};

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Uniform tensor grid over a box with an attached time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// `(lower, upper, nodes)` per spatial axis, first axis fastest.
    pub axes: Vec<(f64, f64, usize)>,
    pub times: Vec<f64>,
}

impl GridSpec {
    /// `[-5, 5]^2` with `resolution^2` nodes, steady (single time 0).
    pub fn ackley(resolution: usize) -> Self {
        Self {
            axes: alloc::vec![(-5.0, 5.0, resolution); 2],
            times: alloc::vec![0.0],
        }
    }

    /// `[0, 1]` with `nodes` points, `n_times` steps of `dt` starting at `dt`.
    pub fn burgers(nodes: usize, n_times: usize, dt: f64) -> Self {
        Self {
            axes: alloc::vec![(0.0, 1.0, nodes)],
            times: (1..=n_times).map(|j| j as f64 * dt).collect(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.axes.iter().map(|a| a.2).product()
    }

    pub fn axis(&self, d: usize) -> Vec<f64> {
        let (lo, hi, n) = self.axes[d];
        if n == 1 {
            return alloc::vec![lo];
        }
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// Coordinates of `node`.
    pub fn coordinates(&self, node: usize) -> Vec<f64> {
        let mut rest = node;
        self.axes
            .iter()
            .map(|&(lo, hi, n)| {
                let i = rest % n;
                rest /= n;
                if n == 1 {
                    lo
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// Stochastic Ackley function at `(x, y)`; `xi` in `[-1, 1]^3`.
pub fn ackley(x: f64, y: f64, xi: &[f64; 3]) -> f64 {
    let freq = 2.0 * PI * (1.0 + 0.1 * xi[0]);
    let radial = -20.0 * (1.0 + 0.1 * xi[2]) * (-0.2 * (1.0 + 0.1 * xi[1]) * (0.5 * (x * x + y * y)).sqrt()).exp();
    let oscillating = -(0.5 * ((freq * x).cos() + (freq * y).cos())).exp();
    radial + oscillating + 20.0 + E
}

fn check_ackley_xi(xi: &[f64]) -> Result<[f64; 3]> {
    match xi {
        [a, b, c] if xi.iter().all(|v| (-1.0..=1.0).contains(v)) => Ok([*a, *b, *c]),
        [_, _, _] => Err(Error::OutOfDomain(format!("Ackley parameters must lie in [-1, 1]^3, got {xi:?}"))),
        _ => Err(Error::DimensionMismatch {
            context: "Ackley parameters",
            expected: 3,
            actual: xi.len(),
        }),
    }
}

/// Ackley model over a square grid.
#[derive(Debug, Clone)]
pub struct AckleyModel {
    grid: GridSpec,
    axis: Vec<f64>,
    /// `sqrt(0.5 (x^2 + y^2))` per node.
    radius: Vec<f64>,
}

impl AckleyModel {
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::invalid("Ackley grid needs at least 2 nodes per axis"));
        }
        let grid = GridSpec::ackley(resolution);
        let axis = grid.axis(0);
        let mut radius = Vec::with_capacity(resolution * resolution);
        for y in &axis {
            for x in &axis {
                radius.push((0.5 * (x * x + y * y)).sqrt());
            }
        }
        Ok(Self { grid, axis, radius })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
}

impl Model for AckleyModel {
    fn n_nodes(&self) -> usize {
        self.radius.len()
    }

    fn times(&self) -> &[f64] {
        &self.grid.times
    }

    fn dim(&self) -> usize {
        3
    }

    fn evaluate(&self, eta: &[f64], out: &mut [f64]) -> Result<()> {
        let xi = check_ackley_xi(eta)?;
        if out.len() != self.radius.len() {
            return Err(Error::DimensionMismatch {
                context: "Ackley output buffer",
                expected: self.radius.len(),
                actual: out.len(),
            });
        }
        let freq = 2.0 * PI * (1.0 + 0.1 * xi[0]);
        let amp = -20.0 * (1.0 + 0.1 * xi[2]);
        let rate = -0.2 * (1.0 + 0.1 * xi[1]);
        // exp(0.5 (cos a x + cos a y)) factorizes over the axes.
        let half: Vec<f64> = self.axis.iter().map(|x| (0.5 * (freq * x).cos()).exp()).collect();
        let n = self.axis.len();
        for iy in 0..n {
            for ix in 0..n {
                let k = iy * n + ix;
                out[k] = amp * (rate * self.radius[k]).exp() - half[ix] * half[iy] + 20.0 + E;
            }
        }
        Ok(())
    }
}

/// Ackley field at `xi` on the `resolution^2` grid (row-major, x fastest).
pub fn ackley_field(xi: &[f64], resolution: usize) -> Result<Vec<f64>> {
    let model = AckleyModel::new(resolution)?;
    let mut out = alloc::vec![0.0; model.n_nodes()];
    model.evaluate(xi, &mut out)?;
    Ok(out)
}

/// Exact viscous Burgers solution
/// `u = (x / (t + 1)) / (1 + sqrt((t + 1) / t0) exp(Re x^2 / (4t + 4)))`,
/// `t0 = exp(Re / 8)`, with the denominator exponent combined before
/// exponentiating.
pub fn burgers_exact(x: f64, t: f64, re: f64) -> f64 {
    let tp = t + 1.0;
    let exponent = 0.5 * (tp.ln() - re / 8.0) + re * x * x / (4.0 * tp);
    (x / tp) / (1.0 + exponent.exp())
}

/// Burgers model with the Reynolds number as its single parameter.
#[derive(Debug, Clone)]
pub struct BurgersModel {
    grid: GridSpec,
    x: Vec<f64>,
}

impl BurgersModel {
    pub fn new(nodes: usize, n_times: usize, dt: f64) -> Result<Self> {
        if nodes < 2 || n_times == 0 || !(dt > 0.0) {
            return Err(Error::invalid("Burgers grid needs >= 2 nodes, >= 1 time and dt > 0"));
        }
        let grid = GridSpec::burgers(nodes, n_times, dt);
        let x = grid.axis(0);
        Ok(Self { grid, x })
    }

    /// 1000 nodes, 50 steps of 0.02.
    pub fn standard() -> Self {
        Self::new(1000, 50, 0.02).expect("valid standard grid")
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
}

impl Model for BurgersModel {
    fn n_nodes(&self) -> usize {
        self.x.len()
    }

    fn times(&self) -> &[f64] {
        &self.grid.times
    }

    fn dim(&self) -> usize {
        1
    }

    fn evaluate(&self, eta: &[f64], out: &mut [f64]) -> Result<()> {
        let re = match eta {
            [re] if *re > 0.0 && re.is_finite() => *re,
            [re] => return Err(Error::OutOfDomain(format!("Reynolds number must be positive, got {re}"))),
            _ => {
                return Err(Error::DimensionMismatch {
                    context: "Burgers parameters",
                    expected: 1,
                    actual: eta.len(),
                })
            }
        };
        let n = self.x.len();
        if out.len() != n * self.grid.times.len() {
            return Err(Error::DimensionMismatch {
                context: "Burgers output buffer",
                expected: n * self.grid.times.len(),
                actual: out.len(),
            });
        }
        for (j, &t) in self.grid.times.iter().enumerate() {
            let col = &mut out[j * n..(j + 1) * n];
            for (v, &x) in col.iter_mut().zip(&self.x) {
                *v = burgers_exact(x, t, re);
            }
        }
        Ok(())
    }
}

/// Burgers field on the standard grid (`1000 x 50`).
pub fn burgers_field(re: f64) -> Result<Matrix> {
    let model = BurgersModel::standard();
    let (n, n_t) = (model.n_nodes(), model.times().len());
    let mut out = alloc::vec![0.0; n * n_t];
    model.evaluate(&[re], &mut out)?;
    Ok(Mat::from_fn(n, n_t, |i, j| out[j * n + i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ackley_values() {
        assert!(ackley(0.0, 0.0, &[0.0; 3]).abs() < 1e-14);
        assert!((ackley(1.0, 0.0, &[0.0; 3]) - 2.637531092108302).abs() < 1e-13);
        let (x, y) = (1.3, -0.4);
        let base = ackley(x, y, &[0.2, 0.1, 0.0]);
        let scaled = ackley(x, y, &[0.2, 0.1, -1.0]);
        let first = |xi3: f64| -20.0 * (1.0 + 0.1 * xi3) * (-0.2 * 1.01 * (0.5 * (x * x + y * y)).sqrt()).exp();
        assert!(((scaled - base) - (first(-1.0) - first(0.0))).abs() < 1e-13);
        assert!((first(-1.0) / first(0.0) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn ackley_field_matches_pointwise() {
        let xi = [0.3, -0.7, 0.9];
        let f = ackley_field(&xi, 160).unwrap();
        let grid = GridSpec::ackley(160);
        for node in [0, 159, 160 * 159, 160 * 160 - 1, 12345] {
            let c = grid.coordinates(node);
            assert!((f[node] - ackley(c[0], c[1], &xi)).abs() < 1e-12);
        }
        assert!(ackley_field(&[1.2, 0.0, 0.0], 160).is_err());
    }

    #[test]
    fn burgers_values() {
        assert!((burgers_exact(0.5, 1.0, 200.0) - 0.249319339648168).abs() < 1e-14);
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(burgers_exact(0.0, t, 500.0), 0.0);
        }
        for i in 0..100 {
            let x = i as f64 / 99.0;
            let re = 300.0;
            let init = x / (1.0 + (re * (4.0 * x * x - 1.0) / 16.0).exp());
            assert!((burgers_exact(x, 0.0, re) - init).abs() < 1e-14);
        }
        // no overflow at very large Re
        assert!(burgers_exact(0.5, 0.5, 1e6).is_finite());
    }

    #[test]
    fn burgers_field_layout() {
        let f = burgers_field(800.0).unwrap();
        assert_eq!((f.nrows(), f.ncols()), (1000, 50));
        assert!((f[(500, 49)] - burgers_exact(500.0 / 999.0, 1.0, 800.0)).abs() < 1e-15);
        assert!((0..50).all(|j| f[(0, j)] == 0.0));
    }
}
