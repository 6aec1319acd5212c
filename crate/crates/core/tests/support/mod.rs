//! Seeded property checks shared by the core property tests and the
//! acceptance harness. Each check returns the measured quantity; callers
//! compare it against the tolerance.

#![allow(dead_code)]

use bsbem_core::pod::{energy_truncation, pod};
use bsbem_core::rom::{assemble, local_design, offline, Model, RomConfig};
use bsbem_core::sampling::{SampleSet, Scheme, UncertainInput};
use bsbem_core::splines::BSplineSpace;
use bsbem_core::{Matrix, Result};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn random_space(rng: &mut ChaCha8Rng, max_dim: usize, max_degree: usize, max_elements: usize) -> BSplineSpace {
    let dim = rng.random_range(1..=max_dim);
    let degrees: Vec<usize> = (0..dim).map(|_| rng.random_range(1..=max_degree)).collect();
    let elements: Vec<usize> = (0..dim).map(|_| rng.random_range(1..=max_elements)).collect();
    BSplineSpace::build(&degrees, &elements).unwrap()
}

fn random_point_in(rng: &mut ChaCha8Rng, space: &BSplineSpace, element: usize) -> Vec<f64> {
    space
        .element_bounds(element)
        .unwrap()
        .iter()
        .map(|&(lo, hi)| lo + (hi - lo) * rng.random_range(0.0..1.0))
        .collect()
}

/// Frobenius norm of `Phi^T Phi - I` for a random matrix of random shape.
pub fn pod_orthonormality(seed: u64) -> f64 {
    let mut rng = rng(seed);
    let (r, c) = (rng.random_range(2..40), rng.random_range(1..40));
    let a = random_matrix(&mut rng, r, c);
    let eps = 10f64.powi(-rng.random_range(1..14));
    let modes = pod(a.as_ref(), eps).unwrap().modes;
    let g = modes.transpose() * &modes;
    let mut err = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let d = g[(i, j)] - if i == j { 1.0 } else { 0.0 };
            err += d * d;
        }
    }
    err.sqrt()
}

/// The energy criterion holds at `L` and fails at `L - 1`.
pub fn energy_minimality(seed: u64) -> bool {
    let mut rng = rng(seed);
    let (r, c) = (rng.random_range(2..30), rng.random_range(2..30));
    // Graded column scales spread the spectrum.
    let a = Mat::from_fn(r, c, |_, j| rng.random_range(-1.0..1.0) * 0.5f64.powi(j as i32));
    let eps = 10f64.powi(-rng.random_range(1..10));
    let basis = pod(a.as_ref(), eps).unwrap();
    let all = pod(a.as_ref(), 1e-15).unwrap();
    let sv = &all.singular_values;
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let head = |l: usize| sv[..l].iter().map(|s| s * s).sum::<f64>() / total;
    let l = basis.n_modes();
    let (check, _) = energy_truncation(sv, eps);
    head(l) > 1.0 - eps && (l == 1 || head(l - 1) <= 1.0 - eps) && check == l
}

/// Largest deviation from 1 of the sum of local basis values, or a
/// negative value if any basis value is negative.
pub fn partition_of_unity(seed: u64) -> f64 {
    let mut rng = rng(seed);
    let space = random_space(&mut rng, 3, 4, 5);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let xi: Vec<f64> = (0..space.dim()).map(|_| rng.random_range(0.0..=1.0)).collect();
        let e = space.locate_element(&xi).unwrap();
        let vals = space.eval_local_basis(e, &xi).unwrap();
        if vals.iter().any(|&v| v < -1e-15) {
            return f64::INFINITY;
        }
        worst = worst.max((vals.iter().sum::<f64>() - 1.0).abs());
    }
    worst
}

/// Absolute error of the element rule with `p + 1` points per dimension on
/// a random separable polynomial of degree `2p` per dimension.
pub fn quadrature_exactness(seed: u64) -> f64 {
    let mut rng = rng(seed);
    let space = random_space(&mut rng, 3, 4, 4);
    let e = rng.random_range(0..space.n_elements());
    let bounds = space.element_bounds(e).unwrap();
    let coeffs: Vec<Vec<f64>> = space
        .degrees()
        .iter()
        .map(|&p| (0..=2 * p).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let exact: f64 = coeffs
        .iter()
        .zip(&bounds)
        .map(|(c, &(lo, hi))| {
            c.iter()
                .enumerate()
                .map(|(k, a)| a * (hi.powi(k as i32 + 1) - lo.powi(k as i32 + 1)) / (k as f64 + 1.0))
                .sum::<f64>()
        })
        .product();
    let points: Vec<usize> = space.degrees().iter().map(|p| p + 1).collect();
    let rule = space.element_quadrature(e, &points).unwrap();
    let mut approx = 0.0;
    for q in 0..rule.len() {
        let x = rule.node(q);
        let f: f64 = coeffs
            .iter()
            .zip(x)
            .map(|(c, &x)| c.iter().rev().fold(0.0, |acc, a| acc * x + a))
            .product();
        approx += rule.weights[q] * f;
    }
    (approx - exact).abs()
}

/// Field that is a polynomial of degree `<= p_d` in each physical
/// parameter, with random node/time dependence.
pub struct PolynomialModel {
    pub degrees: Vec<usize>,
    pub times: Vec<f64>,
    pub n_nodes: usize,
    /// One coefficient per (multi-index, node, time).
    pub terms: Vec<(Vec<usize>, Vec<f64>)>,
}

impl PolynomialModel {
    pub fn random(rng: &mut ChaCha8Rng, degrees: &[usize], n_nodes: usize, n_times: usize) -> Self {
        let mut terms = Vec::new();
        let mut idx = vec![0usize; degrees.len()];
        loop {
            let c = (0..n_nodes * n_times).map(|_| rng.random_range(-1.0..1.0)).collect();
            terms.push((idx.clone(), c));
            let mut d = 0;
            loop {
                if d == degrees.len() {
                    return Self {
                        degrees: degrees.to_vec(),
                        times: (1..=n_times).map(|j| j as f64 / n_times as f64).collect(),
                        n_nodes,
                        terms,
                    };
                }
                idx[d] += 1;
                if idx[d] <= degrees[d] {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }
}

impl Model for PolynomialModel {
    fn n_nodes(&self) -> usize {
        self.n_nodes
    }
    fn times(&self) -> &[f64] {
        &self.times
    }
    fn dim(&self) -> usize {
        self.degrees.len()
    }
    fn evaluate(&self, eta: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        for (alpha, c) in &self.terms {
            let mono: f64 = alpha.iter().zip(eta).map(|(&k, x)| x.powi(k as i32)).product();
            for (o, ci) in out.iter_mut().zip(c) {
                *o += ci * mono;
            }
        }
        Ok(())
    }
}

/// Relative max error of the surrogate of a random polynomial model at
/// 20 random points, with near-lossless truncation.
pub fn polynomial_reproduction(seed: u64) -> f64 {
    let mut rng = rng(seed);
    let dim = rng.random_range(1..=2);
    let degrees: Vec<usize> = (0..dim).map(|_| rng.random_range(1..=3)).collect();
    let elements: Vec<usize> = (0..dim).map(|_| rng.random_range(1..=3)).collect();
    let bounds: Vec<(f64, f64)> = (0..dim)
        .map(|_| {
            let lo = rng.random_range(-2.0..2.0);
            (lo, lo + rng.random_range(0.5..3.0))
        })
        .collect();
    let names: Vec<String> = (0..dim).map(|d| format!("p{d}")).collect();
    let specs: Vec<(&str, f64, f64)> = names.iter().zip(&bounds).map(|(n, &(a, b))| (n.as_str(), a, b)).collect();
    let inputs = UncertainInput::uniform(&specs).unwrap();
    let model = PolynomialModel::random(&mut rng, &degrees, 5, 3);
    let config = RomConfig {
        degrees,
        elements,
        eps_t: 1e-15,
        eps_s: 1e-15,
        oversample: rng.random_range(1..=2),
        seed,
    };
    let rom = offline(&model, &inputs, &config).unwrap();
    let mut buf = vec![0.0; 15];
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let xi: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..=1.0)).collect();
        model.evaluate(&inputs.to_physical(&xi).unwrap(), &mut buf).unwrap();
        let f = rom.evaluate(&xi).unwrap();
        for j in 0..3 {
            for i in 0..5 {
                num = num.max((f[(i, j)] - buf[j * 5 + i]).abs());
                den = den.max(buf[j * 5 + i].abs());
            }
        }
    }
    num / den
}

/// Relative max difference between element-wise assembly and the dense
/// normal equations of the full global basis matrix.
pub fn assembly_vs_dense(seed: u64) -> f64 {
    let mut rng = rng(seed);
    let space = random_space(&mut rng, 2, 3, 3);
    let (m, n_b) = (space.n_global(), space.n_local());
    let n_rhs = 2;
    let mut designs = Vec::new();
    let mut outputs = Vec::new();
    let mut all_points = Vec::new();
    let mut all_outputs = Vec::new();
    for e in 0..space.n_elements() {
        let n = n_b + rng.random_range(0..4);
        let mut unit = Vec::new();
        for _ in 0..n {
            let x = random_point_in(&mut rng, &space, e);
            unit.extend_from_slice(&x);
            all_points.push(x);
        }
        let set = SampleSet::from_unit_points(space.dim(), unit, Scheme::ElementCollocation, None).unwrap();
        designs.push(local_design(&space, e, &set).unwrap());
        let out = random_matrix(&mut rng, n, n_rhs);
        for i in 0..n {
            all_outputs.push([out[(i, 0)], out[(i, 1)]]);
        }
        outputs.push(out);
    }
    let (psi, delta) = assemble(&space, &designs, &outputs).unwrap();
    let b = Mat::from_fn(all_points.len(), m, |i, q| space.global_basis_value(q, &all_points[i]).unwrap());
    let y = Mat::from_fn(all_points.len(), n_rhs, |i, c| all_outputs[i][c]);
    let psi_dense = b.transpose() * &b;
    let delta_dense = b.transpose() * &y;
    let mut diff = 0.0f64;
    let mut scale = 1.0f64;
    for i in 0..m {
        for j in 0..m {
            diff = diff.max((psi[(i, j)] - psi_dense[(i, j)]).abs());
            scale = scale.max(psi_dense[(i, j)].abs());
        }
        for c in 0..n_rhs {
            diff = diff.max((delta[(i, c)] - delta_dense[(i, c)]).abs());
            scale = scale.max(delta_dense[(i, c)].abs());
        }
    }
    diff / scale
}

/// Largest `|quadrature mean - MC mean| / (sigma_hat / sqrt(n))` over all
/// entries of a surrogate built from a smooth nonlinear model.
pub fn statistics_vs_mc(seed: u64, n: usize) -> f64 {
    struct Smooth;
    impl Model for Smooth {
        fn n_nodes(&self) -> usize {
            3
        }
        fn times(&self) -> &[f64] {
            &[0.5, 1.0]
        }
        fn dim(&self) -> usize {
            2
        }
        fn evaluate(&self, eta: &[f64], out: &mut [f64]) -> Result<()> {
            for j in 0..2 {
                for i in 0..3 {
                    let (x, t) = (i as f64 * 0.4, 0.5 * (j + 1) as f64);
                    out[j * 3 + i] = (eta[0] * x + t).sin() * (1.0 + eta[1] * eta[1] * t) + x;
                }
            }
            Ok(())
        }
    }
    let inputs = UncertainInput::uniform(&[("a", 0.0, 2.0), ("b", -1.0, 1.0)]).unwrap();
    let rom = offline(&Smooth, &inputs, &RomConfig::isotropic(2, 2, 3, 1e-12)).unwrap();
    let stats = rom.statistics(None).unwrap();
    let mut rng = rng(seed);
    let mut sum = [0.0; 6];
    let mut sumsq = [0.0; 6];
    for _ in 0..n {
        let xi = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let f = rom.evaluate(&xi).unwrap();
        for j in 0..2 {
            for i in 0..3 {
                let v = f[(i, j)];
                sum[j * 3 + i] += v;
                sumsq[j * 3 + i] += v * v;
            }
        }
    }
    let mut worst = 0.0f64;
    for j in 0..2 {
        for i in 0..3 {
            let k = j * 3 + i;
            let mean = sum[k] / n as f64;
            let sd = (sumsq[k] / n as f64 - mean * mean).max(0.0).sqrt();
            worst = worst.max((stats.mean[(i, j)] - mean).abs() / (sd / (n as f64).sqrt()));
        }
    }
    worst
}
