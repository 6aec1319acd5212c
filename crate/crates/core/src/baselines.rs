//! Full-order Legendre chaos regression and sampling reference statistics.
//!
//! Chaos variables are `z = 2 u - 1` in `[-1, 1]^m`, where `u` is the
//! unit-hypercube (CDF) image of the physical input. The basis is the
//! total-degree set of products of unnormalized Legendre polynomials,
//! ordered by total degree and, within a degree, with the exponent of the
//! first variable decreasing.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;

use crate::rom::{Model, StatisticsField};
use crate::sampling::{lhs_sample, mc_sample, SampleSet, Scheme, UncertainInput};
use crate::{Error, Matrix, Result};

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Smallest admissible `s_min / s_max` of the regression design.
const DESIGN_RCOND: f64 = 1e-12;

/// `P_0(x), ..., P_n(x)` by the three-term recurrence.
pub fn legendre_values(n: usize, x: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if n >= 1 {
        out[1] = x;
    }
    for k in 2..=n {
        let kf = k as f64;
        out[k] = ((2.0 * kf - 1.0) * x * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
    }
}

/// Multi-indices of total degree `<= order` in `dim` variables.
pub fn total_degree_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    fn fill(prefix: &mut Vec<usize>, left: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
        if left == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for d in (0..=remaining).rev() {
            prefix.push(d);
            fill(prefix, left - 1, remaining - d, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        return out;
    }
    for degree in 0..=order {
        fill(&mut Vec::with_capacity(dim), dim, degree, &mut out);
    }
    out
}

/// `(p + m)! / (p! m!)`.
pub fn total_degree_size(dim: usize, order: usize) -> usize {
    let mut size = 1usize;
    for i in 1..=dim {
        size = size * (order + i) / i;
    }
    size
}

/// Truncation order, oversampling ratio and design seed of a chaos fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PceSettings {
    pub order: usize,
    pub oversampling: usize,
    pub seed: u64,
}

/// Regressed Legendre chaos expansion of a space-time field.
#[derive(Debug, Clone, PartialEq)]
pub struct PceExpansion {
    pub order: usize,
    pub oversampling: usize,
    pub indices: Vec<Vec<usize>>,
    /// `M_pce x (N_e * N_t)`, column `j * N_e + i` for node `i`, time `j`.
    pub coefficients: Matrix,
    pub n_nodes: usize,
    pub n_times: usize,
    pub inputs: UncertainInput,
    pub seed: u64,
}

impl PceExpansion {
    pub fn n_terms(&self) -> usize {
        self.indices.len()
    }

    fn basis_row(&self, xi: &[f64]) -> Vec<f64> {
        basis_row(&self.indices, self.order, xi)
    }

    /// Field at unit point `xi` (`N_e x N_t`).
    pub fn evaluate(&self, xi: &[f64]) -> Result<Matrix> {
        if xi.len() != self.inputs.dim() {
            return Err(Error::DimensionMismatch {
                context: "chaos evaluation point",
                expected: self.inputs.dim(),
                actual: xi.len(),
            });
        }
        if xi.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::OutOfDomain(format!("unit hypercube ({xi:?})")));
        }
        let row = self.basis_row(xi);
        let n_e = self.n_nodes;
        Ok(Mat::from_fn(n_e, self.n_times, |i, j| {
            let col = self.coefficients.col_as_slice(j * n_e + i);
            row.iter().zip(col).map(|(a, b)| a * b).sum()
        }))
    }

    /// Values at selected `(node, time index)` entries.
    pub fn evaluate_entries(&self, xi: &[f64], entries: &[(usize, usize)]) -> Result<Vec<f64>> {
        if xi.len() != self.inputs.dim() {
            return Err(Error::DimensionMismatch {
                context: "chaos evaluation point",
                expected: self.inputs.dim(),
                actual: xi.len(),
            });
        }
        if xi.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::OutOfDomain(format!("unit hypercube ({xi:?})")));
        }
        let row = self.basis_row(xi);
        entries
            .iter()
            .map(|&(i, j)| {
                if i >= self.n_nodes || j >= self.n_times {
                    return Err(Error::IndexOutOfRange {
                        what: "field entry",
                        index: j * self.n_nodes + i,
                        len: self.n_nodes * self.n_times,
                    });
                }
                let col = self.coefficients.col_as_slice(j * self.n_nodes + i);
                Ok(row.iter().zip(col).map(|(a, b)| a * b).sum())
            })
            .collect()
    }

    /// Mean from the constant term, variance from the weighted sum of the
    /// squared higher coefficients.
    pub fn statistics(&self) -> StatisticsField {
        let norms: Vec<f64> = self
            .indices
            .iter()
            .map(|a| a.iter().map(|&d| 1.0 / (2 * d + 1) as f64).product())
            .collect();
        let n_e = self.n_nodes;
        let mut mean = Mat::<f64>::zeros(n_e, self.n_times);
        let mut std = Mat::<f64>::zeros(n_e, self.n_times);
        for j in 0..self.n_times {
            for i in 0..n_e {
                let c = self.coefficients.col_as_slice(j * n_e + i);
                mean[(i, j)] = c[0];
                let var: f64 = c.iter().zip(&norms).skip(1).map(|(c, w)| c * c * w).sum();
                std[(i, j)] = var.sqrt();
            }
        }
        StatisticsField { mean, std }
    }
}

fn basis_row(indices: &[Vec<usize>], order: usize, xi: &[f64]) -> Vec<f64> {
    let per_dim: Vec<Vec<f64>> = xi
        .iter()
        .map(|&u| {
            let mut v = vec![0.0; order + 1];
            legendre_values(order, 2.0 * u - 1.0, &mut v);
            v
        })
        .collect();
    indices
        .iter()
        .map(|a| a.iter().enumerate().map(|(d, &k)| per_dim[d][k]).product())
        .collect()
}

/// LHS regression design of `oversampling * M_pce` points, mapped to the
/// physical domain.
pub fn pce_design(inputs: &UncertainInput, settings: &PceSettings) -> Result<SampleSet> {
    let PceSettings { order, oversampling, seed } = *settings;
    if oversampling == 0 {
        return Err(Error::invalid("chaos oversampling ratio must be at least 1"));
    }
    let n = oversampling * total_degree_size(inputs.dim(), order);
    lhs_sample(inputs.dim(), n, seed)?.mapped(inputs)
}

/// Least-squares fit of all (node, time) coefficient vectors to fields
/// sampled at `design`. `outputs` is `N x (N_e * N_t)` with column
/// `j * N_e + i`.
pub fn pce_fit_from_samples(
    design: &SampleSet,
    outputs: &Matrix,
    n_nodes: usize,
    n_times: usize,
    inputs: &UncertainInput,
    settings: &PceSettings,
) -> Result<PceExpansion> {
    let PceSettings { order, oversampling, seed } = *settings;
    if outputs.nrows() != design.len() || outputs.ncols() != n_nodes * n_times {
        return Err(Error::DimensionMismatch {
            context: "chaos regression outputs",
            expected: design.len() * n_nodes * n_times,
            actual: outputs.nrows() * outputs.ncols(),
        });
    }
    let indices = total_degree_indices(inputs.dim(), order);
    let n_terms = indices.len();
    if design.len() < n_terms {
        return Err(Error::invalid(format!(
            "{} regression points for {n_terms} chaos terms",
            design.len()
        )));
    }
    let rows: Vec<Vec<f64>> = design
        .unit_points()
        .map(|u| basis_row(&indices, order, u))
        .collect();
    let a = Mat::from_fn(design.len(), n_terms, |i, k| rows[i][k]);
    let sv = a
        .singular_values()
        .map_err(|e| Error::Numeric(format!("SVD of the chaos design failed: {e:?}")))?;
    let (hi, lo) = (sv[0], sv[sv.len() - 1]);
    if !(lo > DESIGN_RCOND * hi) {
        return Err(Error::Numeric(format!(
            "rank-deficient chaos design (singular values {hi:e} .. {lo:e}); increase the oversampling ratio"
        )));
    }
    let coefficients = a.qr().solve_lstsq(outputs);
    Ok(PceExpansion {
        order,
        oversampling,
        indices,
        coefficients,
        n_nodes,
        n_times,
        inputs: inputs.clone(),
        seed,
    })
}

/// Serial chaos fit: draws the design, runs the model and regresses.
pub fn pce_fit(model: &dyn Model, inputs: &UncertainInput, settings: &PceSettings) -> Result<PceExpansion> {
    let design = pce_design(inputs, settings)?;
    let (n_e, n_t) = (model.n_nodes(), model.times().len());
    let mut outputs = Mat::<f64>::zeros(design.len(), n_e * n_t);
    let mut buf = vec![0.0; n_e * n_t];
    for s in 0..design.len() {
        model.evaluate(design.physical_point(s).expect("mapped design"), &mut buf)?;
        for (c, v) in buf.iter().enumerate() {
            outputs[(s, c)] = *v;
        }
    }
    pce_fit_from_samples(&design, &outputs, n_e, n_t, inputs, settings)
}

/// Running mean and centered second moment (Welford), mergeable.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, values: &[f64]) {
        self.count += 1;
        let inv = 1.0 / self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(values) {
            let d = v - *m;
            *m += d * inv;
            *s += d * (v - *m);
        }
    }

    /// Combines the moments of two disjoint sample sets.
    pub fn merge(&mut self, other: &MomentAccumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.count += other.count;
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Population (divide-by-n) standard deviation.
    pub fn std(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.m2.iter().map(|s| (s / n).max(0.0).sqrt()).collect()
    }
}

/// Sampling reference statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceStatistics {
    pub field: StatisticsField,
    pub samples: usize,
    pub scheme: Scheme,
    pub seed: u64,
}

impl ReferenceStatistics {
    pub fn from_accumulator(acc: &MomentAccumulator, n_nodes: usize, n_times: usize, scheme: Scheme, seed: u64) -> Self {
        let std = acc.std();
        let mean = Mat::from_fn(n_nodes, n_times, |i, j| acc.mean()[j * n_nodes + i]);
        let std = Mat::from_fn(n_nodes, n_times, |i, j| std[j * n_nodes + i]);
        Self {
            field: StatisticsField { mean, std },
            samples: acc.count(),
            scheme,
            seed,
        }
    }
}

/// Reference design of `n` points.
pub fn reference_design(inputs: &UncertainInput, n: usize, scheme: Scheme, seed: u64) -> Result<SampleSet> {
    if n < 2 {
        return Err(Error::invalid(format!("reference statistics need n >= 2, got {n}")));
    }
    let set = match scheme {
        Scheme::Lhs => lhs_sample(inputs.dim(), n, seed)?,
        Scheme::Mc => mc_sample(inputs.dim(), n, seed)?,
        Scheme::ElementCollocation => {
            return Err(Error::invalid("reference statistics need an lhs or mc design"))
        }
    };
    set.mapped(inputs)
}

/// Accumulates model fields over design points `range`. Values at the flat
/// indices `probes` (`j * N_e + i`) are also returned, one vector per probe.
pub fn accumulate_range(
    model: &dyn Model,
    design: &SampleSet,
    range: core::ops::Range<usize>,
    probes: &[usize],
) -> Result<(MomentAccumulator, Vec<Vec<f64>>)> {
    let len = model.n_nodes() * model.times().len();
    let mut acc = MomentAccumulator::new(len);
    let mut probe_values = vec![Vec::with_capacity(range.len()); probes.len()];
    let mut buf = vec![0.0; len];
    for s in range {
        let eta = design
            .physical_point(s)
            .ok_or(Error::invalid("reference design has no physical points"))?;
        model.evaluate(eta, &mut buf)?;
        acc.push(&buf);
        for (p, &idx) in probes.iter().enumerate() {
            probe_values[p].push(buf[idx]);
        }
    }
    Ok((acc, probe_values))
}

/// Serial reference mean and population std over `n` sampled fields.
pub fn reference_statistics(
    model: &dyn Model,
    inputs: &UncertainInput,
    n: usize,
    scheme: Scheme,
    seed: u64,
) -> Result<ReferenceStatistics> {
    let design = reference_design(inputs, n, scheme, seed)?;
    let (acc, _) = accumulate_range(model, &design, 0..n, &[])?;
    Ok(ReferenceStatistics::from_accumulator(
        &acc,
        model.n_nodes(),
        model.times().len(),
        scheme,
        seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_sets() {
        assert_eq!(total_degree_indices(1, 3), vec![vec![0], vec![1], vec![2], vec![3]]);
        let two = total_degree_indices(2, 2);
        assert_eq!(two, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        for (m, p) in [(1, 6), (3, 13), (3, 2), (4, 3)] {
            assert_eq!(total_degree_indices(m, p).len(), total_degree_size(m, p));
        }
        assert_eq!(total_degree_size(3, 13), 560);
    }

    #[test]
    fn legendre_low_orders() {
        let mut v = [0.0; 4];
        legendre_values(3, 0.5, &mut v);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[1], 0.5);
        assert!((v[2] - (1.5 * 0.25 - 0.5)).abs() < 1e-15);
        assert!((v[3] - (2.5 * 0.125 - 1.5 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn accumulator_merge_matches_single_pass() {
        let data: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64 * 0.3 + 1e6).collect();
        let mut whole = MomentAccumulator::new(1);
        for v in &data {
            whole.push(&[*v]);
        }
        let mut a = MomentAccumulator::new(1);
        let mut b = MomentAccumulator::new(1);
        for v in &data[..17] {
            a.push(&[*v]);
        }
        for v in &data[17..] {
            b.push(&[*v]);
        }
        a.merge(&b);
        assert_eq!(a.count(), 50);
        assert!((a.mean()[0] - whole.mean()[0]).abs() < 1e-9);
        assert!((a.std()[0] - whole.std()[0]).abs() < 1e-9);
        assert!(reference_design(&UncertainInput::uniform(&[("a", 0.0, 1.0)]).unwrap(), 1, Scheme::Mc, 0).is_err());
    }
}
