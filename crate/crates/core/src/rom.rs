//! Offline construction and online use of the POD/B-spline surrogate.
//!
//! The offline stage evaluates the model at per-element Gauss collocation
//! points, compresses the snapshots with [`two_step_pod`], splits each
//! spatial mode's coefficients into temporal modes and parameter-dependent
//! coefficients with [`third_level_pod`], and fits the latter by a global
//! least-squares B-spline regression assembled element by element.
//!
//! The surrogate field at a unit point `xi` and time `t_j` is
//! `sum_l Phi_l sum_k X^l[j, k] sum_q alpha[q, (l, k)] N_q(xi)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};

use crate::pod::{project_coefficients, reshape_mode_row, third_level_pod, two_step_pod, PodBasis, SnapshotMatrix, TemporalModes};
use crate::sampling::{collocation_plan, SampleSet, UncertainInput};
use crate::splines::BSplineSpace;
use crate::{Error, Matrix, Result};

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Relative eigenvalue floor of the minimum-norm fallback solve.
const PINV_FLOOR: f64 = 1e-12;

/// Variances down to `-VARIANCE_SLACK * scale` are treated as round-off.
const VARIANCE_SLACK: f64 = 1e-12;

/// A full-order model sampled at physical parameter values.
pub trait Model {
    /// Spatial nodes `N_e` per snapshot.
    fn n_nodes(&self) -> usize;
    /// Time grid; steady models return a single entry.
    fn times(&self) -> &[f64];
    /// Parameter count `m`.
    fn dim(&self) -> usize;
    /// Writes the `N_e x N_t` field at physical point `eta` into `out`,
    /// column-major (time `j` occupies `out[j * N_e..(j + 1) * N_e]`).
    fn evaluate(&self, eta: &[f64], out: &mut [f64]) -> Result<()>;
}

/// Hyperparameters of the offline stage.
#[derive(Debug, Clone, PartialEq)]
pub struct RomConfig {
    pub degrees: Vec<usize>,
    pub elements: Vec<usize>,
    pub eps_t: f64,
    pub eps_s: f64,
    /// Collocation points per dimension are `oversample * (p + 1)`.
    pub oversample: usize,
    pub seed: u64,
}

impl RomConfig {
    /// Same degree and element count in every one of `dim` dimensions.
    pub fn isotropic(dim: usize, degree: usize, elements: usize, eps: f64) -> Self {
        Self {
            degrees: vec![degree; dim],
            elements: vec![elements; dim],
            eps_t: eps,
            eps_s: eps,
            oversample: 1,
            seed: 0,
        }
    }

    pub fn space(&self) -> Result<BSplineSpace> {
        BSplineSpace::build(&self.degrees, &self.elements)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, eps) in [("eps_t", self.eps_t), ("eps_s", self.eps_s)] {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1), got {eps}")));
            }
        }
        if self.oversample == 0 {
            return Err(Error::invalid("oversample must be at least 1"));
        }
        self.space().map(|_| ())
    }
}

/// Trained surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub basis: PodBasis,
    pub temporal: TemporalModes,
    /// `M x sum_l K_l`; column `offset(l) + k` holds `alpha_k^l`.
    pub coefficients: Matrix,
    pub space: BSplineSpace,
    pub inputs: UncertainInput,
    pub times: Vec<f64>,
    pub config: RomConfig,
    pub n_samples: usize,
    /// Set when the global system needed the minimum-norm fallback.
    pub rank_deficient: bool,
}

/// Pointwise mean and standard deviation, `N_e x N_t` each.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticsField {
    pub mean: Matrix,
    pub std: Matrix,
}

impl Surrogate {
    pub fn n_nodes(&self) -> usize {
        self.basis.modes.nrows()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn n_modes(&self) -> usize {
        self.basis.n_modes()
    }

    /// First coefficient column of each spatial mode, plus the total.
    pub fn mode_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.temporal.modes.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for x in &self.temporal.modes {
            acc += x.ncols();
            offsets.push(acc);
        }
        offsets
    }

    /// Regressed coefficients `delta_hat` (one per column of
    /// `coefficients`) at unit point `xi`.
    pub fn reduced_coefficients(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let element = self.space.locate_element(xi)?;
        self.reduced_coefficients_in(element, xi)
    }

    fn reduced_coefficients_in(&self, element: usize, xi: &[f64]) -> Result<Vec<f64>> {
        let psi = self.space.eval_local_basis(element, xi)?;
        let ien: Vec<usize> = (0..psi.len())
            .map(|j| self.space.ien(element, j))
            .collect::<Result<_>>()?;
        let r = self.coefficients.ncols();
        let mut delta = vec![0.0; r];
        for (c, d) in delta.iter_mut().enumerate() {
            let col = self.coefficients.col_as_slice(c);
            *d = psi.iter().zip(&ien).map(|(v, &q)| v * col[q]).sum();
        }
        Ok(delta)
    }

    /// `B_hat` (`L x N_t`) from reduced coefficients.
    fn mode_trajectories(&self, delta: &[f64]) -> Matrix {
        let offsets = self.mode_offsets();
        let n_t = self.n_times();
        Mat::from_fn(self.n_modes(), n_t, |l, j| {
            let x = &self.temporal.modes[l];
            (0..x.ncols())
                .map(|k| x[(j, k)] * delta[offsets[l] + k])
                .sum()
        })
    }

    /// Space-time field at unit point `xi` (`N_e x N_t`).
    pub fn evaluate(&self, xi: &[f64]) -> Result<Matrix> {
        let element = self.space.locate_element(xi)?;
        self.evaluate_in(element, xi)
    }

    /// Evaluates with the polynomial pieces of `element`; `xi` must lie in
    /// its closed box.
    pub fn evaluate_in(&self, element: usize, xi: &[f64]) -> Result<Matrix> {
        let delta = self.reduced_coefficients_in(element, xi)?;
        let b = self.mode_trajectories(&delta);
        Ok(&self.basis.modes * &b)
    }

    /// Field at a physical parameter point.
    pub fn evaluate_physical(&self, eta: &[f64]) -> Result<Matrix> {
        let xi = self.inputs.to_unit(eta)?;
        self.evaluate(&xi)
    }

    /// Values at selected `(node, time index)` entries only; cost is
    /// independent of `N_e`.
    pub fn evaluate_entries(&self, xi: &[f64], entries: &[(usize, usize)]) -> Result<Vec<f64>> {
        let (n_e, n_t) = (self.n_nodes(), self.n_times());
        if let Some(&(i, j)) = entries.iter().find(|&&(i, j)| i >= n_e || j >= n_t) {
            return Err(Error::IndexOutOfRange {
                what: "field entry",
                index: if i >= n_e { i } else { j },
                len: if i >= n_e { n_e } else { n_t },
            });
        }
        let delta = self.reduced_coefficients(xi)?;
        let offsets = self.mode_offsets();
        Ok(entries
            .iter()
            .map(|&(i, j)| {
                (0..self.n_modes())
                    .map(|l| {
                        let x = &self.temporal.modes[l];
                        let b: f64 = (0..x.ncols()).map(|k| x[(j, k)] * delta[offsets[l] + k]).sum();
                        self.basis.modes[(i, l)] * b
                    })
                    .sum()
            })
            .collect())
    }

    /// Mean and standard deviation by tensor Gauss quadrature over each
    /// element; `points_per_dim[i]` defaults to `p_i + 1`.
    pub fn statistics(&self, points_per_dim: Option<&[usize]>) -> Result<StatisticsField> {
        let default: Vec<usize> = self.space.degrees().iter().map(|p| p + 1).collect();
        let points = points_per_dim.unwrap_or(&default);
        if points.len() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                context: "quadrature points per dimension",
                expected: self.space.dim(),
                actual: points.len(),
            });
        }
        if points.iter().zip(self.space.degrees()).any(|(&n, &p)| n < p + 1) {
            return Err(Error::invalid(format!(
                "quadrature order {points:?} below degree + 1 ({default:?})"
            )));
        }
        let (n_e, n_t) = (self.n_nodes(), self.n_times());
        // Moments of (u - shift) keep the variance well conditioned.
        let mut shift: Option<Matrix> = None;
        let mut first = Mat::<f64>::zeros(n_e, n_t);
        let mut second = Mat::<f64>::zeros(n_e, n_t);
        for e in 0..self.space.n_elements() {
            let rule = self.space.element_quadrature(e, points)?;
            for q in 0..rule.len() {
                let w = rule.weights[q];
                let field = self.evaluate_in(e, rule.node(q))?;
                let s = shift.get_or_insert_with(|| field.clone());
                for j in 0..n_t {
                    let (f, s) = (field.col_as_slice(j), s.col_as_slice(j));
                    let m1 = first.col_as_slice_mut(j);
                    for i in 0..n_e {
                        m1[i] += w * (f[i] - s[i]);
                    }
                    let m2 = second.col_as_slice_mut(j);
                    for i in 0..n_e {
                        let d = f[i] - s[i];
                        m2[i] += w * d * d;
                    }
                }
            }
        }
        let shift = shift.expect("at least one quadrature node");
        moments_to_field(&shift, &first, &second)
    }

    /// Surrogate snapshots at `points` in the snapshot ordering.
    pub fn reconstruct_snapshots(&self, points: &SampleSet) -> Result<SnapshotMatrix> {
        let (n_e, n_t) = (self.n_nodes(), self.n_times());
        let mut values = Mat::<f64>::zeros(n_e, points.len() * n_t);
        for s in 0..points.len() {
            let field = self.evaluate(points.unit_point(s))?;
            values
                .as_mut()
                .subcols_mut(s * n_t, n_t)
                .copy_from(field.as_ref());
        }
        SnapshotMatrix::new(values, points.len(), n_t)
    }
}

/// Mean and std from shifted first and second moments.
pub(crate) fn moments_to_field(shift: &Matrix, first: &Matrix, second: &Matrix) -> Result<StatisticsField> {
    let (n_e, n_t) = (shift.nrows(), shift.ncols());
    let mut mean = Mat::<f64>::zeros(n_e, n_t);
    let mut std = Mat::<f64>::zeros(n_e, n_t);
    for j in 0..n_t {
        for i in 0..n_e {
            let m1 = first[(i, j)];
            let var = second[(i, j)] - m1 * m1;
            mean[(i, j)] = shift[(i, j)] + m1;
            let scale = second[(i, j)].max(mean[(i, j)] * mean[(i, j)]).max(f64::MIN_POSITIVE);
            std[(i, j)] = if var >= 0.0 {
                var.sqrt()
            } else if var >= -VARIANCE_SLACK * scale {
                0.0
            } else {
                return Err(Error::Numeric(format!(
                    "negative variance {var:e} at node {i}, time index {j}"
                )));
            };
        }
    }
    Ok(StatisticsField { mean, std })
}

/// Local basis values at the given points of `element` (`n_points x n_b`).
pub fn local_design(space: &BSplineSpace, element: usize, points: &SampleSet) -> Result<Matrix> {
    let n_b = space.n_local();
    let mut design = Mat::<f64>::zeros(points.len(), n_b);
    let mut row = vec![0.0; n_b];
    for (i, xi) in points.unit_points().enumerate() {
        space.eval_local_basis_into(element, xi, &mut row)?;
        for (j, v) in row.iter().enumerate() {
            design[(i, j)] = *v;
        }
    }
    Ok(design)
}

/// Scatters `psi^T psi` and `psi^T delta` of every element into the global
/// normal equations. `outputs[e]` holds one right-hand side per column.
pub fn assemble(space: &BSplineSpace, designs: &[Matrix], outputs: &[Matrix]) -> Result<(Matrix, Matrix)> {
    let n_el = space.n_elements();
    for (what, len) in [("local design blocks", designs.len()), ("local output blocks", outputs.len())] {
        if len != n_el {
            return Err(Error::DimensionMismatch {
                context: what,
                expected: n_el,
                actual: len,
            });
        }
    }
    let n_rhs = outputs.first().map_or(0, |o| o.ncols());
    let (m, n_b) = (space.n_global(), space.n_local());
    let ien = space.ien_table();
    let mut psi = Mat::<f64>::zeros(m, m);
    let mut delta = Mat::<f64>::zeros(m, n_rhs);
    for e in 0..n_el {
        let (d, o) = (&designs[e], &outputs[e]);
        if d.ncols() != n_b {
            return Err(Error::DimensionMismatch {
                context: "local design columns",
                expected: n_b,
                actual: d.ncols(),
            });
        }
        if o.nrows() != d.nrows() || o.ncols() != n_rhs {
            return Err(Error::DimensionMismatch {
                context: "local output shape",
                expected: d.nrows() * n_rhs,
                actual: o.nrows() * o.ncols(),
            });
        }
        let gram = d.transpose() * d;
        let rhs = d.transpose() * o;
        let rows = ien.row(e);
        for (a, &ga) in rows.iter().enumerate() {
            for (b, &gb) in rows.iter().enumerate() {
                psi[(ga, gb)] += gram[(a, b)];
            }
            for c in 0..n_rhs {
                delta[(ga, c)] += rhs[(a, c)];
            }
        }
    }
    Ok((psi, delta))
}

/// Solves `psi alpha = delta` by Cholesky; on failure returns the
/// minimum-norm solution from a symmetric eigendecomposition with the flag
/// set.
pub fn solve_global(psi: MatRef<'_, f64>, delta: MatRef<'_, f64>) -> Result<(Matrix, bool)> {
    let m = psi.nrows();
    if psi.ncols() != m || delta.nrows() != m {
        return Err(Error::DimensionMismatch {
            context: "global system",
            expected: m,
            actual: if psi.ncols() != m { psi.ncols() } else { delta.nrows() },
        });
    }
    if let Ok(llt) = psi.llt(Side::Lower) {
        let alpha = llt.solve(delta);
        if alpha.col_iter().all(|c| c.iter().all(|v| v.is_finite())) {
            return Ok((alpha, false));
        }
    }
    let eig = psi
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigendecomposition failed: {e:?}")))?;
    let values: Vec<f64> = eig.S().column_vector().iter().copied().collect();
    let top = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(top > 0.0) || !top.is_finite() {
        return Err(Error::Numeric("global system matrix is singular".into()));
    }
    let u = eig.U();
    let proj = u.transpose() * delta;
    let scaled = Mat::from_fn(m, delta.ncols(), |i, c| {
        if values[i] > PINV_FLOOR * top {
            proj[(i, c)] / values[i]
        } else {
            0.0
        }
    });
    Ok((u * scaled, true))
}

/// Offline stage with serial model evaluation at the collocation plan of
/// `config`.
pub fn offline(model: &dyn Model, inputs: &UncertainInput, config: &RomConfig) -> Result<Surrogate> {
    config.validate()?;
    let space = config.space()?;
    let plan = collocation_plan(&space, config.oversample)?.mapped(inputs)?;
    let snapshots = evaluate_snapshots(model, &plan)?;
    offline_from_snapshots(snapshots, model.times().to_vec(), inputs, config)
}

/// Serial snapshot generation at the physical points of `plan`.
pub fn evaluate_snapshots(model: &dyn Model, plan: &SampleSet) -> Result<SnapshotMatrix> {
    if model.dim() != plan.dim() {
        return Err(Error::DimensionMismatch {
            context: "model parameter count",
            expected: plan.dim(),
            actual: model.dim(),
        });
    }
    let (n_e, n_t) = (model.n_nodes(), model.times().len());
    let mut values = Mat::<f64>::zeros(n_e, plan.len() * n_t);
    let mut buf = vec![0.0; n_e * n_t];
    for s in 0..plan.len() {
        let eta = plan
            .physical_point(s)
            .ok_or(Error::invalid("collocation plan has no physical points"))?;
        model.evaluate(eta, &mut buf)?;
        for j in 0..n_t {
            values
                .col_as_slice_mut(s * n_t + j)
                .copy_from_slice(&buf[j * n_e..(j + 1) * n_e]);
        }
    }
    SnapshotMatrix::new(values, plan.len(), n_t)
}

/// Offline stage from snapshots already taken at the collocation plan of
/// `config` (element-major, Gauss grid per element, dimension 1 fastest).
pub fn offline_from_snapshots(
    snapshots: SnapshotMatrix,
    times: Vec<f64>,
    inputs: &UncertainInput,
    config: &RomConfig,
) -> Result<Surrogate> {
    config.validate()?;
    let space = config.space()?;
    if inputs.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            context: "input distribution dimension",
            expected: space.dim(),
            actual: inputs.dim(),
        });
    }
    let plan = collocation_plan(&space, config.oversample)?;
    let n_s = plan.len();
    let n_t = snapshots.n_times();
    if snapshots.n_samples() != n_s {
        return Err(Error::DimensionMismatch {
            context: "snapshot samples vs. collocation plan",
            expected: n_s,
            actual: snapshots.n_samples(),
        });
    }
    if times.len() != n_t {
        return Err(Error::DimensionMismatch {
            context: "time grid length",
            expected: n_t,
            actual: times.len(),
        });
    }

    let basis = two_step_pod(&snapshots, config.eps_t, config.eps_s)?;
    let b = project_coefficients(&basis, snapshots.values())?;
    drop(snapshots);

    // Parameter-dependent coefficients of all (l, k), one row each.
    let mut temporal = TemporalModes::default();
    let mut lambdas = Vec::with_capacity(basis.n_modes());
    for l in 0..basis.n_modes() {
        let beta = reshape_mode_row(b.as_ref(), l, n_t, n_s)?;
        let (x, lambda) = third_level_pod(beta.as_ref(), config.eps_s)?;
        temporal.modes.push(x);
        lambdas.push(lambda);
    }
    let n_rhs = temporal.total_rank();
    let mut stacked = Mat::<f64>::zeros(n_rhs, n_s);
    let mut row = 0;
    for lambda in &lambdas {
        stacked
            .as_mut()
            .subrows_mut(row, lambda.nrows())
            .copy_from(lambda.as_ref());
        row += lambda.nrows();
    }

    let per_element = n_s / space.n_elements();
    let mut designs = Vec::with_capacity(space.n_elements());
    let mut outputs = Vec::with_capacity(space.n_elements());
    for e in 0..space.n_elements() {
        let start = e * per_element;
        let unit: Vec<f64> = (start..start + per_element)
            .flat_map(|s| plan.unit_point(s).iter().copied())
            .collect();
        let local = SampleSet::from_unit_points(space.dim(), unit, plan.scheme(), None)?;
        designs.push(local_design(&space, e, &local)?);
        outputs.push(
            stacked
                .as_ref()
                .subcols(start, per_element)
                .transpose()
                .to_owned(),
        );
    }
    let (psi, delta) = assemble(&space, &designs, &outputs)?;
    let (coefficients, rank_deficient) = solve_global(psi.as_ref(), delta.as_ref())?;

    Ok(Surrogate {
        basis,
        temporal,
        coefficients,
        space,
        inputs: inputs.clone(),
        times,
        config: config.clone(),
        n_samples: n_s,
        rank_deficient,
    })
}
