//! Proper orthogonal decomposition.
//!
//! [`pod`] truncates a thin SVD with the cumulative-energy rule
//! `sum_{l<=L} s_l^2 / sum_{l<=N_r} s_l^2 > 1 - eps`, where `N_r` counts the
//! singular values above `1e-14 * s_1`. Every returned mode is sign-fixed so
//! that its largest-magnitude entry is positive, which makes the output
//! deterministic.
//!
//! [`two_step_pod`] compresses each time trajectory of a
//! [`SnapshotMatrix`] first, then decomposes the concatenation of the
//! compressed bases. [`third_level_pod`] splits one mode's `N_t x N_s`
//! coefficient matrix into temporal modes and parameter-dependent
//! coefficients.

use alloc::format;
use alloc::vec::Vec;

use faer::{Mat, MatRef};

use crate::{Error, Matrix, Result};

/// Relative floor below which singular values count as zero.
pub const RANK_FLOOR: f64 = 1e-14;

/// Snapshots `u(eta_s, t_j)` stored sample-major: column `s * N_t + j`
/// holds sample `s` at time `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    values: Matrix,
    n_samples: usize,
    n_times: usize,
}

impl SnapshotMatrix {
    pub fn new(values: Matrix, n_samples: usize, n_times: usize) -> Result<Self> {
        if n_samples == 0 || n_times == 0 {
            return Err(Error::invalid("snapshot matrix needs at least one sample and one time"));
        }
        if values.ncols() != n_samples * n_times {
            return Err(Error::DimensionMismatch {
                context: "snapshot matrix columns (N_s * N_t)",
                expected: n_samples * n_times,
                actual: values.ncols(),
            });
        }
        if values.nrows() == 0 {
            return Err(Error::invalid("snapshot matrix has no spatial rows"));
        }
        Ok(Self {
            values,
            n_samples,
            n_times,
        })
    }

    /// Assembles the global matrix from per-sample `N_e x N_t` trajectory
    /// blocks.
    pub fn from_blocks(blocks: &[Matrix]) -> Result<Self> {
        let first = blocks.first().ok_or(Error::invalid("no trajectory blocks"))?;
        let (n_e, n_t) = (first.nrows(), first.ncols());
        for b in blocks {
            if b.nrows() != n_e || b.ncols() != n_t {
                return Err(Error::DimensionMismatch {
                    context: "trajectory block shape",
                    expected: n_e * n_t,
                    actual: b.nrows() * b.ncols(),
                });
            }
        }
        let values = Mat::from_fn(n_e, blocks.len() * n_t, |i, c| blocks[c / n_t][(i, c % n_t)]);
        Self::new(values, blocks.len(), n_t)
    }

    pub fn values(&self) -> MatRef<'_, f64> {
        self.values.as_ref()
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }

    pub fn n_nodes(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    /// Trajectory block `U_s` (`N_e x N_t`).
    pub fn block(&self, sample: usize) -> MatRef<'_, f64> {
        self.values
            .as_ref()
            .subcols(sample * self.n_times, self.n_times)
    }
}

/// Truncated orthonormal basis with its truncation record.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    pub modes: Matrix,
    pub singular_values: Vec<f64>,
    pub tolerance: f64,
    /// Captured fraction of the energy of the first `N_r` singular values.
    pub energy_ratio: f64,
    /// `N_r`, the numerical rank before truncation.
    pub numerical_rank: usize,
}

impl PodBasis {
    pub fn n_modes(&self) -> usize {
        self.modes.ncols()
    }
}

fn check_tolerance(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("POD tolerance must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

fn max_abs(m: MatRef<'_, f64>) -> Result<f64> {
    let mut max = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if !v.is_finite() {
                return Err(Error::Numeric(format!("non-finite entry at ({i}, {j})")));
            }
            max = max.max(v.abs());
        }
    }
    Ok(max)
}

/// Smallest `L` with `sum_{l<L} s_l^2 / total > 1 - eps`, and the ratio it
/// reaches.
pub fn energy_truncation(singular_values: &[f64], eps: f64) -> (usize, f64) {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    let mut cumulative = 0.0;
    for (l, s) in singular_values.iter().enumerate() {
        cumulative += s * s;
        if cumulative / total > 1.0 - eps {
            return (l + 1, cumulative / total);
        }
    }
    (singular_values.len(), cumulative / total)
}

/// Flips each column so that its largest-magnitude entry is positive
/// (first such entry on ties).
pub fn fix_signs(m: &mut Matrix) {
    for j in 0..m.ncols() {
        let col = m.col_as_slice(j);
        let mut best = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            for v in m.col_as_slice_mut(j) {
                *v = -*v;
            }
        }
    }
}

/// POD of `matrix` at energy tolerance `eps`.
pub fn pod(matrix: MatRef<'_, f64>, eps: f64) -> Result<PodBasis> {
    check_tolerance(eps)?;
    if matrix.nrows() == 0 || matrix.ncols() == 0 || max_abs(matrix)? == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let svd = matrix
        .thin_svd()
        .map_err(|e| Error::Numeric(format!("SVD did not converge: {e:?}")))?;
    let sv: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let floor = RANK_FLOOR * sv[0];
    let numerical_rank = sv.iter().take_while(|&&s| s > floor).count();
    let (n_modes, energy_ratio) = energy_truncation(&sv[..numerical_rank], eps);
    let u = svd.U();
    let mut modes = Mat::from_fn(matrix.nrows(), n_modes, |i, j| u[(i, j)]);
    fix_signs(&mut modes);
    Ok(PodBasis {
        modes,
        singular_values: sv[..n_modes].to_vec(),
        tolerance: eps,
        energy_ratio,
        numerical_rank,
    })
}

/// Two-step POD: per-trajectory compression at `eps_t`, then POD of the
/// concatenated compressed bases (in sample order) at `eps_s`. Trajectories
/// that are identically zero carry no directions and are skipped.
pub fn two_step_pod(snapshots: &SnapshotMatrix, eps_t: f64, eps_s: f64) -> Result<PodBasis> {
    check_tolerance(eps_t)?;
    check_tolerance(eps_s)?;
    let n_e = snapshots.n_nodes();
    let cap = snapshots.n_samples() * snapshots.n_times().min(n_e);
    let mut concat = Mat::<f64>::with_capacity(n_e, cap);
    concat.resize_with(n_e, 0, |_, _| 0.0);
    for s in 0..snapshots.n_samples() {
        let block = snapshots.block(s);
        let local = match pod(block, eps_t) {
            Ok(b) => b.modes,
            Err(Error::ZeroMatrix) => continue,
            Err(e) => return Err(e),
        };
        let start = concat.ncols();
        concat.resize_with(n_e, start + local.ncols(), |i, j| local[(i, j - start)]);
    }
    if concat.ncols() == 0 {
        return Err(Error::ZeroMatrix);
    }
    pod(concat.as_ref(), eps_s)
}

/// `B = Phi^T U` (`L x N_s N_t`), columns ordered as in the snapshots.
pub fn project_coefficients(basis: &PodBasis, snapshots: MatRef<'_, f64>) -> Result<Matrix> {
    if basis.modes.nrows() != snapshots.nrows() {
        return Err(Error::DimensionMismatch {
            context: "projection (basis rows vs. snapshot rows)",
            expected: basis.modes.nrows(),
            actual: snapshots.nrows(),
        });
    }
    Ok(basis.modes.transpose() * snapshots)
}

/// Row `l` of `B` reshaped to `beta[j, s] = B[l, s * N_t + j]`.
pub fn reshape_mode_row(coefficients: MatRef<'_, f64>, mode: usize, n_times: usize, n_samples: usize) -> Result<Matrix> {
    if mode >= coefficients.nrows() {
        return Err(Error::IndexOutOfRange {
            what: "POD mode",
            index: mode,
            len: coefficients.nrows(),
        });
    }
    if coefficients.ncols() != n_times * n_samples {
        return Err(Error::DimensionMismatch {
            context: "coefficient row length (N_s * N_t)",
            expected: n_times * n_samples,
            actual: coefficients.ncols(),
        });
    }
    Ok(Mat::from_fn(n_times, n_samples, |j, s| coefficients[(mode, s * n_times + j)]))
}

/// Inverse of [`reshape_mode_row`].
pub fn flatten_mode_matrix(beta: MatRef<'_, f64>) -> Vec<f64> {
    let (n_t, n_s) = (beta.nrows(), beta.ncols());
    (0..n_t * n_s).map(|c| beta[(c % n_t, c / n_t)]).collect()
}

/// Per-mode temporal bases `X^l` (`N_t x K_l`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TemporalModes {
    pub modes: Vec<Matrix>,
}

impl TemporalModes {
    pub fn ranks(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.ncols()).collect()
    }

    pub fn total_rank(&self) -> usize {
        self.modes.iter().map(|m| m.ncols()).sum()
    }
}

/// `X = POD(beta, eps_s)` and `Lambda = X^T beta`.
pub fn third_level_pod(beta: MatRef<'_, f64>, eps_s: f64) -> Result<(Matrix, Matrix)> {
    let basis = pod(beta, eps_s)?;
    let lambda = basis.modes.transpose() * beta;
    Ok((basis.modes, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn orthonormality_error(m: MatRef<'_, f64>) -> f64 {
        let g = m.transpose() * m;
        let mut err = 0.0;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let d = g[(i, j)] - if i == j { 1.0 } else { 0.0 };
                err += d * d;
            }
        }
        err.sqrt()
    }

    #[test]
    fn rank_one_matrix_gives_one_mode() {
        let u = [1.0, -3.0, 2.0];
        let v = [3.0, 1.0, -1.0, 0.5];
        let a = Mat::from_fn(3, 4, |i, j| u[i] * v[j]);
        let b = pod(a.as_ref(), 0.5).unwrap();
        assert_eq!(b.n_modes(), 1);
        assert_eq!(b.numerical_rank, 1);
        // normalized (1,-3,2) with the largest-magnitude entry positive
        let n = 14f64.sqrt();
        let expected = [-1.0 / n, 3.0 / n, -2.0 / n];
        for i in 0..3 {
            assert!((b.modes[(i, 0)] - expected[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn energy_arithmetic_on_diagonal() {
        let a = Mat::from_fn(5, 2, |i, j| if i == j { [2.0, 1.0][i] } else { 0.0 });
        let b = pod(a.as_ref(), 0.3).unwrap();
        assert_eq!(b.n_modes(), 1);
        assert!((b.singular_values[0] - 2.0).abs() < 1e-14);
        assert!((b.energy_ratio - 0.8).abs() < 1e-14);
        assert_eq!(pod(a.as_ref(), 0.1).unwrap().n_modes(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        let z = Mat::<f64>::zeros(3, 2);
        assert_eq!(pod(z.as_ref(), 0.1), Err(Error::ZeroMatrix));
        let a = random(3, 2, 1);
        assert!(pod(a.as_ref(), 1.5).is_err());
        assert!(pod(a.as_ref(), 0.0).is_err());
    }

    #[test]
    fn energy_rule_is_minimal() {
        for seed in 0..20 {
            let a = random(12, 9, seed);
            for &eps in &[1e-1, 1e-2, 1e-4] {
                let b = pod(a.as_ref(), eps).unwrap();
                let all = pod(a.as_ref(), 1e-15).unwrap().singular_values;
                let total: f64 = all.iter().map(|s| s * s).sum();
                let head = |l: usize| all[..l].iter().map(|s| s * s).sum::<f64>() / total;
                let l = b.n_modes();
                assert!(head(l) > 1.0 - eps);
                assert!(l == 1 || head(l - 1) <= 1.0 - eps);
            }
        }
    }

    #[test]
    fn wide_matrices_are_supported() {
        let a = random(6, 20, 4);
        let b = pod(a.as_ref(), 1e-15).unwrap();
        assert_eq!(b.n_modes(), 6);
        assert!(orthonormality_error(b.modes.as_ref()) < 1e-12);
    }

    #[test]
    fn reshape_examples() {
        let b = Mat::from_fn(1, 4, |_, j| [1.0, 2.0, 3.0, 4.0][j]);
        let beta = reshape_mode_row(b.as_ref(), 0, 2, 2).unwrap();
        assert_eq!(beta[(0, 0)], 1.0);
        assert_eq!(beta[(0, 1)], 3.0);
        assert_eq!(beta[(1, 0)], 2.0);
        assert_eq!(beta[(1, 1)], 4.0);
        assert_eq!(flatten_mode_matrix(beta.as_ref()), vec![1.0, 2.0, 3.0, 4.0]);
        let col = reshape_mode_row(b.as_ref(), 0, 4, 1).unwrap();
        assert_eq!((col.nrows(), col.ncols()), (4, 1));
        assert_eq!(col[(2, 0)], 3.0);
        assert!(reshape_mode_row(b.as_ref(), 1, 2, 2).is_err());
    }

    #[test]
    fn third_level_examples() {
        let t = [1.0, 2.0, 3.0];
        let s = [0.5, -1.0];
        let beta = Mat::from_fn(3, 2, |i, j| t[i] * s[j]);
        let (x, lambda) = third_level_pod(beta.as_ref(), 1e-10).unwrap();
        assert_eq!(x.ncols(), 1);
        let rec = &x * &lambda;
        for i in 0..3 {
            for j in 0..2 {
                assert!((rec[(i, j)] - beta[(i, j)]).abs() < 1e-12);
            }
        }
        // constant in time
        let beta = Mat::from_fn(4, 3, |_, j| [1.0, -2.0, 0.3][j]);
        let (x, _) = third_level_pod(beta.as_ref(), 1e-10).unwrap();
        assert_eq!(x.ncols(), 1);
        for i in 0..4 {
            assert!((x[(i, 0)] - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn snapshot_matrix_shape_checks() {
        assert!(SnapshotMatrix::new(random(4, 6, 0), 2, 2).is_err());
        let s = SnapshotMatrix::new(random(4, 6, 0), 3, 2).unwrap();
        assert_eq!(s.block(1)[(2, 1)], s.values()[(2, 3)]);
        let blocks = [random(4, 2, 1), random(4, 2, 2)];
        let s = SnapshotMatrix::from_blocks(&blocks).unwrap();
        assert_eq!(s.values()[(3, 2)], blocks[1][(3, 0)]);
    }

    #[test]
    fn zero_trajectories_are_skipped() {
        let mut a = random(8, 6, 9);
        for i in 0..8 {
            a[(i, 2)] = 0.0;
            a[(i, 3)] = 0.0;
        }
        let snaps = SnapshotMatrix::new(a, 3, 2).unwrap();
        let b = two_step_pod(&snaps, 1e-12, 1e-12).unwrap();
        assert_eq!(b.n_modes(), 4);
        let zero = SnapshotMatrix::new(Mat::zeros(3, 4), 2, 2).unwrap();
        assert_eq!(two_step_pod(&zero, 0.1, 0.1), Err(Error::ZeroMatrix));
    }
}
