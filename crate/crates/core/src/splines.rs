//! Tensor-product B-spline spaces over Bézier elements of `[0, 1]^m`.
//!
//! Each dimension `i` carries an open uniform knot vector of degree `p_i`
//! with `nx_i` elements, giving `M_i = nx_i + p_i` global functions. Inside
//! element `e_i` the nonzero univariate functions are `e_i ..= e_i + p_i`.
//!
//! Numbering conventions (stable, used by coefficient files):
//!
//! * elements, local functions and global functions are all enumerated
//!   lexicographically with dimension 1 varying fastest;
//! * `ien(e, j)` combines the per-dimension global indices `e_i + j_i` with
//!   the mixed radix `(M_1, M_2, ...)`.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::sampling::tensor_grid;
use crate::{Error, Result};

/// Slack used when checking that a point belongs to a closed element box.
const BOX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BSplineSpace {
    degrees: Vec<usize>,
    elements: Vec<usize>,
    knots: Vec<Vec<f64>>,
}

/// Element-to-global connectivity, `n_elements x n_local`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IenTable {
    n_local: usize,
    table: Vec<usize>,
}

impl IenTable {
    pub fn row(&self, element: usize) -> &[usize] {
        &self.table[element * self.n_local..(element + 1) * self.n_local]
    }

    pub fn n_elements(&self) -> usize {
        self.table.len() / self.n_local
    }
}

/// Quadrature nodes (row-major, `dim` coordinates each) and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub dim: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, q: usize) -> &[f64] {
        &self.nodes[q * self.dim..(q + 1) * self.dim]
    }
}

impl BSplineSpace {
    pub fn build(degrees: &[usize], elements: &[usize]) -> Result<Self> {
        if degrees.is_empty() || degrees.len() != elements.len() {
            return Err(Error::invalid(
                "degree and element-count vectors must be non-empty and of equal length",
            ));
        }
        if degrees.contains(&0) {
            return Err(Error::invalid("spline degrees must be at least 1"));
        }
        if elements.contains(&0) {
            return Err(Error::invalid("element counts must be at least 1"));
        }
        let knots = degrees
            .iter()
            .zip(elements)
            .map(|(&p, &nx)| open_uniform_knots(p, nx))
            .collect();
        Ok(Self {
            degrees: degrees.to_vec(),
            elements: elements.to_vec(),
            knots,
        })
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn knots(&self, dim: usize) -> &[f64] {
        &self.knots[dim]
    }

    /// Number of global univariate functions in dimension `dim`.
    pub fn global_per_dim(&self, dim: usize) -> usize {
        self.elements[dim] + self.degrees[dim]
    }

    /// `N_elt`, the number of Bézier elements.
    pub fn n_elements(&self) -> usize {
        self.elements.iter().product()
    }

    /// `n_b`, the number of nonzero basis functions per element.
    pub fn n_local(&self) -> usize {
        self.degrees.iter().map(|p| p + 1).product()
    }

    /// `M`, the number of global coefficients.
    pub fn n_global(&self) -> usize {
        (0..self.dim()).map(|d| self.global_per_dim(d)).product()
    }

    fn check_element(&self, element: usize) -> Result<()> {
        let len = self.n_elements();
        if element >= len {
            return Err(Error::IndexOutOfRange {
                what: "element",
                index: element,
                len,
            });
        }
        Ok(())
    }

    fn check_point(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "parametric point",
                expected: self.dim(),
                actual: xi.len(),
            });
        }
        if xi.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::OutOfDomain(alloc::format!("unit hypercube ({xi:?})")));
        }
        Ok(())
    }

    pub fn element_multi_index(&self, element: usize) -> Result<Vec<usize>> {
        self.check_element(element)?;
        let mut rest = element;
        Ok(self
            .elements
            .iter()
            .map(|&nx| {
                let k = rest % nx;
                rest /= nx;
                k
            })
            .collect())
    }

    pub fn element_index(&self, multi: &[usize]) -> Result<usize> {
        if multi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "element multi-index",
                expected: self.dim(),
                actual: multi.len(),
            });
        }
        let mut e = 0;
        for d in (0..self.dim()).rev() {
            if multi[d] >= self.elements[d] {
                return Err(Error::IndexOutOfRange {
                    what: "element (per dimension)",
                    index: multi[d],
                    len: self.elements[d],
                });
            }
            e = e * self.elements[d] + multi[d];
        }
        Ok(e)
    }

    /// Closed per-dimension interval `[lo, hi]` of an element.
    pub fn element_bounds(&self, element: usize) -> Result<Vec<(f64, f64)>> {
        let multi = self.element_multi_index(element)?;
        Ok(multi
            .iter()
            .enumerate()
            .map(|(d, &k)| {
                let p = self.degrees[d];
                (self.knots[d][p + k], self.knots[d][p + k + 1])
            })
            .collect())
    }

    pub fn element_volume(&self) -> f64 {
        self.elements.iter().map(|&n| 1.0 / n as f64).product()
    }

    fn locate_1d(&self, d: usize, x: f64) -> usize {
        let nx = self.elements[d];
        let p = self.degrees[d];
        let knots = &self.knots[d];
        let mut k = ((x * nx as f64) as usize).min(nx - 1);
        while k + 1 < nx && x >= knots[p + k + 1] {
            k += 1;
        }
        while k > 0 && x < knots[p + k] {
            k -= 1;
        }
        k
    }

    /// Element containing `xi` under half-open boxes `[lo, hi)`, with
    /// `xi_i = 1` assigned to the last element of dimension `i`.
    pub fn locate_element(&self, xi: &[f64]) -> Result<usize> {
        self.check_point(xi)?;
        let multi: Vec<usize> = xi
            .iter()
            .enumerate()
            .map(|(d, &x)| self.locate_1d(d, x))
            .collect();
        self.element_index(&multi)
    }

    pub fn contains(&self, element: usize, xi: &[f64]) -> Result<bool> {
        let bounds = self.element_bounds(element)?;
        if xi.len() != bounds.len() {
            return Err(Error::DimensionMismatch {
                context: "parametric point",
                expected: bounds.len(),
                actual: xi.len(),
            });
        }
        Ok(xi
            .iter()
            .zip(&bounds)
            .all(|(&x, &(lo, hi))| x >= lo - BOX_TOL && x <= hi + BOX_TOL))
    }

    /// Values of the `n_b` nonzero basis functions of `element` at `xi`,
    /// in local order (dimension 1 fastest).
    pub fn eval_local_basis(&self, element: usize, xi: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_local()];
        self.eval_local_basis_into(element, xi, &mut out)?;
        Ok(out)
    }

    pub fn eval_local_basis_into(&self, element: usize, xi: &[f64], out: &mut [f64]) -> Result<()> {
        if !self.contains(element, xi)? {
            return Err(Error::OutOfDomain(alloc::format!(
                "element {element} (point {xi:?})"
            )));
        }
        if out.len() != self.n_local() {
            return Err(Error::DimensionMismatch {
                context: "local basis buffer",
                expected: self.n_local(),
                actual: out.len(),
            });
        }
        let multi = self.element_multi_index(element)?;
        let univariate: Vec<Vec<f64>> = (0..self.dim())
            .map(|d| self.univariate_piece(d, multi[d], xi[d]))
            .collect();
        tensor_values(&univariate, out);
        Ok(())
    }

    /// Nonzero univariate functions of element `k` in dimension `d`,
    /// evaluated from that element's polynomial pieces. Points outside the
    /// element extrapolate the pieces.
    pub fn univariate_piece(&self, d: usize, k: usize, x: f64) -> Vec<f64> {
        let p = self.degrees[d];
        let mut n = vec![0.0; p + 1];
        basis_funs(&self.knots[d], p, p + k, x, &mut n);
        n
    }

    /// Global index of local function `j` of `element`.
    pub fn ien(&self, element: usize, local: usize) -> Result<usize> {
        let multi = self.element_multi_index(element)?;
        let n_local = self.n_local();
        if local >= n_local {
            return Err(Error::IndexOutOfRange {
                what: "local basis function",
                index: local,
                len: n_local,
            });
        }
        let mut rest = local;
        let mut global = 0;
        let mut stride = 1;
        for d in 0..self.dim() {
            let p1 = self.degrees[d] + 1;
            let j = rest % p1;
            rest /= p1;
            global += (multi[d] + j) * stride;
            stride *= self.global_per_dim(d);
        }
        Ok(global)
    }

    pub fn ien_table(&self) -> IenTable {
        let n_local = self.n_local();
        let mut table = Vec::with_capacity(self.n_elements() * n_local);
        for e in 0..self.n_elements() {
            for j in 0..n_local {
                table.push(self.ien(e, j).expect("indices in range"));
            }
        }
        IenTable { n_local, table }
    }

    /// Global function `q` evaluated directly from the recursive
    /// Cox–de Boor definition, independent of element bookkeeping.
    pub fn global_basis_value(&self, q: usize, xi: &[f64]) -> Result<f64> {
        self.check_point(xi)?;
        let len = self.n_global();
        if q >= len {
            return Err(Error::IndexOutOfRange {
                what: "global basis function",
                index: q,
                len,
            });
        }
        let mut rest = q;
        let mut value = 1.0;
        for d in 0..self.dim() {
            let m = self.global_per_dim(d);
            let i = rest % m;
            rest /= m;
            value *= cox_de_boor(&self.knots[d], self.degrees[d], i, xi[d]);
        }
        Ok(value)
    }

    /// Tensor Gauss–Legendre rule mapped onto `element`. Weights sum to the
    /// element volume.
    pub fn element_quadrature(&self, element: usize, points_per_dim: &[usize]) -> Result<QuadratureRule> {
        if points_per_dim.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "quadrature points per dimension",
                expected: self.dim(),
                actual: points_per_dim.len(),
            });
        }
        if points_per_dim.contains(&0) {
            return Err(Error::invalid("quadrature needs at least one point per dimension"));
        }
        let bounds = self.element_bounds(element)?;
        let mut nodes_1d = Vec::with_capacity(self.dim());
        let mut weights_1d = Vec::with_capacity(self.dim());
        for (&(lo, hi), &n) in bounds.iter().zip(points_per_dim) {
            let (x, w) = gauss_legendre(n);
            let half = 0.5 * (hi - lo);
            nodes_1d.push(x.iter().map(|t| lo + half * (t + 1.0)).collect::<Vec<_>>());
            weights_1d.push(w.iter().map(|w| w * half).collect::<Vec<_>>());
        }
        let nodes = tensor_grid(&nodes_1d);
        let w_flat = tensor_grid(&weights_1d);
        let weights = w_flat
            .chunks_exact(self.dim())
            .map(|w| w.iter().product())
            .collect();
        Ok(QuadratureRule {
            dim: self.dim(),
            nodes,
            weights,
        })
    }
}

fn open_uniform_knots(p: usize, nx: usize) -> Vec<f64> {
    let mut knots = Vec::with_capacity(nx + 2 * p + 1);
    knots.extend(core::iter::repeat_n(0.0, p + 1));
    knots.extend((1..nx).map(|i| i as f64 / nx as f64));
    knots.extend(core::iter::repeat_n(1.0, p + 1));
    knots
}

/// Triangular Cox–de Boor recurrence for the `p + 1` functions that are
/// nonzero on knot span `span` (`knots[span] <= x <= knots[span + 1]`).
fn basis_funs(knots: &[f64], p: usize, span: usize, x: f64, out: &mut [f64]) {
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    out[0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

/// Recursive definition of `N_{i,p}(x)`; the right end of the knot vector
/// belongs to the last nondegenerate span.
pub fn cox_de_boor(knots: &[f64], p: usize, i: usize, x: f64) -> f64 {
    if p == 0 {
        let (a, b) = (knots[i], knots[i + 1]);
        let last = *knots.last().expect("non-empty knot vector");
        if (a <= x && x < b) || (x == last && b == last && a < b) {
            return 1.0;
        }
        return 0.0;
    }
    let mut value = 0.0;
    let d1 = knots[i + p] - knots[i];
    if d1 > 0.0 {
        value += (x - knots[i]) / d1 * cox_de_boor(knots, p - 1, i, x);
    }
    let d2 = knots[i + p + 1] - knots[i + 1];
    if d2 > 0.0 {
        value += (knots[i + p + 1] - x) / d2 * cox_de_boor(knots, p - 1, i + 1, x);
    }
    value
}

fn tensor_values(univariate: &[Vec<f64>], out: &mut [f64]) {
    let dim = univariate.len();
    let mut idx = vec![0usize; dim];
    for slot in out.iter_mut() {
        *slot = (0..dim).map(|d| univariate[d][idx[d]]).product();
        for d in 0..dim {
            idx[d] += 1;
            if idx[d] < univariate[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// `n`-point Gauss–Legendre nodes (ascending) and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi's initial guess, refined by Newton on P_n.
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn build_examples() {
        let s = BSplineSpace::build(&[2], &[1]).unwrap();
        assert_eq!(s.knots(0), &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(s.n_global(), 3);
        let s = BSplineSpace::build(&[2], &[2]).unwrap();
        assert_eq!(s.knots(0), &[0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0]);
        assert_eq!(s.n_global(), 4);
        let s = BSplineSpace::build(&[2, 2, 2], &[5, 5, 5]).unwrap();
        assert_eq!((s.n_elements(), s.n_local(), s.n_global()), (125, 27, 343));
        assert!(BSplineSpace::build(&[0], &[1]).is_err());
        assert!(BSplineSpace::build(&[1], &[0]).is_err());
        assert!(BSplineSpace::build(&[1, 1], &[1]).is_err());
    }

    #[test]
    fn locate_examples() {
        let s = BSplineSpace::build(&[1], &[4]).unwrap();
        assert_eq!(s.locate_element(&[0.26]).unwrap(), 1);
        assert_eq!(s.locate_element(&[0.25]).unwrap(), 1);
        assert_eq!(s.locate_element(&[1.0]).unwrap(), 3);
        assert_eq!(s.locate_element(&[0.0]).unwrap(), 0);
        assert!(s.locate_element(&[1.01]).is_err());
        let s = BSplineSpace::build(&[2], &[10]).unwrap();
        for i in 0..10 {
            let x = i as f64 / 10.0;
            assert_eq!(s.locate_element(&[x]).unwrap(), i);
        }
    }

    #[test]
    fn local_basis_examples() {
        let s = BSplineSpace::build(&[2], &[1]).unwrap();
        let v = s.eval_local_basis(0, &[0.5]).unwrap();
        assert_relative_eq!(v.as_slice(), [0.25, 0.5, 0.25].as_slice(), epsilon = 1e-15);
        let s = BSplineSpace::build(&[1, 1], &[1, 1]).unwrap();
        let v = s.eval_local_basis(0, &[0.5, 0.5]).unwrap();
        assert_relative_eq!(v.as_slice(), [0.25; 4].as_slice(), epsilon = 1e-15);
        let s = BSplineSpace::build(&[2], &[2]).unwrap();
        assert!(s.eval_local_basis(0, &[0.75]).is_err());
    }

    #[test]
    fn ien_examples() {
        let s = BSplineSpace::build(&[1], &[2]).unwrap();
        assert_eq!(s.ien_table().row(0), &[0, 1]);
        assert_eq!(s.ien_table().row(1), &[1, 2]);
        let s = BSplineSpace::build(&[2], &[2]).unwrap();
        assert_eq!(s.ien_table().row(1), &[1, 2, 3]);
        let s = BSplineSpace::build(&[1, 1], &[2, 1]).unwrap();
        let e = s.element_index(&[1, 0]).unwrap();
        assert_eq!(s.ien_table().row(e), &[1, 2, 4, 5]);
        assert!(s.ien(0, 4).is_err());
        assert!(s.ien(2, 0).is_err());
    }

    #[test]
    fn ien_covers_all_globals_and_is_distinct_per_element() {
        let s = BSplineSpace::build(&[2, 1, 3], &[3, 4, 2]).unwrap();
        let t = s.ien_table();
        let mut hit = vec![false; s.n_global()];
        for e in 0..s.n_elements() {
            let row = t.row(e);
            let mut sorted = row.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), row.len());
            for &q in row {
                hit[q] = true;
            }
        }
        assert!(hit.iter().all(|&h| h));
    }

    #[test]
    fn quadrature_examples() {
        let s = BSplineSpace::build(&[1], &[2]).unwrap();
        let q = s.element_quadrature(0, &[1]).unwrap();
        assert_eq!(q.nodes, vec![0.25]);
        assert_eq!(q.weights, vec![0.5]);
        let s = BSplineSpace::build(&[1], &[1]).unwrap();
        let q = s.element_quadrature(0, &[2]).unwrap();
        let integral: f64 = (0..q.len()).map(|i| q.weights[i] * q.node(i)[0].powi(3)).sum();
        assert_relative_eq!(integral, 0.25, epsilon = 1e-15);
        let s = BSplineSpace::build(&[2, 1], &[3, 4]).unwrap();
        let q = s.element_quadrature(5, &[3, 2]).unwrap();
        assert_relative_eq!(q.weights.iter().sum::<f64>(), 1.0 / 12.0, epsilon = 1e-15);
        assert!(q.weights.iter().all(|&w| w > 0.0));
        assert!(s.element_quadrature(5, &[0, 2]).is_err());
    }

    #[test]
    fn gauss_legendre_matches_closed_forms() {
        let (x, w) = gauss_legendre(1);
        assert_eq!((x[0], w[0]), (0.0, 2.0));
        let (x, w) = gauss_legendre(2);
        assert_relative_eq!(x[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(w[0], 1.0, epsilon = 1e-15);
        let (x, w) = gauss_legendre(3);
        assert_relative_eq!(x[2], (0.6f64).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(w[1], 8.0 / 9.0, epsilon = 1e-15);
        // degree 2n-1 exactness for larger n
        for n in 4..16 {
            let (x, w) = gauss_legendre(n);
            let deg = 2 * n - 2;
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert_relative_eq!(got, 2.0 / (deg as f64 + 1.0), epsilon = 1e-13);
        }
    }

    #[test]
    fn partition_of_unity_and_nonnegativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = BSplineSpace::build(&[3, 2], &[4, 3]).unwrap();
        for e in 0..s.n_elements() {
            let b = s.element_bounds(e).unwrap();
            for _ in 0..1000 {
                let xi: Vec<f64> = b.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect();
                let v = s.eval_local_basis(e, &xi).unwrap();
                assert!((v.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                assert!(v.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn local_values_match_direct_global_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = BSplineSpace::build(&[2, 3], &[3, 2]).unwrap();
        let t = s.ien_table();
        for _ in 0..200 {
            let xi = [rng.random::<f64>(), rng.random::<f64>()];
            let e = s.locate_element(&xi).unwrap();
            let local = s.eval_local_basis(e, &xi).unwrap();
            let mut scattered = vec![0.0; s.n_global()];
            for (j, &q) in t.row(e).iter().enumerate() {
                scattered[q] = local[j];
            }
            for (q, v) in scattered.iter().enumerate() {
                let direct = s.global_basis_value(q, &xi).unwrap();
                assert!((direct - v).abs() <= 1e-13, "q={q} {direct} vs {v}");
            }
        }
    }

    #[test]
    fn continuity_across_interior_knots() {
        for p in 2..=3usize {
            let s = BSplineSpace::build(&[p], &[4]).unwrap();
            for k in 1..4 {
                let knot = k as f64 / 4.0;
                let left = |x: f64| s.univariate_piece(0, k - 1, x);
                let right = |x: f64| s.univariate_piece(0, k, x);
                // left piece covers globals k-1..k-1+p, right piece k..k+p
                for q in k..=k - 1 + p {
                    let (jl, jr) = (q - (k - 1), q - k);
                    assert!((left(knot)[jl] - right(knot)[jr]).abs() <= 1e-14);
                    let h = 1e-6;
                    let dl = (left(knot + h)[jl] - left(knot - h)[jl]) / (2.0 * h);
                    let dr = (right(knot + h)[jr] - right(knot - h)[jr]) / (2.0 * h);
                    assert!((dl - dr).abs() <= 1e-5, "p={p} d1 {dl} vs {dr}");
                    if p >= 3 {
                        let h = 1e-4;
                        let d2 = |f: &dyn Fn(f64) -> Vec<f64>, j: usize| {
                            (f(knot + h)[j] - 2.0 * f(knot)[j] + f(knot - h)[j]) / (h * h)
                        };
                        let (al, ar) = (d2(&left, jl), d2(&right, jr));
                        assert!((al - ar).abs() <= 1e-5, "p={p} d2 {al} vs {ar}");
                    }
                }
            }
        }
    }

    #[test]
    fn two_point_rule_integrates_linear_basis_products_exactly() {
        let s = BSplineSpace::build(&[1], &[3]).unwrap();
        for e in 0..3 {
            let q = s.element_quadrature(e, &[2]).unwrap();
            let h = 1.0 / 3.0;
            // hat pieces on an element of width h: int N_a N_b = h/3 (a=b), h/6 (a!=b)
            for a in 0..2 {
                for b in 0..2 {
                    let got: f64 = (0..q.len())
                        .map(|i| {
                            let v = s.eval_local_basis(e, q.node(i)).unwrap();
                            q.weights[i] * v[a] * v[b]
                        })
                        .sum();
                    let exact = if a == b { h / 3.0 } else { h / 6.0 };
                    assert!((got - exact).abs() <= 1e-14);
                }
            }
        }
    }
}
