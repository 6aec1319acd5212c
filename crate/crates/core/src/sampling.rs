//! Input uncertainty, CDF maps and sample designs.
//!
//! Parameters live in two coordinate systems: the physical values `eta`
//! and the unit parametric coordinates `xi = F(eta)` in `[0, 1]`, where `F`
//! is the marginal CDF. B-spline bases, quadrature and sampling all work in
//! unit coordinates; models are called with physical values.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::splines::{gauss_legendre, BSplineSpace};
use crate::{Error, Result};

/// Identifier of the random generator behind every seeded design.
pub const RNG_ALGORITHM: &str = "chacha20";

/// Marginal distribution of one uncertain parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    Uniform { lower: f64, upper: f64 },
}

impl Marginal {
    pub fn kind(&self) -> &'static str {
        match self {
            Marginal::Uniform { .. } => "uniform",
        }
    }

    pub fn cdf(&self, eta: f64) -> f64 {
        match *self {
            Marginal::Uniform { lower, upper } => ((eta - lower) / (upper - lower)).clamp(0.0, 1.0),
        }
    }

    pub fn inverse_cdf(&self, xi: f64) -> f64 {
        match *self {
            Marginal::Uniform { lower, upper } => {
                if xi >= 1.0 {
                    upper
                } else {
                    lower + xi * (upper - lower)
                }
            }
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            Marginal::Uniform { lower, upper } => (lower, upper),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Marginal::Uniform { lower, upper } => 0.5 * (lower + upper),
        }
    }

    pub fn std_dev(&self) -> f64 {
        match *self {
            Marginal::Uniform { lower, upper } => (upper - lower) / 12f64.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub marginal: Marginal,
}

/// Independent uncertain inputs; the joint density is the product of the
/// marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainInput {
    params: Vec<Parameter>,
}

impl UncertainInput {
    pub fn new(params: Vec<Parameter>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::invalid("at least one uncertain parameter is required"));
        }
        for p in &params {
            match p.marginal {
                Marginal::Uniform { lower, upper } => {
                    if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                        return Err(Error::invalid(format!(
                            "parameter '{}': uniform bounds must satisfy lower < upper (got {lower}, {upper})",
                            p.name
                        )));
                    }
                }
            }
        }
        Ok(Self { params })
    }

    /// Convenience constructor for independent uniforms given as
    /// `(name, lower, upper)`.
    pub fn uniform(specs: &[(&str, f64, f64)]) -> Result<Self> {
        Self::new(
            specs
                .iter()
                .map(|&(name, lower, upper)| Parameter {
                    name: name.into(),
                    marginal: Marginal::Uniform { lower, upper },
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[Parameter] {
        &self.params
    }

    fn param(&self, index: usize) -> Result<&Parameter> {
        self.params.get(index).ok_or(Error::IndexOutOfRange {
            what: "parameter",
            index,
            len: self.params.len(),
        })
    }

    /// Marginal CDF `F_i(eta)`, clamped to `[0, 1]` outside the support.
    pub fn cdf(&self, index: usize, eta: f64) -> Result<f64> {
        Ok(self.param(index)?.marginal.cdf(eta))
    }

    pub fn inverse_cdf(&self, index: usize, xi: f64) -> Result<f64> {
        let p = self.param(index)?;
        if !(0.0..=1.0).contains(&xi) {
            return Err(Error::OutOfDomain(format!(
                "unit interval (parameter '{}', xi = {xi})",
                p.name
            )));
        }
        Ok(p.marginal.inverse_cdf(xi))
    }

    /// Maps a unit point to physical values coordinate-wise.
    pub fn to_physical(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.check_len(xi.len())?;
        xi.iter()
            .enumerate()
            .map(|(i, &x)| self.inverse_cdf(i, x))
            .collect()
    }

    /// Maps physical values to unit coordinates, rejecting values outside
    /// the support of their marginal.
    pub fn to_unit(&self, eta: &[f64]) -> Result<Vec<f64>> {
        self.check_len(eta.len())?;
        eta.iter()
            .zip(&self.params)
            .map(|(&v, p)| {
                let (lo, hi) = p.marginal.support();
                if !(lo..=hi).contains(&v) {
                    return Err(Error::OutOfDomain(format!(
                        "support of parameter '{}' [{lo}, {hi}] (value {v})",
                        p.name
                    )));
                }
                Ok(p.marginal.cdf(v))
            })
            .collect()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "parameter vector",
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }
}

/// Support `(mu - sqrt(3) mu cv, mu + sqrt(3) mu cv)` of the uniform
/// distribution with mean `mu` and standard deviation `mu * cv`.
pub fn bounds_from_moments(mean: f64, cv: f64) -> Result<(f64, f64)> {
    if !(mean > 0.0 && cv > 0.0 && mean.is_finite() && cv.is_finite()) {
        return Err(Error::invalid(format!(
            "mean and coefficient of variation must be positive (got {mean}, {cv})"
        )));
    }
    let half = 3f64.sqrt() * mean * cv;
    Ok((mean - half, mean + half))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Lhs,
    Mc,
    ElementCollocation,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Lhs => "lhs",
            Scheme::Mc => "mc",
            Scheme::ElementCollocation => "element-collocation",
        }
    }
}

/// A set of points in the unit hypercube, optionally mapped to physical
/// values. Points are stored row-major (`n` rows of `m` coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    unit: Vec<f64>,
    physical: Option<Vec<f64>>,
    seed: Option<u64>,
    scheme: Scheme,
}

impl SampleSet {
    pub fn from_unit_points(dim: usize, unit: Vec<f64>, scheme: Scheme, seed: Option<u64>) -> Result<Self> {
        if dim == 0 || !unit.len().is_multiple_of(dim) {
            return Err(Error::invalid("unit point buffer is not a whole number of points"));
        }
        if let Some(bad) = unit.iter().position(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::OutOfDomain(format!(
                "unit hypercube (point {}, coordinate {})",
                bad / dim,
                bad % dim
            )));
        }
        Ok(Self {
            dim,
            unit,
            physical: None,
            seed,
            scheme,
        })
    }

    pub fn len(&self) -> usize {
        self.unit.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.unit.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn unit_point(&self, i: usize) -> &[f64] {
        &self.unit[i * self.dim..(i + 1) * self.dim]
    }

    pub fn unit_points(&self) -> impl Iterator<Item = &[f64]> {
        self.unit.chunks_exact(self.dim)
    }

    /// Physical point `i`; `None` until the set has been mapped.
    pub fn physical_point(&self, i: usize) -> Option<&[f64]> {
        self.physical
            .as_ref()
            .map(|p| &p[i * self.dim..(i + 1) * self.dim])
    }

    /// Fills the physical coordinates through the inverse marginal CDFs.
    pub fn mapped(mut self, inputs: &UncertainInput) -> Result<Self> {
        if inputs.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "sample set vs. inputs",
                expected: inputs.dim(),
                actual: self.dim,
            });
        }
        let mut physical = Vec::with_capacity(self.unit.len());
        for point in self.unit.chunks_exact(self.dim) {
            physical.extend(inputs.to_physical(point)?);
        }
        self.physical = Some(physical);
        Ok(self)
    }

    /// Concatenates sets of equal dimension; the result keeps the first
    /// set's scheme and seed.
    pub fn concat(sets: &[SampleSet]) -> Result<Self> {
        let first = sets.first().ok_or(Error::invalid("nothing to concatenate"))?;
        let mut unit = Vec::new();
        let mut physical = first.physical.as_ref().map(|_| Vec::new());
        for s in sets {
            if s.dim != first.dim {
                return Err(Error::DimensionMismatch {
                    context: "sample set concatenation",
                    expected: first.dim,
                    actual: s.dim,
                });
            }
            unit.extend_from_slice(&s.unit);
            match (&mut physical, &s.physical) {
                (Some(acc), Some(p)) => acc.extend_from_slice(p),
                _ => physical = None,
            }
        }
        Ok(Self {
            dim: first.dim,
            unit,
            physical,
            seed: first.seed,
            scheme: first.scheme,
        })
    }
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    Ok(())
}

/// Latin hypercube design: each dimension gets an independent random
/// permutation of the `n` strata and a uniform offset inside each stratum.
pub fn lhs_sample(dim: usize, n: usize, seed: u64) -> Result<SampleSet> {
    check_count(n)?;
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut unit = vec![0.0; n * dim];
    let mut strata: Vec<usize> = (0..n).collect();
    let scale = 1.0 / n as f64;
    for d in 0..dim {
        strata.shuffle(&mut rng);
        for (i, &stratum) in strata.iter().enumerate() {
            let offset: f64 = rng.random();
            unit[i * dim + d] = ((stratum as f64 + offset) * scale).min(1.0);
        }
    }
    SampleSet::from_unit_points(dim, unit, Scheme::Lhs, Some(seed))
}

/// Independent uniform draws on the unit hypercube.
pub fn mc_sample(dim: usize, n: usize, seed: u64) -> Result<SampleSet> {
    check_count(n)?;
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let unit = (0..n * dim).map(|_| rng.random::<f64>()).collect();
    SampleSet::from_unit_points(dim, unit, Scheme::Mc, Some(seed))
}

/// Tensor grid of Gauss–Legendre abscissae inside element `element`,
/// `oversample * (p_i + 1)` points per dimension, dimension 1 fastest.
pub fn element_collocation_points(space: &BSplineSpace, element: usize, oversample: usize) -> Result<SampleSet> {
    if oversample == 0 {
        return Err(Error::invalid("oversample factor must be at least 1"));
    }
    let bounds = space.element_bounds(element)?;
    let per_dim: Vec<Vec<f64>> = bounds
        .iter()
        .zip(space.degrees())
        .map(|(&(lo, hi), &p)| {
            let (nodes, _) = gauss_legendre(oversample * (p + 1));
            nodes
                .iter()
                .map(|&t| lo + 0.5 * (t + 1.0) * (hi - lo))
                .collect()
        })
        .collect();
    let unit = tensor_grid(&per_dim);
    SampleSet::from_unit_points(space.dim(), unit, Scheme::ElementCollocation, None)
}

/// Collocation points of every element, concatenated element by element.
pub fn collocation_plan(space: &BSplineSpace, oversample: usize) -> Result<SampleSet> {
    let sets = (0..space.n_elements())
        .map(|e| element_collocation_points(space, e, oversample))
        .collect::<Result<Vec<_>>>()?;
    SampleSet::concat(&sets)
}

/// Row-major tensor product of per-dimension coordinate lists with the
/// first dimension varying fastest.
pub(crate) fn tensor_grid(per_dim: &[Vec<f64>]) -> Vec<f64> {
    let dim = per_dim.len();
    let total: usize = per_dim.iter().map(Vec::len).product();
    let mut out = Vec::with_capacity(total * dim);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        for d in 0..dim {
            out.push(per_dim[d][idx[d]]);
        }
        for d in 0..dim {
            idx[d] += 1;
            if idx[d] < per_dim[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn u(lo: f64, hi: f64) -> UncertainInput {
        UncertainInput::uniform(&[("p", lo, hi)]).unwrap()
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(u(-1.0, 1.0).cdf(0, 0.0).unwrap(), 0.5);
        assert_eq!(u(454.0, 1146.0).cdf(0, 454.0).unwrap(), 0.0);
        assert_eq!(u(114.0, 287.0).cdf(0, 200.5).unwrap(), 0.5);
        assert_eq!(u(0.0, 1.0).cdf(0, 7.0).unwrap(), 1.0);
        assert!(matches!(u(0.0, 1.0).cdf(1, 0.5), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn inverse_cdf_examples() {
        assert_eq!(u(-1.0, 1.0).inverse_cdf(0, 1.0).unwrap(), 1.0);
        assert_eq!(u(0.0, 2.0).inverse_cdf(0, 0.25).unwrap(), 0.5);
        assert_eq!(u(454.0, 1146.0).inverse_cdf(0, 0.5).unwrap(), 800.0);
        assert!(u(0.0, 1.0).inverse_cdf(0, 1.5).is_err());
        assert!(u(0.0, 1.0).inverse_cdf(0, -0.1).is_err());
    }

    #[test]
    fn bounds_from_moments_examples() {
        let (lo, hi) = bounds_from_moments(800.0, 0.25).unwrap();
        assert_relative_eq!(lo, 453.589_838_486_224_5, epsilon = 1e-9);
        assert_relative_eq!(hi, 1_146.410_161_513_775_5, epsilon = 1e-9);
        assert_eq!((lo.round(), hi.round()), (454.0, 1146.0));
        let (lo, hi) = bounds_from_moments(200.0, 0.25).unwrap();
        assert_relative_eq!(lo, 113.397_459_621_556_1, epsilon = 1e-9);
        assert_relative_eq!(hi, 286.602_540_378_443_9, epsilon = 1e-9);
        assert!(bounds_from_moments(800.0, 0.0).is_err());
        assert!(bounds_from_moments(-1.0, 0.25).is_err());
        let std = u(lo, hi).params()[0].marginal.std_dev();
        assert_relative_eq!(std, 50.0, epsilon = 1e-10);
    }

    #[test]
    fn invalid_bounds_rejected() {
        assert!(UncertainInput::uniform(&[("a", 1.0, 1.0)]).is_err());
        assert!(UncertainInput::uniform(&[("a", 2.0, 1.0)]).is_err());
        assert!(UncertainInput::new(Vec::new()).is_err());
    }

    #[test]
    fn lhs_examples() {
        let s = lhs_sample(1, 1, 3).unwrap();
        assert_eq!(s.len(), 1);
        let x = s.unit_point(0)[0];
        assert!(x > 0.0 && x < 1.0);

        let s = lhs_sample(2, 4, 11).unwrap();
        for d in 0..2 {
            let mut c: Vec<f64> = s.unit_points().map(|p| p[d]).collect();
            c.sort_by(f64::total_cmp);
            for (i, v) in c.iter().enumerate() {
                assert!(*v >= i as f64 / 4.0 && *v < (i + 1) as f64 / 4.0);
            }
        }
        assert_eq!(lhs_sample(3, 50, 9).unwrap(), lhs_sample(3, 50, 9).unwrap());
        assert_ne!(lhs_sample(3, 50, 9).unwrap(), lhs_sample(3, 50, 10).unwrap());
        assert!(lhs_sample(2, 0, 1).is_err());
    }

    #[test]
    fn mc_examples() {
        assert!(mc_sample(1, 0, 1).is_err());
        let n = 100_000;
        let s = mc_sample(2, n, 42).unwrap();
        // 3 sigma/sqrt(n) with sigma = 1/sqrt(12)
        let bound = 3.0 / 12f64.sqrt() / (n as f64).sqrt();
        assert!(bound < 0.005);
        for d in 0..2 {
            let mean = s.unit_points().map(|p| p[d]).sum::<f64>() / n as f64;
            assert!((mean - 0.5).abs() < bound, "mean {mean}");
        }
        assert_eq!(mc_sample(2, 10, 5).unwrap(), mc_sample(2, 10, 5).unwrap());
    }

    #[test]
    fn collocation_examples() {
        let space = BSplineSpace::build(&[1], &[2]).unwrap();
        let s = element_collocation_points(&space, 0, 1).unwrap();
        let g = 1.0 / (2.0 * 3f64.sqrt());
        assert_eq!(s.len(), 2);
        assert_relative_eq!(s.unit_point(0)[0], 0.5 * (0.5 - g), epsilon = 1e-15);
        assert_relative_eq!(s.unit_point(1)[0], 0.5 * (0.5 + g), epsilon = 1e-15);
        assert_relative_eq!(s.unit_point(0)[0], 0.105_662_432_702_593_55, epsilon = 1e-12);

        let space2 = BSplineSpace::build(&[2, 2], &[3, 2]).unwrap();
        assert_eq!(element_collocation_points(&space2, 4, 1).unwrap().len(), 9);
        let space3 = BSplineSpace::build(&[2], &[4]).unwrap();
        assert_eq!(element_collocation_points(&space3, 1, 2).unwrap().len(), 6);
        assert!(element_collocation_points(&space3, 4, 1).is_err());
        assert!(element_collocation_points(&space3, 0, 0).is_err());
    }

    #[test]
    fn collocation_points_are_interior() {
        let space = BSplineSpace::build(&[2, 1, 3], &[3, 2, 2]).unwrap();
        for e in 0..space.n_elements() {
            let bounds = space.element_bounds(e).unwrap();
            let s = element_collocation_points(&space, e, 2).unwrap();
            assert_eq!(s.len(), 8 * 3 * 2 * 4);
            for p in s.unit_points() {
                for (x, (lo, hi)) in p.iter().zip(&bounds) {
                    assert!(x > lo && x < hi);
                }
                assert_eq!(space.locate_element(p).unwrap(), e);
            }
        }
    }

    #[test]
    fn mapped_sets_follow_inverse_cdf() {
        let inputs = UncertainInput::uniform(&[("a", 2.0, 4.0), ("b", -1.0, 1.0)]).unwrap();
        let s = lhs_sample(2, 7, 1).unwrap().mapped(&inputs).unwrap();
        for i in 0..s.len() {
            let xi = s.unit_point(i);
            let eta = s.physical_point(i).unwrap();
            assert_eq!(eta[0], inputs.inverse_cdf(0, xi[0]).unwrap());
            assert_eq!(eta[1], inputs.inverse_cdf(1, xi[1]).unwrap());
        }
        assert!(inputs.to_unit(&[5.0, 0.0]).is_err());
        assert_eq!(inputs.to_unit(&[3.0, 0.0]).unwrap(), vec![0.5, 0.5]);
    }

    proptest::proptest! {
        #[test]
        fn cdf_round_trip(lo in -1e3f64..1e3, width in 1e-3f64..1e3, t in 0.0f64..=1.0) {
            let inputs = u(lo, lo + width);
            let eta = lo + t * width;
            let back = inputs.inverse_cdf(0, inputs.cdf(0, eta).unwrap()).unwrap();
            proptest::prop_assert!((back - eta).abs() <= 1e-12 * eta.abs().max(width));
            let xi = t;
            let fwd = inputs.cdf(0, inputs.inverse_cdf(0, xi).unwrap()).unwrap();
            proptest::prop_assert!((fwd - xi).abs() <= 1e-14 * (1.0 + lo.abs() / width));
        }

        #[test]
        fn lhs_stratification(dim in 1usize..4, n in 1usize..60, seed in 0u64..1000) {
            let s = lhs_sample(dim, n, seed).unwrap();
            for d in 0..dim {
                let mut seen = vec![0usize; n];
                for p in s.unit_points() {
                    let k = ((p[d] * n as f64).floor() as usize).min(n - 1);
                    seen[k] += 1;
                }
                proptest::prop_assert!(seen.iter().all(|&c| c == 1));
            }
        }
    }
}
