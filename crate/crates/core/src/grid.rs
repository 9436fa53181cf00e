//! Probability densities tabulated on uniform grids.
//!
//! A [`GridDensity`] is the numeric currency of this crate: one nonnegative
//! value per node, trapezoid-normalized to unit mass. Every transform returns
//! a new value; nothing mutates in place.

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use rand::Rng;

/// Minimum node count. Odd so every grid has a center node.
pub const MIN_GRID_POINTS: usize = 9;

/// Normalized densities integrate to 1 within this bound.
pub const MASS_TOL: f64 = 1e-8;

/// Product mass at or below this is treated as no overlap.
const PRODUCT_MASS_FLOOR: f64 = 1e-300;

/// A uniform one-dimensional grid: `n_points` nodes from `lo` to `hi`
/// inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T: Scalar> {
    lo: T,
    hi: T,
    n_points: usize,
}

impl<T: Scalar> GridSpec<T> {
    /// Build a grid, enforcing `lo < hi`, an odd node count of at least
    /// [`MIN_GRID_POINTS`], and a finite positive step.
    pub fn new(lo: T, hi: T, n_points: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid("lo/hi", "grid edges must be finite"));
        }
        if !(lo < hi) {
            return Err(Error::invalid(
                "lo",
                format!(
                    "grid requires lo < hi, got lo={:?} hi={:?}",
                    lo.to_f64(),
                    hi.to_f64()
                ),
            ));
        }
        if n_points < MIN_GRID_POINTS || n_points % 2 == 0 {
            return Err(Error::invalid(
                "n_points",
                format!("need an odd node count >= {MIN_GRID_POINTS}, got {n_points}"),
            ));
        }
        let step = (hi - lo) / T::from_usize(n_points - 1).unwrap();
        if !(step > T::zero()) || !step.is_finite() {
            return Err(Error::invalid("n_points", "grid step must be finite and positive"));
        }
        Ok(GridSpec { lo, hi, n_points })
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn step(&self) -> T {
        (self.hi - self.lo) / T::from_usize(self.n_points - 1).unwrap()
    }

    /// Position of node `i`.
    pub fn x_at(&self, i: usize) -> T {
        debug_assert!(i < self.n_points);
        self.lo + self.step() * T::from_usize(i).unwrap()
    }

    /// Translate both edges by `c`.
    pub(crate) fn shifted(&self, c: T) -> GridSpec<T> {
        GridSpec {
            lo: self.lo + c,
            hi: self.hi + c,
            n_points: self.n_points,
        }
    }

    /// Mirror about zero: `[-hi, -lo]`.
    pub(crate) fn reflected(&self) -> GridSpec<T> {
        GridSpec {
            lo: -self.hi,
            hi: -self.lo,
            n_points: self.n_points,
        }
    }
}

/// Intersection window of two grids at the finer step, padded up to the
/// minimum odd node count. Errors when the supports share no interval.
pub(crate) fn overlap_grid<T: Scalar>(a: &GridSpec<T>, b: &GridSpec<T>) -> Result<GridSpec<T>> {
    let lo = a.lo.max(b.lo);
    let hi = a.hi.min(b.hi);
    if !(lo < hi) {
        return Err(Error::NoOverlap(format!(
            "[{:?}, {:?}] and [{:?}, {:?}] share no interval",
            a.lo.to_f64(),
            a.hi.to_f64(),
            b.lo.to_f64(),
            b.hi.to_f64()
        )));
    }
    let step = a.step().min(b.step());
    let span = (hi - lo) / step;
    // Small epsilon keeps near-integer spans from rounding up a node.
    let n_raw = (span - lit::<T>(1e-9)).ceil().to_usize().unwrap_or(0) + 1;
    let mut n = n_raw.max(MIN_GRID_POINTS);
    if n % 2 == 0 {
        n += 1;
    }
    GridSpec::new(lo, hi, n)
}

/// Neumaier-compensated sum; keeps grid quadrature near machine precision.
pub(crate) fn compensated_sum<T: Scalar, I: IntoIterator<Item = T>>(xs: I) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp = comp + ((sum - t) + x);
        } else {
            comp = comp + ((x - t) + sum);
        }
        sum = t;
    }
    sum + comp
}

/// Trapezoid rule on a uniform grid.
pub(crate) fn trapezoid<T: Scalar>(values: &[T], step: T) -> T {
    let total = compensated_sum(values.iter().copied());
    let ends = (values[0] + values[values.len() - 1]) * lit::<T>(0.5);
    step * (total - ends)
}

/// Mean, variance, and total mass of a grid density (trapezoid quadrature).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats<T: Scalar> {
    pub mean: T,
    pub variance: T,
    pub total_mass: T,
}

/// A probability density tabulated on a uniform grid and normalized to unit
/// trapezoid mass.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity<T: Scalar> {
    grid: GridSpec<T>,
    values: Vec<T>,
}

impl<T: Scalar> GridDensity<T> {
    /// Validate raw values against `grid` and normalize them to unit mass.
    ///
    /// Rejects negative or non-finite entries, and delta-like inputs with
    /// fewer than two nonzero nodes (a point mass carries no usable density).
    pub fn new(grid: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::invalid(
                "values",
                format!(
                    "expected {} values for the grid, got {}",
                    grid.n_points(),
                    values.len()
                ),
            ));
        }
        let mut nonzero = 0usize;
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::invalid("values", format!("non-finite value at node {i}")));
            }
            if *v < T::zero() {
                return Err(Error::invalid("values", format!("negative value at node {i}")));
            }
            if *v > T::zero() {
                nonzero += 1;
            }
        }
        if nonzero == 0 {
            return Err(Error::DegenerateDensity("all values are zero".into()));
        }
        if nonzero < 2 {
            return Err(Error::DegenerateDensity(
                "all mass sits in a single node".into(),
            ));
        }
        let mass = trapezoid(&values, grid.step());
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(Error::DegenerateDensity(format!(
                "total mass {:?} is not positive and finite",
                mass.to_f64()
            )));
        }
        let inv = T::one() / mass;
        let values = values.into_iter().map(|v| v * inv).collect();
        Ok(GridDensity { grid, values })
    }

    /// Internal constructor for transforms that provably preserve the
    /// invariants (translation, reflection).
    pub(crate) fn from_normalized_parts(grid: GridSpec<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        GridDensity { grid, values }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn x_at(&self, i: usize) -> T {
        self.grid.x_at(i)
    }

    /// Trapezoid mass of the stored values (1 within [`MASS_TOL`] for any
    /// constructed density).
    pub fn mass(&self) -> T {
        trapezoid(&self.values, self.grid.step())
    }

    /// Rescale to unit mass. Idempotent on already-normalized densities.
    pub fn normalize(&self) -> Result<GridDensity<T>> {
        GridDensity::new(self.grid, self.values.clone())
    }

    /// Mean, variance, and total mass by trapezoid quadrature.
    pub fn summarize(&self) -> SummaryStats<T> {
        let step = self.grid.step();
        let half = lit::<T>(0.5);
        let n = self.values.len();
        let weighted = |f: &dyn Fn(T, T) -> T| -> T {
            let terms = (0..n).map(|i| {
                let w = if i == 0 || i == n - 1 { half } else { T::one() };
                f(self.grid.x_at(i), self.values[i]) * w
            });
            compensated_sum(terms) * step
        };
        let total_mass = weighted(&|_x, v| v);
        let mean = weighted(&|x, v| x * v);
        let second = weighted(&|x, v| x * x * v);
        let variance = (second - mean * mean).max(T::zero());
        SummaryStats {
            mean,
            variance,
            total_mass,
        }
    }

    /// Cumulative trapezoid values at every node: starts at 0, ends at the
    /// total mass.
    pub fn cdf(&self) -> Vec<T> {
        let step = self.grid.step();
        let half = lit::<T>(0.5);
        let mut out = Vec::with_capacity(self.values.len());
        let mut acc = T::zero();
        let mut comp = T::zero();
        out.push(acc);
        for w in self.values.windows(2) {
            let inc = (w[0] + w[1]) * half * step;
            // Kahan update keeps the long cumulative sum tight.
            let y = inc - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            out.push(acc);
        }
        out
    }

    /// Cumulative mass up to `x`, linear between nodes, clamped to [0, mass].
    pub fn cdf_at(&self, x: T) -> T {
        let cdf = self.cdf();
        cdf_interp(&self.grid, &cdf, x)
    }

    /// Value of `x` with cumulative mass `p`, for `p` strictly inside (0,1).
    pub fn quantile(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) || !p.is_finite() {
            return Err(Error::Domain(format!(
                "quantile level must lie in (0,1), got {:?}",
                p.to_f64()
            )));
        }
        let cdf = self.cdf();
        Ok(quantile_from_cdf(&self.grid, &cdf, p))
    }

    /// Inverse-CDF draws. Same RNG state, same output; `count == 0` yields an
    /// empty vector.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<T> {
        let cdf = self.cdf();
        (0..count)
            .map(|_| {
                let u: f64 = rng.gen();
                quantile_from_cdf(&self.grid, &cdf, lit::<T>(u))
            })
            .collect()
    }

    /// Density of `X + c` when `self` is the density of `X`.
    pub fn shift(&self, c: T) -> GridDensity<T> {
        GridDensity::from_normalized_parts(self.grid.shifted(c), self.values.clone())
    }

    /// Density of `-X`: mirrored grid, reversed values.
    pub fn reflect(&self) -> GridDensity<T> {
        let mut values = self.values.clone();
        values.reverse();
        GridDensity::from_normalized_parts(self.grid.reflected(), values)
    }

    /// Density value at an arbitrary position: cubic (4-point Lagrange)
    /// between nodes, linear in the first/last interval, zero outside the
    /// support, clamped to be nonnegative.
    pub fn pdf_at(&self, x: T) -> T {
        interp_values(&self.grid, &self.values, x)
    }

    /// Tabulate this density on another grid (see [`GridDensity::pdf_at`]).
    /// The result is raw values, not renormalized.
    pub(crate) fn sampled_values_on(&self, target: &GridSpec<T>) -> Vec<T> {
        if target == &self.grid {
            return self.values.clone();
        }
        (0..target.n_points())
            .map(|i| interp_values(&self.grid, &self.values, target.x_at(i)))
            .collect()
    }
}

/// Normalized pointwise product of two densities on their overlap window,
/// resampled to the finer step. The Bayesian prior-times-likelihood step.
pub fn pointwise_product<T: Scalar>(
    a: &GridDensity<T>,
    b: &GridDensity<T>,
) -> Result<GridDensity<T>> {
    let grid = overlap_grid(a.grid(), b.grid())?;
    let va = a.sampled_values_on(&grid);
    let vb = b.sampled_values_on(&grid);
    product_density(grid, &va, &vb)
}

/// Product of raw value tables on a shared grid, then normalization.
pub(crate) fn product_density<T: Scalar>(
    grid: GridSpec<T>,
    va: &[T],
    vb: &[T],
) -> Result<GridDensity<T>> {
    let prod: Vec<T> = va.iter().zip(vb).map(|(&x, &y)| x * y).collect();
    let mass = trapezoid(&prod, grid.step());
    if !(mass > lit::<T>(PRODUCT_MASS_FLOOR)) {
        return Err(Error::NoOverlap(format!(
            "pointwise product carries no mass (integral {:?})",
            mass.to_f64()
        )));
    }
    GridDensity::new(grid, prod)
}

/// Linear interpolation of a cumulative table at `x`.
pub(crate) fn cdf_interp<T: Scalar>(grid: &GridSpec<T>, cdf: &[T], x: T) -> T {
    let n = grid.n_points();
    if x <= grid.lo() {
        return T::zero();
    }
    if x >= grid.hi() {
        return cdf[n - 1];
    }
    let u = (x - grid.lo()) / grid.step();
    let i = u.floor().to_usize().unwrap_or(0).min(n - 2);
    let frac = u - T::from_usize(i).unwrap();
    cdf[i] + (cdf[i + 1] - cdf[i]) * frac
}

/// Invert a cumulative table at level `p` (relative to the table's final
/// mass), with linear interpolation inside the bracketing interval.
pub(crate) fn quantile_from_cdf<T: Scalar>(grid: &GridSpec<T>, cdf: &[T], p: T) -> T {
    let n = cdf.len();
    let target = p * cdf[n - 1];
    if target <= T::zero() {
        return grid.lo();
    }
    if target >= cdf[n - 1] {
        return grid.hi();
    }
    // Last index with cdf[i] <= target.
    let i = cdf.partition_point(|&c| c <= target).saturating_sub(1).min(n - 2);
    let seg = cdf[i + 1] - cdf[i];
    let frac = if seg > T::zero() {
        (target - cdf[i]) / seg
    } else {
        T::zero()
    };
    grid.lo() + grid.step() * (T::from_usize(i).unwrap() + frac)
}

/// Tabulate an arbitrary value table (not necessarily normalized) on
/// another grid, interpolating as [`GridDensity::pdf_at`] does.
pub(crate) fn sample_curve_on<T: Scalar>(
    grid: &GridSpec<T>,
    values: &[T],
    target: &GridSpec<T>,
) -> Vec<T> {
    if target == grid {
        return values.to_vec();
    }
    (0..target.n_points())
        .map(|i| interp_values(grid, values, target.x_at(i)))
        .collect()
}

/// Cubic Lagrange interpolation of a value table, linear at the edges,
/// zero outside, clamped nonnegative.
pub(crate) fn interp_values<T: Scalar>(grid: &GridSpec<T>, values: &[T], x: T) -> T {
    let n = grid.n_points();
    let step = grid.step();
    let u = (x - grid.lo()) / step;
    let edge_tol = lit::<T>(1e-9);
    if u < -edge_tol || u > T::from_usize(n - 1).unwrap() + edge_tol {
        return T::zero();
    }
    let u = u.max(T::zero()).min(T::from_usize(n - 1).unwrap());
    let i = u.floor().to_usize().unwrap().min(n - 2);
    let t = u - T::from_usize(i).unwrap();
    let v = if i >= 1 && i + 2 < n {
        let (p0, p1, p2, p3) = (values[i - 1], values[i], values[i + 1], values[i + 2]);
        let one = T::one();
        let two = lit::<T>(2.0);
        let sixth = lit::<T>(1.0 / 6.0);
        let half = lit::<T>(0.5);
        let w0 = -t * (t - one) * (t - two) * sixth;
        let w1 = (t + one) * (t - one) * (t - two) * half;
        let w2 = -(t + one) * t * (t - two) * half;
        let w3 = (t + one) * t * (t - one) * sixth;
        p0 * w0 + p1 * w1 + p2 * w2 + p3 * w3
    } else {
        values[i] + (values[i + 1] - values[i]) * t
    };
    v.max(T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> GridSpec<f64> {
        GridSpec::new(lo, hi, n).unwrap()
    }

    #[test]
    fn grid_spec_rejects_bad_inputs() {
        assert!(matches!(
            GridSpec::new(1.0, 1.0, 9),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(GridSpec::new(0.0, 1.0, 8).is_err());
        assert!(GridSpec::new(0.0, 1.0, 7).is_err());
        assert!(GridSpec::new(f64::NAN, 1.0, 9).is_err());
    }

    #[test]
    fn normalization_halves_doubled_values() {
        let g = grid(0.0, 1.0, 9);
        let d = GridDensity::new(g, vec![2.0; 9]).unwrap();
        for v in d.values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!((d.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_is_idempotent() {
        let g = grid(-1.0, 1.0, 33);
        let vals: Vec<f64> = (0..33).map(|i| 1.0 + (i as f64 / 32.0)).collect();
        let d = GridDensity::new(g, vals).unwrap();
        let d2 = d.normalize().unwrap();
        for (a, b) in d.values().iter().zip(d2.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let g = grid(0.0, 1.0, 9);
        assert!(matches!(
            GridDensity::new(g, vec![0.0; 9]),
            Err(Error::DegenerateDensity(_))
        ));
        let mut one_spike = vec![0.0; 9];
        one_spike[4] = 5.0;
        assert!(matches!(
            GridDensity::new(g, one_spike),
            Err(Error::DegenerateDensity(_))
        ));
        let mut neg = vec![1.0; 9];
        neg[3] = -0.5;
        assert!(matches!(
            GridDensity::new(g, neg),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn cdf_ends_at_one_and_center_is_half_for_symmetric() {
        let g = grid(-1.0, 1.0, 65);
        let vals: Vec<f64> = (0..65)
            .map(|i| {
                let x = -1.0 + 2.0 * (i as f64) / 64.0;
                (1.0 - x * x).max(0.0)
            })
            .collect();
        let d = GridDensity::new(g, vals).unwrap();
        let cdf = d.cdf();
        assert_eq!(cdf[0], 0.0);
        assert!((cdf[64] - 1.0).abs() < 1e-12);
        assert!((cdf[32] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn quantile_domain_checks() {
        let g = grid(0.0, 1.0, 9);
        let d = GridDensity::new(g, vec![1.0; 9]).unwrap();
        assert!(matches!(d.quantile(0.0), Err(Error::Domain(_))));
        assert!(matches!(d.quantile(1.0), Err(Error::Domain(_))));
        assert!(matches!(d.quantile(f64::NAN), Err(Error::Domain(_))));
        assert!((d.quantile(0.25).unwrap() - 0.25).abs() < 1e-6);
    }

    #[test]
    fn shift_and_reflect_roundtrip() {
        let g = grid(0.0, 2.0, 33);
        let vals: Vec<f64> = (0..33).map(|i| 0.1 + (i % 5) as f64).collect();
        let d = GridDensity::new(g, vals).unwrap();
        let back = d.shift(3.5).shift(-3.5);
        assert_eq!(back.grid().n_points(), d.grid().n_points());
        assert!((back.grid().lo() - d.grid().lo()).abs() < 1e-12);
        for (a, b) in back.values().iter().zip(d.values()) {
            assert_eq!(a, b);
        }
        let twice = d.reflect().reflect();
        for (a, b) in twice.values().iter().zip(d.values()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn product_of_disjoint_supports_errors() {
        let a = GridDensity::new(grid(0.0, 1.0, 9), vec![1.0; 9]).unwrap();
        let b = GridDensity::new(grid(2.0, 3.0, 9), vec![1.0; 9]).unwrap();
        assert!(matches!(pointwise_product(&a, &b), Err(Error::NoOverlap(_))));
    }

    #[test]
    fn flat_factor_cancels_in_product() {
        let g = grid(-1.0, 1.0, 129);
        let vals: Vec<f64> = (0..129)
            .map(|i| {
                let x = -1.0 + 2.0 * (i as f64) / 128.0;
                (-x * x * 4.0).exp()
            })
            .collect();
        let d = GridDensity::new(g, vals).unwrap();
        let flat = GridDensity::new(grid(-2.0, 2.0, 257), vec![0.25; 257]).unwrap();
        let p = pointwise_product(&d, &flat).unwrap();
        let mut sup: f64 = 0.0;
        for i in 0..p.grid().n_points() {
            let x = p.x_at(i);
            sup = sup.max((p.values()[i] - d.pdf_at(x)).abs());
        }
        assert!(sup < 1e-8, "sup diff {sup}");
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        use rand::SeedableRng;
        let g = grid(0.0, 1.0, 65);
        let d = GridDensity::new(g, vec![1.0; 65]).unwrap();
        let a = d.sample(&mut rand_chacha::ChaCha8Rng::seed_from_u64(7), 100);
        let b = d.sample(&mut rand_chacha::ChaCha8Rng::seed_from_u64(7), 100);
        assert_eq!(a, b);
        assert!(d
            .sample(&mut rand_chacha::ChaCha8Rng::seed_from_u64(7), 0)
            .is_empty());
    }
}
