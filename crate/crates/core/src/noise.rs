//! Declarative noise densities and their realization on grids.
//!
//! A [`NoiseSpec`] describes one additive-noise density `f(e)` — an analytic
//! family or a tabulated curve — without committing to a grid. [`realize`]
//! turns it into a [`GridDensity`], either on an automatic grid wide enough
//! that truncation is negligible or on an explicit caller grid.

use crate::error::{Error, Result};
use crate::grid::{GridDensity, GridSpec, MIN_GRID_POINTS};
use crate::scalar::{lit, Scalar};

/// Default node count for automatic grids: 2^12 + 1, odd and FFT-friendly
/// after padding.
pub const DEFAULT_GRID_POINTS: usize = 4097;

/// Normal components stay negligible beyond this many standard deviations.
const NORMAL_HALF_WIDTH_SDS: f64 = 10.0;

/// Laplace tails decay like exp(-|e|/scale); 25 scales brings the edge value
/// under 1e-10 of the peak, which 10 standard deviations would not.
const LAPLACE_HALF_WIDTH_SCALES: f64 = 25.0;

/// Edge values of a realized analytic density must not exceed this fraction
/// of the peak; catches grids that truncate real mass.
const EDGE_REL_TOL: f64 = 1e-10;

/// Relative tolerance for the uniform spacing of tabulated abscissae.
const TABULATED_SPACING_REL_TOL: f64 = 1e-9;

/// One normal mixture component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureComponent<T: Scalar> {
    pub weight: T,
    pub mean: T,
    pub sd: T,
}

/// A declared noise density.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec<T: Scalar> {
    Normal { mean: T, sd: T },
    Laplace { loc: T, scale: T },
    Uniform { a: T, b: T },
    NormalMixture { components: Vec<MixtureComponent<T>> },
    Tabulated { x: Vec<T>, pdf: Vec<T> },
}

/// Prior densities share the noise families and constraints.
pub type PriorSpec<T> = NoiseSpec<T>;

/// Grid selection for [`realize`]: derive from the family, or use the given
/// grid as-is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridPolicy<T: Scalar> {
    Auto,
    Explicit(GridSpec<T>),
}

impl<T: Scalar> NoiseSpec<T> {
    /// Check the family-specific parameter constraints.
    pub fn validate(&self) -> Result<()> {
        fn finite<T: Scalar>(field: &str, v: T) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(field, "must be finite"))
            }
        }
        match self {
            NoiseSpec::Normal { mean, sd } => {
                finite("mean", *mean)?;
                finite("sd", *sd)?;
                if !(*sd > T::zero()) {
                    return Err(Error::invalid("sd", "standard deviation must be positive"));
                }
            }
            NoiseSpec::Laplace { loc, scale } => {
                finite("loc", *loc)?;
                finite("scale", *scale)?;
                if !(*scale > T::zero()) {
                    return Err(Error::invalid("scale", "scale must be positive"));
                }
            }
            NoiseSpec::Uniform { a, b } => {
                finite("a", *a)?;
                finite("b", *b)?;
                if !(a < b) {
                    return Err(Error::invalid("a", "uniform requires a < b"));
                }
            }
            NoiseSpec::NormalMixture { components } => {
                if components.is_empty() {
                    return Err(Error::invalid("components", "mixture needs at least one component"));
                }
                let mut total = T::zero();
                for (i, c) in components.iter().enumerate() {
                    finite(&format!("components[{i}].weight"), c.weight)?;
                    finite(&format!("components[{i}].mean"), c.mean)?;
                    finite(&format!("components[{i}].sd"), c.sd)?;
                    if !(c.weight > T::zero()) {
                        return Err(Error::invalid(
                            format!("components[{i}].weight"),
                            "weight must be positive",
                        ));
                    }
                    if !(c.sd > T::zero()) {
                        return Err(Error::invalid(
                            format!("components[{i}].sd"),
                            "standard deviation must be positive",
                        ));
                    }
                    total = total + c.weight;
                }
                if (total - T::one()).abs() > lit::<T>(1e-9) {
                    return Err(Error::invalid(
                        "components",
                        format!("weights must sum to 1, got {:?}", total.to_f64()),
                    ));
                }
            }
            NoiseSpec::Tabulated { x, pdf } => {
                if x.len() != pdf.len() {
                    return Err(Error::invalid(
                        "pdf",
                        format!("x has {} entries but pdf has {}", x.len(), pdf.len()),
                    ));
                }
                if x.len() < MIN_GRID_POINTS || x.len() % 2 == 0 {
                    return Err(Error::invalid(
                        "x",
                        format!("need an odd number of nodes >= {MIN_GRID_POINTS}, got {}", x.len()),
                    ));
                }
                for (i, v) in x.iter().enumerate() {
                    finite(&format!("x[{i}]"), *v)?;
                }
                let mut positive = 0usize;
                for (i, v) in pdf.iter().enumerate() {
                    finite(&format!("pdf[{i}]"), *v)?;
                    if *v < T::zero() {
                        return Err(Error::invalid(format!("pdf[{i}]"), "density values must be nonnegative"));
                    }
                    if *v > T::zero() {
                        positive += 1;
                    }
                }
                if positive < 2 {
                    return Err(Error::DegenerateDensity(
                        "tabulated pdf must carry mass on at least two nodes".into(),
                    ));
                }
                let n = x.len();
                let step = (x[n - 1] - x[0]) / T::from_usize(n - 1).unwrap();
                if !(step > T::zero()) {
                    return Err(Error::invalid("x", "abscissae must be strictly ascending"));
                }
                let tol = step * lit::<T>(TABULATED_SPACING_REL_TOL);
                for i in 1..n {
                    let d = x[i] - x[i - 1];
                    if (d - step).abs() > tol {
                        return Err(Error::invalid(
                            "x",
                            format!("spacing is not uniform at index {i}"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// The grid an automatic policy derives for this family.
    pub fn auto_grid(&self) -> Result<GridSpec<T>> {
        self.validate()?;
        let n = DEFAULT_GRID_POINTS;
        match self {
            NoiseSpec::Normal { mean, sd } => {
                let w = *sd * lit::<T>(NORMAL_HALF_WIDTH_SDS);
                GridSpec::new(*mean - w, *mean + w, n)
            }
            NoiseSpec::Laplace { loc, scale } => {
                let w = *scale * lit::<T>(LAPLACE_HALF_WIDTH_SCALES);
                GridSpec::new(*loc - w, *loc + w, n)
            }
            NoiseSpec::Uniform { a, b } => {
                // Exact support plus one step of zero padding on each side:
                // with n total nodes, a and b land exactly on nodes 1 and n-2.
                let h = (*b - *a) / T::from_usize(n - 3).unwrap();
                GridSpec::new(*a - h, *b + h, n)
            }
            NoiseSpec::NormalMixture { components } => {
                let mut lo = T::infinity();
                let mut hi = T::neg_infinity();
                for c in components {
                    let w = c.sd * lit::<T>(NORMAL_HALF_WIDTH_SDS);
                    lo = lo.min(c.mean - w);
                    hi = hi.max(c.mean + w);
                }
                GridSpec::new(lo, hi, n)
            }
            NoiseSpec::Tabulated { x, .. } => GridSpec::new(x[0], x[x.len() - 1], x.len()),
        }
    }

    /// Closed-form density value, for the analytic families. `None` for
    /// tabulated curves. Uniform jumps take the midpoint value at the edges.
    pub fn pdf(&self, e: T) -> Option<T> {
        match self {
            NoiseSpec::Normal { mean, sd } => Some(normal_pdf(e, *mean, *sd)),
            NoiseSpec::Laplace { loc, scale } => {
                let z = (e - *loc).abs() / *scale;
                Some((-z).exp() / (lit::<T>(2.0) * *scale))
            }
            NoiseSpec::Uniform { a, b } => {
                let c = T::one() / (*b - *a);
                let tol = (*b - *a) * lit::<T>(1e-12);
                Some(if (e - *a).abs() <= tol || (e - *b).abs() <= tol {
                    c * lit::<T>(0.5)
                } else if e > *a && e < *b {
                    c
                } else {
                    T::zero()
                })
            }
            NoiseSpec::NormalMixture { components } => Some(
                components
                    .iter()
                    .map(|c| c.weight * normal_pdf(e, c.mean, c.sd))
                    .fold(T::zero(), |acc, v| acc + v),
            ),
            NoiseSpec::Tabulated { .. } => None,
        }
    }

    /// Tabulate this spec as a normalized density. See [`realize`].
    pub fn realize(&self, policy: GridPolicy<T>) -> Result<GridDensity<T>> {
        realize(self, policy)
    }
}

fn normal_pdf<T: Scalar>(x: T, mean: T, sd: T) -> T {
    let sqrt_two_pi = lit::<T>(2.0 * std::f64::consts::PI).sqrt();
    let z = (x - mean) / sd;
    (-(z * z) * lit::<T>(0.5)).exp() / (sd * sqrt_two_pi)
}

/// Turn a noise spec into a normalized [`GridDensity`].
///
/// Analytic families are evaluated pointwise and normalized; tabulated curves
/// are taken at their own grid and renormalized. For analytic families the
/// realized edge values must stay below 1e-10 of the peak, so an explicit
/// grid that truncates real mass is rejected rather than silently clipped.
pub fn realize<T: Scalar>(spec: &NoiseSpec<T>, policy: GridPolicy<T>) -> Result<GridDensity<T>> {
    spec.validate()?;
    let auto = matches!(policy, GridPolicy::Auto);
    let grid = match policy {
        GridPolicy::Auto => spec.auto_grid()?,
        GridPolicy::Explicit(g) => g,
    };

    let density = match spec {
        NoiseSpec::Tabulated { x, pdf } => {
            let own = GridSpec::new(x[0], x[x.len() - 1], x.len())?;
            let d = GridDensity::new(own, pdf.clone())?;
            if auto || grid == own {
                d
            } else {
                GridDensity::new(grid, d.sampled_values_on(&grid))?
            }
        }
        NoiseSpec::Uniform { a, b } if auto => {
            // By construction nodes 1 and n-2 sit exactly on the jumps; give
            // them the midpoint value so the trapezoid mass is exact and the
            // interior keeps the closed-form height.
            let n = grid.n_points();
            let c = T::one() / (*b - *a);
            let half = c * lit::<T>(0.5);
            let mut values = vec![c; n];
            values[0] = T::zero();
            values[n - 1] = T::zero();
            values[1] = half;
            values[n - 2] = half;
            GridDensity::new(grid, values)?
        }
        _ => {
            let values: Vec<T> = (0..grid.n_points())
                .map(|i| spec.pdf(grid.x_at(i)).expect("analytic family"))
                .collect();
            GridDensity::new(grid, values)?
        }
    };

    if !matches!(spec, NoiseSpec::Tabulated { .. }) {
        let peak = density
            .values()
            .iter()
            .copied()
            .fold(T::zero(), |a, v| a.max(v));
        let worst_edge = density.values()[0].max(density.values()[density.values().len() - 1]);
        if worst_edge > peak * lit::<T>(EDGE_REL_TOL) {
            return Err(Error::invalid(
                "grid",
                "grid truncates the density: edge values exceed 1e-10 of the peak",
            ));
        }
    }
    Ok(density)
}
