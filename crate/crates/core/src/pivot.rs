//! The direct pivotal argument for location measurements.
//!
//! With `x_i = θ + e_i` and known noise densities `f1`, `f2`, the difference
//! `D = X2 - X1 = E2 - E1` has a density that never references θ:
//!
//! ```text
//! g(d) = ∫ f1(ξ) f2(d + ξ) dξ
//! ```
//!
//! The predictive density for `x2` after observing `x1 = s` is that same
//! density translated to `s`. No parameter density enters at any point — the
//! API has no θ argument to pass.

use crate::convolve::cross_correlate;
use crate::error::{Error, Result};
use crate::grid::GridDensity;
use crate::noise::{GridPolicy, NoiseSpec};
use crate::scalar::Scalar;

/// The pair of noise declarations plus the grid policy used to realize them.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel<T: Scalar> {
    pub noise1: NoiseSpec<T>,
    pub noise2: NoiseSpec<T>,
    pub grid: GridPolicy<T>,
}

/// An equal-tailed interval at level `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T: Scalar> {
    pub gamma: T,
    pub lo: T,
    pub hi: T,
}

/// Predictive density for a second outcome given the first, with the pivot
/// density it was built from and the requested central intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveResult<T: Scalar> {
    pub observed_x1: T,
    pub predictive: GridDensity<T>,
    pub pivot: GridDensity<T>,
    pub intervals: Vec<Interval<T>>,
}

impl<T: Scalar> MeasurementModel<T> {
    pub fn new(noise1: NoiseSpec<T>, noise2: NoiseSpec<T>, grid: GridPolicy<T>) -> Result<Self> {
        let model = MeasurementModel { noise1, noise2, grid };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.noise1.validate()?;
        self.noise2.validate()
    }

    /// Realize both noise densities under the model's grid policy.
    pub fn realize_noises(&self) -> Result<(GridDensity<T>, GridDensity<T>)> {
        Ok((
            self.noise1.realize(self.grid)?,
            self.noise2.realize(self.grid)?,
        ))
    }

    /// Density of `D = X2 - X1`, a pure function of the two noise densities.
    pub fn pivot_density(&self) -> Result<GridDensity<T>> {
        let (f1, f2) = self.realize_noises()?;
        cross_correlate(&f1, &f2)
    }

    /// Predictive density for `x2` given `x1 = s`: the pivot translated by
    /// `s`, plus one central interval per requested level.
    pub fn predictive_density(&self, s: T, gammas: &[T]) -> Result<PredictiveResult<T>> {
        if !s.is_finite() {
            return Err(Error::invalid("x1", "observed outcome must be finite"));
        }
        let pivot = self.pivot_density()?;
        let predictive = pivot.shift(s);
        let intervals = gammas
            .iter()
            .map(|&gamma| {
                let (lo, hi) = central_interval(&predictive, gamma)?;
                Ok(Interval { gamma, lo, hi })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PredictiveResult {
            observed_x1: s,
            predictive,
            pivot,
            intervals,
        })
    }
}

/// Equal-tailed central interval: quantiles at `(1±gamma)/2`.
pub fn central_interval<T: Scalar>(d: &GridDensity<T>, gamma: T) -> Result<(T, T)> {
    if !(gamma > T::zero() && gamma < T::one()) || !gamma.is_finite() {
        return Err(Error::Domain(format!(
            "interval level must lie in (0,1), got {:?}",
            gamma.to_f64()
        )));
    }
    let half = T::from_f64(0.5).unwrap();
    let lo = d.quantile((T::one() - gamma) * half)?;
    let hi = d.quantile((T::one() + gamma) * half)?;
    Ok((lo, hi))
}
