//! Two Bayesian routes to the post-data error density, and the posterior
//! predictive that a proper prior induces.
//!
//! Once a prior π(θ) is admitted, the error `e = s - θ` can be updated two
//! ways after observing `x1 = s`:
//!
//! * route A — update θ with likelihood `f1(s - t)`, then change variables
//!   to `e = s - t`;
//! * route B — treat `f1` itself as the prior over the error and `π(s - e)`
//!   as its likelihood.
//!
//! Both give a density proportional to `f1(e) π(s - e)`, so the two numeric
//! paths must agree: [`check_consistency`] measures how well they do. As the
//! prior widens, the posterior predictive from either route converges to the
//! prior-free predictive density of the pivotal argument.

use crate::convolve::convolve;
use crate::error::{Error, Result};
use crate::grid::{
    overlap_grid, product_density, sample_curve_on, trapezoid, GridDensity, GridSpec,
};
use crate::pivot::MeasurementModel;
use crate::scalar::{lit, Scalar};

/// An unnormalized likelihood tabulated on a grid. Likelihoods are defined
/// only up to a factor, so this deliberately is not a [`GridDensity`].
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodCurve<T: Scalar> {
    grid: GridSpec<T>,
    values: Vec<T>,
}

impl<T: Scalar> LikelihoodCurve<T> {
    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Likelihood value at an arbitrary point.
    pub fn at(&self, t: T) -> T {
        crate::grid::interp_values(&self.grid, &self.values, t)
    }
}

/// Sup-norm and L1 gap between the two posterior routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyReport<T: Scalar> {
    pub sup_norm_gap: T,
    pub l1_gap: T,
    pub grid_points: usize,
    pub pass: bool,
    /// Set when likelihood and prior share no support; gaps are then
    /// infinite and `pass` is false.
    pub no_overlap: bool,
}

/// Likelihood for θ given `x1 = s`: `L(t) = f1(s - t)`, tabulated exactly by
/// reversing `f1` onto the grid `{s - e}`. No prior enters the construction.
pub fn likelihood_theta<T: Scalar>(f1: &GridDensity<T>, s: T) -> Result<LikelihoodCurve<T>> {
    let (grid, values) = reversed_about(f1, s)?;
    Ok(LikelihoodCurve { grid, values })
}

/// Grid and values of `x ↦ d(s - x)`: the table of `d` reversed, living on
/// `[s - hi, s - lo]`.
fn reversed_about<T: Scalar>(d: &GridDensity<T>, s: T) -> Result<(GridSpec<T>, Vec<T>)> {
    if !s.is_finite() {
        return Err(Error::invalid("x1", "observed outcome must be finite"));
    }
    let grid = GridSpec::new(
        s - d.grid().hi(),
        s - d.grid().lo(),
        d.grid().n_points(),
    )?;
    let mut values = d.values().to_vec();
    values.reverse();
    Ok((grid, values))
}

/// Posterior for θ: normalized product of the likelihood and the prior on
/// their overlap window.
pub fn posterior_theta<T: Scalar>(
    f1: &GridDensity<T>,
    prior: &GridDensity<T>,
    s: T,
) -> Result<GridDensity<T>> {
    let like = likelihood_theta(f1, s)?;
    let grid = overlap_grid(like.grid(), prior.grid())?;
    let lv = sample_curve_on(like.grid(), like.values(), &grid);
    let pv = prior.sampled_values_on(&grid);
    product_density(grid, &lv, &pv)
}

/// Route A: posterior error density obtained from the θ posterior by the
/// unit-Jacobian change of variables `e = s - t`.
pub fn posterior_error_a<T: Scalar>(
    f1: &GridDensity<T>,
    prior: &GridDensity<T>,
    s: T,
) -> Result<GridDensity<T>> {
    Ok(posterior_theta(f1, prior, s)?.reflect().shift(s))
}

/// Route B: posterior error density updating `f1` directly, with `π(s - e)`
/// as the likelihood for the error.
pub fn posterior_error_b<T: Scalar>(
    f1: &GridDensity<T>,
    prior: &GridDensity<T>,
    s: T,
) -> Result<GridDensity<T>> {
    let (lg, lv) = reversed_about(prior, s)?;
    let grid = overlap_grid(f1.grid(), &lg)?;
    let fv = f1.sampled_values_on(&grid);
    let pv = sample_curve_on(&lg, &lv, &grid);
    product_density(grid, &fv, &pv)
}

/// Run both routes on a shared comparison grid and report their gap.
/// Disjoint prior/likelihood supports are reported, not thrown.
pub fn check_consistency<T: Scalar>(
    f1: &GridDensity<T>,
    prior: &GridDensity<T>,
    s: T,
    tolerance: T,
) -> Result<ConsistencyReport<T>> {
    let a = posterior_error_a(f1, prior, s);
    let b = posterior_error_b(f1, prior, s);
    let (a, b) = match (a, b) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(Error::NoOverlap(_)), _) | (_, Err(Error::NoOverlap(_))) => {
            return Ok(ConsistencyReport {
                sup_norm_gap: T::infinity(),
                l1_gap: T::infinity(),
                grid_points: 0,
                pass: false,
                no_overlap: true,
            });
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };

    let probe = comparison_grid(a.grid(), b.grid())?;
    let mut sup = T::zero();
    let mut diffs = Vec::with_capacity(probe.n_points());
    for i in 0..probe.n_points() {
        let x = probe.x_at(i);
        let gap = (a.pdf_at(x) - b.pdf_at(x)).abs();
        sup = sup.max(gap);
        diffs.push(gap);
    }
    let l1 = trapezoid(&diffs, probe.step());
    Ok(ConsistencyReport {
        sup_norm_gap: sup,
        l1_gap: l1,
        grid_points: probe.n_points(),
        pass: sup <= tolerance,
        no_overlap: false,
    })
}

/// Comparison lattice: the overlap window of the two outputs at the finer of
/// their steps.
fn comparison_grid<T: Scalar>(a: &GridSpec<T>, b: &GridSpec<T>) -> Result<GridSpec<T>> {
    overlap_grid(a, b)
}

/// Posterior predictive density for `x2`: the second noise convolved with
/// the θ posterior. With a wide flat prior this converges to
/// [`MeasurementModel::predictive_density`], which needs no prior at all.
pub fn prior_predictive<T: Scalar>(
    model: &MeasurementModel<T>,
    prior: &GridDensity<T>,
    s: T,
) -> Result<GridDensity<T>> {
    let (f1, f2) = model.realize_noises()?;
    let posterior = posterior_theta(&f1, prior, s)?;
    convolve(&f2, &posterior)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{GridPolicy, NoiseSpec};

    fn realize(spec: NoiseSpec<f64>) -> GridDensity<f64> {
        spec.realize(GridPolicy::Auto).unwrap()
    }

    #[test]
    fn likelihood_peaks_at_the_outcome() {
        let f1 = realize(NoiseSpec::Normal { mean: 0.0, sd: 1.0 });
        let like = likelihood_theta(&f1, 2.0).unwrap();
        let (mut best_t, mut best_v) = (f64::NAN, -1.0);
        for i in 0..like.grid().n_points() {
            if like.values()[i] > best_v {
                best_v = like.values()[i];
                best_t = like.grid().x_at(i);
            }
        }
        assert!((best_t - 2.0).abs() < 1e-9, "peak at {best_t}");
    }

    #[test]
    fn flat_noise_gives_flat_likelihood() {
        let f1 = realize(NoiseSpec::Uniform { a: -1.0, b: 1.0 });
        let like = likelihood_theta(&f1, 0.0).unwrap();
        let inside = like.at(0.3);
        assert!((like.at(-0.6) - inside).abs() < 1e-12);
        assert!(like.at(1.5).abs() < 1e-12);
    }

    #[test]
    fn laplace_likelihood_matches_formula() {
        let f1 = realize(NoiseSpec::Laplace { loc: 0.0, scale: 1.0 });
        let like = likelihood_theta(&f1, 5.0).unwrap();
        // Values are f1's table reversed, so up to f1's own normalization.
        let scale = like.at(5.0) / 0.5;
        for t in [3.0_f64, 4.5, 5.0, 5.5, 7.0] {
            let expect = 0.5 * (-(5.0_f64 - t).abs()).exp() * scale;
            assert!((like.at(t) - expect).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn no_overlap_is_reported_not_thrown() {
        let f1 = realize(NoiseSpec::Uniform { a: 0.0, b: 1.0 });
        let prior = realize(NoiseSpec::Uniform { a: 50.0, b: 51.0 });
        let report = check_consistency(&f1, &prior, 0.0, 1e-8).unwrap();
        assert!(report.no_overlap);
        assert!(!report.pass);
    }

    #[test]
    fn symmetric_roles_give_identical_routes() {
        let f1 = realize(NoiseSpec::Normal { mean: 0.0, sd: 1.0 });
        let report = check_consistency(&f1, &f1.clone(), 0.0, 1e-12).unwrap();
        assert!(report.pass, "sup gap {}", report.sup_norm_gap);
    }
}
