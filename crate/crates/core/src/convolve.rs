//! FFT convolution and cross-correlation of grid densities.
//!
//! `convolve(a, b)` is the density of `X + Y` for independent draws;
//! `cross_correlate(a, b)` is the density of `Y - X`, the kernel behind the
//! pivot. Operands are brought onto a shared lattice at the finer of the two
//! steps first. When the finer step would need more than [`MAX_COMMON_NODES`]
//! output nodes the lattice is coarsened to fit; operands so disparate that a
//! feasible lattice cannot resolve both are rejected.

use crate::error::{Error, Result};
use crate::grid::{GridDensity, GridSpec, MIN_GRID_POINTS};
use crate::scalar::{lit, Scalar};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Upper bound on the shared-lattice output length (2^20 + 1 nodes).
pub const MAX_COMMON_NODES: usize = (1 << 20) + 1;

/// Density of `X + Y`: FFT linear convolution scaled by the grid step, then
/// normalized. Support is the sum of the operand supports.
pub fn convolve<T: Scalar>(a: &GridDensity<T>, b: &GridDensity<T>) -> Result<GridDensity<T>> {
    let (ga, va, gb, vb) = to_common_step(a, b)?;
    let raw = linear_convolution(&va, &vb);
    finish(&ga, &gb, ga.lo() + gb.lo(), ga.hi() + gb.hi(), raw)
}

/// Density of `Y - X` for independent `X ~ a`, `Y ~ b`:
/// `g(d) = ∫ a(ξ) b(d + ξ) dξ`. Computed by conjugate-spectrum correlation,
/// which agrees with `convolve(&a.reflect(), b)` to machine precision.
pub fn cross_correlate<T: Scalar>(
    a: &GridDensity<T>,
    b: &GridDensity<T>,
) -> Result<GridDensity<T>> {
    let (ga, va, gb, vb) = to_common_step(a, b)?;
    let raw = linear_correlation(&va, &vb);
    finish(&ga, &gb, gb.lo() - ga.hi(), gb.hi() - ga.lo(), raw)
}

fn finish<T: Scalar>(
    ga: &GridSpec<T>,
    gb: &GridSpec<T>,
    lo: T,
    hi: T,
    raw: Vec<T>,
) -> Result<GridDensity<T>> {
    let step = ga.step();
    // Trapezoid-consistent scaling: edge values vanish, so the plain Riemann
    // factor is the trapezoid rule here. FFT roundoff can leave tiny negative
    // values; clamp them.
    let values: Vec<T> = raw.iter().map(|&v| (v * step).max(T::zero())).collect();
    let n = values.len();
    debug_assert_eq!(n, ga.n_points() + gb.n_points() - 1);
    GridDensity::new(GridSpec::new(lo, hi, n)?, values)
}

/// Resample both operands to one shared step.
fn to_common_step<T: Scalar>(
    a: &GridDensity<T>,
    b: &GridDensity<T>,
) -> Result<(GridSpec<T>, Vec<T>, GridSpec<T>, Vec<T>)> {
    let range_a = a.grid().hi() - a.grid().lo();
    let range_b = b.grid().hi() - b.grid().lo();
    let mut step = a.grid().step().min(b.grid().step());
    if !step.is_finite() || !(step > T::zero()) {
        return Err(Error::GridMismatch("non-finite grid step".into()));
    }

    let combined = range_a + range_b;
    let cap_intervals = T::from_usize(MAX_COMMON_NODES - 2).unwrap();
    if combined / step > cap_intervals {
        step = combined / cap_intervals;
    }
    let min_intervals = T::from_usize(MIN_GRID_POINTS - 1).unwrap();
    if range_a / step < min_intervals || range_b / step < min_intervals {
        return Err(Error::GridMismatch(format!(
            "steps too disparate: a shared lattice within {MAX_COMMON_NODES} nodes cannot resolve both supports"
        )));
    }

    let (ga, va) = resample_to_step(a, step)?;
    let (gb, vb) = resample_to_step(b, step)?;
    let (sa, sb) = (ga.step(), gb.step());
    if (sa - sb).abs() > sa.min(sb) * lit::<T>(1e-9) {
        return Err(Error::GridMismatch(format!(
            "steps {:?} and {:?} disagree after resampling",
            sa.to_f64(),
            sb.to_f64()
        )));
    }
    Ok((ga, va, gb, vb))
}

/// Retabulate `d` at `step`, zero-padding the right edge so the span is an
/// exact step multiple and the node count stays odd.
fn resample_to_step<T: Scalar>(
    d: &GridDensity<T>,
    step: T,
) -> Result<(GridSpec<T>, Vec<T>)> {
    let own = d.grid().step();
    if (step - own).abs() <= own * lit::<T>(1e-12) {
        return Ok((*d.grid(), d.values().to_vec()));
    }
    let range = d.grid().hi() - d.grid().lo();
    let mut m = ((range / step) - lit::<T>(1e-9))
        .ceil()
        .to_usize()
        .ok_or_else(|| Error::GridMismatch("resampling span overflow".into()))?;
    m = m.max(MIN_GRID_POINTS - 1);
    if m % 2 != 0 {
        m += 1;
    }
    let lo = d.grid().lo();
    let hi = lo + step * T::from_usize(m).unwrap();
    let grid = GridSpec::new(lo, hi, m + 1)?;
    let values = d.sampled_values_on(&grid);
    Ok((grid, values))
}

/// Full linear convolution `c_m = Σ_i a_i b_{m-i}` via zero-padded FFT.
fn linear_convolution<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let out_len = a.len() + b.len() - 1;
    let (fa, fb, len) = padded_spectra(a, b, out_len);
    let mut prod: Vec<Complex<T>> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    inverse(&mut prod);
    prod.truncate(out_len);
    prod.into_iter().map(|c| c.re).collect()
}

/// Full linear correlation, output index `m` holding lag `m - (a.len()-1)`:
/// `r_m = Σ_i a_i b_{i + m - (a.len()-1)}`. Conjugate-spectrum product with
/// the circular lags unwrapped.
fn linear_correlation<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let out_len = a.len() + b.len() - 1;
    let (fa, fb, len) = padded_spectra(a, b, out_len);
    let mut prod: Vec<Complex<T>> = fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).collect();
    inverse(&mut prod);
    (0..out_len)
        .map(|m| {
            let lag = m as isize - (a.len() as isize - 1);
            let idx = if lag >= 0 { lag as usize } else { len - lag.unsigned_abs() };
            prod[idx].re
        })
        .collect()
}

fn padded_spectra<T: Scalar>(
    a: &[T],
    b: &[T],
    out_len: usize,
) -> (Vec<Complex<T>>, Vec<Complex<T>>, usize) {
    let len = out_len.next_power_of_two();
    let mut fa = complex_padded(a, len);
    let mut fb = complex_padded(b, len);
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(len);
    fft.process(&mut fa);
    fft.process(&mut fb);
    (fa, fb, len)
}

fn complex_padded<T: Scalar>(v: &[T], len: usize) -> Vec<Complex<T>> {
    let mut out = Vec::with_capacity(len);
    out.extend(v.iter().map(|&x| Complex::new(x, T::zero())));
    out.resize(len, Complex::new(T::zero(), T::zero()));
    out
}

fn inverse<T: Scalar>(buf: &mut [Complex<T>]) {
    let len = buf.len();
    let mut planner = FftPlanner::<T>::new();
    planner.plan_fft_inverse(len).process(buf);
    let scale = T::one() / T::from_usize(len).unwrap();
    for c in buf.iter_mut() {
        *c = *c * scale;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{GridPolicy, NoiseSpec};

    fn unit_uniform_centered() -> GridDensity<f64> {
        NoiseSpec::Uniform { a: -0.5, b: 0.5 }
            .realize(GridPolicy::Auto)
            .unwrap()
    }

    #[test]
    fn correlation_matches_reflect_then_convolve() {
        let a = NoiseSpec::Normal { mean: 0.3, sd: 0.8 }
            .realize(GridPolicy::Auto)
            .unwrap();
        let b = NoiseSpec::Laplace { loc: -0.2, scale: 1.1 }
            .realize(GridPolicy::Auto)
            .unwrap();
        let corr = cross_correlate(&a, &b).unwrap();
        let conv = convolve(&a.reflect(), &b).unwrap();
        assert_eq!(corr.grid().n_points(), conv.grid().n_points());
        let mut sup: f64 = 0.0;
        for (x, y) in corr.values().iter().zip(conv.values()) {
            sup = sup.max((x - y).abs());
        }
        assert!(sup < 1e-12, "sup gap {sup}");
    }

    #[test]
    fn uniform_self_convolution_is_triangular() {
        let u = unit_uniform_centered();
        let tri = convolve(&u, &u).unwrap();
        // Peak 1 at the center, zero at ±1.
        let center = tri.grid().n_points() / 2;
        assert!((tri.values()[center] - 1.0).abs() < 1e-4);
        assert!((tri.pdf_at(0.5) - 0.5).abs() < 1e-4);
        assert!(tri.pdf_at(1.2).abs() < 1e-12);
    }

    #[test]
    fn narrow_kernel_acts_as_identity() {
        let f = NoiseSpec::Normal { mean: 1.0, sd: 1.0 }
            .realize(GridPolicy::Auto)
            .unwrap();
        let kernel = NoiseSpec::Normal { mean: 0.0, sd: 1e-4 }
            .realize(GridPolicy::Auto)
            .unwrap();
        let out = convolve(&f, &kernel).unwrap();
        let mut sup: f64 = 0.0;
        for i in 0..f.grid().n_points() {
            let x = f.x_at(i);
            sup = sup.max((out.pdf_at(x) - f.values()[i]).abs());
        }
        assert!(sup < 1e-3, "sup gap {sup}");
    }

    #[test]
    fn hopelessly_disparate_grids_error() {
        let wide = NoiseSpec::Normal { mean: 0.0, sd: 1.0 }
            .realize(GridPolicy::Auto)
            .unwrap();
        let x: Vec<f64> = (0..9).map(|i| i as f64 * 1e-9).collect();
        let narrow = NoiseSpec::Tabulated { x, pdf: vec![1.0; 9] }
            .realize(GridPolicy::Auto)
            .unwrap();
        assert!(matches!(
            convolve(&wide, &narrow),
            Err(Error::GridMismatch(_))
        ));
    }
}
