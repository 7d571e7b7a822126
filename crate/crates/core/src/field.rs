//! Sampled periodic fields on a flat torus of side `L`, their discrete spectra,
//! exact Fourier-phase translation, FFT convolution and the scalar and mixed
//! Lebesgue norms every other module measures with.
//!
//! Conventions: a grid has `M` samples per axis at `x_j = j L / M` and the
//! transform is the Riemann-sum discretisation of
//! `f̂(ξ) = ∫ f(x) e^{-2πi x·ξ} dx`, i.e. weight `(L/M)^d`, at the physical
//! frequencies `ξ = k / L` with integer `k ∈ (-M/2, M/2]` per axis.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative size below which off-support coefficients count as roundoff.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-10;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Regular `d`-dimensional periodic grid, `d ∈ {1, 2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dimension: usize,
    samples_per_axis: usize,
    period: f64,
}

impl GridSpec {
    pub fn new(dimension: usize, samples_per_axis: usize, period: f64) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::InvalidGrid(format!("dimension {dimension} not in {{1, 2}}")));
        }
        if samples_per_axis < 8 || !samples_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "samples per axis {samples_per_axis} must be a power of two >= 8"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period {period} must be positive")));
        }
        Ok(Self { dimension, samples_per_axis, period })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn samples_per_axis(&self) -> usize {
        self.samples_per_axis
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Total number of samples, `M^d`.
    pub fn len(&self) -> usize {
        self.samples_per_axis.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.samples_per_axis as f64
    }

    /// Quadrature weight `(L/M)^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dimension as i32)
    }

    /// `M / (2L)`, the largest representable physical frequency per axis.
    pub fn nyquist(&self) -> f64 {
        self.samples_per_axis as f64 / (2.0 * self.period)
    }

    /// Per-axis sample indices of a flat (row-major) index.
    pub fn axis_indices(&self, flat: usize) -> [usize; 2] {
        let m = self.samples_per_axis;
        if self.dimension == 1 {
            [flat, 0]
        } else {
            [flat / m, flat % m]
        }
    }

    pub fn flat_index(&self, axes: [usize; 2]) -> usize {
        if self.dimension == 1 {
            axes[0]
        } else {
            axes[0] * self.samples_per_axis + axes[1]
        }
    }

    /// Signed frequency index in `(-M/2, M/2]` for one axis index.
    pub fn signed_index(&self, i: usize) -> i64 {
        let m = self.samples_per_axis;
        if i <= m / 2 {
            i as i64
        } else {
            i as i64 - m as i64
        }
    }

    /// Axis index of a signed frequency index, wrapping modulo `M`.
    pub fn wrap_index(&self, k: i64) -> usize {
        k.rem_euclid(self.samples_per_axis as i64) as usize
    }

    /// Integer frequency vector of a flat index (second entry 0 when `d = 1`).
    pub fn frequency_indices(&self, flat: usize) -> [i64; 2] {
        let a = self.axis_indices(flat);
        if self.dimension == 1 {
            [self.signed_index(a[0]), 0]
        } else {
            [self.signed_index(a[0]), self.signed_index(a[1])]
        }
    }

    /// Physical frequency `k / L`.
    pub fn frequency(&self, flat: usize) -> [f64; 2] {
        let k = self.frequency_indices(flat);
        [k[0] as f64 / self.period, k[1] as f64 / self.period]
    }

    pub fn frequency_norm(&self, flat: usize) -> f64 {
        let xi = self.frequency(flat);
        (xi[0] * xi[0] + xi[1] * xi[1]).sqrt()
    }

    /// Sample position in `[0, L)^d`.
    pub fn coordinate(&self, flat: usize) -> [f64; 2] {
        let a = self.axis_indices(flat);
        let h = self.spacing();
        if self.dimension == 1 {
            [a[0] as f64 * h, 0.0]
        } else {
            [a[0] as f64 * h, a[1] as f64 * h]
        }
    }

    /// Minimum-image sample position in `[-L/2, L/2)^d`.
    pub fn centered_coordinate(&self, flat: usize) -> [f64; 2] {
        let a = self.axis_indices(flat);
        let h = self.spacing();
        let m = self.samples_per_axis;
        let c = |i: usize| {
            if i < m / 2 {
                i as f64 * h
            } else {
                (i as f64 - m as f64) * h
            }
        };
        if self.dimension == 1 {
            [c(a[0]), 0.0]
        } else {
            [c(a[0]), c(a[1])]
        }
    }

    /// Minimum-image distance of a sample from the origin.
    pub fn torus_norm(&self, flat: usize) -> f64 {
        let c = self.centered_coordinate(flat);
        (c[0] * c[0] + c[1] * c[1]).sqrt()
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Certified spectral support `{inner <= |ξ| <= outer}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub inner: f64,
    pub outer: f64,
}

impl Annulus {
    pub fn new(inner: f64, outer: f64) -> Self {
        Self { inner, outer }
    }

    pub fn ball(outer: f64) -> Self {
        Self { inner: 0.0, outer }
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.inner && r <= self.outer
    }

    /// Support of a product of two spectra; `None` when the supports are disjoint.
    pub fn intersect(&self, other: &Annulus) -> Option<Annulus> {
        let inner = self.inner.max(other.inner);
        let outer = self.outer.min(other.outer);
        (inner <= outer).then_some(Annulus { inner, outer })
    }
}

/// Complex samples of a periodic function, row-major over the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    grid: GridSpec,
    values: Vec<Complex64>,
    support: Option<Annulus>,
}

impl SampledField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values, support: None })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()], support: None }
    }

    pub fn constant(grid: GridSpec, c: Complex64) -> Self {
        Self { grid, values: vec![c; grid.len()], support: Some(Annulus::ball(0.0)) }
    }

    /// Samples `f` at every grid position.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 2]) -> Complex64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.coordinate(i))).collect();
        Self::new(grid, values)
    }

    pub(crate) fn from_parts(grid: GridSpec, values: Vec<Complex64>, support: Option<Annulus>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values, support }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn support(&self) -> Option<Annulus> {
        self.support
    }

    /// Attach a spectral support certificate after checking it holds exactly.
    pub fn with_support(self, support: Annulus) -> Result<Self> {
        let spectrum = transform(&self).with_certificate(support)?;
        let support = spectrum.support;
        Ok(Self { support, ..self })
    }

    pub(crate) fn set_support(&mut self, support: Option<Annulus>) {
        self.support = support;
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            support: self.support,
        }
    }

    pub fn add(&self, other: &SampledField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let support = match (self.support, other.support) {
            (Some(a), Some(b)) => Some(Annulus::new(a.inner.min(b.inner), a.outer.max(b.outer))),
            _ => None,
        };
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            support,
        })
    }

    /// Pointwise product. The support certificate is dropped.
    pub fn mul(&self, other: &SampledField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
            support: None,
        })
    }

    /// Pointwise modulus as a real field.
    pub fn modulus(&self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| Complex64::new(v.norm(), 0.0)).collect(),
            support: None,
        }
    }

    /// Quadrature of the field over one period.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.cell_volume()
    }

    pub fn max_abs_diff(&self, other: &SampledField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// `||self - other||_2 / ||self||_2` on the grid.
    pub fn relative_l2_diff(&self, other: &SampledField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let num: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = self.values.iter().map(|a| a.norm_sqr()).sum();
        if den == 0.0 {
            return Err(Error::ZeroDenominator("relative L2 difference against a zero field".into()));
        }
        Ok((num / den).sqrt())
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Discrete Fourier coefficients of a field, with optional certified support.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    coefficients: Vec<Complex64>,
    support: Option<Annulus>,
}

impl Spectrum {
    pub fn new(grid: GridSpec, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: coefficients.len() });
        }
        Ok(Self { grid, coefficients, support: None })
    }

    /// Builds coefficients from a function of the flat index.
    pub fn from_fn(grid: GridSpec, f: impl Fn(usize) -> Complex64) -> Self {
        Self { grid, coefficients: (0..grid.len()).map(f).collect(), support: None }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    pub fn support(&self) -> Option<Annulus> {
        self.support
    }

    /// Coefficient at a signed integer frequency vector.
    pub fn at(&self, k: [i64; 2]) -> Complex64 {
        let a0 = self.grid.wrap_index(k[0]);
        let a1 = if self.grid.dimension() == 2 { self.grid.wrap_index(k[1]) } else { 0 };
        self.coefficients[self.grid.flat_index([a0, a1])]
    }

    /// Attach a certificate. Coefficients off the annulus must be roundoff
    /// (below `1e-10` of the largest coefficient); they are then zeroed.
    pub fn with_certificate(mut self, support: Annulus) -> Result<Self> {
        self.check_support(&support)?;
        self.project(&support);
        self.support = Some(support);
        Ok(self)
    }

    fn project(&mut self, support: &Annulus) {
        for i in 0..self.coefficients.len() {
            if !support.contains(self.grid.frequency_norm(i)) {
                self.coefficients[i] = Complex64::new(0.0, 0.0);
            }
        }
    }

    fn check_support(&self, support: &Annulus) -> Result<()> {
        let scale = self.coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let tol = CERTIFICATE_TOLERANCE * scale;
        for (i, c) in self.coefficients.iter().enumerate() {
            let r = self.grid.frequency_norm(i);
            if !support.contains(r) && c.norm() > tol {
                return Err(Error::Certificate(format!(
                    "coefficient {c} at |xi| = {r} lies outside [{}, {}]",
                    support.inner, support.outer
                )));
            }
        }
        Ok(())
    }

    /// Zero every coefficient off `support`, then certify it.
    pub fn restrict(mut self, support: Annulus) -> Self {
        self.project(&support);
        self.support = Some(support);
        self
    }

    /// Band-limited interpolant evaluated at an arbitrary point.
    pub fn eval_physical(&self, x: [f64; 2]) -> Complex64 {
        let l = self.grid.period();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.coefficients.iter().enumerate() {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let k = self.grid.frequency_indices(i);
            let t = (k[0] as f64 * x[0] + k[1] as f64 * x[1]) / l;
            acc += c * unit_phase(t);
        }
        acc / l.powi(self.grid.dimension() as i32)
    }
}

/// `e^{2πi t}`, reducing `t` modulo 1 first.
pub(crate) fn unit_phase(t: f64) -> Complex64 {
    let frac = t - t.round();
    Complex64::from_polar(1.0, 2.0 * PI * frac)
}

fn fft_in_place(grid: &GridSpec, data: &mut [Complex64], inverse: bool) {
    let m = grid.samples_per_axis();
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let fft = if inverse { planner.plan_fft_inverse(m) } else { planner.plan_fft_forward(m) };
        // rows (the only axis when d = 1)
        fft.process(data);
        if grid.dimension() == 2 {
            let mut column = vec![Complex64::new(0.0, 0.0); m];
            for c in 0..m {
                for r in 0..m {
                    column[r] = data[r * m + c];
                }
                fft.process(&mut column);
                for r in 0..m {
                    data[r * m + c] = column[r];
                }
            }
        }
    });
}

pub fn transform(f: &SampledField) -> Spectrum {
    let mut data = f.values.clone();
    fft_in_place(&f.grid, &mut data, false);
    let w = f.grid.cell_volume();
    data.iter_mut().for_each(|c| *c *= w);
    let mut s = Spectrum { grid: f.grid, coefficients: data, support: f.support };
    if let Some(a) = f.support {
        s.project(&a);
    }
    s
}

pub fn inverse(s: &Spectrum) -> SampledField {
    let mut data = s.coefficients.clone();
    fft_in_place(&s.grid, &mut data, true);
    let w = 1.0 / s.grid.period().powi(s.grid.dimension() as i32);
    data.iter_mut().for_each(|c| *c *= w);
    SampledField { grid: s.grid, values: data, support: s.support }
}

/// Inverse transform of paired spectra checked against a reference grid.
pub fn inverse_on(grid: &GridSpec, s: &Spectrum) -> Result<SampledField> {
    grid.check_same(&s.grid)?;
    Ok(inverse(s))
}

/// Periodic convolution with quadrature weight `(L/M)^d`, via the product of spectra.
pub fn convolve(f: &SampledField, g: &SampledField) -> Result<SampledField> {
    f.grid.check_same(&g.grid)?;
    let sf = transform(f);
    let sg = transform(g);
    let product = Spectrum {
        grid: f.grid,
        coefficients: sf.coefficients.iter().zip(&sg.coefficients).map(|(a, b)| a * b).collect(),
        support: None,
    };
    let support = match (sf.support, sg.support) {
        (Some(a), Some(b)) => Some(a.intersect(&b)),
        (Some(a), None) | (None, Some(a)) => Some(Some(a)),
        (None, None) => None,
    };
    let out = match support {
        Some(Some(a)) => inverse(&product.restrict(a)),
        Some(None) => SampledField { support: Some(Annulus::ball(0.0)), ..SampledField::zeros(f.grid) },
        None => inverse(&product),
    };
    Ok(out)
}

/// Discrete delta of unit mass at the origin.
pub fn delta(grid: GridSpec) -> SampledField {
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    values[0] = Complex64::new(1.0 / grid.cell_volume(), 0.0);
    SampledField { grid, values, support: None }
}

fn check_shift(grid: &GridSpec, shift: &[f64]) -> Result<()> {
    if shift.len() != grid.dimension() || shift.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "shift {shift:?} must be a finite vector of length {}",
            grid.dimension()
        )));
    }
    Ok(())
}

/// `e^{-2πi (shift, ξ)}` at a flat frequency index.
pub(crate) fn shift_phase(grid: &GridSpec, shift: &[f64], flat: usize) -> Complex64 {
    let k = grid.frequency_indices(flat);
    let mut t = 0.0;
    for (a, s) in shift.iter().enumerate() {
        t += s * k[a] as f64;
    }
    // exact reduction keeps large integer products from losing the phase
    unit_phase(-(t % grid.period()) / grid.period())
}

/// `x ↦ f(x - shift)`, exact for band-limited `f` and any real shift.
pub fn phase_shift(f: &SampledField, shift: &[f64]) -> Result<SampledField> {
    check_shift(&f.grid, shift)?;
    if shift.iter().all(|s| *s == 0.0) {
        return Ok(f.clone());
    }
    let mut s = transform(f);
    for (i, c) in s.coefficients.iter_mut().enumerate() {
        *c *= shift_phase(&f.grid, shift, i);
    }
    Ok(inverse(&s))
}

/// Lebesgue exponent, `1 <= p <= ∞` when used in a norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    /// `r = 1/p`; `r = 0` is `p = ∞`.
    pub fn from_reciprocal(r: f64) -> Self {
        if r == 0.0 {
            Exponent::Infinite
        } else {
            Exponent::Finite(1.0 / r)
        }
    }

    pub fn reciprocal(&self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinite => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Exponent::Finite(p) if !(p >= 1.0) => Err(Error::ExponentBelowOne(p)),
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

fn norm_of_moduli(moduli: impl Iterator<Item = f64>, p: Exponent, weight: f64) -> f64 {
    match p {
        Exponent::Infinite => moduli.fold(0.0, f64::max),
        Exponent::Finite(p) => {
            // scale by the max to keep |f|^p in range
            let v: Vec<f64> = moduli.collect();
            let m = v.iter().cloned().fold(0.0, f64::max);
            if m == 0.0 {
                return 0.0;
            }
            let s: f64 = v.iter().map(|x| (x / m).powf(p)).sum();
            m * (weight * s).powf(1.0 / p)
        }
    }
}

/// `((L/M)^d Σ |f|^p)^{1/p}`, or `max |f|` for `p = ∞`.
pub fn lp_norm(f: &SampledField, p: Exponent) -> Result<f64> {
    p.validate()?;
    Ok(norm_of_moduli(f.values.iter().map(|v| v.norm()), p, f.grid.cell_volume()))
}

/// `L_p(ℓ_q)` mixed norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub outer_p: Exponent,
    pub inner_q: Exponent,
}

/// Inner `ℓ_q` over the sequence index at each point, then outer `L_p` quadrature.
pub fn mixed_norm(fs: &[SampledField], spec: MixedNormSpec) -> Result<f64> {
    spec.outer_p.validate()?;
    spec.inner_q.validate()?;
    let first = fs.first().ok_or(Error::EmptySequence)?;
    for f in fs {
        first.grid.check_same(&f.grid)?;
    }
    let pointwise: Vec<f64> = (0..first.grid.len())
        .map(|i| norm_of_moduli(fs.iter().map(|f| f.values[i].norm()), spec.inner_q, 1.0))
        .collect();
    Ok(norm_of_moduli(pointwise.into_iter(), spec.outer_p, first.grid.cell_volume()))
}

/// Random field whose spectrum is supported exactly in `{inner <= |ξ| <= outer}`.
/// With `real = true` the coefficients are Hermitian, so the field is real.
pub fn random_band_limited<R: Rng + ?Sized>(
    grid: GridSpec,
    support: Annulus,
    real: bool,
    rng: &mut R,
) -> Result<SampledField> {
    if support.outer >= grid.nyquist() {
        return Err(Error::Nyquist { scale: 0, radius: support.outer, nyquist: grid.nyquist() });
    }
    let mut s = Spectrum::from_fn(grid, |_| Complex64::new(0.0, 0.0));
    for i in 0..grid.len() {
        if support.contains(grid.frequency_norm(i)) {
            s.coefficients[i] = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    if real {
        let original = s.coefficients.clone();
        for i in 0..grid.len() {
            let k = grid.frequency_indices(i);
            let j = s.grid.flat_index([
                grid.wrap_index(-k[0]),
                if grid.dimension() == 2 { grid.wrap_index(-k[1]) } else { 0 },
            ]);
            s.coefficients[i] = (original[i] + original[j].conj()) * 0.5;
        }
    }
    s.support = Some(support);
    let mut f = inverse(&s);
    if real {
        f.values.iter_mut().for_each(|v| v.im = 0.0);
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_field(grid: GridSpec, rng: &mut ChaCha8Rng) -> SampledField {
        let values = (0..grid.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SampledField::new(grid, values).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(3, 64, 1.0).is_err());
        assert!(GridSpec::new(1, 48, 1.0).is_err());
        assert!(GridSpec::new(1, 4, 1.0).is_err());
        assert!(GridSpec::new(1, 64, 0.0).is_err());
        let g = GridSpec::new(2, 16, 4.0).unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g.nyquist(), 2.0);
        assert_eq!(g.signed_index(8), 8);
        assert_eq!(g.signed_index(9), -7);
    }

    #[test]
    fn field_rejects_bad_samples() {
        let g = GridSpec::new(1, 8, 1.0).unwrap();
        assert!(matches!(SampledField::new(g, vec![c(0.0); 7]), Err(Error::LengthMismatch { .. })));
        let mut v = vec![c(0.0); 8];
        v[3] = c(f64::NAN);
        assert_eq!(SampledField::new(g, v), Err(Error::NonFinite(3)));
    }

    #[test]
    fn constant_has_only_zero_frequency() {
        let g = GridSpec::new(2, 16, 3.0).unwrap();
        let s = transform(&SampledField::constant(g, c(2.5)));
        assert!((s.coefficients()[0] - c(2.5 * 9.0)).norm() < 1e-12);
        assert!(s.coefficients()[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn exponential_is_single_coefficient() {
        let g = GridSpec::new(1, 64, 2.0).unwrap();
        let k = 5.0;
        let f = SampledField::from_fn(g, |x| unit_phase(k * x[0] / 2.0)).unwrap();
        let s = transform(&f);
        for i in 0..g.len() {
            let expect = if g.frequency_indices(i)[0] == 5 { 2.0 } else { 0.0 };
            assert!((s.coefficients()[i] - c(expect)).norm() < 1e-12, "index {i}");
        }
        assert!((g.frequency(5)[0] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn round_trip_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (d, m) in [(1, 64), (1, 4096), (2, 64)] {
            let g = GridSpec::new(d, m, 1.7).unwrap();
            for _ in 0..100 {
                let f = random_field(g, &mut rng);
                let back = inverse(&transform(&f));
                assert!(f.relative_l2_diff(&back).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn convolution_identity_and_commutativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = GridSpec::new(1, 128, 5.0).unwrap();
        let f = random_field(g, &mut rng);
        let h = random_field(g, &mut rng);
        assert!(convolve(&f, &delta(g)).unwrap().max_abs_diff(&f).unwrap() < 1e-12);
        let fh = convolve(&f, &h).unwrap();
        let hf = convolve(&h, &f).unwrap();
        assert!(fh.max_abs_diff(&hf).unwrap() < 1e-12);
        let other = GridSpec::new(1, 64, 5.0).unwrap();
        assert_eq!(convolve(&f, &SampledField::zeros(other)), Err(Error::GridMismatch));
    }

    #[test]
    fn convolution_of_disjoint_bands_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = GridSpec::new(1, 256, 8.0).unwrap();
        let f = random_band_limited(g, Annulus::new(1.0, 2.0), false, &mut rng).unwrap();
        let h = random_band_limited(g, Annulus::new(3.0, 4.0), false, &mut rng).unwrap();
        let fh = convolve(&f, &h).unwrap();
        assert_eq!(fh.max_modulus(), 0.0);
        let overlap = random_band_limited(g, Annulus::new(1.5, 3.5), false, &mut rng).unwrap();
        let fo = convolve(&f, &overlap).unwrap();
        assert_eq!(fo.support(), Some(Annulus::new(1.5, 2.0)));
    }

    #[test]
    fn phase_shift_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = GridSpec::new(1, 256, 4.0).unwrap();
        let f = random_band_limited(g, Annulus::new(0.0, 20.0), false, &mut rng).unwrap();
        assert_eq!(phase_shift(&f, &[0.0]).unwrap(), f);
        let full = phase_shift(&f, &[4.0]).unwrap();
        assert!(full.max_abs_diff(&f).unwrap() < 1e-11);
        let a = 0.3171;
        let back = phase_shift(&phase_shift(&f, &[a]).unwrap(), &[-a]).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() < 1e-11);
        // grid-aligned shift is a sample permutation
        let h = g.spacing();
        let s = phase_shift(&f, &[3.0 * h]).unwrap();
        assert!((s.values()[10] - f.values()[7]).norm() < 1e-12);
        assert!(phase_shift(&f, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn lp_norm_values() {
        let g = GridSpec::new(1, 64, 9.0).unwrap();
        let f = SampledField::constant(g, c(-2.0));
        assert!((lp_norm(&f, Exponent::Finite(2.0)).unwrap() - 2.0 * 3.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = random_field(g, &mut rng);
        assert_eq!(lp_norm(&r, Exponent::Infinite).unwrap(), r.max_modulus());
        assert_eq!(lp_norm(&r, Exponent::Finite(0.5)), Err(Error::ExponentBelowOne(0.5)));
    }

    #[test]
    fn plancherel() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for d in [1, 2] {
            let g = GridSpec::new(d, 32, 2.5).unwrap();
            let f = random_field(g, &mut rng);
            let s = transform(&f);
            let spec_side: f64 = s.coefficients().iter().map(|v| v.norm_sqr()).sum::<f64>()
                / g.period().powi(d as i32);
            let l2 = lp_norm(&f, Exponent::Finite(2.0)).unwrap();
            assert!((l2 * l2 - spec_side).abs() / spec_side < 1e-10);
        }
    }

    #[test]
    fn mixed_norm_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = GridSpec::new(1, 64, 1.0).unwrap();
        let f = random_field(g, &mut rng);
        let h = random_field(g, &mut rng);
        let two = Exponent::Finite(2.0);
        for q in [Exponent::Finite(1.0), Exponent::Finite(3.0), Exponent::Infinite] {
            let m = mixed_norm(std::slice::from_ref(&f), MixedNormSpec { outer_p: two, inner_q: q }).unwrap();
            assert!((m - lp_norm(&f, two).unwrap()).abs() < 1e-12);
        }
        let pair = mixed_norm(&[f.clone(), f.clone()], MixedNormSpec { outer_p: two, inner_q: two }).unwrap();
        assert!((pair - 2f64.sqrt() * lp_norm(&f, two).unwrap()).abs() < 1e-12);
        let fubini = mixed_norm(&[f.clone(), h.clone()], MixedNormSpec { outer_p: two, inner_q: two }).unwrap();
        let direct = (lp_norm(&f, two).unwrap().powi(2) + lp_norm(&h, two).unwrap().powi(2)).sqrt();
        assert!((fubini - direct).abs() / direct < 1e-10);
        assert_eq!(mixed_norm(&[], MixedNormSpec { outer_p: two, inner_q: two }), Err(Error::EmptySequence));
    }

    #[test]
    fn certificate_is_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = GridSpec::new(2, 32, 4.0).unwrap();
        let f = random_band_limited(g, Annulus::new(0.5, 2.0), true, &mut rng).unwrap();
        assert!(f.values().iter().all(|v| v.im == 0.0));
        let s = transform(&f);
        assert!(s.clone().with_certificate(Annulus::new(0.5, 2.0)).is_ok());
        assert!(matches!(s.with_certificate(Annulus::new(1.0, 2.0)), Err(Error::Certificate(_))));
    }

    #[test]
    fn eval_physical_interpolates_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = GridSpec::new(1, 64, 3.0).unwrap();
        let f = random_band_limited(g, Annulus::new(0.0, 5.0), false, &mut rng).unwrap();
        let s = transform(&f);
        for i in [0, 7, 33] {
            assert!((s.eval_physical(g.coordinate(i)) - f.values()[i]).norm() < 1e-12);
        }
        let shifted = phase_shift(&f, &[0.123]).unwrap();
        let x = g.coordinate(11);
        assert!((s.eval_physical([x[0] - 0.123, 0.0]) - shifted.values()[11]).norm() < 1e-11);
    }
}
