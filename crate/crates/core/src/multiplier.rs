//! Tensor-structured kernels and the multilinear objects built on them: the
//! operator `T`, the form `Λ`, transposes, the weighted size `D_λ` and the
//! shifted form evaluator.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::calibration::{profile_to_field, LPPair, Profile, ScaleRange};
use crate::error::{Error, Result};
use crate::field::{inverse, phase_shift, transform, Annulus, GridSpec, SampledField, Spectrum};
use crate::lp_ops::{apply_to_spectrum, ShiftedDyadicOp};
use crate::shifted_lab::{dyadic_dilate, log_weight};

/// Dyadic truncation `ℓ_min ..= ℓ_max` of the scale sum.
pub type DyadicRange = ScaleRange;

/// Largest product grid walked exactly by [`d_lambda`].
pub const EXACT_TUPLE_BUDGET: usize = 1 << 26;

/// A bracket wider than this fraction of its midpoint is an error.
pub const MAX_BRACKET_WIDTH: f64 = 0.1;

const TARGET_BRACKET_WIDTH: f64 = 1e-3;
const MIN_BINS: usize = 1 << 12;
const MAX_BINS: usize = 1 << 20;

/// One slot of a rank-1 term.
#[derive(Clone, Debug)]
pub enum Factor {
    /// `x ↦ profile^∨(x - translation)`; the spectrum is the profile times a phase.
    Profile { profile: Profile, translation: Vec<f64> },
    /// Sampled factor on the kernel's quadrature grid. Needs a support certificate
    /// and is only dilated by scales `ℓ >= 0`.
    Field(SampledField),
}

impl Factor {
    pub fn profile(profile: Profile, dimension: usize) -> Self {
        Factor::Profile { profile, translation: vec![0.0; dimension] }
    }

    pub fn translated(profile: Profile, translation: Vec<f64>) -> Self {
        Factor::Profile { profile, translation }
    }

    pub fn support(&self) -> Result<Annulus> {
        match self {
            Factor::Profile { profile, .. } => Ok(profile.support()),
            Factor::Field(g) => g
                .support()
                .ok_or_else(|| Error::Certificate("sampled kernel factor has no support certificate".into())),
        }
    }

    pub fn translation(&self) -> [f64; 2] {
        match self {
            Factor::Profile { translation, .. } => {
                let mut a = [0.0; 2];
                a[..translation.len()].copy_from_slice(translation);
                a
            }
            Factor::Field(_) => [0.0; 2],
        }
    }

    /// `g_ℓ * f` for `g_ℓ = 2^{ℓd} g(2^ℓ ·)`, given `f̂`.
    pub fn apply(&self, f_hat: &Spectrum, scale: i32) -> Result<SampledField> {
        match self {
            Factor::Profile { profile, translation } => {
                apply_to_spectrum(f_hat, &ShiftedDyadicOp::new(*profile, scale, translation.clone()))
            }
            Factor::Field(g) => {
                let grid = *f_hat.grid();
                grid.check_same(g.grid())?;
                let g_hat = transform(&dyadic_dilate(g, scale)?);
                let support = match (f_hat.support(), g_hat.support()) {
                    (Some(a), Some(b)) => a.intersect(&b),
                    (None, b) => b,
                    (a, None) => a,
                };
                let Some(support) = support else {
                    return Ok(SampledField::zeros(grid));
                };
                let (a, b) = (f_hat.coefficients(), g_hat.coefficients());
                Ok(inverse(&Spectrum::from_fn(grid, |i| a[i] * b[i]).restrict(support)))
            }
        }
    }

    /// Untranslated samples on the centred window of `quad`.
    fn base_samples(&self, quad: &GridSpec) -> Result<SampledField> {
        match self {
            Factor::Profile { profile, .. } => profile_to_field(profile, quad),
            Factor::Field(g) => {
                quad.check_same(g.grid())?;
                Ok(g.clone())
            }
        }
    }

    /// Periodic samples including the translation, on a computation grid.
    fn torus_samples(&self, grid: &GridSpec) -> Result<SampledField> {
        match self {
            Factor::Profile { profile, translation } => phase_shift(&profile_to_field(profile, grid)?, translation),
            Factor::Field(g) => {
                grid.check_same(g.grid())?;
                Ok(g.clone())
            }
        }
    }

    fn check(&self, quad: &GridSpec) -> Result<()> {
        self.support()?;
        match self {
            Factor::Profile { translation, .. } if translation.len() != quad.dimension() => {
                Err(Error::InvalidArgument(format!(
                    "factor translation has length {}, kernel dimension is {}",
                    translation.len(),
                    quad.dimension()
                )))
            }
            Factor::Profile { translation, .. } if translation.iter().any(|a| !a.is_finite()) => {
                Err(Error::InvalidArgument("factor translation must be finite".into()))
            }
            Factor::Field(g) => quad.check_same(g.grid()),
            _ => Ok(()),
        }
    }
}

/// `K(y_1, …, y_n) = Σ_terms Π_k g_k(y_k)`.
///
/// `quadrature` is the per-slot grid used for pointwise values and `D_λ`: each
/// factor is sampled on its centred window, shifted by the factor translation,
/// and taken to vanish outside it.
#[derive(Clone, Debug)]
pub struct TensorKernel {
    n: usize,
    terms: Vec<Vec<Factor>>,
    quadrature: GridSpec,
}

impl TensorKernel {
    pub fn new(terms: Vec<Vec<Factor>>, quadrature: GridSpec) -> Result<Self> {
        let n = terms.first().map(|t| t.len()).ok_or(Error::EmptySequence)?;
        if n < 2 {
            return Err(Error::InvalidArgument(format!("a multilinear kernel needs n >= 2 slots, got {n}")));
        }
        for term in &terms {
            if term.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: term.len() });
            }
            for factor in term {
                factor.check(&quadrature)?;
            }
        }
        for k in 0..n {
            let a = terms[0][k].translation();
            if terms.iter().any(|t| t[k].translation() != a) {
                return Err(Error::InvalidArgument(format!(
                    "all terms must share the translation of slot {}",
                    k + 1
                )));
            }
        }
        Ok(Self { n, terms, quadrature })
    }

    pub fn rank_one(factors: Vec<Factor>, quadrature: GridSpec) -> Result<Self> {
        Self::new(vec![factors], quadrature)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.quadrature.dimension()
    }

    pub fn terms(&self) -> &[Vec<Factor>] {
        &self.terms
    }

    pub fn quadrature(&self) -> &GridSpec {
        &self.quadrature
    }

    /// Annulus containing the joint spectrum `|(ξ_1, …, ξ_n)|` of every term.
    pub fn joint_support(&self) -> Result<Annulus> {
        let mut inner = f64::INFINITY;
        let mut outer: f64 = 0.0;
        for term in &self.terms {
            let mut lo = 0.0;
            let mut hi = 0.0;
            for f in term {
                let a = f.support()?;
                lo += a.inner * a.inner;
                hi += a.outer * a.outer;
            }
            inner = inner.min(lo.sqrt());
            outer = outer.max(hi.sqrt());
        }
        Ok(Annulus::new(inner, outer))
    }

    /// Whether the joint spectrum sits inside `1/2 <= |ξ| <= 2`.
    pub fn is_normalized(&self) -> Result<bool> {
        let a = self.joint_support()?;
        Ok(a.inner >= 0.5 && a.outer <= 2.0)
    }

    /// Pointwise value from the band-limited interpolants of the factors.
    pub fn eval(&self, y: &[[f64; 2]]) -> Result<Complex64> {
        if y.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: y.len() });
        }
        let half = self.quadrature.period() / 2.0;
        let d = self.dimension();
        let mut total = Complex64::new(0.0, 0.0);
        for term in &self.terms {
            let mut prod = Complex64::new(1.0, 0.0);
            for (factor, yk) in term.iter().zip(y) {
                let a = factor.translation();
                let x = [yk[0] - a[0], yk[1] - a[1]];
                if x[..d].iter().any(|c| *c < -half || *c >= half) {
                    prod = Complex64::new(0.0, 0.0);
                    break;
                }
                prod *= transform(&factor.base_samples(&self.quadrature)?).eval_physical(x);
            }
            total += prod;
        }
        Ok(total)
    }

    /// Kernel of the `j`-th transpose, `1 <= j <= n`.
    pub fn transpose(&self, j: usize) -> Result<TransposedKernel> {
        if j == 0 || j > self.n {
            return Err(Error::IndexOutOfRange { index: j, len: self.n });
        }
        Ok(TransposedKernel { kernel: self.clone(), j })
    }

    fn tuple_count(&self) -> Option<usize> {
        self.quadrature.len().checked_pow(self.n as u32)
    }
}

/// `K^j(y) = K(y_1 - y_j, …, -y_j, …, y_n - y_j)`, kept as an evaluation handle.
#[derive(Clone, Debug)]
pub struct TransposedKernel {
    kernel: TensorKernel,
    j: usize,
}

impl TransposedKernel {
    pub fn index(&self) -> usize {
        self.j
    }

    pub fn kernel(&self) -> &TensorKernel {
        &self.kernel
    }

    pub fn eval(&self, y: &[[f64; 2]]) -> Result<Complex64> {
        if y.len() != self.kernel.n {
            return Err(Error::LengthMismatch { expected: self.kernel.n, got: y.len() });
        }
        let yj = y[self.j - 1];
        let z: Vec<[f64; 2]> = y
            .iter()
            .enumerate()
            .map(|(k, yk)| if k + 1 == self.j { [-yj[0], -yj[1]] } else { [yk[0] - yj[0], yk[1] - yj[1]] })
            .collect();
        self.kernel.eval(&z)
    }

    /// `D_λ(K^j)`, summed over the tuples of `K` with the weight pulled back
    /// through the shear (`y_j = -z_j`, `y_k = z_k - z_j`). Exact path only.
    pub fn d_lambda(&self, lambda: f64) -> Result<DLambda> {
        check_lambda(lambda)?;
        let j = self.j - 1;
        let value = exact_sum(&self.kernel, lambda, |z| {
            let zj = z[j];
            let mut r2 = zj[0] * zj[0] + zj[1] * zj[1];
            for (k, zk) in z.iter().enumerate() {
                if k != j {
                    r2 += (zk[0] - zj[0]).powi(2) + (zk[1] - zj[1]).powi(2);
                }
            }
            r2
        })?;
        Ok(DLambda { value, lower: value, upper: value, exact: true })
    }
}

/// `∫ |K(y)| log(e + |y|)^λ dy`, as a value with a certified bracket.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DLambda {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// `true` when every grid tuple was summed.
    pub exact: bool,
}

impl DLambda {
    pub fn relative_width(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            (self.upper - self.lower) / self.value
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

fn weight(r2: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        1.0
    } else {
        log_weight(r2.sqrt()).powf(lambda)
    }
}

struct SlotSamples {
    coords: Vec<[f64; 2]>,
    /// Per term, the factor samples of this slot.
    values: Vec<Vec<Complex64>>,
}

fn slot_samples(k: &TensorKernel) -> Result<Vec<SlotSamples>> {
    let quad = &k.quadrature;
    (0..k.n)
        .map(|slot| {
            let a = k.terms[0][slot].translation();
            let coords = (0..quad.len())
                .map(|i| {
                    let c = quad.centered_coordinate(i);
                    [c[0] + a[0], c[1] + a[1]]
                })
                .collect();
            let values = k
                .terms
                .iter()
                .map(|t| t[slot].base_samples(quad).map(|f| f.into_values()))
                .collect::<Result<_>>()?;
            Ok(SlotSamples { coords, values })
        })
        .collect()
}

/// Sum of `|K(z)| w(|y(z)|)` over all grid tuples, `r2` mapping tuple coordinates to `|y|²`.
fn exact_sum(k: &TensorKernel, lambda: f64, r2: impl Fn(&[[f64; 2]]) -> f64) -> Result<f64> {
    match k.tuple_count() {
        Some(c) if c <= EXACT_TUPLE_BUDGET => {}
        _ => {
            return Err(Error::InvalidArgument(format!(
                "exact D_lambda needs at most {EXACT_TUPLE_BUDGET} tuples, kernel has {}^{}",
                k.quadrature.len(),
                k.n
            )))
        }
    }
    let slots = slot_samples(k)?;
    let terms = k.terms.len();
    let cell = k.quadrature.cell_volume().powi(k.n as i32);
    let mut z = vec![[0.0; 2]; k.n];
    let mut partial = vec![vec![Complex64::new(1.0, 0.0); terms]; k.n + 1];
    let mut total = 0.0;
    walk(&slots, 0, &mut z, &mut partial, &mut |z, vals| {
        let v: Complex64 = vals.iter().sum();
        let m = v.norm();
        if m != 0.0 {
            total += m * weight(r2(z), lambda);
        }
    });
    Ok(total * cell)
}

fn walk(
    slots: &[SlotSamples],
    level: usize,
    z: &mut [[f64; 2]],
    partial: &mut [Vec<Complex64>],
    leaf: &mut impl FnMut(&[[f64; 2]], &[Complex64]),
) {
    if level == slots.len() {
        leaf(z, &partial[level]);
        return;
    }
    let slot = &slots[level];
    for i in 0..slot.coords.len() {
        let mut alive = false;
        for t in 0..slot.values.len() {
            let v = partial[level][t] * slot.values[t][i];
            alive |= v.re != 0.0 || v.im != 0.0;
            partial[level + 1][t] = v;
        }
        if !alive {
            continue;
        }
        z[level] = slot.coords[i];
        walk(slots, level + 1, z, partial, leaf);
    }
}

fn convolve_histograms(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = (a.len() + b.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let backward = planner.plan_fft_inverse(len);
    let mut fa: Vec<Complex64> = a.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fa.resize(len, Complex64::new(0.0, 0.0));
    let mut fb: Vec<Complex64> = b.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fb.resize(len, Complex64::new(0.0, 0.0));
    forward.process(&mut fa);
    forward.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    backward.process(&mut fa);
    fa.truncate(a.len() + b.len() - 1);
    fa.into_iter().map(|c| (c.re / len as f64).max(0.0)).collect()
}

/// Rank-1 bracket: per-slot masses binned by `|y_k|²` into bins of width `Δ`;
/// the convolved histogram places `|y|²` in `[BΔ, (B+n)Δ)`.
fn bracket(k: &TensorKernel, lambda: f64, bins: usize) -> Result<(f64, f64)> {
    let slots = slot_samples(k)?;
    let h = k.quadrature.cell_volume();
    let r2: Vec<Vec<f64>> = slots
        .iter()
        .map(|s| s.coords.iter().map(|c| c[0] * c[0] + c[1] * c[1]).collect())
        .collect();
    let top: f64 = r2.iter().map(|r| r.iter().cloned().fold(0.0, f64::max)).sum();
    let delta = if top > 0.0 { top / bins as f64 } else { 1.0 };
    let mut acc: Option<Vec<f64>> = None;
    for (slot, radii) in slots.iter().zip(&r2) {
        let mut hist = vec![0.0; bins + 1];
        for (v, r) in slot.values[0].iter().zip(radii) {
            let b = ((r / delta).floor() as usize).min(bins);
            hist[b] += v.norm() * h;
        }
        acc = Some(match acc {
            None => hist,
            Some(prev) => convolve_histograms(&prev, &hist),
        });
    }
    let hist = acc.ok_or(Error::EmptySequence)?;
    let n = k.n as f64;
    let mut lower = 0.0;
    let mut upper = 0.0;
    for (b, m) in hist.iter().enumerate() {
        if *m == 0.0 {
            continue;
        }
        lower += m * weight(b as f64 * delta, lambda);
        upper += m * weight((b as f64 + n) * delta, lambda);
    }
    Ok((lower, upper))
}

pub fn d_lambda(k: &TensorKernel, lambda: f64) -> Result<DLambda> {
    check_lambda(lambda)?;
    if matches!(k.tuple_count(), Some(c) if c <= EXACT_TUPLE_BUDGET) {
        let value = exact_sum(k, lambda, |z| z.iter().map(|c| c[0] * c[0] + c[1] * c[1]).sum())?;
        return Ok(DLambda { value, lower: value, upper: value, exact: true });
    }
    if k.terms.len() != 1 {
        return Err(Error::InvalidArgument(
            "the D_lambda bracket needs a rank-1 kernel; use a coarser quadrature grid".into(),
        ));
    }
    let mut bins = MIN_BINS;
    loop {
        let (lower, upper) = bracket(k, lambda, bins)?;
        let value = 0.5 * (lower + upper);
        let out = DLambda { value, lower, upper, exact: false };
        let width = out.relative_width();
        if width <= TARGET_BRACKET_WIDTH || bins >= MAX_BINS {
            if width > MAX_BRACKET_WIDTH {
                return Err(Error::BracketTooWide { width, value });
            }
            return Ok(out);
        }
        bins *= 2;
    }
}

fn check_fields(fs: &[SampledField], expected: usize) -> Result<GridSpec> {
    if fs.len() != expected {
        return Err(Error::LengthMismatch { expected, got: fs.len() });
    }
    let grid = *fs[0].grid();
    for f in &fs[1..] {
        grid.check_same(f.grid())?;
    }
    Ok(grid)
}

fn is_zero(f: &SampledField) -> bool {
    f.values().iter().all(|v| v.re == 0.0 && v.im == 0.0)
}

/// `Σ_ℓ Σ_terms Π_k (g_{k,ℓ} * f_k)(x)`, the diagonal of `Σ_ℓ K_ℓ * (f_1 ⊗ … ⊗ f_n)`.
pub fn apply_t(k: &TensorKernel, fs: &[SampledField], range: DyadicRange) -> Result<SampledField> {
    let grid = check_fields(fs, k.n)?;
    if grid.dimension() != k.dimension() {
        return Err(Error::GridMismatch);
    }
    let spectra: Vec<Spectrum> = fs.iter().map(transform).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for l in range.iter() {
        'terms: for term in &k.terms {
            let mut prod: Option<Vec<Complex64>> = None;
            for (factor, s) in term.iter().zip(&spectra) {
                let piece = factor.apply(s, l)?;
                if is_zero(&piece) {
                    continue 'terms;
                }
                prod = Some(match prod {
                    None => piece.into_values(),
                    Some(mut p) => {
                        p.iter_mut().zip(piece.values()).for_each(|(a, b)| *a *= b);
                        p
                    }
                });
            }
            if let Some(p) = prod {
                out.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
            }
        }
    }
    SampledField::new(grid, out)
}

/// `Λ(f_1, …, f_{n+1}) = ∫ T(f_1, …, f_n) f_{n+1}`.
pub fn lambda_form(k: &TensorKernel, fs: &[SampledField], range: DyadicRange) -> Result<Complex64> {
    check_fields(fs, k.n + 1)?;
    let t = apply_t(k, &fs[..k.n], range)?;
    Ok(t.mul(&fs[k.n])?.integral())
}

/// Slot assignment of the shifted form: `Φ_k = ψ` on the pair `(s, t)`, `φ`
/// elsewhere; slot `τ` is unshifted. Indices are 1-based over `n + 1` slots.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftedFormSpec {
    pub s: usize,
    pub t: usize,
    pub tau: usize,
    /// One shift per slot; the entry at `τ` is ignored.
    pub shifts: Vec<Vec<f64>>,
}

/// `Σ_ℓ ∫ Π_{k≠τ} (Φ_{kℓ}^{y_k} * f_k)(x) (Φ_{τℓ} * f_τ)(x) dx` over the pair's scale range.
pub fn shifted_form(fs: &[SampledField], pair: &LPPair, spec: &ShiftedFormSpec) -> Result<Complex64> {
    let slots = fs.len();
    if slots < 3 {
        return Err(Error::InvalidArgument(format!("the form needs n + 1 >= 3 fields, got {slots}")));
    }
    let grid = check_fields(fs, slots)?;
    if spec.shifts.len() != slots {
        return Err(Error::LengthMismatch { expected: slots, got: spec.shifts.len() });
    }
    for idx in [spec.s, spec.t, spec.tau] {
        if idx == 0 || idx > slots {
            return Err(Error::IndexOutOfRange { index: idx, len: slots });
        }
    }
    if spec.s == spec.t {
        return Err(Error::InvalidArgument(format!("pair ({}, {}) repeats a slot", spec.s, spec.t)));
    }
    let spectra: Vec<Spectrum> = fs.iter().map(transform).collect();
    let zero = vec![0.0; grid.dimension()];
    let mut total = Complex64::new(0.0, 0.0);
    'scales: for l in pair.scale_range.iter() {
        let mut prod: Option<SampledField> = None;
        for (k, s) in spectra.iter().enumerate() {
            let slot = k + 1;
            let profile = if slot == spec.s || slot == spec.t { pair.psi_profile() } else { pair.phi_profile() };
            let shift = if slot == spec.tau { zero.clone() } else { spec.shifts[k].clone() };
            let piece = apply_to_spectrum(s, &ShiftedDyadicOp::new(profile, l, shift))?;
            if is_zero(&piece) {
                continue 'scales;
            }
            prod = Some(match prod {
                None => piece,
                Some(p) => p.mul(&piece)?,
            });
        }
        if let Some(p) = prod {
            total += p.integral();
        }
    }
    Ok(total)
}

/// General kernel for `n = 2`, `d = 1`, sampled on a (coarse) torus grid.
/// Entry `[i1 * M + i2]` is `K(x_{i1}, x_{i2})`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledKernel2 {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl SampledKernel2 {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if grid.dimension() != 1 {
            return Err(Error::InvalidGrid("sampled bilinear kernels are one-dimensional".into()));
        }
        let m = grid.samples_per_axis();
        if values.len() != m * m {
            return Err(Error::LengthMismatch { expected: m * m, got: values.len() });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(y1, y2)` at minimum-image coordinates.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let m = grid.samples_per_axis();
        let c: Vec<f64> = (0..m).map(|i| grid.centered_coordinate(i)[0]).collect();
        let values = (0..m * m).map(|i| f(c[i / m], c[i % m])).collect();
        Self::new(grid, values)
    }

    /// Periodic samples of a two-slot tensor kernel at scale 0.
    pub fn from_tensor(k: &TensorKernel, grid: GridSpec) -> Result<Self> {
        if k.n != 2 {
            return Err(Error::InvalidArgument(format!("expected a bilinear kernel, got n = {}", k.n)));
        }
        let m = grid.samples_per_axis();
        let mut values = vec![Complex64::new(0.0, 0.0); m * m];
        for term in &k.terms {
            let g1 = term[0].torus_samples(&grid)?;
            let g2 = term[1].torus_samples(&grid)?;
            for (i1, a) in g1.values().iter().enumerate() {
                for (i2, b) in g2.values().iter().enumerate() {
                    values[i1 * m + i2] += a * b;
                }
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn at(&self, i1: i64, i2: i64) -> Complex64 {
        let m = self.grid.samples_per_axis();
        self.values[self.grid.wrap_index(i1) * m + self.grid.wrap_index(i2)]
    }

    /// `K^1[i1, i2] = K[-i1, i2 - i1]`, `K^2[i1, i2] = K[i1 - i2, -i2]`.
    pub fn transpose(&self, j: usize) -> Result<Self> {
        let m = self.grid.samples_per_axis();
        let values = match j {
            1 => (0..m * m).map(|i| {
                let (a, b) = ((i / m) as i64, (i % m) as i64);
                self.at(-a, b - a)
            }),
            2 => return self.transpose_second(),
            _ => return Err(Error::IndexOutOfRange { index: j, len: 2 }),
        }
        .collect();
        Self::new(self.grid, values)
    }

    fn transpose_second(&self) -> Result<Self> {
        let m = self.grid.samples_per_axis();
        let values = (0..m * m)
            .map(|i| {
                let (a, b) = ((i / m) as i64, (i % m) as i64);
                self.at(a - b, -b)
            })
            .collect();
        Self::new(self.grid, values)
    }

    /// `T(f1, f2)(x) = Σ_{y1, y2} K(y1, y2) f1(x - y1) f2(x - y2) h²`.
    pub fn apply(&self, f1: &SampledField, f2: &SampledField) -> Result<SampledField> {
        self.grid.check_same(f1.grid())?;
        self.grid.check_same(f2.grid())?;
        let m = self.grid.samples_per_axis();
        let h2 = self.grid.spacing().powi(2);
        let (a, b) = (f1.values(), f2.values());
        let out = (0..m)
            .map(|x| {
                let mut acc = Complex64::new(0.0, 0.0);
                for y1 in 0..m {
                    let u = a[(x + m - y1) % m];
                    if u.re == 0.0 && u.im == 0.0 {
                        continue;
                    }
                    let row = &self.values[y1 * m..(y1 + 1) * m];
                    let mut inner = Complex64::new(0.0, 0.0);
                    for (y2, k) in row.iter().enumerate() {
                        inner += k * b[(x + m - y2) % m];
                    }
                    acc += u * inner;
                }
                acc * h2
            })
            .collect();
        SampledField::new(self.grid, out)
    }

    pub fn lambda_form(&self, f1: &SampledField, f2: &SampledField, f3: &SampledField) -> Result<Complex64> {
        Ok(self.apply(f1, f2)?.mul(f3)?.integral())
    }

    /// `Λ` evaluated through the `j`-th transpose: `f_j` and `f_3` swap places.
    pub fn lambda_form_via_transpose(
        &self,
        j: usize,
        f1: &SampledField,
        f2: &SampledField,
        f3: &SampledField,
    ) -> Result<Complex64> {
        let kj = self.transpose(j)?;
        match j {
            1 => kj.lambda_form(f3, f2, f1),
            _ => kj.lambda_form(f1, f3, f2),
        }
    }

    /// `Σ |K| h²`.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() * self.grid.spacing().powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{make_counterexample_profiles, make_lowpass, make_lp_pair, REFERENCE_BETA_PLATEAU, REFERENCE_BETA_SUPPORT};
    use crate::field::{convolve, lp_norm, random_band_limited, Exponent};
    use crate::rng_stream;
    use rand::Rng;

    fn lowpass(r: f64) -> Profile {
        Profile::Lowpass(make_lowpass(r / 2.0, r).unwrap())
    }

    fn beta() -> Profile {
        make_counterexample_profiles(0.5, REFERENCE_BETA_PLATEAU, REFERENCE_BETA_SUPPORT).unwrap().beta_profile()
    }

    fn quad(m: usize, l: f64) -> GridSpec {
        GridSpec::new(1, m, l).unwrap()
    }

    #[test]
    fn d0_is_the_product_of_l1_norms() {
        let q = quad(512, 128.0);
        let k = TensorKernel::rank_one(
            vec![Factor::translated(beta(), vec![3.0]), Factor::profile(lowpass(1.0), 1)],
            q,
        )
        .unwrap();
        let d0 = d_lambda(&k, 0.0).unwrap();
        assert!(d0.exact);
        let l1 = |p: &Profile| profile_to_field(p, &q).unwrap().values().iter().map(|v| v.norm()).sum::<f64>() * q.spacing();
        let direct = l1(&beta()) * l1(&lowpass(1.0));
        assert!((d0.value - direct).abs() / direct < 1e-8);
    }

    #[test]
    fn d_lambda_is_monotone_and_bracketed() {
        let q = quad(256, 64.0);
        let k = TensorKernel::rank_one(
            vec![Factor::translated(beta(), vec![8.0]), Factor::translated(beta(), vec![8.0])],
            q,
        )
        .unwrap();
        let mut prev = 0.0;
        for lam in [0.0, 0.25, 0.5, 1.0, 2.0] {
            let exact = d_lambda(&k, lam).unwrap();
            assert!(exact.value >= prev);
            prev = exact.value;
            let (lo, hi) = bracket(&k, lam, 1 << 14).unwrap();
            let tol = 1e-12 * exact.value;
            assert!(lo <= exact.value + tol && exact.value <= hi + tol, "{lo} {} {hi}", exact.value);
        }
    }

    #[test]
    fn unit_bump_weight_bounds() {
        // η̂ of radius 4 has η ≥ 0 up to tails; the bound uses the quadrature window as R
        let q = quad(1024, 32.0);
        let p = lowpass(4.0);
        let k = TensorKernel::rank_one(vec![Factor::profile(p, 1), Factor::profile(p, 1)], q).unwrap();
        let mass = d_lambda(&k, 0.0).unwrap().value;
        let r = (2.0f64).sqrt() * 16.0;
        for lam in [0.5, 1.0, 2.0] {
            let v = d_lambda(&k, lam).unwrap().value / mass;
            assert!(v >= 1.0 && v <= log_weight(r).powf(lam));
        }
    }

    #[test]
    fn bracket_path_for_large_products() {
        let q = quad(1024, 256.0);
        let k = TensorKernel::rank_one(
            vec![
                Factor::translated(beta(), vec![64.0]),
                Factor::translated(beta(), vec![64.0]),
                Factor::profile(lowpass(0.5), 1),
            ],
            q,
        )
        .unwrap();
        let d = d_lambda(&k, 0.5).unwrap();
        assert!(!d.exact);
        assert!(d.relative_width() <= MAX_BRACKET_WIDTH);
        assert!(d.lower <= d.value && d.value <= d.upper);
        let d0 = d_lambda(&k, 0.0).unwrap();
        assert_eq!(d0.lower, d0.upper);
    }

    #[test]
    fn transpose_pointwise_and_mass() {
        let q = quad(256, 64.0);
        let k = TensorKernel::rank_one(
            vec![Factor::translated(beta(), vec![4.0]), Factor::profile(lowpass(1.0), 1)],
            q,
        )
        .unwrap();
        let mut rng = rng_stream(5, 0);
        let k1 = k.transpose(1).unwrap();
        for _ in 0..20 {
            let y1: f64 = rng.random_range(-10.0..10.0);
            let y2: f64 = rng.random_range(-10.0..10.0);
            let want = k.eval(&[[-y1, 0.0], [y2 - y1, 0.0]]).unwrap();
            assert!((k1.eval(&[[y1, 0.0], [y2, 0.0]]).unwrap() - want).norm() < 1e-14);
        }
        let d0 = d_lambda(&k, 0.0).unwrap().value;
        for j in 1..=2 {
            let t = k.transpose(j).unwrap().d_lambda(0.0).unwrap().value;
            assert!((t - d0).abs() / d0 < 1e-12);
        }
        assert!(k.transpose(3).is_err());
    }

    #[test]
    fn single_scale_matches_direct_convolutions() {
        let grid = quad(256, 32.0);
        let mut rng = rng_stream(1, 0);
        let fs: Vec<SampledField> =
            (0..2).map(|_| random_band_limited(grid, Annulus::ball(3.0), false, &mut rng).unwrap()).collect();
        let k = TensorKernel::rank_one(
            vec![Factor::profile(lowpass(2.0), 1), Factor::translated(beta(), vec![0.75])],
            grid,
        )
        .unwrap();
        let out = apply_t(&k, &fs, ScaleRange::new(0, 0).unwrap()).unwrap();
        let g1 = profile_to_field(&lowpass(2.0), &grid).unwrap();
        let g2 = phase_shift(&profile_to_field(&beta(), &grid).unwrap(), &[0.75]).unwrap();
        let want = convolve(&g1, &fs[0]).unwrap().mul(&convolve(&g2, &fs[1]).unwrap()).unwrap();
        assert!(out.max_abs_diff(&want).unwrap() < 1e-12 * want.max_modulus().max(1.0));
        // the general sampled kernel agrees, and so does every transpose of Λ
        let sk = SampledKernel2::from_tensor(&k, grid).unwrap();
        let direct = sk.apply(&fs[0], &fs[1]).unwrap();
        assert!(direct.max_abs_diff(&out).unwrap() < 1e-10 * want.max_modulus().max(1.0));
        let f3 = random_band_limited(grid, Annulus::ball(3.0), true, &mut rng).unwrap();
        let lam = lambda_form(&k, &[fs[0].clone(), fs[1].clone(), f3.clone()], ScaleRange::new(0, 0).unwrap()).unwrap();
        for j in 1..=2 {
            let via = sk.lambda_form_via_transpose(j, &fs[0], &fs[1], &f3).unwrap();
            assert!((via - lam).norm() <= 1e-10 * lam.norm());
        }
        assert!((sk.transpose(1).unwrap().l1_norm() - sk.l1_norm()).abs() < 1e-12 * sk.l1_norm());
    }

    #[test]
    fn multilinear_and_zero_dual() {
        let grid = quad(512, 32.0);
        let mut rng = rng_stream(2, 0);
        let band = Annulus::new(1.0, 6.0);
        let fs: Vec<SampledField> =
            (0..3).map(|_| random_band_limited(grid, band, false, &mut rng).unwrap()).collect();
        let pair = make_lp_pair(ScaleRange::new(-1, 3).unwrap()).unwrap();
        let k = TensorKernel::rank_one(
            vec![Factor::profile(pair.psi_profile(), 1), Factor::profile(pair.psi_profile(), 1)],
            grid,
        )
        .unwrap();
        let range = ScaleRange::new(-1, 3).unwrap();
        let base = apply_t(&k, &fs[..2], range).unwrap();
        let c = Complex64::new(0.7, -1.3);
        let scaled = apply_t(&k, &[fs[0].scale(c), fs[1].clone()], range).unwrap();
        assert!(scaled.max_abs_diff(&base.scale(c)).unwrap() < 1e-12 * base.max_modulus().max(1.0));
        let sum = apply_t(&k, &[fs[0].add(&fs[2]).unwrap(), fs[1].clone()], range).unwrap();
        let parts = base.add(&apply_t(&k, &[fs[2].clone(), fs[1].clone()], range).unwrap()).unwrap();
        assert!(sum.max_abs_diff(&parts).unwrap() < 1e-12 * parts.max_modulus().max(1.0));
        let zero = SampledField::zeros(grid);
        let l = lambda_form(&k, &[fs[0].clone(), fs[1].clone(), zero], range).unwrap();
        assert_eq!(l, Complex64::new(0.0, 0.0));
        let f3 = fs[2].clone();
        let l = lambda_form(&k, &[fs[0].clone(), fs[1].clone(), f3.clone()], range).unwrap();
        let pointwise: Complex64 =
            base.values().iter().zip(f3.values()).map(|(a, b)| a * b).sum::<Complex64>() * grid.spacing();
        assert!((l - pointwise).norm() < 1e-12 * pointwise.norm().max(1.0));
    }

    #[test]
    fn real_inputs_give_real_form() {
        let grid = quad(512, 32.0);
        let mut rng = rng_stream(3, 0);
        let band = Annulus::new(0.5, 6.0);
        let fs: Vec<SampledField> =
            (0..3).map(|_| random_band_limited(grid, band, true, &mut rng).unwrap()).collect();
        let pair = make_lp_pair(ScaleRange::new(-2, 3).unwrap()).unwrap();
        let k = TensorKernel::rank_one(
            vec![Factor::profile(pair.psi_profile(), 1), Factor::profile(pair.phi_profile(), 1)],
            grid,
        )
        .unwrap();
        let l = lambda_form(&k, &fs, pair.scale_range).unwrap();
        assert!(l.im.abs() < 1e-10 * l.norm().max(1.0));
    }

    #[test]
    fn nyquist_names_the_scale() {
        let grid = quad(64, 16.0);
        let mut rng = rng_stream(4, 0);
        let fs: Vec<SampledField> =
            (0..2).map(|_| random_band_limited(grid, Annulus::new(0.5, 1.5), false, &mut rng).unwrap()).collect();
        let k = TensorKernel::rank_one(vec![Factor::profile(lowpass(1.0), 1), Factor::profile(lowpass(1.0), 1)], grid)
            .unwrap();
        assert!(apply_t(&k, &fs, ScaleRange::new(0, 1).unwrap()).is_ok());
        // lowpass passes the whole input spectrum at every scale, so Nyquist is never hit;
        // with an unbounded input certificate the dilated profile itself is checked
        let raw: Vec<SampledField> = fs.iter().map(|f| SampledField::new(grid, f.values().to_vec()).unwrap()).collect();
        match apply_t(&k, &raw, ScaleRange::new(0, 3).unwrap()) {
            Err(Error::Nyquist { scale, .. }) => assert_eq!(scale, 1),
            other => panic!("expected Nyquist error, got {other:?}"),
        }
    }

    #[test]
    fn shifted_form_support_algebra_and_single_scale() {
        let grid = quad(1024, 64.0);
        let pair = make_lp_pair(ScaleRange::new(0, 3).unwrap()).unwrap();
        let mut rng = rng_stream(6, 0);
        // slot 1 lives in octave ~1, slot 2 in octave ~6: no scale sees both through ψ
        let f1 = random_band_limited(grid, Annulus::new(0.9, 1.1), false, &mut rng).unwrap();
        let f2 = random_band_limited(grid, Annulus::new(5.6, 6.4), false, &mut rng).unwrap();
        let f3 = random_band_limited(grid, Annulus::ball(0.4), false, &mut rng).unwrap();
        let spec = ShiftedFormSpec { s: 1, t: 2, tau: 3, shifts: vec![vec![0.0]; 3] };
        let v = shifted_form(&[f1.clone(), f2, f3.clone()], &pair, &spec).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));

        // only ℓ = 1 sees |ξ| = 2 through ψ
        let g1 = random_band_limited(grid, Annulus::new(1.99, 2.01), false, &mut rng).unwrap();
        let g2 = random_band_limited(grid, Annulus::new(1.99, 2.01), false, &mut rng).unwrap();
        let spec = ShiftedFormSpec { s: 1, t: 2, tau: 1, shifts: vec![vec![0.0], vec![3.3], vec![-7.1]] };
        let v = shifted_form(&[g1.clone(), g2.clone(), f3.clone()], &pair, &spec).unwrap();
        let piece = |f: &SampledField, p: Profile, y: f64| {
            crate::lp_ops::dyadic_piece(f, &ShiftedDyadicOp::new(p, 1, vec![y])).unwrap()
        };
        let direct = piece(&g1, pair.psi_profile(), 0.0)
            .mul(&piece(&g2, pair.psi_profile(), 3.3))
            .unwrap()
            .mul(&piece(&f3, pair.phi_profile(), -7.1))
            .unwrap()
            .integral();
        assert!((v - direct).norm() < 1e-12 * direct.norm().max(1e-300));
        assert!(direct.norm() > 0.0);
        assert!(lp_norm(&g1, Exponent::Finite(2.0)).unwrap() > 0.0);
    }
}
