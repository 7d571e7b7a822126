//! Shifted dyadic convolution operators and what is built from them: square and
//! maximal functions, the dyadic BMO estimator and the Peetre maximal function.

use num_complex::Complex64;

use crate::calibration::{LPPair, Profile, ScaleRange};
use crate::error::{Error, Result};
use crate::field::{
    inverse, mixed_norm, shift_phase, transform, Annulus, Exponent, GridSpec, MixedNormSpec, SampledField,
    Spectrum,
};

/// Convolution with `2^{ℓd} Φ(2^ℓ · - y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftedDyadicOp {
    pub profile: Profile,
    pub scale: i32,
    pub shift: Vec<f64>,
}

impl ShiftedDyadicOp {
    pub fn new(profile: Profile, scale: i32, shift: Vec<f64>) -> Self {
        Self { profile, scale, shift }
    }

    /// Physical translation `2^{-ℓ} y` realised by the operator.
    pub fn translation(&self) -> Vec<f64> {
        let f = 2f64.powi(-self.scale);
        self.shift.iter().map(|y| y * f).collect()
    }
}

/// Support of `Φ̂(2^{-ℓ}·) f̂`, or `None` when it is empty. Fails if it reaches Nyquist.
pub(crate) fn effective_support(
    grid: &GridSpec,
    input: Option<Annulus>,
    profile: &Profile,
    scale: i32,
) -> Result<Option<Annulus>> {
    let dilated = profile.dilated_support(scale);
    let eff = match input {
        Some(a) => match a.intersect(&dilated) {
            Some(e) => e,
            None => return Ok(None),
        },
        None => dilated,
    };
    if eff.outer >= grid.nyquist() {
        return Err(Error::Nyquist { scale, radius: eff.outer, nyquist: grid.nyquist() });
    }
    Ok(Some(eff))
}

/// Applies the operator to an already transformed field.
pub(crate) fn apply_to_spectrum(spectrum: &Spectrum, op: &ShiftedDyadicOp) -> Result<SampledField> {
    let grid = *spectrum.grid();
    if op.shift.len() != grid.dimension() {
        return Err(Error::InvalidArgument(format!(
            "shift of length {} on a {}-dimensional grid",
            op.shift.len(),
            grid.dimension()
        )));
    }
    let Some(support) = effective_support(&grid, spectrum.support(), &op.profile, op.scale)? else {
        let mut zero = SampledField::zeros(grid);
        zero.set_support(Some(Annulus::ball(0.0)));
        return Ok(zero);
    };
    let translation = op.translation();
    let shifted = translation.iter().any(|t| *t != 0.0);
    let coefficients = spectrum.coefficients();
    let out = Spectrum::from_fn(grid, |i| {
        let c = coefficients[i];
        if c.re == 0.0 && c.im == 0.0 {
            return c;
        }
        let m = op.profile.eval_dilated(grid.frequency_norm(i), op.scale);
        if m == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if shifted {
            c * m * shift_phase(&grid, &translation, i)
        } else {
            c * m
        }
    });
    Ok(inverse(&out.restrict(support)))
}

pub fn dyadic_piece(f: &SampledField, op: &ShiftedDyadicOp) -> Result<SampledField> {
    apply_to_spectrum(&transform(f), op)
}

fn shift_vector(grid: &GridSpec, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != grid.dimension() {
        return Err(Error::InvalidArgument(format!(
            "shift of length {} on a {}-dimensional grid",
            y.len(),
            grid.dimension()
        )));
    }
    Ok(y.to_vec())
}

/// `|ψ_ℓ^y * f|²` for every scale of the pair.
fn squared_pieces(f: &SampledField, pair: &LPPair, y: &[f64]) -> Result<Vec<Vec<f64>>> {
    let y = shift_vector(f.grid(), y)?;
    let spectrum = transform(f);
    pair.scale_range
        .iter()
        .map(|l| {
            let piece = apply_to_spectrum(&spectrum, &ShiftedDyadicOp::new(pair.psi_profile(), l, y.clone()))?;
            Ok(piece.values().iter().map(|v| v.norm_sqr()).collect())
        })
        .collect()
}

fn real_field(grid: GridSpec, values: Vec<f64>) -> SampledField {
    SampledField::from_parts(grid, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(), None)
}

/// `(Σ_ℓ |ψ_ℓ^y * f|²)^{1/2}` over the pair's scale range.
pub fn square_function(f: &SampledField, pair: &LPPair, y: &[f64]) -> Result<SampledField> {
    let pieces = squared_pieces(f, pair, y)?;
    let mut acc = vec![0.0; f.grid().len()];
    for p in &pieces {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    Ok(real_field(*f.grid(), acc.into_iter().map(f64::sqrt).collect()))
}

/// `sup_ℓ |φ_ℓ^y * f|` over the pair's scale range.
pub fn maximal_function(f: &SampledField, pair: &LPPair, y: &[f64]) -> Result<SampledField> {
    let y = shift_vector(f.grid(), y)?;
    let spectrum = transform(f);
    let mut acc = vec![0.0f64; f.grid().len()];
    for l in pair.scale_range.iter() {
        let piece = apply_to_spectrum(&spectrum, &ShiftedDyadicOp::new(pair.phi_profile(), l, y.clone()))?;
        for (a, v) in acc.iter_mut().zip(piece.values()) {
            *a = a.max(v.norm());
        }
    }
    Ok(real_field(*f.grid(), acc))
}

/// Grid-aligned partition of the period into cubes of side `2^{-k}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DyadicCubeSet {
    grid: GridSpec,
    scale: i32,
    cells_per_side: usize,
}

impl DyadicCubeSet {
    pub fn new(grid: GridSpec, scale: i32) -> Result<Self> {
        let side = 2f64.powi(-scale);
        let cells = side / grid.spacing();
        let count = grid.period() / side;
        let integral = |x: f64| x >= 1.0 && (x - x.round()).abs() < 1e-9;
        if !integral(cells) || !integral(count) {
            return Err(Error::InvalidArgument(format!(
                "cubes of side 2^{} do not tile the grid (spacing {}, period {})",
                -scale,
                grid.spacing(),
                grid.period()
            )));
        }
        Ok(Self { grid, scale, cells_per_side: cells.round() as usize })
    }

    /// Every scale whose cubes tile the grid, coarsest first.
    pub fn admissible_scales(grid: &GridSpec) -> Vec<i32> {
        let lo = (-grid.period().log2().floor()) as i32;
        let hi = (-grid.spacing().log2().ceil()) as i32;
        (lo..=hi).filter(|&k| DyadicCubeSet::new(*grid, k).is_ok()).collect()
    }

    pub fn scale(&self) -> i32 {
        self.scale
    }

    pub fn side(&self) -> f64 {
        2f64.powi(-self.scale)
    }

    pub fn cubes_per_axis(&self) -> usize {
        self.grid.samples_per_axis() / self.cells_per_side
    }

    pub fn len(&self) -> usize {
        self.cubes_per_axis().pow(self.grid.dimension() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the cube containing a sample.
    pub fn cube_of(&self, flat: usize) -> usize {
        let a = self.grid.axis_indices(flat);
        let c = self.cubes_per_axis();
        if self.grid.dimension() == 1 {
            a[0] / self.cells_per_side
        } else {
            (a[0] / self.cells_per_side) * c + a[1] / self.cells_per_side
        }
    }
}

/// `sup_P ((1/|P|) ∫_P Σ_{ℓ >= -log2 ℓ(P)} |ψ_ℓ * f|²)^{1/2}` over grid-aligned dyadic cubes.
pub fn bmo_norm(f: &SampledField, pair: &LPPair) -> Result<f64> {
    let grid = *f.grid();
    let zero = vec![0.0; grid.dimension()];
    let pieces = squared_pieces(f, pair, &zero)?;
    let range = pair.scale_range;
    // suffix[i] = Σ_{ℓ >= range.min + i} |ψ_ℓ * f|²
    let mut suffix = vec![vec![0.0; grid.len()]; pieces.len() + 1];
    for i in (0..pieces.len()).rev() {
        let (head, tail) = suffix.split_at_mut(i + 1);
        for ((s, next), p) in head[i].iter_mut().zip(&tail[0]).zip(&pieces[i]) {
            *s = next + p;
        }
    }
    let mut best = 0.0f64;
    for k in DyadicCubeSet::admissible_scales(&grid) {
        if k > range.max {
            continue;
        }
        let start = (k.max(range.min) - range.min) as usize;
        let cubes = DyadicCubeSet::new(grid, k)?;
        let mut sums = vec![0.0; cubes.len()];
        for (i, v) in suffix[start].iter().enumerate() {
            sums[cubes.cube_of(i)] += v;
        }
        let per_cube = (grid.len() / cubes.len()) as f64;
        for s in sums {
            best = best.max(s / per_cube);
        }
    }
    Ok(best.sqrt())
}

/// `sup_z |f(x - z)| / (1 + 2^k |z|)^σ` over grid offsets `z`, torus distance.
pub fn peetre_max(f: &SampledField, sigma: f64, k: i32) -> Result<SampledField> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma {sigma} must be positive")));
    }
    let grid = *f.grid();
    let n = grid.len();
    let moduli: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    let top = moduli.iter().cloned().fold(0.0, f64::max);
    let scale = 2f64.powi(k);
    // offsets ordered by decreasing weight so the scan can stop early
    let mut offsets: Vec<(f64, usize)> =
        (0..n).map(|z| ((1.0 + scale * grid.torus_norm(z)).powf(-sigma), z)).collect();
    offsets.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let m = grid.samples_per_axis();
    let sub = |x: usize, z: usize| -> usize {
        let a = grid.axis_indices(x);
        let b = grid.axis_indices(z);
        grid.flat_index([(a[0] + m - b[0]) % m, (a[1] + m - b[1]) % m])
    };
    let values = (0..n)
        .map(|x| {
            let mut best = 0.0f64;
            for &(w, z) in &offsets {
                if top * w <= best {
                    break;
                }
                best = best.max(moduli[sub(x, z)] * w);
            }
            Complex64::new(best, 0.0)
        })
        .collect();
    Ok(SampledField::from_parts(grid, values, None))
}

fn check_band(f: &SampledField, band_factor: f64, k: i32) -> Result<()> {
    if let Some(s) = f.support() {
        let limit = 2.0 * band_factor * 2f64.powi(k);
        if s.outer > limit {
            return Err(Error::InvalidArgument(format!(
                "support radius {} exceeds 2A 2^k = {limit}",
                s.outer
            )));
        }
    }
    Ok(())
}

/// Worst sup/inf ratio of the Peetre maximal function over the cubes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubeRatio {
    /// `f64::INFINITY` when some cube has inf 0 and sup > 0.
    pub ratio: f64,
    pub cube: usize,
}

impl CubeRatio {
    pub fn is_finite(&self) -> bool {
        self.ratio.is_finite()
    }
}

pub fn peetre_cube_ratio(
    f: &SampledField,
    sigma: f64,
    k: i32,
    band_factor: f64,
    cubes: &DyadicCubeSet,
) -> Result<CubeRatio> {
    f.grid().check_same(&cubes.grid)?;
    check_band(f, band_factor, k)?;
    let pm = peetre_max(f, sigma, k)?;
    let mut sup = vec![0.0f64; cubes.len()];
    let mut inf = vec![f64::INFINITY; cubes.len()];
    for (i, v) in pm.values().iter().enumerate() {
        let c = cubes.cube_of(i);
        sup[c] = sup[c].max(v.re);
        inf[c] = inf[c].min(v.re);
    }
    let mut worst = CubeRatio { ratio: 1.0, cube: 0 };
    for c in 0..cubes.len() {
        let r = if sup[c] == 0.0 {
            1.0
        } else if inf[c] == 0.0 {
            f64::INFINITY
        } else {
            sup[c] / inf[c]
        };
        if r > worst.ratio {
            worst = CubeRatio { ratio: r, cube: c };
        }
    }
    Ok(worst)
}

/// `‖{𝔐_{σ,2^k} f_k}‖_{L_p(ℓ_q)} / ‖{f_k}‖_{L_p(ℓ_q)}`; at least 1.
pub fn fefferman_stein_ratio(
    fs: &[SampledField],
    scales: &[i32],
    band_factor: f64,
    sigma: f64,
    spec: MixedNormSpec,
) -> Result<f64> {
    if fs.is_empty() {
        return Err(Error::EmptySequence);
    }
    if fs.len() != scales.len() {
        return Err(Error::LengthMismatch { expected: fs.len(), got: scales.len() });
    }
    let mut maxed = Vec::with_capacity(fs.len());
    for (f, &k) in fs.iter().zip(scales) {
        check_band(f, band_factor, k)?;
        maxed.push(peetre_max(f, sigma, k)?);
    }
    let den = mixed_norm(fs, spec)?;
    if den == 0.0 {
        return Err(Error::ZeroDenominator("Fefferman-Stein ratio of a zero sequence".into()));
    }
    Ok(mixed_norm(&maxed, spec)? / den)
}

/// `‖ sup_ℓ |φ_ℓ * f| ‖_p`.
pub fn hardy_norm_max(f: &SampledField, pair: &LPPair, p: Exponent) -> Result<f64> {
    let zero = vec![0.0; f.grid().dimension()];
    crate::field::lp_norm(&maximal_function(f, pair, &zero)?, p)
}

/// `‖ (Σ_ℓ |ψ_ℓ * f|²)^{1/2} ‖_p`.
pub fn hardy_norm_square(f: &SampledField, pair: &LPPair, p: Exponent) -> Result<f64> {
    let zero = vec![0.0; f.grid().dimension()];
    crate::field::lp_norm(&square_function(f, pair, &zero)?, p)
}

/// Scales `ℓ` for which `ψ̂(2^{-ℓ}·)` meets the annulus.
pub fn active_scales(support: Annulus, range: ScaleRange) -> Vec<i32> {
    range
        .iter()
        .filter(|&l| {
            let lo = 2f64.powi(l) / 2.0;
            let hi = 2f64.powi(l) * 2.0;
            support.outer > lo && support.inner < hi
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{make_lp_pair, make_lowpass};
    use crate::field::{lp_norm, phase_shift, random_band_limited, unit_phase};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn pair(min: i32, max: i32) -> LPPair {
        make_lp_pair(ScaleRange::new(min, max).unwrap()).unwrap()
    }

    #[test]
    fn plateau_passthrough_and_disjoint_support() {
        let grid = GridSpec::new(1, 1024, 16.0).unwrap();
        let mut r = rng(1);
        let f = random_band_limited(grid, Annulus::new(0.0, 3.9), false, &mut r).unwrap();
        let phi = Profile::Lowpass(make_lowpass(1.0, 2.0).unwrap());
        let piece = dyadic_piece(&f, &ShiftedDyadicOp::new(phi, 2, vec![0.0])).unwrap();
        assert!(piece.max_abs_diff(&f).unwrap() < 1e-12);
        let psi = pair(0, 3).psi_profile();
        let far = random_band_limited(grid, Annulus::new(9.0, 12.0), false, &mut r).unwrap();
        let zero = dyadic_piece(&far, &ShiftedDyadicOp::new(psi, 1, vec![0.0])).unwrap();
        assert_eq!(zero.max_modulus(), 0.0);
    }

    #[test]
    fn shift_identity() {
        let grid = GridSpec::new(1, 2048, 32.0).unwrap();
        let mut r = rng(2);
        let phi = pair(0, 3).phi_profile();
        for _ in 0..50 {
            let f = random_band_limited(grid, Annulus::ball(20.0), false, &mut r).unwrap();
            let l = r.random_range(-2..=3);
            let y = r.random_range(-50.0..50.0);
            let shifted = dyadic_piece(&f, &ShiftedDyadicOp::new(phi, l, vec![y])).unwrap();
            let plain = dyadic_piece(&f, &ShiftedDyadicOp::new(phi, l, vec![0.0])).unwrap();
            let moved = phase_shift(&plain, &[y * 2f64.powi(-l)]).unwrap();
            assert!(shifted.max_abs_diff(&moved).unwrap() < 1e-11);
        }
    }

    #[test]
    fn nyquist_is_enforced() {
        let grid = GridSpec::new(1, 64, 8.0).unwrap();
        let psi = pair(0, 3).psi_profile();
        let f = SampledField::zeros(grid);
        let err = dyadic_piece(&f, &ShiftedDyadicOp::new(psi, 2, vec![0.0])).unwrap_err();
        assert!(matches!(err, Error::Nyquist { scale: 2, .. }));
    }

    #[test]
    fn square_function_cases() {
        let grid = GridSpec::new(1, 4096, 32.0).unwrap();
        let p = pair(-2, 4);
        let zero = square_function(&SampledField::zeros(grid), &p, &[0.0]).unwrap();
        assert_eq!(zero.max_modulus(), 0.0);
        // a single exponential at |ξ| = 3 meets scales 1 and 2 only
        let f = SampledField::from_fn(grid, |x| unit_phase(3.0 * x[0])).unwrap();
        let y = [1.7];
        let sq = square_function(&f, &p, &y).unwrap();
        let direct: Vec<f64> = (0..grid.len())
            .map(|i| {
                [1, 2]
                    .iter()
                    .map(|&l| {
                        let op = ShiftedDyadicOp::new(p.psi_profile(), l, y.to_vec());
                        dyadic_piece(&f, &op).unwrap().values()[i].norm_sqr()
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .take(8)
            .collect();
        for (i, d) in direct.iter().enumerate() {
            assert!((sq.values()[i].re - d).abs() < 1e-12);
        }
    }

    #[test]
    fn square_function_l2_bounds() {
        let grid = GridSpec::new(1, 2048, 16.0).unwrap();
        let p = pair(-3, 5);
        let mut r = rng(3);
        for _ in 0..5 {
            let f = random_band_limited(grid, Annulus::new(0.25, 32.0), false, &mut r).unwrap();
            let ratio = hardy_norm_square(&f, &p, Exponent::Finite(2.0)).unwrap()
                / lp_norm(&f, Exponent::Finite(2.0)).unwrap();
            assert!(ratio >= (0.5f64).sqrt() * (1.0 - 1e-6) && ratio <= 1.0 + 1e-6, "{ratio}");
        }
    }

    #[test]
    fn maximal_function_cases() {
        let grid = GridSpec::new(1, 2048, 32.0).unwrap();
        let p = pair(-1, 3);
        let mut r = rng(4);
        let f = random_band_limited(grid, Annulus::ball(7.9), true, &mut r).unwrap();
        let m = maximal_function(&f, &p, &[0.0]).unwrap();
        for (a, b) in m.values().iter().zip(f.values()) {
            assert!(a.re >= b.norm() - 1e-10);
        }
        // 2^{-ℓ} y stays on the grid for every scale in the range
        let shifted = maximal_function(&f, &p, &[37.25]).unwrap();
        let a = lp_norm(&m, Exponent::Infinite).unwrap();
        let b = lp_norm(&shifted, Exponent::Infinite).unwrap();
        assert!((a - b).abs() <= a * 1e-10);
        assert_eq!(maximal_function(&SampledField::zeros(grid), &p, &[0.0]).unwrap().max_modulus(), 0.0);
        let doubled = maximal_function(&f.scale(Complex64::new(2.0, 0.0)), &p, &[1.0]).unwrap();
        let once = maximal_function(&f, &p, &[1.0]).unwrap();
        assert!(doubled.max_abs_diff(&once.scale(Complex64::new(2.0, 0.0))).unwrap() < 1e-12);
    }

    #[test]
    fn translation_covariance() {
        let grid = GridSpec::new(1, 1024, 32.0).unwrap();
        let p = pair(-1, 3);
        let mut r = rng(5);
        let f = random_band_limited(grid, Annulus::ball(12.0), false, &mut r).unwrap();
        let steps = 105;
        let a = steps as f64 * grid.spacing();
        let lhs = square_function(&phase_shift(&f, &[a]).unwrap(), &p, &[2.0]).unwrap();
        let base = square_function(&f, &p, &[2.0]).unwrap();
        for i in 0..grid.len() {
            let j = (i + grid.len() - steps) % grid.len();
            assert!((lhs.values()[i] - base.values()[j]).norm() < 1e-10);
        }
    }

    #[test]
    fn bmo_cases() {
        let grid = GridSpec::new(1, 1024, 32.0).unwrap();
        let p = pair(-2, 4);
        let c = SampledField::constant(grid, Complex64::new(3.0, 0.0));
        assert_eq!(bmo_norm(&c, &p).unwrap(), 0.0);
        let mut r = rng(6);
        let f = random_band_limited(grid, Annulus::new(0.3, 10.0), true, &mut r).unwrap();
        let shifted = f.add(&c).unwrap();
        let a = bmo_norm(&f, &p).unwrap();
        let b = bmo_norm(&shifted, &p).unwrap();
        assert!((a - b).abs() < 1e-10 * a.max(1.0));
    }

    #[test]
    fn bmo_single_octave_packet() {
        let grid = GridSpec::new(1, 4096, 32.0).unwrap();
        let p = pair(-2, 4);
        // exponential at |ξ| = 2: only ψ_1 is nonzero, with |ψ_1 * f| = 1 everywhere
        let f = SampledField::from_fn(grid, |x| unit_phase(2.0 * x[0])).unwrap();
        let direct = lp_norm(&square_function(&f, &p, &[0.0]).unwrap(), Exponent::Infinite).unwrap();
        let b = bmo_norm(&f, &p).unwrap();
        assert!(b >= direct / 2f64.sqrt() && b <= direct * 2f64.sqrt());
    }

    #[test]
    fn cube_tiling() {
        let grid = GridSpec::new(2, 32, 4.0).unwrap();
        let cubes = DyadicCubeSet::new(grid, 0).unwrap();
        assert_eq!(cubes.len(), 16);
        let mut counts = vec![0; cubes.len()];
        for i in 0..grid.len() {
            counts[cubes.cube_of(i)] += 1;
        }
        assert!(counts.iter().all(|&c| c == 64));
        assert!(DyadicCubeSet::new(grid, 4).is_err());
        assert_eq!(DyadicCubeSet::admissible_scales(&grid), vec![-2, -1, 0, 1, 2, 3]);
    }

    #[test]
    fn peetre_cases() {
        let grid = GridSpec::new(1, 64, 16.0).unwrap();
        let c = SampledField::constant(grid, Complex64::new(-2.0, 0.0));
        let pm = peetre_max(&c, 2.0, 0).unwrap();
        assert!(pm.values().iter().all(|v| (v.re - 2.0).abs() < 1e-15));
        let mut spike = vec![Complex64::new(0.0, 0.0); grid.len()];
        spike[20] = Complex64::new(1.0, 0.0);
        let spike = SampledField::new(grid, spike).unwrap();
        let pm = peetre_max(&spike, 2.0, 0).unwrap();
        for step in 0..10 {
            let t = step as f64 * grid.spacing();
            let want = 1.0 / (1.0 + t).powi(2);
            assert!((pm.values()[20 + step].re - want).abs() < 1e-14);
        }
        let mut r = rng(7);
        let f = random_band_limited(grid, Annulus::ball(1.0), false, &mut r).unwrap();
        let pm = peetre_max(&f, 2.0, 1).unwrap();
        for (a, b) in pm.values().iter().zip(f.values()) {
            assert!(a.re >= b.norm() && a.re <= f.max_modulus());
        }
    }

    #[test]
    fn cube_ratio_and_fs() {
        let grid = GridSpec::new(1, 64, 16.0).unwrap();
        let cubes = DyadicCubeSet::new(grid, 0).unwrap();
        let c = SampledField::constant(grid, Complex64::new(1.0, 0.0));
        assert_eq!(peetre_cube_ratio(&c, 2.0, 0, 1.0, &cubes).unwrap().ratio, 1.0);
        let mut spikes = vec![Complex64::new(0.0, 0.0); grid.len()];
        for i in (0..grid.len()).step_by(9) {
            spikes[i] = Complex64::new(1.0 + i as f64 / 64.0, 0.0);
        }
        let spikes = SampledField::new(grid, spikes).unwrap();
        let ratio = peetre_cube_ratio(&spikes, 2.0, 0, 1.0, &cubes).unwrap();
        assert!(ratio.ratio < 4.0);
        let spec = MixedNormSpec { outer_p: Exponent::Finite(2.0), inner_q: Exponent::Finite(2.0) };
        assert!((fefferman_stein_ratio(std::slice::from_ref(&c), &[0], 1.0, 2.0, spec).unwrap() - 1.0).abs() < 1e-15);
        assert!(fefferman_stein_ratio(&[SampledField::zeros(grid)], &[0], 1.0, 2.0, spec).is_err());
        let mut r = rng(8);
        let f = random_band_limited(grid, Annulus::ball(1.0), false, &mut r).unwrap();
        assert!(peetre_cube_ratio(&f, 2.0, -2, 1.0, &cubes).is_err());
    }

    #[test]
    fn active_scale_selection() {
        let s = active_scales(Annulus::new(3.0, 3.5), ScaleRange::new(-2, 6).unwrap());
        assert_eq!(s, vec![1, 2]);
    }
}
