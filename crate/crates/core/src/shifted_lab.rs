//! Growth experiments for shifted square and maximal functions, log-exponent
//! fitting, and the exact change-of-variables identity for shifted dilates.

use num_complex::Complex64;
use rand::Rng;

use crate::calibration::{make_lowpass, make_lp_pair, profile_to_field, LPPair, Profile, ScaleRange};
use crate::error::{Error, Result};
use crate::field::{
    lp_norm, mixed_norm, phase_shift, random_band_limited, transform, Annulus, Exponent, GridSpec,
    MixedNormSpec, SampledField, Spectrum,
};
use crate::lp_ops::{maximal_function, square_function};
use crate::report::{Check, ExperimentReport, Table};
use crate::rng_stream;

/// `2^{ℓd} g(2^ℓ x)` for `ℓ >= 0`, exact on the torus: coefficient `k` moves to `2^ℓ k`
/// and picks up `2^{ℓd}` from the `2^{ℓd}` folded periods.
pub fn dyadic_dilate(g: &SampledField, scale: i32) -> Result<SampledField> {
    if scale < 0 {
        return Err(Error::InvalidArgument(format!(
            "dilation 2^{scale} stretches the period; only scales >= 0 stay periodic"
        )));
    }
    let grid = *g.grid();
    let factor = 1i64 << scale;
    let half = grid.samples_per_axis() as i64 / 2;
    let mass = (factor as f64).powi(grid.dimension() as i32);
    let source = transform(g);
    let mut out = Spectrum::from_fn(grid, |_| Complex64::new(0.0, 0.0));
    for (i, c) in source.coefficients().iter().enumerate() {
        if c.re == 0.0 && c.im == 0.0 {
            continue;
        }
        let k = grid.frequency_indices(i);
        let target = [k[0] * factor, k[1] * factor];
        if target.iter().any(|t| t.abs() >= half) {
            return Err(Error::Nyquist {
                scale,
                radius: (target[0] as f64).hypot(target[1] as f64) / grid.period(),
                nyquist: grid.nyquist(),
            });
        }
        let a0 = grid.wrap_index(target[0]);
        let a1 = if grid.dimension() == 2 { grid.wrap_index(target[1]) } else { 0 };
        out.coefficients_mut()[grid.flat_index([a0, a1])] = c * mass;
    }
    let f = 2f64.powi(scale);
    let mut field = crate::field::inverse(&out);
    field.set_support(g.support().map(|a| Annulus::new(a.inner * f, a.outer * f)));
    Ok(field)
}

/// Both sides of the change-of-variables identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovOutcome {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs| / lhs`, or the absolute difference when `lhs = 0`.
    pub discrepancy: f64,
    pub absolute: bool,
}

/// Compares `‖{Π_k g_{kℓ}^{y_k}}‖` with `‖{g_{k₀ℓ} Π_{k≠k₀} g_{kℓ}^{y_k - y_{k₀}}}‖` in `L_p(ℓ_p)`.
/// `k0` is 1-based.
pub fn change_of_variables_check(
    gs: &[SampledField],
    ys: &[Vec<f64>],
    k0: usize,
    range: ScaleRange,
    p: Exponent,
) -> Result<CovOutcome> {
    let first = gs.first().ok_or(Error::EmptySequence)?;
    let grid = *first.grid();
    if ys.len() != gs.len() {
        return Err(Error::LengthMismatch { expected: gs.len(), got: ys.len() });
    }
    if k0 == 0 || k0 > gs.len() {
        return Err(Error::IndexOutOfRange { index: k0, len: gs.len() });
    }
    let mut band = 0.0;
    for g in gs {
        grid.check_same(g.grid())?;
        band += g
            .support()
            .ok_or_else(|| Error::Certificate("change of variables needs certified factor supports".into()))?
            .outer;
    }
    let top = band * 2f64.powi(range.max);
    if top >= grid.nyquist() {
        return Err(Error::Nyquist { scale: range.max, radius: top, nyquist: grid.nyquist() });
    }
    let anchor = &ys[k0 - 1];
    let mut lhs_seq = Vec::with_capacity(range.len());
    let mut rhs_seq = Vec::with_capacity(range.len());
    for l in range.iter() {
        let s = 2f64.powi(-l);
        let mut lhs = SampledField::constant(grid, Complex64::new(1.0, 0.0));
        let mut rhs = lhs.clone();
        for (k, (g, y)) in gs.iter().zip(ys).enumerate() {
            let dil = dyadic_dilate(g, l)?;
            let moved: Vec<f64> = y.iter().map(|v| v * s).collect();
            lhs = lhs.mul(&phase_shift(&dil, &moved)?)?;
            let rel = if k + 1 == k0 {
                dil
            } else {
                let r: Vec<f64> = y.iter().zip(anchor).map(|(a, b)| (a - b) * s).collect();
                phase_shift(&dil, &r)?
            };
            rhs = rhs.mul(&rel)?;
        }
        lhs_seq.push(lhs);
        rhs_seq.push(rhs);
    }
    let spec = MixedNormSpec { outer_p: p, inner_q: p };
    let lhs = mixed_norm(&lhs_seq, spec)?;
    let rhs = mixed_norm(&rhs_seq, spec)?;
    let diff = (lhs - rhs).abs();
    Ok(if lhs == 0.0 {
        CovOutcome { lhs, rhs, discrepancy: diff, absolute: true }
    } else {
        CovOutcome { lhs, rhs, discrepancy: diff / lhs, absolute: false }
    })
}

/// A random change-of-variables configuration: complex band-limited factors and real shifts.
#[derive(Clone, Debug)]
pub struct CovCase {
    pub gs: Vec<SampledField>,
    pub ys: Vec<Vec<f64>>,
    pub k0: usize,
}

pub fn random_cov_case<R: Rng + ?Sized>(
    grid: GridSpec,
    m: usize,
    band: f64,
    shift_bound: f64,
    rng: &mut R,
) -> Result<CovCase> {
    let mut gs = Vec::with_capacity(m);
    let mut ys = Vec::with_capacity(m);
    for _ in 0..m {
        let mut g = random_band_limited(grid, Annulus::ball(band), false, rng)?;
        // offset away from zero keeps |Π g|^p smooth for odd p
        let lift = SampledField::constant(grid, Complex64::new(2.0 * g.max_modulus(), 0.0));
        let support = g.support();
        g = g.add(&lift)?;
        g.set_support(support);
        gs.push(g);
        ys.push((0..grid.dimension()).map(|_| rng.random_range(-shift_bound..shift_bound)).collect());
    }
    let k0 = rng.random_range(1..=m);
    Ok(CovCase { gs, ys, k0 })
}

/// Least-squares fit of `log ratio` against `log log(e + |y|)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub exponent: f64,
    pub intercept: f64,
    /// RMS of the fit residuals.
    pub residual: f64,
    pub pairs: Vec<(f64, f64)>,
}

pub fn log_weight(y: f64) -> f64 {
    (std::f64::consts::E + y.abs()).ln()
}

pub fn fit_log_exponent(pairs: &[(f64, f64)]) -> Result<FitResult> {
    if pairs.len() < 4 {
        return Err(Error::Degenerate(format!("need at least 4 (|y|, ratio) pairs, got {}", pairs.len())));
    }
    if let Some(&(y, r)) = pairs.iter().find(|(y, r)| !(r.is_finite() && *r > 0.0 && y.is_finite())) {
        return Err(Error::Degenerate(format!("invalid pair (|y| = {y}, ratio = {r})")));
    }
    let lo = pairs.iter().map(|p| p.0.abs()).fold(f64::INFINITY, f64::min);
    let hi = pairs.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    if !(lo > 0.0 && hi / lo >= 8.0) {
        return Err(Error::Degenerate(format!("|y| spans [{lo}, {hi}], fewer than 3 octaves")));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| log_weight(p.0).ln()).collect();
    let zs: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let (exponent, intercept, residual) = least_squares(&xs, &zs)?;
    Ok(FitResult { exponent, intercept, residual, pairs: pairs.to_vec() })
}

/// Slope, intercept and RMS residual of the least-squares line `z ≈ a x + b`.
pub(crate) fn least_squares(xs: &[f64], zs: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let mz = zs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("abscissas are all equal".into()));
    }
    let sxz: f64 = xs.iter().zip(zs).map(|(x, z)| (x - mx) * (z - mz)).sum();
    let slope = sxz / sxx;
    let intercept = mz - slope * mx;
    let residual = (xs.iter().zip(zs).map(|(x, z)| (z - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok((slope, intercept, residual))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowthKind {
    ShiftedSquare,
    ShiftedMax,
}

impl GrowthKind {
    pub fn name(&self) -> &'static str {
        match self {
            GrowthKind::ShiftedSquare => "shifted-square",
            GrowthKind::ShiftedMax => "shifted-max",
        }
    }

    /// `|1/2 - 1/p|` for the square function, `1/p` for the maximal function.
    pub fn predicted_exponent(&self, p: Exponent) -> f64 {
        match self {
            GrowthKind::ShiftedSquare => (0.5 - p.reciprocal()).abs(),
            GrowthKind::ShiftedMax => p.reciprocal(),
        }
    }
}

/// Test inputs: real random band-limited fields plus an optional low-frequency bump.
#[derive(Clone, Debug, PartialEq)]
pub struct BankSpec {
    pub random_fields: usize,
    pub random_band: f64,
    /// Support radius `ρ` of an η-type bump centred at the origin.
    pub bump_radius: Option<f64>,
    pub seed: u64,
}

impl BankSpec {
    fn feature_width(&self) -> f64 {
        let r = self.bump_radius.unwrap_or(self.random_band).min(self.random_band);
        1.0 / r
    }
}

pub fn build_bank(grid: GridSpec, spec: &BankSpec) -> Result<Vec<SampledField>> {
    let mut bank = Vec::new();
    if let Some(rho) = spec.bump_radius {
        bank.push(profile_to_field(&Profile::Lowpass(make_lowpass(rho / 2.0, rho)?), &grid)?);
    }
    for i in 0..spec.random_fields {
        let mut rng = rng_stream(spec.seed, i as u64);
        bank.push(random_band_limited(grid, Annulus::ball(spec.random_band), true, &mut rng)?);
    }
    if bank.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(bank)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthExperiment {
    pub kind: GrowthKind,
    pub p: Exponent,
    pub shifts: Vec<f64>,
    pub grid: GridSpec,
    pub scale_range: ScaleRange,
    pub bank: BankSpec,
    /// Allowed gap between fitted and predicted exponent.
    pub tolerance: f64,
}

fn geometric_ladder(lo: i32, hi: i32, step: i32) -> Vec<f64> {
    (lo..=hi).step_by(step as usize).map(|e| 2f64.powi(e)).collect()
}

impl GrowthExperiment {
    /// Shifted maximal function at `p = 2` on a long low-resolution torus.
    pub fn shifted_max_l2() -> Self {
        Self {
            kind: GrowthKind::ShiftedMax,
            p: Exponent::Finite(2.0),
            shifts: geometric_ladder(4, 14, 2),
            grid: GridSpec::new(1, 1 << 18, 65536.0).expect("valid grid"),
            scale_range: ScaleRange { min: 0, max: 16 },
            // a wide bump keeps the cluster of overlapping near-origin translates to about one
            bank: BankSpec { random_fields: 1, random_band: 0.25, bump_radius: Some(0.25), seed: 11 },
            tolerance: 0.15,
        }
    }

    pub fn shifted_square_l2() -> Self {
        // the bank needs content above 1/2, where the ψ scales start
        Self {
            kind: GrowthKind::ShiftedSquare,
            bank: BankSpec { random_fields: 1, random_band: 1.5, bump_radius: Some(1.5), seed: 11 },
            tolerance: 0.05,
            ..Self::shifted_max_l2()
        }
    }

    /// Shifted maximal function at `p = ∞` with grid-aligned translations.
    pub fn shifted_max_linf() -> Self {
        Self {
            kind: GrowthKind::ShiftedMax,
            p: Exponent::Infinite,
            shifts: geometric_ladder(4, 14, 2),
            grid: GridSpec::new(1, 1 << 14, 4096.0).expect("valid grid"),
            scale_range: ScaleRange { min: 4, max: 6 },
            bank: BankSpec { random_fields: 2, random_band: 1.0, bump_radius: Some(1.0), seed: 13 },
            tolerance: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shifts.is_empty() || self.shifts.windows(2).any(|w| w[0] >= w[1]) || self.shifts[0] <= 0.0 {
            return Err(Error::InvalidArgument("shift ladder must be positive and strictly increasing".into()));
        }
        let reach = self.shifts[self.shifts.len() - 1] * 2f64.powi(-self.scale_range.min);
        let margin = 4.0 * self.bank.feature_width();
        if reach + margin > self.grid.period() / 2.0 {
            return Err(Error::InvalidArgument(format!(
                "largest translation {reach} plus margin {margin} exceeds half the period {}",
                self.grid.period() / 2.0
            )));
        }
        Ok(())
    }
}

fn apply_kind(kind: GrowthKind, f: &SampledField, pair: &LPPair, y: &[f64]) -> Result<SampledField> {
    match kind {
        GrowthKind::ShiftedSquare => square_function(f, pair, y),
        GrowthKind::ShiftedMax => maximal_function(f, pair, y),
    }
}

/// Bank maximum of `‖op^y f‖_p / ‖op^0 f‖_p`; a lower bound on the operator norm ratio.
/// Returns the proxy and the number of skipped zero-denominator inputs.
pub fn operator_norm_proxy(
    kind: GrowthKind,
    p: Exponent,
    y: &[f64],
    pair: &LPPair,
    bank: &[SampledField],
) -> Result<(f64, usize)> {
    let zero = vec![0.0; y.len()];
    let denominators = bank
        .iter()
        .map(|f| lp_norm(&apply_kind(kind, f, pair, &zero)?, p))
        .collect::<Result<Vec<_>>>()?;
    proxy_with_denominators(kind, p, y, pair, bank, &denominators)
}

fn proxy_with_denominators(
    kind: GrowthKind,
    p: Exponent,
    y: &[f64],
    pair: &LPPair,
    bank: &[SampledField],
    denominators: &[f64],
) -> Result<(f64, usize)> {
    let mut best: Option<f64> = None;
    let mut skipped = 0;
    for (f, &den) in bank.iter().zip(denominators) {
        if den == 0.0 {
            skipped += 1;
            continue;
        }
        let ratio = lp_norm(&apply_kind(kind, f, pair, y)?, p)? / den;
        best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
    }
    best.map(|b| (b, skipped))
        .ok_or_else(|| Error::ZeroDenominator("every bank input has a zero Hardy estimator".into()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthOutcome {
    pub fit: FitResult,
    pub predicted: f64,
    pub baseline: f64,
    pub max_ratio: f64,
    pub report: ExperimentReport,
}

pub fn run_growth(exp: &GrowthExperiment) -> Result<GrowthOutcome> {
    exp.validate()?;
    let pair = make_lp_pair(exp.scale_range)?;
    let bank = build_bank(exp.grid, &exp.bank)?;
    let d = exp.grid.dimension();
    let zero = vec![0.0; d];
    let denominators = bank
        .iter()
        .map(|f| lp_norm(&apply_kind(exp.kind, f, &pair, &zero)?, exp.p))
        .collect::<Result<Vec<_>>>()?;
    let (baseline, _) = proxy_with_denominators(exp.kind, exp.p, &zero, &pair, &bank, &denominators)?;
    let mut pairs = Vec::with_capacity(exp.shifts.len());
    let mut skipped = 0;
    let mut table = Table::new(&["shift", "ratio"]);
    for &s in &exp.shifts {
        let mut y = vec![0.0; d];
        y[0] = s;
        let (ratio, sk) = proxy_with_denominators(exp.kind, exp.p, &y, &pair, &bank, &denominators)?;
        skipped = skipped.max(sk);
        pairs.push((s, ratio));
        table.push(vec![s, ratio]);
    }
    let fit = fit_log_exponent(&pairs)?;
    let predicted = exp.kind.predicted_exponent(exp.p);
    let max_ratio = pairs.iter().map(|p| p.1).fold(0.0, f64::max);

    let mut report = ExperimentReport::new("growth");
    report
        .param("operator", exp.kind.name())
        .param("p", exp.p)
        .param("samples_per_axis", exp.grid.samples_per_axis())
        .param("period", exp.grid.period())
        .param("scale_min", exp.scale_range.min)
        .param("scale_max", exp.scale_range.max)
        .param("bank_random_fields", exp.bank.random_fields)
        .param("bank_seed", exp.bank.seed)
        .metric("fitted_exponent", fit.exponent)
        .metric("fit_residual", fit.residual)
        .metric("predicted_exponent", predicted)
        .metric("exponent_gap", (fit.exponent - predicted).abs())
        .metric("baseline_ratio", baseline)
        .metric("max_ratio", max_ratio)
        .table("ratios", table);
    if let Some(rho) = exp.bank.bump_radius {
        report.param("bank_bump_radius", rho);
    }
    if skipped > 0 {
        report.note(format!("{skipped} bank inputs skipped for a zero Hardy estimator"));
    }
    if matches!(exp.p, Exponent::Infinite) && exp.kind == GrowthKind::ShiftedMax {
        let worst = pairs.iter().map(|p| (p.1 - 1.0).abs()).fold(0.0, f64::max);
        report.metric("max_deviation_from_one", worst);
        report.check(Check::at_most("ratio_equals_one", worst, exp.tolerance));
    } else {
        report.check(Check::at_most("exponent_gap", (fit.exponent - predicted).abs(), exp.tolerance));
    }
    Ok(GrowthOutcome { fit, predicted, baseline, max_ratio, report })
}
