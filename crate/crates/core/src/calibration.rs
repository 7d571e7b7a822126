//! Smooth Fourier-side profiles with hard supports: low-pass bumps, the
//! telescoped Littlewood-Paley pair (φ̂, ψ̂) and the annular β̂ used by the
//! counterexample.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{inverse, Annulus, GridSpec, SampledField, Spectrum};

/// `e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})` on `(0, 1)`, clamped to 0 and 1 outside.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let x = 1.0 / t - 1.0 / (1.0 - t);
    if x > 700.0 {
        0.0
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Radial low-pass: 1 on `|ξ| <= r1`, 0 on `|ξ| >= r2`, smooth monotone in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub plateau_radius: f64,
    pub support_radius: f64,
}

impl RadialProfile {
    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.plateau_radius {
            1.0
        } else if r >= self.support_radius {
            0.0
        } else {
            1.0 - smooth_step((r - self.plateau_radius) / (self.support_radius - self.plateau_radius))
        }
    }
}

pub fn make_lowpass(r1: f64, r2: f64) -> Result<RadialProfile> {
    if !(r1 > 0.0 && r1.is_finite() && r2.is_finite() && r1 < r2) {
        return Err(Error::InvalidProfile(format!("need 0 < r1 < r2, got r1 = {r1}, r2 = {r2}")));
    }
    Ok(RadialProfile { plateau_radius: r1, support_radius: r2 })
}

/// Annular bump: 1 on `plateau`, 0 off `support`, product of a rising and a falling ramp.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnularProfile {
    pub plateau: (f64, f64),
    pub support: (f64, f64),
}

impl AnnularProfile {
    pub fn new(plateau: (f64, f64), support: (f64, f64)) -> Result<Self> {
        let ok = support.0 > 0.0 && support.0 < plateau.0 && plateau.0 <= plateau.1 && plateau.1 < support.1;
        if !ok || !support.1.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "annulus needs 0 < s1 < p1 <= p2 < s2, got plateau {plateau:?}, support {support:?}"
            )));
        }
        Ok(Self { plateau, support })
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.support.0 || r >= self.support.1 {
            return 0.0;
        }
        let rise = smooth_step((r - self.support.0) / (self.plateau.0 - self.support.0));
        let fall = 1.0 - smooth_step((r - self.plateau.1) / (self.support.1 - self.plateau.1));
        rise * fall
    }
}

/// Any radial Fourier multiplier profile used by the operators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Lowpass(RadialProfile),
    /// `φ̂(ξ) - φ̂(2ξ)` for the contained low-pass `φ̂`.
    Octave(RadialProfile),
    Band(AnnularProfile),
}

impl Profile {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Profile::Lowpass(p) => p.eval(r),
            Profile::Octave(p) => p.eval(r) - p.eval(2.0 * r),
            Profile::Band(b) => b.eval(r),
        }
    }

    /// Closed annulus outside of which the profile vanishes identically.
    pub fn support(&self) -> Annulus {
        match self {
            Profile::Lowpass(p) => Annulus::ball(p.support_radius),
            Profile::Octave(p) => Annulus::new(p.plateau_radius / 2.0, p.support_radius),
            Profile::Band(b) => Annulus::new(b.support.0, b.support.1),
        }
    }

    /// `profile(2^{-scale} ξ)` at a frequency of modulus `r`.
    pub fn eval_dilated(&self, r: f64, scale: i32) -> f64 {
        self.eval(r * 2f64.powi(-scale))
    }

    /// Support of `profile(2^{-scale} ·)`.
    pub fn dilated_support(&self, scale: i32) -> Annulus {
        let s = self.support();
        let f = 2f64.powi(scale);
        Annulus::new(s.inner * f, s.outer * f)
    }

    pub fn value_at_origin(&self) -> f64 {
        self.eval(0.0)
    }
}

/// Inclusive dyadic scale interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleRange {
    pub min: i32,
    pub max: i32,
}

impl ScaleRange {
    pub fn new(min: i32, max: i32) -> Result<Self> {
        if min > max {
            return Err(Error::InvalidArgument(format!("empty scale range [{min}, {max}]")));
        }
        Ok(Self { min, max })
    }

    pub fn iter(&self) -> impl Iterator<Item = i32> {
        self.min..=self.max
    }

    pub fn len(&self) -> usize {
        (self.max - self.min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Littlewood-Paley pair with `ψ̂(ξ) = φ̂(ξ) - φ̂(2ξ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LPPair {
    pub phi: RadialProfile,
    pub scale_range: ScaleRange,
}

impl LPPair {
    pub fn phi_profile(&self) -> Profile {
        Profile::Lowpass(self.phi)
    }

    pub fn psi_profile(&self) -> Profile {
        Profile::Octave(self.phi)
    }

    pub fn phi_hat(&self, r: f64) -> f64 {
        self.phi.eval(r)
    }

    pub fn psi_hat(&self, r: f64) -> f64 {
        self.psi_profile().eval(r)
    }

    /// `Σ_{ℓ in range} ψ̂(2^{-ℓ} ξ)`, summed term by term.
    pub fn partition_sum(&self, r: f64) -> f64 {
        self.scale_range.iter().map(|l| self.psi_profile().eval_dilated(r, l)).sum()
    }

    /// Frequencies where the partition sum equals 1: `2^{min+1} <= |ξ| <= 2^max`.
    pub fn covered(&self) -> Annulus {
        Annulus::new(2f64.powi(self.scale_range.min + 1), 2f64.powi(self.scale_range.max))
    }
}

pub fn make_lp_pair(scale_range: ScaleRange) -> Result<LPPair> {
    if scale_range.min >= scale_range.max {
        return Err(Error::InvalidArgument(format!(
            "scale range [{}, {}] needs min < max",
            scale_range.min, scale_range.max
        )));
    }
    Ok(LPPair { phi: make_lowpass(1.0, 2.0)?, scale_range })
}

/// η̂ and β̂ of the sharpness construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleProfiles {
    pub eta: RadialProfile,
    pub beta: AnnularProfile,
}

impl CounterexampleProfiles {
    pub fn eta_profile(&self) -> Profile {
        Profile::Lowpass(self.eta)
    }

    pub fn beta_profile(&self) -> Profile {
        Profile::Band(self.beta)
    }
}

pub const REFERENCE_ETA_RADIUS: f64 = 1.0 / 100.0;
pub const REFERENCE_BETA_PLATEAU: (f64, f64) = (20.0 / 21.0, 21.0 / 20.0);
pub const REFERENCE_BETA_SUPPORT: (f64, f64) = (10.0 / 11.0, 11.0 / 10.0);

/// η̂ has plateau `ρ/2` and support `ρ`; β̂ is 1 on the plateau annulus.
pub fn make_counterexample_profiles(
    eta_radius: f64,
    beta_plateau: (f64, f64),
    beta_support: (f64, f64),
) -> Result<CounterexampleProfiles> {
    if !(eta_radius > 0.0 && eta_radius.is_finite()) {
        return Err(Error::InvalidProfile(format!("eta radius {eta_radius} must be positive")));
    }
    let beta = AnnularProfile::new(beta_plateau, beta_support)?;
    if !(beta_plateau.0 <= 1.0 && 1.0 <= beta_plateau.1) {
        return Err(Error::InvalidProfile(format!(
            "beta plateau {beta_plateau:?} must contain |xi| = 1"
        )));
    }
    Ok(CounterexampleProfiles { eta: make_lowpass(eta_radius / 2.0, eta_radius)?, beta })
}

pub fn reference_counterexample_profiles() -> CounterexampleProfiles {
    make_counterexample_profiles(REFERENCE_ETA_RADIUS, REFERENCE_BETA_PLATEAU, REFERENCE_BETA_SUPPORT)
        .expect("reference values are admissible")
}

fn check_nyquist(profile: &Profile, grid: &GridSpec, scale: i32) -> Result<Annulus> {
    let support = profile.dilated_support(scale);
    if support.outer >= grid.nyquist() {
        return Err(Error::Nyquist { scale, radius: support.outer, nyquist: grid.nyquist() });
    }
    Ok(support)
}

/// Samples of `profile(2^{-scale} ξ)` at the grid frequencies, with support certificate.
pub fn profile_spectrum(profile: &Profile, grid: &GridSpec, scale: i32) -> Result<Spectrum> {
    let support = check_nyquist(profile, grid, scale)?;
    let s = Spectrum::from_fn(*grid, |i| Complex64::new(profile.eval_dilated(grid.frequency_norm(i), scale), 0.0));
    s.with_certificate(support)
}

/// Physical-space function whose transform is the sampled profile; real by symmetry.
pub fn profile_to_field(profile: &Profile, grid: &GridSpec) -> Result<SampledField> {
    let mut f = inverse(&profile_spectrum(profile, grid, 0)?);
    let values: Vec<Complex64> = f.values().iter().map(|v| Complex64::new(v.re, 0.0)).collect();
    let support = f.support();
    f = SampledField::new(*grid, values)?;
    f.set_support(support);
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::transform;

    #[test]
    fn smooth_step_shape() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(0.0), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        for i in 1..100 {
            let t = i as f64 / 100.0;
            assert!((smooth_step(t) + smooth_step(1.0 - t) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn lowpass_examples() {
        let p = make_lowpass(1.5, 3.0).unwrap();
        assert_eq!(p.eval(0.75), 1.0);
        assert_eq!(p.eval(6.0), 0.0);
        let mid = p.eval(2.25);
        assert!(mid > 0.0 && mid < 1.0);
        let mut prev = 1.0;
        for i in 0..1000 {
            let r = 1.5 + 1.5 * i as f64 / 999.0;
            let v = p.eval(r);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
        assert!(make_lowpass(2.0, 2.0).is_err());
        assert!(make_lowpass(3.0, 2.0).is_err());
    }

    #[test]
    fn lp_pair_examples() {
        let pair = make_lp_pair(ScaleRange::new(-3, 3).unwrap()).unwrap();
        assert_eq!(pair.psi_hat(0.25), 0.0);
        assert_eq!(pair.psi_hat(4.0), 0.0);
        assert!((pair.partition_sum(1.0) - 1.0).abs() < 1e-14);
        assert!(make_lp_pair(ScaleRange::new(2, 2).unwrap()).is_err());
    }

    #[test]
    fn telescoping_on_grid() {
        let pair = make_lp_pair(ScaleRange::new(-2, 5).unwrap()).unwrap();
        let grid = GridSpec::new(2, 128, 4.0).unwrap();
        let cover = pair.covered();
        let mut checked = 0;
        for i in 0..grid.len() {
            let r = grid.frequency_norm(i);
            if cover.contains(r) {
                assert!((pair.partition_sum(r) - 1.0).abs() < 1e-12);
                checked += 1;
            }
            let nonzero = pair.scale_range.iter().filter(|&l| pair.psi_profile().eval_dilated(r, l) != 0.0).count();
            assert!(nonzero <= 2);
        }
        assert!(checked > 1000);
    }

    #[test]
    fn counterexample_defaults() {
        let reference = reference_counterexample_profiles();
        assert_eq!(reference.beta.eval(1.0), 1.0);
        assert_eq!(reference.eta.eval(1.0 / 200.0), 1.0);
        assert_eq!(reference.eta.eval(0.0), 1.0);
        let desk = make_counterexample_profiles(0.125, REFERENCE_BETA_PLATEAU, REFERENCE_BETA_SUPPORT).unwrap();
        assert_eq!(desk.eta.eval(0.25), 0.0);
        assert!(make_counterexample_profiles(0.1, (0.9, 1.0), (0.95, 1.1)).is_err());
        assert!(make_counterexample_profiles(-1.0, REFERENCE_BETA_PLATEAU, REFERENCE_BETA_SUPPORT).is_err());
    }

    #[test]
    fn profile_fields() {
        let grid = GridSpec::new(1, 256, 32.0).unwrap();
        let cx = make_counterexample_profiles(0.5, REFERENCE_BETA_PLATEAU, REFERENCE_BETA_SUPPORT).unwrap();
        let eta = profile_to_field(&cx.eta_profile(), &grid).unwrap();
        assert!((eta.integral().re - 1.0).abs() < 1e-12);
        let beta = profile_to_field(&cx.beta_profile(), &grid).unwrap();
        assert!(beta.integral().norm() < 1e-12);
        // spectrum matches the profile samples
        let s = transform(&beta);
        for i in 0..grid.len() {
            let want = cx.beta.eval(grid.frequency_norm(i));
            assert!((s.coefficients()[i].re - want).abs() < 1e-12);
        }
        let fine = GridSpec::new(1, 512, 32.0).unwrap();
        let eta_fine = profile_to_field(&cx.eta_profile(), &fine).unwrap();
        let diff = (0..grid.len()).map(|i| (eta.values()[i] - eta_fine.values()[2 * i]).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10);
        let coarse = GridSpec::new(1, 64, 32.0).unwrap();
        assert!(matches!(profile_to_field(&cx.beta_profile(), &coarse), Err(Error::Nyquist { .. })));
    }

    #[test]
    fn dilated_support_is_exact() {
        let grid = GridSpec::new(1, 1024, 16.0).unwrap();
        let psi = make_lp_pair(ScaleRange::new(0, 3).unwrap()).unwrap().psi_profile();
        for l in 0..4 {
            let s = profile_spectrum(&psi, &grid, l).unwrap();
            let ann = psi.dilated_support(l);
            for (i, c) in s.coefficients().iter().enumerate() {
                if !ann.contains(grid.frequency_norm(i)) {
                    assert_eq!(*c, Complex64::new(0.0, 0.0));
                }
            }
        }
    }
}
