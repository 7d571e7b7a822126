//! Exact exponent arithmetic: p-tuples as reciprocal points, ranked order
//! statistics, every λ formula, the J₀/α/γ split selection and the vertex
//! interpolation schedule.
//!
//! Indices are 1-based throughout, with slot `n + 1` the dual exponent `p'`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

/// `a / b` as an exact rational.
pub fn q(a: i64, b: i64) -> Q {
    Q::new(BigInt::from(a), BigInt::from(b))
}

fn half() -> Q {
    q(1, 2)
}

/// Exponent tuple `(p_1, …, p_n)` stored as reciprocals `r_k = 1/p_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PTuple {
    reciprocals: Vec<Q>,
}

impl PTuple {
    pub fn from_reciprocals(reciprocals: Vec<Q>) -> Result<Self> {
        if reciprocals.len() < 2 {
            return Err(Error::InvalidArgument(format!("need n >= 2 exponents, got {}", reciprocals.len())));
        }
        if let Some(r) = reciprocals.iter().find(|r| r.is_negative() || **r > Q::one()) {
            return Err(Error::InvalidArgument(format!("reciprocal {r} outside [0, 1]")));
        }
        let sum: Q = reciprocals.iter().sum();
        if sum > Q::one() {
            return Err(Error::InvalidArgument(format!("reciprocals sum to {sum} > 1")));
        }
        Ok(Self { reciprocals })
    }

    /// Builds from a full reciprocal point `(r_1, …, r_n, r_{p'})`, which must sum to 1.
    pub fn from_full_point(point: &[Q]) -> Result<Self> {
        let sum: Q = point.iter().sum();
        if sum != Q::one() {
            return Err(Error::InvalidArgument(format!("full point sums to {sum}, not 1")));
        }
        Self::from_reciprocals(point[..point.len().saturating_sub(1)].to_vec())
    }

    /// Parses comma-separated exponents `p_k` (`"4, 4, inf"`, `"8/3"` allowed).
    pub fn parse_exponents(text: &str) -> Result<Self> {
        let recips = text
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                if tok.eq_ignore_ascii_case("inf") || tok == "∞" {
                    return Ok(Q::zero());
                }
                let p = parse_rational(tok)?;
                if p < Q::one() {
                    return Err(Error::ExponentBelowOne(rational_to_f64(&p)));
                }
                Ok(p.recip())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_reciprocals(recips)
    }

    pub fn n(&self) -> usize {
        self.reciprocals.len()
    }

    pub fn reciprocals(&self) -> &[Q] {
        &self.reciprocals
    }

    /// `1/p = Σ r_k`.
    pub fn r_p(&self) -> Q {
        self.reciprocals.iter().sum()
    }

    /// `1/p' = 1 - 1/p`.
    pub fn r_p_dual(&self) -> Q {
        Q::one() - self.r_p()
    }

    /// `(r_1, …, r_n, r_{p'})`.
    pub fn full_point(&self) -> Vec<Q> {
        let mut v = self.reciprocals.clone();
        v.push(self.r_p_dual());
        v
    }

    /// Full-point coordinate at 1-based slot `k`.
    pub fn coord(&self, k: usize) -> Result<Q> {
        let len = self.n() + 1;
        if k == 0 || k > len {
            return Err(Error::IndexOutOfRange { index: k, len });
        }
        Ok(if k <= self.n() { self.reciprocals[k - 1].clone() } else { self.r_p_dual() })
    }
}

impl fmt::Display for PTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.full_point().iter().map(|r| r.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

pub fn parse_rational(text: &str) -> Result<Q> {
    let bad = || Error::InvalidArgument(format!("cannot parse rational {text:?}"));
    let (num, den) = match text.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (text.trim(), "1"),
    };
    if let Some((int, frac)) = num.split_once('.') {
        if den != "1" {
            return Err(bad());
        }
        let digits = format!("{int}{frac}");
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(Q::new(n, d));
    }
    let n: BigInt = num.parse().map_err(|_| bad())?;
    let d: BigInt = den.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(Error::ZeroDenominator(format!("rational {text:?}")));
    }
    Ok(Q::new(n, d))
}

pub fn rational_to_f64(r: &Q) -> f64 {
    num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

/// 1-based index of the k-th largest value; ties rank the smaller index higher.
pub fn mx_index(values: &[Q], k: usize) -> Result<usize> {
    if k == 0 || k > values.len() {
        return Err(Error::IndexOutOfRange { index: k, len: values.len() });
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].cmp(&values[a]).then(a.cmp(&b)));
    Ok(order[k - 1] + 1)
}

/// k-th largest, duplicates counted independently.
pub fn mx_k(values: &[Q], k: usize) -> Result<Q> {
    Ok(values[mx_index(values, k)? - 1].clone())
}

/// k-th smallest, the mirror of `mx_k`.
pub fn mn_k(values: &[Q], k: usize) -> Result<Q> {
    if k == 0 || k > values.len() {
        return Err(Error::IndexOutOfRange { index: k, len: values.len() });
    }
    mx_k(values, values.len() - k + 1)
}

pub fn mn_index(values: &[Q], k: usize) -> Result<usize> {
    if k == 0 || k > values.len() {
        return Err(Error::IndexOutOfRange { index: k, len: values.len() });
    }
    mx_index(values, values.len() - k + 1)
}

/// `Σ_{k=1}^{n-1} mx_k` of the full point.
pub fn sharp_lambda(pt: &PTuple) -> Q {
    let full = pt.full_point();
    (1..pt.n()).map(|k| mx_k(&full, k).expect("k within range")).sum()
}

/// The two ψ slots attaining the sharp λ: the two smallest coordinates, ordered.
pub fn sharp_pair(pt: &PTuple) -> (usize, usize) {
    let full = pt.full_point();
    let a = mn_index(&full, 1).expect("nonempty");
    let b = mn_index(&full, 2).expect("n + 1 >= 3");
    (a.min(b), a.max(b))
}

/// Independent oracle: `max_{s<t} Σ_{k∉{s,t}} r_k` by enumeration.
pub fn brute_lambda(pt: &PTuple) -> Q {
    let full = pt.full_point();
    let len = full.len();
    let mut best: Option<Q> = None;
    for s in 0..len {
        for t in (s + 1)..len {
            let mut acc = Q::zero();
            for (k, r) in full.iter().enumerate() {
                if k != s && k != t {
                    acc += r;
                }
            }
            if best.as_ref().is_none_or(|b| acc > *b) {
                best = Some(acc);
            }
        }
    }
    best.expect("at least one pair")
}

fn check_pair(pt: &PTuple, s: usize, t: usize) -> Result<()> {
    let len = pt.n() + 1;
    for &i in &[s, t] {
        if i == 0 || i > len {
            return Err(Error::IndexOutOfRange { index: i, len });
        }
    }
    if s == t {
        return Err(Error::InvalidArgument(format!("pair indices coincide: s = t = {s}")));
    }
    Ok(())
}

fn sum_excluding(full: &[Q], skip: &[usize]) -> Q {
    full.iter()
        .enumerate()
        .filter(|(i, _)| !skip.contains(&(i + 1)))
        .map(|(_, r)| r.clone())
        .sum()
}

/// `λ_{(s,t)} = Σ_{k∉{s,t}} r_k`.
pub fn lambda_st(pt: &PTuple, s: usize, t: usize) -> Result<Q> {
    check_pair(pt, s, t)?;
    Ok(sum_excluding(&pt.full_point(), &[s, t]))
}

/// `λ'_{(s,t)} = |1/2 - r_s| + |1/2 - r_t| + Σ_{k∉{s,t,τ}} r_k`.
pub fn lambda_st_prime(pt: &PTuple, s: usize, t: usize, tau: usize) -> Result<Q> {
    check_pair(pt, s, t)?;
    check_pair(pt, s, tau)?;
    check_pair(pt, t, tau)?;
    let full = pt.full_point();
    Ok((half() - &full[s - 1]).abs() + (half() - &full[t - 1]).abs() + sum_excluding(&full, &[s, t, tau]))
}

/// Unshifted slot for `λ'_{(s,t)}`: the largest remaining coordinate, first index on ties.
pub fn optimal_tau(pt: &PTuple, s: usize, t: usize) -> Result<usize> {
    check_pair(pt, s, t)?;
    let full = pt.full_point();
    let mut best: Option<usize> = None;
    for k in (1..=full.len()).filter(|&k| k != s && k != t) {
        if best.is_none_or(|b| full[k - 1] > full[b - 1]) {
            best = Some(k);
        }
    }
    best.ok_or_else(|| Error::Degenerate("no slot left for tau".into()))
}

/// `λ' = mx_1 + 2 Σ_{k=2}^{n-1} mx_k` of the full point.
pub fn lambda_prime(pt: &PTuple) -> Q {
    let full = pt.full_point();
    let tail: Q = (2..pt.n()).map(|k| mx_k(&full, k).expect("k within range")).sum();
    mx_k(&full, 1).expect("nonempty") + tail * q(2, 1)
}

/// `λ''_{(s,t)} = |1/2 - r_s| + Σ_{k∉{s,t}} r_k`.
pub fn lambda_st_dprime(pt: &PTuple, s: usize, t: usize) -> Result<Q> {
    check_pair(pt, s, t)?;
    let full = pt.full_point();
    Ok((half() - &full[s - 1]).abs() + sum_excluding(&full, &[s, t]))
}

/// How the shifted form for a pair `(s, t)` is to be estimated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanKind {
    /// Generic case: α's exponent is split between the two halves.
    Split,
    /// `Σ_{J₀∪{s}} r` hits 1/2 exactly; no split needed.
    Exact,
    /// A coordinate `r_u >= 1/2` outside the pair takes the role of α.
    LargeCoordinate { u: usize },
    /// A pair coordinate `r_u >= 1/2`; the shift is moved off and `λ''` applies.
    ShiftFree { u: usize, lambda_dprime: Q },
}

/// Result of the left-to-right J₀/α scan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitPlan {
    pub s: usize,
    pub t: usize,
    pub tau: usize,
    pub j0: Vec<usize>,
    pub kind: PlanKind,
    pub alpha: Option<usize>,
    pub gamma: Option<Q>,
    pub q0_recip: Option<Q>,
    pub q1_recip: Option<Q>,
}

impl SplitPlan {
    /// Checks the exact identities a split must satisfy.
    pub fn verify(&self, pt: &PTuple) -> Result<()> {
        let full = pt.full_point();
        let fail = |m: &str| Err(Error::Degenerate(format!("split plan identity violated: {m}")));
        if self.j0.iter().any(|k| *k == self.s || *k == self.t) {
            return fail("J0 meets {s, t}");
        }
        let base: Q = self.j0.iter().map(|k| full[k - 1].clone()).sum::<Q>() + &full[self.s - 1];
        match (&self.kind, self.alpha, &self.gamma, &self.q0_recip, &self.q1_recip) {
            (PlanKind::Exact, None, None, None, None) => {
                if base != half() {
                    return fail("exact plan does not sum to 1/2");
                }
            }
            (PlanKind::Split | PlanKind::LargeCoordinate { .. }, Some(a), Some(g), Some(r0), Some(r1)) => {
                let ra = &full[a - 1];
                if self.j0.contains(&a) || a == self.s || a == self.t {
                    return fail("alpha inside J0 or the pair");
                }
                if &base + r0 != half() {
                    return fail("sum over J0 and s plus 1/q0 is not 1/2");
                }
                if r0 + r1 != *ra {
                    return fail("1/q0 + 1/q1 != 1/p_alpha");
                }
                // γ q₀ = p_α and (1 - γ) q₁ = p_α, written with reciprocals
                if g * ra != *r0 || (Q::one() - g) * ra != *r1 {
                    return fail("gamma relations");
                }
            }
            (PlanKind::ShiftFree { .. }, None, None, None, None) => {}
            _ => return fail("inconsistent plan fields"),
        }
        Ok(())
    }
}

/// Left-to-right scan building J₀, α, γ, q₀, q₁ for the pair `(s, t)`; `τ = t`.
pub fn select_split(pt: &PTuple, s: usize, t: usize) -> Result<SplitPlan> {
    check_pair(pt, s, t)?;
    let full = pt.full_point();
    let plan = |j0, kind, alpha, gamma, q0, q1| SplitPlan {
        s,
        t,
        tau: t,
        j0,
        kind,
        alpha,
        gamma,
        q0_recip: q0,
        q1_recip: q1,
    };
    if let Some(u) = (1..=full.len()).find(|&k| full[k - 1] >= half()) {
        if u == s || u == t {
            let other = if u == s { t } else { s };
            let value = lambda_st_dprime(pt, u, other)?;
            return Ok(plan(vec![], PlanKind::ShiftFree { u, lambda_dprime: value }, None, None, None, None));
        }
        let ru = &full[u - 1];
        let r0 = half() - &full[s - 1];
        let r1 = ru - &r0;
        let gamma = &r0 / ru;
        return Ok(plan(vec![], PlanKind::LargeCoordinate { u }, Some(u), Some(gamma), Some(r0), Some(r1)));
    }
    let mut j0 = Vec::new();
    let mut acc = full[s - 1].clone();
    for k in 1..=full.len() {
        if k == s || k == t {
            continue;
        }
        let next = &acc + &full[k - 1];
        if next < half() {
            j0.push(k);
            acc = next;
        } else if next == half() {
            j0.push(k);
            return Ok(plan(j0, PlanKind::Exact, None, None, None, None));
        } else {
            let r0 = half() - &acc;
            let r1 = &full[k - 1] - &r0;
            let gamma = &r0 / &full[k - 1];
            return Ok(plan(j0, PlanKind::Split, Some(k), Some(gamma), Some(r0), Some(r1)));
        }
    }
    Err(Error::Degenerate(format!("no split index found for pair ({s}, {t}) at {pt}")))
}

/// Note that the dual slot is among the ψ pair, so the construction runs on a transpose.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjointNote {
    pub transpose_index: usize,
}

/// When `p'` is one of the two smallest coordinates, names the transpose slot `j ≠ s` to use.
pub fn adjoint_annotation(pt: &PTuple) -> Option<AdjointNote> {
    let (s, t) = sharp_pair(pt);
    let dual = pt.n() + 1;
    if s != dual && t != dual {
        return None;
    }
    let keep = if s == dual { t } else { s };
    let j = (1..=pt.n()).find(|&j| j != keep).expect("n >= 2");
    Some(AdjointNote { transpose_index: j })
}

/// `((1-θ) pt₀ + θ pt₁, (1-θ) e₀ + θ e₁)`.
pub fn interpolation_step(pt0: &[Q], e0: &Q, pt1: &[Q], e1: &Q, theta: &Q) -> Result<(Vec<Q>, Q)> {
    if theta.is_negative() || *theta > Q::one() {
        return Err(Error::InvalidArgument(format!("theta {theta} outside [0, 1]")));
    }
    if pt0.len() != pt1.len() {
        return Err(Error::LengthMismatch { expected: pt0.len(), got: pt1.len() });
    }
    for p in [pt0, pt1] {
        if p.iter().sum::<Q>() != Q::one() {
            return Err(Error::InvalidArgument("interpolation endpoint does not sum to 1".into()));
        }
    }
    let one_minus = Q::one() - theta;
    let point = pt0.iter().zip(pt1).map(|(a, b)| &one_minus * a + theta * b).collect();
    Ok((point, &one_minus * e0 + theta * e1))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterpolationStep {
    pub from: Vec<Q>,
    pub from_exponent: Q,
    pub vertex: Vec<Q>,
    pub vertex_exponent: Q,
    pub theta: Q,
    pub point: Vec<Q>,
    pub exponent: Q,
    /// Endpoint is a vertex, i.e. some slot is `L_∞`; density extension is cited, not computed.
    pub requires_linfty_extension: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterpolationPlan {
    pub target: Vec<Q>,
    pub start: Vec<Q>,
    pub steps: Vec<InterpolationStep>,
    pub final_exponent: Q,
    /// Whether the final exponent equals the sharp λ of the target.
    pub sharp: bool,
}

impl InterpolationPlan {
    /// Folds the steps from the start vertex and checks the target is reproduced.
    pub fn recompose(&self) -> Result<(Vec<Q>, Q)> {
        let mut point = self.start.clone();
        let mut e = Q::one();
        for step in &self.steps {
            let (p, ne) = interpolation_step(&point, &e, &step.vertex, &step.vertex_exponent, &step.theta)?;
            point = p;
            e = ne;
        }
        Ok((point, e))
    }
}

/// Why the vertex schedule cannot reach a target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StallDiagnosis {
    pub target: Vec<Q>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InterpolationOutcome {
    Plan(InterpolationPlan),
    Stalled(StallDiagnosis),
}

fn vertex(len: usize, i: usize) -> Vec<Q> {
    (0..len).map(|k| if k == i { Q::one() } else { Q::zero() }).collect()
}

/// Reaches the target by successive vertex interpolations over its nonzero slots.
pub fn interpolation_plan(target: &PTuple) -> InterpolationOutcome {
    let full = target.full_point();
    let len = full.len();
    if full.iter().all(|r| r.is_positive()) {
        return InterpolationOutcome::Stalled(StallDiagnosis {
            target: full,
            reason: "every coordinate is nonzero, so no vertex chain lands on the target with the sharp \
                     exponent: interpolating between points whose largest n-1 coordinates do not align \
                     loses sharpness"
                .into(),
        });
    }
    let support: Vec<usize> = (0..len).filter(|&k| full[k].is_positive()).collect();
    let start = vertex(len, support[0]);
    let mut point = start.clone();
    let mut mass = full[support[0]].clone();
    let mut e = Q::one();
    let mut steps = Vec::new();
    for &k in &support[1..] {
        mass += &full[k];
        let theta = &full[k] / &mass;
        let v = vertex(len, k);
        let (next, ne) = interpolation_step(&point, &e, &v, &Q::one(), &theta).expect("valid endpoints");
        steps.push(InterpolationStep {
            from: point,
            from_exponent: e,
            vertex: v,
            vertex_exponent: Q::one(),
            theta,
            point: next.clone(),
            exponent: ne.clone(),
            requires_linfty_extension: true,
        });
        point = next;
        e = ne;
    }
    debug_assert_eq!(point, full);
    let sharp = e == sharp_lambda(target);
    InterpolationOutcome::Plan(InterpolationPlan { target: full, start, steps, final_exponent: e, sharp })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(r: &[(i64, i64)]) -> PTuple {
        PTuple::from_reciprocals(r.iter().map(|&(a, b)| q(a, b)).collect()).unwrap()
    }

    #[test]
    fn ptuple_validation() {
        assert!(PTuple::from_reciprocals(vec![q(1, 2)]).is_err());
        assert!(PTuple::from_reciprocals(vec![q(2, 3), q(1, 2)]).is_err());
        assert!(PTuple::from_reciprocals(vec![q(-1, 3), q(1, 2)]).is_err());
        let p = PTuple::parse_exponents("4, 4, inf").unwrap();
        assert_eq!(p.full_point(), vec![q(1, 4), q(1, 4), q(0, 1), q(1, 2)]);
        assert!(PTuple::parse_exponents("0.5, 2").is_err());
        assert_eq!(PTuple::parse_exponents("8/3, 2.5").unwrap().reciprocals(), &[q(3, 8), q(2, 5)]);
    }

    #[test]
    fn order_statistics() {
        let v = [q(3, 1), q(3, 1), q(2, 1), q(1, 1)];
        assert_eq!(mx_k(&v, 3).unwrap(), q(2, 1));
        assert_eq!(mx_k(&v, 1).unwrap(), q(3, 1));
        assert_eq!(mx_index(&v, 1).unwrap(), 1);
        assert_eq!(mx_index(&v, 2).unwrap(), 2);
        assert_eq!(mn_k(&v, 1).unwrap(), q(1, 1));
        let w = [q(1, 2), q(1, 2), q(0, 1)];
        assert_eq!(mx_k(&w, 2).unwrap(), q(1, 2));
        assert!(mx_k(&w, 0).is_err());
        assert!(mx_k(&w, 4).is_err());
    }

    #[test]
    fn sharp_lambda_examples() {
        let quarters = pt(&[(1, 4), (1, 4), (1, 4)]);
        assert_eq!(sharp_lambda(&quarters), q(1, 2));
        assert_eq!(brute_lambda(&quarters), q(1, 2));
        for n in 2..=6i64 {
            let eq = PTuple::from_reciprocals(vec![q(1, n + 1); n as usize]).unwrap();
            assert_eq!(sharp_lambda(&eq), q(n - 1, n + 1));
            assert_eq!(brute_lambda(&eq), q(n - 1, n + 1));
            let mut v = vec![q(0, 1); n as usize];
            v[0] = q(1, 1);
            let vert = PTuple::from_reciprocals(v).unwrap();
            assert_eq!(sharp_lambda(&vert), q(1, 1));
            assert_eq!(brute_lambda(&vert), q(1, 1));
            assert_eq!(lambda_prime(&vert), q(1, 1));
        }
    }

    #[test]
    fn lambda_variants() {
        let quarters = pt(&[(1, 4), (1, 4), (1, 4)]);
        assert_eq!(lambda_st(&quarters, 1, 2).unwrap(), q(1, 2));
        assert_eq!(lambda_st_prime(&quarters, 1, 2, 3).unwrap(), q(3, 4));
        assert_eq!(lambda_prime(&quarters), q(3, 4));
        assert_eq!(lambda_st_dprime(&quarters, 1, 2).unwrap(), q(3, 4));
        assert!(lambda_st(&quarters, 2, 2).is_err());
        assert!(lambda_st(&quarters, 1, 5).is_err());
        assert!(lambda_st_prime(&quarters, 1, 2, 2).is_err());
    }

    #[test]
    fn split_examples() {
        let p = pt(&[(1, 8), (1, 4), (3, 8)]);
        assert_eq!(p.full_point()[3], q(1, 4));
        let plan = select_split(&p, 1, 3).unwrap();
        assert_eq!(plan.kind, PlanKind::Split);
        assert_eq!(plan.j0, vec![2]);
        assert_eq!(plan.alpha, Some(4));
        assert_eq!(plan.q0_recip, Some(q(1, 8)));
        assert_eq!(plan.q1_recip, Some(q(1, 8)));
        assert_eq!(plan.gamma, Some(q(1, 2)));
        assert_eq!(plan.tau, 3);
        plan.verify(&p).unwrap();

        let exact = pt(&[(1, 4), (1, 4), (1, 4)]);
        let plan = select_split(&exact, 1, 3).unwrap();
        assert_eq!(plan.kind, PlanKind::Exact);
        assert_eq!(plan.gamma, None);
        plan.verify(&exact).unwrap();

        let large = pt(&[(1, 8), (1, 8), (5, 8)]);
        let plan = select_split(&large, 1, 2).unwrap();
        assert_eq!(plan.kind, PlanKind::LargeCoordinate { u: 3 });
        assert_eq!(plan.alpha, Some(3));
        assert!(plan.j0.is_empty());
        plan.verify(&large).unwrap();

        let plan = select_split(&large, 3, 1).unwrap();
        assert!(matches!(plan.kind, PlanKind::ShiftFree { u: 3, .. }));
        plan.verify(&large).unwrap();
    }

    #[test]
    fn interpolation_step_cases() {
        let a = vec![q(1, 1), q(0, 1), q(0, 1)];
        let b = vec![q(0, 1), q(1, 1), q(0, 1)];
        let (p, e) = interpolation_step(&a, &q(1, 1), &b, &q(1, 1), &q(1, 2)).unwrap();
        assert_eq!(p, vec![q(1, 2), q(1, 2), q(0, 1)]);
        assert_eq!(e, q(1, 1));
        let (p, e) = interpolation_step(&a, &q(2, 3), &b, &q(1, 1), &q(0, 1)).unwrap();
        assert_eq!((p, e), (a.clone(), q(2, 3)));
        let (p, e) = interpolation_step(&a, &q(2, 3), &b, &q(1, 1), &q(1, 1)).unwrap();
        assert_eq!((p, e), (b.clone(), q(1, 1)));
        assert!(interpolation_step(&a, &q(1, 1), &b, &q(1, 1), &q(3, 2)).is_err());
    }

    #[test]
    fn plans() {
        let half = PTuple::from_full_point(&[q(1, 2), q(1, 2), q(0, 1), q(0, 1)]).unwrap();
        let InterpolationOutcome::Plan(plan) = interpolation_plan(&half) else { panic!("expected plan") };
        assert_eq!(plan.steps.len(), 1);
        assert_eq!(plan.steps[0].theta, q(1, 2));
        assert_eq!(plan.final_exponent, q(1, 1));
        assert!(plan.sharp);

        let thirds = PTuple::from_full_point(&[q(1, 3), q(1, 3), q(1, 3), q(0, 1)]).unwrap();
        let InterpolationOutcome::Plan(plan) = interpolation_plan(&thirds) else { panic!("expected plan") };
        let thetas: Vec<Q> = plan.steps.iter().map(|s| s.theta.clone()).collect();
        assert_eq!(thetas, vec![q(1, 2), q(1, 3)]);
        assert_eq!(plan.final_exponent, q(1, 1));
        assert_eq!(plan.recompose().unwrap(), (plan.target.clone(), q(1, 1)));
        assert!(!plan.sharp);
        assert!(plan.steps.iter().all(|s| s.requires_linfty_extension));

        let interior = pt(&[(1, 4), (1, 4), (1, 4)]);
        assert!(matches!(interpolation_plan(&interior), InterpolationOutcome::Stalled(_)));
    }

    #[test]
    fn adjoint_note() {
        assert_eq!(adjoint_annotation(&pt(&[(1, 8), (1, 8), (1, 2)])), None);
        // ties rank later slots smaller, so equal quarters put p' in the pair
        assert!(adjoint_annotation(&pt(&[(1, 4), (1, 4), (1, 4)])).is_some());
        // p' smallest: full point (1/3, 1/3, 1/6, 1/6)
        let p = pt(&[(1, 3), (1, 3), (1, 6)]);
        assert_eq!(sharp_pair(&p), (3, 4));
        assert_eq!(adjoint_annotation(&p), Some(AdjointNote { transpose_index: 1 }));
    }
}
