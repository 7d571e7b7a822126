//! One runner per experiment. Each returns an [`Outcome`] and never touches the filesystem.

use std::collections::BTreeMap;

use logweight::calibration::{make_lp_pair, reference_counterexample_profiles, Profile, ScaleRange};
use logweight::counterexample::{
    linear_schedule, rational_text, run_sweep, validate_config, ConstraintKind, CxConfig, CxGrid, CxTolerances,
    Quadrature, Validation,
};
use logweight::exponents::{
    adjoint_annotation, brute_lambda, interpolation_plan, lambda_prime, lambda_st, lambda_st_dprime,
    lambda_st_prime, optimal_tau, q, select_split, sharp_lambda, sharp_pair, InterpolationOutcome, PTuple, PlanKind,
    Q,
};
use logweight::field::{lp_norm, random_band_limited, transform, Annulus, Exponent, GridSpec, MixedNormSpec};
use logweight::lp_ops::{
    dyadic_piece, fefferman_stein_ratio, hardy_norm_square, peetre_cube_ratio, DyadicCubeSet, ShiftedDyadicOp,
};
use logweight::report::{Check, ExperimentReport, Table};
use logweight::rng_stream;
use logweight::shifted_lab::{change_of_variables_check, random_cov_case, run_growth, GrowthExperiment, GrowthKind};
use num_traits::Zero;
use rand::Rng;

use crate::config::{
    exponent, rational, ChangevarsConfig, CounterexampleConfig, GrowthConfig, HardyConfig, PartitionConfig,
    PeetreConfig,
};
use crate::output::Outcome;
use crate::CliError;

fn grid_info(grid: &GridSpec) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("dimension".to_string(), grid.dimension().to_string()),
        ("samples_per_axis".to_string(), grid.samples_per_axis().to_string()),
        ("period".to_string(), grid.period().to_string()),
    ])
}

fn tuple_text(v: &[Q]) -> String {
    let parts: Vec<String> = v.iter().map(rational_text).collect();
    format!("({})", parts.join(", "))
}

pub fn partition(cfg: &PartitionConfig) -> Result<Outcome, CliError> {
    if !(cfg.band_min > 0.0 && cfg.band_min < cfg.band_max && cfg.band_max.is_finite()) {
        return Err(CliError::Config(format!("band [{}, {}] must satisfy 0 < min < max", cfg.band_min, cfg.band_max)));
    }
    if cfg.points_per_octave == 0 {
        return Err(CliError::Config("points_per_octave must be positive".into()));
    }
    let pair = make_lp_pair(ScaleRange::new(cfg.scale_min, cfg.scale_max)?)?;
    let cover = pair.covered();
    let mut r = ExperimentReport::new("partition");
    r.param("scale_min", cfg.scale_min)
        .param("scale_max", cfg.scale_max)
        .param("band_min", cfg.band_min)
        .param("band_max", cfg.band_max)
        .param("points_per_octave", cfg.points_per_octave);

    let mut table = Table::new(&["octave_lo", "octave_hi", "covered", "max_defect"]);
    let (mut worst, mut covered, mut uncovered) = (0.0f64, 0usize, 0usize);
    let first = cfg.band_min.log2().floor() as i32;
    let last = cfg.band_max.log2().ceil() as i32;
    for j in first..last {
        let a = 2f64.powi(j).max(cfg.band_min);
        let b = 2f64.powi(j + 1).min(cfg.band_max);
        if a >= b {
            continue;
        }
        let ratio = b / a;
        let n = cfg.points_per_octave;
        let defect = (0..=n)
            .map(|i| a * ratio.powf(i as f64 / n as f64))
            .map(|x| (pair.partition_sum(x) - 1.0).abs())
            .fold(0.0, f64::max);
        let inside = cover.inner <= a && b <= cover.outer;
        if inside {
            covered += 1;
            worst = worst.max(defect);
        } else {
            uncovered += 1;
            r.note(format!("uncovered octave [{a}, {b}]: outside the scale range's cover [{}, {}]", cover.inner, cover.outer));
        }
        table.push(vec![a, b, if inside { 1.0 } else { 0.0 }, defect]);
    }
    r.table("octaves", table)
        .metric("max_partition_defect", worst)
        .metric("covered_octaves", covered as f64)
        .metric("uncovered_octaves", uncovered as f64)
        .check(Check::flag("some_octave_covered", covered > 0))
        .check(Check::at_most("partition_defect", worst, cfg.tolerance));

    // hard zeros and plateaus, probed on a fine radial grid
    let probe = |lo: f64, hi: f64, f: &dyn Fn(f64) -> f64, want: f64| {
        (0..=2000).map(|i| lo + (hi - lo) * i as f64 / 2000.0).all(|x| f(x) == want)
    };
    let psi = pair.psi_profile();
    let phi = pair.phi_profile();
    let eval = |p: Profile| move |x: f64| p.eval_dilated(x, 0);
    r.check(Check::flag("psi_zero_inside_half", probe(0.0, 0.5, &eval(psi), 0.0)))
        .check(Check::flag("psi_zero_outside_two", probe(2.0, 8.0, &eval(psi), 0.0)))
        .check(Check::flag("phi_one_on_unit_ball", probe(0.0, 1.0, &eval(phi), 1.0)))
        .check(Check::flag("phi_zero_outside_two", probe(2.0, 8.0, &eval(phi), 0.0)));
    let dilated_ok = pair.scale_range.iter().all(|l| {
        let s = psi.dilated_support(l);
        let f = 2f64.powi(l);
        s.inner == f / 2.0 && s.outer == 2.0 * f && psi.eval_dilated(s.inner, l) == 0.0 && psi.eval_dilated(s.outer, l) == 0.0
    });
    r.check(Check::flag("dilated_support_certificates", dilated_ok));
    let cx = reference_counterexample_profiles();
    let (eta, beta) = (cx.eta_profile(), cx.beta_profile());
    let (pl, su) = (cx.beta.plateau, cx.beta.support);
    let rho = cx.eta.support_radius;
    r.check(Check::flag("eta_plateau", probe(0.0, rho / 2.0, &eval(eta), 1.0)))
        .check(Check::flag("eta_support", probe(rho, 4.0 * rho, &eval(eta), 0.0)))
        .check(Check::flag("beta_plateau", probe(pl.0, pl.1, &eval(beta), 1.0)))
        .check(Check::flag(
            "beta_support",
            probe(0.0, su.0, &eval(beta), 0.0) && probe(su.1, 2.0 * su.1, &eval(beta), 0.0),
        ));
    Ok(Outcome::new(r))
}

fn growth_experiment(cfg: &GrowthConfig, seed: u64) -> Result<GrowthExperiment, CliError> {
    let p = exponent(&cfg.p)?;
    let kind = match cfg.operator.as_str() {
        "shifted-max" => GrowthKind::ShiftedMax,
        "shifted-square" => GrowthKind::ShiftedSquare,
        other => return Err(CliError::Config(format!("operator {other:?}: expected shifted-max or shifted-square"))),
    };
    let mut e = match (kind, p) {
        (GrowthKind::ShiftedMax, Exponent::Infinite) => GrowthExperiment::shifted_max_linf(),
        (GrowthKind::ShiftedMax, _) => GrowthExperiment::shifted_max_l2(),
        (GrowthKind::ShiftedSquare, _) => GrowthExperiment::shifted_square_l2(),
    };
    e.p = p;
    let grid = e.grid;
    e.grid = GridSpec::new(
        cfg.dimension.unwrap_or(grid.dimension()),
        cfg.samples.unwrap_or(grid.samples_per_axis()),
        cfg.period.unwrap_or(grid.period()),
    )?;
    e.scale_range = ScaleRange::new(
        cfg.scale_min.unwrap_or(e.scale_range.min),
        cfg.scale_max.unwrap_or(e.scale_range.max),
    )?;
    if cfg.shift_min.is_some() || cfg.shift_max.is_some() || cfg.shift_step.is_some() {
        let lo = cfg.shift_min.unwrap_or(4);
        let hi = cfg.shift_max.unwrap_or(14);
        let step = cfg.shift_step.unwrap_or(2);
        if step <= 0 || hi < lo {
            return Err(CliError::Config(format!("shift ladder 2^{lo}..2^{hi} step {step} is empty")));
        }
        e.shifts = (lo..=hi).step_by(step as usize).map(|k| 2f64.powi(k)).collect();
    }
    if let Some(n) = cfg.random_fields {
        e.bank.random_fields = n;
    }
    if let Some(b) = cfg.random_band {
        e.bank.random_band = b;
    }
    if cfg.bump_radius.is_some() {
        e.bank.bump_radius = cfg.bump_radius;
    }
    if let Some(t) = cfg.tolerance {
        e.tolerance = t;
    }
    e.bank.seed = seed;
    Ok(e)
}

pub fn growth(cfg: &GrowthConfig, seed: u64) -> Result<Outcome, CliError> {
    let e = growth_experiment(cfg, seed)?;
    let out = run_growth(&e)?;
    let mut report = out.report;
    report.param("seed", seed);
    if e.kind == GrowthKind::ShiftedSquare {
        let first = out.fit.pairs[0].1;
        report
            .metric("first_shift_ratio", first)
            .check(Check::at_most("bounded_ratio", out.max_ratio, cfg.baseline_factor * first));
    }
    let mut o = Outcome::new(report);
    o.grid = grid_info(&e.grid);
    Ok(o)
}

pub fn changevars(cfg: &ChangevarsConfig, seed: u64) -> Result<Outcome, CliError> {
    if cfg.factors.is_empty() || cfg.factors.contains(&0) {
        return Err(CliError::Config("factors must list positive counts".into()));
    }
    let grid = GridSpec::new(cfg.dimension, cfg.samples, cfg.period)?;
    let range = ScaleRange::new(cfg.scale_min, cfg.scale_max)?;
    let (p, vp) = (exponent(&cfg.p)?, exponent(&cfg.variant_p)?);
    let mut r = ExperimentReport::new("changevars");
    r.param("cases", cfg.cases)
        .param("factors", format!("{:?}", cfg.factors))
        .param("p", p)
        .param("variant_p", vp)
        .param("band", cfg.band)
        .param("shift_bound", cfg.shift_bound)
        .param("seed", seed);

    let mut rng = rng_stream(seed, 0);
    let mut table = Table::new(&["case", "factors", "k0", "discrepancy", "variant_discrepancy"]);
    let (mut worst, mut worst_v) = (0.0f64, 0.0f64);
    for case in 0..cfg.cases {
        let m = cfg.factors[rng.random_range(0..cfg.factors.len())];
        let c = random_cov_case(grid, m, cfg.band, cfg.shift_bound, &mut rng)?;
        let a = change_of_variables_check(&c.gs, &c.ys, c.k0, range, p)?;
        let b = change_of_variables_check(&c.gs, &c.ys, c.k0, range, vp)?;
        worst = worst.max(a.discrepancy);
        worst_v = worst_v.max(b.discrepancy);
        table.push(vec![case as f64, m as f64, c.k0 as f64, a.discrepancy, b.discrepancy]);
    }
    r.table("cases", table)
        .metric("max_discrepancy", worst)
        .metric("max_variant_discrepancy", worst_v)
        .check(Check::at_most("change_of_variables", worst, cfg.tolerance))
        .check(Check::at_most("change_of_variables_variant", worst_v, cfg.variant_tolerance));

    // the shifted piece against the unshifted one interpolated at x - 2^{-ℓ} y
    let sgrid = GridSpec::new(cfg.dimension, cfg.shift_samples, cfg.shift_period)?;
    let phi = make_lp_pair(ScaleRange::new(cfg.shift_scale_min, cfg.shift_scale_max)?)?.phi_profile();
    let d = sgrid.dimension();
    let mut rng = rng_stream(seed, 1);
    let mut shifts = Table::new(&["case", "scale", "shift", "max_error"]);
    let mut worst_s = 0.0f64;
    for case in 0..cfg.shift_cases {
        let f = random_band_limited(sgrid, Annulus::ball(cfg.shift_band), false, &mut rng)?;
        let l = rng.random_range(cfg.shift_scale_min..=cfg.shift_scale_max);
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-cfg.shift_range..cfg.shift_range)).collect();
        let shifted = dyadic_piece(&f, &ShiftedDyadicOp::new(phi, l, y.clone()))?;
        let plain = transform(&dyadic_piece(&f, &ShiftedDyadicOp::new(phi, l, vec![0.0; d]))?);
        let t = 2f64.powi(-l);
        let mut err = 0.0f64;
        for _ in 0..cfg.shift_points {
            let i = rng.random_range(0..sgrid.len());
            let x = sgrid.coordinate(i);
            let at = [x[0] - t * y[0], if d == 2 { x[1] - t * y[1] } else { 0.0 }];
            err = err.max((shifted.values()[i] - plain.eval_physical(at)).norm());
        }
        worst_s = worst_s.max(err);
        shifts.push(vec![case as f64, l as f64, y[0], err]);
    }
    r.table("shift_identity", shifts)
        .metric("max_shift_identity_error", worst_s)
        .check(Check::at_most("shift_identity", worst_s, cfg.shift_tolerance));
    let mut o = Outcome::new(r);
    o.grid = grid_info(&grid);
    Ok(o)
}

pub fn hardy(cfg: &HardyConfig, seed: u64) -> Result<Outcome, CliError> {
    let grid = GridSpec::new(cfg.dimension, cfg.samples, cfg.period)?;
    let pair = make_lp_pair(ScaleRange::new(cfg.scale_min, cfg.scale_max)?)?;
    let two = Exponent::Finite(2.0);
    let mut rng = rng_stream(seed, 2);
    let mut table = Table::new(&["field", "ratio"]);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..cfg.fields {
        let f = random_band_limited(grid, Annulus::new(cfg.band_inner, cfg.band_outer), false, &mut rng)?;
        let ratio = hardy_norm_square(&f, &pair, two)? / lp_norm(&f, two)?;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        table.push(vec![i as f64, ratio]);
    }
    let mut r = ExperimentReport::new("hardy");
    r.param("fields", cfg.fields)
        .param("band_inner", cfg.band_inner)
        .param("band_outer", cfg.band_outer)
        .param("scale_min", cfg.scale_min)
        .param("scale_max", cfg.scale_max)
        .param("seed", seed)
        .table("ratios", table)
        .metric("min_ratio", lo)
        .metric("max_ratio", hi)
        .check(Check::within("min_ratio", lo, cfg.lower, cfg.upper))
        .check(Check::within("max_ratio", hi, cfg.lower, cfg.upper))
        .note("square-function L2 ratio lies in [1/sqrt(2), 1] for spectra inside the covered octaves");
    let mut o = Outcome::new(r);
    o.grid = grid_info(&grid);
    Ok(o)
}

fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (b - a).abs() / a.abs()
    }
}

pub fn peetre(cfg: &PeetreConfig, seed: u64) -> Result<Outcome, CliError> {
    let d = cfg.dimension as f64;
    let mut sigmas = cfg.sigmas.clone().unwrap_or_else(|| vec![d + 1.0, 2.0 * d, 4.0 * d]);
    sigmas.sort_by(f64::total_cmp);
    sigmas.dedup();
    let band = 2.0 * cfg.band_factor * 2f64.powi(cfg.k);
    let spec = MixedNormSpec { outer_p: exponent(&cfg.fs_p)?, inner_q: exponent(&cfg.fs_q)? };
    let sigma_fs = 2.0 * d;

    let mut cube = vec![[0.0f64; 2]; sigmas.len()];
    let mut fs = [0.0f64; 2];
    let mut coarse = None;
    for (slot, samples) in [cfg.samples, 2 * cfg.samples].into_iter().enumerate() {
        let grid = GridSpec::new(cfg.dimension, samples, cfg.period)?;
        coarse.get_or_insert(grid);
        let cubes = DyadicCubeSet::new(grid, cfg.k)?;
        // the same coefficient draws land on the same frequencies at both resolutions
        let mut rng = rng_stream(seed, 3);
        let bank = (0..cfg.fields)
            .map(|_| random_band_limited(grid, Annulus::ball(band), false, &mut rng))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, &sigma) in sigmas.iter().enumerate() {
            for f in &bank {
                let c = peetre_cube_ratio(f, sigma, cfg.k, cfg.band_factor, &cubes)?;
                cube[i][slot] = cube[i][slot].max(c.ratio);
            }
        }
        let mut rng = rng_stream(seed, 4);
        let seq = cfg
            .fs_scales
            .iter()
            .map(|&k| random_band_limited(grid, Annulus::ball(2.0 * cfg.band_factor * 2f64.powi(k)), false, &mut rng))
            .collect::<Result<Vec<_>, _>>()?;
        fs[slot] = fefferman_stein_ratio(&seq, &cfg.fs_scales, cfg.band_factor, sigma_fs, spec)?;
    }

    let mut r = ExperimentReport::new("peetre");
    r.param("k", cfg.k)
        .param("band_factor", cfg.band_factor)
        .param("fields", cfg.fields)
        .param("fs_scales", format!("{:?}", cfg.fs_scales))
        .param("fs_sigma", sigma_fs)
        .param("seed", seed);
    let mut table = Table::new(&["sigma", "ratio_m", "ratio_2m", "relative_change"]);
    for (sigma, [a, b]) in sigmas.iter().zip(&cube) {
        let change = relative_change(*a, *b);
        table.push(vec![*sigma, *a, *b, change]);
        r.metric(&format!("cube_ratio[sigma={sigma}]"), *a).metric(&format!("cube_ratio_2m[sigma={sigma}]"), *b);
        if *sigma == 2.0 * d {
            r.check(Check::flag("cube_ratio_finite", a.is_finite() && b.is_finite()))
                .check(Check::at_most("cube_ratio_stability", change, cfg.stability));
        }
    }
    if !sigmas.contains(&(2.0 * d)) {
        r.note("sigma = 2d not among the requested sigmas; no cube-ratio check");
    }
    let fs_change = relative_change(fs[0], fs[1]);
    r.table("cube_ratios", table)
        .metric("fefferman_stein_ratio", fs[0])
        .metric("fefferman_stein_ratio_2m", fs[1])
        .check(Check::at_least("fefferman_stein_at_least_one", fs[0].min(fs[1]), 1.0))
        .check(Check::at_most("fefferman_stein_stability", fs_change, cfg.stability));
    let mut o = Outcome::new(r);
    o.grid = grid_info(&coarse.expect("two resolutions"));
    Ok(o)
}

fn tokens(args: &[String]) -> Vec<String> {
    args.iter()
        .flat_map(|a| a.split(|c: char| c == ',' || c.is_whitespace()))
        .map(|t| t.trim_matches(|c| c == '(' || c == ')'))
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

/// Exact exponent tables for exponents `p_1, …, p_n`.
pub fn lambda(args: &[String]) -> Result<Outcome, CliError> {
    let toks = tokens(args);
    if toks.is_empty() {
        return Err(CliError::Config("lambda needs the exponents p_1 … p_n".into()));
    }
    let pt = PTuple::parse_exponents(&toks.join(","))?;
    let n = pt.n();
    let full = pt.full_point();
    let mut r = ExperimentReport::new("lambda");
    r.param("exponents", toks.join(" "));
    let mut o = Outcome::new(ExperimentReport::default());
    let sharp = sharp_lambda(&pt);
    let brute = brute_lambda(&pt);
    let (s0, t0) = sharp_pair(&pt);
    o.exact("tuple", "n", n)
        .exact("tuple", "full_point", tuple_text(&full))
        .exact("tuple", "r_p", rational_text(&pt.r_p()))
        .exact("lambda", "sharp", rational_text(&sharp))
        .exact("lambda", "brute_force", rational_text(&brute))
        .exact("lambda", "sharp_pair", format!("({s0}, {t0})"))
        .exact("lambda", "lambda_prime", rational_text(&lambda_prime(&pt)))
        .exact("lambda", "equal_point_value", rational_text(&q(n as i64 - 1, n as i64 + 1)));
    if let Some(note) = adjoint_annotation(&pt) {
        o.exact("lambda", "adjoint_transpose_slot", note.transpose_index);
        r.note(format!(
            "the dual exponent is among the two smallest; run the construction on transpose slot {}",
            note.transpose_index
        ));
    }
    let len = n + 1;
    let mut plans_ok = true;
    for s in 1..=len {
        for t in s + 1..=len {
            let sec = format!("pair_{s}_{t}");
            let tau = optimal_tau(&pt, s, t)?;
            o.exact(&sec, "lambda_st", rational_text(&lambda_st(&pt, s, t)?))
                .exact(&sec, "tau", tau)
                .exact(&sec, "lambda_st_prime", rational_text(&lambda_st_prime(&pt, s, t, tau)?))
                .exact(&sec, "lambda_st_dprime", rational_text(&lambda_st_dprime(&pt, s, t)?));
            match select_split(&pt, s, t) {
                Ok(plan) => {
                    let kind = match &plan.kind {
                        PlanKind::Split => "split".to_string(),
                        PlanKind::Exact => "exact".to_string(),
                        PlanKind::LargeCoordinate { u } => format!("large coordinate {u}"),
                        PlanKind::ShiftFree { u, lambda_dprime } => {
                            format!("shift-free at {u}, lambda'' = {}", rational_text(lambda_dprime))
                        }
                    };
                    let opt = |v: &Option<Q>| v.as_ref().map_or("-".to_string(), rational_text);
                    o.exact(&sec, "split_kind", kind)
                        .exact(&sec, "split_j0", format!("{:?}", plan.j0))
                        .exact(&sec, "split_alpha", plan.alpha.map_or("-".to_string(), |a| a.to_string()))
                        .exact(&sec, "split_gamma", opt(&plan.gamma))
                        .exact(&sec, "split_q0_reciprocal", opt(&plan.q0_recip))
                        .exact(&sec, "split_q1_reciprocal", opt(&plan.q1_recip));
                    if let Err(e) = plan.verify(&pt) {
                        plans_ok = false;
                        r.note(format!("pair ({s}, {t}): split identities fail: {e}"));
                    }
                }
                Err(e) => {
                    o.exact(&sec, "split_kind", format!("none: {e}"));
                }
            }
        }
    }
    r.check(Check::flag("sharp_equals_brute_force", sharp == brute))
        .check(Check::flag("split_identities", plans_ok));
    o.report = r;
    Ok(o)
}

/// Vertex interpolation schedule for a full reciprocal point `(1/p_1, …, 1/p_n, 1/p')`.
pub fn plan(args: &[String]) -> Result<Outcome, CliError> {
    let toks = tokens(args);
    if toks.len() < 3 {
        return Err(CliError::Config("plan needs a full reciprocal point with at least 3 coordinates".into()));
    }
    let point = toks.iter().map(|t| rational(&t.as_str().into())).collect::<Result<Vec<_>, _>>()?;
    let pt = PTuple::from_full_point(&point)?;
    let mut r = ExperimentReport::new("plan");
    r.param("target", tuple_text(&point));
    let mut o = Outcome::new(ExperimentReport::default());
    o.exact("target", "sharp_lambda", rational_text(&sharp_lambda(&pt)));
    match interpolation_plan(&pt) {
        InterpolationOutcome::Plan(plan) => {
            o.exact("plan", "start", tuple_text(&plan.start))
                .exact("plan", "steps", plan.steps.len())
                .exact("plan", "final_exponent", rational_text(&plan.final_exponent))
                .exact("plan", "sharp", plan.sharp);
            for (i, step) in plan.steps.iter().enumerate() {
                let sec = format!("step_{}", i + 1);
                o.exact(&sec, "from", tuple_text(&step.from))
                    .exact(&sec, "from_exponent", rational_text(&step.from_exponent))
                    .exact(&sec, "vertex", tuple_text(&step.vertex))
                    .exact(&sec, "theta", rational_text(&step.theta))
                    .exact(&sec, "point", tuple_text(&step.point))
                    .exact(&sec, "exponent", rational_text(&step.exponent))
                    .exact(&sec, "requires_linfty_extension", step.requires_linfty_extension);
            }
            let (back, e) = plan.recompose()?;
            r.check(Check::flag("recomposes_target", back == plan.target && e == plan.final_exponent));
            if !plan.sharp {
                r.note("the schedule reaches the target but not with the sharp exponent");
            }
        }
        InterpolationOutcome::Stalled(diag) => {
            o.exact("plan", "stalled", &diag.reason);
            r.note(format!("no vertex schedule: {}", diag.reason));
        }
    }
    o.report = r;
    Ok(o)
}

struct ModeDefaults {
    build: fn(usize) -> CxConfig,
    counts: Vec<usize>,
    schedule: (i32, i32),
}

fn mode_defaults(mode: &str) -> Result<ModeDefaults, CliError> {
    Ok(match mode {
        "identity" => ModeDefaults { build: CxConfig::identity, counts: vec![2, 4, 6], schedule: (4, 1) },
        "separation" => ModeDefaults { build: CxConfig::separation, counts: vec![1, 2, 3], schedule: (0, 4) },
        "reference" => ModeDefaults { build: CxConfig::reference, counts: vec![6], schedule: (0, 10) },
        other => return Err(CliError::Config(format!("mode {other:?}: expected identity, separation or reference"))),
    })
}

/// Resolves the per-`N` library configurations.
pub fn counterexample_configs(cfg: &CounterexampleConfig) -> Result<Vec<CxConfig>, CliError> {
    let defaults = mode_defaults(&cfg.mode)?;
    let counts = cfg.counts.clone().unwrap_or(defaults.counts);
    if counts.is_empty() || counts.contains(&0) {
        return Err(CliError::Config("counts must list positive N".into()));
    }
    let reciprocals = cfg
        .reciprocals
        .as_ref()
        .map(|v| v.iter().map(rational).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    let offsets = cfg
        .lambda_offsets
        .as_ref()
        .map(|v| v.iter().map(rational).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    let eta = cfg.eta_radius.as_ref().map(rational).transpose()?;
    let (offset, step) = (cfg.zeta_offset.unwrap_or(defaults.schedule.0), cfg.zeta_step.unwrap_or(defaults.schedule.1));
    Ok(counts
        .iter()
        .map(|&count| {
            let mut c = (defaults.build)(count);
            c.zeta = linear_schedule(offset, step, count);
            if let Some(n) = cfg.n {
                c.n = n;
                c.reciprocals = vec![q(1, 4); n];
            }
            c.s = cfg.s.unwrap_or(c.s);
            c.t = cfg.t.unwrap_or(c.t);
            c.dimension = cfg.dimension.unwrap_or(c.dimension);
            if let Some(r) = &reciprocals {
                c.reciprocals = r.clone();
            }
            if let Some(o) = &offsets {
                c.lambda_offsets = o.clone();
            }
            if let Some(e) = &eta {
                c.eta_radius = e.clone();
            }
            if cfg.samples.is_some() || cfg.period.is_some() {
                let g = c.grid.unwrap_or(CxGrid { samples_per_axis: 1 << 18, period: 64 });
                c.grid = Some(CxGrid {
                    samples_per_axis: cfg.samples.unwrap_or(g.samples_per_axis),
                    period: cfg.period.unwrap_or(g.period),
                });
            }
            c.quadrature = Quadrature {
                samples_per_axis: cfg.quadrature_samples.unwrap_or(c.quadrature.samples_per_axis),
                window: cfg.quadrature_window.unwrap_or(c.quadrature.window),
            };
            c
        })
        .collect())
}

fn record_constraints(o: &mut Outcome, count: usize, v: &Validation) {
    let sec = format!("constraints_n{count}");
    for c in &v.constraints {
        let kind = match c.kind {
            ConstraintKind::Structure => "structure",
            ConstraintKind::Frequency => "frequency",
            ConstraintKind::Grid => "grid",
            ConstraintKind::Physical => "physical",
        };
        let status = if c.passed { "pass" } else { "FAIL" };
        o.exact(&sec, &c.name, format!("{status} ({kind}): {}", c.detail));
    }
}

pub fn counterexample(cfg: &CounterexampleConfig) -> Result<Outcome, CliError> {
    let cfgs = counterexample_configs(cfg)?;
    let validations: Vec<Validation> = cfgs.iter().map(validate_config).collect();
    let mut o = Outcome::new(ExperimentReport::default());
    for (c, v) in cfgs.iter().zip(&validations) {
        record_constraints(&mut o, c.bumps(), v);
    }
    let symbolic = cfg.mode == "reference" || cfgs.iter().any(|c| c.grid.is_none());
    let runnable = validations.iter().all(Validation::runnable);
    if symbolic || !runnable {
        let mut r = ExperimentReport::new("counterexample");
        r.param("mode", &cfg.mode);
        for (c, v) in cfgs.iter().zip(&validations) {
            let ok = if symbolic { v.passed() } else { v.runnable() };
            r.check(Check::flag(format!("constraints[N={}]", c.bumps()), ok));
            if let Some(bad) = v.constraints.iter().find(|x| !x.passed) {
                r.note(format!("N = {}: {} violated: {}", c.bumps(), bad.name, bad.detail));
            }
        }
        o.invalid = !runnable;
        o.report = r;
        return Ok(o);
    }

    let sweep = run_sweep(&cfgs)?;
    let tol = CxTolerances {
        orthogonality: cfg.orthogonality_tolerance,
        identity: cfg.identity_tolerance,
        slope: cfg.slope_tolerance,
    };
    let mut r = sweep.report(&cfg.mode, tol);
    let first = &cfgs[0];
    let grid = first.grid_spec()?;
    r.param("n", first.n)
        .param("pair", format!("({}, {})", first.s, first.t))
        .param("counts", format!("{:?}", cfgs.iter().map(|c| c.bumps()).collect::<Vec<_>>()))
        .param("zeta", format!("{:?}", cfgs.last().map(|c| c.zeta.clone()).unwrap_or_default()))
        .param("eta_radius", rational_text(&first.eta_radius))
        .param("reciprocals", tuple_text(&first.reciprocals))
        .param("quadrature_samples", first.quadrature.samples_per_axis)
        .param("quadrature_window", first.quadrature.window);
    let constants: Vec<f64> = sweep.reports.iter().map(|x| x.norm_constant).collect();
    for rep in &sweep.reports {
        r.metric(&format!("norm_constant[N={}]", rep.bumps), rep.norm_constant);
    }
    if validations.iter().all(Validation::passed) {
        let [lo, hi] = cfg.norm_constant_range;
        let min = constants.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = constants.iter().cloned().fold(0.0, f64::max);
        r.check(Check::within("norm_constant_min", min, lo, hi)).check(Check::within("norm_constant_max", max, lo, hi));
    } else {
        r.note("bumps overlap physically: norm constants are reported, not checked");
    }
    let pt = first.p_tuple()?;
    o.exact("exponents", "sharp_lambda", rational_text(&sharp_lambda(&pt)))
        .exact("exponents", "lambda_st", rational_text(&lambda_st(&pt, first.s, first.t)?));
    for f in &sweep.fits {
        let sec = format!("fit_lambda_{}", rational_text(&f.lambda).replace('/', "_"));
        o.exact(&sec, "lambda", rational_text(&f.lambda))
            .exact(&sec, "offset", rational_text(&f.offset))
            .exact(&sec, "predicted_slope", rational_text(&f.predicted))
            .exact(&sec, "measured_slope", f.fit.exponent);
    }
    if sweep.fits.is_empty() {
        r.note("fewer than 3 values of N: no growth fit");
    }
    if first.lambda_offsets.iter().any(Q::is_zero) {
        r.note("D_lambda(K) is measured directly; its growth in N is reported, not assumed");
    }
    o.report = r;
    o.grid = grid_info(&grid);
    Ok(o)
}
