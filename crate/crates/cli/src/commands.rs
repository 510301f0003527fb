//! One function per command. Each returns its results, its failing checks
//! and, for tabular commands, a CSV table.

use std::path::{Path, PathBuf};

use corners_core::continuous::{self, ContinuousSpec, Potential};
use corners_core::cumulants::{self, ObservableSet};
use corners_core::jack::{verify_branching, verify_cauchy, Partition};
use corners_core::measure::{partition_function, total_variation};
use corners_core::nekrasov::{
    certify_analyticity, check_all_bijections, AnalyticFamily, NekrasovSystem, ResidueForm, Variant, Which,
};
use corners_core::numerics::{rng, Poly};
use corners_core::ratios::verify_ratios;
use corners_core::state_space::{count_patterns, enumerate_patterns, enumerate_signatures};
use corners_core::{Complex64, ContourSpec, EnumeratedMeasure, MeasureSpec, WeightFn};
use serde_json::{json, Value};

use crate::config::{CliError, CliResult, Params};

type C = Complex64;

pub struct Outcome {
    pub results: Value,
    pub failures: Vec<String>,
    pub csv: Option<String>,
}

pub struct Ctx<'a> {
    pub p: &'a Params,
    pub seed: u64,
    pub tol: Option<f64>,
    pub out: Option<&'a Path>,
}

impl Ctx<'_> {
    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

pub const COMMANDS: &[&str] = &[
    "enumerate",
    "measure",
    "verify-nekrasov",
    "verify-bijection",
    "verify-jack",
    "verify-discrete-loop",
    "sample-continuous",
    "verify-continuous-loop",
    "diffuse-limit",
    "verify-cumulants",
];

const MEASURE_KEYS: &[&str] = &[
    "measure.theta",
    "measure.n",
    "measure.k",
    "measure.m",
    "measure.weight",
    "measure.q",
    "measure.qs",
    "measure.poly",
];
const CONTINUOUS_KEYS: &[&str] = &[
    "continuous.theta",
    "continuous.n",
    "continuous.k",
    "continuous.a_minus",
    "continuous.a_plus",
    "continuous.poly",
    "continuous.samples",
    "continuous.burn_in",
];
const CONTOUR_KEYS: &[&str] = &["contour.center", "contour.semi_x", "contour.semi_y", "contour.nodes"];

/// Allowed keys per command, besides the global `command`, `seed`, `tol`.
pub fn allowed_keys(command: &str) -> Vec<&'static str> {
    let mut k: Vec<&str> = vec!["command", "seed", "tol"];
    let extra: Vec<&[&str]> = match command {
        "enumerate" => vec![&["measure.theta", "measure.n", "measure.k", "measure.m", "enumerate.max_list"]],
        "measure" => vec![MEASURE_KEYS],
        "verify-nekrasov" => vec![MEASURE_KEYS, &["nekrasov.which", "nekrasov.corrupt", "nekrasov.residue_form"]],
        "verify-bijection" => vec![MEASURE_KEYS, &["bijection.variant", "nekrasov.corrupt"]],
        "verify-jack" => {
            vec![&["jack.n", "jack.thetas", "jack.max_part", "jack.cauchy_n", "jack.q", "jack.truncation"]]
        }
        "verify-discrete-loop" => vec![MEASURE_KEYS, &["loop.l", "loop.points", "loop.v"], CONTOUR_KEYS],
        "sample-continuous" => vec![CONTINUOUS_KEYS, &["sample.batch"]],
        "verify-continuous-loop" => {
            vec![CONTINUOUS_KEYS, &["loop.points", "loop.v", "loop.batch", "loop.sigmas"], CONTOUR_KEYS]
        }
        "diffuse-limit" => vec![CONTINUOUS_KEYS, &["diffuse.l_values"]],
        "verify-cumulants" => vec![MEASURE_KEYS, &["cumulants.vars", "cumulants.states", "cumulants.step"]],
        _ => vec![],
    };
    for e in extra {
        k.extend_from_slice(e);
    }
    k
}

pub fn run(command: &str, ctx: &Ctx) -> CliResult<Outcome> {
    ctx.p.reject_unknown(&allowed_keys(command))?;
    match command {
        "enumerate" => enumerate(ctx),
        "measure" => measure(ctx),
        "verify-nekrasov" => verify_nekrasov(ctx),
        "verify-bijection" => verify_bijection(ctx),
        "verify-jack" => verify_jack(ctx),
        "verify-discrete-loop" => verify_discrete_loop(ctx),
        "sample-continuous" => sample_continuous(ctx),
        "verify-continuous-loop" => verify_continuous_loop(ctx),
        "diffuse-limit" => diffuse_limit(ctx),
        "verify-cumulants" => verify_cumulants(ctx),
        other => Err(CliError::Config(format!("unknown command {other:?}; expected one of {COMMANDS:?}"))),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn cjson(z: C) -> Value {
    json!([z.re, z.im])
}

fn usize_key(p: &Params, key: &str, default: Option<u64>) -> CliResult<usize> {
    Ok(match default {
        Some(d) => p.uint_or(key, d)?,
        None => p.uint_req(key)?,
    } as usize)
}

fn measure_spec(p: &Params, default_weight: &str) -> CliResult<MeasureSpec> {
    let theta = p.f64_req("measure.theta")?;
    let n = usize_key(p, "measure.n", None)?;
    let k = usize_key(p, "measure.k", Some(1))?;
    let m = p.uint_req("measure.m")? as u32;
    let q = p.f64_or("measure.q", 0.6)?;
    let spec = match p.str_or("measure.weight", default_weight)? {
        "unit" => MeasureSpec::top_weighted(theta, n, k, m, WeightFn::Unit)?,
        "krawtchouk" => MeasureSpec::top_weighted(theta, n, k, m, WeightFn::krawtchouk(q, theta, n, m))?,
        "geometric" => {
            let qs = p.f64_list_or("measure.qs", &[])?;
            if qs.is_empty() {
                MeasureSpec::top_weighted(theta, n, k, m, WeightFn::Geometric { q })?
            } else {
                MeasureSpec::new(theta, n, k, m, qs.into_iter().map(|q| WeightFn::Geometric { q }).collect())?
            }
        }
        "exp-poly" => {
            let c = p.f64_list_or("measure.poly", &[])?;
            if c.is_empty() {
                return Err(CliError::Config("measure.poly is required for exp-poly".into()));
            }
            MeasureSpec::top_weighted(theta, n, k, m, WeightFn::ExpPolynomial(Poly::new(c)))?
        }
        w => return Err(CliError::Config(format!("measure.weight: unknown weight {w:?}"))),
    };
    Ok(spec)
}

fn continuous_spec(p: &Params) -> CliResult<ContinuousSpec> {
    let theta = p.f64_or("continuous.theta", 0.7)?;
    let n = usize_key(p, "continuous.n", Some(2))?;
    let k = usize_key(p, "continuous.k", Some(1))?;
    let a_minus = p.f64_or("continuous.a_minus", -2.0)?;
    let a_plus = p.f64_or("continuous.a_plus", 2.0)?;
    let poly = p.f64_list_or("continuous.poly", &[0.0, 0.0, 0.5])?;
    Ok(ContinuousSpec::new(theta, n, k, a_minus, a_plus, Potential::Polynomial(Poly::new(poly)))?)
}

fn contour(p: &Params, default: ContourSpec) -> CliResult<ContourSpec> {
    let c = ContourSpec::ellipse(
        p.complex_opt("contour.center")?.unwrap_or(default.center),
        p.f64_or("contour.semi_x", default.semi_axis_x)?,
        p.f64_or("contour.semi_y", default.semi_axis_y)?,
        p.uint_or("contour.nodes", default.nodes as u64)? as usize,
    );
    c.validate()?;
    Ok(c)
}

/// Points [level, re, im] grouped per level k..N.
fn grouped_points(pts: &[(usize, C)], n: usize, k: usize) -> CliResult<Vec<Vec<C>>> {
    let mut out = vec![Vec::new(); n + 1 - k];
    for &(lvl, z) in pts {
        if lvl < k || lvl > n {
            return Err(CliError::Config(format!("loop.points: level {lvl} outside [{k}, {n}]")));
        }
        out[lvl - k].push(z);
    }
    Ok(out)
}

fn enumerate(ctx: &Ctx) -> CliResult<Outcome> {
    let p = ctx.p;
    let theta = p.f64_or("measure.theta", 1.0)?;
    let n = usize_key(p, "measure.n", None)?;
    let k = usize_key(p, "measure.k", Some(1))?;
    let m = p.uint_req("measure.m")? as u32;
    let max_list = p.uint_or("enumerate.max_list", 1000)?;
    let count = count_patterns(n, k, m)?;
    let mut csv = String::from("index,levels\n");
    let mut listed = Vec::new();
    if count <= max_list {
        for (i, pat) in enumerate_patterns(theta, n, k, m)?.enumerate() {
            let levels: Vec<Vec<u32>> = (k..=n).rev().map(|j| pat.level(j).to_vec()).collect();
            let txt: Vec<String> =
                levels.iter().map(|l| l.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")).collect();
            csv += &format!("{i},{}\n", txt.join(" | "));
            listed.push(levels);
        }
    }
    Ok(Outcome {
        results: json!({ "n": n, "k": k, "m": m, "count": count, "patterns": listed }),
        failures: vec![],
        csv: Some(csv),
    })
}

fn measure(ctx: &Ctx) -> CliResult<Outcome> {
    let spec = measure_spec(ctx.p, "unit")?;
    let em = EnumeratedMeasure::new(&spec)?;
    let z = partition_function(&spec)?;
    let tol = ctx.tol(1e-12);
    let ratios = verify_ratios(&spec)?;
    let mut failures = Vec::new();
    if !(ratios.max_rel_err < tol) {
        failures.push(format!("ratio formulas: max relative error {:e} at {:?}", ratios.max_rel_err, ratios.worst));
    }
    let mut projections = Vec::new();
    // Projection holds only when every weight below the top is 1.
    let top_only = spec.weights[..spec.weights.len() - 1].iter().all(WeightFn::is_unit);
    for m in (spec.k + 1..=spec.n).filter(|_| top_only) {
        let sub = MeasureSpec::new(spec.theta, spec.n, m, spec.m, spec.weights[m - spec.k..].to_vec())?;
        let tv = total_variation(&em.marginal(m)?, &EnumeratedMeasure::new(&sub)?.marginal(m)?);
        if !(tv < tol) {
            failures.push(format!("projection onto levels ≥ {m}: total variation {tv:e}"));
        }
        projections.push(json!({ "m": m, "total_variation": tv }));
    }
    let mut csv = String::from("index,levels,probability_re,probability_im\n");
    for i in 0..em.len() {
        let pr = em.prob(i);
        let lv: Vec<String> = em.parts(i).iter().map(u32::to_string).collect();
        csv += &format!("{i},{},{:.17e},{:.17e}\n", lv.join(" "), pr.re, pr.im);
    }
    Ok(Outcome {
        results: json!({
            "count": em.len(),
            "partition_function": cjson(z),
            "ratios": to_json(&ratios),
            "projections": projections,
            "projection_checked": top_only,
        }),
        failures,
        csv: Some(csv),
    })
}

fn nekrasov_family(p: &Params, spec: &MeasureSpec) -> CliResult<AnalyticFamily> {
    let fam = AnalyticFamily::from_spec(spec)?;
    let corrupt = p.f64_or("nekrasov.corrupt", 1.0)?;
    Ok(if corrupt == 1.0 { fam } else { fam.corrupted(corrupt) })
}

fn verify_nekrasov(ctx: &Ctx) -> CliResult<Outcome> {
    let p = ctx.p;
    let spec = measure_spec(p, "krawtchouk")?;
    let fam = nekrasov_family(p, &spec)?;
    let form = match p.str_or("nekrasov.residue_form", "corrected")? {
        "corrected" => ResidueForm::Corrected,
        "printed" => ResidueForm::Printed,
        f => return Err(CliError::Config(format!("nekrasov.residue_form: unknown form {f:?}"))),
    };
    let which: Vec<Which> = match p.str_or("nekrasov.which", "both")? {
        "r1" => vec![Which::R1],
        "r2" => vec![Which::R2],
        "both" => vec![Which::R1, Which::R2],
        w => return Err(CliError::Config(format!("nekrasov.which: expected r1, r2 or both, got {w:?}"))),
    };
    let tol = ctx.tol(corners_core::nekrasov::DEFAULT_TOL);
    let sys = NekrasovSystem::from_spec(&spec, &fam)?.with_residue_form(form);
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for w in which {
        let r = certify_analyticity(&sys, w, tol)?;
        if !r.passed {
            let worst = r.poles.iter().max_by(|a, b| a.residue.total_cmp(&b.residue));
            failures.push(format!(
                "{w:?}: max pole residue {:e}, max moment {:e}; worst pole {:?}",
                r.max_residue,
                r.max_moment,
                worst.map(|x| x.location)
            ));
        }
        reports.push(to_json(&r));
    }
    Ok(Outcome { results: json!({ "reports": reports }), failures, csv: None })
}

fn verify_bijection(ctx: &Ctx) -> CliResult<Outcome> {
    let p = ctx.p;
    let spec = measure_spec(p, "krawtchouk")?;
    let fam = nekrasov_family(p, &spec)?;
    let em = EnumeratedMeasure::new(&spec)?;
    let variants = match p.str_or("bijection.variant", "both")? {
        "b1" => vec![Variant::B1],
        "b2" => vec![Variant::B2],
        "both" => vec![Variant::B1, Variant::B2],
        v => return Err(CliError::Config(format!("bijection.variant: expected b1, b2 or both, got {v:?}"))),
    };
    let mut all = Vec::new();
    let mut failures = Vec::new();
    for v in variants {
        for r in check_all_bijections(&em, &fam, v)? {
            if !r.passed {
                failures.push(format!(
                    "{v:?} at s = {}, i = {}: containment {}, injective {}, onto {}, identity residual {:e}",
                    r.s, r.i, r.containment, r.injective, r.onto, r.max_identity_residual
                ));
            }
            all.push(to_json(&r));
        }
    }
    Ok(Outcome { results: json!({ "checked": all.len(), "reports": all }), failures, csv: None })
}

fn verify_jack(ctx: &Ctx) -> CliResult<Outcome> {
    let p = ctx.p;
    let n = usize_key(p, "jack.n", Some(3))?;
    let thetas = p.f64_list_or("jack.thetas", &[0.5, 1.0, 1.3, 2.0])?;
    let max_part = p.uint_or("jack.max_part", 3)? as u32;
    let cauchy_n = p.uint_list_or("jack.cauchy_n", &[1, 2])?;
    let qs = p.f64_list_or("jack.q", &[0.1, 0.2])?;
    let t = p.uint_or("jack.truncation", 60)? as u32;
    let tol = ctx.tol(1e-10);
    let mut failures = Vec::new();
    let mut branching = Vec::new();
    for &theta in &thetas {
        let mut worst = 0.0f64;
        let mut count = 0;
        for sig in enumerate_signatures(n, max_part)? {
            let lam = Partition::new(sig.parts.clone())?;
            let r = verify_branching(&lam, n, theta)?;
            if !(r < tol) {
                failures.push(format!("branching at λ = {:?}, θ = {theta}: residual {r:e}", sig.parts));
            }
            worst = worst.max(r);
            count += 1;
        }
        branching.push(json!({ "theta": theta, "partitions": count, "max_residual": worst }));
    }
    let mut cauchy = Vec::new();
    for &cn in &cauchy_n {
        for &theta in &thetas {
            for &q in &qs {
                let r = verify_cauchy(cn as usize, theta, q, t)?;
                if !r.ok {
                    failures.push(format!(
                        "Cauchy N = {cn}, θ = {theta}, q = {q}: residual {:e} above tail bound {:e}",
                        r.residual, r.tail_bound
                    ));
                }
                cauchy.push(json!({ "n": cn, "theta": theta, "q": q, "report": to_json(&r) }));
            }
        }
    }
    Ok(Outcome { results: json!({ "branching": branching, "cauchy": cauchy }), failures, csv: None })
}

fn verify_discrete_loop(ctx: &Ctx) -> CliResult<Outcome> {
    let p = ctx.p;
    let spec = measure_spec(p, "krawtchouk")?;
    let em = EnumeratedMeasure::new(&spec)?;
    let l = p.f64_or("loop.l", 1.0)?;
    let obs = ObservableSet { l, points: grouped_points(&p.points("loop.points")?, spec.n, spec.k)? };
    let hi = (spec.m as f64 - spec.theta) / l;
    let v = p.complex_opt("loop.v")?.unwrap_or(C::new(0.5 * hi, 2.0));
    let c = contour(p, cumulants::default_contour(spec.theta, spec.n, spec.m, l))?;
    let tol = ctx.tol(1e-8);
    let rep = cumulants::verify_discrete_loop_equation(&em, &obs, v, &c, 1e-3 * tol)?;
    let mut failures = Vec::new();
    if !(rep.residual < tol) {
        let worst = rep.terms.iter().max_by(|a, b| a.value.norm().total_cmp(&b.value.norm()));
        failures.push(format!(
            "loop equation residual {:e} ≥ {tol:e}; largest term line {:?} level {:?} subsets {:?}",
            rep.residual,
            worst.map(|t| t.line),
            worst.and_then(|t| t.level),
            worst.map(|t| t.subsets.clone())
        ));
    }
    Ok(Outcome { results: to_json(&rep), failures, csv: None })
}

fn batch_path(p: &Params, key: &str, out: Option<&Path>) -> CliResult<PathBuf> {
    if let Some(s) = p.opt_str(key)? {
        return Ok(PathBuf::from(s));
    }
    match out {
        Some(o) => Ok(o.with_extension("bin")),
        None => Err(CliError::Config(format!("{key} is required when --out is not given"))),
    }
}

fn sample_continuous(ctx: &Ctx) -> CliResult<Outcome> {
    let p = ctx.p;
    let spec = continuous_spec(p)?;
    let count = p.uint_or("continuous.samples", 100_000)? as usize;
    let burn = p.uint_or("continuous.burn_in", 2000)? as usize;
    let path = batch_path(p, "sample.batch", ctx.out)?;
    let b = continuous::sample(&spec, count, burn, ctx.seed);
    b.check()?;
    continuous::write_batch(&path, &b)?;
    Ok(Outcome {
        results: json!({
            "batch": path.display().to_string(),
            "samples": b.count,
            "diagnostics": to_json(&b.diagnostics),
        }),
        failures: vec![],
        csv: None,
    })
}

fn verify_continuous_loop(ctx: &Ctx) -> CliResult<Outcome> {
    let p = ctx.p;
    let spec = continuous_spec(p)?;
    let pts = grouped_points(&p.points("loop.points")?, spec.n, spec.k)?;
    let v = p.complex_opt("loop.v")?.unwrap_or(C::new(0.3, 2.6));
    let sigmas = p.f64_or("loop.sigmas", 4.0)?;
    let c = contour(p, continuous::default_contour(spec.a_minus, spec.a_plus))?;
    let batch = match p.opt_str("loop.batch")? {
        Some(path) => continuous::read_batch(Path::new(path))?,
        None => {
            let count = p.uint_or("continuous.samples", 100_000)? as usize;
            let burn = p.uint_or("continuous.burn_in", 2000)? as usize;
            continuous::sample(&spec, count, burn, ctx.seed)
        }
    };
    let rep = continuous::verify_continuous_loop_equation(&spec, &pts, v, &c, &batch, ctx.tol(1e-12))?;
    let mut failures = Vec::new();
    if !(rep.residual < sigmas * rep.stderr) {
        failures.push(format!("residual {:e} ≥ {sigmas}σ with σ = {:e}", rep.residual, rep.stderr));
    }
    Ok(Outcome { results: to_json(&rep), failures, csv: None })
}

fn diffuse_limit(ctx: &Ctx) -> CliResult<Outcome> {
    let p = ctx.p;
    let spec = continuous_spec(p)?;
    let ls: Vec<u32> = p.uint_list_or("diffuse.l_values", &[5, 10, 20, 40])?.into_iter().map(|x| x as u32).collect();
    let samples = p.uint_or("continuous.samples", 1_000_000)? as usize;
    let t = continuous::diffuse_limit_experiment(&spec, &ls, samples, ctx.seed)?;
    let mut failures = Vec::new();
    if !t.decreasing {
        failures.push("moment errors are not decreasing in L".to_string());
    }
    if !t.final_within_3sigma {
        let last = t.rows.last().unwrap();
        failures.push(format!(
            "final gap at L = {}: errors {:?} vs 3× combined uncertainty {:?}",
            last.l,
            last.error,
            last.combined.map(|c| 3.0 * c)
        ));
    }
    Ok(Outcome { results: to_json(&t), csv: Some(t.to_csv()), failures })
}

fn verify_cumulants(ctx: &Ctx) -> CliResult<Outcome> {
    use rand::Rng as _;
    let p = ctx.p;
    let nv = usize_key(p, "cumulants.vars", Some(4))?;
    let states = usize_key(p, "cumulants.states", Some(40))?;
    let step = p.f64_or("cumulants.step", corners_core::numerics::DEFAULT_STEP)?;
    if nv < 2 || nv > 4 {
        return Err(CliError::Config("cumulants.vars must be 2, 3 or 4".into()));
    }
    let tol = ctx.tol(1e-12);
    let mut r = rng(ctx.seed, 0);
    let mut probs: Vec<C> = (0..states).map(|_| C::new(r.gen_range(0.1..1.0), 0.0)).collect();
    let s: C = probs.iter().sum();
    probs.iter_mut().for_each(|x| *x /= s);
    let vars: Vec<Vec<C>> = (0..nv)
        .map(|_| (0..states).map(|_| C::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect())
        .collect();
    let refs: Vec<&[C]> = vars.iter().map(Vec::as_slice).collect();
    let mut failures = Vec::new();

    let mut round_trip = 0.0f64;
    for len in 1..=nv {
        let sub = &refs[..len];
        let direct = cumulants::cumulant_from_moments(&probs, sub)?;
        let mom: C = (0..states).map(|i| probs[i] * sub.iter().map(|v| v[i]).product::<C>()).sum();
        round_trip = round_trip.max((cumulants::moment_from_cumulants(&probs, sub)? - mom).norm());
        if !direct.norm().is_finite() {
            failures.push(format!("cumulant of {len} variables not finite"));
        }
    }
    if !(round_trip < tol) {
        failures.push(format!("moment/cumulant round trip error {round_trip:e}"));
    }
    let product = cumulants::verify_product_formula(&probs, refs[0], refs[1], &refs[2..])?;
    if !(product < tol) {
        failures.push(format!("product formula error {product:e}"));
    }

    // Exact versus finite-difference cumulants on a small measure.
    let spec = match p.keys().any(|k| k.starts_with("measure.")) {
        true => measure_spec(p, "krawtchouk")?,
        false => MeasureSpec::top_weighted(0.7, 2, 1, 3, WeightFn::krawtchouk(0.6, 0.7, 2, 3))?,
    };
    let em = EnumeratedMeasure::new(&spec)?;
    let right = spec.m as f64 - spec.theta + 1.5;
    let (k, theta) = (spec.k, spec.theta);
    let xi = |parts: &[u32]| C::new(parts[0] as f64, 0.0);
    let mut fd = Vec::new();
    for count in 1..=2 {
        let mut obs = ObservableSet::empty(1.0, spec.n + 1 - k);
        for c in 0..count {
            let nl = obs.points.len();
            obs.points[c % nl].push(C::new(right + 0.7 * c as f64, 0.0));
        }
        let kern_vars: Vec<Vec<C>> = obs
            .points
            .iter()
            .enumerate()
            .flat_map(|(r, vs)| vs.iter().map(move |&v| (r + k, v)))
            .map(|(lvl, v)| {
                let off = em.shape().offset(lvl);
                (0..em.len()).map(|s| cumulants::stieltjes_parts(&em.parts(s)[off..off + lvl], theta, 1.0, v)).collect()
            })
            .collect();
        let xs: Vec<C> = (0..em.len()).map(|s| xi(em.parts(s))).collect();
        let mut all: Vec<&[C]> = vec![&xs];
        all.extend(kern_vars.iter().map(Vec::as_slice));
        let exact = cumulants::cumulant_from_moments(em.probabilities(), &all)?;
        let d = cumulants::derivative_cumulant(&em, &obs, xi, step)?;
        let err = (d - exact).norm();
        if !(err < 1e-6) {
            failures.push(format!("finite-difference cumulant of order {count}: error {err:e}"));
        }
        fd.push(json!({ "order": count, "exact": cjson(exact), "finite_difference": cjson(d), "error": err }));
    }
    Ok(Outcome {
        results: json!({
            "variables": nv,
            "states": states,
            "round_trip_error": round_trip,
            "product_formula_error": product,
            "finite_difference": fd,
        }),
        failures,
        csv: None,
    })
}
