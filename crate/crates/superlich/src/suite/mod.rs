//! Batch verification harness: a catalog-by-identity case matrix, seeded and
//! deterministic, with machine-readable JSON-line reports. Cases run
//! independently (optionally in parallel) and a failure or panic in one case
//! never aborts the rest.

pub mod config;

use crate::clifford::{build_gammas, c2, quantize, Multivector};
use crate::degenerate::{m0, m0_quantize_restricted, SplitCovector, SplitSpace};
use crate::diffop::{
    coefficient_residual, dirac, dirac_associated, dirac_squared,
    getzler_p, pipeline_p, rhs_classical, rhs_connection, rhs_simple_type, rhs_super,
    weak_residual, DiffOp2, TestSection,
};
use crate::forms::{
    beta, dot, ext_cov_deriv, ext_cov_deriv_sum, g_projection, nabla_one_form, quantize_form,
    quantize_sum, Bundle, Fiber, FormSum,
};
use crate::geometry::catalog::by_id;
use crate::geometry::Point;
use crate::linalg::{c, CMat, C64};
use crate::superconn::{
    apply_formsum_to_section, clifford_connection, form_supercommutator, random_commutant_form,
    random_even_one_form, supercurvature, Family, FormSection, Superconnection, Twisting,
};
use crate::{Error, Result};
use config::Config;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;
use std::time::Instant;

pub const IDENTITY_IDS: &[&str] = &[
    "clifford-relations",
    "quantize",
    "lemma-2-1",
    "lemma-2-2",
    "eq-2-4",
    "lemma-3-1",
    "g-projection",
    "eq-3-3",
    "eq-3-4",
    "lemma-3-3",
    "cor-3-4",
    "lemma-4-1",
    "eq-1-1",
    "eq-4-2",
    "thm-4-2",
    "eq-4-9",
    "eq-4-10",
    "m0-relations",
];

/// Default tolerance tier per identity: algebraic identities at 1e-10,
/// first-derivative identities at 1e-8, second-derivative identities and
/// weak operator equalities at 1e-6.
pub fn default_tolerance(identity: &str) -> f64 {
    match identity {
        "clifford-relations" | "quantize" | "lemma-2-2" | "eq-2-4" | "g-projection"
        | "lemma-4-1" | "eq-4-10" | "m0-relations" => 1e-10,
        "lemma-2-1" | "lemma-3-1" | "eq-3-3" | "lemma-3-3" | "eq-4-9" => 1e-8,
        "eq-3-4" | "cor-3-4" | "eq-1-1" | "eq-4-2" | "thm-4-2" => 1e-6,
        _ => 1e-6,
    }
}

/// (family, twisting) combinations an identity runs with by default on a
/// chart of dimension n.
pub fn default_combos(identity: &str, n: usize) -> Vec<(&'static str, &'static str)> {
    let mut families_with_mix = vec![("a0", "random"), ("a2", "random")];
    if n >= 4 {
        families_with_mix.push(("full-mix", "random"));
    }
    match identity {
        "clifford-relations" | "quantize" | "lemma-3-1" | "g-projection" | "eq-3-3"
        | "lemma-3-3" | "m0-relations" => vec![("none", "flat")],
        "eq-3-4" | "eq-4-2" => vec![("none", "random")],
        "eq-1-1" => vec![("none", "flat"), ("none", "random")],
        "lemma-2-1" | "lemma-2-2" | "cor-3-4" | "lemma-4-1" => families_with_mix,
        "thm-4-2" => {
            let mut all = vec![("none", "random")];
            all.extend(families_with_mix);
            all
        }
        "eq-4-9" => vec![("a0", "random")],
        "eq-2-4" => {
            if n >= 4 {
                vec![("full-mix", "flat")]
            } else {
                vec![]
            }
        }
        "eq-4-10" => {
            if n >= 4 {
                vec![("a2", "flat")]
            } else {
                vec![]
            }
        }
        _ => vec![],
    }
}

/// Check a requested combination for validity on a chart of dimension n.
pub fn combo_is_valid(identity: &str, n: usize, family: &str, twisting: &str) -> bool {
    if Family::parse(family).is_none() || (twisting != "flat" && twisting != "random") {
        return false;
    }
    if family == "full-mix" && n < 4 {
        return false;
    }
    match identity {
        "eq-2-4" => n >= 4 && family == "full-mix",
        "eq-4-10" => n >= 4 && family == "a2",
        "eq-4-9" => family == "a0",
        "eq-1-1" => family == "none",
        _ => true,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseSpec {
    pub geometry: String,
    pub identity: String,
    pub family: String,
    pub twisting: String,
    pub w_plus: usize,
    pub w_minus: usize,
    pub seed: u64,
    pub sections: usize,
    pub points: usize,
    pub tolerance: f64,
}

impl CaseSpec {
    pub fn case_id(&self) -> String {
        format!(
            "{}/{}/{}/{}/w{}+{}/s{}",
            self.identity,
            self.geometry,
            self.family,
            self.twisting,
            self.w_plus,
            self.w_minus,
            self.seed
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub schema: String,
    pub case_id: String,
    #[serde(flatten)]
    pub spec: CaseSpec,
    pub max_residual: Option<f64>,
    pub pass: bool,
    pub error: Option<String>,
    pub wall_ms: u128,
    pub engine: String,
}

pub const REPORT_SCHEMA: &str = "superlich/v1";

fn engine_version() -> String {
    format!("superlich {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteSummary {
    pub schema: String,
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub errored: usize,
    pub wall_ms: u128,
}

pub struct SuiteOutput {
    pub reports: Vec<CaseReport>,
    pub summary: SuiteSummary,
}

impl SuiteOutput {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0 && self.summary.errored == 0
    }

    /// JSON lines: one object per case, then the summary object. Case lines
    /// are sorted by case id.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.reports {
            out.push_str(&serde_json::to_string(r).expect("report serialization"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&self.summary).expect("summary serialization"));
        out.push('\n');
        out
    }
}

/// Enumerate the case matrix for a configuration.
pub fn enumerate_cases(cfg: &Config) -> Result<Vec<CaseSpec>> {
    cfg.validate()?;
    let mut cases = Vec::new();
    for identity in &cfg.identities {
        for geometry in &cfg.geometries {
            let geom = by_id(geometry)?;
            let combos: Vec<(String, String)> = match (&cfg.families, &cfg.twistings) {
                (None, None) => default_combos(identity, geom.n)
                    .into_iter()
                    .map(|(f, t)| (f.to_string(), t.to_string()))
                    .collect(),
                _ => {
                    // explicit filters: intersect the defaults, or build the
                    // full product when both are given
                    let defaults = default_combos(identity, geom.n);
                    let fams: Vec<String> = cfg
                        .families
                        .clone()
                        .unwrap_or_else(|| {
                            defaults.iter().map(|(f, _)| f.to_string()).collect()
                        });
                    let tws: Vec<String> = cfg
                        .twistings
                        .clone()
                        .unwrap_or_else(|| {
                            defaults.iter().map(|(_, t)| t.to_string()).collect()
                        });
                    let mut combos = Vec::new();
                    for f in &fams {
                        for t in &tws {
                            if combo_is_valid(identity, geom.n, f, t)
                                && !combos.contains(&(f.clone(), t.clone()))
                            {
                                combos.push((f.clone(), t.clone()));
                            }
                        }
                    }
                    combos
                }
            };
            for (family, twisting) in combos {
                for &seed in &cfg.seeds {
                    let tolerance = cfg
                        .tolerance_overrides
                        .get(identity)
                        .copied()
                        .or(cfg.global_tolerance)
                        .unwrap_or_else(|| default_tolerance(identity));
                    cases.push(CaseSpec {
                        geometry: geometry.clone(),
                        identity: identity.clone(),
                        family: family.clone(),
                        twisting: twisting.clone(),
                        w_plus: cfg.w_plus,
                        w_minus: cfg.w_minus,
                        seed,
                        sections: cfg.sections,
                        points: cfg.points,
                        tolerance,
                    });
                }
            }
        }
    }
    if cases.is_empty() {
        return Err(Error::Config(
            "no cases match the configuration (check identity/family/geometry compatibility)"
                .into(),
        ));
    }
    cases.sort_by_key(|c| c.case_id());
    Ok(cases)
}

/// Run every case; failures are recorded, never propagated. Reports come
/// back sorted by case id.
pub fn run_suite(cfg: &Config) -> Result<SuiteOutput> {
    let cases = enumerate_cases(cfg)?;
    let start = Instant::now();
    let reports = crate::par::map_collect(cases.len(), cfg.parallel, |i| {
        run_case(&cases[i], cfg.parallel)
    });
    let passed = reports.iter().filter(|r| r.pass).count();
    let errored = reports.iter().filter(|r| r.error.is_some()).count();
    let failed = reports.len() - passed - errored;
    let summary = SuiteSummary {
        schema: REPORT_SCHEMA.to_string(),
        total: reports.len(),
        passed,
        failed,
        errored,
        wall_ms: start.elapsed().as_millis(),
    };
    Ok(SuiteOutput { reports, summary })
}

/// Run a single case, catching panics from the numerical engine.
pub fn run_case(spec: &CaseSpec, parallel: bool) -> CaseReport {
    let start = Instant::now();
    let spec_for_panic = spec.clone();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        run_identity(spec, parallel)
    }));
    let (max_residual, pass, error) = match outcome {
        Ok(Ok(res)) => (Some(res), res <= spec.tolerance, None),
        Ok(Err(e)) => (None, false, Some(format!("{e}"))),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "numerical engine panic".to_string());
            (None, false, Some(msg))
        }
    };
    CaseReport {
        schema: REPORT_SCHEMA.to_string(),
        case_id: spec_for_panic.case_id(),
        spec: spec_for_panic,
        max_residual,
        pass,
        error,
        wall_ms: start.elapsed().as_millis(),
        engine: engine_version(),
    }
}

// ---------------------------------------------------------------------------
// per-case context and the identity runners

struct CaseCtx {
    spec: CaseSpec,
    bundle: Bundle,
    twisting: Twisting,
    parallel: bool,
}

impl CaseCtx {
    fn new(spec: &CaseSpec, parallel: bool) -> Result<CaseCtx> {
        let geom = by_id(&spec.geometry)?;
        let rep = Arc::new(build_gammas(geom.n)?);
        let fiber = Fiber::new(rep, spec.w_plus, spec.w_minus);
        let bundle = Bundle::new(geom, fiber);
        let twisting = match spec.twisting.as_str() {
            "flat" => Twisting::flat(&bundle),
            "random" => Twisting::random(&bundle, spec.seed),
            other => return Err(Error::Config(format!("unknown twisting preset: {other}"))),
        };
        Ok(CaseCtx {
            spec: spec.clone(),
            bundle,
            twisting,
            parallel,
        })
    }

    fn family(&self) -> Result<Family> {
        Family::parse(&self.spec.family)
            .ok_or_else(|| Error::Config(format!("unknown family: {}", self.spec.family)))
    }

    fn superconnection(&self) -> Result<Superconnection> {
        Ok(Superconnection::with_family(
            &self.bundle,
            self.twisting.clone(),
            self.family()?,
            self.spec.seed,
        ))
    }

    fn sections(&self) -> Vec<TestSection> {
        (0..self.spec.sections as u64)
            .map(|k| TestSection::random(&self.bundle, self.spec.seed.wrapping_mul(1000) + k))
            .collect()
    }

    fn points(&self) -> Vec<Point> {
        self.bundle
            .geom
            .sample_points(self.spec.points, self.spec.seed ^ 0x5bd1_e995)
    }

    /// Seeded parity-homogeneous random form sums (odd total parity) with
    /// degrees up to min(n, 3).
    fn odd_sums(&self, count: usize) -> Vec<FormSum> {
        let mut rng =
            ChaCha8Rng::seed_from_u64(self.spec.seed.wrapping_mul(0x94d0_49bb).wrapping_add(5));
        (0..count)
            .map(|_| {
                let mut sum = FormSum::zero(self.bundle.n(), self.bundle.dim_e());
                for d in 0..=self.bundle.n().min(3) {
                    sum = sum.add_form(&random_commutant_form(&self.bundle, d, &mut rng));
                }
                sum
            })
            .collect()
    }
}

fn run_identity(spec: &CaseSpec, parallel: bool) -> Result<f64> {
    let ctx = CaseCtx::new(spec, parallel)?;
    match spec.identity.as_str() {
        "clifford-relations" => run_clifford_relations(),
        "quantize" => run_quantize(&ctx),
        "lemma-2-1" => run_lemma_2_1(&ctx),
        "lemma-2-2" => run_lemma_2_2(&ctx),
        "eq-2-4" => run_eq_2_4(&ctx),
        "lemma-3-1" => run_lemma_3_1(&ctx),
        "g-projection" => run_g_projection(&ctx),
        "eq-3-3" => run_eq_3_3(&ctx),
        "eq-3-4" => run_eq_3_4(&ctx),
        "lemma-3-3" => run_lemma_3_3(&ctx),
        "cor-3-4" => run_cor_3_4(&ctx),
        "lemma-4-1" => run_lemma_4_1(&ctx),
        "eq-1-1" => run_eq_1_1(&ctx),
        "eq-4-2" => run_eq_4_2(&ctx),
        "thm-4-2" => run_thm_4_2(&ctx),
        "eq-4-9" => run_eq_4_9(&ctx),
        "eq-4-10" => run_eq_4_10(&ctx),
        "m0-relations" => run_m0_relations(&ctx),
        other => Err(Error::Config(format!("unknown identity id: {other}"))),
    }
}

/// Defining relation, anti-Hermiticity and chirality invariants for every
/// supported Clifford dimension.
fn run_clifford_relations() -> Result<f64> {
    let mut worst = 0.0f64;
    for n in [2usize, 4, 6, 8] {
        let rep = build_gammas(n)?;
        let id = CMat::identity(rep.dim_s);
        for a in 0..n {
            for b in 0..n {
                let anti = rep.gammas[a].anticommutator(&rep.gammas[b]);
                let want = if a == b {
                    id.scale(c(-2.0, 0.0))
                } else {
                    CMat::zeros(rep.dim_s, rep.dim_s)
                };
                worst = worst.max(anti.sub(&want).max_abs());
            }
            worst = worst.max(rep.gammas[a].dagger().add(&rep.gammas[a]).max_abs());
            worst = worst.max(rep.chirality.anticommutator(&rep.gammas[a]).max_abs());
        }
        worst = worst.max(rep.chirality.mul(&rep.chirality).sub(&id).max_abs());
    }
    Ok(worst)
}

/// Quantization map: product identity on random covectors, consistency with
/// the two-slot map, and linear independence of the blade images.
fn run_quantize(ctx: &CaseCtx) -> Result<f64> {
    let n = ctx.bundle.n();
    let rep = &ctx.bundle.fiber.rep;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.spec.seed.wrapping_add(17));
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let v: Vec<C64> = (0..n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let w: Vec<C64> = (0..n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mv = Multivector::covector(n, &v);
        let mw = Multivector::covector(n, &w);
        let dotp: C64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let id = CMat::identity(rep.dim_s);
        let lhs = quantize(&mv.wedge(&mw), rep)?;
        let rhs = quantize(&mv, rep)?
            .mul(&quantize(&mw, rep)?)
            .add(&id.scale(dotp));
        worst = worst.max(lhs.sub(&rhs).max_abs());

        let sym = c2(&v, &w, rep)?.add(&c2(&w, &v, rep)?);
        worst = worst.max(sym.sub(&id.scale(dotp * c(-2.0, 0.0))).max_abs());

        let split = quantize(&mv.wedge(&mw), rep)?.sub(&id.scale(dotp));
        worst = worst.max(c2(&v, &w, rep)?.sub(&split).max_abs());
    }
    if n <= 4 {
        let blades: Vec<CMat> = (0..(1u32 << n)).map(|m| rep.blade(m).clone()).collect();
        if CMat::span_rank(&blades, 1e-8) != 1 << n {
            worst = worst.max(1.0);
        }
    }
    Ok(worst)
}

/// Curvature split: the three-term expansion against the direct graded
/// composition applied to random form-valued sections, plus the
/// degree-by-degree rows with explicit graded brackets.
fn run_lemma_2_1(ctx: &CaseCtx) -> Result<f64> {
    let a = ctx.superconnection()?;
    let f = supercurvature(&a);
    let n = ctx.bundle.n();
    let pts: Vec<Point> = ctx.points().into_iter().take(3).collect();
    let mut worst = 0.0f64;

    // operator oracle
    for seed in 0..3u64 {
        let s = FormSection::random(&ctx.bundle, ctx.spec.seed.wrapping_mul(7) + seed);
        let lhs = apply_formsum_to_section(&f, &s);
        let rhs = s.apply_superconnection(&a).apply_superconnection(&a);
        for x in &pts {
            for k in 0..=n {
                for ci in 0..crate::forms::combinations(n, k).len() {
                    let lv = lhs.comps[k][ci].value(x);
                    let rv = rhs.comps[k][ci].value(x);
                    worst = worst.max(lv.sub(&rv).max_abs());
                }
            }
        }
    }

    // termwise rows with graded brackets
    let conn = a.clifford_connection();
    let r = a.curvature_e();
    for d in 0..=n {
        let mut row = FormSum::zero(n, ctx.bundle.dim_e());
        if d == 2 {
            row = row.add_form(&r);
        }
        if d >= 1 {
            if let Some(prev) = a.abar.degree_part(d - 1) {
                row = row.add_form(&ext_cov_deriv(prev, &conn));
            }
        }
        let degrees: Vec<usize> = a.abar.terms.iter().map(|t| t.degree).collect();
        for &i in &degrees {
            for &j in &degrees {
                if i + j != d || i > j {
                    continue;
                }
                let ai = a.abar.degree_part(i).unwrap();
                let aj = a.abar.degree_part(j).unwrap();
                if i == j {
                    let sq = ai.wedge(aj);
                    if !sq.is_vacuous() {
                        row = row.add_form(&sq);
                    }
                } else {
                    row = row.add(&form_supercommutator(ai, aj));
                }
            }
        }
        let got = f.degree_part(d);
        let want = row.degree_part(d);
        for x in &pts {
            for ci in 0..crate::forms::combinations(n, d).len() {
                let gv = got.map(|t| t.comps[ci].value(x));
                let wv = want.map(|t| t.comps[ci].value(x));
                let res = match (gv, wv) {
                    (Some(g), Some(w)) => g.sub(&w).max_abs(),
                    (Some(g), None) => g.max_abs(),
                    (None, Some(w)) => w.max_abs(),
                    (None, None) => 0.0,
                };
                worst = worst.max(res);
            }
        }
    }
    Ok(worst)
}

/// The quantization square difference equals its expansion over component
/// pairs of degree at least two and ignores the degree-zero part.
fn run_lemma_2_2(ctx: &CaseCtx) -> Result<f64> {
    let a = ctx.superconnection()?;
    let b = &ctx.bundle;
    let n = b.n();
    let lhs = crate::superconn::cdiff(&a);
    let mut rhs = crate::fields::MatField::zero(n, b.dim_e(), b.dim_e());
    let degrees: Vec<usize> = a
        .abar
        .terms
        .iter()
        .map(|t| t.degree)
        .filter(|&d| d >= 2)
        .collect();
    for &i in &degrees {
        for &j in &degrees {
            let ai = a.abar.degree_part(i).unwrap();
            let aj = a.abar.degree_part(j).unwrap();
            let qq = quantize_form(ai, b).mul(&quantize_form(aj, b));
            let prod = ai.wedge(aj);
            let qprod = if prod.is_vacuous() {
                crate::fields::MatField::zero(n, b.dim_e(), b.dim_e())
            } else {
                quantize_form(&prod, b)
            };
            rhs = rhs.add(&qq.sub(&qprod));
        }
    }
    let mut worst = 0.0f64;
    let pts = ctx.points();
    for x in &pts {
        worst = worst.max(lhs.value(x).sub(&rhs.value(x)).max_abs());
    }
    // independence of the degree-zero part
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.spec.seed.wrapping_add(303));
    let extra = random_commutant_form(b, 0, &mut rng);
    let shifted = Superconnection::new(b.clone(), ctx.twisting.clone(), a.abar.add_form(&extra));
    let lhs2 = crate::superconn::cdiff(&shifted);
    for x in pts.iter().take(5) {
        worst = worst.max(lhs2.value(x).sub(&lhs.value(x)).max_abs());
    }
    Ok(worst)
}

/// The dimension-four expansion with its explicit graded bracket list.
fn run_eq_2_4(ctx: &CaseCtx) -> Result<f64> {
    let a = ctx.superconnection()?;
    let b = &ctx.bundle;
    if b.n() != 4 {
        return Err(Error::Config(
            "the dimension-four expansion needs a four-dimensional chart".into(),
        ));
    }
    let lhs = crate::superconn::cdiff(&a);
    let q = |f: &crate::forms::EndForm| quantize_form(f, b);
    let a2 = a.abar.degree_part(2).ok_or_else(|| {
        Error::Config("the dimension-four expansion needs the full mix".into())
    })?;
    let a3 = a.abar.degree_part(3).unwrap();
    let a4 = a.abar.degree_part(4).unwrap();
    let (q2, q3, q4) = (q(a2), q(a3), q(a4));
    let anti = |x: &crate::fields::MatField, y: &crate::fields::MatField| x.mul(y).add(&y.mul(x));
    let rhs = q2
        .mul(&q2)
        .add(&q3.mul(&q3))
        .add(&q4.mul(&q4))
        .sub(&q(&a2.wedge(a2)))
        .add(&anti(&q2, &q3))
        .add(&anti(&q2, &q4))
        .add(&anti(&q3, &q4));
    let mut worst = 0.0f64;
    for x in ctx.points() {
        worst = worst.max(lhs.value(&x).sub(&rhs.value(&x)).max_abs());
    }
    Ok(worst)
}

/// The canonical one-form: its Clifford image is the identity and it is
/// covariant constant.
fn run_lemma_3_1(ctx: &CaseCtx) -> Result<f64> {
    let b = &ctx.bundle;
    let gamma = b.gamma_canonical();
    let q = quantize_form(&gamma, b);
    let conn = clifford_connection(b, &ctx.twisting);
    let nab = nabla_one_form(&gamma, &conn, &b.geom);
    let id = CMat::identity(b.dim_e());
    let mut worst = 0.0f64;
    for x in ctx.points() {
        worst = worst.max(q.value(&x).sub(&id).max_abs());
        for m in 0..b.n() {
            for nu in 0..b.n() {
                worst = worst.max(nab.comps[m][nu].value(&x).max_abs());
            }
        }
    }
    Ok(worst)
}

/// The projection onto one-forms: same Clifford image, idempotent.
fn run_g_projection(ctx: &CaseCtx) -> Result<f64> {
    let b = &ctx.bundle;
    let mut worst = 0.0f64;
    let pts: Vec<Point> = ctx.points().into_iter().take(5).collect();
    for alpha in ctx.odd_sums(10) {
        let proj = g_projection(&alpha, b);
        let q_alpha = quantize_sum(&alpha, b);
        let q_proj = quantize_form(&proj, b);
        let proj2 = g_projection(&FormSum::from_forms(vec![proj.clone()]), b);
        for x in &pts {
            worst = worst.max(q_proj.value(x).sub(&q_alpha.value(x)).max_abs());
            for nu in 0..b.n() {
                worst = worst.max(
                    proj.comps[nu]
                        .value(x)
                        .sub(&proj2.comps[nu].value(x))
                        .max_abs(),
                );
            }
        }
    }
    Ok(worst)
}

/// Square identity for the projection.
fn run_eq_3_3(ctx: &CaseCtx) -> Result<f64> {
    let b = &ctx.bundle;
    let mut worst = 0.0f64;
    let pts: Vec<Point> = ctx.points().into_iter().take(5).collect();
    for alpha in ctx.odd_sums(10) {
        let proj = g_projection(&alpha, b);
        let bet = beta(&alpha, b);
        let lhs = quantize_form(&proj.wedge(&proj), b).add(&dot(&proj, &proj).ev_g(b));
        let qa = quantize_sum(&alpha, b);
        let rhs = qa.mul(&qa).add(&dot(&bet, &proj).ev_g(b).scale(c(2.0, 0.0)));
        for x in &pts {
            worst = worst.max(lhs.value(x).sub(&rhs.value(x)).max_abs());
        }
    }
    Ok(worst)
}

/// Derivative identity for the projection.
fn run_eq_3_4(ctx: &CaseCtx) -> Result<f64> {
    let b = &ctx.bundle;
    let conn = clifford_connection(b, &ctx.twisting);
    let mut worst = 0.0f64;
    let pts: Vec<Point> = ctx.points().into_iter().take(5).collect();
    for alpha in ctx.odd_sums(10) {
        let proj = g_projection(&alpha, b);
        let lhs = nabla_one_form(&proj, &conn, &b.geom).c2_quantize(b);
        let d_alpha = ext_cov_deriv_sum(&alpha, &conn);
        let bet = beta(&alpha, b);
        let rhs = quantize_sum(&d_alpha, b).sub(&nabla_one_form(&bet, &conn, &b.geom).ev_g(b));
        for x in &pts {
            worst = worst.max(lhs.value(x).sub(&rhs.value(x)).max_abs());
        }
    }
    Ok(worst)
}

/// The bracket expression for the contraction one-form.
fn run_lemma_3_3(ctx: &CaseCtx) -> Result<f64> {
    let b = &ctx.bundle;
    let n = b.n();
    let mut worst = 0.0f64;
    let pts: Vec<Point> = ctx.points().into_iter().take(5).collect();
    for alpha in ctx.odd_sums(10) {
        let bet = beta(&alpha, b);
        let proj = g_projection(&alpha, b);
        for x in &pts {
            let jet = b.jet(x);
            let cdx: Vec<CMat> = (0..n).map(|m| b.c_dx(m).value(x)).collect();
            let projv: Vec<CMat> = (0..n).map(|m| proj.comps[m].value(x)).collect();
            for s in 0..n {
                let mut corr = CMat::zeros(b.dim_e(), b.dim_e());
                for nu in 0..n {
                    let mut inner = CMat::zeros(b.dim_e(), b.dim_e());
                    for m in 0..n {
                        inner = inner.add(&cdx[m].mul(&projv[m].commutator(&cdx[nu])));
                    }
                    corr.add_scaled(&inner, c(-0.5 * jet.g[s][nu], 0.0));
                }
                let want = projv[s].add(&corr);
                worst = worst.max(bet.comps[s].value(x).sub(&want).max_abs());
            }
        }
    }
    Ok(worst)
}

/// Curvature comparison between the associated connection and the
/// supercurvature.
fn run_cor_3_4(ctx: &CaseCtx) -> Result<f64> {
    let a = ctx.superconnection()?;
    let b = &ctx.bundle;
    let r_assoc = crate::superconn::associated_connection(&a).curvature();
    let f = supercurvature(&a);
    let diff = FormSum::from_forms(vec![r_assoc]).sub(&f);
    let lhs = quantize_sum(&diff, b);
    let proj = g_projection(&a.abar, b);
    let bet = beta(&a.abar, b);
    let conn = a.clifford_connection();
    let rhs = crate::superconn::cdiff(&a)
        .add(&nabla_one_form(&proj.sub(&bet), &conn, &b.geom).ev_g(b))
        .add(&dot(&bet, &proj).ev_g(b).scale(c(2.0, 0.0)))
        .sub(&dot(&proj, &proj).ev_g(b));
    let mut worst = 0.0f64;
    for x in ctx.points().iter().take(8) {
        worst = worst.max(lhs.value(x).sub(&rhs.value(x)).max_abs());
    }
    Ok(worst)
}

/// The Dirac operator of a superconnection and of its associated connection
/// coincide coefficientwise.
fn run_lemma_4_1(ctx: &CaseCtx) -> Result<f64> {
    let a = ctx.superconnection()?;
    let d1 = dirac(&a);
    let d2 = dirac_associated(&a);
    Ok(coefficient_residual(&d1, &d2, &ctx.points()))
}

/// The classical decomposition for Clifford connections, weakly.
fn run_eq_1_1(ctx: &CaseCtx) -> Result<f64> {
    let a = ctx.superconnection()?;
    let lhs = dirac_squared(&a);
    let rhs = rhs_classical(&a)?;
    Ok(weak_residual(
        &lhs,
        &rhs,
        &ctx.sections(),
        &ctx.points(),
        ctx.parallel,
    ))
}

/// The decomposition for arbitrary connections: five random non-Clifford
/// connections per case.
fn run_eq_4_2(ctx: &CaseCtx) -> Result<f64> {
    let b = &ctx.bundle;
    let cliff = clifford_connection(b, &ctx.twisting);
    let secs = ctx.sections();
    let pts = ctx.points();
    let mut worst = 0.0f64;
    for k in 0..5u64 {
        let mut rng =
            ChaCha8Rng::seed_from_u64(ctx.spec.seed.wrapping_mul(131).wrapping_add(k));
        let shift = random_even_one_form(b, &mut rng);
        let conn = cliff.shifted(&shift);
        let d = crate::diffop::dirac_from_connection(&conn, b);
        let lhs = DiffOp2::compose(&d, &d)?;
        let rhs = rhs_connection(&conn, b);
        worst = worst.max(weak_residual(&lhs, &rhs, &secs, &pts, ctx.parallel));
    }
    Ok(worst)
}

/// The supersymmetric decomposition, weakly.
fn run_thm_4_2(ctx: &CaseCtx) -> Result<f64> {
    let a = ctx.superconnection()?;
    let lhs = dirac_squared(&a);
    let rhs = rhs_super(&a);
    Ok(weak_residual(
        &lhs,
        &rhs,
        &ctx.sections(),
        &ctx.points(),
        ctx.parallel,
    ))
}

/// The simple-type reduction, weakly.
fn run_eq_4_9(ctx: &CaseCtx) -> Result<f64> {
    let a = ctx.superconnection()?;
    let sup = rhs_super(&a);
    let simple = rhs_simple_type(&a)?;
    let mut worst = weak_residual(&sup, &simple, &ctx.sections(), &ctx.points(), ctx.parallel);
    // and the Dirac square agrees with the simple-type assembly directly
    let lhs = dirac_squared(&a);
    worst = worst.max(weak_residual(
        &lhs,
        &simple,
        &ctx.sections(),
        &ctx.points(),
        ctx.parallel,
    ));
    Ok(worst)
}

/// Closed form of the quadratic endomorphism against the pipeline.
fn run_eq_4_10(ctx: &CaseCtx) -> Result<f64> {
    let a = ctx.superconnection()?;
    let closed = getzler_p(&a)?;
    let pipeline = pipeline_p(&a);
    let mut worst = 0.0f64;
    for x in ctx.points() {
        worst = worst.max(closed.value(&x).sub(&pipeline.value(&x)).max_abs());
    }
    Ok(worst)
}

/// The degenerate Clifford action: relation, parity and the restricted
/// quantization split, over several split presets.
fn run_m0_relations(ctx: &CaseCtx) -> Result<f64> {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.spec.seed.wrapping_add(909));
    for (h, v) in [(1usize, 2usize), (2, 2), (2, 4)] {
        let space = SplitSpace::new(h, v)?;
        let id = CMat::identity(space.dim_total);
        let tau = space.total_grading();
        for _ in 0..100 {
            let a = SplitCovector {
                horizontal: (0..h)
                    .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect(),
                vertical: (0..v)
                    .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect(),
            };
            let bcov = SplitCovector {
                horizontal: (0..h)
                    .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect(),
                vertical: (0..v)
                    .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect(),
            };
            let ma = m0(&a, &space)?;
            let mb = m0(&bcov, &space)?;
            let pairing = space.degenerate_pairing(&a, &bcov);
            let want = id.scale(pairing * c(-2.0, 0.0));
            worst = worst.max(ma.anticommutator(&mb).sub(&want).max_abs());
            worst = worst.max(ma.anticommutator(&tau).max_abs());
            let split = m0_quantize_restricted(&a, &space)?;
            worst = worst.max(split.sub(&ma).max_abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_enumeration_is_sorted_and_compatible() {
        let cfg = Config::default();
        let cases = enumerate_cases(&cfg).unwrap();
        assert!(!cases.is_empty());
        let ids: Vec<String> = cases.iter().map(|c| c.case_id()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
        // no duplicate ids
        let mut dedup = ids.clone();
        dedup.dedup();
        assert_eq!(ids.len(), dedup.len());
        // full-mix never lands on a two-dimensional chart
        for case in &cases {
            if case.family == "full-mix" {
                assert!(case.geometry == "torus-t4" || case.geometry == "perturbed-r4");
            }
            if case.identity == "eq-2-4" || case.identity == "eq-4-10" {
                assert!(by_id(&case.geometry).unwrap().n == 4);
            }
        }
    }

    #[test]
    fn unknown_ids_are_config_errors() {
        let mut cfg = Config::default();
        cfg.geometries = vec!["no-such-chart".into()];
        assert!(matches!(enumerate_cases(&cfg), Err(Error::Config(_))));
        let mut cfg = Config::default();
        cfg.identities = vec!["no-such-identity".into()];
        assert!(matches!(enumerate_cases(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn single_case_runs_and_reports() {
        let spec = CaseSpec {
            geometry: "flat-r2".into(),
            identity: "lemma-4-1".into(),
            family: "a2".into(),
            twisting: "random".into(),
            w_plus: 1,
            w_minus: 1,
            seed: 0,
            sections: 3,
            points: 3,
            tolerance: 1e-10,
        };
        let report = run_case(&spec, false);
        assert!(report.pass, "report: {report:?}");
        assert!(report.max_residual.unwrap() <= 1e-10);
        assert!(report.error.is_none());
        let line = serde_json::to_string(&report).unwrap();
        assert!(line.contains("\"case_id\""));
    }

    #[test]
    fn case_errors_are_contained() {
        // an incompatible hand-built case records an error; a healthy case
        // alongside it still completes
        let bad = CaseSpec {
            geometry: "torus-t4".into(),
            identity: "eq-2-4".into(),
            family: "a2".into(), // the expansion needs the full mix
            twisting: "flat".into(),
            w_plus: 1,
            w_minus: 1,
            seed: 0,
            sections: 2,
            points: 2,
            tolerance: 1e-10,
        };
        let report = run_case(&bad, false);
        assert!(!report.pass);
        assert!(report.error.is_some(), "expected a recorded error");
        assert!(report.max_residual.is_none());

        let good = CaseSpec {
            identity: "lemma-4-1".into(),
            ..bad.clone()
        };
        let report = run_case(&good, false);
        assert!(report.pass);
    }

    #[test]
    fn empty_case_list_is_a_config_error() {
        let mut cfg = Config::default();
        cfg.identities = vec!["eq-2-4".into()];
        cfg.geometries = vec!["flat-r2".into()]; // needs a 4-dimensional chart
        assert!(matches!(enumerate_cases(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn failing_tolerance_is_reported_not_panicked() {
        let spec = CaseSpec {
            geometry: "sphere-s2".into(),
            identity: "thm-4-2".into(),
            family: "a2".into(),
            twisting: "random".into(),
            w_plus: 1,
            w_minus: 1,
            seed: 0,
            sections: 2,
            points: 2,
            tolerance: 1e-18,
        };
        let report = run_case(&spec, false);
        assert!(!report.pass);
        assert!(report.error.is_none());
        assert!(report.max_residual.unwrap() > 1e-18);
    }
}
