//! Job configs, check execution and JSON reports for the command-line driver.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::baker::{ba_transform_check, residue_identity_eval, IdentityTag, JetCfg};
use crate::error::{Error, Result};
use crate::flows::{prop23_check, FlowCoords, FlowKind};
use crate::grass::{frame_build, search_tail, Closure, GrassPoint, Recipe};
use crate::jets::{JetPoly, JetRing};
use crate::krichever::{curve_invariants, module_point, CurveSpec, FunctionRep, IdealSpec};
use crate::scalars::{parse_rat, Cyclo};
use crate::vseries::{Case, Model, VSeries};

/// Exit codes of the driver.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_WINDOW: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// A scalar: a rational string, a cyclotomic literal such as `"1/2 + 3*x"`,
/// or an array of rational strings over the power basis of `ξ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffCfg {
    Text(String),
    Basis(Vec<String>),
}

impl CoeffCfg {
    pub fn to_cyclo(&self, p: u32) -> Result<Cyclo> {
        match self {
            CoeffCfg::Text(s) => Cyclo::parse(p, s),
            CoeffCfg::Basis(v) => Ok(Cyclo::from_coeffs(p, v.iter().map(|s| parse_rat(s)).collect::<Result<_>>()?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCfg {
    pub p: u32,
    /// `"R"` or `"NR"`.
    pub case: String,
}

/// `num / den` with `num[b][k]` the coefficient of `x^k y^b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionCfg {
    pub num: Vec<Vec<CoeffCfg>>,
    #[serde(default = "unit_den")]
    pub den: Vec<Vec<CoeffCfg>>,
}

fn unit_den() -> Vec<Vec<CoeffCfg>> {
    vec![vec![CoeffCfg::Text("1".into())]]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveCfg {
    pub p: u32,
    /// Ascending coefficients of `f`.
    pub f: Vec<String>,
    /// Generators of a fractional ideal; the coordinate ring when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ideal: Option<Vec<FunctionCfg>>,
}

/// One term `c · z^e` on component `comp` (1-based).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermCfg {
    #[serde(default = "first_comp")]
    pub comp: usize,
    pub e: i64,
    pub c: CoeffCfg,
}

fn first_comp() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameCfg {
    pub generators: Vec<Vec<TermCfg>>,
    /// Every position with exponent below `tail` is included.
    #[serde(default)]
    pub tail: i64,
    /// Close under multiplication by these elements instead of taking the span.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub module: Option<Vec<Vec<TermCfg>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<i64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCfg {
    #[serde(default)]
    pub windows: Vec<[i64; 2]>,
    #[serde(default)]
    pub caps: Vec<u32>,
    #[serde(default)]
    pub depths: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<FrameCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[i64; 2]>,
    #[serde(default)]
    pub jet_cap: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tangent_depth: Option<i64>,
    pub checks: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepCfg>,
}

/// Checks other than the residue identities.
pub const CHECK_NAMES: [&str; 11] = [
    "chi",
    "genus",
    "gaps",
    "sigma",
    "isotropy",
    "pairwise_bkp",
    "algebra",
    "connectedness",
    "tangent",
    "ba_transform",
    "frame",
];

#[derive(Clone, Debug, PartialEq, Eq)]
enum Check {
    Named(&'static str),
    Identity(IdentityTag),
}

impl Check {
    fn name(&self) -> String {
        match self {
            Check::Named(s) => s.to_string(),
            Check::Identity(t) => t.to_string(),
        }
    }
}

fn parse_check(s: &str) -> Result<Check> {
    let s = if s == "invariance" { "sigma" } else { s };
    if let Some(n) = CHECK_NAMES.iter().find(|n| **n == s) {
        return Ok(Check::Named(n));
    }
    s.parse::<IdentityTag>().map(Check::Identity).map_err(|_| Error::Config(format!("unknown check `{s}`")))
}

fn parse_case(s: &str) -> Result<Case> {
    match s {
        "R" | "ramified" => Ok(Case::Ramified),
        "NR" | "non-ramified" => Ok(Case::NonRamified),
        _ => Err(Error::Config(format!("case must be \"R\" or \"NR\", got `{s}`"))),
    }
}

/// Parses `lo:hi`.
pub fn parse_window(s: &str) -> Result<[i64; 2]> {
    let bad = || Error::Config(format!("window must look like lo:hi, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let w = [a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?];
    if w[0] >= w[1] {
        return Err(Error::EmptyWindow { lo: w[0], hi: w[1] });
    }
    Ok(w)
}

enum Source {
    Curve(CurveSpec, IdealSpec),
    Frame(Model, Vec<VSeries<Cyclo>>, Option<Vec<VSeries<Cyclo>>>, i64, Option<i64>),
}

fn build_series(model: &Model, terms: &[TermCfg]) -> Result<VSeries<Cyclo>> {
    let p = model.p();
    let mut v = VSeries::zero(model, &Cyclo::zero(p));
    for t in terms {
        if t.comp == 0 || t.comp > model.ncomp() {
            return Err(Error::Config(format!("component {} out of range", t.comp)));
        }
        v = v.add(&VSeries::monomial(model, t.comp - 1, t.e, t.c.to_cyclo(p)?));
    }
    Ok(v)
}

fn build_function(p: u32, f: &FunctionCfg) -> Result<FunctionRep> {
    let conv = |m: &[Vec<CoeffCfg>]| -> Result<Vec<Vec<Cyclo>>> {
        m.iter().map(|row| row.iter().map(|c| c.to_cyclo(p)).collect()).collect()
    };
    FunctionRep::new(conv(&f.num)?, conv(&f.den)?)
}

/// A validated job: parsed source, checks and numeric settings.
pub struct Job {
    pub config: JobConfig,
    source: Source,
    checks: Vec<Check>,
}

impl Job {
    pub fn from_json(text: &str) -> Result<Job> {
        let config: JobConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Job::new(config)
    }

    pub fn new(config: JobConfig) -> Result<Job> {
        if config.checks.is_empty() {
            return Err(Error::Config("no checks requested".into()));
        }
        if let Some([lo, hi]) = config.window {
            if lo >= hi {
                return Err(Error::EmptyWindow { lo, hi });
            }
        }
        let source = match (&config.curve, &config.frame) {
            (Some(c), None) => {
                let curve = CurveSpec::parse(c.p, &c.f).map_err(|e| Error::Config(e.to_string()))?;
                if let Some(m) = &config.model {
                    if m.p != c.p || parse_case(&m.case)? != curve.case() {
                        return Err(Error::Config(format!("model does not match the curve ({})", curve.case())));
                    }
                }
                let ideal = match &c.ideal {
                    None => IdealSpec::unit(c.p),
                    Some(gs) => IdealSpec::new(gs.iter().map(|g| build_function(c.p, g)).collect::<Result<_>>()?)?,
                };
                Source::Curve(curve, ideal)
            }
            (None, Some(f)) => {
                let m = config.model.as_ref().ok_or_else(|| Error::Config("a frame needs a model".into()))?;
                let model = Model::with_xi_power(m.p, parse_case(&m.case)?, 1).map_err(|e| Error::Config(e.to_string()))?;
                let gens = f.generators.iter().map(|g| build_series(&model, g)).collect::<Result<_>>()?;
                let algebra = match &f.module {
                    None => None,
                    Some(a) => Some(a.iter().map(|g| build_series(&model, g)).collect::<Result<_>>()?),
                };
                if config.window.is_none() {
                    return Err(Error::Config("a frame needs a window".into()));
                }
                Source::Frame(model, gens, algebra, f.tail, f.slack)
            }
            _ => return Err(Error::Config("give exactly one of `curve` and `frame`".into())),
        };
        let checks = config.checks.iter().map(|s| parse_check(s)).collect::<Result<Vec<_>>>()?;
        let model = match &source {
            Source::Curve(c, _) => c.model(),
            Source::Frame(m, ..) => m.clone(),
        };
        for c in &checks {
            match c {
                Check::Named("genus") | Check::Named("gaps") if matches!(source, Source::Frame(..)) => {
                    return Err(Error::Config(format!("`{}` needs a curve", c.name())));
                }
                Check::Identity(t) => {
                    let ok = match t {
                        IdentityTag::SigmaR | IdentityTag::ModR(_) => model.case() == Case::Ramified,
                        IdentityTag::SigmaNR | IdentityTag::ModNR(_) => model.case() == Case::NonRamified,
                        IdentityTag::Conn(i) => model.case() == Case::NonRamified && *i <= model.ncomp(),
                        IdentityTag::BkpGen => true,
                    };
                    if !ok {
                        return Err(Error::Config(format!("{t} does not apply to the {} model", model.case())));
                    }
                }
                _ => {}
            }
        }
        Ok(Job { config, source, checks })
    }

    pub fn model(&self) -> Model {
        match &self.source {
            Source::Curve(c, _) => c.model(),
            Source::Frame(m, ..) => m.clone(),
        }
    }

    /// The configured window, or one sized from the curve's genus.
    pub fn window(&self) -> [i64; 2] {
        if let Some(w) = self.config.window {
            return w;
        }
        match &self.source {
            Source::Curve(c, _) => {
                let step = c.model().z_step();
                let (p, d) = (c.p() as i64, c.degree() as i64);
                let genus = ((p - 1) * (d - 1)).max(0) / 2;
                [-(4 * genus + 8) * step, 2 * step + 6]
            }
            Source::Frame(..) => unreachable!("frames are validated to carry a window"),
        }
    }

    pub fn build_point(&self, lo: i64, hi: i64) -> Result<GrassPoint> {
        match &self.source {
            Source::Curve(c, ideal) => module_point(c, ideal, lo, hi),
            Source::Frame(model, gens, algebra, tail, slack) => {
                let (m, g, a, t, s) = (model.clone(), gens.clone(), algebra.clone(), *tail, *slack);
                let build = move |lo: i64, hi: i64| -> Result<GrassPoint> {
                    let closure = match &a {
                        None => Closure::Span { tail: t },
                        Some(alg) => Closure::Module { algebra: alg, slack: s.unwrap_or(4 * m.z_step()) },
                    };
                    frame_build(&m, &g, closure, lo, hi)
                };
                let u = build(lo, hi)?;
                Ok(u.with_recipe(Recipe::new("frame from config", build)))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    WindowInsufficient,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => EXIT_PASS,
            Outcome::Fail => EXIT_FAIL,
            Outcome::WindowInsufficient => EXIT_WINDOW,
        }
    }

    fn combine(self, o: Outcome) -> Outcome {
        match (self, o) {
            (Outcome::Fail, _) | (_, Outcome::Fail) => Outcome::Fail,
            (Outcome::WindowInsufficient, _) | (_, Outcome::WindowInsufficient) => Outcome::WindowInsufficient,
            _ => Outcome::Pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub verdict: Outcome,
    pub window: [i64; 2],
    pub jet_cap: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggest_hi: Option<i64>,
    pub millis: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub point: String,
    pub window: [i64; 2],
    pub jet_cap: u32,
    pub checks: Vec<CheckReport>,
    pub outcome: Outcome,
    /// Re-running this config reproduces the report.
    pub config: JobConfig,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        self.outcome.exit_code()
    }

    /// The report without timing fields.
    pub fn without_timing(&self) -> Report {
        let mut r = self.clone();
        for c in &mut r.checks {
            c.millis = 0;
        }
        r
    }
}

struct Ctx<'a> {
    point: &'a GrassPoint,
    jet: JetCfg,
    depth: i64,
}

fn check_value(ctx: &Ctx<'_>, check: &Check) -> Result<(bool, Option<Value>, Option<String>, [i64; 2])> {
    let u = ctx.point;
    let (lo, hi) = u.window();
    let win = [lo, hi];
    Ok(match check {
        Check::Named("chi") => (true, Some(json!(u.index_chi()?)), None, win),
        Check::Named("genus") => (true, Some(json!(1 - u.index_chi()?)), None, win),
        Check::Named("gaps") => {
            let gaps: Vec<Value> = u.gaps()?.into_iter().rev().map(|q| json!({"comp": q.comp + 1, "order": -q.e})).collect();
            (true, Some(Value::Array(gaps)), None, win)
        }
        Check::Named("sigma") => {
            let v = u.invariance_check()?;
            (v.pass, None, v.witness, win)
        }
        Check::Named("algebra") => {
            let v = u.algebra_point_check()?;
            (v.pass, None, v.witness, win)
        }
        Check::Named(n @ ("isotropy" | "pairwise_bkp")) => {
            let v = if *n == "isotropy" { u.isotropy_check()? } else { u.pairwise_bkp_check()? };
            let witness = v.witness.map(|(qs, c)| {
                let qs: Vec<String> = qs.iter().map(|q| q.to_string()).collect();
                format!("rows led by {} give residue {c}", qs.join(", "))
            });
            (v.isotropic, Some(json!({"certified": v.certified, "uncertified": v.uncertified})), witness, win)
        }
        Check::Named("connectedness") => {
            let m = u.connectedness_check()?;
            let uniform = m.iter().all(|&b| b == m[0]);
            let witness = (!uniform).then(|| "membership differs between components".to_string());
            (uniform, Some(json!({"e_i_in_U": m})), witness, win)
        }
        Check::Named("tangent") => {
            let t = u.tangent_orbit_dim(ctx.depth)?;
            (t.stable, Some(serde_json::to_value(t).expect("plain struct")), None, win)
        }
        Check::Named("ba_transform") => (ba_transform_check(u, &ctx.jet)?, None, None, win),
        Check::Named("frame") => (true, Some(serde_json::to_value(u.dump()).expect("plain struct")), None, win),
        Check::Named(other) => return Err(Error::Config(format!("unknown check `{other}`"))),
        Check::Identity(tag) => {
            let v = residue_identity_eval(*tag, u, &ctx.jet)?;
            let value = json!({"times": v.times, "residue": v.value.to_string()});
            (v.vanishes(), Some(value), None, [v.window.0, v.window.1])
        }
    })
}

fn run_check(ctx: &Ctx<'_>, check: &Check) -> CheckReport {
    let start = Instant::now();
    let (lo, hi) = ctx.point.window();
    let mut rep = CheckReport {
        name: check.name(),
        verdict: Outcome::Pass,
        window: [lo, hi],
        jet_cap: ctx.jet.cap,
        value: None,
        witness: None,
        detail: None,
        suggest_hi: None,
        millis: 0,
    };
    match check_value(ctx, check) {
        Ok((pass, value, witness, win)) => {
            rep.verdict = if pass { Outcome::Pass } else { Outcome::Fail };
            rep.value = value;
            rep.witness = witness;
            rep.window = win;
        }
        Err(Error::WindowInsufficient { what, suggest_hi }) => {
            rep.verdict = Outcome::WindowInsufficient;
            rep.detail = Some(format!("{what}; rerun with --window {lo}:{suggest_hi} or wider"));
            rep.suggest_hi = Some(suggest_hi);
        }
        Err(e) => {
            rep.verdict = Outcome::Fail;
            rep.detail = Some(e.to_string());
        }
    }
    rep.millis = start.elapsed().as_millis() as u64;
    rep
}

/// Runs every check of the job on one window and cap. `parallel` bounds the
/// worker threads; report order follows the config.
pub fn run(job: &Job, parallel: usize) -> Report {
    let [lo, hi] = job.window();
    let jet = JetCfg { cap: job.config.jet_cap, times: job.config.times };
    let point_desc;
    let checks: Vec<CheckReport> = match job.build_point(lo, hi) {
        Ok(point) => {
            point_desc = point.recipe().map_or("frame".to_string(), |r| r.desc().to_string());
            let ctx = Ctx { point: &point, jet, depth: job.config.tangent_depth.unwrap_or(6) };
            if parallel > 1 {
                let pool = rayon::ThreadPoolBuilder::new().num_threads(parallel).build().expect("thread pool");
                pool.install(|| job.checks.par_iter().map(|c| run_check(&ctx, c)).collect())
            } else {
                job.checks.iter().map(|c| run_check(&ctx, c)).collect()
            }
        }
        Err(e) => {
            point_desc = "point construction failed".to_string();
            let (verdict, suggest_hi) = match &e {
                Error::WindowInsufficient { suggest_hi, .. } => (Outcome::WindowInsufficient, Some(*suggest_hi)),
                _ => (Outcome::Fail, None),
            };
            job.checks
                .iter()
                .map(|c| CheckReport {
                    name: c.name(),
                    verdict,
                    window: [lo, hi],
                    jet_cap: jet.cap,
                    value: None,
                    witness: None,
                    detail: Some(e.to_string()),
                    suggest_hi,
                    millis: 0,
                })
                .collect()
        }
    };
    let outcome = checks.iter().fold(Outcome::Pass, |a: Outcome, c: &CheckReport| a.combine(c.verdict));
    Report {
        tool: format!("prymlab {}", env!("CARGO_PKG_VERSION")),
        point: point_desc,
        window: [lo, hi],
        jet_cap: jet.cap,
        checks,
        outcome,
        config: job.config.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepStep {
    pub window: [i64; 2],
    pub jet_cap: u32,
    pub tangent_depth: i64,
    pub report: Report,
}

/// First step from which a check's verdict and value stay fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stabilization {
    pub check: String,
    pub stable_from: Option<usize>,
    pub verdict: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub steps: Vec<SweepStep>,
    pub stabilization: Vec<Stabilization>,
    pub outcome: Outcome,
}

/// Comparable part of a check value: residues are compared as zero / nonzero
/// since their size grows with the cap.
fn signature(c: &CheckReport) -> (Outcome, Option<Value>) {
    let value = c.value.as_ref().map(|v| match v.get("residue") {
        Some(_) => json!(c.verdict == Outcome::Pass),
        None => {
            let mut v = v.clone();
            if let Some(o) = v.as_object_mut() {
                o.remove("depth");
                o.remove("certified");
                o.remove("uncertified");
                o.remove("window");
                o.remove("rows");
                o.remove("leading_set");
                o.remove("full_below");
            }
            v
        }
    });
    (c.verdict, value)
}

/// Runs the job along a monotone schedule. Shorter lists repeat their last
/// entry; empty lists keep the job's setting.
pub fn sweep(job: &Job, schedule: &SweepCfg, parallel: usize) -> Result<SweepReport> {
    let n = schedule.windows.len().max(schedule.caps.len()).max(schedule.depths.len()).max(1);
    let pick = |k: usize, len: usize| k.min(len.saturating_sub(1));
    for w in schedule.windows.windows(2) {
        if w[1][0] > w[0][0] || w[1][1] < w[0][1] {
            return Err(Error::Config("sweep windows must grow".into()));
        }
    }
    if schedule.caps.windows(2).any(|c| c[1] < c[0]) || schedule.depths.windows(2).any(|d| d[1] < d[0]) {
        return Err(Error::Config("sweep caps and depths must not decrease".into()));
    }
    let mut steps = Vec::new();
    for k in 0..n {
        let mut cfg = job.config.clone();
        if !schedule.windows.is_empty() {
            cfg.window = Some(schedule.windows[pick(k, schedule.windows.len())]);
        }
        if !schedule.caps.is_empty() {
            cfg.jet_cap = schedule.caps[pick(k, schedule.caps.len())];
        }
        if !schedule.depths.is_empty() {
            cfg.tangent_depth = Some(schedule.depths[pick(k, schedule.depths.len())]);
        }
        cfg.sweep = None;
        let step_job = Job::new(cfg)?;
        let report = run(&step_job, parallel);
        steps.push(SweepStep {
            window: report.window,
            jet_cap: report.jet_cap,
            tangent_depth: step_job.config.tangent_depth.unwrap_or(6),
            report,
        });
    }
    let mut stabilization = Vec::new();
    for (ci, name) in job.checks.iter().map(|c| c.name()).enumerate() {
        let sigs: Vec<_> = steps.iter().map(|s| signature(&s.report.checks[ci])).collect();
        let last = sigs.last().unwrap().clone();
        let mut from = sigs.len() - 1;
        while from > 0 && sigs[from - 1] == last {
            from -= 1;
        }
        let stable_from = (last.0 != Outcome::WindowInsufficient).then_some(from);
        stabilization.push(Stabilization { check: name, stable_from, verdict: last.0, value: last.1 });
    }
    let outcome = steps.last().map_or(Outcome::Pass, |s| s.report.outcome);
    Ok(SweepReport { steps, stabilization, outcome })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchReport {
    pub model: String,
    pub n: i64,
    pub window: [i64; 2],
    pub scan: Vec<crate::grass::SearchStep>,
    pub found: Option<i64>,
    /// Rescaling the generators of `U_n` by constants never changes the span,
    /// so only the tail exponent is scanned.
    pub rescaling_note: String,
}

pub fn prym_search(model: &Model, n: i64, start: i64, stop: i64, window: [i64; 2]) -> Result<SearchReport> {
    let (scan, found) = search_tail(model, n, start, stop, window[0], window[1])?;
    Ok(SearchReport {
        model: format!("p={} {}", model.p(), model.case()),
        n,
        window,
        scan,
        found,
        rescaling_note: "constant rescalings of generators leave U_n unchanged".into(),
    })
}

pub fn curve_info(p: u32, f: &[String]) -> Result<Value> {
    let c = CurveSpec::parse(p, f)?;
    let inv = curve_invariants(&c)?;
    Ok(serde_json::to_value(inv).expect("plain struct"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestLine {
    pub suite: String,
    pub cases: usize,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

fn random_cyclo(rng: &mut ChaCha8Rng, p: u32) -> Cyclo {
    let raw = (0..p - 1).map(|_| crate::scalars::rat(rng.gen_range(-4..=4), rng.gen_range(1..=3))).collect();
    Cyclo::from_coeffs(p, raw)
}

fn random_frame(rng: &mut ChaCha8Rng, model: &Model, lo: i64, hi: i64) -> Result<GrassPoint> {
    let p = model.p();
    let tail = rng.gen_range(-4..=0) * model.z_step();
    let gens: Vec<VSeries<Cyclo>> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let mut v = VSeries::zero(model, &Cyclo::zero(p));
            for _ in 0..3 {
                let i = rng.gen_range(0..model.ncomp());
                let e = rng.gen_range(tail..tail + 6);
                v = v.add(&VSeries::monomial(model, i, e, random_cyclo(rng, p)));
            }
            v
        })
        .collect();
    frame_build(model, &gens, Closure::Span { tail }, lo, hi)
}

/// Quick randomized property suites over exact arithmetic.
pub fn selftest(seed: u64, cases: usize) -> Vec<SelftestLine> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<SelftestLine> = Vec::new();
    let mut record = |suite: &str, failures: Vec<String>| {
        out.push(SelftestLine { suite: suite.into(), cases, pass: failures.is_empty(), witness: failures.into_iter().next() });
    };

    let mut fails = Vec::new();
    for p in [2u32, 3, 5] {
        for _ in 0..cases {
            let a = random_cyclo(&mut rng, p);
            let b = random_cyclo(&mut rng, p);
            if a.mul(&b).sub(&b.mul(&a)).is_zero() && (a.is_zero() || a.mul(&a.inv().unwrap()).is_one()) {
                continue;
            }
            fails.push(format!("p={p}: a={a} b={b}"));
        }
    }
    record("cyclotomic field axioms", fails);

    let mut fails = Vec::new();
    for p in [2u32, 3] {
        for case in [Case::Ramified, Case::NonRamified] {
            let model = Model::standard(p, case);
            for _ in 0..cases {
                let r = random_frame(&mut rng, &model, -14, 10).and_then(|u| {
                    let perp = u.orthogonal()?;
                    let back = perp.orthogonal()?;
                    let chi = u.index_chi()?;
                    let want = match case {
                        Case::Ramified => 1 - chi - p as i64,
                        Case::NonRamified => -chi,
                    };
                    Ok(back.leading_set() == u.leading_set() && perp.index_chi()? == want)
                });
                match r {
                    Ok(true) => {}
                    Ok(false) => fails.push(format!("p={p} {case}: orthogonal is not an involution")),
                    Err(e) => fails.push(e.to_string()),
                }
            }
        }
    }
    record("orthogonal involution and index", fails);

    let mut fails = Vec::new();
    for p in [2u32, 3, 5] {
        let model = Model::standard(p, Case::Ramified);
        let ring = JetRing::blocks(&["a"], 2, 2, p);
        for _ in 0..cases {
            let mut c = FlowCoords::zero(&model, FlowKind::Cover, &ring);
            for j in 1..=3u32 {
                let k = rng.gen_range(0..2);
                c.set(0, j, JetPoly::var(&ring, k).scale(&random_cyclo(&mut rng, p)));
            }
            match prop23_check(&c) {
                Ok(r) if r.all_pass() => {}
                Ok(r) => fails.push(format!("p={p}: {r:?}")),
                Err(e) => fails.push(e.to_string()),
            }
        }
    }
    record("norm and Prym coordinate laws", fails);

    let mut fails = Vec::new();
    let model = Model::standard(2, Case::Ramified);
    for _ in 0..cases.min(10) {
        let r = random_frame(&mut rng, &model, -14, 10).and_then(|u| {
            let cfg = JetCfg::with_times(1, 2);
            let a = crate::baker::baker_akhiezer(&u, &cfg, crate::baker::Normalization::Projected)?;
            let b = crate::baker::adjoint_baker(&u, &cfg, crate::baker::Normalization::Projected)?;
            let target = a.phi.zero_coeff().ring().clone();
            let b = b.phi.map_coeffs(|_, _, c| c.embed(&target).expect("same names"));
            let rows = u.orthogonal()?;
            Ok(rows.contains(&b)? && u.contains(&a.phi)?)
        });
        match r {
            Ok(true) => {}
            Ok(false) => fails.push("BA function left its subspace".into()),
            Err(e) => fails.push(e.to_string()),
        }
    }
    record("BA generating property", fails);
    out
}

/// Distinct check names accepted in configs, for help output.
pub fn known_checks() -> BTreeSet<String> {
    let mut s: BTreeSet<String> = CHECK_NAMES.iter().map(|n| n.to_string()).collect();
    for t in ["SIGMA_R", "SIGMA_NR", "BKP_GEN", "MOD_R_1", "MOD_R_2", "MOD_R_3", "MOD_NR_1", "MOD_NR_2", "MOD_NR_3", "CONN_i"] {
        s.insert(t.into());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const GENUS_TWO: &str = r#"{
        "curve": {"p": 2, "f": ["-1", "0", "0", "0", "0", "1"]},
        "window": [-30, 12],
        "jet_cap": 1,
        "checks": ["chi", "gaps", "sigma", "algebra", "tangent"]
    }"#;

    #[test]
    fn genus_two_report() {
        let job = Job::from_json(GENUS_TWO).unwrap();
        let r = run(&job, 1);
        assert_eq!(r.outcome, Outcome::Pass);
        assert_eq!(r.checks[0].value, Some(json!(-1)));
        assert_eq!(r.checks[1].value, Some(json!([{"comp": 1, "order": 1}, {"comp": 1, "order": 3}])));
        assert_eq!(r.checks[4].value.as_ref().unwrap()["dim"], json!(2));
        let again = run(&Job::from_json(GENUS_TWO).unwrap(), 2);
        assert_eq!(
            serde_json::to_string(&r.without_timing()).unwrap(),
            serde_json::to_string(&again.without_timing()).unwrap()
        );
        let replay = Job::new(r.config.clone()).unwrap();
        assert_eq!(run(&replay, 1).without_timing(), r.without_timing());
    }

    #[test]
    fn config_errors() {
        assert!(matches!(Job::from_json(r#"{"curve": {"p": 2, "f": ["1", "1"]}, "checks": []}"#), Err(Error::Config(_))));
        assert!(Job::from_json(r#"{"curve": {"p": 2, "f": ["1", "1"]}, "checks": ["nope"]}"#).is_err());
        assert!(Job::from_json(r#"{"curve": {"p": 2, "f": ["-1", "0", "1"]}, "checks": ["SIGMA_R"]}"#).is_err());
        assert!(Job::from_json(r#"{"model": {"p": 2, "case": "R"}, "frame": {"generators": []}, "checks": ["chi"]}"#).is_err());
        assert!(parse_window("5:5").is_err());
        assert_eq!(parse_window("-30:12").unwrap(), [-30, 12]);
    }

    #[test]
    fn frame_job_and_window_report() {
        let job = Job::from_json(
            r#"{"model": {"p": 2, "case": "R"},
                "frame": {"generators": [[{"e": -1, "c": "1"}, {"e": 1, "c": "3"}]], "tail": -2},
                "window": [-10, 8], "jet_cap": 1,
                "checks": ["chi", "isotropy", "BKP_GEN", "frame"]}"#,
        )
        .unwrap();
        let r = run(&job, 1);
        assert_eq!(r.checks[0].value, Some(json!(-1)));
        assert_eq!(r.checks[1].verdict, r.checks[2].verdict);
    }

    #[test]
    fn sweep_stabilizes_tangent() {
        let mut job = Job::from_json(GENUS_TWO).unwrap();
        job.config.checks = vec!["tangent".into()];
        let job = Job::new(job.config).unwrap();
        let s = sweep(&job, &SweepCfg { depths: vec![4, 5, 6], ..Default::default() }, 1).unwrap();
        assert_eq!(s.stabilization[0].stable_from, Some(0));
        assert_eq!(s.stabilization[0].value.as_ref().unwrap()["dim"], json!(2));
    }

    #[test]
    fn selftest_passes() {
        for line in selftest(7, 4) {
            assert!(line.pass, "{}: {:?}", line.suite, line.witness);
        }
    }
}
