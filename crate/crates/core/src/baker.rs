//! Baker-Akhiezer generating functions of frames and the residue identities
//! built from them.
//!
//! For a frame `U` with leading set `S` the generating function is
//! `Φ_U(t) = P_U(g_t · Σ_i e_i z^{a_i})`, where `a_i` is the top leading
//! exponent on component `i`, `g_t = exp(Σ_j t_j z^{-j})` per component
//! (with `j = 0` included when non-ramified) and
//! `P_U` projects onto `U` along the span of the non-leading positions. On
//! the big cell this is the unique element of `U ⊗ R` congruent to
//! `g_t · v_m / z` modulo `v_m V⁺`. The BA function is `ψ_U = (z / v_m) Φ_U`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flows::{FlowCoords, FlowKind};
use crate::grass::GrassPoint;
use crate::jets::{JetPoly, JetRing};
use crate::scalars::{Coeff as _, Cyclo};
use crate::series::Series;
use crate::vseries::{flow_exponential, Case, Model, VSeries};

/// Jet truncation for BA functions: degree cap in each block of times and
/// number of flow times per block (per component when non-ramified).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct JetCfg {
    pub cap: u32,
    pub times: Option<usize>,
}

impl JetCfg {
    pub fn new(cap: u32) -> Self {
        JetCfg { cap, times: None }
    }

    pub fn with_times(cap: u32, times: usize) -> Self {
        JetCfg { cap, times: Some(times) }
    }
}

const BLOCKS: [&str; 5] = ["t", "s", "r", "u", "w"];

fn block_name(b: usize) -> String {
    BLOCKS.get(b).map_or_else(|| format!("v{b}_"), |s| s.to_string())
}

/// Lowest flow index: non-ramified blocks also carry the constant flows
/// `exp(t_0^{(i)})` on each component, without which the top rows of
/// different components only enter `Φ_U` through their sum.
fn first_time(model: &Model) -> usize {
    match model.case() {
        Case::Ramified => 1,
        Case::NonRamified => 0,
    }
}

/// Jet ring with `nblocks` independent sets of flow times, truncated at
/// degree `cap` in each set.
pub fn flow_ring(model: &Model, nblocks: usize, times: usize, cap: u32) -> Arc<JetRing> {
    let nc = model.ncomp();
    let mut names = Vec::new();
    let mut block_of = Vec::new();
    for b in 0..nblocks {
        let pre = block_name(b);
        for i in 0..nc {
            for j in first_time(model)..=times {
                block_of.push(b);
                names.push(match model.case() {
                    Case::Ramified => format!("{pre}{j}"),
                    Case::NonRamified => format!("{pre}{}_{j}", i + 1),
                });
            }
        }
    }
    JetRing::blocked(names, block_of, cap, model.p()).expect("flow names are distinct")
}

fn var_index(model: &Model, times: usize, block: usize, comp: usize, j: usize) -> usize {
    let first = first_time(model);
    (block * model.ncomp() + comp) * (times + 1 - first) + (j - first)
}

fn block_flow(model: &Model, ring: &Arc<JetRing>, times: usize, block: usize, negate: bool) -> Result<VSeries<JetPoly>> {
    let var = |i: usize, j: usize| {
        let v = JetPoly::var(ring, var_index(model, times, block, i, j));
        if negate {
            v.neg()
        } else {
            v
        }
    };
    let mut c = FlowCoords::zero(model, FlowKind::Cover, ring);
    for i in 0..model.ncomp() {
        for j in 1..=times {
            c.set(i, j as u32, var(i, j));
        }
    }
    let g = flow_exponential(model, &c)?;
    if first_time(model) > 0 {
        return Ok(g);
    }
    let consts = (0..model.ncomp()).map(|i| Ok(Series::monomial(var(i, 0).exp()?, 0))).collect::<Result<Vec<_>>>()?;
    Ok(g.mul(&VSeries::new(model, consts)?))
}

/// Exponents of the normalizing element `v_m`, one per component:
/// `z1^m` when ramified, `(z^{q+1}, ..., z^{q+1}, z^q, ..., z^q)` with `r`
/// leading entries `q+1` for `m = qp + r` otherwise.
pub fn normalizer(model: &Model, m: i64) -> Vec<i64> {
    match model.case() {
        Case::Ramified => vec![m],
        Case::NonRamified => {
            let p = model.p() as i64;
            let (q, r) = (m.div_euclid(p), m.rem_euclid(p));
            (0..p).map(|i| if i < r { q + 1 } else { q }).collect()
        }
    }
}

/// `v_{-m}^{-1}`, the normalizer paired with `v_{-m}` under the residue pairing.
pub fn dual_normalizer(model: &Model, m: i64) -> Vec<i64> {
    normalizer(model, -m).into_iter().map(|a| -a).collect()
}

/// Top leading exponent on each component.
fn seed_exponents(u: &GrassPoint) -> Result<Vec<i64>> {
    let nc = u.model().ncomp();
    let mut top = vec![None; nc];
    for q in u.leading_set() {
        top[q.comp] = Some(q.e);
    }
    top.into_iter()
        .map(|a| a.ok_or_else(|| Error::window("a component has no leading position in the window", u.window().1)))
        .collect()
}

/// Largest number of flow times whose jets stay inside the frame window.
pub fn max_times(u: &GrassPoint, cap: u32) -> Result<usize> {
    let a = *seed_exponents(u)?.iter().min().unwrap();
    let room = a - u.window().0;
    if cap == 0 {
        return Ok(usize::MAX);
    }
    Ok((room.max(0) / cap as i64) as usize)
}

fn default_times(cap: u32, room: usize) -> usize {
    match cap {
        0 => 0,
        1 => room.min(8),
        _ => room.min(4),
    }
}

fn shift_comps<C: crate::scalars::Coeff>(v: &VSeries<C>, by: &[i64]) -> VSeries<C> {
    let comps = v.comps().iter().zip(by).map(|(s, &k)| s.shift(k)).collect();
    VSeries::new(v.model(), comps).expect("same component count")
}

#[derive(Clone, Debug)]
pub struct BAFunction {
    pub index: i64,
    /// Exponents of `v_m` per component.
    pub normalizer: Vec<i64>,
    /// Top leading exponent per component.
    pub seed: Vec<i64>,
    /// Whether `U ⊕ v_m V⁺ = V` on the window.
    pub transverse: bool,
    pub times: usize,
    /// `(v_m / z) ψ`, an element of `U ⊗ R`.
    pub phi: VSeries<JetPoly>,
    pub psi: VSeries<JetPoly>,
}

impl BAFunction {
    /// Coordinates of `(v_m / z) ψ` over the distinguished basis.
    pub fn coords(&self) -> Vec<Series<JetPoly>> {
        self.phi.base_coords()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// Requires `U` transverse to `v_m V⁺`.
    BigCell,
    /// Projection along the non-leading positions; agrees with `BigCell`
    /// wherever that is defined.
    Projected,
}

fn is_transverse(u: &GrassPoint, v: &[i64]) -> bool {
    let (lo, hi) = u.window();
    let leads: std::collections::HashSet<_> = u.leading_set().into_iter().collect();
    lo <= u.full_below()
        && u.is_complete()
        && (lo..hi).all(|e| (0..v.len()).all(|i| leads.contains(&crate::grass::Position::new(i, e)) == (e < v[i])))
}

/// The BA function of `u` in block `block` of `ring`, with normalizer `v`.
pub fn ba_in_ring(
    u: &GrassPoint,
    ring: &Arc<JetRing>,
    times: usize,
    block: usize,
    negate: bool,
    v: &[i64],
    norm: Normalization,
) -> Result<BAFunction> {
    let model = u.model();
    let index = u.index_chi()?;
    let transverse = is_transverse(u, v);
    if norm == Normalization::BigCell && !transverse {
        return Err(Error::NotInBigCell(format!("leading set is not the v_m big-cell pattern for index {index}")));
    }
    let seed = seed_exponents(u)?;
    let g = block_flow(model, ring, times, block, negate)?;
    let one = JetPoly::one(ring);
    let mut s = VSeries::zero(model, &JetPoly::zero(ring));
    for (i, &a) in seed.iter().enumerate() {
        s = s.add(&VSeries::monomial(model, i, a, one.clone()));
    }
    let lowest = *seed.iter().min().unwrap() - (times as i64) * ring.cap() as i64;
    if times > 0 && ring.cap() > 0 && lowest < u.window().0 {
        return Err(Error::window("flow jets reach below the frame window; lower the window start", u.window().1));
    }
    let phi = u.project(&g.mul(&s))?.1.normalized();
    let psi = shift_comps(&phi, &v.iter().map(|a| 1 - a).collect::<Vec<_>>());
    Ok(BAFunction { index, normalizer: v.to_vec(), seed, transverse, times, phi, psi })
}

fn resolve_times(points: &[&GrassPoint], cfg: &JetCfg) -> Result<usize> {
    let mut room = usize::MAX;
    for u in points {
        room = room.min(max_times(u, cfg.cap)?);
    }
    let t = cfg.times.unwrap_or_else(|| default_times(cfg.cap, room));
    if cfg.cap > 0 && t > room {
        return Err(Error::window(format!("{t} flow times do not fit the window (at most {room})"), points[0].window().1));
    }
    Ok(t)
}

/// BA function in a single block `t`.
pub fn baker_akhiezer(u: &GrassPoint, cfg: &JetCfg, norm: Normalization) -> Result<BAFunction> {
    let times = resolve_times(&[u], cfg)?;
    let ring = flow_ring(u.model(), 1, times, cfg.cap);
    let v = normalizer(u.model(), u.index_chi()?);
    ba_in_ring(u, &ring, times, 0, false, &v, norm)
}

/// `ψ*_U(z, t) = ψ_{U^⊥}(z, -t)`.
pub fn adjoint_baker(u: &GrassPoint, cfg: &JetCfg, norm: Normalization) -> Result<BAFunction> {
    let perp = u.orthogonal()?;
    let times = resolve_times(&[u, &perp], cfg)?;
    let ring = flow_ring(u.model(), 1, times, cfg.cap);
    let v = normalizer(u.model(), perp.index_chi()?);
    ba_in_ring(&perp, &ring, times, 0, true, &v, norm)
}

/// Residue identities, named as on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IdentityTag {
    SigmaR,
    SigmaNR,
    BkpGen,
    ModR(u8),
    ModNR(u8),
    Conn(usize),
}

impl fmt::Display for IdentityTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdentityTag::SigmaR => write!(f, "SIGMA_R"),
            IdentityTag::SigmaNR => write!(f, "SIGMA_NR"),
            IdentityTag::BkpGen => write!(f, "BKP_GEN"),
            IdentityTag::ModR(k) => write!(f, "MOD_R_{k}"),
            IdentityTag::ModNR(k) => write!(f, "MOD_NR_{k}"),
            IdentityTag::Conn(i) => write!(f, "CONN_{i}"),
        }
    }
}

impl FromStr for IdentityTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown identity `{s}`"));
        let idx = |rest: &str| rest.parse::<u8>().ok().filter(|k| (1..=3).contains(k)).ok_or_else(bad);
        match s {
            "SIGMA_R" => Ok(IdentityTag::SigmaR),
            "SIGMA_NR" => Ok(IdentityTag::SigmaNR),
            "BKP_GEN" => Ok(IdentityTag::BkpGen),
            _ => {
                if let Some(rest) = s.strip_prefix("MOD_R_") {
                    Ok(IdentityTag::ModR(idx(rest)?))
                } else if let Some(rest) = s.strip_prefix("MOD_NR_") {
                    Ok(IdentityTag::ModNR(idx(rest)?))
                } else if let Some(rest) = s.strip_prefix("CONN_") {
                    rest.parse::<usize>().ok().filter(|&i| i >= 1).map(IdentityTag::Conn).ok_or_else(bad)
                } else {
                    Err(bad())
                }
            }
        }
    }
}

impl IdentityTag {
    /// Every identity that applies to the model.
    pub fn all_for(model: &Model) -> Vec<IdentityTag> {
        match model.case() {
            Case::Ramified => {
                vec![IdentityTag::SigmaR, IdentityTag::BkpGen, IdentityTag::ModR(1), IdentityTag::ModR(2), IdentityTag::ModR(3)]
            }
            Case::NonRamified => vec![
                IdentityTag::SigmaNR,
                IdentityTag::BkpGen,
                IdentityTag::ModNR(1),
                IdentityTag::ModNR(2),
                IdentityTag::ModNR(3),
            ],
        }
    }

    fn case(&self) -> Option<Case> {
        match self {
            IdentityTag::SigmaR | IdentityTag::ModR(_) => Some(Case::Ramified),
            IdentityTag::SigmaNR | IdentityTag::ModNR(_) | IdentityTag::Conn(_) => Some(Case::NonRamified),
            IdentityTag::BkpGen => None,
        }
    }

    fn nblocks(&self, p: usize) -> usize {
        match self {
            IdentityTag::SigmaR | IdentityTag::SigmaNR | IdentityTag::ModR(1) | IdentityTag::ModNR(1) => 2,
            IdentityTag::ModR(2) | IdentityTag::ModNR(2) => 3,
            IdentityTag::BkpGen => p,
            _ => 1,
        }
    }
}

/// Jet-valued left-hand side of an identity.
#[derive(Clone, Debug)]
pub struct IdentityValue {
    pub tag: IdentityTag,
    pub cap: u32,
    pub times: usize,
    /// Window the value was certified on.
    pub window: (i64, i64),
    pub value: JetPoly,
}

impl IdentityValue {
    pub fn vanishes(&self) -> bool {
        self.value.is_zero()
    }
}

fn coeff_at(v: &VSeries<JetPoly>, i: usize, e: i64, frame_hi: i64) -> Result<JetPoly> {
    v.coeff(i, e).ok_or_else(|| Error::window(format!("coefficient z^{e} not certified"), frame_hi + (e + 1 - v.hi()).max(1) + 2))
}

/// Substitutes flow times of `block` through `f(comp, j) -> (comp', scale)`.
fn retime(
    v: &VSeries<JetPoly>,
    model: &Model,
    times: usize,
    block: usize,
    f: impl Fn(usize, usize) -> (usize, Cyclo),
) -> VSeries<JetPoly> {
    let ring = v.zero_coeff().ring().clone();
    let images: Vec<JetPoly> = (0..ring.nvars()).map(|k| JetPoly::var(&ring, k)).collect::<Vec<_>>();
    let mut images = images;
    for i in 0..model.ncomp() {
        for j in first_time(model)..=times {
            let (i2, c) = f(i, j);
            images[var_index(model, times, block, i, j)] = JetPoly::var(&ring, var_index(model, times, block, i2, j)).scale(&c);
        }
    }
    v.map_coeffs(|_, _, c| c.substitute(&images))
}

/// Evaluates an identity on `u`. When the frame carries a recipe, the window
/// is enlarged until every coefficient involved is certified.
pub fn residue_identity_eval(tag: IdentityTag, u: &GrassPoint, cfg: &JetCfg) -> Result<IdentityValue> {
    let mut cur = u.clone();
    for _ in 0..6 {
        match eval_on(tag, &cur, cfg) {
            Err(Error::WindowInsufficient { suggest_hi, .. }) if cur.recipe().is_some() => {
                // The adjoint frame's top edge mirrors this frame's bottom edge.
                let (lo, hi) = cur.window();
                let grow = (suggest_hi - hi).max(4);
                cur = cur.rebuild(lo - grow, hi + grow)?;
            }
            r => return r,
        }
    }
    eval_on(tag, &cur, cfg)
}

fn eval_on(tag: IdentityTag, u: &GrassPoint, cfg: &JetCfg) -> Result<IdentityValue> {
    let model = u.model();
    if let Some(case) = tag.case() {
        if case != model.case() {
            return Err(Error::Incompatible(format!("{tag} does not apply to this model")));
        }
    }
    let p = model.p() as usize;
    let pi = p as i64;
    let m = u.index_chi()?;
    let perp = u.orthogonal()?;
    let sig = u.sigma_image();
    let times = resolve_times(&[u, &perp, &sig], cfg)?;
    let ring = flow_ring(model, tag.nblocks(p), times, cfg.cap);
    let pr = Cyclo::from_int(model.p(), pi);
    let v_u = match model.case() {
        Case::Ramified => normalizer(model, m),
        Case::NonRamified => dual_normalizer(model, m),
    };
    let v_perp = normalizer(model, perp.index_chi()?);
    let ba = |w: &GrassPoint, block: usize| ba_in_ring(w, &ring, times, block, false, &v_u, Normalization::Projected);
    let adj = |block: usize| ba_in_ring(&perp, &ring, times, block, true, &v_perp, Normalization::Projected);
    let fh = u.window().1;
    let at = |f: &VSeries<JetPoly>, i: usize, e: i64| coeff_at(f, i, e, fh);
    let trace_nr = |f: &VSeries<JetPoly>, e_of: &dyn Fn(usize) -> i64| -> Result<JetPoly> {
        let mut acc = JetPoly::zero(&ring);
        for i in 0..p {
            acc = acc.add(&at(f, i, e_of(i))?);
        }
        Ok(acc)
    };
    let (q, r) = ((-m).div_euclid(pi), (-m).rem_euclid(pi) as usize);
    let value = match tag {
        IdentityTag::SigmaR => {
            let f = ba(&sig, 0)?.psi.mul(&adj(1)?.psi);
            at(&f, 0, 1)?.scale(&pr)
        }
        IdentityTag::ModR(1) => {
            let xi = model.xi().clone();
            let moved = retime(&ba(u, 0)?.psi.sigma(), model, times, 0, |i, j| (i, xi.pow(j as u64).inv().unwrap()));
            at(&moved.mul(&adj(1)?.psi), 0, 1)?.scale(&pr)
        }
        IdentityTag::ModR(2) => {
            let f = ba(u, 0)?.psi.mul(&ba(u, 1)?.psi).mul(&adj(2)?.psi);
            at(&f, 0, 2 - m)?.scale(&pr)
        }
        IdentityTag::ModR(3) => at(&adj(0)?.psi, 0, m)?.scale(&pr),
        IdentityTag::SigmaNR => trace_nr(&ba(&sig, 0)?.psi.mul(&adj(1)?.psi), &|_| 1)?,
        IdentityTag::ModNR(1) => {
            // ψ_{σU}(z, t) from ψ_U(σz, t^(2), ..., t^(p), t^(1)), corrected by σ(v)/v.
            let moved = retime(&ba(u, 0)?.psi.sigma(), model, times, 0, |i, _| ((i + 1) % p, Cyclo::one(model.p())));
            let corr: Vec<i64> = (0..p).map(|i| v_u[(i + p - 1) % p] - v_u[i]).collect();
            trace_nr(&shift_comps(&moved, &corr).mul(&adj(1)?.psi), &|_| 1)?
        }
        IdentityTag::ModNR(2) => {
            let f = ba(u, 0)?.psi.mul(&ba(u, 1)?.psi).mul(&adj(2)?.psi);
            trace_nr(&f, &|i| if i < r { q + 3 } else { q + 2 })?
        }
        IdentityTag::ModNR(3) => trace_nr(&adj(0)?.psi, &|i| if i < r { -q - 1 } else { -q })?,
        IdentityTag::Conn(i) => {
            if i > p {
                return Err(Error::Config(format!("CONN_{i} needs a component index at most {p}")));
            }
            if r != 0 {
                return Err(Error::Incompatible(format!("CONN_{i} needs the index to be a multiple of {p}")));
            }
            at(&adj(0)?.psi, i - 1, -q)?
        }
        IdentityTag::BkpGen => {
            let gens: Vec<VSeries<JetPoly>> = (0..p).map(|b| ba(u, b).map(|x| x.phi)).collect::<Result<_>>()?;
            VSeries::wedge_residue(&gens)?
        }
        IdentityTag::ModR(_) | IdentityTag::ModNR(_) => unreachable!("identity index validated on parse"),
    };
    Ok(IdentityValue { tag, cap: cfg.cap, times, window: u.window(), value })
}

/// Compares `ψ_{σU}(z, t)` with `ψ_U(σz, σ* t)` exactly.
///
/// Ramified: `σ* t_j = ξ^j t_j`, times the constant `ξ^{m-1-M}` (1 on the big
/// cell). Non-ramified: blocks move one component forward, times `σ(v_m)/v_m`.
pub fn ba_transform_check(u: &GrassPoint, cfg: &JetCfg) -> Result<bool> {
    let model = u.model();
    let p = model.p() as usize;
    let sig = u.sigma_image();
    let leads: std::collections::HashSet<_> = u.leading_set().into_iter().collect();
    let nc = model.ncomp();
    if leads.iter().any(|q| !leads.contains(&crate::grass::Position::new((q.comp + 1) % nc, q.e))) {
        return Err(Error::NotInBigCell("leading set is not σ-stable".into()));
    }
    let times = resolve_times(&[u, &sig], cfg)?;
    let ring = flow_ring(model, 1, times, cfg.cap);
    let m = u.index_chi()?;
    let v = normalizer(model, m);
    let lhs = ba_in_ring(&sig, &ring, times, 0, false, &v, Normalization::Projected)?;
    let base = ba_in_ring(u, &ring, times, 0, false, &v, Normalization::Projected)?;
    let rhs = match model.case() {
        Case::Ramified => {
            let xi = model.xi().clone();
            let moved = retime(&base.psi.sigma(), model, times, 0, |i, j| (i, xi.pow(j as u64)));
            moved.scale(&model.xi_pow(m - 1 - base.seed[0]))
        }
        Case::NonRamified => {
            let moved = retime(&base.psi.sigma(), model, times, 0, |i, _| ((i + 1) % p, Cyclo::one(model.p())));
            let corr: Vec<i64> = (0..p).map(|i| v[(i + p - 1) % p] - v[i]).collect();
            shift_comps(&moved, &corr)
        }
    };
    let hi = lhs.psi.hi().min(rhs.hi());
    Ok(lhs.psi.truncate(hi).sub(&rhs.truncate(hi)).is_zero_on_window())
}


#[cfg(test)]
mod curve_tests {
    use super::*;
    use crate::krichever::{algebra_point, CurveSpec};
    use crate::scalars::Rat;

    fn curve(p: u32, f: &[i64]) -> CurveSpec {
        CurveSpec::new(p, f.iter().map(|&c| Rat::from_integer(c.into())).collect()).unwrap()
    }

    #[test]
    fn genus_two_identities() {
        let c = curve(2, &[-1, 0, 0, 0, 0, 1]);
        let u = algebra_point(&c, -30, 12).unwrap();
        for cap in [0, 1] {
            for t in [IdentityTag::SigmaR, IdentityTag::ModR(1), IdentityTag::ModR(2), IdentityTag::ModR(3)] {
                assert!(residue_identity_eval(t, &u, &JetCfg::new(cap)).unwrap().vanishes(), "{t} at D={cap}");
            }
        }
        // The structure sheaf is not a Prym datum: the p-form is nonzero.
        assert!(!residue_identity_eval(IdentityTag::BkpGen, &u, &JetCfg::new(1)).unwrap().vanishes());
        assert!(ba_transform_check(&u, &JetCfg::new(1)).unwrap());
        let v = u.without_row(u.num_rows() - 1);
        assert!(!residue_identity_eval(IdentityTag::ModR(3), &v, &JetCfg::new(1)).unwrap().vanishes());
    }

    #[test]
    fn lines_are_connected_components() {
        let u = algebra_point(&CurveSpec::disjoint_lines(3).unwrap(), -12, 8).unwrap();
        for i in 1..=3 {
            assert!(residue_identity_eval(IdentityTag::Conn(i), &u, &JetCfg::new(1)).unwrap().vanishes());
        }
        let c = curve(2, &[-1, 0, 0, 0, 0, 0, 1]);
        let w = algebra_point(&c, -15, 8).unwrap();
        assert!(matches!(ba_transform_check(&w, &JetCfg::new(1)), Err(Error::NotInBigCell(_))));
        assert!(matches!(residue_identity_eval(IdentityTag::Conn(1), &w, &JetCfg::new(1)), Err(Error::Incompatible(_))));
    }
}
