//! Jet coordinates on the formal jacobians of the cover and of the base,
//! the maps between them, and the formal Prym.
//!
//! A point of a formal jacobian is `exp(Σ t_j z^{-j})`; its coordinates
//! `t_j` add under the group law, so every group map is linear here.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jets::{JetPoly, JetRing};
use crate::scalars::{rat, Coeff, Cyclo};
use crate::series::Series;
use crate::vseries::{flow_exponential, Case, Model, VSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowKind {
    /// Coordinates `t̄_j` on the base jacobian.
    Base,
    /// Coordinates `t_j` (ramified) or `t_j^{(i)}` (non-ramified) on the cover.
    Cover,
}

/// Finitely supported jet coordinates, keyed by `(component, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowCoords {
    model: Model,
    kind: FlowKind,
    ring: Arc<JetRing>,
    coords: BTreeMap<(usize, u32), JetPoly>,
}

impl FlowCoords {
    pub fn zero(model: &Model, kind: FlowKind, ring: &Arc<JetRing>) -> Self {
        FlowCoords { model: model.clone(), kind, ring: ring.clone(), coords: BTreeMap::new() }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn kind(&self) -> FlowKind {
        self.kind
    }

    pub fn ring(&self) -> &Arc<JetRing> {
        &self.ring
    }

    pub fn ncomp(&self) -> usize {
        match self.kind {
            FlowKind::Base => 1,
            FlowKind::Cover => self.model.ncomp(),
        }
    }

    pub fn set(&mut self, i: usize, j: u32, t: JetPoly) {
        assert!(i < self.ncomp() && j >= 1, "coordinate ({i},{j}) out of range");
        if t.is_zero() {
            self.coords.remove(&(i, j));
        } else {
            self.coords.insert((i, j), t);
        }
    }

    pub fn get(&self, i: usize, j: u32) -> JetPoly {
        self.coords.get(&(i, j)).cloned().unwrap_or_else(|| JetPoly::zero(&self.ring))
    }

    /// Nonzero coordinates of component `i` as `(j, t_j)`.
    pub fn component(&self, i: usize) -> impl Iterator<Item = (u32, &JetPoly)> {
        self.coords.range((i, 0)..(i + 1, 0)).map(|((_, j), t)| (*j, t))
    }

    pub fn max_j(&self) -> u32 {
        self.coords.keys().map(|k| k.1).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    fn with(&self, kind: FlowKind) -> Self {
        FlowCoords { model: self.model.clone(), kind, ring: self.ring.clone(), coords: BTreeMap::new() }
    }

    fn zip(&self, o: &Self, f: impl Fn(&JetPoly, &JetPoly) -> JetPoly) -> Self {
        assert_eq!(self.kind, o.kind);
        let mut out = self.with(self.kind);
        for key in self.coords.keys().chain(o.coords.keys()) {
            out.set(key.0, key.1, f(&self.get(key.0, key.1), &o.get(key.0, key.1)));
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.add(b))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.sub(b))
    }

    pub fn neg(&self) -> Self {
        self.scale(&Cyclo::from_int(self.model.p(), -1))
    }

    pub fn scale(&self, c: &Cyclo) -> Self {
        let mut out = self.with(self.kind);
        for (k, t) in &self.coords {
            out.set(k.0, k.1, t.scale(c));
        }
        out
    }

    /// Base coordinates viewed as a single-component flow on `K((z))`.
    pub fn base_flow(&self) -> Result<Series<JetPoly>> {
        if self.kind != FlowKind::Base {
            return Err(Error::Incompatible("base flow needs base coordinates".into()));
        }
        principal_exp(&self.ring, self.model.p(), self.component(0).map(|(j, t)| (j, t.clone())))
    }

    /// `exp` of the flow, an element of the cover algebra.
    pub fn cover_flow(&self) -> Result<VSeries<JetPoly>> {
        if self.kind != FlowKind::Cover {
            return Err(Error::Incompatible("cover flow needs cover coordinates".into()));
        }
        flow_exponential(&self.model, self)
    }

    /// `"j:poly; ..."` (single component) or `"i,j:poly; ..."` (1-based `i`).
    pub fn to_text(&self) -> String {
        let multi = self.ncomp() > 1;
        self.coords
            .iter()
            .map(|((i, j), t)| if multi { format!("{},{j}:{t}", i + 1) } else { format!("{j}:{t}") })
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn parse(model: &Model, kind: FlowKind, ring: &Arc<JetRing>, s: &str) -> Result<Self> {
        let mut out = Self::zero(model, kind, ring);
        for item in s.split(';').map(str::trim).filter(|x| !x.is_empty()) {
            let (key, poly) = item.split_once(':').ok_or_else(|| Error::Parse(format!("flow item `{item}` lacks `:`")))?;
            let bad = || Error::Parse(format!("bad flow key `{key}`"));
            let (i, j) = match key.split_once(',') {
                Some((i, j)) => (i.trim().parse::<usize>().map_err(|_| bad())?, j.trim().parse::<u32>().map_err(|_| bad())?),
                None => (1, key.trim().parse::<u32>().map_err(|_| bad())?),
            };
            if i == 0 || i > out.ncomp() || j == 0 {
                return Err(bad());
            }
            out.set(i - 1, j, JetPoly::parse(ring, poly)?);
        }
        Ok(out)
    }
}

/// `exp(Σ t_j z^{-j})` for nilpotent `t_j`; exact.
pub(crate) fn principal_exp(
    ring: &Arc<JetRing>,
    p: u32,
    terms: impl IntoIterator<Item = (u32, JetPoly)>,
) -> Result<Series<JetPoly>> {
    let zero = JetPoly::zero(ring);
    let terms: Vec<(i64, JetPoly)> = terms.into_iter().map(|(j, t)| (-(j as i64), t)).collect();
    if terms.iter().any(|(_, t)| !t.constant_term().is_zero()) {
        return Err(Error::NotNilpotent);
    }
    let x = Series::from_terms(&zero, terms);
    let one = Series::monomial(JetPoly::one(ring), 0);
    let mut acc = one.clone();
    let mut pw = one;
    for n in 1..=ring.total_cap() {
        pw = pw.mul(&x).scale(&Cyclo::from_rat(p, rat(1, n as i64)));
        if pw.is_zero_on_window() {
            break;
        }
        acc = acc.add(&pw);
    }
    Ok(acc.normalized())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordMap {
    /// Cover to base: the norm.
    Norm,
    /// Base to cover: pullback along the quotient.
    Pullback,
    /// Cover to cover: the action induced by `σ`.
    SigmaStar,
}

/// Image of `c` under one of the coordinate maps between jacobians.
pub fn jac_coord_map(kind: CoordMap, c: &FlowCoords) -> Result<FlowCoords> {
    let m = &c.model;
    let p = m.p();
    let need = |k: FlowKind| {
        if c.kind == k {
            Ok(())
        } else {
            Err(Error::Incompatible(format!("{kind:?} expects {k:?} coordinates")))
        }
    };
    match kind {
        CoordMap::Norm => {
            need(FlowKind::Cover)?;
            let mut out = c.with(FlowKind::Base);
            match m.case() {
                Case::Ramified => {
                    for (j, t) in c.component(0) {
                        if j % p == 0 {
                            out.set(0, j / p, t.scale(&Cyclo::from_int(p, p as i64)));
                        }
                    }
                }
                Case::NonRamified => {
                    for j in 1..=c.max_j() {
                        let s = (0..p as usize).fold(JetPoly::zero(&c.ring), |acc, i| acc.add(&c.get(i, j)));
                        out.set(0, j, s);
                    }
                }
            }
            Ok(out)
        }
        CoordMap::Pullback => {
            need(FlowKind::Base)?;
            let mut out = c.with(FlowKind::Cover);
            for (j, t) in c.component(0) {
                match m.case() {
                    Case::Ramified => out.set(0, j * p, t.clone()),
                    Case::NonRamified => (0..p as usize).for_each(|i| out.set(i, j, t.clone())),
                }
            }
            Ok(out)
        }
        CoordMap::SigmaStar => {
            need(FlowKind::Cover)?;
            let mut out = c.with(FlowKind::Cover);
            for (&(i, j), t) in &c.coords {
                match m.case() {
                    Case::Ramified => out.set(0, j, t.scale(&m.xi_pow(-(j as i64)))),
                    Case::NonRamified => out.set((i + 1) % p as usize, j, t.clone()),
                }
            }
            Ok(out)
        }
    }
}

fn sigma_star_pow(c: &FlowCoords, k: u32) -> Result<FlowCoords> {
    (0..k).try_fold(c.clone(), |acc, _| jac_coord_map(CoordMap::SigmaStar, &acc))
}

/// True iff `c` lies on the formal Prym: `t_j = 0` for `p | j` (ramified),
/// `Σ_i t_j^{(i)} = 0` (non-ramified).
pub fn prym_membership_coords(c: &FlowCoords) -> bool {
    c.kind == FlowKind::Cover && jac_coord_map(CoordMap::Norm, c).map(|n| n.is_zero()).unwrap_or(false)
}

/// The composite of `id - σ*^i` over `i = 1..p-1`.
pub fn prym_complement(c: &FlowCoords) -> Result<FlowCoords> {
    (1..c.model.p()).try_fold(c.clone(), |acc, i| Ok(acc.sub(&sigma_star_pow(&acc, i)?)))
}

/// The single map `id - σ*` (multiplicatively `g ↦ g·σ*(g)^{-1}`).
pub fn id_minus_sigma_star(c: &FlowCoords) -> Result<FlowCoords> {
    Ok(c.sub(&sigma_star_pow(c, 1)?))
}

/// The multiplication map `(g', h) ↦ g'·π*(h)` in coordinates.
pub fn prym_times_pullback(g: &FlowCoords, h: &FlowCoords) -> Result<FlowCoords> {
    Ok(g.add(&jac_coord_map(CoordMap::Pullback, h)?))
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct PrymSplitReport {
    /// Prym coordinates exponentiate to elements of norm 1.
    pub part1_norm_one: bool,
    /// The complement map lands in the Prym and is onto it.
    pub part2_surjection: bool,
    /// Multiplication `P × J(base) → J(cover)` is a coordinate bijection.
    pub part3_bijection: bool,
    /// `(complement, Nm)` after `m` multiplies both factors by `p`, and the
    /// group-level identity `flow(complement)·π*(flow(Nm)) = flow^p` holds.
    pub part4_inverse_up_to_power: bool,
    /// Both compositions are multiplication by `p` in coordinates.
    pub part5_pth_power: bool,
    /// Whether the single factor `id - σ*` would also give the `p`-th power.
    pub single_factor_pth_power: bool,
}

impl PrymSplitReport {
    pub fn all_pass(&self) -> bool {
        self.part1_norm_one && self.part2_surjection && self.part3_bijection && self.part4_inverse_up_to_power && self.part5_pth_power
    }
}

/// Checks parts (1)-(5) of the structure proposition for the formal Prym at
/// the jet point `c`.
pub fn prop23_check(c: &FlowCoords) -> Result<PrymSplitReport> {
    let m = &c.model;
    let p = m.p();
    let pc = Cyclo::from_int(p, p as i64);
    let norm = |x: &FlowCoords| jac_coord_map(CoordMap::Norm, x);
    let comp = prym_complement(c)?;
    let ncomp = norm(c)?;

    let flow_c = c.cover_flow()?;
    let flow_comp = comp.cover_flow()?;
    let one = Series::monomial(JetPoly::one(&c.ring), 0);
    let part1 = prym_membership_coords(&comp) && flow_comp.norm().normalized() == one;

    let on_prym = prym_complement(&comp)? == comp.scale(&pc);
    let part2 = prym_membership_coords(&comp) && on_prym;

    // Inverse of m: h = Nm(c)/p, g' = c - π*(h).
    let pinv = Cyclo::from_rat(p, rat(1, p as i64));
    let h = ncomp.scale(&pinv);
    let gp = c.sub(&jac_coord_map(CoordMap::Pullback, &h)?);
    let norm_pull = norm(&jac_coord_map(CoordMap::Pullback, &h)?)? == h.scale(&pc);
    let part3 = prym_membership_coords(&gp) && prym_times_pullback(&gp, &h)? == *c && norm_pull;

    let back = (prym_complement(&prym_times_pullback(&gp, &h)?)?, norm(&prym_times_pullback(&gp, &h)?)?);
    let inv_ok = back.0 == gp.scale(&pc) && back.1 == h.scale(&pc);
    let pull_flow = jac_coord_map(CoordMap::Pullback, &ncomp)?.cover_flow()?;
    let group_ok = flow_comp.mul(&pull_flow).normalized() == pow_v(&flow_c, p).normalized();
    let part4 = inv_ok && group_ok;

    let forward = prym_times_pullback(&comp, &ncomp)? == c.scale(&pc);
    let part5 = forward && inv_ok;

    let single = prym_times_pullback(&id_minus_sigma_star(c)?, &ncomp)? == c.scale(&pc);
    Ok(PrymSplitReport {
        part1_norm_one: part1,
        part2_surjection: part2,
        part3_bijection: part3,
        part4_inverse_up_to_power: part4,
        part5_pth_power: part5,
        single_factor_pth_power: single,
    })
}

fn pow_v(v: &VSeries<JetPoly>, e: u32) -> VSeries<JetPoly> {
    let one = VSeries::constant(v.model(), JetPoly::one(v.zero_coeff().ring()));
    (0..e).fold(one, |acc, _| acc.mul(v))
}

/// Coordinates of the Abel image `exp(Σ_{j≤D} z̄^j / (j z^j))` of a point
/// with local coordinate `zbar`, placed on `branch` (0 when ramified).
pub fn abel_coords(model: &Model, zbar: &JetPoly, d: u32, branch: usize) -> Result<FlowCoords> {
    if !zbar.constant_term().is_zero() {
        return Err(Error::NotNilpotent);
    }
    if branch >= model.ncomp() {
        return Err(Error::Config(format!("branch {branch} out of range")));
    }
    let mut out = FlowCoords::zero(model, FlowKind::Cover, zbar.ring());
    for j in 1..=d {
        out.set(branch, j, zbar.pow(j).scale(&Cyclo::from_rat(model.p(), rat(1, j as i64))));
    }
    Ok(out)
}

/// An element of `V*` whose norm is certified constant.
#[derive(Clone, Debug, PartialEq)]
pub struct PiElement<C> {
    g: VSeries<C>,
    norm: C,
}

impl<C: Coeff> PiElement<C> {
    pub fn element(&self) -> &VSeries<C> {
        &self.g
    }

    pub fn norm_value(&self) -> &C {
        &self.norm
    }
}

/// Outcome of certifying constancy of the norm.
#[derive(Clone, Debug, PartialEq)]
pub enum PiCheck<C> {
    Accepted(PiElement<C>),
    /// `Nm(g)` has a nonzero coefficient at this `z`-exponent.
    Rejected { exponent: i64, coeff: C },
}

/// Certifies `Nm(g) ∈ R` through `z`-exponent `upto` (everywhere if `g` is
/// exact) or reports the first offending exponent.
pub fn pi_element<C: Coeff>(g: &VSeries<C>, upto: i64) -> Result<PiCheck<C>> {
    let n = g.norm();
    if let Some((e, c)) = n.terms().find(|(e, _)| *e != 0) {
        if e <= upto || n.is_exact() {
            return Ok(PiCheck::Rejected { exponent: e, coeff: c.clone() });
        }
    }
    if !n.is_exact() && n.certified_hi() <= upto {
        return Err(Error::window(
            format!("norm certified only below z^{}", n.certified_hi()),
            g.hi() + (upto + 1 - n.certified_hi()) * g.model().z_step(),
        ));
    }
    let c = n.coeff(0).ok_or_else(|| Error::window("norm constant term unknown", g.hi() + g.model().z_step()))?;
    c.try_inv().map_err(|_| Error::NotUnit("norm is not a unit".into()))?;
    Ok(PiCheck::Accepted(PiElement { g: g.clone(), norm: c }))
}

/// Factors a unit as `exp(principal part) · constant · (1 + positive part)`,
/// componentwise when non-ramified. The unit must have no principal part
/// at `t = 0`; `target_hi` bounds the expansion of exact inputs.
pub fn gamma_decompose(
    g: &VSeries<JetPoly>,
    target_hi: i64,
) -> Result<(VSeries<JetPoly>, VSeries<JetPoly>, VSeries<JetPoly>)> {
    let model = g.model().clone();
    let ring = g.zero_coeff().ring().clone();
    let mut flows = Vec::new();
    let mut consts = Vec::new();
    let mut plus = Vec::new();
    for s in g.comps() {
        let s0 = s.map_coeffs(|_, c| c.constant_like(&c.constant_term()));
        if s0.terms().any(|(e, _)| e < 0) {
            return Err(Error::NotUnit("principal part at t = 0 is not nilpotent".into()));
        }
        let s0inv = s0.inverse(target_hi)?;
        let mut rest = s.clone();
        let mut logs: BTreeMap<u32, JetPoly> = BTreeMap::new();
        for _ in 0..=ring.total_cap() + 1 {
            let q = rest.mul(&s0inv);
            let principal: Vec<(u32, JetPoly)> =
                q.terms().filter(|(e, _)| *e < 0).map(|(e, c)| ((-e) as u32, c.clone())).collect();
            if principal.is_empty() {
                break;
            }
            for (j, c) in &principal {
                let cur = logs.remove(j).unwrap_or_else(|| JetPoly::zero(&ring));
                logs.insert(*j, cur.add(c));
            }
            rest = rest.mul(&principal_exp(&ring, model.p(), principal.into_iter().map(|(j, c)| (j, c.neg())))?);
        }
        let c0 = rest.coeff(0).ok_or_else(|| Error::window("constant term unknown", target_hi))?;
        let tail = rest.scale_coeff(&c0.try_inv()?);
        flows.push(principal_exp(&ring, model.p(), logs)?);
        consts.push(Series::monomial(c0, 0));
        plus.push(tail.normalized());
    }
    Ok((VSeries::new(&model, flows)?, VSeries::new(&model, consts)?, VSeries::new(&model, plus)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cover(model: &Model, ring: &Arc<JetRing>, vals: &[(usize, u32, usize)]) -> FlowCoords {
        let mut c = FlowCoords::zero(model, FlowKind::Cover, ring);
        for &(i, j, v) in vals {
            c.set(i, j, JetPoly::var(ring, v));
        }
        c
    }

    #[test]
    fn norm_of_ramified_coords() {
        let m = Model::standard(2, Case::Ramified);
        let ring = JetRing::blocks(&["t"], 4, 2, 2);
        let c = cover(&m, &ring, &[(0, 1, 0), (0, 2, 1), (0, 3, 2), (0, 4, 3)]);
        let n = jac_coord_map(CoordMap::Norm, &c).unwrap();
        let two = Cyclo::from_int(2, 2);
        assert_eq!(n.get(0, 1), JetPoly::var(&ring, 1).scale(&two));
        assert_eq!(n.get(0, 2), JetPoly::var(&ring, 3).scale(&two));
        assert_eq!(n.max_j(), 2);
        assert_eq!(n.base_flow().unwrap(), c.cover_flow().unwrap().norm().normalized());
    }

    #[test]
    fn sigma_star_and_pullback() {
        let m = Model::standard(3, Case::Ramified);
        let ring = JetRing::blocks(&["t"], 1, 1, 3);
        let c = cover(&m, &ring, &[(0, 1, 0)]);
        let s = jac_coord_map(CoordMap::SigmaStar, &c).unwrap();
        assert_eq!(s.get(0, 1), JetPoly::var(&ring, 0).scale(&Cyclo::xi_pow(3, -1)));
        assert_eq!(s.cover_flow().unwrap(), c.cover_flow().unwrap().sigma());

        let m2 = Model::standard(2, Case::Ramified);
        let mut b = FlowCoords::zero(&m2, FlowKind::Base, &ring);
        b.set(0, 1, JetPoly::var(&ring, 0));
        let up = jac_coord_map(CoordMap::Pullback, &b).unwrap();
        assert_eq!(up.get(0, 2), JetPoly::var(&ring, 0));
        assert!(up.get(0, 1).is_zero());
    }

    #[test]
    fn prym_membership_examples() {
        let m = Model::standard(2, Case::Ramified);
        let ring = JetRing::blocks(&["t"], 2, 2, 2);
        assert!(prym_membership_coords(&cover(&m, &ring, &[(0, 1, 0)])));
        let mut c = cover(&m, &ring, &[(0, 1, 0)]);
        c.set(0, 2, JetPoly::var(&ring, 0).pow(2));
        assert!(!prym_membership_coords(&c));
        let n = Model::standard(3, Case::NonRamified);
        let mut d = FlowCoords::zero(&n, FlowKind::Cover, &ring);
        d.set(0, 1, JetPoly::var(&ring, 0));
        d.set(1, 1, JetPoly::var(&ring, 0).neg());
        assert!(prym_membership_coords(&d));
    }

    #[test]
    fn complement_examples() {
        let m = Model::standard(3, Case::Ramified);
        let ring = JetRing::blocks(&["t"], 3, 1, 3);
        let c = cover(&m, &ring, &[(0, 1, 0), (0, 3, 2)]);
        let out = prym_complement(&c).unwrap();
        assert_eq!(out.get(0, 1), JetPoly::var(&ring, 0).scale(&Cyclo::from_int(3, 3)));
        assert!(out.get(0, 3).is_zero());

        let n = Model::standard(2, Case::NonRamified);
        let ring2 = JetRing::blocks(&["a", "b"], 1, 1, 2);
        let d = cover(&n, &ring2, &[(0, 1, 0), (1, 1, 1)]);
        let out = prym_complement(&d).unwrap();
        let (a, b) = (JetPoly::var(&ring2, 0), JetPoly::var(&ring2, 1));
        assert_eq!(out.get(0, 1), a.sub(&b));
        assert_eq!(out.get(1, 1), b.sub(&a));
    }

    #[test]
    fn prym_split_small_cases() {
        for (p, case) in [(2, Case::Ramified), (3, Case::Ramified), (3, Case::NonRamified)] {
            let m = Model::standard(p, case);
            let ring = JetRing::blocks(&["t"], 4, 2, p);
            let vals: Vec<(usize, u32, usize)> =
                (0..m.ncomp()).flat_map(|i| (1..=2u32).map(move |j| (i, j, (i + j as usize) % 4))).collect();
            let r = prop23_check(&cover(&m, &ring, &vals)).unwrap();
            assert!(r.all_pass(), "{p} {case:?} {r:?}");
            assert_eq!(r.single_factor_pth_power, p == 2, "{p} {case:?}");
        }
        let m = Model::standard(5, Case::Ramified);
        let ring = JetRing::blocks(&["t"], 1, 1, 5);
        assert!(prop23_check(&FlowCoords::zero(&m, FlowKind::Cover, &ring)).unwrap().all_pass());
    }

    #[test]
    fn abel_examples() {
        let m = Model::standard(2, Case::Ramified);
        let ring = JetRing::blocks(&["w"], 1, 3, 2);
        let w = JetPoly::var(&ring, 0);
        let a = abel_coords(&m, &w, 3, 0).unwrap();
        assert_eq!(a.get(0, 1), w);
        assert_eq!(a.get(0, 2), w.pow(2).scale(&Cyclo::from_rat(2, rat(1, 2))));
        assert_eq!(a.get(0, 3), w.pow(3).scale(&Cyclo::from_rat(2, rat(1, 3))));
        let pc = prym_complement(&a).unwrap();
        assert!(prym_membership_coords(&pc));
        assert_eq!(pc.get(0, 1), w.scale(&Cyclo::from_int(2, 2)));
    }

    #[test]
    fn pi_elements() {
        let m = Model::standard(2, Case::Ramified);
        let ring = JetRing::blocks(&["t"], 2, 2, 2);
        let c = prym_complement(&cover(&m, &ring, &[(0, 1, 0), (0, 2, 1)])).unwrap();
        match pi_element(&c.cover_flow().unwrap(), 10).unwrap() {
            PiCheck::Accepted(e) => assert_eq!(e.norm_value(), &JetPoly::one(&ring)),
            other => panic!("{other:?}"),
        }
        let ring1 = JetRing::blocks(&["e"], 1, 1, 2);
        let eps = JetPoly::var(&ring1, 0);
        let g = VSeries::constant(&m, JetPoly::one(&ring1)).add(&VSeries::monomial(&m, 0, 2, eps.clone()));
        match pi_element(&g, 10).unwrap() {
            PiCheck::Rejected { exponent, coeff } => {
                assert_eq!(exponent, 1);
                assert_eq!(coeff, eps.scale(&Cyclo::from_int(2, 2)));
            }
            other => panic!("{other:?}"),
        }
        let k = VSeries::constant(&m, Cyclo::from_int(2, 3));
        assert!(matches!(pi_element(&k, 5).unwrap(), PiCheck::Accepted(_)));
    }

    #[test]
    fn decomposition_recovers_factors() {
        let m = Model::standard(3, Case::Ramified);
        let ring = JetRing::blocks(&["t"], 2, 2, 3);
        let flow = cover(&m, &ring, &[(0, 1, 0), (0, 2, 1)]).cover_flow().unwrap();
        let k = VSeries::constant(&m, JetPoly::constant(&ring, Cyclo::from_int(3, 5)));
        let plus = VSeries::constant(&m, JetPoly::one(&ring)).add(&VSeries::monomial(&m, 0, 1, JetPoly::one(&ring)));
        let g = flow.mul(&k).mul(&plus);
        let (f2, k2, p2) = gamma_decompose(&g, 8).unwrap();
        assert_eq!(f2.normalized(), flow.normalized());
        assert_eq!(k2, k);
        assert_eq!(p2.truncate(6), plus.truncate(6));
    }
}
