//! Elements of the algebra `V ⊗ R`.
//!
//! In the ramified case `V = K((z1))` with `z = z1^p` and a single stored
//! component indexed by `z1`-exponents. In the non-ramified case `V` is a
//! product of `p` copies of `K((z))`, each component indexed by
//! `z`-exponents.

use std::fmt;

use crate::error::{Error, Result};
use crate::flows::{principal_exp, FlowCoords};
use crate::jets::JetPoly;
use crate::scalars::{Coeff, Cyclo};
use crate::series::Series;

/// Laurent series in the base variable `z`.
pub type BaseSeries<C> = Series<C>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Case {
    Ramified,
    NonRamified,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Case::Ramified => write!(f, "ramified"),
            Case::NonRamified => write!(f, "non-ramified"),
        }
    }
}

/// The prime, the case and the root of unity used by `σ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    p: u32,
    case: Case,
    xi: Cyclo,
}

impl Model {
    pub fn new(p: u32, case: Case, xi: Cyclo) -> Result<Self> {
        if !crate::scalars::is_prime(p) {
            return Err(Error::Config(format!("{p} is not prime")));
        }
        if xi.p() != p || xi.is_one() || !xi.pow(p as u64).is_one() {
            return Err(Error::Config(format!("{xi} is not a primitive {p}-th root of unity")));
        }
        Ok(Model { p, case, xi })
    }

    /// Model whose `σ` uses the cyclotomic generator.
    pub fn standard(p: u32, case: Case) -> Self {
        Model::new(p, case, Cyclo::xi_pow(p, 1)).expect("cyclotomic generator is primitive")
    }

    /// Model whose `σ` uses `ξ^k` for `k` prime to `p`.
    pub fn with_xi_power(p: u32, case: Case, k: i64) -> Result<Self> {
        Model::new(p, case, Cyclo::xi_pow(p, k))
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn xi(&self) -> &Cyclo {
        &self.xi
    }

    /// `ξ^k` for the model's `ξ`.
    pub fn xi_pow(&self, k: i64) -> Cyclo {
        self.xi.pow(k.rem_euclid(self.p as i64) as u64)
    }

    pub fn ncomp(&self) -> usize {
        match self.case {
            Case::Ramified => 1,
            Case::NonRamified => self.p as usize,
        }
    }

    /// Stored exponent step corresponding to one power of `z`.
    pub fn z_step(&self) -> i64 {
        match self.case {
            Case::Ramified => self.p as i64,
            Case::NonRamified => 1,
        }
    }
}

fn div_floor(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -(-a).div_euclid(b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VSeries<C> {
    model: Model,
    comps: Vec<Series<C>>,
}

impl<C: Coeff> VSeries<C> {
    pub fn new(model: &Model, comps: Vec<Series<C>>) -> Result<Self> {
        if comps.len() != model.ncomp() {
            return Err(Error::Incompatible(format!("expected {} components, got {}", model.ncomp(), comps.len())));
        }
        Ok(VSeries { model: model.clone(), comps })
    }

    pub fn zero(model: &Model, zero: &C) -> Self {
        VSeries { model: model.clone(), comps: vec![Series::zero(zero); model.ncomp()] }
    }

    /// `c` placed at stored exponent `e` of component `i` (0-based).
    pub fn monomial(model: &Model, i: usize, e: i64, c: C) -> Self {
        let zero = c.zero_like();
        let mut v = Self::zero(model, &zero);
        v.comps[i] = Series::monomial(c, e);
        v
    }

    /// The constant `c` (diagonal in the non-ramified case).
    pub fn constant(model: &Model, c: C) -> Self {
        VSeries { model: model.clone(), comps: vec![Series::monomial(c, 0); model.ncomp()] }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn comps(&self) -> &[Series<C>] {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &Series<C> {
        &self.comps[i]
    }

    pub fn into_comps(self) -> Vec<Series<C>> {
        self.comps
    }

    pub fn zero_coeff(&self) -> &C {
        self.comps[0].zero_coeff()
    }

    pub fn lo(&self) -> i64 {
        self.comps.iter().map(|s| s.lo()).min().unwrap()
    }

    /// Smallest certified end across components.
    pub fn hi(&self) -> i64 {
        self.comps.iter().map(|s| s.certified_hi()).min().unwrap()
    }

    pub fn is_exact(&self) -> bool {
        self.comps.iter().all(|s| s.is_exact())
    }

    pub fn coeff(&self, i: usize, e: i64) -> Option<C> {
        self.comps[i].coeff(e)
    }

    /// Nonzero stored terms as `(component, exponent, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, i64, &C)> {
        self.comps.iter().enumerate().flat_map(|(i, s)| s.terms().map(move |(e, c)| (i, e, c)))
    }

    pub fn is_zero_on_window(&self) -> bool {
        self.comps.iter().all(|s| s.is_zero_on_window())
    }

    fn check(&self, o: &Self) {
        debug_assert_eq!(self.model, o.model, "model mismatch");
    }

    fn zip(&self, o: &Self, f: impl Fn(&Series<C>, &Series<C>) -> Series<C>) -> Self {
        self.check(o);
        VSeries { model: self.model.clone(), comps: self.comps.iter().zip(&o.comps).map(|(a, b)| f(a, b)).collect() }
    }

    fn map(&self, f: impl Fn(&Series<C>) -> Series<C>) -> Self {
        VSeries { model: self.model.clone(), comps: self.comps.iter().map(f).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.add(b))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.sub(b))
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.mul(b))
    }

    pub fn neg(&self) -> Self {
        self.map(|a| a.neg())
    }

    pub fn scale(&self, c: &Cyclo) -> Self {
        self.map(|a| a.scale(c))
    }

    pub fn scale_coeff(&self, c: &C) -> Self {
        self.map(|a| a.scale_coeff(c))
    }

    pub fn truncate(&self, hi: i64) -> Self {
        self.map(|a| a.truncate(hi))
    }

    pub fn normalized(&self) -> Self {
        self.map(|a| a.clone().normalized())
    }

    /// Shifts every component by `k` stored exponents (`z1^k` when ramified).
    pub fn shift(&self, k: i64) -> Self {
        self.map(|a| a.shift(k))
    }

    /// Multiplies by `z^k`.
    pub fn mul_z(&self, k: i64) -> Self {
        self.shift(k * self.model.z_step())
    }

    pub fn map_coeffs(&self, f: impl Fn(usize, i64, &C) -> C) -> Self {
        VSeries {
            model: self.model.clone(),
            comps: self.comps.iter().enumerate().map(|(i, s)| s.map_coeffs(|e, c| f(i, e, c))).collect(),
        }
    }

    /// Applies the automorphism `σ`.
    pub fn sigma(&self) -> Self {
        match self.model.case {
            Case::Ramified => {
                let m = self.model.clone();
                self.map(|a| a.map_coeffs(|e, c| c.scaled(&m.xi_pow(e))))
            }
            Case::NonRamified => {
                let mut comps = self.comps.clone();
                comps.rotate_right(1);
                VSeries { model: self.model.clone(), comps }
            }
        }
    }

    pub fn sigma_pow(&self, k: i64) -> Self {
        let k = k.rem_euclid(self.model.p as i64);
        (0..k).fold(self.clone(), |acc, _| acc.sigma())
    }

    /// Multiplicative inverse (componentwise when non-ramified).
    pub fn inverse(&self, target_hi: i64) -> Result<Self> {
        let comps = self.comps.iter().map(|s| s.inverse(target_hi)).collect::<Result<Vec<_>>>()?;
        Ok(VSeries { model: self.model.clone(), comps })
    }

    /// Reindexes a ramified series supported on multiples of `p` to `z`.
    fn to_base(&self, s: &Series<C>) -> Series<C> {
        let p = self.model.p as i64;
        let lo = div_floor(s.lo(), p);
        let exact = s.is_exact();
        let hi = if exact { div_ceil(s.hi(), p).max(lo) } else { div_ceil(s.certified_hi(), p) };
        let coeffs = (lo..hi).map(|k| s.coeff(p * k).unwrap_or_else(|| s.zero_coeff().clone())).collect();
        Series::new(s.zero_coeff(), lo, coeffs, exact)
    }

    /// Trace of the homothety, as a series in `z`.
    pub fn trace(&self) -> BaseSeries<C> {
        match self.model.case {
            Case::Ramified => {
                let p = self.model.p as i64;
                let kept = self.comps[0].filter_exponents(|e| e.rem_euclid(p) == 0);
                self.to_base(&kept).scale(&Cyclo::from_int(self.model.p, p))
            }
            Case::NonRamified => {
                let mut it = self.comps.iter();
                let first = it.next().unwrap().clone();
                it.fold(first, |acc, s| acc.add(s))
            }
        }
    }

    /// Product of the `σ`-conjugates, as a series in `z`.
    pub fn norm(&self) -> BaseSeries<C> {
        match self.model.case {
            Case::Ramified => {
                let mut acc = self.clone();
                let mut cur = self.clone();
                for _ in 1..self.model.p {
                    cur = cur.sigma();
                    acc = acc.mul(&cur);
                }
                let prod = &acc.comps[0];
                let p = self.model.p as i64;
                debug_assert!(prod.terms().all(|(e, _)| e.rem_euclid(p) == 0));
                self.to_base(prod)
            }
            Case::NonRamified => {
                let mut it = self.comps.iter();
                let first = it.next().unwrap().clone();
                it.fold(first, |acc, s| acc.mul(s))
            }
        }
    }

    /// `res_z tr(a b) dz`.
    pub fn pairing(&self, o: &Self) -> Result<C> {
        let tr = self.mul(o).trace();
        tr.coeff(-1).ok_or_else(|| {
            Error::window("pairing needs the z^-1 coefficient of the trace", self.hi().min(o.hi()).saturating_add(2 * self.model.z_step()))
        })
    }

    /// Coordinates over the distinguished basis: `1, z1, ..., z1^{p-1}`
    /// (ramified) or the idempotents `e_i` (non-ramified).
    pub fn base_coords(&self) -> Vec<BaseSeries<C>> {
        match self.model.case {
            Case::NonRamified => self.comps.clone(),
            Case::Ramified => {
                let p = self.model.p as i64;
                let s = &self.comps[0];
                (0..p)
                    .map(|k| {
                        let lo = div_floor(s.lo() - k, p);
                        let exact = s.is_exact();
                        let hi = if exact { div_ceil(s.hi() - k, p).max(lo) } else { div_ceil(s.certified_hi() - k, p) };
                        let coeffs =
                            (lo..hi).map(|m| s.coeff(p * m + k).unwrap_or_else(|| s.zero_coeff().clone())).collect();
                        Series::new(s.zero_coeff(), lo, coeffs, exact)
                    })
                    .collect()
            }
        }
    }

    /// Inverse of [`base_coords`](Self::base_coords).
    pub fn from_base_coords(model: &Model, coords: &[BaseSeries<C>]) -> Result<Self> {
        if coords.len() != model.p as usize {
            return Err(Error::Incompatible("need p coordinate series".into()));
        }
        match model.case {
            Case::NonRamified => Self::new(model, coords.to_vec()),
            Case::Ramified => {
                let p = model.p as i64;
                let zero = coords[0].zero_coeff().clone();
                let mut acc = Series::zero(&zero);
                for (k, c) in coords.iter().enumerate() {
                    let spread = Series::new(
                        &zero,
                        p * c.lo() + k as i64,
                        (c.lo()..c.hi())
                            .flat_map(|e| {
                                let v = c.coeff(e).unwrap();
                                std::iter::once(v).chain((1..p).map(|_| zero.clone()))
                            })
                            .collect(),
                        c.is_exact(),
                    );
                    acc = acc.add(&spread);
                }
                Self::new(model, vec![acc])
            }
        }
    }

    /// `res_z det(coordinates of u_1, ..., u_p) dz`.
    pub fn wedge_residue(us: &[Self]) -> Result<C> {
        let model = &us.first().ok_or_else(|| Error::Incompatible("empty wedge".into()))?.model;
        let p = model.p as usize;
        if us.len() != p {
            return Err(Error::Incompatible(format!("wedge needs {p} arguments, got {}", us.len())));
        }
        let rows: Vec<Vec<BaseSeries<C>>> = us.iter().map(|u| u.base_coords()).collect();
        // Only exponents up to z^-1 matter.
        let det = det_series(&rows, 0);
        det.coeff(-1).ok_or_else(|| {
            let need = us.iter().map(|u| u.hi()).min().unwrap_or(0).saturating_add(model.z_step() * 2);
            Error::window("wedge residue needs more terms of the arguments", need)
        })
    }

    pub fn to_text(&self) -> String
    where
        C: fmt::Display,
    {
        self.comps.iter().map(|s| s.to_text()).collect::<Vec<_>>().join(" | ")
    }
}

/// Determinant of a square matrix of series by expansion along rows,
/// memoizing minors on column subsets. Coefficients at `cap` and above are
/// dropped.
pub fn det_series<C: Coeff>(rows: &[Vec<Series<C>>], cap: i64) -> Series<C> {
    let n = rows.len();
    let zero = rows[0][0].zero_coeff().clone();
    // minors[mask] = det of rows (n - |mask|)..n on columns in mask
    // A minor on rows r.. is later multiplied by entries of rows ..r, so it
    // must be kept up to `cap` minus their lowest exponents.
    let row_lo: Vec<i64> = rows.iter().map(|r| r.iter().map(|s| s.lo()).min().unwrap()).collect();
    let caps: Vec<i64> = (0..=n).map(|r| cap.saturating_sub(row_lo[..r].iter().sum::<i64>())).collect();
    let mut minors: Vec<Option<Series<C>>> = vec![None; 1 << n];
    minors[0] = Some(Series::monomial(zero.one_like(), 0));
    for size in 1..=n {
        let r = n - size;
        for mask in 0usize..(1 << n) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let mut acc = Series::zero(&zero);
            let mut sign_pos = true;
            for c in 0..n {
                if mask & (1 << c) == 0 {
                    continue;
                }
                let sub = minors[mask & !(1 << c)].as_ref().unwrap();
                let term = rows[r][c].mul_upto(sub, caps[r]);
                acc = if sign_pos { acc.add(&term) } else { acc.sub(&term) };
                sign_pos = !sign_pos;
            }
            minors[mask] = Some(acc);
        }
    }
    minors[(1 << n) - 1].take().unwrap()
}

impl VSeries<Cyclo> {
    /// Views a scalar series as one over the ring of `zero`.
    pub fn lift<C: Coeff>(&self, zero: &C) -> VSeries<C> {
        VSeries {
            model: self.model.clone(),
            comps: self
                .comps
                .iter()
                .map(|s| {
                    Series::new(
                        zero,
                        s.lo(),
                        (s.lo()..s.hi()).map(|e| zero.constant_like(&s.coeff(e).unwrap())).collect(),
                        s.is_exact(),
                    )
                })
                .collect(),
        }
    }
}

/// Principal `p`-th root of `1 + (positive tail)`.
pub fn pth_root_series<C: Coeff>(f: &BaseSeries<C>, p: u32, target_hi: i64) -> Result<BaseSeries<C>> {
    f.pth_root(p, target_hi)
}

/// `exp(Σ t_j z1^{-j})` (ramified) or componentwise `exp(Σ t_j^{(i)} z^{-j})`.
/// Exact because the times are nilpotent.
pub fn flow_exponential(model: &Model, coords: &FlowCoords) -> Result<VSeries<JetPoly>> {
    let comps = (0..model.ncomp())
        .map(|i| principal_exp(coords.ring(), model.p(), coords.component(i).map(|(j, t)| (j, t.clone()))))
        .collect::<Result<Vec<_>>>()?;
    VSeries::new(model, comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{FlowCoords, FlowKind};
    use crate::jets::JetRing;

    fn r(p: u32) -> Model {
        Model::standard(p, Case::Ramified)
    }

    fn nr(p: u32) -> Model {
        Model::standard(p, Case::NonRamified)
    }

    fn one(p: u32) -> Cyclo {
        Cyclo::one(p)
    }

    fn mono(m: &Model, i: usize, e: i64) -> VSeries<Cyclo> {
        VSeries::monomial(m, i, e, one(m.p()))
    }

    #[test]
    fn products_and_windows() {
        let m = r(2);
        assert_eq!(mono(&m, 0, -1).mul(&mono(&m, 0, 1)), mono(&m, 0, 0));
        let n = nr(2);
        let prod = mono(&n, 0, 1).mul(&mono(&n, 1, 1));
        assert!(prod.normalized().is_zero_on_window());
        let onez = mono(&m, 0, 0).add(&mono(&m, 0, 1));
        let geo = VSeries::new(
            &m,
            vec![Series::new(&Cyclo::zero(2), 0, (0..5).map(|k| Cyclo::from_int(2, if k % 2 == 0 { 1 } else { -1 })).collect(), false)],
        )
        .unwrap();
        let prod = onez.mul(&geo);
        assert_eq!(prod.hi(), 5);
        assert_eq!(prod.truncate(5).normalized().terms().count(), 1);
    }

    #[test]
    fn sigma_examples() {
        let m = r(3);
        assert_eq!(mono(&m, 0, 2).sigma(), VSeries::monomial(&m, 0, 2, Cyclo::xi_pow(3, 2)));
        let n = nr(2);
        let a = mono(&n, 0, 3).add(&mono(&n, 1, -1).scale(&Cyclo::from_int(2, 5)));
        let b = mono(&n, 1, 3).add(&mono(&n, 0, -1).scale(&Cyclo::from_int(2, 5)));
        assert_eq!(a.sigma(), b);
        let m2 = r(2);
        let c = mono(&m2, 0, -3).add(&mono(&m2, 0, 4)).add(&mono(&m2, 0, 1));
        assert_eq!(c.sigma().sigma(), c);
        let n3 = nr(3);
        let d = mono(&n3, 0, 0);
        assert_eq!(d.sigma(), mono(&n3, 1, 0));
    }

    #[test]
    fn trace_examples() {
        let m = r(2);
        assert!(mono(&m, 0, 1).trace().normalized().terms().next().is_none());
        let t = mono(&m, 0, 2).trace();
        assert_eq!(t.coeff(1).unwrap(), Cyclo::from_int(2, 2));
        assert_eq!(t.normalized().terms().count(), 1);
        let n = nr(3);
        let s = mono(&n, 0, 1).add(&mono(&n, 1, 1)).add(&mono(&n, 2, 2));
        let t = s.trace();
        assert_eq!(t.coeff(1).unwrap(), Cyclo::from_int(3, 2));
        assert_eq!(t.coeff(2).unwrap(), Cyclo::one(3));
    }

    #[test]
    fn norm_examples() {
        let m = r(3);
        let nz = mono(&m, 0, 1).norm();
        assert_eq!(nz, Series::monomial(one(3), 1));

        let ring = JetRing::blocks(&["t"], 2, 2, 2);
        let mut c = FlowCoords::zero(&m_r2(), FlowKind::Cover, &ring);
        c.set(0, 1, JetPoly::var(&ring, 0));
        c.set(0, 2, JetPoly::var(&ring, 1));
        let g = flow_exponential(&m_r2(), &c).unwrap();
        let got = g.norm();
        let mut b = FlowCoords::zero(&m_r2(), FlowKind::Base, &ring);
        b.set(0, 1, JetPoly::var(&ring, 1).scale(&Cyclo::from_int(2, 2)));
        assert_eq!(got.normalized(), b.base_flow().unwrap());
    }

    fn m_r2() -> Model {
        r(2)
    }

    #[test]
    fn pairing_oracle() {
        for p in [2u32, 3] {
            let m = r(p);
            for a in -8..=8 {
                for b in -8..=8 {
                    let got = mono(&m, 0, a).pairing(&mono(&m, 0, b)).unwrap();
                    let want = if a + b == -(p as i64) { Cyclo::from_int(p, p as i64) } else { Cyclo::zero(p) };
                    assert_eq!(got, want, "p={p} a={a} b={b}");
                }
            }
        }
        let n = nr(3);
        for i in 0..3 {
            for j in 0..3 {
                for a in -4..=4 {
                    for b in -4..=4 {
                        let got = mono(&n, i, a).pairing(&mono(&n, j, b)).unwrap();
                        let hit = i == j && a + b == -1;
                        assert_eq!(got.is_one(), hit);
                        assert_eq!(got.is_zero(), !hit);
                    }
                }
            }
        }
        assert!(mono(&r(2), 0, 0).pairing(&mono(&r(2), 0, 0)).unwrap().is_zero());
    }

    #[test]
    fn wedge_examples() {
        let m = r(2);
        let w = VSeries::wedge_residue(&[mono(&m, 0, -1), mono(&m, 0, 0)]).unwrap();
        assert_eq!(w, Cyclo::from_int(2, -1));
        let n = nr(2);
        let w = VSeries::wedge_residue(&[mono(&n, 0, -1), mono(&n, 1, 0)]).unwrap();
        assert_eq!(w, Cyclo::one(2));
        let m3 = r(3);
        let u = mono(&m3, 0, -4).add(&mono(&m3, 0, 2));
        assert!(VSeries::wedge_residue(&[u.clone(), u, mono(&m3, 0, -2)]).unwrap().is_zero());
    }

    #[test]
    fn base_coords_round_trip() {
        let m = r(3);
        let v = mono(&m, 0, -5).add(&mono(&m, 0, 4)).add(&mono(&m, 0, 0)).truncate(7);
        let back = VSeries::from_base_coords(&m, &v.base_coords()).unwrap();
        for e in -6..7 {
            assert_eq!(back.coeff(0, e), v.coeff(0, e));
        }
    }

    #[test]
    fn flows() {
        let m = r(2);
        let ring = JetRing::blocks(&["t"], 2, 1, 2);
        let mut c = FlowCoords::zero(&m, FlowKind::Cover, &ring);
        c.set(0, 1, JetPoly::var(&ring, 0));
        let g = flow_exponential(&m, &c).unwrap();
        assert_eq!(g.coeff(0, -1).unwrap(), JetPoly::var(&ring, 0));
        assert_eq!(g.coeff(0, 0).unwrap(), JetPoly::one(&ring));
        assert_eq!(g.terms().count(), 2);

        let ring2 = JetRing::blocks(&["t"], 2, 2, 2);
        let mut a = FlowCoords::zero(&m, FlowKind::Cover, &ring2);
        a.set(0, 1, JetPoly::var(&ring2, 0));
        let ga = flow_exponential(&m, &a).unwrap();
        let gb = flow_exponential(&m, &a.neg()).unwrap();
        assert_eq!(ga.mul(&gb).normalized(), VSeries::constant(&m, JetPoly::one(&ring2)));

        let n = nr(3);
        let ring3 = JetRing::new(vec!["a".into()], 1, 3).unwrap();
        let mut c = FlowCoords::zero(&n, FlowKind::Cover, &ring3);
        c.set(0, 1, JetPoly::var(&ring3, 0));
        let g = flow_exponential(&n, &c).unwrap();
        assert_eq!(g.comp(0).terms().count(), 2);
        assert_eq!(g.comp(1), &Series::monomial(JetPoly::one(&ring3), 0));
    }
}
