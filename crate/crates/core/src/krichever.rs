//! Cyclic covers `y^p = f(x)` marked over `x = ∞`, their expansions at the
//! marked fiber, and the subspaces of functions and fractional ideals.

use num::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grass::{frame_build, Closure, GrassPoint, Recipe};
use crate::scalars::{fmt_rat, is_prime, parse_rat, Cyclo, Rat};
use crate::series::Series;
use crate::vseries::{Case, Model, VSeries};

fn trim(mut a: Vec<Rat>) -> Vec<Rat> {
    while a.last().map_or(false, |c| c.is_zero()) {
        a.pop();
    }
    a
}

fn poly_rem(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let mut r = trim(a.to_vec());
    let b = trim(b.to_vec());
    let lead = b.last().expect("nonzero divisor").clone();
    while r.len() >= b.len() && !r.is_empty() {
        let q = r.last().unwrap() / &lead;
        let shift = r.len() - b.len();
        for (i, c) in b.iter().enumerate() {
            r[shift + i] = &r[shift + i] - &q * c;
        }
        r = trim(r);
    }
    r
}

fn poly_gcd(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
    while !b.is_empty() {
        let r = poly_rem(&a, &b);
        a = b;
        b = r;
    }
    a
}

fn derivative(a: &[Rat]) -> Vec<Rat> {
    a.iter().enumerate().skip(1).map(|(k, c)| c * Rat::from_integer((k as i64).into())).collect()
}

/// A smooth affine cyclic cover `y^p = f(x)` with `f` monic and squarefree.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveSpec {
    p: u32,
    f: Vec<Rat>,
}

impl CurveSpec {
    /// `f` is given by ascending coefficients.
    pub fn new(p: u32, f: Vec<Rat>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidCurve(format!("{p} is not prime")));
        }
        let f = trim(f);
        match f.last() {
            None => return Err(Error::InvalidCurve("f is zero".into())),
            Some(c) if !c.is_one() => return Err(Error::InvalidCurve("f is not monic".into())),
            _ => {}
        }
        if f.len() > 1 && poly_gcd(&f, &derivative(&f)).len() > 1 {
            return Err(Error::InvalidCurve("f is not squarefree".into()));
        }
        Ok(CurveSpec { p, f })
    }

    pub fn parse(p: u32, coeffs: &[impl AsRef<str>]) -> Result<Self> {
        Self::new(p, coeffs.iter().map(|s| parse_rat(s.as_ref())).collect::<Result<_>>()?)
    }

    /// `p` disjoint lines, presented as `y^p = 1`.
    pub fn disjoint_lines(p: u32) -> Result<Self> {
        Self::new(p, vec![Rat::one()])
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn f(&self) -> &[Rat] {
        &self.f
    }

    pub fn degree(&self) -> usize {
        self.f.len() - 1
    }

    pub fn case(&self) -> Case {
        if self.degree() % self.p as usize == 0 {
            Case::NonRamified
        } else {
            Case::Ramified
        }
    }

    /// Exponent `c` with `σ: z1 ↦ ξ^c z1` on the ramified parameter; 1 otherwise.
    pub fn sigma_exponent(&self) -> i64 {
        let (p, d) = (self.p as i64, self.degree() as i64);
        match self.case() {
            Case::Ramified => (1..p).find(|c| (c * d).rem_euclid(p) == p - 1).unwrap(),
            Case::NonRamified => 1,
        }
    }

    /// The model aligned with the curve's automorphism `y ↦ ξy`.
    pub fn model(&self) -> Model {
        Model::with_xi_power(self.p, self.case(), self.sigma_exponent()).expect("exponent prime to p")
    }

    pub fn describe(&self) -> String {
        let terms: Vec<String> = self
            .f
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| match k {
                0 => fmt_rat(c),
                _ if c.is_one() => format!("x^{k}"),
                _ => format!("({})x^{k}", fmt_rat(c)),
            })
            .collect();
        format!("y^{} = {}", self.p, terms.join(" + "))
    }
}

/// `Σ_b a_b(x) y^b`, coefficients ascending in `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyXY(pub Vec<Vec<Cyclo>>);

/// A rational function `num / den` on the curve.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionRep {
    pub num: PolyXY,
    pub den: PolyXY,
}

impl FunctionRep {
    pub fn new(num: Vec<Vec<Cyclo>>, den: Vec<Vec<Cyclo>>) -> Result<Self> {
        if den.iter().all(|a| a.iter().all(|c| c.is_zero())) {
            return Err(Error::DivisionByZero);
        }
        Ok(FunctionRep { num: PolyXY(num), den: PolyXY(den) })
    }

    /// Rational coefficients, `num[b][k]` multiplying `x^k y^b`.
    pub fn from_rats(p: u32, num: &[&[i64]], den: &[&[i64]]) -> Result<Self> {
        let conv = |m: &[&[i64]]| m.iter().map(|a| a.iter().map(|&c| Cyclo::from_int(p, c)).collect()).collect();
        Self::new(conv(num), conv(den))
    }

    pub fn constant(p: u32) -> Self {
        Self::from_rats(p, &[&[1]], &[&[1]]).unwrap()
    }

    pub fn x(p: u32) -> Self {
        Self::from_rats(p, &[&[0, 1]], &[&[1]]).unwrap()
    }

    pub fn y(p: u32) -> Self {
        Self::from_rats(p, &[&[], &[1]], &[&[1]]).unwrap()
    }

    /// Pullback by the curve automorphism `y ↦ ξy`.
    pub fn sigma(&self) -> Self {
        let tw = |q: &PolyXY| {
            PolyXY(
                q.0.iter()
                    .enumerate()
                    .map(|(b, a)| {
                        let p = a.first().map_or(2, |c| c.p());
                        let w = Cyclo::xi_pow(p, b as i64);
                        a.iter().map(|c| c.mul(&w)).collect()
                    })
                    .collect(),
            )
        };
        FunctionRep { num: tw(&self.num), den: tw(&self.den) }
    }
}

/// Generators of a fractional ideal of the affine coordinate ring.
#[derive(Clone, Debug, PartialEq)]
pub struct IdealSpec {
    pub gens: Vec<FunctionRep>,
}

impl IdealSpec {
    pub fn new(gens: Vec<FunctionRep>) -> Result<Self> {
        if gens.is_empty() {
            return Err(Error::Config("ideal needs at least one generator".into()));
        }
        Ok(IdealSpec { gens })
    }

    pub fn unit(p: u32) -> Self {
        IdealSpec { gens: vec![FunctionRep::constant(p)] }
    }
}

/// Expansions of `x` and `y` at the marked fiber, `y` certified below `hi`.
pub fn puiseux_expand(c: &CurveSpec, hi: i64) -> Result<(VSeries<Cyclo>, VSeries<Cyclo>)> {
    let model = c.model();
    let p = c.p;
    let d = c.degree() as i64;
    let zero = Cyclo::zero(p);
    let one = Cyclo::one(p);
    let x = VSeries::constant(&model, one.clone()).mul_z(-1);
    let step = model.z_step();
    // y^p = x^d (1 + a_{d-1}/x + ...): the bracket as a series in the parameter.
    let bracket = Series::from_terms(
        &zero,
        c.f.iter().enumerate().map(|(k, a)| ((d - k as i64) * step, Cyclo::from_rat(p, a.clone()))),
    );
    let lead = d * step / p as i64;
    let root = bracket.pth_root(p, hi + lead)?.shift(-lead).truncate(hi);
    let y = match c.case() {
        Case::Ramified => VSeries::new(&model, vec![root])?,
        Case::NonRamified => {
            let comps = (0..p as i64).map(|i| root.scale(&Cyclo::xi_pow(p, -i))).collect();
            VSeries::new(&model, comps)?
        }
    };
    Ok((x, y))
}

fn eval_poly(q: &PolyXY, x: &VSeries<Cyclo>, y: &VSeries<Cyclo>) -> VSeries<Cyclo> {
    let model = x.model();
    let zero = Cyclo::zero(model.p());
    let mut acc = VSeries::zero(model, &zero);
    let mut ypow = VSeries::constant(model, Cyclo::one(model.p()));
    for (b, a) in q.0.iter().enumerate() {
        if b > 0 {
            ypow = ypow.mul(y);
        }
        if a.iter().all(|c| c.is_zero()) {
            continue;
        }
        let mut ax = VSeries::zero(model, &zero);
        for (k, c) in a.iter().enumerate() {
            if !c.is_zero() {
                ax = ax.add(&VSeries::constant(model, c.clone()).mul_z(-(k as i64)));
            }
        }
        acc = acc.add(&ax.mul(&ypow));
    }
    acc
}

/// Expansion of `F` at the marked fiber, certified below `hi`.
pub fn expand_function(c: &CurveSpec, f: &FunctionRep, hi: i64) -> Result<VSeries<Cyclo>> {
    let mut extra = 4 + c.degree() as i64 * c.model().z_step();
    for _ in 0..10 {
        let (x, y) = puiseux_expand(c, hi + extra)?;
        let num = eval_poly(&f.num, &x, &y);
        let den = eval_poly(&f.den, &x, &y);
        let mut ok = true;
        for s in den.comps() {
            if s.valuation().is_none() {
                if s.is_exact() {
                    return Err(Error::DivisionByZero);
                }
                ok = false;
            }
        }
        if ok {
            let nv = num.comps().iter().filter_map(|s| s.valuation()).min().unwrap_or(0);
            let r = num.mul(&den.inverse(hi - nv + 1)?);
            if r.hi() >= hi {
                return Ok(r.truncate(hi).normalized());
            }
            extra += hi - r.hi() + 4;
        } else {
            extra *= 2;
        }
    }
    Err(Error::window("expansion precision did not reach the window", hi))
}

/// Default closure slack for a curve: products whose leading exponent lies
/// this far below the window can still cancel into it.
pub fn default_slack(c: &CurveSpec) -> i64 {
    let p = c.p as i64;
    2 * p * (c.degree() as i64).max(1) + 2 * p
}

/// The subspace of a fractional ideal: module closure over `K[x]` of
/// `G·y^b`, `b < p`.
pub fn module_point(c: &CurveSpec, ideal: &IdealSpec, lo: i64, hi: i64) -> Result<GrassPoint> {
    if lo >= hi {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let model = c.model();
    let p = c.p;
    let slack = default_slack(c);
    let margin = 2 * p as i64 + 2;
    let target = 2 * hi - lo + slack + margin;
    let ybasis: Vec<FunctionRep> = (0..p as usize)
        .map(|b| {
            let mut num = vec![vec![]; b + 1];
            num[b] = vec![Cyclo::one(p)];
            FunctionRep::new(num, vec![vec![Cyclo::one(p)]]).unwrap()
        })
        .collect();
    let (x, y) = puiseux_expand(c, target)?;
    let mut gens = Vec::new();
    for g in &ideal.gens {
        let ge = expand_function(c, g, target)?;
        let mut yb = VSeries::constant(&model, Cyclo::one(p));
        for _ in &ybasis {
            gens.push(ge.mul(&yb));
            yb = yb.mul(&y);
        }
    }
    let point = frame_build(&model, &gens, Closure::Module { algebra: &[x], slack }, lo, hi)?;
    let (c2, i2) = (c.clone(), ideal.clone());
    Ok(point.with_recipe(Recipe::new(format!("ideal on {}", c.describe()), move |lo, hi| module_point(&c2, &i2, lo, hi))))
}

/// The subspace of the affine coordinate ring.
pub fn algebra_point(c: &CurveSpec, lo: i64, hi: i64) -> Result<GrassPoint> {
    module_point(c, &IdealSpec::unit(c.p), lo, hi)
}

/// A missing pole order on a component (numbered from 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Gap {
    pub comp: usize,
    pub order: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveInvariants {
    pub curve: String,
    pub case: Case,
    pub infinity: String,
    pub chi: i64,
    pub genus: i64,
    pub gaps: Vec<Gap>,
    /// Degree `(g-1) - (p-2)(ḡ-1)` with rational base.
    pub prym_degree: i64,
    pub window: (i64, i64),
}

/// A window deep enough to certify the fullness bound, found by doubling.
pub fn certified_algebra_point(c: &CurveSpec) -> Result<GrassPoint> {
    let step = c.model().z_step();
    let hi = 2 * step + 2;
    let mut lo = -8 * step;
    for _ in 0..6 {
        match algebra_point(c, lo, hi) {
            Ok(u) if u.is_complete() => return Ok(u),
            Ok(_) | Err(Error::WindowInsufficient { .. }) => lo *= 2,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoStabilization("window growth exhausted".into()))
}

pub fn curve_invariants(c: &CurveSpec) -> Result<CurveInvariants> {
    let u = certified_algebra_point(c)?;
    let chi = u.index_chi()?;
    let genus = 1 - chi;
    let gaps = u.gaps()?.into_iter().map(|q| Gap { comp: q.comp + 1, order: -q.e }).rev().collect();
    let infinity = match c.case() {
        Case::Ramified => "one point, totally ramified".to_string(),
        Case::NonRamified => format!("{} points, unramified", c.p),
    };
    Ok(CurveInvariants {
        curve: c.describe(),
        case: c.case(),
        infinity,
        chi,
        genus,
        gaps,
        prym_degree: genus - 1 + c.p as i64 - 2,
        window: u.window(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(p: u32, f: &[i64]) -> CurveSpec {
        CurveSpec::new(p, f.iter().map(|&c| Rat::from_integer(c.into())).collect()).unwrap()
    }

    fn relation_holds(c: &CurveSpec, hi: i64) {
        let (x, y) = puiseux_expand(c, hi).unwrap();
        let fx = eval_poly(&PolyXY(vec![c.f.iter().map(|a| Cyclo::from_rat(c.p, a.clone())).collect()]), &x, &y);
        let diff = y.pow_p(c.p).sub(&fx);
        assert!(diff.hi() > 0);
        assert!(diff.is_zero_on_window(), "{}", diff.to_text());
    }

    trait PowP {
        fn pow_p(&self, p: u32) -> Self;
    }

    impl PowP for VSeries<Cyclo> {
        fn pow_p(&self, p: u32) -> Self {
            (1..p).fold(self.clone(), |a, _| a.mul(self))
        }
    }

    #[test]
    fn validation() {
        assert!(CurveSpec::new(2, vec![Rat::one(), Rat::zero(), Rat::from_integer(2.into())]).is_err());
        assert!(CurveSpec::new(2, vec![Rat::zero(), Rat::zero(), Rat::one()]).is_err());
        assert!(CurveSpec::new(4, vec![Rat::one()]).is_err());
        assert_eq!(curve(2, &[-1, 0, 0, 0, 0, 1]).case(), Case::Ramified);
        assert_eq!(curve(2, &[-1, 0, 0, 0, 0, 0, 1]).case(), Case::NonRamified);
    }

    #[test]
    fn expansions_satisfy_relation() {
        relation_holds(&curve(2, &[-1, 0, 0, 0, 0, 1]), 20);
        relation_holds(&curve(3, &[-1, 0, 0, 0, 1]), 20);
        relation_holds(&curve(2, &[-1, 0, 0, 0, 0, 0, 1]), 10);
        relation_holds(&curve(5, &[2, -1, 1]), 20);
        let (_, y) = puiseux_expand(&curve(2, &[-1, 0, 0, 0, 0, 1]), 16).unwrap();
        let terms: Vec<(i64, Cyclo)> = y.terms().map(|(_, e, c)| (e, c.clone())).collect();
        assert_eq!(terms[0], (-5, Cyclo::one(2)));
        assert_eq!(terms[1], (5, Cyclo::from_rat(2, num::BigRational::new((-1).into(), 2.into()))));
    }

    #[test]
    fn expansion_is_equivariant() {
        for c in [curve(2, &[-1, 0, 0, 0, 0, 1]), curve(3, &[-1, 0, 0, 0, 1]), curve(2, &[-1, 0, 0, 0, 0, 0, 1])] {
            let p = c.p;
            let fs = [
                FunctionRep::y(p),
                FunctionRep::x(p),
                FunctionRep::from_rats(p, &[&[1], &[0, 1]], &[&[1, 1]]).unwrap(),
            ];
            for f in &fs {
                let a = expand_function(&c, &f.sigma(), 12).unwrap();
                let b = expand_function(&c, f, 12).unwrap().sigma();
                assert!(a.sub(&b).is_zero_on_window());
            }
        }
    }

    #[test]
    fn quotient_valuation() {
        let c = curve(2, &[-1, 0, 0, 0, 0, 1]);
        let f = FunctionRep::from_rats(2, &[&[], &[1]], &[&[-1, 1]]).unwrap();
        let e = expand_function(&c, &f, 10).unwrap();
        assert_eq!(e.comp(0).valuation(), Some(-3));
        let one = expand_function(&c, &FunctionRep::constant(2), 5).unwrap();
        assert_eq!(one.terms().count(), 1);
    }

    #[test]
    fn genus_two_invariants() {
        let inv = curve_invariants(&curve(2, &[-1, 0, 0, 0, 0, 1])).unwrap();
        assert_eq!(inv.chi, -1);
        assert_eq!(inv.genus, 2);
        assert_eq!(inv.gaps.iter().map(|g| g.order).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(inv.prym_degree, 1);
    }
}

#[cfg(test)]
mod fixture_tests {
    use super::*;

    fn curve(p: u32, f: &[i64]) -> CurveSpec {
        CurveSpec::new(p, f.iter().map(|&c| Rat::from_integer(c.into())).collect()).unwrap()
    }

    #[test]
    fn fixture_indices_and_tangents() {
        let c = curve(2, &[-1, 0, 0, 0, 0, 1]);
        let u = algebra_point(&c, -30, 12).unwrap();
        assert_eq!(u.index_chi().unwrap(), -1);
        assert_eq!(u.tangent_orbit_dim(6).unwrap().dim, 2);
        assert!(u.invariance_check().unwrap().pass);
        assert!(u.algebra_point_check().unwrap().pass);

        let u3 = algebra_point(&curve(3, &[-1, 0, 0, 0, 1]), -36, 15).unwrap();
        assert_eq!(u3.index_chi().unwrap(), -2);
        assert_eq!(u3.tangent_orbit_dim(6).unwrap().dim, 3);

        let un = algebra_point(&curve(2, &[-1, 0, 0, 0, 0, 0, 1]), -15, 8).unwrap();
        assert_eq!(un.index_chi().unwrap(), -1);
        assert_eq!(un.connectedness_check().unwrap(), vec![false, false]);
        assert_eq!(un.tangent_orbit_dim(3).unwrap().dim, 2);

        let ideal = IdealSpec::new(vec![
            FunctionRep::constant(2),
            FunctionRep::from_rats(2, &[&[], &[1]], &[&[-1, 1]]).unwrap(),
        ])
        .unwrap();
        assert_eq!(module_point(&c, &ideal, -30, 12).unwrap().index_chi().unwrap(), 0);
    }
}
