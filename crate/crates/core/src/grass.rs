//! Points of the Sato Grassmannian as windowed echelon frames.
//!
//! A frame stores `U` on the position window `[lo, hi)`: one reduced row
//! per leading position (the lowest position of the row), with leading
//! coefficient 1 and no support at any other leading position. Every
//! position below `full_below` is a leading position of `U`; `complete`
//! certifies that no element of `U` has its leading position at `hi` or
//! above.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{nullspace, Echelon};
use crate::scalars::{Coeff, Cyclo};
use crate::series::Series;
use crate::vseries::{Case, Model, VSeries};

/// A basis position: `z1^e` (ramified) or `e_{comp+1} z^e` (non-ramified).
/// Ordered by exponent, then component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Position {
    pub e: i64,
    pub comp: usize,
}

impl Position {
    pub fn new(comp: usize, e: i64) -> Self {
        Position { e, comp }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.comp + 1, self.e)
    }
}

type Builder = Arc<dyn Fn(i64, i64) -> Result<GrassPoint> + Send + Sync>;

/// Rebuilds the same point on another window.
#[derive(Clone)]
pub struct Recipe {
    desc: String,
    build: Builder,
}

impl Recipe {
    pub fn new(desc: impl Into<String>, build: impl Fn(i64, i64) -> Result<GrassPoint> + Send + Sync + 'static) -> Self {
        Recipe { desc: desc.into(), build: Arc::new(build) }
    }

    pub fn desc(&self) -> &str {
        &self.desc
    }

    pub fn build(&self, lo: i64, hi: i64) -> Result<GrassPoint> {
        (self.build)(lo, hi)
    }
}

impl fmt::Debug for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Recipe({})", self.desc)
    }
}

/// How generators are closed up into a subspace.
#[derive(Clone, Copy, Debug)]
pub enum Closure<'a> {
    /// Linear span plus every position with exponent below `tail`.
    Span { tail: i64 },
    /// Module over the algebra generated by `algebra`; products with
    /// leading exponent down to `lo - slack` are formed to catch cancellations.
    Module { algebra: &'a [VSeries<Cyclo>], slack: i64 },
}

/// Pass/fail with an optional human-readable witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub witness: Option<String>,
}

impl Verdict {
    fn pass() -> Self {
        Verdict { pass: true, witness: None }
    }

    fn fail(w: String) -> Self {
        Verdict { pass: false, witness: Some(w) }
    }
}

/// Result of reducing an element against a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Residual<C> {
    /// First non-leading position where the residual is nonzero.
    pub first_nonzero: Option<(Position, C)>,
    /// The verdict covers exponents below this bound.
    pub checked_below: i64,
}

#[derive(Clone, Debug)]
pub struct GrassPoint {
    model: Model,
    lo: i64,
    hi: i64,
    rows: Vec<Vec<Cyclo>>,
    leads: Vec<usize>,
    full_below: i64,
    complete: bool,
    recipe: Option<Recipe>,
}

impl PartialEq for GrassPoint {
    fn eq(&self, o: &Self) -> bool {
        self.model == o.model && self.lo == o.lo && self.hi == o.hi && self.leads == o.leads && self.rows == o.rows
    }
}

fn dense<C: Coeff>(v: &VSeries<C>, lo: i64, hi: i64) -> Option<Vec<C>> {
    let nc = v.model().ncomp();
    let mut out = Vec::with_capacity(((hi - lo).max(0) as usize) * nc);
    for e in lo..hi {
        for i in 0..nc {
            out.push(v.coeff(i, e)?);
        }
    }
    Some(out)
}

/// Lowest position carrying a nonzero coefficient.
fn lead_position<C: Coeff>(v: &VSeries<C>) -> Option<Position> {
    v.terms().map(|(i, e, _)| Position::new(i, e)).min()
}

/// Stored end for exact series, certified end otherwise.
fn known_hi<C: Coeff>(v: &VSeries<C>, at_least: i64) -> i64 {
    v.comps().iter().map(|s| if s.is_exact() { s.hi().max(at_least) } else { s.certified_hi() }).min().unwrap()
}

impl GrassPoint {
    fn nc(&self) -> usize {
        self.model.ncomp()
    }

    fn index(&self, pos: Position) -> Option<usize> {
        (pos.e >= self.lo && pos.e < self.hi).then(|| ((pos.e - self.lo) as usize) * self.nc() + pos.comp)
    }

    fn position(&self, idx: usize) -> Position {
        Position::new(idx % self.nc(), self.lo + (idx / self.nc()) as i64)
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn full_below(&self) -> i64 {
        self.full_below
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn recipe(&self) -> Option<&Recipe> {
        self.recipe.as_ref()
    }

    pub fn with_recipe(mut self, r: Recipe) -> Self {
        self.recipe = Some(r);
        self
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Leading positions inside the window, ascending.
    pub fn leading_set(&self) -> Vec<Position> {
        self.leads.iter().map(|&i| self.position(i)).collect()
    }

    pub fn lead(&self, k: usize) -> Position {
        self.position(self.leads[k])
    }

    fn lead_set(&self) -> HashSet<usize> {
        self.leads.iter().copied().collect()
    }

    /// Row `k` as a series known on the window.
    pub fn row(&self, k: usize) -> VSeries<Cyclo> {
        let nc = self.nc();
        let zero = Cyclo::zero(self.model.p());
        let comps = (0..nc)
            .map(|i| {
                let coeffs = self.rows[k].iter().skip(i).step_by(nc).cloned().collect();
                Series::new(&zero, self.lo, coeffs, false).normalized()
            })
            .collect();
        VSeries::new(&self.model, comps).expect("component count matches model")
    }

    pub fn rows(&self) -> Vec<VSeries<Cyclo>> {
        (0..self.rows.len()).map(|k| self.row(k)).collect()
    }

    /// Rebuilds on a new window through the recipe.
    pub fn rebuild(&self, lo: i64, hi: i64) -> Result<GrassPoint> {
        self.recipe
            .as_ref()
            .ok_or_else(|| Error::Config("point has no recipe to rebuild from".into()))?
            .build(lo, hi)
    }

    fn from_vectors(
        model: &Model,
        vectors: Vec<Vec<Cyclo>>,
        lo_w: i64,
        h_ext: i64,
        lo: i64,
        hi: i64,
        full_below: i64,
    ) -> GrassPoint {
        let nc = model.ncomp();
        let p = model.p();
        let w_ext = ((h_ext - lo_w) as usize) * nc;
        let w_hi = ((hi - lo_w) as usize) * nc;
        let mut ext = Echelon::new(w_ext, p);
        let mut win = Echelon::new(w_hi, p);
        for v in vectors {
            debug_assert_eq!(v.len(), w_ext);
            win.insert(v[..w_hi].to_vec());
            ext.insert(v);
        }
        let complete = ext.rank() == win.rank();
        let skip = ((lo - lo_w) as usize) * nc;
        let (rows, pivots) = win.into_parts();
        let (rows, leads): (Vec<_>, Vec<_>) =
            rows.into_iter().zip(pivots).filter(|(_, q)| *q >= skip).map(|(r, q)| (r[skip..].to_vec(), q - skip)).unzip();
        GrassPoint { model: model.clone(), lo, hi, rows, leads, full_below, complete, recipe: None }
    }

    /// Largest `F >= lo` with every position of `[lo, F)` leading.
    fn solid_prefix(&self) -> i64 {
        let s = self.lead_set();
        let mut e = self.lo;
        while e < self.hi && (0..self.nc()).all(|i| s.contains(&self.index(Position::new(i, e)).unwrap())) {
            e += 1;
        }
        e
    }

    fn require_certified(&self) -> Result<()> {
        if !self.complete {
            return Err(Error::window("frame may miss leading positions at or above the window end", self.hi + 8));
        }
        if self.lo > self.full_below {
            return Err(Error::window("fullness below the window is not certified", self.hi));
        }
        Ok(())
    }

    /// Negative positions that are not leading positions.
    pub fn gaps(&self) -> Result<Vec<Position>> {
        self.require_certified()?;
        let s = self.lead_set();
        Ok((self.lo.max(self.full_below)..0)
            .flat_map(|e| (0..self.nc()).map(move |i| Position::new(i, e)))
            .filter(|&q| !s.contains(&self.index(q).unwrap()))
            .collect())
    }

    /// `dim(U ∩ V⁺) - dim(V / (U + V⁺))`.
    pub fn index_chi(&self) -> Result<i64> {
        let gaps = self.gaps()?.len() as i64;
        if self.hi <= 0 {
            return Err(Error::window("index needs the window to reach exponent 0", 1));
        }
        let kernel = self.leading_set().iter().filter(|q| q.e >= 0).count() as i64;
        Ok(kernel - gaps)
    }

    /// Reduces `v` against the rows.
    pub fn residual<C: Coeff>(&self, v: &VSeries<C>) -> Result<Residual<C>> {
        if let Some(l) = lead_position(v) {
            if l.e < self.lo {
                return Err(Error::window(format!("element reaches {l}, below the frame window"), self.hi));
            }
        }
        let h = self.hi.min(v.hi());
        if h <= self.lo {
            return Err(Error::window("element is not certified on the frame window", self.hi + (self.hi - h)));
        }
        let mut w = dense(v, self.lo, h).expect("coefficients below certified end are known");
        let n = w.len();
        for (row, &l) in self.rows.iter().zip(&self.leads) {
            if l >= n || w[l].is_zero() {
                continue;
            }
            let c = w[l].clone();
            for (x, r) in w.iter_mut().zip(row).skip(l) {
                if !r.is_zero() {
                    *x = x.minus(&c.scaled(r));
                }
            }
        }
        let first = w.iter().enumerate().find(|(_, x)| !x.is_zero()).map(|(i, x)| (self.position(i), x.clone()));
        Ok(Residual { first_nonzero: first, checked_below: h })
    }

    /// Membership at window resolution.
    pub fn contains<C: Coeff>(&self, v: &VSeries<C>) -> Result<bool> {
        Ok(self.residual(v)?.first_nonzero.is_none())
    }

    /// Projection onto `U` along the span of non-leading positions: returns
    /// the coefficients on the rows and the projection itself.
    pub fn project<C: Coeff>(&self, v: &VSeries<C>) -> Result<(Vec<C>, VSeries<C>)> {
        if let Some(l) = lead_position(v) {
            if l.e < self.lo {
                return Err(Error::window(format!("element reaches {l}, below the frame window"), self.hi));
            }
        }
        let h = self.hi.min(v.hi());
        let w = dense(v, self.lo, h).expect("coefficients below certified end are known");
        let zero = v.zero_coeff().clone();
        let coeffs: Vec<C> = self.leads.iter().map(|&l| if l < w.len() { w[l].clone() } else { zero.clone() }).collect();
        let n = w.len();
        let mut acc = vec![zero.clone(); n];
        for (row, c) in self.rows.iter().zip(&coeffs) {
            if c.is_zero() {
                continue;
            }
            for (x, r) in acc.iter_mut().zip(row) {
                if !r.is_zero() {
                    *x = x.plus(&c.scaled(r));
                }
            }
        }
        let nc = self.nc();
        let comps = (0..nc)
            .map(|i| Series::new(&zero, self.lo, acc.iter().skip(i).step_by(nc).cloned().collect(), false))
            .collect();
        Ok((coeffs, VSeries::new(&self.model, comps)?))
    }

    fn pair_shift(&self) -> i64 {
        match self.model.case() {
            Case::Ramified => self.model.p() as i64,
            Case::NonRamified => 1,
        }
    }

    /// The annihilator of `U` under the residue pairing.
    pub fn orthogonal(&self) -> Result<GrassPoint> {
        self.require_certified()?;
        let s = self.pair_shift();
        let refl = |e: i64| -s - e;
        let (lo2, hi2) = (refl(self.hi - 1), refl(self.lo) + 1);
        let nc = self.nc();
        let p = self.model.p();
        let width = ((hi2 - lo2) as usize) * nc;
        let weight = Cyclo::from_int(p, s);
        let constraints: Vec<Vec<Cyclo>> = self
            .rows
            .iter()
            .map(|row| {
                let mut c = vec![Cyclo::zero(p); width];
                for b in lo2..hi2 {
                    for i in 0..nc {
                        let src = self.index(Position::new(i, refl(b))).unwrap();
                        if !row[src].is_zero() {
                            c[((b - lo2) as usize) * nc + i] = row[src].mul(&weight);
                        }
                    }
                }
                c
            })
            .collect();
        let basis = nullspace(&constraints, width, p);
        let mut out = Self::from_vectors(&self.model, basis, lo2, hi2, lo2, hi2, lo2);
        out.complete = true;
        out.full_below = out.solid_prefix();
        if let Some(r) = &self.recipe {
            let r = r.clone();
            out.recipe = Some(Recipe::new(format!("orthogonal of {}", r.desc()), move |lo, hi| {
                r.build(-s - hi + 1, -s - lo + 1)?.orthogonal()
            }));
        }
        Ok(out)
    }

    /// `g·U` for a scalar unit `g`.
    pub fn group_act(&self, g: &VSeries<Cyclo>) -> Result<GrassPoint> {
        self.require_certified()?;
        let vals: Vec<i64> = g
            .comps()
            .iter()
            .map(|c| c.valuation().ok_or_else(|| Error::NotUnit("group element has a zero component".into())))
            .collect::<Result<_>>()?;
        let (vmin, vmax) = (*vals.iter().min().unwrap(), *vals.iter().max().unwrap());
        let lo2 = self.lo + vmax;
        let full2 = self.full_below + vmin;
        if lo2 > full2 {
            return Err(Error::window("window too narrow for this group element", self.hi));
        }
        let products: Vec<VSeries<Cyclo>> = self.rows().iter().map(|r| g.mul(r)).collect();
        let h = products.iter().map(|v| v.hi()).min().unwrap_or(self.hi + vmin);
        if h <= lo2 {
            return Err(Error::window("translated frame has an empty window", self.hi + (lo2 - h) + 1));
        }
        let vectors: Vec<Vec<Cyclo>> =
            products.iter().filter_map(|v| dense(&v.truncate(h), lo2, h)).collect::<Vec<_>>();
        let mut out = Self::from_vectors(&self.model, vectors, lo2, h, lo2, h, full2);
        let lost = self.leading_set().iter().any(|q| q.e + vals[q.comp] >= h);
        out.complete = self.complete && !lost;
        Ok(out)
    }

    /// The frame of `σ(U)` on the same window.
    pub fn sigma_image(&self) -> GrassPoint {
        let vectors: Vec<Vec<Cyclo>> =
            self.rows().iter().map(|r| dense(&r.sigma(), self.lo, self.hi).expect("row known on window")).collect();
        let mut out = Self::from_vectors(&self.model, vectors, self.lo, self.hi, self.lo, self.hi, self.full_below);
        out.complete = self.complete;
        if let Some(r) = &self.recipe {
            let r = r.clone();
            out.recipe = Some(Recipe::new(format!("sigma of {}", r.desc()), move |lo, hi| Ok(r.build(lo, hi)?.sigma_image())));
        }
        out
    }

    /// Frame with row `k` removed; the leading position becomes a gap.
    pub fn without_row(&self, k: usize) -> GrassPoint {
        let mut out = self.clone();
        out.rows.remove(k);
        out.leads.remove(k);
        out.full_below = out.full_below.min(self.lead(k).e);
        out.recipe = None;
        out
    }

    /// Frame spanned by the given rows and every position below `full_below`,
    /// on this point's window. Rows are re-echelonized.
    pub fn from_rows(model: &Model, rows: &[VSeries<Cyclo>], full_below: i64, lo: i64, hi: i64) -> Result<GrassPoint> {
        if lo >= hi {
            return Err(Error::EmptyWindow { lo, hi });
        }
        let nc = model.ncomp();
        let p = model.p();
        let width = ((hi - lo) as usize) * nc;
        let mut vectors: Vec<Vec<Cyclo>> = (0..((full_below - lo).max(0) as usize) * nc)
            .map(|i| {
                let mut v = vec![Cyclo::zero(p); width];
                v[i] = Cyclo::one(p);
                v
            })
            .collect();
        for r in rows {
            if lead_position(r).map_or(false, |q| q.e < lo) {
                return Err(Error::window("row reaches below the window", hi));
            }
            vectors.push(dense(r, lo, hi).ok_or_else(|| Error::window("row not known on the window", hi))?);
        }
        let mut out = Self::from_vectors(model, vectors, lo, hi, lo, hi, full_below.max(lo));
        out.complete = true;
        Ok(out)
    }

    /// `σ(U) = U` at window resolution.
    pub fn invariance_check(&self) -> Result<Verdict> {
        for k in 0..self.rows.len() {
            let image = self.row(k).sigma();
            if let Some((q, c)) = self.residual(&image)?.first_nonzero {
                return Ok(Verdict::fail(format!("sigma of row led by {} leaves U: residual {c} at {q}", self.lead(k))));
            }
        }
        Ok(Verdict::pass())
    }

    /// The residues of all certifiable `p`-fold wedges of rows vanish. Every
    /// wedge of rows led at or above [`Self::core_floor`] must be certified.
    pub fn isotropy_check(&self) -> Result<IsotropyVerdict<Cyclo>> {
        self.require_certified()?;
        let rows: Vec<(Position, VSeries<Cyclo>)> = (0..self.rows.len()).map(|k| (self.lead(k), self.row(k))).collect();
        isotropy_of_rows(&self.model, &rows, self.core_floor())
    }

    /// One `p`-block of the parameter below the fullness bound.
    pub fn core_floor(&self) -> i64 {
        self.full_below - self.model.p() as i64 * self.model.z_step()
    }

    /// Isotropy of `g·U` evaluated on the translated rows.
    pub fn isotropy_check_translated<C: Coeff>(&self, g: &VSeries<C>) -> Result<IsotropyVerdict<C>> {
        self.require_certified()?;
        let zero = g.zero_coeff().clone();
        let rows: Vec<(Position, VSeries<C>)> =
            (0..self.rows.len()).map(|k| (self.lead(k), g.mul(&self.row(k).lift(&zero)))).collect();
        isotropy_of_rows(&self.model, &rows, self.core_floor())
    }

    /// The classical two-form check for `p = 2` (ramified):
    /// `res f(z1) g(-z1) dz1 / z1^2` vanishes for all row pairs.
    pub fn pairwise_bkp_check(&self) -> Result<IsotropyVerdict<Cyclo>> {
        if self.model.p() != 2 || self.model.case() != Case::Ramified {
            return Err(Error::Incompatible("pairwise form needs p = 2, ramified".into()));
        }
        self.require_certified()?;
        let rows = self.rows();
        let (mut certified, mut uncertified, mut core_open) = (0, 0, 0);
        let floor = self.core_floor();
        let minus = |v: &VSeries<Cyclo>| v.map_coeffs(|_, e, c| if e % 2 == 0 { c.clone() } else { c.neg() });
        for a in 0..rows.len() {
            for b in a..rows.len() {
                let (la, lb) = (self.lead(a).e, self.lead(b).e);
                if la + lb > 1 {
                    continue;
                }
                match rows[a].mul(&minus(&rows[b])).coeff(0, 1) {
                    None => {
                        uncertified += 1;
                        if la.min(lb) >= floor {
                            core_open += 1;
                        }
                    }
                    Some(c) => {
                        certified += 1;
                        if !c.is_zero() {
                            return Ok(IsotropyVerdict {
                                isotropic: false,
                                witness: Some((vec![self.lead(a), self.lead(b)], c)),
                                certified,
                                uncertified,
                            });
                        }
                    }
                }
            }
        }
        if certified == 0 || core_open > 0 {
            return Err(Error::window("pairs above the core floor are not certifiable", self.hi + 8));
        }
        Ok(IsotropyVerdict { isotropic: true, witness: None, certified, uncertified })
    }

    /// `1 ∈ U` and `U·U ⊆ U` at window resolution.
    pub fn algebra_point_check(&self) -> Result<Verdict> {
        self.require_certified()?;
        let one = VSeries::constant(&self.model, Cyclo::one(self.model.p()));
        if !self.contains(&one)? {
            return Ok(Verdict::fail("1 is not in U".into()));
        }
        let rows = self.rows();
        for a in 0..rows.len() {
            for b in a..rows.len() {
                let (la, lb) = (self.lead(a), self.lead(b));
                if la.e + lb.e < self.lo {
                    continue;
                }
                let prod = rows[a].mul(&rows[b]);
                if prod.hi() <= self.lo {
                    continue;
                }
                if let Some((q, c)) = self.residual(&prod)?.first_nonzero {
                    return Ok(Verdict::fail(format!("product of rows led by {la} and {lb} leaves U: residual {c} at {q}")));
                }
            }
        }
        Ok(Verdict::pass())
    }

    /// For each component `i`, whether the idempotent `e_i` lies in `U`.
    pub fn connectedness_check(&self) -> Result<Vec<bool>> {
        if self.model.case() != Case::NonRamified {
            return Err(Error::Incompatible("connectedness check needs the non-ramified model".into()));
        }
        (0..self.nc())
            .map(|i| self.contains(&VSeries::monomial(&self.model, i, 0, Cyclo::one(self.model.p()))))
            .collect()
    }

    /// Dimension of the tangent space to the orbit of the constant-norm
    /// group, with principal parts down to depth `m`, plus whether the value
    /// agrees with depth `m - 1`.
    pub fn tangent_orbit_dim(&self, m: i64) -> Result<TangentDim> {
        if m < 1 {
            return Err(Error::Config("principal-part depth must be positive".into()));
        }
        let here = self.tangent_dim_at(m)?;
        let prev = if m > 1 { Some(self.tangent_dim_at(m - 1)?) } else { None };
        Ok(TangentDim { depth: m, dim: here, stable: prev == Some(here) })
    }

    fn tangent_dim_at(&self, m: i64) -> Result<i64> {
        self.require_certified()?;
        let nc = self.nc();
        let p = self.model.p();
        let pi = p as i64;
        let top = self.hi - m;
        let usable: Vec<usize> = (0..self.rows.len()).filter(|&k| self.lead(k).e >= self.lo + m).collect();
        if top <= self.lo + m || usable.is_empty() {
            return Err(Error::window("window too small for this principal-part depth", self.hi + 2 * m));
        }
        let h_plus = (top - self.lo - m).max(1);
        // Unknowns: positions (i, e) with e in [-m, h_plus).
        let unknowns: Vec<Position> = (-m..h_plus).flat_map(|e| (0..nc).map(move |i| Position::new(i, e))).collect();
        let nu = unknowns.len();
        let col = |q: Position| ((q.e + m) as usize) * nc + q.comp;
        let mut constraints: Vec<Vec<Cyclo>> = Vec::new();
        // Trace of g is constant.
        for e in -m..h_plus {
            if e == 0 {
                continue;
            }
            let mut c = vec![Cyclo::zero(p); nu];
            match self.model.case() {
                Case::Ramified if e.rem_euclid(pi) == 0 => c[col(Position::new(0, e))] = Cyclo::one(p),
                Case::Ramified => continue,
                Case::NonRamified => (0..nc).for_each(|i| c[col(Position::new(i, e))] = Cyclo::one(p)),
            }
            constraints.push(c);
        }
        let leads = self.lead_set();
        let nonlead: Vec<usize> =
            (0..((top - self.lo) as usize) * nc).filter(|i| !leads.contains(i)).collect();
        let lead_rows: Vec<(usize, usize)> = self.leads.iter().enumerate().map(|(k, &l)| (l, k)).collect();
        // σ^k(g)·u stays in U: residual at non-leading positions vanishes.
        let blocks: Vec<Vec<Vec<Cyclo>>> = (0..p as usize)
            .flat_map(|k| usable.iter().map(move |&r| (k, r)))
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&(k, r)| {
                let row = &self.rows[r];
                let mut block = vec![vec![Cyclo::zero(p); nu]; nonlead.len()];
                for (j, q) in unknowns.iter().enumerate() {
                    // σ^k of the basis vector at q, times the row.
                    let (target, scale) = match self.model.case() {
                        Case::Ramified => (0, self.model.xi_pow(k as i64 * q.e)),
                        Case::NonRamified => ((q.comp + k) % nc, Cyclo::one(p)),
                    };
                    // Product coefficient at window index idx (component `target` only).
                    let prod_at = |idx: usize| -> Cyclo {
                        let pos = self.position(idx);
                        if pos.comp != target {
                            return Cyclo::zero(p);
                        }
                        match self.index(Position::new(target, pos.e - q.e)) {
                            Some(src) => row[src].mul(&scale),
                            None => Cyclo::zero(p),
                        }
                    };
                    let lead_vals: Vec<(usize, Cyclo)> =
                        lead_rows.iter().map(|&(l, kk)| (kk, prod_at(l))).filter(|(_, c)| !c.is_zero()).collect();
                    for (t, &idx) in nonlead.iter().enumerate() {
                        let mut v = prod_at(idx);
                        for (kk, c) in &lead_vals {
                            let u = &self.rows[*kk][idx];
                            if !u.is_zero() {
                                v = v.sub(&c.mul(u));
                            }
                        }
                        block[t][j] = v;
                    }
                }
                block
            })
            .collect();
        constraints.extend(blocks.into_iter().flatten());
        let kernel = nullspace(&constraints, nu, p);
        let principal: Vec<usize> = unknowns.iter().enumerate().filter(|(_, q)| q.e < 0).map(|(j, _)| j).collect();
        let mut proj = Echelon::new(principal.len(), p);
        for v in kernel {
            proj.insert(principal.iter().map(|&j| v[j].clone()).collect());
        }
        let principal_dim = match self.model.case() {
            Case::Ramified => (-m..0).filter(|e| e.rem_euclid(pi) != 0).count() as i64,
            Case::NonRamified => (nc as i64 - 1) * m,
        };
        Ok(principal_dim - proj.rank() as i64)
    }

    /// Rows as text with the leading set, fullness bound and index.
    pub fn dump(&self) -> FrameDump {
        FrameDump {
            window: (self.lo, self.hi),
            leading_set: self.leading_set().iter().map(|q| q.to_string()).collect(),
            full_below: self.full_below,
            chi: self.index_chi().ok(),
            rows: self.rows().iter().map(|r| r.to_text()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrameDump {
    pub window: (i64, i64),
    pub leading_set: Vec<String>,
    pub full_below: i64,
    pub chi: Option<i64>,
    pub rows: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TangentDim {
    pub depth: i64,
    pub dim: i64,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsotropyVerdict<C> {
    pub isotropic: bool,
    /// Leading positions of an offending tuple and its residue.
    pub witness: Option<(Vec<Position>, C)>,
    pub certified: usize,
    pub uncertified: usize,
}

/// Evaluates wedge residues over `p`-subsets of `rows` whose residue can be
/// nonzero and is certified by the available coefficients. Without a witness,
/// an uncertified subset whose leads all lie at or above `floor` makes the
/// window insufficient.
pub fn isotropy_of_rows<C: Coeff>(
    model: &Model,
    rows: &[(Position, VSeries<C>)],
    floor: i64,
) -> Result<IsotropyVerdict<C>> {
    let p = model.p() as usize;
    // Per row: lowest valuation over the coordinates and certified end.
    let info: Vec<(i64, i64)> = rows
        .iter()
        .map(|(_, v)| {
            let coords = v.base_coords();
            let val = coords.iter().filter_map(|s| s.valuation()).min().unwrap_or(i64::MAX / 4);
            let hi = coords.iter().map(|s| s.certified_hi()).min().unwrap();
            (val, hi)
        })
        .collect();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by_key(|&i| (info[i].0, i));
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    let mut skipped: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    fn walk(
        start: usize,
        sum: i64,
        order: &[usize],
        info: &[(i64, i64)],
        p: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        unc: &mut Vec<Vec<usize>>,
    ) {
        if stack.len() == p {
            let ok = stack.iter().all(|&i| -1 - (sum - info[i].0) < info[i].1);
            if ok {
                out.push(stack.clone());
            } else {
                unc.push(stack.clone());
            }
            return;
        }
        let left = p - stack.len();
        for pos in start..order.len() {
            if order.len() - pos < left {
                break;
            }
            let i = order[pos];
            // Remaining entries have valuation at least info[i].0.
            if sum + info[i].0 * left as i64 > -1 {
                break;
            }
            stack.push(i);
            walk(pos + 1, sum + info[i].0, order, info, p, stack, out, unc);
            stack.pop();
        }
    }
    walk(0, 0, &order, &info, p, &mut stack, &mut candidates, &mut skipped);
    let results: Vec<(usize, Result<C>)> = candidates
        .par_iter()
        .enumerate()
        .map(|(n, t)| {
            let args: Vec<VSeries<C>> = t.iter().map(|&i| rows[i].1.clone()).collect();
            (n, VSeries::wedge_residue(&args))
        })
        .collect();
    let in_core = |t: &[usize]| t.iter().all(|&i| rows[i].0.e >= floor);
    let mut uncertified = skipped.len();
    let mut core_open = skipped.iter().filter(|t| in_core(t)).count();
    let mut certified = 0usize;
    let mut witness = None;
    for (n, r) in results {
        match r {
            Ok(c) => {
                certified += 1;
                if !c.is_zero() && witness.is_none() {
                    let mut lead: Vec<Position> = candidates[n].iter().map(|&i| rows[i].0).collect();
                    lead.sort();
                    witness = Some((lead, c));
                }
            }
            Err(Error::WindowInsufficient { .. }) => {
                uncertified += 1;
                if in_core(&candidates[n]) {
                    core_open += 1;
                }
            }
            Err(e) => return Err(e),
        }
    }
    if witness.is_none() && (core_open > 0 || (certified == 0 && uncertified > 0)) {
        let hi = rows.iter().map(|r| r.1.hi()).min().unwrap_or(0);
        let msg = format!("{core_open} wedge residues above the core floor are not certifiable on this window");
        return Err(Error::window(msg, hi.saturating_add(4 * model.z_step().max(2))));
    }
    Ok(IsotropyVerdict { isotropic: witness.is_none(), witness, certified, uncertified })
}

/// Builds a frame from generators.
pub fn frame_build(model: &Model, gens: &[VSeries<Cyclo>], closure: Closure<'_>, lo: i64, hi: i64) -> Result<GrassPoint> {
    if lo >= hi {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let nc = model.ncomp();
    let p = model.p();
    match closure {
        Closure::Span { tail } => {
            let lo = lo.min(tail);
            let lo_w = gens.iter().filter_map(lead_position).map(|q| q.e).min().unwrap_or(lo).min(lo);
            let h_ext = gens.iter().map(|g| known_hi(g, hi)).min().unwrap_or(hi);
            if h_ext < hi {
                return Err(Error::window("generators are not known on the whole window", hi + (hi - h_ext)));
            }
            let width = ((h_ext - lo_w) as usize) * nc;
            let mut vectors: Vec<Vec<Cyclo>> = (lo_w..tail.min(h_ext))
                .flat_map(|e| (0..nc).map(move |i| (e, i)))
                .map(|(e, i)| {
                    let mut v = vec![Cyclo::zero(p); width];
                    v[((e - lo_w) as usize) * nc + i] = Cyclo::one(p);
                    v
                })
                .collect();
            vectors.extend(gens.iter().map(|g| dense(g, lo_w, h_ext).expect("generator known on window")));
            Ok(GrassPoint::from_vectors(model, vectors, lo_w, h_ext, lo, hi, tail))
        }
        Closure::Module { algebra, slack } => {
            let lo_w = lo - slack.max(0);
            let mut seen: BTreeSet<(usize, Vec<u32>)> = BTreeSet::new();
            let mut queue: Vec<(usize, Vec<u32>, VSeries<Cyclo>)> = Vec::new();
            for (gi, g) in gens.iter().enumerate() {
                if lead_position(g).map_or(false, |q| q.e >= lo_w) {
                    seen.insert((gi, vec![0; algebra.len()]));
                    queue.push((gi, vec![0; algebra.len()], g.clone()));
                }
            }
            let mut products: Vec<VSeries<Cyclo>> = Vec::new();
            while let Some((gi, ex, v)) = queue.pop() {
                for (a, alg) in algebra.iter().enumerate() {
                    let mut ex2 = ex.clone();
                    ex2[a] += 1;
                    if seen.contains(&(gi, ex2.clone())) {
                        continue;
                    }
                    let child = alg.mul(&v);
                    if child.hi() <= lo_w || lead_position(&child).map_or(true, |q| q.e < lo_w) {
                        continue;
                    }
                    seen.insert((gi, ex2.clone()));
                    queue.push((gi, ex2, child));
                }
                products.push(v);
                if products.len() > 50_000 {
                    return Err(Error::NoStabilization("module closure did not stabilize".into()));
                }
            }
            let h_ext = products.iter().map(|g| known_hi(g, hi)).min().unwrap_or(hi);
            if h_ext < hi {
                return Err(Error::window("module products are not known on the whole window", hi + (hi - h_ext)));
            }
            let vectors: Vec<Vec<Cyclo>> =
                products.iter().map(|g| dense(g, lo_w, h_ext).expect("product known on window")).collect();
            let mut out = GrassPoint::from_vectors(model, vectors, lo_w, h_ext, lo, hi, lo);
            // Closure under an element with a pole of the same order on every
            // component: a solid block of that length propagates downwards.
            let step = algebra
                .iter()
                .filter_map(|a| {
                    let vals: Vec<Option<i64>> = a.comps().iter().map(|s| s.valuation()).collect();
                    let v0 = vals[0]?;
                    (v0 < 0 && vals.iter().all(|v| *v == Some(v0))).then_some(-v0)
                })
                .min()
                .ok_or_else(|| Error::Config("module closure needs an algebra element with a pole".into()))?;
            let f = out.solid_prefix();
            if f - out.lo < step {
                return Err(Error::window("leading set is not solid over a full block; lower the window start", hi));
            }
            out.full_below = f;
            Ok(out)
        }
    }
}

/// `⟨z^{-n-1} e_1, e_2, ..., e_p⟩ ⊕ z^N V⁻`, where `e_k = z1^{k-1}` when
/// ramified.
pub fn u_n(model: &Model, n: i64, big_n: i64, lo: i64, hi: i64) -> Result<GrassPoint> {
    let p = model.p();
    let one = Cyclo::one(p);
    let step = model.z_step();
    let mut gens = vec![VSeries::monomial(model, 0, -(n + 1) * step, one.clone())];
    for k in 1..p as usize {
        gens.push(match model.case() {
            Case::Ramified => VSeries::monomial(model, 0, k as i64, one.clone()),
            Case::NonRamified => VSeries::monomial(model, k, 0, one.clone()),
        });
    }
    let m2 = model.clone();
    let point = frame_build(model, &gens, Closure::Span { tail: big_n * step }, lo, hi)?;
    Ok(point.with_recipe(Recipe::new(format!("U_n n={n} N={big_n}"), move |lo, hi| u_n(&m2, n, big_n, lo, hi))))
}

/// One step of the downward search for the tail exponent `N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchStep {
    pub big_n: i64,
    pub isotropic: bool,
    pub chi: i64,
}

/// Scans `N = start, start-1, ..., stop` and returns the scan together with
/// the first `N` giving an isotropic `U_n`.
pub fn search_tail(model: &Model, n: i64, start: i64, stop: i64, lo: i64, hi: i64) -> Result<(Vec<SearchStep>, Option<i64>)> {
    let mut steps = Vec::new();
    let mut found = None;
    for big_n in (stop..=start).rev() {
        let mut u = u_n(model, n, big_n, lo, hi)?;
        let mut tries = 0;
        let v = loop {
            match u.isotropy_check() {
                Err(Error::WindowInsufficient { suggest_hi, .. }) if tries < 6 => {
                    tries += 1;
                    let (lo, hi) = u.window();
                    u = u_n(model, n, big_n, lo, suggest_hi.max(hi + 2))?;
                }
                r => break r?,
            }
        };
        steps.push(SearchStep { big_n, isotropic: v.isotropic, chi: u.index_chi()? });
        if v.isotropic && found.is_none() {
            found = Some(big_n);
        }
    }
    Ok((steps, found))
}
