//! Truncated polynomial rings in flow variables.
//!
//! Every variable is nilpotent: monomials of total degree above the cap are
//! dropped (in a blocked ring, monomials of degree above the cap in some block), so exponentials of elements without constant term are finite sums.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalars::{rat, Coeff, Cyclo};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetRing {
    names: Vec<String>,
    cap: u32,
    p: u32,
    /// Block of each variable when the cap applies per block; empty otherwise.
    block_of: Vec<usize>,
}

impl JetRing {
    pub fn new(names: Vec<String>, cap: u32, p: u32) -> Result<Arc<Self>> {
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::Config(format!("duplicate jet variable `{n}`")));
            }
        }
        Ok(Arc::new(JetRing { names, cap, p, block_of: Vec::new() }))
    }

    /// The ring with no variables: plain scalars.
    pub fn scalars(p: u32) -> Arc<Self> {
        Arc::new(JetRing { names: Vec::new(), cap: 0, p, block_of: Vec::new() })
    }

    /// Disjoint variable blocks `prefix1..prefixN` sharing one total-degree cap.
    pub fn blocks(prefixes: &[&str], per_block: usize, cap: u32, p: u32) -> Arc<Self> {
        let names = prefixes
            .iter()
            .flat_map(|pre| (1..=per_block).map(move |j| format!("{pre}{j}")))
            .collect();
        Self::new(names, cap, p).expect("block names are distinct")
    }

    /// Variables split into blocks, truncated at degree `cap` in each block
    /// separately.
    pub fn blocked(names: Vec<String>, block_of: Vec<usize>, cap: u32, p: u32) -> Result<Arc<Self>> {
        if names.len() != block_of.len() {
            return Err(Error::Config("every jet variable needs a block".into()));
        }
        let mut r = Arc::try_unwrap(Self::new(names, cap, p)?).expect("fresh ring");
        r.block_of = block_of;
        Ok(Arc::new(r))
    }

    pub fn nvars(&self) -> usize {
        self.names.len()
    }

    /// Degree cap, per block in a blocked ring.
    pub fn cap(&self) -> u32 {
        self.cap
    }

    /// Largest total degree of a surviving monomial.
    pub fn total_cap(&self) -> u32 {
        match self.block_of.iter().max() {
            Some(&b) => self.cap * (b as u32 + 1),
            None => self.cap,
        }
    }

    fn admits(&self, m: &Mono) -> bool {
        if m.deg > self.total_cap() {
            return false;
        }
        if self.block_of.is_empty() || m.deg <= self.cap {
            return true;
        }
        let mut per = vec![0u32; self.block_of.iter().max().map_or(0, |b| b + 1)];
        for (i, &e) in m.exps.iter().enumerate() {
            per[self.block_of[i]] += e;
        }
        per.iter().all(|&d| d <= self.cap)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Same variables, different cap.
    pub fn with_cap(&self, cap: u32) -> Arc<Self> {
        Arc::new(JetRing { names: self.names.clone(), cap, p: self.p, block_of: self.block_of.clone() })
    }
}

/// Exponent multi-index, ordered by total degree first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mono {
    deg: u32,
    exps: Vec<u32>,
}

impl Mono {
    pub fn one(nvars: usize) -> Self {
        Mono { deg: 0, exps: vec![0; nvars] }
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut exps = vec![0; nvars];
        exps[i] = 1;
        Mono { deg: 1, exps }
    }

    pub fn from_exps(exps: Vec<u32>) -> Self {
        Mono { deg: exps.iter().sum(), exps }
    }

    pub fn degree(&self) -> u32 {
        self.deg
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    fn mul(&self, o: &Mono) -> Mono {
        Mono { deg: self.deg + o.deg, exps: self.exps.iter().zip(&o.exps).map(|(a, b)| a + b).collect() }
    }
}

#[derive(Clone)]
pub struct JetPoly {
    ring: Arc<JetRing>,
    terms: BTreeMap<Mono, Cyclo>,
}

impl PartialEq for JetPoly {
    fn eq(&self, o: &Self) -> bool {
        (Arc::ptr_eq(&self.ring, &o.ring) || self.ring.names == o.ring.names) && self.terms == o.terms
    }
}

impl JetPoly {
    pub fn zero(ring: &Arc<JetRing>) -> Self {
        JetPoly { ring: ring.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(ring: &Arc<JetRing>, c: Cyclo) -> Self {
        let mut z = Self::zero(ring);
        z.add_term(Mono::one(ring.nvars()), c);
        z
    }

    pub fn one(ring: &Arc<JetRing>) -> Self {
        Self::constant(ring, Cyclo::one(ring.p))
    }

    /// The variable with index `i`; zero when the cap is 0.
    pub fn var(ring: &Arc<JetRing>, i: usize) -> Self {
        let mut z = Self::zero(ring);
        z.add_term(Mono::var(ring.nvars(), i), Cyclo::one(ring.p));
        z
    }

    pub fn var_named(ring: &Arc<JetRing>, name: &str) -> Result<Self> {
        let i = ring.index_of(name).ok_or_else(|| Error::Config(format!("unknown jet variable `{name}`")))?;
        Ok(Self::var(ring, i))
    }

    pub fn from_terms(ring: &Arc<JetRing>, terms: impl IntoIterator<Item = (Mono, Cyclo)>) -> Self {
        let mut z = Self::zero(ring);
        for (m, c) in terms {
            z.add_term(m, c);
        }
        z
    }

    pub fn ring(&self) -> &Arc<JetRing> {
        &self.ring
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Cyclo)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, m: Mono, c: Cyclo) {
        if c.is_zero() || !self.ring.admits(&m) {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().add(&c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn coeff(&self, m: &Mono) -> Cyclo {
        self.terms.get(m).cloned().unwrap_or_else(|| Cyclo::zero(self.ring.p))
    }

    pub fn constant_term(&self) -> Cyclo {
        self.coeff(&Mono::one(self.ring.nvars()))
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.deg == 0)
    }

    fn check_ring(&self, o: &Self) {
        debug_assert!(
            Arc::ptr_eq(&self.ring, &o.ring) || *self.ring == *o.ring,
            "jet polynomials from different rings"
        );
    }

    pub fn add(&self, o: &Self) -> Self {
        self.check_ring(o);
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        JetPoly { ring: self.ring.clone(), terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect() }
    }

    pub fn scale(&self, s: &Cyclo) -> Self {
        if s.is_zero() {
            return Self::zero(&self.ring);
        }
        JetPoly { ring: self.ring.clone(), terms: self.terms.iter().map(|(m, c)| (m.clone(), c.mul(s))).collect() }
    }

    /// Product truncated at the ring's cap.
    pub fn mul(&self, o: &Self) -> Self {
        self.check_ring(o);
        let cap = self.ring.total_cap();
        let mut r = Self::zero(&self.ring);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                if ma.deg + mb.deg > cap {
                    break;
                }
                r.add_term(ma.mul(mb), ca.mul(cb));
            }
        }
        r
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(&self.ring);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Inverse modulo terms of degree above the cap.
    pub fn invert(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(Error::NotUnit(self.to_string()));
        }
        let c0inv = c0.inv()?;
        // a = c0 (1 + n) with n nilpotent; 1/(1+n) = sum (-n)^k.
        let n = self.scale(&c0inv).sub(&Self::one(&self.ring));
        let mneg = n.neg();
        let mut term = Self::one(&self.ring);
        let mut acc = Self::one(&self.ring);
        for _ in 0..self.ring.total_cap() {
            term = term.mul(&mneg);
            acc = acc.add(&term);
        }
        Ok(acc.scale(&c0inv))
    }

    /// `sum_{k <= cap} a^k / k!` for nilpotent `a`.
    pub fn exp(&self) -> Result<Self> {
        if !self.constant_term().is_zero() {
            return Err(Error::NotNilpotent);
        }
        let p = self.ring.p;
        let mut term = Self::one(&self.ring);
        let mut acc = Self::one(&self.ring);
        for k in 1..=self.ring.total_cap() as i64 {
            term = term.mul(self).scale(&Cyclo::from_rat(p, rat(1, k)));
            if term.terms.is_empty() {
                break;
            }
            acc = acc.add(&term);
        }
        Ok(acc)
    }

    /// Substitutes variable `i` by `images[i]` (all in one target ring).
    pub fn substitute(&self, images: &[JetPoly]) -> Self {
        assert_eq!(images.len(), self.ring.nvars());
        let target = images.first().map(|j| j.ring.clone()).unwrap_or_else(|| self.ring.clone());
        let mut r = Self::zero(&target);
        for (m, c) in &self.terms {
            let mut t = Self::constant(&target, c.clone());
            for (i, &e) in m.exps.iter().enumerate() {
                if e > 0 {
                    t = t.mul(&images[i].pow(e));
                }
            }
            r = r.add(&t);
        }
        r
    }

    /// Multiplies variable `i` by `scales[i]`.
    pub fn scale_vars(&self, scales: &[Cyclo]) -> Self {
        let terms = self.terms.iter().map(|(m, c)| {
            let mut f = c.clone();
            for (i, &e) in m.exps.iter().enumerate() {
                if e > 0 {
                    f = f.mul(&scales[i].pow(e as u64));
                }
            }
            (m.clone(), f)
        });
        Self::from_terms(&self.ring, terms.collect::<Vec<_>>())
    }

    /// Re-reads the polynomial in a ring with the same variables and a
    /// smaller (or equal) cap.
    pub fn truncate(&self, ring: &Arc<JetRing>) -> Self {
        assert_eq!(ring.names, self.ring.names);
        Self::from_terms(ring, self.terms.iter().map(|(m, c)| (m.clone(), c.clone())).collect::<Vec<_>>())
    }

    /// Moves the polynomial into a ring containing its variables (by name).
    pub fn embed(&self, ring: &Arc<JetRing>) -> Result<Self> {
        let idx: Vec<usize> = self
            .ring
            .names
            .iter()
            .map(|n| ring.index_of(n).ok_or_else(|| Error::Incompatible(format!("variable `{n}` missing"))))
            .collect::<Result<_>>()?;
        let terms: Vec<_> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut exps = vec![0; ring.nvars()];
                for (i, &e) in m.exps.iter().enumerate() {
                    exps[idx[i]] = e;
                }
                (Mono::from_exps(exps), c.clone())
            })
            .collect();
        Ok(Self::from_terms(ring, terms))
    }
}

impl JetPoly {
    /// Parses the text form produced by `Display`, e.g. `(1/2)*t1^2*s3 + (-1*x)`.
    pub fn parse(ring: &Arc<JetRing>, s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" || s.is_empty() {
            return Ok(Self::zero(ring));
        }
        let mut out = Self::zero(ring);
        let mut depth = 0i32;
        let mut start = 0usize;
        let mut pieces = Vec::new();
        for (i, b) in s.bytes().enumerate() {
            match b {
                b'(' => depth += 1,
                b')' => depth -= 1,
                b'+' if depth == 0 => {
                    pieces.push(&s[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
        pieces.push(&s[start..]);
        for piece in pieces {
            let piece = piece.trim();
            let rest = piece.strip_prefix('(').ok_or_else(|| Error::Parse(format!("jet term `{piece}` lacks `(coeff)`")))?;
            let close = rest.find(')').ok_or_else(|| Error::Parse(format!("unbalanced `{piece}`")))?;
            let c = Cyclo::parse(ring.p, &rest[..close])?;
            let mut exps = vec![0u32; ring.nvars()];
            for factor in rest[close + 1..].split('*').map(str::trim).filter(|f| !f.is_empty()) {
                let (name, e) = match factor.split_once('^') {
                    Some((n, e)) => (n, e.parse::<u32>().map_err(|_| Error::Parse(format!("bad exponent in `{factor}`")))?),
                    None => (factor, 1),
                };
                let i = ring.index_of(name).ok_or_else(|| Error::Parse(format!("unknown jet variable `{name}`")))?;
                exps[i] += e;
            }
            out.add_term(Mono::from_exps(exps), c);
        }
        Ok(out)
    }
}

impl fmt::Display for JetPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let vars: Vec<String> = m
                    .exps
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| **e > 0)
                    .map(|(i, e)| if *e == 1 { self.ring.names[i].clone() } else { format!("{}^{e}", self.ring.names[i]) })
                    .collect();
                if vars.is_empty() {
                    format!("({c})")
                } else {
                    format!("({c})*{}", vars.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Debug for JetPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JetPoly({self})")
    }
}

impl Coeff for JetPoly {
    fn zero_like(&self) -> Self {
        Self::zero(&self.ring)
    }
    fn constant_like(&self, c: &Cyclo) -> Self {
        Self::constant(&self.ring, c.clone())
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn plus(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn minus(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn times(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn negated(&self) -> Self {
        self.neg()
    }
    fn scaled(&self, c: &Cyclo) -> Self {
        self.scale(c)
    }
    fn try_inv(&self) -> Result<Self> {
        self.invert()
    }
    fn prime(&self) -> u32 {
        self.ring.p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocked_cap_is_per_block() {
        let r = JetRing::blocked(vec!["a".into(), "b".into(), "c".into()], vec![0, 1, 1], 1, 2).unwrap();
        let (a, b, c) = (JetPoly::var(&r, 0), JetPoly::var(&r, 1), JetPoly::var(&r, 2));
        assert_eq!(a.mul(&b).num_terms(), 1);
        assert!(b.mul(&c).is_zero());
        assert!(a.mul(&a).is_zero());
        assert_eq!(r.total_cap(), 2);
    }

    fn ring(n: usize, cap: u32) -> Arc<JetRing> {
        JetRing::blocks(&["t"], n, cap, 3)
    }

    #[test]
    fn difference_of_squares() {
        let r = ring(1, 2);
        let t = JetPoly::var(&r, 0);
        let one = JetPoly::one(&r);
        let prod = one.add(&t).mul(&one.sub(&t));
        assert_eq!(prod, one.sub(&t.mul(&t)));
    }

    #[test]
    fn invert_dual_number() {
        let r = ring(1, 1);
        let t = JetPoly::var(&r, 0);
        let one = JetPoly::one(&r);
        assert_eq!(one.add(&t).invert().unwrap(), one.sub(&t));
        assert!(t.invert().is_err());
    }

    #[test]
    fn mixed_coefficient() {
        let r = ring(2, 3);
        let s = JetPoly::var(&r, 0).add(&JetPoly::var(&r, 1));
        let sq = s.mul(&s);
        assert_eq!(sq.coeff(&Mono::from_exps(vec![1, 1])), Cyclo::from_int(3, 2));
    }

    #[test]
    fn exponentials() {
        let r = ring(2, 2);
        let t1 = JetPoly::var(&r, 0);
        let e = t1.exp().unwrap();
        let half = Cyclo::from_rat(3, rat(1, 2));
        assert_eq!(e, JetPoly::one(&r).add(&t1).add(&t1.mul(&t1).scale(&half)));
        let a = t1.add(&JetPoly::var(&r, 1));
        assert_eq!(a.exp().unwrap().mul(&a.neg().exp().unwrap()), JetPoly::one(&r));
        let r1 = JetRing::blocks(&["t"], 2, 1, 3);
        let t2 = JetPoly::var(&r1, 1).scale(&Cyclo::from_int(3, 3));
        assert_eq!(t2.exp().unwrap(), JetPoly::one(&r1).add(&t2));
        assert!(JetPoly::one(&r).exp().is_err());
    }

    #[test]
    fn text_round_trip() {
        let r = JetRing::blocks(&["t", "s"], 2, 3, 3);
        let a = JetPoly::var(&r, 0).mul(&JetPoly::var(&r, 3)).scale(&Cyclo::parse(3, "1/2 + -1*x").unwrap());
        let b = a.add(&JetPoly::var(&r, 1).pow(2)).add(&JetPoly::one(&r));
        assert_eq!(JetPoly::parse(&r, &b.to_string()).unwrap(), b);
        assert!(JetPoly::parse(&r, "(1)*q1").is_err());
    }
}
