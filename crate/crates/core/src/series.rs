//! Windowed Laurent series in one variable.
//!
//! A `Series` stores coefficients on `[lo, hi)`. Everything below `lo` is
//! zero. Coefficients at `hi` and above are unknown unless the series is
//! flagged exact, in which case they are zero. Every operation returns the
//! largest window on which its result is provably correct.

use crate::error::{Error, Result};
use crate::scalars::{rat, Coeff, Cyclo};

#[derive(Clone, Debug, PartialEq)]
pub struct Series<C> {
    lo: i64,
    coeffs: Vec<C>,
    exact: bool,
    zero: C,
}

impl<C: Coeff> Series<C> {
    pub fn new(zero: &C, lo: i64, coeffs: Vec<C>, exact: bool) -> Self {
        Series { lo, coeffs, exact, zero: zero.zero_like() }
    }

    /// Exactly zero.
    pub fn zero(zero: &C) -> Self {
        Self::new(zero, 0, Vec::new(), true)
    }

    /// Zero known only on `(-inf, hi)`.
    pub fn zero_until(zero: &C, hi: i64) -> Self {
        Self::new(zero, hi, Vec::new(), false)
    }

    pub fn monomial(c: C, e: i64) -> Self {
        let zero = c.zero_like();
        Self::new(&zero, e, vec![c], true)
    }

    /// Exact Laurent polynomial from `(exponent, coefficient)` pairs.
    pub fn from_terms(zero: &C, terms: impl IntoIterator<Item = (i64, C)>) -> Self {
        let terms: Vec<(i64, C)> = terms.into_iter().collect();
        if terms.is_empty() {
            return Self::zero(zero);
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap() + 1;
        let mut coeffs = vec![zero.zero_like(); (hi - lo) as usize];
        for (e, c) in terms {
            let slot = &mut coeffs[(e - lo) as usize];
            *slot = slot.plus(&c);
        }
        Self::new(zero, lo, coeffs, true)
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Upper end of the certified window (`i64::MAX` when exact).
    pub fn certified_hi(&self) -> i64 {
        if self.exact {
            i64::MAX
        } else {
            self.hi()
        }
    }

    pub fn zero_coeff(&self) -> &C {
        &self.zero
    }

    /// Coefficient at `e`, or `None` when it is not certified.
    pub fn coeff(&self, e: i64) -> Option<C> {
        if e < self.lo {
            Some(self.zero.clone())
        } else if e < self.hi() {
            Some(self.coeffs[(e - self.lo) as usize].clone())
        } else if self.exact {
            Some(self.zero.clone())
        } else {
            None
        }
    }

    pub fn coeff_ref(&self, e: i64) -> Option<&C> {
        if e >= self.lo && e < self.hi() {
            Some(&self.coeffs[(e - self.lo) as usize])
        } else {
            None
        }
    }

    /// Coefficient at `e`, erroring with a window suggestion when unknown.
    pub fn coeff_checked(&self, e: i64) -> Result<C> {
        self.coeff(e).ok_or_else(|| Error::window(format!("coefficient z^{e} beyond window end {}", self.hi()), e + 1))
    }

    /// Stored `(exponent, coefficient)` pairs with nonzero coefficient.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &C)> {
        self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(move |(i, c)| (self.lo + i as i64, c))
    }

    /// First exponent with a nonzero coefficient inside the window.
    pub fn valuation(&self) -> Option<i64> {
        self.terms().next().map(|(e, _)| e)
    }

    /// True when every certified coefficient vanishes.
    pub fn is_zero_on_window(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Drops leading zeros and, for exact series, trailing zeros.
    pub fn normalized(mut self) -> Self {
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead == self.coeffs.len() {
            let hi = self.hi();
            self.coeffs.clear();
            self.lo = if self.exact { 0 } else { hi };
            return self;
        }
        self.coeffs.drain(..lead);
        self.lo += lead as i64;
        if self.exact {
            while self.coeffs.last().map_or(false, |c| c.is_zero()) {
                self.coeffs.pop();
            }
        }
        self
    }

    /// Forgets coefficients at `hi` and above.
    pub fn truncate(&self, hi: i64) -> Self {
        let cur_hi = self.certified_hi();
        let new_hi = hi.min(cur_hi);
        let lo = self.lo.min(new_hi);
        let coeffs = (lo..new_hi).map(|e| self.coeff(e).unwrap()).collect();
        Series { lo, coeffs, exact: false, zero: self.zero.clone() }
    }

    pub fn add(&self, o: &Self) -> Self {
        let lo = self.lo.min(o.lo);
        let exact = self.exact && o.exact;
        let hi = if exact { self.hi().max(o.hi()) } else { self.certified_hi().min(o.certified_hi()) };
        let hi = hi.max(lo);
        let coeffs = (lo..hi).map(|e| self.coeff(e).unwrap().plus(&o.coeff(e).unwrap())).collect();
        Series { lo, coeffs, exact, zero: self.zero.clone() }.normalized_lo()
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        Series { lo: self.lo, coeffs: self.coeffs.iter().map(|c| c.negated()).collect(), exact: self.exact, zero: self.zero.clone() }
    }

    pub fn scale(&self, s: &Cyclo) -> Self {
        Series { lo: self.lo, coeffs: self.coeffs.iter().map(|c| c.scaled(s)).collect(), exact: self.exact, zero: self.zero.clone() }
    }

    pub fn scale_coeff(&self, s: &C) -> Self {
        Series { lo: self.lo, coeffs: self.coeffs.iter().map(|c| c.times(s)).collect(), exact: self.exact, zero: self.zero.clone() }
    }

    /// Multiplies by `z^k`.
    pub fn shift(&self, k: i64) -> Self {
        Series { lo: self.lo + k, coeffs: self.coeffs.clone(), exact: self.exact, zero: self.zero.clone() }
    }

    /// Applies `f(e, c)` to each stored coefficient.
    pub fn map_coeffs(&self, f: impl Fn(i64, &C) -> C) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, c)| f(self.lo + i as i64, c)).collect();
        Series { lo: self.lo, coeffs, exact: self.exact, zero: self.zero.clone() }
    }

    /// Keeps only exponents satisfying `keep`; windows are unchanged.
    pub fn filter_exponents(&self, keep: impl Fn(i64) -> bool) -> Self {
        self.map_coeffs(|e, c| if keep(e) { c.clone() } else { c.zero_like() })
    }

    fn normalized_lo(mut self) -> Self {
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 && lead < self.coeffs.len() {
            self.coeffs.drain(..lead);
            self.lo += lead as i64;
        }
        self
    }

    /// Product; the window ends where an unknown coefficient of either
    /// factor could first contribute.
    pub fn mul(&self, o: &Self) -> Self {
        self.mul_upto(o, i64::MAX)
    }

    /// Product with every coefficient at `cap` and above discarded.
    pub fn mul_upto(&self, o: &Self, cap: i64) -> Self {
        if (self.exact && self.is_zero_on_window()) || (o.exact && o.is_zero_on_window()) {
            return Self::zero(&self.zero);
        }
        let lo = self.lo + o.lo;
        let exact = self.exact && o.exact;
        let hi = if exact {
            self.hi() + o.hi() - 1
        } else {
            let a = if self.exact { i64::MAX } else { self.hi().saturating_add(o.lo) };
            let b = if o.exact { i64::MAX } else { o.hi().saturating_add(self.lo) };
            a.min(b)
        };
        let (hi, exact) = if hi > cap { (cap, false) } else { (hi, exact) };
        let hi = hi.max(lo);
        let n = (hi - lo) as usize;
        let mut coeffs = vec![self.zero.clone(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            if i >= n {
                break;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if i + j >= n {
                    break;
                }
                if !b.is_zero() {
                    coeffs[i + j] = coeffs[i + j].plus(&a.times(b));
                }
            }
        }
        Series { lo, coeffs, exact, zero: self.zero.clone() }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::monomial(self.zero.one_like(), 0);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Multiplicative inverse. The leading coefficient must be a certified
    /// unit; `target_hi` bounds the expansion of inverses of exact series.
    pub fn inverse(&self, target_hi: i64) -> Result<Self> {
        let v = self
            .valuation()
            .ok_or_else(|| Error::window("no certified nonzero coefficient to invert", self.hi() + 8))?;
        let lead = self.coeff(v).unwrap();
        let lead_inv = lead.try_inv()?;
        let rel_prec = if self.exact { target_hi.saturating_add(v) } else { self.hi() - v };
        let n = rel_prec.max(0) as usize;
        // Normalize to u = 1 + (higher terms) and invert by recurrence.
        let u: Vec<C> = (0..n).map(|k| self.coeff(v + k as i64).unwrap_or_else(|| self.zero.clone()).times(&lead_inv)).collect();
        let mut w: Vec<C> = Vec::with_capacity(n);
        for k in 0..n {
            if k == 0 {
                w.push(self.zero.one_like());
                continue;
            }
            let mut acc = self.zero.clone();
            for j in 1..=k {
                if !u[j].is_zero() {
                    acc = acc.plus(&u[j].times(&w[k - j]));
                }
            }
            w.push(acc.negated());
        }
        let coeffs = w.into_iter().map(|c| c.times(&lead_inv)).collect();
        Ok(Series { lo: -v, coeffs, exact: false, zero: self.zero.clone() })
    }

    pub fn div(&self, o: &Self, target_hi: i64) -> Result<Self> {
        let ov = o.valuation().unwrap_or(0);
        let inv = o.inverse(target_hi - self.lo + ov + 1)?;
        Ok(self.mul(&inv))
    }

    /// Principal `p`-th root of a series `1 + (positive-exponent tail)`.
    pub fn pth_root(&self, p: u32, target_hi: i64) -> Result<Self> {
        if self.lo < 0 && self.terms().any(|(e, _)| e < 0) {
            return Err(Error::NotUnit("p-th root needs a series starting at 1".into()));
        }
        let c0 = self.coeff(0).ok_or_else(|| Error::window("constant term unknown", 1))?;
        if c0 != self.zero.one_like() {
            return Err(Error::NotUnit(format!("p-th root needs constant term 1, got {c0:?}")));
        }
        let hi = if self.exact { target_hi } else { self.hi().min(target_hi.max(self.hi())) };
        let n = hi.max(0) as usize;
        let f: Vec<C> = (0..n).map(|k| self.coeff(k as i64).unwrap_or_else(|| self.zero.clone())).collect();
        // g = f^a with a = 1/p:  n g_n = sum_{k=1}^{n} ((a + 1) k - n) f_k g_{n-k}.
        let pr = self.zero.prime();
        let mut g: Vec<C> = Vec::with_capacity(n);
        for m in 0..n {
            if m == 0 {
                g.push(self.zero.one_like());
                continue;
            }
            let mut acc = self.zero.clone();
            for k in 1..=m {
                if f[k].is_zero() {
                    continue;
                }
                let w = rat(1 + p as i64, p as i64) * rat(k as i64, 1) - rat(m as i64, 1);
                acc = acc.plus(&f[k].times(&g[m - k]).scaled(&Cyclo::from_rat(pr, w)));
            }
            g.push(acc.scaled(&Cyclo::from_rat(pr, rat(1, m as i64))));
        }
        Ok(Series { lo: 0, coeffs: g, exact: false, zero: self.zero.clone() })
    }

    /// Text form `[lo,hi) e:coeff;...` (`hi` printed as `inf` when exact).
    pub fn to_text(&self) -> String
    where
        C: std::fmt::Display,
    {
        let hi = if self.exact { "inf".to_string() } else { self.hi().to_string() };
        let body: Vec<String> = self.terms().map(|(e, c)| format!("{e}:{c}")).collect();
        format!("[{},{}) {}", self.lo, hi, body.join(";"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::rat;

    fn q(n: i64, d: i64) -> Cyclo {
        Cyclo::from_rat(2, rat(n, d))
    }

    fn zero() -> Cyclo {
        Cyclo::zero(2)
    }

    #[test]
    fn window_rules_for_products() {
        let a = Series::new(&zero(), -2, vec![q(1, 1); 5], false); // [-2,3)
        let b = Series::new(&zero(), 1, vec![q(1, 1); 3], false); // [1,4)
        let c = a.mul(&b);
        assert_eq!(c.lo(), -1);
        assert_eq!(c.hi(), (-2 + 4).min(1 + 3));
    }

    #[test]
    fn geometric_series_times_one_plus_z() {
        let onez = Series::from_terms(&zero(), [(0, q(1, 1)), (1, q(1, 1))]);
        let geo = Series::new(&zero(), 0, (0..5).map(|k| q(if k % 2 == 0 { 1 } else { -1 }, 1)).collect(), false);
        let prod = onez.mul(&geo);
        assert_eq!(prod.hi(), 5);
        for e in 0..5 {
            assert_eq!(prod.coeff(e).unwrap(), if e == 0 { q(1, 1) } else { q(0, 1) });
        }
    }

    #[test]
    fn inverse_of_monomial_shift() {
        let a = Series::monomial(q(1, 1), -1);
        let b = Series::monomial(q(1, 1), 1);
        assert_eq!(a.mul(&b), Series::monomial(q(1, 1), 0));
        let inv = Series::from_terms(&zero(), [(0, q(1, 1)), (1, q(1, 1))]).inverse(6).unwrap();
        assert_eq!(inv.coeff(3).unwrap(), q(-1, 1));
    }

    #[test]
    fn square_roots() {
        let f = Series::from_terms(&zero(), [(0, q(1, 1)), (1, q(-1, 1))]);
        let g = f.pth_root(2, 4).unwrap();
        let want = [q(1, 1), q(-1, 2), q(-1, 8), q(-1, 16)];
        for (e, w) in want.iter().enumerate() {
            assert_eq!(&g.coeff(e as i64).unwrap(), w);
        }
        let sq = g.mul(&g);
        assert_eq!(sq.truncate(4), f.truncate(4));
        let h = Series::from_terms(&zero(), [(0, q(1, 1)), (1, q(2, 1)), (2, q(1, 1))]);
        let r = h.pth_root(2, 8).unwrap();
        assert_eq!(r.truncate(8).normalized().terms().count(), 2);
        let one = Series::monomial(Cyclo::one(3), 0);
        assert_eq!(one.pth_root(3, 5).unwrap().truncate(5).normalized().terms().count(), 1);
        assert!(Series::monomial(q(2, 1), 0).pth_root(2, 4).is_err());
    }
}
