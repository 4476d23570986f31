//! Exact dense linear algebra over `Q(ξ)`.

use rayon::prelude::*;

use crate::scalars::Cyclo;

/// A fully reduced echelon basis, built one vector at a time. The pivot of
/// a row is its first nonzero entry; pivots are normalized to 1 and no row
/// has support at another row's pivot.
#[derive(Clone, Debug, PartialEq)]
pub struct Echelon {
    width: usize,
    p: u32,
    rows: Vec<Vec<Cyclo>>,
    pivots: Vec<usize>,
}

impl Echelon {
    pub fn new(width: usize, p: u32) -> Self {
        Echelon { width, p, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Reduces `v` against the current rows in place.
    pub fn reduce(&self, v: &mut [Cyclo]) {
        for (row, &piv) in self.rows.iter().zip(&self.pivots) {
            if v[piv].is_zero() {
                continue;
            }
            let c = v[piv].clone();
            for (x, r) in v.iter_mut().zip(row).skip(piv) {
                if !r.is_zero() {
                    *x = x.sub(&c.mul(r));
                }
            }
        }
    }

    /// Adds `v` to the span. Returns false when `v` was already in it.
    pub fn insert(&mut self, mut v: Vec<Cyclo>) -> bool {
        debug_assert_eq!(v.len(), self.width);
        self.reduce(&mut v);
        let Some(piv) = v.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = v[piv].inv().expect("pivot is nonzero");
        for x in v.iter_mut().skip(piv) {
            if !x.is_zero() {
                *x = x.mul(&inv);
            }
        }
        self.rows.par_iter_mut().for_each(|row| {
            if row[piv].is_zero() {
                return;
            }
            let c = row[piv].clone();
            for (x, r) in row.iter_mut().zip(&v).skip(piv) {
                if !r.is_zero() {
                    *x = x.sub(&c.mul(r));
                }
            }
        });
        let at = self.pivots.partition_point(|&q| q < piv);
        self.pivots.insert(at, piv);
        self.rows.insert(at, v);
        true
    }

    pub fn rows(&self) -> &[Vec<Cyclo>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn into_parts(self) -> (Vec<Vec<Cyclo>>, Vec<usize>) {
        (self.rows, self.pivots)
    }

    pub fn zero_vec(&self) -> Vec<Cyclo> {
        vec![Cyclo::zero(self.p); self.width]
    }
}

/// Basis of `{x : M x = 0}` for the matrix with the given rows.
pub fn nullspace(rows: &[Vec<Cyclo>], width: usize, p: u32) -> Vec<Vec<Cyclo>> {
    let mut e = Echelon::new(width, p);
    for r in rows {
        e.insert(r.clone());
    }
    let pivots = e.pivots().to_vec();
    let mut is_pivot = vec![false; width];
    for &q in &pivots {
        is_pivot[q] = true;
    }
    (0..width)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut x = vec![Cyclo::zero(p); width];
            x[f] = Cyclo::one(p);
            for (row, &q) in e.rows().iter().zip(&pivots) {
                x[q] = row[f].neg();
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[i64]) -> Vec<Cyclo> {
        xs.iter().map(|&x| Cyclo::from_int(3, x)).collect()
    }

    #[test]
    fn echelon_is_reduced() {
        let mut e = Echelon::new(4, 3);
        assert!(e.insert(v(&[0, 1, 2, 0])));
        assert!(e.insert(v(&[1, 1, 0, 3])));
        assert!(!e.insert(v(&[2, 3, 2, 6])));
        assert_eq!(e.pivots(), &[0, 1]);
        assert!(e.rows()[0][1].is_zero());
    }

    #[test]
    fn nullspace_annihilates() {
        let m = vec![v(&[1, 2, 3, 4]), v(&[0, 1, 1, 1])];
        let ns = nullspace(&m, 4, 3);
        assert_eq!(ns.len(), 2);
        for x in &ns {
            for r in &m {
                let dot = r.iter().zip(x).fold(Cyclo::zero(3), |a, (p, q)| a.add(&p.mul(q)));
                assert!(dot.is_zero());
            }
        }
    }
}
