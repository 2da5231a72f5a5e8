//! Sparse multivariate polynomials over the rationals.
//!
//! The polynomial ring here is generated by the simple-root coordinates of a
//! realization, with every linear form sitting in degree 2. All arithmetic is
//! exact; any rounding would silently break the hom-space solvers downstream.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// The ground field: exact rational numbers.
pub type Q = BigRational;

/// Shorthand for a rational `n/d`.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Shorthand for an integer rational.
pub fn qi(n: i64) -> Q {
    Q::from(BigInt::from(n))
}

/// Exponent vector of a monomial, one entry per variable.
pub type Mono = Vec<u16>;

/// A sparse polynomial in `nvars` variables with rational coefficients.
///
/// Invariants: every stored coefficient is nonzero and every exponent vector
/// has length `nvars`. The zero polynomial has empty support.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Mono, Q>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Q) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(vec![0; nvars], c);
        }
        Poly { nvars, terms }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Q::one())
    }

    /// The variable `x_i`, i.e. the `i`-th simple root.
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars);
        let mut e = vec![0u16; nvars];
        e[i] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(e, Q::one());
        Poly { nvars, terms }
    }

    pub fn monomial(nvars: usize, exps: Mono, c: Q) -> Self {
        assert_eq!(exps.len(), nvars);
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        Poly { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.len() <= 1 && self.terms.keys().all(|e| e.iter().all(|&x| x == 0))
    }

    /// The coefficient of the constant monomial.
    pub fn constant_term(&self) -> Q {
        self.terms.get(&vec![0u16; self.nvars]).cloned().unwrap_or_else(Q::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Q)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Degree with `deg(x_i) = 2`, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<i64> {
        self.terms
            .keys()
            .map(|e| 2 * e.iter().map(|&x| x as i64).sum::<i64>())
            .max()
    }

    /// True if every monomial has the same (doubled) total degree `d`.
    pub fn is_homogeneous_of(&self, d: i64) -> bool {
        self.terms
            .keys()
            .all(|e| 2 * e.iter().map(|&x| x as i64).sum::<i64>() == d)
    }

    fn insert_term(&mut self, e: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get() + &c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_term(e.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect();
        Poly { nvars: self.nvars, terms }
    }

    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        let terms = self.terms.iter().map(|(e, k)| (e.clone(), k * c)).collect();
        Poly { nvars: self.nvars, terms }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Poly::zero(self.nvars);
        if self.is_zero() || other.is_zero() {
            return out;
        }
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Mono = e1.iter().zip(e2.iter()).map(|(a, b)| a + b).collect();
                out.insert_term(e, c1 * c2);
            }
        }
        out
    }

    /// Substitute each variable by a linear form: `x_j -> sum_i m[i][j] x_i`.
    ///
    /// `m` is the matrix of a linear map on the root space in root coordinates.
    pub fn apply_linear(&self, m: &[Vec<Q>]) -> Poly {
        let n = self.nvars;
        // images of the variables
        let images: Vec<Poly> = (0..n)
            .map(|j| {
                let mut p = Poly::zero(n);
                for (i, row) in m.iter().enumerate() {
                    if !row[j].is_zero() {
                        let mut e = vec![0u16; n];
                        e[i] = 1;
                        p.insert_term(e, row[j].clone());
                    }
                }
                p
            })
            .collect();
        let mut out = Poly::zero(n);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(n, c.clone());
            for (j, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    t = t.mul(&images[j]);
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Exactly divide by the variable `x_i`. Panics if some monomial misses it;
    /// callers rely on divisibility guaranteed by the Demazure identity.
    pub fn div_var_exact(&self, i: usize) -> Poly {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            assert!(e[i] >= 1, "inexact division by variable {i}");
            let mut e2 = e.clone();
            e2[i] -= 1;
            terms.insert(e2, c.clone());
        }
        Poly { nvars: self.nvars, terms }
    }

    pub fn mul_var(&self, i: usize) -> Poly {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            e2[i] += 1;
            terms.insert(e2, c.clone());
        }
        Poly { nvars: self.nvars, terms }
    }
}

fn fmt_q(c: &Q) -> String {
    if c.denom().is_one() {
        format!("{}", c.numer())
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Poly {
    /// Canonical form: terms sorted by (total degree, exponents), each written
    /// `c*x1^a1*x2^a2*...` with unit exponents kept explicit as `x1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut keys: Vec<&Mono> = self.terms.keys().collect();
        keys.sort_by_key(|e| (e.iter().map(|&x| x as i64).sum::<i64>(), (*e).clone()));
        let mut first = true;
        for e in keys {
            let c = &self.terms[e];
            let mut piece = String::new();
            if c.is_negative() {
                piece.push_str(if first { "-" } else { " - " });
            } else if !first {
                piece.push_str(" + ");
            }
            let ac = c.abs();
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, k) })
                .collect();
            if vars.is_empty() {
                piece.push_str(&fmt_q(&ac));
            } else if ac.is_one() {
                piece.push_str(&vars.join("*"));
            } else {
                piece.push_str(&fmt_q(&ac));
                piece.push('*');
                piece.push_str(&vars.join("*"));
            }
            f.write_str(&piece)?;
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Parse the canonical polynomial string format produced by [`Poly::fmt`].
pub fn parse_poly(s: &str, nvars: usize) -> Result<Poly, String> {
    let s = s.trim();
    if s == "0" {
        return Ok(Poly::zero(nvars));
    }
    let mut out = Poly::zero(nvars);
    // split on + / - while keeping signs
    let mut rest = s;
    let mut sign = Q::one();
    if let Some(r) = rest.strip_prefix('-') {
        sign = -Q::one();
        rest = r.trim_start();
    }
    loop {
        let next_split = rest
            .char_indices()
            .skip(1)
            .find(|(i, c)| (*c == '+' || *c == '-') && rest[..*i].ends_with(' '))
            .map(|(i, _)| i);
        let (term, tail) = match next_split {
            Some(i) => (&rest[..i], &rest[i..]),
            None => (rest, ""),
        };
        let term = term.trim();
        let mut coeff = Q::one();
        let mut exps = vec![0u16; nvars];
        for factor in term.split('*') {
            let factor = factor.trim();
            if factor.is_empty() {
                return Err(format!("empty factor in term '{term}'"));
            }
            if let Some(v) = factor.strip_prefix('x') {
                let (idx, pow) = match v.split_once('^') {
                    Some((i, p)) => (i, p.parse::<u16>().map_err(|e| e.to_string())?),
                    None => (v, 1),
                };
                let i: usize = idx.parse().map_err(|_| format!("bad variable '{factor}'"))?;
                if i == 0 || i > nvars {
                    return Err(format!("variable x{i} out of range"));
                }
                exps[i - 1] += pow;
            } else {
                let c = match factor.split_once('/') {
                    Some((n, d)) => Q::new(
                        n.parse::<BigInt>().map_err(|e| e.to_string())?,
                        d.parse::<BigInt>().map_err(|e| e.to_string())?,
                    ),
                    None => Q::from(factor.parse::<BigInt>().map_err(|e| e.to_string())?),
                };
                coeff *= c;
            }
        }
        out = out.add(&Poly::monomial(nvars, exps, coeff * &sign));
        if tail.is_empty() {
            break;
        }
        let tail = tail.trim_start();
        if let Some(r) = tail.strip_prefix('+') {
            sign = Q::one();
            rest = r.trim_start();
        } else if let Some(r) = tail.strip_prefix('-') {
            sign = -Q::one();
            rest = r.trim_start();
        } else {
            return Err(format!("expected +/- at '{tail}'"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_basics() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = x.add(&y).mul(&x.sub(&y));
        let q2 = x.mul(&x).sub(&y.mul(&y));
        assert_eq!(p, q2);
        assert_eq!(p.degree(), Some(4));
        assert!(p.is_homogeneous_of(4));
    }

    #[test]
    fn division_by_variable() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = x.mul(&x.add(&y)); // x^2 + xy
        assert_eq!(p.div_var_exact(0), x.add(&y));
    }

    #[test]
    fn display_and_parse_roundtrip() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = x.mul(&x).scale(&q(3, 2)).sub(&y).add(&Poly::constant(2, qi(5)));
        let s = p.to_string();
        assert_eq!(s, "5 - x2 + 3/2*x1^2");
        assert_eq!(parse_poly(&s, 2).unwrap(), p);
        assert_eq!(parse_poly("0", 2).unwrap(), Poly::zero(2));
    }

    #[test]
    fn substitution_is_ring_map() {
        // s1 in A2 root coordinates: x1 -> -x1, x2 -> x2 + x1
        let m = vec![vec![qi(-1), qi(1)], vec![qi(0), qi(1)]];
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = x.mul(&y);
        let img = p.apply_linear(&m);
        let expect = x.neg().mul(&y.add(&x));
        assert_eq!(img, expect);
    }
}
