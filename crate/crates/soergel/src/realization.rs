//! Coxeter realizations over the rationals.
//!
//! A realization fixes simple roots and coroots with a crystallographic
//! Cartan pairing, the reflection action of the Weyl group on the polynomial
//! ring, and the Demazure operators. Simple roots are the coordinates of the
//! polynomial ring, so a Weyl element is just an exact rational matrix.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::poly::{qi, Poly, Q};

/// Supported Coxeter types. `I2(m)` is restricted to crystallographic m.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoxeterType {
    A(usize),
    B(usize),
    D(usize),
    I2(u32),
}

impl CoxeterType {
    pub fn rank(&self) -> usize {
        match self {
            CoxeterType::A(n) | CoxeterType::B(n) | CoxeterType::D(n) => *n,
            CoxeterType::I2(_) => 2,
        }
    }

    pub fn parse(s: &str) -> Result<CoxeterType, Error> {
        let s = s.trim();
        let bad = || Error::UnsupportedType(s.to_string());
        if let Some(rest) = s.strip_prefix("I2") {
            let m: u32 = rest
                .trim_start_matches(['(', ' '])
                .trim_end_matches(')')
                .parse()
                .map_err(|_| bad())?;
            return Ok(CoxeterType::I2(m));
        }
        let (letter, num) = s.split_at(1);
        let n: usize = num.parse().map_err(|_| bad())?;
        match letter {
            "A" | "a" => Ok(CoxeterType::A(n)),
            "B" | "b" => Ok(CoxeterType::B(n)),
            "D" | "d" => Ok(CoxeterType::D(n)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for CoxeterType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoxeterType::A(n) => write!(f, "A{n}"),
            CoxeterType::B(n) => write!(f, "B{n}"),
            CoxeterType::D(n) => write!(f, "D{n}"),
            CoxeterType::I2(m) => write!(f, "I2({m})"),
        }
    }
}

/// An element of the Weyl group, stored as its action on the root space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylElement {
    /// Column j is the image of the simple root `alpha_j` in root coordinates.
    pub mat: Vec<Vec<Q>>,
    /// A lexicographically least reduced word.
    pub word: Vec<u8>,
}

impl WeylElement {
    pub fn length(&self) -> usize {
        self.word.len()
    }

    pub fn is_identity(&self) -> bool {
        self.word.is_empty()
    }
}

fn mat_mul(a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let n = a.len();
    let mut out = vec![vec![Q::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                if !b[k][j].is_zero() {
                    out[i][j] += &a[i][k] * &b[k][j];
                }
            }
        }
    }
    out
}

fn mat_id(n: usize) -> Vec<Vec<Q>> {
    let mut m = vec![vec![Q::zero(); n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Q::one();
    }
    m
}

const BFS_BUDGET: usize = 400_000;

/// A realization: Coxeter datum, Cartan pairing, and the full Weyl group.
///
/// Group elements are enumerated once by breadth-first search at build time;
/// everything else in the crate treats the realization as immutable shared
/// state, so concurrent readers are fine.
pub struct Realization {
    pub ctype: CoxeterType,
    pub rank: usize,
    /// `cartan[s][t]` is the pairing of coroot `t` against root `s`, i.e. the
    /// coefficient of `alpha_t^vee(alpha_s)`.
    pub cartan: Vec<Vec<Q>>,
    /// Coxeter matrix entries m_{st}.
    pub coxeter: Vec<Vec<u32>>,
    /// All group elements; index 0 is the identity, the last one is w0.
    elements: Vec<WeylElement>,
    /// Indices of the simple reflections within `elements`.
    pub(crate) simple_idx: Vec<usize>,
    /// tau(s) = w0 s w0 as a map on simple reflection indices.
    tau: Vec<u8>,
    /// right multiplication table: element i times simple reflection s.
    right_mul: Vec<Vec<usize>>,
}

impl fmt::Debug for Realization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Realization({}, |W|={})", self.ctype, self.elements.len())
    }
}

fn cartan_for(ctype: CoxeterType) -> Result<Vec<Vec<Q>>, Error> {
    let n = ctype.rank();
    let mut c = vec![vec![Q::zero(); n]; n];
    for (i, row) in c.iter_mut().enumerate() {
        row[i] = qi(2);
    }
    let mut chain = |c: &mut Vec<Vec<Q>>, i: usize, j: usize, a: i64, b: i64| {
        c[i][j] = qi(a);
        c[j][i] = qi(b);
    };
    match ctype {
        CoxeterType::A(n) => {
            if n == 0 {
                return Err(Error::InconsistentRank(ctype.to_string()));
            }
            for i in 1..n {
                chain(&mut c, i - 1, i, -1, -1);
            }
        }
        CoxeterType::B(n) => {
            if n < 2 {
                return Err(Error::InconsistentRank(ctype.to_string()));
            }
            for i in 1..n.saturating_sub(1) {
                chain(&mut c, i - 1, i, -1, -1);
            }
            // last bond is the double one: alpha_{n-1} long against alpha_n short
            chain(&mut c, n - 2, n - 1, -1, -2);
        }
        CoxeterType::D(n) => {
            if n < 4 {
                return Err(Error::InconsistentRank(ctype.to_string()));
            }
            for i in 1..(n - 1) {
                chain(&mut c, i - 1, i, -1, -1);
            }
            chain(&mut c, n - 3, n - 1, -1, -1);
        }
        CoxeterType::I2(m) => match m {
            2 => {}
            3 => chain(&mut c, 0, 1, -1, -1),
            4 => chain(&mut c, 0, 1, -1, -2),
            6 => chain(&mut c, 0, 1, -1, -3),
            _ => return Err(Error::UnsupportedType(format!("I2({m})"))),
        },
    }
    Ok(c)
}

fn coxeter_entry(prod: &Q) -> Result<u32, Error> {
    // a_{st} a_{ts} = 4 cos^2(pi/m): 0 -> 2, 1 -> 3, 2 -> 4, 3 -> 6
    for (v, m) in [(0, 2), (1, 3), (2, 4), (3, 6)] {
        if *prod == qi(v) {
            return Ok(m);
        }
    }
    Err(Error::UnsupportedType(format!("non-crystallographic pairing {prod}")))
}

impl Realization {
    /// Build a realization from a type label, verifying the crystallographic
    /// restriction and finiteness of the reflection group.
    pub fn new(ctype: CoxeterType) -> Result<Realization, Error> {
        let n = ctype.rank();
        let cartan = cartan_for(ctype)?;
        for (s, row) in cartan.iter().enumerate() {
            assert_eq!(row[s], qi(2));
        }
        let mut coxeter = vec![vec![1u32; n]; n];
        for s in 0..n {
            for t in 0..n {
                if s != t {
                    coxeter[s][t] = coxeter_entry(&(&cartan[s][t] * &cartan[t][s]))?;
                }
            }
        }

        // simple reflection matrices: s_i(alpha_j) = alpha_j - cartan[j][i] alpha_i
        let simple_mats: Vec<Vec<Vec<Q>>> = (0..n)
            .map(|i| {
                let mut m = mat_id(n);
                for j in 0..n {
                    // column j is the image of alpha_j
                    m[i][j] -= &cartan[j][i];
                }
                m
            })
            .collect();

        // BFS over the group with lex-least word bookkeeping
        let mut elements: Vec<WeylElement> = vec![WeylElement { mat: mat_id(n), word: vec![] }];
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let key = |m: &Vec<Vec<Q>>| format!("{m:?}");
        index.insert(key(&elements[0].mat), 0);
        let mut right_mul: Vec<Vec<usize>> = vec![vec![usize::MAX; n]];
        let mut frontier = vec![0usize];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &ei in &frontier {
                for s in 0..n {
                    let m = mat_mul(&elements[ei].mat, &simple_mats[s]);
                    let k = key(&m);
                    let idx = match index.get(&k) {
                        Some(&idx) => idx,
                        None => {
                            let mut word = elements[ei].word.clone();
                            word.push(s as u8);
                            let idx = elements.len();
                            if idx > BFS_BUDGET {
                                return Err(Error::BudgetExceeded(
                                    "Weyl group enumeration".into(),
                                ));
                            }
                            elements.push(WeylElement { mat: m, word });
                            right_mul.push(vec![usize::MAX; n]);
                            index.insert(k, idx);
                            next.push(idx);
                            idx
                        }
                    };
                    right_mul[ei][s] = idx;
                    // lex-least among shortest: BFS finds shortest; within a level,
                    // fix up if a lexicographically smaller word arrives
                    if elements[idx].word.len() == elements[ei].word.len() + 1 {
                        let mut cand = elements[ei].word.clone();
                        cand.push(s as u8);
                        if cand < elements[idx].word {
                            elements[idx].word = cand;
                        }
                    }
                }
            }
            frontier = next;
        }

        let simple_idx: Vec<usize> = (0..n).map(|s| right_mul[0][s]).collect();
        let maxlen = elements.iter().map(|e| e.word.len()).max().unwrap();
        let longest: Vec<usize> = (0..elements.len())
            .filter(|&i| elements[i].word.len() == maxlen)
            .collect();
        assert_eq!(longest.len(), 1, "longest element must be unique in finite type");
        let w0 = longest[0];

        // tau(s) = w0 s w0, located by matrix comparison
        let w0m = &elements[w0].mat;
        let mut tau = vec![0u8; n];
        for s in 0..n {
            let m = mat_mul(&mat_mul(w0m, &simple_mats[s]), w0m);
            let t = (0..n)
                .find(|&t| simple_mats[t] == m)
                .expect("w0 s w0 must be a simple reflection");
            tau[s] = t as u8;
        }

        let mut real = Realization {
            ctype,
            rank: n,
            cartan,
            coxeter,
            elements,
            simple_idx,
            tau,
            right_mul,
        };
        // reorder so the longest element is last (cosmetic but handy)
        let _ = &mut real;
        Ok(real)
    }

    pub fn from_label(label: &str) -> Result<Realization, Error> {
        Realization::new(CoxeterType::parse(label)?)
    }

    pub fn nvars(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn alpha(&self, s: usize) -> Poly {
        Poly::var(self.rank, s)
    }

    /// Half of a simple root; the coefficients of the 01-basis live over these.
    pub fn delta(&self, s: usize) -> Poly {
        self.alpha(s).scale(&crate::poly::q(1, 2))
    }

    pub fn element(&self, i: usize) -> &WeylElement {
        &self.elements[i]
    }

    pub fn identity_index(&self) -> usize {
        0
    }

    pub fn w0_index(&self) -> usize {
        let maxlen = self.elements.iter().map(|e| e.word.len()).max().unwrap();
        (0..self.elements.len())
            .find(|&i| self.elements[i].word.len() == maxlen)
            .unwrap()
    }

    pub fn w0(&self) -> &WeylElement {
        &self.elements[self.w0_index()]
    }

    /// The diagram involution tau(s) = w0 s w0 on simple reflections.
    pub fn tau(&self, s: usize) -> usize {
        self.tau[s] as usize
    }

    /// Index of the element `w * s`.
    pub fn right_descent_step(&self, w: usize, s: usize) -> usize {
        self.right_mul[w][s]
    }

    /// Index of the element with the given word (empty word: identity).
    pub fn element_by_word(&self, word: &[u8]) -> usize {
        let mut w = 0usize;
        for &s in word {
            w = self.right_mul[w][s as usize];
        }
        w
    }

    pub fn length_of(&self, idx: usize) -> usize {
        self.elements[idx].word.len()
    }

    /// Action of a simple reflection on a polynomial.
    pub fn act_s(&self, s: usize, f: &Poly) -> Poly {
        let mut m = mat_id(self.rank);
        for j in 0..self.rank {
            m[s][j] -= &self.cartan[j][s];
        }
        f.apply_linear(&m)
    }

    /// Action of a group element (by index) on a polynomial.
    pub fn act(&self, w: usize, f: &Poly) -> Poly {
        f.apply_linear(&self.elements[w].mat)
    }

    /// Demazure operator: (f - s f) / alpha_s. Exact by construction.
    pub fn demazure(&self, s: usize, f: &Poly) -> Poly {
        f.sub(&self.act_s(s, f)).div_var_exact(s)
    }

    /// Invariant half: (f + s f) / 2. Together with the Demazure operator this
    /// splits f as `pi_e(f) + demazure(f) * delta_s`.
    pub fn pi_half(&self, s: usize, f: &Poly) -> Poly {
        f.add(&self.act_s(s, f)).scale(&crate::poly::q(1, 2))
    }

    /// The longest element, its lex-least reduced word, and tau.
    pub fn longest_and_tau(&self) -> (&WeylElement, &[u8], Vec<usize>) {
        let w0 = self.w0();
        (w0, &w0.word, (0..self.rank).map(|s| self.tau(s)).collect())
    }

    /// JSON descriptor consumed by the CLI config.
    pub fn descriptor(&self) -> RealizationDescriptor {
        RealizationDescriptor {
            ctype: self.ctype.to_string(),
            rank: self.rank,
            cartan: self
                .cartan
                .iter()
                .map(|r| r.iter().map(|c| c.to_string()).collect())
                .collect(),
            coxeter: self.coxeter.clone(),
        }
    }
}

/// Serializable description of a realization.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RealizationDescriptor {
    #[serde(rename = "type")]
    pub ctype: String,
    pub rank: usize,
    pub cartan: Vec<Vec<String>>,
    pub coxeter: Vec<Vec<u32>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::q;

    #[test]
    fn a2_cartan_matrix() {
        let r = Realization::new(CoxeterType::A(2)).unwrap();
        assert_eq!(r.cartan[0][1], qi(-1));
        assert_eq!(r.cartan[1][0], qi(-1));
        assert_eq!(r.order(), 6);
        assert_eq!(r.coxeter[0][1], 3);
    }

    #[test]
    fn a1_single_root() {
        let r = Realization::new(CoxeterType::A(1)).unwrap();
        assert_eq!(r.cartan[0][0], qi(2));
        assert_eq!(r.order(), 2);
    }

    #[test]
    fn i24_asymmetric_split() {
        let r = Realization::new(CoxeterType::I2(4)).unwrap();
        assert_eq!(r.cartan[0][1], qi(-1));
        assert_eq!(r.cartan[1][0], qi(-2));
        assert_eq!(&r.cartan[0][1] * &r.cartan[1][0], qi(2));
        assert_eq!(r.order(), 8);
    }

    #[test]
    fn rejects_non_crystallographic() {
        assert!(Realization::new(CoxeterType::I2(5)).is_err());
        assert!(CoxeterType::parse("H3").is_err());
        assert!(Realization::new(CoxeterType::D(3)).is_err());
    }

    #[test]
    fn demazure_examples() {
        let r = Realization::new(CoxeterType::A(2)).unwrap();
        let one = Poly::one(2);
        assert!(r.demazure(0, &one).is_zero());
        let a = r.alpha(0);
        assert_eq!(r.demazure(0, &a), Poly::constant(2, qi(2)));
        assert!(r.demazure(0, &a.mul(&a)).is_zero());
    }

    #[test]
    fn act_examples() {
        let r = Realization::new(CoxeterType::A(2)).unwrap();
        let at = r.alpha(1);
        assert_eq!(r.act_s(0, &at), at.add(&r.alpha(0)));
        // identity acts trivially
        let f = r.alpha(0).mul(&at).add(&Poly::constant(2, q(1, 3)));
        assert_eq!(r.act(r.identity_index(), &f), f);
    }

    #[test]
    fn w0_on_simple_roots() {
        for label in ["A1", "A2", "A3", "B2", "I2(4)", "I2(6)"] {
            let r = Realization::from_label(label).unwrap();
            let w0 = r.w0_index();
            for s in 0..r.rank {
                let img = r.act(w0, &r.alpha(s));
                assert_eq!(img, r.alpha(r.tau(s)).neg(), "{label}, s={s}");
            }
        }
    }

    #[test]
    fn longest_words_and_tau() {
        let a2 = Realization::from_label("A2").unwrap();
        let (_, word, tau) = a2.longest_and_tau();
        assert_eq!(word, &[0, 1, 0]);
        assert_eq!(tau, vec![1, 0]);

        let b2 = Realization::from_label("I2(4)").unwrap();
        let (_, word, tau) = b2.longest_and_tau();
        assert_eq!(word.len(), 4);
        assert_eq!(word, &[0, 1, 0, 1]);
        assert_eq!(tau, vec![0, 1]);

        let a1 = Realization::from_label("A1").unwrap();
        let (w0, word, tau) = a1.longest_and_tau();
        assert_eq!(word, &[0]);
        assert_eq!(tau, vec![0]);
        assert_eq!(w0.length(), 1);
    }

    #[test]
    fn w0_is_involution_and_lengths() {
        for label in ["A2", "A3", "B2"] {
            let r = Realization::from_label(label).unwrap();
            let w0 = r.w0_index();
            let w0w = r.element(w0).word.to_vec();
            let mut sq = w0w.clone();
            sq.extend_from_slice(&w0w);
            assert_eq!(r.element_by_word(&sq), r.identity_index(), "{label}");
            // l(w0 x) = l(w0) - l(x)
            let lw0 = r.length_of(w0);
            for x in 0..r.order() {
                let xw = r.element(x).word.to_vec();
                let mut w0x = w0w.clone();
                w0x.extend_from_slice(&xw);
                assert_eq!(r.length_of(r.element_by_word(&w0x)), lw0 - r.length_of(x));
            }
        }
    }

    #[test]
    fn tau_is_graph_automorphism() {
        for label in ["A3", "B3", "D4", "I2(6)"] {
            let r = Realization::from_label(label).unwrap();
            for s in 0..r.rank {
                for t in 0..r.rank {
                    assert_eq!(
                        r.coxeter[r.tau(s)][r.tau(t)],
                        r.coxeter[s][t],
                        "{label} {s} {t}"
                    );
                }
            }
        }
    }

    #[test]
    fn group_orders() {
        for (label, order) in [
            ("A1", 2usize),
            ("A2", 6),
            ("A3", 24),
            ("B2", 8),
            ("B3", 48),
            ("D4", 192),
            ("I2(2)", 4),
            ("I2(6)", 12),
        ] {
            let r = Realization::from_label(label).unwrap();
            assert_eq!(r.order(), order, "{label}");
        }
    }
}
