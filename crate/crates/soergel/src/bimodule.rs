//! Concrete Bott-Samelson bimodule calculus.
//!
//! A word object `B_{s1}...B_{sr}(k)` is modelled by its 01-basis: the free
//! left basis indexed by subsets of slots, where a chosen slot carries the
//! half-root `delta_s = alpha_s/2`. A morphism is a degree-homogeneous matrix
//! over the polynomial ring in this basis, constrained by right-linearity.
//! Equality of morphisms is matrix equality, so every relation we care about
//! is decidable by exact arithmetic.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::poly::{Mono, Poly, Q};
use crate::realization::Realization;
use crate::solve::{kernel_basis, solve, SparseMat};

/// Bitmask over the slots of a word; bit `i` set means slot `i` carries delta.
pub type Mask = u32;

/// A Bott-Samelson word with a grading shift.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BSObject {
    pub word: Vec<u8>,
    pub shift: i32,
}

impl BSObject {
    pub fn new(word: Vec<u8>, shift: i32) -> Self {
        BSObject { word, shift }
    }

    /// The monoidal identity.
    pub fn unit() -> Self {
        BSObject { word: vec![], shift: 0 }
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn is_unit(&self) -> bool {
        self.word.is_empty() && self.shift == 0
    }

    pub fn shifted(&self, k: i32) -> Self {
        BSObject { word: self.word.clone(), shift: self.shift + k }
    }

    /// Degree of the 01-basis vector indexed by `mask`.
    pub fn basis_degree(&self, mask: Mask) -> i64 {
        2 * (mask.count_ones() as i64) - self.word.len() as i64 - self.shift as i64
    }

    pub fn concat(&self, other: &BSObject) -> BSObject {
        let mut word = self.word.clone();
        word.extend_from_slice(&other.word);
        BSObject { word, shift: self.shift + other.shift }
    }
}

impl fmt::Debug for BSObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            write!(f, "1")?;
        } else {
            for s in &self.word {
                write!(f, "B{}", s + 1)?;
            }
        }
        if self.shift != 0 {
            write!(f, "({})", self.shift)?;
        }
        Ok(())
    }
}

/// A degree-homogeneous bimodule morphism in the 01-basis.
///
/// Entry `(E', E)` holds the coefficient of target basis vector `E'` in the
/// image of source basis vector `E`. Homogeneity pins the polynomial degree of
/// each entry to `deg + deg_src(E) - deg_tgt(E')`.
#[derive(Clone, PartialEq, Eq)]
pub struct Morphism {
    pub src: BSObject,
    pub tgt: BSObject,
    pub deg: i64,
    pub entries: BTreeMap<(Mask, Mask), Poly>,
}

impl fmt::Debug for Morphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Morphism({:?} -> {:?}, deg {}", self.src, self.tgt, self.deg)?;
        for ((r, c), p) in &self.entries {
            write!(f, "; [{r:b},{c:b}]={p}")?;
        }
        write!(f, ")")
    }
}

impl Morphism {
    pub fn zero(src: BSObject, tgt: BSObject, deg: i64) -> Self {
        Morphism { src, tgt, deg, entries: BTreeMap::new() }
    }

    pub fn identity(obj: &BSObject, nvars: usize) -> Self {
        let mut entries = BTreeMap::new();
        for mask in 0..(1u32 << obj.len()) {
            entries.insert((mask, mask), Poly::one(nvars));
        }
        Morphism { src: obj.clone(), tgt: obj.clone(), deg: 0, entries }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn set_entry(&mut self, tgt_mask: Mask, src_mask: Mask, p: Poly) {
        if p.is_zero() {
            self.entries.remove(&(tgt_mask, src_mask));
        } else {
            self.entries.insert((tgt_mask, src_mask), p);
        }
    }

    pub fn entry(&self, tgt_mask: Mask, src_mask: Mask) -> Option<&Poly> {
        self.entries.get(&(tgt_mask, src_mask))
    }

    pub fn add(&self, other: &Morphism) -> Morphism {
        assert_eq!(self.src, other.src);
        assert_eq!(self.tgt, other.tgt);
        assert_eq!(self.deg, other.deg);
        let mut out = self.clone();
        for ((r, c), p) in &other.entries {
            let np = match out.entries.get(&(*r, *c)) {
                Some(q2) => q2.add(p),
                None => p.clone(),
            };
            out.set_entry(*r, *c, np);
        }
        out
    }

    pub fn sub(&self, other: &Morphism) -> Morphism {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Morphism {
        let entries = self.entries.iter().map(|(k, p)| (*k, p.neg())).collect();
        Morphism { src: self.src.clone(), tgt: self.tgt.clone(), deg: self.deg, entries }
    }

    pub fn scale(&self, c: &Q) -> Morphism {
        if c.is_zero() {
            return Morphism::zero(self.src.clone(), self.tgt.clone(), self.deg);
        }
        let entries = self.entries.iter().map(|(k, p)| (*k, p.scale(c))).collect();
        Morphism { src: self.src.clone(), tgt: self.tgt.clone(), deg: self.deg, entries }
    }

    /// Composition `self o g` (apply `g` first).
    pub fn compose(&self, g: &Morphism) -> Morphism {
        assert_eq!(
            g.tgt, self.src,
            "compose: middle objects differ ({:?} vs {:?})",
            g.tgt, self.src
        );
        let mut by_src: BTreeMap<Mask, Vec<(Mask, &Poly)>> = BTreeMap::new();
        for ((r, c), p) in &self.entries {
            by_src.entry(*c).or_default().push((*r, p));
        }
        let mut out = Morphism::zero(g.src.clone(), self.tgt.clone(), self.deg + g.deg);
        for ((mid, c), q2) in &g.entries {
            if let Some(rows) = by_src.get(mid) {
                for (r, p) in rows {
                    let prod = p.mul(q2);
                    if !prod.is_zero() {
                        let np = match out.entries.get(&(*r, *c)) {
                            Some(e) => e.add(&prod),
                            None => prod,
                        };
                        out.set_entry(*r, *c, np);
                    }
                }
            }
        }
        out
    }

    /// Retag shifts without touching entries; the stored degree adjusts so the
    /// homogeneity constraint keeps holding.
    pub fn retag(&self, src_shift: i32, tgt_shift: i32) -> Morphism {
        let deg = self.deg + (src_shift - self.src.shift) as i64 - (tgt_shift - self.tgt.shift) as i64;
        Morphism {
            src: BSObject { word: self.src.word.clone(), shift: src_shift },
            tgt: BSObject { word: self.tgt.word.clone(), shift: tgt_shift },
            deg,
            entries: self.entries.clone(),
        }
    }

    /// Check degree homogeneity of every entry.
    pub fn check_homogeneous(&self) -> Result<()> {
        for ((r, c), p) in &self.entries {
            let want = self.deg + self.src.basis_degree(*c) - self.tgt.basis_degree(*r);
            if want < 0 || want % 2 != 0 || !p.is_homogeneous_of(want) {
                return Err(Error::DegreeMismatch(format!(
                    "entry ({r:b},{c:b}) of degree-{} morphism: poly {p} should be homogeneous of degree {want}",
                    self.deg
                )));
            }
        }
        Ok(())
    }
}

/// Shared context: a realization plus memo tables for transport matrices and
/// hom-space bases. Everything inside is immutable math; the mutexes only
/// guard memo insertion, so concurrent use is safe.
pub struct Ctx {
    pub real: Arc<Realization>,
    transport_mats: Mutex<HashMap<(Vec<u8>, usize), Arc<Vec<Vec<(Mask, Poly)>>>>>,
    unit_homs: Mutex<HashMap<(Vec<u8>, i64), Arc<Vec<Morphism>>>>,
    cups: Mutex<HashMap<Vec<u8>, Arc<Morphism>>>,
    caps: Mutex<HashMap<Vec<u8>, Arc<Morphism>>>,
}

impl Ctx {
    pub fn new(real: Realization) -> Self {
        Ctx {
            real: Arc::new(real),
            transport_mats: Mutex::new(HashMap::new()),
            unit_homs: Mutex::new(HashMap::new()),
            cups: Mutex::new(HashMap::new()),
            caps: Mutex::new(HashMap::new()),
        }
    }

    pub fn from_label(label: &str) -> Result<Self> {
        Ok(Ctx::new(Realization::from_label(label)?))
    }

    pub fn nvars(&self) -> usize {
        self.real.nvars()
    }

    /// Transport a left coefficient from the right: computes `rho_word(f) * col`
    /// where `rho` is the matrix of right multiplication by `f` in the 01-basis.
    pub fn transport_vec(
        &self,
        word: &[u8],
        f: &Poly,
        col: &BTreeMap<Mask, Poly>,
    ) -> BTreeMap<Mask, Poly> {
        let mut out = BTreeMap::new();
        if f.is_zero() || col.is_empty() {
            return out;
        }
        if word.is_empty() {
            for (m, p) in col {
                debug_assert_eq!(*m, 0);
                let v = p.mul(f);
                if !v.is_zero() {
                    out.insert(0, v);
                }
            }
            return out;
        }
        if f.is_constant() {
            let c = f.constant_term();
            for (m, p) in col {
                let v = p.scale(&c);
                if !v.is_zero() {
                    out.insert(*m, v);
                }
            }
            return out;
        }
        let r = word.len();
        let s = word[r - 1] as usize;
        let prefix = &word[..r - 1];
        let bit = 1u32 << (r - 1);
        let delta = self.real.delta(s);
        // split the column by the last slot
        let mut col0 = BTreeMap::new();
        let mut col1 = BTreeMap::new();
        for (m, p) in col {
            if m & bit == 0 {
                col0.insert(*m, p.clone());
            } else {
                col1.insert(*m & !bit, p.clone());
            }
        }
        // delta^e * f split through the last factor
        let g00 = self.real.pi_half(s, f);
        let g01 = self.real.demazure(s, f);
        let df = delta.mul(f);
        let g10 = self.real.pi_half(s, &df);
        let g11 = self.real.demazure(s, &df);
        let mut acc = |dst_bit: Mask, part: BTreeMap<Mask, Poly>, out: &mut BTreeMap<Mask, Poly>| {
            for (m, p) in part {
                let key = m | dst_bit;
                match out.get_mut(&key) {
                    Some(e) => {
                        let v = e.add(&p);
                        if v.is_zero() {
                            out.remove(&key);
                        } else {
                            *e = v;
                        }
                    }
                    None => {
                        out.insert(key, p);
                    }
                }
            }
        };
        acc(0, self.transport_vec(prefix, &g00, &col0), &mut out);
        acc(bit, self.transport_vec(prefix, &g01, &col0), &mut out);
        acc(0, self.transport_vec(prefix, &g10, &col1), &mut out);
        acc(bit, self.transport_vec(prefix, &g11, &col1), &mut out);
        out
    }

    /// Columns of the right-multiplication matrix by the variable `x_i`.
    fn transport_matrix(&self, word: &[u8], var: usize) -> Arc<Vec<Vec<(Mask, Poly)>>> {
        let key = (word.to_vec(), var);
        if let Some(m) = self.transport_mats.lock().unwrap().get(&key) {
            return m.clone();
        }
        let n = self.nvars();
        let f = Poly::var(n, var);
        let size = 1usize << word.len();
        let mut cols = Vec::with_capacity(size);
        for e in 0..size {
            let mut unit = BTreeMap::new();
            unit.insert(e as Mask, Poly::one(n));
            let col = self.transport_vec(word, &f, &unit);
            cols.push(col.into_iter().collect::<Vec<_>>());
        }
        let arc = Arc::new(cols);
        self.transport_mats.lock().unwrap().insert(key, arc.clone());
        arc
    }

    /// The matrix of right multiplication by `f` on a word object, as an
    /// endomorphism of degree `deg(f)`.
    pub fn right_mult(&self, obj: &BSObject, f: &Poly) -> Morphism {
        let deg = f.degree().unwrap_or(0);
        let mut out = Morphism::zero(obj.clone(), obj.clone(), deg);
        if f.is_zero() {
            return out;
        }
        let n = self.nvars();
        for e in 0..(1u32 << obj.len()) {
            let mut unit = BTreeMap::new();
            unit.insert(e, Poly::one(n));
            for (m, p) in self.transport_vec(&obj.word, f, &unit) {
                out.set_entry(m, e, p);
            }
        }
        out
    }

    /// Left multiplication by `f` (just scales every entry of the identity).
    pub fn left_mult(&self, obj: &BSObject, f: &Poly) -> Morphism {
        let deg = f.degree().unwrap_or(0);
        let mut out = Morphism::zero(obj.clone(), obj.clone(), deg);
        for e in 0..(1u32 << obj.len()) {
            out.set_entry(e, e, f.clone());
        }
        out
    }

    /// Tensor (horizontal) product of morphisms. The right factor's
    /// coefficients are transported through the left factor's target word,
    /// since all coefficients are stored on the far left.
    pub fn tensor(&self, f: &Morphism, g: &Morphism) -> Morphism {
        let src = f.src.concat(&g.src);
        let tgt = f.tgt.concat(&g.tgt);
        let lw = f.tgt.len();
        let mut out = Morphism::zero(src, tgt, f.deg + g.deg);
        let n = self.nvars();
        for ((gr, gc), q2) in &g.entries {
            for ((fr, fc), p) in &f.entries {
                // transport q through the f-target word, applied to unit col fr
                let mut unit = BTreeMap::new();
                unit.insert(*fr, Poly::one(n));
                let moved = if q2.is_constant() {
                    let mut m = BTreeMap::new();
                    m.insert(*fr, q2.clone());
                    m
                } else {
                    self.transport_vec(&f.tgt.word, q2, &unit)
                };
                for (m, t) in moved {
                    let prod = t.mul(p);
                    if prod.is_zero() {
                        continue;
                    }
                    let rr = m | (gr << lw);
                    let cc = fc | (gc << f.src.len());
                    let np = match out.entries.get(&(rr, cc)) {
                        Some(e) => e.add(&prod),
                        None => prod,
                    };
                    out.set_entry(rr, cc, np);
                }
            }
        }
        out
    }

    // --- generators ---

    /// Counit dot: `B_s -> 1`, degree +1.
    pub fn eps(&self, s: usize) -> Morphism {
        let n = self.nvars();
        let mut m = Morphism::zero(BSObject::new(vec![s as u8], 0), BSObject::unit(), 1);
        m.set_entry(0, 0, Poly::one(n));
        m.set_entry(0, 1, self.real.delta(s));
        m
    }

    /// Unit dot: `1 -> B_s`, degree +1.
    pub fn eta(&self, s: usize) -> Morphism {
        let n = self.nvars();
        let mut m = Morphism::zero(BSObject::unit(), BSObject::new(vec![s as u8], 0), 1);
        m.set_entry(0, 0, self.real.delta(s));
        m.set_entry(1, 0, Poly::one(n));
        m
    }

    /// Merge trivalent vertex: `B_s B_s -> B_s`, degree -1.
    pub fn mu(&self, s: usize) -> Morphism {
        let n = self.nvars();
        let mut m = Morphism::zero(
            BSObject::new(vec![s as u8, s as u8], 0),
            BSObject::new(vec![s as u8], 0),
            -1,
        );
        m.set_entry(0, 0b01, Poly::one(n));
        m.set_entry(1, 0b11, Poly::one(n));
        m
    }

    /// Split trivalent vertex: `B_s -> B_s B_s`, degree -1.
    pub fn delta_gen(&self, s: usize) -> Morphism {
        let n = self.nvars();
        let mut m = Morphism::zero(
            BSObject::new(vec![s as u8], 0),
            BSObject::new(vec![s as u8, s as u8], 0),
            -1,
        );
        m.set_entry(0b00, 0, Poly::one(n));
        m.set_entry(0b10, 1, Poly::one(n));
        m
    }

    /// Cup: `1 -> B_s B_s`, degree 0.
    pub fn cup(&self, s: usize) -> Morphism {
        self.delta_gen(s).compose(&self.eta(s))
    }

    /// Cap: `B_s B_s -> 1`, degree 0.
    pub fn cap(&self, s: usize) -> Morphism {
        self.eps(s).compose(&self.mu(s))
    }

    /// Nested cup over a word: `1 -> B_{w . rev(w)}`, degree 0.
    pub fn cup_nest(&self, word: &[u8]) -> Arc<Morphism> {
        if let Some(m) = self.cups.lock().unwrap().get(word) {
            return m.clone();
        }
        let n = self.nvars();
        let m = if word.is_empty() {
            Morphism::identity(&BSObject::unit(), n)
        } else {
            let r = word.len();
            let s = word[r - 1] as usize;
            let prefix = &word[..r - 1];
            let inner = self.cup_nest(prefix);
            let idp = Morphism::identity(&BSObject::new(prefix.to_vec(), 0), n);
            let idr = Morphism::identity(
                &BSObject::new(prefix.iter().rev().cloned().collect(), 0),
                n,
            );
            let ins = self.tensor(&self.tensor(&idp, &self.cup(s)), &idr);
            ins.compose(&inner)
        };
        let arc = Arc::new(m);
        self.cups.lock().unwrap().insert(word.to_vec(), arc.clone());
        arc
    }

    /// Nested cap over a word: `B_{rev(w) . w} -> 1`, degree 0.
    pub fn cap_nest(&self, word: &[u8]) -> Arc<Morphism> {
        if let Some(m) = self.caps.lock().unwrap().get(word) {
            return m.clone();
        }
        let n = self.nvars();
        let m = if word.is_empty() {
            Morphism::identity(&BSObject::unit(), n)
        } else {
            let r = word.len();
            let s = word[r - 1] as usize;
            let prefix = &word[..r - 1];
            let inner = self.cap_nest(prefix);
            let ids = Morphism::identity(&BSObject::new(vec![word[r - 1]], 0), n);
            let mid = self.tensor(&self.tensor(&ids, &inner), &ids);
            self.cap(s).compose(&mid)
        };
        let arc = Arc::new(m);
        self.caps.lock().unwrap().insert(word.to_vec(), arc.clone());
        arc
    }

    /// Basis of bimodule maps `1 -> B_word` of raw degree `deg`
    /// (both objects at shift zero).
    pub fn unit_hom_basis(&self, word: &[u8], deg: i64) -> Arc<Vec<Morphism>> {
        let key = (word.to_vec(), deg);
        if let Some(b) = self.unit_homs.lock().unwrap().get(&key) {
            return b.clone();
        }
        let basis = self.solve_unit_homs(word, deg);
        let arc = Arc::new(basis);
        self.unit_homs.lock().unwrap().insert(key, arc.clone());
        arc
    }

    fn solve_unit_homs(&self, word: &[u8], deg: i64) -> Vec<Morphism> {
        let n = self.nvars();
        let r = word.len() as i64;
        // unknowns: (mask E, monomial) with poly degree deg + r - 2|E|
        let mut unknowns: Vec<(Mask, Mono)> = Vec::new();
        let mut unknown_idx: BTreeMap<(Mask, Mono), usize> = BTreeMap::new();
        for e in 0..(1u32 << word.len()) {
            let d = deg + r - 2 * e.count_ones() as i64;
            if d < 0 || d % 2 != 0 {
                continue;
            }
            for mono in monomials(n, (d / 2) as usize) {
                unknown_idx.insert((e, mono.clone()), unknowns.len());
                unknowns.push((e, mono));
            }
        }
        if unknowns.is_empty() {
            return Vec::new();
        }
        // constraints per variable: rho(x_i) c = x_i c
        let mut row_idx: BTreeMap<(usize, Mask, Mono), usize> = BTreeMap::new();
        let mut rows: Vec<Vec<(usize, Q)>> = Vec::new();
        let add = |key: (usize, Mask, Mono),
                       col: usize,
                       v: Q,
                       row_idx: &mut BTreeMap<(usize, Mask, Mono), usize>,
                       rows: &mut Vec<Vec<(usize, Q)>>| {
            let i = *row_idx.entry(key).or_insert_with(|| {
                rows.push(Vec::new());
                rows.len() - 1
            });
            rows[i].push((col, v));
        };
        for var in 0..n {
            let mat = self.transport_matrix(word, var);
            for (col, (e, mono)) in unknowns.iter().enumerate() {
                // rho(x) applied to mono * b_e: coefficients transport, the
                // monomial rides along as a left scalar
                for (e2, p) in &mat[*e as usize] {
                    for (pm, pc) in p.terms() {
                        let mut m2 = mono.clone();
                        for (a, b) in m2.iter_mut().zip(pm.iter()) {
                            *a += *b;
                        }
                        add((var, *e2, m2), col, pc.clone(), &mut row_idx, &mut rows);
                    }
                }
                // minus x * c
                let mut m2 = mono.clone();
                m2[var] += 1;
                add((var, *e, m2), col, -Q::one(), &mut row_idx, &mut rows);
            }
        }
        let mut mat = SparseMat::new(unknowns.len());
        for row in rows {
            mat.push_row(row);
        }
        let kernel = kernel_basis(&mat);
        kernel
            .into_iter()
            .map(|v| {
                let mut m = Morphism::zero(BSObject::unit(), BSObject::new(word.to_vec(), 0), deg);
                for (i, c) in v.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let (e, mono) = &unknowns[i];
                    let add_p = Poly::monomial(n, mono.clone(), c.clone());
                    let np = match m.entries.get(&(*e, 0)) {
                        Some(old) => old.add(&add_p),
                        None => add_p,
                    };
                    m.set_entry(*e, 0, np);
                }
                m
            })
            .collect()
    }

    /// Basis of the space of degree-`deg` bimodule morphisms `src -> tgt`.
    ///
    /// Computed by bending: a map `B_w -> B_v` corresponds to a map
    /// `1 -> B_{v . rev(w)}` via the nested cups and caps, which reduces
    /// everything to the centrality solver above.
    pub fn hom_basis(&self, src: &BSObject, tgt: &BSObject, deg: i64) -> Vec<Morphism> {
        let kappa = (tgt.shift - src.shift) as i64;
        let raw = deg + kappa;
        if src.is_empty() {
            return self
                .unit_hom_basis(&tgt.word, raw)
                .iter()
                .map(|m| m.retag(src.shift, tgt.shift))
                .collect();
        }
        let mut u = tgt.word.clone();
        u.extend(src.word.iter().rev());
        let n = self.nvars();
        let cands = self.unit_hom_basis(&u, raw);
        let id_src0 = Morphism::identity(&BSObject::new(src.word.clone(), 0), n);
        let id_tgt0 = Morphism::identity(&BSObject::new(tgt.word.clone(), 0), n);
        let capn = self.cap_nest(&src.word);
        let unbend = |c: &Morphism| -> Morphism {
            let step1 = self.tensor(c, &id_src0); // B_w -> B_{v rev(w) w}
            let step2 = self.tensor(&id_tgt0, &capn); // B_{v rev(w) w} -> B_v
            step2.compose(&step1).retag(src.shift, tgt.shift)
        };
        cands.iter().map(unbend).collect()
    }

    /// Dimension of the degree-`deg` hom space.
    pub fn hom_dim(&self, src: &BSObject, tgt: &BSObject, deg: i64) -> usize {
        let kappa = (tgt.shift - src.shift) as i64;
        let mut u = tgt.word.clone();
        u.extend(src.word.iter().rev());
        self.unit_hom_basis(&u, deg + kappa).len()
    }

    /// The 2m-valent generator: the unique degree-0 map between the two
    /// alternating words of length `m_{st}`, normalized so that the
    /// (empty, empty) entry is 1.
    pub fn mvalent(&self, s: usize, t: usize) -> Result<Morphism> {
        let m = self.real.coxeter[s][t] as usize;
        let alt = |a: usize, b: usize| -> Vec<u8> {
            (0..m).map(|i| if i % 2 == 0 { a as u8 } else { b as u8 }).collect()
        };
        let src = BSObject::new(alt(s, t), 0);
        let tgt = BSObject::new(alt(t, s), 0);
        let basis = self.hom_basis(&src, &tgt, 0);
        if basis.len() != 1 {
            return Err(Error::HomDimension {
                expected: 1,
                got: basis.len(),
                context: format!("degree-0 hom space for the {}-valent vertex", 2 * m),
            });
        }
        let mut v = basis.into_iter().next().unwrap();
        let c = v
            .entry(0, 0)
            .map(|p| p.constant_term())
            .unwrap_or_else(Q::zero);
        if c.is_zero() {
            return Err(Error::ZeroNormalization(format!("pi_{{{s},{t}}}")));
        }
        v = v.scale(&(Q::one() / c));
        Ok(v)
    }

    /// Check right-linearity of a morphism against every ring variable.
    pub fn is_right_linear(&self, m: &Morphism) -> bool {
        for var in 0..self.nvars() {
            let x = Poly::var(self.nvars(), var);
            let lhs = m.compose(&self.right_mult(&m.src, &x));
            let rhs = self.right_mult(&m.tgt, &x).compose(m);
            if lhs != rhs {
                return false;
            }
        }
        true
    }

    /// Express `m` in the given basis; returns coordinates or None.
    pub fn express_in_basis(&self, m: &Morphism, basis: &[Morphism]) -> Option<Vec<Q>> {
        if basis.is_empty() {
            return if m.is_zero() { Some(vec![]) } else { None };
        }
        // flatten over the union support of (tgt mask, src mask, monomial)
        let mut keys: BTreeMap<(Mask, Mask, Mono), usize> = BTreeMap::new();
        let collect = |mm: &Morphism, keys: &mut BTreeMap<(Mask, Mask, Mono), usize>| {
            for ((r, c), p) in &mm.entries {
                for (mono, _) in p.terms() {
                    let next = keys.len();
                    keys.entry((*r, *c, mono.clone())).or_insert(next);
                }
            }
        };
        for b in basis {
            collect(b, &mut keys);
        }
        collect(m, &mut keys);
        let nrows = keys.len();
        let mut rows: Vec<Vec<(usize, Q)>> = vec![Vec::new(); nrows];
        let mut rhs = vec![Q::zero(); nrows];
        for (j, b) in basis.iter().enumerate() {
            for ((r, c), p) in &b.entries {
                for (mono, coef) in p.terms() {
                    let i = keys[&(*r, *c, mono.clone())];
                    rows[i].push((j, coef.clone()));
                }
            }
        }
        for ((r, c), p) in &m.entries {
            for (mono, coef) in p.terms() {
                let i = keys[&(*r, *c, mono.clone())];
                rhs[i] = coef.clone();
            }
        }
        let mut mat = SparseMat::new(basis.len());
        for row in rows {
            mat.push_row(row);
        }
        solve(&mat, &rhs)
    }
}

/// All monomials of the given total degree, in deterministic order.
pub fn monomials(nvars: usize, total: usize) -> Vec<Mono> {
    fn rec(nvars: usize, total: usize, acc: &mut Mono, out: &mut Vec<Mono>) {
        if acc.len() == nvars - 1 {
            let mut m = acc.clone();
            m.push(total as u16);
            out.push(m);
            return;
        }
        for k in 0..=total {
            acc.push(k as u16);
            rec(nvars, total - k, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    if nvars == 0 {
        if total == 0 {
            out.push(vec![]);
        }
        return out;
    }
    rec(nvars, total, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{q, qi};

    fn ctx(label: &str) -> Ctx {
        Ctx::from_label(label).unwrap()
    }

    #[test]
    fn right_transport_single_letter() {
        let c = ctx("A2");
        let obj = BSObject::new(vec![0], 0);
        // constant: diagonal
        let m = c.right_mult(&obj, &Poly::constant(2, qi(7)));
        assert_eq!(m.entry(0, 0), Some(&Poly::constant(2, qi(7))));
        assert_eq!(m.entry(1, 1), Some(&Poly::constant(2, qi(7))));
        assert_eq!(m.entry(1, 0), None);
        // alpha_s: the (1 x 1) column is [0; 2]
        let a = c.real.alpha(0);
        let m = c.right_mult(&obj, &a);
        assert_eq!(m.entry(0, 0), None);
        assert_eq!(m.entry(1, 0), Some(&Poly::constant(2, qi(2))));
        // delta^2 entry back at (0,1): alpha^2/2... check f in R^s: diagonal
        let inv = a.mul(&a); // alpha_s^2 is s-invariant
        let m = c.right_mult(&obj, &inv);
        assert_eq!(m.entry(0, 0), Some(&inv));
        assert_eq!(m.entry(1, 1), Some(&inv));
        assert_eq!(m.entry(1, 0), None);
        assert_eq!(m.entry(0, 1), None);
    }

    #[test]
    fn barbell_relation() {
        let c = ctx("A2");
        for s in 0..2 {
            let barbell = c.eps(s).compose(&c.eta(s));
            let expect = c.left_mult(&BSObject::unit(), &c.real.alpha(s));
            assert_eq!(barbell, expect);
        }
    }

    #[test]
    fn polynomial_forcing() {
        // id f - s(f) id = demazure(f) (eta o eps) for a sample of f
        for label in ["A2", "B2"] {
            let c = ctx(label);
            let obj = BSObject::new(vec![0], 0);
            let fs = [
                c.real.alpha(0),
                c.real.alpha(1),
                c.real.alpha(0).mul(&c.real.alpha(1)),
            ];
            for f in &fs {
                let lhs = c
                    .right_mult(&obj, f)
                    .sub(&c.left_mult(&obj, &c.real.act_s(0, f)));
                let broken = c.eta(0).compose(&c.eps(0));
                let rhs = c.left_mult(&obj, &c.real.demazure(0, f)).compose(&broken);
                // degree bookkeeping differs; compare entries directly
                assert_eq!(lhs.entries, rhs.entries, "{label}: f={f}");
            }
        }
    }

    #[test]
    fn unit_relations_and_needle() {
        let c = ctx("A2");
        let s = 0;
        let idb = Morphism::identity(&BSObject::new(vec![0], 0), 2);
        // mu o (eta x id) = id
        let lhs = c.mu(s).compose(&c.tensor(&c.eta(s), &idb));
        assert_eq!(lhs.entries, idb.entries);
        // mu o (id x eta) = id
        let lhs = c.mu(s).compose(&c.tensor(&idb, &c.eta(s)));
        assert_eq!(lhs.entries, idb.entries);
        // (eps x id) o delta = id, (id x eps) o delta = id
        let lhs = c.tensor(&c.eps(s), &idb).compose(&c.delta_gen(s));
        assert_eq!(lhs.entries, idb.entries);
        let lhs = c.tensor(&idb, &c.eps(s)).compose(&c.delta_gen(s));
        assert_eq!(lhs.entries, idb.entries);
        // needle: mu o delta = 0
        assert!(c.mu(s).compose(&c.delta_gen(s)).is_zero());
    }

    #[test]
    fn frobenius_associativity() {
        let c = ctx("A2");
        let s = 0;
        let idb = Morphism::identity(&BSObject::new(vec![0], 0), 2);
        // (id x mu) o (delta x id) = delta o mu = (mu x id) o (id x delta)
        let a = c.tensor(&idb, &c.mu(s)).compose(&c.tensor(&c.delta_gen(s), &idb));
        let b = c.delta_gen(s).compose(&c.mu(s));
        let d = c.tensor(&c.mu(s), &idb).compose(&c.tensor(&idb, &c.delta_gen(s)));
        assert_eq!(a.entries, b.entries);
        assert_eq!(b.entries, d.entries);
    }

    #[test]
    fn zigzag_identities() {
        for label in ["A2", "B2"] {
            let c = ctx(label);
            for s in 0..2 {
                let idb = Morphism::identity(&BSObject::new(vec![s as u8], 0), 2);
                let lhs = c.tensor(&c.cap(s), &idb).compose(&c.tensor(&idb, &c.cup(s)));
                assert_eq!(lhs.entries, idb.entries, "{label} s={s} left zigzag");
                let lhs = c.tensor(&idb, &c.cap(s)).compose(&c.tensor(&c.cup(s), &idb));
                assert_eq!(lhs.entries, idb.entries, "{label} s={s} right zigzag");
            }
        }
    }

    #[test]
    fn generators_are_right_linear_and_homogeneous() {
        let c = ctx("B2");
        for s in 0..2 {
            for g in [c.eps(s), c.eta(s), c.mu(s), c.delta_gen(s), c.cup(s), c.cap(s)] {
                g.check_homogeneous().unwrap();
                assert!(c.is_right_linear(&g), "s={s}");
            }
        }
    }

    #[test]
    fn hom_basis_examples() {
        let c = ctx("A2");
        let unit = BSObject::unit();
        let bs = BSObject::new(vec![0], 0);
        // Hom(B_s, 1) in degree 1 is spanned by eps
        let basis = c.hom_basis(&bs, &unit, 1);
        assert_eq!(basis.len(), 1);
        let coords = c.express_in_basis(&c.eps(0), &basis).unwrap();
        assert_eq!(coords.len(), 1);
        assert!(!coords[0].is_zero());
        // Hom(1, 1) in degree 0 is spanned by the identity
        let basis = c.hom_basis(&unit, &unit, 0);
        assert_eq!(basis.len(), 1);
        // Hom(B_s, B_s) in degree -2 is zero
        assert_eq!(c.hom_basis(&bs, &bs, -2).len(), 0);
        // End(B_s) in degree 0 is one-dimensional
        assert_eq!(c.hom_basis(&bs, &bs, 0).len(), 1);
    }

    #[test]
    fn hom_basis_members_are_right_linear() {
        let c = ctx("A2");
        let src = BSObject::new(vec![0, 1], 0);
        let tgt = BSObject::new(vec![1, 0], 0);
        for d in [0i64, 1, 2] {
            for m in c.hom_basis(&src, &tgt, d) {
                m.check_homogeneous().unwrap();
                assert!(c.is_right_linear(&m));
            }
        }
    }

    #[test]
    fn duality_dim_symmetry() {
        let c = ctx("A2");
        let words: [&[u8]; 4] = [&[], &[0], &[0, 1], &[0, 1, 0]];
        for w in words {
            for v in words {
                for d in [-1i64, 0, 1, 2] {
                    let a = c.hom_dim(&BSObject::new(w.to_vec(), 0), &BSObject::new(v.to_vec(), 0), d);
                    let b = c.hom_dim(
                        &BSObject::new(v.iter().rev().cloned().collect(), 0),
                        &BSObject::new(w.iter().rev().cloned().collect(), 0),
                        d,
                    );
                    assert_eq!(a, b, "w={w:?} v={v:?} d={d}");
                }
            }
        }
    }

    #[test]
    fn mvalent_m2_and_m3() {
        // m=2 in I2(2): the braiding is invertible
        let c = ctx("I2(2)");
        let pi = c.mvalent(0, 1).unwrap();
        assert_eq!(pi.entry(0, 0), Some(&Poly::one(2)));
        let pi_back = c.mvalent(1, 0).unwrap();
        let comp = pi_back.compose(&pi);
        assert_eq!(comp.entry(0, 0), Some(&Poly::one(2)));
        // m=3 in A2: degree-0 hom space between the alternating words is 1-dim
        let c = ctx("A2");
        let src = BSObject::new(vec![0, 1, 0], 0);
        let tgt = BSObject::new(vec![1, 0, 1], 0);
        assert_eq!(c.hom_basis(&src, &tgt, 0).len(), 1);
        let pi = c.mvalent(0, 1).unwrap();
        assert_eq!(pi.entry(0, 0), Some(&Poly::one(2)));
        assert!(c.is_right_linear(&pi));
        // composite with the reverse vertex is identity on the (0,0) entry
        let comp = c.mvalent(1, 0).unwrap().compose(&pi);
        assert_eq!(comp.entry(0, 0), Some(&Poly::one(2)));
    }

    #[test]
    fn mvalent_m4() {
        let c = ctx("B2");
        let pi = c.mvalent(0, 1).unwrap();
        assert_eq!(pi.entry(0, 0), Some(&Poly::one(2)));
        assert!(c.is_right_linear(&pi));
        let comp = c.mvalent(1, 0).unwrap().compose(&pi);
        assert_eq!(comp.entry(0, 0), Some(&Poly::one(2)));
    }

    #[test]
    fn tensor_interchange_degree_zero() {
        let c = ctx("A2");
        // (f x g) o (f' x g') = (f o f') x (g o g') without sign here
        let f = c.mu(0);
        let fp = c.tensor(&c.eta(0), &Morphism::identity(&BSObject::new(vec![0], 0), 2));
        let g = c.eps(1);
        let gp = c.eta(1);
        let lhs = c.tensor(&f, &g).compose(&c.tensor(&fp, &gp));
        let rhs = c.tensor(&f.compose(&fp), &g.compose(&gp));
        assert_eq!(lhs.entries, rhs.entries);
    }

    #[test]
    fn tensor_eps_eps_on_empty_mask() {
        let c = ctx("A2");
        let t = c.tensor(&c.eps(0), &c.eps(1));
        assert_eq!(t.entry(0, 0), Some(&Poly::one(2)));
    }

    #[test]
    fn monomial_enumeration() {
        assert_eq!(monomials(2, 2).len(), 3);
        assert_eq!(monomials(3, 4).len(), 15);
        assert_eq!(monomials(2, 0), vec![vec![0, 0]]);
    }

    #[test]
    fn mult_by_half_roots() {
        let c = ctx("A2");
        let obj = BSObject::new(vec![0], 0);
        // (1 x 1) * delta_s = pi(delta)(1 x 1) + d(delta)(1 x delta) = 0 + 1*(1 x delta)
        let m = c.right_mult(&obj, &c.real.delta(0));
        assert_eq!(m.entry(1, 0), Some(&Poly::one(2)));
        assert_eq!(m.entry(0, 0), None);
        // and (1 x delta) * delta = delta^2 (1 x 1)
        let d2 = c.real.delta(0).mul(&c.real.delta(0));
        assert_eq!(m.entry(0, 1), Some(&d2));
        assert_eq!(m.entry(1, 1), None);
        let _ = q(1, 2);
    }
}
