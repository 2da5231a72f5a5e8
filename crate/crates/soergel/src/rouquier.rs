//! Rouquier complexes, the residue calculus, canonical maps, and the strip
//! solver for nullhomotopy questions on large tensor products.
//!
//! Complexes for braid words are built as left-associated tensor chains of
//! the two-term elementary factors. Equality-of-braids questions are never
//! decided combinatorially: the homological machinery itself (existence of a
//! residue-1 chain map, collapse of `F(v u^{-1})` to the unit) is the test.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};

use crate::bimodule::{BSObject, Ctx, Morphism};
use crate::complex::{
    apply_segment, nullhomotopy_direct, tensor_complex, ChainElement, ChainFactors, Complex,
};
use crate::error::{Error, Result};
use crate::minimize::{minimize, Equivalence};
use crate::poly::{Poly, Q};

/// A letter of a tensor chain: an elementary Rouquier factor or a word object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    Pos(u8),
    Neg(u8),
    Bs(u8),
}

impl Letter {
    pub fn inverse(&self) -> Letter {
        match self {
            Letter::Pos(s) => Letter::Neg(*s),
            Letter::Neg(s) => Letter::Pos(*s),
            Letter::Bs(s) => Letter::Bs(*s),
        }
    }

    pub fn exponent(&self) -> i32 {
        match self {
            Letter::Pos(_) => 1,
            Letter::Neg(_) => -1,
            Letter::Bs(_) => 0,
        }
    }
}

/// A braid word: a signed sequence of simple reflections.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BraidWord(pub Vec<(u8, bool)>);

impl BraidWord {
    pub fn positive(word: &[u8]) -> Self {
        BraidWord(word.iter().map(|&s| (s, true)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Exponent sum: +1 per positive letter, -1 per negative letter.
    pub fn exponent(&self) -> i32 {
        self.0.iter().map(|(_, pos)| if *pos { 1 } else { -1 }).sum()
    }

    pub fn is_positive(&self) -> bool {
        self.0.iter().all(|(_, pos)| *pos)
    }

    pub fn inverse(&self) -> BraidWord {
        BraidWord(self.0.iter().rev().map(|(s, pos)| (*s, !pos)).collect())
    }

    pub fn concat(&self, other: &BraidWord) -> BraidWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        BraidWord(v)
    }

    pub fn letters(&self) -> Vec<Letter> {
        self.0
            .iter()
            .map(|(s, pos)| if *pos { Letter::Pos(*s) } else { Letter::Neg(*s) })
            .collect()
    }

    /// Image in the Weyl group (by index into the realization's element list).
    pub fn weyl_image(&self, ctx: &Ctx) -> usize {
        let mut w = ctx.real.identity_index();
        for (s, _) in &self.0 {
            w = ctx.real.right_descent_step(w, *s as usize);
        }
        w
    }

    /// Parse strings like "s1 s2 s1" and "s1 s2^-1".
    pub fn parse(s: &str) -> Result<BraidWord> {
        let mut out = Vec::new();
        for tok in s.split_whitespace() {
            let tok = tok.trim();
            let body = tok
                .strip_prefix('s')
                .ok_or_else(|| Error::MalformedFile(format!("bad braid letter '{tok}'")))?;
            let (idx, positive) = match body.split_once('^') {
                Some((i, "-1")) => (i, false),
                Some((i, "1")) => (i, true),
                Some((_, p)) => {
                    return Err(Error::MalformedFile(format!("bad power '{p}' in '{tok}'")))
                }
                None => (body, true),
            };
            let i: usize = idx
                .parse()
                .map_err(|_| Error::MalformedFile(format!("bad braid letter '{tok}'")))?;
            if i == 0 {
                return Err(Error::MalformedFile("letters are 1-based".into()));
            }
            out.push(((i - 1) as u8, positive));
        }
        Ok(BraidWord(out))
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(s, pos)| {
                if *pos {
                    format!("s{}", s + 1)
                } else {
                    format!("s{}^-1", s + 1)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl fmt::Debug for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BraidWord({self})")
    }
}

/// Pairing data for one letter: the collapse of inverse-then-letter and
/// letter-then-inverse to the unit, plus the zigzag normalization.
pub struct LetterPair {
    /// ev: inv(x) (x) x -> 1 and coev: 1 -> inv(x) (x) x, with homotopy
    pub ev: ChainElement,
    pub coev: ChainElement,
    /// ev2: x (x) inv(x) -> 1 (used when un-stripping)
    pub ev2: ChainElement,
    /// zigzag (ev2 (x) id) o (id (x) coev) = c id + d(z) on the letter complex
    pub zz_c: Q,
    pub zz_z: ChainElement,
}

/// Memoized per-realization data for braid machinery.
pub struct BraidCache {
    letters: Mutex<HashMap<Letter, Arc<Complex>>>,
    pairs: Mutex<HashMap<Letter, Arc<LetterPair>>>,
}

impl BraidCache {
    pub fn new() -> Self {
        BraidCache { letters: Mutex::new(HashMap::new()), pairs: Mutex::new(HashMap::new()) }
    }
}

impl Default for BraidCache {
    fn default() -> Self {
        Self::new()
    }
}

/// The elementary complex of a letter: `(B_s -> 1(1))` for a positive letter,
/// `(1(-1) -> B_s)` for a negative one, a single word object for `Bs`.
pub fn letter_complex(ctx: &Ctx, cache: &BraidCache, letter: Letter) -> Arc<Complex> {
    if let Some(c) = cache.letters.lock().unwrap().get(&letter) {
        return c.clone();
    }
    let cxe = match letter {
        Letter::Pos(s) => {
            let mut groups = std::collections::BTreeMap::new();
            groups.insert(0, vec![BSObject::new(vec![s], 0)]);
            groups.insert(1, vec![BSObject::new(vec![], 1)]);
            let mut diff = std::collections::BTreeMap::new();
            diff.insert((0, 0, 0), ctx.eps(s as usize).retag(0, 1));
            Complex { groups, diff }
        }
        Letter::Neg(s) => {
            let mut groups = std::collections::BTreeMap::new();
            groups.insert(-1, vec![BSObject::new(vec![], -1)]);
            groups.insert(0, vec![BSObject::new(vec![s], 0)]);
            let mut diff = std::collections::BTreeMap::new();
            diff.insert((-1, 0, 0), ctx.eta(s as usize).retag(-1, 0));
            Complex { groups, diff }
        }
        Letter::Bs(s) => Complex::object(BSObject::new(vec![s], 0)),
    };
    let arc = Arc::new(cxe);
    cache.letters.lock().unwrap().insert(letter, arc.clone());
    arc
}

/// Pairing data for a letter, built from minimization (for Rouquier factors)
/// or the strict cup/cap Frobenius structure (for word factors).
pub fn letter_pair(ctx: &Ctx, cache: &BraidCache, letter: Letter) -> Arc<LetterPair> {
    if let Some(p) = cache.pairs.lock().unwrap().get(&letter) {
        return p.clone();
    }
    let n = ctx.nvars();
    let fx = letter_complex(ctx, cache, letter);
    let finv = letter_complex(ctx, cache, letter.inverse());
    let pair = match letter {
        Letter::Bs(s) => {
            let prod = Arc::new(tensor_complex(ctx, &finv, &fx));
            let unit = Arc::new(Complex::unit());
            let mut ev = ChainElement::zero(prod.clone(), unit.clone(), 0, 0);
            ev.set_block(0, 0, 0, ctx.cap(s as usize));
            let mut coev = ChainElement::zero(unit.clone(), prod.clone(), 0, 0);
            coev.set_block(0, 0, 0, ctx.cup(s as usize));
            let prod2 = Arc::new(tensor_complex(ctx, &fx, &finv));
            let mut ev2 = ChainElement::zero(prod2, unit, 0, 0);
            ev2.set_block(0, 0, 0, ctx.cap(s as usize));
            LetterPair {
                ev,
                coev,
                ev2,
                zz_c: Q::one(),
                zz_z: ChainElement::zero(fx.clone(), fx.clone(), -1, 0),
            }
        }
        _ => {
            let prod = Arc::new(tensor_complex(ctx, &finv, &fx));
            let (m, eq) = minimize(ctx, &prod);
            assert!(m.is_unit(), "inverse pair must collapse to the unit");
            let prod2 = Arc::new(tensor_complex(ctx, &fx, &finv));
            let (m2, eq2) = minimize(ctx, &prod2);
            assert!(m2.is_unit(), "inverse pair must collapse to the unit");
            // zigzag: (ev2 x id) o (id x coev): F -> F
            let chain_x = ChainFactors::single(&fx);
            let seg_empty = ChainFactors::new(ctx, &[]);
            let seg_pair = ChainFactors::new(ctx, &[finv.clone(), fx.clone()]);
            let mid_chain = ChainFactors::new(ctx, &[fx.clone(), finv.clone(), fx.clone()]);
            let ins = apply_segment(
                ctx,
                &chain_x,
                1,
                0,
                &eq.from,
                &seg_empty,
                &seg_pair,
                &mid_chain,
            );
            let seg_pair2 = ChainFactors::new(ctx, &[fx.clone(), finv.clone()]);
            let zz = apply_segment(
                ctx,
                &mid_chain,
                0,
                2,
                &eq2.to,
                &seg_pair2,
                &seg_empty,
                &chain_x,
            )
            .compose(&ins);
            // zz = c id + d(z): solve for c and z
            let idx = ChainElement::identity(&fx, n);
            let (c, z) = split_off_identity(ctx, &zz, &idx)
                .expect("zigzag must be homotopic to a multiple of the identity");
            assert!(!c.is_zero(), "zigzag scalar must be invertible");
            LetterPair { ev: eq.to, coev: eq.from, ev2: eq2.to, zz_c: c, zz_z: z }
        }
    };
    let arc = Arc::new(pair);
    cache.pairs.lock().unwrap().insert(letter, arc.clone());
    arc
}

/// Write `f = c * g + d(z)`: find the scalar and witness if possible.
pub fn split_off_identity(
    ctx: &Ctx,
    f: &ChainElement,
    g: &ChainElement,
) -> Option<(Q, ChainElement)> {
    use crate::complex::ElementSpace;
    use crate::solve::{solve, SparseMat};
    let space = ElementSpace::new(ctx, &f.src, &f.tgt, f.hdeg - 1, f.sdeg);
    let target = ElementSpace::new(ctx, &f.src, &f.tgt, f.hdeg, f.sdeg);
    let fc = target.coords(ctx, f)?;
    let gc = target.coords(ctx, g)?;
    let dmat = space.d_matrix(ctx, &target);
    // unknowns: coefficients of h plus the scalar c: [d | g] x = f
    let mut mat = SparseMat::new(space.dim + 1);
    for (i, row) in dmat.rows.iter().enumerate() {
        let mut r = row.clone();
        if !gc[i].is_zero() {
            r.push((space.dim, gc[i].clone()));
        }
        mat.push_row(r);
    }
    let sol = solve(&mat, &fc)?;
    let c = sol[space.dim].clone();
    let z = space.element(&sol[..space.dim]);
    Some((c, z))
}

/// The Rouquier complex of a braid word (left-associated tensor chain).
pub fn rouquier(ctx: &Ctx, cache: &BraidCache, word: &BraidWord) -> ChainFactors {
    let factors: Vec<Arc<Complex>> = word
        .letters()
        .iter()
        .map(|l| letter_complex(ctx, cache, *l))
        .collect();
    ChainFactors::new(ctx, &factors)
}

/// Locate the unique identity summand (empty-word object) of a Rouquier
/// tensor complex: it sits at homological degree and shift both equal to the
/// exponent of the braid word.
pub fn identity_summand(x: &Complex) -> Option<(i32, usize)> {
    let mut found = None;
    for (i, g) in &x.groups {
        for (idx, o) in g.iter().enumerate() {
            if o.word.is_empty() {
                if found.is_some() {
                    return None;
                }
                found = Some((*i, idx));
            }
        }
    }
    found
}

/// The residue of a morphism between Rouquier complexes: the constant
/// coefficient of its matrix entry between the two identity summands.
pub fn res(f: &ChainElement) -> Result<Q> {
    let (si, sidx) = identity_summand(&f.src)
        .ok_or_else(|| Error::SolverInconsistent("no identity summand in source".into()))?;
    let (ti, tidx) = identity_summand(&f.tgt)
        .ok_or_else(|| Error::SolverInconsistent("no identity summand in target".into()))?;
    if ti - si != f.hdeg {
        return Err(Error::DegreeMismatch(format!(
            "residue undefined: summand degrees {si} -> {ti} vs element degree {}",
            f.hdeg
        )));
    }
    Ok(f.block(si, tidx, sidx)
        .map(|m| m.entry(0, 0).map(|p| p.constant_term()).unwrap_or_else(Q::zero))
        .unwrap_or_else(Q::zero))
}

/// The canonical inclusion of the identity summand: `1 -> F(beta)` for a
/// positive braid word, of bidegree `(e, -e)`, with residue 1.
pub fn nu(ctx: &Ctx, cache: &BraidCache, word: &BraidWord) -> Result<ChainElement> {
    if !word.is_positive() {
        return Err(Error::NegativeLetter);
    }
    let n = ctx.nvars();
    let mut acc = ChainElement::identity(&Arc::new(Complex::unit()), n);
    for letter in word.letters() {
        let fx = letter_complex(ctx, cache, letter);
        let mut nus = ChainElement::zero(Arc::new(Complex::unit()), fx.clone(), 1, -1);
        let mut m = Morphism::zero(BSObject::unit(), BSObject::new(vec![], 1), -1);
        m.set_entry(0, 0, Poly::one(n));
        nus.set_block(0, 0, 0, m);
        acc = ChainElement::tensor(ctx, &acc, &nus);
    }
    debug_assert!(acc.is_closed());
    debug_assert_eq!(res(&acc)?, Q::one());
    Ok(acc)
}

/// Stage data of the reduction chain for `F(v . u^{-1})`-style cascades.
pub struct ReductionStage {
    /// the letter stripped at this stage
    pub letter: Letter,
    /// tensor of the previous small model with the inverse letter
    pub widened: ChainFactors,
    /// minimization of the widened complex
    pub eq: Equivalence,
}

/// A chain of one-letter reductions: starting from `seed`, repeatedly tensor
/// with the inverse of the next letter of `strip` (consumed from the end)
/// and minimize.
pub struct ReductionChain {
    pub seed: Arc<Complex>,
    pub stages: Vec<ReductionStage>,
}

impl ReductionChain {
    /// Final small model.
    pub fn last(&self) -> Arc<Complex> {
        self.stages
            .last()
            .map(|s| s.eq.small.clone())
            .unwrap_or_else(|| self.seed.clone())
    }
}

/// Build the reduction chain for `seed (x) inv(strip[m-1]) (x) ... (x) inv(strip[0])`.
pub fn reduction_chain(
    ctx: &Ctx,
    cache: &BraidCache,
    seed: &Arc<Complex>,
    strip: &[Letter],
) -> ReductionChain {
    let mut stages = Vec::new();
    let mut cur = seed.clone();
    for letter in strip.iter().rev() {
        let inv = letter_complex(ctx, cache, letter.inverse());
        let widened = ChainFactors::new(ctx, &[cur.clone(), inv]);
        let (small, eq) = minimize(ctx, &widened.product);
        stages.push(ReductionStage { letter: *letter, widened, eq });
        cur = small;
    }
    ReductionChain { seed: seed.clone(), stages }
}

/// Canonical map `F(u) -> F(v)` between Rouquier complexes of equal braids:
/// a closed bidegree-(0,0) homotopy equivalence with residue 1.
///
/// Constructed by zipping through the reduction chain of `F(v u^{-1})`; the
/// residue normalization fixes the scalar. Fails with `BraidMismatch` when
/// the reduction does not collapse to the unit (the words represent
/// different braids).
pub fn canonical_map(
    ctx: &Ctx,
    cache: &BraidCache,
    u: &BraidWord,
    v: &BraidWord,
) -> Result<ChainElement> {
    let u_letters = u.letters();
    let m = u_letters.len();
    let fv = rouquier(ctx, cache, v);
    // D_k := model of F(v . (u_{m-k+1}..u_m)^{-1}); D_m must be the unit
    let chain = reduction_chain(ctx, cache, &fv.product, &u_letters);
    let last = chain.last();
    if !last.is_unit() {
        return Err(Error::BraidMismatch(format!(
            "reduction of F({v} . ({u})^-1) has {} objects",
            last.num_objects()
        )));
    }
    let d_model = |k: usize| -> Arc<Complex> {
        if k == 0 {
            chain.seed.clone()
        } else {
            chain.stages[k - 1].eq.small.clone()
        }
    };
    // start: F(u) viewed as chain([D_m, u_1, ..., u_m]) (D_m is the unit, so
    // the products coincide); peel D_k one stage at a time
    let full_letters: Vec<Arc<Complex>> = u_letters
        .iter()
        .map(|l| letter_complex(ctx, cache, *l))
        .collect();
    let mut f = ChainElement::identity(&ChainFactors::new(ctx, &full_letters).product, ctx.nvars());
    for k in (1..=m).rev() {
        // x = u_{m-k+1} is the letter stage k-1 stripped
        let pos = m - k;
        let letter = u_letters[pos];
        let stage = &chain.stages[k - 1];
        debug_assert_eq!(stage.letter, letter);
        let pair = letter_pair(ctx, cache, letter);
        let fx = letter_complex(ctx, cache, letter);
        let finv = letter_complex(ctx, cache, letter.inverse());
        let dk = d_model(k);
        let dk1 = d_model(k - 1);
        let rest: Vec<Arc<Complex>> = u_letters[pos + 1..]
            .iter()
            .map(|l| letter_complex(ctx, cache, *l))
            .collect();
        // current chain: [D_k, x, rest]; note for k = m the D_m factor is the
        // unit so the product equals F(u)
        let mut cur_factors = if k == m { vec![] } else { vec![dk.clone()] };
        cur_factors.push(fx.clone());
        cur_factors.extend(rest.iter().cloned());
        let cur_chain = ChainFactors::new(ctx, &cur_factors);
        // (a) expand D_k -> [D_{k-1}, inv(x)] via the stage equivalence
        let mut mid_factors = vec![dk1.clone(), finv.clone(), fx.clone()];
        mid_factors.extend(rest.iter().cloned());
        let mid_chain = ChainFactors::new(ctx, &mid_factors);
        let seg_src = if k == m {
            ChainFactors::new(ctx, &[])
        } else {
            ChainFactors::single(&dk)
        };
        let seg_tgt = ChainFactors::new(ctx, &[dk1.clone(), finv.clone()]);
        let span = if k == m { 0 } else { 1 };
        // for k = m the expand map is `from`: 1 -> D_{m-1} (x) inv(x)
        let expand = apply_segment(
            ctx,
            &cur_chain,
            0,
            span,
            &stage.eq.from,
            &seg_src,
            &seg_tgt,
            &mid_chain,
        );
        // (b) contract [inv(x), x] at positions 1-2
        let mut out_factors = vec![dk1.clone()];
        out_factors.extend(rest.iter().cloned());
        let out_chain = ChainFactors::new(ctx, &out_factors);
        let seg_pair = ChainFactors::new(ctx, &[finv.clone(), fx.clone()]);
        let seg_unit = ChainFactors::new(ctx, &[]);
        let contract =
            apply_segment(ctx, &mid_chain, 1, 2, &pair.ev, &seg_pair, &seg_unit, &out_chain);
        f = contract.compose(&expand).compose(&f);
    }
    // f: F(u) -> D_0 = F(v)
    let r = res(&f)?;
    if r.is_zero() {
        return Err(Error::BraidMismatch(format!(
            "no residue-1 chain map F({u}) -> F({v})"
        )));
    }
    let f = f.scale(&(Q::one() / r));
    debug_assert!(f.is_closed());
    Ok(f)
}

/// Forward strip data for reducing a map `F(zeta) (x) A -> F(zeta) (x) A'`
/// to a small problem `A -> G`, with enough bookkeeping to transport
/// nullhomotopy witnesses backwards.
pub struct StripTrace {
    pub gammas: Vec<ChainElement>,
    pub stages: Vec<StripStage>,
    pub reduced: ChainElement,
}

pub struct StripStage {
    pub letter: Letter,
    /// source chains before the strip: [x_k, .., x_m, A-factors]
    pub src_chain: ChainFactors,
    /// source chain after the strip
    pub src_rest: ChainFactors,
    /// target before minimize: [inv(x_k), G_{k-1}]
    pub widened: ChainFactors,
    /// minimize equivalence of the widened target
    pub eq: Equivalence,
}

/// Strip the common leading Rouquier letters off `f: F(zeta)(x)A -> F(zeta)(x)A'`
/// (source factor list = `zeta ++ a_factors`, target = `zeta ++ aprime`).
///
/// Each step moves one source letter into the target as its inverse and
/// minimizes; for equal leading braids the inverse pair collapses and the
/// target never grows.
pub fn strip_forward(
    ctx: &Ctx,
    cache: &BraidCache,
    zeta: &[Letter],
    a_factors: &[Arc<Complex>],
    f: &ChainElement,
) -> StripTrace {
    let mut gammas = vec![f.clone()];
    let mut stages = Vec::new();
    let mut cur = f.clone();
    let mut target: Arc<Complex> = f.tgt.clone();
    for (k, letter) in zeta.iter().enumerate() {
        let pair = letter_pair(ctx, cache, *letter);
        let fx = letter_complex(ctx, cache, *letter);
        let finv = letter_complex(ctx, cache, letter.inverse());
        // source chain for this stage
        let mut src_factors: Vec<Arc<Complex>> = zeta[k..]
            .iter()
            .map(|l| letter_complex(ctx, cache, *l))
            .collect();
        src_factors.extend(a_factors.iter().cloned());
        let src_chain = ChainFactors::new(ctx, &src_factors);
        let rest_factors: Vec<Arc<Complex>> = src_factors[1..].to_vec();
        let src_rest = ChainFactors::new(ctx, &rest_factors);
        // widened target [inv(x_k), G_{k-1}]
        let widened = ChainFactors::new(ctx, &[finv.clone(), target.clone()]);
        // step A: insert coev at the front of the source:
        // [rest] -> [inv, x_k, rest]
        let mut mid_factors = vec![finv.clone(), fx.clone()];
        mid_factors.extend(rest_factors.iter().cloned());
        let mid_chain = ChainFactors::new(ctx, &mid_factors);
        let seg_empty = ChainFactors::new(ctx, &[]);
        let seg_pair = ChainFactors::new(ctx, &[finv.clone(), fx.clone()]);
        let ins = apply_segment(
            ctx,
            &src_rest,
            0,
            0,
            &pair.coev,
            &seg_empty,
            &seg_pair,
            &mid_chain,
        );
        // step B: whisker cur on the right of inv(x_k):
        // [inv, x_k, rest] -> [inv, G_{k-1}]
        let seg_src = ChainFactors::new(ctx, &src_factors);
        let seg_tgt = ChainFactors::single(&target);
        let wh = apply_segment(
            ctx,
            &mid_chain,
            1,
            src_factors.len(),
            &cur,
            &seg_src,
            &seg_tgt,
            &widened,
        );
        // step C: minimize the widened target
        let (small, eq) = minimize(ctx, &widened.product);
        cur = eq.to.compose(&wh.compose(&ins));
        target = small;
        gammas.push(cur.clone());
        stages.push(StripStage { letter: *letter, src_chain, src_rest, widened, eq });
    }
    StripTrace { gammas, stages, reduced: cur }
}

/// Transport a nullhomotopy witness for the reduced problem back to the
/// original one. `h_small` must satisfy `d(h_small) = trace.reduced`.
pub fn strip_backward(
    ctx: &Ctx,
    cache: &BraidCache,
    trace: &StripTrace,
    h_small: &ChainElement,
) -> ChainElement {
    let mut h = h_small.clone();
    for (k, stage) in trace.stages.iter().enumerate().rev() {
        let gamma_prev = &trace.gammas[k];
        let pair = letter_pair(ctx, cache, stage.letter);
        let fx = letter_complex(ctx, cache, stage.letter);
        let finv = letter_complex(ctx, cache, stage.letter.inverse());
        // R(gamma_prev): [rest] -> widened.product (steps A+B of the forward pass)
        let r_gamma = {
            let seg_empty = ChainFactors::new(ctx, &[]);
            let seg_pair = ChainFactors::new(ctx, &[finv.clone(), fx.clone()]);
            let mut mid_factors = vec![finv.clone(), fx.clone()];
            mid_factors.extend(stage.src_rest.factors.iter().cloned());
            let mid_chain = ChainFactors::new(ctx, &mid_factors);
            let ins = apply_segment(
                ctx,
                &stage.src_rest,
                0,
                0,
                &pair.coev,
                &seg_empty,
                &seg_pair,
                &mid_chain,
            );
            let seg_src = ChainFactors::new(ctx, &stage.src_chain.factors);
            let prev_target: Arc<Complex> = if k == 0 {
                trace.gammas[0].tgt.clone()
            } else {
                trace.stages[k - 1].eq.small.clone()
            };
            let seg_tgt = ChainFactors::single(&prev_target);
            let wh = apply_segment(
                ctx,
                &mid_chain,
                1,
                stage.src_chain.factors.len(),
                gamma_prev,
                &seg_src,
                &seg_tgt,
                &stage.widened,
            );
            wh.compose(&ins)
        };
        // U(g): un-strip: [x_k, rest] -> (target of g minus the inv-factor)
        let unstrip = |g: &ChainElement| -> ChainElement {
            // g: [rest] -> widened.product = [inv, G_{k-1}]-product
            // u1: whisker g on the right of x_k with target split [inv, G]:
            // [x_k, rest] -> [x_k, inv, G_{k-1}]
            let prev_target: Arc<Complex> = stage.widened.factors[1].clone();
            let seg_src = ChainFactors::new(ctx, &stage.src_rest.factors);
            let seg_tgt = ChainFactors::new(ctx, &[finv.clone(), prev_target.clone()]);
            let mut tri = vec![fx.clone(), finv.clone(), prev_target.clone()];
            let tri_chain = ChainFactors::new(ctx, &tri.drain(..).collect::<Vec<_>>());
            let u1 = apply_segment(
                ctx,
                &stage.src_chain,
                1,
                stage.src_rest.factors.len(),
                g,
                &seg_src,
                &seg_tgt,
                &tri_chain,
            );
            // u2: contract [x_k, inv] with ev2: -> [G_{k-1}]
            let seg_pair2 = ChainFactors::new(ctx, &[fx.clone(), finv.clone()]);
            let seg_empty = ChainFactors::new(ctx, &[]);
            let g_chain = ChainFactors::single(&prev_target);
            let u2 = apply_segment(
                ctx,
                &tri_chain,
                0,
                2,
                &pair.ev2,
                &seg_pair2,
                &seg_empty,
                &g_chain,
            );
            u2.compose(&u1)
        };
        let d1 = unstrip(&stage.eq.from.compose(&h));
        let d2 = unstrip(&stage.eq.h.compose(&r_gamma));
        // zigzag correction: gamma_prev o (z whiskered at position 0)
        let d3 = if pair.zz_z.is_zero() {
            ChainElement::zero(d1.src.clone(), d1.tgt.clone(), d1.hdeg, d1.sdeg)
        } else {
            let seg_x = ChainFactors::single(&fx);
            let zmap = apply_segment(
                ctx,
                &stage.src_chain,
                0,
                1,
                &pair.zz_z,
                &seg_x,
                &seg_x,
                &stage.src_chain,
            );
            gamma_prev.compose(&zmap)
        };
        let sign = if gamma_prev.hdeg % 2 != 0 { Q::one() } else { -Q::one() };
        let acc = d1.add(&d2).add(&d3.scale(&sign));
        h = acc.scale(&(Q::one() / pair.zz_c.clone()));
        debug_assert!(
            h.d().sub(gamma_prev).is_zero(),
            "strip unwind failed at stage {k}"
        );
    }
    h
}

/// Decide nullhomotopy for `f: F(zeta)(x)A -> F(zeta)(x)A'` by stripping the
/// common Rouquier prefix and solving the small reduced problem directly.
pub fn nullhomotopy_strip(
    ctx: &Ctx,
    cache: &BraidCache,
    zeta: &[Letter],
    a_factors: &[Arc<Complex>],
    f: &ChainElement,
) -> Option<ChainElement> {
    let trace = strip_forward(ctx, cache, zeta, a_factors, f);
    let h_small = nullhomotopy_direct(ctx, &trace.reduced)?;
    let h = strip_backward(ctx, cache, &trace, &h_small);
    assert!(h.d().sub(f).is_zero(), "strip witness verification failed");
    Some(h)
}

/// The explicit one-letter conjugation homotopy: on `F_s`, the component
/// `eta_s demazure(f): 1(1) -> B_s` satisfies `d(h) = s(f) id - id f`.
pub fn conjpoly_single(ctx: &Ctx, cache: &BraidCache, s: usize, f: &Poly) -> ChainElement {
    let fx = letter_complex(ctx, cache, Letter::Pos(s as u8));
    let deg = f.degree().unwrap_or(0);
    let mut h = ChainElement::zero(fx.clone(), fx.clone(), -1, deg - 2);
    let df = ctx.real.demazure(s, f);
    let m = ctx.left_mult(&BSObject::new(vec![s as u8], 0), &df).compose(&ctx.eta(s));
    h.set_block(1, 0, 0, m.retag(1, 0));
    h
}

/// A homotopy witnessing `act(w, f) id - id f ~ 0` on `F(beta)`, where `w`
/// is the Weyl image of the braid word.
pub fn conjpoly_homotopy(
    ctx: &Ctx,
    cache: &BraidCache,
    word: &BraidWord,
    f: &Poly,
    fbeta: &ChainFactors,
) -> Result<ChainElement> {
    let w = word.weyl_image(ctx);
    let wf = ctx.real.act(w, f);
    let x = &fbeta.product;
    let deg = f.degree().unwrap_or(0);
    let mut lhs = ChainElement::zero(x.clone(), x.clone(), 0, deg);
    for (i, g) in &x.groups {
        for (idx, obj) in g.iter().enumerate() {
            let leftm = ctx.left_mult(obj, &wf);
            let rightm = ctx.right_mult(obj, f);
            lhs.set_block(*i, idx, idx, leftm.sub(&rightm));
        }
    }
    debug_assert!(lhs.is_closed());
    nullhomotopy_strip(ctx, cache, &word.letters(), &[], &lhs)
        .ok_or_else(|| Error::SolverInconsistent("conjugation homotopy must exist".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::qi;

    fn setup(label: &str) -> (Ctx, BraidCache) {
        (Ctx::from_label(label).unwrap(), BraidCache::new())
    }

    #[test]
    fn braid_word_parsing() {
        let w = BraidWord::parse("s1 s2 s1").unwrap();
        assert_eq!(w.0, vec![(0, true), (1, true), (0, true)]);
        assert_eq!(w.exponent(), 3);
        let w = BraidWord::parse("s1 s2^-1").unwrap();
        assert_eq!(w.exponent(), 0);
        assert_eq!(w.to_string(), "s1 s2^-1");
        assert_eq!(w.inverse().to_string(), "s2 s1^-1");
        assert!(BraidWord::parse("t1").is_err());
    }

    #[test]
    fn rouquier_complex_shapes() {
        let (ctx, cache) = setup("A2");
        // empty word: the unit
        let f = rouquier(&ctx, &cache, &BraidWord::default());
        assert!(f.product.is_unit());
        // single positive letter
        let f = rouquier(&ctx, &cache, &BraidWord::parse("s1").unwrap());
        assert_eq!(f.product.num_objects(), 2);
        f.product.validate(&ctx).unwrap();
        // identity summand located at (e, e)
        let w = BraidWord::parse("s1 s2 s1").unwrap();
        let f = rouquier(&ctx, &cache, &w);
        f.product.validate(&ctx).unwrap();
        let (i, idx) = identity_summand(&f.product).unwrap();
        assert_eq!(i, 3);
        assert_eq!(f.product.group(i)[idx].shift, 3);
        // mixed word
        let w = BraidWord::parse("s1 s2^-1").unwrap();
        let f = rouquier(&ctx, &cache, &w);
        let (i, idx) = identity_summand(&f.product).unwrap();
        assert_eq!(i, 0);
        assert_eq!(f.product.group(i)[idx].shift, 0);
    }

    #[test]
    fn sigma_sigma_inverse_minimizes_to_unit() {
        let (ctx, cache) = setup("A2");
        let w = BraidWord::parse("s1 s1^-1").unwrap();
        let f = rouquier(&ctx, &cache, &w);
        let (m, eq) = minimize(&ctx, &f.product);
        assert!(m.is_unit());
        assert!(eq.verify(&ctx));
    }

    #[test]
    fn nu_examples() {
        let (ctx, cache) = setup("A2");
        let w = BraidWord::parse("s1").unwrap();
        let n1 = nu(&ctx, &cache, &w).unwrap();
        assert!(n1.is_closed());
        assert_eq!(res(&n1).unwrap(), qi(1));
        assert_eq!((n1.hdeg, n1.sdeg), (1, -1));
        // nu of the empty word is the identity
        let n0 = nu(&ctx, &cache, &BraidWord::default()).unwrap();
        assert_eq!((n0.hdeg, n0.sdeg), (0, 0));
        // closedness for a two-letter word
        let w = BraidWord::parse("s1 s2").unwrap();
        let n2 = nu(&ctx, &cache, &w).unwrap();
        assert!(n2.is_closed());
        assert_eq!(res(&n2).unwrap(), qi(1));
        assert!(nu(&ctx, &cache, &BraidWord::parse("s1^-1").unwrap()).is_err());
    }

    #[test]
    fn res_koszul_sign_of_whiskered_nu() {
        let (ctx, cache) = setup("A2");
        // res(id_{F(beta)} x nu_s) = (-1)^{e(beta)}
        for beta in ["", "s1", "s1 s2"] {
            let bw = BraidWord::parse(beta).unwrap();
            let fb = rouquier(&ctx, &cache, &bw);
            let id = ChainElement::identity(&fb.product, 2);
            let ns = nu(&ctx, &cache, &BraidWord::parse("s1").unwrap()).unwrap();
            let t = ChainElement::tensor(&ctx, &id, &ns);
            let expect = if bw.exponent() % 2 == 0 { qi(1) } else { qi(-1) };
            assert_eq!(res(&t).unwrap(), expect, "beta = '{beta}'");
        }
    }

    #[test]
    fn letter_pairs_collapse() {
        let (ctx, cache) = setup("A2");
        for l in [Letter::Pos(0), Letter::Neg(1), Letter::Bs(0)] {
            let p = letter_pair(&ctx, &cache, l);
            assert!(!p.zz_c.is_zero());
            assert!(p.ev.is_closed());
            assert!(p.coev.is_closed());
        }
    }

    #[test]
    fn canonical_map_same_word_is_identityish() {
        let (ctx, cache) = setup("A2");
        let w = BraidWord::parse("s1 s2").unwrap();
        let f = canonical_map(&ctx, &cache, &w, &w).unwrap();
        assert!(f.is_closed());
        assert_eq!(res(&f).unwrap(), qi(1));
    }

    #[test]
    fn canonical_map_braid_relation() {
        let (ctx, cache) = setup("A2");
        let u = BraidWord::parse("s1 s2 s1").unwrap();
        let v = BraidWord::parse("s2 s1 s2").unwrap();
        let f = canonical_map(&ctx, &cache, &u, &v).unwrap();
        assert!(f.is_closed());
        assert_eq!(res(&f).unwrap(), qi(1));
        assert_eq!((f.hdeg, f.sdeg), (0, 0));
    }

    #[test]
    fn canonical_map_detects_unequal_braids() {
        let (ctx, cache) = setup("A2");
        let u = BraidWord::parse("s1").unwrap();
        let v = BraidWord::parse("s2").unwrap();
        assert!(canonical_map(&ctx, &cache, &u, &v).is_err());
    }

    #[test]
    fn conjpoly_single_letter_witness() {
        let (ctx, cache) = setup("A2");
        let s = 0;
        let alpha = ctx.real.alpha(s);
        let h = conjpoly_single(&ctx, &cache, s, &alpha);
        let fx = letter_complex(&ctx, &cache, Letter::Pos(0));
        let mut lhs = ChainElement::zero(fx.clone(), fx.clone(), 0, 2);
        for (i, g) in &fx.groups {
            for (idx, obj) in g.iter().enumerate() {
                let leftm = ctx.left_mult(obj, &ctx.real.act_s(s, &alpha));
                let rightm = ctx.right_mult(obj, &alpha);
                lhs.set_block(*i, idx, idx, leftm.sub(&rightm));
            }
        }
        assert!(h.d().sub(&lhs).is_zero());
    }

    #[test]
    fn strip_nullhomotopy_conjpoly_two_letters() {
        let (ctx, cache) = setup("A2");
        let w = BraidWord::parse("s1 s2").unwrap();
        let fb = rouquier(&ctx, &cache, &w);
        let alpha = ctx.real.alpha(0);
        let h = conjpoly_homotopy(&ctx, &cache, &w, &alpha, &fb).unwrap();
        assert_eq!(h.hdeg, -1);
    }

    #[test]
    fn invariant_w_invariant_poly_needs_no_homotopy() {
        let (ctx, cache) = setup("A1");
        // f = alpha^2 is W-invariant in A1: lhs = 0, h = 0 works
        let w = BraidWord::parse("s1").unwrap();
        let fb = rouquier(&ctx, &cache, &w);
        let inv = ctx.real.alpha(0).mul(&ctx.real.alpha(0));
        let h = conjpoly_homotopy(&ctx, &cache, &w, &inv, &fb).unwrap();
        let _ = h;
    }
}
