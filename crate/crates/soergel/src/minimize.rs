//! Gaussian elimination on complexes.
//!
//! Minimization repeatedly cancels invertible differential components between
//! literally equal objects (same word, same shift). To give elimination
//! anything to chew on, objects whose word contains an adjacent repeated
//! letter are first split along the base-change
//! `B_s B_s ~ B_s(1) (+) B_s(-1)`, which stays inside Bott-Samelson words.
//! Equivalence data (both maps and both homotopies) is carried through every
//! step, so downstream code can transport morphisms across the reduction.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::bimodule::{BSObject, Ctx, Mask, Morphism};
use crate::complex::{ChainElement, Complex};
use crate::poly::{Poly, Q};

/// A homotopy equivalence `X ~ M` produced by reduction:
/// `to o from = id_M` exactly and `from o to = id_X - d(h)`.
#[derive(Clone, Debug)]
pub struct Equivalence {
    pub big: Arc<Complex>,
    pub small: Arc<Complex>,
    /// projection X -> M
    pub to: ChainElement,
    /// inclusion M -> X
    pub from: ChainElement,
    /// homotopy on X with from o to = id - d(h)
    pub h: ChainElement,
}

impl Equivalence {
    pub fn identity(x: Arc<Complex>, nvars: usize) -> Self {
        Equivalence {
            big: x.clone(),
            small: x.clone(),
            to: ChainElement::identity(&x, nvars),
            from: ChainElement::identity(&x, nvars),
            h: ChainElement::zero(x.clone(), x.clone(), -1, 0),
        }
    }

    /// Compose with a further reduction of the small side.
    pub fn then(&self, next: &Equivalence) -> Equivalence {
        let to = next.to.compose(&self.to);
        let from = self.from.compose(&next.from);
        // h = h1 + from1 o h2 o to1
        let mid = self.from.compose(&next.h).compose(&self.to);
        let h = self.h.add(&mid);
        Equivalence { big: self.big.clone(), small: next.small.clone(), to, from, h }
    }

    pub fn verify(&self, ctx: &Ctx) -> bool {
        let n = ctx.nvars();
        let id_small = ChainElement::identity(&self.small, n);
        let id_big = ChainElement::identity(&self.big, n);
        if !self.to.compose(&self.from).sub(&id_small).is_zero() {
            return false;
        }
        let lhs = self.from.compose(&self.to).sub(&id_big);
        lhs.add(&self.h.d()).is_zero()
    }
}

/// Invert a degree-0 endomorphism if possible. Ordering the 01-basis by
/// subset cardinality makes such a morphism block lower triangular with
/// scalar diagonal blocks, so it is invertible iff each diagonal block is,
/// and the inverse is a finite Neumann sum.
pub fn invert_endo(m: &Morphism, nvars: usize) -> Option<Morphism> {
    debug_assert_eq!(m.src, m.tgt);
    debug_assert_eq!(m.deg, 0);
    let r = m.src.len();
    let size = 1usize << r;
    let mut diag: Vec<Vec<(Mask, Mask, Q)>> = vec![Vec::new(); r + 1];
    for ((row, col), p) in &m.entries {
        if row.count_ones() == col.count_ones() {
            if !p.is_constant() {
                return None;
            }
            diag[row.count_ones() as usize].push((*row, *col, p.constant_term()));
        }
    }
    let mut dinv_entries: BTreeMap<(Mask, Mask), Q> = BTreeMap::new();
    for k in 0..=r {
        let masks: Vec<Mask> =
            (0..size as Mask).filter(|e| e.count_ones() as usize == k).collect();
        let nk = masks.len();
        let pos: BTreeMap<Mask, usize> =
            masks.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        let mut a = vec![vec![Q::zero(); 2 * nk]; nk];
        for (i, row) in a.iter_mut().enumerate() {
            row[nk + i] = Q::one();
        }
        for (row, col, c) in &diag[k] {
            a[pos[row]][pos[col]] = c.clone();
        }
        for col in 0..nk {
            let piv = (col..nk).find(|&i| !a[i][col].is_zero())?;
            a.swap(col, piv);
            let inv = Q::one() / a[col][col].clone();
            for v in a[col].iter_mut() {
                *v = &*v * &inv;
            }
            for i in 0..nk {
                if i != col && !a[i][col].is_zero() {
                    let f = a[i][col].clone();
                    for j in 0..2 * nk {
                        let sub = &a[col][j] * &f;
                        a[i][j] = &a[i][j] - sub;
                    }
                }
            }
        }
        for (i, &mi) in masks.iter().enumerate() {
            for (j, &mj) in masks.iter().enumerate() {
                if !a[i][nk + j].is_zero() {
                    dinv_entries.insert((mi, mj), a[i][nk + j].clone());
                }
            }
        }
    }
    let mut dinv = Morphism::zero(m.src.clone(), m.tgt.clone(), 0);
    for ((row, col), c) in dinv_entries {
        dinv.set_entry(row, col, Poly::constant(nvars, c));
    }
    // M = D + N with N strictly raising |E|-blocks; M^{-1} = sum (-D^{-1}N)^j D^{-1}
    let mut nil = m.clone();
    let keys: Vec<(Mask, Mask)> = m.entries.keys().cloned().collect();
    for (row, col) in keys {
        if row.count_ones() == col.count_ones() {
            nil.set_entry(row, col, Poly::zero(nvars));
        }
    }
    let mut inv = dinv.clone();
    if !nil.is_zero() {
        let step = dinv.compose(&nil).neg();
        let mut power = step.clone();
        for _ in 0..=r {
            if power.is_zero() {
                break;
            }
            inv = inv.add(&power.compose(&dinv));
            power = power.compose(&step);
        }
    }
    debug_assert!(inv.compose(m) == Morphism::identity(&m.src, nvars));
    Some(inv)
}

fn find_cancellable(x: &Complex, nvars: usize) -> Option<((i32, usize, usize), Morphism)> {
    for ((i, t, s), m) in &x.diff {
        if m.src == m.tgt {
            if let Some(inv) = invert_endo(m, nvars) {
                return Some(((*i, *t, *s), inv));
            }
        }
    }
    None
}

/// One Gaussian elimination step at a cancellable component `a = d[t,s]`.
///
/// The reduced differential is `d' = d - b a^{-1} c`, with
/// `to` corrected on the way out of the dropped target and `from` corrected
/// into the dropped source, and the homotopy given by `a^{-1}` itself.
fn eliminate(ctx: &Ctx, x: &Arc<Complex>, key: (i32, usize, usize), inv: Morphism) -> Equivalence {
    let n = ctx.nvars();
    let (i, t, s) = key;
    let mut groups = x.groups.clone();
    groups.get_mut(&i).unwrap().remove(s);
    groups.get_mut(&(i + 1)).unwrap().remove(t);
    let reindex = |deg: i32, idx: usize| -> Option<usize> {
        if deg == i {
            if idx == s {
                return None;
            }
            Some(if idx > s { idx - 1 } else { idx })
        } else if deg == i + 1 {
            if idx == t {
                return None;
            }
            Some(if idx > t { idx - 1 } else { idx })
        } else {
            Some(idx)
        }
    };
    let mut diff: BTreeMap<(i32, usize, usize), Morphism> = BTreeMap::new();
    for ((di, dt, ds), m) in &x.diff {
        let (Some(nt), Some(ns)) = (reindex(di + 1, *dt), reindex(*di, *ds)) else {
            continue;
        };
        diff.insert((*di, nt, ns), m.clone());
    }
    let mut cols: Vec<(usize, &Morphism)> = Vec::new(); // c = d[t, s'], s' != s
    let mut rows: Vec<(usize, &Morphism)> = Vec::new(); // b = d[t', s], t' != t
    for ((di, dt, ds), m) in &x.diff {
        if *di == i && *dt == t && *ds != s {
            cols.push((*ds, m));
        }
        if *di == i && *ds == s && *dt != t {
            rows.push((*dt, m));
        }
    }
    for (sp, c) in &cols {
        for (tp, b) in &rows {
            let corr = b.compose(&inv).compose(c).neg();
            if corr.is_zero() {
                continue;
            }
            let (Some(nt), Some(ns)) = (reindex(i + 1, *tp), reindex(i, *sp)) else {
                continue;
            };
            let key2 = (i, nt, ns);
            match diff.get_mut(&key2) {
                Some(e) => {
                    let sum = e.add(&corr);
                    if sum.is_zero() {
                        diff.remove(&key2);
                    } else {
                        *e = sum;
                    }
                }
                None => {
                    diff.insert(key2, corr);
                }
            }
        }
    }
    let small = Arc::new(Complex { groups, diff });

    let mut to = ChainElement::zero(x.clone(), small.clone(), 0, 0);
    for (deg, g) in &x.groups {
        for (idx, obj) in g.iter().enumerate() {
            if let Some(nidx) = reindex(*deg, idx) {
                to.set_block(*deg, nidx, idx, Morphism::identity(obj, n));
            }
        }
    }
    for (tp, b) in &rows {
        if let Some(nt) = reindex(i + 1, *tp) {
            to.set_block(i + 1, nt, t, b.compose(&inv).neg());
        }
    }
    let mut from = ChainElement::zero(small.clone(), x.clone(), 0, 0);
    for (deg, g) in &x.groups {
        for (idx, obj) in g.iter().enumerate() {
            if let Some(nidx) = reindex(*deg, idx) {
                from.set_block(*deg, idx, nidx, Morphism::identity(obj, n));
            }
        }
    }
    for (sp, c) in &cols {
        if let Some(ns) = reindex(i, *sp) {
            from.set_block(i, s, ns, inv.compose(c).neg());
        }
    }
    let mut h = ChainElement::zero(x.clone(), x.clone(), -1, 0);
    h.set_block(i + 1, s, t, inv);
    Equivalence { big: x.clone(), small, to, from, h }
}

/// Split one object whose word has an adjacent repeated letter, via the
/// base change `B_{w s s v}(k) ~ B_{w s v}(k+1) (+) B_{w s v}(k-1)`.
fn split_double(ctx: &Ctx, x: &Arc<Complex>, deg: i32, idx: usize, pos: usize) -> Equivalence {
    let n = ctx.nvars();
    let obj = x.group(deg)[idx].clone();
    let s = obj.word[pos] as usize;
    debug_assert_eq!(obj.word[pos], obj.word[pos + 1]);
    let left: Vec<u8> = obj.word[..pos].to_vec();
    let right: Vec<u8> = obj.word[pos + 2..].to_vec();
    let mut short_word = left.clone();
    short_word.push(s as u8);
    short_word.extend_from_slice(&right);
    let plus = BSObject::new(short_word.clone(), obj.shift + 1);
    let minus = BSObject::new(short_word.clone(), obj.shift - 1);

    let idl = Morphism::identity(&BSObject::new(left.clone(), 0), n);
    let idr = Morphism::identity(&BSObject::new(right.clone(), 0), n);
    let idb = Morphism::identity(&BSObject::new(vec![s as u8], 0), n);
    let u1 = ctx.tensor(&ctx.tensor(&idl, &ctx.delta_gen(s)), &idr);
    let p1 = ctx.tensor(&ctx.tensor(&idl, &ctx.tensor(&idb, &ctx.eps(s))), &idr);
    let u2 = ctx.tensor(&ctx.tensor(&idl, &ctx.tensor(&idb, &ctx.eta(s))), &idr);
    let p2 = ctx.tensor(&ctx.tensor(&idl, &ctx.mu(s)), &idr);
    // orthogonality correction: u2' = u2 - u1 o (alpha_s inserted at the slot)
    let alpha_slot = {
        let mut prefix = left.clone();
        prefix.push(s as u8);
        let pre_obj = BSObject::new(prefix, 0);
        let mult = ctx.right_mult(&pre_obj, &ctx.real.alpha(s));
        ctx.tensor(&mult, &idr)
    };
    let u2c = u2.sub(&u1.compose(&alpha_slot));
    let u1 = u1.retag(obj.shift + 1, obj.shift);
    let p1 = p1.retag(obj.shift, obj.shift + 1);
    let u2c = u2c.retag(obj.shift - 1, obj.shift);
    let p2 = p2.retag(obj.shift, obj.shift - 1);
    debug_assert!(p1.compose(&u1) == Morphism::identity(&plus, n));
    debug_assert!(p2.compose(&u2c) == Morphism::identity(&minus, n));
    debug_assert!(p1.compose(&u2c).is_zero());
    debug_assert!(p2.compose(&u1).is_zero());
    debug_assert!(u1.compose(&p1).add(&u2c.compose(&p2)) == Morphism::identity(&obj, n));

    let mut groups = x.groups.clone();
    {
        let g = groups.get_mut(&deg).unwrap();
        g.splice(idx..=idx, [plus, minus]);
    }
    let shift_idx = |d: i32, j: usize| -> usize {
        if d == deg && j > idx {
            j + 1
        } else {
            j
        }
    };
    let mut diff: BTreeMap<(i32, usize, usize), Morphism> = BTreeMap::new();
    let mut add = |key: (i32, usize, usize), m: Morphism, diff: &mut BTreeMap<(i32, usize, usize), Morphism>| {
        if m.is_zero() {
            return;
        }
        match diff.get_mut(&key) {
            Some(e) => {
                let sum = e.add(&m);
                if sum.is_zero() {
                    diff.remove(&key);
                } else {
                    *e = sum;
                }
            }
            None => {
                diff.insert(key, m);
            }
        }
    };
    for ((di, dt, ds), m) in &x.diff {
        let into = *di + 1 == deg && *dt == idx;
        let outof = *di == deg && *ds == idx;
        match (into, outof) {
            (true, false) => {
                add((*di, idx, shift_idx(*di, *ds)), p1.compose(m), &mut diff);
                add((*di, idx + 1, shift_idx(*di, *ds)), p2.compose(m), &mut diff);
            }
            (false, true) => {
                add((*di, shift_idx(*di + 1, *dt), idx), m.compose(&u1), &mut diff);
                add((*di, shift_idx(*di + 1, *dt), idx + 1), m.compose(&u2c), &mut diff);
            }
            (false, false) => {
                add(
                    (*di, shift_idx(*di + 1, *dt), shift_idx(*di, *ds)),
                    m.clone(),
                    &mut diff,
                );
            }
            (true, true) => unreachable!("differential cannot be an endomorphism"),
        }
    }
    let small = Arc::new(Complex { groups, diff });
    let mut to = ChainElement::zero(x.clone(), small.clone(), 0, 0);
    let mut from = ChainElement::zero(small.clone(), x.clone(), 0, 0);
    for (d, g) in &x.groups {
        for (j, o) in g.iter().enumerate() {
            if *d == deg && j == idx {
                to.set_block(*d, idx, j, p1.clone());
                to.set_block(*d, idx + 1, j, p2.clone());
                from.set_block(*d, j, idx, u1.clone());
                from.set_block(*d, j, idx + 1, u2c.clone());
            } else {
                let nj = shift_idx(*d, j);
                to.set_block(*d, nj, j, Morphism::identity(o, n));
                from.set_block(*d, j, nj, Morphism::identity(o, n));
            }
        }
    }
    let h = ChainElement::zero(x.clone(), x.clone(), -1, 0);
    Equivalence { big: x.clone(), small, to, from, h }
}

fn find_double(x: &Complex) -> Option<(i32, usize, usize)> {
    for (deg, g) in &x.groups {
        for (idx, obj) in g.iter().enumerate() {
            for pos in 0..obj.word.len().saturating_sub(1) {
                if obj.word[pos] == obj.word[pos + 1] {
                    return Some((*deg, idx, pos));
                }
            }
        }
    }
    None
}

/// Options controlling the reduction loop.
#[derive(Clone, Copy, Debug, Default)]
pub struct MinimizeOpts {
    /// Skip the adjacent-double base change (pure cancellation only).
    pub no_split: bool,
}

/// Minimize a complex, returning the reduced model and the equivalence.
pub fn minimize(ctx: &Ctx, x: &Arc<Complex>) -> (Arc<Complex>, Equivalence) {
    minimize_with(ctx, x, MinimizeOpts::default())
}

pub fn minimize_with(
    ctx: &Ctx,
    x: &Arc<Complex>,
    opts: MinimizeOpts,
) -> (Arc<Complex>, Equivalence) {
    let mut eq = Equivalence::identity(x.clone(), ctx.nvars());
    let mut cur = x.clone();
    loop {
        if let Some((key, inv)) = find_cancellable(&cur, ctx.nvars()) {
            let step = eliminate(ctx, &cur, key, inv);
            cur = step.small.clone();
            eq = eq.then(&step);
            continue;
        }
        if !opts.no_split {
            if let Some((deg, idx, pos)) = find_double(&cur) {
                let step = split_double(ctx, &cur, deg, idx, pos);
                cur = step.small.clone();
                eq = eq.then(&step);
                continue;
            }
        }
        break;
    }
    let pruned = Arc::new((*cur).clone().prune());
    if *pruned != *cur {
        let reb = rebuild_identity(&cur, &pruned, ctx.nvars());
        eq = eq.then(&reb);
        cur = pruned;
    }
    (cur, eq)
}

fn rebuild_identity(big: &Arc<Complex>, small: &Arc<Complex>, nvars: usize) -> Equivalence {
    let mut to = ChainElement::zero(big.clone(), small.clone(), 0, 0);
    let mut from = ChainElement::zero(small.clone(), big.clone(), 0, 0);
    for (d, g) in &small.groups {
        for (j, o) in g.iter().enumerate() {
            to.set_block(*d, j, j, Morphism::identity(o, nvars));
            from.set_block(*d, j, j, Morphism::identity(o, nvars));
        }
    }
    Equivalence {
        big: big.clone(),
        small: small.clone(),
        to,
        from,
        h: ChainElement::zero(big.clone(), big.clone(), -1, 0),
    }
}

/// Decide homotopy equivalence by minimizing both sides and solving for
/// mutually inverse chain maps between the minimal models. Returns
/// `(f, g, h_x, h_y)` with `g o f - id = -d(h_x)` and `f o g - id = -d(h_y)`.
pub fn homotopy_equivalent(
    ctx: &Ctx,
    x: &Arc<Complex>,
    y: &Arc<Complex>,
) -> Option<(ChainElement, ChainElement, ChainElement, ChainElement)> {
    use crate::complex::{chain_map_space, nullhomotopy_direct};
    let (xm, ex) = minimize(ctx, x);
    let (ym, ey) = minimize(ctx, y);
    let fwd = chain_map_space(ctx, &xm, &ym, 0, 0);
    let bwd = chain_map_space(ctx, &ym, &xm, 0, 0);
    let n = ctx.nvars();
    let idx = ChainElement::identity(&xm, n);
    let idy = ChainElement::identity(&ym, n);
    for f in &fwd {
        for g in &bwd {
            let hx = nullhomotopy_direct(ctx, &idx.sub(&g.compose(f)));
            let hy = nullhomotopy_direct(ctx, &idy.sub(&f.compose(g)));
            if let (Some(hx), Some(hy)) = (hx, hy) {
                let f_big = ey.from.compose(f).compose(&ex.to);
                let g_big = ex.from.compose(g).compose(&ey.to);
                // to o from = id on the small side is exact, so the big-side
                // homotopies assemble from just two terms; verified below
                let hx_big = ex.from.compose(&hx).compose(&ex.to).add(&ex.h);
                let hy_big = ey.from.compose(&hy).compose(&ey.to).add(&ey.h);
                let idbx = ChainElement::identity(x, n);
                let idby = ChainElement::identity(y, n);
                let ok_x = idbx.sub(&g_big.compose(&f_big)).sub(&hx_big.d()).is_zero();
                let ok_y = idby.sub(&f_big.compose(&g_big)).sub(&hy_big.d()).is_zero();
                if ok_x && ok_y {
                    return Some((f_big, g_big, hx_big, hy_big));
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{cone, tensor_complex};

    fn ctx(label: &str) -> Ctx {
        Ctx::from_label(label).unwrap()
    }

    fn f_s(c: &Ctx, s: usize) -> Complex {
        let mut groups = BTreeMap::new();
        groups.insert(0, vec![BSObject::new(vec![s as u8], 0)]);
        groups.insert(1, vec![BSObject::new(vec![], 1)]);
        let mut diff = BTreeMap::new();
        diff.insert((0, 0, 0), c.eps(s).retag(0, 1));
        Complex { groups, diff }
    }

    fn f_s_inv(c: &Ctx, s: usize) -> Complex {
        let mut groups = BTreeMap::new();
        groups.insert(-1, vec![BSObject::new(vec![], -1)]);
        groups.insert(0, vec![BSObject::new(vec![s as u8], 0)]);
        let mut diff = BTreeMap::new();
        diff.insert((-1, 0, 0), c.eta(s).retag(-1, 0));
        Complex { groups, diff }
    }

    #[test]
    fn cone_of_identity_minimizes_to_zero() {
        let c = ctx("A2");
        let x = Arc::new(f_s(&c, 0));
        let id = ChainElement::identity(&x, 2);
        let cn = Arc::new(cone(&id).unwrap());
        cn.validate(&c).unwrap();
        let (m, eq) = minimize(&c, &cn);
        assert!(m.is_zero(), "{m:?}");
        assert!(eq.verify(&c));
    }

    #[test]
    fn fs_is_already_minimal() {
        let c = ctx("A2");
        let x = Arc::new(f_s(&c, 0));
        let (m, eq) = minimize(&c, &x);
        assert_eq!(*m, *x);
        assert!(eq.verify(&c));
    }

    #[test]
    fn fs_fsinv_minimizes_to_unit() {
        for label in ["A1", "A2", "B2", "I2(6)"] {
            let c = ctx(label);
            let x = Arc::new(tensor_complex(&c, &f_s(&c, 0), &f_s_inv(&c, 0)));
            x.validate(&c).unwrap();
            let (m, eq) = minimize(&c, &x);
            assert!(m.is_unit(), "{label}: got {m:?}");
            assert!(eq.verify(&c), "{label}");
            let y = Arc::new(tensor_complex(&c, &f_s_inv(&c, 0), &f_s(&c, 0)));
            let (m, eq) = minimize(&c, &y);
            assert!(m.is_unit(), "{label} (reverse): got {m:?}");
            assert!(eq.verify(&c), "{label} (reverse)");
        }
    }

    #[test]
    fn homotopy_equivalent_fs_with_itself() {
        let c = ctx("A2");
        let x = Arc::new(f_s(&c, 0));
        let y = Arc::new(f_s(&c, 0));
        let (f, g, hx, hy) = homotopy_equivalent(&c, &x, &y).unwrap();
        assert!(f.is_closed() && g.is_closed());
        assert!(hx.hdeg == -1 && hy.hdeg == -1);
    }
}
