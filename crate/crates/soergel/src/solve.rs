//! Exact linear algebra over the rationals.
//!
//! Everything downstream (hom-space bases, nullhomotopy witnesses, homology
//! dimensions) reduces to kernels and particular solutions of sparse rational
//! systems, so this is kept deterministic: fixed pivot order, no reordering
//! heuristics that depend on hash state.

use num_traits::{One, Zero};

use crate::poly::Q;

/// A sparse matrix over Q, stored by rows. Column count is fixed up front.
#[derive(Clone, Debug)]
pub struct SparseMat {
    pub cols: usize,
    pub rows: Vec<Vec<(usize, Q)>>,
}

impl SparseMat {
    pub fn new(cols: usize) -> Self {
        SparseMat { cols, rows: Vec::new() }
    }

    pub fn push_row(&mut self, mut row: Vec<(usize, Q)>) {
        row.retain(|(_, c)| !c.is_zero());
        row.sort_by_key(|(j, _)| *j);
        self.rows.push(row);
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }
}

fn row_axpy(dst: &mut Vec<(usize, Q)>, c: &Q, src: &[(usize, Q)]) {
    // dst += c * src, both sorted by column
    let mut out = Vec::with_capacity(dst.len() + src.len());
    let mut i = 0;
    let mut j = 0;
    while i < dst.len() || j < src.len() {
        if j >= src.len() || (i < dst.len() && dst[i].0 < src[j].0) {
            out.push(dst[i].clone());
            i += 1;
        } else if i >= dst.len() || src[j].0 < dst[i].0 {
            let v = c * &src[j].1;
            if !v.is_zero() {
                out.push((src[j].0, v));
            }
            j += 1;
        } else {
            let v = &dst[i].1 + c * &src[j].1;
            if !v.is_zero() {
                out.push((dst[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    *dst = out;
}

/// Row echelon form with remembered pivots.
pub struct Echelon {
    pub cols: usize,
    /// rows in echelon form, each starting at its pivot column
    pub rows: Vec<Vec<(usize, Q)>>,
    /// pivot column of each row, strictly increasing by construction order
    pub pivots: Vec<usize>,
}

impl Echelon {
    pub fn new(cols: usize) -> Self {
        Echelon { cols, rows: Vec::new(), pivots: Vec::new() }
    }

    /// Reduce `row` against the current echelon; returns the residue.
    pub fn reduce(&self, mut row: Vec<(usize, Q)>) -> Vec<(usize, Q)> {
        loop {
            let Some(&(lead, _)) = row.first() else { return row };
            match self.pivots.iter().position(|&p| p == lead) {
                Some(r) => {
                    let c = -(&row[0].1 / &self.rows[r][0].1);
                    row_axpy(&mut row, &c, &self.rows[r]);
                }
                None => return row,
            }
        }
    }

    /// Insert a row (after reduction). Returns true if it added a new pivot.
    pub fn insert(&mut self, row: Vec<(usize, Q)>) -> bool {
        let row = self.reduce(row);
        if row.is_empty() {
            return false;
        }
        let lead = row[0].0;
        let pos = self.pivots.binary_search(&lead).unwrap_err();
        self.pivots.insert(pos, lead);
        self.rows.insert(pos, row);
        true
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }
}

/// Basis of the kernel of `m` (viewed as a map Q^cols -> Q^rows), as dense
/// coordinate vectors. Deterministic: free columns in increasing order.
pub fn kernel_basis(m: &SparseMat) -> Vec<Vec<Q>> {
    let mut ech = Echelon::new(m.cols);
    for row in &m.rows {
        ech.insert(row.clone());
    }
    kernel_from_echelon(&ech)
}

pub fn kernel_from_echelon(ech: &Echelon) -> Vec<Vec<Q>> {
    let cols = ech.cols;
    let pivot_set: Vec<bool> = {
        let mut v = vec![false; cols];
        for &p in &ech.pivots {
            v[p] = true;
        }
        v
    };
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_set[free] {
            continue;
        }
        let mut vec_out = vec![Q::zero(); cols];
        vec_out[free] = Q::one();
        // back-substitute from the bottom pivot row upward
        for r in (0..ech.rows.len()).rev() {
            let p = ech.pivots[r];
            let mut acc = Q::zero();
            for (j, c) in ech.rows[r].iter().skip(1) {
                if !vec_out[*j].is_zero() {
                    acc += c * &vec_out[*j];
                }
            }
            if !acc.is_zero() {
                vec_out[p] = -acc / &ech.rows[r][0].1;
            }
        }
        basis.push(vec_out);
    }
    basis
}

pub fn rank(m: &SparseMat) -> usize {
    let mut ech = Echelon::new(m.cols);
    for row in &m.rows {
        ech.insert(row.clone());
    }
    ech.rank()
}

/// Solve `m x = b` for one particular solution, if consistent.
///
/// Works on the augmented system: rows of `m` get an extra column carrying
/// the entries of `b`, and we look for a combination hitting `b` exactly.
pub fn solve(m: &SparseMat, b: &[Q]) -> Option<Vec<Q>> {
    assert_eq!(b.len(), m.nrows());
    // Transpose-free approach: run elimination on columns of the system
    // [m | b] by treating unknowns as columns. Simpler: build the echelon of
    // the transposed problem. For our sizes, convert to column-major rows.
    let mut cols_rows: Vec<Vec<(usize, Q)>> = vec![Vec::new(); m.cols + 1];
    for (i, row) in m.rows.iter().enumerate() {
        for (j, c) in row {
            cols_rows[*j].push((i, c.clone()));
        }
    }
    for (i, v) in b.iter().enumerate() {
        if !v.is_zero() {
            cols_rows[m.cols].push((i, v.clone()));
        }
    }
    // Echelon over "rows = original columns", tracking combinations.
    // aug[r] = coordinates of echelon row r in terms of original columns.
    let nrows = m.nrows();
    let mut ech: Vec<Vec<(usize, Q)>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    let mut combos: Vec<Vec<(usize, Q)>> = Vec::new();
    let reduce =
        |row: &mut Vec<(usize, Q)>, combo: &mut Vec<(usize, Q)>, ech: &Vec<Vec<(usize, Q)>>, pivots: &Vec<usize>, combos: &Vec<Vec<(usize, Q)>>| {
            loop {
                let Some(&(lead, _)) = row.first() else { return };
                match pivots.iter().position(|&p| p == lead) {
                    Some(r) => {
                        let c = -(&row[0].1 / &ech[r][0].1);
                        row_axpy(row, &c, &ech[r]);
                        row_axpy(combo, &c, &combos[r]);
                    }
                    None => return,
                }
            }
        };
    for j in 0..m.cols {
        let mut row = std::mem::take(&mut cols_rows[j]);
        row.sort_by_key(|(i, _)| *i);
        let mut combo = vec![(j, Q::one())];
        reduce(&mut row, &mut combo, &ech, &pivots, &combos);
        if !row.is_empty() {
            // keep insertion order (pivot rows need not be sorted by pivot here)
            pivots.push(row[0].0);
            ech.push(row);
            combos.push(combo);
        }
    }
    // now reduce b against the echelon
    let mut row: Vec<(usize, Q)> = std::mem::take(&mut cols_rows[m.cols]);
    row.sort_by_key(|(i, _)| *i);
    let mut combo: Vec<(usize, Q)> = Vec::new();
    // full reduction: b may need multiple passes since pivot order is arbitrary
    loop {
        let Some(&(lead, _)) = row.first() else { break };
        match pivots.iter().position(|&p| p == lead) {
            Some(r) => {
                let c = -(&row[0].1 / &ech[r][0].1);
                row_axpy(&mut row, &c, &ech[r]);
                row_axpy(&mut combo, &c, &combos[r]);
            }
            None => return None, // leading entry of b not matchable
        }
    }
    let _ = nrows;
    let mut x = vec![Q::zero(); m.cols];
    for (j, c) in combo {
        x[j] = -c;
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::qi;

    fn mat(rows: &[&[i64]]) -> SparseMat {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut m = SparseMat::new(cols);
        for r in rows {
            m.push_row(r.iter().enumerate().map(|(j, &v)| (j, qi(v))).collect());
        }
        m
    }

    #[test]
    fn kernel_of_rank_one() {
        let m = mat(&[&[1, 2, 3], &[2, 4, 6]]);
        let k = kernel_basis(&m);
        assert_eq!(k.len(), 2);
        for v in &k {
            let dot: Q = (0..3).map(|j| &v[j] * qi([1, 2, 3][j])).sum();
            assert!(dot.is_zero());
        }
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let m = mat(&[&[1, 0], &[0, 2], &[1, 2]]);
        let x = solve(&m, &[qi(3), qi(4), qi(5)]).unwrap();
        assert_eq!(x, vec![qi(3), qi(2)]);
        assert!(solve(&m, &[qi(3), qi(4), qi(6)]).is_none());
    }

    #[test]
    fn rank_counts_pivots() {
        let m = mat(&[&[1, 1], &[1, -1], &[2, 0]]);
        assert_eq!(rank(&m), 2);
    }
}
