//! Chain complexes of free abelian groups and their homology.
//!
//! Homology is computed in two stages. Sparse elimination removes pairs of
//! cells joined by a unit boundary coefficient (each removal is a change of
//! basis that splits off an acyclic summand `Z -> Z`); the small remainder
//! goes through the dense Smith normal form.

use num_bigint::{BigInt, BigUint};
use std::collections::HashSet;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::abelian::AbelianGroupDescriptor;
use super::snf::{invariant_factors, IntMatrix};
use crate::error::{Error, Result};

/// Largest number of surviving rows handed to the dense SNF.
pub const DENSE_LIMIT: usize = 4000;

/// Integer matrix stored by columns, entries sorted by row index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub columns: Vec<Vec<(u32, i64)>>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            columns: vec![Vec::new(); cols],
        }
    }

    /// Builds from unsorted `(row, value)` lists per column, summing duplicates.
    pub fn from_columns(rows: usize, columns: Vec<Vec<(u32, i64)>>) -> Result<Self> {
        let cols = columns.len();
        let mut out = Vec::with_capacity(cols);
        for mut col in columns {
            col.sort_unstable_by_key(|e| e.0);
            let mut merged: Vec<(u32, i64)> = Vec::with_capacity(col.len());
            for (r, v) in col {
                if r as usize >= rows {
                    return Err(Error::MalformedComplex(format!("row index {r} out of range {rows}")));
                }
                match merged.last_mut() {
                    Some(last) if last.0 == r => {
                        last.1 = last.1.checked_add(v).ok_or_else(overflow)?;
                    }
                    _ => merged.push((r, v)),
                }
            }
            merged.retain(|e| e.1 != 0);
            out.push(merged);
        }
        Ok(SparseMatrix {
            rows,
            cols,
            columns: out,
        })
    }

    pub fn from_dense(rows: &[Vec<i64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::MalformedComplex("ragged matrix".into()));
        }
        let columns = (0..c)
            .map(|j| (0..r).filter(|&i| rows[i][j] != 0).map(|i| (i as u32, rows[i][j])).collect())
            .collect();
        Self::from_columns(r, columns)
    }

    pub fn to_dense(&self) -> IntMatrix {
        let mut m = IntMatrix::zeros(self.rows, self.cols);
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                m.set(i as usize, j, BigInt::from(v));
            }
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// True iff `self * other` vanishes exactly.
    pub fn product_is_zero(&self, other: &SparseMatrix) -> bool {
        let mut acc: Vec<i128> = vec![0; self.rows];
        let mut touched = Vec::new();
        for col in &other.columns {
            for &(k, b) in col {
                for &(i, a) in &self.columns[k as usize] {
                    if acc[i as usize] == 0 {
                        touched.push(i as usize);
                    }
                    acc[i as usize] += a as i128 * b as i128;
                }
            }
            for &i in &touched {
                if acc[i] != 0 {
                    return false;
                }
            }
            for i in touched.drain(..) {
                acc[i] = 0;
            }
        }
        true
    }
}

fn overflow() -> Error {
    Error::SizeCap("integer overflow in sparse elimination".into())
}

/// `... -> C_k -> C_{k-1} -> ... -> C_0`, with `boundaries[k - 1] = d_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainComplexZ {
    ranks: Vec<usize>,
    boundaries: Vec<SparseMatrix>,
}

impl ChainComplexZ {
    /// Checks shapes and `d_k d_{k+1} = 0`.
    pub fn new(ranks: Vec<usize>, boundaries: Vec<SparseMatrix>) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::MalformedComplex("a complex needs at least C_0".into()));
        }
        if boundaries.len() + 1 != ranks.len() {
            return Err(Error::MalformedComplex(format!(
                "{} modules need {} boundary maps, got {}",
                ranks.len(),
                ranks.len() - 1,
                boundaries.len()
            )));
        }
        for (k, d) in boundaries.iter().enumerate() {
            let k = k + 1;
            if d.rows != ranks[k - 1] || d.cols != ranks[k] || d.columns.len() != d.cols {
                return Err(Error::MalformedComplex(format!(
                    "d_{k} is {}x{}, expected {}x{}",
                    d.rows, d.cols, ranks[k - 1], ranks[k]
                )));
            }
        }
        let c = ChainComplexZ { ranks, boundaries };
        if let Some(k) = c.first_nonzero_square() {
            return Err(Error::MalformedComplex(format!("d_{k} d_{} is not zero", k + 1)));
        }
        Ok(c)
    }

    /// Builds from dense boundary matrices `d_1, d_2, ...`; `c0` is the rank of `C_0`.
    pub fn from_dense(c0: usize, boundaries: &[Vec<Vec<i64>>]) -> Result<Self> {
        let mut ranks = vec![c0];
        let mut ds = Vec::new();
        for (k, d) in boundaries.iter().enumerate() {
            let m = SparseMatrix::from_dense(d)?;
            // an empty matrix has no rows to read the shape from
            let m = if d.is_empty() { SparseMatrix::zeros(ranks[k], 0) } else { m };
            ranks.push(m.cols);
            ds.push(m);
        }
        Self::new(ranks, ds)
    }

    /// Lowest `k` with `d_k d_{k+1} != 0`, if any.
    pub fn first_nonzero_square(&self) -> Option<usize> {
        (1..self.boundaries.len()).find(|&k| !self.boundaries[k - 1].product_is_zero(&self.boundaries[k]))
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn top_degree(&self) -> usize {
        self.ranks.len() - 1
    }

    /// `d_k` for `1 <= k <= top_degree`.
    pub fn boundary(&self, k: usize) -> &SparseMatrix {
        &self.boundaries[k - 1]
    }
}

/// Working copy of one boundary map during elimination.
struct Stage {
    columns: Vec<Vec<(u32, i64)>>,
    /// Columns that may hold an entry in each row (lazily pruned).
    row_index: Vec<Vec<u32>>,
}

impl Stage {
    fn new(d: &SparseMatrix) -> Self {
        let mut row_index = vec![Vec::new(); d.rows];
        for (j, col) in d.columns.iter().enumerate() {
            for &(i, _) in col {
                row_index[i as usize].push(j as u32);
            }
        }
        Stage {
            columns: d.columns.clone(),
            row_index,
        }
    }
}

fn entry(col: &[(u32, i64)], row: u32) -> i64 {
    col.binary_search_by_key(&row, |e| e.0).map_or(0, |p| col[p].1)
}

/// `dst - f * src` on sorted sparse vectors; new rows are reported to `fresh`.
fn axpy_sparse(dst: &[(u32, i64)], f: i64, src: &[(u32, i64)], fresh: &mut Vec<u32>) -> Result<Vec<(u32, i64)>> {
    let mut out = Vec::with_capacity(dst.len() + src.len());
    let (mut i, mut j) = (0, 0);
    while i < dst.len() || j < src.len() {
        let take_dst = j >= src.len() || (i < dst.len() && dst[i].0 < src[j].0);
        let take_src = i >= dst.len() || (j < src.len() && src[j].0 < dst[i].0);
        if take_dst {
            out.push(dst[i]);
            i += 1;
        } else if take_src {
            let v = f.checked_mul(src[j].1).and_then(i64::checked_neg).ok_or_else(overflow)?;
            out.push((src[j].0, v));
            fresh.push(src[j].0);
            j += 1;
        } else {
            let v = f
                .checked_mul(src[j].1)
                .and_then(|p| dst[i].1.checked_sub(p))
                .ok_or_else(overflow)?;
            if v != 0 {
                out.push((dst[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    Ok(out)
}

/// Removes unit-pivot pairs; returns, per degree, the surviving cells and the
/// reduced boundary maps on them.
struct Reduction {
    alive: Vec<Vec<bool>>,
    stages: Vec<Stage>,
}

impl Reduction {
    fn new(c: &ChainComplexZ) -> Self {
        Reduction {
            alive: c.ranks.iter().map(|&r| vec![true; r]).collect(),
            stages: c.boundaries.iter().map(Stage::new).collect(),
        }
    }

    /// Eliminates the pair `(sigma in C_{k-1}, tau in C_k)` with unit coefficient `a`.
    fn eliminate(&mut self, k: usize, sigma: u32, tau: u32, a: i64) -> Result<()> {
        let stage = &mut self.stages[k - 1];
        let pivot = std::mem::take(&mut stage.columns[tau as usize]);
        let users = std::mem::take(&mut stage.row_index[sigma as usize]);
        let mut fresh = Vec::new();
        for t in users {
            if t == tau || !self.alive[k][t as usize] {
                continue;
            }
            let col = &stage.columns[t as usize];
            let b = entry(col, sigma);
            if b == 0 {
                continue;
            }
            fresh.clear();
            let updated = axpy_sparse(col, b * a, &pivot, &mut fresh)?;
            stage.columns[t as usize] = updated;
            for &r in &fresh {
                stage.row_index[r as usize].push(t);
            }
        }
        self.alive[k][tau as usize] = false;
        self.alive[k - 1][sigma as usize] = false;
        // tau's row in d_{k+1} and sigma's column in d_{k-1} drop out
        if k < self.stages.len() {
            let up = &mut self.stages[k];
            let users = std::mem::take(&mut up.row_index[tau as usize]);
            for t in users {
                let col = &mut up.columns[t as usize];
                if let Ok(p) = col.binary_search_by_key(&tau, |e| e.0) {
                    col.remove(p);
                }
            }
        }
        if k >= 2 {
            self.stages[k - 2].columns[sigma as usize] = Vec::new();
        }
        Ok(())
    }

    fn reduce_degree(&mut self, k: usize) -> Result<()> {
        loop {
            let mut progress = false;
            for tau in 0..self.stages[k - 1].columns.len() {
                if !self.alive[k][tau] {
                    continue;
                }
                // unit entry whose row has the fewest other users
                let stage = &self.stages[k - 1];
                let best = stage.columns[tau]
                    .iter()
                    .filter(|&&(r, v)| v.abs() == 1 && self.alive[k - 1][r as usize])
                    .min_by_key(|&&(r, _)| stage.row_index[r as usize].len())
                    .copied();
                if let Some((sigma, a)) = best {
                    self.eliminate(k, sigma, tau as u32, a)?;
                    progress = true;
                }
            }
            if !progress {
                return Ok(());
            }
        }
    }

    /// A matrix with the same column lattice as the reduced `d_k`.
    fn remainder(&self, k: usize) -> Result<IntMatrix> {
        let rows: Vec<usize> = (0..self.alive[k - 1].len()).filter(|&i| self.alive[k - 1][i]).collect();
        if rows.len() > DENSE_LIMIT {
            return Err(Error::SizeCap(format!(
                "reduced d_{k} has {} rows, above the dense limit {DENSE_LIMIT}",
                rows.len()
            )));
        }
        let mut pos = vec![usize::MAX; self.alive[k - 1].len()];
        for (p, &r) in rows.iter().enumerate() {
            pos[r] = p;
        }
        // distinct nonzero columns up to sign
        let mut seen = HashSet::new();
        let mut basis = LatticeBasis::new(rows.len());
        for j in (0..self.alive[k].len()).filter(|&j| self.alive[k][j]) {
            let mut col: Vec<(usize, i64)> = self.stages[k - 1].columns[j]
                .iter()
                .filter(|e| self.alive[k - 1][e.0 as usize])
                .map(|&(r, v)| (pos[r as usize], v))
                .collect();
            if col.is_empty() {
                continue;
            }
            if col[0].1 < 0 {
                col.iter_mut().for_each(|e| e.1 = -e.1);
            }
            if seen.insert(col.clone()) {
                basis.insert(&col);
            }
        }
        Ok(basis.into_matrix())
    }
}

/// Echelon basis of a sublattice of `Z^n`, built one generator at a time.
struct LatticeBasis {
    n: usize,
    /// `by_pivot[p]` has first nonzero entry at `p`, and it is positive.
    by_pivot: Vec<Option<Vec<BigInt>>>,
}

impl LatticeBasis {
    fn new(n: usize) -> Self {
        LatticeBasis {
            n,
            by_pivot: vec![None; n],
        }
    }

    fn insert(&mut self, sparse: &[(usize, i64)]) {
        let mut v = vec![BigInt::zero(); self.n];
        for &(r, x) in sparse {
            v[r] = BigInt::from(x);
        }
        let mut start = 0;
        loop {
            let Some(p) = (start..self.n).find(|&i| !v[i].is_zero()) else {
                return;
            };
            match &mut self.by_pivot[p] {
                None => {
                    if v[p].is_negative() {
                        v.iter_mut().for_each(|x| *x = -&*x);
                    }
                    self.by_pivot[p] = Some(v);
                    return;
                }
                Some(b) => {
                    let e = b[p].extended_gcd(&v[p]);
                    let (bp, vp) = (&b[p] / &e.gcd, &v[p] / &e.gcd);
                    // [b; v] <- [x y; -vp bp] [b; v], a unimodular step
                    let nb: Vec<BigInt> = (p..self.n).map(|i| &e.x * &b[i] + &e.y * &v[i]).collect();
                    let nv: Vec<BigInt> = (p..self.n).map(|i| &bp * &v[i] - &vp * &b[i]).collect();
                    for (off, (x, y)) in nb.into_iter().zip(nv).enumerate() {
                        b[p + off] = x;
                        v[p + off] = y;
                    }
                    if b[p].is_negative() {
                        b.iter_mut().for_each(|x| *x = -&*x);
                    }
                    start = p + 1;
                }
            }
        }
    }

    fn into_matrix(self) -> IntMatrix {
        let cols: Vec<Vec<BigInt>> = self.by_pivot.into_iter().flatten().collect();
        let mut m = IntMatrix::zeros(self.n, cols.len());
        for (j, c) in cols.into_iter().enumerate() {
            for (i, x) in c.into_iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }
}

/// Rank and invariant factors of every boundary map after reduction.
struct BoundaryData {
    alive_counts: Vec<usize>,
    /// For `d_k` (index `k - 1`): nonzero invariant factors, units included.
    factors: Vec<Vec<BigInt>>,
}

fn boundary_data(c: &ChainComplexZ) -> Result<BoundaryData> {
    let mut red = Reduction::new(c);
    for k in 1..=c.top_degree() {
        red.reduce_degree(k)?;
    }
    let mut factors = Vec::with_capacity(c.top_degree());
    for k in 1..=c.top_degree() {
        let m = red.remainder(k)?;
        factors.push(if m.is_zero() { Vec::new() } else { invariant_factors(&m) });
    }
    Ok(BoundaryData {
        alive_counts: red.alive.iter().map(|a| a.iter().filter(|&&x| x).count()).collect(),
        factors,
    })
}

/// `H_0, ..., H_K` of a complex with top degree `K` (`d_{K+1} = 0`).
pub fn complex_homology(c: &ChainComplexZ) -> Result<Vec<AbelianGroupDescriptor>> {
    let data = boundary_data(c)?;
    let top = c.top_degree();
    let rank = |k: usize| if k == 0 || k > top { 0 } else { data.factors[k - 1].len() };
    Ok((0..=top)
        .map(|k| {
            let free = data.alive_counts[k] - rank(k) - rank(k + 1);
            let torsion: Vec<BigUint> = if k < top {
                data.factors[k]
                    .iter()
                    .filter(|f| !f.is_one())
                    .map(|f| f.abs().to_biguint().expect("positive"))
                    .collect()
            } else {
                Vec::new()
            };
            AbelianGroupDescriptor::canonical(free, torsion)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use num_traits::ToPrimitive;
    use rand::Rng;

    #[test]
    fn small_examples() {
        let c = ChainComplexZ::from_dense(1, &[]).unwrap();
        assert_eq!(complex_homology(&c).unwrap(), vec![AbelianGroupDescriptor::free(1)]);
        for m in [2i64, 5, -3] {
            let c = ChainComplexZ::from_dense(1, &[vec![vec![m]]]).unwrap();
            let h = complex_homology(&c).unwrap();
            assert_eq!(h[0], AbelianGroupDescriptor::cyclic(m.unsigned_abs()));
            assert!(h[1].is_zero());
        }
        // circle as a simplicial complex: 3 vertices, 3 edges
        let d1 = vec![vec![-1, 0, 1], vec![1, -1, 0], vec![0, 1, -1]];
        let h = complex_homology(&ChainComplexZ::from_dense(3, &[d1]).unwrap()).unwrap();
        assert_eq!(h, vec![AbelianGroupDescriptor::free(1), AbelianGroupDescriptor::free(1)]);
    }

    #[test]
    fn rejects_malformed() {
        let bad = ChainComplexZ::from_dense(1, &[vec![vec![1]], vec![vec![1]]]);
        assert!(matches!(bad, Err(Error::MalformedComplex(_))));
        let d = SparseMatrix::zeros(2, 1);
        assert!(ChainComplexZ::new(vec![1, 1], vec![d]).is_err());
    }

    /// Random complex `C_2 -> C_1 -> C_0` with `d_1 d_2 = 0` built as `d_1 = A P`, `d_2 = Q B` with `P Q = 0`.
    fn random_complex<R: Rng>(rng: &mut R) -> ChainComplexZ {
        let c1 = rng.random_range(2..7);
        // split C_1 = Z^a + Z^b; d_2 lands in the first block, d_1 kills it
        let a = rng.random_range(1..c1);
        let c0 = rng.random_range(1..6);
        let c2 = rng.random_range(1..6);
        let d1: Vec<Vec<i64>> = (0..c0)
            .map(|_| (0..c1).map(|j| if j < a { 0 } else { rng.random_range(-3..4) }).collect())
            .collect();
        let d2: Vec<Vec<i64>> = (0..c1)
            .map(|i| (0..c2).map(|_| if i < a { rng.random_range(-3..4) } else { 0 }).collect())
            .collect();
        // mix C_1 by a unimodular change of basis so the blocks are not visible
        let mut g = vec![vec![0i64; c1]; c1];
        for (i, row) in g.iter_mut().enumerate() {
            row[i] = 1;
        }
        for _ in 0..6 {
            let (i, j) = (rng.random_range(0..c1), rng.random_range(0..c1));
            if i != j {
                let f = rng.random_range(-2..3);
                for r in 0..c1 {
                    g[r][i] += f * g[r][j];
                }
            }
        }
        let gi = invert_unimodular(&g);
        let d1g: Vec<Vec<i64>> = (0..c0)
            .map(|i| (0..c1).map(|j| (0..c1).map(|k| d1[i][k] * gi[k][j]).sum()).collect())
            .collect();
        let gd2: Vec<Vec<i64>> = (0..c1)
            .map(|i| (0..c2).map(|j| (0..c1).map(|k| g[i][k] * d2[k][j]).sum()).collect())
            .collect();
        ChainComplexZ::from_dense(c0, &[d1g, gd2]).unwrap()
    }

    fn invert_unimodular(g: &[Vec<i64>]) -> Vec<Vec<i64>> {
        let n = g.len();
        let f = crate::homology::snf::smith_normal_form(&IntMatrix::from_rows(g));
        // U G V = I  =>  G^{-1} = V U
        let inv = f.v.mul(&f.u);
        (0..n).map(|i| (0..n).map(|j| inv.get(i, j).to_i64().unwrap()).collect()).collect()
    }

    fn rational_rank(m: &IntMatrix) -> usize {
        invariant_factors(m).len()
    }

    #[test]
    fn free_ranks_match_rational_ranks() {
        let mut rng = sample::rng(11);
        for _ in 0..50 {
            let c = random_complex(&mut rng);
            let h = complex_homology(&c).unwrap();
            let r1 = rational_rank(&c.boundary(1).to_dense());
            let r2 = rational_rank(&c.boundary(2).to_dense());
            let ranks = c.ranks();
            assert_eq!(h[0].free_rank, ranks[0] - r1);
            assert_eq!(h[1].free_rank, ranks[1] - r1 - r2);
            assert_eq!(h[2].free_rank, ranks[2] - r2);
            // torsion of H_0 and H_1 from the dense SNF directly
            let t0: Vec<BigUint> = invariant_factors(&c.boundary(1).to_dense())
                .into_iter()
                .map(|f| f.to_biguint().unwrap())
                .collect();
            assert_eq!(h[0], AbelianGroupDescriptor::canonical(ranks[0] - r1, t0));
            let t1: Vec<BigUint> = invariant_factors(&c.boundary(2).to_dense())
                .into_iter()
                .map(|f| f.to_biguint().unwrap())
                .collect();
            assert_eq!(h[1], AbelianGroupDescriptor::canonical(ranks[1] - r1 - r2, t1));
        }
    }
}
