//! Cyclic and dihedral groups, sign characters, and their integer homology.
//!
//! The authoritative path is the normalized bar resolution tensored with a
//! rank-one module. For cyclic groups the 2-periodic resolution
//! `... -> Z[G] -(N)-> Z[G] -(t-1)-> Z[G] -> Z` gives an independent fast path.

use std::fmt;

use serde::Serialize;

use super::abelian::AbelianGroupDescriptor;
use super::complex::{complex_homology, ChainComplexZ, SparseMatrix};
use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Largest group order accepted by the bar path.
pub const MAX_GROUP_ORDER: usize = 16;
/// Largest homology degree accepted by the bar path.
pub const MAX_BAR_DEGREE: usize = 6;
/// Largest number of cells in the top chain module of a bar complex.
pub const MAX_BAR_CELLS: usize = 1_000_000;

/// `Z_m` (rotations `r^a`) or `D_m` of order `2m` (elements `r^a s^b`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", content = "m", rename_all = "lowercase")]
pub enum FiniteGroup {
    Cyclic(usize),
    Dihedral(usize),
}

impl FiniteGroup {
    pub fn m(&self) -> usize {
        match *self {
            FiniteGroup::Cyclic(m) | FiniteGroup::Dihedral(m) => m,
        }
    }

    pub fn order(&self) -> usize {
        match *self {
            FiniteGroup::Cyclic(m) => m,
            FiniteGroup::Dihedral(m) => 2 * m,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m() == 0 {
            return Err(Error::InvalidInput("group parameter m must be at least 1".into()));
        }
        Ok(())
    }

    /// Element `index` as `(a, b)` meaning `r^a s^b`; the identity is index 0.
    fn split(&self, index: usize) -> (usize, usize) {
        let m = self.m();
        (index % m, index / m)
    }

    /// Product `g h` of element indices.
    pub fn multiply(&self, g: usize, h: usize) -> usize {
        let m = self.m();
        let (a, b) = self.split(g);
        let (c, d) = self.split(h);
        // s r^c = r^{-c} s
        let a2 = if b == 0 { (a + c) % m } else { (a + m - c) % m };
        a2 + m * ((b + d) % 2)
    }
}

impl fmt::Display for FiniteGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiniteGroup::Cyclic(m) => write!(f, "Z_{m}"),
            FiniteGroup::Dihedral(m) => write!(f, "D_{m}"),
        }
    }
}

/// Rank-one module `Z` with the rotation acting by `tau` and reflections by `refl`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Character {
    pub tau: i64,
    pub refl: i64,
}

impl Character {
    pub fn trivial() -> Self {
        Character { tau: 1, refl: 1 }
    }

    pub fn new(tau: i64, refl: i64) -> Result<Self> {
        if tau.abs() != 1 || refl.abs() != 1 {
            return Err(Error::InvalidInput(format!("character signs must be +-1, got ({tau}, {refl})")));
        }
        Ok(Character { tau, refl })
    }

    pub fn is_trivial_on(&self, group: FiniteGroup) -> bool {
        self.tau == 1 && (matches!(group, FiniteGroup::Cyclic(_)) || self.refl == 1)
    }

    /// `r^m = 1` forces `tau^m = 1`.
    fn check(&self, group: FiniteGroup) -> Result<()> {
        group.validate()?;
        if self.tau == -1 && group.m() % 2 == 1 {
            return Err(Error::InvalidInput(format!(
                "rotation sign -1 is not a character of {group} (m odd)"
            )));
        }
        Ok(())
    }

    fn value(&self, group: FiniteGroup, g: usize) -> i64 {
        let (a, b) = group.split(g);
        let t = if a % 2 == 1 { self.tau } else { 1 };
        let s = if b == 1 { self.refl } else { 1 };
        t * s
    }
}

/// Cells of degree `k` in the normalized bar complex: `(|G| - 1)^k`.
pub fn bar_cell_count(group: FiniteGroup, k: usize) -> Option<usize> {
    (group.order() - 1).checked_pow(k as u32)
}

/// Normalized bar complex `Z_chi (x)_G B` through degree `max_degree + 1`, so
/// that its homology is exact in degrees `0..=max_degree`.
///
/// Cells `[g_1|...|g_k]` with `g_i != e`, encoded with digit `g_i - 1` at
/// position `i - 1` in base `|G| - 1`.
pub fn bar_resolution_complex(
    group: FiniteGroup,
    chi: Character,
    max_degree: usize,
    exec: Execution,
) -> Result<ChainComplexZ> {
    chi.check(group)?;
    let order = group.order();
    if order > MAX_GROUP_ORDER {
        return Err(Error::SizeCap(format!("|{group}| = {order} exceeds {MAX_GROUP_ORDER}")));
    }
    if max_degree > MAX_BAR_DEGREE {
        return Err(Error::SizeCap(format!("degree {max_degree} exceeds {MAX_BAR_DEGREE}")));
    }
    let top = max_degree + 1;
    match bar_cell_count(group, top) {
        Some(c) if c <= MAX_BAR_CELLS => {}
        _ => {
            return Err(Error::SizeCap(format!(
                "bar complex of {group} needs {}^{top} cells in degree {top}, above {MAX_BAR_CELLS}",
                order - 1
            )))
        }
    }
    let base = order - 1;
    let mut ranks = vec![1usize];
    let mut boundaries = Vec::with_capacity(top);
    for k in 1..=top {
        let cells = base.pow(k as u32);
        let rows = ranks[k - 1];
        let columns = par::map_range(exec, cells, |c| bar_boundary(group, chi, k, c));
        boundaries.push(SparseMatrix::from_columns(rows, columns)?);
        ranks.push(cells);
    }
    ChainComplexZ::new(ranks, boundaries)
}

/// Boundary of one bar cell as `(row, coefficient)` pairs (unsorted, may repeat).
fn bar_boundary(group: FiniteGroup, chi: Character, k: usize, cell: usize) -> Vec<(u32, i64)> {
    let base = group.order() - 1;
    let mut g = Vec::with_capacity(k);
    let mut c = cell;
    for _ in 0..k {
        g.push(c % base + 1);
        c /= base;
    }
    let encode = |elems: &mut dyn Iterator<Item = usize>| -> u32 {
        let mut idx = 0usize;
        let mut scale = 1usize;
        for e in elems {
            idx += (e - 1) * scale;
            scale *= base;
        }
        idx as u32
    };
    let mut out = Vec::with_capacity(k + 1);
    // first face carries the module action
    out.push((encode(&mut g[1..].iter().copied()), chi.value(group, g[0])));
    for i in 1..k {
        let prod = group.multiply(g[i - 1], g[i]);
        if prod == 0 {
            continue;
        }
        let sign = if i % 2 == 0 { 1 } else { -1 };
        let mut it = g[..i - 1].iter().copied().chain(std::iter::once(prod)).chain(g[i + 1..].iter().copied());
        out.push((encode(&mut it), sign));
    }
    if k >= 1 {
        let sign = if k.is_multiple_of(2) { 1 } else { -1 };
        out.push((encode(&mut g[..k - 1].iter().copied()), sign));
    }
    out
}

/// Which resolution computes the homology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HomologyPath {
    #[default]
    Bar,
    /// Cyclic groups only.
    Periodic,
}

/// `H_0, ..., H_max_degree` of `group` with coefficients `chi`, unshifted.
pub fn group_homology(
    group: FiniteGroup,
    chi: Character,
    max_degree: usize,
    path: HomologyPath,
    exec: Execution,
) -> Result<Vec<AbelianGroupDescriptor>> {
    let mut h = match path {
        HomologyPath::Bar => complex_homology(&bar_resolution_complex(group, chi, max_degree, exec)?)?,
        HomologyPath::Periodic => {
            let FiniteGroup::Cyclic(_) = group else {
                return Err(Error::InvalidInput(format!("no periodic resolution is used for {group}")));
            };
            complex_homology(&periodic_complex(group, chi, max_degree)?)?
        }
    };
    h.truncate(max_degree + 1);
    Ok(h)
}

/// `Z_chi (x)_G` of the 2-periodic resolution of `Z_m` through degree `max_degree + 1`:
/// `d_odd = tau - 1`, `d_even = N = sum of tau^a`.
pub fn periodic_complex(group: FiniteGroup, chi: Character, max_degree: usize) -> Result<ChainComplexZ> {
    let FiniteGroup::Cyclic(m) = group else {
        return Err(Error::InvalidInput(format!("{group} is not cyclic")));
    };
    chi.check(group)?;
    let norm: i64 = (0..m as i64).map(|a| chi.tau.pow((a % 2) as u32)).sum();
    let top = max_degree + 1;
    let boundaries = (1..=top)
        .map(|k| {
            let v = if k % 2 == 1 { chi.tau - 1 } else { norm };
            SparseMatrix::from_columns(1, vec![vec![(0, v)]])
        })
        .collect::<Result<Vec<_>>>()?;
    ChainComplexZ::new(vec![1; top + 1], boundaries)
}
