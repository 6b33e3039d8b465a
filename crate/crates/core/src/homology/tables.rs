//! Equivariant loop-space homology tables of `S^n`.
//!
//! `H^{SO(2)}_*(L) = H_*(BSO(2)) + sum_m H_{* - m(n-1)}(Z_m; Z_chi)` and the
//! `O(2)` analogue with `BO(2)` and the dihedral groups `D_m`. Each summand
//! is shifted by `m(n-1)`; only `m <= m_range` is summed, and degrees that a
//! larger `m` could reach are flagged as truncated.

use serde::{Deserialize, Serialize};

use super::abelian::AbelianGroupDescriptor;
use super::groups::{group_homology, Character, FiniteGroup, HomologyPath};
use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// The shipped `H_*(BO(2); Z)` table.
pub const BO2_JSON: &str = include_str!("../../data/bo2.json");

/// How one coefficient sign is chosen for each `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignRule {
    /// Graded reordering sign of `Z[n-1]^{(x)m}`.
    #[default]
    Koszul,
    Plus,
    Minus,
}

impl std::str::FromStr for SignRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "koszul" => Ok(SignRule::Koszul),
            "plus" | "+1" | "+" => Ok(SignRule::Plus),
            "minus" | "-1" | "-" => Ok(SignRule::Minus),
            _ => Err(Error::InvalidInput(format!("unknown sign rule '{s}' (koszul, plus, minus)"))),
        }
    }
}

/// Sign rules for the rotation generator and for reflections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Convention {
    pub tau: SignRule,
    pub refl: SignRule,
}

impl Convention {
    pub fn stamp(&self) -> ConventionStamp {
        let text = |r: SignRule, koszul: &str| match r {
            SignRule::Koszul => koszul.to_string(),
            SignRule::Plus => "+1".to_string(),
            SignRule::Minus => "-1".to_string(),
        };
        ConventionStamp {
            tau_sign_rule: text(self.tau, "koszul: (-1)^((n-1)(m-1))"),
            refl_sign_rule: text(self.refl, "koszul: (-1)^((n-1)m(m-1)/2)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConventionStamp {
    pub tau_sign_rule: String,
    pub refl_sign_rule: String,
}

/// The rank-one coefficient module `Z[n-1]^{(x)m}` of one summand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoefficientSpec {
    pub m: usize,
    pub n: usize,
    pub tau_sign: i64,
    pub refl_sign: i64,
    pub degree_shift: usize,
}

fn parity_sign(e: usize) -> i64 {
    if e.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

impl CoefficientSpec {
    /// Koszul signs: a cyclic shift of `m` odd classes of degree `n-1` and the reversal of their order.
    pub fn koszul(m: usize, n: usize) -> Result<Self> {
        Self::with_convention(m, n, Convention::default())
    }

    pub fn with_convention(m: usize, n: usize, conv: Convention) -> Result<Self> {
        if m == 0 || n < 2 {
            return Err(Error::InvalidInput(format!("need m >= 1 and n >= 2, got m = {m}, n = {n}")));
        }
        let pick = |r: SignRule, koszul: i64| match r {
            SignRule::Koszul => koszul,
            SignRule::Plus => 1,
            SignRule::Minus => -1,
        };
        let tau_sign = pick(conv.tau, parity_sign((n - 1) * (m - 1)));
        let refl_sign = pick(conv.refl, parity_sign((n - 1) * (m * (m - 1) / 2)));
        if tau_sign == -1 && m % 2 == 1 {
            return Err(Error::InvalidInput(format!("rotation sign -1 is not a character of Z_{m}")));
        }
        Ok(CoefficientSpec {
            m,
            n,
            tau_sign,
            refl_sign,
            degree_shift: m * (n - 1),
        })
    }

    pub fn character(&self) -> Character {
        Character {
            tau: self.tau_sign,
            refl: self.refl_sign,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Action {
    #[serde(rename = "SO(2)")]
    So2,
    #[serde(rename = "O(2)")]
    O2,
}

impl std::str::FromStr for Action {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "so2" | "so(2)" => Ok(Action::So2),
            "o2" | "o(2)" => Ok(Action::O2),
            _ => Err(Error::InvalidInput(format!("unknown action '{s}' (so2, o2)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BettiEntry {
    pub degree: usize,
    #[serde(flatten)]
    pub group: AbelianGroupDescriptor,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BettiTable {
    pub n: usize,
    pub action: Action,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub max_degree: usize,
    pub m_range: usize,
    pub convention: ConventionStamp,
    pub entries: Vec<BettiEntry>,
}

impl BettiTable {
    pub fn entry(&self, degree: usize) -> Option<&BettiEntry> {
        self.entries.get(degree)
    }

    /// Same degrees, groups and flags (labels and stamps ignored).
    pub fn same_entries(&self, other: &BettiTable) -> bool {
        self.entries == other.entries
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable table")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TableOptions {
    pub convention: Convention,
    /// `Periodic` uses the 2-periodic resolution wherever the group is cyclic
    /// (`Z_m`, and `D_1 = Z_2`); dihedral groups with `m >= 2` always use bars.
    pub path: HomologyPath,
    pub execution: Execution,
}

/// Degrees from which summands with `m > m_range` can contribute.
pub fn truncation_start(n: usize, m_range: usize) -> usize {
    (m_range + 1) * (n - 1)
}

#[derive(Deserialize)]
struct RawDescriptor {
    free_rank: usize,
    torsion: Vec<u64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Bo2File {
    Versioned { version: u32, degrees: Vec<RawDescriptor> },
    Bare(Vec<RawDescriptor>),
}

/// Parses and validates a `BO(2)` table (bare list or `{version, degrees}`).
pub fn parse_bo2(text: &str) -> Result<Vec<AbelianGroupDescriptor>> {
    let file: Bo2File =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("BO(2) table: {e}")))?;
    let raw = match file {
        Bo2File::Versioned { version: 1, degrees } | Bo2File::Bare(degrees) => degrees,
        Bo2File::Versioned { version, .. } => {
            return Err(Error::InvalidInput(format!("BO(2) table version {version} is not supported")))
        }
    };
    let table: Vec<AbelianGroupDescriptor> = raw
        .iter()
        .map(|r| AbelianGroupDescriptor::from_u64(r.free_rank, &r.torsion))
        .collect();
    for (k, (r, d)) in raw.iter().zip(&table).enumerate() {
        let as_listed: Vec<_> = r.torsion.iter().map(|&t| num_bigint::BigUint::from(t)).collect();
        if as_listed != d.torsion {
            return Err(Error::InvalidInput(format!("BO(2) degree {k} is not in invariant-factor form")));
        }
    }
    // pi_1 BO(2) = Z/2 and BO(2) is connected
    let low = [AbelianGroupDescriptor::free(1), AbelianGroupDescriptor::cyclic(2)];
    for (k, want) in low.iter().enumerate() {
        if table.get(k) != Some(want) {
            return Err(Error::InvalidInput(format!("BO(2) degree {k} must be {want}")));
        }
    }
    Ok(table)
}

pub fn shipped_bo2() -> Vec<AbelianGroupDescriptor> {
    parse_bo2(BO2_JSON).expect("shipped BO(2) table is valid")
}

/// `H_*(BSO(2)) = H_*(CP^infinity)`.
fn bso2(degree: usize) -> AbelianGroupDescriptor {
    AbelianGroupDescriptor::free(usize::from(degree.is_multiple_of(2)))
}

fn assemble(
    n: usize,
    action: Action,
    max_degree: usize,
    m_range: usize,
    base: impl Fn(usize) -> AbelianGroupDescriptor,
    opts: &TableOptions,
) -> Result<BettiTable> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("n must be at least 2, got {n}")));
    }
    let ms: Vec<usize> = (1..=m_range).filter(|m| m * (n - 1) <= max_degree).collect();
    let summands = par::map_slice(opts.execution, &ms, |&m| -> Result<(usize, Vec<AbelianGroupDescriptor>)> {
        let spec = CoefficientSpec::with_convention(m, n, opts.convention)?;
        let top = max_degree - spec.degree_shift;
        let (group, path) = match (action, opts.path) {
            (Action::So2, p) => (FiniteGroup::Cyclic(m), p),
            // D_1 is Z_2 generated by the reflection
            (Action::O2, HomologyPath::Periodic) if m == 1 => (FiniteGroup::Cyclic(2), HomologyPath::Periodic),
            (Action::O2, _) => (FiniteGroup::Dihedral(m), HomologyPath::Bar),
        };
        let chi = match (action, group) {
            (Action::O2, FiniteGroup::Cyclic(_)) => Character::new(spec.refl_sign, 1)?,
            _ => spec.character(),
        };
        Ok((spec.degree_shift, group_homology(group, chi, top, path, opts.execution)?))
    });
    let summands = summands.into_iter().collect::<Result<Vec<_>>>()?;
    let cut = truncation_start(n, m_range);
    let entries = (0..=max_degree)
        .map(|d| {
            let group = summands
                .iter()
                .filter(|(shift, _)| d >= *shift)
                .fold(base(d), |acc, (shift, h)| acc.direct_sum(&h[d - shift]));
            BettiEntry {
                degree: d,
                group,
                truncated: d >= cut,
            }
        })
        .collect();
    Ok(BettiTable {
        n,
        action,
        label: None,
        max_degree,
        m_range,
        convention: opts.convention.stamp(),
        entries,
    })
}

pub fn loop_space_so2_table(n: usize, max_degree: usize, m_range: usize, opts: &TableOptions) -> Result<BettiTable> {
    assemble(n, Action::So2, max_degree, m_range, bso2, opts)
}

pub fn loop_space_o2_table(
    n: usize,
    max_degree: usize,
    m_range: usize,
    bo2: &[AbelianGroupDescriptor],
    opts: &TableOptions,
) -> Result<BettiTable> {
    if bo2.len() <= max_degree {
        return Err(Error::InvalidInput(format!(
            "BO(2) table covers degrees 0..{}, degree {max_degree} requested",
            bo2.len().saturating_sub(1)
        )));
    }
    assemble(n, Action::O2, max_degree, m_range, |d| bo2[d].clone(), opts)
}

/// The `O(2)` table of `S^2` (`S^3` with `spatial`), labelled as the symplectic
/// homology of the bounded components below the first critical value.
pub fn corollary_table(max_degree: usize, m_range: usize, spatial: bool, opts: &TableOptions) -> Result<BettiTable> {
    let n = if spatial { 3 } else { 2 };
    let mut t = loop_space_o2_table(n, max_degree, m_range, &shipped_bo2(), opts)?;
    let problem = if spatial { "spatial" } else { "planar" };
    t.label = Some(format!(
        "O(2)-equivariant symplectic homology of a bounded component of the regularized {problem} problem below the first critical value"
    ));
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn koszul_defaults() {
        for n in [3, 5] {
            for m in 1..8 {
                let c = CoefficientSpec::koszul(m, n).unwrap();
                assert_eq!((c.tau_sign, c.refl_sign), (1, 1));
            }
        }
        let signs: Vec<(i64, i64)> = (1..=5)
            .map(|m| {
                let c = CoefficientSpec::koszul(m, 2).unwrap();
                (c.tau_sign, c.refl_sign)
            })
            .collect();
        assert_eq!(signs, vec![(1, 1), (-1, -1), (1, -1), (-1, 1), (1, 1)]);
        let minus = Convention {
            tau: SignRule::Minus,
            refl: SignRule::Koszul,
        };
        assert!(CoefficientSpec::with_convention(3, 2, minus).is_err());
    }

    #[test]
    fn bo2_file() {
        let t = shipped_bo2();
        assert!(t.len() >= 13);
        assert_eq!(t[4], AbelianGroupDescriptor::from_u64(1, &[2]));
        assert_eq!(t[8], AbelianGroupDescriptor::from_u64(1, &[2, 2]));
        assert!(parse_bo2(r#"[{"free_rank": 1, "torsion": []}, {"free_rank": 0, "torsion": [2]}]"#).is_ok());
        assert!(parse_bo2(r#"[{"free_rank": 1, "torsion": []}, {"free_rank": 1, "torsion": []}]"#).is_err());
        let unordered = r#"[{"free_rank": 1, "torsion": []}, {"free_rank": 0, "torsion": [2]}, {"free_rank": 0, "torsion": [4, 2]}]"#;
        assert!(matches!(parse_bo2(unordered), Err(Error::InvalidInput(e)) if e.contains("invariant-factor")));
        assert!(parse_bo2(r#"{"version": 2, "degrees": []}"#).is_err());
    }

    #[test]
    fn so2_small() {
        let t = loop_space_so2_table(3, 4, 1, &TableOptions::default()).unwrap();
        let g: Vec<String> = t.entries.iter().map(|e| e.group.to_string()).collect();
        // BSO(2) in even degrees; Z_1 summand (H_0 = Z only) at degree 2
        assert_eq!(g, ["Z", "0", "Z^2", "0", "Z"]);
        let flags: Vec<bool> = t.entries.iter().map(|e| e.truncated).collect();
        assert_eq!(flags, [false, false, false, false, true]);
    }

    #[test]
    fn o2_m1_by_hand() {
        // n = 2, m = 1: D_1 = Z_2 acting by the reflection sign +1, shifted by 1
        let t = loop_space_o2_table(2, 4, 1, &shipped_bo2(), &TableOptions::default()).unwrap();
        let g: Vec<String> = t.entries.iter().map(|e| e.group.to_string()).collect();
        assert_eq!(g, ["Z", "Z + Z/2", "(Z/2)^2", "Z/2", "Z + (Z/2)^2"]);
    }
}
