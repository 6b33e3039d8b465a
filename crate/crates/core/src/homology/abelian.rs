//! Finitely generated abelian groups in invariant-factor form.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// `Z^free_rank + Z/d_1 + ... + Z/d_k` with `2 <= d_1 | d_2 | ... | d_k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct AbelianGroupDescriptor {
    pub free_rank: usize,
    pub torsion: Vec<BigUint>,
}

impl AbelianGroupDescriptor {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn free(rank: usize) -> Self {
        AbelianGroupDescriptor {
            free_rank: rank,
            torsion: Vec::new(),
        }
    }

    /// `Z/m` (`Z` for `m = 0`, trivial for `m = 1`).
    pub fn cyclic(m: u64) -> Self {
        Self::canonical(0, [BigUint::from(m)])
    }

    /// Canonical form of `Z^free + sum Z/a_i`; orders `0` count as free, `1` vanish.
    pub fn canonical(free_rank: usize, orders: impl IntoIterator<Item = BigUint>) -> Self {
        let mut free = free_rank;
        let mut a: Vec<BigUint> = Vec::new();
        for o in orders {
            if o.is_zero() {
                free += 1;
            } else if !o.is_one() {
                a.push(o);
            }
        }
        // (a_i, a_j) -> (gcd, lcm) leaves a divisibility chain
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                let g = a[i].gcd(&a[j]);
                let l = &a[i] / &g * &a[j];
                a[i] = g;
                a[j] = l;
            }
        }
        a.retain(|x| !x.is_one());
        a.sort();
        AbelianGroupDescriptor { free_rank: free, torsion: a }
    }

    pub fn from_u64(free_rank: usize, torsion: &[u64]) -> Self {
        Self::canonical(free_rank, torsion.iter().map(|&t| BigUint::from(t)))
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        Self::canonical(
            self.free_rank + other.free_rank,
            self.torsion.iter().chain(&other.torsion).cloned(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    /// True iff the torsion list is a divisibility chain of factors `>= 2`.
    pub fn is_canonical(&self) -> bool {
        self.torsion.iter().all(|t| *t >= BigUint::from(2u32))
            && self.torsion.windows(2).all(|w| (&w[1] % &w[0]).is_zero())
    }
}

impl fmt::Display for AbelianGroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        let mut i = 0;
        while i < self.torsion.len() {
            let t = &self.torsion[i];
            let mut j = i;
            while j < self.torsion.len() && &self.torsion[j] == t {
                j += 1;
            }
            if j - i == 1 {
                parts.push(format!("Z/{t}"));
            } else {
                parts.push(format!("(Z/{t})^{}", j - i));
            }
            i = j;
        }
        write!(f, "{}", parts.join(" + "))
    }
}

impl Serialize for AbelianGroupDescriptor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let torsion: Vec<Box<RawValue>> = self
            .torsion
            .iter()
            .map(|t| RawValue::from_string(t.to_string()).expect("integer literal"))
            .collect();
        let mut st = s.serialize_struct("AbelianGroupDescriptor", 2)?;
        st.serialize_field("free_rank", &self.free_rank)?;
        st.serialize_field("torsion", &torsion)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form() {
        let g = AbelianGroupDescriptor::from_u64(1, &[6, 4, 1]);
        assert_eq!(g, AbelianGroupDescriptor::from_u64(1, &[2, 12]));
        assert_eq!(g.torsion, vec![BigUint::from(2u32), BigUint::from(12u32)]);
        assert!(g.is_canonical());
        assert_eq!(g.to_string(), "Z + Z/2 + Z/12");
        assert_eq!(AbelianGroupDescriptor::from_u64(0, &[2, 3]).to_string(), "Z/6");
        assert_eq!(AbelianGroupDescriptor::from_u64(0, &[0, 2, 2]).to_string(), "Z + (Z/2)^2");
        assert_eq!(AbelianGroupDescriptor::zero().to_string(), "0");
        let s = AbelianGroupDescriptor::cyclic(2).direct_sum(&AbelianGroupDescriptor::cyclic(4));
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"free_rank":0,"torsion":[2,4]}"#);
    }
}
