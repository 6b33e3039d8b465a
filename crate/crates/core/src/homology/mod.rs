//! Integer homological algebra: Smith normal form, chain complexes, group
//! homology of cyclic and dihedral groups, and the loop-space tables.

pub mod abelian;
pub mod complex;
pub mod groups;
pub mod snf;
pub mod tables;

pub use abelian::AbelianGroupDescriptor;
pub use complex::{complex_homology, ChainComplexZ, SparseMatrix};
pub use groups::{
    bar_resolution_complex, group_homology, periodic_complex, Character, FiniteGroup, HomologyPath,
};
pub use snf::{invariant_factors, smith_normal_form, IntMatrix, SmithForm};
pub use tables::{
    corollary_table, loop_space_o2_table, loop_space_so2_table, parse_bo2, shipped_bo2, truncation_start, Action,
    BettiEntry, BettiTable, CoefficientSpec, Convention, ConventionStamp, SignRule, TableOptions,
};
