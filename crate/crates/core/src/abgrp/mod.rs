//! Exact linear algebra over finitely presented abelian groups.

mod echelon;
mod group;
mod hom;
mod lattice;
mod snf;
mod vector;

pub use echelon::{Echelon, Reduction};
pub use group::{describe_group, Element, FpAbGroup, GroupStructure};
pub use lattice::{Lattice, ModEchelon};
pub use hom::{offsets, solve, subquotient, GroupHom, Subquotient};
pub use snf::{smith_normal_form, IntMatrix, Snf};
pub use vector::{linear_combination, SparseVec};
