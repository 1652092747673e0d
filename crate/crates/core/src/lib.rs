//! Exact sheaf cohomology on finite spaces, hypercoverings, and rigidified
//! torsor cocycles.

pub mod abgrp;
pub mod checks;
pub mod cochain;
pub mod error;
pub mod finsite;
pub mod fixtures;
pub mod gerbe;
pub mod int;
pub mod semisimp;
pub mod sheaf;
pub mod rtc;
pub mod torsor;

pub use error::{Error, Result};
pub use int::Int;
