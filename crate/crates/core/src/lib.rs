//! Repeated-measurement purification of a qubit coupled to a measured partner
//! qubit, under dephasing and zero-temperature dissipative environments.
//!
//! Basis convention for joint operators: `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩` with the
//! measured qubit X first, i.e. index `2x + s` with `↑ = 0`, `↓ = 1`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod closedform;
pub mod dephasing;
pub mod dissipative;
pub mod error;
pub mod linalg;
pub mod trajectory;

pub use error::{Error, Result};
pub use linalg::{eig2, CMat2, CMat4, CVec2, CVec4, EigensystemV, C64};
pub use trajectory::{StepRecord, Trajectory};
