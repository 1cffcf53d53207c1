//! The guide under `book/`, compiled so its listings run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/basis.md")]
pub mod basis {}

#[doc = include_str!("../../../book/src/plant.md")]
pub mod plant {}

#[doc = include_str!("../../../book/src/unconstrained.md")]
pub mod unconstrained {}

#[doc = include_str!("../../../book/src/constrained.md")]
pub mod constrained {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
