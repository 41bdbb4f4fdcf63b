//! Doctest mirror of the guide in `book/`: every Rust code block in the
//! chapters compiles and runs under `cargo test --doc`, so the book cannot
//! drift out of sync with the library.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/maps-and-generators.md")]
mod maps_and_generators {}

#[doc = include_str!("../../../book/src/minimal-dissipation.md")]
mod minimal_dissipation {}

#[doc = include_str!("../../../book/src/central-spin.md")]
mod central_spin {}

#[doc = include_str!("../../../book/src/telegraph-noise.md")]
mod telegraph_noise {}

#[doc = include_str!("../../../book/src/thermodynamics.md")]
mod thermodynamics {}

#[doc = include_str!("../../../book/src/command-line.md")]
mod command_line {}
