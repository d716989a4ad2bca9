//! Doc-test wiring for the guide in `book/`.
//!
//! Each chapter is included as rustdoc on a placeholder item, so
//! `cargo test --doc` compiles and runs every fenced snippet in the
//! book. A chapter edit that breaks a snippet fails the test suite.

#[doc = include_str!("../../../book/src/introduction.md")]
pub struct Introduction;
