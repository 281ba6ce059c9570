//! Acceptance suite for the elastoct workspace. The checks live in
//! `tests/acceptance.rs`; run them with `cargo test -p elastoct-validation`.
