//! Acceptance checks for the morpho workspace live in `tests/acceptance.rs`.
//! They run the desk-scale experiments end to end, so this package sorts
//! after the others and `cargo test --workspace` reports every unit and
//! integration test before the long run starts.
