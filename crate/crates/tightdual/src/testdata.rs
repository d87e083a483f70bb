//! Bundled case fixtures for tests, examples, and the FFI smoke tests.

use std::path::PathBuf;

/// Minimal two-bus case: one generator, one load, one line.
pub const TWO_BUS: &str = include_str!("../../../cases/two_bus.m");

/// Directory holding the bundled `.m` case files.
pub fn cases_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("..")
        .join("..")
        .join("cases")
}

/// Read a bundled case file by file name.
///
/// Panics if the file is missing; fixtures ship with the repository.
pub fn read_case(name: &str) -> String {
    let path = cases_dir().join(name);
    std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("cannot read bundled case {}: {e}", path.display()))
}
