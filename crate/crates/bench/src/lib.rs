//! Inputs shared by the benchmarks.

use std::path::{Path, PathBuf};

use weft_core::frontend::{parse_repository, FrontendConfig, RepoModel};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn load_fixture(name: &str) -> RepoModel {
    parse_repository(&fixture(name), &FrontendConfig::default()).expect("fixture parses")
}
