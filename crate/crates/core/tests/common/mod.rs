#![allow(dead_code)]

pub mod astgen;
pub mod fixtures;

use std::path::PathBuf;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}
