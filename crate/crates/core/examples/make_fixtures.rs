//! Regenerates the bundled fixtures.
//!
//! cargo run -p sieve-core --example make_fixtures -- [out_dir]

use std::path::{Path, PathBuf};

fn main() -> std::io::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"));
    sieve_core::synth::write_fixtures(&root)?;
    println!("fixtures written to {}", root.display());
    Ok(())
}
