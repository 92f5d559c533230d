//! Regenerates the bundled GDP fixtures under `crates/core/data/`.
//!
//! `cargo run -p cyclekit --example gen_fixtures`

use std::path::Path;

use cyclekit::synthetic::fixture_csv;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    std::fs::create_dir_all(&dir)?;
    for (name, shock) in [("synthetic_calm.csv", false), ("synthetic_shock.csv", true)] {
        let path = dir.join(name);
        std::fs::write(&path, fixture_csv(shock)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
