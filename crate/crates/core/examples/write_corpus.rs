//! Writes the synthetic corpus as annotation JSON files.
//!
//! Usage: `cargo run -p anno3d-core --example write_corpus -- [dir]` (default `corpus`).

use std::path::PathBuf;

use anno3d_core::annotation::serialize;
use anno3d_core::synthetic;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "corpus".into()));
    std::fs::create_dir_all(&dir)?;
    for doc in synthetic::corpus() {
        let path = dir.join(format!("{}.json", doc.image_id));
        std::fs::write(&path, serialize(&doc))?;
        println!("{}", path.display());
    }
    Ok(())
}
