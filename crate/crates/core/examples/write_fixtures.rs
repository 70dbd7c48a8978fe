//! Regenerates the files under `data/fixtures/`.

use std::path::Path;

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    std::fs::create_dir_all(&dir)?;
    for (name, contents) in csembed::fixtures::shipped_files() {
        std::fs::write(dir.join(name), contents)?;
        eprintln!("wrote {}", dir.join(name).display());
    }
    Ok(())
}
