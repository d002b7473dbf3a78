//! Regenerates the bundled meshes under `assets/`.
//!
//! ```text
//! cargo run --release --example gen_meshes [OUT_DIR]
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use srj::problems::meshgen::{airfoil, disk, plate_with_hole};
use srj::problems::Mesh;

fn main() -> srj::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets"));
    std::fs::create_dir_all(&out)?;
    let suffixes = ["", "_medium", "_fine"];
    for (k, suffix) in suffixes.iter().enumerate() {
        let f = 1usize << k;
        let meshes: [(&str, Mesh); 3] = [
            ("disk", disk(8 * f, 2024)?),
            ("plate", plate_with_hole(4 * f)?),
            ("airfoil", airfoil(2 * f)?),
        ];
        for (name, mesh) in meshes {
            let path = out.join(format!("{name}{suffix}.mesh"));
            mesh.write(BufWriter::new(File::create(&path)?))?;
            println!(
                "{}: {} nodes, {} triangles, {} unknowns",
                path.display(),
                mesh.nodes.len(),
                mesh.triangles.len(),
                mesh.interior_count()
            );
        }
    }
    Ok(())
}
