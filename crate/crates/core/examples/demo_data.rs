//! Regenerates the bundled demo data: `cargo run -p polarlex-core --example demo_data -- data`

use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"));
    polarlex_core::synthetic::write_demo_data(&dir)?;
    println!("wrote demo data to {}", dir.display());
    Ok(())
}
