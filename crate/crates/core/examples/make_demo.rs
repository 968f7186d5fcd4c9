//! Writes the demo dataset.
//!
//! cargo run -p stag-core --example make_demo -- data/demo

use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/demo".into()));
    let data = stag_core::demo::demo_dataset();
    stag_core::demo::write_demo(&data, &dir).expect("demo written");
    eprintln!("wrote {}", dir.display());
}
