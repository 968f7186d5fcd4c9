//! Regenerates `data/author_model.json` from the synthetic labeled fixture.
//!
//! cargo run -p stag-core --example train_author_model > crates/core/data/author_model.json

use stag_core::authors::{mention_contexts, train_author_model, DEFAULT_THRESHOLD};
use stag_core::synth;

fn main() {
    let fixture = synth::author_training_fixture();
    let contexts = mention_contexts(&fixture.papers, &fixture.inst_links);
    let (model, report) = train_author_model(&contexts, &fixture.identity, DEFAULT_THRESHOLD).expect("fixture trains");
    eprintln!("{report:?}");
    println!("{}", serde_json::to_string_pretty(&model).expect("model serializes"));
}
