pub mod authors;
pub mod citelink;
pub mod dedup;
pub mod demo;
pub mod enrich;
pub mod graphstore;
pub mod ingest;
pub mod kbnorm;
pub mod linear;
pub mod pipeline;
pub mod recommend;
pub mod synth;
pub mod text;
