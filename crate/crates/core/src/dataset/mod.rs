//! Input catalogs, per-sample seeding, the parallel generation engine and
//! the JSONL manifest.
//!
//! Output tree: `images/<id>.png`, `masks/<id>.png`, `manifest.jsonl`,
//! `config.snapshot`. Every byte is a function of the snapshot and the input
//! files alone; the worker count is unobservable.

pub mod catalog;
mod config;
mod engine;
mod manifest;
mod seed;

pub use catalog::{ingest_faces, ingest_occluders, ingest_textures, FaceCatalog, OccluderCatalog, TextureEntry};
pub use config::{config_hash, GenerationConfig, Pipeline};
pub use engine::{
    verify_sample, write_demo_inputs, FileCheck, Generated, Generator, PixelDiff, RunSummary, Verification,
    IMAGES_DIR, MANIFEST_FILE, MASKS_DIR, SNAPSHOT_FILE,
};
pub use manifest::{read_manifest, write_manifest, ManifestRecord, SampleStatus};
pub use seed::derive_seed;
