//! Dataset ingestion and persistence.

mod checkpoint;
mod container;
mod features;
mod idx;
mod manifest;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, Checkpoint, CheckpointKind};
pub use container::{hash_file, FormatVersion, FORMAT_VERSION};
pub use features::{load_features, save_features, FeatureSet, Provenance};
pub use idx::{load_idx, load_mnist_split, parse_images, parse_labels, write_idx, ImageDataset, IMAGE_MAGIC, LABEL_MAGIC};
pub use manifest::Manifest;
