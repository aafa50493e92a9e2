//! Persistence and dataset plumbing: feature matrices, manifests, splits,
//! preprocessing, photo collection and training-config emission.

pub mod embeddings;
pub mod fetch;
pub mod manifest;
pub mod preprocess;
pub mod prompts;
pub mod train_config;

pub use embeddings::{read_embeddings, write_embeddings, EmbeddingMatrix};
pub use fetch::{fetch_images, FetchOptions, FetchOutcome};
pub use manifest::{split_dataset, DatasetManifest, ImageRecord, Split, SplitCounts};
pub use preprocess::{resize_normalize, resize_normalize_to, ImageDecoder, PpmDecoder, RgbImage};
pub use train_config::{emit_train_config, load_train_config, Conditioning, TrainConfig};
