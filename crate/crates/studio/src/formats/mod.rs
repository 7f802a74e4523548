//! On-disk and over-the-wire formats.

mod image;
mod records;
mod tables;

pub use image::{decode_png, encode_png, read_png, write_png};
pub use records::{
    read_concordance, read_embeddings, read_roi, write_embeddings, CellFile, ConcordanceLine, EntryLine, Fig3File,
    SummaryFile, TraceFile, TraceStepLine,
};
pub use tables::{parse_feature_matrix, read_answers, read_cases, read_feature_matrix, write_cases};
