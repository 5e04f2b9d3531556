//! File formats and scene bundles.

mod bundle;
mod grid;
mod ply;
mod text;

pub use bundle::*;
pub use grid::{
    read_depth, read_point_map, read_sdf_map, write_depth, write_point_map, write_sdf_map, Precision, DEPTH_MAGIC,
    POINT_MAP_MAGIC, SDF_MAGIC,
};
pub use ply::{read_ply, write_ply};
pub use text::{
    read_json, read_jsonl, write_json, write_jsonl, CameraRecord, CandidateRecord, CorrespondenceRecord, PlaneRecord,
    WORLD_TO_CAMERA,
};
