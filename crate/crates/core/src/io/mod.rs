//! Instance files: a JSON schema for hand-written games and the TNTP network
//! format for road networks.

pub mod json;
pub mod tntp;

pub use json::{instance_from_json, instance_to_json, InstanceDto};
pub use tntp::{parse_tntp, OffsetMode, TntpInstance, TntpParams};
