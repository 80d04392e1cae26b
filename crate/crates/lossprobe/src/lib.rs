//! lossprobe: automated detection of data loss faults in lifecycle-driven
//! GUI apps.
//!
//! The engine combines a biased model-based exploration over an
//! enabledness abstraction, data-loss-revealing actions built around double
//! screen rotations, and two state-comparison oracles (cropped-grayscale
//! snapshot diffing and view-hierarchy property diffing). It is verified
//! against a deterministic simulated app runtime with seeded fault
//! injection; the driver trait in [`sim::driver`] is the seam where a
//! real-device adapter would plug in.

pub mod bench;
pub mod cli;
pub mod explorer;
pub mod hash;
pub mod image;
pub mod model;
pub mod oracles;
pub mod proptree;
pub mod replay;
pub mod report;
pub mod sim;
