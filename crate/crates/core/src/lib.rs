//! Face mesh processing for 3D face parsing through a 2D disk image.
//!
//! The crate covers the geometric half of the "3D → 2D → 3D" route:
//!
//! * [`mesh`]: triangle meshes with vertex colors, OBJ-subset I/O, topology
//!   validation and hole repair.
//! * [`denoise`]: severe-outlier replacement followed by iterative weighted
//!   local-plane regression in the facing (Z) direction.
//! * [`param`]: harmonic disk map, quasi-conformal improvement of the inner
//!   region, rotation alignment and angle-distortion reporting.
//! * [`raster`]: 4-channel face images and label images in the unit disk, and
//!   re-mapping of predicted labels back to the mesh.
//! * [`metrics`]: label weights, confusion matrices and mean IoU in pixel
//!   and area measure.
//! * [`fixtures`]: deterministic synthetic meshes with closed-form ground truth.

pub mod denoise;
pub mod error;
pub mod fixtures;
pub mod labels;
pub mod mesh;
pub mod metrics;
pub mod param;
pub mod raster;
pub mod sparse;

pub use error::{Error, Result};
pub use mesh::Mesh;
