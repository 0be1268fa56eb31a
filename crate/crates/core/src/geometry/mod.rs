//! Convex polygon and polytope kernels used by the error-probability modules.

pub mod polygon;
pub mod polytope;

pub use polygon::{HalfPlane, Polygon2D};
pub use polytope::{intersect_volume, ConvexPolytope3D, Facet, HalfSpace, Vec3};
