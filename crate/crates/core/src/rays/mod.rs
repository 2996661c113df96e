//! Green potential, external rays and the regions they bound.

mod region;
mod tracer;

pub use region::{
    build_standard_regions, labeled_fixed_points, region_contains, RayRegion, StandardRegions,
    REGION_START_POTENTIAL,
};
pub use tracer::{
    far_inverse, landing_point, landing_rays, potential, pullback, trace_ray, trace_rays,
    RayNode, RayOptions, TracedRay, END_POTENTIAL, START_POTENTIAL,
};
