//! Skeleton ingestion, voxelization and network statistics.

mod format;
mod histogram;
mod skeleton;
mod voxel;

pub(crate) use format::{LeReader, LeWriter};
pub use format::{load_domain, read_domain, save_domain, write_domain, DOMAIN_MAGIC, DOMAIN_VERSION};
pub use histogram::{diameter_histogram, diameter_histogram_from_segments, DiameterHistogram, LogNormalFit};
pub use skeleton::{Capsule, CapsuleIndex, IoletKind, ResolvedIolet, SkeletonIolet, SkeletonNode, VesselSkeleton};
pub use voxel::{
    lattice_diameter_percentiles, length_fraction_above, voxelize, wall_link_fractions, IoletLink, IoletPlane,
    SiteClass, VoxelDomain, VoxelizeOptions, WallLink, BISECTION_MAX_ITER, BISECTION_TOLERANCE, MIN_LATTICE_DIAMETER,
};
