//! Procedural forehead-crease identity synthesis.
//!
//! Identities are laid out on a 6x6 grid: a [`geometry::GridMask`] decides
//! which rows hold a principal crease (an interpolating B-spline across the
//! row) and which hold short non-prominent creases (quadratic Bezier curves
//! in 1x2 cells). [`raster`] renders identities to binary visual prompts,
//! [`augment`] derives mated samples, [`edgeproc`] turns real crease photos
//! into comparable edge maps, [`bridge`] holds the Brownian-bridge schedule
//! math, [`metrics`] scores datasets and [`dataset`] ties it all together.

pub mod augment;
pub mod bridge;
pub mod dataset;
pub mod edgeproc;
pub mod geometry;
pub mod gray;
pub mod metrics;
pub mod raster;
pub mod seed;

pub use gray::ImageGray;
