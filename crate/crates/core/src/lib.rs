//! Placement of chained virtual network functions under processing-resource
//! sharing costs.
//!
//! The crate models a physical network of multi-core NFV nodes, a catalog of
//! VNFs and SFC templates, and the context-switching and upscaling costs that
//! arise when VNF instances share CPU cores. On top of that it provides a
//! two-phase greedy embedder ([`hca`]), an independent solution validator
//! ([`embedding::validate`]), a mixed-integer model with LP export and an
//! exhaustive small-instance solver ([`ilp`]), and a seeded experiment
//! harness ([`harness`]).

pub mod costs;
pub mod embedding;
pub mod fixtures;
pub mod harness;
pub mod hca;
pub mod ilp;
pub mod network;
pub mod scenario;
pub mod services;

pub use network::{LinkId, NodeId, Path, PhysicalNetwork};
pub use scenario::Scenario;
pub use services::{Catalog, SfcId, VnfId};
