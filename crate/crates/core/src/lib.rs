//! Planning engine for circular production economies: products as trees of
//! substitutable inputs, life-cycle impact vectors, and search over supplier
//! choices under planetary bounds.

pub mod bitset;
pub mod economy;
pub mod error;
pub mod fixture;
pub mod gen;
pub mod io;
pub mod lca;
pub mod report;
pub mod search;

pub use bitset::{reuse_match, BitsetTable, MaterialBitset, ReuseReport};
pub use economy::{Configuration, Demand, Economy, MaterialId, ProductId, Supplier};
pub use error::{Diagnostic, Error};
pub use lca::{LcaVector, PlanetaryBounds, Weights};
pub use search::{Evaluation, Move, Objective, SearchResult, SearchState};
