pub mod config;
pub mod covering;
pub mod error;
pub mod family;
pub mod fsum;
pub mod graph;
pub mod growth;
pub mod heat;
pub mod inequality;
pub mod models;
pub mod par;
pub mod pipeline;
pub mod quadrature;
pub mod space;

pub use error::{Error, Result};
pub use space::{DiscreteSpace, Edge, ScalarField, SpaceData, VertexSubset};
