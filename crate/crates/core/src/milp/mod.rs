//! Mixed-integer encodings: the model container, polyhedral enclosures,
//! ReLU networks and the dependency graph that wires them together.

pub mod enclosure;
pub mod graph;
pub mod model;
pub mod relu;

pub use enclosure::{enclosure_model, encode_enclosure, EnclosureVars, EncodeError};
pub use graph::{DependencyGraph, EdgeKind, Vertex};
pub use model::{
    Constraint, MilpModel, ModelError, ObjSense, Objective, RowSense, VarId, VarKind, Variable,
};
pub use relu::{
    encode_relu_network, propagate_preactivation_bounds, Activation, Layer, LayerBounds,
    NetworkError, NeuralNetwork,
};
