//! Forward reachability for discrete-time neural feedback systems.
//!
//! Nonlinear transition functions are enclosed by piecewise-linear bounding
//! sets over Delaunay triangulations of rectilinear grids. Enclosures and
//! ReLU controllers are encoded as mixed-integer linear programs whose
//! optima give box over-approximations of the reachable states.

pub mod bounding;
pub mod cli;
pub mod config;
pub mod expr;
pub mod grid;
pub mod milp;
pub mod netfile;
pub mod reach;
pub mod solver;
pub mod triangulation;
pub mod univariate;
