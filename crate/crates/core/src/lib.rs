//! Numerical verification toolkit for asymptotically flat graphical
//! hypersurfaces: ADM mass, level-set volume inequalities, the comparison
//! ODE, Schwarzschild envelope bounds and flat-distance estimates.

pub mod dimension;
pub mod error;
pub mod flatnorm;
pub mod comparison;
pub mod geometry;
pub mod levelsets;
pub mod mass;
pub mod quad;
pub mod schwarzschild;

pub use dimension::{Constants, Dimension};
pub use error::{Error, Result};
pub use geometry::{GraphFunction, GraphKind, Jet, RadialProfile};
