//! Numerical laboratory for the cylinder reduction of the conformal
//! Dirac-Einstein system: the four-dimensional Hamiltonian flow, its
//! variational formulation on periodic functions, and the maps back to
//! radial profiles on punctured space and on the sphere.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod integrate;
pub mod io;
pub mod linear;
pub mod orbits;
pub mod spectral;
pub mod verify;

pub use dynamics::{
    hamiltonian, p_minus, p_plus, vector_field, EquilibriumCatalog, RotatedState4, SpinorPair,
    State4,
};
pub use error::{Error, Result};
pub use geometry::{ProfileChart, RadialProfile, Spinor2};
pub use integrate::{integrate, Method, StepperConfig, Trajectory};
pub use orbits::{HomoclinicProfile, OrbitRecord, PeriodicOrbit};
pub use spectral::{EnergyBreakdown, NehariResiduals, PeriodicField, SpectrumA};
