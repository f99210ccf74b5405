//! Vertical flotation of solids of revolution released at a liquid surface.
//!
//! * [`solids`]: shapes and their submerged-fraction exponents;
//! * [`dynamics`]: piecewise equations of motion, energy, classification and
//!   event-detecting integration;
//! * [`elliptic`]: Weierstrass ℘ for real invariants;
//! * [`analytic`]: closed-form trajectories for cylinder, paraboloid and cone;
//! * [`cli`]: the `flotation` command-line front end.

pub mod analytic;
pub mod cli;
pub mod dynamics;
pub mod elliptic;
pub mod integrator;
pub mod solids;
