//! Numerical toolkit for ring Q-mappings.
//!
//! The crate is organised bottom-up:
//!
//! * [`geom`]: compactified n-space, the chordal metric and the antipodal involution.
//! * [`quadrature`]: Gauss–Legendre radial rules and spherical node sets.
//! * [`qprofile`]: dilatation profiles `Q`, spherical means, admissible functions and
//!   the sufficient conditions for equicontinuity.
//! * [`modulus`]: exact ring moduli and a grid solver for condenser capacity.
//! * [`maps`]: radial stretch maps, the truncated-profile counterexample family and
//!   the ring-Q inequality checker.
//! * [`bounds`]: closed-form distortion bounds and their comparison with measurements.
//! * [`setfn`]: the modulus-based set function `c(E)`.
//! * [`report`]: end-to-end acceptance experiments shared by the CLI and test-suite.

pub mod bounds;
pub mod error;
pub mod geom;
pub mod maps;
pub mod modulus;
pub mod qprofile;
pub mod quadrature;
pub mod report;
pub mod setfn;
pub mod table;

pub use error::{Error, Result};
pub use geom::ExtPoint;
