//! Simulation and finite verification toolkit for nonautonomous discrete
//! dynamical systems on compact metric spaces.

pub mod analysis;
pub mod error;
pub mod families;
pub mod maps;
pub mod report;
pub mod scenario;
pub mod space;
pub mod system;
pub mod verify;

pub use error::{NdsError, Result};
pub use maps::{MapRep, MapSpec};
pub use space::{Point, PointSet, Space};
pub use system::System;
