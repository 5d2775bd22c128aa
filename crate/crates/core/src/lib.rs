//! Position error bounds for antenna-array agents from TOA, AOA and Doppler information.

pub mod array;
pub mod efim;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod signal;

pub use array::{ArraySpec, UoaClass};
pub use efim::{DynamicMode, EfimResult, Param, SpebValue, StaticMode};
pub use error::{Error, Result};
pub use model::{
    AgentMotion, AnchorNode, AntennaArray, ArrayPose, KnowledgeFlags, PathComponent, Position2D,
    Scenario, SPEED_OF_LIGHT,
};
pub use signal::{ComplexSampleSeries, SignalSummary};
