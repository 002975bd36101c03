//! Applications: normal numbers, typical points of interval maps, and
//! integration against invariant measures of expanding maps.

mod srb;
mod typical_points;

pub use srb::{l1_norm, srb_integrate, srb_measure, DecayProfile, DensityCache, SrbMeasure, StepDensity};
pub use typical_points::{
    cylinder_sequence, determined_digits, mu_typical_point, normal_point, normal_sequence, typical_sequence, NormalJob,
    PointOutcome, TypicalObservable,
};
