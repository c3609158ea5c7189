//! Numerical laboratory for two-dimensional Rayleigh-Benard convection in a
//! periodic channel: linear stability of the conduction state, the reduced
//! amplitude equations on the center manifold, direct time integration of the
//! Boussinesq system, and topological classification of the resulting
//! velocity fields.

pub mod basis;
pub mod bc;
pub mod error;
pub mod field;
pub mod integrate;
pub mod legendre;
pub mod manifold;
pub mod operators;
pub mod profile;
pub mod quad;
pub mod snapshot;
pub mod stability;
pub mod svg;
pub mod topology;

pub use basis::{Basis, GridData, ModeIndex, Parity};
pub use bc::{BcTag, BoundaryCondition, PhysParams, SpaceTag, Wall, WallKind};
pub use error::{Error, Result};
pub use field::{FieldValue, PhysicalGrid, SpectralField};
pub use integrate::{decay_rate_fit, IntegrateOptions, Integrator, Scheme, TrajectorySummary};
pub use manifold::{
    alpha, bifurcation_classify, interaction_table, AlphaEval, BifurcationVerdict,
    ClassifyReport, CmCoefficients, InteractionTable, ReducedModel,
};
pub use operators::{
    apply_g, apply_l, inner_h, leray_project, rhs_norm, trilinear, GridVectorField, VelocityPart,
};
pub use snapshot::{load_snapshot, read_snapshot, save_snapshot, write_snapshot};
pub use stability::{
    critical_point, critical_rayleigh, growth_rate_beta1, k0_shear_modes, k0_temperature_modes,
    neutral_rayleigh, neutral_rayleigh_period, vertical_eigensolve, EigenPair, NeutralPoint,
    ShearMode, VerticalDiscretization,
};
pub use topology::{
    classify_regime, d_regularity, find_boundary_singularities, find_interior_singularities,
    separatrix_graph, structural_stability, AnalyticField, ConnectionGraph, FlowField, PointKind,
    Regime, SeparatrixEdge, SingularPoint, StabilityVerdict, TopologyOptions, TopologyReport,
};
