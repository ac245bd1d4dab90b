//! Protocol scenarios: POVMs, the maps `G` and `Z`, sifting, key maps,
//! source replacement and detector imperfections.

mod bb84;
mod maps;
mod povm;
mod scenario;
mod source;

pub use bb84::{
    bb84_constraints, bb84_scenario, bell_diagonal_state, joint_probability_constraints, phi_plus,
    x_basis, z_basis, Bb84, Granularity,
};
pub use maps::{
    apply_z, build_keymap, build_measurement_map, build_sifting, p_pass, KeyChannel,
    KeyMapIsometry, KrausMeasurement, RegisterDims, SiftingProjector,
};
pub use povm::{apply_efficiency, extend_noclick, Povm};
pub use scenario::{
    fidelity_constraint, ConstraintKind, EllipsoidConstraint, ObservableConstraint, Scenario,
    ScenarioBuilder,
};
pub use source::source_replacement;
