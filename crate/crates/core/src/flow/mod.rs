//! Time integration of the potential flow, the stationary Newton oracle,
//! smoothing of the conical potential and the shift constant.

mod dump;
mod newton;
mod problem;
mod run;
mod shift;
mod state;
mod twist;

pub use dump::{parse_snapshot, potential_text, snapshot_text, write_snapshot};
pub use newton::{
    continuation_levels, newton_stationary, newton_stationary_with, NewtonOptions,
    STAGNATION_FACTOR,
    StationarySolution,
};
pub use problem::Problem;
pub use run::{run_flow, run_flow_from, RunResult, RunStatus, StepConfig, DIVERGENCE_OSC};
pub use shift::{shift_constant, ShiftData};
pub use state::{
    flow_step, init_state, initial_floor, state_from_potential, BumpShape, FlowState,
    InitialData, StepStats, MAX_HALVINGS,
};
pub use twist::{beta_twisted_params, heat_flow, smooth_approx_potential, TwistData, HEAT_SUBSTEPS};
