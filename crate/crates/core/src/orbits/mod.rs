//! Backward histories, Lyapunov exponents, Oseledets directions, adapted
//! frames, local stable and unstable graphs, and the holonomy probe.

mod backward;
mod forward;
mod frame;
mod graph;
mod holonomy;
mod lyapunov;

pub use backward::{backward_orbit, BackwardOrbit, BranchPolicy, LINK_TOL};
pub use forward::{auto_policy, forward_step, preserves_equal_modulus, rebalance, ForwardPolicy};
pub use frame::{
    conic_tangent, frame_chain, frame_inequalities_hold, image_frame, local_derivative, local_map, make_frame,
    nonlinearity, oseledets_directions, stable_direction, ChartFrame, Splitting, GROWTH_STEPS, MIN_GROWTH_STEPS,
};
pub use graph::{
    forward_frames, forward_contraction, graph_pullback, graph_transform, local_stable, local_unstable,
    unstable_shadowing, ContractionReport, GraphDisk, GraphKind, ShadowingReport, GRAPH_DEGREE, NOISE_FLOOR,
};
pub use holonomy::{
    conic_stable_family, conic_transversal, holonomy_probe, intersect, HolonomyBin, HolonomyReport,
};
pub use lyapunov::{detect_period, lyapunov, LyapunovEstimate, MAX_DETECTED_PERIOD, MIN_STEPS};
