//! Worked algorithms: Hero's square root under a precision schedule, and
//! the repeated-squaring problem behind the precision hierarchy.

mod hero;
mod hierarchy;

pub use hero::{hero_format, hero_iterations, hero_sqrt, hero_sqrt_exact, HeroRun, C_DEFAULT};
pub use hierarchy::{
    boundary_enclosure, exact_membership, hierarchy_condition, hierarchy_decide,
    hierarchy_k_mach, hierarchy_size, hierarchy_witness, in_b, CostFn, HierarchyCondition,
    HierarchyDecision, HierarchyInstance, HierarchyWitness, PrecisionFn,
    SQUARING_EXPONENT_RANGE,
};
