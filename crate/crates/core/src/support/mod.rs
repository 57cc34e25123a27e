//! Equilibrium supports over the belief simplex.

mod parallel;
mod profile;
mod region;
mod two_state;

pub use parallel::{enumerate_supports_parallel, offset_orderings_two_state, OffsetOrdering};
pub use profile::{cost_profile, is_concave, profile_svg, CostProfile};
pub use region::{support_polytope, support_region, RegionView, SupportRegion};
pub use two_state::{enumerate_supports_two_state, AtlasView, EnumOptions, SupportAtlas};
