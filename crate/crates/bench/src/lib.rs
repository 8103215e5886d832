//! Fixtures shared by the criterion benches.

use std::sync::Arc;

use fatpad_core::demo::demo_artifacts;
use fatpad_core::geometry::{vec3, Vec3};
use fatpad_core::pose::Rig;

/// The demo head rig; subdivision 5 is the 10k-vertex face the latency
/// budget is about.
pub fn demo_rig(subdivisions: usize) -> Arc<Rig> {
    Arc::new(demo_artifacts(subdivisions).expect("demo head builds").into_rig().expect("demo rig"))
}

/// A small drag step that alternates direction, so long runs stay near rest.
pub fn wiggle(i: usize) -> Vec3 {
    let s = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
    vec3(0.002 * s, 0.001 * s, 0.0015 * s)
}
