// Validation uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arm;
pub mod geometry;
pub mod mission;
pub mod planning;
pub mod slam;
pub mod vision;
pub mod world;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/world.md")]
    mod world {}
    #[doc = include_str!("../../../book/src/slam.md")]
    mod slam {}
    #[doc = include_str!("../../../book/src/vision.md")]
    mod vision {}
    #[doc = include_str!("../../../book/src/planning.md")]
    mod planning {}
    #[doc = include_str!("../../../book/src/arm.md")]
    mod arm {}
    #[doc = include_str!("../../../book/src/mission.md")]
    mod mission {}
}
