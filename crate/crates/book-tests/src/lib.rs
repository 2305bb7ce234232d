//! Compiles the guide chapters as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/integration.md")]
pub mod integration {}
#[doc = include_str!("../../../book/src/hypotheses.md")]
pub mod hypotheses {}
#[doc = include_str!("../../../book/src/equilibria.md")]
pub mod equilibria {}
#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}
