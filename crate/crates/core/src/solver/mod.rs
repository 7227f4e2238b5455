//! Critical points of the truncated functional: Newton on the Galerkin
//! residual, deflation, continuation in the forcing, and level brackets.

mod branch;
mod continuation;
mod levels;
mod newton;
mod verify;

pub use branch::*;
pub use continuation::*;
pub use levels::*;
pub use newton::*;
pub use verify::*;
