//! The chapters of the book under `book/src`, included verbatim so that every
//! code block in them runs as a doc-test.

#[doc = include_str!("../../../book/src/overview.md")]
pub mod overview {}

#[doc = include_str!("../../../book/src/grids.md")]
pub mod grids {}

#[doc = include_str!("../../../book/src/pressure.md")]
pub mod pressure {}

#[doc = include_str!("../../../book/src/conductance.md")]
pub mod conductance {}

#[doc = include_str!("../../../book/src/coupled.md")]
pub mod coupled {}

#[doc = include_str!("../../../book/src/diagnostics.md")]
pub mod diagnostics {}

#[doc = include_str!("../../../book/src/recursions.md")]
pub mod recursions {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
