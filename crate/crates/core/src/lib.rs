// `!(x > 0.0)` is deliberate: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::large_enum_variant, clippy::too_many_arguments, clippy::type_complexity)]

pub mod algebra;
pub mod closed_forms;
pub mod composite;
pub mod diff;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod json;
pub mod wep;

pub use error::{Error, Result};
