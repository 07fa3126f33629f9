pub mod connes;
pub mod error;
pub mod group;
pub mod l2;
pub mod linalg;
pub mod paradox;
pub mod sets;

pub use error::{FoelnerError, Result};

pub(crate) fn serde_display<T: std::fmt::Display, S: serde::Serializer>(
    value: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(value)
}
