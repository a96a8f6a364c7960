pub mod bounds;
pub mod claims;
pub mod cli;
pub mod contfrac;
pub mod fibonacci;
pub mod precision;
pub mod reduction;
pub mod repdigit;
pub mod search;

pub(crate) fn ser_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}
