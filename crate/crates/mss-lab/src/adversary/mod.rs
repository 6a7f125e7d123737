//! Hard request-sequence generators.
pub mod basic;
pub mod refined;
pub mod universal;
