//! Valued constraint satisfaction: exact LP relaxations, fractional
//! polymorphisms and certificates for when the basic LP relaxation solves a
//! finite-domain valued language.

pub mod algebra;
pub mod blp;
pub mod error;
pub mod format;
pub mod gallery;
pub mod lp;
pub mod oracle;
pub mod osac;
pub mod rational;
pub mod structure;
pub mod tuple;
pub mod value;

pub use error::{Error, Result};
pub use rational::Rational;
pub use structure::{measure, Assignment, Signature, Symbol, ValuedStructure};
pub use value::ExtendedRational;
