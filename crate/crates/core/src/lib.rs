//! Word arithmetic in groups generated by an involution-centralizer island
//! and an order-3 shuttle element.
//!
//! A group element is represented as an alternating word of island elements
//! (members of G = C(z), where everything is cheap) and shuttle letters
//! T^(+-1). Multiplication is concatenation, inversion is reversal, and the
//! identity test reads the action on two anchor vectors with trivial joint
//! stabilizer. On top of that sit a fast order oracle and a randomized
//! shortening pipeline that rewrites any word of the group into at most 17
//! letters.
//!
//! Desk-scale surrogate groups are packaged by the builder in [`builder`],
//! which enumerates the whole group, derives the island tables and certifies
//! every invariant against an independent brute-force oracle.

pub mod action;
pub mod builder;
pub mod error;
pub mod island;
pub mod linalg;
pub mod oracle;
pub mod package;
pub mod shorten;
pub mod word;

pub use error::{Error, Result};
pub use package::GroupPackage;

#[cfg(test)]
pub(crate) mod testfix {
    use crate::builder::{build_package, BuildOutput, BuildSpec};
    use once_cell::sync::Lazy;

    static REF_A: Lazy<BuildOutput> = Lazy::new(|| {
        let spec = BuildSpec::parse(include_str!("../../../specs/ref_a.txt")).unwrap();
        build_package(&spec).unwrap()
    });

    static REF_C: Lazy<BuildOutput> = Lazy::new(|| {
        let spec = BuildSpec::parse(include_str!("../../../specs/ref_c.txt")).unwrap();
        build_package(&spec).unwrap()
    });

    pub fn ref_a() -> &'static BuildOutput {
        &REF_A
    }

    pub fn ref_c() -> &'static BuildOutput {
        &REF_C
    }
}
