//! Dilation groups, dual-orbit envelopes, decay exponents and vanishing-moment
//! orders, spline atoms, and a sampled continuous wavelet transform over
//! `R^d ⋊ H`.
//!
//! ```
//! use orbitlet::groups::GroupSpec;
//! use orbitlet::orbit::orbit_of;
//!
//! let g = GroupSpec::standard_shearlet(3, None).unwrap();
//! assert_eq!(orbit_of(&g).kind_name(), "first-coordinate-nonzero");
//! ```

pub mod algebra;
pub mod atoms;
pub mod embeddedness;
pub mod error;
pub mod groups;
pub mod linalg;
pub mod orbit;
pub mod quad;
pub mod rational;
pub mod transform;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    struct Readme;
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/groups.md")]
    struct Groups;
    #[doc = include_str!("../../../book/src/orbits.md")]
    struct Orbits;
    #[doc = include_str!("../../../book/src/embeddedness.md")]
    struct Embeddedness;
    #[doc = include_str!("../../../book/src/atoms.md")]
    struct Atoms;
    #[doc = include_str!("../../../book/src/transform.md")]
    struct Transform;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
