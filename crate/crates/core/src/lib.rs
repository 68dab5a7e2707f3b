pub mod domain;
pub mod geometry;
pub mod index;
pub mod dyadic;
pub mod flatness;
pub mod access;
pub mod theorem;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/domains.md")]
    mod domains {}
    #[doc = include_str!("../../../book/src/cubes.md")]
    mod cubes {}
    #[doc = include_str!("../../../book/src/flatness.md")]
    mod flatness {}
    #[doc = include_str!("../../../book/src/access.md")]
    mod access {}
    #[doc = include_str!("../../../book/src/classification.md")]
    mod classification {}
}
