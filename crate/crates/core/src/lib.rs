//! Stage-by-stage simulation of a finite-injury priority construction that
//! builds a d.c.e. set `D` together with its Lachlan set `A`.

pub mod adversary;
pub mod config;
pub mod functional;
pub mod scheduler;
pub mod sets;
pub mod state;
pub mod strategies;
pub mod trace;
pub mod verifier;

/// The guide's snippets, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/sets.md")]
    pub struct Sets;
    #[doc = include_str!("../../../book/src/functionals.md")]
    pub struct Functionals;
    #[doc = include_str!("../../../book/src/adversaries.md")]
    pub struct Adversaries;
    #[doc = include_str!("../../../book/src/tree.md")]
    pub struct Tree;
    #[doc = include_str!("../../../book/src/verifier.md")]
    pub struct Verifier;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
