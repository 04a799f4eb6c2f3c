//! Exact-arithmetic engine for deficient-perfect numbers.
//!
//! A positive integer `n` is *deficient-perfect* when `sigma(n) = 2n - d`
//! for some proper divisor `d` of `n`; writing `D = n/d` this is equivalent
//! to `sigma(n) = (2D - 1) d`, or `sigma(n)/n + 1/D = 2`. This crate holds
//! the arithmetic core: arbitrary-precision number theory primitives, the
//! deficient-perfect predicate and witness extraction, sound subtree-pruning
//! rules over factorization shapes, a branch-and-bound enumerator, and a
//! verifier for transcribed numeric facts (orders, divisibilities, Legendre
//! symbols, inequality chains).
//!
//! Everything on a decision path uses exact integers and exact rationals;
//! floating point is never consulted. The crate is `no_std` (with `alloc`);
//! IO, file formats and the CLI live in the companion `defiperf` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod facts;
pub mod nt;
pub mod prune;
pub mod search;
pub mod witness;

pub use nt::{Factorization, Natural, PrimePower, Rational};
pub use witness::DpWitness;

/// Version tag echoed into reports so that serialized output names the
/// engine that produced it.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
