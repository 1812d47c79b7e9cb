// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

//! Proximal bundle framework for hybrid weakly convex composite problems.
//!
//! Start with [`pbf::run`]; the guide in `book/` walks through the rest.

pub mod baseline_ps;
pub mod bundle;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod oracles;
pub mod pbf;
pub mod problems;
pub mod proxstep;
pub mod rng;
pub mod simple_terms;
pub mod stationarity;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/quickstart.md")]
    mod quickstart {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/audits.md")]
    mod audits {}
    #[doc = include_str!("../../../book/src/baseline.md")]
    mod baseline {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
