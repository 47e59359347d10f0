//! Multi-year investment cost formulations for capacity-expansion LPs.
//!
//! The crate covers discounting and annuities ([`finance`]), milestone
//! weight tables ([`horizon`]), LP builders for every cost formulation
//! ([`formulation`]), a dense simplex solver ([`lp`]) and the scenario
//! runner behind the `multiyear` command ([`scenario`], [`report`]).
pub mod finance;
pub mod formulation;
pub mod horizon;
pub mod lp;
pub mod numfmt;
pub mod report;
pub mod scenario;
