//! Bi-modal Gödel logic over [0,1]-valued Kripke frames: exact evaluation,
//! bounded counter-model search, canonical witness constructions,
//! optimal-model transforms, a Hilbert-style proof checker, and finite
//! bi-modal Gödel algebras. All arithmetic is exact rational.

pub mod algebra;
pub mod canonical;
pub mod kripke;
pub mod proof;
pub mod search;
pub mod syntax;
pub mod truth;

pub use algebra::{adjunction_check, BimodalGodelAlgebra, IdentityReport, Table2Selection};
pub use canonical::{
    canonical_s, gamma_set, rescale_box_witness, rescale_diamond_witness, u_set, CanonicalWorld,
    RescaleTrace,
};
pub use kripke::{FramePropertyReport, GKModel};
pub use proof::{check_proof, deduction_wrap, list_schemes, Proof, SystemId, Verdict};
pub use search::{
    certify_no_small_countermodel, find_countermodel, Countermodel, FrameClass, SearchBudget,
    SearchMode, SearchOutcome,
};
pub use syntax::{match_scheme, parse, parse_scheme, Formula, Fragment, Scheme};
pub use truth::{gd_counter_valuation, PropValuation, TruthValue};
