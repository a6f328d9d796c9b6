//! Probabilistic simulation models as causal models.
//!
//! A model is a small structured program over binary tape squares that may
//! flip fair coins. Interventions hold chosen squares fixed for a whole run.
//! On top of that the crate provides:
//!
//! * [`syntax`]: conditional formulas `<a>b`, their Boolean combinations and
//!   linear inequalities over their probabilities, with a parser and printer.
//! * [`vm`]: programs, the intervention operator and bounded execution.
//! * [`semantics`]: fixed-stream truth, exact probability intervals by prefix
//!   enumeration, Monte-Carlo estimates, and evaluation of inequality formulas.
//! * [`nonprob`]: satisfiability and validity of conditional formulas over all
//!   deterministic models, or over always-halting ones.
//! * [`linarith`]: exact Fourier-Motzkin feasibility with strict rows.
//! * [`probsat`]: satisfiability of inequality formulas with synthesized
//!   witness programs.
//! * [`proofcheck`]: a checker for Hilbert-style derivations.

pub mod limits;
pub mod linarith;
pub mod nonprob;
pub mod par;
pub mod probsat;
pub mod proofcheck;
pub mod semantics;
pub mod syntax;
pub mod tri;
pub mod vm;

pub use limits::Limits;
pub use par::Strategy;
pub use tri::Tri;

/// Whether a decision is made over all models or only over (almost-surely)
/// halting ones.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Mode {
    /// All models.
    #[default]
    All,
    /// Models that halt (almost surely) under every intervention.
    Halting,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::All => "m",
            Mode::Halting => "m-down",
        })
    }
}
