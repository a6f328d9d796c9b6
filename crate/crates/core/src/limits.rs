/// Resource caps shared by the decision procedures and evaluators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Deepest random-bit prefix explored by exact interval evaluation.
    pub max_bit_budget: u32,
    /// Distinct tape squares mentioned in a conditional formula.
    pub max_vars: usize,
    /// Distinct antecedents in a conditional formula.
    pub max_antecedents: usize,
    /// Distinct conditional atoms inside probability terms (there are 2^n deltas).
    pub max_cond_atoms: usize,
    pub max_lin_vars: usize,
    pub max_lin_rows: usize,
    /// Rows alive at any stage of elimination.
    pub max_derived_rows: usize,
    pub max_dnf_clauses: usize,
    /// Distinct linear atoms in a tautology check.
    pub max_taut_atoms: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_bit_budget: 24,
            max_vars: 16,
            max_antecedents: 8,
            max_cond_atoms: 16,
            max_lin_vars: 64,
            max_lin_rows: 256,
            max_derived_rows: 50_000,
            max_dnf_clauses: 4096,
            max_taut_atoms: 20,
        }
    }
}
