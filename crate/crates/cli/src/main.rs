//! Command-line front end for simulation-program causal reasoning.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::FromPrimitive;
use probsim::nonprob::{NonProbSolver, WorldTable};
use probsim::probsat::{SatResult, SatSolver};
use probsim::proofcheck::{parse_proof, ProofChecker, ProofError};
use probsim::semantics::{decide_linear, mc_estimate, Evaluator, McConfig, ProbInterval};
use probsim::syntax::{
    parse_intervention, parse_nonprob_formula, parse_prob_formula, NonProbFormula, ProbFormula,
};
use probsim::vm::{intervene, parse_program, SimProgram};
use probsim::{Limits, Mode, Tri};
use serde_json::{json, Value};

const EX_USAGE: u8 = 64;
const EX_DATAERR: u8 = 65;
const EX_SOFTWARE: u8 = 70;

#[derive(Parser)]
#[command(
    name = "probsim",
    version,
    about = "Probabilistic simulation programs as causal models"
)]
struct Cli {
    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,

    #[command(flatten)]
    caps: Caps,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Caps {
    /// Largest accepted --bits value.
    #[arg(long, global = true, default_value_t = 24)]
    max_bit_budget: u32,
    /// Most tape squares a conditional formula may mention.
    #[arg(long, global = true, default_value_t = 16)]
    max_vars: usize,
    /// Most distinct antecedents in a conditional formula.
    #[arg(long, global = true, default_value_t = 8)]
    max_antecedents: usize,
    /// Most distinct conditional atoms per DNF clause.
    #[arg(long, global = true, default_value_t = 16)]
    max_cond_atoms: usize,
}

impl Caps {
    fn limits(&self) -> Limits {
        Limits {
            max_bit_budget: self.max_bit_budget,
            max_vars: self.max_vars,
            max_antecedents: self.max_antecedents,
            max_cond_atoms: self.max_cond_atoms,
            ..Limits::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    M,
    #[value(name = "m-down")]
    MDown,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::M => Mode::All,
            ModeArg::MDown => Mode::Halting,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Sat,
    Valid,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a formula and print its canonical form.
    Parse {
        #[arg(long)]
        formula: String,
    },
    /// Evaluate a probability formula in a program.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: String,
        #[arg(long, default_value_t = 16)]
        bits: u32,
        #[arg(long, default_value_t = 10_000)]
        fuel: u64,
        /// Estimate by sampling instead of exact enumeration.
        #[arg(long, value_name = "SAMPLES")]
        mc: Option<u64>,
        #[arg(long, default_value_t = 0, requires = "mc")]
        seed: u64,
        /// Longest random prefix drawn per sample.
        #[arg(long, default_value_t = 64, requires = "mc")]
        mc_bit_cap: u32,
    },
    /// Print a program with an intervention applied.
    Intervene {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated literals, e.g. "X0,!X2".
        #[arg(long)]
        spec: String,
    },
    /// Decide satisfiability of a probability formula.
    Sat {
        #[arg(long)]
        formula: String,
        #[arg(long, value_enum, default_value = "m")]
        mode: ModeArg,
        /// Write the witness program here instead of stdout.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Decide a formula without probabilities.
    Nonprob {
        #[arg(long)]
        formula: String,
        #[arg(long, value_enum, default_value = "m")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "sat")]
        check: CheckArg,
    },
    /// Check a derivation file.
    CheckProof {
        #[arg(long)]
        proof: PathBuf,
    },
}

/// A failure with its exit code; the message goes to stderr.
struct Failure {
    code: u8,
    msg: String,
}

fn fail(code: u8, msg: impl Display) -> Failure {
    Failure {
        code,
        msg: msg.to_string(),
    }
}

type Outcome = Result<u8, Failure>;

struct Out {
    json: bool,
}

impl Out {
    fn emit(&self, text: impl Display, value: Value) {
        if self.json {
            println!("{value}");
        } else {
            print!("{text}");
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| fail(EX_USAGE, format!("cannot read {}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<SimProgram, Failure> {
    parse_program(&read(path)?).map_err(|e| fail(EX_DATAERR, format!("{}: {e}", path.display())))
}

fn prob_formula(text: &str) -> Result<ProbFormula, Failure> {
    parse_prob_formula(text).map_err(|e| fail(EX_DATAERR, format!("formula: {e}")))
}

fn tri_code(t: Tri) -> u8 {
    match t {
        Tri::True => 0,
        Tri::False => 1,
        Tri::Unknown => 2,
    }
}

fn cmd_parse(out: &Out, formula: &str) -> Outcome {
    let (kind, canonical) = match parse_prob_formula(formula) {
        Ok(f) => ("prob", f.to_string()),
        Err(prob_err) => match parse_nonprob_formula(formula) {
            Ok(f) => ("nonprob", f.to_string()),
            Err(_) => return Err(fail(EX_DATAERR, format!("formula: {prob_err}"))),
        },
    };
    out.emit(
        format!("{canonical}\n"),
        json!({ "kind": kind, "canonical": canonical }),
    );
    Ok(0)
}

struct EvalArgs<'a> {
    model: &'a Path,
    formula: &'a str,
    bits: u32,
    fuel: u64,
    mc: Option<u64>,
    seed: u64,
    mc_bit_cap: u32,
}

fn cmd_eval(out: &Out, limits: &Limits, a: EvalArgs) -> Outcome {
    let program = load_program(a.model)?;
    let f = prob_formula(a.formula)?;
    let terms = f.prob_terms();
    let mut text = String::new();
    let mut rows = Vec::new();
    let intervals: Vec<ProbInterval> = match a.mc {
        None => {
            let ev = Evaluator::new(a.bits, a.fuel).with_limits(limits);
            let mut out = Vec::new();
            for t in &terms {
                let iv = ev
                    .prob_interval(&program, t)
                    .map_err(|e| fail(EX_SOFTWARE, e))?;
                text += &format!("P({t}) in {iv}\n");
                rows.push(json!({ "formula": t.to_string(), "lo": iv.lo.to_string(), "hi": iv.hi.to_string() }));
                out.push(iv);
            }
            out
        }
        Some(samples) => {
            if samples == 0 {
                return Err(fail(EX_USAGE, "--mc needs at least one sample"));
            }
            let cfg = McConfig::new(samples, a.fuel, a.mc_bit_cap, a.seed);
            let mut out = Vec::new();
            for t in &terms {
                let est = mc_estimate(&program, t, &cfg);
                let (lo, hi) = est.interval();
                text += &format!(
                    "P({t}) ~ {} +/- {:.6} (true {}, false {}, unknown {} of {samples}) => [{lo:.6}, {hi:.6}]\n",
                    est.p_hat, est.half_width, est.true_count, est.false_count, est.unknown_count
                );
                rows.push(json!({
                    "formula": t.to_string(),
                    "p_hat": est.p_hat.to_string(),
                    "half_width": est.half_width,
                    "true": est.true_count,
                    "false": est.false_count,
                    "unknown": est.unknown_count,
                    "lo": lo,
                    "hi": hi,
                }));
                let r = |x: f64| BigRational::from_f64(x).expect("finite");
                out.push(ProbInterval {
                    lo: r(lo),
                    hi: r(hi),
                });
            }
            out
        }
    };
    let lookup = |phi: &NonProbFormula| {
        let i = terms.iter().position(|t| *t == phi).expect("term listed");
        &intervals[i]
    };
    let verdict = f.eval_tri(&mut |atom| decide_linear(atom, &lookup));
    let approximate = a.mc.is_some();
    if approximate {
        text += &format!("verdict: {verdict} (approximate, 95% per term)\n");
    } else {
        text += &format!("verdict: {verdict}\n");
    }
    out.emit(
        text,
        json!({
            "verdict": verdict.to_string(),
            "approximate": approximate,
            "bits": a.bits,
            "fuel": a.fuel,
            "terms": rows,
        }),
    );
    Ok(tri_code(verdict))
}

fn cmd_intervene(out: &Out, model: &Path, spec: &str) -> Outcome {
    let program = load_program(model)?;
    let spec = parse_intervention(spec).map_err(|e| fail(EX_DATAERR, format!("spec: {e}")))?;
    let result = intervene(&program, &spec).to_string();
    out.emit(&result, json!({ "program": result }));
    Ok(0)
}

fn cmd_sat(
    out: &Out,
    limits: &Limits,
    formula: &str,
    mode: Mode,
    witness: Option<&Path>,
) -> Outcome {
    let f = prob_formula(formula)?;
    let solver = SatSolver {
        limits: limits.clone(),
        ..SatSolver::default()
    };
    match solver.decide(&f, mode).map_err(|e| fail(EX_SOFTWARE, e))? {
        SatResult::Unsat => {
            out.emit(
                "UNSAT\n",
                json!({ "result": "UNSAT", "mode": mode.to_string() }),
            );
            Ok(1)
        }
        SatResult::Sat(m) => {
            let text = m.to_string();
            if let Some(path) = witness {
                fs::write(path, &text)
                    .map_err(|e| fail(EX_USAGE, format!("cannot write {}: {e}", path.display())))?;
            }
            let blocks: Vec<Value> = m
                .blocks
                .iter()
                .map(|b| json!({ "weight": b.weight.to_string(), "delta": b.label, "table": b.table.to_string() }))
                .collect();
            let shown = if witness.is_some() {
                String::new()
            } else {
                text.clone()
            };
            out.emit(
                format!("SAT\n{shown}"),
                json!({
                    "result": "SAT",
                    "mode": mode.to_string(),
                    "denominator": m.denominator.to_string(),
                    "blocks": blocks,
                    "witness": text,
                }),
            );
            Ok(0)
        }
    }
}

fn cmd_nonprob(out: &Out, limits: &Limits, formula: &str, mode: Mode, check: CheckArg) -> Outcome {
    let f =
        parse_nonprob_formula(formula).map_err(|e| fail(EX_DATAERR, format!("formula: {e}")))?;
    let solver = NonProbSolver {
        limits: limits.clone(),
        ..NonProbSolver::default()
    };
    let target = match check {
        CheckArg::Sat => f,
        CheckArg::Valid => f.not(),
    };
    let table: Option<WorldTable> = solver
        .sat(&target, mode)
        .map_err(|e| fail(EX_SOFTWARE, e))?;
    let (label, code) = match (check, table.is_some()) {
        (CheckArg::Sat, true) => ("SAT", 0),
        (CheckArg::Sat, false) => ("UNSAT", 1),
        (CheckArg::Valid, false) => ("VALID", 0),
        (CheckArg::Valid, true) => ("INVALID", 1),
    };
    let table_text = table.as_ref().map(ToString::to_string);
    out.emit(
        format!("{label}\n{}", table_text.clone().unwrap_or_default()),
        json!({ "result": label, "mode": mode.to_string(), "table": table_text }),
    );
    Ok(code)
}

fn cmd_check_proof(out: &Out, limits: &Limits, path: &Path) -> Outcome {
    let proof = parse_proof(&read(path)?)
        .map_err(|e| fail(EX_DATAERR, format!("{}: {e}", path.display())))?;
    let checker = ProofChecker {
        limits: limits.clone(),
    };
    match checker.check(&proof) {
        Ok(()) => {
            out.emit(
                "OK\n",
                json!({ "result": "OK", "lines": proof.lines.len() }),
            );
            Ok(0)
        }
        Err(ProofError::Resource { line, msg }) => {
            Err(fail(EX_SOFTWARE, format!("line {line}: {msg}")))
        }
        Err(ProofError::Rejected {
            line,
            reason,
            detail,
        }) => {
            eprintln!("line {line}: {reason}: {detail}");
            out.emit(
                "ERROR\n",
                json!({ "result": "ERROR", "line": line, "reason": reason.code(), "detail": detail }),
            );
            Ok(1)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let out = Out { json: cli.json };
    let limits = cli.caps.limits();
    match cli.command {
        Command::Parse { formula } => cmd_parse(&out, &formula),
        Command::Eval {
            model,
            formula,
            bits,
            fuel,
            mc,
            seed,
            mc_bit_cap,
        } => cmd_eval(
            &out,
            &limits,
            EvalArgs {
                model: &model,
                formula: &formula,
                bits,
                fuel,
                mc,
                seed,
                mc_bit_cap,
            },
        ),
        Command::Intervene { model, spec } => cmd_intervene(&out, &model, &spec),
        Command::Sat {
            formula,
            mode,
            witness,
        } => cmd_sat(&out, &limits, &formula, mode.into(), witness.as_deref()),
        Command::Nonprob {
            formula,
            mode,
            check,
        } => cmd_nonprob(&out, &limits, &formula, mode.into(), check),
        Command::CheckProof { proof } => cmd_check_proof(&out, &limits, &proof),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EX_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("probsim: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
