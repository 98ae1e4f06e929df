//! Command-line front end.
//!
//! Exit codes: 0 success, 1 domain error, 2 truncation, 3 syntax.

pub mod config;
pub mod parse;
mod selftest;

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::algebra::{IForm, SlotSet};
use crate::calculus::{differential, insertion, kappa, tensor_rank_report, FunctionDerivation, Permutation};
use crate::diffiety::{cartan_degree, horizontal_projection, Patch};
use crate::error::{Error, Result};
use crate::spectral::{phi_dim_check, E1Class, SliceSpec, Spectral};

pub use config::{Caps, Session};
pub use parse::{eval, parse, parse_form, parse_function, print};

#[derive(Debug, Parser)]
#[command(name = "iforms", version, about = "Exact computations with iterated differential forms")]
pub struct Cli {
    /// Patch file; the default is a jet patch of order 6.
    #[arg(long, global = true)]
    pub patch: Option<PathBuf>,
    /// Number of differential slots.
    #[arg(short = 'k', long = "arity", global = true, default_value_t = 1)]
    pub k: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Canonical form of an expression.
    Eval {
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Apply `d_m`.
    Diff {
        m: usize,
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Apply the insertion `i_X^K` of a vector field.
    Insert {
        /// Coordinate values, e.g. `x=1,u0=u1`.
        #[arg(long)]
        field: String,
        /// Slot set `K`, e.g. `1,2`; empty for the lift of the field.
        #[arg(long, default_value = "")]
        slots: String,
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Apply `κ_σ`, with `σ` given by its images, e.g. `2,1`.
    Kappa {
        perm: String,
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Cartan degree with respect to the slots `K` (`k` for the last slot).
    CartanDeg {
        slots: String,
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Projection to horizontal forms.
    Horizontal {
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Dimension and representatives of an `E_1` slice.
    E1Dim {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: u32,
        /// Degrees in slots `1..k-1`.
        #[arg(long, default_value = "")]
        degrees: String,
        #[arg(long, allow_hyphen_values = true)]
        grade: Option<String>,
        #[arg(long)]
        cap: Option<u32>,
    },
    /// `d_{k,1}` of the class of a form.
    D11 {
        #[arg(long, default_value_t = 0)]
        p: usize,
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Euler-Lagrange class of a density on a jet patch.
    Euler {
        #[arg(allow_hyphen_values = true)]
        density: String,
    },
    /// Ranks for the covariant tensor characterization.
    TensorCheck,
    /// Whether a class of multi-degree `(1,…,1)` is a secondary covariant tensor.
    SecTensorCheck {
        #[arg(long, default_value_t = 0)]
        p: usize,
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Dimension comparison across the embedding into `Λ_{k+1}`.
    PhiCheck {
        #[arg(long, default_value_t = 0)]
        p: usize,
        #[arg(long)]
        q: u32,
        #[arg(long, default_value = "")]
        degrees: String,
        #[arg(long, allow_hyphen_values = true)]
        grade: Option<String>,
        #[arg(long)]
        cap: Option<u32>,
        #[arg(long, default_value_t = 6)]
        max_cap: u32,
    },
    /// Print the session's patch file.
    Patch,
    /// Run the built-in invariant checks.
    Selftest,
}

/// What a command printed and how it ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Syntax { .. } => 3,
        Error::Truncation { .. } => 2,
        _ => 1,
    }
}

fn failure(e: &Error) -> Outcome {
    Outcome { stdout: String::new(), stderr: format!("error: {e}\n"), code: exit_code(e) }
}

/// Parses arguments (including the program name) and runs the command.
/// `caps` is the value of `IFORMS_CAPS`, if any.
pub fn run_args<I, S>(args: I, caps: Option<&str>) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { stdout: text, stderr: String::new(), code }
            } else {
                Outcome { stdout: String::new(), stderr: text, code }
            };
        }
    };
    let session = match load_session(&cli, caps) {
        Ok(s) => s,
        Err(e) => return failure(&e),
    };
    run(&cli.command, &session)
}

pub fn load_session(cli: &Cli, caps: Option<&str>) -> Result<Session> {
    match &cli.patch {
        None => {
            let s = Session::new(cli.k)?;
            match caps {
                Some(c) => s.with_overrides(c),
                None => Ok(s),
            }
        }
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
            Session::from_config(&text, cli.k, caps)
        }
    }
}

/// Runs one command against a session.
pub fn run(cmd: &Command, session: &Session) -> Outcome {
    if matches!(cmd, Command::Selftest) {
        return selftest::run();
    }
    match execute(cmd, session) {
        Ok(stdout) => Outcome { stdout, stderr: String::new(), code: 0 },
        Err(e) => failure(&e),
    }
}

fn parse_list<T: std::str::FromStr>(what: &str, text: &str) -> Result<Vec<T>> {
    let text = text.trim().trim_start_matches(['(', '{', '[']).trim_end_matches([')', '}', ']']);
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut pos = 0;
    for part in text.split(',') {
        out.push(part.trim().parse().map_err(|_| Error::Syntax {
            pos,
            msg: format!("malformed {what} '{}'", part.trim()),
        })?);
        pos += part.len() + 1;
    }
    Ok(out)
}

fn slot_set(text: &str, k: usize) -> Result<SlotSet> {
    if text.trim() == "k" {
        return Ok(SlotSet::single(k));
    }
    let slots: Vec<usize> = parse_list("slot", text)?;
    if let Some(&s) = slots.iter().find(|&&s| s == 0 || s > k) {
        return Err(Error::SlotOutOfRange { slot: s, arity: k });
    }
    Ok(SlotSet::from_slots(&slots))
}

fn field(text: &str, session: &Session) -> Result<FunctionDerivation> {
    let mut values = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Syntax { pos: 0, msg: format!("expected coord=value, got '{part}'") })?;
        let v = session
            .patch
            .var(name.trim())
            .ok_or_else(|| Error::Syntax { pos: 0, msg: format!("unknown coordinate '{}'", name.trim()) })?;
        values.push((v, parse_function(value, &session.patch)?));
    }
    Ok(FunctionDerivation::vector_field(session.k, values))
}

fn grade_or_default(text: &Option<String>, patch: &Patch) -> Result<Vec<i64>> {
    match text {
        Some(t) => parse_list("grade", t),
        None => Ok(vec![0; patch.grading_dim()]),
    }
}

fn form(session: &Session, text: &str) -> Result<IForm> {
    parse_form(text, &session.patch, session.k)
}

fn class_summary(sp: &Spectral, c: &E1Class) -> Result<String> {
    let r = sp.reduce(c)?;
    Ok(format!(
        "{}\nclass: {}\n",
        r.render(sp.patch()),
        if r.is_zero() { "zero" } else { "nonzero" }
    ))
}

fn spectral(session: &Session) -> Result<Spectral> {
    let mut sp = Spectral::new(&session.patch, session.k)?;
    sp.slack = session.caps.degree;
    Ok(sp)
}

fn execute(cmd: &Command, session: &Session) -> Result<String> {
    let patch = &session.patch;
    let k = session.k;
    let render = |a: &IForm| format!("{}\n", a.render(patch));
    Ok(match cmd {
        Command::Eval { expr } => render(&form(session, expr)?),
        Command::Diff { m, expr } => {
            if *m == 0 || *m > k {
                return Err(Error::SlotOutOfRange { slot: *m, arity: k });
            }
            render(&differential(*m, &form(session, expr)?)?)
        }
        Command::Insert { field: f, slots, expr } => {
            let x = field(f, session)?;
            render(&insertion(&x, slot_set(slots, k)?, &form(session, expr)?)?)
        }
        Command::Kappa { perm, expr } => {
            let sigma = Permutation::new(parse_list("permutation", perm)?)?;
            if sigma.len() != k {
                return Err(Error::invalid(format!("expected a permutation of 1..{k}")));
            }
            render(&kappa(&sigma, &form(session, expr)?)?)
        }
        Command::CartanDeg { slots, expr } => {
            let s = slot_set(slots, k)?;
            match cartan_degree(patch, &form(session, expr)?, s)? {
                Some(d) => format!("{d}\n"),
                None => "inf\n".to_string(),
            }
        }
        Command::Horizontal { expr } => render(&horizontal_projection(patch, &form(session, expr)?)?),
        Command::E1Dim { p, q, degrees, grade, cap } => {
            let spec = SliceSpec::new(
                k,
                *p,
                parse_list("degree", degrees)?,
                *q,
                grade_or_default(grade, patch)?,
                cap.unwrap_or(session.caps.degree),
            )?;
            let e = spectral(session)?.e1_slice(&spec)?;
            let mut s = String::new();
            let _ = writeln!(s, "slice {}", e.spec);
            let _ = writeln!(s, "dimension={}", e.dimension);
            let _ = writeln!(s, "basis_size={}", e.basis_size);
            let _ = writeln!(s, "stable={}", e.stable());
            for (i, r) in e.representatives.iter().enumerate() {
                let _ = writeln!(s, "rep{i}: {}", r.render(patch));
            }
            s
        }
        Command::D11 { p, expr } => {
            let sp = spectral(session)?;
            let c = sp.class_of(&form(session, expr)?, *p)?;
            class_summary(&sp, &sp.induced_differential(k, &c)?)?
        }
        Command::Euler { density } => {
            let sp = spectral(session)?;
            let f = parse_function(density, patch)?;
            class_summary(&sp, &sp.euler_lagrange(&f)?)?
        }
        Command::TensorCheck => {
            let r = tensor_rank_report(k, &patch.vars())?;
            format!(
                "ambient={}\niota_rank={}\nconstraint_kernel={}\nimage_in_kernel={}\nresult={}\n",
                r.ambient,
                r.iota_rank,
                r.constraint_kernel,
                r.image_in_kernel,
                if r.iota_rank == r.constraint_kernel && r.image_in_kernel { "equal" } else { "differ" }
            )
        }
        Command::SecTensorCheck { p, expr } => {
            let sp = spectral(session)?;
            let c = sp.class_of(&form(session, expr)?, *p)?;
            format!("secondary_covariant_tensor={}\n", sp.is_secondary_covariant_tensor(&c)?)
        }
        Command::PhiCheck { p, q, degrees, grade, cap, max_cap } => {
            let r = phi_dim_check(
                patch,
                k,
                *p,
                &parse_list::<u32>("degree", degrees)?,
                *q,
                &grade_or_default(grade, patch)?,
                cap.unwrap_or(session.caps.degree),
                *max_cap,
            )?;
            format!(
                "lhs={}\nrhs={}\nlhs_stable={}\nrhs_stable={}\nresult={}\nnote=degree correspondence inferred: (degrees, p) at q in arity k+1\n",
                r.lhs,
                r.rhs,
                r.lhs_stable,
                r.rhs_stable,
                if r.equal() { "equal" } else { "differ" }
            )
        }
        Command::Patch => session.to_config(),
        Command::Selftest => unreachable!(),
    })
}
