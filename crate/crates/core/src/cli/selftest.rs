//! Built-in invariant suite for `iforms selftest`, over small exhaustive
//! enumerations.

use std::fmt::Write as _;

use crate::algebra::{Generator, IForm, Monomial, SlotSet};
use crate::calculus::{
    differential, insertion, kappa, tensor_rank_report, FunctionDerivation, Permutation,
};
use crate::diffiety::{cartan_degree, cartan_generator, Patch};
use crate::error::{Error, Result};
use crate::poly::{q, q_frac, Poly, Var};
use crate::spectral::{phi_dim_check, Decomposition, SliceSpec, Spectral};

use super::parse::{parse, parse_form, print};
use super::Outcome;

type Check = fn() -> Result<()>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(msg()))
    }
}

/// Products `c · g ∧ h` of coefficients with pairs of raw generators.
fn sample_forms(patch: &Patch, k: usize) -> Vec<IForm> {
    let vars = patch.vars();
    let mut gens = Vec::new();
    for l in SlotSet::upto(k).subsets().into_iter().filter(|s| !s.is_empty() && s.len() <= 2) {
        for &v in vars.iter().take(3) {
            gens.push(Generator::raw(l, v));
        }
    }
    let coefs = [Poly::one(), Poly::var(vars[1]), &Poly::var(vars[0]) * &Poly::var(vars[2])];
    let mut out = Vec::new();
    for (i, g) in gens.iter().enumerate() {
        for h in gens.iter().skip(i).step_by(3) {
            if let Some((s, m)) = Monomial::from_factors(vec![*g, *h]) {
                let c = &coefs[(i + out.len()) % coefs.len()];
                let c = if s < 0 { c.scale(&q(-1)) } else { c.clone() };
                out.push(IForm::term(k, c, m));
            }
        }
    }
    out
}

fn differential_axioms() -> Result<()> {
    let patch = Patch::jet(3);
    let k = 2;
    for a in sample_forms(&patch, k) {
        for m in 1..=k {
            ensure(differential(m, &differential(m, &a)?)?.is_zero(), || "d_m d_m != 0".into())?;
            for n in 1..=k {
                let s = differential(m, &differential(n, &a)?)?
                    .add(&differential(n, &differential(m, &a)?)?)?;
                ensure(m == n || s.is_zero(), || format!("d_{m} d_{n} + d_{n} d_{m} != 0"))?;
            }
        }
    }
    Ok(())
}

fn insertion_of_d_m() -> Result<()> {
    let patch = Patch::jet(3);
    let k = 2;
    for m in 1..=k {
        let x = FunctionDerivation::differential_on_functions(k, m, &patch.vars());
        for a in sample_forms(&patch, k) {
            ensure(insertion(&x, SlotSet::EMPTY, &a)? == differential(m, &a)?, || {
                format!("i_{m} differs from d_{m}")
            })?;
        }
    }
    Ok(())
}

fn cartan_stability() -> Result<()> {
    let patch = Patch::jet(3);
    for k in 1..=2 {
        for slots in SlotSet::upto(k - 1).subsets() {
            for i in 0..2 {
                let g = cartan_generator(&patch, k, slots, i)?;
                for m in 1..=k {
                    let dg = differential(m, &g)?;
                    match cartan_degree(&patch, &dg, SlotSet::single(k)) {
                        Ok(d) => ensure(d.is_none_or(|d| d >= 1), || "d_m left the ideal".into())?,
                        Err(e) if e.is_truncation() => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    Ok(())
}

fn tensor_ranks() -> Result<()> {
    let r = tensor_rank_report(2, &[Var(0), Var(1)])?;
    ensure(
        r.ambient == 6 && r.iota_rank == 4 && r.constraint_kernel == 4 && r.image_in_kernel,
        || format!("{r:?}"),
    )
}

fn euler_oracle() -> Result<()> {
    let patch = Patch::jet(6);
    let sp = Spectral::new(&patch, 1)?;
    let u = |i: u32| Poly::var(Var(i + 1));
    let cases = [
        (&u(1) * &u(1)).scale(&q_frac(1, 2)),
        (&u(0) * &u(1)).scale(&q(2)),
        &u(0) * &u(2),
        &(&Poly::var(Var(0)) * &u(0)) * &u(1),
    ];
    for f in cases {
        let mut e = Poly::zero();
        for j in 0..=2u32 {
            let mut t = f.derivative(Var(j + 1));
            for _ in 0..j {
                t = sp.total_derivative(&t)?.scale(&q(-1));
            }
            e = &e + &t;
        }
        let class = sp.euler_lagrange(&f)?;
        let w0dx = parse_form("w0 ^ d[1](x)", &patch, 1)?;
        let expected = sp.class_of(&w0dx.mul_poly(&e), 1)?;
        ensure(sp.equal(&class, &expected)?, || "Euler-Lagrange class differs from E(f)".into())?;
    }
    Ok(())
}

fn plain_collapse() -> Result<()> {
    let patch = Patch::plain(["x", "y"])?;
    let sp = Spectral::new(&patch, 1)?;
    for (q_, grade, want) in [(0, 0, 1), (0, 1, 0), (1, 1, 0), (1, 2, 0), (2, 2, 0)] {
        let e = sp.e1_slice(&SliceSpec::new(1, 0, vec![], q_, vec![grade], 0)?)?;
        ensure(e.dimension == want, || format!("E_1 at q={q_} grade={grade} is {}", e.dimension))?;
    }
    Ok(())
}

fn tensor_model() -> Result<()> {
    let sp = Spectral::new(&Patch::jet(5), 2)?;
    let spec = SliceSpec::new(2, 1, vec![1], 1, vec![0, 2], 1)?;
    let e = sp.e0_slice(&spec)?;
    ensure(e.subquotient_dim == e.tensor_dim, || format!("{} vs {}", e.subquotient_dim, e.tensor_dim))?;
    let a = sp.d_bar_matrix(&spec, Decomposition::CoefficientsLeft)?;
    let b = sp.d_bar_matrix(&spec, Decomposition::CoefficientsRight)?;
    ensure(a == b && a == e.d, || "d_bar depends on the decomposition".into())
}

fn phi_dimensions() -> Result<()> {
    let r = phi_dim_check(&Patch::plain(["x", "y"])?, 1, 0, &[], 0, &[0], 0, 2)?;
    ensure(r.equal() && r.lhs == 1, || format!("{r:?}"))
}

fn symmetry_classes() -> Result<()> {
    let sp = Spectral::new(&Patch::jet(4), 1)?;
    let dx = sp.symmetry(sp.total_derivative_field()?)?;
    ensure(dx.trivial, || "D_x is not trivial".into())?;
    let ev = sp.symmetry(sp.evolutionary_field(&Poly::var(Var(2)))?)?;
    ensure(!ev.trivial, || "evolutionary field is trivial".into())
}

fn kappa_group_law() -> Result<()> {
    let patch = Patch::jet(3);
    let k = 3;
    let s = Permutation::new(vec![2, 3, 1])?;
    let r = Permutation::new(vec![2, 1, 3])?;
    let a = parse_form("u1 * d[1,3](x) ^ d[2](u0) + x * d[1](u1) ^ d[2,3](u0)", &patch, k)?;
    ensure(kappa(&s, &kappa(&r, &a)?)? == kappa(&s.compose(&r), &a)?, || "group law".into())
}

fn parse_round_trip() -> Result<()> {
    let patch = Patch::jet(3);
    let k = 2;
    for a in sample_forms(&patch, k) {
        let text = a.render(&patch);
        ensure(parse_form(&text, &patch, k)? == a, || format!("render/parse of {text}"))?;
        let ast = parse(&text, &patch, k)?;
        ensure(parse(&print(&ast, &patch), &patch, k)? == ast, || format!("print/parse of {text}"))?;
    }
    Ok(())
}

const CHECKS: &[(&str, Check)] = &[
    ("differential axioms", differential_axioms),
    ("insertion of d_m", insertion_of_d_m),
    ("cartan ideal stability", cartan_stability),
    ("covariant tensor ranks", tensor_ranks),
    ("euler-lagrange oracle", euler_oracle),
    ("plain patch collapse", plain_collapse),
    ("tensor model of E_0", tensor_model),
    ("phi dimension check", phi_dimensions),
    ("symmetry classes", symmetry_classes),
    ("kappa group law", kappa_group_law),
    ("parse round trip", parse_round_trip),
];

pub(super) fn run() -> Outcome {
    let mut out = String::new();
    let mut failed = 0;
    for (name, check) in CHECKS {
        match check() {
            Ok(()) => {
                let _ = writeln!(out, "ok {name}");
            }
            Err(e) => {
                failed += 1;
                let _ = writeln!(out, "FAIL {name}: {e}");
            }
        }
    }
    let _ = writeln!(out, "passed={} failed={failed}", CHECKS.len() - failed);
    Outcome { stdout: out, stderr: String::new(), code: if failed == 0 { 0 } else { 1 } }
}
