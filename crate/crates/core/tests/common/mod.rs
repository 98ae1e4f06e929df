#![allow(dead_code)]

use iforms::algebra::{Generator, IForm, Monomial, SlotSet};
use iforms::poly::{q, PMono, Poly, Var, Q};
use iforms::spectral::{E1Class, SliceSpec, Spectral};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_poly(r: &mut ChaCha8Rng, vars: &[Var], max_deg: u32, terms: usize) -> Poly {
    let mut p = Poly::zero();
    for _ in 0..terms {
        let deg = r.gen_range(0..=max_deg);
        let powers: Vec<(Var, u32)> = (0..deg).map(|_| (*vars.choose(r).unwrap(), 1)).collect();
        let c = r.gen_range(-4i64..=4);
        p.add_term(PMono::from_powers(powers), q(c));
    }
    p
}

pub fn random_slots(r: &mut ChaCha8Rng, k: usize) -> SlotSet {
    loop {
        let bits: Vec<usize> = (1..=k).filter(|_| r.gen_bool(0.5)).collect();
        if !bits.is_empty() {
            return SlotSet::from_slots(&bits);
        }
    }
}

/// A sum of a few terms `c · g_1 ∧ … ∧ g_r` over raw generators.
pub fn random_form(r: &mut ChaCha8Rng, k: usize, vars: &[Var]) -> IForm {
    let mut f = IForm::zero(k);
    for _ in 0..r.gen_range(1..=3) {
        let n = r.gen_range(0..=3);
        let gens: Vec<Generator> =
            (0..n).map(|_| Generator::raw(random_slots(r, k), *vars.choose(r).unwrap())).collect();
        if let Some((s, m)) = Monomial::from_factors(gens) {
            let c = random_poly(r, vars, 2, 2);
            f.add_assign(&IForm::term(k, c, m).scale(&q(s as i64)));
        }
    }
    f
}

/// Classical total derivative on a jet patch: `x = Var(0)`, `u_i = Var(i + 1)`.
pub fn total_derivative(f: &Poly, order: u32) -> Poly {
    let mut out = f.derivative(Var(0));
    for i in 0..=order {
        let df = f.derivative(Var(i + 1));
        out = &out + &(&df * &Poly::var(Var(i + 2)));
    }
    assert!(f.derivative(Var(order + 2)).is_zero(), "oracle order too small");
    out
}

/// `E(f) = Σ_j (-D_x)^j ∂f/∂u_j`.
pub fn euler_operator(f: &Poly, order: u32) -> Poly {
    let mut e = Poly::zero();
    for j in 0..=order {
        let mut t = f.derivative(Var(j + 1));
        for s in 0..j {
            t = total_derivative(&t, order + s).scale(&q(-1));
        }
        e = &e + &t;
    }
    e
}

/// Representatives of every nonzero slice among `specs`, grouped by `p`.
pub fn slice_reps(sp: &Spectral, specs: &[SliceSpec]) -> Vec<(usize, Vec<IForm>)> {
    let mut out = Vec::new();
    for s in specs {
        match sp.e1_slice(s) {
            Ok(e) if e.dimension > 0 => out.push((s.p, e.representatives)),
            Ok(_) => {}
            Err(e) if e.is_truncation() => {}
            Err(e) => panic!("{s}: {e}"),
        }
    }
    out
}

/// Random combinations of slice representatives at Cartan degree `p`.
pub fn random_classes(
    r: &mut ChaCha8Rng,
    k: usize,
    reps: &[(usize, Vec<IForm>)],
    p: usize,
    n: usize,
) -> Vec<E1Class> {
    let pool: Vec<&IForm> = reps.iter().filter(|(pp, _)| *pp == p).flat_map(|(_, v)| v).collect();
    assert!(!pool.is_empty(), "no classes at p={p}");
    (0..n)
        .map(|_| {
            let mut rep = IForm::zero(k);
            for _ in 0..r.gen_range(1..=3) {
                let c = loop {
                    let c = r.gen_range(-3i64..=3);
                    if c != 0 {
                        break c;
                    }
                };
                rep.add_assign(&pool.choose(r).unwrap().scale(&Q::from_integer(c.into())));
            }
            E1Class { k, p, rep }
        })
        .collect()
}

/// Jet slices `(p, degrees, q, grade)` over a small grade window.
pub fn jet_specs(k: usize, p: usize, degrees: &[u32], q: u32, cap: u32) -> Vec<SliceSpec> {
    let mut out = Vec::new();
    for n in p as i64..=p as i64 + 2 {
        for w in -2..=2 {
            out.push(SliceSpec::new(k, p, degrees.to_vec(), q, vec![w, n], cap).unwrap());
        }
    }
    out
}
