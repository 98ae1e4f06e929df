//! Graded derivations and automorphisms of `Λ_k`.
//!
//! A graded derivation is fixed by its parity and its values on coordinates
//! and on generators; [`apply`] extends it by the graded Leibniz rule
//! `D(ab) = D(a) b + (-1)^{|D||a|} a D(b)`. The differentials `d_m`, the
//! insertions `i_X^K`, the contact insertions `i_X^{{k}}` and the Lie
//! derivatives `L_X^{{k}} = [i_X^{{k}}, d_k]` are all built this way.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::algebra::{
    canonicalize_generator, outer_differential_sign, Canonical, Generator, IForm, Monomial,
    SlotSet,
};
use crate::error::{Error, Result};
use crate::linalg::{RationalMatrix, SparseVec};
use crate::poly::{Poly, Var, Q};

/// A graded derivation of `Λ_k`, described by its values on coordinates and
/// generators.
pub trait Derivation: Send + Sync {
    /// Arity of the algebra the derivation acts on.
    fn arity(&self) -> usize;
    /// `0` for even, `1` for odd.
    fn parity(&self) -> usize;
    fn on_coord(&self, v: Var) -> Result<IForm>;
    fn on_generator(&self, g: Generator) -> Result<IForm>;
}

impl<D: Derivation + ?Sized> Derivation for Arc<D> {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn parity(&self) -> usize {
        (**self).parity()
    }
    fn on_coord(&self, v: Var) -> Result<IForm> {
        (**self).on_coord(v)
    }
    fn on_generator(&self, g: Generator) -> Result<IForm> {
        (**self).on_generator(g)
    }
}

fn sign_form(f: IForm, negative: bool) -> IForm {
    if negative {
        f.neg()
    } else {
        f
    }
}

/// Applies a derivation to a form via the graded Leibniz rule.
pub fn apply<D: Derivation + ?Sized>(d: &D, a: &IForm) -> Result<IForm> {
    if a.arity() != d.arity() {
        return Err(Error::ArityMismatch { expected: d.arity(), found: a.arity() });
    }
    let k = a.arity();
    let parity = d.parity();
    let mut coord_cache: HashMap<Var, IForm> = HashMap::new();
    let mut gen_cache: HashMap<Generator, IForm> = HashMap::new();
    let mut out = IForm::zero(k);
    for (m, c) in a.terms() {
        // D(c) ∧ m
        for v in c.vars() {
            let dc = c.derivative(v);
            if let std::collections::hash_map::Entry::Vacant(e) = coord_cache.entry(v) {
                e.insert(d.on_coord(v)?);
            }
            let dv = &coord_cache[&v];
            if dv.is_zero() {
                continue;
            }
            let t = dv.mul_poly(&dc).wedge(&IForm::term(k, Poly::one(), m.clone()))?;
            out.add_assign(&t);
        }
        // c · Σ ± g_1 ⋯ D(g_i) ⋯ g_n
        let factors = m.factors();
        let mut degree_before = 0usize;
        for (i, &g) in factors.iter().enumerate() {
            if let std::collections::hash_map::Entry::Vacant(e) = gen_cache.entry(g) {
                e.insert(d.on_generator(g)?);
            }
            let dg = &gen_cache[&g];
            if !dg.is_zero() {
                let prefix = Monomial::from_factors(factors[..i].to_vec()).expect("sorted").1;
                let suffix = Monomial::from_factors(factors[i + 1..].to_vec()).expect("sorted").1;
                let t = IForm::term(k, c.clone(), prefix)
                    .wedge(dg)?
                    .wedge(&IForm::term(k, Poly::one(), suffix))?;
                out.add_assign(&sign_form(t, parity * degree_before % 2 == 1));
            }
            degree_before += g.degree();
        }
    }
    Ok(out)
}

/// The differential `d_m` on `Λ_k`.
#[derive(Debug, Clone, Copy)]
pub struct Differential {
    pub arity: usize,
    pub slot: usize,
}

impl Differential {
    pub fn new(arity: usize, slot: usize) -> Result<Self> {
        if slot == 0 || slot > arity {
            return Err(Error::SlotOutOfRange { slot, arity });
        }
        Ok(Differential { arity, slot })
    }
}

impl Derivation for Differential {
    fn arity(&self) -> usize {
        self.arity
    }
    fn parity(&self) -> usize {
        1
    }
    fn on_coord(&self, v: Var) -> Result<IForm> {
        Ok(IForm::generator(self.arity, Generator::raw(SlotSet::single(self.slot), v)))
    }
    fn on_generator(&self, g: Generator) -> Result<IForm> {
        if g.is_contact() {
            return Err(Error::invalid("raw differential applied to an adapted generator"));
        }
        Ok(match outer_differential_sign(self.slot, g.slots) {
            None => IForm::zero(self.arity),
            Some(s) => {
                let f = IForm::generator(self.arity, Generator::raw(g.slots.with(self.slot), g.var));
                sign_form(f, s < 0)
            }
        })
    }
}

/// `d_m a`.
pub fn differential(m: usize, a: &IForm) -> Result<IForm> {
    apply(&Differential::new(a.arity(), m)?, a)
}

/// `d_J a = d_{j_r}(⋯ d_{j_1}(a))` with `j_1 < ⋯ < j_r`.
pub fn differential_multi(slots: SlotSet, a: &IForm) -> Result<IForm> {
    let mut out = a.clone();
    for s in slots.slots() {
        out = differential(s, &out)?;
    }
    Ok(out)
}

/// A derivation `C∞ → Λ_k` of given parity, by its values on coordinates;
/// coordinates without a stored value map to zero. An `Err` value marks a
/// coordinate whose image lies beyond the truncation.
#[derive(Debug, Clone)]
pub struct FunctionDerivation {
    pub arity: usize,
    pub parity: usize,
    pub values: BTreeMap<Var, Result<IForm>>,
}

impl FunctionDerivation {
    pub fn new(arity: usize, parity: usize) -> Self {
        FunctionDerivation { arity, parity, values: BTreeMap::new() }
    }

    /// An even derivation (vector field) with function values.
    pub fn vector_field(arity: usize, values: impl IntoIterator<Item = (Var, Poly)>) -> Self {
        let mut x = FunctionDerivation::new(arity, 0);
        for (v, p) in values {
            x.values.insert(v, Ok(IForm::function(arity, p)));
        }
        x
    }

    /// `d_m` restricted to functions, listed on the given coordinates.
    pub fn differential_on_functions(arity: usize, m: usize, vars: &[Var]) -> Self {
        let mut x = FunctionDerivation::new(arity, 1);
        for &v in vars {
            x.values
                .insert(v, Ok(IForm::generator(arity, Generator::raw(SlotSet::single(m), v))));
        }
        x
    }

    pub fn with_value(mut self, v: Var, value: Result<IForm>) -> Self {
        self.values.insert(v, value);
        self
    }

    pub fn value(&self, v: Var) -> Result<IForm> {
        match self.values.get(&v) {
            Some(r) => r.clone(),
            None => Ok(IForm::zero(self.arity)),
        }
    }

    /// `X(f)` for a polynomial `f`.
    pub fn apply_function(&self, f: &Poly) -> Result<IForm> {
        let mut out = IForm::zero(self.arity);
        for v in f.vars() {
            let xv = self.value(v)?;
            out.add_assign(&xv.mul_poly(&f.derivative(v)));
        }
        Ok(out)
    }
}

/// The insertion `i_X^K`: the graded derivation of parity `|X| + |K|` with
/// `i_X^K(d_{K'} f) = ± d_{K'∖K}(X(f))` for `K ⊆ K'` and zero otherwise.
///
/// The sign is the Koszul sign of moving `i_X^K` past the differentials
/// `d_j`, `j ∉ K`, with which it graded-commutes. For `K = ∅` this is the
/// lift of `X` to a derivation graded-commuting with every `d_j`.
#[derive(Debug, Clone)]
pub struct Insertion {
    pub x: Arc<FunctionDerivation>,
    pub slots: SlotSet,
}

impl Insertion {
    pub fn new(x: Arc<FunctionDerivation>, slots: SlotSet) -> Result<Self> {
        if let Some(m) = slots.max() {
            if m > x.arity {
                return Err(Error::SlotOutOfRange { slot: m, arity: x.arity });
            }
        }
        Ok(Insertion { x, slots })
    }

    /// Sign `s` with `d_{K'} c = s · d_{K'∖K}(d_K c)`.
    fn split_sign(&self, outer: SlotSet) -> i8 {
        let mut seq: Vec<usize> = outer.slots().collect::<Vec<_>>();
        seq.reverse();
        let mut inner: Vec<usize> = self.slots.slots().collect();
        inner.reverse();
        seq.extend(inner);
        match canonicalize_generator(Var(0), &seq, crate::algebra::MAX_ARITY) {
            Ok(Canonical::Factor(s, _)) => s,
            _ => unreachable!("disjoint slot sets"),
        }
    }
}

impl Derivation for Insertion {
    fn arity(&self) -> usize {
        self.x.arity
    }
    fn parity(&self) -> usize {
        (self.x.parity + self.slots.len()) % 2
    }
    fn on_coord(&self, v: Var) -> Result<IForm> {
        if self.slots.is_empty() {
            self.x.value(v)
        } else {
            Ok(IForm::zero(self.arity()))
        }
    }
    fn on_generator(&self, g: Generator) -> Result<IForm> {
        if g.is_contact() {
            return Err(Error::invalid("insertion applied to an adapted generator"));
        }
        if !self.slots.is_subset(g.slots) {
            return Ok(IForm::zero(self.arity()));
        }
        let rest = g.slots.difference(self.slots);
        let s = self.split_sign(rest);
        let commute = rest.len() * self.parity() % 2 == 1;
        let value = differential_multi(rest, &self.x.value(g.var)?)?;
        Ok(sign_form(value, (s < 0) != commute))
    }
}

/// `i_X^K(a)` for `X ∈ D(C∞, Λ_k)`.
pub fn insertion(x: &FunctionDerivation, slots: SlotSet, a: &IForm) -> Result<IForm> {
    apply(&Insertion::new(Arc::new(x.clone()), slots)?, a)
}

/// A derivation given by an explicit table on coordinates and generators.
/// Missing entries are zero; `Err` entries lie beyond the truncation.
#[derive(Debug, Clone)]
pub struct TableDerivation {
    pub arity: usize,
    pub parity: usize,
    pub coords: BTreeMap<Var, Result<IForm>>,
    pub gens: BTreeMap<Generator, Result<IForm>>,
}

impl TableDerivation {
    /// Tabulates `d` on the given coordinates and on all generators `d_J c`
    /// with `∅ ≠ J ⊆ slots`.
    pub fn materialize<D: Derivation + ?Sized>(d: &D, vars: &[Var], slots: SlotSet) -> Self {
        let mut coords = BTreeMap::new();
        let mut gens = BTreeMap::new();
        for &v in vars {
            let val = d.on_coord(v);
            if !matches!(&val, Ok(f) if f.is_zero()) {
                coords.insert(v, val);
            }
            for j in slots.subsets().into_iter().filter(|j| !j.is_empty()) {
                let g = Generator::raw(j, v);
                let val = d.on_generator(g);
                if !matches!(&val, Ok(f) if f.is_zero()) {
                    gens.insert(g, val);
                }
            }
        }
        TableDerivation { arity: d.arity(), parity: d.parity(), coords, gens }
    }
}

impl Derivation for TableDerivation {
    fn arity(&self) -> usize {
        self.arity
    }
    fn parity(&self) -> usize {
        self.parity
    }
    fn on_coord(&self, v: Var) -> Result<IForm> {
        self.coords.get(&v).cloned().unwrap_or_else(|| Ok(IForm::zero(self.arity)))
    }
    fn on_generator(&self, g: Generator) -> Result<IForm> {
        self.gens.get(&g).cloned().unwrap_or_else(|| Ok(IForm::zero(self.arity)))
    }
}

/// The graded commutator `[A, B] = AB - (-1)^{|A||B|} BA`.
pub struct Commutator<A, B> {
    pub a: A,
    pub b: B,
}

impl<A: Derivation, B: Derivation> Commutator<A, B> {
    fn eval(&self, f: &IForm) -> Result<IForm> {
        let ab = apply(&self.a, &apply(&self.b, f)?)?;
        let ba = apply(&self.b, &apply(&self.a, f)?)?;
        if self.a.parity() * self.b.parity() % 2 == 1 {
            ab.add(&ba)
        } else {
            ab.sub(&ba)
        }
    }
}

impl<A: Derivation, B: Derivation> Derivation for Commutator<A, B> {
    fn arity(&self) -> usize {
        self.a.arity()
    }
    fn parity(&self) -> usize {
        (self.a.parity() + self.b.parity()) % 2
    }
    fn on_coord(&self, v: Var) -> Result<IForm> {
        self.eval(&IForm::coordinate(self.arity(), v))
    }
    fn on_generator(&self, g: Generator) -> Result<IForm> {
        self.eval(&IForm::generator(self.arity(), g))
    }
}

/// `[a, b](f)` for two derivations, as a form.
pub fn commutator_apply<A: Derivation + ?Sized, B: Derivation + ?Sized>(
    a: &A,
    b: &B,
    f: &IForm,
) -> Result<IForm> {
    let ab = apply(a, &apply(b, f)?)?;
    let ba = apply(b, &apply(a, f)?)?;
    if a.parity() * b.parity() % 2 == 1 {
        ab.add(&ba)
    } else {
        ab.sub(&ba)
    }
}

/// `i_X^{{k}}` on `Λ_k` for a derivation `X` of `Λ_{k-1}`: kills `Λ_{k-1}` and
/// sends `d_k g` to `X(g)`, so that `[i_X^{{k}}, d_k]` restricts to `X`.
pub struct ContactInsertion<X> {
    pub x: X,
}

impl<X: Derivation> ContactInsertion<X> {
    pub fn new(x: X) -> Self {
        ContactInsertion { x }
    }

    fn top(&self) -> usize {
        self.x.arity()
    }
}

impl<X: Derivation> Derivation for ContactInsertion<X> {
    fn arity(&self) -> usize {
        self.x.arity()
    }
    fn parity(&self) -> usize {
        (self.x.parity() + 1) % 2
    }
    fn on_coord(&self, _v: Var) -> Result<IForm> {
        Ok(IForm::zero(self.arity()))
    }
    fn on_generator(&self, g: Generator) -> Result<IForm> {
        if g.is_contact() {
            return Err(Error::invalid("contact insertion applied to an adapted generator"));
        }
        let k = self.top();
        if !g.slots.contains(k) {
            return Ok(IForm::zero(k));
        }
        // d_L c = d_k(d_{L∖k} c) exactly, since k is the largest slot.
        let inner = g.slots.without(k);
        if inner.is_empty() {
            self.x.on_coord(g.var)
        } else {
            self.x.on_generator(Generator::raw(inner, g.var))
        }
    }
}

/// `L_X^{{k}} = [i_X^{{k}}, d_k]`.
pub struct LieDerivative<X> {
    pub insertion: ContactInsertion<X>,
    pub dk: Differential,
}

impl<X: Derivation> LieDerivative<X> {
    pub fn new(x: X) -> Self {
        let k = x.arity();
        LieDerivative { insertion: ContactInsertion::new(x), dk: Differential { arity: k, slot: k } }
    }

    pub fn eval(&self, a: &IForm) -> Result<IForm> {
        commutator_apply(&self.insertion, &self.dk, a)
    }
}

impl<X: Derivation> Derivation for LieDerivative<X> {
    fn arity(&self) -> usize {
        self.dk.arity
    }
    fn parity(&self) -> usize {
        self.insertion.x.parity()
    }
    fn on_coord(&self, v: Var) -> Result<IForm> {
        self.eval(&IForm::coordinate(self.arity(), v))
    }
    fn on_generator(&self, g: Generator) -> Result<IForm> {
        self.eval(&IForm::generator(self.arity(), g))
    }
}

/// `L_X^{{k}}(a)` for a derivation `X` of `Λ_{k-1}` (acting on arity-`k` forms).
pub fn lie<X: Derivation>(x: X, a: &IForm) -> Result<IForm> {
    LieDerivative::new(x).eval(a)
}

/// `L_X^{{k}}(a)` for a derivation `X` of functions, lifted to `Λ_{k-1}`.
pub fn lie_function_derivation(x: &FunctionDerivation, a: &IForm) -> Result<IForm> {
    let lifted = Insertion::new(Arc::new(x.clone()), SlotSet::EMPTY)?;
    lie(lifted, a)
}

/// A permutation of `{1, …, n}`, stored as its images.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n + 1];
        for &i in &images {
            if i == 0 || i > n || seen[i] {
                return Err(Error::invalid(format!("not a permutation: {images:?}")));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { images: (1..=n).collect() }
    }

    pub fn transposition(n: usize, a: usize, b: usize) -> Result<Self> {
        if a == 0 || b == 0 || a > n || b > n {
            return Err(Error::invalid(format!("transposition ({a} {b}) outside 1..={n}")));
        }
        let mut images: Vec<usize> = (1..=n).collect();
        images.swap(a - 1, b - 1);
        Ok(Permutation { images })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, i: usize) -> usize {
        self.images[i - 1]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation { images: other.images.iter().map(|&i| self.image(i)).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0; self.len()];
        for (i, &j) in self.images.iter().enumerate() {
            images[j - 1] = i + 1;
        }
        Permutation { images }
    }

    pub fn fixes(&self, i: usize) -> bool {
        self.image(i) == i
    }

    /// Decomposition into transpositions (product left to right).
    pub fn transpositions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut p = self.images.clone();
        for i in 0..p.len() {
            while p[i] != i + 1 {
                let j = p[i] - 1;
                p.swap(i, j);
                out.push((i + 1, j + 1));
            }
        }
        out.reverse();
        out
    }

    /// Extends a permutation of `{1, …, n}` by fixing `n+1, …, m`.
    pub fn extend(&self, m: usize) -> Permutation {
        let mut images = self.images.clone();
        images.extend(self.len() + 1..=m);
        Permutation { images }
    }

    pub fn apply_slots(&self, s: SlotSet) -> SlotSet {
        SlotSet::from_slots(&s.slots().map(|i| self.image(i)).collect::<Vec<_>>())
    }
}

/// `κ_σ`: the algebra automorphism with `κ_σ ∘ d_m = d_{σ(m)} ∘ κ_σ`, fixing
/// functions.
pub fn kappa(sigma: &Permutation, a: &IForm) -> Result<IForm> {
    let k = a.arity();
    if sigma.len() != k {
        return Err(Error::ArityMismatch { expected: k, found: sigma.len() });
    }
    let mut out = IForm::zero(k);
    'terms: for (m, c) in a.terms() {
        let mut sign = 1i8;
        let mut factors = Vec::with_capacity(m.factors().len());
        for g in m.factors() {
            if g.is_contact() {
                return Err(Error::invalid("kappa applied to an adapted generator"));
            }
            let seq: Vec<usize> = g.slots.slots().rev().map(|s| sigma.image(s)).collect();
            match canonicalize_generator(g.var, &seq, k)? {
                Canonical::Factor(s, h) => {
                    sign *= s;
                    factors.push(h);
                }
                Canonical::Annihilated => continue 'terms,
            }
        }
        if let Some((s, mono)) = Monomial::from_factors(factors) {
            out.add_scaled_term(mono, c, sign * s);
        }
    }
    Ok(out)
}

/// A formal covariant `k`-tensor: coefficient times `dc_1 ⊗ ⋯ ⊗ dc_k`.
#[derive(Debug, Clone, Default)]
pub struct CovariantTensor {
    pub terms: Vec<(Poly, Vec<Var>)>,
}

impl CovariantTensor {
    pub fn arity(&self) -> Option<usize> {
        self.terms.first().map(|(_, v)| v.len())
    }
}

/// `ι_k(f dc_1 ⊗ ⋯ ⊗ dc_k) = f d_k c_1 ∧ d_{k-1} c_2 ∧ ⋯ ∧ d_1 c_k`.
pub fn iota(k: usize, t: &CovariantTensor) -> Result<IForm> {
    let mut out = IForm::zero(k);
    for (coef, vars) in &t.terms {
        if vars.len() != k {
            return Err(Error::ArityMismatch { expected: k, found: vars.len() });
        }
        let mut f = IForm::function(k, coef.clone());
        for (j, &v) in vars.iter().enumerate() {
            let g = IForm::generator(k, Generator::raw(SlotSet::single(k - j), v));
            f = f.wedge(&g)?;
        }
        out.add_assign(&f);
    }
    Ok(out)
}

/// The insertions `i_m^K` with `m < k` and `|K| ≥ 2` that cut out covariant
/// tensors in multi-degree `(1, …, 1)`.
pub fn tensor_constraints(k: usize, vars: &[Var]) -> Vec<(usize, SlotSet, Insertion)> {
    let mut out = Vec::new();
    for m in 1..k {
        let x = Arc::new(FunctionDerivation::differential_on_functions(k, m, vars));
        for slots in SlotSet::upto(k).subsets() {
            if slots.len() >= 2 {
                out.push((m, slots, Insertion { x: x.clone(), slots }));
            }
        }
    }
    out
}

/// Whether a form of multi-degree `(1, …, 1)` lies in the image of `ι_k`,
/// tested by the vanishing of every `i_m^K`, `m < k`, `|K| ≥ 2`.
pub fn is_covariant_tensor(a: &IForm) -> Result<bool> {
    let k = a.arity();
    if a.is_zero() {
        return Ok(true);
    }
    match a.multidegree() {
        Some(d) if d.0.iter().all(|&x| x == 1) => {}
        _ => {
            return Err(Error::invalid("covariant tensor test needs multi-degree (1,…,1)"));
        }
    }
    let vars = a.vars();
    for (_, _, ins) in tensor_constraints(k, &vars) {
        if !apply(&ins, a)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Constant-coefficient monomials of multi-degree `(1, …, 1)` over `vars`.
pub fn unit_degree_monomials(k: usize, vars: &[Var]) -> Vec<Monomial> {
    fn partitions(rest: SlotSet, acc: &mut Vec<SlotSet>, out: &mut Vec<Vec<SlotSet>>) {
        let Some(first) = rest.slots().next() else {
            out.push(acc.clone());
            return;
        };
        let others = rest.without(first);
        for sub in others.subsets() {
            let block = sub.with(first);
            acc.push(block);
            partitions(rest.difference(block), acc, out);
            acc.pop();
        }
    }
    let mut parts = Vec::new();
    partitions(SlotSet::upto(k), &mut Vec::new(), &mut parts);
    let mut monos = std::collections::BTreeSet::new();
    for blocks in parts {
        let mut partial: Vec<Vec<Generator>> = vec![Vec::new()];
        for &b in &blocks {
            partial = partial
                .into_iter()
                .flat_map(|p| {
                    vars.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(Generator::raw(b, v));
                        q
                    })
                })
                .collect();
        }
        for gens in partial {
            if let Some((_, m)) = Monomial::from_factors(gens) {
                monos.insert(m);
            }
        }
    }
    monos.into_iter().collect()
}

/// Ranks in multi-degree `(1, …, 1)` over constant coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorRankReport {
    pub ambient: usize,
    pub iota_rank: usize,
    pub constraint_kernel: usize,
    pub image_in_kernel: bool,
}

fn form_to_vector(
    f: &IForm,
    index: &mut BTreeMap<Monomial, usize>,
    offset: usize,
    out: &mut SparseVec,
) -> Result<()> {
    for (m, c) in f.terms() {
        let cst: Q = c
            .as_constant()
            .ok_or_else(|| Error::invalid("non-constant coefficient in rank computation"))?;
        let n = index.len();
        let i = *index.entry(m.clone()).or_insert(n);
        out.insert(offset + i, cst);
    }
    Ok(())
}

/// Compares the rank of `im ι_k` with the kernel rank of the tensor
/// constraints over the coordinates `vars`.
pub fn tensor_rank_report(k: usize, vars: &[Var]) -> Result<TensorRankReport> {
    let basis = unit_degree_monomials(k, vars);
    let constraints = tensor_constraints(k, vars);
    // Columns: constraint values of each basis monomial, stacked per constraint.
    let mut indices: Vec<BTreeMap<Monomial, usize>> = vec![BTreeMap::new(); constraints.len()];
    let mut columns: Vec<Vec<SparseVec>> = Vec::new();
    for m in &basis {
        let f = IForm::term(k, Poly::one(), m.clone());
        let mut per = Vec::new();
        for (ci, (_, _, ins)) in constraints.iter().enumerate() {
            let mut v = SparseVec::new();
            form_to_vector(&apply(ins, &f)?, &mut indices[ci], 0, &mut v)?;
            per.push(v);
        }
        columns.push(per);
    }
    let mut offsets = Vec::new();
    let mut total = 0;
    for idx in &indices {
        offsets.push(total);
        total += idx.len();
    }
    let cols: Vec<SparseVec> = columns
        .into_iter()
        .map(|per| {
            per.into_iter()
                .enumerate()
                .flat_map(|(ci, v)| {
                    let o = offsets[ci];
                    v.into_iter().map(move |(i, x)| (o + i, x)).collect::<Vec<_>>()
                })
                .collect()
        })
        .collect();
    let constraint_matrix = RationalMatrix::from_columns(total, cols);
    let kernel = crate::linalg::kernel_basis(&constraint_matrix);

    let mut basis_index: BTreeMap<Monomial, usize> =
        basis.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
    let mut image_cols = Vec::new();
    let mut tuple = vec![0usize; k];
    loop {
        let t = CovariantTensor {
            terms: vec![(Poly::one(), tuple.iter().map(|&i| vars[i]).collect())],
        };
        let mut v = SparseVec::new();
        form_to_vector(&iota(k, &t)?, &mut basis_index, 0, &mut v)?;
        image_cols.push(v);
        let mut i = 0;
        while i < k {
            tuple[i] += 1;
            if tuple[i] < vars.len() {
                break;
            }
            tuple[i] = 0;
            i += 1;
        }
        if i == k {
            break;
        }
    }
    let image = RationalMatrix::from_columns(basis.len(), image_cols);
    let kernel_e = kernel.echelon();
    let image_in_kernel = image.columns().iter().all(|c| kernel_e.contains(c));
    Ok(TensorRankReport {
        ambient: basis.len(),
        iota_rank: image.rank(),
        constraint_kernel: kernel.len(),
        image_in_kernel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: Var = Var(0);
    const U: Var = Var(1);
    const Y: Var = Var(2);

    fn gen(slots: &[usize], v: Var) -> Generator {
        Generator::raw(SlotSet::from_slots(slots), v)
    }

    fn g(k: usize, slots: &[usize], v: Var) -> IForm {
        IForm::generator(k, gen(slots, v))
    }

    fn sample(k: usize) -> IForm {
        // x u d_1 y + u^2 d_2 x ∧ d_1 u + d_{12} y
        let x = Poly::var(X);
        let u = Poly::var(U);
        let mut a = g(k, &[1], Y).mul_poly(&(&x * &u));
        a.add_assign(&g(k, &[2], X).wedge(&g(k, &[1], U)).unwrap().mul_poly(&(&u * &u)));
        a.add_assign(&g(k, &[1, 2], Y));
        a
    }

    #[test]
    fn differentials_anticommute() {
        let x = IForm::coordinate(2, X);
        assert_eq!(differential(1, &differential(2, &x).unwrap()).unwrap(), g(2, &[1, 2], X).neg());
        assert_eq!(differential(2, &differential(1, &x).unwrap()).unwrap(), g(2, &[1, 2], X));
        let a = sample(3);
        for m in 1..=3 {
            assert!(differential(m, &differential(m, &a).unwrap()).unwrap().is_zero());
            for n in 1..=3 {
                let mn = differential(m, &differential(n, &a).unwrap()).unwrap();
                let nm = differential(n, &differential(m, &a).unwrap()).unwrap();
                assert!(mn.add(&nm).unwrap().is_zero(), "d_{m} d_{n}");
            }
        }
    }

    #[test]
    fn empty_insertion_of_differential_is_differential() {
        let a = sample(3);
        let vars = a.vars();
        for m in 1..=3 {
            let x = FunctionDerivation::differential_on_functions(3, m, &vars);
            assert_eq!(insertion(&x, SlotSet::EMPTY, &a).unwrap(), differential(m, &a).unwrap());
        }
    }

    #[test]
    fn insertion_commutes_with_outside_differentials() {
        let a = sample(3);
        let vars = a.vars();
        let x = Arc::new(FunctionDerivation::differential_on_functions(3, 1, &vars));
        for slots in SlotSet::upto(3).subsets() {
            let ins = Insertion::new(x.clone(), slots).unwrap();
            for j in (1..=3).filter(|&j| !slots.contains(j)) {
                let lhs = apply(&ins, &differential(j, &a).unwrap()).unwrap();
                let rhs = differential(j, &apply(&ins, &a).unwrap()).unwrap();
                let rhs = if ins.parity() == 1 { rhs.neg() } else { rhs };
                assert_eq!(lhs, rhs, "K={slots} j={j}");
            }
        }
    }

    #[test]
    fn insertion_values() {
        let vars = [X, U];
        let d1 = FunctionDerivation::differential_on_functions(2, 1, &vars);
        let d2 = FunctionDerivation::differential_on_functions(2, 2, &vars);
        let v = insertion(&d1, SlotSet::single(1), &g(2, &[1, 2], X)).unwrap();
        assert_eq!(v, g(2, &[1, 2], X));
        // d_{12} x = -d_1(d_2 x), so i_{d_2}^{2}(d_{12} x) = -d_1 d_2 x
        let w = insertion(&d2, SlotSet::single(2), &g(2, &[1, 2], X)).unwrap();
        assert_eq!(w, g(2, &[1, 2], X));
        assert!(insertion(&d1, SlotSet::single(2), &g(2, &[1, 2], X)).unwrap().is_zero());
        assert!(insertion(&d1, SlotSet::single(1), &g(2, &[2], X)).unwrap().is_zero());
        let t = insertion(&d1, SlotSet::from_slots(&[1, 2]), &g(2, &[1, 2], X)).unwrap();
        assert_eq!(t, g(2, &[1], X));
    }

    #[test]
    fn lie_examples() {
        let ux = FunctionDerivation::vector_field(1, [(X, Poly::var(U))]);
        assert_eq!(lie_function_derivation(&ux, &g(1, &[1], X)).unwrap(), g(1, &[1], U));
        let dx = FunctionDerivation::vector_field(2, [(X, Poly::one())]);
        assert!(lie_function_derivation(&dx, &g(2, &[2], X)).unwrap().is_zero());
        assert!(lie_function_derivation(&dx, &g(2, &[1, 2], X)).unwrap().is_zero());
    }

    #[test]
    fn lie_of_d_m_is_d_m() {
        let a = sample(3);
        let vars = a.vars();
        for m in 1..3 {
            let dm = Insertion::new(
                Arc::new(FunctionDerivation::differential_on_functions(3, m, &vars)),
                SlotSet::EMPTY,
            )
            .unwrap();
            assert_eq!(lie(dm, &a).unwrap(), differential(m, &a).unwrap());
        }
    }

    #[test]
    fn lifted_field_matches_contact_construction() {
        // For a lifted field the two constructions of the Lie derivative agree.
        let a = sample(3);
        let x = FunctionDerivation::vector_field(
            3,
            [(X, &Poly::var(U) * &Poly::var(Y)), (U, Poly::var(X))],
        );
        let direct = insertion(&x, SlotSet::EMPTY, &a).unwrap();
        assert_eq!(lie_function_derivation(&x, &a).unwrap(), direct);
    }

    #[test]
    fn kappa_examples() {
        let s = Permutation::transposition(2, 1, 2).unwrap();
        assert_eq!(kappa(&s, &g(2, &[1, 2], X)).unwrap(), g(2, &[1, 2], X).neg());
        assert_eq!(kappa(&s, &g(2, &[1], X)).unwrap(), g(2, &[2], X));
        let a = sample(3);
        let p = Permutation::new(vec![2, 3, 1]).unwrap();
        let r = Permutation::transposition(3, 1, 3).unwrap();
        let lhs = kappa(&p, &kappa(&r, &a).unwrap()).unwrap();
        assert_eq!(lhs, kappa(&p.compose(&r), &a).unwrap());
        assert_eq!(kappa(&Permutation::identity(3), &a).unwrap(), a);
        for m in 1..=3 {
            let lhs = kappa(&p, &differential(m, &a).unwrap()).unwrap();
            let rhs = differential(p.image(m), &kappa(&p, &a).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn transposition_decomposition() {
        let p = Permutation::new(vec![3, 1, 4, 2]).unwrap();
        let mut acc = Permutation::identity(4);
        for (a, b) in p.transpositions() {
            acc = acc.compose(&Permutation::transposition(4, a, b).unwrap());
        }
        assert_eq!(acc, p);
        assert_eq!(p.compose(&p.inverse()), Permutation::identity(4));
    }

    #[test]
    fn iota_and_tensor_test() {
        let t = CovariantTensor { terms: vec![(Poly::var(U), vec![X, Y])] };
        let f = iota(2, &t).unwrap();
        let expected = g(2, &[2], X).wedge(&g(2, &[1], Y)).unwrap().mul_poly(&Poly::var(U));
        assert_eq!(f, expected);
        assert!(is_covariant_tensor(&f).unwrap());
        assert!(!is_covariant_tensor(&g(2, &[1, 2], X)).unwrap());
        assert!(is_covariant_tensor(&IForm::zero(2)).unwrap());
        assert!(is_covariant_tensor(&g(2, &[1], X)).is_err());
    }

    #[test]
    fn tensor_ranks() {
        let r = tensor_rank_report(2, &[X, Y]).unwrap();
        assert_eq!((r.ambient, r.iota_rank, r.constraint_kernel), (6, 4, 4));
        assert!(r.image_in_kernel);
        let r = tensor_rank_report(3, &[X, Y]).unwrap();
        assert_eq!((r.iota_rank, r.constraint_kernel), (8, 8));
        assert!(r.image_in_kernel);
    }
}
