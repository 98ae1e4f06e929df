//! Coordinate patches with a contact structure, the Cartan ideal and its
//! adapted normal form.
//!
//! A patch carries slot-1 contact forms `ω_j = d_1 c_j - Σ_l a_{jl} d_1 y_l`,
//! each with its own leading coordinate `c_j`. For a distinguished slot set
//! `K` the raw generators `d_L c_j` with `L ∩ K ≠ ∅` are replaced by
//!
//! ```text
//! θ^L_j = d_{L∖m}(κ_{1m} ω_j),   m = max(L ∩ K)
//! ```
//!
//! which differ from `±d_L c_j` by products of generators with fewer slots, so
//! the substitution is unitriangular. In the new alphabet, membership in the
//! `p`-th power of the Cartan ideal is "at least `p` θ-factors".

use std::collections::HashMap;

use crate::algebra::{outer_differential_sign, Generator, IForm, Monomial, Names, SlotSet};
use crate::calculus::{differential, differential_multi, TableDerivation};
use crate::error::{Error, Result};
use crate::poly::{PMono, Poly, Var};

/// How a coordinate enters the contact structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Base,
    /// Leading coordinate of the contact form with this index.
    Leading(usize),
    /// Highest jet coordinate: its contact form lies beyond the cap.
    Frontier,
}

/// `ω = d_1 leading - Σ a d_1 y` with all `y` non-leading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContactForm {
    pub alias: String,
    pub leading: Var,
    pub slope: Vec<(Var, Poly)>,
}

impl ContactForm {
    /// `κ_{1m} ω` in `Λ_k`: the same form with slot 1 replaced by `m`.
    pub fn in_slot(&self, arity: usize, m: usize) -> IForm {
        let s = SlotSet::single(m);
        let mut f = IForm::generator(arity, Generator::raw(s, self.leading));
        for (y, a) in &self.slope {
            f.add_assign(&IForm::generator(arity, Generator::raw(s, *y)).mul_poly(a).neg());
        }
        f
    }
}

/// The grading used to cut the Cartan-filtered complex into finite slices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Grading {
    /// Jet patches: (weight, number of `u`-factors) with `x ↦ (-1, 0)` and
    /// `u_i ↦ (i, 1)`; the `x`-degree of coefficients is capped.
    Jet,
    /// Total polynomial degree, generators counting as their coordinate.
    Total,
    /// Explicit integer weights per coordinate; the first component must be
    /// positive on every coordinate.
    Weights(Vec<Vec<i64>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    names: Vec<String>,
    roles: Vec<Role>,
    contacts: Vec<ContactForm>,
    jet_order: Option<usize>,
    grading: Grading,
}

impl Patch {
    /// The jet patch `x, u_0, …, u_R` with `ω_i = d_1 u_i - u_{i+1} d_1 x`, `i < R`.
    pub fn jet(order: usize) -> Patch {
        let mut names = vec!["x".to_string()];
        let mut roles = vec![Role::Base];
        let mut contacts = Vec::new();
        for i in 0..=order {
            names.push(format!("u{i}"));
            if i < order {
                roles.push(Role::Leading(i));
                contacts.push(ContactForm {
                    alias: format!("w{i}"),
                    leading: Var(i as u32 + 1),
                    slope: vec![(Var(0), Poly::var(Var(i as u32 + 2)))],
                });
            } else {
                roles.push(Role::Frontier);
            }
        }
        Patch { names, roles, contacts, jet_order: Some(order), grading: Grading::Jet }
    }

    /// A plain manifold: coordinates only, no contact forms.
    pub fn plain<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Patch> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        check_names(&names)?;
        let roles = vec![Role::Base; names.len()];
        Ok(Patch { names, roles, contacts: Vec::new(), jet_order: None, grading: Grading::Total })
    }

    /// A patch with explicit slot-1 contact forms. The leading coordinate of each
    /// form is the first coordinate with a constant `d_1`-coefficient that does
    /// not occur in any other form; the form is normalized to make it 1.
    pub fn explicit(
        names: Vec<String>,
        forms: Vec<(String, IForm)>,
        weights: Option<Vec<Vec<i64>>>,
    ) -> Result<Patch> {
        check_names(&names)?;
        let n = names.len();
        let mut linear: Vec<Vec<(Var, Poly)>> = Vec::new();
        for (alias, f) in &forms {
            if f.arity() != 1 {
                return Err(Error::invalid(format!("contact form {alias} must be a slot-1 form")));
            }
            let mut terms = Vec::new();
            for (m, c) in f.terms() {
                match m.factors() {
                    [g] if !g.is_contact() && g.slots == SlotSet::single(1) => {
                        terms.push((g.var, c.clone()))
                    }
                    _ => {
                        return Err(Error::invalid(format!(
                            "contact form {alias} must be linear in d[1] of coordinates"
                        )))
                    }
                }
            }
            if terms.is_empty() {
                return Err(Error::invalid(format!("contact form {alias} is zero")));
            }
            linear.push(terms);
        }
        let occurs = |v: Var, except: usize| {
            linear.iter().enumerate().any(|(i, t)| i != except && t.iter().any(|(w, _)| *w == v))
        };
        let mut roles = vec![Role::Base; n];
        let mut contacts = Vec::new();
        for (j, terms) in linear.iter().enumerate() {
            let lead = terms.iter().find(|(v, c)| {
                c.as_constant().is_some_and(|q| q != num_traits::Zero::zero())
                    && roles[v.0 as usize] == Role::Base
                    && !occurs(*v, j)
            });
            let Some((lead, c)) = lead else {
                return Err(Error::invalid(format!(
                    "contact form {} has no admissible leading coordinate",
                    forms[j].0
                )));
            };
            let inv = num_traits::Inv::inv(c.as_constant().unwrap());
            roles[lead.0 as usize] = Role::Leading(j);
            let slope = terms
                .iter()
                .filter(|(v, _)| v != lead)
                .map(|(v, a)| (*v, a.scale(&inv).scale(&-crate::poly::q(1))))
                .collect();
            contacts.push(ContactForm { alias: forms[j].0.clone(), leading: *lead, slope });
        }
        for c in &contacts {
            for (y, _) in &c.slope {
                if matches!(roles[y.0 as usize], Role::Leading(_)) {
                    return Err(Error::invalid(format!(
                        "contact form {} involves the leading coordinate {}",
                        c.alias, names[y.0 as usize]
                    )));
                }
            }
        }
        let grading = match weights {
            None => Grading::Total,
            Some(w) => {
                if w.len() != n || w.iter().any(|v| v.is_empty() || v[0] <= 0) {
                    return Err(Error::invalid("grading needs a positive first weight per coordinate"));
                }
                let dim = w[0].len();
                if w.iter().any(|v| v.len() != dim) {
                    return Err(Error::invalid("grading weight vectors differ in length"));
                }
                Grading::Weights(w)
            }
        };
        Ok(Patch { names, roles, contacts, jet_order: None, grading })
    }

    /// The same jet patch at another order.
    pub fn with_order(&self, order: usize) -> Result<Patch> {
        match self.jet_order {
            Some(_) => Ok(Patch::jet(order)),
            None => Err(Error::Unsupported("order change on a non-jet patch".into())),
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names[v.0 as usize]
    }

    pub fn var(&self, name: &str) -> Option<Var> {
        self.names.iter().position(|n| n == name).map(|i| Var(i as u32))
    }

    pub fn vars(&self) -> Vec<Var> {
        (0..self.names.len() as u32).map(Var).collect()
    }

    pub fn role(&self, v: Var) -> Role {
        self.roles[v.0 as usize]
    }

    pub fn contacts(&self) -> &[ContactForm] {
        &self.contacts
    }

    pub fn jet_order(&self) -> Option<usize> {
        self.jet_order
    }

    pub fn is_plain(&self) -> bool {
        self.contacts.is_empty() && self.jet_order.is_none()
    }

    pub fn grading(&self) -> &Grading {
        &self.grading
    }

    /// The contact form with index `i`, or a truncation error on a jet patch.
    pub fn contact(&self, i: usize) -> Result<&ContactForm> {
        if let Some(c) = self.contacts.get(i) {
            return Ok(c);
        }
        match self.jet_order {
            Some(_) => Err(Error::Truncation { what: format!("contact form w{i}"), needed: i + 1 }),
            None => Err(Error::invalid(format!("no contact form with index {i}"))),
        }
    }

    pub fn contact_by_alias(&self, alias: &str) -> Option<usize> {
        self.contacts.iter().position(|c| c.alias == alias)
    }

    /// Number of grading components.
    pub fn grading_dim(&self) -> usize {
        match &self.grading {
            Grading::Jet => 2,
            Grading::Total => 1,
            Grading::Weights(w) => w[0].len(),
        }
    }

    /// Grading of a coordinate; generators `d_L c` and `θ^L_c` inherit it.
    pub fn weight(&self, v: Var) -> Vec<i64> {
        match &self.grading {
            Grading::Jet => {
                if v.0 == 0 {
                    vec![-1, 0]
                } else {
                    vec![v.0 as i64 - 1, 1]
                }
            }
            Grading::Total => vec![1],
            Grading::Weights(w) => w[v.0 as usize].clone(),
        }
    }

    /// Coordinates whose degree in coefficients is capped (the `x` of a jet patch).
    pub fn capped_vars(&self) -> Vec<Var> {
        match self.grading {
            Grading::Jet => vec![Var(0)],
            _ => Vec::new(),
        }
    }

    /// Whether every contact form is homogeneous for the grading, so that the
    /// adapted differentials preserve it.
    pub fn check_grading(&self) -> Result<()> {
        for c in &self.contacts {
            let lead = self.weight(c.leading);
            for (y, a) in &c.slope {
                let wy = self.weight(*y);
                for (m, _) in a.terms() {
                    let mut w = wy.clone();
                    for &(v, e) in m.powers() {
                        for (x, z) in w.iter_mut().zip(self.weight(v)) {
                            *x += z * e as i64;
                        }
                    }
                    if w != lead {
                        return Err(Error::Unsupported(format!(
                            "contact form {} is not homogeneous for the grading",
                            c.alias
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Coefficient monomials of the given grading, with capped coordinates of
    /// degree at most `cap`.
    pub fn coefficient_monomials(&self, grade: &[i64], cap: u32) -> Vec<PMono> {
        let vars = self.vars();
        match &self.grading {
            Grading::Jet => {
                let (w, n) = (grade[0], grade[1]);
                if n < 0 {
                    return Vec::new();
                }
                let top = vars.len() - 1;
                let mut out = Vec::new();
                for a in 0..=cap as i64 {
                    let sum = w + a;
                    if sum < 0 {
                        continue;
                    }
                    for orders in multisets_with_sum(n as usize, top, sum as usize) {
                        let mut powers = vec![(Var(0), a as u32)];
                        powers.extend(orders.into_iter().map(|o| (Var(o as u32 + 1), 1)));
                        out.push(PMono::from_powers(powers));
                    }
                }
                out.sort();
                out.dedup();
                out
            }
            Grading::Total | Grading::Weights(_) => {
                let target = grade[0];
                if target < 0 {
                    return Vec::new();
                }
                let w0: Vec<i64> = vars.iter().map(|&v| self.weight(v)[0]).collect();
                let mut out = Vec::new();
                let mut acc = Vec::new();
                weighted_monomials(&vars, &w0, 0, target, &mut acc, &mut out);
                out.retain(|m| self.mono_weight(m) == grade);
                out
            }
        }
    }

    pub fn mono_weight(&self, m: &PMono) -> Vec<i64> {
        let mut w = vec![0; self.grading_dim()];
        for &(v, e) in m.powers() {
            for (x, z) in w.iter_mut().zip(self.weight(v)) {
                *x += z * e as i64;
            }
        }
        w
    }
}

fn check_names(names: &[String]) -> Result<()> {
    for (i, n) in names.iter().enumerate() {
        let ok = n.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
            && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            && n != "d"
            && n != "c";
        if !ok {
            return Err(Error::invalid(format!("bad coordinate name {n:?}")));
        }
        if names[..i].contains(n) {
            return Err(Error::invalid(format!("duplicate coordinate name {n:?}")));
        }
    }
    Ok(())
}

/// Non-decreasing sequences of `n` values in `0..=top` with the given sum.
fn multisets_with_sum(n: usize, top: usize, sum: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, lo: usize, top: usize, sum: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 0 {
            if sum == 0 {
                out.push(acc.clone());
            }
            return;
        }
        for v in lo..=top.min(sum) {
            if v * n > sum {
                break;
            }
            acc.push(v);
            go(n - 1, v, top, sum - v, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(n, 0, top, sum, &mut Vec::new(), &mut out);
    out
}

fn weighted_monomials(
    vars: &[Var],
    w: &[i64],
    i: usize,
    rest: i64,
    acc: &mut Vec<(Var, u32)>,
    out: &mut Vec<PMono>,
) {
    if rest == 0 {
        out.push(PMono::from_powers(acc.clone()));
        return;
    }
    if i == vars.len() {
        return;
    }
    let mut e = 0u32;
    while e as i64 * w[i] <= rest {
        if e > 0 {
            acc.push((vars[i], e));
        }
        weighted_monomials(vars, w, i + 1, rest - e as i64 * w[i], acc, out);
        if e > 0 {
            acc.pop();
        }
        e += 1;
    }
}

impl Names for Patch {
    fn var_name(&self, v: Var) -> String {
        self.names[v.0 as usize].clone()
    }

    fn contact_name(&self, slots: SlotSet, v: Var) -> String {
        match self.role(v) {
            Role::Leading(j) if slots == SlotSet::single(1) => self.contacts[j].alias.clone(),
            _ => format!("c[{}]({})", slots, self.name(v)),
        }
    }
}

/// `d_K(κ_{1k} ω_i)` in `Λ_k`, a generator of the Cartan ideal.
pub fn cartan_generator(patch: &Patch, k: usize, slots: SlotSet, i: usize) -> Result<IForm> {
    if let Some(m) = slots.max() {
        if m >= k {
            return Err(Error::invalid(format!("slot set {{{slots}}} must lie in 1..{k}")));
        }
    }
    let base = patch.contact(i)?.in_slot(k, k);
    differential_multi(slots, &base)
}

/// `θ^L_j = d_{L∖m}(κ_{1m} ω_j)` as a raw form.
pub fn theta_raw(patch: &Patch, k: usize, slots: SlotSet, m: usize, j: usize) -> Result<IForm> {
    if !slots.contains(m) || slots.max().is_some_and(|s| s > k) {
        return Err(Error::invalid(format!("bad adapted generator slots {{{slots}}} / {m}")));
    }
    differential_multi(slots.without(m), &patch.contact(j)?.in_slot(k, m))
}

/// Substitutes a form for every generator (an algebra morphism fixing functions).
pub fn map_generators(a: &IForm, mut f: impl FnMut(Generator) -> Result<IForm>) -> Result<IForm> {
    let k = a.arity();
    let mut out = IForm::zero(k);
    for (m, c) in a.terms() {
        let mut acc = IForm::function(k, c.clone());
        for &g in m.factors() {
            acc = acc.wedge(&f(g)?)?;
            if acc.is_zero() {
                break;
            }
        }
        out.add_assign(&acc);
    }
    Ok(out)
}

/// Rewriting between raw generators and the adapted basis for a distinguished
/// slot set, with the differentials `d_m` tabulated in the adapted alphabet.
#[derive(Debug, Clone)]
pub struct Adapter {
    patch: Patch,
    arity: usize,
    distinguished: SlotSet,
    adapt: HashMap<Generator, Result<IForm>>,
    theta: HashMap<Generator, IForm>,
    diffs: Vec<TableDerivation>,
}

impl Adapter {
    pub fn new(patch: &Patch, arity: usize, distinguished: SlotSet) -> Result<Adapter> {
        if arity == 0 || arity > crate::algebra::MAX_ARITY {
            return Err(Error::invalid(format!("arity {arity} out of range")));
        }
        if distinguished.is_empty() || distinguished.max().is_some_and(|m| m > arity) {
            return Err(Error::invalid(format!("distinguished slots {{{distinguished}}} invalid")));
        }
        let mut ad = Adapter {
            patch: patch.clone(),
            arity,
            distinguished,
            adapt: HashMap::new(),
            theta: HashMap::new(),
            diffs: Vec::new(),
        };
        let mut sets: Vec<SlotSet> = SlotSet::upto(arity).subsets();
        sets.retain(|s| !s.is_empty());
        sets.sort_by_key(|s| (s.len(), *s));
        let vars = patch.vars();
        let mut pending = Vec::new();
        for &l in &sets {
            for &v in &vars {
                let g = Generator::raw(l, v);
                let touches = !l.intersection(distinguished).is_empty();
                let val = match patch.role(v) {
                    Role::Leading(j) if touches => {
                        pending.push((g, j));
                        continue;
                    }
                    Role::Frontier if touches => Err(Error::Truncation {
                        what: format!("d[{l}]({})", patch.name(v)),
                        needed: patch.jet_order.unwrap_or(0) + 1,
                    }),
                    _ => Ok(IForm::generator(arity, g)),
                };
                ad.adapt.insert(g, val);
            }
        }
        // `sets` is ordered by size, so every lower generator is ready in time.
        for (g, j) in pending {
            let val = ad.adapt_leading(g, j);
            ad.adapt.insert(g, val);
        }
        for m in 1..=arity {
            let t = ad.tabulate_differential(m, &sets);
            ad.diffs.push(t);
        }
        Ok(ad)
    }

    fn adapt_leading(&mut self, g: Generator, j: usize) -> Result<IForm> {
        let k = self.arity;
        let m = g.slots.intersection(self.distinguished).max().expect("non-empty");
        let raw = theta_raw(&self.patch, k, g.slots, m, j)?;
        let lead = raw
            .coefficient(&Monomial::single(g))
            .and_then(Poly::as_constant)
            .expect("unitriangular substitution");
        let s = if lead > num_traits::Zero::zero() { 1 } else { -1 };
        let rest = raw.sub(&IForm::generator(k, g).scale(&lead))?;
        let sub = self.substitute(&rest)?;
        let th = Generator::contact(g.slots, g.var);
        self.theta.insert(th, raw);
        let val = IForm::generator(k, th).sub(&sub)?;
        Ok(if s < 0 { val.neg() } else { val })
    }

    fn substitute(&self, raw: &IForm) -> Result<IForm> {
        map_generators(raw, |g| {
            if g.is_contact() {
                return Err(Error::invalid("expected a raw form"));
            }
            match self.adapt.get(&g) {
                Some(v) => v.clone(),
                None => Err(Error::invalid(format!("generator outside the patch: {g:?}"))),
            }
        })
    }

    fn tabulate_differential(&self, m: usize, sets: &[SlotSet]) -> TableDerivation {
        let k = self.arity;
        let mut t = TableDerivation {
            arity: k,
            parity: 1,
            coords: Default::default(),
            gens: Default::default(),
        };
        for v in self.patch.vars() {
            t.coords.insert(v, self.adapt[&Generator::raw(SlotSet::single(m), v)].clone());
            for &l in sets {
                let g = Generator::raw(l, v);
                let th = Generator::contact(l, v);
                if let Some(raw) = self.theta.get(&th) {
                    let val = differential(m, raw).and_then(|d| self.substitute(&d));
                    t.gens.insert(th, val);
                } else if self.adapt[&g].is_ok() {
                    let val = match outer_differential_sign(m, l) {
                        None => Ok(IForm::zero(k)),
                        Some(s) => self.adapt[&Generator::raw(l.with(m), v)]
                            .clone()
                            .map(|f| if s < 0 { f.neg() } else { f }),
                    };
                    t.gens.insert(g, val);
                }
            }
        }
        t
    }

    pub fn patch(&self) -> &Patch {
        &self.patch
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn distinguished(&self) -> SlotSet {
        self.distinguished
    }

    /// Raw form → adapted form.
    pub fn to_adapted(&self, raw: &IForm) -> Result<IForm> {
        self.check_arity(raw)?;
        self.substitute(raw)
    }

    /// Adapted form → raw form.
    pub fn to_raw(&self, adapted: &IForm) -> Result<IForm> {
        self.check_arity(adapted)?;
        map_generators(adapted, |g| {
            if g.is_contact() {
                self.theta
                    .get(&g)
                    .cloned()
                    .ok_or_else(|| Error::invalid(format!("unknown adapted generator {g:?}")))
            } else {
                Ok(IForm::generator(self.arity, g))
            }
        })
    }

    /// `d_m` on adapted forms.
    pub fn differential(&self, m: usize, adapted: &IForm) -> Result<IForm> {
        self.check_arity(adapted)?;
        if m == 0 || m > self.arity {
            return Err(Error::SlotOutOfRange { slot: m, arity: self.arity });
        }
        crate::calculus::apply(&self.diffs[m - 1], adapted)
    }

    /// The tabulated `d_m` in the adapted alphabet.
    pub fn differential_table(&self, m: usize) -> &TableDerivation {
        &self.diffs[m - 1]
    }

    /// Adapted generators `θ^L_j` of this adapter.
    pub fn contact_generators(&self) -> Vec<Generator> {
        let mut v: Vec<Generator> = self.theta.keys().copied().collect();
        v.sort();
        v
    }

    /// Raw expression of an adapted generator.
    pub fn theta(&self, g: Generator) -> Option<&IForm> {
        self.theta.get(&g)
    }

    fn check_arity(&self, a: &IForm) -> Result<()> {
        if a.arity() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, found: a.arity() });
        }
        Ok(())
    }
}

/// A form in the adapted alphabet for the slot set `{k}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdaptedForm {
    pub form: IForm,
}

impl AdaptedForm {
    /// Cartan count of every monomial.
    pub fn counts(&self) -> Vec<(Monomial, usize)> {
        self.form.terms().map(|(m, _)| (m.clone(), m.contact_count())).collect()
    }

    /// Minimum count, `None` for zero.
    pub fn cartan_count(&self) -> Option<usize> {
        self.form.contact_count_min()
    }
}

/// Rewrites a raw form in the adapted basis for the slot set `{k}`.
pub fn adapted_rewrite(patch: &Patch, a: &IForm) -> Result<AdaptedForm> {
    let ad = Adapter::new(patch, a.arity(), SlotSet::single(a.arity()))?;
    Ok(AdaptedForm { form: ad.to_adapted(a)? })
}

/// The largest `p` with `a ∈ (C_K Λ_k)^p`; `None` stands for `∞` (`a = 0`).
pub fn cartan_degree(patch: &Patch, a: &IForm, slots: SlotSet) -> Result<Option<usize>> {
    let ad = Adapter::new(patch, a.arity(), slots)?;
    Ok(ad.to_adapted(a)?.contact_count_min())
}

/// Canonical representative of `a` in `Λ_k / C Λ_k`.
pub fn horizontal_projection(patch: &Patch, a: &IForm) -> Result<IForm> {
    let ad = Adapter::new(patch, a.arity(), SlotSet::single(a.arity()))?;
    Ok(ad.to_adapted(a)?.filter_monomials(|m| m.contact_count() == 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{kappa, Permutation};

    fn gen(k: usize, slots: &[usize], v: u32) -> IForm {
        IForm::generator(k, Generator::raw(SlotSet::from_slots(slots), Var(v)))
    }

    fn u(i: u32) -> Poly {
        Poly::var(Var(i + 1))
    }

    #[test]
    fn jet_patch_layout() {
        let p = Patch::jet(2);
        assert_eq!(p.names(), ["x", "u0", "u1", "u2"]);
        assert_eq!(p.contacts().len(), 2);
        assert_eq!(p.role(Var(3)), Role::Frontier);
        assert!(Patch::jet(0).contact(0).unwrap_err().is_truncation());
        assert!(p.contact(2).unwrap_err().is_truncation());
    }

    #[test]
    fn cartan_generators_of_jet_patch() {
        let p = Patch::jet(3);
        let w0 = cartan_generator(&p, 1, SlotSet::EMPTY, 0).unwrap();
        assert_eq!(w0, gen(1, &[1], 1).sub(&gen(1, &[1], 0).mul_poly(&u(1))).unwrap());
        let g2 = cartan_generator(&p, 2, SlotSet::EMPTY, 0).unwrap();
        assert_eq!(g2, gen(2, &[2], 1).sub(&gen(2, &[2], 0).mul_poly(&u(1))).unwrap());
        let g12 = cartan_generator(&p, 2, SlotSet::single(1), 0).unwrap();
        assert_eq!(g12, differential(1, &g2).unwrap());
        assert!(cartan_generator(&p, 2, SlotSet::single(2), 0).is_err());
    }

    #[test]
    fn adapted_rewrite_examples() {
        let p = Patch::jet(2);
        let a = adapted_rewrite(&p, &gen(1, &[1], 1)).unwrap();
        let w0 = IForm::generator(1, Generator::contact(SlotSet::single(1), Var(1)));
        assert_eq!(a.form, w0.add(&gen(1, &[1], 0).mul_poly(&u(1))).unwrap());
        assert_eq!(a.form.render(&p), "w0 + u1 * d[1](x)");
        let dx = adapted_rewrite(&p, &gen(2, &[2], 0)).unwrap();
        assert_eq!(dx.cartan_count(), Some(0));
        assert_eq!(horizontal_projection(&p, &gen(2, &[2], 1)).unwrap(), gen(2, &[2], 0).mul_poly(&u(1)));
        assert_eq!(horizontal_projection(&p, &gen(2, &[2], 0)).unwrap(), gen(2, &[2], 0));
    }

    #[test]
    fn theta_products_have_count_two() {
        let p = Patch::jet(3);
        let ad = Adapter::new(&p, 1, SlotSet::single(1)).unwrap();
        let t0 = IForm::generator(1, Generator::contact(SlotSet::single(1), Var(1)));
        let t1 = IForm::generator(1, Generator::contact(SlotSet::single(1), Var(2)));
        let prod = t0.wedge(&t1).unwrap();
        let raw = ad.to_raw(&prod).unwrap();
        assert_eq!(ad.to_adapted(&raw).unwrap(), prod);
        assert_eq!(cartan_degree(&p, &raw, SlotSet::single(1)).unwrap(), Some(2));
        assert_eq!(cartan_degree(&p, &IForm::zero(1), SlotSet::single(1)).unwrap(), None);
    }

    fn sample_forms(k: usize) -> Vec<IForm> {
        let mut out = Vec::new();
        let x = Poly::var(Var(0));
        for s in SlotSet::upto(k).subsets().into_iter().filter(|s| !s.is_empty()) {
            for v in 0..3u32 {
                let g = IForm::generator(k, Generator::raw(s, Var(v)));
                out.push(g.mul_poly(&(&x * &u(0))));
                out.push(g.wedge(&gen(k, &[1], 1)).unwrap());
            }
        }
        out
    }

    #[test]
    fn round_trip_and_adapted_differentials() {
        let p = Patch::jet(7);
        for k in 1..=3 {
            for dist in [SlotSet::single(k), SlotSet::upto(k)] {
                let ad = Adapter::new(&p, k, dist).unwrap();
                for a in sample_forms(k) {
                    let b = ad.to_adapted(&a).unwrap();
                    assert_eq!(ad.to_raw(&b).unwrap(), a);
                    for m in 1..=k {
                        let db = ad.differential(m, &b).unwrap();
                        assert_eq!(ad.to_raw(&db).unwrap(), differential(m, &a).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn cartan_ideal_is_stable() {
        let p = Patch::jet(3);
        for k in 1..=3 {
            for slots in SlotSet::upto(k - 1).subsets() {
                for i in 0..2 {
                    let g = cartan_generator(&p, k, slots, i).unwrap();
                    assert!(cartan_degree(&p, &g, SlotSet::single(k)).unwrap().unwrap() >= 1);
                    for m in 1..=k {
                        let dg = differential(m, &g).unwrap();
                        let deg = cartan_degree(&p, &dg, SlotSet::single(k)).unwrap();
                        assert!(deg.is_none_or(|d| d >= 1), "k={k} K={slots} i={i} m={m}");
                    }
                }
            }
        }
    }

    #[test]
    fn slot_set_ideals_contain_their_generators() {
        let p = Patch::jet(3);
        let k = 3;
        let dist = SlotSet::from_slots(&[1, 3]);
        let ad = Adapter::new(&p, k, dist).unwrap();
        for m in dist.slots() {
            let others = SlotSet::upto(k).without(m);
            for j in others.subsets() {
                for i in 0..2 {
                    let g = differential_multi(j, &p.contact(i).unwrap().in_slot(k, m)).unwrap();
                    let c = ad.to_adapted(&g).unwrap().contact_count_min();
                    assert!(c.is_none_or(|c| c >= 1), "m={m} J={j} i={i}");
                }
            }
        }
    }

    #[test]
    fn kappa_conjugates_cartan_degree() {
        let p = Patch::jet(3);
        let k = 3;
        for m in 1..k {
            let s = Permutation::transposition(k, m, k).unwrap();
            for a in sample_forms(k) {
                let lhs = cartan_degree(&p, &kappa(&s, &a).unwrap(), SlotSet::single(m)).unwrap();
                assert_eq!(lhs, cartan_degree(&p, &a, SlotSet::single(k)).unwrap());
            }
        }
    }

    #[test]
    fn plain_patch_degenerates() {
        let p = Patch::plain(["x", "y"]).unwrap();
        let a = gen(2, &[2], 0).mul_poly(&Poly::var(Var(1)));
        assert_eq!(cartan_degree(&p, &a, SlotSet::single(2)).unwrap(), Some(0));
        assert_eq!(horizontal_projection(&p, &a).unwrap(), a);
    }

    #[test]
    fn frontier_raises_truncation() {
        let p = Patch::jet(1);
        let err = adapted_rewrite(&p, &gen(1, &[1], 2)).unwrap_err();
        assert!(err.is_truncation());
    }

    #[test]
    fn explicit_patch_from_forms() {
        // w = d1(u) - p d1(x) on (x, u, p)
        let f = gen(1, &[1], 1).sub(&gen(1, &[1], 0).mul_poly(&Poly::var(Var(2)))).unwrap();
        let p = Patch::explicit(
            vec!["x".into(), "u".into(), "p".into()],
            vec![("w".into(), f.clone())],
            None,
        )
        .unwrap();
        assert_eq!(p.role(Var(1)), Role::Leading(0));
        assert_eq!(cartan_degree(&p, &f, SlotSet::single(1)).unwrap(), Some(1));
        assert!(p.check_grading().is_err());
    }

    #[test]
    fn coefficient_enumeration() {
        let p = Patch::jet(3);
        // weight 1, one u-factor, x-degree ≤ 1: u1, x u2
        let m = p.coefficient_monomials(&[1, 1], 1);
        assert_eq!(m.len(), 2);
        let plain = Patch::plain(["x", "y"]).unwrap();
        assert_eq!(plain.coefficient_monomials(&[2], 0).len(), 3);
    }
}
