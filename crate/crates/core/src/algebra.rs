//! The free multi-graded commutative algebra of iterated differential forms.
//!
//! A form of arity `k` is a finite sum of polynomial coefficients times wedge
//! monomials in generators `d_K c`, where `c` is a coordinate and `K` a
//! non-empty subset of `{1, …, k}`. A generator has multi-degree the indicator
//! vector of `K`; Koszul signs use the total degree `|K|`, so every `d_m` is an
//! odd operator and `d_m d_n = -d_n d_m`.
//!
//! Inside `d_K` the differentials are applied in increasing slot order, the
//! smallest slot innermost: `d_{1,2} c = d_2(d_1 c)`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::poly::{render_scaled, Poly, Var, Q};

/// Largest supported arity.
pub const MAX_ARITY: usize = 8;

/// A subset of `{1, …, 8}`, stored as a bit mask (bit `i-1` for slot `i`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SlotSet(u8);

impl SlotSet {
    pub const EMPTY: SlotSet = SlotSet(0);

    pub fn from_bits(bits: u8) -> Self {
        SlotSet(bits)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn single(slot: usize) -> Self {
        debug_assert!((1..=MAX_ARITY).contains(&slot));
        SlotSet(1 << (slot - 1))
    }

    pub fn from_slots(slots: &[usize]) -> Self {
        slots.iter().fold(SlotSet::EMPTY, |s, &i| s.with(i))
    }

    /// `{1, …, n}`.
    pub fn upto(n: usize) -> Self {
        SlotSet(((1u16 << n) - 1) as u8)
    }

    pub fn contains(self, slot: usize) -> bool {
        (1..=MAX_ARITY).contains(&slot) && self.0 & (1 << (slot - 1)) != 0
    }

    pub fn with(self, slot: usize) -> Self {
        SlotSet(self.0 | (1 << (slot - 1)))
    }

    pub fn without(self, slot: usize) -> Self {
        SlotSet(self.0 & !(1 << (slot - 1)))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: SlotSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: SlotSet) -> Self {
        SlotSet(self.0 | other.0)
    }

    pub fn intersection(self, other: SlotSet) -> Self {
        SlotSet(self.0 & other.0)
    }

    pub fn difference(self, other: SlotSet) -> Self {
        SlotSet(self.0 & !other.0)
    }

    pub fn max(self) -> Option<usize> {
        (self.0 != 0).then(|| 8 - self.0.leading_zeros() as usize)
    }

    /// Slots in increasing order.
    pub fn slots(self) -> impl DoubleEndedIterator<Item = usize> {
        (1..=MAX_ARITY).filter(move |&i| self.contains(i))
    }

    /// All subsets of `self`, in increasing bit order.
    pub fn subsets(self) -> Vec<SlotSet> {
        let mut out = Vec::new();
        let mut sub: u8 = 0;
        loop {
            out.push(SlotSet(sub));
            if sub == self.0 {
                break;
            }
            sub = (sub.wrapping_sub(self.0)) & self.0;
        }
        out.sort_by_key(|s| s.0);
        out
    }

    pub fn parity(self) -> usize {
        self.len() % 2
    }
}

impl Ord for SlotSet {
    /// Lexicographic on increasing slot lists: `{1} < {1,2} < {1,3} < {2}`.
    fn cmp(&self, other: &Self) -> Ordering {
        self.slots().cmp(other.slots())
    }
}

impl PartialOrd for SlotSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for SlotSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, s) in self.slots().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for SlotSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.slots().map(|s| s.to_string()).collect();
        write!(f, "{}", v.join(","))
    }
}

/// Adapted contact generators (see `diffiety`) sort before raw generators `d_K c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GenKind {
    Contact,
    Raw,
}

/// A generator factor `d_K c` (or an adapted contact generator `θ^K_c`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Generator {
    pub kind: GenKind,
    pub slots: SlotSet,
    pub var: Var,
}

impl Generator {
    pub fn raw(slots: SlotSet, var: Var) -> Self {
        Generator { kind: GenKind::Raw, slots, var }
    }

    pub fn contact(slots: SlotSet, var: Var) -> Self {
        Generator { kind: GenKind::Contact, slots, var }
    }

    pub fn degree(&self) -> usize {
        self.slots.len()
    }

    pub fn is_odd(&self) -> bool {
        self.slots.len() % 2 == 1
    }

    pub fn is_contact(&self) -> bool {
        self.kind == GenKind::Contact
    }
}

/// Result of writing an iterated differential in canonical form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Canonical {
    /// `sign * factor`
    Factor(i8, Generator),
    /// A slot was repeated, so the form is zero (`d_m ∘ d_m = 0`).
    Annihilated,
}

/// Canonicalizes `d_{s_1} d_{s_2} ⋯ d_{s_r} c`, the sequence written outermost
/// first. The canonical order has the largest slot outermost, so the sign is
/// the parity of the permutation sorting the sequence into decreasing order.
pub fn canonicalize_generator(var: Var, sequence: &[usize], arity: usize) -> Result<Canonical> {
    if sequence.is_empty() {
        return Err(Error::invalid("empty application sequence"));
    }
    for &s in sequence {
        if s == 0 || s > arity {
            return Err(Error::SlotOutOfRange { slot: s, arity });
        }
    }
    let mut inversions = 0usize;
    for i in 0..sequence.len() {
        for j in i + 1..sequence.len() {
            match sequence[i].cmp(&sequence[j]) {
                Ordering::Equal => return Ok(Canonical::Annihilated),
                Ordering::Less => inversions += 1,
                Ordering::Greater => {}
            }
        }
    }
    let sign = if inversions.is_multiple_of(2) { 1 } else { -1 };
    Ok(Canonical::Factor(sign, Generator::raw(SlotSet::from_slots(sequence), var)))
}

/// Sign of `d_m (d_K c) = sign * d_{K ∪ {m}} c`, or `None` when `m ∈ K`.
pub fn outer_differential_sign(m: usize, slots: SlotSet) -> Option<i8> {
    if slots.contains(m) {
        return None;
    }
    let above = slots.slots().filter(|&s| s > m).count();
    Some(if above % 2 == 0 { 1 } else { -1 })
}

/// A componentwise multi-degree in `Z^k_{≥0}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiDegree(pub Vec<u32>);

impl MultiDegree {
    pub fn zero(k: usize) -> Self {
        MultiDegree(vec![0; k])
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &MultiDegree) -> MultiDegree {
        MultiDegree(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn add_slots(&mut self, slots: SlotSet) {
        for s in slots.slots() {
            self.0[s - 1] += 1;
        }
    }
}

impl fmt::Display for MultiDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", v.join(","))
    }
}

/// A canonical wedge monomial: factors sorted by the generator order, odd
/// factors never repeated.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<Generator>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn single(g: Generator) -> Self {
        Monomial(vec![g])
    }

    pub fn factors(&self) -> &[Generator] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(Generator::degree).sum()
    }

    pub fn multidegree(&self, k: usize) -> MultiDegree {
        let mut d = MultiDegree::zero(k);
        for g in &self.0 {
            d.add_slots(g.slots);
        }
        d
    }

    pub fn contact_count(&self) -> usize {
        self.0.iter().filter(|g| g.is_contact()).count()
    }

    /// Sorts an arbitrary factor sequence, tracking the Koszul sign.
    /// Returns `None` if an odd factor repeats.
    pub fn from_factors(mut factors: Vec<Generator>) -> Option<(i8, Monomial)> {
        let mut sign = 1i8;
        for i in 1..factors.len() {
            let mut j = i;
            while j > 0 && factors[j - 1] > factors[j] {
                if factors[j - 1].is_odd() && factors[j].is_odd() {
                    sign = -sign;
                }
                factors.swap(j - 1, j);
                j -= 1;
            }
        }
        for w in factors.windows(2) {
            if w[0] == w[1] && w[0].is_odd() {
                return None;
            }
        }
        Some((sign, Monomial(factors)))
    }

    /// `self ∧ other` as (sign, monomial), or `None` if it vanishes.
    pub fn wedge(&self, other: &Monomial) -> Option<(i8, Monomial)> {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let mut odd_left_remaining = a.iter().filter(|g| g.is_odd()).count();
        let mut sign = 1i8;
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let take_left = j >= b.len() || (i < a.len() && a[i] <= b[j]);
            if take_left {
                if a[i].is_odd() {
                    odd_left_remaining -= 1;
                }
                out.push(a[i]);
                i += 1;
            } else {
                if b[j].is_odd() && odd_left_remaining % 2 == 1 {
                    sign = -sign;
                }
                out.push(b[j]);
                j += 1;
            }
        }
        for w in out.windows(2) {
            if w[0] == w[1] && w[0].is_odd() {
                return None;
            }
        }
        Some((sign, Monomial(out)))
    }

    /// Splits off the factor at `index`: returns (sign, rest) with
    /// `self = sign * factor ∧ rest`.
    pub fn extract(&self, index: usize) -> (i8, Monomial) {
        let g = self.0[index];
        let before: usize = self.0[..index].iter().map(Generator::degree).sum();
        let sign = if g.is_odd() && before % 2 == 1 { -1 } else { 1 };
        let mut rest = self.0.clone();
        rest.remove(index);
        (sign, Monomial(rest))
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.0.iter().map(|g| g.var)
    }
}

/// Naming of coordinates and adapted generators for rendering.
pub trait Names {
    fn var_name(&self, v: Var) -> String;
    fn contact_name(&self, slots: SlotSet, v: Var) -> String {
        format!("c[{}]({})", slots, self.var_name(v))
    }
}

/// Generic names `c0, c1, …`.
pub struct IndexNames;

impl Names for IndexNames {
    fn var_name(&self, v: Var) -> String {
        format!("c{}", v.0)
    }
}

/// An iterated differential form of arity `k`: a finite sum of polynomial
/// coefficients times canonical monomials, with no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IForm {
    arity: usize,
    terms: BTreeMap<Monomial, Poly>,
}

impl IForm {
    pub fn zero(arity: usize) -> Self {
        IForm { arity, terms: BTreeMap::new() }
    }

    pub fn function(arity: usize, f: Poly) -> Self {
        IForm::term(arity, f, Monomial::one())
    }

    pub fn constant(arity: usize, c: Q) -> Self {
        IForm::function(arity, Poly::constant(c))
    }

    pub fn coordinate(arity: usize, v: Var) -> Self {
        IForm::function(arity, Poly::var(v))
    }

    pub fn generator(arity: usize, g: Generator) -> Self {
        IForm::term(arity, Poly::one(), Monomial::single(g))
    }

    pub fn term(arity: usize, coef: Poly, m: Monomial) -> Self {
        let mut f = IForm::zero(arity);
        f.add_term(m, &coef);
        f
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Poly)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> Option<&Poly> {
        self.terms.get(m)
    }

    pub fn add_term(&mut self, m: Monomial, coef: &Poly) {
        if coef.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(coef.clone());
            }
            Entry::Occupied(mut e) => {
                e.get_mut().add_assign(coef);
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_scaled_term(&mut self, m: Monomial, coef: &Poly, sign: i8) {
        if sign >= 0 {
            self.add_term(m, coef);
        } else {
            self.add_term(m, &-coef);
        }
    }

    fn check_arity(&self, other: &IForm) -> Result<()> {
        if self.arity != other.arity {
            return Err(Error::ArityMismatch { expected: self.arity, found: other.arity });
        }
        Ok(())
    }

    pub fn add(&self, other: &IForm) -> Result<IForm> {
        self.check_arity(other)?;
        let mut out = self.clone();
        out.add_assign(other);
        Ok(out)
    }

    pub fn sub(&self, other: &IForm) -> Result<IForm> {
        self.check_arity(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), &-c);
        }
        Ok(out)
    }

    /// In-place sum; arities are assumed equal.
    pub fn add_assign(&mut self, other: &IForm) {
        debug_assert_eq!(self.arity, other.arity);
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c);
        }
    }

    pub fn neg(&self) -> IForm {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> IForm {
        let mut out = IForm::zero(self.arity);
        for (m, p) in &self.terms {
            out.add_term(m.clone(), &p.scale(c));
        }
        out
    }

    /// Multiplication by a function.
    pub fn mul_poly(&self, f: &Poly) -> IForm {
        let mut out = IForm::zero(self.arity);
        for (m, p) in &self.terms {
            out.add_term(m.clone(), &(p * f));
        }
        out
    }

    pub fn wedge(&self, other: &IForm) -> Result<IForm> {
        self.check_arity(other)?;
        let mut out = IForm::zero(self.arity);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if let Some((s, m)) = ma.wedge(mb) {
                    out.add_scaled_term(m, &(ca * cb), s);
                }
            }
        }
        Ok(out)
    }

    /// The degree-zero part, as a polynomial.
    pub fn function_part(&self) -> Poly {
        self.terms.get(&Monomial::one()).cloned().unwrap_or_default()
    }

    /// The multi-degree if `self` is homogeneous and non-zero.
    pub fn multidegree(&self) -> Option<MultiDegree> {
        let mut it = self.terms.keys().map(|m| m.multidegree(self.arity));
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    /// Total degree if homogeneous in total degree.
    pub fn total_degree(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(Monomial::degree);
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    /// Decomposition into multi-homogeneous components; empty iff zero.
    pub fn homogeneous_components(&self) -> Vec<(MultiDegree, IForm)> {
        let mut parts: BTreeMap<MultiDegree, IForm> = BTreeMap::new();
        for (m, c) in &self.terms {
            parts
                .entry(m.multidegree(self.arity))
                .or_insert_with(|| IForm::zero(self.arity))
                .add_term(m.clone(), c);
        }
        parts.into_iter().collect()
    }

    /// Keeps the terms whose monomial satisfies `keep`.
    pub fn filter_monomials(&self, keep: impl Fn(&Monomial) -> bool) -> IForm {
        IForm {
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Re-embeds the form in a higher arity (`Λ_k ⊂ Λ_m` for `k ≤ m`).
    pub fn with_arity(&self, arity: usize) -> Result<IForm> {
        let max_slot = self
            .terms
            .keys()
            .flat_map(|m| m.factors().iter().filter_map(|g| g.slots.max()))
            .max()
            .unwrap_or(0);
        if max_slot > arity {
            return Err(Error::ArityMismatch { expected: arity, found: self.arity });
        }
        Ok(IForm { arity, terms: self.terms.clone() })
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self
            .terms
            .iter()
            .flat_map(|(m, c)| m.vars().chain(c.vars()).collect::<Vec<_>>())
            .collect();
        vs.sort();
        vs.dedup();
        vs
    }

    /// Minimum number of contact factors over all monomials; `None` for zero.
    pub fn contact_count_min(&self) -> Option<usize> {
        self.terms.keys().map(Monomial::contact_count).min()
    }

    pub fn render(&self, names: &dyn Names) -> String {
        let vn = |v: Var| names.var_name(v);
        let mut pieces: Vec<(bool, String)> = Vec::new();
        for (m, c) in &self.terms {
            let factors: Vec<String> = m
                .factors()
                .iter()
                .map(|g| match g.kind {
                    GenKind::Raw => format!("d[{}]({})", g.slots, names.var_name(g.var)),
                    GenKind::Contact => names.contact_name(g.slots, g.var),
                })
                .collect();
            let body = factors.join(" ^ ");
            if body.is_empty() {
                for (pm, a) in c.terms().collect::<Vec<_>>().into_iter().rev() {
                    pieces.push((a.is_negative(), render_scaled(&a.abs(), &pm.render(&vn))));
                }
            } else if c.len() == 1 {
                let (pm, a) = c.terms().next().unwrap();
                let mono = pm.render(&vn);
                let head = if mono.is_empty() {
                    if a.abs().is_one() {
                        body
                    } else {
                        format!("{} * {body}", render_scaled(&a.abs(), ""))
                    }
                } else {
                    format!("{} * {body}", render_scaled(&a.abs(), &mono))
                };
                pieces.push((a.is_negative(), head));
            } else {
                pieces.push((false, format!("({}) * {body}", c.render(&vn))));
            }
        }
        if pieces.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (neg, p)) in pieces.into_iter().enumerate() {
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            s.push_str(&p);
        }
        s
    }
}

impl fmt::Display for IForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&IndexNames))
    }
}

/// Equality of forms as vanishing of the difference.
pub fn equals_zero(a: &IForm) -> bool {
    a.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::q;

    const X: Var = Var(0);
    const U: Var = Var(1);

    fn d(slots: &[usize], v: Var) -> IForm {
        IForm::generator(3, Generator::raw(SlotSet::from_slots(slots), v))
    }

    /// Brute-force sign: count inversions against decreasing order.
    fn inversion_sign(seq: &[usize]) -> i8 {
        let mut s = 1;
        for i in 0..seq.len() {
            for j in i + 1..seq.len() {
                if seq[i] < seq[j] {
                    s = -s;
                }
            }
        }
        s
    }

    fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
        if items.len() <= 1 {
            return vec![items.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.to_vec();
            let x = rest.remove(i);
            for mut p in permutations(&rest) {
                p.insert(0, x);
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn canonical_examples() {
        let g12 = Generator::raw(SlotSet::from_slots(&[1, 2]), X);
        assert_eq!(
            canonicalize_generator(X, &[1], 2).unwrap(),
            Canonical::Factor(1, Generator::raw(SlotSet::single(1), X))
        );
        assert_eq!(canonicalize_generator(X, &[2, 1], 2).unwrap(), Canonical::Factor(1, g12));
        assert_eq!(canonicalize_generator(X, &[1, 2], 2).unwrap(), Canonical::Factor(-1, g12));
        assert_eq!(canonicalize_generator(X, &[1, 1], 2).unwrap(), Canonical::Annihilated);
        assert!(canonicalize_generator(X, &[3], 2).is_err());
    }

    #[test]
    fn canonical_sign_is_permutation_parity() {
        for n in 1..=3 {
            let slots: Vec<usize> = (1..=n).collect();
            for p in permutations(&slots) {
                let Canonical::Factor(s, g) = canonicalize_generator(U, &p, 3).unwrap() else {
                    panic!()
                };
                assert_eq!(s, inversion_sign(&p), "{p:?}");
                assert_eq!(g.slots, SlotSet::from_slots(&slots));
            }
        }
    }

    #[test]
    fn outer_sign_matches_canonicalization() {
        for bits in 1u8..8 {
            let k = SlotSet::from_bits(bits);
            for m in 1..=3 {
                let mut seq = vec![m];
                seq.extend(k.slots().collect::<Vec<_>>().into_iter().rev());
                let expected = match canonicalize_generator(X, &seq, 3).unwrap() {
                    Canonical::Factor(s, _) => Some(s),
                    Canonical::Annihilated => None,
                };
                assert_eq!(outer_differential_sign(m, k), expected);
            }
        }
    }

    #[test]
    fn slot_set_order_is_lexicographic() {
        let s = |v: &[usize]| SlotSet::from_slots(v);
        let mut sets = vec![s(&[3]), s(&[1, 3]), s(&[2]), s(&[1]), s(&[1, 2, 3]), s(&[1, 2]), s(&[2, 3])];
        sets.sort();
        assert_eq!(
            sets,
            vec![s(&[1]), s(&[1, 2]), s(&[1, 2, 3]), s(&[1, 3]), s(&[2]), s(&[2, 3]), s(&[3])]
        );
        assert_eq!(s(&[1, 3]).subsets().len(), 4);
        assert_eq!(s(&[2, 3]).max(), Some(3));
    }

    #[test]
    fn wedge_examples() {
        let a = d(&[1], X);
        assert!(a.wedge(&a).unwrap().is_zero());
        let b = d(&[1, 2], X);
        let bb = b.wedge(&b).unwrap();
        assert!(!bb.is_zero());
        assert_eq!(bb.multidegree().unwrap().0, vec![2, 2, 0]);
        let c = d(&[2], U);
        let ac = a.wedge(&c).unwrap();
        let ca = c.wedge(&a).unwrap();
        assert!(ac.add(&ca).unwrap().is_zero());
    }

    #[test]
    fn zero_examples() {
        let a = d(&[1], X);
        let s = a.add(&a).unwrap().sub(&a.scale(&q(2))).unwrap();
        assert!(equals_zero(&s));
        assert!(!equals_zero(&d(&[1, 2], X)));
    }

    #[test]
    fn components() {
        assert!(IForm::zero(2).homogeneous_components().is_empty());
        let f2 = |s: &[usize], v| IForm::generator(2, Generator::raw(SlotSet::from_slots(s), v));
        let a = f2(&[1], X).mul_poly(&Poly::var(X)).add(&f2(&[2], U)).unwrap();
        let comps = a.homogeneous_components();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].0 .0, vec![0, 1]);
        assert_eq!(comps[1].0 .0, vec![1, 0]);
        assert_eq!(comps[1].1, f2(&[1], X).mul_poly(&Poly::var(X)));
        let b = f2(&[1], X).add(&f2(&[1, 2], X)).unwrap().wedge(&f2(&[2], U)).unwrap();
        let degs: Vec<Vec<u32>> = b.homogeneous_components().into_iter().map(|c| c.0 .0).collect();
        assert_eq!(degs, vec![vec![1, 1], vec![1, 2]]);
    }

    #[test]
    fn extract_restores_monomial() {
        let gens = vec![
            Generator::raw(SlotSet::from_slots(&[1]), X),
            Generator::raw(SlotSet::from_slots(&[1, 2]), U),
            Generator::raw(SlotSet::from_slots(&[2]), U),
        ];
        let (_, m) = Monomial::from_factors(gens).unwrap();
        for i in 0..3 {
            let (s, rest) = m.extract(i);
            let (s2, back) = Monomial::single(m.factors()[i]).wedge(&rest).unwrap();
            assert_eq!(back, m);
            assert_eq!(s * s2, 1);
        }
    }
}
