//! Finite slices of the Cartan-filtered complex `(Λ_k, d_k)` and its first
//! term `E_1`.
//!
//! In the adapted alphabet for `{k}` the quotient `C^p / C^{p+1}` has the
//! monomials with exactly `p` θ-factors as a basis, and `d_{k,0}` is `d_k`
//! followed by dropping the terms with more θ-factors. A slice fixes the
//! multi-degree, the Cartan degree `p` and the grading of the patch; on jet
//! patches the `x`-degree of coefficients is capped as well, and a slice is
//! reported stable when raising that cap by one leaves its dimension unchanged.
//!
//! `E_1` classes are stored as explicit representatives in `C^p / C^{p+1}`;
//! equality and vanishing are decided slice by slice.

use std::cmp::Reverse;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::algebra::{Generator, IForm, Monomial, SlotSet};
use crate::calculus::{
    apply, kappa, Commutator, ContactInsertion, Derivation, FunctionDerivation, Insertion,
    LieDerivative, Permutation, TableDerivation,
};
use crate::diffiety::{cartan_generator, Adapter, Grading, Patch, Role};
use crate::error::{Error, Result};
use crate::linalg::{cohomology, Cohomology, Echelon, RationalMatrix, SparseVec};
use crate::poly::{PMono, Poly, Var, Q};

/// A homogeneous piece of `E_0^{p,q}`: multi-degree `(p_1, …, p_{k-1}, p+q)`,
/// Cartan degree `p`, grading and coefficient cap.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SliceSpec {
    pub k: usize,
    pub p: usize,
    pub degrees: Vec<u32>,
    pub q: u32,
    pub grade: Vec<i64>,
    pub cap: u32,
}

impl SliceSpec {
    pub fn new(k: usize, p: usize, degrees: Vec<u32>, q: u32, grade: Vec<i64>, cap: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("arity must be at least 1"));
        }
        if degrees.len() != k - 1 {
            return Err(Error::invalid(format!(
                "expected {} slot degrees, got {}",
                k - 1,
                degrees.len()
            )));
        }
        Ok(SliceSpec { k, p, degrees, q, grade, cap })
    }

    pub fn multidegree(&self) -> Vec<u32> {
        let mut d = self.degrees.clone();
        d.push(self.p as u32 + self.q);
        d
    }

    pub fn at_q(&self, q: u32) -> SliceSpec {
        SliceSpec { q, ..self.clone() }
    }

    pub fn with_cap(&self, cap: u32) -> SliceSpec {
        SliceSpec { cap, ..self.clone() }
    }
}

fn tuple<T: fmt::Display>(v: &[T]) -> String {
    let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(","))
}

impl fmt::Display for SliceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "k={} p={} degrees={} q={} grade={} cap={}",
            self.k,
            self.p,
            tuple(&self.degrees),
            self.q,
            tuple(&self.grade),
            self.cap
        )
    }
}

/// Basis of one homogeneous piece, ordered so that elimination pivots on
/// the highest θ-factors first.
#[derive(Debug, Clone, Default)]
pub struct Piece {
    pub basis: Vec<(Monomial, PMono)>,
    index: HashMap<(Monomial, PMono), usize>,
    /// Highest jet order among the coordinates used (0 off jet patches).
    pub max_order: usize,
}

impl Piece {
    fn new(mut basis: Vec<(Monomial, PMono)>, jet: bool) -> Piece {
        basis.sort_by_key(|(m, pm)| {
            let mut tv: Vec<Var> =
                m.factors().iter().filter(|g| g.is_contact()).map(|g| g.var).collect();
            tv.sort_by(|a, b| b.cmp(a));
            (Reverse(tv), m.clone(), pm.clone())
        });
        basis.dedup();
        let index = basis.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
        let max_order = if jet {
            basis
                .iter()
                .flat_map(|(m, pm)| {
                    m.vars().chain(pm.powers().iter().map(|&(v, _)| v)).collect::<Vec<_>>()
                })
                .map(|v| (v.0 as usize).saturating_sub(1))
                .max()
                .unwrap_or(0)
        } else {
            0
        };
        Piece { basis, index, max_order }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn element(&self, k: usize, i: usize) -> IForm {
        let (m, pm) = &self.basis[i];
        IForm::term(k, Poly::monomial(Q::from_integer(1.into()), pm.clone()), m.clone())
    }

    /// Coordinates of `f` in this piece; every term must belong to it.
    pub fn vector(&self, f: &IForm) -> Result<SparseVec> {
        let mut v = SparseVec::new();
        for (m, c) in f.terms() {
            for (pm, a) in c.terms() {
                let key = (m.clone(), pm.clone());
                let i = self
                    .index
                    .get(&key)
                    .ok_or_else(|| Error::invalid("term outside the slice basis"))?;
                v.insert(*i, a.clone());
            }
        }
        Ok(v)
    }

    pub fn form(&self, k: usize, v: &SparseVec) -> IForm {
        let mut f = IForm::zero(k);
        for (&i, a) in v {
            f.add_assign(&self.element(k, i).scale(a));
        }
        f
    }
}

/// The slice at `q` with its neighbours and the matrices of `d_{k,0}`.
#[derive(Debug, Clone)]
pub struct SliceComplex {
    pub spec: SliceSpec,
    pub prev: Piece,
    pub cur: Piece,
    pub next: Piece,
    pub d_in: RationalMatrix,
    pub d_out: RationalMatrix,
    adapter: Arc<Adapter>,
}

impl SliceComplex {
    pub fn adapter(&self) -> &Adapter {
        &self.adapter
    }

    pub fn cohomology(&self) -> Result<Cohomology> {
        cohomology(&self.d_in, &self.d_out)
    }
}

/// Dimension and representatives of an `E_1` slice.
#[derive(Debug, Clone)]
pub struct E1Slice {
    pub spec: SliceSpec,
    pub dimension: usize,
    pub representatives: Vec<IForm>,
    pub basis_size: usize,
    /// Dimension at `cap + 1`.
    pub next_cap_dimension: usize,
}

impl E1Slice {
    pub fn stable(&self) -> bool {
        self.dimension == self.next_cap_dimension
    }
}

/// `E_0` slice data together with the tensor-model dimension.
#[derive(Debug, Clone)]
pub struct E0Slice {
    pub spec: SliceSpec,
    pub basis: Vec<IForm>,
    pub d: RationalMatrix,
    pub subquotient_dim: usize,
    pub tensor_dim: usize,
}

/// An `E_1` class: a representative in `C^p / C^{p+1}` written in the adapted
/// alphabet, with every monomial carrying exactly `p` θ-factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct E1Class {
    pub k: usize,
    pub p: usize,
    pub rep: IForm,
}

/// A contact derivation of `Λ_{k-1}` with its triviality flag.
#[derive(Debug, Clone)]
pub struct SymmetryClass {
    pub x: Arc<TableDerivation>,
    pub trivial: bool,
    /// Number of Cartan generators on which the contact test ran.
    pub checked: usize,
}

#[derive(Debug, Clone)]
pub enum Classification {
    Contact(SymmetryClass),
    /// `L_X` of `witness` leaves the Cartan ideal.
    Rejected { witness: IForm, image: IForm },
}

/// Which factor of `d_k ω = Σ ω_α ∧ σ_α` keeps the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decomposition {
    CoefficientsLeft,
    CoefficientsRight,
}

/// An element of `C^pΛ^p ⊗ HΛ_k`: θ-products paired with horizontal forms.
pub type TensorModel = BTreeMap<Monomial, IForm>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhiReport {
    pub lhs: usize,
    pub rhs: usize,
    pub lhs_stable: bool,
    pub rhs_stable: bool,
}

impl PhiReport {
    pub fn equal(&self) -> bool {
        self.lhs == self.rhs
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gen: Generator,
    budget: i64,
}

/// Slice computations for `Λ_k` over a patch.
pub struct Spectral {
    patch: Patch,
    k: usize,
    adapters: Mutex<HashMap<usize, Arc<Adapter>>>,
    /// Extra `x`-degree allowed when deciding whether a class vanishes.
    pub slack: u32,
}

impl Spectral {
    pub fn new(patch: &Patch, k: usize) -> Result<Spectral> {
        if k == 0 || k > crate::algebra::MAX_ARITY {
            return Err(Error::invalid(format!("arity {k} out of range")));
        }
        patch.check_grading()?;
        Ok(Spectral { patch: patch.clone(), k, adapters: Mutex::new(HashMap::new()), slack: 2 })
    }

    pub fn patch(&self) -> &Patch {
        &self.patch
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    fn adapter_at(&self, order: Option<usize>) -> Result<Arc<Adapter>> {
        let key = order.unwrap_or(usize::MAX);
        if let Some(a) = self.adapters.lock().unwrap().get(&key) {
            return Ok(a.clone());
        }
        let patch = match order {
            Some(o) => self.patch.with_order(o)?,
            None => self.patch.clone(),
        };
        let a = Arc::new(Adapter::new(&patch, self.k, SlotSet::single(self.k))?);
        self.adapters.lock().unwrap().insert(key, a.clone());
        Ok(a)
    }

    /// The adapter of the patch itself.
    pub fn adapter(&self) -> Result<Arc<Adapter>> {
        self.adapter_at(self.patch.jet_order())
    }

    fn working_adapter(&self, total: u32, grade: &[i64], cap: u32) -> Result<Arc<Adapter>> {
        match self.patch.jet_order() {
            None => self.adapter_at(None),
            Some(r) => {
                let v = grade[0].max(0) as usize + cap as usize + total as usize + 3;
                self.adapter_at(Some(v.max(r)))
            }
        }
    }

    fn check_grade(&self, grade: &[i64]) -> Result<()> {
        if grade.len() != self.patch.grading_dim() {
            return Err(Error::invalid(format!(
                "grading has {} components, got {}",
                self.patch.grading_dim(),
                grade.len()
            )));
        }
        Ok(())
    }

    fn candidates(&self, ad: &Adapter, theta_only: bool, raw_only: bool) -> Vec<Candidate> {
        let patch = ad.patch();
        let k = self.k;
        let budget_index = match patch.grading() {
            Grading::Jet => 1,
            _ => 0,
        };
        let mut out = Vec::new();
        for l in SlotSet::upto(k).subsets().into_iter().filter(|s| !s.is_empty()) {
            for v in patch.vars() {
                let gen = if raw_only {
                    Generator::raw(l, v)
                } else if l.contains(k) {
                    match patch.role(v) {
                        Role::Leading(_) => Generator::contact(l, v),
                        Role::Base => Generator::raw(l, v),
                        Role::Frontier => continue,
                    }
                } else {
                    Generator::raw(l, v)
                };
                if theta_only && !gen.is_contact() {
                    continue;
                }
                out.push(Candidate { gen, budget: patch.weight(v)[budget_index] });
            }
        }
        out.sort_by_key(|c| c.gen);
        out
    }

    /// Generator monomials of multi-degree `md` with exactly `thetas` θ-factors
    /// (or any number when `None`), within the grading budget.
    fn generator_monomials(
        &self,
        cands: &[Candidate],
        md: &[u32],
        thetas: Option<usize>,
        budget: i64,
    ) -> Vec<Monomial> {
        struct St<'a> {
            cands: &'a [Candidate],
            rem: Vec<u32>,
            acc: Vec<Generator>,
            out: Vec<Monomial>,
        }
        fn go(st: &mut St, i: usize, thetas: Option<usize>, budget: i64) {
            if st.rem.iter().all(|&r| r == 0) {
                if thetas.is_none_or(|t| t == 0) {
                    if let Some((_, m)) = Monomial::from_factors(st.acc.clone()) {
                        st.out.push(m);
                    }
                }
                return;
            }
            if i == st.cands.len() {
                return;
            }
            go(st, i + 1, thetas, budget);
            let c = st.cands[i];
            let slots: Vec<usize> = c.gen.slots.slots().collect();
            let mut taken = 0;
            let mut th = thetas;
            let mut b = budget;
            loop {
                if taken == 1 && c.gen.is_odd() {
                    break;
                }
                if slots.iter().any(|&s| st.rem[s - 1] == 0) {
                    break;
                }
                if c.gen.is_contact() {
                    match th {
                        Some(0) => break,
                        Some(t) => th = Some(t - 1),
                        None => {}
                    }
                }
                if c.budget > b {
                    break;
                }
                b -= c.budget;
                for &s in &slots {
                    st.rem[s - 1] -= 1;
                }
                st.acc.push(c.gen);
                taken += 1;
                go(st, i + 1, th, b);
            }
            for _ in 0..taken {
                st.acc.pop();
                for &s in &slots {
                    st.rem[s - 1] += 1;
                }
            }
        }
        let mut st = St { cands, rem: md.to_vec(), acc: Vec::new(), out: Vec::new() };
        go(&mut st, 0, thetas, budget);
        st.out
    }

    fn budget(&self, grade: &[i64]) -> i64 {
        match self.patch.grading() {
            Grading::Jet => grade[1],
            _ => grade[0],
        }
    }

    fn monomial_grade(&self, patch: &Patch, m: &Monomial) -> Vec<i64> {
        let mut w = vec![0; patch.grading_dim()];
        for g in m.factors() {
            for (x, z) in w.iter_mut().zip(patch.weight(g.var)) {
                *x += z;
            }
        }
        w
    }

    fn piece_with(&self, ad: &Adapter, cands: &[Candidate], md: &[u32], thetas: Option<usize>, grade: &[i64], cap: u32) -> Piece {
        let patch = ad.patch();
        let mut basis = Vec::new();
        for m in self.generator_monomials(cands, md, thetas, self.budget(grade)) {
            let gw = self.monomial_grade(patch, &m);
            let rem: Vec<i64> = grade.iter().zip(&gw).map(|(a, b)| a - b).collect();
            for pm in patch.coefficient_monomials(&rem, cap) {
                basis.push((m.clone(), pm));
            }
        }
        Piece::new(basis, patch.jet_order().is_some())
    }

    /// Basis of `E_0^{p,·}` at the multi-degree `md` (last entry is `p + q`).
    pub fn piece(&self, ad: &Adapter, md: &[u32], p: usize, grade: &[i64], cap: u32) -> Piece {
        let cands = self.candidates(ad, false, false);
        self.piece_with(ad, &cands, md, Some(p), grade, cap)
    }

    fn d_matrix(&self, ad: &Adapter, src: &Piece, dst: &Piece, p: usize) -> Result<RationalMatrix> {
        let mut cols = Vec::with_capacity(src.len());
        for i in 0..src.len() {
            let d = ad.differential(self.k, &src.element(self.k, i))?;
            let d = d.filter_monomials(|m| m.contact_count() == p);
            cols.push(dst.vector(&d)?);
        }
        Ok(RationalMatrix::from_columns(dst.len(), cols))
    }

    fn check_order(&self, needed: usize, what: &dyn Fn() -> String) -> Result<()> {
        if let Some(r) = self.patch.jet_order() {
            if needed > r {
                return Err(Error::Truncation { what: what(), needed });
            }
        }
        Ok(())
    }

    /// The pieces at `q - 1`, `q`, `q + 1` and the maps between them.
    pub fn complex(&self, spec: &SliceSpec) -> Result<SliceComplex> {
        if spec.k != self.k {
            return Err(Error::ArityMismatch { expected: self.k, found: spec.k });
        }
        self.check_grade(&spec.grade)?;
        let md = spec.multidegree();
        let total: u32 = md.iter().sum();
        let ad = self.working_adapter(total + 1, &spec.grade, spec.cap)?;
        let cands = self.candidates(&ad, false, false);
        let at = |d: u32| {
            let mut m = md.clone();
            *m.last_mut().unwrap() = d;
            self.piece_with(&ad, &cands, &m, Some(spec.p), &spec.grade, spec.cap)
        };
        let top = spec.p as u32 + spec.q;
        let prev = if spec.q > 0 { at(top - 1) } else { Piece::default() };
        let cur = at(top);
        let next = at(top + 1);
        let mut needed = next.max_order;
        for pc in [&prev, &cur] {
            if !pc.is_empty() {
                needed = needed.max(pc.max_order + 1);
            }
        }
        if !(prev.is_empty() && cur.is_empty() && next.is_empty()) {
            self.check_order(needed, &|| format!("slice {spec}"))?;
        }
        let d_in = self.d_matrix(&ad, &prev, &cur, spec.p)?;
        let d_out = self.d_matrix(&ad, &cur, &next, spec.p)?;
        Ok(SliceComplex { spec: spec.clone(), prev, cur, next, d_in, d_out, adapter: ad })
    }

    fn e1_dimension(&self, spec: &SliceSpec) -> Result<(SliceComplex, Cohomology)> {
        let cx = self.complex(spec)?;
        let h = cx.cohomology()?;
        Ok((cx, h))
    }

    /// `E_1` at the slice, with the stabilization check at `cap + 1`.
    pub fn e1_slice(&self, spec: &SliceSpec) -> Result<E1Slice> {
        let (cx, h) = self.e1_dimension(spec)?;
        let next_cap_dimension = if self.patch.capped_vars().is_empty() {
            h.dimension
        } else {
            self.e1_dimension(&spec.with_cap(spec.cap + 1))?.1.dimension
        };
        let representatives =
            h.representatives.vectors.iter().map(|v| cx.cur.form(self.k, v)).collect();
        Ok(E1Slice {
            spec: spec.clone(),
            dimension: h.dimension,
            representatives,
            basis_size: cx.cur.len(),
            next_cap_dimension,
        })
    }

    /// Raises the cap until the dimension is stable, up to `max_cap`.
    pub fn e1_slice_stabilized(&self, spec: &SliceSpec, max_cap: u32) -> Result<E1Slice> {
        let mut s = spec.clone();
        loop {
            let e = self.e1_slice(&s)?;
            if e.stable() || s.cap >= max_cap {
                return Ok(e);
            }
            s.cap += 1;
        }
    }

    /// `E_0` slice with the dimension of the tensor model `C^pΛ^p ⊗ HΛ_k`.
    pub fn e0_slice(&self, spec: &SliceSpec) -> Result<E0Slice> {
        let cx = self.complex(spec)?;
        let ad = cx.adapter.clone();
        let md = spec.multidegree();
        let thetas = self.candidates(&ad, true, false);
        let raw = self.candidates(&ad, false, true);
        let mut theta_md = vec![0u32; self.k];
        theta_md[self.k - 1] = spec.p as u32;
        let mut tensor_dim = 0;
        // θ-products of every admissible multi-degree below `md`.
        for lower in lower_degrees(&md[..self.k - 1]) {
            let mut tmd = lower.clone();
            tmd.push(spec.p as u32);
            for t in self.generator_monomials(&thetas, &tmd, Some(spec.p), self.budget(&spec.grade)) {
                let tw = self.monomial_grade(ad.patch(), &t);
                let rem_grade: Vec<i64> = spec.grade.iter().zip(&tw).map(|(a, b)| a - b).collect();
                let rem_md: Vec<u32> = md.iter().zip(&tmd).map(|(a, b)| a - b).collect();
                tensor_dim += self.horizontal_dim(&ad, &raw, &rem_md, &rem_grade, spec.cap)?;
            }
        }
        let basis = (0..cx.cur.len()).map(|i| cx.cur.element(self.k, i)).collect();
        Ok(E0Slice {
            spec: spec.clone(),
            basis,
            d: cx.d_out.clone(),
            subquotient_dim: cx.cur.len(),
            tensor_dim,
        })
    }

    /// Dimension of `HΛ_k` at a multi-degree and grade, as the rank of the
    /// horizontal projections of raw monomials.
    fn horizontal_dim(&self, ad: &Adapter, raw: &[Candidate], md: &[u32], grade: &[i64], cap: u32) -> Result<usize> {
        let piece = self.piece_with(ad, raw, md, None, grade, cap);
        let mut index: HashMap<(Monomial, PMono), usize> = HashMap::new();
        let mut vectors = Vec::new();
        for i in 0..piece.len() {
            let h = ad
                .to_adapted(&piece.element(self.k, i))?
                .filter_monomials(|m| m.contact_count() == 0);
            let mut v = SparseVec::new();
            for (m, c) in h.terms() {
                for (pm, a) in c.terms() {
                    let n = index.len();
                    let j = *index.entry((m.clone(), pm.clone())).or_insert(n);
                    v.insert(j, a.clone());
                }
            }
            vectors.push(v);
        }
        let mut e = Echelon::new(index.len());
        for v in &vectors {
            e.insert(v);
        }
        Ok(e.rank())
    }

    /// `d̄_k(ω ⊗ ρ̄) = Σ ω_α ⊗ (σ_α ∧ ρ)‾ + (-1)^{|ω|} ω ⊗ d_{k,0} ρ̄` for a
    /// homogeneous `ω ∈ C^pΛ^p` and a horizontal `ρ̄`, both adapted.
    pub fn d_bar(&self, omega: &IForm, rho: &IForm, how: Decomposition) -> Result<TensorModel> {
        let ad = self.working_adapter_for(omega, rho)?;
        let p = omega
            .contact_count_min()
            .ok_or_else(|| Error::invalid("d_bar needs a nonzero ω"))?;
        let deg = omega
            .total_degree()
            .ok_or_else(|| Error::invalid("d_bar needs ω of one total degree"))?;
        let mut out = TensorModel::new();
        let dw = ad.differential(self.k, omega)?;
        for (m, c) in dw.terms() {
            // m = T ∧ rest with the first p θ-factors in T
            let factors = m.factors();
            let thetas: Vec<Generator> = factors.iter().copied().filter(|g| g.is_contact()).collect();
            if thetas.len() < p {
                return Err(Error::invalid("d_k left the Cartan filtration"));
            }
            let t = Monomial::from_factors(thetas[..p].to_vec()).expect("distinct").1;
            let rest = Monomial::from_factors(factors[p..].to_vec()).expect("distinct").1;
            let (wa, sa) = match how {
                Decomposition::CoefficientsLeft => {
                    // split rest into its slot-k-free part λ and the remainder σ
                    let (lam, sig): (Vec<Generator>, Vec<Generator>) = rest
                        .factors()
                        .iter()
                        .partition(|g| !g.is_contact() && !g.slots.contains(self.k));
                    let mut joined = lam.clone();
                    joined.extend(&sig);
                    let (s, _) = Monomial::from_factors(joined).expect("distinct");
                    let (_, tl) = Monomial::from_factors([&thetas[..p], &lam[..]].concat()).expect("distinct");
                    let sig = Monomial::from_factors(sig).expect("distinct").1;
                    let wa = IForm::term(self.k, c.clone(), tl);
                    let sa = IForm::term(self.k, Poly::one(), sig);
                    (wa, if s < 0 { sa.neg() } else { sa })
                }
                Decomposition::CoefficientsRight => (
                    IForm::term(self.k, Poly::one(), t.clone()),
                    IForm::term(self.k, c.clone(), rest),
                ),
            };
            let h = horizontal(&sa.wedge(rho)?);
            add_model(&mut out, &wa, &h, p)?;
        }
        let d0 = horizontal(&ad.differential(self.k, rho)?);
        let second = if deg % 2 == 1 { d0.neg() } else { d0 };
        add_model(&mut out, omega, &second, p)?;
        out.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    fn working_adapter_for(&self, a: &IForm, b: &IForm) -> Result<Arc<Adapter>> {
        match self.patch.jet_order() {
            None => self.adapter_at(None),
            Some(r) => {
                let top = a
                    .vars()
                    .into_iter()
                    .chain(b.vars())
                    .map(|v| v.0 as usize)
                    .max()
                    .unwrap_or(0);
                self.adapter_at(Some(r.max(top + 1)))
            }
        }
    }

    /// `d̄_k` applied to a model element.
    pub fn d_bar_model(&self, x: &TensorModel, how: Decomposition) -> Result<TensorModel> {
        let mut out = TensorModel::new();
        for (t, h) in x {
            let tf = IForm::term(self.k, Poly::one(), t.clone());
            for (m, c) in h.terms() {
                let rho = IForm::term(self.k, c.clone(), m.clone());
                for (tt, hh) in self.d_bar(&tf, &rho, how)? {
                    let e = out.entry(tt).or_insert_with(|| IForm::zero(self.k));
                    e.add_assign(&hh);
                }
            }
        }
        out.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    /// Matrix of `d̄_k` between the pieces at `q` and `q + 1`, through `μ`.
    pub fn d_bar_matrix(&self, spec: &SliceSpec, how: Decomposition) -> Result<RationalMatrix> {
        let cx = self.complex(spec)?;
        let mut cols = Vec::new();
        for i in 0..cx.cur.len() {
            let x = model_from_e0(&cx.cur.element(self.k, i), spec.p)?;
            let y = self.d_bar_model(&x, how)?;
            cols.push(cx.next.vector(&model_to_e0(self.k, &y)?)?);
        }
        Ok(RationalMatrix::from_columns(cx.next.len(), cols))
    }

    // ---- E_1 classes ----

    /// The class of a raw form `ω ∈ C^p` with `d_k ω ∈ C^{p+1}`.
    pub fn class_of(&self, raw: &IForm, p: usize) -> Result<E1Class> {
        let ad = self.adapter()?;
        self.class_from_adapted(&ad.to_adapted(raw)?, p)
    }

    pub fn class_from_adapted(&self, adapted: &IForm, p: usize) -> Result<E1Class> {
        if adapted.arity() != self.k {
            return Err(Error::ArityMismatch { expected: self.k, found: adapted.arity() });
        }
        if adapted.contact_count_min().is_some_and(|c| c < p) {
            return Err(Error::invalid(format!("form is not in C^{p}")));
        }
        let rep = adapted.filter_monomials(|m| m.contact_count() == p);
        let ad = self.adapter()?;
        let d = ad.differential(self.k, &rep)?;
        if d.filter_monomials(|m| m.contact_count() == p).num_terms() > 0 {
            return Err(Error::invalid("representative is not a d_{k,0}-cocycle"));
        }
        Ok(E1Class { k: self.k, p, rep })
    }

    fn grade_of(&self, m: &Monomial, pm: &PMono) -> Vec<i64> {
        let mut g = self.monomial_grade(&self.patch, m);
        for (x, z) in g.iter_mut().zip(self.patch.mono_weight(pm)) {
            *x += z;
        }
        g
    }

    /// Decomposition of a representative into homogeneous slices.
    pub fn pieces(&self, c: &E1Class) -> Result<Vec<(SliceSpec, IForm)>> {
        let mut parts: BTreeMap<(Vec<u32>, Vec<i64>), (u32, IForm)> = BTreeMap::new();
        let capped = self.patch.capped_vars();
        for (m, coef) in c.rep.terms() {
            let md = m.multidegree(self.k).0;
            for (pm, a) in coef.terms() {
                let g = self.grade_of(m, pm);
                let xdeg: u32 = capped.iter().map(|&v| pm.exponent(v)).sum();
                let e = parts.entry((md.clone(), g)).or_insert_with(|| (0, IForm::zero(self.k)));
                e.0 = e.0.max(xdeg);
                e.1.add_term(m.clone(), &Poly::monomial(a.clone(), pm.clone()));
            }
        }
        let mut out = Vec::new();
        for ((md, grade), (xdeg, f)) in parts {
            let top = md[self.k - 1];
            if (top as usize) < c.p {
                return Err(Error::invalid("slot-k degree below the Cartan degree"));
            }
            let cap = if capped.is_empty() { 0 } else { xdeg + self.slack };
            let spec = SliceSpec::new(
                self.k,
                c.p,
                md[..self.k - 1].to_vec(),
                top - c.p as u32,
                grade,
                cap,
            )?;
            out.push((spec, f));
        }
        Ok(out)
    }

    /// Canonical representative: each slice component reduced modulo the
    /// image of `d_{k,0}`.
    pub fn reduce(&self, c: &E1Class) -> Result<IForm> {
        let mut out = IForm::zero(self.k);
        for (spec, f) in self.pieces(c)? {
            let cx = self.complex(&spec)?;
            let v = cx.cur.vector(&f)?;
            if !cx.d_out.apply(&v).is_empty() {
                return Err(Error::invalid("representative is not a d_{k,0}-cocycle"));
            }
            let r = cx.d_in.image().reduce(&v);
            out.add_assign(&cx.cur.form(self.k, &r));
        }
        Ok(out)
    }

    pub fn is_zero(&self, c: &E1Class) -> Result<bool> {
        Ok(self.reduce(c)?.is_zero())
    }

    pub fn equal(&self, a: &E1Class, b: &E1Class) -> Result<bool> {
        if a.p != b.p || a.k != b.k {
            return Ok(a.rep.is_zero() && b.rep.is_zero());
        }
        self.is_zero(&E1Class { k: a.k, p: a.p, rep: a.rep.sub(&b.rep)? })
    }

    fn project(&self, adapted: IForm, p: usize) -> E1Class {
        E1Class { k: self.k, p, rep: adapted.filter_monomials(|m| m.contact_count() == p) }
    }

    /// `d_{m,1}`: for `m = k` the class of `d_k ω` one Cartan degree up; for
    /// `m < k` the class of `d_m ω`.
    pub fn induced_differential(&self, m: usize, c: &E1Class) -> Result<E1Class> {
        let ad = self.adapter()?;
        let d = ad.differential(m, &c.rep)?;
        Ok(if m == self.k { self.project(d, c.p + 1) } else { self.project(d, c.p) })
    }

    pub fn kappa_on_e1(&self, sigma: &Permutation, c: &E1Class) -> Result<E1Class> {
        if sigma.len() + 1 != self.k {
            return Err(Error::Unsupported(format!(
                "expected a permutation of 1..{}; moving slot {} is not supported",
                self.k - 1,
                self.k
            )));
        }
        let ad = self.adapter()?;
        let s = sigma.extend(self.k);
        let raw = kappa(&s, &ad.to_raw(&c.rep)?)?;
        Ok(self.project(ad.to_adapted(&raw)?, c.p))
    }

    pub fn lie_on_e1(&self, x: &SymmetryClass, c: &E1Class) -> Result<E1Class> {
        let ad = self.adapter()?;
        let raw = ad.to_raw(&c.rep)?;
        let l = LieDerivative::new(x.x.clone()).eval(&raw)?;
        Ok(self.project(ad.to_adapted(&l)?, c.p))
    }

    pub fn insert_on_e1(&self, x: &SymmetryClass, c: &E1Class) -> Result<E1Class> {
        if c.p == 0 {
            return Err(Error::invalid("insertion needs Cartan degree at least 1"));
        }
        let ad = self.adapter()?;
        let raw = ad.to_raw(&c.rep)?;
        let i = apply(&ContactInsertion::new(x.x.clone()), &raw)?;
        Ok(self.project(ad.to_adapted(&i)?, c.p - 1))
    }

    // ---- symmetries ----

    /// Tabulates a derivation of `Λ_{k-1}` on the patch.
    pub fn tabulate<D: Derivation + ?Sized>(&self, d: &D) -> TableDerivation {
        TableDerivation::materialize(d, &self.patch.vars(), SlotSet::upto(self.k - 1))
    }

    /// The lift of a derivation of functions to `Λ_{k-1}`.
    pub fn lift(&self, x: &FunctionDerivation) -> Result<TableDerivation> {
        if x.arity != self.k {
            return Err(Error::ArityMismatch { expected: self.k, found: x.arity });
        }
        Ok(self.tabulate(&Insertion::new(Arc::new(x.clone()), SlotSet::EMPTY)?))
    }

    /// A vector field given by its values on coordinates.
    pub fn vector_field(&self, values: impl IntoIterator<Item = (Var, Poly)>) -> Result<TableDerivation> {
        self.lift(&FunctionDerivation::vector_field(self.k, values))
    }

    /// The total derivative `D_x = ∂_x + Σ u_{i+1} ∂_{u_i}` of a jet patch.
    pub fn total_derivative_field(&self) -> Result<TableDerivation> {
        let r = self.jet_order()?;
        let mut x = FunctionDerivation::new(self.k, 0).with_value(Var(0), Ok(IForm::constant(self.k, Q::from_integer(1.into()))));
        for i in 0..=r {
            x = x.with_value(Var(i as u32 + 1), self.total_derivative(&Poly::var(Var(i as u32 + 1))).map(|p| IForm::function(self.k, p)));
        }
        self.lift(&x)
    }

    /// The prolonged evolutionary field with generating function `φ`:
    /// `u_i ↦ D_x^i φ`, `x ↦ 0`.
    pub fn evolutionary_field(&self, phi: &Poly) -> Result<TableDerivation> {
        let r = self.jet_order()?;
        let mut x = FunctionDerivation::new(self.k, 0);
        let mut cur = Ok(phi.clone());
        for i in 0..=r {
            x = x.with_value(Var(i as u32 + 1), cur.clone().map(|p| IForm::function(self.k, p)));
            cur = cur.and_then(|p| self.total_derivative(&p));
        }
        self.lift(&x)
    }

    /// `I_m^K = [i_m^K]`, the insertion of `d_m` along `K ⊆ {1, …, k-1}`.
    pub fn insertion_field(&self, m: usize, slots: SlotSet) -> Result<TableDerivation> {
        if m == 0 || m >= self.k || slots.max().is_some_and(|s| s >= self.k) {
            return Err(Error::invalid(format!("I_{m}^{{{slots}}} needs m, K inside 1..{}", self.k - 1)));
        }
        let d = FunctionDerivation::differential_on_functions(self.k, m, &self.patch.vars());
        Ok(self.tabulate(&Insertion::new(Arc::new(d), slots)?))
    }

    fn jet_order(&self) -> Result<usize> {
        self.patch
            .jet_order()
            .ok_or_else(|| Error::Unsupported("needs a jet patch".into()))
    }

    /// `D_x f`, or a truncation error if `f` depends on the frontier coordinate.
    pub fn total_derivative(&self, f: &Poly) -> Result<Poly> {
        let r = self.jet_order()?;
        let mut out = f.derivative(Var(0));
        for i in 0..=r {
            let v = Var(i as u32 + 1);
            let df = f.derivative(v);
            if df.is_zero() {
                continue;
            }
            if i == r {
                return Err(Error::Truncation { what: format!("total derivative of u{r}"), needed: r + 1 });
            }
            out = &out + &(&df * &Poly::var(Var(i as u32 + 2)));
        }
        Ok(out)
    }

    /// Contact test on every checkable Cartan generator, plus triviality.
    pub fn classify_symmetry(&self, x: TableDerivation) -> Result<Classification> {
        if x.arity != self.k {
            return Err(Error::ArityMismatch { expected: self.k, found: x.arity });
        }
        let x = Arc::new(x);
        let ad = self.adapter()?;
        let lie = LieDerivative::new(x.clone());
        let ins = ContactInsertion::new(x.clone());
        let mut checked = 0;
        let mut trivial = true;
        for slots in SlotSet::upto(self.k - 1).subsets() {
            for i in 0..self.patch.contacts().len() {
                let g = cartan_generator(&self.patch, self.k, slots, i)?;
                let image = match lie.eval(&g).and_then(|l| ad.to_adapted(&l).map(|a| (l, a))) {
                    Ok(v) => v,
                    Err(e) if e.is_truncation() => continue,
                    Err(e) => return Err(e),
                };
                if image.1.contact_count_min().is_some_and(|c| c == 0) {
                    return Ok(Classification::Rejected { witness: g, image: image.0 });
                }
                checked += 1;
                match apply(&ins, &g) {
                    Ok(v) if v.is_zero() => {}
                    Ok(_) => trivial = false,
                    Err(e) if e.is_truncation() => {}
                    Err(e) => return Err(e),
                }
            }
        }
        if checked == 0 && !self.patch.contacts().is_empty() {
            return Err(Error::Truncation {
                what: "contact test has no generator within the cap".into(),
                needed: self.patch.jet_order().unwrap_or(0) + 1,
            });
        }
        Ok(Classification::Contact(SymmetryClass { x, trivial, checked }))
    }

    /// `classify_symmetry` that treats a rejection as an error.
    pub fn symmetry(&self, x: TableDerivation) -> Result<SymmetryClass> {
        match self.classify_symmetry(x)? {
            Classification::Contact(s) => Ok(s),
            Classification::Rejected { witness, .. } => Err(Error::invalid(format!(
                "not a contact derivation; witness {}",
                witness.render(&self.patch)
            ))),
        }
    }

    /// The graded commutator of two symmetry representatives.
    pub fn bracket(&self, a: &SymmetryClass, b: &SymmetryClass) -> Result<SymmetryClass> {
        let c = self.tabulate(&Commutator { a: a.x.clone(), b: b.x.clone() });
        self.symmetry(c)
    }

    /// The conditions `L_{I_m^K} θ = 0` (`|K| ≥ 2`) and `i_{I_m^K} θ = 0`
    /// (`|K| ≥ 1`) for `m < k`.
    pub fn is_secondary_covariant_tensor(&self, c: &E1Class) -> Result<bool> {
        if let Some(md) = c.rep.multidegree() {
            if md.0.iter().any(|&d| d != 1) {
                return Err(Error::invalid("secondary tensor test needs multi-degree (1,…,1)"));
            }
        } else if !c.rep.is_zero() {
            return Err(Error::invalid("secondary tensor test needs a homogeneous class"));
        }
        for m in 1..self.k {
            for slots in SlotSet::upto(self.k - 1).subsets() {
                if slots.is_empty() {
                    continue;
                }
                let sym = SymmetryClass { x: Arc::new(self.insertion_field(m, slots)?), trivial: false, checked: 0 };
                if slots.len() >= 2 && !self.is_zero(&self.lie_on_e1(&sym, c)?)? {
                    return Ok(false);
                }
                if c.p >= 1 && !self.is_zero(&self.insert_on_e1(&sym, c)?)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// The class of `d_1(f d_1 x)` in `E_1^{1,1}` of a jet patch (`k = 1`).
    pub fn euler_lagrange(&self, f: &Poly) -> Result<E1Class> {
        if self.k != 1 {
            return Err(Error::Unsupported("euler-lagrange needs arity 1".into()));
        }
        self.jet_order()?;
        let dx = IForm::generator(1, Generator::raw(SlotSet::single(1), Var(0)));
        let raw = crate::calculus::differential(1, &dx.mul_poly(f))?;
        self.class_of(&raw, 1)
    }
}

/// Multi-degrees componentwise below `md`.
fn lower_degrees(md: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &d in md {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..=d).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

fn horizontal(a: &IForm) -> IForm {
    a.filter_monomials(|m| m.contact_count() == 0)
}

/// Adds `ω ⊗ h` in normal form: each monomial `c T ∧ λ` of `ω` contributes
/// `T ⊗ c λ ∧ h`.
fn add_model(out: &mut TensorModel, omega: &IForm, h: &IForm, p: usize) -> Result<()> {
    if h.is_zero() {
        return Ok(());
    }
    let k = omega.arity();
    for (m, c) in omega.terms() {
        let factors = m.factors();
        if factors.iter().take(p).any(|g| !g.is_contact()) || factors.iter().skip(p).any(|g| g.is_contact()) {
            return Err(Error::invalid("ω is not in C^pΛ^p"));
        }
        let t = Monomial::from_factors(factors[..p].to_vec()).expect("distinct").1;
        let lam = Monomial::from_factors(factors[p..].to_vec()).expect("distinct").1;
        let val = IForm::term(k, c.clone(), lam).wedge(h)?;
        out.entry(t).or_insert_with(|| IForm::zero(k)).add_assign(&val);
    }
    Ok(())
}

/// Splits an `E_0` element (exactly `p` θ-factors per monomial) as a model element.
pub fn model_from_e0(a: &IForm, p: usize) -> Result<TensorModel> {
    let mut out = TensorModel::new();
    for (m, c) in a.terms() {
        let one = IForm::term(a.arity(), c.clone(), m.clone());
        let factors = m.factors();
        let t = Monomial::from_factors(factors[..p.min(factors.len())].to_vec()).expect("distinct").1;
        let rest = Monomial::from_factors(factors[p.min(factors.len())..].to_vec()).expect("distinct").1;
        if t.contact_count() != p || rest.contact_count() != 0 {
            return Err(Error::invalid("element is not in C^p / C^{p+1}"));
        }
        let _ = one;
        out.entry(t)
            .or_insert_with(|| IForm::zero(a.arity()))
            .add_assign(&IForm::term(a.arity(), c.clone(), rest));
    }
    Ok(out)
}

/// `μ(T ⊗ h) = T ∧ h`.
pub fn model_to_e0(k: usize, x: &TensorModel) -> Result<IForm> {
    let mut out = IForm::zero(k);
    for (t, h) in x {
        out.add_assign(&IForm::term(k, Poly::one(), t.clone()).wedge(h)?);
    }
    Ok(out)
}

/// Compares `Λ_{k-1}CE_1` at `(degrees, p, q)` with `H(HΛ_{k+1}, d_{k+1,0})`
/// at multi-degree `(degrees, p, q)`, both at stabilized caps.
pub fn phi_dim_check(
    patch: &Patch,
    k: usize,
    p: usize,
    degrees: &[u32],
    q: u32,
    grade: &[i64],
    cap: u32,
    max_cap: u32,
) -> Result<PhiReport> {
    let lhs = Spectral::new(patch, k)?
        .e1_slice_stabilized(&SliceSpec::new(k, p, degrees.to_vec(), q, grade.to_vec(), cap)?, max_cap)?;
    let mut d = degrees.to_vec();
    d.push(p as u32);
    let rhs = Spectral::new(patch, k + 1)?
        .e1_slice_stabilized(&SliceSpec::new(k + 1, 0, d, q, grade.to_vec(), cap)?, max_cap)?;
    Ok(PhiReport { lhs: lhs.dimension, rhs: rhs.dimension, lhs_stable: lhs.stable(), rhs_stable: rhs.stable() })
}
