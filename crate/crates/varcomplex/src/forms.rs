//! Exterior algebra over the contact basis `{dx^lambda, theta^i_Lambda}`.
//!
//! A [`Form`] is a canonically ordered sum of `coefficient * wedge word`
//! terms. Words are strictly increasing in the fixed generator order (all
//! `dx` before all `theta`), so repeated generators annihilate and more than
//! `n` horizontal generators cannot occur. Coefficients are [`Expr`] scalars
//! and are dropped when they normalize to zero.
//!
//! The `dx`/`dy` coordinate basis exists as the separate [`DyForm`] type; it
//! is the parser-boundary representation and carries its own textbook
//! exterior differential, which the test suites use as an independent route
//! to the contact-basis operators.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use crate::bundle::{BundleSpec, JetVar, MultiIndex};
use crate::expr::{join_signed, Expr};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormError {
    #[error("forms belong to different bundles")]
    BundleMismatch,
    #[error("horizontal degree {degree} exceeds base dimension {base_dim}")]
    HorizontalDegreeTooLarge { degree: usize, base_dim: usize },
    #[error("expected a form of pure bidegree ({expected_contact},{expected_horizontal})")]
    BidegreeMismatch {
        expected_contact: usize,
        expected_horizontal: usize,
    },
    #[error("form of horizontal degree {found} where the top degree {top} is required")]
    NotTopHorizontal { found: usize, top: usize },
    #[error("not a source form: {0}")]
    NotSourceForm(String),
    #[error("source form needs {expected} components, got {got}")]
    ComponentCount { expected: usize, got: usize },
}

/// Basis 1-form: horizontal `dx^lambda` or contact `theta^i_Lambda`.
///
/// The derived order (all `Dx` by base position, then all `Theta` by fibre
/// index and graded-lex multi-index) is the canonical word order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    Dx(usize),
    Theta(JetVar),
}

impl Generator {
    pub fn theta(fiber: usize, index: MultiIndex) -> Self {
        Generator::Theta(JetVar::new(fiber, index))
    }

    pub fn display_name(&self, bundle: &BundleSpec) -> String {
        match self {
            Generator::Dx(l) => format!("d{}", bundle.base_name(*l)),
            Generator::Theta(v) => {
                if v.index.is_empty() {
                    format!("th({})", bundle.fiber_name(v.fiber))
                } else {
                    format!(
                        "th({};{})",
                        bundle.fiber_name(v.fiber),
                        v.index.subscript(bundle)
                    )
                }
            }
        }
    }
}

pub(crate) fn word_bidegree<G, F: Fn(&G) -> bool>(word: &[G], is_contact: F) -> (usize, usize) {
    let k = word.iter().filter(|g| is_contact(g)).count();
    (k, word.len() - k)
}

/// Inserts `g` into the sorted word `rest` as if it initially sat at
/// position `slot`; returns the sign flip, or `None` when the generator
/// repeats.
fn insert_with_sign<G: Ord>(rest: &mut Vec<G>, g: G, slot: usize) -> Option<bool> {
    let q = rest.partition_point(|h| *h < g);
    if rest.get(q) == Some(&g) {
        return None;
    }
    rest.insert(q, g);
    Some((slot + q) % 2 == 1)
}

fn merge_words<G: Ord + Clone>(a: &[G], b: &[G]) -> Option<(Vec<G>, bool)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut neg = false;
    let mut i = 0;
    let mut j = 0;
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                if (a.len() - i) % 2 == 1 {
                    neg = !neg;
                }
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => return None,
        }
    }
    out.extend(a[i..].iter().cloned());
    out.extend(b[j..].iter().cloned());
    Some((out, neg))
}

/// Exterior form in the contact basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Form {
    bundle: BundleSpec,
    terms: BTreeMap<Vec<Generator>, Expr>,
}

impl Form {
    pub fn zero(bundle: &BundleSpec) -> Self {
        Form {
            bundle: bundle.clone(),
            terms: BTreeMap::new(),
        }
    }

    /// A 0-form from a scalar.
    pub fn scalar(coeff: Expr) -> Self {
        let mut out = Form::zero(coeff.bundle());
        out.add_term(Vec::new(), coeff);
        out
    }

    pub fn generator(bundle: &BundleSpec, g: Generator) -> Self {
        match &g {
            Generator::Dx(l) => assert!(*l < bundle.base_dim(), "base index out of range"),
            Generator::Theta(v) => {
                assert!(v.fiber < bundle.fiber_dim(), "fiber index out of range");
                assert_eq!(v.index.base_dim(), bundle.base_dim());
            }
        }
        let mut out = Form::zero(bundle);
        out.add_term(vec![g], Expr::int(bundle, 1));
        out
    }

    /// The horizontal volume `omega = dx^1 ^ ... ^ dx^n`.
    pub fn volume(bundle: &BundleSpec) -> Self {
        let word: Vec<Generator> = (0..bundle.base_dim()).map(Generator::Dx).collect();
        let mut out = Form::zero(bundle);
        out.add_term(word, Expr::int(bundle, 1));
        out
    }

    /// `partial_lambda | omega`, the volume with `dx^lambda` contracted away.
    pub(crate) fn volume_contracted(bundle: &BundleSpec, lambda: usize) -> Self {
        let word: Vec<Generator> = (0..bundle.base_dim())
            .filter(|l| *l != lambda)
            .map(Generator::Dx)
            .collect();
        let sign = if lambda % 2 == 1 { -1 } else { 1 };
        let mut out = Form::zero(bundle);
        out.add_term(word, Expr::int(bundle, sign));
        out
    }

    pub fn bundle(&self) -> &BundleSpec {
        &self.bundle
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn add_term(&mut self, word: Vec<Generator>, coeff: Expr) {
        if coeff.is_zero() {
            return;
        }
        debug_assert!(word.windows(2).all(|w| w[0] < w[1]), "word not canonical");
        match self.terms.entry(word) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + &coeff;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[Generator], &Expr)> {
        self.terms.iter().map(|(w, c)| (w.as_slice(), c))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, word: &[Generator]) -> Option<&Expr> {
        self.terms.get(word)
    }

    /// Bidegrees `(k, s)` present, one per term class.
    pub fn bidegrees(&self) -> std::collections::BTreeSet<(usize, usize)> {
        self.terms
            .keys()
            .map(|w| word_bidegree(w, |g| matches!(g, Generator::Theta(_))))
            .collect()
    }

    /// `Some((k, s))` when every term has the same bidegree; `None` for the
    /// zero form or mixed forms.
    pub fn pure_bidegree(&self) -> Option<(usize, usize)> {
        let degs = self.bidegrees();
        if degs.len() == 1 {
            degs.into_iter().next()
        } else {
            None
        }
    }

    /// Projection `h_k` onto contact degree `k`.
    pub fn project_contact(&self, k: usize) -> Form {
        let mut out = Form::zero(&self.bundle);
        for (w, c) in &self.terms {
            if word_bidegree(w, |g| matches!(g, Generator::Theta(_))).0 == k {
                out.add_term(w.clone(), c.clone());
            }
        }
        out
    }

    /// Projection `h^s` onto horizontal degree `s`; `s` must not exceed the
    /// base dimension.
    pub fn project_horizontal(&self, s: usize) -> Result<Form, FormError> {
        let n = self.bundle.base_dim();
        if s > n {
            return Err(FormError::HorizontalDegreeTooLarge {
                degree: s,
                base_dim: n,
            });
        }
        let mut out = Form::zero(&self.bundle);
        for (w, c) in &self.terms {
            if word_bidegree(w, |g| matches!(g, Generator::Theta(_))).1 == s {
                out.add_term(w.clone(), c.clone());
            }
        }
        Ok(out)
    }

    /// The horizontal projection `h_0`.
    pub fn horizontal_part(&self) -> Form {
        self.project_contact(0)
    }

    pub fn wedge(&self, other: &Form) -> Result<Form, FormError> {
        if self.bundle != other.bundle {
            return Err(FormError::BundleMismatch);
        }
        let mut out = Form::zero(&self.bundle);
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                if let Some((word, neg)) = merge_words(wa, wb) {
                    let c = ca * cb;
                    out.add_term(word, if neg { -&c } else { c });
                }
            }
        }
        Ok(out)
    }

    pub fn scalar_mul(&self, c: &Expr) -> Form {
        let mut out = Form::zero(&self.bundle);
        for (w, k) in &self.terms {
            out.add_term(w.clone(), k * c);
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Form {
        self.scalar_mul(&Expr::constant(&self.bundle, c.clone()))
    }

    /// Interior product with the vector dual to `theta^i_Lambda`: kills every
    /// other generator, sends `theta^i_Lambda` to 1 with the sign of its slot.
    pub fn contract_theta(&self, fiber: usize, index: &MultiIndex) -> Form {
        let target = JetVar::new(fiber, index.clone());
        self.contract_map(&|v| {
            if *v == target {
                Expr::int(&self.bundle, 1)
            } else {
                Expr::zero(&self.bundle)
            }
        })
    }

    /// Graded interior product sending `theta^i_Lambda` to `value(i, Lambda)`
    /// and killing every `dx^lambda`.
    pub fn contract_map(&self, value: &impl Fn(&JetVar) -> Expr) -> Form {
        let mut out = Form::zero(&self.bundle);
        for (word, coeff) in &self.terms {
            for (slot, g) in word.iter().enumerate() {
                let Generator::Theta(v) = g else { continue };
                let val = value(v);
                if val.is_zero() {
                    continue;
                }
                let mut rest = word.clone();
                rest.remove(slot);
                let c = &val * coeff;
                out.add_term(rest, if slot % 2 == 1 { -&c } else { c });
            }
        }
        out
    }

    /// Total derivative `d_lambda` extended to forms as an even derivation:
    /// coefficients differentiate, `theta^i_Lambda` raises to
    /// `theta^i_{lambda+Lambda}` and `dx` is constant.
    pub fn d_lambda(&self, lambda: usize) -> Form {
        let mut out = Form::zero(&self.bundle);
        for (word, coeff) in &self.terms {
            out.add_term(word.clone(), coeff.total_derivative(lambda));
            for (slot, g) in word.iter().enumerate() {
                let Generator::Theta(v) = g else { continue };
                let raised = Generator::Theta(v.raise(lambda).expect("index in range"));
                let mut rest = word.clone();
                rest.remove(slot);
                if let Some(neg) = insert_with_sign(&mut rest, raised, slot) {
                    out.add_term(rest, if neg { -coeff } else { coeff.clone() });
                }
            }
        }
        out
    }

    /// Iterated `d_Lambda` over a multi-index.
    pub fn d_iterated(&self, index: &MultiIndex) -> Form {
        let mut out = self.clone();
        for lambda in index.positions() {
            out = out.d_lambda(lambda);
        }
        out
    }

    /// Largest jet order over coefficients and contact generators; -1 when
    /// nothing fibred occurs.
    pub fn max_jet_order(&self) -> i32 {
        let mut order = -1;
        for (w, c) in &self.terms {
            order = order.max(c.jet_order());
            for g in w {
                if let Generator::Theta(v) = g {
                    order = order.max(v.index.order() as i32);
                }
            }
        }
        order
    }

    pub fn max_total_degree(&self) -> u32 {
        self.terms.values().map(|c| c.total_degree()).max().unwrap_or(0)
    }

    pub fn has_transcendental(&self) -> bool {
        self.terms.values().any(|c| c.has_transcendental())
    }

    /// The density of a horizontal `(0, n)`-form `L = l * omega`.
    pub fn lagrangian_density(&self) -> Result<Expr, FormError> {
        let n = self.bundle.base_dim();
        if self.is_zero() {
            return Ok(Expr::zero(&self.bundle));
        }
        match self.pure_bidegree() {
            Some((0, s)) if s == n => {}
            _ => {
                return Err(FormError::BidegreeMismatch {
                    expected_contact: 0,
                    expected_horizontal: n,
                })
            }
        }
        let word: Vec<Generator> = (0..n).map(Generator::Dx).collect();
        Ok(self
            .coefficient(&word)
            .cloned()
            .unwrap_or_else(|| Expr::zero(&self.bundle)))
    }

    fn assert_same_bundle(&self, other: &Form) {
        assert!(self.bundle == other.bundle, "forms belong to different bundles");
    }
}

impl Add for &Form {
    type Output = Form;
    fn add(self, rhs: &Form) -> Form {
        self.assert_same_bundle(rhs);
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Form {
    type Output = Form;
    fn sub(self, rhs: &Form) -> Form {
        self + &(-rhs)
    }
}

impl Neg for &Form {
    type Output = Form;
    fn neg(self) -> Form {
        Form {
            bundle: self.bundle.clone(),
            terms: self.terms.iter().map(|(w, c)| (w.clone(), -c)).collect(),
        }
    }
}

// ----------------------------------------------------------------------
// Display: words are presented contact-first (theta before dx), matching the
// usual `E theta ^ omega` notation; the permutation sign moves into the
// coefficient. The output re-parses under the CLI grammar.
// ----------------------------------------------------------------------

pub(crate) fn display_term(coeff: &Expr, word_names: &[String]) -> (bool, String) {
    let word = word_names.join("^");
    if word.is_empty() {
        let parts = coeff.signed_term_strings();
        return if parts.len() == 1 {
            parts.into_iter().next().unwrap()
        } else {
            (false, format!("({coeff})"))
        };
    }
    let parts = coeff.signed_term_strings();
    match parts.len() {
        0 => (false, "0".to_string()),
        1 => {
            let (neg, mag) = parts.into_iter().next().unwrap();
            if mag == "1" {
                (neg, word)
            } else {
                (neg, format!("{mag}*{word}"))
            }
        }
        _ => (false, format!("({coeff})*{word}")),
    }
}

impl Form {
    /// Presentation of each term with contact generators first and the
    /// permutation sign folded into the coefficient.
    pub(crate) fn presented_terms(&self) -> Vec<(Expr, Vec<Generator>)> {
        let mut out = Vec::new();
        for (word, coeff) in &self.terms {
            let (k, s) = word_bidegree(word, |g| matches!(g, Generator::Theta(_)));
            let mut presented: Vec<Generator> = Vec::with_capacity(word.len());
            presented.extend(word.iter().skip(s).cloned()); // thetas
            presented.extend(word.iter().take(s).cloned()); // dxs
            let c = if (k * s) % 2 == 1 {
                -coeff
            } else {
                coeff.clone()
            };
            out.push((c, presented));
        }
        out
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (coeff, word) in self.presented_terms() {
            let names: Vec<String> = word.iter().map(|g| g.display_name(&self.bundle)).collect();
            parts.push(display_term(&coeff, &names));
        }
        write!(f, "{}", join_signed(&parts))
    }
}

// ----------------------------------------------------------------------
// Source forms
// ----------------------------------------------------------------------

/// Element of `E_1`: the `(1, n)`-form `sum_i E_i theta^i ^ omega` stored by
/// its components. Kept as its own type so the Euler-Lagrange image and the
/// Helmholtz input cannot be confused with general `(1, n)`-forms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceForm {
    bundle: BundleSpec,
    components: Vec<Expr>,
}

impl SourceForm {
    pub fn new(bundle: &BundleSpec, components: Vec<Expr>) -> Result<Self, FormError> {
        if components.len() != bundle.fiber_dim() {
            return Err(FormError::ComponentCount {
                expected: bundle.fiber_dim(),
                got: components.len(),
            });
        }
        for c in &components {
            if c.bundle() != bundle {
                return Err(FormError::BundleMismatch);
            }
        }
        Ok(SourceForm {
            bundle: bundle.clone(),
            components,
        })
    }

    pub fn zero(bundle: &BundleSpec) -> Self {
        SourceForm {
            bundle: bundle.clone(),
            components: vec![Expr::zero(bundle); bundle.fiber_dim()],
        }
    }

    pub fn bundle(&self) -> &BundleSpec {
        &self.bundle
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.components[i]
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Expr::is_zero)
    }

    pub fn has_transcendental(&self) -> bool {
        self.components.iter().any(Expr::has_transcendental)
    }

    pub fn max_jet_order(&self) -> i32 {
        self.components.iter().map(Expr::jet_order).max().unwrap_or(-1)
    }

    /// Embedding into `Q^{1,n}`. In the canonical word order the volume
    /// precedes the contact generator, so `theta^i ^ omega` stores the
    /// coefficient `(-1)^n E_i`.
    pub fn to_form(&self) -> Form {
        let n = self.bundle.base_dim();
        let sign = if n % 2 == 1 {
            BigRational::from_integer((-1).into())
        } else {
            BigRational::one()
        };
        let mut out = Form::zero(&self.bundle);
        for (i, e) in self.components.iter().enumerate() {
            if e.is_zero() {
                continue;
            }
            let mut word: Vec<Generator> = (0..n).map(Generator::Dx).collect();
            word.push(Generator::Theta(JetVar::base(i, n)));
            out.add_term(word, e.scale(&sign));
        }
        out
    }

    /// Inverse of [`SourceForm::to_form`]; rejects forms with differentiated
    /// contact generators or words other than `theta^i ^ omega`.
    pub fn from_form(form: &Form) -> Result<Self, FormError> {
        let bundle = form.bundle().clone();
        let n = bundle.base_dim();
        let sign = if n % 2 == 1 {
            BigRational::from_integer((-1).into())
        } else {
            BigRational::one()
        };
        let mut components = vec![Expr::zero(&bundle); bundle.fiber_dim()];
        for (word, coeff) in form.terms() {
            if word.len() != n + 1 {
                return Err(FormError::NotSourceForm(format!(
                    "term of degree {} found",
                    word.len()
                )));
            }
            let horizontal_ok = word[..n]
                .iter()
                .enumerate()
                .all(|(l, g)| *g == Generator::Dx(l));
            let Generator::Theta(v) = &word[n] else {
                return Err(FormError::NotSourceForm("missing contact factor".into()));
            };
            if !horizontal_ok {
                return Err(FormError::NotSourceForm(
                    "horizontal part is not the volume".into(),
                ));
            }
            if !v.index.is_empty() {
                return Err(FormError::NotSourceForm(format!(
                    "differentiated contact generator theta_{}",
                    v.index
                )));
            }
            components[v.fiber] = coeff.scale(&sign);
        }
        SourceForm::new(&bundle, components)
    }
}

impl fmt::Display for SourceForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (i, e) in self.components.iter().enumerate() {
            if e.is_zero() {
                continue;
            }
            let mut names = vec![format!("th({})", self.bundle.fiber_name(i))];
            names.extend((0..self.bundle.base_dim()).map(|l| format!("d{}", self.bundle.base_name(l))));
            parts.push(display_term(e, &names));
        }
        write!(f, "{}", join_signed(&parts))
    }
}

// ----------------------------------------------------------------------
// The dx/dy coordinate basis
// ----------------------------------------------------------------------

/// Basis 1-form of the coordinate (non-contact) basis.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DyGenerator {
    Dx(usize),
    Dy(JetVar),
}

impl DyGenerator {
    pub fn display_name(&self, bundle: &BundleSpec) -> String {
        match self {
            DyGenerator::Dx(l) => format!("d{}", bundle.base_name(*l)),
            DyGenerator::Dy(v) => {
                if v.index.is_empty() {
                    format!("dy({})", bundle.fiber_name(v.fiber))
                } else {
                    format!(
                        "dy({};{})",
                        bundle.fiber_name(v.fiber),
                        v.index.subscript(bundle)
                    )
                }
            }
        }
    }
}

/// Exterior form over `{dx^lambda, dy^i_Lambda}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyForm {
    bundle: BundleSpec,
    terms: BTreeMap<Vec<DyGenerator>, Expr>,
}

impl DyForm {
    pub fn zero(bundle: &BundleSpec) -> Self {
        DyForm {
            bundle: bundle.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(coeff: Expr) -> Self {
        let mut out = DyForm::zero(coeff.bundle());
        out.add_term(Vec::new(), coeff);
        out
    }

    pub fn generator(bundle: &BundleSpec, g: DyGenerator) -> Self {
        let mut out = DyForm::zero(bundle);
        out.add_term(vec![g], Expr::int(bundle, 1));
        out
    }

    pub fn bundle(&self) -> &BundleSpec {
        &self.bundle
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn add_term(&mut self, word: Vec<DyGenerator>, coeff: Expr) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(word) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + &coeff;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[DyGenerator], &Expr)> {
        self.terms.iter().map(|(w, c)| (w.as_slice(), c))
    }

    pub fn wedge(&self, other: &DyForm) -> Result<DyForm, FormError> {
        if self.bundle != other.bundle {
            return Err(FormError::BundleMismatch);
        }
        let mut out = DyForm::zero(&self.bundle);
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                if let Some((word, neg)) = merge_words(wa, wb) {
                    let c = ca * cb;
                    out.add_term(word, if neg { -&c } else { c });
                }
            }
        }
        Ok(out)
    }

    pub fn scalar_mul(&self, c: &Expr) -> DyForm {
        let mut out = DyForm::zero(&self.bundle);
        for (w, k) in &self.terms {
            out.add_term(w.clone(), k * c);
        }
        out
    }

    /// Textbook exterior differential in the coordinate basis: generators are
    /// closed and coefficients differentiate partially (every jet coordinate
    /// independent). Used as the independent oracle for the contact-basis
    /// differential.
    pub fn exterior_d(&self) -> DyForm {
        let mut out = DyForm::zero(&self.bundle);
        for (word, coeff) in &self.terms {
            // d(coeff) = sum partial-derivatives against dx and dy generators
            for lambda in 0..self.bundle.base_dim() {
                let dc = coeff.partial_base(lambda);
                if dc.is_zero() {
                    continue;
                }
                let mut w = word.clone();
                if let Some(neg) = insert_with_sign(&mut w, DyGenerator::Dx(lambda), 0) {
                    out.add_term(w, if neg { -&dc } else { dc });
                }
            }
            for v in coeff.jet_support() {
                let dc = coeff.partial_jet(&v);
                if dc.is_zero() {
                    continue;
                }
                let mut w = word.clone();
                if let Some(neg) = insert_with_sign(&mut w, DyGenerator::Dy(v), 0) {
                    out.add_term(w, if neg { -&dc } else { dc });
                }
            }
        }
        out
    }

    /// Substitutes `dy^i_Lambda = theta^i_Lambda + y^i_{lambda+Lambda}
    /// dx^lambda` and renormalizes.
    pub fn to_contact(&self) -> Form {
        let bundle = &self.bundle;
        let mut out = Form::zero(bundle);
        for (word, coeff) in &self.terms {
            let mut piece = Form::scalar(coeff.clone());
            for g in word {
                let factor = match g {
                    DyGenerator::Dx(l) => Form::generator(bundle, Generator::Dx(*l)),
                    DyGenerator::Dy(v) => {
                        let mut f = Form::generator(bundle, Generator::Theta(v.clone()));
                        for lambda in 0..bundle.base_dim() {
                            let raised =
                                Expr::jet_var(bundle, v.raise(lambda).expect("index in range"));
                            f = &f
                                + &Form::generator(bundle, Generator::Dx(lambda))
                                    .scalar_mul(&raised);
                        }
                        f
                    }
                };
                piece = piece.wedge(&factor).expect("same bundle");
            }
            out = &out + &piece;
        }
        out
    }

    /// Expands each contact generator as `theta = dy - y dx`; inverse of
    /// [`DyForm::to_contact`].
    pub fn from_contact(form: &Form) -> DyForm {
        let bundle = form.bundle();
        let mut out = DyForm::zero(bundle);
        for (word, coeff) in form.terms() {
            let mut piece = DyForm::scalar(coeff.clone());
            for g in word {
                let factor = match g {
                    Generator::Dx(l) => DyForm::generator(bundle, DyGenerator::Dx(*l)),
                    Generator::Theta(v) => {
                        let mut f = DyForm::generator(bundle, DyGenerator::Dy(v.clone()));
                        for lambda in 0..bundle.base_dim() {
                            let raised =
                                Expr::jet_var(bundle, v.raise(lambda).expect("index in range"));
                            f = &f
                                + &DyForm::generator(bundle, DyGenerator::Dx(lambda))
                                    .scalar_mul(&(-&raised));
                        }
                        f
                    }
                };
                piece = piece.wedge(&factor).expect("same bundle");
            }
            out = &out + &piece;
        }
        out
    }

    /// Horizontalization `h_0`: every `dy^i_Lambda` becomes
    /// `y^i_{lambda+Lambda} dx^lambda` and contact directions disappear.
    pub fn horizontalize(&self) -> Form {
        let bundle = &self.bundle;
        let mut out = Form::zero(bundle);
        for (word, coeff) in &self.terms {
            let mut piece = Form::scalar(coeff.clone());
            for g in word {
                let factor = match g {
                    DyGenerator::Dx(l) => Form::generator(bundle, Generator::Dx(*l)),
                    DyGenerator::Dy(v) => {
                        let mut f = Form::zero(bundle);
                        for lambda in 0..bundle.base_dim() {
                            let raised =
                                Expr::jet_var(bundle, v.raise(lambda).expect("index in range"));
                            f = &f
                                + &Form::generator(bundle, Generator::Dx(lambda))
                                    .scalar_mul(&raised);
                        }
                        f
                    }
                };
                piece = piece.wedge(&factor).expect("same bundle");
            }
            out = &out + &piece;
        }
        out
    }
}

impl Add for &DyForm {
    type Output = DyForm;
    fn add(self, rhs: &DyForm) -> DyForm {
        assert!(self.bundle == rhs.bundle, "forms belong to different bundles");
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }
}

impl Neg for &DyForm {
    type Output = DyForm;
    fn neg(self) -> DyForm {
        DyForm {
            bundle: self.bundle.clone(),
            terms: self.terms.iter().map(|(w, c)| (w.clone(), -c)).collect(),
        }
    }
}

impl Sub for &DyForm {
    type Output = DyForm;
    fn sub(self, rhs: &DyForm) -> DyForm {
        self + &(-rhs)
    }
}

impl fmt::Display for DyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (word, coeff) in &self.terms {
            let names: Vec<String> = word.iter().map(|g| g.display_name(&self.bundle)).collect();
            parts.push(display_term(coeff, &names));
        }
        write!(f, "{}", join_signed(&parts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn b1() -> BundleSpec {
        BundleSpec::new(["x"], ["u"]).unwrap()
    }

    fn b2() -> BundleSpec {
        BundleSpec::new(["t", "x"], ["u"]).unwrap()
    }

    fn theta(b: &BundleSpec, positions: &[usize]) -> Form {
        let mi = MultiIndex::from_positions(b.base_dim(), positions).unwrap();
        Form::generator(b, Generator::theta(0, mi))
    }

    fn dx(b: &BundleSpec, l: usize) -> Form {
        Form::generator(b, Generator::Dx(l))
    }

    #[test]
    fn wedge_antisymmetry() {
        let b = b1();
        let d = dx(&b, 0);
        assert!(d.wedge(&d).unwrap().is_zero());
    }

    #[test]
    fn wedge_graded_anticommutativity() {
        let b = b1();
        let th = theta(&b, &[]);
        let d = dx(&b, 0);
        let a = th.wedge(&d).unwrap();
        let bb = d.wedge(&th).unwrap();
        assert_eq!(a, -&bb);
    }

    #[test]
    fn wedge_bilinear_over_coefficients() {
        let b = b2();
        let u = Expr::fiber_var(&b, 0);
        let u_x = Expr::jet_var(
            &b,
            JetVar::new(0, MultiIndex::from_positions(2, &[1]).unwrap()),
        );
        let a = dx(&b, 1).scalar_mul(&u); // u dx
        let c = dx(&b, 0).scalar_mul(&u_x); // u_x dt
        let w = a.wedge(&c).unwrap();
        // u u_x dx ^ dt = -(u u_x) dt ^ dx
        let expected = dx(&b, 0).wedge(&dx(&b, 1)).unwrap().scalar_mul(&(-&(&u * &u_x)));
        assert_eq!(w, expected);
    }

    #[test]
    fn bidegree_examples() {
        let b = b1();
        let th_x_dx = theta(&b, &[0]).wedge(&dx(&b, 0)).unwrap();
        assert_eq!(
            th_x_dx.bidegrees().into_iter().collect::<Vec<_>>(),
            vec![(1, 1)]
        );
        let mixed = &dx(&b, 0) + &theta(&b, &[]).wedge(&theta(&b, &[0])).unwrap();
        assert_eq!(
            mixed.bidegrees().into_iter().collect::<Vec<_>>(),
            vec![(0, 1), (2, 0)]
        );
        assert!(Form::zero(&b).bidegrees().is_empty());
    }

    #[test]
    fn projections() {
        let b = b2();
        let omega = Form::volume(&b);
        let phi = &theta(&b, &[]).wedge(&dx(&b, 0)).unwrap() + &omega;
        assert_eq!(phi.project_contact(0), omega);
        // completeness of the splitting
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let psi = crate::random::random_form(&mut rng, &b, 1, 1, 2, 2, 3);
        let mut sum = Form::zero(&b);
        for k in 0..=4 {
            sum = &sum + &psi.project_contact(k);
        }
        assert_eq!(sum, psi);
        assert!(omega.project_horizontal(1).unwrap().is_zero());
        assert!(matches!(
            omega.project_horizontal(3),
            Err(FormError::HorizontalDegreeTooLarge { .. })
        ));
    }

    #[test]
    fn contract_theta_signs() {
        let b = b1();
        let th_x = theta(&b, &[0]);
        let d = dx(&b, 0);
        let mi_x = MultiIndex::from_positions(1, &[0]).unwrap();
        // theta_x ^ dx: contraction from the first slot
        let w = th_x.wedge(&d).unwrap();
        assert_eq!(w.contract_theta(0, &mi_x), d);
        // dx ^ theta_x = -(theta_x ^ dx): the value flips with the slot
        let w2 = d.wedge(&th_x).unwrap();
        assert_eq!(w2.contract_theta(0, &mi_x), -&d);
        // no contact factor
        let b2 = b2();
        let vol = Form::volume(&b2);
        assert!(vol
            .contract_theta(0, &MultiIndex::empty(2))
            .is_zero());
    }

    #[test]
    fn contraction_is_an_antiderivation() {
        let b = b2();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mi = MultiIndex::from_positions(2, &[1]).unwrap();
        for _ in 0..25 {
            let ka = rng.gen_range(0..=1usize);
            let sa = rng.gen_range(0..=1usize);
            let a = crate::random::random_form(&mut rng, &b, ka, sa, 2, 2, 2);
            let sc = rng.gen_range(0..=1);
            let c = crate::random::random_form(&mut rng, &b, 1, sc, 2, 2, 2);
            let w = a.wedge(&c).unwrap();
            let lhs = w.contract_theta(0, &mi);
            let deg_a = ka + sa;
            let ia = a.contract_theta(0, &mi).wedge(&c).unwrap();
            let ib = a.wedge(&c.contract_theta(0, &mi)).unwrap();
            let rhs = if deg_a % 2 == 1 { &ia - &ib } else { &ia + &ib };
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn words_beyond_base_dimension_vanish() {
        let b = b1();
        let w = dx(&b, 0).wedge(&dx(&b, 0)).unwrap();
        assert!(w.is_zero());
    }

    #[test]
    fn horizontalize_examples() {
        let b = b1();
        // h0(dy) = u_x dx
        let dy = DyForm::generator(&b, DyGenerator::Dy(JetVar::base(0, 1)));
        let u_x = Expr::jet_var(&b, JetVar::new(0, MultiIndex::from_positions(1, &[0]).unwrap()));
        assert_eq!(dy.horizontalize(), dx(&b, 0).scalar_mul(&u_x));
        // h0(dx) = dx
        let dxf = DyForm::generator(&b, DyGenerator::Dx(0));
        assert_eq!(dxf.horizontalize(), dx(&b, 0));
        // mechanics: h0(F_t dt + F_u dy) = (F_t + F_u u_t) dt on base (t)
        let bt = BundleSpec::new(["t"], ["u"]).unwrap();
        let t = Expr::base_var(&bt, 0);
        let u = Expr::fiber_var(&bt, 0);
        let u_t = Expr::jet_var(&bt, JetVar::new(0, MultiIndex::from_positions(1, &[0]).unwrap()));
        // F = t u^2: F_t = u^2, F_u = 2 t u
        let f_t = &u * &u;
        let f_u = &(&Expr::int(&bt, 2) * &t) * &u;
        let phi = &DyForm::generator(&bt, DyGenerator::Dx(0)).scalar_mul(&f_t)
            + &DyForm::generator(&bt, DyGenerator::Dy(JetVar::base(0, 1))).scalar_mul(&f_u);
        let expected = Form::generator(&bt, Generator::Dx(0))
            .scalar_mul(&(&f_t + &(&f_u * &u_t)));
        assert_eq!(phi.horizontalize(), expected);
    }

    #[test]
    fn to_contact_examples() {
        let b = b1();
        let u_x = Expr::jet_var(&b, JetVar::new(0, MultiIndex::from_positions(1, &[0]).unwrap()));
        // dy = theta + u_x dx
        let dy = DyForm::generator(&b, DyGenerator::Dy(JetVar::base(0, 1)));
        let expected = &theta(&b, &[]) + &dx(&b, 0).scalar_mul(&u_x);
        assert_eq!(dy.to_contact(), expected);
        // dy_x ^ dx = theta_x ^ dx (the u_xx dx ^ dx term dies)
        let dy_x = DyForm::generator(
            &b,
            DyGenerator::Dy(JetVar::new(0, MultiIndex::from_positions(1, &[0]).unwrap())),
        );
        let dxdy = DyForm::generator(&b, DyGenerator::Dx(0));
        let lhs = dy_x.wedge(&dxdy).unwrap().to_contact();
        assert_eq!(lhs, theta(&b, &[0]).wedge(&dx(&b, 0)).unwrap());
        // dx maps to dx
        assert_eq!(dxdy.to_contact(), dx(&b, 0));
    }

    #[test]
    fn contact_round_trip() {
        let b = b2();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let phi = crate::random::random_dy_form(&mut rng, &b, 2, 2, 2, 3);
            assert_eq!(DyForm::from_contact(&phi.to_contact()), phi);
            let psi = crate::random::random_form(&mut rng, &b, 1, 1, 2, 2, 3);
            assert_eq!(DyForm::from_contact(&psi).to_contact(), psi);
        }
    }

    #[test]
    fn horizontalize_agrees_with_projection_route() {
        let b = b2();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let phi = crate::random::random_dy_form(&mut rng, &b, 2, 2, 2, 3);
            assert_eq!(phi.horizontalize(), phi.to_contact().project_contact(0));
        }
    }

    #[test]
    fn source_form_round_trip() {
        let b = b2();
        let u_x = Expr::jet_var(&b, JetVar::new(0, MultiIndex::from_positions(2, &[1]).unwrap()));
        let src = SourceForm::new(&b, vec![-&(&u_x * &u_x)]).unwrap();
        let form = src.to_form();
        assert_eq!(SourceForm::from_form(&form).unwrap(), src);
        assert_eq!(form.pure_bidegree(), Some((1, 2)));
        // a differentiated contact factor is rejected
        let bad = theta(&b, &[0]).wedge(&Form::volume(&b)).unwrap();
        assert!(SourceForm::from_form(&bad).is_err());
    }

    #[test]
    fn display_round_conventions() {
        let b = b1();
        let u_xx = Expr::jet_var(&b, JetVar::new(0, MultiIndex::from_positions(1, &[0, 0]).unwrap()));
        let src = SourceForm::new(&b, vec![-&u_xx]).unwrap();
        assert_eq!(src.to_string(), "-u_xx*th(u)^dx");
        assert_eq!(src.to_form().to_string(), "-u_xx*th(u)^dx");
        assert_eq!(Form::zero(&b).to_string(), "0");
    }
}
