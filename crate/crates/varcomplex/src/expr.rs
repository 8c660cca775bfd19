//! Exact symbolic scalars on jet space.
//!
//! Representation: an [`Expr`] is a fully expanded sum of monomials with
//! `BigRational` coefficients. A monomial is a power product of atoms, where
//! an atom is a base coordinate `x^lambda`, a jet coordinate `y^i_Lambda`, or
//! a unary function `sin`/`cos`/`exp` applied to another canonical `Expr`.
//! Terms live in a `BTreeMap`, so equal expressions have identical
//! representations and zero-testing is structural.
//!
//! For differential polynomials (no function atoms) the normal form is a
//! decision procedure for equality. Function atoms get table derivatives and
//! constant folding of `sin(0)`, `cos(0)`, `exp(0)` only, so equality there
//! is sound but incomplete; [`Expr::has_transcendental`] lets callers flag
//! such verdicts.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::bundle::{BundleSpec, JetVar, MultiIndex};

/// Unary functions supported outside the polynomial fragment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnaryFn {
    Sin,
    Cos,
    Exp,
}

impl UnaryFn {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Exp => "exp",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sin" => Some(UnaryFn::Sin),
            "cos" => Some(UnaryFn::Cos),
            "exp" => Some(UnaryFn::Exp),
            _ => None,
        }
    }
}

/// A multiplicative atom. The variable order fixed here (base coordinates in
/// declaration order, then jet coordinates by fibre index and graded-lex
/// multi-index, then function atoms) is the total order behind every
/// canonical form in the crate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Base(usize),
    Jet(JetVar),
    Apply(UnaryFn, Arc<Expr>),
}

/// Power product of atoms; exponents are positive.
#[derive(Clone, Debug, PartialEq, Eq, Default, Hash)]
pub struct Monomial {
    powers: BTreeMap<Atom, u32>,
}

impl Monomial {
    fn one() -> Self {
        Monomial::default()
    }

    fn atom(a: Atom) -> Self {
        let mut powers = BTreeMap::new();
        powers.insert(a, 1);
        Monomial { powers }
    }

    pub fn is_one(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.powers.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Atom, u32)> {
        self.powers.iter().map(|(a, &p)| (a, p))
    }

    /// Degree counted over jet atoms only (fibre coordinates included).
    pub fn jet_degree(&self) -> u32 {
        self.powers
            .iter()
            .filter(|(a, _)| matches!(a, Atom::Jet(_)))
            .map(|(_, &p)| p)
            .sum()
    }

    /// Degree counted over base atoms only.
    pub fn base_degree(&self) -> u32 {
        self.powers
            .iter()
            .filter(|(a, _)| matches!(a, Atom::Base(_)))
            .map(|(_, &p)| p)
            .sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut powers = self.powers.clone();
        for (a, &p) in &other.powers {
            *powers.entry(a.clone()).or_insert(0) += p;
        }
        Monomial { powers }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        // graded, then lexicographic on the (atom, power) sequence
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.powers.cmp(&other.powers))
    }
}

/// Exact symbolic scalar over one bundle.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr {
    bundle: BundleSpec,
    terms: BTreeMap<Monomial, BigRational>,
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl Expr {
    pub fn zero(bundle: &BundleSpec) -> Self {
        Expr {
            bundle: bundle.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(bundle: &BundleSpec, c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Expr {
            bundle: bundle.clone(),
            terms,
        }
    }

    pub fn int(bundle: &BundleSpec, k: i64) -> Self {
        Expr::constant(bundle, BigRational::from_integer(BigInt::from(k)))
    }

    pub fn rational(bundle: &BundleSpec, num: i64, den: i64) -> Self {
        Expr::constant(bundle, rat(num, den))
    }

    /// The base coordinate `x^lambda`. Panics if the index is out of range.
    pub fn base_var(bundle: &BundleSpec, lambda: usize) -> Self {
        assert!(lambda < bundle.base_dim(), "base index out of range");
        Expr::from_monomial(bundle, Monomial::atom(Atom::Base(lambda)), BigRational::one())
    }

    /// The jet coordinate `y^i_Lambda`. Panics if indices are out of range.
    pub fn jet_var(bundle: &BundleSpec, v: JetVar) -> Self {
        assert!(v.fiber < bundle.fiber_dim(), "fiber index out of range");
        assert_eq!(v.index.base_dim(), bundle.base_dim(), "multi-index dimension mismatch");
        Expr::from_monomial(bundle, Monomial::atom(Atom::Jet(v)), BigRational::one())
    }

    /// The fibre coordinate `y^i`.
    pub fn fiber_var(bundle: &BundleSpec, i: usize) -> Self {
        Expr::jet_var(bundle, JetVar::base(i, bundle.base_dim()))
    }

    fn from_monomial(bundle: &BundleSpec, m: Monomial, c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Expr {
            bundle: bundle.clone(),
            terms,
        }
    }

    /// Single-monomial expression from parts already in canonical form.
    pub(crate) fn from_parts(bundle: &BundleSpec, m: Monomial, c: BigRational) -> Self {
        Expr::from_monomial(bundle, m, c)
    }

    /// Applies `sin`, `cos` or `exp`; folds the constant-zero argument.
    pub fn apply(f: UnaryFn, arg: &Expr) -> Self {
        if arg.is_zero() {
            return match f {
                UnaryFn::Sin => Expr::zero(&arg.bundle),
                UnaryFn::Cos | UnaryFn::Exp => Expr::int(&arg.bundle, 1),
            };
        }
        Expr::from_monomial(
            &arg.bundle.clone(),
            Monomial::atom(Atom::Apply(f, Arc::new(arg.clone()))),
            BigRational::one(),
        )
    }

    pub fn bundle(&self) -> &BundleSpec {
        &self.bundle
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&Monomial::one())
                .map(|c| c.is_one())
                .unwrap_or(false)
    }

    /// `Some(c)` when the expression is the constant `c` (including zero).
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// True if any function atom occurs anywhere in the expression.
    pub fn has_transcendental(&self) -> bool {
        self.terms
            .keys()
            .any(|m| m.powers.keys().any(|a| matches!(a, Atom::Apply(..))))
    }

    /// Re-imposes the canonical-form invariants (no zero coefficients, no
    /// zero exponents). All constructors and operators already produce
    /// canonical expressions, so this returns an equal value; it exists so
    /// equality-by-normal-form is an explicit operation.
    pub fn normalize(&self) -> Expr {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            if c.is_zero() {
                continue;
            }
            let powers: BTreeMap<Atom, u32> = m
                .powers
                .iter()
                .filter(|(_, &p)| p > 0)
                .map(|(a, &p)| (a.clone(), p))
                .collect();
            let key = Monomial { powers };
            let entry = terms.entry(key).or_insert_with(BigRational::zero);
            *entry += c;
        }
        terms.retain(|_, c: &mut BigRational| !c.is_zero());
        Expr {
            bundle: self.bundle.clone(),
            terms,
        }
    }

    pub fn scale(&self, c: &BigRational) -> Expr {
        if c.is_zero() {
            return Expr::zero(&self.bundle);
        }
        Expr {
            bundle: self.bundle.clone(),
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    /// Integer power. Negative exponents are only defined for nonzero
    /// constants; anything else panics.
    pub fn pow(&self, exp: i64) -> Expr {
        if exp < 0 {
            let c = self
                .as_constant()
                .filter(|c| !c.is_zero())
                .expect("negative power of a non-constant expression");
            return Expr::constant(&self.bundle, c.pow(exp as i32));
        }
        let mut result = Expr::int(&self.bundle, 1);
        let mut base = self.clone();
        let mut e = exp as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    // ------------------------------------------------------------------
    // Derivatives
    // ------------------------------------------------------------------

    /// Derivative of a single atom with respect to a coordinate, treating all
    /// jet coordinates as independent.
    fn atom_partial(&self, atom: &Atom, base: Option<usize>, jet: Option<&JetVar>) -> Expr {
        match atom {
            Atom::Base(mu) => match base {
                Some(lambda) if *mu == lambda => Expr::int(&self.bundle, 1),
                _ => Expr::zero(&self.bundle),
            },
            Atom::Jet(v) => match jet {
                Some(target) if v == target => Expr::int(&self.bundle, 1),
                _ => Expr::zero(&self.bundle),
            },
            Atom::Apply(f, arg) => {
                let inner = arg.partial_impl(base, jet);
                if inner.is_zero() {
                    return inner;
                }
                let outer = match f {
                    UnaryFn::Sin => Expr::apply(UnaryFn::Cos, arg),
                    UnaryFn::Cos => -&Expr::apply(UnaryFn::Sin, arg),
                    UnaryFn::Exp => Expr::apply(UnaryFn::Exp, arg),
                };
                &outer * &inner
            }
        }
    }

    fn partial_impl(&self, base: Option<usize>, jet: Option<&JetVar>) -> Expr {
        let mut out = Expr::zero(&self.bundle);
        for (m, c) in &self.terms {
            for (atom, &p) in &m.powers {
                let da = self.atom_partial(atom, base, jet);
                if da.is_zero() {
                    continue;
                }
                // c * p * atom^(p-1) * (rest of the monomial) * da
                let mut rest = Monomial {
                    powers: m.powers.clone(),
                };
                if p == 1 {
                    rest.powers.remove(atom);
                } else {
                    rest.powers.insert(atom.clone(), p - 1);
                }
                let coeff = c * BigRational::from_integer(BigInt::from(p));
                let piece = Expr::from_monomial(&self.bundle, rest, coeff);
                out = &out + &(&piece * &da);
            }
        }
        out
    }

    /// Partial derivative with respect to the base coordinate `x^lambda`.
    pub fn partial_base(&self, lambda: usize) -> Expr {
        assert!(lambda < self.bundle.base_dim(), "base index out of range");
        self.partial_impl(Some(lambda), None)
    }

    /// Partial derivative with respect to the jet coordinate `y^i_Lambda`.
    pub fn partial_jet(&self, v: &JetVar) -> Expr {
        assert!(v.fiber < self.bundle.fiber_dim(), "fiber index out of range");
        self.partial_impl(None, Some(v))
    }

    /// Jet coordinates occurring in the expression, including inside function
    /// arguments.
    pub fn jet_support(&self) -> BTreeSet<JetVar> {
        let mut set = BTreeSet::new();
        self.collect_jets(&mut set);
        set
    }

    fn collect_jets(&self, set: &mut BTreeSet<JetVar>) {
        for m in self.terms.keys() {
            for atom in m.powers.keys() {
                match atom {
                    Atom::Jet(v) => {
                        set.insert(v.clone());
                    }
                    Atom::Apply(_, arg) => arg.collect_jets(set),
                    Atom::Base(_) => {}
                }
            }
        }
    }

    fn has_any_jet(&self) -> bool {
        self.terms.keys().any(|m| {
            m.powers.keys().any(|a| match a {
                Atom::Jet(_) => true,
                Atom::Apply(_, arg) => arg.has_any_jet(),
                Atom::Base(_) => false,
            })
        })
    }

    /// Total derivative `d_lambda = partial_lambda + sum y^i_{lambda+Lambda}
    /// partial^Lambda_i`, the sum running over the finite jet support.
    pub fn total_derivative(&self, lambda: usize) -> Expr {
        let mut out = self.partial_base(lambda);
        for v in self.jet_support() {
            let dv = self.partial_jet(&v);
            if dv.is_zero() {
                continue;
            }
            let raised = Expr::jet_var(&self.bundle, v.raise(lambda).expect("index in range"));
            out = &out + &(&raised * &dv);
        }
        out
    }

    /// Iterated total derivative `d_Lambda`; the result is independent of the
    /// order in which the directions are applied.
    pub fn total_derivative_iterated(&self, index: &MultiIndex) -> Expr {
        let mut out = self.clone();
        for lambda in index.positions() {
            out = out.total_derivative(lambda);
        }
        out
    }

    /// Maximal `|Lambda|` over the jet coordinates present; 0 when only
    /// undifferentiated fibre coordinates occur and -1 for pure base
    /// functions (pull-backs from the base).
    pub fn jet_order(&self) -> i32 {
        let support = self.jet_support();
        support
            .iter()
            .map(|v| v.index.order() as i32)
            .max()
            .unwrap_or(-1)
    }

    /// Rewrites every jet coordinate through `f`, leaving base coordinates
    /// fixed. Function atoms are rewritten inside their arguments.
    pub fn map_jet_vars(&self, f: &impl Fn(&JetVar) -> Expr) -> Expr {
        let mut out = Expr::zero(&self.bundle);
        for (m, c) in &self.terms {
            let mut term = Expr::constant(&self.bundle, c.clone());
            for (atom, &p) in &m.powers {
                let factor = match atom {
                    Atom::Base(lambda) => Expr::base_var(&self.bundle, *lambda),
                    Atom::Jet(v) => f(v),
                    Atom::Apply(g, arg) => Expr::apply(*g, &arg.map_jet_vars(f)),
                };
                term = &term * &factor.pow(p as i64);
            }
            out = &out + &term;
        }
        out
    }

    /// Replaces every jet coordinate `y^i_Lambda` by `t * y^i_Lambda` for an
    /// exact rational `t`.
    pub fn substitute_scaling(&self, t: &BigRational) -> Expr {
        let tc = Expr::constant(&self.bundle, t.clone());
        self.map_jet_vars(&|v| &tc * &Expr::jet_var(&self.bundle, v.clone()))
    }

    /// Decomposition by homogeneous degree in the jet coordinates, i.e. the
    /// coefficients of `t^d` after the formal scaling `y -> t y`. `None` when
    /// a jet coordinate sits inside a function argument, where no finite
    /// decomposition exists.
    pub fn jet_homogeneous_parts(&self) -> Option<BTreeMap<u32, Expr>> {
        let mut parts: BTreeMap<u32, Expr> = BTreeMap::new();
        for (m, c) in &self.terms {
            for atom in m.powers.keys() {
                if let Atom::Apply(_, arg) = atom {
                    if arg.has_any_jet() {
                        return None;
                    }
                }
            }
            let d = m.jet_degree();
            let piece = Expr::from_monomial(&self.bundle, m.clone(), c.clone());
            let entry = parts.entry(d).or_insert_with(|| Expr::zero(&self.bundle));
            *entry = &*entry + &piece;
        }
        Some(parts)
    }

    /// Largest total degree over the monomials (0 for constants and zero).
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn max_jet_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.jet_degree()).max().unwrap_or(0)
    }

    pub fn max_base_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.base_degree()).max().unwrap_or(0)
    }

    /// Numeric evaluation; used by the section oracles in the test suite.
    pub fn eval_f64(&self, base_vals: &[f64], jet_val: &impl Fn(&JetVar) -> f64) -> f64 {
        let mut sum = 0.0;
        for (m, c) in &self.terms {
            let mut prod = c.to_f64().expect("rational fits in f64");
            for (atom, &p) in &m.powers {
                let v = match atom {
                    Atom::Base(lambda) => base_vals[*lambda],
                    Atom::Jet(v) => jet_val(v),
                    Atom::Apply(f, arg) => {
                        let x = arg.eval_f64(base_vals, jet_val);
                        match f {
                            UnaryFn::Sin => x.sin(),
                            UnaryFn::Cos => x.cos(),
                            UnaryFn::Exp => x.exp(),
                        }
                    }
                };
                prod *= v.powi(p as i32);
            }
            sum += prod;
        }
        sum
    }

    fn assert_same_bundle(&self, other: &Expr) {
        assert!(
            self.bundle == other.bundle,
            "expressions belong to different bundles"
        );
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        self.assert_same_bundle(rhs);
        let mut terms = self.terms.clone();
        for (m, c) in &rhs.terms {
            let entry = terms.entry(m.clone()).or_insert_with(BigRational::zero);
            *entry += c;
            if entry.is_zero() {
                terms.remove(m);
            }
        }
        Expr {
            bundle: self.bundle.clone(),
            terms,
        }
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self + &(-rhs)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr {
            bundle: self.bundle.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        self.assert_same_bundle(rhs);
        let mut terms: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let m = ma.mul(mb);
                let entry = terms.entry(m).or_insert_with(BigRational::zero);
                *entry += ca * cb;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Expr {
            bundle: self.bundle.clone(),
            terms,
        }
    }
}

// ----------------------------------------------------------------------
// Rendering (the text form is the CLI grammar and must re-parse)
// ----------------------------------------------------------------------

fn rational_string(c: &BigRational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl Expr {
    fn atom_string(&self, atom: &Atom) -> String {
        match atom {
            Atom::Base(lambda) => self.bundle.base_name(*lambda).to_string(),
            Atom::Jet(v) => v.display_name(&self.bundle),
            Atom::Apply(f, arg) => format!("{}({})", f.name(), arg),
        }
    }

    fn monomial_string(&self, m: &Monomial) -> String {
        let mut parts = Vec::new();
        for (atom, p) in m.iter() {
            let a = self.atom_string(atom);
            if p == 1 {
                parts.push(a);
            } else {
                parts.push(format!("{a}^{p}"));
            }
        }
        parts.join("*")
    }

    /// `(sign, magnitude-string)` per term, in canonical order.
    pub(crate) fn signed_term_strings(&self) -> Vec<(bool, String)> {
        let mut out = Vec::new();
        for (m, c) in &self.terms {
            let neg = c.is_negative();
            let mag = c.abs();
            let s = if m.is_one() {
                rational_string(&mag)
            } else if mag.is_one() {
                self.monomial_string(m)
            } else {
                format!("{}*{}", rational_string(&mag), self.monomial_string(m))
            };
            out.push((neg, s));
        }
        out
    }
}

pub(crate) fn join_signed(terms: &[(bool, String)]) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut s = String::new();
    for (k, (neg, t)) in terms.iter().enumerate() {
        if k == 0 {
            if *neg {
                s.push('-');
            }
        } else {
            s.push_str(if *neg { " - " } else { " + " });
        }
        s.push_str(t);
    }
    s
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", join_signed(&self.signed_term_strings()))
    }
}
