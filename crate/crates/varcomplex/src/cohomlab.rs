//! Finite truncations of the bicomplex as exact linear maps over the
//! rationals, Betti-number reports, the exactness check at `E_1`, and the
//! randomized operator-identity suite.
//!
//! The truncation convention: cohomology at a position is
//! `ker(op on the domain truncated at jet order r)` modulo
//! `im(op from the domain truncated at r-1)` for the order-raising `d_H`
//! (same `r` for the order-preserving `d_V`), which keeps the quotient
//! well-defined and stable as `r` grows.

use std::fmt;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bundle::BundleSpec;
use crate::forms::{Form, FormError, SourceForm};
use crate::linalg::{QMatrix, SparseCol};

#[derive(Debug, Error)]
pub enum CohomError {
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("truncation too small: image term `{term}` falls outside the codomain basis")]
    TruncationTooSmall { term: String },
    #[error("property suite needs at least one case")]
    NoCases,
}

/// Jet-order and polynomial-degree bounds cutting a finite-dimensional slice
/// out of the bicomplex: jet variables up to `max_jet_order`, monomials of
/// degree at most `max_poly_degree` in the jet variables and
/// `base_poly_degree` in the base variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruncationSpec {
    pub max_jet_order: u32,
    pub max_poly_degree: u32,
    pub base_poly_degree: u32,
}

impl TruncationSpec {
    pub fn new(max_jet_order: u32, max_poly_degree: u32, base_poly_degree: u32) -> Self {
        TruncationSpec {
            max_jet_order,
            max_poly_degree,
            base_poly_degree,
        }
    }

    fn raise_order(&self, by: u32) -> Self {
        TruncationSpec {
            max_jet_order: self.max_jet_order + by,
            ..*self
        }
    }

    fn lower_order(&self) -> Option<Self> {
        self.max_jet_order.checked_sub(1).map(|r| TruncationSpec {
            max_jet_order: r,
            ..*self
        })
    }
}

pub(crate) mod basis {
    //! Deterministic enumeration of truncated bases and the coordinate
    //! bookkeeping shared with the antiderivative solver.

    use std::collections::BTreeMap;

    use num_rational::BigRational;
    use num_traits::Zero;

    use crate::bundle::{BundleSpec, JetVar, MultiIndex};
    use crate::expr::{Expr, Monomial};
    use crate::forms::{Form, FormError, Generator};

    /// All multi-indices over `n` directions of order up to `max_order`,
    /// graded-lex sorted.
    pub(crate) fn multi_indices_up_to(n: usize, max_order: u32) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::empty(n)];
        let mut frontier = vec![MultiIndex::empty(n)];
        for _ in 0..max_order {
            let mut next = Vec::new();
            for mi in &frontier {
                // extend only by directions >= the largest one present to
                // avoid duplicates
                let start = mi.largest_direction().unwrap_or(0);
                for lambda in start..n {
                    next.push(mi.add(lambda).expect("index in range"));
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out.sort();
        out.dedup();
        out
    }

    pub(crate) fn jet_vars_up_to(bundle: &BundleSpec, max_order: u32) -> Vec<JetVar> {
        let mut out = Vec::new();
        for fiber in 0..bundle.fiber_dim() {
            for mi in multi_indices_up_to(bundle.base_dim(), max_order) {
                out.push(JetVar::new(fiber, mi));
            }
        }
        out.sort();
        out
    }

    #[derive(Clone, Copy)]
    struct DegreeBudget {
        base: u32,
        jet: u32,
        total: Option<u32>,
    }

    impl DegreeBudget {
        fn spend(self, is_base: bool, power: u32) -> DegreeBudget {
            DegreeBudget {
                base: if is_base { self.base - power } else { self.base },
                jet: if is_base { self.jet } else { self.jet - power },
                total: self.total.map(|t| t - power),
            }
        }

        fn cap(self, is_base: bool) -> u32 {
            let budget = if is_base { self.base } else { self.jet };
            match self.total {
                Some(t) => budget.min(t),
                None => budget,
            }
        }
    }

    /// Monomials as single-term expressions with unit coefficient, within
    /// the separate jet/base degree bounds and an optional total bound.
    pub(crate) fn enumerate_monomials(
        bundle: &BundleSpec,
        max_jet_order: u32,
        jet_degree: u32,
        base_degree: u32,
        total_degree: Option<u32>,
    ) -> Vec<Expr> {
        let jets = jet_vars_up_to(bundle, max_jet_order);
        let mut out = Vec::new();
        let one = Expr::int(bundle, 1);
        // exponents over base variables first, then jet variables
        fn recurse(
            bundle: &BundleSpec,
            jets: &[JetVar],
            var: usize,
            budget: DegreeBudget,
            current: &Expr,
            out: &mut Vec<Expr>,
        ) {
            let n = bundle.base_dim();
            if var == n + jets.len() {
                out.push(current.clone());
                return;
            }
            let (is_base, factor) = if var < n {
                (true, Expr::base_var(bundle, var))
            } else {
                (false, Expr::jet_var(bundle, jets[var - n].clone()))
            };
            let mut power_expr = current.clone();
            for p in 0..=budget.cap(is_base) {
                if p > 0 {
                    power_expr = &power_expr * &factor;
                }
                recurse(bundle, jets, var + 1, budget.spend(is_base, p), &power_expr, out);
            }
        }
        let budget = DegreeBudget {
            base: base_degree,
            jet: jet_degree,
            total: total_degree,
        };
        recurse(bundle, &jets, 0, budget, &one, &mut out);
        out.sort();
        out.dedup();
        out
    }

    fn combinations<T: Clone>(items: &[T], choose: usize) -> Vec<Vec<T>> {
        if choose == 0 {
            return vec![Vec::new()];
        }
        if choose > items.len() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for (idx, item) in items.iter().enumerate() {
            for mut rest in combinations(&items[idx + 1..], choose - 1) {
                rest.insert(0, item.clone());
                out.push(rest);
            }
        }
        out
    }

    /// The ordered basis of `(k, s)`-forms within the bounds: monomial
    /// coefficients times wedge words of `k` contact and `s` horizontal
    /// generators.
    pub(crate) fn enumerate_forms(
        bundle: &BundleSpec,
        contact: usize,
        horizontal: usize,
        max_jet_order: u32,
        jet_degree: u32,
        base_degree: u32,
        total_degree: Option<u32>,
    ) -> Result<Vec<Form>, FormError> {
        let n = bundle.base_dim();
        if horizontal > n {
            return Err(FormError::HorizontalDegreeTooLarge {
                degree: horizontal,
                base_dim: n,
            });
        }
        let dx_choices = combinations(&(0..n).collect::<Vec<_>>(), horizontal);
        let theta_gens: Vec<Generator> = jet_vars_up_to(bundle, max_jet_order)
            .into_iter()
            .map(Generator::Theta)
            .collect();
        let theta_choices = combinations(&theta_gens, contact);
        let monomials =
            enumerate_monomials(bundle, max_jet_order, jet_degree, base_degree, total_degree);
        let mut out = Vec::new();
        for dxs in &dx_choices {
            for thetas in &theta_choices {
                let mut word: Vec<Generator> = dxs.iter().map(|l| Generator::Dx(*l)).collect();
                word.extend(thetas.iter().cloned());
                for mono in &monomials {
                    let mut f = Form::zero(bundle);
                    f.add_term(word.clone(), mono.clone());
                    out.push(f);
                }
            }
        }
        Ok(out)
    }

    /// Source-form basis: one fibre component at a time over the monomial
    /// basis.
    pub(crate) fn enumerate_sources(
        bundle: &BundleSpec,
        max_jet_order: u32,
        jet_degree: u32,
        base_degree: u32,
    ) -> Vec<SourceFormBasis> {
        let monomials = enumerate_monomials(bundle, max_jet_order, jet_degree, base_degree, None);
        let mut out = Vec::new();
        for fiber in 0..bundle.fiber_dim() {
            for mono in &monomials {
                out.push(SourceFormBasis {
                    fiber,
                    monomial: mono.clone(),
                });
            }
        }
        out
    }

    #[derive(Clone, Debug)]
    pub(crate) struct SourceFormBasis {
        pub fiber: usize,
        pub monomial: Expr,
    }

    impl SourceFormBasis {
        pub(crate) fn to_source(&self, bundle: &BundleSpec) -> crate::forms::SourceForm {
            let mut components = vec![Expr::zero(bundle); bundle.fiber_dim()];
            components[self.fiber] = self.monomial.clone();
            crate::forms::SourceForm::new(bundle, components).expect("component count matches")
        }
    }

    /// Index of `(word, monomial)` coordinates for turning forms into exact
    /// sparse vectors and back.
    #[derive(Default)]
    pub(crate) struct KeyIndex {
        map: BTreeMap<(Vec<Generator>, Monomial), usize>,
        keys: Vec<(Vec<Generator>, Monomial)>,
    }

    impl KeyIndex {
        pub(crate) fn len(&self) -> usize {
            self.keys.len()
        }

        pub(crate) fn insert_form(&mut self, form: &Form) {
            for (word, coeff) in form.terms() {
                for (mono, _) in coeff.terms() {
                    let key = (word.to_vec(), mono.clone());
                    if !self.map.contains_key(&key) {
                        self.map.insert(key.clone(), self.keys.len());
                        self.keys.push(key);
                    }
                }
            }
        }

        pub(crate) fn try_coordinates(&self, form: &Form) -> Result<super::SparseCol, String> {
            let mut entries = Vec::new();
            for (word, coeff) in form.terms() {
                for (mono, c) in coeff.terms() {
                    let key = (word.to_vec(), mono.clone());
                    match self.map.get(&key) {
                        Some(idx) => entries.push((*idx, c.clone())),
                        None => {
                            let probe =
                                Expr::from_parts(form.bundle(), mono.clone(), c.clone());
                            return Err(format!("{probe} on word of length {}", word.len()));
                        }
                    }
                }
            }
            entries.sort_by_key(|(idx, _)| *idx);
            Ok(entries)
        }

        pub(crate) fn coordinates(&self, form: &Form) -> super::SparseCol {
            self.try_coordinates(form)
                .expect("all keys were registered beforehand")
        }

        pub(crate) fn dense_coordinates(&self, form: &Form) -> Vec<BigRational> {
            let mut out = vec![BigRational::zero(); self.keys.len()];
            for (idx, c) in self.coordinates(form) {
                out[idx] = c;
            }
            out
        }

        pub(crate) fn form_from_dense(
            &self,
            bundle: &BundleSpec,
            coords: &[BigRational],
        ) -> Form {
            let mut out = Form::zero(bundle);
            for (idx, c) in coords.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let (word, mono) = &self.keys[idx];
                out.add_term(word.clone(), Expr::from_parts(bundle, mono.clone(), c.clone()));
            }
            out
        }
    }
}

/// The deterministic ordered basis of `(k, s)`-forms within a truncation.
pub fn enumerate_basis(
    bundle: &BundleSpec,
    spec: &TruncationSpec,
    contact: usize,
    horizontal: usize,
) -> Result<Vec<Form>, CohomError> {
    Ok(basis::enumerate_forms(
        bundle,
        contact,
        horizontal,
        spec.max_jet_order,
        spec.max_poly_degree,
        spec.base_poly_degree,
        None,
    )?)
}

/// Which truncated operator a matrix represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BicomplexOp {
    DH,
    DV,
    Delta,
}

impl BicomplexOp {
    pub fn name(self) -> &'static str {
        match self {
            BicomplexOp::DH => "dH",
            BicomplexOp::DV => "dV",
            BicomplexOp::Delta => "delta",
        }
    }
}

/// Domain position for [`operator_matrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixPosition {
    /// `d_H` or `d_V` out of `(contact, horizontal)`.
    Bidegree { contact: usize, horizontal: usize },
    /// `delta` as the Euler-Lagrange map out of `(0, n)`.
    Lagrangian,
    /// `delta` as the Helmholtz map out of `E_1`.
    SourceLevel,
}

/// A truncated bicomplex operator as an exact sparse matrix together with
/// its ordered domain basis and codomain coordinates.
pub struct OperatorMatrix {
    pub op: BicomplexOp,
    pub position: MatrixPosition,
    pub domain_spec: TruncationSpec,
    pub matrix: QMatrix,
    domain: Vec<Form>,
    codomain: basis::KeyIndex,
}

impl OperatorMatrix {
    pub fn domain_dim(&self) -> usize {
        self.domain.len()
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain.len()
    }

    pub fn domain_form(&self, j: usize) -> &Form {
        &self.domain[j]
    }

    /// Coordinates of an arbitrary form in this matrix's codomain basis.
    pub(crate) fn codomain_coordinates(&self, form: &Form) -> Result<SparseCol, CohomError> {
        self.codomain
            .try_coordinates(form)
            .map_err(|term| CohomError::TruncationTooSmall { term })
    }
}

/// Assembles the truncated operator as an exact sparse matrix. The codomain
/// truncation is enlarged automatically so the image fits: one jet order up
/// for `d_H`, the same truncation for `d_V`, and doubled order for `delta`.
pub fn operator_matrix(
    bundle: &BundleSpec,
    op: BicomplexOp,
    spec: &TruncationSpec,
    position: MatrixPosition,
) -> Result<OperatorMatrix, CohomError> {
    let n = bundle.base_dim();
    let (domain, images): (Vec<Form>, Vec<Form>) = match (op, position) {
        (BicomplexOp::DH, MatrixPosition::Bidegree { contact, horizontal }) => {
            let domain = enumerate_basis(bundle, spec, contact, horizontal)?;
            let images = crate::par::map_slice(&domain, |f| f.d_h());
            (domain, images)
        }
        (BicomplexOp::DV, MatrixPosition::Bidegree { contact, horizontal }) => {
            let domain = enumerate_basis(bundle, spec, contact, horizontal)?;
            let images = crate::par::map_slice(&domain, |f| f.d_v());
            (domain, images)
        }
        (BicomplexOp::Delta, MatrixPosition::Lagrangian) => {
            let domain = enumerate_basis(bundle, spec, 0, n)?;
            let images = crate::par::map_slice(&domain, |f| {
                f.euler_lagrange().expect("basis forms are (0,n)").to_form()
            });
            (domain, images)
        }
        (BicomplexOp::Delta, MatrixPosition::SourceLevel) => {
            let sources = basis::enumerate_sources(
                bundle,
                spec.max_jet_order,
                spec.max_poly_degree,
                spec.base_poly_degree,
            );
            let domain: Vec<Form> = sources.iter().map(|s| s.to_source(bundle).to_form()).collect();
            let images = crate::par::map_slice(&sources, |s| s.to_source(bundle).delta());
            (domain, images)
        }
        _ => panic!("operator/position combination not defined"),
    };

    // codomain keys from the enlarged enumeration
    let mut codomain = basis::KeyIndex::default();
    match (op, position) {
        (BicomplexOp::DH, MatrixPosition::Bidegree { contact, horizontal }) => {
            let enlarged = spec.raise_order(1);
            for f in enumerate_basis(bundle, &enlarged, contact, horizontal + 1)? {
                codomain.insert_form(&f);
            }
        }
        (BicomplexOp::DV, MatrixPosition::Bidegree { contact, horizontal }) => {
            for f in enumerate_basis(bundle, spec, contact + 1, horizontal)? {
                codomain.insert_form(&f);
            }
        }
        (BicomplexOp::Delta, MatrixPosition::Lagrangian) => {
            let enlarged = spec.raise_order(spec.max_jet_order);
            for s in basis::enumerate_sources(
                bundle,
                enlarged.max_jet_order,
                enlarged.max_poly_degree,
                enlarged.base_poly_degree,
            ) {
                codomain.insert_form(&s.to_source(bundle).to_form());
            }
        }
        (BicomplexOp::Delta, MatrixPosition::SourceLevel) => {
            let enlarged = spec.raise_order(spec.max_jet_order);
            for f in enumerate_basis(bundle, &enlarged, 2, n)? {
                codomain.insert_form(&f);
            }
        }
        _ => unreachable!(),
    }

    let mut cols = Vec::with_capacity(images.len());
    for image in &images {
        let col = codomain
            .try_coordinates(image)
            .map_err(|term| CohomError::TruncationTooSmall { term })?;
        cols.push(col);
    }
    let matrix = QMatrix::from_columns(codomain.len(), cols);
    Ok(OperatorMatrix {
        op,
        position,
        domain_spec: *spec,
        matrix,
        domain,
        codomain,
    })
}

/// Which stretch of the bicomplex a Betti report walks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainDescriptor {
    /// The `d_H` row at fixed contact degree, positions `s = 0 .. n-1`.
    DhRow { contact: usize },
    /// The `d_V` column at fixed horizontal degree, positions `k = 0 ..
    /// max_contact`.
    DvColumn {
        horizontal: usize,
        max_contact: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PositionReport {
    pub position: usize,
    pub dim_domain: usize,
    pub rank: usize,
    pub dim_kernel: usize,
    pub dim_cohomology: usize,
}

/// Exact kernel/rank data along a row or column of the truncated bicomplex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BettiReport {
    pub operator: String,
    pub descriptor: String,
    pub positions: Vec<PositionReport>,
}

pub fn betti(
    bundle: &BundleSpec,
    spec: &TruncationSpec,
    descriptor: ChainDescriptor,
) -> Result<BettiReport, CohomError> {
    match descriptor {
        ChainDescriptor::DhRow { contact } => {
            let n = bundle.base_dim();
            let mut positions = Vec::new();
            for s in 0..n {
                let outgoing =
                    operator_matrix(bundle, BicomplexOp::DH, spec, MatrixPosition::Bidegree {
                        contact,
                        horizontal: s,
                    })?;
                let rank = outgoing.matrix.rank();
                let dim_domain = outgoing.domain_dim();
                let dim_kernel = dim_domain - rank;
                let incoming_rank = if s >= 1 {
                    match spec.lower_order() {
                        Some(lower) => operator_matrix(
                            bundle,
                            BicomplexOp::DH,
                            &lower,
                            MatrixPosition::Bidegree {
                                contact,
                                horizontal: s - 1,
                            },
                        )?
                        .matrix
                        .rank(),
                        None => 0,
                    }
                } else {
                    0
                };
                positions.push(PositionReport {
                    position: s,
                    dim_domain,
                    rank,
                    dim_kernel,
                    dim_cohomology: dim_kernel - incoming_rank,
                });
            }
            Ok(BettiReport {
                operator: "dH".into(),
                descriptor: format!("row k={contact}"),
                positions,
            })
        }
        ChainDescriptor::DvColumn {
            horizontal,
            max_contact,
        } => {
            let mut positions = Vec::new();
            for k in 0..=max_contact {
                let outgoing =
                    operator_matrix(bundle, BicomplexOp::DV, spec, MatrixPosition::Bidegree {
                        contact: k,
                        horizontal,
                    })?;
                let rank = outgoing.matrix.rank();
                let dim_domain = outgoing.domain_dim();
                let dim_kernel = dim_domain - rank;
                let incoming_rank = if k >= 1 {
                    operator_matrix(bundle, BicomplexOp::DV, spec, MatrixPosition::Bidegree {
                        contact: k - 1,
                        horizontal,
                    })?
                    .matrix
                    .rank()
                } else {
                    0
                };
                positions.push(PositionReport {
                    position: k,
                    dim_domain,
                    rank,
                    dim_kernel,
                    dim_cohomology: dim_kernel - incoming_rank,
                });
            }
            Ok(BettiReport {
                operator: "dV".into(),
                descriptor: format!("column s={horizontal}"),
                positions,
            })
        }
    }
}

/// Exactness of the variational complex at `E_1` within the truncation:
/// every kernel vector of the Helmholtz matrix must lie in the image of the
/// Euler-Lagrange matrix assembled from Lagrangians one polynomial degree
/// up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactnessReport {
    pub source_dim: usize,
    pub helmholtz_kernel_dim: usize,
    pub lagrangian_dim: usize,
    pub euler_lagrange_rank: usize,
    pub kernel_inside_image: bool,
}

pub fn delta_exactness_at_e1(
    bundle: &BundleSpec,
    spec: &TruncationSpec,
) -> Result<ExactnessReport, CohomError> {
    let helm = operator_matrix(bundle, BicomplexOp::Delta, spec, MatrixPosition::SourceLevel)?;
    let kernel = helm.matrix.kernel();
    let el_spec = TruncationSpec {
        max_jet_order: spec.max_jet_order,
        max_poly_degree: spec.max_poly_degree + 1,
        base_poly_degree: spec.base_poly_degree,
    };
    let el = operator_matrix(bundle, BicomplexOp::Delta, &el_spec, MatrixPosition::Lagrangian)?;

    let mut cols = Vec::with_capacity(kernel.len());
    for vector in &kernel {
        let mut form = Form::zero(bundle);
        for (j, c) in vector.iter().enumerate() {
            if !c.is_zero() {
                form = &form + &helm.domain_form(j).scale(c);
            }
        }
        cols.push(el.codomain_coordinates(&form)?);
    }
    let vectors = QMatrix::from_columns(el.codomain_dim(), cols);
    Ok(ExactnessReport {
        source_dim: helm.domain_dim(),
        helmholtz_kernel_dim: kernel.len(),
        lagrangian_dim: el.domain_dim(),
        euler_lagrange_rank: el.matrix.rank(),
        kernel_inside_image: el.matrix.spans(&vectors),
    })
}

// ----------------------------------------------------------------------
// Randomized operator-identity suite
// ----------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityResult {
    pub name: &'static str,
    pub failures: u32,
    pub first_counterexample: Option<String>,
}

/// Outcome of the randomized identity battery; reproducible from the seed
/// regardless of thread count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteReport {
    pub seed: u64,
    pub cases: u32,
    pub identities: Vec<IdentityResult>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.identities.iter().all(|r| r.failures == 0)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "identity suite: seed {}, {} cases", self.seed, self.cases)?;
        for r in &self.identities {
            if r.failures == 0 {
                writeln!(f, "  pass  {}", r.name)?;
            } else {
                writeln!(
                    f,
                    "  FAIL  {} ({} failures, e.g. {})",
                    r.name,
                    r.failures,
                    r.first_counterexample.as_deref().unwrap_or("?")
                )?;
            }
        }
        Ok(())
    }
}

pub(crate) const IDENTITY_NAMES: &[&str] = &[
    "d^2 = 0",
    "dH^2 = 0",
    "dV^2 = 0",
    "dH dV + dV dH = 0",
    "d = dH + dV",
    "tau^2 = tau",
    "tau dH = 0",
    "delta^2 = 0",
    "delta tau = tau d",
    "h0 d = dH h0",
    "wedge graded anticommutativity",
    "euler-lagrange equals delta route",
    "first variational split balances",
    "prolongation commutes with d_lambda",
    "contraction anticommutes with dH",
    "lie derivative identity",
    "total derivatives commute",
    "leibniz rule",
];

fn shrunk_display(phi: &Form, fails: &dyn Fn(&Form) -> bool) -> String {
    let mut current = phi.clone();
    loop {
        let words: Vec<Vec<crate::forms::Generator>> =
            current.terms().map(|(w, _)| w.to_vec()).collect();
        if words.len() <= 1 {
            break;
        }
        let mut improved = false;
        for word in words {
            let mut candidate = Form::zero(current.bundle());
            for (w, c) in current.terms() {
                if w != word.as_slice() {
                    candidate.add_term(w.to_vec(), c.clone());
                }
            }
            if !candidate.is_zero() && fails(&candidate) {
                current = candidate;
                improved = true;
                break;
            }
        }
        if !improved {
            break;
        }
    }
    current.to_string()
}

fn run_case(seed: u64, case: u32) -> Vec<Option<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(
        seed ^ (case as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    let palette = crate::random::bundle_palette();
    let b = &palette[case as usize % palette.len()];
    let n = b.base_dim();
    let max_order = 3;
    let max_degree = 3;

    let mut failures: Vec<Option<String>> = vec![None; IDENTITY_NAMES.len()];
    let mut record = |idx: usize, message: String| {
        failures[idx] = Some(message);
    };

    let k = rng.gen_range(0..=2usize);
    let s = rng.gen_range(0..=n);
    let phi = crate::random::random_form(&mut rng, b, k, s, max_order, max_degree, 2);

    if !phi.exterior_d().exterior_d().is_zero() {
        let msg = shrunk_display(&phi, &|f| !f.exterior_d().exterior_d().is_zero());
        record(0, msg);
    }
    if !phi.d_h().d_h().is_zero() {
        record(1, shrunk_display(&phi, &|f| !f.d_h().d_h().is_zero()));
    }
    if !phi.d_v().d_v().is_zero() {
        record(2, shrunk_display(&phi, &|f| !f.d_v().d_v().is_zero()));
    }
    let anti = &phi.d_h().d_v() + &phi.d_v().d_h();
    if !anti.is_zero() {
        record(3, shrunk_display(&phi, &|f| {
            !(&f.d_h().d_v() + &f.d_v().d_h()).is_zero()
        }));
    }
    if phi.exterior_d() != &phi.d_h() + &phi.d_v() {
        record(4, shrunk_display(&phi, &|f| {
            f.exterior_d() != &f.d_h() + &f.d_v()
        }));
    }

    let k_top = rng.gen_range(1..=2usize);
    let top = crate::random::random_form(&mut rng, b, k_top, n, max_order, max_degree, 2);
    let tau1 = top.tau();
    if tau1.tau() != tau1 {
        record(5, shrunk_display(&top, &|f| {
            let t = f.tau();
            t.tau() != t
        }));
    }
    if n >= 1 {
        let below = crate::random::random_form(&mut rng, b, k_top, n - 1, max_order, max_degree, 2);
        if !below.d_h().tau().is_zero() {
            record(6, shrunk_display(&below, &|f| !f.d_h().tau().is_zero()));
        }
    }
    // delta^2 = 0 on (0, n) and source forms
    let lagrangian = crate::random::random_lagrangian(&mut rng, b, max_order, max_degree, 2);
    let delta1 = lagrangian.delta().expect("(0,n) form");
    if !delta1.delta().expect("(1,n) form").is_zero() {
        record(7, format!("delta^2 != 0 for L = {lagrangian}"));
    }
    if top.tau().delta().expect("(k,n) form") != top.exterior_d().tau() {
        record(8, shrunk_display(&top, &|f| {
            f.tau().delta().expect("(k,n) form") != f.exterior_d().tau()
        }));
    }
    let dy_degree = rng.gen_range(0..=1);
    let dy = crate::random::random_dy_form(&mut rng, b, dy_degree, 2, max_degree, 2);
    if dy.exterior_d().horizontalize() != dy.horizontalize().d_h() {
        record(9, format!("h0 d != dH h0 for {dy}"));
    }
    {
        let ka = rng.gen_range(0..=1usize);
        let sa = rng.gen_range(0..=1usize.min(n));
        let kb = rng.gen_range(0..=1usize);
        let sb = rng.gen_range(0..=1usize.min(n));
        let a = crate::random::random_form(&mut rng, b, ka, sa, 2, 2, 2);
        let c = crate::random::random_form(&mut rng, b, kb, sb, 2, 2, 2);
        let ab = a.wedge(&c).expect("same bundle");
        let ba = c.wedge(&a).expect("same bundle");
        let sign_flip = ((ka + sa) * (kb + sb)) % 2 == 1;
        let expected = if sign_flip { -&ba } else { ba };
        if ab != expected {
            record(10, format!("a = {a}, b = {c}"));
        }
    }
    {
        let direct = lagrangian.euler_lagrange().expect("(0,n) form");
        let via = SourceForm::from_form(&delta1).expect("delta of a Lagrangian is a source form");
        if direct != via {
            record(11, format!("L = {lagrangian}"));
        }
        let split = lagrangian.first_variational_split().expect("(0,n) form");
        if !split.verify(&lagrangian) {
            record(12, format!("L = {lagrangian}"));
        }
        let field = crate::random::random_field(&mut rng, b, 1, 2);
        let f = crate::random::random_poly_expr(&mut rng, b, 2, 3, 2);
        let lambda = rng.gen_range(0..n);
        if field.prolong_apply(&f.total_derivative(lambda))
            != field.prolong_apply(&f).total_derivative(lambda)
        {
            record(13, format!("u = ({field}), f = {f}"));
        }
        let psi_contact = rng.gen_range(0..=2);
        let psi_horizontal = rng.gen_range(0..n.max(1));
        let psi = crate::random::random_form(&mut rng, b, psi_contact, psi_horizontal, 2, 2, 2);
        if field.contract(&psi.d_h()) != -&field.contract(&psi).d_h() {
            record(14, format!("u = ({field}), phi = {psi}"));
        }
        let report = field
            .conservation_check(&lagrangian)
            .expect("(0,n) Lagrangian");
        if !report.identity_holds {
            record(15, format!("u = ({field}), L = {lagrangian}"));
        }
    }
    {
        let f = crate::random::random_poly_expr(&mut rng, b, max_order, max_degree, 3);
        let g = crate::random::random_poly_expr(&mut rng, b, max_order, max_degree, 3);
        let lam = rng.gen_range(0..n);
        let mu = rng.gen_range(0..n);
        if f.total_derivative(lam).total_derivative(mu)
            != f.total_derivative(mu).total_derivative(lam)
        {
            record(16, format!("f = {f}"));
        }
        let prod = &f * &g;
        if prod.total_derivative(lam)
            != &(&f.total_derivative(lam) * &g) + &(&f * &g.total_derivative(lam))
        {
            record(17, format!("f = {f}, g = {g}"));
        }
    }
    failures
}

/// Runs the randomized identity battery on reproducible pseudo-random
/// differential-polynomial forms (bundles with `n, m <= 2`, jet order up to
/// 3, degree up to 3). Cases shard across threads with per-case RNG state,
/// so the report is a pure function of `(seed, cases)`.
pub fn property_suite(seed: u64, cases: u32) -> Result<SuiteReport, CohomError> {
    if cases == 0 {
        return Err(CohomError::NoCases);
    }
    let per_case: Vec<Vec<Option<String>>> =
        crate::par::map_indexed(cases as usize, |i| run_case(seed, i as u32));
    let identities = IDENTITY_NAMES
        .iter()
        .enumerate()
        .map(|(idx, name)| {
            let mut failures = 0;
            let mut first = None;
            for case in &per_case {
                if let Some(msg) = &case[idx] {
                    failures += 1;
                    if first.is_none() {
                        first = Some(msg.clone());
                    }
                }
            }
            IdentityResult {
                name,
                failures,
                first_counterexample: first,
            }
        })
        .collect();
    Ok(SuiteReport {
        seed,
        cases,
        identities,
    })
}
