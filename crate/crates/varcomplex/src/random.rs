//! Reproducible random differential polynomials, forms and fields.
//!
//! Drives the randomized identity battery in [`crate::cohomlab`] and the
//! test suites. Everything is a pure function of the supplied RNG, so a
//! seeded `ChaCha8Rng` reproduces the exact case stream regardless of thread
//! count.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

use crate::bundle::{BundleSpec, JetVar, MultiIndex};
use crate::expr::Expr;
use crate::forms::{DyForm, DyGenerator, Form, Generator, SourceForm};
use crate::symmetry::EvolutionaryField;

/// Small nonzero rational with numerator in `-9..=9` and denominator in
/// `1..=3`.
pub fn random_rational(rng: &mut impl Rng) -> BigRational {
    let mut num = 0i64;
    while num == 0 {
        num = rng.gen_range(-9..=9);
    }
    let den = rng.gen_range(1..=3i64);
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn random_multi_index(rng: &mut impl Rng, base_dim: usize, max_order: u32) -> MultiIndex {
    let order = rng.gen_range(0..=max_order);
    let mut mi = MultiIndex::empty(base_dim);
    for _ in 0..order {
        let lambda = rng.gen_range(0..base_dim);
        mi = mi.add(lambda).expect("index in range");
    }
    mi
}

pub fn random_jet_var(rng: &mut impl Rng, bundle: &BundleSpec, max_order: u32) -> JetVar {
    let fiber = rng.gen_range(0..bundle.fiber_dim());
    JetVar::new(fiber, random_multi_index(rng, bundle.base_dim(), max_order))
}

/// Random differential polynomial: at most `max_terms` monomials of total
/// degree at most `max_degree` in jet variables of order at most
/// `max_order` and the base variables.
pub fn random_poly_expr(
    rng: &mut impl Rng,
    bundle: &BundleSpec,
    max_order: u32,
    max_degree: u32,
    max_terms: u32,
) -> Expr {
    let terms = rng.gen_range(1..=max_terms);
    let mut out = Expr::zero(bundle);
    for _ in 0..terms {
        let mut term = Expr::constant(bundle, random_rational(rng));
        let degree = rng.gen_range(0..=max_degree);
        for _ in 0..degree {
            let factor = if rng.gen_bool(0.25) {
                Expr::base_var(bundle, rng.gen_range(0..bundle.base_dim()))
            } else {
                Expr::jet_var(bundle, random_jet_var(rng, bundle, max_order))
            };
            term = &term * &factor;
        }
        out = &out + &term;
    }
    out
}

fn random_word(
    rng: &mut impl Rng,
    bundle: &BundleSpec,
    contact: usize,
    horizontal: usize,
    max_order: u32,
) -> Option<Vec<Generator>> {
    let n = bundle.base_dim();
    if horizontal > n {
        return None;
    }
    let mut dx: Vec<usize> = (0..n).collect();
    for i in (1..dx.len()).rev() {
        dx.swap(i, rng.gen_range(0..=i));
    }
    dx.truncate(horizontal);
    dx.sort_unstable();
    let mut thetas = std::collections::BTreeSet::new();
    let mut attempts = 0;
    while thetas.len() < contact {
        let v = random_jet_var(rng, bundle, max_order);
        thetas.insert((v.fiber, v.index));
        attempts += 1;
        if attempts > 200 {
            return None; // not enough distinct generators at this order
        }
    }
    let mut word: Vec<Generator> = dx.into_iter().map(Generator::Dx).collect();
    word.extend(
        thetas
            .into_iter()
            .map(|(i, mi)| Generator::Theta(JetVar::new(i, mi))),
    );
    Some(word)
}

/// Random form of pure bidegree `(contact, horizontal)` with differential
/// polynomial coefficients.
pub fn random_form(
    rng: &mut impl Rng,
    bundle: &BundleSpec,
    contact: usize,
    horizontal: usize,
    max_order: u32,
    max_degree: u32,
    max_terms: u32,
) -> Form {
    let mut out = Form::zero(bundle);
    let terms = rng.gen_range(1..=max_terms);
    for _ in 0..terms {
        let Some(word) = random_word(rng, bundle, contact, horizontal, max_order) else {
            continue;
        };
        let coeff = random_poly_expr(rng, bundle, max_order, max_degree, 2);
        let mut piece = Form::scalar(coeff);
        for g in word {
            piece = piece
                .wedge(&Form::generator(bundle, g))
                .expect("same bundle");
        }
        out = &out + &piece;
    }
    out
}

/// Random form in the `dx`/`dy` basis (no contact generators), used to
/// exercise the parser-boundary representation.
pub fn random_dy_form(
    rng: &mut impl Rng,
    bundle: &BundleSpec,
    degree: usize,
    max_order: u32,
    max_degree: u32,
    max_terms: u32,
) -> DyForm {
    let n = bundle.base_dim();
    let mut out = DyForm::zero(bundle);
    for _ in 0..rng.gen_range(1..=max_terms) {
        let mut gens = std::collections::BTreeSet::new();
        let mut attempts = 0;
        while gens.len() < degree && attempts < 200 {
            attempts += 1;
            if rng.gen_bool(0.5) {
                gens.insert(DyGenerator::Dx(rng.gen_range(0..n)));
            } else {
                let v = random_jet_var(rng, bundle, max_order);
                gens.insert(DyGenerator::Dy(v));
            }
        }
        if gens.len() < degree {
            continue;
        }
        let coeff = random_poly_expr(rng, bundle, max_order, max_degree, 2);
        let mut piece = DyForm::scalar(coeff);
        for g in gens {
            piece = piece
                .wedge(&DyForm::generator(bundle, g))
                .expect("same bundle");
        }
        out = &out + &piece;
    }
    out
}

/// Random Lagrangian density `L = expr * omega`.
pub fn random_lagrangian(
    rng: &mut impl Rng,
    bundle: &BundleSpec,
    max_order: u32,
    max_degree: u32,
    max_terms: u32,
) -> Form {
    let coeff = random_poly_expr(rng, bundle, max_order, max_degree, max_terms);
    Form::scalar(coeff)
        .wedge(&Form::volume(bundle))
        .expect("same bundle")
}

pub fn random_source_form(
    rng: &mut impl Rng,
    bundle: &BundleSpec,
    max_order: u32,
    max_degree: u32,
) -> SourceForm {
    let components = (0..bundle.fiber_dim())
        .map(|_| random_poly_expr(rng, bundle, max_order, max_degree, 2))
        .collect();
    SourceForm::new(bundle, components).expect("component count matches")
}

pub fn random_field(
    rng: &mut impl Rng,
    bundle: &BundleSpec,
    max_order: u32,
    max_degree: u32,
) -> EvolutionaryField {
    let components = (0..bundle.fiber_dim())
        .map(|_| random_poly_expr(rng, bundle, max_order, max_degree, 2))
        .collect();
    EvolutionaryField::new(bundle, components).expect("component count matches")
}

/// Deterministic palette of small bundles cycled by the identity battery.
pub fn bundle_palette() -> Vec<BundleSpec> {
    vec![
        BundleSpec::new(vec!["x"], vec!["u"]).unwrap(),
        BundleSpec::new(vec!["t"], vec!["u", "v"]).unwrap(),
        BundleSpec::new(vec!["t", "x"], vec!["u"]).unwrap(),
        BundleSpec::new(vec!["t", "x"], vec!["u", "v"]).unwrap(),
    ]
}
