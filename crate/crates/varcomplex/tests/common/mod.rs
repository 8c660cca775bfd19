//! Shared oracle machinery for the integration suites: polynomial sections,
//! exact jet substitution, quadrature, and the discretized Gateaux
//! derivative of the action.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

use varcomplex::bundle::{BundleSpec, JetVar, MultiIndex};
use varcomplex::expr::Expr;
use varcomplex::forms::Form;

/// A polynomial section of the bundle: one base-only expression per fibre.
#[derive(Clone)]
pub struct PolySection {
    pub components: Vec<Expr>,
}

pub fn rational(rng: &mut impl Rng, num_range: std::ops::RangeInclusive<i64>) -> BigRational {
    BigRational::new(
        BigInt::from(rng.gen_range(num_range)),
        BigInt::from(rng.gen_range(1..=3i64)),
    )
}

/// Random polynomial section with per-variable degree at most `degree`.
pub fn random_section(rng: &mut impl Rng, bundle: &BundleSpec, degree: u32) -> PolySection {
    let n = bundle.base_dim();
    let components = (0..bundle.fiber_dim())
        .map(|_| {
            let mut p = Expr::zero(bundle);
            for _ in 0..=degree {
                let mut term = Expr::constant(bundle, rational(rng, -3..=3));
                for lambda in 0..n {
                    let d = rng.gen_range(0..=degree.min(3));
                    term = &term * &Expr::base_var(bundle, lambda).pow(d as i64);
                }
                p = &p + &term;
            }
            p
        })
        .collect();
    PolySection { components }
}

impl PolySection {
    /// `partial_Lambda` of the section component, an exact polynomial.
    pub fn jet(&self, v: &JetVar) -> Expr {
        let mut out = self.components[v.fiber].clone();
        for lambda in v.index.positions() {
            out = out.partial_base(lambda);
        }
        out
    }

    /// Substitutes the prolonged section into an expression, leaving a
    /// base-only polynomial.
    pub fn pullback(&self, f: &Expr) -> Expr {
        f.map_jet_vars(&|v| self.jet(v))
    }

    pub fn scaled_add(&self, other: &PolySection, t: &BigRational) -> PolySection {
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a + &b.scale(t))
            .collect();
        PolySection { components }
    }
}

pub fn eval_base(f: &Expr, point: &[f64]) -> f64 {
    f.eval_f64(point, &|_| panic!("expression still depends on jets"))
}

/// Composite Simpson quadrature of a base-only expression over `[0,1]^n`,
/// `n <= 2`.
pub fn simpson(f: &Expr, n: usize, intervals: usize) -> f64 {
    assert!(intervals.is_multiple_of(2));
    let h = 1.0 / intervals as f64;
    let weight = |j: usize| -> f64 {
        if j == 0 || j == intervals {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    match n {
        1 => {
            let mut sum = 0.0;
            for j in 0..=intervals {
                sum += weight(j) * eval_base(f, &[j as f64 * h]);
            }
            sum * h / 3.0
        }
        2 => {
            let mut sum = 0.0;
            for j in 0..=intervals {
                for k in 0..=intervals {
                    sum += weight(j) * weight(k) * eval_base(f, &[j as f64 * h, k as f64 * h]);
                }
            }
            sum * h * h / 9.0
        }
        _ => panic!("quadrature implemented for n <= 2"),
    }
}

/// A polynomial variation vanishing to third order on the boundary of
/// `[0,1]^n`, so that no integration-by-parts boundary terms survive for
/// Lagrangians of jet order up to 2.
pub fn random_variation(rng: &mut impl Rng, bundle: &BundleSpec, degree: u32) -> PolySection {
    let n = bundle.base_dim();
    let mut bump = Expr::int(bundle, 1);
    for lambda in 0..n {
        let x = Expr::base_var(bundle, lambda);
        let one = Expr::int(bundle, 1);
        let factor = &x.pow(3) * &(&one - &x).pow(3);
        bump = &bump * &factor;
    }
    let inner = random_section(rng, bundle, degree);
    PolySection {
        components: inner.components.iter().map(|p| p * &bump).collect(),
    }
}

/// The action `S(eps) = int L(j(s + eps v))` over `[0,1]^n` by quadrature.
fn action(
    lagrangian_density: &Expr,
    bundle: &BundleSpec,
    section: &PolySection,
    variation: &PolySection,
    eps: &BigRational,
    intervals: usize,
) -> f64 {
    let perturbed = section.scaled_add(variation, eps);
    let integrand = perturbed.pullback(lagrangian_density);
    simpson(&integrand, bundle.base_dim(), intervals)
}

/// Discretized Gateaux derivative `dS/deps at 0` along `variation`, using a
/// five-point stencil that is exact for actions of polynomial degree <= 4
/// in the perturbation parameter.
pub fn gateaux_derivative(
    lagrangian: &Form,
    section: &PolySection,
    variation: &PolySection,
    intervals: usize,
) -> f64 {
    let bundle = lagrangian.bundle().clone();
    let density = lagrangian.lagrangian_density().expect("(0,n) Lagrangian");
    let eps0 = BigRational::new(BigInt::from(1), BigInt::from(10));
    let two = BigRational::from_integer(BigInt::from(2));
    let s = |e: &BigRational| action(&density, &bundle, section, variation, e, intervals);
    let p1 = s(&eps0);
    let m1 = s(&(-&eps0));
    let p2 = s(&(&eps0 * &two));
    let m2 = s(&(-&(&eps0 * &two)));
    let eps = 0.1f64;
    (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * eps)
}

/// `int E_i v^i` over `[0,1]^n` by the same quadrature, the weak pairing of
/// the symbolic Euler-Lagrange form with the variation.
pub fn pairing_with_source(
    source: &varcomplex::SourceForm,
    section: &PolySection,
    variation: &PolySection,
    intervals: usize,
) -> f64 {
    let bundle = source.bundle().clone();
    let mut integrand = Expr::zero(&bundle);
    for (i, e) in source.components().iter().enumerate() {
        let pulled = section.pullback(e);
        integrand = &integrand + &(&pulled * &variation.components[i]);
    }
    simpson(&integrand, bundle.base_dim(), intervals)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[allow(dead_code)]
pub fn mi(bundle: &BundleSpec, positions: &[usize]) -> MultiIndex {
    MultiIndex::from_positions(bundle.base_dim(), positions).unwrap()
}

#[allow(dead_code)]
pub fn jet(bundle: &BundleSpec, positions: &[usize]) -> Expr {
    Expr::jet_var(bundle, JetVar::new(0, mi(bundle, positions)))
}
