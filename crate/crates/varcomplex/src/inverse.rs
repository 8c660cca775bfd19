//! The inverse problem of the calculus of variations: Helmholtz checking,
//! variational triviality, constructive `d_H`-antiderivatives by a truncated
//! exact linear solve, and Lagrangian reconstruction by the vertical
//! (fibre-scaling) homotopy.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::cohomlab::basis;
use crate::expr::Expr;
use crate::forms::{DyForm, DyGenerator, Form, FormError, SourceForm};
use crate::linalg::{QMatrix, SolveOutcome, SparseCol};

#[derive(Debug, Error)]
pub enum InverseError {
    #[error("input is not d_H-closed; d_H sigma = {defect}")]
    NotClosed { defect: Box<Form> },
    #[error("no antiderivative within truncation (jet order {max_jet_order}, degree {max_poly_degree}); residual {residual}")]
    NotExactInTruncation {
        residual: Box<Form>,
        max_jet_order: u32,
        max_poly_degree: u32,
    },
    #[error("source form fails the Helmholtz condition; delta E = {certificate}")]
    HelmholtzFails { certificate: Box<Form> },
    #[error("Helmholtz condition undecided for transcendental input; delta E = {certificate}")]
    HelmholtzUnknown { certificate: Box<Form> },
    #[error("component has non-polynomial jet dependence; the fibre-scaling integral is unsupported")]
    NonPolynomial,
    #[error("a horizontal antiderivative needs horizontal degree at least 1")]
    HorizontalDegreeZero,
    #[error("Lagrangian is not variationally trivial; E = {certificate}")]
    NotTrivial { certificate: String },
    #[error("supplied form is not closed; d phi = {defect}")]
    ClosedFormNotClosed { defect: Box<Form> },
    #[error("supplied form must live on the bundle itself: {0}")]
    ClosedFormNotOnBundle(String),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// Outcome of the Helmholtz test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Passes,
    Fails,
    /// The certificate did not normalize to zero but contains transcendental
    /// atoms, where equality testing is incomplete.
    Unknown,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Passes => "passes",
            Verdict::Fails => "fails",
            Verdict::Unknown => "unknown",
        }
    }
}

/// Helmholtz certificate `delta(E)` together with the verdict.
#[derive(Clone, Debug)]
pub struct HelmholtzReport {
    pub verdict: Verdict,
    pub certificate: Form,
}

impl HelmholtzReport {
    pub fn passes(&self) -> bool {
        matches!(self.verdict, Verdict::Passes)
    }
}

/// Checks the Helmholtz condition `delta(E) = 0`.
pub fn helmholtz_check(source: &SourceForm) -> HelmholtzReport {
    let certificate = source.delta();
    let verdict = if certificate.is_zero() {
        Verdict::Passes
    } else if certificate.has_transcendental() {
        Verdict::Unknown
    } else {
        Verdict::Fails
    };
    HelmholtzReport {
        verdict,
        certificate,
    }
}

/// True when the Euler-Lagrange form of `lagrangian` normalizes to zero.
pub fn is_variationally_trivial(lagrangian: &Form) -> Result<bool, FormError> {
    Ok(lagrangian.euler_lagrange()?.is_zero())
}

/// Truncation bounds for the antiderivative solve: candidate forms have jet
/// order at most `max_jet_order` (coefficients and contact generators) and
/// total polynomial degree at most `max_poly_degree` (base and jet variables
/// together).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AntiderivativeConfig {
    pub max_jet_order: u32,
    pub max_poly_degree: u32,
}

impl AntiderivativeConfig {
    pub fn new(max_jet_order: u32, max_poly_degree: u32) -> Self {
        AntiderivativeConfig {
            max_jet_order,
            max_poly_degree,
        }
    }

    /// Default bounds for a given right-hand side: one jet order above the
    /// input and the input's polynomial degree.
    pub fn for_form(sigma: &Form) -> Self {
        AntiderivativeConfig {
            max_jet_order: (sigma.max_jet_order().max(0) as u32) + 1,
            max_poly_degree: sigma.max_total_degree(),
        }
    }
}

/// Solves `d_H xi = sigma` exactly within the truncation, by assembling
/// `d_H` as a sparse rational matrix over the finite basis of candidate
/// forms one horizontal degree down.
///
/// The input must be `d_H`-closed (checked first; failing that is an error
/// distinct from a truncation miss). When the truncation is too small the
/// error carries the unreachable residual so callers can retry with larger
/// bounds.
pub fn horizontal_antiderivative(
    sigma: &Form,
    config: AntiderivativeConfig,
) -> Result<Form, InverseError> {
    let bundle = sigma.bundle().clone();
    if sigma.is_zero() {
        return Ok(Form::zero(&bundle));
    }
    let defect = sigma.d_h();
    if !defect.is_zero() {
        return Err(InverseError::NotClosed {
            defect: Box::new(defect),
        });
    }
    if sigma.bidegrees().iter().any(|(_, s)| *s == 0) {
        return Err(InverseError::HorizontalDegreeZero);
    }

    let mut xi = Form::zero(&bundle);
    for (k, s) in sigma.bidegrees() {
        let part = sigma.project_contact(k).project_horizontal(s)?;
        let candidates = basis::enumerate_forms(
            &bundle,
            k,
            s - 1,
            config.max_jet_order,
            config.max_poly_degree,
            config.max_poly_degree,
            Some(config.max_poly_degree),
        )?;
        let images: Vec<Form> = crate::par::map_slice(&candidates, |f| f.d_h());

        let mut keys = basis::KeyIndex::default();
        for image in &images {
            keys.insert_form(image);
        }
        keys.insert_form(&part);
        let cols: Vec<SparseCol> = images.iter().map(|f| keys.coordinates(f)).collect();
        let matrix = QMatrix::from_columns(keys.len(), cols);
        let rhs = keys.dense_coordinates(&part);
        match matrix.solve(&rhs) {
            SolveOutcome::Solution(x) => {
                for (j, c) in x.iter().enumerate() {
                    if !c.is_zero() {
                        xi = &xi + &candidates[j].scale(c);
                    }
                }
            }
            SolveOutcome::Inconsistent { residual, .. } => {
                return Err(InverseError::NotExactInTruncation {
                    residual: Box::new(keys.form_from_dense(&bundle, &residual)),
                    max_jet_order: config.max_jet_order,
                    max_poly_degree: config.max_poly_degree,
                });
            }
        }
    }
    debug_assert_eq!(&xi.d_h(), sigma);
    Ok(xi)
}

/// Reconstructs a Lagrangian from a Helmholtz-passing source form by the
/// vertical homotopy `l = int_0^1 y^i E_i(x, t y) dt`, which for polynomial
/// components is the sum of jet-homogeneous parts weighted by `1/(d+1)`.
///
/// The result satisfies `euler_lagrange(L) = E` exactly; this is re-verified
/// before returning. Validity is global only for fibres star-shaped around
/// the zero section, which holds for the polynomial fibres handled here.
pub fn reconstruct_lagrangian(source: &SourceForm) -> Result<Form, InverseError> {
    let report = helmholtz_check(source);
    match report.verdict {
        Verdict::Passes => {}
        Verdict::Fails => {
            return Err(InverseError::HelmholtzFails {
                certificate: Box::new(report.certificate),
            })
        }
        Verdict::Unknown => {
            return Err(InverseError::HelmholtzUnknown {
                certificate: Box::new(report.certificate),
            })
        }
    }
    let bundle = source.bundle().clone();
    let mut density = Expr::zero(&bundle);
    for (i, component) in source.components().iter().enumerate() {
        let parts = component
            .jet_homogeneous_parts()
            .ok_or(InverseError::NonPolynomial)?;
        let y = Expr::fiber_var(&bundle, i);
        for (degree, part) in parts {
            let weight = BigRational::new(BigInt::from(1), BigInt::from(degree as i64 + 1));
            density = &density + &(&y * &part.scale(&weight));
        }
    }
    let lagrangian = Form::volume(&bundle).scalar_mul(&density);
    let check = lagrangian.euler_lagrange()?;
    debug_assert_eq!(&check, source, "vertical homotopy must invert the Euler-Lagrange map");
    if &check != source {
        return Err(InverseError::HelmholtzUnknown {
            certificate: Box::new(report.certificate),
        });
    }
    Ok(lagrangian)
}

/// Witness of variational triviality: `L - h_0(phi) = d_H xi`.
#[derive(Clone, Debug)]
pub struct TrivialityWitness {
    pub xi: Form,
    pub closed_part: Form,
}

/// Produces a `xi` with `L - h_0(phi) = d_H xi` for a variationally trivial
/// Lagrangian.
///
/// `closed_form`, when given, must be a closed `n`-form on the bundle itself
/// (no jet coordinates); it is verified, never searched for, and defaults to
/// zero, which suffices for contractible fibres.
pub fn triviality_witness(
    lagrangian: &Form,
    closed_form: Option<&Form>,
    config: AntiderivativeConfig,
) -> Result<TrivialityWitness, InverseError> {
    let bundle = lagrangian.bundle().clone();
    let source = lagrangian.euler_lagrange()?;
    if !source.is_zero() {
        return Err(InverseError::NotTrivial {
            certificate: source.to_string(),
        });
    }
    let phi = match closed_form {
        Some(phi) => {
            check_on_bundle(phi)?;
            let defect = phi.exterior_d();
            if !defect.is_zero() {
                return Err(InverseError::ClosedFormNotClosed {
                    defect: Box::new(defect),
                });
            }
            phi.clone()
        }
        None => Form::zero(&bundle),
    };
    let target = lagrangian - &phi.horizontal_part();
    let xi = horizontal_antiderivative(&target, config)?;
    Ok(TrivialityWitness {
        xi,
        closed_part: phi,
    })
}

fn check_on_bundle(phi: &Form) -> Result<(), InverseError> {
    // judge in the coordinate basis: contact coefficients legitimately pick
    // up jet variables through dy = theta + y dx
    let dy = DyForm::from_contact(phi);
    for (word, coeff) in dy.terms() {
        if coeff.jet_order() > 0 {
            return Err(InverseError::ClosedFormNotOnBundle(format!(
                "coefficient {coeff} depends on jet coordinates"
            )));
        }
        for g in word {
            if let DyGenerator::Dy(v) = g {
                if !v.index.is_empty() {
                    return Err(InverseError::ClosedFormNotOnBundle(
                        "differentiated fibre differential present".into(),
                    ));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{BundleSpec, JetVar, MultiIndex};
    use crate::forms::Generator;
    use rand::{Rng, SeedableRng};

    fn b1() -> BundleSpec {
        BundleSpec::new(["x"], ["u"]).unwrap()
    }

    fn bt() -> BundleSpec {
        BundleSpec::new(["t"], ["u"]).unwrap()
    }

    fn jet(b: &BundleSpec, positions: &[usize]) -> Expr {
        let mi = MultiIndex::from_positions(b.base_dim(), positions).unwrap();
        Expr::jet_var(b, JetVar::new(0, mi))
    }

    fn dx(b: &BundleSpec) -> Form {
        Form::generator(b, Generator::Dx(0))
    }

    #[test]
    fn helmholtz_self_adjoint_passes() {
        let b = b1();
        let e = SourceForm::new(&b, vec![-&jet(&b, &[0, 0])]).unwrap();
        let report = helmholtz_check(&e);
        assert!(report.passes());
        assert!(report.certificate.is_zero());
    }

    #[test]
    fn helmholtz_first_order_fails() {
        let b = b1();
        let e = SourceForm::new(&b, vec![jet(&b, &[0])]).unwrap();
        let report = helmholtz_check(&e);
        assert_eq!(report.verdict, Verdict::Fails);
        assert!(!report.certificate.is_zero());
        // linearity: scaling by a nonzero rational scales the certificate
        let scaled = SourceForm::new(&b, vec![jet(&b, &[0]).scale(&crate::expr::rat(3, 2))]).unwrap();
        let scaled_report = helmholtz_check(&scaled);
        assert_eq!(scaled_report.verdict, Verdict::Fails);
        assert_eq!(
            scaled_report.certificate,
            report.certificate.scale(&crate::expr::rat(3, 2))
        );
    }

    #[test]
    fn helmholtz_zero_passes() {
        let b = b1();
        assert!(helmholtz_check(&SourceForm::zero(&b)).passes());
    }

    #[test]
    fn triviality_examples() {
        let b = b1();
        let u = Expr::fiber_var(&b, 0);
        let u_x = jet(&b, &[0]);
        // L = 2 u u_x dx = d_x(u^2) dx
        let l = dx(&b).scalar_mul(&(&(&Expr::int(&b, 2) * &u) * &u_x));
        assert!(is_variationally_trivial(&l).unwrap());
        // L = 1/2 u_x^2 dx is not trivial
        let l2 = dx(&b).scalar_mul(&(&Expr::rational(&b, 1, 2) * &(&u_x * &u_x)));
        assert!(!is_variationally_trivial(&l2).unwrap());
        // mechanics family: (F_t + F_u u_t) dt for F = t u^2
        let bt = bt();
        let t = Expr::base_var(&bt, 0);
        let uu = Expr::fiber_var(&bt, 0);
        let u_t = jet(&bt, &[0]);
        let f_t = &uu * &uu;
        let f_u = &(&Expr::int(&bt, 2) * &t) * &uu;
        let l3 = dx(&bt).scalar_mul(&(&f_t + &(&f_u * &u_t)));
        assert!(is_variationally_trivial(&l3).unwrap());
    }

    #[test]
    fn antiderivative_recovers_potential() {
        let b = b1();
        let u = Expr::fiber_var(&b, 0);
        let u_x = jet(&b, &[0]);
        let sigma = dx(&b).scalar_mul(&(&(&Expr::int(&b, 2) * &u) * &u_x));
        let xi = horizontal_antiderivative(&sigma, AntiderivativeConfig::for_form(&sigma)).unwrap();
        assert_eq!(xi.d_h(), sigma);
        assert_eq!(xi, Form::scalar(&u * &u));
    }

    #[test]
    fn antiderivative_of_zero() {
        let b = b1();
        let zero = Form::zero(&b);
        let xi = horizontal_antiderivative(&zero, AntiderivativeConfig::new(1, 1)).unwrap();
        assert!(xi.is_zero());
    }

    #[test]
    fn antiderivative_matches_split_boundary_pattern() {
        // sigma = dL - delta_1 L for L = 1/2 u_x^2 dx is d_H of a (1,0)-form
        let b = b1();
        let u_x = jet(&b, &[0]);
        let l = dx(&b).scalar_mul(&(&Expr::rational(&b, 1, 2) * &(&u_x * &u_x)));
        let split = l.first_variational_split().unwrap();
        let sigma = &l.exterior_d() - &split.source.to_form();
        let xi = horizontal_antiderivative(&sigma, AntiderivativeConfig::new(2, 2)).unwrap();
        assert_eq!(xi.d_h(), sigma);
    }

    #[test]
    fn antiderivative_rejects_non_closed() {
        let b = b1();
        let u = Expr::fiber_var(&b, 0);
        let sigma = dx(&b).scalar_mul(&u);
        // d_H(u dx) = 0 on n = 1 only at top degree; use a (1,1) non-closed
        // input instead: sigma = u theta ^ dx has d_H = 0? No: build theta ^ dx
        // with coefficient u_x which is not closed.
        let theta = Form::generator(&b, Generator::theta(0, MultiIndex::empty(1)));
        let phi = theta.scalar_mul(&jet(&b, &[0]));
        assert!(!phi.d_h().is_zero());
        match horizontal_antiderivative(&phi.scalar_mul(&u), AntiderivativeConfig::new(2, 3)) {
            Err(InverseError::NotClosed { .. }) => {}
            other => panic!("expected NotClosed, got {other:?}"),
        }
        // top-degree forms are always d_H-closed, so this one goes through
        // the solver; x dx with too small a degree bound is a truncation miss
        let x = Expr::base_var(&b, 0);
        let sig2 = dx(&b).scalar_mul(&x);
        match horizontal_antiderivative(&sig2, AntiderivativeConfig::new(0, 1)) {
            Err(InverseError::NotExactInTruncation { residual, .. }) => {
                assert!(!residual.is_zero());
            }
            other => panic!("expected truncation miss, got {other:?}"),
        }
        // with a larger degree it succeeds: xi = x^2/2
        let xi = horizontal_antiderivative(&sig2, AntiderivativeConfig::new(0, 2)).unwrap();
        assert_eq!(xi.d_h(), sig2);
        let _ = sigma;
    }

    #[test]
    fn reconstruct_examples() {
        let b = b1();
        // E = -u_xx -> L = -1/2 u u_xx dx
        let e = SourceForm::new(&b, vec![-&jet(&b, &[0, 0])]).unwrap();
        let l = reconstruct_lagrangian(&e).unwrap();
        let expected =
            dx(&b).scalar_mul(&(&Expr::rational(&b, -1, 2) * &(&Expr::fiber_var(&b, 0) * &jet(&b, &[0, 0]))));
        assert_eq!(l, expected);
        assert_eq!(l.euler_lagrange().unwrap(), e);
        // E = 0 -> L = 0
        assert!(reconstruct_lagrangian(&SourceForm::zero(&b)).unwrap().is_zero());
        // E = u -> L = 1/2 u^2 dx
        let e2 = SourceForm::new(&b, vec![Expr::fiber_var(&b, 0)]).unwrap();
        let l2 = reconstruct_lagrangian(&e2).unwrap();
        let expected2 = dx(&b).scalar_mul(
            &(&Expr::rational(&b, 1, 2) * &(&Expr::fiber_var(&b, 0) * &Expr::fiber_var(&b, 0))),
        );
        assert_eq!(l2, expected2);
    }

    #[test]
    fn reconstruct_rejects_helmholtz_failures() {
        let b = b1();
        let e = SourceForm::new(&b, vec![jet(&b, &[0])]).unwrap();
        match reconstruct_lagrangian(&e) {
            Err(InverseError::HelmholtzFails { certificate }) => {
                assert!(!certificate.is_zero());
            }
            other => panic!("expected Helmholtz failure, got {other:?}"),
        }
    }

    #[test]
    fn reconstruct_base_only_source() {
        // y-independent components: L = y E(x) omega
        let b = b1();
        let x = Expr::base_var(&b, 0);
        let e = SourceForm::new(&b, vec![x.clone()]).unwrap();
        let l = reconstruct_lagrangian(&e).unwrap();
        assert_eq!(
            l,
            dx(&b).scalar_mul(&(&Expr::fiber_var(&b, 0) * &x))
        );
    }

    #[test]
    fn witness_examples() {
        let b = b1();
        let u = Expr::fiber_var(&b, 0);
        let u_x = jet(&b, &[0]);
        let l = dx(&b).scalar_mul(&(&(&Expr::int(&b, 2) * &u) * &u_x));
        let w = triviality_witness(&l, None, AntiderivativeConfig::new(1, 2)).unwrap();
        assert_eq!(w.xi.d_h(), l);
        assert!(w.closed_part.is_zero());
        // L = d_t(t u^2) dt
        let bt = bt();
        let t = Expr::base_var(&bt, 0);
        let uu = Expr::fiber_var(&bt, 0);
        let xi0 = Form::scalar(&t * &(&uu * &uu));
        let l2 = xi0.d_h();
        let w2 = triviality_witness(&l2, None, AntiderivativeConfig::new(1, 3)).unwrap();
        assert_eq!(w2.xi.d_h(), l2);
        // L = 0
        let w3 = triviality_witness(&Form::zero(&b), None, AntiderivativeConfig::new(1, 1)).unwrap();
        assert!(w3.xi.is_zero());
    }

    #[test]
    fn witness_rejects_non_trivial_and_non_closed() {
        let b = b1();
        let u_x = jet(&b, &[0]);
        let l = dx(&b).scalar_mul(&(&Expr::rational(&b, 1, 2) * &(&u_x * &u_x)));
        assert!(matches!(
            triviality_witness(&l, None, AntiderivativeConfig::new(2, 2)),
            Err(InverseError::NotTrivial { .. })
        ));
        // a non-closed phi is rejected: phi = u dx has d phi != 0
        let trivial = Form::zero(&b);
        let phi = dx(&b).scalar_mul(&Expr::fiber_var(&b, 0));
        assert!(matches!(
            triviality_witness(&trivial, Some(&phi), AntiderivativeConfig::new(1, 1)),
            Err(InverseError::ClosedFormNotClosed { .. })
        ));
    }

    #[test]
    fn random_roundtrip_until_exact() {
        let bundles = [b1(), bt()];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        for _ in 0..10 {
            let b = &bundles[rng.gen_range(0..bundles.len())];
            let l = crate::random::random_lagrangian(&mut rng, b, 2, 3, 2);
            let e = l.euler_lagrange().unwrap();
            assert!(helmholtz_check(&e).passes(), "EL image satisfies Helmholtz");
            let l2 = reconstruct_lagrangian(&e).unwrap();
            assert_eq!(l2.euler_lagrange().unwrap(), e);
        }
    }
}
