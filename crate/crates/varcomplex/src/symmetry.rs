//! Evolutionary vector fields, their infinite prolongation, Lie derivatives,
//! and Noether symmetry currents from the first variational formula.

use std::fmt;

use crate::bundle::BundleSpec;
use crate::expr::Expr;
use crate::forms::{Form, FormError, SourceForm};
use crate::varops::VariationalSplit;

/// Vertical (or generalized evolutionary) vector field `u = u^i d/dy^i`.
///
/// When no component depends on jet variables of order one or more this is a
/// vertical field on the bundle itself; generalized components are accepted
/// and every implemented identity holds verbatim for them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvolutionaryField {
    bundle: BundleSpec,
    components: Vec<Expr>,
}

impl EvolutionaryField {
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
        Ok(EvolutionaryField {
            bundle: bundle.clone(),
            components,
        })
    }

    pub fn zero(bundle: &BundleSpec) -> Self {
        EvolutionaryField {
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

    /// True when some component depends on a jet variable of order >= 1.
    pub fn is_generalized(&self) -> bool {
        self.components.iter().any(|c| c.jet_order() >= 1)
    }

    /// Applies the prolongation `J^inf u = d_Lambda(u^i) partial^Lambda_i`
    /// to a scalar; a derivation of the function ring.
    pub fn prolong_apply(&self, f: &Expr) -> Expr {
        let mut out = Expr::zero(&self.bundle);
        for v in f.jet_support() {
            let part = f.partial_jet(&v);
            if part.is_zero() {
                continue;
            }
            let coeff = self.components[v.fiber].total_derivative_iterated(&v.index);
            out = &out + &(&coeff * &part);
        }
        out
    }

    /// Interior product `J^inf u | phi`: kills `dx^lambda` and sends
    /// `theta^i_Lambda` to `d_Lambda(u^i)`.
    pub fn contract(&self, phi: &Form) -> Form {
        phi.contract_map(&|v| self.components[v.fiber].total_derivative_iterated(&v.index))
    }

    /// Lie derivative by the Cartan formula
    /// `L_u phi = J^inf u | d phi + d (J^inf u | phi)`.
    pub fn lie_derivative(&self, phi: &Form) -> Form {
        let a = self.contract(&phi.exterior_d());
        let b = self.contract(phi).exterior_d();
        &a + &b
    }

    /// Contraction with a source form: `u | (E_i theta^i ^ omega) =
    /// u^i E_i omega`.
    pub fn contract_source(&self, source: &SourceForm) -> Form {
        let mut density = Expr::zero(&self.bundle);
        for (i, e) in source.components().iter().enumerate() {
            density = &density + &(&self.components[i] * e);
        }
        Form::volume(&self.bundle).scalar_mul(&density)
    }

    /// The symmetry current `J_u = -(J^inf u | phi)` with `phi` the boundary
    /// form of the first variational formula; a `(0, n-1)`-form.
    pub fn noether_current(&self, lagrangian: &Form) -> Result<Form, FormError> {
        let split = lagrangian.first_variational_split()?;
        Ok(self.noether_current_from_split(&split))
    }

    pub fn noether_current_from_split(&self, split: &VariationalSplit) -> Form {
        (-&self.contract(&split.boundary)).project_contact(0)
    }

    /// Expands the Lie-derivative identity
    /// `L_u L = u | delta(L) - d_H(J^inf u | phi)` and the weak conservation
    /// law behind it; see [`ConservationReport`].
    pub fn conservation_check(&self, lagrangian: &Form) -> Result<ConservationReport, FormError> {
        let split = lagrangian.first_variational_split()?;
        let lie = self.lie_derivative(lagrangian);
        let source_term = self.contract_source(&split.source);
        let boundary_term = self.contract(&split.boundary).d_h();
        let identity_holds = (&lie - &(&source_term - &boundary_term)).is_zero();
        let current = self.noether_current_from_split(&split);
        // d_H J_u + u^i E_i omega equals L_u L; exactly zero on symmetries.
        let divergence_form = &current.d_h() + &source_term;
        let on_shell_divergence = divergence_form.lagrangian_density()?;
        Ok(ConservationReport {
            is_symmetry: lie.is_zero(),
            identity_holds,
            on_shell_divergence,
            current,
        })
    }
}

impl fmt::Display for EvolutionaryField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.components.iter().enumerate() {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{} -> {}", self.bundle.fiber_name(i), c)?;
            first = false;
        }
        Ok(())
    }
}

/// Outcome of [`EvolutionaryField::conservation_check`].
///
/// `identity_holds` re-derives the first-variational identity by expansion
/// and is expected true for every pair; `is_symmetry` records `L_u L = 0`;
/// `on_shell_divergence` is the density of `d_H J_u + u^i E_i omega`, which
/// vanishes exactly for symmetries and exhibits `d_H J_u ~ 0` on the shell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConservationReport {
    pub is_symmetry: bool,
    pub identity_holds: bool,
    pub on_shell_divergence: Expr,
    pub current: Form,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{JetVar, MultiIndex};
    use crate::forms::Generator;
    use rand::{Rng, SeedableRng};

    fn bt() -> BundleSpec {
        BundleSpec::new(["t"], ["u"]).unwrap()
    }

    fn b2() -> BundleSpec {
        BundleSpec::new(["t", "x"], ["u"]).unwrap()
    }

    fn jet(b: &BundleSpec, positions: &[usize]) -> Expr {
        let mi = MultiIndex::from_positions(b.base_dim(), positions).unwrap();
        Expr::jet_var(b, JetVar::new(0, mi))
    }

    fn translation(b: &BundleSpec) -> EvolutionaryField {
        EvolutionaryField::new(b, vec![Expr::int(b, 1)]).unwrap()
    }

    #[test]
    fn prolong_translation_field() {
        let b = bt();
        let u = translation(&b);
        // derivatives of order >= 1 are annihilated: d_Lambda(1) = 0
        assert!(u.prolong_apply(&jet(&b, &[0, 0])).is_zero());
        // the fibre coordinate itself maps to 1
        assert_eq!(u.prolong_apply(&Expr::fiber_var(&b, 0)), Expr::int(&b, 1));
        assert!(!u.is_generalized());
    }

    #[test]
    fn prolong_scaling_field() {
        let b = bt();
        let scaling = EvolutionaryField::new(&b, vec![Expr::fiber_var(&b, 0)]).unwrap();
        let u_t = jet(&b, &[0]);
        assert_eq!(scaling.prolong_apply(&u_t), u_t);
    }

    #[test]
    fn prolong_zero_field() {
        let b = bt();
        let zero = EvolutionaryField::zero(&b);
        assert!(zero.prolong_apply(&jet(&b, &[0])).is_zero());
        assert!(zero.is_zero());
    }

    #[test]
    fn prolongation_commutes_with_total_derivatives() {
        let b = b2();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(43);
        for _ in 0..25 {
            let u = crate::random::random_field(&mut rng, &b, 1, 2);
            let f = crate::random::random_poly_expr(&mut rng, &b, 2, 3, 3);
            let lambda = rng.gen_range(0..2);
            let lhs = u.prolong_apply(&f.total_derivative(lambda));
            let rhs = u.prolong_apply(&f).total_derivative(lambda);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn lie_derivative_examples() {
        let b = bt();
        let u = translation(&b);
        let dt = Form::generator(&b, Generator::Dx(0));
        // directional derivative of u^2 dt
        let sq = dt.scalar_mul(&(&Expr::fiber_var(&b, 0) * &Expr::fiber_var(&b, 0)));
        let expected = dt.scalar_mul(&(&Expr::int(&b, 2) * &Expr::fiber_var(&b, 0)));
        assert_eq!(u.lie_derivative(&sq), expected);
        // horizontal generators are invariant under vertical fields
        assert!(u.lie_derivative(&dt).is_zero());
        // zero field
        let zero = EvolutionaryField::zero(&b);
        assert!(zero.lie_derivative(&sq).is_zero());
    }

    #[test]
    fn contraction_anticommutes_with_dh() {
        let b = b2();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(47);
        for _ in 0..20 {
            let u = crate::random::random_field(&mut rng, &b, 1, 2);
            let k = rng.gen_range(0..=2usize);
            let s = rng.gen_range(0..=1usize);
            let phi = crate::random::random_form(&mut rng, &b, k, s, 2, 2, 2);
            let lhs = u.contract(&phi.d_h());
            let rhs = -&u.contract(&phi).d_h();
            assert_eq!(lhs, rhs, "iota d_H = -d_H iota");
        }
    }

    #[test]
    fn free_particle_momentum_conservation() {
        // L = 1/2 u_t^2 dt with the translation field: J = u_t and
        // d_t J + u E = 0 with E = -u_tt.
        let b = bt();
        let u_t = jet(&b, &[0]);
        let dt = Form::generator(&b, Generator::Dx(0));
        let l = dt.scalar_mul(&(&Expr::rational(&b, 1, 2) * &(&u_t * &u_t)));
        let u = translation(&b);
        let report = u.conservation_check(&l).unwrap();
        assert!(report.is_symmetry);
        assert!(report.identity_holds);
        assert!(report.on_shell_divergence.is_zero());
        assert_eq!(report.current, Form::scalar(u_t.clone()));
        // d_t J = u_tt = -E
        let e = l.euler_lagrange().unwrap();
        assert_eq!(*e.component(0), -&jet(&b, &[0, 0]));
    }

    #[test]
    fn non_symmetry_still_satisfies_identity() {
        let b = bt();
        let u = translation(&b);
        let dt = Form::generator(&b, Generator::Dx(0));
        let l = dt.scalar_mul(
            &(&Expr::rational(&b, 1, 2) * &(&Expr::fiber_var(&b, 0) * &Expr::fiber_var(&b, 0))),
        );
        let report = u.conservation_check(&l).unwrap();
        assert!(!report.is_symmetry);
        assert!(report.identity_holds);
        assert_eq!(report.on_shell_divergence, Expr::fiber_var(&b, 0));
    }

    #[test]
    fn zero_field_is_trivially_conserved() {
        let b = bt();
        let dt = Form::generator(&b, Generator::Dx(0));
        let u_t = jet(&b, &[0]);
        let l = dt.scalar_mul(&(&u_t * &u_t));
        let zero = EvolutionaryField::zero(&b);
        let report = zero.conservation_check(&l).unwrap();
        assert!(report.is_symmetry);
        assert!(report.identity_holds);
        assert!(report.current.is_zero());
        assert!(report.on_shell_divergence.is_zero());
        // a Lagrangian without jet dependence has no boundary term
        let l0 = dt.scalar_mul(&Expr::fiber_var(&b, 0));
        let u = translation(&b);
        assert!(u.noether_current(&l0).unwrap().is_zero());
    }

    #[test]
    fn identity_holds_for_random_pairs() {
        let bundles = [bt(), b2()];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(53);
        for _ in 0..25 {
            let b = &bundles[rng.gen_range(0..bundles.len())];
            let u = crate::random::random_field(&mut rng, b, 1, 2);
            let l = crate::random::random_lagrangian(&mut rng, b, 2, 3, 3);
            let report = u.conservation_check(&l).unwrap();
            assert!(report.identity_holds);
        }
    }

    #[test]
    fn derivative_only_lagrangians_are_translation_symmetric() {
        // densities built from derivatives only (no bare u, no explicit base
        // point) are invariant under translation
        let b = b2();
        let u = translation(&b);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(59);
        for _ in 0..15 {
            let mut density = Expr::zero(&b);
            for _ in 0..rng.gen_range(1..=3) {
                let mut term = Expr::constant(&b, crate::random::random_rational(&mut rng));
                for _ in 0..rng.gen_range(1..=2) {
                    let order = rng.gen_range(1..=2u32);
                    let mut positions = Vec::new();
                    for _ in 0..order {
                        positions.push(rng.gen_range(0..2usize));
                    }
                    term = &term * &jet(&b, &positions);
                }
                density = &density + &term;
            }
            let l = Form::volume(&b).scalar_mul(&density);
            let report = u.conservation_check(&l).unwrap();
            assert!(report.is_symmetry);
            assert!(report.on_shell_divergence.is_zero());
        }
    }

    #[test]
    fn peel_orders_differ_by_dh_closed_current() {
        use crate::varops::PeelOrder;
        let b = b2();
        let u_tx = jet(&b, &[0, 1]);
        let l = Form::volume(&b).scalar_mul(&(&Expr::rational(&b, 1, 2) * &(&u_tx * &u_tx)));
        let field = translation(&b);
        let s1 = l
            .first_variational_split_with(PeelOrder::SmallestBaseFirst)
            .unwrap();
        let s2 = l
            .first_variational_split_with(PeelOrder::LargestBaseFirst)
            .unwrap();
        assert!(s1.verify(&l) && s2.verify(&l));
        let j1 = field.noether_current_from_split(&s1);
        let j2 = field.noether_current_from_split(&s2);
        assert_ne!(j1, j2, "the peel order must matter for mixed derivatives");
        assert!((&j1 - &j2).d_h().is_zero(), "currents differ by a d_H-closed form");
    }
}
