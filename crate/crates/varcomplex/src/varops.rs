//! The bicomplex operators: exterior differential, its horizontal/vertical
//! splitting, the interior Euler projector, the variational operator, the
//! Euler-Lagrange map, and the constructive first variational formula.
//!
//! Sign conventions follow `d_H(phi) = dx^lambda ^ d_lambda(phi)` and
//! `d theta^i_Lambda = dx^lambda ^ theta^i_{lambda+Lambda}`; every composite
//! identity (nilpotency, `tau^2 = tau`, `tau d_H = 0`, `delta^2 = 0`,
//! agreement of the two Euler-Lagrange routes) is convention-independent and
//! covered by the randomized identity battery.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::bundle::JetVar;
use crate::expr::Expr;
use crate::forms::{Form, FormError, Generator, SourceForm};

impl Form {
    pub(crate) fn single_word(bundle: &crate::bundle::BundleSpec, word: &[Generator]) -> Form {
        let mut out = Form::zero(bundle);
        out.add_term(word.to_vec(), Expr::int(bundle, 1));
        out
    }

    /// Exterior differential in the contact basis:
    /// `d(c w) = dc ^ w + c dw` with `dc = d_lambda(c) dx^lambda +
    /// partial^Lambda_i(c) theta^i_Lambda` and
    /// `d theta^i_Lambda = dx^lambda ^ theta^i_{lambda+Lambda}`.
    pub fn exterior_d(&self) -> Form {
        let b = self.bundle().clone();
        let mut out = Form::zero(&b);
        for (word, coeff) in self.terms() {
            let w_form = Form::single_word(&b, word);

            let mut dc = Form::zero(&b);
            for lambda in 0..b.base_dim() {
                let part = coeff.total_derivative(lambda);
                if !part.is_zero() {
                    dc = &dc + &Form::generator(&b, Generator::Dx(lambda)).scalar_mul(&part);
                }
            }
            for v in coeff.jet_support() {
                let part = coeff.partial_jet(&v);
                if !part.is_zero() {
                    dc = &dc + &Form::generator(&b, Generator::Theta(v)).scalar_mul(&part);
                }
            }
            out = &out + &dc.wedge(&w_form).expect("same bundle");

            for (j, g) in word.iter().enumerate() {
                let Generator::Theta(v) = g else { continue };
                let mut dg = Form::zero(&b);
                for lambda in 0..b.base_dim() {
                    let raised = Generator::Theta(v.raise(lambda).expect("index in range"));
                    let piece = Form::generator(&b, Generator::Dx(lambda))
                        .wedge(&Form::generator(&b, raised))
                        .expect("same bundle");
                    dg = &dg + &piece;
                }
                let prefix = Form::single_word(&b, &word[..j]);
                let suffix = Form::single_word(&b, &word[j + 1..]);
                let mut piece = prefix
                    .wedge(&dg)
                    .expect("same bundle")
                    .wedge(&suffix)
                    .expect("same bundle")
                    .scalar_mul(coeff);
                if j % 2 == 1 {
                    piece = -&piece;
                }
                out = &out + &piece;
            }
        }
        out
    }

    /// Horizontal differential `d_H(phi) = dx^lambda ^ d_lambda(phi)`.
    pub fn d_h(&self) -> Form {
        let b = self.bundle().clone();
        let mut out = Form::zero(&b);
        for lambda in 0..b.base_dim() {
            let piece = Form::generator(&b, Generator::Dx(lambda))
                .wedge(&self.d_lambda(lambda))
                .expect("same bundle");
            out = &out + &piece;
        }
        out
    }

    /// Vertical differential `d_V(phi) = theta^i_Lambda ^
    /// partial^Lambda_i(phi)`; generators are vertically constant in the
    /// contact basis, so only coefficients contribute.
    pub fn d_v(&self) -> Form {
        let b = self.bundle().clone();
        let mut out = Form::zero(&b);
        for (word, coeff) in self.terms() {
            let w_form = Form::single_word(&b, word);
            for v in coeff.jet_support() {
                let part = coeff.partial_jet(&v);
                if part.is_zero() {
                    continue;
                }
                let piece = Form::generator(&b, Generator::Theta(v))
                    .scalar_mul(&part)
                    .wedge(&w_form)
                    .expect("same bundle");
                out = &out + &piece;
            }
        }
        out
    }

    /// The interior Euler projector `tau = sum_{k>0} (1/k) taubar h_k h^n`
    /// with `taubar(phi) = (-1)^{|Lambda|} theta^i ^
    /// d_Lambda(partial^Lambda_i | phi)`, the sum running over the contact
    /// generators actually present. Zero on anything below top horizontal
    /// degree or of contact degree zero; idempotent; kills `d_H`-exact forms.
    pub fn tau(&self) -> Form {
        let b = self.bundle().clone();
        let n = b.base_dim();
        let top = self.project_horizontal(n).expect("top degree is valid");
        let mut out = Form::zero(&b);
        let contact_degrees: BTreeSet<usize> =
            top.bidegrees().into_iter().map(|(k, _)| k).collect();
        for k in contact_degrees {
            if k == 0 {
                continue;
            }
            let part = top.project_contact(k);
            let mut generators: BTreeSet<JetVar> = BTreeSet::new();
            for (word, _) in part.terms() {
                for g in word {
                    if let Generator::Theta(v) = g {
                        generators.insert(v.clone());
                    }
                }
            }
            let inv_k = BigRational::new(BigInt::from(1), BigInt::from(k as i64));
            for v in generators {
                let contracted = part.contract_theta(v.fiber, &v.index);
                if contracted.is_zero() {
                    continue;
                }
                let shifted = contracted.d_iterated(&v.index);
                let theta0 = Form::generator(&b, Generator::Theta(JetVar::base(v.fiber, n)));
                let mut piece = theta0.wedge(&shifted).expect("same bundle").scale(&inv_k);
                if v.index.order() % 2 == 1 {
                    piece = -&piece;
                }
                out = &out + &piece;
            }
        }
        out
    }

    /// The variational operator `delta = tau . d` on forms of top horizontal
    /// degree: the Euler-Lagrange map on `(0,n)`-forms and the
    /// Helmholtz-Sonin map on source forms.
    pub fn delta(&self) -> Result<Form, FormError> {
        let n = self.bundle().base_dim();
        for (_, s) in self.bidegrees() {
            if s != n {
                return Err(FormError::NotTopHorizontal { found: s, top: n });
            }
        }
        Ok(self.exterior_d().tau())
    }

    /// Euler-Lagrange components by the direct formula
    /// `E_i = sum_Lambda (-1)^{|Lambda|} d_Lambda(partial^Lambda_i l)`,
    /// summed over the finite jet support of the density. An independent
    /// route to `delta` on Lagrangians.
    pub fn euler_lagrange(&self) -> Result<SourceForm, FormError> {
        let density = self.lagrangian_density()?;
        let b = self.bundle();
        let mut components = vec![Expr::zero(b); b.fiber_dim()];
        for v in density.jet_support() {
            let part = density.partial_jet(&v);
            if part.is_zero() {
                continue;
            }
            let mut term = part.total_derivative_iterated(&v.index);
            if v.index.order() % 2 == 1 {
                term = -&term;
            }
            components[v.fiber] = &components[v.fiber] + &term;
        }
        SourceForm::new(b, components)
    }

    /// The first variational formula `dL = delta_1(L) + d_H(phi)` computed
    /// constructively; see [`VariationalSplit`].
    pub fn first_variational_split(&self) -> Result<VariationalSplit, FormError> {
        self.first_variational_split_with(PeelOrder::SmallestBaseFirst)
    }

    /// As [`Form::first_variational_split`], with an explicit
    /// integration-by-parts peeling rule. The boundary form depends on the
    /// rule; the two results differ by a `d_H`-closed form.
    pub fn first_variational_split_with(
        &self,
        order: PeelOrder,
    ) -> Result<VariationalSplit, FormError> {
        let density = self.lagrangian_density()?;
        let b = self.bundle().clone();
        // dL = partial^Lambda_i(l) theta^i_Lambda ^ omega; peel one base
        // direction at a time:
        //   c theta^i_{lambda+Lambda} ^ omega
        //     = d_H(-c theta^i_Lambda ^ omega_lambda)
        //       - d_lambda(c) theta^i_Lambda ^ omega.
        let mut queue: Vec<(Expr, JetVar)> = Vec::new();
        for v in density.jet_support() {
            let c = density.partial_jet(&v);
            if !c.is_zero() {
                queue.push((c, v));
            }
        }
        let mut components = vec![Expr::zero(&b); b.fiber_dim()];
        let mut boundary = Form::zero(&b);
        while let Some((c, v)) = queue.pop() {
            let Some(lambda) = (match order {
                PeelOrder::SmallestBaseFirst => v.index.smallest_direction(),
                PeelOrder::LargestBaseFirst => v.index.largest_direction(),
            }) else {
                components[v.fiber] = &components[v.fiber] + &c;
                continue;
            };
            let lower = JetVar::new(v.fiber, v.index.remove(lambda).expect("direction present"));
            let theta = Form::generator(&b, Generator::Theta(lower.clone()));
            let piece = theta
                .wedge(&Form::volume_contracted(&b, lambda))
                .expect("same bundle")
                .scalar_mul(&(-&c));
            boundary = &boundary + &piece;
            let next = -&c.total_derivative(lambda);
            if !next.is_zero() {
                queue.push((next, lower));
            }
        }
        let source = SourceForm::new(&b, components)?;
        let split = VariationalSplit { source, boundary };
        debug_assert!(split.verify(self), "first variational formula must balance");
        Ok(split)
    }
}

/// Which base direction the integration-by-parts rewriting removes first
/// from the highest-order contact generator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PeelOrder {
    #[default]
    SmallestBaseFirst,
    LargestBaseFirst,
}

/// Result of the first variational formula: `dL = source + d_H(boundary)`,
/// with `source` the Euler-Lagrange form and `boundary` of bidegree
/// `(1, n-1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariationalSplit {
    pub source: SourceForm,
    pub boundary: Form,
}

impl VariationalSplit {
    /// Re-expands `dL - source - d_H(boundary)` and checks it is exactly
    /// zero.
    pub fn verify(&self, lagrangian: &Form) -> bool {
        let lhs = lagrangian.exterior_d();
        let rhs = &self.source.to_form() + &self.boundary.d_h();
        (&lhs - &rhs).is_zero()
    }
}

impl SourceForm {
    /// The Helmholtz-Sonin map: `delta` applied to the source form seen as a
    /// `(1, n)`-form.
    pub fn delta(&self) -> Form {
        self.to_form().delta().expect("source forms are top horizontal")
    }
}
