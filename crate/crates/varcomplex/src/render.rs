//! LaTeX and JSON output for expressions and forms.
//!
//! The plain-text rendering lives on the `Display` impls and doubles as the
//! grammar; JSON serializes forms as `{coeff, word}` records in canonical
//! order with grammar-parseable pieces, so parsing the JSON back yields the
//! identical normalized value.

use num_rational::BigRational;
use num_traits::{One, Signed};
use serde_json::{json, Value as Json};

use crate::bundle::BundleSpec;
use crate::expr::{Atom, Expr};
use crate::forms::{Form, Generator, SourceForm};
use crate::parse;

fn latex_rational(c: &BigRational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", c.numer(), c.denom())
    }
}

fn latex_atom(bundle: &BundleSpec, atom: &Atom) -> String {
    match atom {
        Atom::Base(lambda) => bundle.base_name(*lambda).to_string(),
        Atom::Jet(v) => {
            if v.index.is_empty() {
                bundle.fiber_name(v.fiber).to_string()
            } else {
                format!(
                    "{}_{{{}}}",
                    bundle.fiber_name(v.fiber),
                    v.index.subscript(bundle)
                )
            }
        }
        Atom::Apply(f, arg) => format!("\\{}({})", f.name(), latex_expr(arg)),
    }
}

/// LaTeX for a scalar, canonical term order.
pub fn latex_expr(expr: &Expr) -> String {
    if expr.is_zero() {
        return "0".to_string();
    }
    let bundle = expr.bundle();
    let mut out = String::new();
    for (k, (mono, coeff)) in expr.terms().enumerate() {
        let neg = coeff.is_negative();
        let mag = coeff.abs();
        if k == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let atoms: Vec<String> = mono
            .iter()
            .map(|(a, p)| {
                let base = latex_atom(bundle, a);
                if p == 1 {
                    base
                } else {
                    format!("{base}^{{{p}}}")
                }
            })
            .collect();
        if atoms.is_empty() {
            out.push_str(&latex_rational(&mag));
        } else {
            if !mag.is_one() {
                out.push_str(&latex_rational(&mag));
            }
            out.push_str(&atoms.join("\\,"));
        }
    }
    out
}

fn latex_generator(bundle: &BundleSpec, g: &Generator) -> String {
    match g {
        Generator::Dx(lambda) => format!("d{}", bundle.base_name(*lambda)),
        Generator::Theta(v) => {
            if v.index.is_empty() {
                format!("\\theta^{{{}}}", bundle.fiber_name(v.fiber))
            } else {
                format!(
                    "\\theta^{{{}}}_{{{}}}",
                    bundle.fiber_name(v.fiber),
                    v.index.subscript(bundle)
                )
            }
        }
    }
}

fn latex_terms(bundle: &BundleSpec, terms: &[(Expr, Vec<Generator>)]) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (k, (coeff, word)) in terms.iter().enumerate() {
        let word_latex = word
            .iter()
            .map(|g| latex_generator(bundle, g))
            .collect::<Vec<_>>()
            .join("\\wedge ");
        let one_term = coeff.term_count() == 1;
        let coeff_latex = latex_expr(coeff);
        let (neg, body) = if word.is_empty() {
            (false, coeff_latex)
        } else if one_term {
            match coeff_latex.strip_prefix('-') {
                Some("1") => (true, word_latex),
                Some(rest) => (true, format!("{rest}\\,{word_latex}")),
                None if coeff_latex == "1" => (false, word_latex),
                None => (false, format!("{coeff_latex}\\,{word_latex}")),
            }
        } else {
            (false, format!("\\left({coeff_latex}\\right)\\,{word_latex}"))
        };
        if k == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        out.push_str(&body);
    }
    out
}

/// LaTeX for a form, contact generators first.
pub fn latex_form(form: &Form) -> String {
    latex_terms(form.bundle(), &form.presented_terms())
}

/// LaTeX for a source form in the `E_i theta^i ^ omega` presentation.
pub fn latex_source(source: &SourceForm) -> String {
    let bundle = source.bundle();
    let mut terms = Vec::new();
    for (i, e) in source.components().iter().enumerate() {
        if e.is_zero() {
            continue;
        }
        let mut word = vec![Generator::Theta(crate::bundle::JetVar::base(
            i,
            bundle.base_dim(),
        ))];
        word.extend((0..bundle.base_dim()).map(Generator::Dx));
        terms.push((e.clone(), word));
    }
    latex_terms(bundle, &terms)
}

/// JSON for a form: a list of `{coeff, word}` records in canonical order,
/// words presented contact-first.
pub fn form_to_json(form: &Form) -> Json {
    let bundle = form.bundle();
    let terms: Vec<Json> = form
        .presented_terms()
        .iter()
        .map(|(coeff, word)| {
            json!({
                "coeff": coeff.to_string(),
                "word": word
                    .iter()
                    .map(|g| g.display_name(bundle))
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    Json::Array(terms)
}

/// Parses the output of [`form_to_json`] back into a form.
pub fn form_from_json(bundle: &BundleSpec, value: &Json) -> Result<Form, String> {
    let Json::Array(terms) = value else {
        return Err("expected an array of {coeff, word} records".into());
    };
    let mut out = Form::zero(bundle);
    for term in terms {
        let coeff_text = term
            .get("coeff")
            .and_then(Json::as_str)
            .ok_or("term is missing a `coeff` string")?;
        let coeff = parse::parse_expr(bundle, coeff_text).map_err(|e| e.to_string())?;
        let mut piece = Form::scalar(coeff);
        let word = term
            .get("word")
            .and_then(Json::as_array)
            .ok_or("term is missing a `word` array")?;
        for atom in word {
            let text = atom.as_str().ok_or("word entries must be strings")?;
            let generator = parse::parse_form(bundle, text).map_err(|e| e.to_string())?;
            piece = piece.wedge(&generator).map_err(|e| e.to_string())?;
        }
        out = &out + &piece;
    }
    Ok(out)
}

/// JSON for a source form: component strings keyed by fibre name.
pub fn source_to_json(source: &SourceForm) -> Json {
    let bundle = source.bundle();
    let mut map = serde_json::Map::new();
    for (i, e) in source.components().iter().enumerate() {
        map.insert(bundle.fiber_name(i).to_string(), json!(e.to_string()));
    }
    Json::Object(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{JetVar, MultiIndex};
    use rand::{Rng, SeedableRng};

    fn b1() -> BundleSpec {
        BundleSpec::new(["x"], ["u"]).unwrap()
    }

    #[test]
    fn latex_golden_source_form() {
        let b = b1();
        let u_xx = Expr::jet_var(
            &b,
            JetVar::new(0, MultiIndex::from_positions(1, &[0, 0]).unwrap()),
        );
        let src = SourceForm::new(&b, vec![-&u_xx]).unwrap();
        assert_eq!(latex_source(&src), "-u_{xx}\\,\\theta^{u}\\wedge dx");
    }

    #[test]
    fn latex_zero_and_fractions() {
        let b = b1();
        assert_eq!(latex_form(&Form::zero(&b)), "0");
        let e = Expr::rational(&b, 1, 2);
        let u_x = Expr::jet_var(&b, JetVar::new(0, MultiIndex::from_positions(1, &[0]).unwrap()));
        let l = &e * &(&u_x * &u_x);
        assert_eq!(latex_expr(&l), "\\frac{1}{2}u_{x}^{2}");
    }

    #[test]
    fn json_round_trip_random() {
        let b = BundleSpec::new(["t", "x"], ["u"]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(83);
        for _ in 0..25 {
            let k = rng.gen_range(0..=2usize);
            let s = rng.gen_range(0..=2usize);
            let f = crate::random::random_form(&mut rng, &b, k, s, 2, 2, 3);
            let encoded = form_to_json(&f);
            let decoded = form_from_json(&b, &encoded).unwrap();
            assert_eq!(decoded, f);
        }
    }
}
