//! Problem-file schema and inline-flag expansion.
//!
//! A problem is a JSON document; inline flags assemble the same document, so
//! there is exactly one parser. Fields are validated against the bundle with
//! field-path diagnostics.

use serde_json::Value as Json;

use varcomplex::cohomlab::TruncationSpec;
use varcomplex::parse::{parse_expr, parse_form};
use varcomplex::{BundleSpec, EvolutionaryField, Form, SourceForm};

use crate::CliError;

const KNOWN_FIELDS: &[&str] = &[
    "bundle",
    "lagrangian",
    "source_form",
    "vector_field",
    "closed_form",
    "form",
    "operator",
    "truncation",
    "seed",
    "cases",
];

/// Fully resolved problem: every expression parsed and normalized against
/// the declared bundle.
pub struct ProblemFile {
    pub bundle: BundleSpec,
    pub lagrangian: Option<Form>,
    pub source_form: Option<SourceForm>,
    pub vector_field: Option<EvolutionaryField>,
    pub closed_form: Option<Form>,
    pub form: Option<Form>,
    pub operator: Option<String>,
    pub truncation: Option<TruncationSpec>,
    pub seed: Option<u64>,
    pub cases: Option<u32>,
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

fn string_list(value: &Json, path: &str) -> Result<Vec<String>, CliError> {
    let Json::Array(items) = value else {
        return Err(usage(format!("{path}: expected an array of strings")));
    };
    items
        .iter()
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| usage(format!("{path}: expected an array of strings")))
        })
        .collect()
}

fn parse_density(bundle: &BundleSpec, text: &str, path: &str) -> Result<Form, CliError> {
    // a Lagrangian may be given as a density (scalar) or as a full
    // (0, n)-form
    let form = parse_form(bundle, text).map_err(|e| usage(format!("{path}: {e}")))?;
    let n = bundle.base_dim();
    match form.pure_bidegree() {
        None if form.is_zero() => Ok(form),
        Some((0, 0)) => {
            let density = form
                .coefficient(&[])
                .cloned()
                .unwrap_or_else(|| varcomplex::Expr::zero(bundle));
            Ok(Form::volume(bundle).scalar_mul(&density))
        }
        Some((0, s)) if s == n => Ok(form),
        _ => Err(usage(format!(
            "{path}: a Lagrangian must be a scalar density or a horizontal volume form"
        ))),
    }
}

fn component_map(
    bundle: &BundleSpec,
    value: &Json,
    path: &str,
) -> Result<Vec<varcomplex::Expr>, CliError> {
    let Json::Object(map) = value else {
        return Err(usage(format!(
            "{path}: expected an object mapping fibre names to expressions"
        )));
    };
    let mut components = vec![varcomplex::Expr::zero(bundle); bundle.fiber_dim()];
    for (name, entry) in map {
        let Some(i) = bundle.fiber_index(name) else {
            return Err(usage(format!("{path}.{name}: unknown fibre coordinate")));
        };
        let text = entry
            .as_str()
            .ok_or_else(|| usage(format!("{path}.{name}: expected an expression string")))?;
        components[i] =
            parse_expr(bundle, text).map_err(|e| usage(format!("{path}.{name}: {e}")))?;
    }
    Ok(components)
}

fn u32_field(value: &Json, path: &str) -> Result<u32, CliError> {
    value
        .as_u64()
        .and_then(|v| u32::try_from(v).ok())
        .ok_or_else(|| usage(format!("{path}: expected a small nonnegative integer")))
}

impl ProblemFile {
    /// Parses and resolves a problem document.
    pub fn from_json(doc: &Json) -> Result<Self, CliError> {
        let Json::Object(map) = doc else {
            return Err(usage("problem document must be a JSON object"));
        };
        for key in map.keys() {
            if !KNOWN_FIELDS.contains(&key.as_str()) {
                return Err(usage(format!("unknown field `{key}` in problem document")));
            }
        }
        let bundle_value = map
            .get("bundle")
            .ok_or_else(|| usage("missing required field `bundle`"))?;
        let Json::Object(bundle_map) = bundle_value else {
            return Err(usage("bundle: expected an object with `base` and `fiber`"));
        };
        for key in bundle_map.keys() {
            if key != "base" && key != "fiber" {
                return Err(usage(format!("unknown field `bundle.{key}`")));
            }
        }
        let base = string_list(
            bundle_map
                .get("base")
                .ok_or_else(|| usage("missing required field `bundle.base`"))?,
            "bundle.base",
        )?;
        let fiber = string_list(
            bundle_map
                .get("fiber")
                .ok_or_else(|| usage("missing required field `bundle.fiber`"))?,
            "bundle.fiber",
        )?;
        let bundle =
            BundleSpec::new(base, fiber).map_err(|e| usage(format!("bundle: {e}")))?;

        let lagrangian = match map.get("lagrangian") {
            Some(v) => {
                let text = v
                    .as_str()
                    .ok_or_else(|| usage("lagrangian: expected an expression string"))?;
                Some(parse_density(&bundle, text, "lagrangian")?)
            }
            None => None,
        };
        let source_form = match map.get("source_form") {
            Some(v) => Some(
                SourceForm::new(&bundle, component_map(&bundle, v, "source_form")?)
                    .map_err(|e| usage(format!("source_form: {e}")))?,
            ),
            None => None,
        };
        let vector_field = match map.get("vector_field") {
            Some(v) => Some(
                EvolutionaryField::new(&bundle, component_map(&bundle, v, "vector_field")?)
                    .map_err(|e| usage(format!("vector_field: {e}")))?,
            ),
            None => None,
        };
        let closed_form = match map.get("closed_form") {
            Some(v) => {
                let text = v
                    .as_str()
                    .ok_or_else(|| usage("closed_form: expected a form string"))?;
                Some(parse_form(&bundle, text).map_err(|e| usage(format!("closed_form: {e}")))?)
            }
            None => None,
        };
        let form = match map.get("form") {
            Some(v) => {
                let text = v
                    .as_str()
                    .ok_or_else(|| usage("form: expected a form string"))?;
                Some(parse_form(&bundle, text).map_err(|e| usage(format!("form: {e}")))?)
            }
            None => None,
        };
        let operator = match map.get("operator") {
            Some(v) => Some(
                v.as_str()
                    .ok_or_else(|| usage("operator: expected a string"))?
                    .to_string(),
            ),
            None => None,
        };
        let truncation = match map.get("truncation") {
            Some(Json::Object(t)) => {
                for key in t.keys() {
                    if !["max_jet_order", "max_poly_degree", "base_poly_degree"]
                        .contains(&key.as_str())
                    {
                        return Err(usage(format!("unknown field `truncation.{key}`")));
                    }
                }
                let get = |name: &str| -> Result<u32, CliError> {
                    t.get(name)
                        .map(|v| u32_field(v, &format!("truncation.{name}")))
                        .transpose()
                        .map(|v| v.unwrap_or(0))
                };
                Some(TruncationSpec::new(
                    get("max_jet_order")?,
                    get("max_poly_degree")?,
                    get("base_poly_degree")?,
                ))
            }
            Some(_) => return Err(usage("truncation: expected an object")),
            None => None,
        };
        let seed = match map.get("seed") {
            Some(v) => Some(
                v.as_u64()
                    .ok_or_else(|| usage("seed: expected a nonnegative integer"))?,
            ),
            None => None,
        };
        let cases = match map.get("cases") {
            Some(v) => Some(u32_field(v, "cases")?),
            None => None,
        };

        Ok(ProblemFile {
            bundle,
            lagrangian,
            source_form,
            vector_field,
            closed_form,
            form,
            operator,
            truncation,
            seed,
            cases,
        })
    }

    pub fn require_lagrangian(&self) -> Result<&Form, CliError> {
        self.lagrangian
            .as_ref()
            .ok_or_else(|| usage("this command needs a `lagrangian`"))
    }

    pub fn require_source(&self) -> Result<&SourceForm, CliError> {
        self.source_form
            .as_ref()
            .ok_or_else(|| usage("this command needs a `source_form`"))
    }

    pub fn require_field(&self) -> Result<&EvolutionaryField, CliError> {
        self.vector_field
            .as_ref()
            .ok_or_else(|| usage("this command needs a `vector_field`"))
    }

    pub fn require_form(&self) -> Result<&Form, CliError> {
        self.form
            .as_ref()
            .ok_or_else(|| usage("this command needs a `form`"))
    }

    pub fn require_operator(&self) -> Result<&str, CliError> {
        self.operator
            .as_deref()
            .ok_or_else(|| usage("this command needs an `operator`"))
    }
}

/// Parses `fiber=expr` pairs (or a bare expression when there is exactly one
/// fibre coordinate) into a JSON component map.
pub fn components_to_json(entries: &[String]) -> Result<Json, CliError> {
    let mut map = serde_json::Map::new();
    for entry in entries {
        match entry.split_once('=') {
            Some((name, expr)) => {
                map.insert(name.trim().to_string(), Json::String(expr.to_string()));
            }
            None => {
                if !map.is_empty() {
                    return Err(usage(
                        "mixing bare and `fiber=expr` component syntax is ambiguous",
                    ));
                }
                map.insert("__single__".to_string(), Json::String(entry.clone()));
            }
        }
    }
    Ok(Json::Object(map))
}

/// Rewrites the `__single__` placeholder onto the only fibre coordinate.
pub fn resolve_single_component(doc: &mut Json) -> Result<(), CliError> {
    let fiber_names: Vec<String> = doc
        .get("bundle")
        .and_then(|b| b.get("fiber"))
        .and_then(Json::as_array)
        .map(|a| {
            a.iter()
                .filter_map(Json::as_str)
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default();
    for field in ["source_form", "vector_field"] {
        if let Some(Json::Object(map)) = doc.get_mut(field) {
            if let Some(value) = map.remove("__single__") {
                if fiber_names.len() != 1 {
                    return Err(usage(format!(
                        "{field}: a bare component needs exactly one fibre coordinate; use fiber=expr"
                    )));
                }
                map.insert(fiber_names[0].clone(), value);
            }
        }
    }
    Ok(())
}
