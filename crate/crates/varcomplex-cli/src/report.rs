//! Command reports and their text / JSON / LaTeX renderings.
//!
//! Output is deterministic: map keys are sorted, term orders are canonical,
//! and every rendering ends in exactly one newline.

use serde_json::{json, Value as Json};

use varcomplex::cohomlab::{BettiReport, ExactnessReport, SuiteReport};
use varcomplex::inverse::TrivialityWitness;
use varcomplex::render::{form_to_json, latex_form, latex_source, source_to_json};
use varcomplex::{ConservationReport, EvolutionaryField, Form, HelmholtzReport, VariationalSplit};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Latex,
}

impl Format {
    pub fn parse(name: &str) -> Option<Format> {
        match name {
            "text" => Some(Format::Text),
            "json" => Some(Format::Json),
            "latex" => Some(Format::Latex),
            _ => None,
        }
    }
}

pub enum Report {
    EulerLagrange {
        source: varcomplex::SourceForm,
    },
    Helmholtz {
        report: HelmholtzReport,
    },
    Trivial {
        trivial: bool,
        witness: Option<TrivialityWitness>,
        witness_miss: Option<WitnessMiss>,
    },
    Reconstruct {
        lagrangian: Form,
        verified: bool,
    },
    Noether {
        field: EvolutionaryField,
        report: ConservationReport,
    },
    Split {
        split: VariationalSplit,
        verified: bool,
    },
    Apply {
        operator: String,
        result: Form,
    },
    Betti {
        reports: Vec<BettiReport>,
        exactness: Option<ExactnessReport>,
        csv: bool,
    },
    Props {
        report: SuiteReport,
    },
}

/// A truncation miss while searching for a triviality witness; carries the
/// unreachable residual and the bounds used so callers can retry larger.
pub struct WitnessMiss {
    pub residual: Form,
    pub max_jet_order: u32,
    pub max_poly_degree: u32,
}

impl Report {
    /// Exit code 1 when the mathematical verdict is negative.
    pub fn is_negative(&self) -> bool {
        match self {
            Report::Helmholtz { report } => !report.passes(),
            Report::Trivial {
                trivial,
                witness_miss,
                ..
            } => !trivial || witness_miss.is_some(),
            Report::Noether { report, .. } => !report.is_symmetry,
            Report::Props { report } => !report.all_pass(),
            _ => false,
        }
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = match format {
            Format::Text => self.text(),
            Format::Json => {
                serde_json::to_string_pretty(&self.json()).expect("reports serialize")
            }
            Format::Latex => self.latex(),
        };
        if !out.ends_with('\n') {
            out.push('\n');
        }
        out
    }

    fn text(&self) -> String {
        match self {
            Report::EulerLagrange { source } => format!("euler-lagrange form: {source}"),
            Report::Helmholtz { report } => {
                let mut s = format!("helmholtz condition: {}", report.verdict.as_str());
                if !report.certificate.is_zero() {
                    s.push_str(&format!("\ncertificate delta(E) = {}", report.certificate));
                }
                s
            }
            Report::Trivial {
                trivial,
                witness,
                witness_miss,
            } => {
                let mut s = format!(
                    "variationally trivial: {}",
                    if *trivial { "yes" } else { "no" }
                );
                if let Some(w) = witness {
                    s.push_str(&format!("\nxi with L - h0(phi) = dH(xi): {}", w.xi));
                    if !w.closed_part.is_zero() {
                        s.push_str(&format!("\nclosed part phi: {}", w.closed_part));
                    }
                }
                if let Some(miss) = witness_miss {
                    s.push_str(&format!(
                        "\nwitness not exact within truncation (jet order {}, degree {}); residual: {}",
                        miss.max_jet_order, miss.max_poly_degree, miss.residual
                    ));
                }
                s
            }
            Report::Reconstruct {
                lagrangian,
                verified,
            } => format!(
                "reconstructed lagrangian: {lagrangian}\neuler-lagrange re-check: {}",
                if *verified { "exact" } else { "FAILED" }
            ),
            Report::Noether { field, report } => {
                format!(
                    "field: {field}\nis symmetry: {}\nidentity holds: {}\ncurrent J = {}\non-shell divergence: {}",
                    report.is_symmetry,
                    report.identity_holds,
                    report.current,
                    report.on_shell_divergence
                )
            }
            Report::Split { split, verified } => format!(
                "source (delta_1 L): {}\nboundary phi: {}\ndL = delta_1(L) + dH(phi): {}",
                split.source,
                split.boundary,
                if *verified { "exact" } else { "FAILED" }
            ),
            Report::Apply { operator, result } => format!("{operator}: {result}"),
            Report::Betti {
                reports,
                exactness,
                csv,
            } => {
                if *csv {
                    let mut s =
                        String::from("operator,descriptor,position,dim_domain,rank,dim_kernel,dim_cohomology");
                    for r in reports {
                        for p in &r.positions {
                            s.push_str(&format!(
                                "\n{},{},{},{},{},{},{}",
                                r.operator,
                                r.descriptor,
                                p.position,
                                p.dim_domain,
                                p.rank,
                                p.dim_kernel,
                                p.dim_cohomology
                            ));
                        }
                    }
                    return s;
                }
                let mut s = String::new();
                for r in reports {
                    s.push_str(&format!("{} {}:\n", r.operator, r.descriptor));
                    s.push_str("  position  dim  rank  kernel  cohomology\n");
                    for p in &r.positions {
                        s.push_str(&format!(
                            "  {:>8}  {:>3}  {:>4}  {:>6}  {:>10}\n",
                            p.position, p.dim_domain, p.rank, p.dim_kernel, p.dim_cohomology
                        ));
                    }
                }
                if let Some(e) = exactness {
                    s.push_str(&format!(
                        "exactness at E1: kernel dim {} inside EL image: {} (sources {}, lagrangians {}, EL rank {})\n",
                        e.helmholtz_kernel_dim,
                        if e.kernel_inside_image { "yes" } else { "NO" },
                        e.source_dim,
                        e.lagrangian_dim,
                        e.euler_lagrange_rank
                    ));
                }
                s.trim_end().to_string()
            }
            Report::Props { report } => report.to_string().trim_end().to_string(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Report::EulerLagrange { source } => json!({
                "command": "el",
                "source": source_to_json(source),
            }),
            Report::Helmholtz { report } => json!({
                "command": "helmholtz",
                "verdict": report.verdict.as_str(),
                "passes": report.passes(),
                "certificate": form_to_json(&report.certificate),
            }),
            Report::Trivial {
                trivial,
                witness,
                witness_miss,
            } => {
                let mut value = json!({
                    "command": "trivial",
                    "trivial": trivial,
                });
                if let Some(w) = witness {
                    value["xi"] = form_to_json(&w.xi);
                    value["closed_part"] = form_to_json(&w.closed_part);
                }
                if let Some(miss) = witness_miss {
                    value["witness_error"] = json!({
                        "kind": "not_exact_in_truncation",
                        "residual": form_to_json(&miss.residual),
                        "max_jet_order": miss.max_jet_order,
                        "max_poly_degree": miss.max_poly_degree,
                    });
                }
                value
            }
            Report::Reconstruct {
                lagrangian,
                verified,
            } => json!({
                "command": "reconstruct",
                "lagrangian": form_to_json(lagrangian),
                "verified": verified,
            }),
            Report::Noether { field, report } => {
                let bundle = report.current.bundle();
                let mut components = serde_json::Map::new();
                for (i, c) in field.components().iter().enumerate() {
                    components.insert(bundle.fiber_name(i).to_string(), json!(c.to_string()));
                }
                json!({
                    "command": "noether",
                    "field": components,
                    "is_symmetry": report.is_symmetry,
                    "identity_holds": report.identity_holds,
                    "current": form_to_json(&report.current),
                    "on_shell_divergence": report.on_shell_divergence.to_string(),
                })
            }
            Report::Split { split, verified } => json!({
                "command": "split",
                "source": source_to_json(&split.source),
                "boundary": form_to_json(&split.boundary),
                "verified": verified,
            }),
            Report::Apply { operator, result } => json!({
                "command": "apply",
                "operator": operator,
                "result": form_to_json(result),
            }),
            Report::Betti {
                reports, exactness, ..
            } => {
                let reports: Vec<Json> = reports
                    .iter()
                    .map(|r| {
                        json!({
                            "operator": r.operator,
                            "descriptor": r.descriptor,
                            "positions": r.positions.iter().map(|p| json!({
                                "position": p.position,
                                "dim_domain": p.dim_domain,
                                "rank": p.rank,
                                "dim_kernel": p.dim_kernel,
                                "dim_cohomology": p.dim_cohomology,
                            })).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                let mut value = json!({
                    "command": "betti",
                    "reports": reports,
                });
                if let Some(e) = exactness {
                    value["exactness_at_e1"] = json!({
                        "source_dim": e.source_dim,
                        "helmholtz_kernel_dim": e.helmholtz_kernel_dim,
                        "lagrangian_dim": e.lagrangian_dim,
                        "euler_lagrange_rank": e.euler_lagrange_rank,
                        "kernel_inside_image": e.kernel_inside_image,
                    });
                }
                value
            }
            Report::Props { report } => json!({
                "command": "props",
                "seed": report.seed,
                "cases": report.cases,
                "all_pass": report.all_pass(),
                "identities": report.identities.iter().map(|r| json!({
                    "name": r.name,
                    "failures": r.failures,
                    "first_counterexample": r.first_counterexample,
                })).collect::<Vec<_>>(),
            }),
        }
    }

    fn latex(&self) -> String {
        match self {
            Report::EulerLagrange { source } => latex_source(source),
            Report::Helmholtz { report } => format!(
                "\\text{{helmholtz: {}}}\\quad \\delta E = {}",
                report.verdict.as_str(),
                latex_form(&report.certificate)
            ),
            Report::Trivial {
                trivial, witness, ..
            } => {
                let mut s = format!(
                    "\\text{{variationally trivial: {}}}",
                    if *trivial { "yes" } else { "no" }
                );
                if let Some(w) = witness {
                    s.push_str(&format!("\\quad \\xi = {}", latex_form(&w.xi)));
                }
                s
            }
            Report::Reconstruct { lagrangian, .. } => latex_form(lagrangian),
            Report::Noether { report, .. } => format!(
                "J_u = {}\\quad d_H J_u + u^i E_i\\,\\omega = {}",
                latex_form(&report.current),
                varcomplex::render::latex_expr(&report.on_shell_divergence)
            ),
            Report::Split { split, .. } => format!(
                "\\delta_1 L = {}\\quad \\varphi = {}",
                latex_source(&split.source),
                latex_form(&split.boundary)
            ),
            Report::Apply { result, .. } => latex_form(result),
            Report::Betti { reports, .. } => {
                let mut s = String::from(
                    "\\begin{tabular}{llrrrrr}\noperator & chain & pos & dim & rank & ker & H \\\\\n",
                );
                for r in reports {
                    for p in &r.positions {
                        s.push_str(&format!(
                            "{} & {} & {} & {} & {} & {} & {} \\\\\n",
                            r.operator,
                            r.descriptor,
                            p.position,
                            p.dim_domain,
                            p.rank,
                            p.dim_kernel,
                            p.dim_cohomology
                        ));
                    }
                }
                s.push_str("\\end{tabular}");
                s
            }
            Report::Props { report } => {
                format!(
                    "\\text{{identity suite seed {} over {} cases: {}}}",
                    report.seed,
                    report.cases,
                    if report.all_pass() { "all pass" } else { "FAILURES" }
                )
            }
        }
    }
}
