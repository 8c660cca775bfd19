//! `varcomplex`: exact jet-bundle variational calculus from the command
//! line.
//!
//! Exit codes: 0 on success, 1 on a mathematical negative (Helmholtz
//! failure, non-trivial Lagrangian, broken symmetry, failed identity suite,
//! truncation miss), 2 on usage errors. Reports stream to stdout,
//! diagnostics to stderr.

mod problem;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};

use varcomplex::cohomlab::{
    betti, delta_exactness_at_e1, property_suite, ChainDescriptor, TruncationSpec,
};
use varcomplex::inverse::{
    helmholtz_check, is_variationally_trivial, reconstruct_lagrangian, triviality_witness,
    AntiderivativeConfig, InverseError,
};

use problem::ProblemFile;
use report::{Format, Report};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
}

#[derive(Parser)]
#[command(
    name = "varcomplex",
    about = "Exact variational bicomplex calculus on jet bundles",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Problem file (JSON); inline flags override its fields
    #[arg(long)]
    problem: Option<std::path::PathBuf>,
    /// Output format
    #[arg(long, default_value = "text", value_parser = ["text", "json", "latex"])]
    format: String,
    /// Base coordinates, comma separated (e.g. `t,x`)
    #[arg(long)]
    base: Option<String>,
    /// Fibre coordinates, comma separated (e.g. `u`)
    #[arg(long)]
    fiber: Option<String>,
    /// Lagrangian density or horizontal volume form
    #[arg(long, allow_hyphen_values = true)]
    lagrangian: Option<String>,
    /// Source-form component, `fiber=expr` (repeatable; bare expr if one fibre)
    #[arg(long = "source", allow_hyphen_values = true)]
    source: Vec<String>,
    /// Vector-field component, `fiber=expr` (repeatable; bare expr if one fibre)
    #[arg(long = "field", allow_hyphen_values = true)]
    field: Vec<String>,
    /// Closed form on the bundle for the triviality witness
    #[arg(long = "closed-form", allow_hyphen_values = true)]
    closed_form: Option<String>,
    /// Form input for `apply`
    #[arg(long, allow_hyphen_values = true)]
    form: Option<String>,
    /// Operator for `apply`: d, dH, dV, tau, delta, h0
    #[arg(long)]
    operator: Option<String>,
    /// Truncation: maximal jet order
    #[arg(long = "max-order")]
    max_order: Option<u32>,
    /// Truncation: maximal polynomial degree in jet variables
    #[arg(long = "max-degree")]
    max_degree: Option<u32>,
    /// Truncation: maximal polynomial degree in base variables
    #[arg(long = "base-degree")]
    base_degree: Option<u32>,
    /// Random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Number of randomized cases
    #[arg(long)]
    cases: Option<u32>,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Euler-Lagrange form of a Lagrangian
    El(CommonArgs),
    /// Helmholtz condition for a source form
    Helmholtz(CommonArgs),
    /// Variational triviality (with a witness when a truncation is given)
    Trivial(CommonArgs),
    /// Reconstruct a Lagrangian from a Helmholtz-passing source form
    Reconstruct(CommonArgs),
    /// Noether current and conservation report for a vector field
    Noether(CommonArgs),
    /// First variational formula dL = delta_1(L) + dH(phi)
    Split(CommonArgs),
    /// Apply a bicomplex operator to a form
    Apply(CommonArgs),
    /// Betti report of the truncated bicomplex
    Betti {
        #[command(flatten)]
        common: CommonArgs,
        /// Emit one CSV row per position
        #[arg(long)]
        csv: bool,
        /// Skip the (slower) exactness check at E1
        #[arg(long = "skip-exactness")]
        skip_exactness: bool,
    },
    /// Randomized operator-identity suite
    Props(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::El(c)
            | Command::Helmholtz(c)
            | Command::Trivial(c)
            | Command::Reconstruct(c)
            | Command::Noether(c)
            | Command::Split(c)
            | Command::Apply(c)
            | Command::Props(c) => c,
            Command::Betti { common, .. } => common,
        }
    }
}

fn load_document(common: &CommonArgs) -> Result<Json, CliError> {
    let mut doc = match &common.problem {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read problem file {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::Usage(format!(
                    "problem file syntax error at line {}, column {}: {e}",
                    e.line(),
                    e.column()
                ))
            })?
        }
        None => json!({}),
    };
    if !doc.is_object() {
        return Err(CliError::Usage(
            "problem document must be a JSON object".into(),
        ));
    }
    // inline flags expand onto the same schema and win over the file
    let comma = |s: &String| -> Json {
        Json::Array(
            s.split(',')
                .map(|p| Json::String(p.trim().to_string()))
                .collect(),
        )
    };
    if common.base.is_some() || common.fiber.is_some() {
        let mut bundle = doc.get("bundle").cloned().unwrap_or_else(|| json!({}));
        if let Some(b) = &common.base {
            bundle["base"] = comma(b);
        }
        if let Some(f) = &common.fiber {
            bundle["fiber"] = comma(f);
        }
        doc["bundle"] = bundle;
    }
    if let Some(l) = &common.lagrangian {
        doc["lagrangian"] = json!(l);
    }
    if !common.source.is_empty() {
        doc["source_form"] = problem::components_to_json(&common.source)?;
    }
    if !common.field.is_empty() {
        doc["vector_field"] = problem::components_to_json(&common.field)?;
    }
    if let Some(c) = &common.closed_form {
        doc["closed_form"] = json!(c);
    }
    if let Some(f) = &common.form {
        doc["form"] = json!(f);
    }
    if let Some(op) = &common.operator {
        doc["operator"] = json!(op);
    }
    if common.max_order.is_some() || common.max_degree.is_some() || common.base_degree.is_some() {
        let mut truncation = doc.get("truncation").cloned().unwrap_or_else(|| json!({}));
        if let Some(v) = common.max_order {
            truncation["max_jet_order"] = json!(v);
        }
        if let Some(v) = common.max_degree {
            truncation["max_poly_degree"] = json!(v);
        }
        if let Some(v) = common.base_degree {
            truncation["base_poly_degree"] = json!(v);
        }
        doc["truncation"] = truncation;
    }
    if let Some(v) = common.seed {
        doc["seed"] = json!(v);
    }
    if let Some(v) = common.cases {
        doc["cases"] = json!(v);
    }
    problem::resolve_single_component(&mut doc)?;
    Ok(doc)
}

fn run(command: &Command) -> Result<Report, CliError> {
    // every command except `props` needs a bundle; `props` resolves one only
    // when the document carries it
    let needs_problem = !matches!(command, Command::Props(_));
    let common = command.common();
    let doc = load_document(common)?;
    let pf = if needs_problem || doc.get("bundle").is_some() {
        Some(ProblemFile::from_json(&doc)?)
    } else {
        None
    };

    match command {
        Command::El(_) => {
            let pf = pf.expect("problem required");
            let source = pf
                .require_lagrangian()?
                .euler_lagrange()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(Report::EulerLagrange { source })
        }
        Command::Helmholtz(_) => {
            let pf = pf.expect("problem required");
            let report = helmholtz_check(pf.require_source()?);
            Ok(Report::Helmholtz { report })
        }
        Command::Trivial(_) => {
            let pf = pf.expect("problem required");
            let lagrangian = pf.require_lagrangian()?;
            let trivial =
                is_variationally_trivial(lagrangian).map_err(|e| CliError::Usage(e.to_string()))?;
            let mut witness = None;
            let mut witness_miss = None;
            if trivial {
                if let Some(t) = &pf.truncation {
                    let config = AntiderivativeConfig::new(t.max_jet_order, t.max_poly_degree);
                    match triviality_witness(lagrangian, pf.closed_form.as_ref(), config) {
                        Ok(w) => witness = Some(w),
                        Err(InverseError::NotExactInTruncation {
                            residual,
                            max_jet_order,
                            max_poly_degree,
                        }) => {
                            witness_miss = Some(report::WitnessMiss {
                                residual: *residual,
                                max_jet_order,
                                max_poly_degree,
                            });
                        }
                        Err(e) => return Err(CliError::Usage(e.to_string())),
                    }
                }
            }
            Ok(Report::Trivial {
                trivial,
                witness,
                witness_miss,
            })
        }
        Command::Reconstruct(_) => {
            let pf = pf.expect("problem required");
            let source = pf.require_source()?;
            match reconstruct_lagrangian(source) {
                Ok(lagrangian) => Ok(Report::Reconstruct {
                    lagrangian,
                    verified: true,
                }),
                Err(
                    InverseError::HelmholtzFails { .. } | InverseError::HelmholtzUnknown { .. },
                ) => Ok(Report::Helmholtz {
                    report: helmholtz_check(source),
                }),
                Err(e) => Err(CliError::Usage(e.to_string())),
            }
        }
        Command::Noether(_) => {
            let pf = pf.expect("problem required");
            let field = pf.require_field()?.clone();
            let report = field
                .conservation_check(pf.require_lagrangian()?)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(Report::Noether { field, report })
        }
        Command::Split(_) => {
            let pf = pf.expect("problem required");
            let lagrangian = pf.require_lagrangian()?;
            let split = lagrangian
                .first_variational_split()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let verified = split.verify(lagrangian);
            Ok(Report::Split { split, verified })
        }
        Command::Apply(_) => {
            let pf = pf.expect("problem required");
            let form = pf.require_form()?;
            let operator = pf.require_operator()?.to_string();
            let result = match operator.as_str() {
                "d" => form.exterior_d(),
                "dH" => form.d_h(),
                "dV" => form.d_v(),
                "tau" => form.tau(),
                "h0" => form.horizontal_part(),
                "delta" => form
                    .delta()
                    .map_err(|e| CliError::Usage(e.to_string()))?,
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown operator `{other}`; expected d, dH, dV, tau, delta or h0"
                    )))
                }
            };
            Ok(Report::Apply { operator, result })
        }
        Command::Betti {
            csv,
            skip_exactness,
            ..
        } => {
            let pf = pf.expect("problem required");
            let spec = pf.truncation.unwrap_or(TruncationSpec {
                max_jet_order: 3,
                max_poly_degree: 3,
                base_poly_degree: 2,
            });
            let bundle = &pf.bundle;
            let mut reports = Vec::new();
            for contact in 0..=1 {
                reports.push(
                    betti(bundle, &spec, ChainDescriptor::DhRow { contact })
                        .map_err(|e| CliError::Usage(e.to_string()))?,
                );
            }
            reports.push(
                betti(
                    bundle,
                    &spec,
                    ChainDescriptor::DvColumn {
                        horizontal: 0,
                        max_contact: 2,
                    },
                )
                .map_err(|e| CliError::Usage(e.to_string()))?,
            );
            let exactness = if *skip_exactness {
                None
            } else {
                Some(
                    delta_exactness_at_e1(bundle, &spec)
                        .map_err(|e| CliError::Usage(e.to_string()))?,
                )
            };
            Ok(Report::Betti {
                reports,
                exactness,
                csv: *csv,
            })
        }
        Command::Props(_) => {
            let (seed, cases) = match &pf {
                Some(pf) => (pf.seed, pf.cases),
                None => (
                    doc.get("seed").and_then(Json::as_u64),
                    doc.get("cases").and_then(Json::as_u64).map(|v| v as u32),
                ),
            };
            let report = property_suite(seed.unwrap_or(1), cases.unwrap_or(100))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(Report::Props { report })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = Format::parse(&cli.command.common().format).expect("validated by clap");
    match run(&cli.command) {
        Ok(report) => {
            print!("{}", report.render(format));
            if report.is_negative() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
