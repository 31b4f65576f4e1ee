//! Target measures named on the command line.
//!
//! `builtin:semicircle`, `builtin:scaled-semicircle:<variance>`,
//! `builtin:uniform:<a>:<b>` and `builtin:gibbs:<potential>` are built in place;
//! anything else is read as a measure JSON file.

use crate::parse::{parse_potential, PotentialExpr};
use crate::{CliError, RunConfig};
use freestein_core::{solve_equilibrium, ChebMeasure, ConvexPotential};

/// A measure together with the potential it is the Gibbs law of, when known.
#[derive(Debug, Clone)]
pub struct Target {
    pub name: String,
    pub measure: ChebMeasure,
    pub potential: Option<ConvexPotential>,
    pub expr: Option<PotentialExpr>,
}

fn number(name: &str, field: &str) -> Result<f64, CliError> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::Usage(format!("target {name:?}: {field:?} is not a number")))
}

pub fn potential(src: &str) -> Result<(PotentialExpr, ConvexPotential), CliError> {
    let expr = parse_potential(src)?;
    let u = ConvexPotential::polynomial(&expr.to_f64())?;
    Ok((expr, u))
}

pub fn gibbs_target(src: &str, config: &RunConfig) -> Result<Target, CliError> {
    let (expr, u) = potential(src)?;
    let measure = solve_equilibrium(&u, &config.equilibrium())?.measure;
    Ok(Target { name: format!("builtin:gibbs:{expr}"), measure, potential: Some(u), expr: Some(expr) })
}

pub fn resolve(src: &str, config: &RunConfig) -> Result<Target, CliError> {
    let Some(rest) = src.strip_prefix("builtin:") else {
        let text = std::fs::read_to_string(src)
            .map_err(|e| CliError::Usage(format!("cannot read measure file {src:?}: {e}")))?;
        let measure: ChebMeasure =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("malformed measure file {src:?}: {e}")))?;
        return Ok(Target { name: src.to_string(), measure, potential: None, expr: None });
    };
    let (kind, args) = rest.split_once(':').unwrap_or((rest, ""));
    let fields: Vec<&str> = if args.is_empty() { Vec::new() } else { args.split(':').collect() };
    let named = |measure, pot: Option<String>| -> Result<Target, CliError> {
        let (expr, potential) = match pot {
            Some(s) => {
                let (e, u) = potential(&s)?;
                (Some(e), Some(u))
            }
            None => (None, None),
        };
        Ok(Target { name: src.to_string(), measure, potential, expr })
    };
    match (kind, fields.as_slice()) {
        ("semicircle", []) => named(ChebMeasure::semicircle(), Some("0.5*x^2".into())),
        ("scaled-semicircle", [v]) => {
            let v = number(src, v)?;
            let measure = ChebMeasure::scaled_semicircle(v)?;
            named(measure, Some(format!("{}*x^2", 0.5 / v)))
        }
        ("uniform", [a, b]) => named(ChebMeasure::uniform(number(src, a)?, number(src, b)?)?, None),
        ("gibbs", _) if !args.is_empty() => gibbs_target(args, config),
        _ => Err(CliError::Usage(format!(
            "unknown target {src:?}; expected builtin:semicircle, builtin:scaled-semicircle:<v>, builtin:uniform:<a>:<b>, builtin:gibbs:<expr> or a measure file"
        ))),
    }
}
