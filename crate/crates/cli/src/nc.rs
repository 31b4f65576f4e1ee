//! `nc`: exact derivations, Jacobians, Wick moments and the quadratic Stein check.

use crate::parse::{infer_arity, parse_ncexpr, parse_potential};
use crate::report::{NcEntry, NcReport};
use crate::{CliError, Ctx, Output};
use clap::{Args, ValueEnum};
use freestein_algebra::ncfree::{
    cyclic, jacobian, partial, quadratic_stein_check, sd_residual_nc, CovarianceMatrix, NCPoly, WickOracle,
};
use freestein_algebra::Q;
use num::Zero;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NcOp {
    Derive,
    Cyclic,
    Jacobian,
    Moment,
    SdCheck,
    SteinQuadratic,
}

#[derive(Debug, Args)]
pub struct NcArgs {
    pub op: NcOp,
    /// Polynomial in x1..xn; repeat, or separate with ';', for tuples.
    #[arg(long)]
    pub expr: Vec<String>,
    /// Number of variables; inferred from the covariance or the expressions when absent.
    #[arg(long)]
    pub arity: Option<usize>,
    /// JSON matrix of numbers or "p/q" strings.
    #[arg(long)]
    pub covariance: Option<PathBuf>,
    /// Variable index for derive/cyclic; all indices when absent.
    #[arg(long)]
    pub index: Option<usize>,
    /// Degree bound for sd-check and stein-quadratic.
    #[arg(long)]
    pub degree: Option<usize>,
}

fn entry(label: impl Into<String>, value: impl ToString) -> NcEntry {
    NcEntry { label: label.into(), value: value.to_string() }
}

fn rational(text: &str) -> Result<Q, CliError> {
    let p = parse_potential(text)?;
    match p.coeffs.len() {
        0 => Ok(Q::zero()),
        1 => Ok(p.coeffs[0].clone()),
        _ => Err(CliError::Usage(format!("covariance entry {text:?} is not a number"))),
    }
}

fn read_covariance(path: &PathBuf) -> Result<CovarianceMatrix, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read covariance {}: {e}", path.display())))?;
    let raw: Vec<Vec<serde_json::Value>> =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("malformed covariance: {e}")))?;
    let rows = raw
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| match v {
                    serde_json::Value::Number(n) => rational(&n.to_string()),
                    serde_json::Value::String(s) => rational(s),
                    other => Err(CliError::Usage(format!("covariance entry {other} is not a number"))),
                })
                .collect::<Result<Vec<Q>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CovarianceMatrix::new(rows)?)
}

pub fn run(_ctx: &Ctx, args: &NcArgs) -> Result<Output, CliError> {
    let sources: Vec<String> =
        args.expr.iter().flat_map(|e| e.split(';')).map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    let covariance = args.covariance.as_ref().map(read_covariance).transpose()?;
    let arity = args
        .arity
        .or_else(|| covariance.as_ref().map(CovarianceMatrix::dim))
        .unwrap_or_else(|| sources.iter().map(|s| infer_arity(s)).max().unwrap_or(1));
    if arity == 0 {
        return Err(CliError::Usage("arity must be at least 1".into()));
    }
    let polys = sources.iter().map(|s| Ok(parse_ncexpr(s, arity)?.poly)).collect::<Result<Vec<NCPoly>, CliError>>()?;
    let needs_expr = !matches!(args.op, NcOp::SteinQuadratic);
    if needs_expr && polys.is_empty() {
        return Err(CliError::Usage("missing --expr".into()));
    }
    let indices: Vec<usize> = match args.index {
        Some(j) => vec![j],
        None => (1..=arity).collect(),
    };
    let cov = match covariance {
        Some(c) if c.dim() != arity => {
            return Err(CliError::Usage(format!("covariance is {0}x{0} but arity is {arity}", c.dim())))
        }
        Some(c) => c,
        None => CovarianceMatrix::identity(arity),
    };
    let mut entries = Vec::new();
    let mut pass = true;
    match args.op {
        NcOp::Derive => {
            for (i, p) in polys.iter().enumerate() {
                for &j in &indices {
                    entries.push(entry(format!("d{j}(P{})", i + 1), partial(p, j)?));
                }
            }
        }
        NcOp::Cyclic => {
            for (i, p) in polys.iter().enumerate() {
                for &j in &indices {
                    entries.push(entry(format!("D{j}(P{})", i + 1), cyclic(p, j)?));
                }
            }
        }
        NcOp::Jacobian => {
            let jac = jacobian(&polys)?;
            for i in 0..jac.dim() {
                for j in 0..jac.dim() {
                    entries.push(entry(format!("J[{}][{}]", i + 1, j + 1), jac.get(i, j)));
                }
            }
        }
        NcOp::Moment => {
            let tau = WickOracle::new(&cov);
            for (i, p) in polys.iter().enumerate() {
                entries.push(entry(format!("tau(P{})", i + 1), tau.trace(p)));
            }
        }
        NcOp::SdCheck => {
            let degree = args.degree.unwrap_or(polys.iter().map(NCPoly::degree).max().unwrap_or(0));
            let r = sd_residual_nc(&polys, degree)?;
            pass = r.is_zero();
            entries.push(entry("residual", &r));
            entries.push(entry("max_checked_degree", degree));
        }
        NcOp::SteinQuadratic => {
            let r = quadratic_stein_check(&cov, args.degree.unwrap_or(4))?;
            pass = r.pass();
            entries.push(entry("cyclic_gradient_matches", r.cyclic_gradient_matches));
            entries.push(entry("jacobian_matches", r.jacobian_matches));
            entries.push(entry("gibbs_sd_residual", &r.gibbs_sd_residual));
            entries.push(entry("stein_residual", &r.stein_residual));
            entries.push(entry("monomials_checked", r.monomials_checked));
        }
    }
    let op = args.op.to_possible_value().expect("no skipped variants").get_name().to_string();
    let report = NcReport { op, arity, input: polys.iter().map(ToString::to_string).collect(), entries, pass };
    Ok(Output::new(&report, pass))
}
