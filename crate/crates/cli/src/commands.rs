//! The numerical subcommands: `gibbs`, `moment-map`, `stein`, `distance`, `convolve`.

use crate::report::{
    ConvolveReport, DistanceReport, GibbsReport, KahlerEinstein, MapDocument, MomentMapReport, SteinReport,
};
use crate::targets::{potential, resolve};
use crate::{pretty, write_file, CliError, Ctx, Output};
use freestein_core::stein::{kernel_csv, kernel_grid_check, source_discrepancy, stein_discrepancy_with, transported_moment_kernel};
use freestein_core::{
    euler_lagrange_residual, free_convolve, free_convolve_power, gibbs_energy, kahler_einstein_residual,
    max_correlation, moment_stein_kernel, solve_equilibrium, solve_moment_map, stein_residual, w2_distance,
    ChebMeasure, ConvexPotential, Polynomial,
};

const GRID_POINTS: usize = 512;

fn pair(s: freestein_core::SupportInterval) -> [f64; 2] {
    [s.a, s.b]
}

fn write_measure(ctx: &Ctx, m: &ChebMeasure) -> Result<(), CliError> {
    if let Some(path) = &ctx.out {
        write_file(path, &pretty(m))?;
    }
    if let Some(path) = &ctx.grid_out {
        write_file(path, &m.grid_csv(GRID_POINTS))?;
    }
    Ok(())
}

pub fn gibbs(ctx: &Ctx, src: &str, degree: Option<u32>) -> Result<Output, CliError> {
    let (expr, u) = potential(src)?;
    let mut opts = ctx.config.equilibrium();
    if let Some(d) = degree {
        if d == 0 {
            return Err(CliError::Usage("test degree must be at least 1".into()));
        }
        opts.sd_test_degree = d;
    }
    let eq = solve_equilibrium(&u, &opts)?;
    let nu = &eq.measure;
    let t = &ctx.config.thresholds;
    let el = euler_lagrange_residual(nu, &u);
    let report = GibbsReport {
        potential: expr.to_string(),
        support: pair(nu.support()),
        sd_residual: eq.sd_residual,
        sd_test_degree: opts.sd_test_degree,
        el_residual: el,
        moments: (1..=8).map(|k| nu.moment(k)).collect(),
        gibbs_energy: gibbs_energy(nu, &u),
        coefficients: nu.coeffs().len(),
        newton_iterations: eq.newton_iterations,
        pass: eq.sd_residual <= t.schwinger_dyson && el <= t.euler_lagrange,
    };
    write_measure(ctx, nu)?;
    let pass = report.pass;
    Ok(Output::new(&report, pass))
}

pub fn moment_map(ctx: &Ctx, target: &str) -> Result<Output, CliError> {
    let t = resolve(target, &ctx.config)?;
    let map = solve_moment_map(&t.measure, &ctx.config.moment_map())?;
    let th = &ctx.config.thresholds;
    let d = map.diagnostics().clone();
    let kahler_einstein = match &t.potential {
        Some(u) => {
            let ke = kahler_einstein_residual(&map, u)?;
            Some(KahlerEinstein { residual: ke.residual, constant: ke.constant, pass: ke.residual <= th.kahler_einstein })
        }
        None => None,
    };
    let nu = &map.source().measure;
    let report = MomentMapReport {
        target: t.name.clone(),
        source_support: pair(nu.support()),
        working_interval: pair(map.working_interval()),
        iterations: d.iterations,
        residual: d.residual,
        pushforward_residual: d.pushforward_residual,
        clamp_events: d.clamp_events,
        clamp_active_at_convergence: d.clamp_active_at_convergence,
        target_shift: d.target_shift,
        identity_deviation: map.sup_distance(|x| x),
        max_second_derivative: map.max_second_derivative(),
        pass: d.pushforward_residual <= th.pushforward && kahler_einstein.as_ref().is_none_or(|k| k.pass),
        kahler_einstein,
    };
    if let Some(path) = &ctx.out {
        let up = map.uprime_series();
        let doc = MapDocument {
            kind: "moment-map".into(),
            working_interval: [up.a, up.b],
            uprime_coeffs: up.coeffs.clone(),
            source_support: pair(nu.support()),
            source_coeffs: nu.coeffs().to_vec(),
            iterations: d.iterations,
            residual: d.residual,
            pushforward_residual: d.pushforward_residual,
        };
        write_file(path, &pretty(&doc))?;
    }
    if let Some(path) = &ctx.grid_out {
        write_file(path, &nu.grid_csv(GRID_POINTS))?;
    }
    let pass = report.pass;
    Ok(Output::new(&report, pass))
}

pub fn stein(ctx: &Ctx, target: &str, wrt: Option<&str>) -> Result<Output, CliError> {
    let t = resolve(target, &ctx.config)?;
    let mu = &t.measure;
    let th = &ctx.config.thresholds;
    let opts = ctx.config.moment_map();
    let map = solve_moment_map(mu, &opts)?;
    let src_disc = source_discrepancy(&map);
    let moment_kernel = moment_stein_kernel(map);
    let discrepancy = stein_discrepancy_with(&moment_kernel, mu, &ctx.config.stein())?;
    let w2 = w2_distance(mu, &ChebMeasure::semicircle())?;
    let ws_pass = w2 * w2 <= discrepancy + th.ws_slack;
    let (kernel, v, wrt_name) = match wrt {
        Some(src) => {
            let (expr, v) = potential(src)?;
            (transported_moment_kernel(mu, &v, &opts)?, v, Some(expr.to_string()))
        }
        None => (moment_kernel, ConvexPotential::polynomial(&[0.0, 0.0, 0.5])?, None),
    };
    let grid = ctx.config.kernel_grid;
    let (asym, min) = kernel_grid_check(&kernel, grid)?;
    let residuals = (1..=8)
        .map(|k| stein_residual(&kernel, mu, &v, &Polynomial::monomial(k)))
        .collect::<Result<Vec<f64>, _>>()?;
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    if let Some(path) = &ctx.out {
        write_file(path, &kernel_csv(&kernel, grid)?)?;
    }
    if let Some(path) = &ctx.grid_out {
        write_file(path, &mu.grid_csv(GRID_POINTS))?;
    }
    let report = SteinReport {
        target: t.name,
        wrt: wrt_name,
        discrepancy,
        source_discrepancy: src_disc,
        w2,
        ws_pass,
        kernel_min: min,
        kernel_asymmetry: asym,
        residuals,
        max_residual,
        pass: ws_pass && max_residual <= th.stein_residual && asym == 0.0 && min > 0.0,
    };
    let pass = report.pass;
    Ok(Output::new(&report, pass))
}

pub fn distance(ctx: &Ctx, from: &str, to: &str) -> Result<Output, CliError> {
    let a = resolve(from, &ctx.config)?;
    let b = resolve(to, &ctx.config)?;
    let report = DistanceReport {
        from: a.name,
        to: b.name,
        w2: w2_distance(&a.measure, &b.measure)?,
        max_correlation: max_correlation(&a.measure, &b.measure)?,
    };
    if let Some(path) = &ctx.out {
        write_file(path, &pretty(&report))?;
    }
    Ok(Output::new(&report, true))
}

pub fn convolve(ctx: &Ctx, left: &str, right: Option<&str>, power: Option<f64>) -> Result<Output, CliError> {
    let l = resolve(left, &ctx.config)?;
    let opts = ctx.config.convolution();
    let (operation, m) = match (right, power) {
        (Some(r), None) => {
            let r = resolve(r, &ctx.config)?;
            (format!("{} ⊞ {}", l.name, r.name), free_convolve(&l.measure, &r.measure, &opts)?)
        }
        (None, Some(t)) => (format!("{}^(⊞{t})", l.name), free_convolve_power(&l.measure, t, &opts)?),
        _ => return Err(CliError::Usage("convolve needs exactly one of --right or --power".into())),
    };
    write_measure(ctx, &m)?;
    let report = ConvolveReport {
        operation,
        support: pair(m.support()),
        mean: m.mean(),
        variance: m.variance(),
        m4: m.moment(4),
        coefficients: m.coeffs().len(),
    };
    Ok(Output::new(&report, true))
}
