//! The four subcommands: single-point currents, validation suites, sweeps,
//! and Landauer convergence reports. All CSV output is bit-deterministic:
//! fixed row order and shortest round-trip float formatting.

use std::io::Write;

use num_complex::Complex64 as C64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use rj_core::analysis::{
    evaluate_method, evaluate_sweep_point, landauer_convergence_report, JunctionTemplate, SweepSpec,
};
use rj_core::currents::current_trace_integral;
use rj_core::model::{
    CurrentResult, FermiParameters, JunctionModel, Lead, LeadLabel, Method, ReservoirMode,
    SystemHamiltonian,
};
use rj_core::oracle;
use rj_core::spectral::{
    max_abs, verify_identical_reservoir_identity, verify_resolvent_identity,
};
use rj_core::Error as CoreError;

use crate::config::{RunConfig, RunMode};
use crate::error::{CliError, CliResult};

/// Options shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub jobs: Option<usize>,
    pub dump_correlations: Option<std::path::PathBuf>,
    pub seed: Option<u64>,
}

const CSV_HEADER: &str =
    "param_name,param_value,method,current,error_estimate,diag_panels,diag_residual,error";

fn fmt_f64(v: f64) -> String {
    v.to_string()
}

fn sanitize(msg: &str) -> String {
    msg.replace([',', '\n'], ";")
}

fn echo_block(config: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    for line in crate::config::echo(config).lines() {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

fn result_row(param_name: &str, param_value: &str, method: Method, outcome: &Result<CurrentResult, String>) -> String {
    match outcome {
        Ok(r) => {
            let panels = r.diagnostics.get("panels").map(|v| fmt_f64(*v)).unwrap_or_default();
            let residual = r.diagnostics.get("residual").map(|v| fmt_f64(*v)).unwrap_or_default();
            format!(
                "{param_name},{param_value},{},{},{},{panels},{residual},",
                method.name(),
                fmt_f64(r.value),
                fmt_f64(r.error_estimate()),
            )
        }
        Err(msg) => format!("{param_name},{param_value},{},,,,,{}", method.name(), sanitize(msg)),
    }
}

/// True for errors that should become CSV error cells (exit 2) rather than
/// aborting the whole run (exit 1).
fn is_numerical(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::Computation { .. } | CoreError::Accuracy { .. } | CoreError::Consistency { .. }
    )
}

pub fn cmd_current(config: &RunConfig, opts: &RunOptions, out: &mut dyn Write) -> CliResult<i32> {
    let RunMode::Current { methods } = &config.mode else {
        return Err(CliError::usage("config is not in current mode; rerun with the matching subcommand"));
    };
    let junction = config.junction.build()?;
    let template = config.junction.template().ok();

    let mut rows = Vec::new();
    let mut worst_exit = 0;
    for &method in methods {
        let outcome = match (&template, method) {
            (None, Method::LandauerSemiInfinite) => {
                return Err(CliError::usage(
                    "landauer needs identical chain leads to define the semi-infinite reference",
                ));
            }
            (Some(t), _) => evaluate_method(t, &junction, &config.fermi, &config.quadrature, method),
            (None, _) => {
                // template only feeds the Landauer reference; a placeholder
                // keeps the other methods usable with hand-written leads
                let dummy = JunctionTemplate {
                    kind: rj_core::analysis::SystemKind::SingleSite { eps0: 0.0 },
                    n: 1,
                    t_hop: 1.0,
                    v0: C64::new(0.0, 0.0),
                    gamma_policy: rj_core::model::GammaPolicy::Uniform(1.0),
                };
                evaluate_method(&dummy, &junction, &config.fermi, &config.quadrature, method)
            }
        };
        match outcome {
            Ok(r) => rows.push(result_row("", "", method, &Ok(r))),
            Err(e) if is_numerical(&e) => {
                worst_exit = 2;
                rows.push(result_row("", "", method, &Err(e.to_string())));
            }
            Err(e) => return Err(e.into()),
        }
    }

    echo_block(config, out)?;
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }

    if let Some(path) = &opts.dump_correlations {
        dump_correlations(&junction, &config.fermi, path)?;
    }
    Ok(worst_exit)
}

fn dump_correlations(junction: &JunctionModel, fermi: &FermiParameters, path: &std::path::Path) -> CliResult<()> {
    let model = oracle::assemble_full_space(junction, fermi)?;
    let state = oracle::solve_steady_state(&model)?;
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "row,col,re,im")?;
    let n = model.dim();
    for i in 0..n {
        for j in 0..n {
            let z = state.matrix[[i, j]];
            writeln!(f, "{i},{j},{},{}", fmt_f64(z.re), fmt_f64(z.im))?;
        }
    }
    Ok(())
}

enum CheckStatus {
    Pass,
    Fail,
    Skip,
}

struct Check {
    name: String,
    status: CheckStatus,
    detail: String,
}

fn check(name: &str, outcome: Result<(bool, String), CoreError>) -> Check {
    match outcome {
        Ok((true, detail)) => Check { name: name.into(), status: CheckStatus::Pass, detail },
        Ok((false, detail)) => Check { name: name.into(), status: CheckStatus::Fail, detail },
        Err(e) => Check { name: name.into(), status: CheckStatus::Fail, detail: e.to_string() },
    }
}

fn oracle_agreement(junction: &JunctionModel, fermi: &FermiParameters, config: &RunConfig) -> Result<(bool, String), CoreError> {
    let i_int = current_trace_integral(junction, fermi, &config.quadrature)?.value;
    let model = oracle::assemble_full_space(junction, fermi)?;
    let state = oracle::solve_steady_state(&model)?;
    let i_oracle = oracle::current_from_state(&model, &state)?.value;
    let diff = (i_int - i_oracle).abs();
    let tol = (1e-6 * i_oracle.abs()).max(1e-10);
    Ok((diff <= tol, format!("integral {i_int:.12e} oracle {i_oracle:.12e} diff {diff:.3e}")))
}

fn random_validation_junction(rng: &mut ChaCha8Rng, identical: bool) -> Result<JunctionModel, CoreError> {
    let ns = rng.gen_range(1..=2usize);
    let mut h = ndarray::Array2::<C64>::zeros((ns, ns));
    for i in 0..ns {
        h[[i, i]] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
        for j in (i + 1)..ns {
            let z = C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            h[[i, j]] = z;
            h[[j, i]] = z.conj();
        }
    }
    let mut mk_lead = |label: LeadLabel, n_modes: usize| -> Result<Lead, CoreError> {
        let modes = (0..n_modes)
            .map(|_| {
                let coupling = (0..ns)
                    .map(|_| C64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)))
                    .collect();
                ReservoirMode::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.05..1.0), coupling)
            })
            .collect::<Result<_, _>>()?;
        Lead::new(modes, label)
    };
    let lead_l = mk_lead(LeadLabel::Left, if identical { 6 } else { 5 })?;
    let lead_r = if identical {
        let mut r = lead_l.clone();
        r.label = LeadLabel::Right;
        r
    } else {
        mk_lead(LeadLabel::Right, 7)?
    };
    JunctionModel::new(SystemHamiltonian::new(h)?, lead_l, lead_r)
}

pub fn cmd_validate(config: &RunConfig, opts: &RunOptions, out: &mut dyn Write) -> CliResult<i32> {
    if !matches!(config.mode, RunMode::Validate) {
        return Err(CliError::usage("config is not in validate mode; rerun with the matching subcommand"));
    }
    let mut junction = config.junction.build()?;

    // negative-control hook: plant a non-Hermitian entry so the suite must fail
    if std::env::var("RJ_TEST_CORRUPT_HERMITICITY").as_deref() == Ok("1") {
        let mut h = junction.system.matrix().clone();
        h[[0, 0]] += C64::new(0.0, 1e-3);
        junction = JunctionModel::new(SystemHamiltonian::new_unchecked(h), junction.lead_l, junction.lead_r)?;
    }

    let freqs = junction.all_mode_frequencies();
    let lo = freqs.first().copied().unwrap_or(0.0) - 1.0;
    let hi = freqs.last().copied().unwrap_or(0.0) + 1.0;
    let grid: Vec<f64> = (0..32).map(|i| lo + (hi - lo) * i as f64 / 31.0).collect();

    let mut checks = Vec::new();

    checks.push(check("hamiltonian_hermitian", {
        let h = junction.system.matrix();
        let dev = max_abs(&(h - &rj_core::spectral::adjoint(h)));
        Ok((dev < 1e-12, format!("max |H - H^dag| = {dev:.3e}")))
    }));

    checks.push(check("resolvent_identity", {
        grid.iter()
            .try_fold(0.0f64, |acc, &w| Ok(acc.max(verify_resolvent_identity(w, &junction)?)))
            .map(|worst| (worst < 1e-10, format!("max residual {worst:.3e} over {} points", grid.len())))
    }));

    if junction.identical_reservoirs {
        checks.push(check("identical_reservoir_identity", {
            grid.iter()
                .try_fold(0.0f64, |acc, &w| {
                    Ok(acc.max(verify_identical_reservoir_identity(w, &junction)?))
                })
                .map(|worst| (worst < 1e-10, format!("max residual {worst:.3e} over {} points", grid.len())))
        }));
    } else {
        checks.push(Check {
            name: "identical_reservoir_identity".into(),
            status: CheckStatus::Skip,
            detail: "skipped (precondition: reservoirs differ)".into(),
        });
    }

    checks.push(check(
        "oracle_vs_trace_integral",
        oracle_agreement(&junction, &config.fermi, config),
    ));

    if let Some(seed) = opts.seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..5 {
            let name = format!("random_oracle_{i}");
            let outcome = random_validation_junction(&mut rng, i % 2 == 0)
                .and_then(|j| oracle_agreement(&j, &config.fermi, config));
            checks.push(check(&name, outcome));
        }
    }

    let mut failed = Vec::new();
    for c in &checks {
        let status = match c.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => {
                failed.push(c.name.clone());
                "FAIL"
            }
            CheckStatus::Skip => "SKIP",
        };
        writeln!(out, "{:<32} {status}  {}", c.name, c.detail)?;
    }
    if failed.is_empty() {
        Ok(0)
    } else {
        Err(CliError::Validation(format!("failed checks: {}", failed.join(", "))))
    }
}

pub fn cmd_sweep(config: &RunConfig, opts: &RunOptions, out: &mut dyn Write) -> CliResult<i32> {
    let RunMode::Sweep { parameter, values, methods } = &config.mode else {
        return Err(CliError::usage("config is not in sweep mode; rerun with the matching subcommand"));
    };
    let spec = SweepSpec {
        parameter: *parameter,
        values: values.clone(),
        methods: methods.clone(),
        template: config.junction.template()?,
        fermi: config.fermi,
        quadrature: config.quadrature.clone(),
    };
    spec.validate()?;

    let rows = in_pool(opts.jobs, || {
        use rayon::prelude::*;
        spec.values
            .par_iter()
            .map(|&v| evaluate_sweep_point(&spec, v))
            .collect::<Result<Vec<_>, _>>()
    })?;

    echo_block(config, out)?;
    writeln!(out, "{CSV_HEADER}")?;
    let mut worst_exit = 0;
    for row in &rows {
        let value = fmt_f64(row.value);
        for cell in &row.cells {
            if cell.outcome.is_err() {
                worst_exit = 2;
            }
            writeln!(out, "{}", result_row(parameter.name(), &value, cell.method, &cell.outcome))?;
        }
    }
    Ok(worst_exit)
}

pub fn cmd_converge(config: &RunConfig, opts: &RunOptions, out: &mut dyn Write) -> CliResult<i32> {
    let RunMode::Converge { sizes, rule } = &config.mode else {
        return Err(CliError::usage("config is not in converge mode; rerun with the matching subcommand"));
    };
    let template = config.junction.template()?;
    let rows = in_pool(opts.jobs, || {
        landauer_convergence_report(&template, &config.fermi, sizes, *rule, &config.quadrature)
    })?;

    echo_block(config, out)?;
    writeln!(out, "n,method,current,landauer_current,landauer_abs_err,landauer_rel_err,spacing_over_gamma,error")?;
    let mut worst_exit = 0;
    for row in &rows {
        let cells: [(&str, &Result<CurrentResult, String>, Option<f64>, Option<f64>); 2] = [
            ("pole_sum", &row.pole_sum, row.pole_abs_err, row.pole_rel_err),
            ("non_markovian", &row.nonmarkovian, row.nonmarkovian_abs_err, row.nonmarkovian_rel_err),
        ];
        for (name, outcome, abs_err, rel_err) in cells {
            match outcome {
                Ok(r) => writeln!(
                    out,
                    "{},{name},{},{},{},{},{},",
                    row.n,
                    fmt_f64(r.value),
                    fmt_f64(row.landauer),
                    abs_err.map(fmt_f64).unwrap_or_default(),
                    rel_err.map(fmt_f64).unwrap_or_default(),
                    fmt_f64(row.spacing_over_gamma),
                )?,
                Err(msg) => {
                    worst_exit = 2;
                    writeln!(
                        out,
                        "{},{name},,{},,,{},{}",
                        row.n,
                        fmt_f64(row.landauer),
                        fmt_f64(row.spacing_over_gamma),
                        sanitize(msg)
                    )?;
                }
            }
        }
    }
    Ok(worst_exit)
}

/// Runs `f` inside a rayon pool with the requested worker count; results are
/// ordered by input, so the count never changes the output.
fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T, CoreError> + Send) -> CliResult<T> {
    match jobs {
        None => Ok(f()?),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::parse_plain(format!("could not build worker pool: {e}")))?;
            Ok(pool.install(f)?)
        }
    }
}
