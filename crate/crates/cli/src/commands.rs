//! Subcommand implementations.

use crate::config::RunConfig;
use crate::{config, dump, CliError};
use annulus_core::bk_solver::{
    residual_report, solve_pair, sweep, SolutionPair, SolveError, SolverOptions,
};
use annulus_core::elliptic::{assemble, EllipticOperator};
use annulus_core::functional::{BvpOperator, ConditionSample, FunctionalError};
use annulus_core::geometry::{build_grid, Field};
use annulus_core::radial_oracle::{
    harmonic_closed_form, radial_sup, torsion_closed_form, RadialProfile,
};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Flags shared by the subcommands; each command uses the subset it needs.
#[derive(Debug, Default)]
pub struct CommandArgs {
    pub config: Option<PathBuf>,
    pub rho: Option<f64>,
    pub rhos: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub samples: Option<usize>,
    pub case: Option<String>,
}

fn load_config(args: &CommandArgs) -> Result<RunConfig, CliError> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config FILE is required".into()))?;
    config::load(path)
}

fn build_operator(cfg: RunConfig) -> Result<(BvpOperator, SolverOptions), CliError> {
    let opts = SolverOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        damping: cfg.damping,
        ..SolverOptions::default()
    };
    let op = BvpOperator::new(cfg.spec).map_err(setup_error)?;
    Ok((op, opts))
}

/// Errors raised while assembling the problem are configuration problems,
/// except for numerical failures of the auxiliary solves.
fn setup_error(e: FunctionalError) -> CliError {
    use annulus_core::elliptic::EllipticError;
    match &e {
        FunctionalError::Elliptic(
            EllipticError::SolveFailure { .. } | EllipticError::MaximumPrinciple { .. },
        ) => CliError::Numerical(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

fn solve_error(e: SolveError) -> CliError {
    match &e {
        SolveError::InvalidOptions(_) => CliError::Usage(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write `{}`: {e}", path.display())))
}

pub fn cmd_solve(args: &CommandArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let rho = args
        .rho
        .or(cfg.rho)
        .ok_or_else(|| CliError::Usage("provide --rho or set [solver] rho".into()))?;
    let (op, opts) = build_operator(cfg)?;
    let pair = solve_pair(&op, rho, &opts).map_err(solve_error)?;
    let report = residual_report(&op, &pair).map_err(solve_error)?;

    println!(
        "rho={:?} lambda={:?} iterations={} fp_residual={:?} cone_violation={:?} \
         norm_deviation={:?} pde_defect={:?} outer_bc_defect={:?}",
        pair.rho,
        pair.lambda,
        pair.iterations,
        pair.fp_residual,
        pair.cone_violation,
        pair.norm_deviation,
        report.pde_defect,
        report.outer_bc_defect
    );

    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("solution.csv"));
    let mut text = Vec::new();
    dump::write_extended(&mut text, &pair.u).map_err(|e| CliError::Io(e.to_string()))?;
    write_output(&out, &String::from_utf8_lossy(&text))?;
    eprintln!("field dump written to {}", out.display());
    Ok(())
}

pub fn cmd_sweep(args: &CommandArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let rhos = args
        .rhos
        .clone()
        .or_else(|| cfg.rhos.clone())
        .or_else(|| cfg.rho.map(|r| vec![r]))
        .ok_or_else(|| CliError::Usage("provide --rhos or set [solver] rhos".into()))?;
    let jobs = args.jobs.unwrap_or(1).max(1);
    let (op, opts) = build_operator(cfg)?;

    // collect (rho, outcome) in input order
    let outcomes: Vec<(f64, Result<SolutionPair, SolveError>)> = if jobs == 1 {
        sweep(&op, &rhos, &opts)
            .map_err(solve_error)?
            .into_iter()
            .map(|entry| (entry.rho, entry.result))
            .collect()
    } else {
        validate_rhos(&rhos)?;
        parallel_sweep(&op, &rhos, &opts, jobs)
    };

    let mut csv = String::from("rho,lambda,iterations,fp_residual\n");
    let mut failures = 0usize;
    for (rho, outcome) in &outcomes {
        match outcome {
            Ok(pair) => {
                writeln!(
                    csv,
                    "{:?},{:?},{},{:?}",
                    pair.rho, pair.lambda, pair.iterations, pair.fp_residual
                )
                .expect("string write");
            }
            Err(e) => {
                failures += 1;
                eprintln!("rho={rho} failed: {e}");
            }
        }
    }

    match &args.out {
        Some(path) => {
            write_output(path, &csv)?;
            eprintln!("sweep written to {}", path.display());
        }
        None => print!("{csv}"),
    }

    if failures > 0 {
        return Err(CliError::Numerical(format!(
            "{failures} of {} sweep points failed",
            outcomes.len()
        )));
    }
    Ok(())
}

fn validate_rhos(rhos: &[f64]) -> Result<(), CliError> {
    if rhos.is_empty() {
        return Err(CliError::Usage("empty rho list".into()));
    }
    if !(rhos[0] > 0.0) {
        return Err(CliError::Usage(format!(
            "rho values must be positive, got {}",
            rhos[0]
        )));
    }
    for pair in rhos.windows(2) {
        if !(pair[0] < pair[1]) {
            return Err(CliError::Usage(format!(
                "rho values must be strictly increasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    Ok(())
}

/// Independent solves without warm starting; output order stays the input
/// order regardless of scheduling.
fn parallel_sweep(
    op: &BvpOperator,
    rhos: &[f64],
    opts: &SolverOptions,
    jobs: usize,
) -> Vec<(f64, Result<SolutionPair, SolveError>)> {
    let mut slots: Vec<Option<(f64, Result<SolutionPair, SolveError>)>> =
        (0..rhos.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut queues: Vec<Vec<(usize, &mut Option<(f64, Result<SolutionPair, SolveError>)>)>> =
            (0..jobs).map(|_| Vec::new()).collect();
        for (k, slot) in slots.iter_mut().enumerate() {
            queues[k % jobs].push((k, slot));
        }
        for queue in queues {
            scope.spawn(move || {
                for (idx, slot) in queue {
                    let rho = rhos[idx];
                    *slot = Some((rho, solve_pair(op, rho, opts)));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("slot filled")).collect()
}

pub fn cmd_check(args: &CommandArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let rho = args
        .rho
        .or(cfg.rho)
        .ok_or_else(|| CliError::Usage("provide --rho or set [solver] rho".into()))?;
    let ell = cfg
        .ell
        .clone()
        .ok_or_else(|| CliError::Config("the check command needs [hypotheses] ell".into()))?;
    let b_rho = cfg.b_rho;
    let samples = args.samples.unwrap_or(32);
    let (op, _) = build_operator(cfg)?;

    let report = op
        .check_hypotheses_sampled(rho, &ell, b_rho, samples)
        .map_err(|e| match &e {
            FunctionalError::InvalidRho(_) | FunctionalError::NegativeBRho(_) => {
                CliError::Usage(e.to_string())
            }
            FunctionalError::NegativeLowerBound { .. } | FunctionalError::BadArity { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        })?;

    println!("rho={:?}", report.rho);
    println!("ell={}", report.ell.source());
    println!("b_rho={:?}", report.b_rho);
    println!("d_rho={:?}", report.d_rho);
    println!("satisfied={}", report.satisfied);
    match &report.condition_a {
        ConditionSample::Ok { samples_per_axis } => {
            println!("condition_a=ok samples_per_axis={samples_per_axis}");
        }
        ConditionSample::Violation {
            at,
            u,
            v,
            f_value,
            lower_bound,
        } => {
            println!(
                "condition_a=violated x1={:?} x2={:?} u={u:?} v={v:?} f={f_value:?} \
                 bound={lower_bound:?}",
                at.x1, at.x2
            );
        }
    }
    Ok(())
}

pub fn cmd_aux(args: &CommandArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let (op, _) = build_operator(cfg)?;
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Io(format!("cannot create `{}`: {e}", dir.display())))?;

    let aux = op.aux();
    let write_one = |name: &str,
                     write: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>|
     -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        let mut buf = Vec::new();
        write(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
        write_output(&path, &String::from_utf8_lossy(&buf))?;
        Ok(path)
    };

    let delta = write_one("delta.csv", &|b| dump::write_field(b, &aux.delta))?;
    let gamma = write_one("gamma.csv", &|b| dump::write_field(b, &aux.gamma))?;
    let phi = write_one("phi.csv", &|b| dump::write_extended(b, &aux.phi))?;
    let gamma_tilde = write_one("gamma_tilde.csv", &|b| {
        dump::write_extended(b, &aux.gamma_tilde)
    })?;

    println!("delta={}", delta.display());
    println!("gamma={}", gamma.display());
    println!("phi={}", phi.display());
    println!("gamma_tilde={}", gamma_tilde.display());
    Ok(())
}

pub fn cmd_oracle(args: &CommandArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let case = args
        .case
        .clone()
        .ok_or_else(|| CliError::Usage("--case torsion|gamma|delta is required".into()))?;
    let domain = cfg.spec.domain;
    let (r1, r2) = (domain.r_inner(), domain.r_outer());

    let profile: RadialProfile = match case.as_str() {
        "torsion" => torsion_closed_form(r1, r2, 1.0),
        "gamma" => harmonic_closed_form(r1, r2, 0.0, 1.0),
        "delta" => harmonic_closed_form(r1, r2, 1.0, 0.0),
        other => {
            return Err(CliError::Usage(format!(
                "unknown oracle case `{other}` (expected torsion, gamma or delta)"
            )))
        }
    }
    .map_err(|e| CliError::Config(e.to_string()))?;

    println!("case={case}");
    let mut errors = Vec::new();
    let mut sup_discrete_coarse = None;
    for level in 0..2u32 {
        let n_r = cfg.spec.n_r << level;
        let n_theta = cfg.spec.n_theta << level;
        let grid = build_grid(domain, n_r, n_theta).map_err(|e| CliError::Config(e.to_string()))?;
        // closed forms hold for the negative Laplacian; [operator] is ignored here
        let sys = assemble(&EllipticOperator::laplacian(), grid.clone())
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let zero_bc = vec![0.0; grid.n_theta()];
        let discrete = match case.as_str() {
            "torsion" => {
                sys.solve_with_values(&Field::constant(grid.clone(), 1.0), &zero_bc, &zero_bc)
            }
            "gamma" => sys.solve_with_values(
                &Field::zeros(grid.clone()),
                &zero_bc,
                &vec![1.0; grid.n_theta()],
            ),
            _ => sys.solve_with_values(
                &Field::zeros(grid.clone()),
                &vec![1.0; grid.n_theta()],
                &zero_bc,
            ),
        }
        .map_err(|e| CliError::Numerical(e.to_string()))?;

        let mut max_error = 0.0f64;
        for i in 0..=grid.n_r() {
            let exact = profile.eval(grid.radius(i));
            for j in 0..grid.n_theta() {
                max_error = max_error.max((discrete.value(i, j) - exact).abs());
            }
        }
        errors.push(max_error);
        if level == 0 {
            sup_discrete_coarse = Some(discrete.sup_abs());
        }
        println!("grid={n_r}x{n_theta} max_error={max_error:?}");
    }
    println!("ratio={:?}", errors[0] / errors[1]);
    println!(
        "sup_discrete={:?}",
        sup_discrete_coarse.expect("coarse sup")
    );
    println!("sup_closed_form={:?}", radial_sup(&profile).1);
    Ok(())
}
