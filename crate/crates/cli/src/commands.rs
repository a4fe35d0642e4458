use std::fmt::Write as _;
use std::fs;

use anyhow::Context;
use bpc_core::bpc::{solve_grid_basis_pursuit, GridLpConfig};
use bpc_core::certificates::{CERTIFICATE_TOL, FEASIBILITY_TOL};
use bpc_core::generate::{alternating_measure, parse_atoms, random_nonnegative, random_signed};
use bpc_core::grid_spline::{
    build_grid, convergence_experiment, reconstruct_samples, solve_grid_with, ExperimentConfig,
    GridProblem, GridSolverConfig, Reference,
};
use bpc_core::{
    build_toeplitz, classify_regime, construct_certificate, solve_bpc_with, verify_certificate,
    BpcConfig, Measure64,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::io::{print_json, read_observations, with_manifest, write_json};
use crate::manifest::RunManifest;
use crate::{
    BenchArgs, ClassifyArgs, Failure, GenerateArgs, GridSolveArgs, Preset, ReferenceArg, SolveArgs,
    EXIT_NOT_UNIQUE, EXIT_OK, EXIT_SOLVER,
};

type Outcome = Result<u8, Failure>;

fn unique_code(unique: bool) -> u8 {
    if unique {
        EXIT_OK
    } else {
        EXIT_NOT_UNIQUE
    }
}

pub fn generate(args: GenerateArgs) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let src = &args.source;
    let measure: Measure64 = if let Some(list) = &src.atoms {
        parse_atoms(list)?
    } else if let Some(Preset::Alternating) = src.preset {
        alternating_measure(args.kc)
    } else if let Some(k) = src.random_nonneg {
        random_nonnegative(&mut rng, k, args.kc)?
    } else if let Some(k) = src.random_signed {
        random_signed(&mut rng, k, args.kc)?
    } else {
        unreachable!("clap enforces one source")
    };
    let y = measure.forward(args.kc);
    let manifest = RunManifest::new("generate", args.seed);
    match &args.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let (mpath, ypath) = (dir.join("measure.json"), dir.join("y.json"));
            let manifest = manifest
                .output(mpath.display().to_string())
                .output(ypath.display().to_string());
            write_json(&mpath, &with_manifest(&measure, &manifest)?)?;
            write_json(&ypath, &with_manifest(&y, &manifest)?)?;
            eprintln!("wrote {} and {}", mpath.display(), ypath.display());
        }
        None => {
            let bundle = json!({ "measure": measure, "observations": y });
            print_json(&with_manifest(&bundle, &manifest)?)?;
        }
    }
    Ok(EXIT_OK)
}

pub fn classify(args: ClassifyArgs) -> Outcome {
    let y = read_observations(&args.y_file)?;
    let report = classify_regime(&build_toeplitz(&y), args.tol_eig)?;
    let manifest = RunManifest::new("classify", 0)
        .input(args.y_file.display().to_string())
        .tolerance("tol_eig", report.tol_eig);
    print_json(&with_manifest(&report, &manifest)?)?;
    Ok(unique_code(report.regime.has_unique_solution()))
}

pub fn solve(args: SolveArgs) -> Outcome {
    let y = read_observations(&args.y_file)?;
    let cfg = BpcConfig {
        tol_eig: args.tol_eig,
        signed: None,
    };
    let report = solve_bpc_with(&y, &cfg)?;
    let mut manifest = RunManifest::new("solve", 0)
        .input(args.y_file.display().to_string())
        .tolerance("tol_eig", report.regime.tol_eig);
    if args.certify {
        manifest = manifest
            .tolerance("certificate", CERTIFICATE_TOL)
            .tolerance("feasibility", FEASIBILITY_TOL);
    }
    let oracle_cfg = GridLpConfig::<f64>::for_kc(y.kc());
    if args.oracle {
        manifest = manifest.tolerance("oracle_gap", oracle_cfg.tol);
    }
    let mut out = with_manifest(&report, &manifest)?;
    let mut code = unique_code(report.kind.is_unique());

    if args.certify {
        let measure = report.solution.as_ref().or(report.samples.first());
        let check = match (measure, &report.certificate) {
            (Some(w), Some(eta)) => Some(verify_certificate(eta, w, &y)),
            (Some(w), None) => {
                let eta = construct_certificate(w, y.kc())?;
                out["certificate"] = serde_json::to_value(&eta).map_err(Failure::input)?;
                Some(verify_certificate(&eta, w, &y))
            }
            _ => None,
        };
        let value = match check {
            Some(c) => {
                if !c.certifies_optimality()
                    || (report.kind.is_unique() && !c.certifies_uniqueness())
                {
                    code = EXIT_SOLVER;
                }
                let mut v = serde_json::to_value(c).map_err(Failure::input)?;
                v["certifies_optimality"] = json!(c.certifies_optimality());
                v["certifies_uniqueness"] = json!(c.certifies_uniqueness());
                v
            }
            None => Value::Null,
        };
        out["certificate_check"] = value;
    }

    if args.oracle {
        let lp = solve_grid_basis_pursuit(&y, &oracle_cfg)?;
        out["oracle"] = json!({
            "grid_points": lp.weights.len(),
            "grid_min_tv": lp.value,
            "lower_bound": lp.lower_bound,
            "optimal": lp.optimal,
            "gap": lp.value - report.min_tv,
        });
    }
    print_json(&out)?;
    Ok(code)
}

pub fn grid_solve(args: GridSolveArgs) -> Outcome {
    let y = read_observations(&args.y_file)?;
    let grid = build_grid::<f64>(args.p, args.m, y.kc())?;
    let prob = GridProblem::new(y, args.lambda, grid.clone())?;
    let cfg = GridSolverConfig {
        record_trace: args.trace.is_some(),
        ..Default::default()
    };
    let sol = solve_grid_with(&prob, &cfg)?;

    let mut manifest = RunManifest::new("grid-solve", 0)
        .input(args.y_file.display().to_string())
        .tolerance("lambda", args.lambda)
        .tolerance("admm_tol", cfg.tol);
    if let Some(path) = &args.trace {
        let mut csv = String::from("iter,objective,primal_res,dual_res\n");
        for r in &sol.trace {
            writeln!(
                csv,
                "{},{},{},{}",
                r.iter, r.objective, r.primal_res, r.dual_res
            )
            .expect("string write");
        }
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
        manifest = manifest.output(path.display().to_string());
    }
    let n = args.samples.max(1);
    let t: Vec<f64> = (0..n)
        .map(|i| std::f64::consts::TAU * i as f64 / n as f64)
        .collect();
    let payload = json!({
        "m": args.m,
        "p": args.p,
        "lambda": args.lambda,
        "objective": sol.objective,
        "iterations": sol.iterations,
        "polished": sol.polished,
        "c": sol.c,
        "innovation": sol.innovation,
        "samples": { "t": t, "f": reconstruct_samples(&sol.c, &grid, n) },
    });
    print_json(&with_manifest(&payload, &manifest)?)?;
    Ok(EXIT_OK)
}

pub fn bench(args: BenchArgs) -> Outcome {
    let mut cfg = ExperimentConfig::new(
        args.m,
        args.kc,
        args.lambda,
        args.p_list.clone(),
        args.runs,
        args.seed,
    );
    cfg.knots = args.knots;
    let result = convergence_experiment(&cfg)?;
    let reference = match args.reference {
        ReferenceArg::Minimizer => Reference::Minimizer,
        ReferenceArg::Truth => Reference::Truth,
    };
    let table = result.table(reference);

    let mut csv = String::from("P,mean_linf_error,std_linf_error,runs\n");
    for r in &table.rows {
        writeln!(
            csv,
            "{},{},{},{}",
            r.p, r.mean_linf_error, r.std_linf_error, r.runs
        )
        .expect("string write");
    }
    let slope = table
        .slope
        .map_or("undefined".to_owned(), |s| format!("{s:.4}"));
    match &args.out {
        Some(path) => {
            fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
            let side = path.with_extension("json");
            let manifest = RunManifest::new("bench-convergence", args.seed)
                .output(path.display().to_string())
                .output(side.display().to_string())
                .tolerance("lambda", args.lambda)
                .tolerance("admm_tol", cfg.solver.tol);
            let summary = json!({
                "config": cfg,
                "reference": reference,
                "slope": table.slope,
                "rows": table.rows,
                "monotonicity_violations": table.monotonicity_violations,
                "truth_slope": result.truth.slope,
                "minimizer_slope": result.minimizer.slope,
                "truth_is_minimizer": result.truth_is_minimizer,
                "baseline_linf_error": result.baseline_linf_error,
            });
            write_json(&side, &with_manifest(&summary, &manifest)?)?;
            eprintln!(
                "slope {slope}; wrote {} and {}",
                path.display(),
                side.display()
            );
        }
        None => {
            print!("{csv}");
            eprintln!("slope {slope}");
        }
    }
    Ok(EXIT_OK)
}
