//! Task pipelines: each subcommand reads the problem file, drives the
//! library, and writes machine-readable artifacts plus the run manifest.

use crate::output::{jf, Manifest, OutputDir};
use crate::problem::{parse_named_expr, require, CliError, CliResult, ProblemFile};
use crate::svg::{line_chart, Line};
use semilin::expr::{Bindings, Expr, Params};
use semilin::geometry::GeometrySpec;
use semilin::hypotheses::{self, Budget, HypothesisReport, Verdict};
use semilin::reduction::{
    build_change_of_variables, reduce, transform, ChangeOfVariables, Coordinate,
};
use semilin::solvers::{
    check_nonexistence, nonexistence_candidate, solve_bvp_singular, solve_from_pole, solve_ivp,
    solve_ivp_transformed, solve_picard_negative_power, solve_picard_sublinear, BvpOptions,
    PicardOptions, RadialSolution,
};
use semilin::verify::{lift_residual_field, residual_ladder, uniqueness_contract};
use serde_json::json;
use std::collections::BTreeMap;
use std::sync::Arc;

pub struct Ctx {
    pub file: ProblemFile,
    pub params: Params,
    pub geom: Arc<GeometrySpec>,
    pub out: OutputDir,
    pub manifest: Manifest,
    pub plots: bool,
    pub tol: f64,
}

impl Ctx {
    fn f_expr(&self) -> CliResult<Expr> {
        let text = self
            .file
            .problem
            .as_ref()
            .and_then(|p| p.f.clone())
            .ok_or_else(|| CliError::key("problem.f", "missing required key"))?;
        semilin::expr::parse(&text, &self.params).map_err(|e| CliError::key("problem.f", e))
    }

    fn cov(&self) -> CliResult<Arc<ChangeOfVariables>> {
        Ok(Arc::new(build_change_of_variables(
            self.geom.clone(),
            self.file.task.r0,
        )?))
    }

    fn write_solution(&mut self, sol: &RadialSolution) -> CliResult<()> {
        let rows: Vec<Vec<f64>> = sol
            .grid
            .iter()
            .zip(sol.values.iter())
            .zip(sol.derivatives.iter())
            .map(|((c, u), du)| vec![*c, *u, *du])
            .collect();
        self.out.write_csv("solution.csv", "coord,u,du", &rows)?;
        self.manifest.insert(
            "solution",
            json!({
                "coordinate": sol.coordinate,
                "provenance": sol.provenance,
                "window": [jf(sol.window().0), jf(sol.window().1)],
                "nodes": sol.grid.len(),
                "blow_up": sol.blow_up,
            }),
        );
        if self.plots {
            let pts: Vec<(f64, f64)> = sol
                .grid
                .iter()
                .zip(sol.values.iter())
                .map(|(x, y)| (*x, *y))
                .collect();
            let svg = line_chart(
                "solution",
                "coordinate",
                "u",
                &[Line {
                    points: &pts,
                    color: "#1f77b4",
                }],
            );
            self.out.write_text("solution.svg", &svg)?;
        }
        Ok(())
    }

    fn validate_tol(&self) -> CliResult<f64> {
        if !(self.tol > 0.0) {
            return Err(CliError::key("task.tol", "tolerance must be positive"));
        }
        Ok(self.tol)
    }
}

pub fn run_reduce(mut ctx: Ctx) -> CliResult<i32> {
    let f = ctx.f_expr()?;
    let ode = reduce(ctx.geom.clone(), f)?;
    let window = match ctx.file.task.window {
        Some([a, b]) => (a, b),
        None => semilin::geometry::clip_window(ode.domain.0, ode.domain.1),
    };
    if !(window.0 < window.1) {
        return Err(CliError::key("task.window", "window is empty"));
    }
    let n = 201;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let r = window.0 + (window.1 - window.0) * i as f64 / (n - 1) as f64;
        rows.push(vec![r, ctx.geom.log_derivative(r)?, ctx.geom.volume(r)?]);
    }
    ctx.out.write_csv("reduce.csv", "r,drift,A", &rows)?;
    ctx.manifest.insert(
        "reduction",
        json!({
            "form": "u'' + (ln A)' u' - f = 0",
            "domain": [jf(ode.domain.0), jf(ode.domain.1)],
            "samples": n,
        }),
    );
    ctx.manifest.write(&mut ctx.out)?;
    Ok(0)
}

pub fn run_solve_ivp(mut ctx: Ctx) -> CliResult<i32> {
    let tol = ctx.validate_tol()?;
    let f = ctx.f_expr()?;
    let window = require(ctx.file.task.window, "task.window")?;
    let window = (window[0], window[1]);
    if !(window.0 < window.1) {
        return Err(CliError::key("task.window", "window is empty"));
    }
    let from_pole = ctx.file.task.from_pole.unwrap_or(false);
    let coordinate = ctx.file.task.coordinate.clone().unwrap_or_else(|| "r".to_string());

    let sol = if from_pole {
        let u0 = require(ctx.file.task.u0, "task.u0")?;
        solve_from_pole(ctx.geom.clone(), &f, u0, window, tol)?
    } else {
        let r_init = require(ctx.file.task.r_init, "task.r_init")?;
        let u0 = require(ctx.file.task.u0, "task.u0")?;
        let du0 = require(ctx.file.task.du0, "task.du0")?;
        match coordinate.as_str() {
            "r" => {
                let ode = reduce(ctx.geom.clone(), f)?;
                solve_ivp(&ode, r_init, u0, du0, window, tol)?
            }
            "s" => {
                let ode = reduce(ctx.geom.clone(), f)?;
                let cov = ctx.cov()?;
                let tr = transform(&ode, cov)?;
                solve_ivp_transformed(&tr, r_init, u0, du0, window, tol)?
            }
            other => {
                return Err(CliError::key(
                    "task.coordinate",
                    format!("expected \"r\" or \"s\", got `{}`", other),
                ))
            }
        }
    };
    ctx.manifest.insert("tolerance", jf(tol));
    ctx.write_solution(&sol)?;
    ctx.manifest.write(&mut ctx.out)?;
    Ok(0)
}

pub fn run_solve_bvp(mut ctx: Ctx) -> CliResult<i32> {
    let tol = ctx.validate_tol()?;
    let f = ctx.f_expr()?;
    let alpha = require(ctx.file.task.alpha, "task.alpha")?;
    let beta = require(ctx.file.task.beta, "task.beta")?;
    let gamma = require(ctx.file.task.gamma, "task.gamma")?;
    let delta = require(ctx.file.task.delta, "task.delta")?;
    let cov = ctx.cov()?;
    let outcome = solve_bvp_singular(
        ctx.geom.clone(),
        &cov,
        &f,
        alpha,
        beta,
        gamma,
        delta,
        tol,
        &BvpOptions::default(),
    );
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            return Err(CliError::new(format!("solver failure: {}", e)));
        }
    };
    ctx.manifest.insert(
        "bvp",
        json!({
            "boundary_residual_left": jf(outcome.boundary_residual_left),
            "boundary_residual_right": jf(outcome.boundary_residual_right),
            "levels_used": outcome.levels_used,
            "final_epsilon": jf(outcome.final_epsilon),
            "shots": outcome.shots,
            "tolerance": jf(tol),
        }),
    );
    ctx.write_solution(&outcome.solution)?;
    ctx.manifest.write(&mut ctx.out)?;
    Ok(0)
}

pub fn run_solve_picard(mut ctx: Ctx) -> CliResult<i32> {
    let tol = ctx.validate_tol()?;
    let variant = ctx
        .file
        .task
        .variant
        .clone()
        .unwrap_or_else(|| "sublinear".to_string());
    let a = require(ctx.file.task.a, "task.a")?;
    let opts = PicardOptions::default();
    let outcome = match variant.as_str() {
        "sublinear" => {
            let f = ctx.f_expr()?;
            let c = require(ctx.file.task.c, "task.c")?;
            solve_picard_sublinear(ctx.geom.clone(), &f, a, c, tol, &opts)?
        }
        "negative-power" => {
            let b_text = ctx
                .file
                .problem
                .as_ref()
                .and_then(|p| p.b.clone())
                .ok_or_else(|| CliError::key("problem.b", "missing required key"))?;
            let b = semilin::expr::parse(&b_text, &ctx.params)
                .map_err(|e| CliError::key("problem.b", e))?;
            let sigma = require(ctx.file.task.sigma, "task.sigma")?;
            solve_picard_negative_power(ctx.geom.clone(), &b, sigma, a, tol, &opts)?
        }
        other => {
            return Err(CliError::key(
                "task.variant",
                format!("expected \"sublinear\" or \"negative-power\", got `{}`", other),
            ))
        }
    };
    ctx.manifest.insert(
        "picard",
        json!({
            "variant": variant,
            "iterations": outcome.iterations,
            "final_update": jf(outcome.final_update),
            "c_achieved": jf(outcome.c_achieved),
            "left_value": jf(outcome.left_value),
            "c_mismatch": outcome.c_mismatch,
            "r_max": jf(outcome.r_max),
            "tolerance": jf(tol),
        }),
    );
    ctx.write_solution(&outcome.solution)?;
    ctx.manifest.write(&mut ctx.out)?;
    Ok(0)
}

pub fn run_nonexistence(mut ctx: Ctx) -> CliResult<i32> {
    let tol = ctx.validate_tol()?;
    let f = ctx.f_expr()?;
    let cov = ctx.cov()?;
    let initial = require(ctx.file.task.initial.clone(), "task.initial")?;
    let windows = ctx
        .file
        .task
        .windows
        .clone()
        .unwrap_or_else(|| vec![5.0, 50.0, 500.0]);
    let solve_window = ctx.file.task.solve_window.unwrap_or([-3.0, 3.0]);
    let mut reports = Vec::new();
    let mut first_solution: Option<RadialSolution> = None;
    for (i, [s0, z0, dz0]) in initial.iter().enumerate() {
        let candidate = nonexistence_candidate(
            ctx.geom.clone(),
            cov.clone(),
            &f,
            *s0,
            *z0,
            *dz0,
            (solve_window[0], solve_window[1]),
            tol,
        )?;
        let report = check_nonexistence(&ctx.geom, &cov, &f, &candidate, &windows, 1e-8)?;
        reports.push(json!({
            "initial": [jf(*s0), jf(*z0), jf(*dz0)],
            "report": report,
        }));
        if i == 0 {
            first_solution = Some(candidate);
        }
    }
    ctx.manifest
        .insert("nonexistence", json!({ "candidates": reports, "tolerance": jf(tol) }));
    if let Some(sol) = first_solution {
        ctx.write_solution(&sol)?;
    }
    ctx.manifest.write(&mut ctx.out)?;
    Ok(0)
}

pub fn run_uniqueness(mut ctx: Ctx) -> CliResult<i32> {
    let tol = ctx.validate_tol()?;
    let f = ctx.f_expr()?;
    let ode = reduce(ctx.geom.clone(), f.clone())?;
    let cov = ctx.cov()?;
    let tr = transform(&ode, cov.clone())?;
    let r1 = require(ctx.file.task.r1, "task.R1")?;
    let r2 = require(ctx.file.task.r2, "task.R2")?;
    let data = require(ctx.file.task.data, "task.data")?;
    let tol2 = ctx.file.task.tol2.unwrap_or(tol * 1e-3);
    let perturb = ctx.file.task.perturb.unwrap_or(0.0);
    let s0 = 0.5 * (r1 + r2);
    let pad = 0.05 * (r2 - r1);
    let window = (r1 - pad, r2 + pad);
    let sol1 = solve_ivp_transformed(&tr, s0, data[0], data[1], window, tol)?;
    let sol2 = solve_ivp_transformed(&tr, s0, data[0] + perturb, data[1], window, tol2)?;
    let match_tol = if perturb == 0.0 { tol * 10.0 } else { 2.0 * perturb };
    let cert = uniqueness_contract(&sol1, &sol2, &f, &cov, r1, r2, match_tol)?;
    ctx.out.write_json("certificate.json", &cert)?;
    ctx.manifest.insert(
        "uniqueness",
        json!({
            "max_deviation": jf(cert.max_deviation),
            "delta": jf(cert.delta),
            "intervals_covered": cert.intervals_covered,
            "perturb": jf(perturb),
            "tolerances": [jf(tol), jf(tol2)],
        }),
    );
    ctx.write_solution(&sol1)?;
    ctx.manifest.write(&mut ctx.out)?;
    Ok(0)
}

pub fn run_audit(mut ctx: Ctx) -> CliResult<i32> {
    let f = ctx.f_expr()?;
    let budget = Budget::default();
    let problem = ctx.file.problem.clone().unwrap_or_default();
    let mut audit: BTreeMap<String, HypothesisReport> = BTreeMap::new();

    if let (Some(rb), Some(yb)) = (ctx.file.task.r_box, ctx.file.task.y_box) {
        audit.insert(
            "F1".to_string(),
            hypotheses::check_f1(&f, (rb[0], rb[1]), (yb[0], yb[1]), &budget),
        );
    }
    let cov = ctx.cov()?;
    let [f3, f4] = hypotheses::check_f3_f4(&f, &cov, &budget);
    audit.insert("F3".to_string(), f3);
    audit.insert("F4".to_string(), f4);
    audit.insert(
        "A1".to_string(),
        hypotheses::check_a1(&ctx.geom, &cov, &budget),
    );
    let a = ctx.file.task.a.unwrap_or(ctx.geom.domain().0);
    if a.is_finite() {
        audit.insert("A2".to_string(), hypotheses::check_a2(&ctx.geom, a, &budget));
    }
    let l1 = parse_named_expr("problem", "L1", &problem.l1, &ctx.params)?;
    let l2 = parse_named_expr("problem", "L2", &problem.l2, &ctx.params)?;
    if let (Some(l1), Some(l2)) = (l1, l2) {
        let window = require(ctx.file.task.window_s, "task.window_s")?;
        let ymax = ctx.file.task.ymax.unwrap_or(10.0);
        audit.insert(
            "F2".to_string(),
            hypotheses::check_f2(&f, &l1, &l2, &cov, (window[0], window[1]), ymax, &budget),
        );
    }
    if let Some(thetas) = &ctx.file.task.thetas {
        audit.insert(
            "F5".to_string(),
            hypotheses::check_f5(&f, &ctx.geom, &cov, thetas, &budget),
        );
    }
    if let Some(h) = parse_named_expr("problem", "h", &problem.h, &ctx.params)? {
        if a.is_finite() {
            audit.insert(
                "F6".to_string(),
                hypotheses::check_f6(&f, &h, &ctx.geom, a, &budget),
            );
        }
    }
    if let Some(b) = parse_named_expr("problem", "b", &problem.b, &ctx.params)? {
        if a.is_finite() {
            audit.insert(
                "B1".to_string(),
                hypotheses::check_b1(&b, &ctx.geom, a, &budget),
            );
        }
    }
    if let Some(phi) = parse_named_expr("problem", "phi", &problem.phi, &ctx.params)? {
        let t_box = require(ctx.file.task.r_box, "task.r_box")?;
        let x1_box = require(ctx.file.task.x1_box, "task.x1_box")?;
        let x2_box = require(ctx.file.task.x2_box, "task.x2_box")?;
        let c_bound = require(ctx.file.task.c_bound, "task.c_bound")?;
        let window = semilin::solvers::Box3 {
            t: (t_box[0], t_box[1]),
            x1: (x1_box[0], x1_box[1]),
            x2: (x2_box[0], x2_box[1]),
        };
        audit.insert(
            "completeness_bounds".to_string(),
            semilin::solvers::check_completeness_bounds(&phi, &ctx.geom, &f, &window, c_bound),
        );
    }

    let falsified: Vec<String> = audit
        .iter()
        .filter(|(_, rep)| rep.verdict == Verdict::Falsified)
        .map(|(k, _)| k.clone())
        .collect();
    ctx.out.write_json("audit.json", &audit)?;
    ctx.manifest.insert(
        "audit",
        json!({
            "conditions": audit.keys().cloned().collect::<Vec<_>>(),
            "falsified": falsified,
        }),
    );
    ctx.manifest.write(&mut ctx.out)?;
    let demanded = ctx.file.task.fail_on_falsified.unwrap_or(false);
    if demanded && !falsified.is_empty() {
        eprintln!(
            "audit: falsified hypotheses with fail_on_falsified set: {}",
            falsified.join(", ")
        );
        return Ok(2);
    }
    Ok(0)
}

pub fn run_verify(mut ctx: Ctx) -> CliResult<i32> {
    let tol = ctx.validate_tol()?;
    let f = ctx.f_expr()?;
    let problem = ctx.file.problem.clone().unwrap_or_default();
    let profile_range = ctx
        .geom
        .profile
        .as_ref()
        .map(|p| p.r_range)
        .ok_or_else(|| CliError::key("geometry", "verify needs a surface of revolution"))?;

    // reference/solved radial solution
    let sol = if let Some(u_text) = &problem.u {
        let u = semilin::expr::parse(u_text, &ctx.params)
            .map_err(|e| CliError::key("problem.u", e))?;
        let du = match &problem.du {
            Some(t) => {
                semilin::expr::parse(t, &ctx.params).map_err(|e| CliError::key("problem.du", e))?
            }
            None => semilin::expr::differentiate(&u, semilin::expr::Var::R),
        };
        let n = 4001;
        let (a, b) = profile_range;
        let b = if b.is_finite() { b } else { a + 10.0 };
        let mut grid = Vec::with_capacity(n);
        let mut vals = Vec::with_capacity(n);
        let mut ders = Vec::with_capacity(n);
        for i in 0..n {
            let r = a + (b - a) * i as f64 / (n - 1) as f64;
            grid.push(r);
            vals.push(
                u.eval(&Bindings::new().r(r))
                    .map_err(|e| CliError::key("problem.u", e))?,
            );
            ders.push(
                du.eval(&Bindings::new().r(r))
                    .map_err(|e| CliError::key("problem.du", e))?,
            );
        }
        RadialSolution::new(
            Coordinate::RCoordinate,
            grid,
            vals,
            ders,
            semilin::solvers::Provenance::Synthetic,
        )?
    } else {
        let u0 = require(ctx.file.task.u0, "task.u0")?;
        let window = require(ctx.file.task.window, "task.window")?;
        solve_from_pole(ctx.geom.clone(), &f, u0, (window[0], window[1]), tol)?
    };

    let nr_ladder = ctx.file.task.nr.clone().unwrap_or_else(|| vec![32, 64, 128]);
    if nr_ladder.is_empty() {
        return Err(CliError::key("task.nr", "ladder must be non-empty"));
    }
    let factor = ctx.file.task.ntheta_factor.unwrap_or(2);
    let ladder: Vec<(usize, usize)> = nr_ladder.iter().map(|&nr| (nr, factor * nr)).collect();
    let (reports, order) = residual_ladder(&ctx.geom, &sol, &ladder, &f)?;

    // residual field on the finest mesh
    let &(nr_fine, ntheta_fine) = ladder.last().unwrap();
    let field = lift_residual_field(&ctx.geom, &sol, nr_fine, ntheta_fine, &f)?;
    let rows: Vec<Vec<f64>> = (0..field.mesh.vertices.len())
        .map(|v| {
            vec![
                v as f64,
                field.mesh.polar[v].0,
                field.mesh.polar[v].1,
                field.residual[v],
            ]
        })
        .collect();
    ctx.out
        .write_csv("residuals.csv", "vertex,r,theta,residual", &rows)?;

    ctx.manifest.insert(
        "verify",
        json!({
            "ladder": reports,
            "empirical_order": jf(order),
            "finest": { "nr": nr_fine, "ntheta": ntheta_fine },
            "tolerance": jf(tol),
        }),
    );
    if self_plots(&ctx) {
        let pts: Vec<(f64, f64)> = sol
            .grid
            .iter()
            .zip(sol.values.iter())
            .map(|(x, y)| (*x, *y))
            .collect();
        ctx.out.write_text(
            "solution.svg",
            &line_chart(
                "radial profile",
                "r",
                "u",
                &[Line {
                    points: &pts,
                    color: "#1f77b4",
                }],
            ),
        )?;
        let conv: Vec<(f64, f64)> = reports
            .iter()
            .map(|rep| ((1.0 / rep.nr as f64).ln(), rep.l2_residual.max(1e-300).ln()))
            .collect();
        ctx.out.write_text(
            "convergence.svg",
            &line_chart(
                "residual vs h (log-log)",
                "ln h",
                "ln L2 residual",
                &[Line {
                    points: &conv,
                    color: "#d62728",
                }],
            ),
        )?;
    }
    ctx.manifest.write(&mut ctx.out)?;
    Ok(0)
}

fn self_plots(ctx: &Ctx) -> bool {
    ctx.plots
}
