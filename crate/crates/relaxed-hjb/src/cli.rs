//! Experiment orchestration behind the `relaxed-hjb` binary.
//!
//! Each subcommand reads an [`ExperimentConfig`], runs one experiment and
//! writes CSV artifacts plus a `manifest.json` into the output directory.
//! All numeric output is locale-independent shortest-round-trip decimal, and
//! re-running a subcommand with the same config, seed and thread count
//! reproduces the CSV files byte for byte (the manifest carries the wall
//! clock timestamp and is exempt).
//!
//! Exit codes: 0 on success, 2 when a run finished but violated one of the
//! theory invariants it checks (bound conformance, monotonicity, the
//! performance-gap direction, `|z| <= 3` for `mc-verify`, exactness for
//! `exact-reg`), 1 on operational errors.
//!
//! CSV schemas per subcommand:
//!
//! | subcommand  | file               | columns |
//! |-------------|--------------------|---------|
//! | solve       | `value.csv`        | `x1[,x2],u` |
//! | solve       | `control.csv`      | `x1[,x2],lambda1..lambdaK` |
//! | sweep-eps   | `eps_sweep.csv`    | `eps,sup_gap,bound_rhs,monotone_ok,c2beta_gap` |
//! | perturb     | `stability.csv`    | `t,e_per,value_gap_norm,control_gap_norm,subopt_gap_norm` |
//! | sensitivity | `delta_u.csv`      | `x1[,x2],delta_u` |
//! | sensitivity | `delta_lambda.csv` | `x1[,x2],dlambda1..dlambdaK` |
//! | sensitivity | `remainder.csv`    | `t,remainder,order` |
//! | mc-verify   | `mc.csv`           | `x0_1[,x0_2],pde_value,mc_mean,mc_stderr,z,n_paths,dt,seed` |
//! | exact-reg   | `exact_reg.csv`    | `eps,sup_distance,sloc_exact` |
//! | surface     | `surface.csv`      | `x1,x2,x3,h_excess,y1,y2,y3,rho` |

use std::path::{Path, PathBuf};

use crate::analysis;
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::simulate::{simulate_value, McOptions};
use crate::smoothmax::SmoothMaxFamily;
use crate::solver::{solve_hjb, SolverOptions};

/// The experiment verbs exposed by the binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Solve,
    SweepEps,
    Perturb,
    Sensitivity,
    McVerify,
    ExactReg,
    Surface,
}

impl Subcommand {
    pub fn parse(name: &str) -> Option<Subcommand> {
        Some(match name {
            "solve" => Subcommand::Solve,
            "sweep-eps" => Subcommand::SweepEps,
            "perturb" => Subcommand::Perturb,
            "sensitivity" => Subcommand::Sensitivity,
            "mc-verify" => Subcommand::McVerify,
            "exact-reg" => Subcommand::ExactReg,
            "surface" => Subcommand::Surface,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Solve => "solve",
            Subcommand::SweepEps => "sweep-eps",
            Subcommand::Perturb => "perturb",
            Subcommand::Sensitivity => "sensitivity",
            Subcommand::McVerify => "mc-verify",
            Subcommand::ExactReg => "exact-reg",
            Subcommand::Surface => "surface",
        }
    }

    pub const ALL: [Subcommand; 7] = [
        Subcommand::Solve,
        Subcommand::SweepEps,
        Subcommand::Perturb,
        Subcommand::Sensitivity,
        Subcommand::McVerify,
        Subcommand::ExactReg,
        Subcommand::Surface,
    ];
}

/// What a run produced.
#[derive(Debug)]
pub struct RunOutcome {
    /// 0 = clean, 2 = an invariant check failed (files are still written).
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_else(|| "na".into())
}

// temp-file-then-rename so partial writes never surface
fn write_atomic(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn iso8601_utc_now() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let days = (secs / 86_400) as i64;
    let rem = secs % 86_400;
    // civil-from-days
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = if m <= 2 { y + 1 } else { y };
    format!(
        "{y:04}-{m:02}-{d:02}T{:02}:{:02}:{:02}Z",
        rem / 3600,
        (rem % 3600) / 60,
        rem % 60
    )
}

fn coord_header(dim: usize) -> String {
    (1..=dim)
        .map(|a| format!("x{a}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn coord_row(x: &[f64]) -> String {
    x.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(",")
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn emit(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, content)?;
        self.files.push(path);
        Ok(())
    }
}

/// Runs one subcommand, writing artifacts into `cfg.out_dir`.
pub fn run(cmd: Subcommand, cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let dir = PathBuf::from(&cfg.out_dir);
    let mut w = Writer {
        dir: &dir,
        files: Vec::new(),
    };
    let model = cfg.build_model()?;
    let family = cfg.build_family()?;
    let grid = cfg.build_grid()?;
    let opts: SolverOptions = cfg.solver.clone();
    let first_eps = *cfg.eps_list.first().unwrap_or(&0.0);
    let mut exit_code = 0;

    match cmd {
        Subcommand::Solve => {
            let solved = solve_hjb(&model, &grid, &family, first_eps, &opts)?;
            let mut value = format!("{},u\n", coord_header(cfg.dim));
            for (node, &u) in solved.u.iter().enumerate() {
                value.push_str(&format!("{},{}\n", coord_row(&grid.coords(node)), fmt(u)));
            }
            w.emit("value.csv", &value)?;
            let mut control = format!(
                "{},{}\n",
                coord_header(cfg.dim),
                (1..=cfg.num_actions)
                    .map(|k| format!("lambda{k}"))
                    .collect::<Vec<_>>()
                    .join(",")
            );
            for (i, &node) in grid.interior().iter().enumerate() {
                let lambda = solved.control[i]
                    .weights()
                    .iter()
                    .map(|v| fmt(*v))
                    .collect::<Vec<_>>()
                    .join(",");
                control.push_str(&format!("{},{lambda}\n", coord_row(&grid.coords(node))));
            }
            w.emit("control.csv", &control)?;
        }

        Subcommand::SweepEps => {
            let rows = analysis::eps_sweep(
                &model,
                &grid,
                &family,
                &cfg.eps_list,
                &opts,
                cfg.beta,
                cfg.gap_threshold,
            )?;
            let mut csv = String::from("eps,sup_gap,bound_rhs,monotone_ok,c2beta_gap\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt(r.eps),
                    fmt(r.sup_gap),
                    fmt(r.bound_rhs),
                    r.monotone_ok,
                    fmt(r.c2beta_gap)
                ));
                let bound_ok = r.sup_gap >= -2.0 * opts.tolerance
                    && r.sup_gap <= r.bound_rhs + 2.0 * opts.tolerance;
                if !bound_ok || !r.monotone_ok {
                    exit_code = 2;
                }
            }
            w.emit("eps_sweep.csv", &csv)?;
        }

        Subcommand::Perturb => {
            let spec = cfg.build_perturbation()?;
            let sweep = analysis::stability_sweep(
                &model,
                &spec,
                &cfg.t_list,
                &grid,
                &family,
                first_eps,
                cfg.beta,
                &opts,
            )?;
            let mut csv = String::from("t,e_per,value_gap_norm,control_gap_norm,subopt_gap_norm\n");
            for r in &sweep.rows {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt(r.t),
                    fmt(r.e_per),
                    fmt(r.value_gap_norm),
                    fmt(r.control_gap_norm),
                    fmt(r.subopt_gap_norm)
                ));
            }
            w.emit("stability.csv", &csv)?;
            if sweep.max_subopt_violation > 2.0 * opts.tolerance {
                exit_code = 2;
            }
        }

        Subcommand::Sensitivity => {
            let spec = cfg.build_perturbation()?;
            let base = solve_hjb(&model, &grid, &family, first_eps, &opts)?;
            let sens =
                analysis::solve_sensitivity(&model, &grid, &family, first_eps, &base, &spec)?;
            let mut du = format!("{},delta_u\n", coord_header(cfg.dim));
            for (node, &v) in sens.delta_u.iter().enumerate() {
                du.push_str(&format!("{},{}\n", coord_row(&grid.coords(node)), fmt(v)));
            }
            w.emit("delta_u.csv", &du)?;
            let mut dl = format!(
                "{},{}\n",
                coord_header(cfg.dim),
                (1..=cfg.num_actions)
                    .map(|k| format!("dlambda{k}"))
                    .collect::<Vec<_>>()
                    .join(",")
            );
            for (i, &node) in grid.interior().iter().enumerate() {
                let row = sens.delta_lambda[i]
                    .iter()
                    .map(|v| fmt(*v))
                    .collect::<Vec<_>>()
                    .join(",");
                dl.push_str(&format!("{},{row}\n", coord_row(&grid.coords(node))));
                let tangent: f64 = sens.delta_lambda[i].iter().sum();
                if tangent.abs() > 1e-9 {
                    exit_code = 2;
                }
            }
            w.emit("delta_lambda.csv", &dl)?;
            let rows = analysis::validate_sensitivity(
                &model,
                &grid,
                &family,
                first_eps,
                &spec,
                &cfg.t_list,
                &opts,
            )?;
            let mut csv = String::from("t,remainder,order\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    fmt(r.t),
                    fmt(r.remainder),
                    fmt_opt(r.order)
                ));
            }
            w.emit("remainder.csv", &csv)?;
        }

        Subcommand::McVerify => {
            let solved = solve_hjb(&model, &grid, &family, first_eps, &opts)?;
            let mc = McOptions {
                n_paths: cfg.mc_paths,
                dt: cfg.mc_dt,
                seed: cfg.seed,
                threads: cfg.threads,
                ..McOptions::default()
            };
            let est = simulate_value(&model, &grid, &solved, &family, &cfg.mc_x0, &mc)?;
            // PDE value read at the nearest grid node to x0
            let node = grid.nearest_interior(&cfg.mc_x0);
            let pde = solved.u[node];
            let z = if est.stderr > 0.0 {
                (est.mean - pde) / est.stderr
            } else {
                0.0
            };
            let header: String = (1..=cfg.dim)
                .map(|a| format!("x0_{a}"))
                .collect::<Vec<_>>()
                .join(",");
            let csv = format!(
                "{header},pde_value,mc_mean,mc_stderr,z,n_paths,dt,seed\n{},{},{},{},{},{},{},{}\n",
                coord_row(&cfg.mc_x0),
                fmt(pde),
                fmt(est.mean),
                fmt(est.stderr),
                fmt(z),
                est.n_paths,
                fmt(est.dt),
                est.seed
            );
            w.emit("mc.csv", &csv)?;
            if z.abs() > 3.0 {
                exit_code = 2;
            }
        }

        Subcommand::ExactReg => {
            let eps_positive: Vec<f64> =
                cfg.eps_list.iter().copied().filter(|&e| e > 0.0).collect();
            if eps_positive.is_empty() {
                return Err(Error::ConfigValidation {
                    key: "sweep.eps".into(),
                    message: "exact-reg needs at least one positive eps".into(),
                });
            }
            let report = analysis::control_convergence(
                &model,
                &grid,
                &family,
                &eps_positive,
                cfg.gap_threshold,
                &opts,
            )?;
            if let Some(warning) = &report.warning {
                eprintln!("warning: {warning}");
            }
            let mut csv = String::from("eps,sup_distance,sloc_exact\n");
            for r in &report.rows {
                let exact = match r.exact {
                    Some(flag) => flag.to_string(),
                    None => "na".into(),
                };
                csv.push_str(&format!(
                    "{},{},{exact}\n",
                    fmt(r.eps),
                    fmt_opt(r.sup_distance)
                ));
                if r.exact == Some(false) {
                    exit_code = 2;
                }
            }
            w.emit("exact_reg.csv", &csv)?;
        }

        Subcommand::Surface => {
            let rows = emit_surface(&family, 3.0, 41)?;
            let mut csv = String::from("x1,x2,x3,h_excess,y1,y2,y3,rho\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    fmt(r.x[0]),
                    fmt(r.x[1]),
                    fmt(r.x[2]),
                    fmt(r.h_excess),
                    fmt(r.y[0]),
                    fmt(r.y[1]),
                    fmt(r.y[2]),
                    fmt(r.rho)
                ));
            }
            w.emit("surface.csv", &csv)?;
        }
    }

    let manifest = format!(
        "{{\n  \"subcommand\": \"{}\",\n  \"config_hash\": \"{}\",\n  \"seed\": {},\n  \
         \"threads\": {},\n  \"version\": \"{}\",\n  \"timestamp\": \"{}\",\n  \"files\": [{}]\n}}\n",
        cmd.name(),
        cfg.hash(),
        cfg.seed,
        cfg.threads,
        env!("CARGO_PKG_VERSION"),
        iso8601_utc_now(),
        w.files
            .iter()
            .map(|p| format!("\"{}\"", p.file_name().unwrap().to_string_lossy()))
            .collect::<Vec<_>>()
            .join(", ")
    );
    write_atomic(&dir.join("manifest.json"), &manifest)?;
    Ok(RunOutcome {
        exit_code,
        files: w.files,
    })
}

/// One sample of the generator-comparison surface.
#[derive(Debug, Clone)]
pub struct SurfaceRow {
    /// Sample point on the zero-sum slice.
    pub x: [f64; 3],
    /// `H(x) - max(x)`: the smoothing excess.
    pub h_excess: f64,
    /// `grad H(x)`: a point on the simplex.
    pub y: [f64; 3],
    /// Exploration reward at `y` via the conjugacy identity at `eps = 1`.
    pub rho: f64,
}

/// Samples `H - max` on the zero-sum plane `x1 + x2 + x3 = 0` and the
/// induced reward `rho` on the simplex (each sample point contributes the
/// pair `(y, rho(y))` with `y = grad H(x)`). Requires a 3-action family.
pub fn emit_surface(
    family: &SmoothMaxFamily,
    half_width: f64,
    samples_per_axis: usize,
) -> Result<Vec<SurfaceRow>> {
    if family.num_actions() != 3 {
        return Err(Error::InvalidArgument(
            "the comparison surface is defined for 3 actions".into(),
        ));
    }
    if samples_per_axis < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let mut rows = Vec::with_capacity(samples_per_axis * samples_per_axis);
    let step = 2.0 * half_width / (samples_per_axis - 1) as f64;
    for i in 0..samples_per_axis {
        for j in 0..samples_per_axis {
            let s = -half_width + i as f64 * step;
            let t = -half_width + j as f64 * step;
            let x = [s, t, -s - t];
            let h = family.eval(&x);
            let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let y = family.grad_scaled(1.0, &x)?;
            let dot: f64 = x.iter().zip(y.weights()).map(|(a, b)| a * b).sum();
            rows.push(SurfaceRow {
                x,
                h_excess: h - max,
                y: [y[0], y[1], y[2]],
                rho: dot - h,
            });
        }
    }
    Ok(rows)
}
