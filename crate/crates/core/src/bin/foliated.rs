use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use foliated::experiment::{
    cmd_check_foliated, cmd_sweep_p, cmd_sweep_theta, SweepAxis, SweepSpec,
    DEFAULT_FOLIATED_THRESHOLD,
};
use foliated::grid::{parse_dump, write_dump};
use foliated::minimize::{Init, SolveOptions};
use foliated::rearrange::{
    foliated_symmetrize, mollify, symmetry_report, two_point_rearrange, HalfPlane,
};
use foliated::spectral::mode_table;
use foliated::{build_polar_grid, Error, FSpec, ProblemParams, RadialDomain, Result};

#[derive(Parser)]
#[command(name = "foliated", version, about = "Symmetry experiments for a noncoercive constrained functional")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Problem parameters as JSON (theta, p, q, F, domain).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid as NRxNA, e.g. 96x192.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    starts: usize,
    #[arg(long, default_value_t = 4000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    grad_tol: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep theta at p = 2 on the unit disk.
    SweepTheta {
        #[command(flatten)]
        common: Common,
        /// Comma-separated theta values.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.02, 0.05, 0.1, 0.2, 0.3])]
        values: Vec<f64>,
        #[arg(long)]
        no_warm_start: bool,
    },
    /// Sweep p at fixed theta: full and antisymmetric infima.
    SweepP {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2.0, 4.0, 8.0, 16.0, 24.0, 32.0])]
        values: Vec<f64>,
        /// theta used when no config is given.
        #[arg(long, default_value_t = 0.1)]
        theta: f64,
        #[arg(long)]
        no_warm_start: bool,
    },
    /// Minimize once and report symmetry and certification.
    CheckFoliated {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_FOLIATED_THRESHOLD)]
        threshold: f64,
    },
    /// Print the Neumann modes of a disk, sorted by eigenvalue.
    Eig {
        #[arg(long, default_value_t = 4)]
        n_max: u32,
        #[arg(long, default_value_t = 3)]
        k_max: u32,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Apply a transform to a dumped field.
    Rearrange {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        op: Op,
        /// Normal angle of the half-plane for two-point.
        #[arg(long)]
        normal: Option<f64>,
        /// Kernel radius for mollify.
        #[arg(long)]
        eps: Option<f64>,
        /// Output file (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Op {
    TwoPoint,
    Foliated,
    Mollify,
    Report,
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NRxNA, got {s:?}"))?;
    let n_r = a.trim().parse().map_err(|e| format!("n_r: {e}"))?;
    let n_a = b.trim().parse().map_err(|e| format!("n_a: {e}"))?;
    Ok((n_r, n_a))
}

fn load_params(path: &Option<PathBuf>, fallback: ProblemParams) -> Result<ProblemParams> {
    match path {
        Some(p) => ProblemParams::from_json(&fs::read_to_string(p)?),
        None => Ok(fallback),
    }
}

fn solve_opts(c: &Common) -> SolveOptions {
    SolveOptions {
        max_iters: c.max_iters,
        grad_tol: c.grad_tol,
        n_starts: c.starts,
        seed: c.seed,
        init: Init::RandomSmooth,
        ..SolveOptions::default()
    }
}

fn print_rows(rows: &[foliated::experiment::SweepRow]) {
    println!("{}", foliated::experiment::CSV_HEADER.join(" "));
    for r in rows {
        println!(
            "{} {:.10} {} {:.6e} {:.8} {:.3e} {:.3e} {:.3e} {} {:.2}",
            r.value,
            r.lambda,
            r.lambda_as.map(|x| format!("{x:.10}")).unwrap_or_else(|| "-".into()),
            r.c,
            r.d,
            r.foliated_defect,
            r.antisym_defect,
            r.even_defect,
            r.converged,
            r.runtime_s
        );
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::SweepTheta {
            common,
            values,
            no_warm_start,
        } => {
            let base = load_params(
                &common.config,
                ProblemParams::new(0.1, 2.0, FSpec::ZERO, RadialDomain::unit_disk())?,
            )?;
            let mut spec = SweepSpec::new(base, SweepAxis::Theta, values);
            spec.grid = common.grid;
            spec.opts = solve_opts(&common);
            spec.out_dir = common.out.clone();
            spec.warm_start = !no_warm_start;
            let out = cmd_sweep_theta(&spec)?;
            print_rows(&out.rows);
            println!("# grid_tol {:.3e}", out.grid_tol.grid_tol);
            println!("# lambda2(B) {:.10}", out.lambda2);
            println!("# flags {}", serde_json::to_string(&out.flags)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::SweepP {
            common,
            values,
            theta,
            no_warm_start,
        } => {
            let base = load_params(
                &common.config,
                ProblemParams::new(theta, 2.0, FSpec::ZERO, RadialDomain::unit_disk())?,
            )?;
            let mut spec = SweepSpec::new(base, SweepAxis::P, values);
            spec.grid = common.grid;
            spec.opts = solve_opts(&common);
            spec.out_dir = common.out.clone();
            spec.warm_start = !no_warm_start;
            let out = cmd_sweep_p(&spec)?;
            print_rows(&out.rows);
            println!("# grid_tol {:.3e}", out.grid_tol.grid_tol);
            match out.flags.onset_p {
                Some(p) => println!("# symmetry-breaking onset on these grids: p = {p}"),
                None => println!("# symmetry-breaking onset: none found"),
            }
            println!("# flags {}", serde_json::to_string(&out.flags)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::CheckFoliated { common, threshold } => {
            let params = load_params(
                &common.config,
                ProblemParams::new(0.1, 2.0, FSpec::ZERO, RadialDomain::unit_disk())?,
            )?;
            let (n_r, n_a) = common.grid.unwrap_or((96, 192));
            let grid = build_polar_grid(params.domain, n_r, n_a)?;
            let (res, check) = cmd_check_foliated(&params, &grid, &solve_opts(&common), threshold)?;
            println!("{}", serde_json::to_string_pretty(&check)?);
            if let Some(dir) = &common.out {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("result.json"), serde_json::to_string_pretty(&res.to_json())? + "\n")?;
                fs::write(dir.join("field.txt"), write_dump(&res.u))?;
            }
            Ok(if check.passes {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Cmd::Eig { n_max, k_max, radius } => {
            println!("n k parity alpha_nk eigenvalue");
            for m in mode_table(n_max, k_max, radius)? {
                println!("{} {} {:?} {:.12} {:.12}", m.n, m.k, m.parity, m.alpha_nk, m.eigenvalue);
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Rearrange {
            input,
            op,
            normal,
            eps,
            output,
        } => {
            let f = parse_dump(&fs::read_to_string(&input)?)?;
            let text = match op {
                Op::TwoPoint => {
                    let a = normal.ok_or_else(|| Error::InvalidParams("--normal is required".into()))?;
                    write_dump(&two_point_rearrange(&f, HalfPlane::new(a))?)
                }
                Op::Foliated => write_dump(&foliated_symmetrize(&f)),
                Op::Mollify => {
                    let e = eps.ok_or_else(|| Error::InvalidParams("--eps is required".into()))?;
                    write_dump(&mollify(&f, e)?)
                }
                Op::Report => symmetry_report(&f)?.to_json() + "\n",
            };
            match output {
                Some(p) => fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
