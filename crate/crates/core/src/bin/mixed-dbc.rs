use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mixed_dbc::config::RunConfig;
use mixed_dbc::estimator::{compute_indicators, write_aggregates_csv, IndicatorField};
use mixed_dbc::problems::by_name;
use mixed_dbc::verify::{
    compute_errors, gnuplot_script, n_dofs, run_adaptive_study_with, run_uniform_study_with, write_study_csv, StudyRecord,
};
use mixed_dbc::{solve_optimality, vtk, Error, Result};

/// Mixed finite elements for Dirichlet boundary control.
#[derive(Parser, Debug)]
#[command(name = "mixed-dbc", version)]
struct Cli {
    /// TOML run configuration; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve once on the uniform mesh with h = 2^-H.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Mesh exponent: h = 2^-H.
        #[arg(long = "h", value_name = "H")]
        h: Option<u32>,
    },
    /// Uniform refinement study starting at h = 2^-2.
    Study {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Adaptive SOLVE-ESTIMATE-MARK-REFINE loop.
    Adapt {
        #[command(flatten)]
        common: Common,
        /// Dörfler marking parameter in (0, 1].
        #[arg(long)]
        theta: Option<f64>,
        /// Stop once the number of unknowns exceeds this.
        #[arg(long = "max-dofs")]
        max_dofs: Option<usize>,
    },
    /// Write the uniform mesh with h = 2^-H of the problem's domain.
    ExportMesh {
        #[command(flatten)]
        common: Common,
        #[arg(long = "h", value_name = "H")]
        h: Option<u32>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Built-in problem: example1, example2 or zero.
    #[arg(long)]
    problem: Option<String>,
    /// Regularization parameter.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long = "output-dir")]
    output_dir: Option<PathBuf>,
    /// Also write legacy VTK files.
    #[arg(long)]
    vtk: bool,
}

impl Common {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(p) = &self.problem {
            cfg.problem = p.clone();
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
        cfg.vtk |= self.vtk;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("mixed-dbc: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cli.command, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mixed-dbc: {e}");
            ExitCode::FAILURE
        }
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_env();
    match &cli.command {
        Command::Solve { common, h } | Command::ExportMesh { common, h } => {
            common.apply(&mut cfg);
            if let Some(h) = h {
                cfg.h = *h;
            }
        }
        Command::Study { common, levels } => {
            common.apply(&mut cfg);
            if let Some(l) = levels {
                cfg.levels = *l;
            }
        }
        Command::Adapt {
            common,
            theta,
            max_dofs,
        } => {
            common.apply(&mut cfg);
            if let Some(t) = theta {
                cfg.theta = *t;
            }
            if let Some(m) = max_dofs {
                cfg.max_dofs = *m;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", dir.display())))
}

fn run(command: &Command, cfg: &RunConfig) -> Result<()> {
    let problem = by_name(&cfg.problem, Some(cfg.alpha))?;
    let dir = cfg.output_dir.as_path();
    prepare_dir(dir)?;
    let name = &problem.name;
    match command {
        Command::Solve { .. } => {
            let mesh = problem.domain.mesh(cfg.h)?;
            let sol = solve_optimality(&problem, &mesh)?;
            let eta = compute_indicators(&sol, &problem, &mesh)?;
            let errors = match &problem.exact {
                Some(ex) => Some(compute_errors(&sol, ex.as_ref(), &mesh)?),
                None => None,
            };
            let rec = StudyRecord {
                level: cfg.h as usize,
                h: mesh.h_max(),
                n_triangles: mesh.n_triangles(),
                dofs: n_dofs(&mesh),
                errors,
                eta: eta.total,
                eoc: [None; 6],
            };
            let stem = format!("{name}_solve_h{}", cfg.h);
            write_study_csv(create(dir, &format!("{stem}.csv"))?, std::slice::from_ref(&rec))?;
            write_aggregates_csv(create(dir, &format!("{stem}_estimator.csv"))?, [(rec.level, rec.dofs, &eta)])?;
            if cfg.vtk {
                vtk::write_solution(create(dir, &format!("{stem}.vtk"))?, &mesh, &sol, Some(&eta.mu))?;
            }
            print_records(&[rec]);
        }
        Command::Study { .. } => {
            let stem = format!("{name}_study");
            let mut fields: Vec<(usize, usize, IndicatorField)> = Vec::new();
            let records = run_uniform_study_with(&problem, cfg.levels, |k, mesh, sol, eta| {
                fields.push((k, n_dofs(mesh), eta.clone()));
                if cfg.vtk {
                    vtk::write_solution(create(dir, &format!("{stem}_h{k}.vtk"))?, mesh, sol, Some(&eta.mu))?;
                }
                Ok(())
            })?;
            write_outputs(dir, &stem, &records, &fields, false)?;
            print_records(&records);
        }
        Command::Adapt { .. } => {
            let stem = format!("{name}_adapt");
            let mut fields: Vec<(usize, usize, IndicatorField)> = Vec::new();
            let records = run_adaptive_study_with(&problem, cfg.theta, cfg.max_dofs, |step, mesh, sol, eta| {
                fields.push((step, n_dofs(mesh), eta.clone()));
                if cfg.vtk {
                    vtk::write_solution(create(dir, &format!("{stem}_{step:03}.vtk"))?, mesh, sol, Some(&eta.mu))?;
                }
                Ok(())
            })?;
            write_outputs(dir, &stem, &records, &fields, true)?;
            print_records(&records);
        }
        Command::ExportMesh { .. } => {
            let mesh = problem.domain.mesh(cfg.h)?;
            let stem = format!("{}_h{}", problem.domain.name(), cfg.h);
            vtk::write_mesh(create(dir, &format!("{stem}.vtk"))?, &mesh)?;
            let mut txt = create(dir, &format!("{stem}.txt"))?;
            txt.write_all(mesh.to_text().as_bytes())?;
            txt.flush()?;
            println!(
                "{stem}: {} vertices, {} edges, {} triangles",
                mesh.n_vertices(),
                mesh.n_edges(),
                mesh.n_triangles()
            );
        }
    }
    Ok(())
}

fn write_outputs(
    dir: &Path,
    stem: &str,
    records: &[StudyRecord],
    fields: &[(usize, usize, IndicatorField)],
    adaptive: bool,
) -> Result<()> {
    let csv = format!("{stem}.csv");
    write_study_csv(create(dir, &csv)?, records)?;
    write_aggregates_csv(
        create(dir, &format!("{stem}_estimator.csv"))?,
        fields.iter().map(|(l, d, f)| (*l, *d, f)),
    )?;
    let mut gp = create(dir, &format!("{stem}.gp"))?;
    gp.write_all(gnuplot_script(&csv, adaptive).as_bytes())?;
    gp.flush()?;
    Ok(())
}

fn print_records(records: &[StudyRecord]) {
    println!("{:>5} {:>9} {:>11} {:>11} {:>11} {:>11}", "level", "dofs", "eta", "error", "err_y", "err_u");
    for r in records {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.4e}")).unwrap_or_else(|| "-".into());
        println!(
            "{:>5} {:>9} {:>11} {:>11} {:>11} {:>11}",
            r.level,
            r.dofs,
            format!("{:.4e}", r.eta),
            cell(r.total_error()),
            cell(r.errors.map(|e| e.y_l2)),
            cell(r.errors.map(|e| e.u_l2)),
        );
    }
}
