use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use multiyear::formulation::{build, FormulationError, Method};
use multiyear::horizon::{asset_records, horizon_records, write_weight_csv};
use multiyear::numfmt::sig12;
use multiyear::report::{emit, run, Format};
use multiyear::scenario::{load_document, ScenarioDocument};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "multiyear",
    version,
    about = "Multi-year investment cost formulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and print a short summary.
    Validate { file: PathBuf },
    /// Build, solve and compare formulations.
    Run {
        file: PathBuf,
        /// Comma-separated methods; defaults to the file's list, then to
        /// every method the horizon supports.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<Method>,
        /// Directory for `report.<ext>`; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "table")]
        format: Format,
    },
    /// Dump the weight tables as CSV.
    Weights {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one formulation in LP text format.
    ExportLp {
        file: PathBuf,
        #[arg(long)]
        method: Method,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Invalid(anyhow::Error),
    Solver(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Invalid(e.into())
    }
}

fn formulation_failure(e: FormulationError) -> Failure {
    match e {
        FormulationError::Solver { .. } => Failure::Solver(e.into()),
        other => Failure::Invalid(other.into()),
    }
}

fn load(file: &Path) -> Result<ScenarioDocument> {
    load_document(file).with_context(|| format!("loading {}", file.display()))
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn default_methods(doc: &ScenarioDocument) -> Vec<Method> {
    if !doc.methods.is_empty() {
        return doc.methods.clone();
    }
    let yearly = doc.scenario.horizon.is_yearly();
    Method::ALL
        .into_iter()
        .filter(|m| yearly || !m.requires_yearly())
        .collect()
}

fn execute(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Validate { file } => {
            let doc = load(&file)?;
            let s = &doc.scenario;
            println!(
                "ok: {} ({} years, milestones {:?}, {} assets, {} periods)",
                s.name,
                s.horizon.total_years(),
                s.horizon.milestones(),
                s.assets.len(),
                s.periods.len()
            );
            for a in &s.assets {
                println!(
                    "  {}: lifetime {}, year-0 total cost {}, annualized cost {}",
                    a.name,
                    a.cost.lifetime,
                    sig12(a.cost.total(0)),
                    sig12(a.cost.annualized(0))
                );
            }
        }
        Command::Run {
            file,
            methods,
            out,
            format,
        } => {
            let doc = load(&file)?;
            let methods = if methods.is_empty() {
                default_methods(&doc)
            } else {
                methods
            };
            let report = run(&doc.scenario, &methods).map_err(formulation_failure)?;
            let text = emit(&report, format);
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)
                        .with_context(|| format!("creating {}", dir.display()))?;
                    let path = dir.join(format!("report.{}", format.extension()));
                    write_out(Some(&path), &text)?;
                    eprintln!("wrote {}", path.display());
                }
                None => write_out(None, &text)?,
            }
        }
        Command::Weights { file, out } => {
            let doc = load(&file)?;
            let s = &doc.scenario;
            let mut records = horizon_records(&s.horizon);
            for (i, a) in s.assets.iter().enumerate() {
                let scheme = s.split_scheme(i).map_err(formulation_failure)?;
                records.extend(asset_records(
                    &s.horizon,
                    &a.name,
                    a.cost.lifetime,
                    &scheme,
                )?);
            }
            let mut buf = Vec::new();
            write_weight_csv(&records, &mut buf)?;
            write_out(out.as_deref(), &String::from_utf8(buf)?)?;
        }
        Command::ExportLp { file, method, out } => {
            let doc = load(&file)?;
            let f = build(&doc.scenario, method).map_err(formulation_failure)?;
            write_out(out.as_deref(), &f.to_lp_text())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver error: {e:#}");
            ExitCode::from(2)
        }
    }
}
