use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use linedg::driver::{exit_code, refine_mesh_file, run_case, sparsity_table, RunConfig};
use linedg::mesh::{rectangle, QuadMesh};
use linedg::Result;

#[derive(Parser)]
#[command(name = "linedg", version, about = "Line-DG solver driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a case on its base mesh only.
    Run { config: PathBuf },
    /// Run the full refinement x degree sweep and print the rate table.
    Convergence { config: PathBuf },
    /// Print the node-column counts of the Jacobian stencil.
    Sparsity {
        /// Polynomial degrees.
        #[arg(long = "p", value_delimiter = ',', required = true)]
        degrees: Vec<usize>,
        /// Mesh file; defaults to a doubly periodic 8 x 8 grid.
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        action: MeshCommand,
    },
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Split every element into four.
    Refine { input: PathBuf, output: PathBuf },
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config } => {
            let mut cfg = RunConfig::load(config)?;
            cfg.refinements = 0;
            let out = run_case(&cfg)?;
            print!("{}", out.summary_csv());
        }
        Command::Convergence { config } => {
            let cfg = RunConfig::load(config)?;
            let out = run_case(&cfg)?;
            print!("{}", out.report.to_csv());
        }
        Command::Sparsity { degrees, mesh } => {
            let mesh = match mesh {
                Some(path) => QuadMesh::load(path)?,
                None => rectangle(8, 8, (0.0, 1.0), (0.0, 1.0), true, true)?,
            };
            print!("{}", sparsity_table(&mesh, &degrees)?);
        }
        Command::Mesh { action: MeshCommand::Refine { input, output } } => {
            let mesh = refine_mesh_file(input, &output)?;
            eprintln!("wrote {} elements to {}", mesh.n_elems(), output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
