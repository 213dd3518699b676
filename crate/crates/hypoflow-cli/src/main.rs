//! Command-line driver: validation, classification, evolution, holonomy and
//! verification workflows with reproducible, self-describing file output.
//!
//! Exit codes: 0 success; 1 negative validation/classification result or a
//! failed verification suite; 2 usage or input-parse error; 3 numerical
//! failure.

mod commands;
mod report;
mod verify;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "hypoflow",
    version,
    about = "Hypo SU(2)-structures on 5-dimensional nilpotent Lie algebras: \
             validation, classification, evolution flow, holonomy reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test whether a form file defines an SU(2)-structure and recover
    /// (alpha, omega2, omega3).
    Validate {
        /// Form file with entries omega1, psi2, psi3.
        #[arg(long)]
        input: std::path::PathBuf,
        /// Relative tolerance for the equality conditions.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Optional directory for the JSON report.
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        /// Random seed recorded in the report.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Classify a differential (from a form file or a family point):
    /// isomorphism class, fingerprint, hypo residual, orbit label.
    Classify {
        /// Form file with entries de1 … de5.
        #[arg(long, conflicts_with_all = ["family", "params"])]
        input: Option<std::path::PathBuf>,
        /// Family name (m1, m2, m3).
        #[arg(long, requires = "params")]
        family: Option<String>,
        /// Comma-separated family parameters; rationals allowed with --exact.
        #[arg(long)]
        params: Option<String>,
        /// Use exact rational arithmetic for the classification.
        #[arg(long, default_value_t = false)]
        exact: bool,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Integrate the reduced evolution flow of a family point.
    Evolve {
        #[arg(long)]
        family: String,
        #[arg(long)]
        params: String,
        /// Integration span "a:b".
        #[arg(long, default_value = "0:1")]
        tspan: String,
        #[arg(long, default_value_t = 1e-10)]
        rtol: f64,
        #[arg(long, default_value_t = 1e-10)]
        atol: f64,
        /// Blow-up ceiling on the state sup norm.
        #[arg(long, default_value_t = 1e6)]
        ceiling: f64,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        /// Output format: json, csv or both.
        #[arg(long, default_value = "both")]
        format: String,
        /// Also write per-quantity plot data files.
        #[arg(long, default_value_t = false)]
        plot_data: bool,
        /// Also integrate tr(X̂|_W) toward the boundary for this subspace
        /// (full, e5, e1e2) and write an obstruction report.
        #[arg(long)]
        trace_w: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Holonomy-rank report at a family point, along sampled times of its
    /// evolution, or on a parameter sweep of the third family.
    Holonomy {
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        params: Option<String>,
        /// Comma-separated times at which to sample the evolved metric.
        #[arg(long)]
        t_samples: Option<String>,
        /// Third-family grid "l0:l1:n,m0:m1:m" for the reducible locus.
        #[arg(long, conflicts_with_all = ["family", "params", "t_samples"])]
        sweep: Option<String>,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a deterministic property suite.
    Verify {
        /// Suite name: exterior-identities, prop21-roundtrip, paper-matrices,
        /// flow-consistency, first-integrals, trace-identities, all.
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 20260809)]
        seed: u64,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate {
            input,
            tol,
            out,
            seed,
        } => commands::cmd_validate(&input, tol, out.as_deref(), seed),
        Command::Classify {
            input,
            family,
            params,
            exact,
            out,
            seed,
        } => commands::cmd_classify(
            input.as_deref(),
            family.as_deref(),
            params.as_deref(),
            exact,
            out.as_deref(),
            seed,
        ),
        Command::Evolve {
            family,
            params,
            tspan,
            rtol,
            atol,
            ceiling,
            out,
            format,
            plot_data,
            trace_w,
            seed,
        } => commands::cmd_evolve(&commands::EvolveArgs {
            family,
            params,
            tspan,
            rtol,
            atol,
            ceiling,
            out,
            format,
            plot_data,
            trace_w,
            seed,
        }),
        Command::Holonomy {
            family,
            params,
            t_samples,
            sweep,
            out,
            seed,
        } => commands::cmd_holonomy(
            family.as_deref(),
            params.as_deref(),
            t_samples.as_deref(),
            sweep.as_deref(),
            out.as_deref(),
            seed,
        ),
        Command::Verify { suite, seed } => verify::cmd_verify(&suite, seed),
    };
    std::process::exit(code);
}
