use clap::{Args, Parser, Subcommand, ValueEnum};
use melnikov_cli::{parse_override, run, CliError, Command, Grid, RunConfig, SimMode, Tolerances, EXIT_DOMAIN};
use melnikov_core::abelian::Side;
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Melnikov functions, zero counts, bound tables and simulations for
/// piecewise linear centers switching across y = x^m.
#[derive(Parser, Debug)]
#[command(name = "melnikov", version)]
struct Cli {
    /// Input JSON (perturbation spec, or expansion for `count --expansion`); `-` or omitted reads stdin.
    #[arg(long, short, global = true)]
    input: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Seed for random-spec suites.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Worker threads for parallel grids.
    #[arg(long, default_value_t = 1, global = true)]
    jobs: usize,
    /// Tolerance override `key=value`, repeatable.
    #[arg(long = "tol", value_parser = parse_override, global = true)]
    tol: Vec<(String, f64)>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SideArg {
    Plus,
    Minus,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Closed form of the arc integral of x^i y^j dx as JSON.
    Reduce {
        #[arg(long = "i")]
        i: u32,
        #[arg(long = "j")]
        j: u32,
        #[arg(long)]
        m: u32,
        #[arg(long, value_enum, default_value = "plus")]
        side: SideArg,
    },
    /// Melnikov expansion of a spec as JSON.
    Assemble,
    /// Certified zero report as JSON.
    Count {
        /// Treat the input as an expansion JSON instead of a spec.
        #[arg(long)]
        expansion: bool,
    },
    /// CSV of (m, n, region, lower, upper).
    Bounds {
        #[arg(long, requires = "n_max", conflicts_with = "table")]
        m_max: Option<u32>,
        #[arg(long, requires = "m_max")]
        n_max: Option<u32>,
        /// Same as `--m-max M --n-max N`.
        #[arg(long, num_args = 2, value_names = ["M_MAX", "N_MAX"])]
        table: Option<Vec<u32>>,
    },
    /// Spec whose Melnikov function has simple zeros at the targets.
    Construct {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        /// Comma separated zeros; defaults to as many as the lower bound, geometrically spaced in (0.3, 3).
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<f64>>,
    },
    /// Closed forms against quadrature, as CSV.
    Verify {
        /// `default` (integral grid) or `melnikov` (seeded random specs).
        #[arg(long, default_value = "default")]
        grid: Grid,
        /// Random specs per (m, n) for the melnikov grid.
        #[arg(long, default_value_t = 10)]
        specs: usize,
    },
    /// Piecewise flow of the perturbed system.
    Simulate(SimArgs),
}

#[derive(Args, Debug)]
struct SimArgs {
    #[arg(long, allow_negative_numbers = true)]
    epsilon: f64,
    /// Start point B(u0) of the trajectory.
    #[arg(long, default_value_t = 1.0)]
    u0: f64,
    /// Trajectory end time; defaults to the first return.
    #[arg(long)]
    t_max: Option<f64>,
    /// Emit CycleFinding JSON for sign changes of the displacement on the range.
    #[arg(long, conflicts_with = "plot_data")]
    cycles: bool,
    /// Emit (u, delta) pairs, one revolution per sample.
    #[arg(long)]
    plot_data: bool,
    #[arg(long, default_value_t = 0.3)]
    u_min: f64,
    #[arg(long, default_value_t = 3.0)]
    u_max: f64,
    #[arg(long, default_value_t = 60)]
    samples: usize,
}

fn command(cmd: Cmd) -> Result<Command, String> {
    Ok(match cmd {
        Cmd::Reduce { i, j, m, side } => Command::Reduce {
            i,
            j,
            m,
            side: match side {
                SideArg::Plus => Side::Plus,
                SideArg::Minus => Side::Minus,
            },
        },
        Cmd::Assemble => Command::Assemble,
        Cmd::Count { expansion } => Command::Count { expansion },
        Cmd::Bounds { m_max, n_max, table } => match (m_max, n_max, table) {
            (Some(m_max), Some(n_max), None) => Command::Bounds { m_max, n_max },
            (None, None, Some(t)) => Command::Bounds {
                m_max: t[0],
                n_max: t[1],
            },
            _ => return Err("give either --m-max and --n-max, or --table M_MAX N_MAX".into()),
        },
        Cmd::Construct { m, n, targets } => Command::Construct { m, n, targets },
        Cmd::Verify { grid, specs } => Command::Verify { grid, specs },
        Cmd::Simulate(a) => {
            let mode = if a.cycles {
                SimMode::Cycles {
                    u_min: a.u_min,
                    u_max: a.u_max,
                    samples: a.samples,
                }
            } else if a.plot_data {
                SimMode::PlotData {
                    u_min: a.u_min,
                    u_max: a.u_max,
                    samples: a.samples,
                }
            } else {
                SimMode::Trajectory {
                    u0: a.u0,
                    t_max: a.t_max,
                }
            };
            Command::Simulate {
                epsilon: a.epsilon,
                mode,
            }
        }
    })
}

fn main() {
    let cli = Cli::parse();
    let overrides: BTreeMap<String, f64> = cli.tol.into_iter().collect();
    let config = command(cli.cmd).and_then(|c| {
        let tolerances = Tolerances::default().with_overrides(&overrides).map_err(|e| match e {
            CliError::Domain(s) | CliError::Finding(s) => s,
        })?;
        Ok(RunConfig {
            command: c,
            input: cli.input,
            output: cli.output,
            tolerances,
            seed: cli.seed,
            jobs: cli.jobs,
        })
    });
    match config {
        Ok(c) => std::process::exit(run(&c)),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(EXIT_DOMAIN);
        }
    }
}
