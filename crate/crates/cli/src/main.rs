use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use selfsim::{Error, ErrorKind};

mod commands;
mod literal;

#[derive(Parser, Debug)]
#[command(name = "selfsim", version, about = "Self-similar actions, lattice buildings and quaternion norm-one groups")]
struct Cli {
    #[command(flatten)]
    config: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Prime p.
    #[arg(short = 'p', long = "prime", global = true, default_value_t = 2)]
    pub p: u64,
    /// Matrix size n; defaults to the number of valuations, else 2 (3 for
    /// apartment-svg).
    #[arg(short = 'n', long = "dim", global = true)]
    pub n: Option<usize>,
    /// Valuations of the diagonal conjugator, e.g. "1,-1"; they must sum to 0.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub vals: Option<String>,
    /// p-adic working precision K.
    #[arg(long, global = true, default_value_t = 24)]
    pub precision: u32,
    /// Seed for all random sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for parallel sampling.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Cap on search nodes, portrait nodes and enumerated elements.
    #[arg(long, global = true, default_value_t = 200_000)]
    pub budget: usize,
    /// Write output to a file instead of stdout.
    #[arg(short = 'o', long, global = true)]
    pub output: Option<PathBuf>,
}

impl Global {
    pub fn dim_or(&self, default: usize) -> usize {
        self.n
            .or_else(|| self.vals.as_deref().and_then(|v| literal::int_list(v).ok()).map(|v| v.len()))
            .unwrap_or(default)
    }

    pub fn dim(&self) -> usize {
        self.dim_or(2)
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
    Svg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Coset representatives of the level-m congruence subgroup.
    Transversal {
        /// Level; defaults to the level of the virtual endomorphism.
        #[arg(short = 'm', long)]
        m: Option<u32>,
    },
    /// Image of a word and the restriction at it.
    Act {
        /// Row-major integer matrix of determinant 1, e.g. "1,2;0,1".
        #[arg(short = 'g', long, allow_hyphen_values = true)]
        g: String,
        /// Word as digits, or '.'-separated letters when d > 10; "-" is the root.
        #[arg(short = 'w', long, allow_hyphen_values = true)]
        word: String,
    },
    /// Permutation labels of an element down to a given depth.
    Portrait {
        #[arg(short = 'g', long, allow_hyphen_values = true)]
        g: String,
        #[arg(long, default_value_t = 1)]
        depth: usize,
    },
    /// Random check of the restriction product and composition rules.
    CheckWreath {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
    },
    /// Search for elements of a subgroup moved out of it by the endomorphism,
    /// and for conjugates leaving it.
    Invariance {
        /// congruence:K, torus:K or center.
        #[arg(long, default_value = "congruence:2")]
        subgroup: String,
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// Distance between two lattice classes given by integer bases (columns).
    BuildingDistance {
        #[arg(long, allow_hyphen_values = true)]
        from: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        /// Confirm by breadth-first search up to this radius.
        #[arg(long)]
        bfs: Option<usize>,
    },
    /// Distance from the standard vertex to its images under powers of the
    /// diagonal conjugator.
    Displacement {
        #[arg(long, default_value_t = 8)]
        t_max: u32,
    },
    /// SVG of the apartment window and the segment from x to s^N.x.
    ApartmentSvg {
        #[arg(long, default_value_t = 6)]
        radius: u32,
        /// N, the power of the conjugator.
        #[arg(long, default_value_t = 3)]
        steps: u32,
        /// Barycentric coordinates of x in the base alcove.
        #[arg(long, default_value = "7/10,1/5,1/10")]
        bary: String,
    },
    /// Division test, anisotropy search and norm checks for a quaternion algebra.
    QuatCheck {
        #[arg(short = 'a', long, allow_hyphen_values = true)]
        a: Option<i64>,
        #[arg(short = 'b', long, allow_hyphen_values = true)]
        b: Option<i64>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Building displacement next to quaternion level displacement, t = 0..t_max.
    DichotomyReport {
        #[arg(long, default_value_t = 8)]
        t_max: u32,
        /// Samples per conjugator and level.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Report on the quaternion side only.
        #[arg(long)]
        anisotropic_only: bool,
        #[arg(short = 'a', long, allow_hyphen_values = true)]
        a: Option<i64>,
        #[arg(short = 'b', long, allow_hyphen_values = true)]
        b: Option<i64>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Check(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Parse => 2,
                ErrorKind::Precondition => 3,
                ErrorKind::Precision => 4,
                ErrorKind::Budget => 5,
                ErrorKind::Internal => 1,
            },
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn dispatch(cfg: &Global, command: &Command) -> CliResult<String> {
    use commands::*;
    match command {
        Command::Transversal { m } => transversal(cfg, *m),
        Command::Act { g, word } => act(cfg, g, word),
        Command::Portrait { g, depth } => portrait(cfg, g, *depth),
        Command::CheckWreath { samples, max_len } => check_wreath(cfg, *samples, *max_len),
        Command::Invariance { subgroup, samples } => invariance(cfg, subgroup, *samples),
        Command::BuildingDistance { from, to, bfs } => building_distance(cfg, from.as_deref(), to, *bfs),
        Command::Displacement { t_max } => displacement(cfg, *t_max),
        Command::ApartmentSvg { radius, steps, bary } => apartment_svg(cfg, *radius, *steps, bary),
        Command::QuatCheck { a, b, samples } => quat_check(cfg, *a, *b, *samples),
        Command::DichotomyReport {
            t_max,
            samples,
            anisotropic_only,
            a,
            b,
        } => dichotomy_report(cfg, *t_max, *samples, *anisotropic_only, *a, *b),
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.config.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build()?;
    let out = pool.install(|| dispatch(&cli.config, &cli.command))?;
    match &cli.config.output {
        Some(path) => std::fs::write(path, out)?,
        None => std::io::stdout().lock().write_all(out.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
