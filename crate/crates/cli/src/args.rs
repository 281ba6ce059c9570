use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use elastoct_core::study::CategorySpec;
use elastoct_core::BorderPolicy;

#[derive(Debug, Parser)]
#[command(name = "elastoct", version, about = "Elastic deformation of grayscale scans and blinded grading studies")]
pub struct Cli {
    /// Output style for results on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deform one image.
    Deform(DeformArgs),
    /// Expand a directory of images with randomly deformed copies.
    Augment(AugmentArgs),
    /// Monte-Carlo fold-over check of random fields.
    FieldCheck(FieldCheckArgs),
    /// Build, serve and analyse blinded grading studies.
    Study(StudyArgs),
    /// Significance tests and sample size.
    Stats(StatsArgs),
}

/// `NxM` control grid dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridDims(pub usize, pub usize);

impl std::str::FromStr for GridDims {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (r, c) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("`{s}` is not NxM"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("`{s}` is not NxM"));
        let (r, c) = (parse(r)?, parse(c)?);
        if r < 2 || c < 2 {
            return Err(format!("grid `{s}` needs at least 2 nodes per axis"));
        }
        Ok(Self(r, c))
    }
}

impl std::fmt::Display for GridDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.0, self.1)
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("`{s}` must be finite and non-negative"))
    }
}

#[derive(Debug, Args)]
pub struct WarpOptions {
    /// Control grid size, rows x cols.
    #[arg(long, default_value = "3x3")]
    pub grid: GridDims,
    /// How samples outside the image are filled.
    #[arg(long, default_value_t = BorderPolicy::Clamp)]
    pub border: BorderPolicy,
}

#[derive(Debug, Args)]
pub struct DeformArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Standard deviation of the control displacements, in pixels.
    #[arg(long, value_parser = non_negative)]
    pub sigma: f64,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub warp: WarpOptions,
    /// Draw the displaced lattice with this spacing onto the output.
    #[arg(long, value_name = "SPACING", value_parser = clap::value_parser!(u64).range(2..))]
    pub overlay_grid: Option<u64>,
    /// Write the control grid and dense field as JSON.
    #[arg(long, value_name = "FILE")]
    pub dump_field: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub input_dir: PathBuf,
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long, value_parser = non_negative, default_value_t = 0.0)]
    pub sigma_min: f64,
    /// Upper sigma bound; 9 keeps deformations in the realistic range.
    #[arg(long, value_parser = non_negative, default_value_t = 9.0)]
    pub sigma_max: f64,
    /// Deformed copies per input image.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub copies: u64,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub warp: WarpOptions,
}

#[derive(Debug, Args)]
pub struct FieldCheckArgs {
    #[arg(long, default_value_t = 496)]
    pub width: usize,
    #[arg(long, default_value_t = 352)]
    pub height: usize,
    #[arg(long, value_parser = non_negative)]
    pub sigma: f64,
    #[arg(long, default_value = "3x3")]
    pub grid: GridDims,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[command(subcommand)]
    pub command: StudyCommand,
}

#[derive(Debug, Subcommand)]
pub enum StudyCommand {
    /// Build a blinded study from a pool of original images.
    Build(StudyBuildArgs),
    /// Serve studies to graders over HTTP.
    Serve(StudyServeArgs),
    /// Rate tables and significance tests from finished sessions.
    Analyze(StudyAnalyzeArgs),
    /// Show the ground truth of one item (admin only).
    Reveal(StudyRevealArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Design {
    /// LDA 1-6, MDA 7-12, HDA 13-18 (100 pairs each), CTRL 19-24 (20 pairs).
    Standard,
    /// S7-9 and S10-11, 100 pairs each.
    Refined,
}

#[derive(Debug, Args)]
pub struct StudyBuildArgs {
    /// Directory of original .png/.pgm images, consumed in file-name order.
    #[arg(long)]
    pub pool_dir: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, conflicts_with = "category")]
    pub design: Option<Design>,
    /// Custom category NAME:MIN:MAX:PAIRS; repeat for several.
    #[arg(long)]
    pub category: Vec<CategorySpec>,
    #[command(flatten)]
    pub warp: WarpOptions,
}

#[derive(Debug, Args)]
pub struct StudyServeArgs {
    /// Study directory; repeat to serve several.
    #[arg(long = "study", required = true)]
    pub studies: Vec<PathBuf>,
    #[arg(long)]
    pub sessions_dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Bearer token for the admin results endpoint.
    #[arg(long, env = "ELASTOCT_ADMIN_TOKEN", hide_env_values = true)]
    pub admin_token: Option<String>,
}

#[derive(Debug, Args)]
pub struct StudyAnalyzeArgs {
    #[arg(long)]
    pub study: PathBuf,
    #[arg(long)]
    pub sessions_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct StudyRevealArgs {
    #[arg(long)]
    pub study: PathBuf,
    #[arg(long)]
    pub item: String,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(subcommand)]
    pub command: StatsCommand,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Originals labelled original.
    pub a: u64,
    /// Originals labelled modified.
    pub b: u64,
    /// Modified labelled original.
    pub c: u64,
    /// Modified labelled modified.
    pub d: u64,
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Chi-square test of a 2x2 table (Yates-corrected by default).
    Chi2 {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long)]
        no_yates: bool,
    },
    /// Two-sided Fisher exact test of a 2x2 table.
    Fisher {
        #[command(flatten)]
        table: TableArgs,
    },
    /// Per-group sample size for a non-inferiority comparison.
    Samplesize {
        #[arg(long)]
        p_std: f64,
        #[arg(long)]
        p_test: f64,
        #[arg(long)]
        margin: f64,
        /// One-sided significance level.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0.8)]
        power: f64,
    },
    /// Recompute the published three-grader rate tables.
    Reference,
}
