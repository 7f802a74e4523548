//! Command-line interface.

use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use histoblend_core::curriculum::split_cases;

use crate::config::Project;
use crate::formats::{read_cases, write_cases, SummaryFile};
use crate::runner::{
    parse_seed_range, run_blend, run_curriculum_analyze, run_curriculum_build, run_curriculum_score, run_fid,
    run_fig3, run_screen, FidSource,
};
use crate::slides::{read_slide_manifest, tile_slides, SlideEntry};
use crate::{model_server, service};

#[derive(Debug, Parser)]
#[command(name = "histoblend", version, about = "Synthetic-histology explainability workbench")]
pub struct Cli {
    /// Project configuration (JSON). Defaults to the built-in toy project.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tile slides at the classifier's field of view and QC every tile.
    Tile(TileArgs),
    /// Screen a seed range for class concordance.
    Screen(ScreenArgs),
    /// Render a latent blend trace for one seed.
    Blend(BlendArgs),
    /// Render the six layer-blend panels for one seed.
    Fig3(SeedArgs),
    /// Frechet distance between two feature sets or image folders.
    Fid(FidArgs),
    /// Build, score and analyze the reader test.
    #[command(subcommand)]
    Curriculum(CurriculumCommand),
    /// Serve the studio HTTP API.
    Serve(ServeArgs),
    /// Serve the configured model backend over the wire protocol.
    ModelServer(ServeArgs),
}

#[derive(Debug, Args)]
pub struct TileArgs {
    /// Slide manifest CSV (`slide_id,path,mpp,roi`).
    #[arg(long, conflicts_with_all = ["slide", "mpp", "roi", "slide_id"])]
    pub manifest: Option<PathBuf>,
    /// Single slide PNG.
    #[arg(long, requires = "mpp")]
    pub slide: Option<PathBuf>,
    #[arg(long)]
    pub mpp: Option<f64>,
    /// ROI polygons (JSON).
    #[arg(long)]
    pub roi: Option<PathBuf>,
    #[arg(long)]
    pub slide_id: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScreenArgs {
    /// `a..b` (half-open) or `a..=b`.
    #[arg(long)]
    pub seed_range: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Continue an interrupted screen in `--out`.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct BlendArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 11)]
    pub steps: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FidArgs {
    #[arg(long, requires = "features_b", conflicts_with_all = ["images_a", "images_b"])]
    pub features_a: Option<PathBuf>,
    #[arg(long, requires = "features_a")]
    pub features_b: Option<PathBuf>,
    #[arg(long, requires = "images_b")]
    pub images_a: Option<PathBuf>,
    #[arg(long, requires = "images_a")]
    pub images_b: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CurriculumCommand {
    /// Draw the reader test from per-case tile predictions.
    Build {
        #[arg(long)]
        cases: PathBuf,
        #[arg(long)]
        rng_seed: u64,
        /// Directory of `<tile_id>.png` files for the trio images.
        #[arg(long)]
        tiles: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split cases into two label-balanced halves.
    Split {
        #[arg(long)]
        cases: PathBuf,
        #[arg(long)]
        rng_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score an answers CSV against a test manifest.
    Score {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        answers: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Paired pre/post comparison.
    Analyze {
        #[arg(long)]
        pre: PathBuf,
        #[arg(long)]
        post: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Static files served under `/` (the studio UI build).
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
}

fn load_project(config: Option<&Path>) -> anyhow::Result<Project> {
    Ok(match config {
        Some(p) => Project::load(p)?,
        None => Project::toy()?,
    })
}

fn mkdir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let project = load_project(cli.config.as_deref())?;
    match cli.command {
        Command::Tile(a) => {
            let entries = match (&a.manifest, &a.slide) {
                (Some(m), _) => read_slide_manifest(m)?,
                (None, Some(s)) => vec![SlideEntry {
                    slide_id: a.slide_id.clone().unwrap_or_else(|| {
                        s.file_stem().map(|x| x.to_string_lossy().into_owned()).unwrap_or_else(|| "slide".into())
                    }),
                    path: s.clone(),
                    mpp: a.mpp.context("--mpp is required with --slide")?,
                    roi: a.roi.clone(),
                }],
                (None, None) => anyhow::bail!("give --manifest or --slide"),
            };
            let spec = project.bench().classifier_spec();
            let lines = tile_slides(&entries, spec, &project.config().qc, &a.out)?;
            let accepted = lines.iter().filter(|l| l.file.is_some()).count();
            println!("{accepted} of {} tiles accepted", lines.len());
        }
        Command::Screen(a) => {
            let seeds = parse_seed_range(&a.seed_range)?;
            let outcome = run_screen(&project, seeds, &a.out, a.resume, &|done, total| {
                log::info!("screened {done}/{total}");
            })?;
            println!("{}", outcome.summary.display_line());
            print_json(&SummaryFile::from(&outcome.summary))?;
        }
        Command::Blend(a) => {
            mkdir(&a.out)?;
            let (trace, _) = run_blend(&project, a.seed, a.steps, &a.out)?;
            for s in &trace.steps {
                println!("w={:.3} {:?}", s.w, s.pred);
            }
        }
        Command::Fig3(a) => {
            mkdir(&a.out)?;
            let (file, _) = run_fig3(&project, a.seed, &a.out)?;
            for c in &file.cells {
                println!("{} {:?}", c.label, c.pred);
            }
        }
        Command::Fid(a) => {
            let source = match (a.features_a, a.features_b, a.images_a, a.images_b) {
                (Some(a), Some(b), None, None) => FidSource::Features { a, b },
                (None, None, Some(a), Some(b)) => FidSource::Images { a, b },
                _ => anyhow::bail!("give --features-a/--features-b or --images-a/--images-b"),
            };
            print_json(&run_fid(&project, &source)?)?;
        }
        Command::Curriculum(c) => curriculum(c)?,
        Command::Serve(a) => {
            service::serve(project, SocketAddr::new(a.host, a.port), a.static_dir)?;
        }
        Command::ModelServer(a) => {
            let backend = Arc::clone(project.bench().backend());
            crate::server::serve_blocking(model_server::router(backend), SocketAddr::new(a.host, a.port))?;
        }
    }
    Ok(())
}

fn curriculum(c: CurriculumCommand) -> anyhow::Result<()> {
    match c {
        CurriculumCommand::Build { cases, rng_seed, tiles, out } => {
            mkdir(&out)?;
            let (manifest, _) = run_curriculum_build(&cases, rng_seed, tiles.as_deref(), &out)?;
            println!("{} items from {} cases", manifest.paper.items.len(), manifest.paper.cases.len());
        }
        CurriculumCommand::Split { cases, rng_seed, out } => {
            mkdir(&out)?;
            let (a, b) = split_cases(&read_cases(&cases)?, rng_seed)?;
            write_cases(&out.join("half_a.csv"), &a)?;
            write_cases(&out.join("half_b.csv"), &b)?;
            println!("{} + {} cases", a.len(), b.len());
        }
        CurriculumCommand::Score { manifest, answers, out } => {
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                mkdir(dir)?;
            }
            for s in run_curriculum_score(&manifest, &answers, &out)? {
                println!("{} {}/{}", s.respondent, s.overall.correct, s.overall.total);
            }
        }
        CurriculumCommand::Analyze { pre, post, out } => {
            mkdir(&out)?;
            print!("{}", run_curriculum_analyze(&pre, &post, &out)?.render_text());
        }
    }
    Ok(())
}

/// Parses `args`, runs, and maps the outcome to an exit code. Usage errors
/// exit 2, runtime errors 1.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
