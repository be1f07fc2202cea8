//! The `fsg` command line.
//!
//! Exit codes: 0 success, 1 domain error (bad image, failed parse, missing
//! file), 2 usage error. Reports go to standard output unless `-o` names a
//! file; inputs are never modified.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use fsg_core::allocsim;
use fsg_core::genome::{file_universe, FileUniverse, UniverseMode};
use fsg_core::matcher::{self, IdentifyDecision, VerifyDecision};
use fsg_core::metrics;

use crate::enroll;
use crate::fsgfile;
use crate::report;
use crate::simconfig::SimConfigFile;

/// Outcome of one CLI invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommandOutcome {
    pub exit_code: i32,
}

#[derive(Parser)]
#[command(
    name = "fsg",
    version,
    about = "Extract, analyze, match, and simulate file-system genomes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the genome of a raw ext4 image
    Extract {
        /// Raw ext4 image file (filesystem byte 0 first; no partition table)
        image: PathBuf,
        /// Keep only each file's first block
        #[arg(long)]
        first_block: bool,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Convert a debugfs-style block dump (TSV) into a genome file
    Ingest {
        /// TSV source: path<TAB>comma-separated block numbers
        tsv: PathBuf,
        /// Device label recorded in the genome
        #[arg(long)]
        label: String,
        /// Block size in bytes recorded in the genome
        #[arg(long)]
        block_size: u32,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Analyze a corpus directory of genome files
    Analyze(AnalyzeArgs),
    /// Identify a candidate genome against an enrolled set
    Match {
        #[arg(long, value_name = "FSG")]
        candidate: PathBuf,
        /// Directory holding fingerprints and manifest.json
        #[arg(long, value_name = "DIR")]
        enrolled: PathBuf,
        /// Decision threshold; defaults to the manifest's
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Verify ownership against a reference genome over read-only files
    Verify {
        #[arg(long, value_name = "FSG")]
        candidate: PathBuf,
        #[arg(long, value_name = "FSG")]
        reference: PathBuf,
        /// File listing the read-only universe, one path per line
        #[arg(long, value_name = "LIST")]
        readonly: PathBuf,
        #[arg(long, default_value_t = matcher::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Generate a corpus of simulated installations
    Simulate {
        /// Simulator configuration (JSON)
        #[arg(long, value_name = "JSON")]
        config: PathBuf,
        /// Number of installations
        #[arg(long)]
        count: usize,
        /// Base seed; installation i uses a seed mixed from it
        #[arg(long)]
        seed: u64,
        /// Directory for install-N.fsg files
        #[arg(short, long, value_name = "DIR")]
        output: PathBuf,
    },
    /// Emit genome scatter data (file index, first block, top directory)
    Scatter {
        fsg: PathBuf,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Directory of *.fsg files forming the corpus
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    metric: Metric,
    #[arg(long, value_enum, default_value_t = UniverseArg::Intersection)]
    universe: UniverseArg,
    /// Project every genome to its first blocks before analysis
    #[arg(long)]
    first_block: bool,
    #[arg(short, long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    /// Per-file Shannon entropy and min-entropy (CSV)
    Entropy,
    /// Same CSV as entropy; both columns always computed
    MinEntropy,
    /// Per-file location CDFs
    Cdf,
    /// Block-count histogram of the first installation
    Histogram,
    /// Genome size summary per installation
    Summary,
    /// Pairwise Hamming distances
    Hamming,
}

#[derive(Clone, Copy, ValueEnum)]
enum UniverseArg {
    Intersection,
    Union,
}

impl From<UniverseArg> for UniverseMode {
    fn from(u: UniverseArg) -> Self {
        match u {
            UniverseArg::Intersection => UniverseMode::Intersection,
            UniverseArg::Union => UniverseMode::Union,
        }
    }
}

/// Parses and runs one invocation. Diagnostics go to stderr.
pub fn run<I, T>(argv: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are successful outputs, not usage errors
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return CommandOutcome { exit_code: code };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => CommandOutcome { exit_code: 0 },
        Err(e) => {
            eprintln!("fsg: {e:#}");
            CommandOutcome { exit_code: 1 }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Extract {
            image,
            first_block,
            output,
        } => {
            let bytes = std::fs::read(&image)
                .with_context(|| format!("cannot read image {}", image.display()))?;
            let img = fsg_core::ext4::open_image(&bytes)?;
            let mut fsg = img.extract_fsg(first_block)?;
            fsg.device_label = image
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            write_genome(&fsg, output.as_deref())
        }
        Command::Ingest {
            tsv,
            label,
            block_size,
            output,
        } => {
            let source = std::fs::File::open(&tsv)
                .with_context(|| format!("cannot read dump {}", tsv.display()))?;
            let fsg = fsgfile::ingest_debugfs_dump(source, &label, block_size)?;
            write_genome(&fsg, output.as_deref())
        }
        Command::Analyze(args) => analyze(args),
        Command::Match {
            candidate,
            enrolled,
            threshold,
        } => {
            let candidate = fsgfile::read_fsg_file(&candidate)?;
            let (set, manifest_threshold) = enroll::load_enrolled_set(&enrolled)?;
            let threshold = threshold.unwrap_or(manifest_threshold);
            let decision = matcher::identify(&candidate, &set, threshold)?;
            println!("decision,label,similarity,raw_distance,slots,tied");
            match decision {
                IdentifyDecision::Matched { label, score, tied } => println!(
                    "matched,{},{},{},{},{}",
                    label, score.similarity, score.raw_distance, score.slots, tied
                ),
                IdentifyDecision::Unmatched { best_score } => println!(
                    "unmatched,,{},{},{},false",
                    best_score.similarity, best_score.raw_distance, best_score.slots
                ),
            }
            Ok(())
        }
        Command::Verify {
            candidate,
            reference,
            readonly,
            threshold,
        } => {
            let candidate = fsgfile::read_fsg_file(&candidate)?;
            let reference = fsgfile::read_fsg_file(&reference)?;
            let paths: Vec<String> = std::fs::read_to_string(&readonly)
                .with_context(|| format!("cannot read list {}", readonly.display()))?
                .lines()
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect();
            let universe = FileUniverse::from_paths(paths, UniverseMode::Intersection);
            let decision = matcher::verify_ownership(&candidate, &reference, &universe, threshold)?;
            println!("decision,similarity,raw_distance,slots");
            let (verdict, score) = match decision {
                VerifyDecision::Accept(s) => ("accept", s),
                VerifyDecision::Reject(s) => ("reject", s),
            };
            println!(
                "{},{},{},{}",
                verdict, score.similarity, score.raw_distance, score.slots
            );
            Ok(())
        }
        Command::Simulate {
            config,
            count,
            seed,
            output,
        } => {
            let cfg = SimConfigFile::load(&config)
                .with_context(|| format!("cannot load config {}", config.display()))?;
            let corpus = allocsim::simulate_corpus(&cfg, count, seed)?;
            std::fs::create_dir_all(&output)?;
            for (i, fsg) in corpus.installations().iter().enumerate() {
                fsgfile::write_fsg_file(fsg, &output.join(format!("install-{i}.fsg")))?;
            }
            Ok(())
        }
        Command::Scatter { fsg, output } => {
            let genome = fsgfile::read_fsg_file(&fsg)?;
            let rows = report::render_genome_scatter(&genome);
            write_output(&report::scatter_csv(&rows), output.as_deref())
        }
    }
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let corpus = fsgfile::read_corpus_dir(&args.corpus)
        .with_context(|| format!("cannot load corpus {}", args.corpus.display()))?;
    let corpus = if args.first_block {
        let projected: Vec<_> = corpus
            .installations()
            .iter()
            .map(|f| f.project_first_block())
            .collect();
        fsg_core::Corpus::new(corpus.label.clone(), projected)?
    } else {
        corpus
    };
    let universe = file_universe(&corpus, args.universe.into());

    let text = match args.metric {
        Metric::Entropy | Metric::MinEntropy => {
            let matrix = metrics::build_occurrence_matrix(&corpus, &universe, args.first_block)?;
            report::entropy_csv(&metrics::entropy_report(&matrix))
        }
        Metric::Cdf => {
            let matrix = metrics::build_occurrence_matrix(&corpus, &universe, args.first_block)?;
            report::cdf_csv(&matrix, &universe)?
        }
        Metric::Histogram => {
            if args.first_block {
                bail!("histogram requires full block lists, not --first-block");
            }
            report::histogram_csv(&metrics::block_count_histogram(&corpus.installations()[0]))
        }
        Metric::Summary => {
            if args.first_block {
                bail!("summary requires full block lists, not --first-block");
            }
            let rows: Vec<_> = corpus
                .installations()
                .iter()
                .map(|f| (f.device_label.clone(), metrics::corpus_summary(f)))
                .collect();
            report::summary_csv(&rows)
        }
        Metric::Hamming => report::hamming_csv(&corpus, &universe)?,
    };
    write_output(&text, args.output.as_deref())
}

fn write_genome(fsg: &fsg_core::Fsg, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => {
            fsgfile::write_fsg_file(fsg, path)
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
        None => {
            let mut buf = Vec::new();
            fsgfile::write_fsg(fsg, &mut buf)?;
            let mut stdout = std::io::stdout().lock();
            std::io::Write::write_all(&mut stdout, &buf)?;
        }
    }
    Ok(())
}

fn write_output(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
