use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relnas::harness::{
    random_search, resume_search, run_search, ConfigOverrides, EnumerationTable, RunConfig, RunOptions, Setup,
    DEFAULT_PERCENTILES,
};
use relnas::search_space::{decode, ArchVector, SearchSpaceScheme, DEFAULT_ENUMERATION_CAP};
use relnas::Error;

#[derive(Parser)]
#[command(name = "relnas", version, about = "Pairwise slow-fast architecture search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `section.key=value`, repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> relnas::Result<RunConfig> {
        RunConfig::load(
            self.config.as_deref(),
            &ConfigOverrides {
                seed: self.seed,
                out: self.out.clone(),
                assignments: self.overrides.clone(),
            },
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a search and write log, best genotype, DOT files, summary and checkpoints.
    Search {
        #[command(flatten)]
        common: Common,
        /// Stop after this many generations (a checkpoint is written).
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Continue a search from a checkpoint.
    Resume {
        /// Checkpoint file written by `search`.
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Score every genotype of a small space and write a ranked CSV.
    Enumerate {
        #[command(flatten)]
        common: Common,
        /// Largest space to enumerate.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u128,
    },
    /// Equal-budget random search baseline.
    RandomSearch {
        #[command(flatten)]
        common: Common,
        /// Number of samples; defaults to population * generations.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Decode an architecture vector into a genotype.
    Decode {
        #[command(flatten)]
        common: Common,
        /// Comma- or whitespace-separated genes.
        #[arg(long, conflicts_with = "file", required_unless_present = "file")]
        vector: Option<String>,
        /// File holding the genes, optionally as a JSON array.
        #[arg(long)]
        file: Option<PathBuf>,
        /// Also write normal.dot and reduction.dot to the output directory.
        #[arg(long)]
        dot: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn dispatch(command: Command) -> relnas::Result<()> {
    match command {
        Command::Search { common, stop_after } => {
            let config = common.load()?;
            let summary = run_search(&config, RunOptions { stop_after })?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Resume {
            checkpoint,
            common,
            stop_after,
        } => {
            let supplied = match &common.config {
                Some(_) => Some(common.load()?),
                None if common.seed.is_some() || !common.overrides.is_empty() => {
                    return Err(Error::Config("--seed and --override need --config when resuming".into()))
                }
                None => None,
            };
            let summary = resume_search(&checkpoint, supplied.as_ref(), common.out.as_deref(), RunOptions { stop_after })?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Enumerate { common, cap } => {
            let config = common.load()?;
            let setup = Setup::new(&config)?;
            let score = |g: &_| setup.surrogate_score(&config, g);
            let table = EnumerationTable::build(&setup.scheme, setup.frozen.as_ref(), cap, &score)?;
            create_dir(&config.out)?;
            let path = config.out.join("enumeration.csv");
            table.write_csv(&path)?;
            let (loss, genotype) = table.optimum();
            println!("genotypes: {}", table.len());
            println!("optimum: {loss} {}", genotype.to_json());
            for p in DEFAULT_PERCENTILES {
                println!("top {p}%: {}", table.threshold(p));
            }
            println!("table: {}", path.display());
        }
        Command::RandomSearch { common, budget } => {
            let config = common.load()?;
            let setup = Setup::new(&config)?;
            let budget = budget.unwrap_or(config.search.evaluation_budget());
            if budget == 0 {
                return Err(Error::Config("budget must be positive".into()));
            }
            let mut result = random_search(&*setup.evaluator, &setup.scheme, budget, &config.streams())?;
            result.best = setup.present(&result.best);
            create_dir(&config.out)?;
            let text = serde_json::to_string_pretty(&result)?;
            let path = config.out.join("random_search.json");
            std::fs::write(&path, format!("{text}\n")).map_err(|e| Error::io(&path, e))?;
            println!("{text}");
        }
        Command::Decode {
            common,
            vector,
            file,
            dot,
        } => {
            let (genes, lines) = match (&vector, &file) {
                (Some(v), _) => (parse_genes(v, "--vector")?, None),
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                    let (genes, lines) = parse_genes_with_lines(&text, &path.display().to_string())?;
                    (genes, Some((path.clone(), lines)))
                }
                (None, None) => unreachable!("clap requires one of them"),
            };
            let scheme = match &common.config {
                Some(_) => common.load()?.scheme(),
                None => infer_scheme(genes.len())?,
            };
            let arch = ArchVector::new(genes, &scheme).map_err(|e| match (&e, &lines) {
                (Error::InvalidGene { position, .. }, Some((path, lines))) => {
                    Error::Config(format!("{}:{}: {e}", path.display(), lines[*position]))
                }
                _ => e,
            })?;
            let genotype = decode(&arch, &scheme)?;
            println!("{}", genotype.to_json_pretty());
            if dot {
                let out = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
                create_dir(&out)?;
                for (name, cell) in [("normal.dot", &genotype.normal), ("reduction.dot", &genotype.reduction)] {
                    let path = out.join(name);
                    std::fs::write(&path, cell.to_dag().to_dot()).map_err(|e| Error::io(&path, e))?;
                }
            }
        }
    }
    Ok(())
}

fn create_dir(path: &Path) -> relnas::Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn infer_scheme(len: usize) -> relnas::Result<SearchSpaceScheme> {
    let per_block = 2 * SearchSpaceScheme::GENES_PER_BLOCK;
    if len == 0 || len % per_block != 0 {
        return Err(Error::Config(format!(
            "vector of {len} genes is not a whole number of blocks ({per_block} genes per block across both cells)"
        )));
    }
    SearchSpaceScheme::new(len / per_block)
}

fn parse_genes(text: &str, source: &str) -> relnas::Result<Vec<f64>> {
    parse_genes_with_lines(text, source).map(|(g, _)| g)
}

/// Genes and the 1-based line each came from.
fn parse_genes_with_lines(text: &str, source: &str) -> relnas::Result<(Vec<f64>, Vec<usize>)> {
    let mut genes = Vec::new();
    let mut lines = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let cleaned = line.replace(['[', ']'], " ");
        for token in cleaned.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let value = token
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{source}:{}: `{token}` is not a number", i + 1)))?;
            genes.push(value);
            lines.push(i + 1);
        }
    }
    Ok((genes, lines))
}
