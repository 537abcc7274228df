use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use coocsketch::evaluate::Penalty;
use coocsketch::pipeline::{self, EvaluateOptions, PipelineConfig};
use coocsketch::{Error, QuerySpec, Result};

/// Token co-occurrence sketches over textified tables.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Pipeline settings; each flag overrides the same key of the config file.
#[derive(Args)]
struct Common {
    /// `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Input table (CSV with header).
    #[arg(long, global = true)]
    table: Option<String>,
    /// Column spec JSON.
    #[arg(long = "spec", global = true)]
    column_spec: Option<String>,
    /// Corpus file [default: <out>/corpus.txt].
    #[arg(long, global = true)]
    corpus: Option<String>,
    /// Sketch rows h [default: 5].
    #[arg(long, global = true)]
    depth: Option<String>,
    /// Sketch width d [default: 1048576].
    #[arg(long, global = true)]
    width: Option<String>,
    /// Drop cells below this fraction of the nonzero median [default: 0].
    #[arg(long, global = true)]
    threshold: Option<String>,
    /// Shadow filter false-positive rate [default: 0.01].
    #[arg(long, global = true)]
    fpr: Option<String>,
    /// Build workers [default: 1].
    #[arg(long, global = true)]
    threads: Option<String>,
    /// Neighbors per column [default: 10].
    #[arg(long, global = true)]
    top_k: Option<String>,
    /// Comma-separated columns of interest (at most 5).
    #[arg(long, global = true)]
    columns: Option<String>,
    /// Output directory [default: out].
    #[arg(long = "out", global = true)]
    out_dir: Option<String>,
    /// Hash seed set [default: 0].
    #[arg(long, global = true)]
    seed_set: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<PipelineConfig> {
        let pairs = [
            ("table", &self.table),
            ("column_spec", &self.column_spec),
            ("corpus", &self.corpus),
            ("depth", &self.depth),
            ("width", &self.width),
            ("threshold", &self.threshold),
            ("fpr", &self.fpr),
            ("threads", &self.threads),
            ("top_k", &self.top_k),
            ("columns", &self.columns),
            ("out_dir", &self.out_dir),
            ("seed_set", &self.seed_set),
        ];
        let overrides: Vec<(&str, String)> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect();
        PipelineConfig::resolve(self.config.as_deref(), &overrides)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyArg {
    None,
    Displacement,
}

#[derive(Subcommand)]
enum Command {
    /// Turn the table into a token corpus.
    Textify,
    /// Build sketch, shadow filter, stats and dictionary from the corpus.
    Build,
    /// Rank co-occurring values for the tokens of a query result.
    Interpret {
        /// Input token of the query.
        #[arg(long)]
        ip: String,
        /// Comma-separated output tokens.
        #[arg(long, default_value = "")]
        op: String,
        #[arg(long, default_value = "q1")]
        query_id: String,
        /// Write the report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Column scores, numeric clusters and impact ranking.
    Stats,
    /// Maximum and median co-occurrence of a token with a column.
    Aggregate {
        #[arg(long)]
        token: String,
        #[arg(long)]
        column: String,
    },
    /// Export the sketch as a `hash_row,position,count` table.
    ExportTable {
        #[arg(long)]
        output: PathBuf,
    },
    /// Accuracy sweep of sketch rankings against exact counts.
    Evaluate {
        /// File of `token,column` lines.
        #[arg(long)]
        queries: PathBuf,
        /// Comma-separated widths [default: the configured width].
        #[arg(long, value_delimiter = ',')]
        widths: Vec<usize>,
        #[arg(long, default_value = "corpus")]
        dataset: String,
        #[arg(long, value_enum, default_value = "displacement")]
        penalty: PenaltyArg,
    },
    /// Time the build for several thread counts.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        thread_list: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.common.resolve()?;
    match cli.command {
        Command::Textify => print_json(&pipeline::cmd_textify(&config)?),
        Command::Build => print_json(&pipeline::cmd_build(&config)?),
        Command::Interpret {
            ip,
            op,
            query_id,
            output,
        } => {
            let query = QuerySpec {
                id: query_id,
                ip,
                op: op
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(String::from)
                    .collect(),
            };
            let json = pipeline::cmd_interpret(&config, &query)?.to_json_pretty()?;
            match output {
                Some(path) => {
                    std::fs::write(&path, json + "\n").map_err(|e| Error::File { path, source: e })
                }
                None => Ok(writeln!(std::io::stdout().lock(), "{json}")?),
            }
        }
        Command::Stats => print_json(&pipeline::cmd_stats(&config)?),
        Command::Aggregate { token, column } => {
            print_json(&pipeline::cmd_aggregate(&config, &token, &column)?)
        }
        Command::ExportTable { output } => {
            let rows = pipeline::cmd_export_table(&config, &output)?;
            Ok(writeln!(
                std::io::stdout().lock(),
                "{rows} rows written to {}",
                output.display()
            )?)
        }
        Command::Evaluate {
            queries,
            widths,
            dataset,
            penalty,
        } => {
            let options = EvaluateOptions {
                queries,
                widths,
                dataset,
                penalty: match penalty {
                    PenaltyArg::None => Penalty::None,
                    PenaltyArg::Displacement => Penalty::ReciprocalDisplacement,
                },
            };
            print_json(&pipeline::cmd_evaluate(&config, &options)?)
        }
        Command::Bench {
            thread_list,
            repeats,
        } => print_json(&pipeline::cmd_bench(&config, &thread_list, repeats)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_code())
        }
    }
}
