use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use dialex::datasets::{corpus_stats, load_dataset, whitespace_tokens};
use dialex::llm::{Client, HttpProvider, MockProvider, Provider, ResponseCache, DEFAULT_CONCURRENCY, DEFAULT_MODEL};
use dialex::parsing::AliasTable;
use dialex::report::reports_from_records;
use dialex::runner::{read_records, write_records, DEFAULT_TOKEN_BUDGET};
use dialex::{
    compare_runs, format_report, rescore, run_experiment, AnswerParser, DatasetDescriptor, DatasetName, Error,
    ErrorCase, ExperimentConfig, Layout, Result, Split, StrategyName, TableFormat, Triggers,
};

#[derive(Parser)]
#[command(name = "dialex", version, about = "Prompting-strategy evaluation for dialogue understanding tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one dataset x strategy x model experiment and write prediction records.
    Evaluate {
        #[arg(long)]
        dataset: DatasetName,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        strategy: StrategyName,
        #[arg(long)]
        shots: Option<usize>,
        #[arg(long, default_value = DEFAULT_MODEL)]
        model: String,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long, default_value = "train")]
        pool_split: Split,
        /// Scripted replies (JSON) instead of the HTTP provider.
        #[arg(long)]
        mock: Option<PathBuf>,
        /// TOML file overriding trigger sentences.
        #[arg(long)]
        triggers: Option<PathBuf>,
        /// TSV alias table replacing the built-in one.
        #[arg(long)]
        aliases: Option<PathBuf>,
        #[arg(long)]
        strict_keys: bool,
        #[arg(long, default_value_t = DEFAULT_CONCURRENCY)]
        concurrency: usize,
        #[arg(long, default_value_t = DEFAULT_TOKEN_BUDGET)]
        token_budget: usize,
    },
    /// Render result tables from record files.
    Report {
        #[arg(long, default_value = "main")]
        layout: Layout,
        #[arg(long = "in", num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "md")]
        format: TableFormat,
        #[arg(long)]
        triggers: Option<PathBuf>,
    },
    /// Re-parse stored responses with the current parser.
    Rescore {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        aliases: Option<PathBuf>,
        #[arg(long)]
        strict_keys: bool,
    },
    /// Corpus statistics for one split.
    Stats {
        #[arg(long)]
        dataset: DatasetName,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
    },
    /// Classify instances that exactly one of two runs answered correctly.
    Analyze {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn triggers(path: Option<&Path>) -> Result<Triggers> {
    path.map_or_else(|| Ok(Triggers::builtin()), Triggers::from_file)
}

fn parser(aliases: Option<&Path>, strict: bool) -> Result<AnswerParser> {
    let table = aliases.map_or_else(|| Ok(AliasTable::builtin()), AliasTable::from_file)?;
    Ok(AnswerParser::new(table).strict(strict))
}

fn evaluate<P: Provider>(config: &ExperimentConfig, provider: P, cache_dir: Option<&Path>) -> Result<ExitCode> {
    let mut client = Client::new(provider).with_concurrency(config.concurrency);
    if let Some(dir) = cache_dir {
        client = client.with_cache(ResponseCache::open(dir)?);
    }
    let output = run_experiment(config, &client)?;
    println!("{}", output.report);
    if output.skipped > 0 {
        eprintln!("{} source records skipped while loading", output.skipped);
    }
    if output.all_provider_failures() {
        eprintln!("every instance failed at the provider");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Evaluate {
            dataset,
            data_dir,
            strategy,
            shots,
            model,
            limit,
            seed,
            cache_dir,
            out,
            split,
            pool_split,
            mock,
            triggers: trigger_file,
            aliases,
            strict_keys,
            concurrency,
            token_budget,
        } => {
            let mut config = ExperimentConfig::new(dataset, data_dir, strategy);
            if let Some(k) = shots {
                config.shots = k;
            }
            config.model_id = model;
            config.limit = limit;
            config.seed = seed;
            config.cache_dir = cache_dir.clone();
            config.out = Some(out);
            config.split = split;
            config.pool_split = pool_split;
            config.triggers = triggers(trigger_file.as_deref())?;
            config.aliases = aliases;
            config.strict_keys = strict_keys;
            config.concurrency = concurrency;
            config.token_budget = token_budget;
            config.validate()?;
            match mock {
                Some(script) => evaluate(&config, MockProvider::from_file(&script)?, cache_dir.as_deref()),
                None => evaluate(&config, HttpProvider::from_env()?, cache_dir.as_deref()),
            }
        }
        Command::Report {
            layout,
            inputs,
            format,
            triggers: trigger_file,
        } => {
            let mut records = Vec::new();
            for path in &inputs {
                records.extend(read_records(path)?);
            }
            let reports = reports_from_records(&records, &triggers(trigger_file.as_deref())?)?;
            print!("{}", format_report(&reports, layout, format));
            Ok(ExitCode::SUCCESS)
        }
        Command::Rescore {
            input,
            out,
            aliases,
            strict_keys,
        } => {
            let records = read_records(&input)?;
            let rescored = rescore(&records, &parser(aliases.as_deref(), strict_keys)?)?;
            write_records(&out, &rescored)?;
            for report in reports_from_records(&rescored, &Triggers::builtin())? {
                println!("{report}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats { dataset, data_dir, split } => {
            let loaded = load_dataset(&DatasetDescriptor::new(dataset, split), &data_dir)?;
            let stats = corpus_stats(&loaded.dialogues, whitespace_tokens)?;
            println!("dataset: {}", dataset.title());
            println!("split: {}", split.as_str());
            println!("dialogues: {}", stats.dialogue_count);
            println!("skipped: {}", loaded.skip_count());
            println!("turns: {}", stats.total_turns);
            println!("tokens: {}", stats.total_tokens);
            println!("mean turns per dialogue: {:.1}", stats.mean_turns_per_dialogue);
            println!("mean tokens per dialogue: {:.1}", stats.mean_tokens_per_dialogue);
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze { baseline, candidate, out } => {
            #[derive(Serialize)]
            struct Line<'a> {
                won_by: &'a str,
                #[serde(flatten)]
                case: &'a ErrorCase,
            }
            let comparison = compare_runs(&read_records(&baseline)?, &read_records(&candidate)?)?;
            let mut body = String::new();
            let tagged = comparison
                .won_by_b
                .iter()
                .map(|c| ("candidate", c))
                .chain(comparison.won_by_a.iter().map(|c| ("baseline", c)));
            for (won_by, case) in tagged {
                body.push_str(&serde_json::to_string(&Line { won_by, case })?);
                body.push('\n');
            }
            std::fs::write(&out, body).map_err(|e| Error::io(&out, e))?;
            print!("{}", comparison.summary_markdown());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage_error = e.use_stderr();
            let _ = e.print();
            return if usage_error { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
