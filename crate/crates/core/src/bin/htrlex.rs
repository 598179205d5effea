use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use htrlex_core::alphabet::Alphabet;
use htrlex_core::corpus::{self, FrequencyList};
use htrlex_core::decode::{DecoderKind, DEFAULT_BEAM_WIDTH};
use htrlex_core::emissions::NoiseParams;
use htrlex_core::harness::{
    self, build_dataset, evaluate_predictions, load_manifest, load_predictions, make_boxes,
    predictions_to_jsonl, render_table, run_decode, select_boxes_jsonl, write_text, DatasetSpec,
    ExperimentConfig, HarnessError, RunReport, FLAG_EMPTY_RANGE, FLAG_FALLBACK, MANIFEST_FILE,
};
use htrlex_core::layout::{DEFAULT_ROW_TOLERANCE, DEFAULT_STRIP_HEIGHT};
use htrlex_core::lexicon::{boxes_to_jsonl, load_boxes, load_lexicon, read_word_list};

#[derive(Parser)]
#[command(
    name = "htrlex",
    version,
    about = "Lexicon-constrained CTC decoding experiments"
)]
struct Cli {
    /// Alphabet file (blank marker `-` on the first line); Polish by default.
    #[arg(long, global = true)]
    alphabet: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorpusMode {
    Natural,
    Diacritics,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a word list from a frequency list, or random diacritic strings.
    GenCorpus {
        #[arg(long, value_enum)]
        mode: CorpusMode,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        freq_list: Option<PathBuf>,
        #[arg(long, default_value_t = corpus::DEFAULT_LENGTH_RANGE.0)]
        len_min: usize,
        #[arg(long, default_value_t = corpus::DEFAULT_LENGTH_RANGE.1)]
        len_max: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Partition a lexicon into alphabetical boxes.
    MakeBoxes {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthesize one emission matrix per word and write a card manifest.
    BuildDataset {
        #[arg(long)]
        words: PathBuf,
        #[arg(long)]
        boxes: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        noise: f64,
        #[arg(long, default_value_t = 3)]
        frames_per_char: usize,
        #[arg(long, default_value_t = 5.0)]
        confusion_boost: f64,
        #[arg(long, default_value_t = 0.0)]
        out_of_range_frac: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode every card of a manifest.
    Decode {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        decoder: DecoderKind,
        #[arg(long, default_value_t = DEFAULT_BEAM_WIDTH)]
        beam_width: usize,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        boxes: Option<PathBuf>,
        /// Case-fold predictions before writing them.
        #[arg(long)]
        fold: bool,
        #[arg(long)]
        fallback_on_empty_range: bool,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against the manifest's gold labels.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Case-fold gold labels and predictions before comparing.
        #[arg(long)]
        fold: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Combine evaluation reports into one table.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pick the index-word box of each card from detector output.
    SelectBox {
        #[arg(long)]
        boxes_jsonl: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STRIP_HEIGHT)]
        strip_height: f64,
        #[arg(long, default_value_t = DEFAULT_ROW_TOLERANCE)]
        row_tolerance: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let alphabet = Arc::new(match &cli.alphabet {
        Some(p) => Alphabet::load(p)?,
        None => Alphabet::polish(),
    });

    match cli.command {
        Command::GenCorpus {
            mode,
            n,
            freq_list,
            len_min,
            len_max,
            seed,
            out,
        } => {
            let words = match mode {
                CorpusMode::Natural => {
                    let path = freq_list.ok_or_else(|| {
                        HarnessError::Usage("--mode natural needs --freq-list".into())
                    })?;
                    let freq = FrequencyList::load(&path)?;
                    freq.check(&alphabet)?;
                    corpus::sample_words(&freq, n.unwrap_or(corpus::DEFAULT_NATURAL_WORDS), seed)?
                }
                CorpusMode::Diacritics => corpus::gen_alphabet_diacritic_strings(
                    &alphabet,
                    n.unwrap_or(corpus::DEFAULT_DIACRITIC_STRINGS),
                    (len_min, len_max),
                    seed,
                )?,
            };
            let mut text = words.join("\n");
            text.push('\n');
            write_text(&out, &text)
        }
        Command::MakeBoxes { lexicon, k, out } => {
            let lex = load_lexicon(&lexicon, alphabet)?;
            let boxes = make_boxes(&lex, k)?;
            write_text(&out, &boxes_to_jsonl(&boxes))
        }
        Command::BuildDataset {
            words,
            boxes,
            noise,
            frames_per_char,
            confusion_boost,
            out_of_range_frac,
            seed,
            out,
        } => {
            let words = read_word_list(&words)?;
            let boxes = load_boxes(&boxes)?;
            let spec = DatasetSpec {
                noise: NoiseParams {
                    epsilon: noise,
                    frames_per_char,
                    confusion_boost,
                    seed,
                },
                out_of_range_frac,
            };
            let cards = build_dataset(&words, &boxes, &alphabet, &spec, &out)?;
            eprintln!(
                "wrote {} cards to {}",
                cards.len(),
                out.join(MANIFEST_FILE).display()
            );
            Ok(())
        }
        Command::Decode {
            manifest,
            decoder,
            beam_width,
            lexicon,
            boxes,
            fold,
            fallback_on_empty_range,
            jobs,
            out,
        } => {
            let cards = load_manifest(&manifest)?;
            let lexicon = match lexicon {
                Some(p) => Some(load_lexicon(&p, Arc::clone(&alphabet))?),
                None => None,
            };
            let boxes = match boxes {
                Some(p) => Some(load_boxes(&p)?),
                None => None,
            };
            let config = ExperimentConfig {
                decoder,
                beam_width,
                fallback_on_empty_range,
                fold_case: fold,
                jobs,
            };
            let base = manifest.parent().unwrap_or(Path::new("."));
            let preds = run_decode(
                &cards,
                base,
                &config,
                &alphabet,
                lexicon.as_ref(),
                boxes.as_deref(),
            )?;
            write_text(&out, &predictions_to_jsonl(&preds))?;
            let unresolved: Vec<String> = preds
                .iter()
                .filter(|p| {
                    p.flags.iter().any(|f| f == FLAG_EMPTY_RANGE)
                        && !p.flags.iter().any(|f| f == FLAG_FALLBACK)
                })
                .map(|p| p.card_id.clone())
                .collect();
            if !unresolved.is_empty() {
                return Err(HarnessError::EmptyRanges(unresolved));
            }
            Ok(())
        }
        Command::Evaluate {
            pred,
            manifest,
            fold,
            out,
        } => {
            let preds = load_predictions(&pred)?;
            let cards = load_manifest(&manifest)?;
            let report = evaluate_predictions(&preds, &cards, &alphabet, fold)?;
            let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
            json.push('\n');
            write_text(&out, &json)
        }
        Command::Report {
            inputs,
            format,
            out,
        } => {
            let mut runs = Vec::with_capacity(inputs.len());
            for p in &inputs {
                let run: RunReport = serde_json::from_str(&read_to_string(p)?)
                    .map_err(|e| HarnessError::Data(format!("{}: {e}", p.display())))?;
                runs.push(run);
            }
            let text = match format {
                ReportFormat::Table => render_table(&runs),
                ReportFormat::Json => {
                    let mut s = serde_json::to_string_pretty(&runs).expect("reports serialize");
                    s.push('\n');
                    s
                }
            };
            match out {
                Some(p) => write_text(&p, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::SelectBox {
            boxes_jsonl,
            strip_height,
            row_tolerance,
            out,
        } => {
            let text = read_to_string(&boxes_jsonl)?;
            let selected = select_boxes_jsonl(&text, strip_height, row_tolerance)?;
            harness::write_text(&out, &selected)
        }
    }
}
