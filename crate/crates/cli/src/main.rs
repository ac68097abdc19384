use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use lmcompress::bench::run_bench;
use lmcompress::pipeline::{DecompressOptions, PredictorSource};
use lmcompress::protocol::{Duplex, Endpoint, FixtureServer};
use lmcompress::{compress, decompress, CompressOptions, MediaKind, PredictorSpec};

const ALPHABET: usize = 256;

#[derive(Parser)]
#[command(name = "lmcompress", version, about = "Lossless compression with next-symbol predictors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a file into an archive
    Compress {
        input: PathBuf,
        /// Output path [default: INPUT.lmcz]
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// text, image, audio or video [default: detect from magic bytes]
        #[arg(long)]
        media: Option<MediaKind>,
        /// Chunk size in symbols [default: 1024 image/video, 2048 audio/text]
        #[arg(long)]
        chunk_size: Option<usize>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Restore the original file from an archive
    Decompress {
        archive: PathBuf,
        /// Output path [default: ARCHIVE without .lmcz, or ARCHIVE.out]
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Predictor server, for archives written with one
        #[arg(long)]
        server: Option<Endpoint>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Fully decode an archive and check it without writing anything
    Verify {
        archive: PathBuf,
        #[arg(long)]
        server: Option<Endpoint>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Compress and round-trip every file of a corpus with each predictor
    Bench {
        corpus: PathBuf,
        /// Predictors to compare; repeatable [default: uniform, order0, order2]
        #[arg(long = "predictor")]
        predictors: Vec<String>,
        /// Also benchmark a predictor server; repeatable
        #[arg(long = "server")]
        servers: Vec<Endpoint>,
        /// Write JSON-lines records here
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        chunk_size: Option<usize>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Show the built-in predictors
    ListPredictors,
    /// Run the reference predictor server over TCP or stdio
    ServeFixture {
        /// Address to listen on
        #[arg(long, default_value = "127.0.0.1:7878", conflicts_with = "stdio")]
        listen: String,
        /// Serve a single session on stdin/stdout
        #[arg(long)]
        stdio: bool,
        /// Model served when HELLO requests none
        #[arg(long, default_value = "uniform")]
        predictor: String,
        /// Version tag to report instead of the derived one
        #[arg(long)]
        version_tag: Option<String>,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Built-in predictor, or the model to request from --server
    #[arg(long)]
    predictor: Option<String>,
    /// Predictor server: host:port, tcp://host:port or "stdio:CMD ARGS"
    #[arg(long)]
    server: Option<Endpoint>,
    /// Worker threads and server connections [default: one per CPU]
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl ModelArgs {
    fn source(&self) -> Result<PredictorSource> {
        Ok(match &self.server {
            Some(endpoint) => PredictorSource::Server {
                endpoint: endpoint.clone(),
                model: self.predictor.clone().unwrap_or_default(),
            },
            None => {
                let name = self.predictor.as_deref().unwrap_or("order2");
                PredictorSource::Builtin(PredictorSpec::parse_lenient(name, ALPHABET)?)
            }
        })
    }
}

fn default_output(archive: &Path) -> PathBuf {
    match archive.extension() {
        Some(ext) if ext == "lmcz" => archive.with_extension(""),
        _ => {
            let mut p = archive.as_os_str().to_owned();
            p.push(".out");
            PathBuf::from(p)
        }
    }
}

fn fmt_ratio(r: Option<f64>) -> String {
    r.map_or_else(|| "n/a".into(), |r| format!("{r:.4}"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compress {
            input,
            output,
            media,
            chunk_size,
            model,
        } => {
            let data = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let opts = CompressOptions {
                media,
                predictor: model.source()?,
                chunk_size,
                jobs: model.jobs,
            };
            let (archive, stats) = compress(&data, &opts)?;
            let output = output.unwrap_or_else(|| {
                let mut p = input.as_os_str().to_owned();
                p.push(".lmcz");
                PathBuf::from(p)
            });
            fs::write(&output, &archive).with_context(|| format!("writing {}", output.display()))?;
            println!(
                "{}: {} {} -> {} bytes, ratio {}, {} bits/symbol, {} chunks ({} stored), {}",
                input.display(),
                stats.media,
                stats.original_bytes,
                stats.compressed_bytes,
                fmt_ratio(stats.ratio()),
                stats.bits_per_symbol().map_or_else(|| "n/a".into(), |b| format!("{b:.3}")),
                stats.chunks,
                stats.stored_chunks,
                stats.predictor
            );
        }
        Command::Decompress {
            archive,
            output,
            server,
            jobs,
        } => {
            let bytes = fs::read(&archive).with_context(|| format!("reading {}", archive.display()))?;
            let output = output.unwrap_or_else(|| default_output(&archive));
            // Decoding finishes in memory before anything is written; a
            // failed write still must not leave a partial file behind.
            let original = decompress(&bytes, &DecompressOptions { server, jobs })?;
            if let Err(e) = fs::write(&output, &original) {
                let _ = fs::remove_file(&output);
                return Err(e).with_context(|| format!("writing {}", output.display()));
            }
            println!("{}: {} bytes", output.display(), original.len());
        }
        Command::Verify { archive, server, jobs } => {
            let bytes = fs::read(&archive).with_context(|| format!("reading {}", archive.display()))?;
            let original = decompress(&bytes, &DecompressOptions { server, jobs })?;
            println!("{}: ok, {} bytes", archive.display(), original.len());
        }
        Command::Bench {
            corpus,
            predictors,
            servers,
            report,
            chunk_size,
            jobs,
        } => {
            let names = if predictors.is_empty() && servers.is_empty() {
                vec!["uniform".to_string(), "order0".into(), "order2".into()]
            } else {
                predictors
            };
            let mut sources = Vec::new();
            for name in &names {
                sources.push(PredictorSource::Builtin(PredictorSpec::parse_lenient(name, ALPHABET)?));
            }
            for endpoint in servers {
                sources.push(PredictorSource::Server {
                    endpoint,
                    model: String::new(),
                });
            }
            let opts = CompressOptions {
                chunk_size,
                jobs,
                ..CompressOptions::default()
            };
            let result = run_bench(&corpus, &sources, &opts)
                .with_context(|| format!("reading corpus {}", corpus.display()))?;
            print!("{}", result.to_table());
            if let Some(path) = report {
                fs::write(&path, result.to_json_lines())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::ListPredictors => {
            let rows = [
                ("uniform", PredictorSpec::uniform(ALPHABET).to_string(), "every symbol equally likely"),
                ("order0", PredictorSpec::order0(ALPHABET).to_string(), "adaptive symbol counts, add-one smoothing"),
                (
                    "orderN",
                    PredictorSpec::order_k(2, ALPHABET).to_string(),
                    "interpolated contexts of up to N symbols, N <= 8",
                ),
                ("--server", "external:S=256:<tag>".to_string(), "any predictor protocol server"),
            ];
            for (name, spec, what) in rows {
                println!("{name:<10}  {spec:<22}  {what}");
            }
        }
        Command::ServeFixture {
            listen,
            stdio,
            predictor,
            version_tag,
        } => {
            let mut server = FixtureServer::new(PredictorSpec::parse_lenient(&predictor, ALPHABET)?);
            if let Some(tag) = version_tag {
                server = server.with_version_tag(tag);
            }
            if stdio {
                let stream = Duplex {
                    reader: io::stdin().lock(),
                    writer: io::stdout().lock(),
                };
                server.serve(stream)?;
            } else {
                let listener = std::net::TcpListener::bind(&listen)?;
                eprintln!("listening on {}", listener.local_addr()?);
                server.accept_loop(listener);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
