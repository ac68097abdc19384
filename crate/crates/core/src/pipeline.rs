//! End-to-end compression: media parsing, chunking, parallel model coding
//! and archive assembly, plus the inverse.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use crate::coder::{decode_stream, encode_stream};
use crate::container::{write_archive, Archive, Chunk};
use crate::error::{Error, Result};
use crate::media::{self, MediaKind, MediaPayload};
use crate::predictor::{begin_session, PredictorKind, PredictorSpec};
use crate::protocol::{connect, Endpoint, PredictorClient, Transport};

/// Every media type is coded as bytes.
pub const ALPHABET_SIZE: usize = 256;

/// Where predictions come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictorSource {
    Builtin(PredictorSpec),
    /// A protocol server; `model` is sent verbatim in HELLO.
    Server { endpoint: Endpoint, model: String },
}

#[derive(Debug, Clone)]
pub struct CompressOptions {
    /// `None` auto-detects from magic bytes, falling back to text.
    pub media: Option<MediaKind>,
    pub predictor: PredictorSource,
    /// `None` uses the media default.
    pub chunk_size: Option<usize>,
    /// Worker threads (and server connections); 0 means one per CPU.
    pub jobs: usize,
}

impl Default for CompressOptions {
    fn default() -> Self {
        Self {
            media: None,
            predictor: PredictorSource::Builtin(PredictorSpec::order_k(2, ALPHABET_SIZE)),
            chunk_size: None,
            jobs: 0,
        }
    }
}

impl CompressOptions {
    pub fn with_predictor(spec: PredictorSpec) -> Self {
        Self {
            predictor: PredictorSource::Builtin(spec),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct DecompressOptions {
    /// Required for archives written through a predictor server.
    pub server: Option<Endpoint>,
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressStats {
    pub media: MediaKind,
    pub predictor: PredictorSpec,
    pub original_bytes: u64,
    pub compressed_bytes: u64,
    pub symbols: u64,
    pub chunks: usize,
    pub stored_chunks: usize,
}

impl CompressStats {
    /// Original over compressed size; `None` for an empty input.
    pub fn ratio(&self) -> Option<f64> {
        (self.original_bytes > 0).then(|| self.original_bytes as f64 / self.compressed_bytes as f64)
    }

    /// Archive bits per coded symbol; `None` when nothing was coded.
    pub fn bits_per_symbol(&self) -> Option<f64> {
        (self.symbols > 0).then(|| self.compressed_bytes as f64 * 8.0 / self.symbols as f64)
    }
}

/// Parses `input` as the requested media. Auto-detection falls back to text
/// when a file has the right magic but does not parse; an explicit media
/// type does not.
pub fn prepare(input: &[u8], media: Option<MediaKind>) -> Result<MediaPayload> {
    match media {
        Some(kind) => media::parse_media(input, kind),
        None => match media::detect(input) {
            MediaKind::Text => Ok(media::text_to_sequence(input)),
            kind => media::parse_media(input, kind).or_else(|_| Ok(media::text_to_sequence(input))),
        },
    }
}

pub fn compress(input: &[u8], opts: &CompressOptions) -> Result<(Vec<u8>, CompressStats)> {
    let payload = prepare(input, opts.media)?;
    let chunk_size = opts.chunk_size.unwrap_or_else(|| payload.media().default_chunk_size());
    if chunk_size == 0 {
        return Err(Error::InvalidSpec("chunk size must be positive".into()));
    }
    let plan = payload.chunk_plan(chunk_size);
    let slices: Vec<&[u8]> = plan.slices(&payload.main_bytes).collect();

    let backend = Backend::for_compress(&opts.predictor)?;
    // Always one session, so even an empty input records the server's tag.
    let mut workers = backend.open_workers(worker_count(opts.jobs, slices.len()).max(1))?;
    let spec = workers[0].spec();
    for w in &workers {
        if w.spec() != spec {
            return Err(Error::PredictorVersion {
                expected: spec.to_string(),
                found: w.spec().to_string(),
            });
        }
    }

    let chunks = run_pool(&mut workers, slices.len(), |worker, i| {
        let raw = slices[i];
        let symbols: Vec<u32> = raw.iter().map(|&b| u32::from(b)).collect();
        let coded = worker.encode(&symbols)?;
        let data = if coded.len() < raw.len() { coded } else { raw.to_vec() };
        Ok(Chunk {
            symbols: raw.len() as u32,
            data,
        })
    })?;
    for w in workers {
        w.close()?;
    }

    let stored_chunks = chunks.iter().filter(|c| c.is_stored()).count();
    let n_chunks = chunks.len();
    let archive = write_archive(&payload, &spec, chunks, crc32fast::hash(input));
    let stats = CompressStats {
        media: payload.media(),
        predictor: spec,
        original_bytes: input.len() as u64,
        compressed_bytes: archive.len() as u64,
        symbols: payload.main_bytes.len() as u64,
        chunks: n_chunks,
        stored_chunks,
    };
    Ok((archive, stats))
}

pub fn decompress(archive: &[u8], opts: &DecompressOptions) -> Result<Vec<u8>> {
    let archive = Archive::from_bytes(archive)?;
    let mut payload = archive.payload_skeleton();
    let (spec, chunks) = (archive.predictor, archive.chunks);
    if spec.alphabet_size != ALPHABET_SIZE {
        return Err(Error::Corrupt(format!("alphabet size {} is not 256", spec.alphabet_size)));
    }
    let backend = Backend::for_decompress(&spec, opts.server.as_ref())?;
    let coded = chunks.iter().filter(|c| !c.is_stored()).count();
    // At least one session, even with nothing to decode, so a wrong
    // predictor is reported rather than silently ignored.
    let mut workers = backend.open_workers(worker_count(opts.jobs, coded).max(1))?;
    for w in &workers {
        if w.spec() != spec {
            return Err(Error::PredictorVersion {
                expected: spec.to_string(),
                found: w.spec().to_string(),
            });
        }
    }

    let decoded = run_pool(&mut workers, chunks.len(), |worker, i| {
        let c = &chunks[i];
        if c.is_stored() {
            return Ok(c.data.clone());
        }
        let symbols = worker.decode(&c.data, c.symbols as usize)?;
        Ok(symbols.into_iter().map(|s| s as u8).collect())
    })?;
    for w in workers {
        w.close()?;
    }

    payload.main_bytes = decoded.concat();
    let original = media::sequence_to_media(&payload)?;
    let stored = archive.original_crc;
    let computed = crc32fast::hash(&original);
    if stored != computed {
        return Err(Error::OriginalChecksum { stored, computed });
    }
    Ok(original)
}

fn worker_count(jobs: usize, tasks: usize) -> usize {
    let jobs = if jobs == 0 {
        thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        jobs
    };
    jobs.min(tasks)
}

/// Runs `task(worker, i)` for every `i < n` across the workers and returns
/// the results in index order. Stops handing out work after the first
/// failure and returns that failure.
fn run_pool<T, F>(workers: &mut [Worker], n: usize, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut Worker, usize) -> Result<T> + Sync,
{
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let results: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    let first_error: Mutex<Option<(usize, Error)>> = Mutex::new(None);

    thread::scope(|scope| {
        for worker in workers.iter_mut() {
            scope.spawn(|| loop {
                if failed.load(Ordering::Relaxed) {
                    return;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    return;
                }
                match task(worker, i) {
                    Ok(v) => results.lock().unwrap()[i] = Some(v),
                    Err(e) => {
                        failed.store(true, Ordering::Relaxed);
                        let mut slot = first_error.lock().unwrap();
                        if slot.as_ref().map_or(true, |(j, _)| i < *j) {
                            *slot = Some((i, e));
                        }
                        return;
                    }
                }
            });
        }
    });

    if let Some((_, e)) = first_error.into_inner().unwrap() {
        return Err(e);
    }
    Ok(results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every task ran"))
        .collect())
}

enum Backend {
    Builtin(PredictorSpec),
    Server { endpoint: Endpoint, model: String },
}

impl Backend {
    fn for_compress(source: &PredictorSource) -> Result<Self> {
        match source {
            PredictorSource::Builtin(spec) => {
                if spec.kind == PredictorKind::External {
                    return Err(Error::PredictorUnavailable(
                        "external predictors need a server endpoint".into(),
                    ));
                }
                if spec.alphabet_size != ALPHABET_SIZE {
                    return Err(Error::InvalidSpec(format!(
                        "alphabet size must be {ALPHABET_SIZE}, got {}",
                        spec.alphabet_size
                    )));
                }
                begin_session(spec)?;
                Ok(Backend::Builtin(spec.clone()))
            }
            PredictorSource::Server { endpoint, model } => Ok(Backend::Server {
                endpoint: endpoint.clone(),
                model: model.clone(),
            }),
        }
    }

    /// The archive's spec decides the backend. For servers the stored
    /// version tag is sent as the model request, and the server must
    /// answer with the same tag.
    fn for_decompress(spec: &PredictorSpec, server: Option<&Endpoint>) -> Result<Self> {
        if spec.kind != PredictorKind::External {
            begin_session(spec)?;
            return Ok(Backend::Builtin(spec.clone()));
        }
        match server {
            Some(endpoint) => Ok(Backend::Server {
                endpoint: endpoint.clone(),
                model: spec.version_tag.clone(),
            }),
            None => Err(Error::PredictorUnavailable(format!(
                "archive was written with {spec}; pass the predictor server endpoint"
            ))),
        }
    }

    fn open_workers(&self, n: usize) -> Result<Vec<Worker>> {
        (0..n).map(|_| self.open()).collect()
    }

    fn open(&self) -> Result<Worker> {
        Ok(match self {
            Backend::Builtin(spec) => Worker::Builtin(spec.clone()),
            Backend::Server { endpoint, model } => Worker::Remote(Box::new(connect(endpoint, ALPHABET_SIZE, model)?)),
        })
    }
}

/// One coding lane: a built-in model factory or a dedicated connection.
enum Worker {
    Builtin(PredictorSpec),
    Remote(Box<PredictorClient<Box<dyn Transport>>>),
}

impl Worker {
    fn spec(&self) -> PredictorSpec {
        match self {
            Worker::Builtin(spec) => spec.clone(),
            Worker::Remote(client) => client.spec(),
        }
    }

    fn encode(&mut self, symbols: &[u32]) -> Result<Vec<u8>> {
        match self {
            Worker::Builtin(spec) => encode_stream(symbols, &mut begin_session(spec)?),
            Worker::Remote(client) => {
                client.begin_chunk()?;
                let code = encode_stream(symbols, client.as_mut())?;
                client.end_chunk()?;
                Ok(code)
            }
        }
    }

    fn decode(&mut self, code: &[u8], n: usize) -> Result<Vec<u32>> {
        match self {
            Worker::Builtin(spec) => decode_stream(code, &mut begin_session(spec)?, n),
            Worker::Remote(client) => {
                client.begin_chunk()?;
                let symbols = decode_stream(code, client.as_mut(), n)?;
                client.end_chunk()?;
                Ok(symbols)
            }
        }
    }

    fn close(self) -> Result<()> {
        match self {
            Worker::Builtin(_) => Ok(()),
            Worker::Remote(client) => client.bye(),
        }
    }
}
