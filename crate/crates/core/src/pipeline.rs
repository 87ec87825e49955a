//! Corpus scanning, style banks, seeded pairing plans, and parallel batch
//! translation.
//!
//! Everything here is deterministic by contract: corpus entries are sorted,
//! pairing draws come from the documented [`SplitMix64`] generator seeded by
//! the plan seed, and the batch runner produces byte-identical output trees
//! for any worker count — assignments touch disjoint outputs and the report
//! is merged by assignment index, not by completion order.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::image_io::{load_image, save_image};
use crate::rng::SplitMix64;
use crate::spectral::fda_translate;
use crate::style::{channel_mean, channel_stats, rgb_adapt, sain, SainConfig};
use crate::tensor::{ChannelStats, FeatureMap, ImageTensor, Planar};
use crate::tensor_file::{read_tensor, write_tensor};

/// File extensions (case-insensitive) recognized as corpus members. `.sstf`
/// is the raw float tensor format; it participates in runs exactly like an
/// image, except it is saved lossless, never quantized.
pub const SUPPORTED_EXTENSIONS: &[&str] = &["jpeg", "jpg", "png", "sstf"];

/// A scanned image directory: the root plus its sorted relative entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    root: PathBuf,
    entries: Vec<String>,
}

impl Corpus {
    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Relative paths with `/` separators, lexicographically sorted.
    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Absolute path of one entry.
    pub fn absolute_path(&self, entry: &str) -> PathBuf {
        self.root.join(entry)
    }

    /// Loads entry `index` as pixel data.
    pub fn load(&self, index: usize) -> Result<ImageTensor> {
        load_input(&self.absolute_path(&self.entries[index]))
    }
}

/// Loads a corpus member by extension: `.sstf` through the tensor format,
/// everything else through the image decoder.
pub fn load_input(path: &Path) -> Result<ImageTensor> {
    if has_extension(path, "sstf") {
        read_tensor(path)?.into_image()
    } else {
        load_image(path)
    }
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

/// Recursively lists supported files under `root`, sorted by relative path.
///
/// The listing is what every downstream seed-based decision keys on, so it
/// must be stable: paths are normalized to `/` separators and sorted
/// bytewise. Entries with non-Unicode names are skipped.
pub fn scan_corpus(root: &Path) -> Result<Corpus> {
    if !root.is_dir() {
        return Err(Error::MissingDirectory {
            path: root.to_path_buf(),
        });
    }
    let mut entries = Vec::new();
    for item in WalkDir::new(root).follow_links(false) {
        let item = item.map_err(|e| {
            let path = e
                .path()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| root.to_path_buf());
            match e.into_io_error() {
                Some(io) => Error::io(path, io),
                None => Error::io(path, std::io::Error::other("directory walk failed")),
            }
        })?;
        if !item.file_type().is_file() {
            continue;
        }
        let supported = item
            .path()
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .is_some_and(|e| SUPPORTED_EXTENSIONS.contains(&e.as_str()));
        if !supported {
            continue;
        }
        let rel = item
            .path()
            .strip_prefix(root)
            .expect("walked path is under root");
        let Some(parts) = rel
            .components()
            .map(|c| c.as_os_str().to_str())
            .collect::<Option<Vec<_>>>()
        else {
            continue;
        };
        entries.push(parts.join("/"));
    }
    entries.sort();
    if entries.is_empty() {
        return Err(Error::EmptyCorpus {
            path: root.to_path_buf(),
        });
    }
    Ok(Corpus {
        root: root.to_path_buf(),
        entries,
    })
}

/// Per-image and corpus-aggregate channel statistics.
///
/// The aggregate mean is the unweighted mean of the per-image means. The
/// aggregate deviation pools second moments over every pixel of the corpus —
/// the deviation of the concatenated pixel population — rather than
/// averaging per-image deviations, which would underestimate cross-image
/// spread.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleBank {
    epsilon: f64,
    per_image: Vec<(String, ChannelStats)>,
    aggregate: ChannelStats,
}

impl StyleBank {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn per_image(&self) -> &[(String, ChannelStats)] {
        &self.per_image
    }

    pub fn aggregate(&self) -> &ChannelStats {
        &self.aggregate
    }

    pub fn channels(&self) -> usize {
        self.aggregate.channels()
    }
}

/// Computes a [`StyleBank`] for a corpus. An unreadable or mismatched image
/// aborts the build with that image's path in the error.
pub fn build_style_bank(corpus: &Corpus, epsilon: f64) -> Result<StyleBank> {
    let mut per_image = Vec::with_capacity(corpus.len());
    let mut channels = 0usize;
    let mut pixel_count = 0.0f64;
    let mut sum = Vec::new();
    let mut sum_sq = Vec::new();
    let mut mean_sum = Vec::new();
    for (index, entry) in corpus.entries().iter().enumerate() {
        let img = corpus.load(index)?;
        if per_image.is_empty() {
            channels = img.channels();
            sum = vec![0.0; channels];
            sum_sq = vec![0.0; channels];
            mean_sum = vec![0.0; channels];
        } else if img.channels() != channels {
            return Err(Error::ChannelMismatch {
                left: channels,
                right: img.channels(),
            });
        }
        let stats = channel_stats(&img, epsilon)?;
        let n = img.pixels_per_channel() as f64;
        for c in 0..channels {
            let mu = stats.means()[c];
            // Recover the raw per-image variance and from it the second
            // moment, so the pooled deviation is that of all pixels at once.
            let var = stats.stds()[c] * stats.stds()[c] - epsilon;
            sum[c] += mu * n;
            sum_sq[c] += (var + mu * mu) * n;
            mean_sum[c] += mu;
        }
        pixel_count += n;
        per_image.push((entry.clone(), stats));
    }
    let k = per_image.len() as f64;
    let means: Vec<f64> = mean_sum.iter().map(|&s| s / k).collect();
    let stds: Vec<f64> = (0..channels)
        .map(|c| {
            let pooled_mean = sum[c] / pixel_count;
            let var = (sum_sq[c] / pixel_count - pooled_mean * pooled_mean).max(0.0);
            (var + epsilon).sqrt()
        })
        .collect();
    let aggregate = ChannelStats::new(means, stds, epsilon)?;
    Ok(StyleBank {
        epsilon,
        per_image,
        aggregate,
    })
}

const BANK_HEADER_TAG: &str = "stylebank";
const BANK_VERSION: u32 = 1;
const BANK_AGGREGATE_TAG: &str = "aggregate";

fn push_stats_line(out: &mut String, prefix: &str, stats: &ChannelStats) {
    out.push_str(prefix);
    for v in stats.means().iter().chain(stats.stds()) {
        out.push(' ');
        out.push_str(&v.to_string());
    }
    out.push('\n');
}

/// Persists a bank as text: header `stylebank 1 <channels> <epsilon>`, one
/// `<path> <means...> <stds...>` line per image, and an `aggregate` line
/// last. Floats use the shortest decimal form that parses back to the same
/// bits, so write→read→write reproduces the file exactly.
pub fn write_bank(bank: &StyleBank, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "{BANK_HEADER_TAG} {BANK_VERSION} {} {}\n",
        bank.channels(),
        bank.epsilon
    ));
    for (entry, stats) in &bank.per_image {
        push_stats_line(&mut out, entry, stats);
    }
    push_stats_line(&mut out, BANK_AGGREGATE_TAG, &bank.aggregate);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn bank_parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::BankParse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// 2C floats off the right end of the line; what remains is the path (which
/// may itself contain spaces).
fn parse_stats_line(
    raw: &str,
    channels: usize,
    epsilon: f64,
    path: &Path,
    line: usize,
) -> Result<(String, ChannelStats)> {
    let mut rest = raw.trim_end();
    let mut numbers = vec![0.0f64; 2 * channels];
    for slot in numbers.iter_mut().rev() {
        let Some((head, token)) = rest.rsplit_once(' ') else {
            return Err(bank_parse_err(path, line, "too few fields"));
        };
        *slot = token
            .parse::<f64>()
            .map_err(|_| bank_parse_err(path, line, format!("bad number {token:?}")))?;
        rest = head;
    }
    let stats = ChannelStats::new(
        numbers[..channels].to_vec(),
        numbers[channels..].to_vec(),
        epsilon,
    )
    .map_err(|e| bank_parse_err(path, line, e.to_string()))?;
    Ok((rest.to_string(), stats))
}

/// Reads a bank written by [`write_bank`].
pub fn read_bank(path: &Path) -> Result<StyleBank> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.is_empty() {
        return Err(bank_parse_err(path, 1, "empty file"));
    }
    let header: Vec<&str> = lines[0].split_whitespace().collect();
    if header.len() != 4 || header[0] != BANK_HEADER_TAG {
        return Err(bank_parse_err(path, 1, "malformed header"));
    }
    if header[1] != BANK_VERSION.to_string() {
        return Err(bank_parse_err(
            path,
            1,
            format!("unsupported version {}", header[1]),
        ));
    }
    let channels: usize = header[2]
        .parse()
        .map_err(|_| bank_parse_err(path, 1, "bad channel count"))?;
    if channels == 0 {
        return Err(bank_parse_err(path, 1, "bad channel count"));
    }
    let epsilon: f64 = header[3]
        .parse()
        .map_err(|_| bank_parse_err(path, 1, "bad epsilon"))?;
    if lines.len() < 3 {
        return Err(bank_parse_err(path, lines.len(), "missing lines"));
    }
    let mut per_image = Vec::with_capacity(lines.len() - 2);
    for (i, raw) in lines[1..lines.len() - 1].iter().enumerate() {
        per_image.push(parse_stats_line(raw, channels, epsilon, path, i + 2)?);
    }
    let last = lines.len();
    let (tag, aggregate) = parse_stats_line(lines[last - 1], channels, epsilon, path, last)?;
    if tag != BANK_AGGREGATE_TAG {
        return Err(bank_parse_err(path, last, "missing aggregate line"));
    }
    Ok(StyleBank {
        epsilon,
        per_image,
        aggregate,
    })
}

/// Which transform a batch run applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranslateMode {
    Fda,
    Rgb,
    Sain,
}

impl fmt::Display for TranslateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TranslateMode::Fda => "fda",
            TranslateMode::Rgb => "rgb",
            TranslateMode::Sain => "sain",
        })
    }
}

/// How each source entry picks its style reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// Each source draws a target index from the seeded generator.
    RandomSeeded,
    /// Source `i` takes target `i mod target_count`.
    RoundRobin,
    /// Every source uses the target corpus aggregate (rgb mode only).
    DatasetMean,
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pairing::RandomSeeded => "random-seeded",
            Pairing::RoundRobin => "round-robin",
            Pairing::DatasetMean => "dataset-mean",
        })
    }
}

/// A source entry's style reference: one target image, or the target
/// corpus's aggregate statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetRef {
    Image(String),
    DatasetMean,
}

/// One unit of work: translate `source` using `target` as the style.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub source: String,
    pub target: TargetRef,
}

/// Transform parameters carried by a plan. `beta` applies to fda, `epsilon`
/// to sain; `clamp` controls save-time quantization of out-of-range samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanParams {
    pub beta: f64,
    pub epsilon: f64,
    pub clamp: bool,
}

impl Default for PlanParams {
    fn default() -> Self {
        PlanParams {
            beta: 0.01,
            epsilon: crate::style::DEFAULT_EPSILON,
            clamp: false,
        }
    }
}

/// A fully resolved batch: every source entry paired with its style
/// reference, plus the transform configuration. Assignments are a pure
/// function of (seed, source ordering, target ordering).
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationPlan {
    mode: TranslateMode,
    pairing: Pairing,
    seed: u64,
    params: PlanParams,
    source_root: PathBuf,
    target_root: PathBuf,
    target_entries: Vec<String>,
    assignments: Vec<Assignment>,
}

impl TranslationPlan {
    pub fn mode(&self) -> TranslateMode {
        self.mode
    }
    pub fn pairing(&self) -> Pairing {
        self.pairing
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn params(&self) -> &PlanParams {
        &self.params
    }
    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }
}

/// Pairs every source entry with a style reference.
///
/// Random-seeded pairing consumes one [`SplitMix64`] draw per source entry,
/// in corpus order, reduced modulo the target count — reproducible from the
/// seed alone given the two sorted listings.
pub fn make_plan(
    source: &Corpus,
    target: &Corpus,
    mode: TranslateMode,
    pairing: Pairing,
    seed: u64,
    params: PlanParams,
) -> Result<TranslationPlan> {
    if pairing == Pairing::DatasetMean && mode != TranslateMode::Rgb {
        return Err(Error::IncompatiblePlan {
            mode: mode.to_string(),
            pairing: pairing.to_string(),
        });
    }
    if mode == TranslateMode::Fda
        && (!params.beta.is_finite() || !(0.0..=1.0).contains(&params.beta))
    {
        return Err(Error::BetaOutOfRange { beta: params.beta });
    }
    if mode == TranslateMode::Sain {
        SainConfig::new(params.epsilon)?;
    }
    let mut rng = SplitMix64::new(seed);
    let assignments = source
        .entries()
        .iter()
        .enumerate()
        .map(|(i, entry)| {
            let target_ref = match pairing {
                Pairing::RandomSeeded => {
                    TargetRef::Image(target.entries()[rng.next_index(target.len())].clone())
                }
                Pairing::RoundRobin => TargetRef::Image(target.entries()[i % target.len()].clone()),
                Pairing::DatasetMean => TargetRef::DatasetMean,
            };
            Assignment {
                source: entry.clone(),
                target: target_ref,
            }
        })
        .collect();
    Ok(TranslationPlan {
        mode,
        pairing,
        seed,
        params,
        source_root: source.root().to_path_buf(),
        target_root: target.root().to_path_buf(),
        target_entries: target.entries().to_vec(),
        assignments,
    })
}

/// Outcome of one assignment.
#[derive(Debug, Clone, PartialEq)]
pub enum FileStatus {
    /// Translated and saved; per-channel means of the output, measured on
    /// the floats before quantization or clamping.
    Ok {
        means: Vec<f64>,
    },
    Failed {
        message: String,
    },
}

/// One report record.
#[derive(Debug, Clone, PartialEq)]
pub struct FileOutcome {
    pub source: String,
    pub output: String,
    pub status: FileStatus,
}

/// Per-file outcomes in assignment order, plus totals.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    entries: Vec<FileOutcome>,
    ok: usize,
    failed: usize,
}

impl RunReport {
    pub fn entries(&self) -> &[FileOutcome] {
        &self.entries
    }
    pub fn ok_count(&self) -> usize {
        self.ok
    }
    pub fn failed_count(&self) -> usize {
        self.failed
    }

    /// Tab-separated record per file — source, status, output, then the
    /// per-channel means (or the failure message) — followed by summary
    /// count lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&entry.source);
            match &entry.status {
                FileStatus::Ok { means } => {
                    out.push_str("\tok\t");
                    out.push_str(&entry.output);
                    out.push('\t');
                    let joined: Vec<String> = means.iter().map(f64::to_string).collect();
                    out.push_str(&joined.join(" "));
                }
                FileStatus::Failed { message } => {
                    out.push_str("\tfailed\t");
                    out.push_str(&entry.output);
                    out.push('\t');
                    out.push_str(message);
                }
            }
            out.push('\n');
        }
        out.push_str(&format!("# ok {}\n# failed {}\n", self.ok, self.failed));
        out
    }
}

/// Output path for a source entry: `.sstf` stays `.sstf` (lossless route),
/// every image format is written as `.png`.
fn output_entry(source: &str) -> String {
    match source.rsplit_once('.') {
        Some((_, ext)) if ext.eq_ignore_ascii_case("sstf") => source.to_string(),
        Some((stem, _)) => format!("{stem}.png"),
        None => format!("{source}.png"),
    }
}

fn translate_one(
    plan: &TranslationPlan,
    assignment: &Assignment,
    aggregate_means: Option<&[f64]>,
    out_path: &Path,
) -> Result<Vec<f64>> {
    let source = load_input(&plan.source_root.join(&assignment.source))?;
    let translated = match (&assignment.target, plan.mode) {
        (TargetRef::DatasetMean, TranslateMode::Rgb) => {
            let means = aggregate_means.expect("aggregate computed for dataset-mean plans");
            rgb_adapt(&source, means)?
        }
        (TargetRef::DatasetMean, mode) => {
            return Err(Error::IncompatiblePlan {
                mode: mode.to_string(),
                pairing: Pairing::DatasetMean.to_string(),
            })
        }
        (TargetRef::Image(entry), mode) => {
            let target = load_input(&plan.target_root.join(entry))?;
            match mode {
                TranslateMode::Rgb => rgb_adapt(&source, &channel_mean(&target))?,
                TranslateMode::Fda => fda_translate(&source, &target, plan.params.beta)?,
                TranslateMode::Sain => {
                    sain(&source, &target, SainConfig::new(plan.params.epsilon)?)?
                }
            }
        }
    };
    let means = channel_mean(&translated);
    if has_extension(out_path, "sstf") {
        write_tensor(&FeatureMap::from(translated), out_path)?;
    } else {
        save_image(&translated, out_path, plan.params.clamp)?;
    }
    Ok(means)
}

/// Runs every assignment, writing one output per source entry under
/// `out_dir` (same relative path, extension normalized by the lossless
/// rule). A failing assignment is recorded in the report and does not stop
/// the run; failures in shared preparation (collision detection, the
/// dataset-mean aggregate) abort up front.
///
/// Outputs are byte-identical for any `workers >= 1`: the work queue only
/// changes which thread writes a file, never its content, and the report is
/// ordered by assignment index.
pub fn execute_plan(plan: &TranslationPlan, out_dir: &Path, workers: usize) -> Result<RunReport> {
    if workers == 0 {
        return Err(Error::ZeroWorkers);
    }
    let mut outputs = Vec::with_capacity(plan.assignments.len());
    let mut seen: HashMap<String, &str> = HashMap::new();
    for a in &plan.assignments {
        let out = output_entry(&a.source);
        if let Some(first) = seen.insert(out.clone(), a.source.as_str()) {
            return Err(Error::OutputCollision {
                first: first.to_string(),
                second: a.source.clone(),
                output: out,
            });
        }
        outputs.push(out);
    }
    let aggregate_means: Option<Vec<f64>> = if plan
        .assignments
        .iter()
        .any(|a| a.target == TargetRef::DatasetMean)
    {
        let target = Corpus {
            root: plan.target_root.clone(),
            entries: plan.target_entries.clone(),
        };
        let bank = build_style_bank(&target, plan.params.epsilon)?;
        Some(bank.aggregate().means().to_vec())
    } else {
        None
    };
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for out in &outputs {
        if let Some(parent) = out_dir.join(out).parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }

    let n = plan.assignments.len();
    let mut results: Vec<Option<FileStatus>> = vec![None; n];
    let next = AtomicUsize::new(0);
    let thread_count = workers.min(n);
    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel();
        let next = &next;
        let outputs = &outputs;
        let aggregate = aggregate_means.as_deref();
        for _ in 0..thread_count {
            let tx = tx.clone();
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out_path = out_dir.join(&outputs[i]);
                let status = match translate_one(plan, &plan.assignments[i], aggregate, &out_path) {
                    Ok(means) => FileStatus::Ok { means },
                    Err(e) => FileStatus::Failed {
                        message: e.to_string(),
                    },
                };
                if tx.send((i, status)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, status) in rx {
            results[i] = Some(status);
        }
    });

    let mut entries = Vec::with_capacity(n);
    let mut ok = 0;
    let mut failed = 0;
    for (i, status) in results.into_iter().enumerate() {
        let status = status.expect("every assignment reports exactly once");
        match status {
            FileStatus::Ok { .. } => ok += 1,
            FileStatus::Failed { .. } => failed += 1,
        }
        entries.push(FileOutcome {
            source: plan.assignments[i].source.clone(),
            output: outputs[i].clone(),
            status,
        });
    }
    Ok(RunReport {
        entries,
        ok,
        failed,
    })
}
