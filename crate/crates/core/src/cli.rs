//! Command-line front end. `run` parses arguments, executes one subcommand
//! and returns the process exit code: 0 on success, 2 for usage or input
//! errors, 3 for numerical failures.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Config, ScatterChannels, SegmentMode};
use crate::error::{Error, Result};
use crate::features::{build_scattering_filters, parse_channel_mask, scattering_transform};
use crate::imgio::{
    boundary_overlay, concat_channels_named, export_labelmap_pgm, load_image, read_feature_file, read_label_source,
    read_labelmap, rgb_to_lab, save_image, upscale_nearest, write_feature_file, write_labelmap, MultiChannelImage,
};
use crate::labels::{generate_dataset, read_dataset, write_dataset, LabelSource};
use crate::metrics::evaluate;
use crate::nn::train::{evaluate_loss, train_epoch};
use crate::nn::{load_network, save_network, NetworkState};
use crate::slic::slic_segment;
use crate::trainpix::{trainable_segment, Classifier};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "superpix", version, about = "Superpixel segmentation, label generation, training and evaluation")]
pub struct Cli {
    /// key=value configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides train.seed (also seeds dataset shuffling)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on this)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Config override, repeatable: --set slic.step=12
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scattering features of an image, written as FTEN
    Features {
        image: PathBuf,
        output: PathBuf,
        /// L, Lab or gray (overrides scattering.channels)
        #[arg(long)]
        channels: Option<String>,
    },
    /// Superpixels of an image, optionally with extra FTEN feature channels
    Segment {
        image: PathBuf,
        features: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// slic or trainable (overrides segment.mode)
        #[arg(long)]
        mode: Option<String>,
        /// SPNN file, or `oracle` for the analytic SLIC classifier
        #[arg(long)]
        net: Option<String>,
        /// Also export the labels as a 16-bit PGM
        #[arg(long)]
        pgm: Option<PathBuf>,
        /// Also write a PPM with superpixel boundaries painted red
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Training samples from a manifest of `image gt[,gt2...] [ften...]` lines
    Labels {
        manifest: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train a network on an SPDS sample file
    Train {
        dataset: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Metrics of superpixel maps against ground truth, as CSV
    Eval {
        #[arg(long, num_args = 1.., required = true)]
        sp: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        gt: Vec<PathBuf>,
        /// CSV destination (stdout when omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Command failure: a library error or a usage problem found after parsing.
#[derive(Debug)]
pub enum Failure {
    Lib(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Lib(Error::NonFiniteLoss(_)) => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{}: {e}", e.kind()),
            Failure::Usage(m) => write!(f, "usage: {m}"),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::from_file(p)?,
        None => Config::default(),
    };
    for s in &cli.set {
        cfg.apply(s)?;
    }
    if let Some(seed) = cli.seed {
        cfg.train_seed = seed;
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> CmdResult {
    if let Some(n) = cli.threads {
        // a second call in the same process keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let mut cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Features { image, output, channels } => {
            if let Some(c) = channels {
                cfg.set("scattering.channels", c)?;
            }
            log::info!("resolved config:\n{}", cfg.resolved());
            cmd_features(image, output, &cfg)
        }
        Command::Segment { image, features, output, mode, net, pgm, overlay } => {
            if let Some(m) = mode {
                cfg.set("segment.mode", m)?;
            }
            log::info!("resolved config:\n{}", cfg.resolved());
            cmd_segment(image, features, output, net.as_deref(), pgm.as_deref(), overlay.as_deref(), &cfg)
        }
        Command::Labels { manifest, output } => {
            log::info!("resolved config:\n{}", cfg.resolved());
            cmd_labels(manifest, output, &cfg)
        }
        Command::Train { dataset, output } => {
            log::info!("resolved config:\n{}", cfg.resolved());
            cmd_train(dataset, output, &cfg)
        }
        Command::Eval { sp, gt, output } => {
            log::info!("resolved config:\n{}", cfg.resolved());
            cmd_eval(sp, gt, output.as_deref(), &cfg)
        }
    }
}

/// `out_L.ften` style sibling path for per-channel outputs.
fn channel_path(output: &Path, channel: &str) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = output.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    output.with_file_name(format!("{stem}_{channel}{ext}"))
}

pub fn cmd_features(image: &Path, output: &Path, cfg: &Config) -> CmdResult {
    let img = load_image(image)?;
    let bank = build_scattering_filters(cfg.scattering_j, cfg.scattering_l)?;
    let (w, h) = (img.width, img.height);
    let planes: Vec<(String, Vec<f64>)> = match cfg.scattering_channels {
        ScatterChannels::Gray => {
            let c = img.channels;
            let gray = img.data.chunks_exact(c).map(|p| p.iter().map(|&v| v as f64).sum::<f64>() / c as f64).collect();
            vec![("gray".into(), gray)]
        }
        ScatterChannels::L | ScatterChannels::Lab => {
            let lab = rgb_to_lab(&img.to_rgb())?;
            let names: &[&str] = if cfg.scattering_channels == ScatterChannels::L { &["L"] } else { &["L", "a", "b"] };
            names.iter().enumerate().map(|(c, n)| (n.to_string(), lab.channel(c).to_vec())).collect()
        }
    };
    let single = planes.len() == 1;
    for (name, plane) in planes {
        let t = scattering_transform(&plane, w, h, &bank)?;
        let path = if single { output.to_path_buf() } else { channel_path(output, &name) };
        write_feature_file(&path, &t)?;
        println!("{} {}x{}x{}", path.display(), t.width, t.height, t.map_count);
    }
    Ok(())
}

/// Lab image with every feature tensor upscaled to the image size and
/// appended. `scattering.mask` applies to tensors whose map count matches the
/// configured filter bank.
pub fn load_feature_image(image: &Path, ftens: &[PathBuf], cfg: &Config) -> Result<MultiChannelImage> {
    let raw = load_image(image)?;
    let mut img = rgb_to_lab(&raw.to_rgb())?;
    if ftens.is_empty() {
        return Ok(img);
    }
    let bank = build_scattering_filters(cfg.scattering_j, cfg.scattering_l)?;
    for (i, path) in ftens.iter().enumerate() {
        let t = upscale_nearest(&read_feature_file(path)?, img.width(), img.height())?;
        let mask = if t.map_count == bank.map_count() {
            parse_channel_mask(&cfg.scattering_mask, &bank)?
        } else if cfg.scattering_mask.trim().is_empty() {
            vec![true; t.map_count]
        } else {
            return Err(Error::Config(format!(
                "scattering.mask given but {} has {} maps, not {}",
                path.display(),
                t.map_count,
                bank.map_count()
            )));
        };
        img = concat_channels_named(&img, &t, &mask, &format!("t{i}f"))?;
    }
    Ok(img)
}

pub fn cmd_segment(
    image: &Path,
    ftens: &[PathBuf],
    output: &Path,
    net: Option<&str>,
    pgm: Option<&Path>,
    overlay: Option<&Path>,
    cfg: &Config,
) -> CmdResult {
    let img = load_feature_image(image, ftens, cfg)?;
    let extra = img.channel_count() - 3;
    let map = match cfg.segment_mode {
        SegmentMode::Slic => slic_segment(&img, &cfg.slic_params(extra)?)?,
        SegmentMode::Trainable => {
            let net = net.ok_or_else(|| Failure::Usage("segment.mode=trainable needs --net <file|oracle>".into()))?;
            let mut params = cfg.trainpix_params(extra)?;
            let classifier = if net == "oracle" {
                // every cluster is a candidate, so the oracle reproduces SLIC
                let s = params.slic.step;
                params.q = params.q.max((img.width() / s + 1) * (img.height() / s + 1));
                Classifier::AnalyticSlic
            } else {
                Classifier::Network(load_network(net)?)
            };
            trainable_segment(&img, &params, &classifier)?
        }
    };
    write_labelmap(output, &map)?;
    if let Some(p) = pgm {
        export_labelmap_pgm(p, &map)?;
    }
    if let Some(p) = overlay {
        save_image(p, &boundary_overlay(&load_image(image)?, &map)?)?;
    }
    println!("{} {}x{} superpixels={}", output.display(), map.width(), map.height(), map.num_labels());
    Ok(())
}

/// One manifest entry: image, annotations, feature tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub image: PathBuf,
    pub gts: Vec<PathBuf>,
    pub ftens: Vec<PathBuf>,
}

/// Parses `image gt[,gt2...] [ften...]` lines; relative paths are resolved
/// against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let image = parts.next().map(|p| base.join(p));
        let gts: Vec<PathBuf> = parts.next().map(|g| g.split(',').map(|p| base.join(p)).collect()).unwrap_or_default();
        let (Some(image), false) = (image, gts.is_empty()) else {
            return Err(Error::Config(format!("manifest line {}: expected `image gt[,gt...] [ften...]`", n + 1)));
        };
        out.push(ManifestEntry { image, gts, ftens: parts.map(|p| base.join(p)).collect() });
    }
    Ok(out)
}

pub fn cmd_labels(manifest: &Path, output: &Path, cfg: &Config) -> CmdResult {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let entries = parse_manifest(&std::fs::read_to_string(manifest)?, base)?;
    if entries.is_empty() {
        return Err(Failure::Usage("manifest lists no images".into()));
    }
    let mut sources = Vec::with_capacity(entries.len());
    for e in &entries {
        let image = load_feature_image(&e.image, &e.ftens, cfg)?;
        let annotations = e.gts.iter().map(read_label_source).collect::<Result<Vec<_>>>()?;
        sources.push(LabelSource { image, annotations });
    }
    let extra = sources[0].image.channel_count() - 3;
    let label_cfg = cfg.label_config(extra, cfg.train_seed)?;
    let ds = generate_dataset(&sources, &label_cfg)?;
    write_dataset(output, &ds.samples)?;
    println!("{} samples={} M={} Q={}", output.display(), ds.samples.len(), ds.samples.m, ds.samples.q);
    println!("stats {}", ds.stats);
    Ok(())
}

pub fn cmd_train(dataset: &Path, output: &Path, cfg: &Config) -> CmdResult {
    let all = read_dataset(dataset)?;
    if all.q != cfg.net_q {
        return Err(Error::SpecMismatch(format!("dataset has Q={}, net.Q={}", all.q, cfg.net_q)).into());
    }
    let (train, val) = all.split(cfg.train_val_frac, cfg.train_seed);
    if train.is_empty() {
        return Err(Error::EmptyDataset.into());
    }
    let spec = cfg.network_spec(all.m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train_seed);
    let mut state = NetworkState::init(&spec, &mut rng)?;
    let tc = cfg.train_config();
    let report = |epoch: usize, train_loss: f64, state: &NetworkState| -> Result<()> {
        let val_loss = if val.is_empty() { f64::NAN } else { evaluate_loss(state, &val)? };
        println!("epoch {epoch} train_loss {train_loss:.6} val_loss {val_loss:.6}");
        std::io::stdout().flush()?;
        Ok(())
    };
    report(0, evaluate_loss(&state, &train)?, &state)?;
    for epoch in 1..=cfg.train_epochs {
        let loss = train_epoch(&mut state, &train, &tc, &mut rng)?;
        report(epoch, loss, &state)?;
    }
    save_network(output, &state)?;
    println!("{} parameters={}", output.display(), state.parameter_count());
    Ok(())
}

pub fn cmd_eval(sp: &[PathBuf], gt: &[PathBuf], output: Option<&Path>, cfg: &Config) -> CmdResult {
    let sp_maps = sp.iter().map(read_labelmap).collect::<Result<Vec<_>>>()?;
    let gt_maps = gt.iter().map(read_label_source).collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = sp
        .iter()
        .map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
        .collect();
    let report = evaluate(&sp_maps, &gt_maps, cfg.eval_tol, Some(&names))?;
    match output {
        Some(p) => report.write_csv(p)?,
        None => print!("{}", report.to_csv()),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_parsing() {
        let text = "# images\na.ppm a.pgm,a2.pgm f.ften\n\nb.pgm b_gt.pgm\n";
        let m = parse_manifest(text, Path::new("/d")).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].gts, vec![PathBuf::from("/d/a.pgm"), PathBuf::from("/d/a2.pgm")]);
        assert_eq!(m[0].ftens, vec![PathBuf::from("/d/f.ften")]);
        assert!(m[1].ftens.is_empty());
        assert!(parse_manifest("lonely.ppm", Path::new(".")).is_err());
    }

    #[test]
    fn channel_paths() {
        assert_eq!(channel_path(Path::new("/x/out.ften"), "a"), PathBuf::from("/x/out_a.ften"));
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(["superpix", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["superpix", "eval", "--sp", "a.spxl"]), EXIT_USAGE);
        assert_eq!(run(["superpix", "--set", "nope=1", "eval", "--sp", "a", "--gt", "b"]), EXIT_USAGE);
    }
}
