use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use neuracoustic::config::RunConfig;
use neuracoustic::crosscheck;
use neuracoustic::neurogram::{read_neurogram, write_neurogram, NeurogramMetadata};
use neuracoustic::periphery::{Audiogram, CndProfile, FiberPopulation, FiberTag};
use neuracoustic::regression::write_feature_csv;
use neuracoustic::seeding::{derive_seed, str_tag};
use neuracoustic::similarity::{nsi_map, nsim};
use neuracoustic::stimulus::{load_wav, CorpusManifest};
use neuracoustic::studies::{
    emit_report, join_scores, load_corpus, load_profiles, read_scores_csv, study1_features,
    study1_regression, study2_sweep, HearingProfile, SweepOptions,
};
use neuracoustic::Error;

const CACHE_ENV: &str = "NEURACOUSTIC_CACHE_DIR";

#[derive(Parser)]
#[command(name = "neuracoustic", version, about = "Neurogram simulation and NSIM studies")]
struct Cli {
    /// Run configuration (TOML, or JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for sweeps; results do not depend on it
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate MR and FT neurograms for each fiber class and their sum
    Neurogram {
        #[arg(long)]
        wav: PathBuf,
        /// `flat:<dB HL>`, `sloping`, or a JSON file of [freq, threshold] pairs
        #[arg(long, default_value = "flat:0")]
        audiogram: String,
        /// Surviving LS,MS,HS fibers per CF
        #[arg(long, default_value = "5,5,12")]
        cnd: String,
        #[arg(long, default_value_t = 65.0)]
        level: f64,
        /// Condition name from the configuration, or `clean`
        #[arg(long, default_value = "clean")]
        condition: String,
        #[arg(long, default_value = "custom")]
        profile_id: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// NSIM of a degraded neurogram against a reference
    Nsim {
        reference: PathBuf,
        degraded: PathBuf,
        /// Also write the NSI map as CSV
        #[arg(long)]
        map_csv: Option<PathBuf>,
    },
    /// Per-profile features and, with scores, the regression models
    Study1 {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        profiles: PathBuf,
        /// CSV `profile_id,score`
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fiber-loss sweep over levels and conditions
    Study2 {
        #[arg(long)]
        corpus: PathBuf,
        /// Defaults to the sloping loss with the seven fiber-loss rows
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reuse completed cells from the cache
        #[arg(long)]
        resume: bool,
    },
    /// Compare the similarity core with direct formulas on random pairs
    SsimCheck {
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the default configuration as TOML
    Defaults,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_bad_input() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn internal(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn bad_input(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    /// sha256 of every input file, keyed by path as given
    inputs: BTreeMap<String, String>,
}

fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| bad_input(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

fn write_manifest(
    out: &Path,
    command: &'static str,
    config: &RunConfig,
    inputs: &[&Path],
) -> CliResult<()> {
    let mut hashes = BTreeMap::new();
    for p in inputs {
        hashes.insert(p.display().to_string(), sha256_file(p)?);
    }
    let m = RunManifest {
        tool: "neuracoustic",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        inputs: hashes,
    };
    let text = serde_json::to_string_pretty(&m).map_err(|e| internal(e.to_string()))? + "\n";
    let path = out.join("run_manifest.json");
    std::fs::write(&path, text).map_err(|e| internal(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| internal(format!("{}: {e}", dir.display())))
}

fn parse_audiogram(spec: &str) -> CliResult<Audiogram> {
    if let Some(db) = spec.strip_prefix("flat:") {
        let db: f64 = db
            .parse()
            .map_err(|_| bad_input(format!("bad flat audiogram level {db:?}")))?;
        return Ok(Audiogram::flat(db)?);
    }
    if spec == "sloping" {
        return Ok(Audiogram::sloping_loss());
    }
    let text = std::fs::read_to_string(spec).map_err(|e| bad_input(format!("{spec}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| bad_input(format!("{spec}: {e}")))
}

fn parse_cnd(spec: &str) -> CliResult<CndProfile> {
    let parts: Vec<u32> = spec
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad_input(format!("bad fiber counts {spec:?}, expected LS,MS,HS")))?;
    match parts[..] {
        [ls, ms, hs] => Ok(CndProfile::new(ls, ms, hs)?),
        _ => Err(bad_input(format!("bad fiber counts {spec:?}, expected LS,MS,HS"))),
    }
}

fn cmd_neurogram(
    config: &RunConfig,
    config_path: Option<&Path>,
    args: (&Path, &str, &str, f64, &str, &str, &Path),
) -> CliResult<()> {
    let (wav, audiogram, cnd, level, condition, profile_id, out) = args;
    let audiogram = parse_audiogram(audiogram)?;
    let cnd = parse_cnd(cnd)?;
    let cond = if condition == "clean" {
        neuracoustic::config::ConditionSpec::clean()
    } else {
        config
            .study2
            .conditions
            .iter()
            .find(|c| c.name == condition)
            .cloned()
            .ok_or_else(|| bad_input(format!("unknown condition {condition:?}")))?
    };
    let wave = load_wav(wav)?;
    let stem = wav
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "stimulus".into());
    let stim = cond
        .at_level(level)
        .apply(&wave, None, config.periphery.internal_rate_hz)?;
    let mut pc = config.periphery.clone();
    pc.seed = derive_seed(config.seed, &[str_tag(&stem)]);
    let bank = FiberPopulation::simulate(&stim, &audiogram, cnd, &pc)?.bank(&cnd)?;

    create_dir(out)?;
    let metadata = NeurogramMetadata {
        stimulus_id: stem.clone(),
        level_db_spl: Some(level),
        condition: cond.name.clone(),
        profile_id: profile_id.to_string(),
        seed: pc.seed,
    };
    let mut sets: Vec<(FiberTag, Vec<neuracoustic::periphery::Psth>)> = bank
        .responses
        .iter()
        .map(|r| (FiberTag::from(r.fiber), r.psths.clone()))
        .collect();
    sets.push((FiberTag::Sum, bank.summed()));
    for (tag, psths) in sets {
        for kind in [
            neuracoustic::neurogram::NeurogramKind::Mr,
            neuracoustic::neurogram::NeurogramKind::Ft,
        ] {
            let mut n = neuracoustic::neurogram::build_neurogram(&psths, kind, &config.neurogram)?;
            n.metadata = metadata.clone();
            let path = out.join(format!("{stem}_{tag}_{kind}.ngm"));
            write_neurogram(&n, &path)?;
            println!("{}", path.display());
        }
    }
    let mut inputs = vec![wav];
    inputs.extend(config_path);
    write_manifest(out, "neurogram", config, &inputs)
}

fn cmd_nsim(config: &RunConfig, reference: &Path, degraded: &Path, map_csv: Option<&Path>) -> CliResult<()> {
    let r = read_neurogram(reference)?;
    let d = read_neurogram(degraded)?;
    let res = nsim(&r.values, &d.values, &config.similarity)?;
    println!("nsim={:.6}", res.nsim);
    if let Some(path) = map_csv {
        let m = nsi_map(&r.values, &d.values, &config.similarity)?;
        let mut text = String::new();
        for i in 0..m.rows() {
            let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| internal(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_study1(
    config: &RunConfig,
    config_path: Option<&Path>,
    corpus: &Path,
    profiles: &Path,
    scores_path: Option<&Path>,
    out: &Path,
) -> CliResult<()> {
    let manifest = CorpusManifest::load(corpus)?;
    let words = load_corpus(&manifest)?;
    let profile_list = load_profiles(profiles)?;
    let scores = scores_path.map(read_scores_csv).transpose()?;
    let feats = study1_features(&words, &profile_list, config)?;
    for w in &feats.warnings {
        eprintln!("warning: {w}");
    }
    create_dir(out)?;
    let rows = match &scores {
        Some(s) => join_scores(&feats.rows, s)?,
        None => feats.rows.clone(),
    };
    write_feature_csv(&rows, out.join("study1_features.csv"))?;
    match &scores {
        None => println!("notice: no scores CSV given; features written, regression skipped"),
        Some(_) => {
            let results = study1_regression(&rows, &config.study1)?;
            for r in &results {
                println!(
                    "model {}: C={} epsilon={} pooled_mse={:.6} pooled_r2={:.6}",
                    r.label, r.hyperparams.c, r.hyperparams.epsilon, r.cv.pooled_mse, r.cv.pooled_r2
                );
            }
            let text = serde_json::to_string_pretty(&results).map_err(|e| internal(e.to_string()))? + "\n";
            let path = out.join("study1_models.json");
            std::fs::write(&path, text).map_err(|e| internal(format!("{}: {e}", path.display())))?;
        }
    }
    let mut inputs: Vec<&Path> = vec![corpus, profiles];
    let wavs: Vec<PathBuf> = manifest.entries.iter().map(|e| e.path.clone()).collect();
    inputs.extend(wavs.iter().map(|p| p.as_path()));
    inputs.extend(scores_path);
    inputs.extend(config_path);
    write_manifest(out, "study1", config, &inputs)
}

fn cmd_study2(
    config: &RunConfig,
    config_path: Option<&Path>,
    corpus: &Path,
    profiles: Option<&Path>,
    out: &Path,
    resume: bool,
    jobs: Option<usize>,
) -> CliResult<()> {
    let manifest = CorpusManifest::load(corpus)?;
    let words = load_corpus(&manifest)?;
    let profile_list = match profiles {
        Some(p) => load_profiles(p)?,
        None => HearingProfile::sweep_defaults(),
    };
    let cache_dir = std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| out.join("cache"));
    let opts = SweepOptions {
        cache_dir: Some(cache_dir),
        reuse_cache: resume,
        jobs,
    };
    let sweep = study2_sweep(&words, &profile_list, config, &opts)?;
    eprintln!(
        "cells computed: {}, reused from cache: {}",
        sweep.stats.computed, sweep.stats.cached
    );
    for f in emit_report(&sweep, out)? {
        println!("{}", f.display());
    }
    let mut inputs: Vec<&Path> = vec![corpus];
    let wavs: Vec<PathBuf> = manifest.entries.iter().map(|e| e.path.clone()).collect();
    inputs.extend(wavs.iter().map(|p| p.as_path()));
    inputs.extend(profiles);
    inputs.extend(config_path);
    write_manifest(out, "study2", config, &inputs)
}

fn cmd_ssim_check(pairs: usize, seed: u64) -> CliResult<()> {
    let rep = crosscheck::run(pairs, seed)?;
    println!(
        "pairs={} max_ssim_diff={:e} max_nsim_diff={:e}",
        rep.pairs, rep.max_ssim_diff, rep.max_nsim_diff
    );
    if rep.max_ssim_diff <= 1e-12 && rep.max_nsim_diff <= 1e-12 {
        println!("ok");
        Ok(())
    } else {
        Err(internal("similarity core disagrees with the direct formulas"))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let cp = cli.config.as_deref();
    let out_or = |o: &Option<PathBuf>| o.clone().unwrap_or_else(|| config.output_dir.clone());
    match &cli.command {
        Command::Neurogram {
            wav,
            audiogram,
            cnd,
            level,
            condition,
            profile_id,
            out,
        } => cmd_neurogram(
            &config,
            cp,
            (wav, audiogram, cnd, *level, condition, profile_id, &out_or(out)),
        ),
        Command::Nsim {
            reference,
            degraded,
            map_csv,
        } => cmd_nsim(&config, reference, degraded, map_csv.as_deref()),
        Command::Study1 {
            corpus,
            profiles,
            scores,
            out,
        } => cmd_study1(&config, cp, corpus, profiles, scores.as_deref(), &out_or(out)),
        Command::Study2 {
            corpus,
            profiles,
            out,
            resume,
        } => cmd_study2(&config, cp, corpus, profiles.as_deref(), &out_or(out), *resume, cli.jobs),
        Command::SsimCheck { pairs, seed } => cmd_ssim_check(*pairs, *seed),
        Command::Defaults => {
            print!("{}", RunConfig::default().to_toml()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
