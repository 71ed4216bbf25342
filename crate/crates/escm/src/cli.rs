//! Command-line entry points.
//!
//! Three subcommands cover the pipeline end to end: `synth` renders a
//! synthetic evolving-subspace configuration to a trajectory file, `train`
//! fits the recurrent coefficient model to one trajectory file and writes
//! checkpoint + per-step cluster labels, and `benchmark` runs a method
//! roster over a directory of trajectory files and emits CSV + markdown
//! reports. Every run writes exactly one JSON manifest recording the
//! command line, the fully resolved configuration, seeds, SHA-256 digests
//! of the inputs, the tool version, and the produced files.
//!
//! Exit codes are stable: 0 success, 2 usage/config/data errors, 3
//! training divergence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::bench::{
    clustering_error, emit_report, run_benchmark, MethodSpec, Protocol, ReportFormat,
};
use crate::data::{
    derive_seed, load_sequence, parse_synth_config, preprocess, save_sequence, synth_evolving,
    to_trajectories,
};
use crate::error::{Error, Result};
use crate::lstm::{default_hidden, train_sequence, Optimizer, TrainConfig};
use crate::spectral::{affinity, spectral_cluster, ClusterLabels};
use serde::Serialize;
use sha2::{Digest, Sha256};

const USAGE: &str = "\
escm - evolving self-expressive subspace clustering

usage:
  escm synth <config> <out>       generate a synthetic trajectory file
  escm train <input> [flags]      train the recurrent model on one file
  escm benchmark <dir> [flags]    run methods over a directory of .traj files

train flags:
  --lambda <f>      l1 weight (default 0.1)
  --hidden <n>      hidden size (default ceil(N/5))
  --lr <f>          learning rate (default 0.001)
  --epochs <n>      training epochs (default 300)
  --window <n>      window length (default min(T, 8))
  --stride <n>      window stride (default 1)
  --seed <n>        rng seed (default $ESCM_SEED, else 0)
  --clusters <n>    cluster count (default: motions in the file header)
  --out-dir <dir>   output directory (default .)

benchmark flags:
  --methods <list>  comma-separated method tokens: static, affect, cesm,
                    lstm, affect-dist, or per-learner forms such as
                    static-omp (default static,affect,cesm,lstm)
  --protocol <p>    smoothing | test1 | test2 (default smoothing)
  --out <base>      output base path (default benchmark)
  --seed <n>        rng seed (default $ESCM_SEED, else 0)
  --jobs <n>        worker threads (default: all cores)

exit codes: 0 success, 2 usage/config/data error, 3 training divergence
";

/// Entry point used by the `escm` binary: `args` excludes the program name.
/// Returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn dispatch(args: &[String]) -> Result<()> {
    let Some(command) = args.first() else {
        return Err(Error::Usage(format!("missing command\n{USAGE}")));
    };
    match command.as_str() {
        "synth" => cmd_synth(&args[1..], args),
        "train" => cmd_train(&args[1..], args),
        "benchmark" => cmd_benchmark(&args[1..], args),
        "help" | "--help" | "-h" => {
            print!("{USAGE}");
            Ok(())
        }
        other => Err(Error::Usage(format!("unknown command '{other}'\n{USAGE}"))),
    }
}

// ---------------------------------------------------------------------------
// Flag parsing

#[derive(Debug)]
struct ParsedArgs {
    positionals: Vec<String>,
    flags: BTreeMap<&'static str, String>,
}

fn parse_flags(args: &[String], allowed: &'static [&'static str]) -> Result<ParsedArgs> {
    let mut positionals = Vec::new();
    let mut flags = BTreeMap::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        if let Some(body) = arg.strip_prefix("--") {
            let (name, inline) = match body.split_once('=') {
                Some((n, v)) => (n, Some(v.to_string())),
                None => (body, None),
            };
            let Some(&canonical) = allowed.iter().find(|&&f| f == name) else {
                let expected: Vec<String> = allowed.iter().map(|f| format!("--{f}")).collect();
                return Err(Error::Usage(format!(
                    "unknown flag --{name} (expected one of: {})",
                    expected.join(", ")
                )));
            };
            let value = match inline {
                Some(v) => v,
                None => it
                    .next()
                    .cloned()
                    .ok_or_else(|| Error::Usage(format!("flag --{name} needs a value")))?,
            };
            if flags.insert(canonical, value).is_some() {
                return Err(Error::Usage(format!("flag --{name} given twice")));
            }
        } else {
            positionals.push(arg.clone());
        }
    }
    Ok(ParsedArgs { positionals, flags })
}

impl ParsedArgs {
    fn str_flag(&self, name: &str) -> Option<&str> {
        self.flags.get(name).map(String::as_str)
    }

    fn usize_flag(&self, name: &str) -> Result<Option<usize>> {
        self.flags
            .get(name)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::Usage(format!("flag --{name}: invalid integer {v:?}")))
            })
            .transpose()
    }

    fn u64_flag(&self, name: &str) -> Result<Option<u64>> {
        self.flags
            .get(name)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| Error::Usage(format!("flag --{name}: invalid integer {v:?}")))
            })
            .transpose()
    }

    fn f64_flag(&self, name: &str) -> Result<Option<f64>> {
        self.flags
            .get(name)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Usage(format!("flag --{name}: invalid number {v:?}")))
            })
            .transpose()
    }
}

/// Seed precedence: explicit flag, then the `ESCM_SEED` environment
/// variable, then 0.
fn resolve_seed(explicit: Option<u64>) -> Result<u64> {
    match explicit {
        Some(s) => Ok(s),
        None => seed_from_env(std::env::var("ESCM_SEED").ok().as_deref()),
    }
}

fn seed_from_env(value: Option<&str>) -> Result<u64> {
    match value {
        None => Ok(0),
        Some(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| Error::Usage(format!("ESCM_SEED is set but not an integer: {v:?}"))),
    }
}

// ---------------------------------------------------------------------------
// Run manifest

#[derive(Debug, Serialize)]
struct RunManifest {
    tool: &'static str,
    tool_version: &'static str,
    command_line: Vec<String>,
    resolved_config: serde_json::Value,
    seeds: Vec<u64>,
    /// Input path -> SHA-256 of the file bytes.
    input_digests: BTreeMap<String, String>,
    outputs: Vec<String>,
}

impl RunManifest {
    fn new(command_line: &[String], resolved_config: serde_json::Value, seeds: Vec<u64>) -> Self {
        RunManifest {
            tool: "escm",
            tool_version: env!("CARGO_PKG_VERSION"),
            command_line: command_line.to_vec(),
            resolved_config,
            seeds,
            input_digests: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    fn add_input(&mut self, path: &Path) -> Result<()> {
        self.input_digests
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Serialize to pretty JSON; field order is fixed and maps are sorted,
    /// so identical runs produce byte-identical manifests.
    fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("manifest serialization failed: {e}")))?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn manifest_path(base: &Path) -> PathBuf {
    let mut name = base
        .file_name()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    base.with_file_name(name)
}

// ---------------------------------------------------------------------------
// synth

fn cmd_synth(rest: &[String], full: &[String]) -> Result<()> {
    let parsed = parse_flags(rest, &[])?;
    let [config_path, out_path] = parsed.positionals.as_slice() else {
        return Err(Error::Usage(
            "synth expects exactly two arguments: <config> <out>".into(),
        ));
    };
    let config_path = Path::new(config_path);
    let out_path = Path::new(out_path);

    let text = std::fs::read_to_string(config_path)?;
    let cfg = parse_synth_config(&text)?;
    let seq = synth_evolving(&cfg)?;
    let traj = to_trajectories(&seq)?;
    save_sequence(out_path, &traj)?;

    let mut manifest = RunManifest::new(
        full,
        serde_json::json!({
            "ambient_dim": cfg.ambient_dim,
            "points_per_subspace": cfg.points_per_subspace,
            "subspace_dims": cfg.subspace_dims,
            "steps": cfg.steps,
            "rotation_rate": cfg.rotation_rate,
            "noise_sigma": cfg.noise_sigma,
            "seed": cfg.seed,
        }),
        vec![cfg.seed],
    );
    manifest.add_input(config_path)?;
    manifest.add_output(out_path);
    manifest.write(&manifest_path(out_path))?;

    println!(
        "wrote {}: {} steps, {} points, {} motions",
        out_path.display(),
        seq.len(),
        seq.n_points(),
        seq.n_motions
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// train

const TRAIN_FLAGS: &[&str] = &[
    "lambda", "hidden", "lr", "epochs", "window", "stride", "seed", "clusters", "out-dir",
];

fn cmd_train(rest: &[String], full: &[String]) -> Result<()> {
    let parsed = parse_flags(rest, TRAIN_FLAGS)?;
    let [input] = parsed.positionals.as_slice() else {
        return Err(Error::Usage(
            "train expects exactly one argument: <input trajectory file>".into(),
        ));
    };
    let input = Path::new(input);
    let out_dir = PathBuf::from(parsed.str_flag("out-dir").unwrap_or("."));

    let traj = load_sequence(input)?;
    let clusters = match parsed.usize_flag("clusters")? {
        Some(0) => return Err(Error::Usage("flag --clusters: must be >= 1".into())),
        Some(k) => k,
        None => traj.n_motions,
    };
    let seq = preprocess(&traj, clusters)?;
    let t_total = seq.len();
    let n = seq.n_points();

    let seed = resolve_seed(parsed.u64_flag("seed")?)?;
    let cfg = TrainConfig {
        lambda: parsed.f64_flag("lambda")?.unwrap_or(0.1),
        learning_rate: parsed.f64_flag("lr")?.unwrap_or(1e-3),
        epochs: parsed.usize_flag("epochs")?.unwrap_or(300),
        hidden: parsed
            .usize_flag("hidden")?
            .unwrap_or_else(|| default_hidden(n)),
        grad_clip: 5.0,
        seed,
        optimizer: Optimizer::default_adam(),
    };
    cfg.validate()?;
    let window = parsed
        .usize_flag("window")?
        .unwrap_or_else(|| t_total.min(8));
    let stride = parsed.usize_flag("stride")?.unwrap_or(1);

    let outcome = train_sequence(&seq, window, stride, &cfg)?;

    // Cluster every step; score it when ground truth is available.
    let mut step_labels = Vec::with_capacity(t_total);
    let mut step_errors: Vec<Option<f64>> = Vec::with_capacity(t_total);
    for (idx, coeff) in outcome.coeffs.iter().enumerate() {
        let aff = affinity(coeff);
        let pred = spectral_cluster(&aff, clusters, derive_seed(seed, idx as u64 + 1))?;
        let err = match &seq.snapshots[idx].labels {
            Some(truth_vec) => {
                let truth = ClusterLabels::new(truth_vec.clone(), traj.n_motions)?;
                Some(clustering_error(&pred, &truth)?)
            }
            None => None,
        };
        step_labels.push(pred);
        step_errors.push(err);
    }

    std::fs::create_dir_all(&out_dir)?;
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());

    let ckpt_path = out_dir.join(format!("{stem}.ckpt"));
    outcome.model.save_checkpoint(&ckpt_path)?;

    // One line per step, N space-separated cluster ids.
    let labels_path = out_dir.join(format!("{stem}.labels"));
    let mut labels_text = String::new();
    for labels in &step_labels {
        let rendered: Vec<String> = labels.labels.iter().map(|l| l.to_string()).collect();
        labels_text.push_str(&rendered.join(" "));
        labels_text.push('\n');
    }
    std::fs::write(&labels_path, labels_text)?;

    let have_truth = step_errors.iter().all(|e| e.is_some());
    let errors_path = out_dir.join(format!("{stem}.errors"));
    if have_truth {
        let mut errors_text = String::new();
        for (idx, err) in step_errors.iter().enumerate() {
            errors_text.push_str(&format!("{} {:.2}\n", idx + 1, err.unwrap()));
        }
        std::fs::write(&errors_path, errors_text)?;
    }

    let mut manifest = RunManifest::new(
        full,
        serde_json::json!({
            "lambda": cfg.lambda,
            "learning_rate": cfg.learning_rate,
            "epochs": cfg.epochs,
            "hidden": cfg.hidden,
            "grad_clip": cfg.grad_clip,
            "optimizer": "adam(beta1=0.9, beta2=0.999, eps=1e-8)",
            "window": window,
            "stride": stride,
            "seed": seed,
            "clusters": clusters,
        }),
        vec![seed],
    );
    manifest.add_input(input)?;
    manifest.add_output(&ckpt_path);
    manifest.add_output(&labels_path);
    if have_truth {
        manifest.add_output(&errors_path);
    }
    manifest.write(&manifest_path(&out_dir.join(stem.as_str())))?;

    let final_loss = outcome.epoch_losses.last().copied().unwrap_or(f64::NAN);
    match mean_of(&step_errors) {
        Some(mean_err) => println!(
            "trained {stem}: T={t_total} N={n} final epoch loss {final_loss:.6} mean error {mean_err:.2}%"
        ),
        None => println!("trained {stem}: T={t_total} N={n} final epoch loss {final_loss:.6}"),
    }
    Ok(())
}

fn mean_of(errors: &[Option<f64>]) -> Option<f64> {
    let vals: Vec<f64> = errors.iter().copied().flatten().collect();
    if vals.is_empty() || vals.len() != errors.len() {
        return None;
    }
    Some(vals.iter().sum::<f64>() / vals.len() as f64)
}

// ---------------------------------------------------------------------------
// benchmark

const BENCH_FLAGS: &[&str] = &["methods", "protocol", "out", "seed", "jobs"];

fn cmd_benchmark(rest: &[String], full: &[String]) -> Result<()> {
    let parsed = parse_flags(rest, BENCH_FLAGS)?;
    let [dir] = parsed.positionals.as_slice() else {
        return Err(Error::Usage(
            "benchmark expects exactly one argument: <dataset directory>".into(),
        ));
    };
    let dir = Path::new(dir);

    if let Some(jobs) = parsed.usize_flag("jobs")? {
        if jobs == 0 {
            return Err(Error::Usage("flag --jobs: must be >= 1".into()));
        }
        // A pool may already exist (e.g. when embedded); the run then
        // proceeds on it.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }

    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "traj"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Input(format!(
            "no trajectory files (*.traj) found in {}",
            dir.display()
        )));
    }

    let methods_list = parsed
        .str_flag("methods")
        .unwrap_or("static,affect,cesm,lstm");
    let methods = MethodSpec::parse_list(methods_list)?;
    let protocol = Protocol::parse(parsed.str_flag("protocol").unwrap_or("smoothing"))?;
    let seed = resolve_seed(parsed.u64_flag("seed")?)?;
    let out_base = PathBuf::from(parsed.str_flag("out").unwrap_or("benchmark"));

    let mut manifest = RunManifest::new(
        full,
        serde_json::json!({
            "dataset": paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "methods": methods_list,
            "resolved_methods": methods.iter().map(|m| format!("{m:?}")).collect::<Vec<_>>(),
            "protocol": protocol.name(),
            "seed": seed,
        }),
        vec![seed],
    );

    let mut dataset = Vec::with_capacity(paths.len());
    for path in &paths {
        let traj = load_sequence(path)?;
        manifest.add_input(path)?;
        dataset.push(preprocess(&traj, traj.n_motions)?);
    }

    let report = run_benchmark(&dataset, &methods, protocol, seed)?;

    let csv_path = out_base.with_extension("csv");
    let md_path = out_base.with_extension("md");
    if let Some(parent) = out_base.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&csv_path, emit_report(&report, ReportFormat::Csv))?;
    let markdown = emit_report(&report, ReportFormat::Markdown);
    std::fs::write(&md_path, &markdown)?;
    manifest.add_output(&csv_path);
    manifest.add_output(&md_path);
    manifest.write(&manifest_path(&out_base))?;

    print!("{markdown}");
    Ok(())
}
