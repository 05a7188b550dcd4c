mod args;
mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use vibmon::pipeline::{
    digest, evaluate, extract_features, load_bundle, load_dataset, save_bundle, split, sweep, train_all, FeatureTable,
    SweepParameter, SyntheticBenchmark,
};
use vibmon::signal::{
    generate_synthetic, load_signal, save_binary, segment, DatasetManifest, FaultClass, ManifestEntry, Segment,
    VibrationSignal, DEFAULT_REVOLUTIONS, DEFAULT_RPM, DEFAULT_SAMPLE_RATE_HZ,
};

use args::{Cli, Command, SweepParam};
use config::Resolved;

/// Usage and configuration problems exit with 2, failures while running with 3.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<vibmon::Error> for Failure {
    fn from(e: vibmon::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn usage(e: vibmon::Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format(|buf, record| writeln!(buf, "{}: {}", record.level().as_str().to_lowercase(), record.args()))
        .init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = Resolved::new(&cli.global)?;
    match &cli.command {
        Command::Ingest { manifest } => cmd_ingest(&cfg, manifest.as_ref()),
        Command::Synth {
            duration,
            classes,
            sample_rate,
            rpm,
        } => cmd_synth(&cfg, *duration, classes, *sample_rate, *rpm),
        Command::Extract { manifest, features } => {
            let spec = cfg.feature_spec_or_default(features)?;
            let out = cfg.out_dir()?;
            let manifest = require_manifest(&cfg, manifest.as_ref())?;
            let data = load_dataset(&DatasetManifest::load(&manifest).map_err(usage)?)?;
            report_failures(&data.failures);
            let table = extract_features(&data.segments, data.sample_rate_hz, &spec)?;
            let path = out.join("features.csv");
            table.save_csv(&path)?;
            println!("features: {} rows x {} ({spec}) -> {}", table.len(), spec.vector_dim(), path.display());
            Ok(())
        }
        Command::Train {
            manifest,
            table,
            train_fraction,
            features,
            classifiers,
        } => {
            let seed = cfg.seed()?;
            let spec = cfg.feature_spec_or_default(features)?;
            let train_config = cfg.train_config(classifiers, seed)?;
            let fraction = cfg.train_fraction(*train_fraction)?;
            let out = cfg.out_dir()?;
            let (train, test, created_from) = match table {
                Some(path) => {
                    let t = FeatureTable::load_csv(&require_file(path)?, spec)?;
                    let labels = t
                        .labels()
                        .into_iter()
                        .collect::<Option<Vec<_>>>()
                        .ok_or_else(|| Failure::Usage("training table has unlabeled rows".into()))?;
                    let parts = split(&labels, fraction, seed)?;
                    (t.subset(&parts.train), t.subset(&parts.test), None)
                }
                None => {
                    let manifest = require_manifest(&cfg, manifest.as_ref())?;
                    let bytes = std::fs::read(&manifest).map_err(|e| Failure::Usage(e.to_string()))?;
                    let data = load_dataset(&DatasetManifest::load(&manifest).map_err(usage)?)?;
                    report_failures(&data.failures);
                    let labels: Vec<FaultClass> = data.segments.iter().map(|s| s.label.expect("manifest labels")).collect();
                    let parts = split(&labels, fraction, seed)?;
                    let pick = |idx: &[usize]| idx.iter().map(|&i| data.segments[i].clone()).collect::<Vec<Segment>>();
                    let train = extract_features(&pick(&parts.train), data.sample_rate_hz, &spec)?;
                    let test = extract_features(&pick(&parts.test), data.sample_rate_hz, &spec)?;
                    (train, test, Some(format!("manifest:{}", digest(&bytes))))
                }
            };
            let mut bundle = train_all(&train, &train_config)?;
            if let Some(c) = created_from {
                bundle.created_from = c;
            }
            train.save_csv(&out.join("train.csv"))?;
            test.save_csv(&out.join("test.csv"))?;
            let path = out.join("model.vdmb");
            save_bundle(&bundle, &path)?;
            let names: Vec<&str> = bundle.classifiers().iter().map(|k| k.name()).collect();
            println!(
                "trained {} on {} segments ({} held out) with {spec} -> {}",
                names.join(","),
                train.len(),
                test.len(),
                path.display()
            );
            Ok(())
        }
        Command::Eval {
            bundle,
            table,
            features,
        } => {
            let out = cfg.out_dir()?;
            let bundle_path = require_file(&bundle.clone().unwrap_or_else(|| out.join("model.vdmb")))?;
            let table_path = require_file(&table.clone().unwrap_or_else(|| out.join("test.csv")))?;
            let b = load_bundle(&bundle_path)?;
            let spec = cfg.feature_spec(features)?.unwrap_or(b.feature_spec);
            b.check_spec(&spec)?;
            let t = FeatureTable::load_csv(&table_path, spec)?;
            let eval = evaluate(&b, &t)?;
            let mut summary = String::from("classifier,accuracy\n");
            for (kind, m) in &eval.results {
                write_file(&out.join(format!("confusion_{kind}.csv")), m.to_csv().as_bytes())?;
                summary.push_str(&format!("{kind},{:.4}\n", m.accuracy()));
                println!("{}", m.render(&kind.name().to_uppercase()));
            }
            write_file(&out.join("accuracy.csv"), summary.as_bytes())?;
            Ok(())
        }
        Command::Sweep {
            manifest,
            param,
            from,
            to,
            train_fraction,
            classifiers,
        } => {
            let seed = cfg.seed()?;
            let train_config = cfg.train_config(classifiers, seed)?;
            let fraction = cfg.train_fraction(*train_fraction)?;
            let parameter = match param {
                SweepParam::Mfd => SweepParameter::MfdSize,
                SweepParam::Mfcc => SweepParameter::MfccCount,
            };
            let defaults = parameter.default_values();
            let lo = from.unwrap_or(defaults[0]);
            let hi = to.unwrap_or(*defaults.last().expect("non-empty range"));
            if lo > hi || lo == 0 {
                return Err(Failure::Usage(format!("invalid sweep range {lo}..={hi}")));
            }
            let values: Vec<usize> = (lo..=hi).collect();
            for &v in &values {
                parameter.spec_for(v).validate().map_err(usage)?;
            }
            let out = cfg.out_dir()?;
            let manifest = require_manifest(&cfg, manifest.as_ref())?;
            let data = load_dataset(&DatasetManifest::load(&manifest).map_err(usage)?)?;
            report_failures(&data.failures);
            let result = sweep(parameter, &values, &data.segments, data.sample_rate_hz, &train_config, fraction, seed)?;
            let path = out.join(format!("sweep_{}.csv", result.parameter_name));
            write_file(&path, result.to_csv().as_bytes())?;
            print!("{}", result.to_csv());
            for k in &result.classifiers {
                println!(
                    "{k}: best {} = {}, spread {:.2} points",
                    result.parameter_name,
                    result.best_value(*k).expect("present"),
                    result.spread(*k).expect("present")
                );
            }
            Ok(())
        }
        Command::Predict {
            bundle,
            manifest,
            input,
            sample_rate,
            rpm,
            features,
        } => {
            let b = load_bundle(&require_file(bundle)?)?;
            let spec = cfg.feature_spec(features)?.unwrap_or(b.feature_spec);
            b.check_spec(&spec)?;
            let (segments, rate) = if input.is_empty() {
                let manifest = require_manifest(&cfg, manifest.as_ref())?;
                let data = load_dataset(&DatasetManifest::load(&manifest).map_err(usage)?)?;
                report_failures(&data.failures);
                (data.segments, data.sample_rate_hz)
            } else {
                let rate = sample_rate.or(cfg.file.sample_rate_hz).unwrap_or(DEFAULT_SAMPLE_RATE_HZ);
                let rpm = rpm.or(cfg.file.rpm).unwrap_or(DEFAULT_RPM);
                let mut segments = Vec::new();
                for path in input {
                    let sig = load_unlabeled(&require_file(path)?, rate, rpm)?;
                    segments.extend(segment(&sig, DEFAULT_REVOLUTIONS)?);
                }
                (segments, rate)
            };
            let table = extract_features(&segments, rate, &spec)?;
            let mut out = std::io::stdout().lock();
            let result = (|| -> std::io::Result<()> {
                writeln!(out, "segment,classifier,class,score_normal,score_inner,score_outer,score_ball")?;
                for row in &table.rows {
                    let decisions = match b.predict(row) {
                        Ok(d) => d,
                        Err(e) => {
                            eprintln!("skipped {}: {e}", row.source);
                            continue;
                        }
                    };
                    for (kind, d) in decisions {
                        let scores: Vec<String> = FaultClass::ALL
                            .iter()
                            .map(|c| d.score(*c).map_or_else(String::new, |s| format!("{s:.6}")))
                            .collect();
                        writeln!(out, "{},{kind},{},{}", row.source, d.class, scores.join(","))?;
                    }
                }
                out.flush()
            })();
            match result {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    return Err(Failure::Runtime(format!("writing predictions: {e}")))
                }
                _ => {}
            }
            Ok(())
        }
    }
}

fn cmd_ingest(cfg: &Resolved, manifest: Option<&PathBuf>) -> Result<(), Failure> {
    let manifest_path = require_manifest(cfg, manifest)?;
    let manifest = DatasetManifest::load(&manifest_path).map_err(usage)?;
    let out = cfg.out_dir()?;
    let seg_dir = out.join("segments");
    std::fs::create_dir_all(&seg_dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", seg_dir.display())))?;

    let mut counts = [0usize; FaultClass::COUNT];
    let mut entries = Vec::new();
    for (i, entry) in manifest.entries.iter().enumerate() {
        let segs = match load_signal(&entry.path, entry).and_then(|s| segment(&s, DEFAULT_REVOLUTIONS)) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("skipped {}: {e}", entry.path.display());
                continue;
            }
        };
        let name = format!("{i:04}-{}.bin", entry.label);
        let samples: Vec<f64> = segs.iter().flat_map(|s| s.samples.iter().copied()).collect();
        save_binary(&samples, &seg_dir.join(&name))?;
        counts[entry.label.index()] += segs.len();
        entries.push(ManifestEntry {
            path: Path::new("segments").join(name),
            ..entry.clone()
        });
    }
    if entries.is_empty() {
        return Err(Failure::Usage("no segments could be read from the manifest".into()));
    }
    DatasetManifest::new(entries)?.save(&out.join("segments.toml"))?;
    let parts: Vec<String> = FaultClass::ALL.iter().map(|c| format!("{c}={}", counts[c.index()])).collect();
    println!("segments: {}", parts.join(" "));
    Ok(())
}

fn cmd_synth(
    cfg: &Resolved,
    duration: Option<f64>,
    classes: &str,
    sample_rate: Option<f64>,
    rpm: Option<f64>,
) -> Result<(), Failure> {
    let seed = cfg.seed()?;
    let duration = duration
        .or(cfg.file.duration_s)
        .unwrap_or_else(|| SyntheticBenchmark::default().duration_s());
    let rate = sample_rate.or(cfg.file.sample_rate_hz).unwrap_or(DEFAULT_SAMPLE_RATE_HZ);
    let rpm = rpm.or(cfg.file.rpm).unwrap_or(DEFAULT_RPM);
    let mut classes = classes
        .split(',')
        .map(|s| s.parse::<FaultClass>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    classes.sort();
    classes.dedup();
    let signals = classes
        .iter()
        .map(|&c| generate_synthetic(c, duration, rate, rpm, seed))
        .collect::<Result<Vec<VibrationSignal>, _>>()
        .map_err(usage)?;

    let out = cfg.out_dir()?;
    let mut entries = Vec::new();
    for (class, sig) in classes.iter().zip(&signals) {
        let name = format!("{class}.bin");
        save_binary(&sig.samples, &out.join(&name)).map_err(usage)?;
        entries.push(ManifestEntry {
            path: PathBuf::from(name),
            label: *class,
            rpm,
            sample_rate_hz: rate,
        });
    }
    DatasetManifest::new(entries)?.save(&out.join("manifest.toml")).map_err(usage)?;
    println!(
        "wrote {} recordings of {duration:.3} s and manifest.toml to {}",
        signals.len(),
        out.display()
    );
    Ok(())
}

fn load_unlabeled(path: &Path, rate: f64, rpm: f64) -> Result<VibrationSignal, Failure> {
    let meta = ManifestEntry {
        path: path.to_path_buf(),
        label: FaultClass::Normal,
        rpm,
        sample_rate_hz: rate,
    };
    let mut sig = load_signal(path, &meta).map_err(usage)?;
    sig.label = None;
    Ok(sig)
}

fn require_manifest(cfg: &Resolved, flag: Option<&PathBuf>) -> Result<PathBuf, Failure> {
    let path = cfg
        .manifest(flag)
        .ok_or_else(|| Failure::Usage("a manifest is required (--manifest or `manifest` in the config)".into()))?;
    require_file(&path)
}

fn require_file(path: &Path) -> Result<PathBuf, Failure> {
    if path.is_file() {
        Ok(path.to_path_buf())
    } else {
        Err(Failure::Usage(format!("file not found: {}", path.display())))
    }
}

fn report_failures(failures: &[(PathBuf, vibmon::Error)]) {
    for (path, e) in failures {
        eprintln!("skipped {}: {e}", path.display());
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}
