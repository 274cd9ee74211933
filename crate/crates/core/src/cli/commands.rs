use std::fs;
use std::path::Path;
use std::time::Instant;

use crate::data::{generate_synthetic, FileHeader, NormalizationMode};
use crate::error::{Error, Result};
use crate::metrics::evaluate;
use crate::trainer::{train, train_with_observer, EpochReport};

use super::artifacts::{
    read_factors, unix_ms, write_factors, write_report, write_timings, RunManifest,
};
use super::config::{parse_synth_spec, resolve, DataSource, DatasetOptions};
use super::{BenchmarkArgs, DataArgs, EvaluateArgs, SynthArgs, TrainArgs, EXIT_OK};

fn progress(report: &EpochReport) {
    eprintln!(
        "epoch {:>4}  train_rmse={:.6}  valid_rmse={:.6}  valid_mae={:.6}  mean_lambda={:.6}  {} ms",
        report.epoch,
        report.train_rmse,
        report.valid_rmse,
        report.valid_mae,
        report.mean_lambda,
        report.wall_time_ms
    );
}

pub fn cmd_train(args: &TrainArgs) -> Result<i32> {
    let (dataset, config) = match &args.from_manifest {
        Some(path) => {
            let manifest = RunManifest::read(path)?;
            (manifest.dataset, manifest.config)
        }
        None => {
            let resolved = resolve(&args.data, &args.hyper)?;
            (resolved.dataset, resolved.config)
        }
    };
    config.validate()?;
    let prepared = dataset.prepare()?;
    fs::create_dir_all(&args.out)?;

    let started = unix_ms();
    let outcome = train_with_observer(&prepared.train, &prepared.test, &config, progress)?;
    let finished = unix_ms();
    let final_eval = evaluate(&prepared.test, &outcome.factors)?;

    let factors_path = args.out.join("factors.json");
    let report_path = args.out.join("report.tsv");
    let timings_path = args.out.join("timings.tsv");
    write_factors(&factors_path, &outcome.factors)?;
    write_report(&report_path, &outcome.reports)?;
    write_timings(&timings_path, &outcome.reports)?;

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        dataset,
        config,
        started_unix_ms: started,
        finished_unix_ms: finished,
        final_eval,
        factors_path: factors_path.display().to_string(),
        report_path: report_path.display().to_string(),
        timings_path: timings_path.display().to_string(),
    };
    manifest.write(&args.out.join("manifest.json"))?;

    println!("{}", serde_json::to_string(&final_eval)?);
    Ok(EXIT_OK)
}

fn dataset_from_args(data: &DataArgs, seed: u64) -> Result<DatasetOptions> {
    let source = match (&data.data, &data.synth) {
        (Some(_), Some(_)) => {
            return Err(Error::Usage("--data and --synth are mutually exclusive".into()))
        }
        (None, None) => return Err(Error::Usage("one of --data or --synth is required".into())),
        (Some(path), None) => {
            let header = data.header.clone().unwrap_or_else(|| {
                let mut h = path.as_os_str().to_owned();
                h.push(".header.json");
                h.into()
            });
            DataSource::File { data: path.clone(), header }
        }
        (None, Some(spec)) => DataSource::Synth { spec: parse_synth_spec(spec, seed)? },
    };
    let normalize: NormalizationMode = data.normalize.as_deref().unwrap_or("minmax").parse()?;
    Ok(DatasetOptions {
        source,
        normalize,
        split_ratio: data.split.unwrap_or(0.8),
        split_seed: data.split_seed.unwrap_or(seed),
    })
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<i32> {
    let factors = read_factors(&args.factors)?;
    let dataset = dataset_from_args(&args.data, args.seed.unwrap_or(0))?;
    let subject = match args.side.as_str() {
        "all" => dataset.load_full()?.0,
        "train" => dataset.prepare()?.train,
        "test" => dataset.prepare()?.test,
        other => return Err(Error::Usage(format!("unknown side '{other}'"))),
    };
    let result = evaluate(&subject, &factors)?;
    println!("{}", serde_json::to_string(&result)?);
    Ok(EXIT_OK)
}

struct BenchRow {
    optimizer: String,
    outcome: Result<(f64, f64, usize, u64)>,
}

pub fn cmd_benchmark(args: &BenchmarkArgs) -> Result<i32> {
    let names: Vec<String> = match &args.optimizers {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
        None => ["lambda_opt", "momentum", "nesterov", "adam", "nadam"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    };
    if names.is_empty() {
        return Err(Error::Usage("optimizer list is empty".into()));
    }

    let mut rows = Vec::new();
    for name in &names {
        let mut hyper = args.hyper.clone();
        hyper.optimizer = Some(name.clone());
        let outcome = (|| {
            let resolved = resolve(&args.data, &hyper)?;
            let prepared = resolved.dataset.prepare()?;
            let t0 = Instant::now();
            let out = train(&prepared.train, &prepared.test, &resolved.config)?;
            let wall_ms = t0.elapsed().as_millis() as u64;
            let eval = evaluate(&prepared.test, &out.factors)?;
            Ok((eval.rmse, eval.mae, out.epochs_run(), wall_ms))
        })();
        if let Err(err) = &outcome {
            eprintln!("{name}: failed: {err}");
        }
        rows.push(BenchRow { optimizer: name.clone(), outcome });
    }

    let mut delimited = String::from("optimizer\trmse\tmae\tepochs\twall_time_ms\tstatus\n");
    eprintln!(
        "{:<12} {:>12} {:>12} {:>8} {:>14}  status",
        "optimizer", "rmse", "mae", "epochs", "wall_time_ms"
    );
    for row in &rows {
        match &row.outcome {
            Ok((rmse, mae, epochs, wall)) => {
                delimited
                    .push_str(&format!("{}\t{rmse}\t{mae}\t{epochs}\t{wall}\tok\n", row.optimizer));
                eprintln!(
                    "{:<12} {:>12.6} {:>12.6} {:>8} {:>14}  ok",
                    row.optimizer, rmse, mae, epochs, wall
                );
            }
            Err(err) => {
                let msg = err.to_string().replace(['\t', '\n'], " ");
                delimited.push_str(&format!("{}\t\t\t\t\t{msg}\n", row.optimizer));
                eprintln!("{:<12} {:>12} {:>12} {:>8} {:>14}  {msg}", row.optimizer, "-", "-", "-", "-");
            }
        }
    }
    print!("{delimited}");
    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        fs::write(out.join("benchmark.tsv"), &delimited)?;
    }

    if rows.iter().all(|r| r.outcome.is_err()) {
        let first = rows.into_iter().find_map(|r| r.outcome.err()).expect("all failed");
        return Err(first);
    }
    Ok(EXIT_OK)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<i32> {
    let spec = parse_synth_spec(&args.synth, args.seed.unwrap_or(0))?;
    let (observed, truth) = generate_synthetic(&spec)?;
    fs::create_dir_all(&args.out)?;

    let mut triples = String::new();
    for e in observed.entries() {
        triples.push_str(&format!("{},{},{}\n", e.row, e.col, e.value));
    }
    fs::write(args.out.join("data.csv"), triples)?;

    let header =
        FileHeader { m: spec.m, n: spec.n, delimiter: ',', has_header: false };
    fs::write(args.out.join("data.csv.header.json"), serde_json::to_string_pretty(&header)?)?;

    let mut dense = String::new();
    for i in 0..spec.m {
        let row: Vec<String> = (0..spec.n).map(|j| truth.get(i, j).to_string()).collect();
        dense.push_str(&row.join("\t"));
        dense.push('\n');
    }
    fs::write(args.out.join("truth.tsv"), dense)?;
    fs::write(args.out.join("synth.json"), serde_json::to_string_pretty(&spec)?)?;
    write_spec_note(&args.out, &spec)?;
    Ok(EXIT_OK)
}

fn write_spec_note(out: &Path, spec: &crate::data::SyntheticSpec) -> Result<()> {
    // One-line summary so a directory listing is self-describing.
    let note = format!(
        "planted rank-{} {}x{} matrix, density {}, noise sigma {}, seed {}\n",
        spec.rank, spec.m, spec.n, spec.density, spec.noise_sigma, spec.seed
    );
    fs::write(out.join("README.txt"), note)?;
    Ok(())
}
