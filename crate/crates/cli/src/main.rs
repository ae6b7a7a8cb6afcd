mod args;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::Parser;
use harsweep::dataset::{
    compare_with_reference, filter_protocol_activities, generate_synthetic, load_pamap2_dir, sample_counts,
    subject_file_name, write_subject_file, PROTOCOL_ACTIVITIES, REFERENCE_COUNTS, REFERENCE_RAW_TOTAL,
};
use harsweep::evaluation::{
    emit_reports, evaluate_fold, featurize_users, format_overlap, louo_split, sweep, train_fold, ReportOptions,
    ResultsStore, SweepOptions,
};
use harsweep::profiling::{
    median_energy, timed_run, write_energy_csv, write_timing_csv, EnergySource, PowerLog, PowerModel, ProfileCell,
};
use harsweep::{Grid, SensorStream, SyntheticSpec};

use args::{Cli, Command, DataArgs, EvalArgs, GridArgs, GridPreset, ProfileArgs, SweepArgs};

const DEFAULT_SYNTH_SEED: u64 = 42;

const EXIT_RUNTIME: u8 = 1;
const EXIT_INVALID_GRID: u8 = 3;
const EXIT_MISSING_DATA: u8 = 4;
const EXIT_UNWRITABLE: u8 = 5;
const EXIT_VALIDATION_FAILED: u8 = 6;

#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self {
            code: EXIT_RUNTIME,
            error,
        }
    }
}

impl From<harsweep::Error> for Failure {
    fn from(error: harsweep::Error) -> Self {
        let code = match error {
            harsweep::Error::InvalidGrid(_) | harsweep::Error::InvalidWindow(_) => EXIT_INVALID_GRID,
            harsweep::Error::TooFewUsers(_) => EXIT_MISSING_DATA,
            _ => EXIT_RUNTIME,
        };
        Self {
            code,
            error: error.into(),
        }
    }
}

trait Categorize<T> {
    fn exit_code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Categorize<T> for Result<T, E> {
    fn exit_code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate { data_dir } => cmd_validate(&data_dir),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Profile(a) => cmd_profile(a),
        Command::Synth { spec, seed, out } => cmd_synth(spec.as_deref(), seed, &out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

fn load_streams(data: &DataArgs, seed: Option<u64>) -> Result<(Vec<SensorStream>, u64), Failure> {
    if let Some(path) = &data.synthetic {
        let mut spec = SyntheticSpec::load(path).exit_code(EXIT_MISSING_DATA)?;
        if let Some(s) = seed {
            spec.seed = s;
        }
        let streams = generate_synthetic(&spec)?;
        return Ok((streams, spec.seed));
    }
    let Some(dir) = &data.data_dir else {
        return Err(Failure {
            code: EXIT_MISSING_DATA,
            error: anyhow!("no data source: pass --data-dir, set HARSWEEP_DATA_DIR, or pass --synthetic"),
        });
    };
    let loaded = load_pamap2_dir(dir);
    for (user, e) in &loaded.failed {
        eprintln!("warning: user {user}: {e}");
    }
    if loaded.streams.is_empty() {
        return Err(Failure {
            code: EXIT_MISSING_DATA,
            error: anyhow!("no subject files could be read from {}", dir.display()),
        });
    }
    let streams = loaded.streams.into_iter().map(filter_protocol_activities).collect();
    Ok((streams, seed.unwrap_or(0)))
}

fn build_grid(args: &GridArgs) -> Result<Grid, Failure> {
    let preset = match args.grid {
        GridPreset::Full => Grid::full(),
        GridPreset::Ci => Grid::ci(),
    };
    let grid = Grid::new(
        args.windows.clone().unwrap_or(preset.windows),
        args.overlaps.clone().unwrap_or(preset.overlaps),
    )?;
    if !args.allow_off_grid {
        grid.check_standard_bounds()?;
    }
    Ok(grid)
}

fn prepare_out(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir)
        .and_then(|_| {
            let probe = dir.join(".write-probe");
            fs::write(&probe, b"")?;
            fs::remove_file(probe)
        })
        .with_context(|| format!("output directory {} is not writable", dir.display()))
        .exit_code(EXIT_UNWRITABLE)
}

fn write_file(path: &Path, body: impl FnOnce(&mut Vec<u8>) -> anyhow::Result<()>) -> CmdResult {
    let mut buf = Vec::new();
    body(&mut buf)?;
    fs::write(path, buf)
        .with_context(|| format!("writing {}", path.display()))
        .exit_code(EXIT_UNWRITABLE)
}

fn cmd_validate(dir: &Path) -> CmdResult {
    let loaded = load_pamap2_dir(dir);
    if loaded.streams.is_empty() {
        return Err(Failure {
            code: EXIT_MISSING_DATA,
            error: anyhow!("no subject files could be read from {}", dir.display()),
        });
    }
    let mut out = std::io::stdout().lock();
    let header: Vec<String> = PROTOCOL_ACTIVITIES.iter().map(|a| a.to_string()).collect();
    writeln!(out, "user,{},total,status", header.join(",")).context("stdout")?;

    let mut pass = loaded.missing.is_empty() && loaded.failed.is_empty();
    let mut protocol_total = 0;
    let mut raw_total = 0;
    for stream in &loaded.streams {
        raw_total += stream.len();
        let counts = sample_counts(stream);
        let row: Vec<usize> = PROTOCOL_ACTIVITIES.iter().map(|a| counts[a]).collect();
        let total: usize = row.iter().sum();
        protocol_total += total;
        let diffs = compare_with_reference(stream.user_id, &counts);
        pass &= diffs.is_empty();
        let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        let status = if diffs.is_empty() { "PASS" } else { "FAIL" };
        writeln!(out, "{},{},{total},{status}", stream.user_id, cells.join(",")).context("stdout")?;
        for d in diffs {
            writeln!(
                out,
                "  user {} activity {}: expected {}, found {} ({:+})",
                d.user_id,
                d.activity_id,
                d.expected,
                d.actual,
                d.actual as i64 - d.expected as i64
            )
            .context("stdout")?;
        }
    }
    for user in &loaded.missing {
        writeln!(out, "user {user}: MISSING {}", subject_file_name(*user)).context("stdout")?;
    }
    for (user, e) in &loaded.failed {
        writeln!(out, "user {user}: UNREADABLE ({e})").context("stdout")?;
    }
    let table_total: usize = REFERENCE_COUNTS.iter().flatten().sum();
    writeln!(
        out,
        "raw samples: {raw_total} (stated {REFERENCE_RAW_TOTAL}); protocol samples: {protocol_total} (reference table sum {table_total})"
    )
    .context("stdout")?;
    writeln!(out, "{}", if pass { "PASS" } else { "FAIL" }).context("stdout")?;
    if pass {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VALIDATION_FAILED,
            error: anyhow!("sample counts differ from the reference table"),
        })
    }
}

fn cmd_sweep(a: SweepArgs) -> CmdResult {
    let grid = build_grid(&a.grid)?;
    let (streams, seed) = load_streams(&a.data, Some(a.seed))?;
    prepare_out(&a.out)?;
    let mut options = SweepOptions::new(grid, seed);
    options.modes = a.mode.modes();
    options.workers = a.workers;
    options.pipeline = a.learners.pipeline();
    options.store = Some(a.out.clone());
    options.resume = a.resume;
    options.test_users = a.users.clone();
    let report = sweep(&streams, &options).map_err(|e| match e {
        harsweep::Error::Io { .. } => Failure {
            code: EXIT_UNWRITABLE,
            error: e.into(),
        },
        other => other.into(),
    })?;
    let paths = emit_reports(
        &report,
        &a.out,
        ReportOptions {
            include_single_activity: a.include_single_activity,
        },
    )
    .exit_code(EXIT_UNWRITABLE)?;
    println!(
        "{} cells ({} resumed); reports in {}",
        report.cells.len(),
        report.resumed,
        a.out.display()
    );
    log::info!("long-form report {}", paths.long.display());
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> CmdResult {
    let grid = Grid::new(vec![a.window], vec![a.overlap])?;
    if !a.allow_off_grid {
        grid.check_standard_bounds()?;
    }
    let config = grid.configs()?[0];
    let (streams, seed) = load_streams(&a.data, a.seed)?;
    let fold = louo_split(&streams)?
        .into_iter()
        .find(|f| f.test_user == a.user)
        .ok_or_else(|| Failure {
            code: EXIT_MISSING_DATA,
            error: anyhow!("user {} has no data", a.user),
        })?;
    let store = match &a.out {
        Some(dir) => {
            prepare_out(dir)?;
            Some(ResultsStore::open(dir).exit_code(EXIT_UNWRITABLE)?)
        }
        None => None,
    };
    let pipeline = a.learners.pipeline();
    println!("user,activity,window,overlap,mode,n_windows,accuracy");
    for mode in a.mode.modes() {
        let outcome = evaluate_fold(&fold, &streams, &config, mode, &pipeline, seed)?;
        let r = &outcome.result;
        let acc = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let o = format_overlap(r.overlap);
        println!("{},all,{},{o},{mode},{},{}", r.user_id, r.window_size, r.windows, acc(r.accuracy()));
        for (activity, s) in &r.per_activity {
            println!(
                "{},{activity},{},{o},{mode},{},{}",
                r.user_id,
                r.window_size,
                s.windows,
                acc(s.accuracy())
            );
        }
        if let Some(store) = &store {
            store.save(r, &outcome.records).exit_code(EXIT_UNWRITABLE)?;
        }
    }
    Ok(())
}

fn cmd_profile(a: ProfileArgs) -> CmdResult {
    let grid = build_grid(&a.grid)?;
    let source = match (&a.power_model, &a.power_log) {
        (Some(p), _) => EnergySource::Model(PowerModel::load(p)?),
        (None, Some(p)) => EnergySource::Log(PowerLog::load(p)?),
        (None, None) => EnergySource::default(),
    };
    let (streams, _) = load_streams(&a.data, a.seed)?;
    let fold = louo_split(&streams)?
        .into_iter()
        .find(|f| f.test_user == a.user)
        .ok_or_else(|| Failure {
            code: EXIT_MISSING_DATA,
            error: anyhow!("user {} has no data", a.user),
        })?;
    let test = streams.iter().find(|s| s.user_id == a.user).expect("fold user has a stream");
    prepare_out(&a.out)?;
    let pipeline = a.learners.pipeline();
    let single = rayon_single_thread()?;

    for mode in a.mode.modes() {
        let mut cells = Vec::new();
        for config in grid.configs()? {
            let features = single.install(|| featurize_users(&streams, &config, pipeline.purity));
            let model = train_fold(&fold, &features, &pipeline.ensemble)?;
            let profile = timed_run(&model, test, &config, mode, pipeline.purity, a.reps)?;
            for w in &profile.warnings {
                eprintln!("warning: {w}");
            }
            let joules = median_energy(&profile, &source)?;
            cells.push(ProfileCell {
                timing: profile.median,
                variance: profile.variance.clone(),
                joules,
                accuracy: profile.accuracy(),
            });
        }
        write_file(&a.out.join(format!("timing_{mode}.csv")), |b| {
            write_timing_csv(b, &cells).map_err(Into::into)
        })?;
        write_file(&a.out.join(format!("energy_{mode}.csv")), |b| {
            write_energy_csv(b, &cells).map_err(Into::into)
        })?;
    }
    println!("profiles in {}", a.out.display());
    Ok(())
}

fn rayon_single_thread() -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .context("building the profiling thread pool")
        .map_err(Failure::from)
}

fn cmd_synth(spec: Option<&Path>, seed: Option<u64>, out: &Path) -> CmdResult {
    let mut spec = match spec {
        Some(p) => SyntheticSpec::load(p).exit_code(EXIT_MISSING_DATA)?,
        None => SyntheticSpec::new(DEFAULT_SYNTH_SEED, 9, 12, 3000),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    let streams = generate_synthetic(&spec)?;
    prepare_out(out)?;
    for stream in &streams {
        let path = out.join(subject_file_name(stream.user_id));
        write_file(&path, |b| write_subject_file(stream, b).map_err(Into::into))?;
    }
    println!("{} subject files in {}", streams.len(), out.display());
    Ok(())
}
