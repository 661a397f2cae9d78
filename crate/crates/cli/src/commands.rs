use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};

use fedsurv::manifest::{
    cardinalities_csv, sweep_grid_csv, sweep_grid_table, write_assignment_csv,
};
use fedsurv::{
    heterogeneity_sweep, kaplan_meier, load_csv, materialize, split, ColumnMapping, Error, KmCurve,
    SplitConfig, SplitMethod, SplitSidecar, SurvivalDataset, SweepSpec,
};

use crate::args::{required, resolve, HeterogeneityArgs, KmArgs, SplitArgs, SummaryArgs};
use crate::output::{FileDigest, RunInfo, Skipped, StagedOutput};

pub const JOBS_ENV: &str = "FEDSURV_JOBS";

fn load(path: &Path, mapping: &ColumnMapping) -> anyhow::Result<SurvivalDataset> {
    load_csv(path, mapping).with_context(|| format!("{}", path.display()))
}

fn run_info(
    command: &'static str,
    argv: &[String],
    config: &impl serde::Serialize,
    seed: Option<u64>,
    inputs: Vec<FileDigest>,
    started: Instant,
) -> anyhow::Result<RunInfo> {
    Ok(RunInfo {
        command,
        command_line: argv.to_vec(),
        config: serde_json::to_value(config)?,
        seed,
        inputs,
        started,
    })
}

fn json_text(value: &impl serde::Serialize) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub fn summary(flags: SummaryArgs) -> anyhow::Result<String> {
    let args = resolve(flags.clone(), flags.config.as_deref())?;
    let input = required(args.input.as_ref(), "input")?;
    let ds = load(input, &args.mapping.mapping()?)?;
    let s = ds.summarize()?;
    if args.json {
        return json_text(&s);
    }
    let mut out = String::new();
    writeln!(out, "dataset    {}", s.name)?;
    writeln!(out, "samples    {}", s.n_samples)?;
    writeln!(out, "events     {}", s.n_events)?;
    writeln!(out, "censored   {:.1}%", s.censored_fraction * 100.0)?;
    writeln!(out, "features   {}", s.n_features)?;
    writeln!(out, "time range [{}, {}]", s.time_min, s.time_max)?;
    writeln!(out, "{s}")?;
    Ok(out)
}

fn split_config(args: &SplitArgs) -> anyhow::Result<SplitConfig> {
    let method = required(args.method, "method")?;
    if method == SplitMethod::Quantity && (args.bins.is_some() || args.bin_strategy.is_some()) {
        bail!("--bins and --bin-strategy only apply to --method label");
    }
    let config = SplitConfig::for_method(
        method,
        required(args.clients, "clients")?,
        required(args.alpha, "alpha")?,
        args.bins,
        args.bin_strategy,
    )
    .with_allocation(args.allocation.unwrap_or_default());
    config.validate()?;
    Ok(config)
}

pub fn split_cmd(flags: SplitArgs, argv: &[String]) -> anyhow::Result<String> {
    let started = Instant::now();
    let args = resolve(flags.clone(), flags.config.as_deref())?;
    let input = required(args.input.as_ref(), "input")?;
    let seed = required(args.seed, "seed")?;
    let output_dir = required(args.output_dir.as_ref(), "output-dir")?;
    let config = split_config(&args)?;
    let ds = load(input, &args.mapping.mapping()?)?;
    ds.check_writable()?;

    let assignment = split(&ds, &config, seed)?;
    let shards = materialize(&ds, &assignment)?;

    let mut staged = StagedOutput::new(output_dir)?;
    for (c, shard) in shards.iter().enumerate() {
        let mut bytes = Vec::new();
        shard.write_csv_to(&mut bytes)?;
        staged.write(&format!("client_{c:03}.csv"), &bytes)?;
    }
    let mut bytes = Vec::new();
    write_assignment_csv(&assignment, &mut bytes)?;
    staged.write("assignment.csv", &bytes)?;
    staged.write(
        "assignment.json",
        SplitSidecar::from_assignment(&assignment)
            .to_json()
            .as_bytes(),
    )?;
    let sizes = assignment.cardinalities();
    staged.write("cardinalities.csv", cardinalities_csv(&sizes).as_bytes())?;

    let resolved = SplitArgs {
        bins: config.bins,
        bin_strategy: config.bin_strategy,
        allocation: Some(config.allocation),
        ..args.clone()
    };
    let info = run_info(
        "split",
        argv,
        &resolved,
        Some(seed),
        vec![FileDigest::of_file(input)?],
        started,
    )?;
    staged.commit("split.manifest.json", info, Vec::new())?;

    let sizes: Vec<String> = sizes.iter().map(usize::to_string).collect();
    Ok(format!(
        "{} split of {} samples into {} clients written to {} (sizes {})\n",
        config.method,
        ds.len(),
        config.k,
        output_dir.display(),
        sizes.join(" ")
    ))
}

pub fn km_csv(curve: &KmCurve) -> String {
    let mut s = String::from("t,d,r,s\n");
    for p in &curve.points {
        let _ = writeln!(
            s,
            "{:?},{},{},{:?}",
            p.time, p.events, p.at_risk, p.survival
        );
    }
    s
}

/// `client_###.csv` files of a split directory, in client order.
fn shard_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).with_context(|| format!("cannot read {}", dir.display()))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let index = name
            .strip_prefix("client_")
            .and_then(|r| r.strip_suffix(".csv"))
            .filter(|i| !i.is_empty() && i.bytes().all(|b| b.is_ascii_digit()));
        if index.is_some() {
            files.push(path);
        }
    }
    // zero padding keeps lexical order for up to 1000 clients; beyond that
    // compare numerically
    files.sort_by_key(|p| {
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        (stem.len(), stem.to_string())
    });
    if files.is_empty() {
        bail!("no client_###.csv files in {}", dir.display());
    }
    Ok(files)
}

pub fn km(flags: KmArgs, argv: &[String]) -> anyhow::Result<(String, Vec<String>)> {
    let started = Instant::now();
    let args = resolve(flags.clone(), flags.config.as_deref())?;
    let output_dir = required(args.output_dir.as_ref(), "output-dir")?;
    let mapping = args.mapping.mapping()?;
    let files = match (&args.input, &args.split_dir) {
        (Some(input), None) => vec![input.clone()],
        (None, Some(dir)) => shard_files(dir)?,
        (Some(_), Some(_)) => bail!("--input and --split-dir are mutually exclusive"),
        (None, None) => bail!("missing required flag --input or --split-dir"),
    };

    let mut inputs = Vec::new();
    let mut curves = Vec::new();
    let mut skipped = Vec::new();
    let mut warnings = Vec::new();
    for path in &files {
        inputs.push(FileDigest::of_file(path)?);
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
        let reason = match load_csv(path, &mapping) {
            Ok(ds) => match kaplan_meier(&ds) {
                Ok(curve) => {
                    curves.push((format!("km_{stem}.csv"), curve));
                    continue;
                }
                Err(Error::NoEvents) => "no events".to_string(),
                Err(e) => return Err(e).with_context(|| format!("{}", path.display())),
            },
            Err(Error::EmptyDataset) => "no samples".to_string(),
            Err(e) => return Err(e).with_context(|| format!("{}", path.display())),
        };
        warnings.push(format!(
            "warning: {}: {reason}, no curve written",
            path.display()
        ));
        skipped.push(Skipped {
            path: path.display().to_string(),
            reason,
        });
    }
    if curves.is_empty() {
        return Err(Error::NoEvents).context("no input has an observed event");
    }

    let mut staged = StagedOutput::new(output_dir)?;
    for (name, curve) in &curves {
        staged.write(name, km_csv(curve).as_bytes())?;
    }
    let info = run_info("km", argv, &args, None, inputs, started)?;
    staged.commit("km.manifest.json", info, skipped)?;
    Ok((
        format!(
            "{} curve(s) written to {}\n",
            curves.len(),
            output_dir.display()
        ),
        warnings,
    ))
}

/// `--jobs`, else a valid `FEDSURV_JOBS`, else `None` for rayon's default.
pub fn resolve_jobs(flag: Option<usize>, env: Option<&str>) -> anyhow::Result<Option<usize>> {
    let jobs = match (flag, env) {
        (Some(n), _) => Some(n),
        (None, Some(text)) => Some(
            text.trim()
                .parse::<usize>()
                .with_context(|| format!("{JOBS_ENV}=`{text}` is not a thread count"))?,
        ),
        (None, None) => None,
    };
    if jobs == Some(0) {
        bail!("job count must be at least 1");
    }
    Ok(jobs)
}

pub fn heterogeneity(
    flags: HeterogeneityArgs,
    argv: &[String],
) -> anyhow::Result<(String, Vec<String>)> {
    let started = Instant::now();
    let args = resolve(flags.clone(), flags.config.as_deref())?;
    let input = required(args.input.as_ref(), "input")?;
    let seed = required(args.seed, "seed")?;
    let method = required(args.method, "method")?;
    if method == SplitMethod::Quantity && (args.bins.is_some() || args.bin_strategy.is_some()) {
        bail!("--bins and --bin-strategy only apply to --method label");
    }
    let mut spec = SweepSpec::new(
        method,
        required(args.clients_list.clone(), "clients-list")?,
        required(args.alpha_list.clone(), "alpha-list")?,
    );
    if spec.k_values.is_empty() || spec.alpha_values.is_empty() {
        bail!("--clients-list and --alpha-list need at least one value each");
    }
    spec.runs = args.runs.unwrap_or(spec.runs);
    spec.bins = args.bins;
    spec.bin_strategy = args.bin_strategy;
    spec.allocation = args.allocation.unwrap_or_default();
    spec.threshold = args.threshold.unwrap_or(spec.threshold);
    spec.master_seed = seed;
    if !(spec.threshold > 0.0 && spec.threshold < 1.0) {
        bail!("--threshold must lie strictly between 0 and 1");
    }
    let env = std::env::var(JOBS_ENV).ok();
    let jobs = resolve_jobs(args.jobs, env.as_deref())?;

    let ds = load(input, &args.mapping.mapping()?)?;
    let report = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| heterogeneity_sweep(&ds, &spec))?,
        None => heterogeneity_sweep(&ds, &spec)?,
    };

    let mut warnings = Vec::new();
    for cell in report.cells.iter().filter(|c| c.failed_runs > 0) {
        warnings.push(format!(
            "warning: K={} alpha={:?}: {} of {} runs failed ({})",
            cell.k,
            cell.alpha,
            cell.failed_runs,
            cell.runs,
            cell.first_error.as_deref().unwrap_or("unknown error")
        ));
    }

    if let Some(dir) = &args.output {
        let mut staged = StagedOutput::new(dir)?;
        staged.write("heterogeneity.csv", sweep_grid_csv(&report).as_bytes())?;
        staged.write("heterogeneity.json", json_text(&report)?.as_bytes())?;
        let resolved = HeterogeneityArgs {
            runs: Some(spec.runs),
            bins: report.bins,
            bin_strategy: report.bin_strategy,
            allocation: Some(spec.allocation),
            threshold: Some(spec.threshold),
            jobs,
            ..args.clone()
        };
        let info = run_info(
            "heterogeneity",
            argv,
            &resolved,
            Some(seed),
            vec![FileDigest::of_file(input)?],
            started,
        )?;
        staged.commit("heterogeneity.manifest.json", info, Vec::new())?;
    }
    Ok((sweep_grid_table(&report), warnings))
}
