use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use webrep_collect::{
    collect_snapshot, load_sources, load_targets, Cassette, CassetteMode, CassetteProbe, CassetteTransport,
    CollectConfig, CollectError, Collector, HttpConfig, HttpTransport, LatencyProbe, ProbeJob, ProbeLocation,
    ProbePlan, SystemClock, TcpConnectProbe, Transport,
};
use webrep_core::io::{
    emit_histogram, emit_scatter, load_appendix_fixture, load_index_values, load_indicator_set, load_snapshot_with,
    save_fixture, save_results, save_snapshot, write_histogram_csv, write_scatter_csv, DataFormat, DatasetError,
    ResultRow, StatsRecord,
};
use webrep_core::{
    bottom_k, build_default_indicator_set, descriptive_stats, rank, run_pipeline, top_k, validate_snapshot,
    IndexFlag, IndicatorSet, PipelineOptions, PopulationMode, SeriesStats, Snapshot, StdConvention,
};

use crate::args::{
    CollectArgs, Command, ComputeArgs, FixtureArgs, Format, PopulationModeArg, RankArgs, StatsArgs, StdArg,
    ValidateArgs,
};

/// A fatal error and the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

impl Failure {
    fn usage(message: impl Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn io(message: impl Display) -> Self {
        Self {
            code: EXIT_IO,
            message: message.to_string(),
        }
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        if e.is_parse_error() {
            Self::usage(e)
        } else {
            Self::io(e)
        }
    }
}

type Outcome = Result<(), Failure>;

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Compute(a) => compute(a),
        Command::Rank(a) => rank_cmd(a),
        Command::Collect(a) => collect(a),
        Command::Validate(a) => validate(a),
        Command::Stats(a) => stats(a),
        Command::Fixture(a) => fixture(a),
    }
}

/// Input paths that do not exist are configuration mistakes, not I/O
/// failures.
fn existing(path: &Path) -> Result<&Path, Failure> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Failure::usage(format!("{}: no such file or directory", path.display())))
    }
}

fn output_format(format: Option<Format>, path: &Path) -> DataFormat {
    match format {
        Some(Format::Csv) => DataFormat::Csv,
        Some(Format::Json) => DataFormat::Json,
        None => DataFormat::from_path(path),
    }
}

fn std_convention(arg: StdArg) -> StdConvention {
    match arg {
        StdArg::Population => StdConvention::Population,
        StdArg::Sample => StdConvention::Sample,
    }
}

fn indicator_set(path: Option<&Path>) -> Result<IndicatorSet, Failure> {
    match path {
        Some(p) => Ok(load_indicator_set(existing(p)?)?),
        None => Ok(build_default_indicator_set()),
    }
}

fn load_snapshot_arg(input: &Path, indicators: Option<&Path>) -> Result<Snapshot, Failure> {
    let set = indicators.map(|p| indicator_set(Some(p))).transpose()?;
    let input = existing(input)?;
    Ok(load_snapshot_with(input, DataFormat::from_path(input), set.as_ref())?)
}

fn stats_line(s: &SeriesStats, convention: StdConvention) -> String {
    let name = match convention {
        StdConvention::Population => "population",
        StdConvention::Sample => "sample",
    };
    format!(
        "count={} mean={:.6} max={:.6} min={:.6} std={:.6} std_convention={name}",
        s.count, s.mean, s.max, s.min, s.std
    )
}

fn compute(a: ComputeArgs) -> Outcome {
    let convention = std_convention(a.std_convention);
    let (rows, stats) = if a.from_fixture {
        let fixture = load_appendix_fixture();
        let stats = descriptive_stats(&fixture.values(), convention).map_err(Failure::usage)?;
        (fixture.to_rows(), stats)
    } else {
        let input = a.input.as_deref().expect("clap requires --input without --from-fixture");
        let snapshot = load_snapshot_arg(input, a.indicators.as_deref())?;
        let mode = match a.population_mode {
            PopulationModeArg::Formula => PopulationMode::FormulaLiteral,
            PopulationModeArg::Text => PopulationMode::TextLiteral,
        };
        let out = run_pipeline::<f64>(&snapshot, PipelineOptions::new(mode, convention)).map_err(Failure::usage)?;
        if !out.degenerate_indicators.is_empty() {
            log::warn!(
                "{:?}: constant indicators left out of every index: {}",
                IndexFlag::DegenerateIndicatorsExcluded,
                out.degenerate_indicators.join(", ")
            );
        }
        let mut flagged: BTreeMap<IndexFlag, Vec<&str>> = BTreeMap::new();
        for r in &out.results {
            for &flag in &r.flags {
                flagged.entry(flag).or_default().push(&r.slug);
            }
        }
        for (flag, slugs) in flagged.into_iter().filter(|(f, _)| *f != IndexFlag::DegenerateIndicatorsExcluded) {
            log::warn!("{flag:?}: {}", slugs.join(", "));
        }
        (out.results.iter().map(ResultRow::from_result).collect(), out.stats)
    };
    println!("{}", stats_line(&stats, convention));
    if let Some(output) = &a.output {
        let record = StatsRecord::new(&stats, convention);
        save_results(&rows, &record, output, output_format(a.format, output))?;
        log::info!("wrote {} results to {}", rows.len(), output.display());
    }
    Ok(())
}

fn index_rows(input: Option<&Path>, from_fixture: bool) -> Result<Vec<ResultRow>, Failure> {
    if from_fixture {
        return Ok(load_appendix_fixture().to_rows());
    }
    let input = existing(input.expect("clap requires --input without --from-fixture"))?;
    Ok(load_index_values(input, DataFormat::from_path(input))?)
}

fn print_ranking(title: &str, ranking: &webrep_core::Ranking) {
    println!("# {title}");
    println!("rank\tslug\tname\tfinal_index");
    for e in &ranking.entries {
        println!("{}\t{}\t{}\t{:.6}", e.rank, e.slug, e.name, e.value);
    }
}

fn rank_cmd(a: RankArgs) -> Outcome {
    let rows = index_rows(a.input.as_deref(), a.from_fixture)?;
    let ranking = rank("ranking", &rows);
    if a.top.is_none() && a.bottom.is_none() {
        print_ranking("ranking", &ranking);
    }
    if let Some(k) = a.top {
        let top = top_k(&ranking, k as usize).map_err(Failure::usage)?;
        print_ranking(&format!("top {k}"), &top);
    }
    if let Some(k) = a.bottom {
        let bottom = bottom_k(&ranking, k as usize).map_err(Failure::usage)?;
        print_ranking(&format!("bottom {k}"), &bottom);
    }
    Ok(())
}

fn parse_weights(spec: &str) -> Result<Vec<ProbeLocation>, Failure> {
    spec.split(',')
        .map(|pair| {
            let (id, w) = pair
                .split_once('=')
                .ok_or_else(|| Failure::usage(format!("probe weight `{pair}` is not location=weight")))?;
            let weight = w
                .trim()
                .parse::<f64>()
                .map_err(|e| Failure::usage(format!("probe weight `{pair}`: {e}")))?;
            Ok(ProbeLocation {
                id: id.trim().to_owned(),
                weight,
            })
        })
        .collect()
}

fn collect_failure(e: CollectError) -> Failure {
    match e {
        CollectError::Input { ref message, .. } if message.contains("No such file") => Failure::io(e),
        _ => Failure::usage(e),
    }
}

fn collect(a: CollectArgs) -> Outcome {
    let targets = load_targets(existing(&a.targets)?).map_err(collect_failure)?;
    let sources = match &a.sources {
        Some(p) => load_sources(existing(p)?).map_err(collect_failure)?,
        None => Vec::new(),
    };
    let set = indicator_set(a.indicators.as_deref())?;

    let plan = if a.probe {
        let locations = match &a.probe_weights {
            Some(spec) => parse_weights(spec)?,
            None => ProbePlan::default_plan().locations,
        };
        Some(
            ProbePlan::new(
                locations,
                a.probe_attempts as usize,
                Duration::from_millis(a.probe_spread_ms),
            )
            .map_err(Failure::usage)?,
        )
    } else {
        None
    };

    let live = || -> Result<Arc<dyn Transport>, Failure> {
        Ok(Arc::new(HttpTransport::new(HttpConfig::default()).map_err(Failure::io)?))
    };
    let tcp: Arc<dyn LatencyProbe> = Arc::new(TcpConnectProbe {
        port: a.probe_port,
        ..TcpConnectProbe::default()
    });
    let (transport, prober): (Arc<dyn Transport>, Arc<dyn LatencyProbe>) = match &a.cassette {
        Some(dir) => {
            if a.replay {
                existing(dir)?;
            }
            let cassette = Arc::new(Cassette::open(dir).map_err(Failure::io)?);
            if a.replay {
                (
                    Arc::new(CassetteTransport::replay(cassette.clone())),
                    Arc::new(CassetteProbe::new(cassette, CassetteMode::Replay, None)),
                )
            } else if a.record {
                (
                    Arc::new(CassetteTransport::record(cassette.clone(), live()?)),
                    Arc::new(CassetteProbe::new(cassette, CassetteMode::Record, Some(tcp))),
                )
            } else {
                (Arc::new(CassetteTransport::passthrough(cassette, live()?)), tcp)
            }
        }
        None => (live()?, tcp),
    };

    let collector = Collector::new(transport, Arc::new(SystemClock::new()));
    let job = plan.as_ref().map(|plan| ProbeJob {
        plan,
        probe: prober.as_ref(),
        indicator_id: a.probe_indicator.clone(),
    });
    let config = CollectConfig {
        parallelism: a.parallelism as usize,
        label: a.label.clone(),
    };
    let report = collect_snapshot(&collector, &targets, &sources, job, &set, &config).map_err(collect_failure)?;

    for issue in report.issues.iter().filter(|i| i.source_id != webrep_collect::snapshot::UNSOURCED) {
        log::warn!("{issue}");
    }
    let cells = report.snapshot.entities.len() * set.len();
    let missing: usize = report
        .snapshot
        .entities
        .iter()
        .map(|e| e.values.values().filter(|v| v.is_missing()).count())
        .sum();
    println!("snapshot {}", report.snapshot.content_hash());
    println!("cells={cells} collected={} missing={missing}", cells - missing);
    if let Some(output) = &a.output {
        save_snapshot(&report.snapshot, output, output_format(a.format, output))?;
    }
    Ok(())
}

fn validate(a: ValidateArgs) -> Outcome {
    let snapshot = load_snapshot_arg(&a.input, a.indicators.as_deref())?;
    let warnings = validate_snapshot(&snapshot).map_err(Failure::usage)?;
    for w in &warnings {
        println!("{w}");
    }
    println!("{} warnings", warnings.len());
    Ok(())
}

fn stats(a: StatsArgs) -> Outcome {
    let convention = std_convention(a.std_convention);
    let values: Vec<f64> = index_rows(a.input.as_deref(), a.from_fixture)?
        .iter()
        .map(|r| r.final_index)
        .collect();
    let s = descriptive_stats(&values, convention).map_err(Failure::usage)?;
    println!("{}", stats_line(&s, convention));
    if let Some(path) = &a.histogram {
        let bins = emit_histogram(&values, a.bins as usize, None).map_err(Failure::usage)?;
        write_histogram_csv(&bins, path)?;
    }
    if let Some(path) = &a.scatter {
        let points = emit_scatter(&values).map_err(Failure::usage)?;
        write_scatter_csv(&points, path)?;
    }
    Ok(())
}

fn fixture(a: FixtureArgs) -> Outcome {
    let fixture = load_appendix_fixture();
    if !fixture.is_complete() {
        log::warn!(
            "fixture has {} rows but declares {} institutions",
            fixture.row_count,
            fixture.declared_total
        );
    }
    save_fixture(&fixture, &a.output, output_format(a.format, &a.output))?;
    log::info!("wrote {} rows to {}", fixture.row_count, a.output.display());
    Ok(())
}
