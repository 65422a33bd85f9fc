//! Configuration resolution and command entry points shared by the `fcds`
//! binary and the integration tests.
//!
//! A run is configured from up to three sources with increasing precedence:
//! built-in defaults, a flat `key=value` config file, and command-line flags
//! whose names match the file keys. Commands return their rendered output
//! (JSON document, CSV table, or verdict text) so tests can call them
//! directly; writing to `--out` happens here so file output and returned
//! text are always byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{
    generate_harary, generate_ring_clique, graph_stats, load_graph, save_graph, GenerateError,
    Graph, GraphIoError, GraphStats,
};
use crate::oracle::{verify_run, MatchingError, OracleCaps, VerifierReport, VerifyLevel};
use crate::protocol::{run_full, ProtocolError, ProtocolParams, RunOutput};

/// Version tag embedded in every JSON report.
pub const SCHEMA_VERSION: u32 = 1;

/// Exact header of sweep CSV output, one row per seed below it.
pub const CSV_HEADER: &str = "seed,rounds_total,rounds_component_id,rounds_helper,\
rounds_matching,valid_cds_count,domination_all,initial_M,final_M";

/// Anything that can stop a command. `exit_code` separates usage and input
/// problems (2) from violated runtime invariants (1).
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    GraphIo(#[from] GraphIoError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error("graph has vertex connectivity 0; a connected graph with n >= 2 is required")]
    Disconnected,
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Verify(#[from] MatchingError),
}

impl HarnessError {
    /// Process exit code this error should map to.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::GraphIo(_)
            | HarnessError::Generate(_)
            | HarnessError::Write { .. }
            | HarnessError::Config(_)
            | HarnessError::Disconnected => 2,
            HarnessError::Protocol(_) | HarnessError::Verify(_) => 1,
        }
    }
}

/// Fully resolved configuration for `run`, `sweep`, and `verify`.
#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Edge-list file holding the base graph.
    pub graph: PathBuf,
    /// Class count override; `None` derives it from vertex connectivity.
    pub t: Option<u32>,
    /// Lower-layer multiplier: `layers = max(1, ceil(lmul * log2 n))`.
    pub lmul: f64,
    /// Base RNG seed (first seed of a sweep).
    pub seed: u64,
    /// Number of consecutive seeds a sweep covers.
    pub seeds: u64,
    /// Output file; `None` prints to stdout.
    pub out: Option<PathBuf>,
    pub verify_level: VerifyLevel,
    /// Worker threads for sweeps; 0 means one per core.
    pub jobs: usize,
}

/// One configuration source; `None` fields defer to lower-precedence
/// sources and ultimately to the defaults in [`ConfigOverlay::resolve`].
#[derive(Clone, Debug, Default)]
pub struct ConfigOverlay {
    pub graph: Option<PathBuf>,
    pub t: Option<u32>,
    pub lmul: Option<f64>,
    pub seed: Option<u64>,
    pub seeds: Option<u64>,
    pub out: Option<PathBuf>,
    pub verify_level: Option<VerifyLevel>,
    pub jobs: Option<usize>,
}

/// Parses "structural" or "full".
pub fn parse_verify_level(text: &str) -> Result<VerifyLevel, HarnessError> {
    match text {
        "structural" => Ok(VerifyLevel::Structural),
        "full" => Ok(VerifyLevel::Full),
        other => Err(HarnessError::Config(format!(
            "unknown verify level {other:?}; expected structural or full"
        ))),
    }
}

impl ConfigOverlay {
    /// Reads a flat `key=value` file; `#` starts a comment, blank lines are
    /// skipped, and keys are spelled exactly like the command-line flags.
    pub fn parse_file(path: &Path) -> Result<Self, HarnessError> {
        let display = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|e| {
            HarnessError::Config(format!("cannot read config file {display}: {e}"))
        })?;
        let mut overlay = ConfigOverlay::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("{display}:{}: expected key=value", idx + 1))
            })?;
            overlay
                .set(key.trim(), value.trim())
                .map_err(|msg| HarnessError::Config(format!("{display}:{}: {msg}", idx + 1)))?;
        }
        Ok(overlay)
    }

    /// Assigns one key; used for both config files and flag merging.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("invalid value {value:?} for key {key:?}"))
        }
        match key {
            "graph" => self.graph = Some(PathBuf::from(value)),
            "t" => self.t = Some(num(key, value)?),
            "lmul" => self.lmul = Some(num(key, value)?),
            "seed" => self.seed = Some(num(key, value)?),
            "seeds" => self.seeds = Some(num(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "verify-level" => {
                self.verify_level = Some(parse_verify_level(value).map_err(|e| e.to_string())?)
            }
            "jobs" => self.jobs = Some(num(key, value)?),
            other => return Err(format!("unknown config key {other:?}")),
        }
        Ok(())
    }

    /// Field-wise merge where `self` wins over `base`.
    pub fn merged_over(self, base: ConfigOverlay) -> ConfigOverlay {
        ConfigOverlay {
            graph: self.graph.or(base.graph),
            t: self.t.or(base.t),
            lmul: self.lmul.or(base.lmul),
            seed: self.seed.or(base.seed),
            seeds: self.seeds.or(base.seeds),
            out: self.out.or(base.out),
            verify_level: self.verify_level.or(base.verify_level),
            jobs: self.jobs.or(base.jobs),
        }
    }

    /// Applies defaults and validates ranges.
    pub fn resolve(self) -> Result<RunConfig, HarnessError> {
        let graph = self
            .graph
            .ok_or_else(|| HarnessError::Config("no graph file given (--graph)".into()))?;
        let lmul = self.lmul.unwrap_or(1.0);
        if !lmul.is_finite() || lmul <= 0.0 {
            return Err(HarnessError::Config(format!(
                "lmul must be a positive finite number, got {lmul}"
            )));
        }
        if self.t == Some(0) {
            return Err(HarnessError::Config("t must be at least 1".into()));
        }
        let seeds = self.seeds.unwrap_or(1);
        if seeds == 0 {
            return Err(HarnessError::Config("seeds must be at least 1".into()));
        }
        Ok(RunConfig {
            graph,
            t: self.t,
            lmul,
            seed: self.seed.unwrap_or(0),
            seeds,
            out: self.out,
            verify_level: self.verify_level.unwrap_or(VerifyLevel::Structural),
            jobs: self.jobs.unwrap_or(0),
        })
    }
}

/// Loads the configured base graph, printing reader warnings to stderr, and
/// rejects graphs the protocol cannot run on (vertex connectivity 0).
pub fn load_base(cfg: &RunConfig) -> Result<(Graph, GraphStats), HarnessError> {
    let loaded = load_graph(&cfg.graph)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let stats = graph_stats(&loaded.graph);
    if stats.vertex_connectivity == 0 {
        return Err(HarnessError::Disconnected);
    }
    Ok((loaded.graph, stats))
}

/// Protocol parameters implied by a config for one concrete seed.
pub fn params_for(cfg: &RunConfig, stats: &GraphStats, seed: u64) -> ProtocolParams {
    let mut params = ProtocolParams::defaults(stats.n, stats.vertex_connectivity, cfg.lmul, seed);
    if let Some(t) = cfg.t {
        params.classes = t;
    }
    params
}

/// Runs the protocol once and verifies it at the requested level.
pub fn execute_run(
    g: &Graph,
    params: &ProtocolParams,
    level: VerifyLevel,
) -> Result<(RunOutput, VerifierReport), HarnessError> {
    let output = run_full(g, params)?;
    let report = verify_run(g, &output, level, OracleCaps::default())?;
    Ok((output, report))
}

/// Resolved parameters echoed into the JSON report.
#[derive(Serialize)]
struct ConfigEcho {
    graph: String,
    classes: u32,
    layers: u32,
    layer_multiplier: f64,
    seed: u64,
    verify_level: VerifyLevel,
}

/// Certified packing value: every valid class carries weight at least
/// `1/denominator`, so `valid_cds_count/denominator` is attained.
#[derive(Serialize)]
struct PackingSummary<'a> {
    valid_cds_count: u32,
    packing_size: String,
    denominator: u32,
    numerators: &'a [Vec<u32>],
}

#[derive(Serialize)]
struct RunDocument<'a> {
    schema_version: u32,
    config: ConfigEcho,
    graph_stats: &'a GraphStats,
    rounds: &'a crate::report::RoundReport,
    ml_trajectory: &'a crate::report::MlTrajectory,
    verification: &'a VerifierReport,
    packing: PackingSummary<'a>,
}

/// Renders the JSON report for one completed run. Output is deterministic:
/// field order is fixed and no clocks or machine state are embedded.
pub fn render_json(
    cfg: &RunConfig,
    stats: &GraphStats,
    output: &RunOutput,
    report: &VerifierReport,
) -> String {
    let doc = RunDocument {
        schema_version: SCHEMA_VERSION,
        config: ConfigEcho {
            graph: cfg.graph.display().to_string(),
            classes: output.params.classes,
            layers: output.params.layers,
            layer_multiplier: cfg.lmul,
            seed: output.params.seed,
            verify_level: report.level,
        },
        graph_stats: stats,
        rounds: &output.rounds,
        ml_trajectory: &output.trajectory,
        verification: report,
        packing: PackingSummary {
            valid_cds_count: report.valid_cds_count,
            packing_size: format!(
                "{}/{}",
                report.valid_cds_count, output.packing.denominator
            ),
            denominator: output.packing.denominator,
            numerators: &output.packing.numerators,
        },
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serialization cannot fail");
    text.push('\n');
    text
}

fn write_out(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(|source| HarnessError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Rendered output of a command plus whether every runtime invariant held.
/// Probabilistic shortfalls (for example a class that fails to dominate)
/// leave `sound` true; they are reported data, not errors.
#[derive(Debug)]
pub struct CommandOutcome {
    pub text: String,
    pub sound: bool,
}

/// `run`: one seed, JSON report.
pub fn cmd_run(cfg: &RunConfig) -> Result<CommandOutcome, HarnessError> {
    let (graph, stats) = load_base(cfg)?;
    let params = params_for(cfg, &stats, cfg.seed);
    let (output, report) = execute_run(&graph, &params, cfg.verify_level)?;
    let text = render_json(cfg, &stats, &output, &report);
    if let Some(path) = &cfg.out {
        write_out(path, &text)?;
    }
    Ok(CommandOutcome {
        text,
        sound: report.structurally_sound(),
    })
}

/// One sweep row; failed seeds keep their seed column and leave the rest
/// empty so partial results stay machine-readable.
fn csv_row(seed: u64, result: &Result<(RunOutput, VerifierReport), HarnessError>) -> String {
    match result {
        Ok((output, report)) => {
            let phase = &output.rounds.rounds_per_phase;
            let domination_all = report.classes.iter().all(|c| c.dominating);
            format!(
                "{seed},{},{},{},{},{},{},{},{}",
                output.rounds.rounds_total,
                phase.component_id,
                phase.helper,
                phase.matching,
                report.valid_cds_count,
                u8::from(domination_all),
                output.trajectory.initial_total(),
                output.trajectory.final_total(),
            )
        }
        Err(_) => format!("{seed},,,,,,,,"),
    }
}

/// `sweep`: consecutive seeds in parallel, CSV summary ordered by seed.
/// Structural verification always runs; per-seed failures are reported on
/// stderr and as blank rows, and the sweep continues.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<CommandOutcome, HarnessError> {
    let (graph, stats) = load_base(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {} workers: {e}", cfg.jobs)))?;
    let results: Vec<(u64, Result<(RunOutput, VerifierReport), HarnessError>)> =
        pool.install(|| {
            (0..cfg.seeds)
                .into_par_iter()
                .map(|i| {
                    let seed = cfg.seed.wrapping_add(i);
                    let params = params_for(cfg, &stats, seed);
                    (seed, execute_run(&graph, &params, VerifyLevel::Structural))
                })
                .collect()
        });

    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    let mut sound = true;
    for (seed, result) in &results {
        match result {
            Ok((_, report)) if report.structurally_sound() => {}
            Ok(_) => {
                eprintln!("seed {seed}: structural verification failed");
                sound = false;
            }
            Err(e) => {
                eprintln!("seed {seed}: {e}");
                sound = false;
            }
        }
        let _ = writeln!(text, "{}", csv_row(*seed, result));
    }
    if let Some(path) = &cfg.out {
        write_out(path, &text)?;
    }
    Ok(CommandOutcome { text, sound })
}

fn yes_no(flag: bool) -> &'static str {
    if flag {
        "yes"
    } else {
        "no"
    }
}

/// `verify`: one seed at the full oracle level, human-readable verdicts.
pub fn cmd_verify(cfg: &RunConfig) -> Result<CommandOutcome, HarnessError> {
    let (graph, stats) = load_base(cfg)?;
    let params = params_for(cfg, &stats, cfg.seed);
    let (output, report) = execute_run(&graph, &params, VerifyLevel::Full)?;

    let mut text = String::new();
    let _ = writeln!(text, "graph: {}", format_stats(&stats));
    let _ = writeln!(
        text,
        "params: classes={} layers={} seed={}",
        params.classes, params.layers, params.seed
    );
    for verdict in &report.classes {
        let _ = writeln!(
            text,
            "class {}: dominating={} connected={}{}",
            verdict.class,
            yes_no(verdict.dominating),
            yes_no(verdict.connected),
            if verdict.empty { " (empty)" } else { "" },
        );
    }
    let _ = writeln!(
        text,
        "valid classes: {} of {}",
        report.valid_cds_count, params.classes
    );
    let _ = writeln!(
        text,
        "packing: {} (size {}/{})",
        if report.packing_valid { "ok" } else { "INVALID" },
        report.valid_cds_count,
        output.packing.denominator,
    );
    let _ = writeln!(
        text,
        "components: {}",
        if report.components_consistent {
            "consistent"
        } else {
            "MISMATCH"
        }
    );
    let _ = writeln!(
        text,
        "trajectory: {}",
        if report.trajectory_consistent {
            "consistent"
        } else {
            "MISMATCH"
        }
    );
    let valid_matchings = report.matchings.iter().filter(|m| m.valid).count();
    let maximal_matchings = report
        .matchings
        .iter()
        .filter(|m| m.maximal || m.truncated)
        .count();
    let _ = writeln!(
        text,
        "matchings: {} checked, {} valid, {} maximal",
        report.matchings.len(),
        valid_matchings,
        maximal_matchings,
    );
    let path_matches = report
        .components
        .iter()
        .filter(|c| c.helper_edges_match_long_paths)
        .count();
    let _ = writeln!(
        text,
        "connector paths: {} components checked, helper edges match on {}",
        report.components.len(),
        path_matches,
    );
    let sound = report.structurally_sound();
    let _ = writeln!(text, "structurally sound: {}", yes_no(sound));
    if let Some(path) = &cfg.out {
        write_out(path, &text)?;
    }
    Ok(CommandOutcome { text, sound })
}

/// Single-line rendering of [`GraphStats`].
pub fn format_stats(stats: &GraphStats) -> String {
    let diameter = match stats.diameter {
        Some(d) => d.to_string(),
        None => "inf".into(),
    };
    format!(
        "n={} m={} max_degree={} diameter={} vertex_connectivity={}",
        stats.n, stats.m, stats.max_degree, diameter, stats.vertex_connectivity
    )
}

fn spec_num(spec: &[String], idx: usize, what: &str) -> Result<usize, HarnessError> {
    let text = spec
        .get(idx)
        .ok_or_else(|| HarnessError::Config(format!("missing {what}")))?;
    text.parse()
        .map_err(|_| HarnessError::Config(format!("invalid {what} {text:?}")))
}

/// `generate`: builds a graph from a spec (`harary N K`, `ringclique D M`,
/// or `file SRC`), writes it to `out` when given, and returns its stats
/// line.
pub fn cmd_generate(spec: &[String], out: Option<&Path>) -> Result<CommandOutcome, HarnessError> {
    let kind = spec
        .first()
        .map(String::as_str)
        .ok_or_else(|| HarnessError::Config("empty generator spec".into()))?;
    let expected_len = if kind == "file" { 2 } else { 3 };
    if spec.len() > expected_len {
        return Err(HarnessError::Config(format!(
            "unexpected extra argument {:?}",
            spec[expected_len]
        )));
    }
    let graph = match kind {
        "harary" => generate_harary(
            spec_num(spec, 1, "node count")?,
            spec_num(spec, 2, "degree")?,
        )?,
        "ringclique" => generate_ring_clique(
            spec_num(spec, 1, "clique degree")?,
            spec_num(spec, 2, "ring size")?,
        )?,
        "file" => {
            let src = spec
                .get(1)
                .ok_or_else(|| HarnessError::Config("missing source path".into()))?;
            let loaded = load_graph(Path::new(src))?;
            for w in &loaded.warnings {
                eprintln!("warning: {w}");
            }
            loaded.graph
        }
        other => {
            return Err(HarnessError::Config(format!(
                "unknown generator {other:?}; expected harary, ringclique, or file"
            )))
        }
    };
    if let Some(path) = out {
        save_graph(&graph, path)?;
    }
    let mut text = format_stats(&graph_stats(&graph));
    text.push('\n');
    Ok(CommandOutcome { text, sound: true })
}
