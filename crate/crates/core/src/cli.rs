//! The `shortlist` command line: build, check, matchsim, shortlist, report.
//!
//! Exit codes: 0 success, 1 property failure, 2 configuration error,
//! 3 I/O error.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::base::{build_base, BaseSpec};
use crate::bits::BitString;
use crate::config::{AdversaryMode, ExperimentConfig};
use crate::construct::{
    build_disperser_lemma, build_eomt, build_expander_lemma, build_lemma4, BuildConfig, LayeredGraph,
};
use crate::error::Error;
use crate::graph::{AdjacencyTable, BiGraph, LeftDomain, MATERIALIZE_BOUND};
use crate::matcher::{exhaustive_adversary, new_matcher, random_adversary, AdversaryReport};
use crate::shortlist::{build_dovetail, list_for, verify_shortlist, DovetailMap, ToyMachine, SHORTLIST_CSV_HEADER};
use crate::verify::{check_disperser, check_expander, online_matchable, CheckOptions, CheckReport};
use crate::Rational;

pub const CHECK_CSV_HEADER: &str = "kind,K,eps_or_c,passed,mode,checked,counterexample";

#[derive(Parser, Debug)]
#[command(
    name = "shortlist",
    version,
    about = "Explicit dispersers, layered online matching and short description lists"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a graph (kind = disperser, expander, lemma4, eomt, base, complete, star).
    Build(CommonArgs),
    /// Check a graph file (kind = disperser, expander, online).
    Check(CommonArgs),
    /// Run adversarial arrival sequences against the greedy matcher.
    Matchsim(CommonArgs),
    /// Sweep all strings up to x_max and check their short lists.
    Shortlist(CommonArgs),
    /// Degree and list-size tables.
    Report(CommonArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Experiment config file (key=value lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent (build defaults to graph.txt).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long = "exhaustive-bound")]
    pub exhaustive_bound: Option<u64>,
    /// Config overrides, `key=value`.
    pub assignments: Vec<String>,
}

/// A failed command and its exit code.
#[derive(Debug)]
pub enum Failure {
    Property(String),
    Config(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Property(_) => 1,
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Property(m) | Failure::Config(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter(_) | Error::Parse { .. } | Error::Capacity(_) | Error::Domain(..) => {
                Failure::Config(e.to_string())
            }
            Error::Io(_) => Failure::Io(e.to_string()),
            Error::ConstructionFailure { ref witness, .. } => {
                let w: Vec<String> = witness.iter().map(ToString::to_string).collect();
                Failure::Property(format!("{e}; witness: {}", w.join(" ")))
            }
            _ => Failure::Property(e.to_string()),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Runs a parsed command line, writing normal output to `out` and
/// diagnostics to `err`. Returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Build(a) => load(a).and_then(|c| cmd_build(&c, a, out)),
        Command::Check(a) => load(a).and_then(|c| cmd_check(&c, a, out)),
        Command::Matchsim(a) => load(a).and_then(|c| cmd_matchsim(&c, a, out)),
        Command::Shortlist(a) => load(a).and_then(|c| cmd_shortlist(&c, a, out, err)),
        Command::Report(a) => load(a).and_then(|c| cmd_report(&c, a, out)),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.exit_code()
        }
    }
}

/// Config file, then `key=value` overrides, then flags.
pub fn load(a: &CommonArgs) -> std::result::Result<ExperimentConfig, Failure> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
            ExperimentConfig::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?
        }
        None => ExperimentConfig::default(),
    };
    for pair in &a.assignments {
        cfg.assign(pair).map_err(Failure::Config)?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(b) = a.exhaustive_bound {
        cfg.exhaustive_bound = b;
    }
    Ok(cfg)
}

pub fn check_options(cfg: &ExperimentConfig) -> CheckOptions {
    CheckOptions {
        exhaustive_bound: cfg.exhaustive_bound,
        samples: cfg.samples,
        seed: cfg.seed,
        method: cfg.method,
        ..CheckOptions::default()
    }
}

pub fn build_config(cfg: &ExperimentConfig) -> BuildConfig {
    let mut b = BuildConfig::new(cfg.seed);
    b.strategy = cfg.strategy;
    b.degree = cfg.degree;
    b.base_right_cap = cfg.base_right_cap;
    b.check = check_options(cfg);
    b
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> CmdResult {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string())),
    }
}

fn say(out: &mut dyn Write, line: &str) -> CmdResult {
    writeln!(out, "{line}").map_err(|e| Failure::Io(e.to_string()))
}

fn domain(cfg: &ExperimentConfig) -> std::result::Result<LeftDomain, Failure> {
    Ok(LeftDomain::new(cfg.lo(), cfg.hi())?)
}

fn max_row(table: &AdjacencyTable) -> usize {
    (0..table.len()).map(|i| table.row(i).len()).max().unwrap_or(0)
}

pub fn cmd_build(cfg: &ExperimentConfig, a: &CommonArgs, out: &mut dyn Write) -> CmdResult {
    let bcfg = build_config(cfg);
    let (text, right, maxdeg) = if cfg.kind == "eomt" {
        let g = build_eomt(cfg.k, cfg.hi(), &bcfg)?;
        let table = g.union().materialize(MATERIALIZE_BOUND)?;
        (table.to_text(Some(&g.header())), g.right_size(), max_row(&table))
    } else {
        let d = domain(cfg)?;
        let g: BiGraph = match cfg.kind.as_str() {
            "disperser" => build_disperser_lemma(d, cfg.k, &bcfg, cfg.delta)?,
            "expander" => build_expander_lemma(d, cfg.k, &bcfg)?,
            "lemma4" => build_lemma4(d, cfg.k, &bcfg)?.graph,
            "base" => {
                let spec = BaseSpec {
                    domain: d,
                    k: cfg.threshold(),
                    eps: cfg.eps,
                    degree: cfg.degree.unwrap_or(cfg.right),
                    right_size: cfg.right,
                    seed: cfg.seed,
                    strategy: cfg.strategy,
                };
                build_base(&spec, &bcfg.check)?.graph
            }
            "complete" => BiGraph::complete(d, cfg.right)?,
            "star" => BiGraph::star(d, cfg.right)?,
            other => return Err(Failure::Config(format!("bad value {other:?} for key `kind`"))),
        };
        let table = g.materialize(MATERIALIZE_BOUND)?;
        (table.to_text(None), g.right_size(), max_row(&table))
    };
    let path = a.out.clone().unwrap_or_else(|| PathBuf::from("graph.txt"));
    write_output(Some(&path), &text, out)?;
    say(out, &format!("right={right} maxdeg={maxdeg} seed={}", cfg.seed))
}

fn read_graph(
    cfg: &ExperimentConfig,
) -> std::result::Result<(AdjacencyTable, Option<crate::graph::LayerHeader>), Failure> {
    let path = cfg
        .graph
        .as_ref()
        .ok_or_else(|| Failure::Config("key `graph` is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{path}: {e}")))?;
    AdjacencyTable::parse(&text).map_err(|e| Failure::Io(format!("{path}: {e}")))
}

fn join(xs: &[BitString]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

fn show_rational(r: Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn check_row(kind: &str, k: u64, param: &str, r: &CheckReport) -> String {
    format!(
        "{kind},{k},{param},{},{},{},{}",
        r.passed,
        r.mode,
        r.checked_count,
        r.counterexample.as_deref().map_or_else(|| "-".into(), join)
    )
}

pub fn cmd_check(cfg: &ExperimentConfig, a: &CommonArgs, out: &mut dyn Write) -> CmdResult {
    let (table, _) = read_graph(cfg)?;
    let g = table.into_graph();
    let opts = check_options(cfg);
    let (row, passed) = match cfg.kind.as_str() {
        "disperser" => {
            let r = check_disperser(&g, cfg.threshold(), cfg.eps, &opts)?;
            (
                check_row("disperser", cfg.threshold(), &show_rational(cfg.eps), &r),
                r.passed,
            )
        }
        "expander" => {
            let r = check_expander(&g, cfg.threshold(), cfg.c, &opts)?;
            (
                check_row("expander", cfg.threshold(), &show_rational(cfg.c), &r),
                r.passed,
            )
        }
        "online" => {
            let v = online_matchable(&g, cfg.match_size())?;
            // First line of the adversary tree: follow the first reply.
            let line = v.adversary.as_ref().map_or_else(
                || "-".to_string(),
                |mut t| {
                    let mut xs = vec![t.present];
                    while let Some((_, next)) = t.replies.first() {
                        t = next;
                        xs.push(t.present);
                    }
                    join(&xs)
                },
            );
            let row = format!(
                "online,{},-,{},game,{},{line}",
                cfg.match_size(),
                v.matchable,
                v.positions
            );
            (row, v.matchable)
        }
        other => return Err(Failure::Config(format!("bad value {other:?} for key `kind`"))),
    };
    write_output(a.out.as_deref(), &format!("{CHECK_CSV_HEADER}\n{row}\n"), out)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Property(format!("check failed: {row}")))
    }
}

/// Ordered sequences of `s` distinct items out of `n`, saturating.
fn arrangements(n: u64, s: u64) -> u64 {
    (0..s).fold(1u64, |acc, i| acc.saturating_mul(n.saturating_sub(i)))
}

fn census_table(report: &AdversaryReport, k: u32) -> String {
    let mut t = String::from("layer,max_failures,bound\n");
    for (slot, c) in report.max_census.iter().enumerate() {
        let id = slot as i32 - 1;
        let bound = if id < 0 { 0 } else { 1u64 << id };
        let _ = writeln!(t, "{id},{c},{bound}");
    }
    if report.max_census.is_empty() {
        for id in -1..k as i32 {
            let _ = writeln!(t, "{id},0,{}", if id < 0 { 0 } else { 1u64 << id });
        }
    }
    t
}

pub fn cmd_matchsim(cfg: &ExperimentConfig, a: &CommonArgs, out: &mut dyn Write) -> CmdResult {
    let (table, header) = read_graph(cfg)?;
    let header = header.ok_or_else(|| Failure::Io("graph file has no LAYERED section".into()))?;
    let g = LayeredGraph::from_table(table, &header).map_err(|e| Failure::Io(e.to_string()))?;
    let n = g.domain().cardinality();
    let exhaustive = match cfg.adversary {
        AdversaryMode::Exhaustive => true,
        AdversaryMode::Random => false,
        AdversaryMode::Auto => arrangements(n, 1 << g.k()) <= cfg.exhaustive_bound,
    };
    let report = if exhaustive {
        exhaustive_adversary(&g)?
    } else {
        random_adversary(&g, cfg.trials, cfg.seed)?
    };
    let mut text = format!(
        "mode={} sequences={} passed={}\n",
        if exhaustive { "exhaustive" } else { "random" },
        report.sequences,
        report.passed()
    );
    text.push_str(&census_table(&report, g.k()));
    if let Some(line) = &report.failure {
        let _ = writeln!(text, "failing sequence: {}", join(line));
        let mut st = new_matcher(&g);
        for x in line {
            match st.match_vertex(x) {
                Ok(rec) => {
                    let _ = writeln!(text, "{rec}");
                }
                Err(e) => {
                    let _ = writeln!(text, "{x} -> FAIL ({e})");
                }
            }
        }
    }
    write_output(a.out.as_deref(), &text, out)?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Property("greedy matcher failed on an arrival sequence".into()))
    }
}

fn machine(cfg: &ExperimentConfig) -> ToyMachine {
    ToyMachine {
        kind: cfg.machine,
        step_budget: crate::shortlist::DEFAULT_STEP_BUDGET,
    }
}

fn dovetail(cfg: &ExperimentConfig) -> std::result::Result<DovetailMap, Failure> {
    Ok(build_dovetail(&machine(cfg), cfg.p_max, cfg.x_max, &build_config(cfg))?)
}

pub fn cmd_shortlist(cfg: &ExperimentConfig, a: &CommonArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let m = machine(cfg);
    let dm = dovetail(cfg)?;
    if let Some(p) = &cfg.map {
        fs::write(p, dm.to_text()).map_err(|e| Failure::Io(format!("{p}: {e}")))?;
    }
    let mut csv = format!("{SHORTLIST_CSV_HEADER}\n");
    let (mut total, mut passed) = (0usize, 0usize);
    for x in BitString::all_up_to(cfg.x_max) {
        let check = verify_shortlist(&x, &dm, &m, cfg.p_max)?;
        total += 1;
        passed += usize::from(check.passed);
        csv.push_str(&check.csv_row());
        csv.push('\n');
    }
    write_output(a.out.as_deref(), &csv, out)?;
    let summary = format!("strings={total} passed={passed}");
    if a.out.is_some() {
        say(out, &summary)?;
    } else {
        say(err, &summary)?;
    }
    if passed == total {
        Ok(())
    } else {
        Err(Failure::Property(format!("{} strings failed", total - passed)))
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn cmd_report(cfg: &ExperimentConfig, a: &CommonArgs, out: &mut dyn Write) -> CmdResult {
    let dm = dovetail(cfg)?;
    let graphs = dm.graphs();
    let mut text = String::from("# degrees\nk,len,strings,maxdeg,meandeg\n");
    for k in 0..=graphs.top() {
        let g = graphs.level(k).expect("level built");
        for n in k..=graphs.hi() {
            let strings: Vec<BitString> = BitString::all_of_length(n).take(cfg.samples.max(1) as usize).collect();
            let degs = strings
                .iter()
                .map(|x| g.degree_of(x))
                .collect::<crate::error::Result<Vec<_>>>()?;
            let max = degs.iter().max().copied().unwrap_or(0);
            let mean = degs.iter().sum::<usize>() as f64 / degs.len().max(1) as f64;
            let _ = writeln!(text, "{k},{n},{},{max},{mean:.2}", strings.len());
        }
    }
    text.push_str("\n# lists\nx,len,listsize,degsum\n");
    let mut growth: Vec<(u32, usize, usize, usize)> = Vec::new();
    for x in BitString::all_up_to(cfg.x_max) {
        let size = list_for(&x, &dm)?.len();
        let mut degsum = 0;
        for k in 0..=x.len().min(graphs.top()) {
            degsum += graphs.level(k).expect("level built").degree_of(&x)?;
        }
        let _ = writeln!(text, "{x},{},{size},{degsum}", x.len());
        match growth.last_mut() {
            Some(g) if g.0 == x.len() => {
                g.1 = g.1.max(size);
                g.2 += size;
                g.3 += 1;
            }
            _ => growth.push((x.len(), size, size, 1)),
        }
    }
    text.push_str("\n# growth\nlen,maxlist,meanlist\n");
    for (len, max, sum, count) in &growth {
        let _ = writeln!(text, "{len},{max},{:.2}", *sum as f64 / *count as f64);
    }
    let points: Vec<(f64, f64)> = growth.iter().map(|&(l, m, _, _)| (l as f64, m as f64)).collect();
    match log_log_slope(&points) {
        Some(s) => {
            let _ = writeln!(text, "\nslope={s:.2}");
        }
        None => text.push_str("\nslope=nan\n"),
    }
    write_output(a.out.as_deref(), &text, out)
}
