//! Command-line front end: scene ingestion, experiments and their output files.

pub mod records;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use linemv::ed_degree::{count_ed_critical, random_instance, EdConfig};
use linemv::enumerative::{expected_real_transversals, multidegree_check, transversals_of_four, TransversalStatus};
use linemv::grassmannian::PlueckerLine;
use linemv::multiview::{forward_map, membership, LineTuple};
use linemv::projective::DEFAULT_RANK_TOL;
use linemv::scene::{Scene, SceneError};
use linemv::seeds::{gaussian_vector3, gaussian_vector4, on_sphere, rng_for};
use linemv::triangulation::{histogram, sensitivity_experiment, triangulate_line, SensitivityKind, SensitivitySummary, TriangulationConfig, GRAD_TOL};
use linemv::{rigs, CameraRig};
use nalgebra::Vector3;

use records::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERT: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

/// Expected number of real lines meeting four random back-projected rays.
pub const REFERENCE_REAL_MEAN: f64 = 1.7262;

const STREAM_SCENE: u64 = 0x434c;

pub fn version_string() -> String {
    format!("v{}-linemv", env!("CARGO_PKG_VERSION"))
}

#[derive(Parser, Debug)]
#[command(name = "linemv", version, about = "Line multiview geometry experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads, all cores when absent.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    /// Acceptance rule `tol=X` or `min=X`; exit 1 when violated.
    #[arg(long = "assert", value_name = "RULE")]
    pub assertion: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct SceneArgs {
    /// Scene JSON with cameras and optional lines and tuples.
    #[arg(long, conflicts_with = "builtin_rig")]
    pub scene: Option<PathBuf>,
    /// Use a built-in camera rig instead of a scene file.
    #[arg(long)]
    pub builtin_rig: bool,
    /// Add this many forward-mapped random lines (and, for membership, as many random tuples).
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
    /// Relative noise radius on generated images.
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    /// Cameras of the built-in rig.
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tests image tuples for membership in the line multiview variety.
    Membership {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scene: SceneArgs,
    },
    /// Least-squares line triangulation of every tuple.
    Triangulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scene: SceneArgs,
    },
    /// Counts lines satisfying generic image conditions of codimensions `d`.
    Multidegree {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Cameras in the Gaussian rig; extra cameras get codimension 0.
        #[arg(long, default_value_t = 5)]
        m: usize,
    },
    /// Monte-Carlo mean of the number of real transversals.
    RealCount {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Error amplification of line or point triangulation under image noise.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 1e-12)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = Kind::Lines)]
        kind: Kind,
        /// Fixed cameras instead of a Gaussian rig.
        #[arg(long)]
        builtin_rig: bool,
        /// Also write a histogram CSV of the e-values.
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long, default_value_t = 0.25)]
        bin_width: f64,
    },
    /// Counts complex critical points of the squared image distance.
    EdDegree {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        m: usize,
        /// Seed of the random cameras and data; the homotopy uses `--seed`.
        #[arg(long, default_value_t = 1)]
        instance: u64,
        /// Independent start systems to merge.
        #[arg(long, default_value_t = 2)]
        passes: usize,
        /// Take cameras and the first tuple from a scene file instead.
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Also emit every counted solution.
        #[arg(long)]
        solutions: bool,
    },
    /// Common transversals of four lines.
    Schubert {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Solve the four lines of this scene instead of random quadruples.
        #[arg(long)]
        scene: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Lines,
    Points,
}

impl From<Kind> for SensitivityKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Lines => SensitivityKind::Lines,
            Kind::Points => SensitivityKind::Points,
        }
    }
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
pub enum Failure {
    Parse(String),
    Invariant(String),
    Assertion(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Self::Parse(_) | Self::Io(_) => EXIT_PARSE,
            Self::Invariant(_) => EXIT_INVARIANT,
            Self::Assertion(_) => EXIT_ASSERT,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Parse(m) => write!(f, "parse error: {m}"),
            Self::Invariant(m) => write!(f, "invariant violation: {m}"),
            Self::Assertion(m) => write!(f, "assertion failed: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<SceneError> for Failure {
    fn from(e: SceneError) -> Self {
        if e.is_parse() {
            Self::Parse(e.to_string())
        } else {
            Self::Invariant(e.to_string())
        }
    }
}

impl From<linemv::Error> for Failure {
    fn from(e: linemv::Error) -> Self {
        match e {
            linemv::Error::InvalidArgument(m) => Self::Parse(m),
            other => Self::Invariant(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    Tol(f64),
    Min(f64),
}

pub fn parse_rule(s: &str) -> Result<Rule, Failure> {
    let (key, value) = s.split_once('=').ok_or_else(|| Failure::Parse(format!("--assert expects tol=X or min=X, got {s:?}")))?;
    let v: f64 = value.trim().parse().map_err(|_| Failure::Parse(format!("--assert value {value:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Failure::Parse("--assert value must be finite".into()));
    }
    match key.trim() {
        "tol" if v > 0.0 => Ok(Rule::Tol(v)),
        "min" => Ok(Rule::Min(v)),
        _ => Err(Failure::Parse(format!("unknown or invalid assertion {s:?}"))),
    }
}

/// Collected output of one command.
struct Output {
    header: Header,
    records: Vec<Record>,
    assertion: Option<AssertionRecord>,
}

impl Output {
    fn new(command: &str, seed: u64) -> Self {
        let header = Header { version: version_string(), command: command.into(), seed, tolerances: BTreeMap::new(), params: BTreeMap::new() };
        Self { header, records: Vec::new(), assertion: None }
    }

    fn tol(mut self, k: &str, v: f64) -> Self {
        self.header.tolerances.insert(k.into(), v);
        self
    }

    fn param(mut self, k: &str, v: impl ToString) -> Self {
        self.header.params.insert(k.into(), v.to_string());
        self
    }

    fn check(&mut self, rule: String, value: f64, passed: bool) {
        let a = AssertionRecord { rule, value, passed };
        self.records.push(Record::Assertion(a.clone()));
        self.assertion = Some(a);
    }

    fn preamble(&self) -> Vec<Record> {
        vec![Record::Header(self.header.clone()), Record::Timestamp { unix_s: unix_now() }]
    }

    fn jsonl(&self) -> String {
        let mut all = self.preamble();
        all.extend(self.records.iter().cloned());
        emit_jsonl(&all)
    }

    /// `#` lines for a CSV file: the header record, then the timestamp on its own line.
    fn comments(&self) -> Vec<String> {
        self.preamble().iter().map(|r| format!("# {}", serde_json::to_string(r).expect("header serializes"))).collect()
    }

    fn finish(&self) -> Result<(), Failure> {
        match &self.assertion {
            Some(a) if !a.passed => Err(Failure::Assertion(format!("{} (observed {})", a.rule, a.value))),
            _ => Ok(()),
        }
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_scene(path: &PathBuf, rank_tol: f64) -> Result<Scene, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(Scene::from_json(&text, rank_tol)?)
}

fn validate_common(c: &Common) -> Result<Option<Rule>, Failure> {
    if !(c.rank_tol > 0.0 && c.rank_tol < 1.0) {
        return Err(Failure::Parse("--rank-tol must lie in (0, 1)".into()));
    }
    if let Some(t) = c.threads {
        if t == 0 {
            return Err(Failure::Parse("--threads must be at least 1".into()));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    c.assertion.as_deref().map(parse_rule).transpose()
}

fn need_positive(name: &str, v: usize) -> Result<(), Failure> {
    if v == 0 {
        Err(Failure::Parse(format!("--{name} must be at least 1")))
    } else {
        Ok(())
    }
}

/// Image tuples of a scene: its own tuples, then forward-mapped lines, then
/// generated samples. Each comes with a source label.
fn scene_tuples(scene: &Scene, args: &SceneArgs, seed: u64, with_random: bool) -> Result<Vec<(String, LineTuple<f64>)>, Failure> {
    let rig = &scene.rig;
    let mut out: Vec<(String, LineTuple<f64>)> = scene.tuples.iter().map(|t| ("tuple".to_string(), t.clone())).collect();
    for l in &scene.lines {
        out.push(("line".into(), forward_map(rig, l)?));
    }
    for k in 0..args.samples {
        let mut rng = rng_for(seed, STREAM_SCENE, k as u64);
        let line = loop {
            if let Ok(l) = PlueckerLine::from_vectors(&gaussian_vector4(&mut rng), &gaussian_vector4(&mut rng)) {
                if let Ok(t) = forward_map(rig, &l) {
                    break t;
                }
            }
        };
        out.push(("forward".into(), perturb(&line, args.eps, &mut rng)?));
        if with_random {
            let v: Vec<Vector3<f64>> = (0..rig.len()).map(|_| gaussian_vector3(&mut rng)).collect();
            out.push(("random".into(), LineTuple::from_vectors(&v)?));
        }
    }
    Ok(out)
}

fn perturb(t: &LineTuple<f64>, eps: f64, rng: &mut linemv::seeds::ExperimentRng) -> Result<LineTuple<f64>, Failure> {
    if eps == 0.0 {
        return Ok(t.clone());
    }
    let v: Vec<Vector3<f64>> = t
        .vectors()
        .iter()
        .map(|l| {
            let x = on_sphere(rng, 3, eps * l.norm());
            l + Vector3::new(x[0], x[1], x[2])
        })
        .collect();
    Ok(LineTuple::from_vectors(&v)?)
}

fn load_scene(args: &SceneArgs, c: &Common, builtin: impl Fn(usize) -> Result<CameraRig, Failure>, default_m: usize) -> Result<Scene, Failure> {
    if !(args.eps >= 0.0 && args.eps.is_finite()) {
        return Err(Failure::Parse("--eps must be finite and non-negative".into()));
    }
    match (&args.scene, args.builtin_rig) {
        (Some(p), _) => read_scene(p, c.rank_tol),
        (None, true) => Ok(Scene::from_rig(builtin(args.m.unwrap_or(default_m))?)),
        (None, false) => {
            let m = args.m.unwrap_or(default_m);
            if m < 2 {
                return Err(Failure::Parse("--m must be at least 2".into()));
            }
            Ok(Scene::from_rig(rigs::gaussian_rig(&mut rng_for(c.seed, STREAM_SCENE, u64::MAX), m)))
        }
    }
}

fn sensitivity_rig(m: usize) -> Result<CameraRig, Failure> {
    if (2..=3).contains(&m) {
        Ok(rigs::sensitivity_rig(m))
    } else {
        Err(Failure::Parse("the built-in triangulation rig has 2 or 3 cameras".into()))
    }
}

fn cmd_membership(c: &Common, args: &SceneArgs) -> Result<(), Failure> {
    let rule = validate_common(c)?;
    let scene = load_scene(args, c, |_| Ok(rigs::collinear_rig()), 4)?;
    let tuples = scene_tuples(&scene, args, c.seed, true)?;
    let mut out = Output::new("membership", c.seed).tol("rank_tol", c.rank_tol).param("m", scene.rig.len()).param("eps", args.eps);
    let mut in_variety = 0;
    for (index, (source, t)) in tuples.iter().enumerate() {
        let r = membership(&scene.rig, t)?;
        in_variety += usize::from(r.in_variety);
        out.records.push(Record::Membership(MembershipRecord {
            index,
            source: source.clone(),
            rank: r.rank,
            in_variety: r.in_variety,
            in_image: r.in_image,
            singular: r.singular,
            exceptional_ok: r.exceptional_ok,
            witness: r.witness_line.map(|w| *w.coords()),
            singular_values: r.diagnostics.singular_values.clone(),
            gap_ratio: finite(r.diagnostics.gap_ratio),
        }));
    }
    match rule {
        Some(Rule::Min(v)) => out.check(format!("in_variety >= {v}"), in_variety as f64, in_variety as f64 >= v),
        Some(Rule::Tol(_)) => return Err(Failure::Parse("membership supports only min=N".into())),
        None => {}
    }
    write_out(&c.out, &out.jsonl())?;
    out.finish()
}

fn cmd_triangulate(c: &Common, args: &SceneArgs) -> Result<(), Failure> {
    let rule = validate_common(c)?;
    let scene = load_scene(args, c, sensitivity_rig, 3)?;
    let tuples = scene_tuples(&scene, args, c.seed, false)?;
    let cfg = TriangulationConfig { seed: c.seed, ..Default::default() };
    let mut out = Output::new("triangulate", c.seed).tol("grad_tol", cfg.grad_tol).tol("rank_tol", c.rank_tol).param("m", scene.rig.len()).param("eps", args.eps);
    let mut worst: f64 = 0.0;
    for (index, (source, t)) in tuples.iter().enumerate() {
        let r = triangulate_line(&scene.rig, t, &cfg)?;
        worst = worst.max(r.objective);
        out.records.push(Record::Triangulation(TriangulationRecord {
            index,
            source: source.clone(),
            line: *r.line.coords(),
            objective: r.objective,
            gradient_norm: r.gradient_norm,
            iterations: r.iterations,
            converged: r.converged,
            restarts: r.restarts_used,
        }));
    }
    match rule {
        Some(Rule::Tol(t)) => out.check(format!("max objective <= {t}"), worst, worst <= t),
        Some(Rule::Min(_)) => return Err(Failure::Parse("triangulate supports only tol=X".into())),
        None => {}
    }
    write_out(&c.out, &out.jsonl())?;
    out.finish()
}

fn cmd_multidegree(c: &Common, d: &[usize], trials: usize, m: usize) -> Result<(), Failure> {
    let rule = validate_common(c)?;
    need_positive("trials", trials)?;
    if d.len() > m {
        return Err(Failure::Parse(format!("--d has {} entries but the rig has {m} cameras", d.len())));
    }
    let mut full = d.to_vec();
    full.resize(m, 0);
    let rig = rigs::gaussian_rig(&mut rng_for(c.seed, STREAM_SCENE, u64::MAX), m);
    let report = multidegree_check(&rig, &full, trials, c.seed)?;
    let mut out = Output::new("multidegree", c.seed).param("d", format!("{d:?}")).param("m", m).param("trials", trials);
    let mut counts = report.counts.iter();
    // Failed trials have no count; keep trial numbering dense over successes.
    for trial in 0..trials {
        let count = if trial < report.counts.len() { counts.next().copied() } else { None };
        out.records.push(Record::MultidegreeTrial { trial, count });
    }
    let matching = report.counts.iter().filter(|&&k| k == report.expected).count();
    out.records.push(Record::MultidegreeSummary(MultidegreeSummary {
        d: d.to_vec(),
        m,
        expected: report.expected,
        trials,
        matching,
        failed_trials: report.failed_trials,
        degenerate_resamples: report.degenerate_resamples,
    }));
    match rule {
        Some(Rule::Min(v)) => out.check(format!("matching trials >= {v}"), matching as f64, matching as f64 >= v),
        Some(Rule::Tol(t)) => {
            let miss = 1.0 - matching as f64 / trials as f64;
            out.check(format!("mismatch fraction <= {t}"), miss, miss <= t);
        }
        None => {}
    }
    write_out(&c.out, &out.jsonl())?;
    out.finish()
}

fn cmd_real_count(c: &Common, samples: usize) -> Result<(), Failure> {
    let rule = validate_common(c)?;
    need_positive("samples", samples)?;
    let clock = Instant::now();
    let est = expected_real_transversals(samples, c.seed);
    eprintln!("real-count: {samples} samples in {:.2} s", clock.elapsed().as_secs_f64());
    let mut out = Output::new("real-count", c.seed).param("samples", samples);
    out.records.push(Record::RealCount(RealCountRecord {
        samples,
        mean: est.mean,
        std_error: est.std_error,
        histogram: est.histogram,
        discarded: est.discarded,
        reference: REFERENCE_REAL_MEAN,
    }));
    match rule {
        Some(Rule::Tol(t)) => {
            let dev = (est.mean - REFERENCE_REAL_MEAN).abs();
            out = out.tol("assert_tol", t);
            out.check(format!("|mean - {REFERENCE_REAL_MEAN}| <= {t}"), dev, dev <= t);
        }
        Some(Rule::Min(_)) => return Err(Failure::Parse("real-count supports only tol=X".into())),
        None => {}
    }
    write_out(&c.out, &out.jsonl())?;
    out.finish()
}

#[allow(clippy::too_many_arguments)]
fn cmd_sensitivity(c: &Common, m: usize, trials: usize, eps: f64, kind: Kind, builtin_rig: bool, hist: &Option<PathBuf>, bin_width: f64) -> Result<(), Failure> {
    let rule = validate_common(c)?;
    need_positive("trials", trials)?;
    if !(eps > 0.0 && eps.is_finite()) || !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Failure::Parse("--eps and --bin-width must be positive".into()));
    }
    let (rig, rig_name) = if builtin_rig {
        (sensitivity_rig(m)?, "fixed")
    } else {
        if m < 2 {
            return Err(Failure::Parse("--m must be at least 2".into()));
        }
        (rigs::gaussian_rig(&mut rng_for(c.seed, STREAM_SCENE, u64::MAX), m), "gaussian")
    };
    let kind: SensitivityKind = kind.into();
    let records = sensitivity_experiment(&rig, kind, trials, eps, c.seed)?;
    let s = SensitivitySummary::from_records(kind, &records);
    let mut out = Output::new("sensitivity", c.seed)
        .tol("eps", eps)
        .tol("grad_tol", GRAD_TOL)
        .param("kind", kind)
        .param("m", m)
        .param("rig", rig_name)
        .param("trials", trials);
    let summary = SensitivitySummaryRecord {
        kind: kind.to_string(),
        m,
        rig: rig_name.into(),
        trials,
        ok: s.ok,
        mean: finite(s.mean),
        std_dev: finite(s.std_dev),
        min: finite(s.min),
        median: finite(s.median),
        max: finite(s.max),
    };
    eprintln!("{}", serde_json::to_string(&Record::SensitivitySummary(summary)).expect("summary serializes"));
    match rule {
        Some(Rule::Min(v)) => out.check(format!("ok fraction >= {v}"), s.ok_fraction(), s.ok_fraction() >= v),
        Some(Rule::Tol(t)) => out.check(format!("failure fraction <= {t}"), 1.0 - s.ok_fraction(), 1.0 - s.ok_fraction() <= t),
        None => {}
    }
    if let Some(a) = &out.assertion {
        eprintln!("{}", serde_json::to_string(&Record::Assertion(a.clone())).expect("assertion serializes"));
    }
    let rows: Vec<_> = records.iter().map(|r| r.row()).collect();
    write_out(&c.out, &emit_csv(&out.comments(), &rows))?;
    if let Some(p) = hist {
        let bins: Vec<HistogramRow> = histogram(&records, bin_width).into_iter().map(|(l, n)| HistogramRow { bin_left: l, bin_right: l + bin_width, count: n }).collect();
        write_out(&Some(p.clone()), &emit_csv(&out.comments(), &bins))?;
    }
    out.finish()
}

fn cmd_ed_degree(c: &Common, m: usize, instance: u64, passes: usize, scene: &Option<PathBuf>, with_solutions: bool) -> Result<(), Failure> {
    let rule = validate_common(c)?;
    let (rig, u) = match scene {
        Some(p) => {
            let s = read_scene(p, c.rank_tol)?;
            let t = s.tuples.first().ok_or_else(|| Failure::Invariant("tuples: the scene needs at least one tuple as data".into()))?;
            let u: Vec<Vector3<f64>> = t.vectors().iter().map(|v| v.normalize()).collect();
            (s.rig, u)
        }
        None => {
            if !(3..=4).contains(&m) {
                return Err(Failure::Parse("--m must be 3 or 4".into()));
            }
            random_instance(m, instance)
        }
    };
    if passes == 0 {
        return Err(Failure::Parse("--passes must be positive".into()));
    }
    let config = EdConfig { seed: c.seed, passes, ..Default::default() };
    let count = count_ed_critical(&rig, &u, &config)?;
    eprintln!("ed-degree: {} paths in {:.1} s", count.paths, count.runtime_s);
    let t = &config.tracker;
    let mut out = Output::new("ed-degree", c.seed)
        .tol("dedup_tol", config.dedup_tol)
        .tol("t_tol", config.t_tol)
        .tol("rank_tol", config.rank_tol)
        .tol("end_tol", t.end_tol)
        .tol("cond_max", t.cond_max)
        .tol("corrector_tol", t.corrector_tol)
        .param("m", rig.len())
        .param("passes", passes)
        .param("instance", if scene.is_some() { "scene".to_string() } else { instance.to_string() });
    out.records.push(Record::EdSummary(EdSummary {
        m: count.m,
        passes: count.passes,
        paths: count.paths,
        regular: count.regular,
        valid: count.valid,
        lower_bound: count.lower_bound,
        real: count.real_solutions().count(),
        singular: count.singular,
        diverged: count.diverged,
        truncated: count.truncated,
        duplicates: count.duplicates,
        invalid_scale: count.invalid_scale,
        rank_one: count.rank_one,
    }));
    if with_solutions {
        for s in &count.solutions {
            out.records.push(Record::EdSolution(EdSolutionRecord {
                re: s.x.iter().map(|z| z.re).collect(),
                im: s.x.iter().map(|z| z.im).collect(),
                real: s.real,
                certified: s.certified,
            }));
        }
    }
    match rule {
        Some(Rule::Min(v)) => out.check(format!("lower_bound >= {v}"), count.lower_bound as f64, count.lower_bound as f64 >= v),
        Some(Rule::Tol(_)) => return Err(Failure::Parse("ed-degree supports only min=N".into())),
        None => {}
    }
    write_out(&c.out, &out.jsonl())?;
    out.finish()
}

fn transversal_records(lines: &[PlueckerLine<linemv::Complex64>]) -> Vec<Record> {
    lines
        .iter()
        .enumerate()
        .map(|(index, l)| {
            let p = l.coords();
            Record::Transversal(TransversalRecord {
                index,
                re: std::array::from_fn(|k| p[k].re),
                im: std::array::from_fn(|k| p[k].im),
                real: l.real_view(1e-8).is_some(),
            })
        })
        .collect()
}

fn status_name(s: TransversalStatus) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

fn cmd_schubert(c: &Common, trials: usize, scene: &Option<PathBuf>) -> Result<(), Failure> {
    let rule = validate_common(c)?;
    let mut out = Output::new("schubert", c.seed);
    if let Some(p) = scene {
        let s = read_scene(p, c.rank_tol)?;
        let lines: [PlueckerLine<f64>; 4] = s
            .lines
            .try_into()
            .map_err(|v: Vec<_>| Failure::Invariant(format!("lines: expected 4 lines, got {}", v.len())))?;
        let sol = transversals_of_four(&lines);
        out = out.param("source", "scene");
        out.records.push(Record::SchubertTrial(SchubertTrial { trial: 0, status: status_name(sol.status), complex: sol.lines.len(), real: sol.real_count }));
        out.records.extend(transversal_records(&sol.lines));
        if let Some(r) = rule {
            let (Rule::Min(v) | Rule::Tol(v)) = r;
            out.check(format!("complex transversals >= {v}"), sol.lines.len() as f64, sol.lines.len() as f64 >= v);
        }
    } else {
        need_positive("trials", trials)?;
        out = out.param("trials", trials);
        let results = linemv::parallel::map_indexed(trials, |t| {
            let mut rng = rng_for(c.seed, STREAM_SCENE + 1, t as u64);
            let lines: [PlueckerLine<f64>; 4] = std::array::from_fn(|_| loop {
                if let Ok(l) = PlueckerLine::from_vectors(&gaussian_vector4(&mut rng), &gaussian_vector4(&mut rng)) {
                    break l;
                }
            });
            transversals_of_four(&lines)
        });
        let mut summary = SchubertSummary { trials, two: 0, degenerate: 0, other: 0 };
        for (trial, sol) in results.iter().enumerate() {
            match (sol.status, sol.lines.len()) {
                (TransversalStatus::Finite, 2) => summary.two += 1,
                (TransversalStatus::Degenerate, _) => summary.degenerate += 1,
                _ => summary.other += 1,
            }
            out.records.push(Record::SchubertTrial(SchubertTrial { trial, status: status_name(sol.status), complex: sol.lines.len(), real: sol.real_count }));
        }
        let two = summary.two;
        out.records.push(Record::SchubertSummary(summary));
        match rule {
            Some(Rule::Min(v)) => out.check(format!("trials with two transversals >= {v}"), two as f64, two as f64 >= v),
            Some(Rule::Tol(t)) => {
                let miss = 1.0 - two as f64 / trials as f64;
                out.check(format!("other fraction <= {t}"), miss, miss <= t);
            }
            None => {}
        }
    }
    write_out(&c.out, &out.jsonl())?;
    out.finish()
}

pub fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Membership { common, scene } => cmd_membership(common, scene),
        Command::Triangulate { common, scene } => cmd_triangulate(common, scene),
        Command::Multidegree { common, d, trials, m } => cmd_multidegree(common, d, *trials, *m),
        Command::RealCount { common, samples } => cmd_real_count(common, *samples),
        Command::Sensitivity { common, m, trials, eps, kind, builtin_rig, histogram, bin_width } => {
            cmd_sensitivity(common, *m, *trials, *eps, *kind, *builtin_rig, histogram, *bin_width)
        }
        Command::EdDegree { common, m, instance, passes, scene, solutions } => cmd_ed_degree(common, *m, *instance, *passes, scene, *solutions),
        Command::Schubert { common, trials, scene } => cmd_schubert(common, *trials, scene),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("linemv: {f}");
            f.code()
        }
    }
}
