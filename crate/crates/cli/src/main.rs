//! `chordarc` batch front end. Exit codes: 0 success, 2 precondition
//! failure, 3 asserted verdict failure, 64 usage error.

mod digest;

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chordarc::access::{curve_sidecar, exterior_corkscrew, good_curve, interior_corkscrew, write_curve};
use chordarc::domain::{load_cloud, make_domain, max_resolution, sample_boundary, write_cloud, CorpusSpec, Domain, SampledBoundary};
use chordarc::dyadic::{analysis_range, build_grid, verify_grid, write_grid, DyadicGrid};
use chordarc::flatness::{cube_betas, flag_cubes, write_beta_csv, BetaOptions};
use chordarc::geometry::{Ball, Point};
use chordarc::theorem::{
    bad_collection, classify_cloud, classify_domain, exterior_corkscrew_via_flatness, layer_energy,
    packing_ratio_with, AnalysisConfig, ClassificationReport, LemmaConstants, SpecEntry, Status,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

const EXIT_PRECONDITION: u8 = 2;
const EXIT_ASSERT: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "chordarc", version, about = "Quantitative geometry of domains over a tested range of scales")]
struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Caps the worker pool.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Input selection and analysis settings. Precedence: flags, then the
/// config file, then defaults.
#[derive(Args, Clone, Default)]
struct Source {
    /// Corpus spec such as `disk`, `cantor:4` or `cusp:2`.
    #[arg(long)]
    spec: Option<String>,
    /// Point-cloud file; no domain oracle is available for it.
    #[arg(long, conflicts_with = "spec")]
    cloud: Option<PathBuf>,
    /// Flat `key = value` file; also accepts `spec`, `cloud` and `out`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sampling resolution.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Any analysis key, e.g. `--set ur_tail=0.3`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a corpus domain into a point-cloud file.
    Generate {
        #[command(flatten)]
        src: Source,
    },
    /// Build the dyadic grid, export it and report its verification.
    Grid {
        #[command(flatten)]
        src: Source,
    },
    /// Per-cube bilateral β as CSV.
    Beta {
        #[command(flatten)]
        src: Source,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    /// Corkscrew certificates for one window as JSON.
    Corkscrew {
        #[command(flatten)]
        src: Source,
        /// Window centre `x1,x2[,x3]`.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long)]
        r: f64,
        /// Lattice step; `corkscrew_step · r` when absent.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "interior,exterior")]
        kind: Vec<Kind>,
        /// Flatness ε for `--kind flatness`.
        #[arg(long, default_value_t = 0.02)]
        eps: f64,
        /// Interior corkscrew constant for `--kind flatness`.
        #[arg(long, default_value_t = 0.5)]
        c: f64,
        /// Good-curve constant for `--kind flatness`.
        #[arg(long = "big-c", default_value_t = 2.0)]
        big_c: f64,
    },
    /// Good curve between two interior points: polyline to `--out`, JSON
    /// sidecar to `<out>.json`.
    Curve {
        #[command(flatten)]
        src: Source,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        /// Relative lattice step; `curve_step` when absent.
        #[arg(long)]
        lattice_step: Option<f64>,
    },
    /// Packing ratios of the coarsest cubes at each c₀.
    Pack {
        #[command(flatten)]
        src: Source,
        /// Comma-separated c₀ values; `c0_grid` when absent.
        #[arg(long)]
        c0: Option<String>,
    },
    /// Layer energies of balls `B(x, r)`.
    Energy {
        #[command(flatten)]
        src: Source,
        /// Ball centre `x1,x2[,x3]`; repeatable.
        #[arg(long, allow_hyphen_values = true, required = true)]
        x: Vec<String>,
        #[arg(long)]
        r: f64,
        /// Collar width in units of h; `kappa` when absent.
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// Full classification report as JSON.
    Classify {
        #[command(flatten)]
        src: Source,
        /// Verdicts that must pass, comma separated (`adr`, `ur`, `uniform`,
        /// `nta`, `chordarc`, a `chk` suffix is accepted); all when bare.
        #[arg(long, num_args = 0..=1, default_missing_value = "all")]
        assert: Option<String>,
    },
    /// Human-readable digest of a report JSON.
    Report {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Interior,
    Exterior,
    Flatness,
}

enum Failure {
    Usage(String),
    Precondition(String),
    Assert(String),
}

fn pre<E: Display>(e: E) -> Failure {
    Failure::Precondition(e.to_string())
}

struct Loaded {
    cfg: AnalysisConfig,
    spec: Option<CorpusSpec>,
    domain: Option<Domain>,
    cloud: SampledBoundary,
    out: Option<PathBuf>,
}

impl Loaded {
    fn oracle(&self, what: &str) -> Result<&Domain, Failure> {
        self.domain.as_ref().ok_or_else(|| Failure::Usage(format!("{what} needs a domain oracle; pass --spec")))
    }
}

/// Resolves the analysis config and samples or loads the boundary.
fn load(src: &Source) -> Result<Loaded, Failure> {
    let mut cfg = AnalysisConfig::default();
    let mut src = src.clone();
    if let Some(path) = &src.config {
        let text = fs::read_to_string(path).map_err(|e| pre(format!("{}: {e}", path.display())))?;
        for (k, v) in cfg.apply_text(&text).map_err(pre)? {
            match k.as_str() {
                "spec" if src.spec.is_none() && src.cloud.is_none() => src.spec = Some(v),
                "cloud" if src.spec.is_none() && src.cloud.is_none() => src.cloud = Some(v.into()),
                "out" if src.out.is_none() => src.out = Some(v.into()),
                "spec" | "cloud" | "out" => {}
                _ => return Err(Failure::Usage(format!("{}: unknown key {k:?}", path.display()))),
            }
        }
    }
    let h_given = src.h.is_some() || cfg.h != AnalysisConfig::default().h;
    if let Some(h) = src.h {
        cfg.h = h;
    }
    if let Some(seed) = src.seed {
        cfg.seed = seed;
    }
    for kv in &src.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim()).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let (spec, domain, cloud) = match (&src.spec, &src.cloud) {
        (Some(name), _) => {
            let spec: CorpusSpec = name.parse().map_err(pre)?;
            let domain = make_domain(&spec).map_err(pre)?;
            // An unset h falls back to half the coarsest admissible one.
            if !h_given && cfg.h > max_resolution(&spec) {
                cfg.h = max_resolution(&spec) / 2.0;
            }
            cfg.validate().map_err(pre)?;
            let cloud = sample_boundary(&domain, cfg.h).map_err(pre)?;
            (Some(spec), Some(domain), cloud)
        }
        (None, Some(path)) => {
            let cloud = load_cloud(path, None).map_err(|e| pre(format!("{}: {e}", path.display())))?;
            cfg.h = cloud.h();
            cfg.validate().map_err(pre)?;
            (None, None, cloud)
        }
        (None, None) => return Err(Failure::Usage("pass --spec or --cloud".into())),
    };
    Ok(Loaded { cfg, spec, domain, cloud, out: src.out })
}

fn parse_point(text: &str) -> Result<Point, Failure> {
    let coords: Result<Vec<f64>, _> = text.split(',').map(|c| c.trim().parse::<f64>()).collect();
    let coords = coords.map_err(|_| Failure::Usage(format!("cannot parse point {text:?}")))?;
    Point::from_slice(&coords).map_err(|e| Failure::Usage(format!("point {text:?}: {e}")))
}

fn coords(p: &Point) -> String {
    p.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
}

fn grid_for(l: &Loaded) -> Result<DyadicGrid, Failure> {
    let (lo, hi) = analysis_range(&l.cloud);
    build_grid(&l.cloud, l.cfg.k_min.unwrap_or(lo), l.cfg.k_max.unwrap_or(hi)).map_err(pre)
}

/// Writes `bytes` to `out`, or to stdout when absent.
fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| pre(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(pre),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable");
    s.push(b'\n');
    s
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(pre)?;
    }
    match cli.cmd {
        Cmd::Generate { src } => {
            if src.spec.is_none() && src.config.is_none() {
                return Err(Failure::Usage("generate needs --spec".into()));
            }
            let l = load(&src)?;
            let mut buf = Vec::new();
            write_cloud(&mut buf, &l.cloud).map_err(pre)?;
            emit(l.out.as_deref(), &buf)
        }
        Cmd::Grid { src } => {
            let l = load(&src)?;
            let g = grid_for(&l)?;
            let report = verify_grid(&g, &l.cloud).map_err(pre)?;
            let mut buf = Vec::new();
            write_grid(&mut buf, &g).map_err(pre)?;
            let summary = if cli.json {
                String::from_utf8(to_json(&report)).expect("utf-8")
            } else {
                format!(
                    "generations {}..={}, cubes {:?}\npartition {} nesting {} unique ancestor {}\nC1 = {}, a0 = {}, eta = {}\n",
                    report.k_min,
                    report.k_max,
                    report.cubes_per_generation,
                    report.partition,
                    report.nesting,
                    report.unique_ancestor,
                    report.c1,
                    report.a0,
                    report.eta.map_or_else(|| "none".into(), |e| e.to_string())
                )
            };
            match &l.out {
                Some(p) => {
                    emit(Some(p), &buf)?;
                    emit(None, summary.as_bytes())
                }
                None => {
                    emit(None, &buf)?;
                    eprint!("{summary}");
                    Ok(())
                }
            }
        }
        Cmd::Beta { src, eps } => {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(pre(format!("eps must be in (0, 1), got {eps}")));
            }
            let l = load(&src)?;
            let g = grid_for(&l)?;
            let betas = cube_betas(&g, &l.cloud, l.cfg.dilation, &BetaOptions::for_eps(eps));
            let bad = flag_cubes(&betas, eps);
            let mut buf = Vec::new();
            write_beta_csv(&mut buf, &g, &betas, &bad).map_err(pre)?;
            emit(l.out.as_deref(), &buf)
        }
        Cmd::Corkscrew { src, x, r, step, kind, eps, c, big_c } => {
            let l = load(&src)?;
            let oracle = l.oracle("corkscrew")?;
            let x = parse_point(&x)?;
            let step = step.unwrap_or(l.cfg.corkscrew_step * r);
            let mut certs = Vec::new();
            for k in kind {
                let entry = match k {
                    Kind::Interior => json!({
                        "kind": "interior",
                        "cert": interior_corkscrew(oracle, &x, r, step).map_err(pre)?,
                    }),
                    Kind::Exterior => json!({
                        "kind": "exterior",
                        "cert": exterior_corkscrew(oracle, &x, r, step).map_err(pre)?,
                    }),
                    Kind::Flatness => {
                        let consts = LemmaConstants::new(c, big_c);
                        consts.check(eps).map_err(pre)?;
                        match exterior_corkscrew_via_flatness(oracle, &l.cloud, &x, r, eps, consts) {
                            Ok(f) => json!({ "kind": "flatness", "cert": f.cert, "window": f.window, "classification": f.classification }),
                            Err(fail) => json!({ "kind": "flatness", "cert": null, "failure": fail }),
                        }
                    }
                };
                certs.push(entry);
            }
            emit(l.out.as_deref(), &to_json(&certs))
        }
        Cmd::Curve { src, x, y, lattice_step } => {
            let l = load(&src)?;
            let oracle = l.oracle("curve")?;
            let out = l.out.clone().ok_or_else(|| Failure::Usage("curve needs --out".into()))?;
            let step = lattice_step.unwrap_or(l.cfg.curve_step);
            let curve = good_curve(oracle, &parse_point(&x)?, &parse_point(&y)?, step).map_err(pre)?;
            let mut buf = Vec::new();
            write_curve(&mut buf, &curve, step).map_err(pre)?;
            emit(Some(&out), &buf)?;
            let sidecar = to_json(&curve_sidecar(&curve));
            let mut side_path = out.into_os_string();
            side_path.push(".json");
            emit(Some(Path::new(&side_path)), &sidecar)?;
            emit(None, &sidecar)
        }
        Cmd::Pack { src, c0 } => {
            let l = load(&src)?;
            let oracle = l.oracle("pack")?;
            let c0s: Vec<f64> = match c0 {
                Some(list) => list
                    .split(',')
                    .map(|v| v.trim().parse().map_err(|_| Failure::Usage(format!("bad c0 {v:?}"))))
                    .collect::<Result<_, _>>()?,
                None => l.cfg.c0_grid.clone(),
            };
            if let Some(bad) = c0s.iter().find(|c| !(**c > 0.0 && **c < 0.125)) {
                return Err(pre(format!("c0 must be in (0, 1/8), got {bad}")));
            }
            let g = grid_for(&l)?;
            let mut rows = Vec::new();
            for c0 in c0s {
                let bad = bad_collection(&g, oracle, &l.cloud, c0).map_err(pre)?;
                let ratios: Vec<f64> = g.generation(g.k_min()).iter().map(|q| packing_ratio_with(&g, &bad, q)).collect();
                let max = ratios.iter().copied().fold(0.0, f64::max);
                rows.push(json!({ "c0": c0, "k_min": g.k_min(), "k_max": g.k_max(), "ratios": ratios, "max": max }));
            }
            if cli.json || l.out.is_some() {
                emit(l.out.as_deref(), &to_json(&rows))
            } else {
                let text: String = rows.iter().map(|r| format!("c0 = {}: max packing ratio {}\n", r["c0"], r["max"])).collect();
                emit(None, text.as_bytes())
            }
        }
        Cmd::Energy { src, x, r, kappa } => {
            let l = load(&src)?;
            let kappa = kappa.unwrap_or(l.cfg.kappa);
            let mut rows = Vec::new();
            for text in &x {
                let ball = Ball::new(parse_point(text)?, r).map_err(pre)?;
                let e = layer_energy(&l.cloud, &ball, kappa).map_err(pre)?;
                rows.push(e);
            }
            if cli.json || l.out.is_some() {
                emit(l.out.as_deref(), &to_json(&rows))
            } else {
                let text: String =
                    rows.iter().map(|e| format!("B(({}), {r}): energy {} over {} points\n", coords(&e.ball.center), e.value, e.points)).collect();
                emit(None, text.as_bytes())
            }
        }
        Cmd::Classify { src, assert } => {
            let wanted = assert.as_deref().map(parse_assert).transpose()?;
            let l = load(&src)?;
            let report = classify(&l)?;
            let bytes = to_json(&report);
            match &l.out {
                Some(p) => {
                    emit(Some(p), &bytes)?;
                    let value = serde_json::to_value(&report).expect("serializable");
                    if cli.json {
                        emit(None, &bytes)?;
                    } else {
                        emit(None, digest::render(&value).map_err(pre)?.as_bytes())?;
                    }
                }
                None => emit(None, &bytes)?,
            }
            match wanted {
                Some(names) => check_assert(&report, &names),
                None => Ok(()),
            }
        }
        Cmd::Report { path, out } => {
            let text = fs::read_to_string(&path).map_err(|e| pre(format!("{}: {e}", path.display())))?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| pre(format!("{}: {e}", path.display())))?;
            let body = if cli.json {
                to_json(&value["verdicts"])
            } else {
                digest::render(&value).map_err(pre)?.into_bytes()
            };
            emit(out.as_deref(), &body)
        }
    }
}

fn classify(l: &Loaded) -> Result<ClassificationReport, Failure> {
    match &l.spec {
        Some(spec) => classify_domain(spec, &l.cfg).map_err(pre),
        None => {
            let entry = SpecEntry { label: "cloud".into(), corpus: None };
            classify_cloud(entry, &l.cloud, None, &l.cfg).map_err(pre)
        }
    }
}

const VERDICTS: [&str; 5] = ["adr", "ur", "uniform", "nta", "chordarc"];

fn parse_assert(list: &str) -> Result<Vec<&'static str>, Failure> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim) {
        if name == "all" {
            out.extend(VERDICTS);
            continue;
        }
        let base = name.strip_suffix("chk").unwrap_or(name);
        let base = if base == "chordarc" || base == "chord_arc" { "chordarc" } else { base };
        match VERDICTS.iter().find(|v| **v == base) {
            Some(v) => out.push(*v),
            None => return Err(Failure::Usage(format!("unknown verdict {name:?}; expected one of {VERDICTS:?}"))),
        }
    }
    Ok(out)
}

fn check_assert(report: &ClassificationReport, names: &[&str]) -> Result<(), Failure> {
    let v = &report.verdicts;
    let failed: Vec<String> = names
        .iter()
        .filter_map(|name| {
            let verdict = match *name {
                "adr" => &v.adr,
                "ur" => &v.ur_diagnostic,
                "uniform" => &v.uniform,
                "nta" => &v.nta,
                _ => &v.chord_arc,
            };
            (verdict.status != Status::Pass).then(|| format!("{name}: {}", verdict.status))
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assert(failed.join(", ")))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}\n\nFor more information, try '--help'.");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Precondition(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_PRECONDITION)
        }
        Err(Failure::Assert(m)) => {
            eprintln!("assertion failed: {m}");
            ExitCode::from(EXIT_ASSERT)
        }
    }
}
