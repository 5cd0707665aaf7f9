use clap::{Args, Parser, Subcommand};
use microlocal::config::{DetectorMode, LoadedConfig, RunConfig};
use microlocal::detector::{classify_point, orbit_permutation, wavefront_scan, CellVerdict, DecayReport, Pass};
use microlocal::group::DilationGroup;
use microlocal::transform::synthesize_signal;
use microlocal::verifier::{
    anisotropy_gate, check_cone_approx, check_geometric_equivalence, fit_alpha1, norm_power_integral, stay_measure, ConeMode, ConeSearch, Integrability,
    StrongModeGate, WindowFamily,
};
use microlocal::Error;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "microlocal", version, about = "Wavefront set detection with continuous wavelet transforms over dilation groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Audit the structural conditions for the configured detector mode.
    VerifyGroup {
        #[command(flatten)]
        common: Common,
    },
    /// Scan the configured signal over a point × direction grid.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Run even when the group fails the strong-mode gate.
        #[arg(long)]
        force: bool,
        /// Classify orbit-excluded directions in permuted coordinates.
        #[arg(long)]
        permuted_pass: bool,
    },
    /// Classify one (x, ξ) pair and print its decay report as CSV.
    Probe {
        #[command(flatten)]
        common: Common,
        /// Comma-separated position, e.g. 0,0
        #[arg(allow_hyphen_values = true)]
        x: String,
        /// Comma-separated direction, e.g. 1,0
        #[arg(allow_hyphen_values = true)]
        xi: String,
    },
    /// Sample the configured signal on the [synthesize] grid.
    Synthesize {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    /// Config or argument problem.
    Config(String),
    /// A required condition failed.
    Condition(String),
    /// Singular cells where the config asserted none.
    Assertion(String),
    Runtime(Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 64,
            Failure::Condition(_) => 2,
            Failure::Assertion(_) => 1,
            Failure::Runtime(Error::Io(_)) => 74,
            Failure::Runtime(_) => 70,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Config(m),
            e => Failure::Runtime(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(Error::Io(e.to_string()))
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::VerifyGroup { common } => load(&common).and_then(|c| verify_group(&c)),
        Command::Analyze { common, force, permuted_pass } => load(&common).and_then(|c| analyze(&c, force, permuted_pass)),
        Command::Probe { common, x, xi } => load(&common).and_then(|c| probe(&c, &x, &xi)),
        Command::Synthesize { common } => load(&common).and_then(|c| synthesize(&c)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("config error: {m}"),
                Failure::Condition(m) => eprintln!("condition failure: {m}"),
                Failure::Assertion(m) => eprintln!("assertion failed: {m}"),
                Failure::Runtime(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn load(common: &Common) -> std::result::Result<LoadedConfig, Failure> {
    let mut loaded = LoadedConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        loaded.config.seed = seed;
    }
    if let Some(out) = &common.out {
        loaded.config.output = out.clone();
    }
    if let Some(n) = common.workers {
        if n == 0 {
            return Err(Failure::Config("--workers must be positive".into()));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(loaded)
}

fn output_dir(cfg: &RunConfig) -> std::result::Result<&Path, Failure> {
    std::fs::create_dir_all(&cfg.output)?;
    Ok(&cfg.output)
}

fn write_json(path: &Path, loaded: &LoadedConfig, command: &str, body: impl Serialize) -> Outcome {
    let meta: serde_json::Map<String, Value> = loaded.metadata(command).into_iter().map(|(k, v)| (k, Value::String(v))).collect();
    let doc = json!({ "metadata": meta, "config": loaded.config, "result": body });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Runtime(Error::Io(e.to_string())))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn as_json<T: Serialize>(r: &microlocal::Result<T>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).unwrap_or(Value::Null),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn verify_group(loaded: &LoadedConfig) -> Outcome {
    let cfg = &loaded.config;
    let v = &cfg.verifier;
    let d = cfg.group.dimension;
    let group = cfg.build_group()?;
    let direction = cfg.direction();
    let gate = anisotropy_gate(&group);
    let (window, mode) = match v.mode {
        DetectorMode::Strong => (cfg.strong_window(), ConeMode::Strong { window: cfg.strong_window() }),
        DetectorMode::Weak => (v.window_family.window(v.fit_n, d)?, ConeMode::Weak { family: v.window_family }),
    };
    let patch = v.family.patch(&direction, v.epsilon);
    let seed = cfg.seed;

    let mut fit = fit_alpha1(&group, &patch, &window, v.radius, v.fit_samples, v.fit_inner, seed);
    if v.fit_inner && matches!(fit, Err(Error::BudgetExhausted(_))) {
        eprintln!("warning: K_i(W0, V, R0) looks empty; fitting over K_o instead");
        fit = fit_alpha1(&group, &patch, &window, v.radius, v.fit_samples, false, seed);
    }
    let integral = norm_power_integral(&group, &patch, &window, v.radius, cfg.alpha2(), v.integral_proposals, seed.wrapping_add(1));
    let search = ConeSearch { screen: v.screen, max_level: v.max_level, ..ConeSearch::new(v.family, v.epsilon, v.radius, direction.clone(), v.cone_budget).with_seed(seed.wrapping_add(2)) };
    let cone = check_cone_approx(&group, &mode, &search);
    let stay = stay_measure(&group, &direction, &window, v.stay_points, seed.wrapping_add(3));
    let geometric = match (&cone, v.geometric_budget) {
        (Ok(c), n) if n > 0 => c.witness().map(|w| {
            check_geometric_equivalence(&group, &patch, &w.patch_prime, &window, v.radius, w.radius_prime, n, seed.wrapping_add(4))
        }),
        _ => None,
    };

    let mut failures = vec![];
    if v.mode == DetectorMode::Strong && gate == StrongModeGate::Impossible {
        failures.push(format!("strong unavailable: {}", gate.message()));
    }
    match &fit {
        Ok(f) if f.succeeded() => {}
        Ok(f) => failures.push(format!("norm envelope fit failed (alpha1 = {})", f.alpha1)),
        Err(e) => failures.push(format!("norm envelope fit: {e}")),
    }
    match &integral {
        Ok(i) if i.status == Integrability::Stable => {}
        Ok(_) => failures.push("norm-power integral not stable under a 4x budget".into()),
        Err(e) => failures.push(format!("norm-power integral: {e}")),
    }
    match &cone {
        Ok(c) if c.holds() => {}
        Ok(c) if c.counterexample().is_some() => failures.push("cone approximation fails: counterexample recorded".into()),
        Ok(_) => failures.push("cone approximation: no witness within budget".into()),
        Err(e) => failures.push(format!("cone approximation: {e}")),
    }
    match &stay {
        Ok(s) if s.value > 0.0 && s.value.is_finite() => {}
        Ok(s) => failures.push(format!("stay measure {} not positive and finite", s.value)),
        Err(e) => failures.push(format!("stay measure: {e}")),
    }
    if let Some(Ok(g)) = &geometric {
        if !g.consistent {
            failures.push("cone-set cross-check inconsistent".into());
        }
    }

    let body = json!({
        "mode": v.mode,
        "gate": gate,
        "gate_message": gate.message(),
        "fit": as_json(&fit),
        "power_integral": as_json(&integral),
        "cone_approximation": as_json(&cone),
        "stay_measure": as_json(&stay),
        "geometric": geometric.as_ref().map(as_json),
        "passed": failures.is_empty(),
        "failures": failures,
    });
    let path = output_dir(cfg)?.join("verify_group.json");
    write_json(&path, loaded, "verify-group", body)?;
    println!("report: {}", path.display());
    if let Ok(c) = &cone {
        if let Some(w) = c.witness() {
            println!("witness: epsilon' = {}, R' = {}, confirmed on {} samples", w.epsilon_prime, w.radius_prime, w.confirmed_samples);
        }
    }
    if failures.is_empty() {
        println!("all conditions hold for {:?} mode", v.mode);
        return Ok(());
    }
    for f in &failures {
        println!("FAIL {f}");
    }
    if v.mode == DetectorMode::Strong && gate == StrongModeGate::Impossible {
        let family = if cfg.group.kind == microlocal::group::GroupKind::Diagonal { WindowFamily::DiagonalBands } else { WindowFamily::SimilitudeBalls };
        println!(
            "suggestion: set verifier.mode = \"weak\" with verifier.window_family = \"{}\" and analyse with a wavelet family",
            serde_json::to_value(family).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
        );
    }
    Err(Failure::Condition(failures.join("; ")))
}

/// Decay report for cell (x, ξ), in permuted coordinates when ξ is orbit-excluded.
fn cell_report(cfg: &RunConfig, group: &DilationGroup, psi: &microlocal::wavelet::BandlimitedWavelet, x: &[f64], xi: &[f64], pass: Pass) -> microlocal::Result<DecayReport> {
    let u = cfg.signal.as_ref().ok_or_else(|| Error::Config("missing [signal] section".into()))?;
    match (pass, orbit_permutation(group, xi)) {
        (Pass::Permuted, Some(perm)) => {
            let p = |v: &[f64]| perm.iter().map(|&k| v[k]).collect::<Vec<f64>>();
            classify_point(&u.permuted(&perm)?, psi, group, &p(x), &p(xi), &cfg.detector)
        }
        _ => classify_point(u, psi, group, x, xi, &cfg.detector),
    }
}

fn analyze(loaded: &LoadedConfig, force: bool, permuted_flag: bool) -> Outcome {
    let cfg = &loaded.config;
    let u = cfg.signal.as_ref().ok_or_else(|| Failure::Config("analyze needs a [signal] section".into()))?;
    let group = cfg.build_group()?;
    let gate = anisotropy_gate(&group);
    if cfg.verifier.mode == DetectorMode::Strong && gate == StrongModeGate::Impossible && !force {
        return Err(Failure::Condition(format!("strong unavailable: {}; rerun with --force or use weak mode", gate.message())));
    }
    let psi = cfg.wavelet(&group)?;
    let points = cfg.scan_points();
    let directions = cfg.scan_directions();
    let permuted = permuted_flag || cfg.scan.permuted_pass;
    let map = wavefront_scan(u, &psi, &group, &points, &directions, &cfg.detector, permuted)?;
    for w in &map.warnings {
        eprintln!("warning: {w}");
    }
    let meta = loaded.metadata("analyze");
    let dir = output_dir(cfg)?;
    map.write_files(dir, "scan", &meta)?;

    let mut reports = vec![];
    for (i, x) in points.iter().enumerate() {
        for (j, xi) in directions.iter().enumerate() {
            let cell = map.cell(i, j);
            if cell.verdict == CellVerdict::Singular && reports.len() < cfg.scan.max_reports {
                reports.push(json!({ "point": i, "direction": j, "report": as_json(&cell_report(cfg, &group, &psi, x, xi, cell.pass)) }));
            }
        }
    }
    let counts: serde_json::Map<String, Value> = [CellVerdict::Regular, CellVerdict::Singular, CellVerdict::Inconclusive, CellVerdict::Unresolvable]
        .into_iter()
        .map(|v| (format!("{v:?}"), json!(map.count(v))))
        .collect();
    let body = json!({ "counts": counts, "warnings": map.warnings, "permuted_pass": permuted, "singular_reports": reports });
    write_json(&dir.join("scan.json"), loaded, "analyze", body)?;
    let singular = map.count(CellVerdict::Singular);
    println!("scan: {} cells, {} singular; outputs in {}", map.cells.len(), singular, dir.display());
    if cfg.scan.assert_regular && singular > 0 {
        return Err(Failure::Assertion(format!("{singular} singular cells")));
    }
    Ok(())
}

fn parse_vector(s: &str, d: usize, name: &str) -> std::result::Result<Vec<f64>, Failure> {
    let v: std::result::Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if v.len() == d => Ok(v),
        Ok(v) => Err(Failure::Config(format!("{name} has {} components, expected {d}", v.len()))),
        Err(e) => Err(Failure::Config(format!("{name}: {e}"))),
    }
}

fn probe(loaded: &LoadedConfig, x: &str, xi: &str) -> Outcome {
    let cfg = &loaded.config;
    let d = cfg.group.dimension;
    let (x, xi) = (parse_vector(x, d, "x")?, parse_vector(xi, d, "xi")?);
    let u = cfg.signal.as_ref().ok_or_else(|| Failure::Config("probe needs a [signal] section".into()))?;
    let group = cfg.build_group()?;
    let psi = cfg.wavelet(&group)?;
    let report = classify_point(u, &psi, &group, &x, &xi, &cfg.detector)?;
    let mut meta = loaded.metadata("probe");
    meta.push(("x".into(), format!("{x:?}")));
    meta.push(("xi".into(), format!("{xi:?}")));
    meta.push(("verdict".into(), format!("{:?}", report.verdict)));
    meta.push(("fitted_slope".into(), report.fitted_slope.map_or("none".into(), |s| format!("{s:.17e}"))));
    meta.push(("residual".into(), report.residual.map_or("none".into(), |s| format!("{s:.17e}"))));
    meta.push(("floor_hit".into(), report.floor_hit.to_string()));
    for w in &report.warnings {
        meta.push(("warning".into(), w.clone()));
    }
    report.write_csv(std::io::stdout().lock(), &meta)?;
    Ok(())
}

fn synthesize(loaded: &LoadedConfig) -> Outcome {
    let cfg = &loaded.config;
    let u = cfg.signal.as_ref().ok_or_else(|| Failure::Config("synthesize needs a [signal] section".into()))?;
    let grid = cfg.synthesis_grid()?;
    let signal = synthesize_signal(u, &grid)?;
    let path = output_dir(cfg)?.join("signal.toml");
    signal.write(&path, &loaded.metadata("synthesize"))?;
    println!("signal: {}", path.display());
    Ok(())
}
