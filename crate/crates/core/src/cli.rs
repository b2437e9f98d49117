//! The `masound` command line: one subcommand per experiment, CSV output.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde::Serialize;

use crate::beamform::{
    cbf_ma, cbf_ura, find_peaks, padp_ma, padp_ura, ArrayKind, ArrayTaper, BeamAxes, BeamPattern,
    LevelGrid, Padp,
};
use crate::channel::{CfrLayout, CfrSet, MaCfr};
use crate::compare::{align_paths, Comparison, PathSummary};
use crate::csvfmt::level;
use crate::error::{Error, Result};
use crate::io::{default_file_name, read_cfr, read_ma_cfr, write_cfr, write_ma_cfr};
use crate::pattern::{
    check_conjugate_symmetry, ma_power_pattern, ura_power_pattern, PowerPattern, UvLattice,
};
use crate::scenario::{parse_scenario, Scenario};
use crate::sic::{run_sic_observed, EstimationReport};
use crate::ura_estimate::run_ura_clean;

#[derive(Debug, Parser)]
#[command(
    name = "masound",
    version,
    about = "Multiplicative-array channel sounding toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// URA and MA power patterns on a (u, v) lattice, with an equivalence check.
    SynthPattern(CommonArgs),
    /// Write the simulated CFR files of the scenario.
    Simulate(CommonArgs),
    /// Beam pattern at the center frequency and PADP at one elevation.
    Beamscan(BeamscanArgs),
    /// Successive interference cancellation on the MA CFR.
    Estimate(EstimateArgs),
    /// URA reference extraction against MA estimation on the same channel.
    Compare(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Only warnings and errors on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BeamscanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Read CFR files from this directory instead of simulating.
    #[arg(long)]
    pub cfr_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Read the MA CFR files from this directory instead of simulating.
    #[arg(long)]
    pub cfr_dir: Option<PathBuf>,
    /// Write the residual beam and PADP of every iteration.
    #[arg(long)]
    pub snapshots: bool,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::SynthPattern(a) => synth_pattern(&Session::open(a)?),
        Command::Simulate(a) => simulate(&Session::open(a)?),
        Command::Beamscan(a) => beamscan(&Session::open(&a.common)?, a.cfr_dir.as_deref()),
        Command::Estimate(a) => estimate(
            &Session::open(&a.common)?,
            a.cfr_dir.as_deref(),
            a.snapshots,
        ),
        Command::Compare(a) => compare(&Session::open(a)?),
    }
}

/// Parsed scenario plus the output directory of one invocation.
struct Session {
    scenario: Scenario,
    seed: u64,
    out: PathBuf,
    quiet: bool,
}

impl Session {
    fn open(a: &CommonArgs) -> Result<Self> {
        let mut scenario = parse_scenario(&a.config)?;
        if let Some(s) = a.seed {
            scenario.seed = s;
        }
        fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
        let s = Self {
            seed: scenario.seed,
            scenario,
            out: a.out.clone(),
            quiet: a.quiet,
        };
        s.write("scenario.normalized.json", &s.scenario.dump())?;
        Ok(s)
    }

    fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn warn(&self, msg: impl AsRef<str>) {
        eprintln!("warning: {}", msg.as_ref());
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.path(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        self.info(format!("wrote {}", p.display()));
        Ok(p)
    }

    fn write_json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value).expect("report serializes");
        s.push('\n');
        self.write(name, &s)
    }
}

fn kind_name(kind: ArrayKind) -> &'static str {
    match kind {
        ArrayKind::Ura => "ura",
        ArrayKind::Ma => "ma",
    }
}

pub fn pattern_csv(p: &PowerPattern) -> String {
    let db = p.level_db();
    let mut s = String::from("u,v,level_db\n");
    for ((i, j), l) in db.indexed_iter() {
        let _ = writeln!(
            s,
            "{},{},{}",
            level(p.lattice.u[i]),
            level(p.lattice.v[j]),
            level(*l)
        );
    }
    s
}

/// Largest `|dB_URA - dB_MA|` over the lattice. Points where both patterns
/// vanish count as equal.
pub fn max_pattern_deviation_db(ura: &PowerPattern, ma: &PowerPattern) -> f64 {
    let (a, b) = (ura.level_db(), ma.level_db());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| if x == y { 0.0 } else { (x - y).abs() })
        .fold(
            0.0,
            |m, d| if d.is_nan() { f64::INFINITY } else { m.max(d) },
        )
}

#[derive(Debug, Serialize)]
struct PatternCheck {
    checked: bool,
    conjugate_symmetric: bool,
    max_deviation_db: Option<f64>,
    tolerance_db: f64,
    max_imag: f64,
    passed: Option<bool>,
}

fn synth_pattern(s: &Session) -> Result<()> {
    let ex = s.scenario.pattern_excitations()?;
    let lattice = UvLattice::square(s.scenario.pattern.lattice_points)?;
    let ura = ura_power_pattern(&ex.ura_x, &ex.ura_y, &ex.ura, &lattice)?;
    let ma = ma_power_pattern(&ex.ma_x, &ex.ma_y, &ex.ma, &lattice)?;
    s.write("pattern_ura.csv", &pattern_csv(&ura))?;
    s.write("pattern_ma.csv", &pattern_csv(&ma))?;

    let symmetric = check_conjugate_symmetry(&ex.ura_x) && check_conjugate_symmetry(&ex.ura_y);
    let tolerance_db = s.scenario.pattern.tolerance_db;
    let mut check = PatternCheck {
        checked: symmetric,
        conjugate_symmetric: symmetric,
        max_deviation_db: None,
        tolerance_db,
        max_imag: ma.max_imag,
        passed: None,
    };
    if !symmetric {
        s.warn("excitations are not conjugate-symmetric; URA/MA equivalence check skipped");
        s.write_json("pattern_check.json", &check)?;
        return Ok(());
    }
    let dev = max_pattern_deviation_db(&ura, &ma);
    check.max_deviation_db = Some(dev);
    check.passed = Some(dev <= tolerance_db);
    s.write_json("pattern_check.json", &check)?;
    s.info(format!(
        "max URA/MA deviation {dev:.3e} dB (tolerance {tolerance_db:.1e} dB)"
    ));
    if dev > tolerance_db {
        return Err(Error::CheckFailed(format!(
            "URA and MA patterns differ by {dev:.3e} dB, above {tolerance_db:.1e} dB"
        )));
    }
    Ok(())
}

fn simulate(s: &Session) -> Result<()> {
    let ura = s.scenario.simulate_ura(s.seed)?;
    let ma = s.scenario.simulate_ma(s.seed)?;
    if ura.is_none() && ma.is_none() {
        return Err(Error::invalid(
            "scenario declares neither a `ura` nor an `ma` array",
        ));
    }
    if let Some(c) = &ura {
        let p = s.path(default_file_name(CfrLayout::Ura));
        write_cfr(&p, c)?;
        s.info(format!("wrote {}", p.display()));
    }
    if let Some(c) = &ma {
        let (px, py) = write_ma_cfr(&s.out, c)?;
        s.info(format!("wrote {} and {}", px.display(), py.display()));
    }
    Ok(())
}

/// CFRs from a directory of files or simulated from the scenario.
fn load_cfrs(s: &Session, cfr_dir: Option<&Path>) -> Result<(Option<CfrSet>, Option<MaCfr>)> {
    let Some(dir) = cfr_dir else {
        return Ok((
            s.scenario.simulate_ura(s.seed)?,
            s.scenario.simulate_ma(s.seed)?,
        ));
    };
    let ura_path = dir.join(default_file_name(CfrLayout::Ura));
    let ma_path = dir.join(default_file_name(CfrLayout::MaX));
    let ura = if ura_path.exists() {
        Some(read_cfr(&ura_path)?)
    } else {
        None
    };
    let ma = if ma_path.exists() {
        Some(read_ma_cfr(dir)?)
    } else {
        None
    };
    if ura.is_none() && ma.is_none() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no CFR files in directory"),
        ));
    }
    Ok((ura, ma))
}

pub fn beam_csv(beam: &BeamPattern) -> String {
    let db = beam.level_db();
    let mut s = String::from("u,v,level_db\n");
    for ((i, j), l) in db.indexed_iter() {
        let p = beam.axes.uv(i, j);
        let _ = writeln!(s, "{},{},{}", level(p.u), level(p.v), level(*l));
    }
    s
}

fn beam_peaks_csv(beam: &BeamPattern, window_db: f64, min_sep: usize) -> Result<String> {
    let mut s = String::from("u,v,level_db\n");
    for p in find_peaks(&beam.level_grid(), window_db, min_sep)? {
        let uv = beam.axes.uv(p.index[0], p.index[1]);
        let _ = writeln!(s, "{},{},{}", level(uv.u), level(uv.v), level(p.level_db));
    }
    Ok(s)
}

/// PADP levels restricted to delays up to `max_delay_s`.
fn padp_levels(padp: &Padp, max_delay_s: Option<f64>) -> Array2<f64> {
    let db = padp.level_db();
    let keep = match max_delay_s {
        Some(m) => (0..padp.axis.n_bins)
            .take_while(|&k| padp.axis.delay(k) <= m)
            .count()
            .max(1),
        None => padp.axis.n_bins,
    };
    db.slice(ndarray::s![.., ..keep]).to_owned()
}

pub fn padp_csv(padp: &Padp, max_delay_s: Option<f64>) -> String {
    let db = padp_levels(padp, max_delay_s);
    let mut s = String::from("azimuth_deg,delay_ns,level_db\n");
    for ((i, k), l) in db.indexed_iter() {
        let _ = writeln!(
            s,
            "{},{},{}",
            level(padp.phi_deg[i]),
            level(padp.axis.delay(k) * 1e9),
            level(*l)
        );
    }
    s
}

fn padp_peaks_csv(
    padp: &Padp,
    max_delay_s: Option<f64>,
    window_db: f64,
    min_sep: usize,
) -> Result<String> {
    let levels = padp_levels(padp, max_delay_s);
    let (r, c) = levels.dim();
    let grid = LevelGrid::new([1, r, c], levels.iter().copied().collect())?;
    let mut s = String::from("azimuth_deg,delay_ns,level_db\n");
    for p in find_peaks(&grid, window_db, min_sep)? {
        let _ = writeln!(
            s,
            "{},{},{}",
            level(padp.phi_deg[p.index[1]]),
            level(padp.axis.delay(p.index[2]) * 1e9),
            level(p.level_db)
        );
    }
    Ok(s)
}

fn beamscan(s: &Session, cfr_dir: Option<&Path>) -> Result<()> {
    let (ura, ma) = load_cfrs(s, cfr_dir)?;
    let b = &s.scenario.beamscan;
    let axes = |dx: f64, dy: f64| -> Result<BeamAxes> {
        Ok(match b.lattice_points {
            Some(n) if b.lattice_periodic => BeamAxes::Uv(UvLattice::one_period(n, dx, dy)?),
            Some(n) => BeamAxes::Uv(UvLattice::square(n)?),
            None => BeamAxes::Angular(s.scenario.beam_scan()?),
        })
    };
    let phi = s.scenario.beam_scan()?.phi_deg;
    let max_delay_s = b.max_delay_ns.map(|d| d * 1e-9);

    let emit = |beam: BeamPattern, padp: Padp| -> Result<()> {
        let k = kind_name(beam.kind);
        s.write(&format!("beam_{k}.csv"), &beam_csv(&beam))?;
        s.write(
            &format!("beam_peaks_{k}.csv"),
            &beam_peaks_csv(&beam, b.peak_window_db, b.min_separation)?,
        )?;
        s.write(&format!("padp_{k}.csv"), &padp_csv(&padp, max_delay_s))?;
        s.write(
            &format!("padp_peaks_{k}.csv"),
            &padp_peaks_csv(&padp, max_delay_s, b.peak_window_db, b.min_separation)?,
        )?;
        Ok(())
    };

    if let Some(c) = &ura {
        let f = b.frequency_hz.unwrap_or_else(|| c.freqs.center_freq());
        let taper: Option<ArrayTaper> =
            b.taper.map(|t| t.build_ura(c.n_x(), c.n_y())).transpose()?;
        let beam = cbf_ura(c, axes(c.spacing_x_wl, c.spacing_y_wl)?, f, taper.as_ref())?;
        let padp = padp_ura(c, b.padp_theta_deg, &phi, b.pad_factor, taper.as_ref())?;
        emit(beam, padp)?;
    }
    if let Some(c) = &ma {
        let f = b.frequency_hz.unwrap_or_else(|| c.freqs().center_freq());
        let taper: Option<ArrayTaper> = b
            .taper
            .map(|t| t.build_ma(c.x.n_x(), c.y.n_y()))
            .transpose()?;
        let beam = cbf_ma(
            c,
            axes(c.x.axis_spacing(), c.y.axis_spacing())?,
            f,
            taper.as_ref(),
        )?;
        let padp = padp_ma(c, b.padp_theta_deg, &phi, b.pad_factor, taper.as_ref())?;
        emit(beam, padp)?;
    }
    Ok(())
}

pub fn paths_csv(report: &EstimationReport) -> String {
    let mut s = String::from("iteration,power_db,delay_ns,elevation_deg,azimuth_deg,stop_reason\n");
    for p in &report.paths {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            p.iteration,
            level(p.amplitude_db),
            level(p.delay_s * 1e9),
            level(p.direction.theta_deg),
            level(p.direction.phi_deg),
            report.stop_reason.as_str()
        );
    }
    s
}

fn angular_beam_csv(beam: &BeamPattern) -> String {
    let BeamAxes::Angular(grid) = &beam.axes else {
        return beam_csv(beam);
    };
    let db = beam.level_db();
    let mut s = String::from("elevation_deg,azimuth_deg,level_db\n");
    for ((i, j), l) in db.indexed_iter() {
        let _ = writeln!(
            s,
            "{},{},{}",
            level(grid.theta_deg[i]),
            level(grid.phi_deg[j]),
            level(*l)
        );
    }
    s
}

fn print_paths(s: &Session, title: &str, report: &EstimationReport) {
    if s.quiet {
        return;
    }
    println!(
        "{title}: {} path(s), stop: {}",
        report.paths.len(),
        report.stop_reason.as_str()
    );
    println!(
        "{:>4} {:>10} {:>10} {:>8} {:>8}",
        "iter", "power_dB", "delay_ns", "theta", "phi"
    );
    for p in &report.paths {
        println!(
            "{:>4} {:>10.3} {:>10.3} {:>8.1} {:>8.1}{}",
            p.iteration,
            p.amplitude_db,
            p.delay_s * 1e9,
            p.direction.theta_deg,
            p.direction.phi_deg,
            if p.joint { "  (joint)" } else { "" }
        );
    }
}

fn estimate(s: &Session, cfr_dir: Option<&Path>, snapshots: bool) -> Result<()> {
    let cfr = match cfr_dir {
        Some(dir) => read_ma_cfr(dir)?,
        None => s
            .scenario
            .simulate_ma(s.seed)?
            .ok_or_else(|| Error::invalid("estimate needs an `ma` array or --cfr-dir"))?,
    };
    let config = s.scenario.estimator_config()?;
    let max_delay_s = s.scenario.beamscan.max_delay_ns.map(|d| d * 1e-9);
    let mut frames: Vec<(usize, String, Option<String>)> = Vec::new();
    let report = run_sic_observed(&cfr, &config, |snap| {
        if snapshots {
            frames.push((
                snap.iteration,
                angular_beam_csv(snap.beam),
                snap.padp.map(|p| padp_csv(p, max_delay_s)),
            ));
        }
    })?;
    for (it, beam, padp) in &frames {
        s.write(&format!("snapshots/iter_{it:02}_beam.csv"), beam)?;
        if let Some(p) = padp {
            s.write(&format!("snapshots/iter_{it:02}_padp.csv"), p)?;
        }
    }
    s.write("paths.csv", &paths_csv(&report))?;
    s.write_json("report.json", &report)?;
    print_paths(s, "MA estimate", &report);
    Ok(())
}

fn summary_field(x: Option<f64>) -> String {
    x.map(level).unwrap_or_default()
}

pub fn comparison_csv(c: &Comparison) -> String {
    let mut s = String::from(
        "index,ura_delay_ns,ura_azimuth_deg,ura_power_db,ma_delay_ns,ma_azimuth_deg,ma_power_db,\
         err_delay_ns,err_azimuth_deg,err_power_db\n",
    );
    let cols = |p: Option<PathSummary>| {
        [
            summary_field(p.map(|p| p.delay_ns)),
            summary_field(p.map(|p| p.azimuth_deg)),
            summary_field(p.map(|p| p.power_db)),
        ]
        .join(",")
    };
    for r in &c.rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.index,
            cols(r.ura),
            cols(r.ma),
            cols(r.error())
        );
    }
    s
}

fn compare(s: &Session) -> Result<()> {
    let ura = s
        .scenario
        .simulate_ura(s.seed)?
        .ok_or_else(|| Error::invalid("compare needs a `ura` array"))?;
    let ma = s
        .scenario
        .simulate_ma(s.seed)?
        .ok_or_else(|| Error::invalid("compare needs an `ma` array"))?;
    let config = s.scenario.estimator_config()?;
    let ura_report = run_ura_clean(&ura, &config)?;
    let ma_report = run_sic_observed(&ma, &config, |_| {})?;
    let cmp = align_paths(&ura_report.paths, &ma_report.paths);
    s.write("paths_ura.csv", &paths_csv(&ura_report))?;
    s.write("paths_ma.csv", &paths_csv(&ma_report))?;
    s.write("compare.csv", &comparison_csv(&cmp))?;
    s.write_json("compare.json", &cmp)?;
    if cmp.count_mismatch {
        s.warn(format!(
            "path count mismatch: URA found {}, MA found {}",
            cmp.ura_count, cmp.ma_count
        ));
    }
    if !s.quiet {
        println!(
            "{:>3} | {:>8} {:>8} {:>8} | {:>8} {:>8} {:>8} | {:>7} {:>7} {:>7}",
            "#", "URA ns", "deg", "dB", "MA ns", "deg", "dB", "d ns", "d deg", "d dB"
        );
        let f = |x: Option<f64>, w: usize| {
            x.map(|v| format!("{v:>w$.2}"))
                .unwrap_or(format!("{:>w$}", "-"))
        };
        for r in &cmp.rows {
            let e = r.error();
            println!(
                "{:>3} | {} {} {} | {} {} {} | {} {} {}",
                r.index,
                f(r.ura.map(|p| p.delay_ns), 8),
                f(r.ura.map(|p| p.azimuth_deg), 8),
                f(r.ura.map(|p| p.power_db), 8),
                f(r.ma.map(|p| p.delay_ns), 8),
                f(r.ma.map(|p| p.azimuth_deg), 8),
                f(r.ma.map(|p| p.power_db), 8),
                f(e.map(|p| p.delay_ns), 7),
                f(e.map(|p| p.azimuth_deg), 7),
                f(e.map(|p| p.power_db), 7),
            );
        }
    }
    Ok(())
}
