//! JSON experiment description: arrays, frequency grid, paths, estimator
//! and per-command settings. Every optional field has a default, and
//! [`Scenario::dump`] writes the fully populated form back out.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{
    add_noise, add_noise_ma, check_delays, gen_ma_cfr, gen_ura_cfr, CfrSet, MaCfr,
};
use crate::error::{Error, Result};
use crate::model::{FrequencyGrid, MaGeometry, PathComponent, PhaseModel, ScanGrid, UraGeometry};
use crate::pattern::{auto_convolve, chebyshev_taper, steer, Excitation};
use crate::sic::{EstimatorConfig, TaperSpec};

/// Inclusive `start, start + step, ..., stop` in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AxisSpec {
    pub const fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSpec {
    pub theta_deg: AxisSpec,
    pub phi_deg: AxisSpec,
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self {
            theta_deg: AxisSpec::new(0.0, 90.0, 1.0),
            phi_deg: AxisSpec::new(90.0, 270.0, 1.0),
        }
    }
}

impl ScanSpec {
    pub fn grid(&self) -> Result<ScanGrid> {
        let (t, p) = (self.theta_deg, self.phi_deg);
        ScanGrid::uniform((t.start, t.stop, t.step), (p.start, p.stop, p.step))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySpec {
    pub f_start_hz: f64,
    pub f_stop_hz: f64,
    pub n_points: usize,
}

/// Spatial phase reference. `ref_freq_hz` defaults to the grid's center
/// point; with `narrowband = false` element phases scale with frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSpec {
    pub ref_freq_hz: Option<f64>,
    pub narrowband: bool,
}

impl Default for PhaseSpec {
    fn default() -> Self {
        Self {
            ref_freq_hz: None,
            narrowband: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UraSpec {
    pub m_count: usize,
    pub n_count: usize,
    pub dx_wl: f64,
    pub dy_wl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaSpec {
    pub x_count: usize,
    pub y_count: usize,
    pub spacing_wl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub power_db: f64,
    #[serde(default)]
    pub phase_deg: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub delay_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSpec {
    pub epsilon_db: f64,
    pub gate_db: Option<f64>,
    pub max_iterations: usize,
    pub scan: ScanSpec,
    pub pad_factor: usize,
    pub taper: Option<TaperSpec>,
    pub screen_db: f64,
    pub beam_candidates: usize,
    pub delay_candidates: usize,
    pub min_separation: usize,
    pub joint_tolerance_db: f64,
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        let c = EstimatorConfig::default();
        Self {
            epsilon_db: c.epsilon_db,
            gate_db: c.gate_db,
            max_iterations: c.max_iterations,
            scan: ScanSpec::default(),
            pad_factor: c.pad_factor,
            taper: c.taper,
            screen_db: c.screen_db,
            beam_candidates: c.beam_candidates,
            delay_candidates: c.delay_candidates,
            min_separation: c.min_separation,
            joint_tolerance_db: c.joint_tolerance_db,
        }
    }
}

impl EstimatorSpec {
    pub fn config(&self) -> Result<EstimatorConfig> {
        let c = EstimatorConfig {
            epsilon_db: self.epsilon_db,
            gate_db: self.gate_db,
            max_iterations: self.max_iterations,
            scan: self.scan.grid()?,
            pad_factor: self.pad_factor,
            taper: self.taper,
            screen_db: self.screen_db,
            beam_candidates: self.beam_candidates,
            delay_candidates: self.delay_candidates,
            min_separation: self.min_separation,
            joint_tolerance_db: self.joint_tolerance_db,
        };
        c.validate()?;
        Ok(c)
    }
}

/// `snr_db = None` leaves the simulated CFRs noiseless.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub snr_db: Option<f64>,
}

/// Settings of `synth-pattern`. Custom excitations are `[re, im]` pairs
/// along the URA axes and replace the taper when given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternSpec {
    pub taper: Option<TaperSpec>,
    pub custom_x: Option<Vec<[f64; 2]>>,
    pub custom_y: Option<Vec<[f64; 2]>>,
    pub steer_u: f64,
    pub steer_v: f64,
    pub lattice_points: usize,
    pub tolerance_db: f64,
}

impl Default for PatternSpec {
    fn default() -> Self {
        Self {
            taper: None,
            custom_x: None,
            custom_y: None,
            steer_u: 0.0,
            steer_v: 0.0,
            lattice_points: 512,
            tolerance_db: 1e-6,
        }
    }
}

/// Settings of `beamscan`. The beam is formed on a `(u, v)` lattice when
/// `lattice_points` is set and on the angular scan otherwise; the scan
/// defaults to the estimator's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamscanSpec {
    pub frequency_hz: Option<f64>,
    pub lattice_points: Option<usize>,
    /// Sample one period of the array factor instead of `[-1, 1]^2`, with
    /// wrap-around peak detection.
    pub lattice_periodic: bool,
    pub scan: Option<ScanSpec>,
    pub taper: Option<TaperSpec>,
    pub padp_theta_deg: f64,
    pub pad_factor: usize,
    pub max_delay_ns: Option<f64>,
    pub peak_window_db: f64,
    pub min_separation: usize,
}

impl Default for BeamscanSpec {
    fn default() -> Self {
        Self {
            frequency_hz: None,
            lattice_points: None,
            lattice_periodic: false,
            scan: None,
            taper: None,
            padp_theta_deg: 90.0,
            pad_factor: 4,
            max_delay_ns: None,
            peak_window_db: 20.0,
            min_separation: crate::beamform::DEFAULT_MIN_SEPARATION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub frequency: FrequencySpec,
    #[serde(default)]
    pub phase: PhaseSpec,
    #[serde(default)]
    pub ura: Option<UraSpec>,
    #[serde(default)]
    pub ma: Option<MaSpec>,
    #[serde(default)]
    pub paths: Vec<PathSpec>,
    #[serde(default)]
    pub estimator: EstimatorSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub pattern: PatternSpec,
    #[serde(default)]
    pub beamscan: BeamscanSpec,
}

pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario_str(&text, path)
}

/// Parses and validates; errors name the offending field and line.
pub fn parse_scenario_str(text: &str, path: &Path) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        Error::Scenario {
            path: path.to_path_buf(),
            reason: format!(
                "line {} column {}: at `{}`: {}",
                inner.line(),
                inner.column(),
                e.path(),
                inner
            ),
        }
    })?;
    scenario.validate().map_err(|e| match e {
        Error::InvalidInput(reason) => Error::Scenario {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    })?;
    Ok(scenario)
}

impl Scenario {
    /// Checks every invariant the commands rely on.
    pub fn validate(&self) -> Result<()> {
        let freqs = self.freqs()?;
        if let Some(r) = self.phase.ref_freq_hz {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid("phase.ref_freq_hz must be positive"));
            }
        }
        self.ura_geometry()?;
        self.ma_geometry()?;
        let paths = self.path_components()?;
        check_delays(&paths, &freqs)?;
        self.estimator.config()?;
        if let Some(snr) = self.noise.snr_db {
            if snr.is_nan() {
                return Err(Error::invalid("noise.snr_db is NaN"));
            }
        }
        let p = &self.pattern;
        if p.lattice_points < 2 {
            return Err(Error::invalid("pattern.lattice_points must be >= 2"));
        }
        if !(p.tolerance_db.is_finite() && p.tolerance_db > 0.0) {
            return Err(Error::invalid("pattern.tolerance_db must be positive"));
        }
        if !(p.steer_u.abs() <= 1.0 && p.steer_v.abs() <= 1.0) {
            return Err(Error::invalid(
                "pattern steering cosines must lie in [-1, 1]",
            ));
        }
        let b = &self.beamscan;
        if let Some(f) = b.frequency_hz {
            if freqs.index_of(f).is_none() {
                return Err(Error::OffGridFrequency(f));
            }
        }
        if let Some(n) = b.lattice_points {
            if n < 2 {
                return Err(Error::invalid("beamscan.lattice_points must be >= 2"));
            }
        }
        if let Some(s) = b.scan {
            s.grid()?;
        }
        if !(0.0..=90.0).contains(&b.padp_theta_deg) {
            return Err(Error::invalid(
                "beamscan.padp_theta_deg must lie in [0, 90]",
            ));
        }
        if b.pad_factor == 0 {
            return Err(Error::invalid("beamscan.pad_factor must be >= 1"));
        }
        if !(b.peak_window_db.is_finite() && b.peak_window_db >= 0.0) {
            return Err(Error::invalid("beamscan.peak_window_db must be >= 0"));
        }
        if let Some(d) = b.max_delay_ns {
            if !(d > 0.0) {
                return Err(Error::invalid("beamscan.max_delay_ns must be positive"));
            }
        }
        Ok(())
    }

    pub fn freqs(&self) -> Result<FrequencyGrid> {
        let f = self.frequency;
        FrequencyGrid::new(f.f_start_hz, f.f_stop_hz, f.n_points)
    }

    pub fn phase_model(&self) -> Result<PhaseModel> {
        let freqs = self.freqs()?;
        let ref_freq_hz = self
            .phase
            .ref_freq_hz
            .unwrap_or_else(|| freqs.center_freq());
        Ok(PhaseModel {
            ref_freq_hz,
            narrowband: self.phase.narrowband,
        })
    }

    pub fn ura_geometry(&self) -> Result<Option<UraGeometry>> {
        self.ura
            .map(|u| UraGeometry::new(u.m_count, u.n_count, u.dx_wl, u.dy_wl))
            .transpose()
    }

    pub fn ma_geometry(&self) -> Result<Option<MaGeometry>> {
        self.ma
            .map(|m| MaGeometry::new(m.x_count, m.y_count, m.spacing_wl))
            .transpose()
    }

    pub fn path_components(&self) -> Result<Vec<PathComponent>> {
        self.paths
            .iter()
            .enumerate()
            .map(|(i, p)| {
                PathComponent::from_db(p.power_db, p.phase_deg, p.theta_deg, p.phi_deg, p.delay_ns)
                    .map_err(|e| Error::invalid(format!("paths[{i}]: {e}")))
            })
            .collect()
    }

    pub fn estimator_config(&self) -> Result<EstimatorConfig> {
        self.estimator.config()
    }

    pub fn beam_scan(&self) -> Result<ScanGrid> {
        self.beamscan.scan.unwrap_or(self.estimator.scan).grid()
    }

    /// Noiseless or noisy URA CFR; `None` without a URA in the scenario.
    pub fn simulate_ura(&self, seed: u64) -> Result<Option<CfrSet>> {
        let Some(geometry) = self.ura_geometry()? else {
            return Ok(None);
        };
        let cfr = gen_ura_cfr(
            &self.path_components()?,
            &geometry,
            &self.freqs()?,
            &self.phase_model()?,
        )?;
        Ok(Some(add_noise(&cfr, self.noise.snr_db, seed)?))
    }

    /// Noise for the MA draws from `seed + 1`, independent of the URA's.
    pub fn simulate_ma(&self, seed: u64) -> Result<Option<MaCfr>> {
        let Some(geometry) = self.ma_geometry()? else {
            return Ok(None);
        };
        let cfr = gen_ma_cfr(
            &self.path_components()?,
            &geometry,
            &self.freqs()?,
            &self.phase_model()?,
        )?;
        Ok(Some(add_noise_ma(
            &cfr,
            self.noise.snr_db,
            seed.wrapping_add(1),
        )?))
    }

    /// URA axis excitations of `synth-pattern`, steered, and the MA
    /// sub-array excitations derived from them by auto-convolution.
    pub fn pattern_excitations(&self) -> Result<PatternExcitations> {
        let ura = self
            .ura_geometry()?
            .ok_or_else(|| Error::invalid("synth-pattern needs a `ura` geometry"))?;
        let ma = match self.ma_geometry()? {
            Some(m) => m,
            None => ura.equivalent_ma()?,
        };
        if (ma.x_count, ma.y_count) != (2 * ura.m_count - 1, 2 * ura.n_count - 1) {
            return Err(Error::invalid(format!(
                "MA {}+{} is not the equivalent of URA {}x{}",
                ma.x_count, ma.y_count, ura.m_count, ura.n_count
            )));
        }
        if ma.spacing_wl != ura.dx_wl || ma.spacing_wl != ura.dy_wl {
            return Err(Error::invalid("MA and URA spacings differ"));
        }
        let p = &self.pattern;
        let base = |custom: &Option<Vec<[f64; 2]>>, n: usize| -> Result<Excitation> {
            if let Some(w) = custom {
                if w.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "custom excitation has {} weights, array axis has {n}",
                        w.len()
                    )));
                }
                return Excitation::new(
                    w.iter()
                        .map(|&[re, im]| num_complex::Complex64::new(re, im))
                        .collect(),
                );
            }
            match p.taper {
                Some(TaperSpec::Chebyshev { sidelobe_db }) => chebyshev_taper(n, sidelobe_db),
                None => Excitation::uniform(n),
            }
        };
        let ura_x = steer(&base(&p.custom_x, ura.m_count)?, p.steer_u, ura.dx_wl)?;
        let ura_y = steer(&base(&p.custom_y, ura.n_count)?, p.steer_v, ura.dy_wl)?;
        let ma_x = auto_convolve(&ura_x);
        let ma_y = auto_convolve(&ura_y);
        Ok(PatternExcitations {
            ura,
            ma,
            ura_x,
            ura_y,
            ma_x,
            ma_y,
        })
    }

    /// Pretty JSON with every default filled in.
    pub fn dump(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone)]
pub struct PatternExcitations {
    pub ura: UraGeometry,
    pub ma: MaGeometry,
    pub ura_x: Excitation,
    pub ura_y: Excitation,
    pub ma_x: Excitation,
    pub ma_y: Excitation,
}
