//! Successive interference cancellation on a multiplicative array.
//!
//! Each iteration scans the residual MA beam at the center frequency point,
//! takes the PADP at the detected elevation, halves the peak delay, gates
//! the per-element impulse responses around that delay using the response
//! of a synthetic unit path, estimates the amplitude from the gated data and
//! subtracts the reconstructed path. Iteration stops once a candidate falls
//! more than `epsilon_db` below the first accepted path.
//!
//! Distinct paths sharing a direction produce cross terms `2 a_i a_j` at
//! `tau_i + tau_j` that can outrank a weak true term. Candidates are
//! therefore screened: the gated data must explain the PADP peak that
//! nominated it, and both sub-arrays must see energy at the halved delay.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beamform::{
    cbf_ma, delay_response, find_peaks, ma_beam_spectra, padp_ma_with, ArrayTaper, BeamAxes,
    BeamPattern, Padp, DEFAULT_MIN_SEPARATION,
};
use crate::channel::{gen_ma_cfr, MaCfr};
use crate::error::{Error, Result};
use crate::model::{uv_unmap, Direction, FrequencyGrid, PathComponent, ScanGrid};
use crate::pattern::{auto_convolve, chebyshev_taper};
use crate::transform::{cfr_to_cir, cir_to_cfr, Cir, DelayTransform};

/// Spatial taper applied while scanning. A Chebyshev taper on a URA axis
/// of `M` elements corresponds, on an MA sub-array of `2M - 1` elements, to
/// its auto-convolution, so both arrays see the same power pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaperSpec {
    Chebyshev { sidelobe_db: f64 },
}

impl TaperSpec {
    pub fn build_ura(&self, m_count: usize, n_count: usize) -> Result<ArrayTaper> {
        match *self {
            TaperSpec::Chebyshev { sidelobe_db } => Ok(ArrayTaper {
                x: chebyshev_taper(m_count, sidelobe_db)?,
                y: chebyshev_taper(n_count, sidelobe_db)?,
            }),
        }
    }

    pub fn build_ma(&self, x_count: usize, y_count: usize) -> Result<ArrayTaper> {
        let t = self.build_ura((x_count + 1) / 2, (y_count + 1) / 2)?;
        Ok(ArrayTaper {
            x: auto_convolve(&t.x),
            y: auto_convolve(&t.y),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Dynamic range below the first path at which iteration stops.
    pub epsilon_db: f64,
    /// Delay-gate threshold; `None` reuses `epsilon_db`.
    pub gate_db: Option<f64>,
    pub max_iterations: usize,
    pub scan: ScanGrid,
    pub pad_factor: usize,
    pub taper: Option<TaperSpec>,
    /// Tolerance of the candidate consistency checks.
    pub screen_db: f64,
    /// Beam maxima tried per iteration before giving up.
    pub beam_candidates: usize,
    /// PADP maxima tried per beam maximum.
    pub delay_candidates: usize,
    pub min_separation: usize,
    /// Sub-array and MA amplitude estimates further apart than this mark
    /// the path as a joint estimate of unresolved paths.
    pub joint_tolerance_db: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            epsilon_db: 30.0,
            gate_db: None,
            max_iterations: 16,
            scan: ScanGrid::estimation_default(),
            pad_factor: 16,
            taper: None,
            screen_db: 3.0,
            beam_candidates: 4,
            delay_candidates: 4,
            min_separation: DEFAULT_MIN_SEPARATION,
            joint_tolerance_db: 1.0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_db.is_finite() && self.epsilon_db > 0.0) {
            return Err(Error::invalid("epsilon_db must be a positive dB value"));
        }
        if let Some(g) = self.gate_db {
            if !(g > 0.0) {
                return Err(Error::invalid("gate_db must be positive"));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be >= 1"));
        }
        if self.pad_factor == 0 {
            return Err(Error::invalid("pad_factor must be >= 1"));
        }
        if !(self.screen_db.is_finite() && self.screen_db > 0.0) {
            return Err(Error::invalid("screen_db must be a positive dB value"));
        }
        if self.beam_candidates == 0 || self.delay_candidates == 0 {
            return Err(Error::invalid("candidate counts must be >= 1"));
        }
        Ok(())
    }

    pub fn gate_threshold_db(&self) -> f64 {
        self.gate_db.unwrap_or(self.epsilon_db)
    }

    /// Linear amplitude ratio `10^(-epsilon/20)` of the stop rule.
    pub fn guard_ratio(&self) -> f64 {
        10f64.powf(-self.epsilon_db / 20.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatedPath {
    pub amplitude: Complex64,
    pub amplitude_db: f64,
    pub direction: Direction,
    pub delay_s: f64,
    pub iteration: usize,
    pub residual_energy_after: f64,
    pub joint: bool,
}

impl EstimatedPath {
    pub fn as_component(&self) -> PathComponent {
        PathComponent {
            amplitude: self.amplitude,
            direction: self.direction,
            delay_s: self.delay_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    DynamicRange,
    MaxIterations,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::DynamicRange => "dynamic-range",
            StopReason::MaxIterations => "max-iterations",
        }
    }
}

/// What happened in one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationDiagnostics {
    pub iteration: usize,
    pub beam_peak_db: f64,
    pub padp_peak_db: Option<f64>,
    /// Amplitude of the candidate that reached the stop rule.
    pub candidate_db: Option<f64>,
    pub gate_start_s: Option<f64>,
    pub gate_stop_s: Option<f64>,
    pub gate_bins: usize,
    pub rejected_candidates: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub paths: Vec<EstimatedPath>,
    pub stop_reason: StopReason,
    pub diagnostics: Vec<IterationDiagnostics>,
    /// `|alpha_max|`, frozen at the first accepted path.
    pub alpha_max: Option<f64>,
    /// The final iteration found no candidate passing the screening.
    pub exhausted: bool,
}

/// State handed to observers after each iteration's scans.
pub struct Snapshot<'a> {
    pub iteration: usize,
    pub residual: &'a MaCfr,
    pub beam: &'a BeamPattern,
    pub padp: Option<&'a Padp>,
}

/// Direction of the strongest beam maximum, tie-broken like `find_peaks`.
pub fn detect_strongest(beam: &BeamPattern) -> Result<Direction> {
    if beam.values.iter().all(|b| b.norm() == 0.0) {
        return Err(Error::NoSignal("beam pattern is identically zero".into()));
    }
    let top = find_peaks(&beam.level_grid(), 0.0, 1)?;
    beam_direction(beam, top[0].index[0], top[0].index[1])
}

fn beam_direction(beam: &BeamPattern, i: usize, j: usize) -> Result<Direction> {
    match &beam.axes {
        BeamAxes::Angular(g) => Ok(g.direction(i, j)),
        BeamAxes::Uv(l) => uv_unmap(l.point(i, j)),
    }
}

/// Azimuth and delay of the PADP maximum. MA delays are halved to undo the
/// doubling of the sub-array product.
pub fn refine_on_padp(padp: &Padp) -> Result<(f64, f64)> {
    if padp.values.iter().all(|b| b.norm() == 0.0) {
        return Err(Error::NoPeak("PADP is identically zero".into()));
    }
    let top = find_peaks(&padp.level_grid(), 0.0, 1)?;
    Ok(padp_point(padp, top[0].index[1], top[0].index[2]))
}

fn padp_point(padp: &Padp, i_phi: usize, bin: usize) -> (f64, f64) {
    let tau = padp.axis.delay(bin);
    let tau = match padp.kind {
        crate::beamform::ArrayKind::Ma => tau / 2.0,
        crate::beamform::ArrayKind::Ura => tau,
    };
    (padp.phi_deg[i_phi], tau)
}

/// Binary delay gate: bins where `|h|` exceeds `10^(-threshold/20) max |h|`.
pub fn build_label_vector(synthetic_cir: &[Complex64], threshold_db: f64) -> Vec<bool> {
    if threshold_db == f64::INFINITY {
        return vec![true; synthetic_cir.len()];
    }
    let peak = synthetic_cir.iter().map(|h| h.norm()).fold(0.0, f64::max);
    let floor = peak * 10f64.powf(-threshold_db / 20.0);
    synthetic_cir
        .iter()
        .map(|h| h.norm() > floor || h.norm() == peak)
        .collect()
}

/// Applies one gate to every element's impulse response.
pub fn extract_path_cir(residual: &Cir, gate: &[bool]) -> Result<Cir> {
    if gate.len() != residual.axis.n_bins {
        return Err(Error::DimensionMismatch(format!(
            "gate has {} bins, CIR has {}",
            gate.len(),
            residual.axis.n_bins
        )));
    }
    let mut out = residual.clone();
    for mut lane in out.values.lanes_mut(ndarray::Axis(2)) {
        for (h, keep) in lane.iter_mut().zip(gate) {
            if !keep {
                *h = Complex64::new(0.0, 0.0);
            }
        }
    }
    Ok(out)
}

/// Amplitude read from (gated) MA data at one direction and delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    /// Complex amplitude; magnitude from the MA product, phase branch from
    /// the sub-arrays.
    pub amplitude: Complex64,
    /// MA PADP value at the doubled delay.
    pub ma_response: Complex64,
    /// Sub-array delay responses at the delay itself.
    pub x_response: Complex64,
    pub y_response: Complex64,
}

impl PowerEstimate {
    /// Geometric mean of the sub-array magnitudes: an amplitude estimate
    /// that does not rely on the MA product.
    pub fn subarray_amplitude(&self) -> f64 {
        (self.x_response.norm() * self.y_response.norm()).sqrt()
    }
}

/// Complex amplitude from MA and sub-array delay responses: magnitude
/// `sqrt |b_MA|`, phase `arg(b_MA) / 2` on the branch nearer the phase of
/// `b_x + b_y`.
fn combine(ma: Complex64, bx: Complex64, by: Complex64) -> Complex64 {
    use std::f64::consts::PI;
    let wrap = |a: f64| (a + PI).rem_euclid(2.0 * PI) - PI;
    let half = ma.arg() / 2.0;
    let reference = (bx + by).arg();
    let phase = if wrap(half - reference).abs() <= wrap(half + PI - reference).abs() {
        half
    } else {
        half + PI
    };
    Complex64::from_polar(ma.norm().sqrt(), phase)
}

impl PowerEstimate {
    fn from_responses(ma: Complex64, bx: Complex64, by: Complex64) -> Result<Self> {
        let est = Self {
            amplitude: combine(ma, bx, by),
            ma_response: ma,
            x_response: bx,
            y_response: by,
        };
        let mag = est.amplitude.norm();
        if !(mag.is_finite() && mag > f64::MIN_POSITIVE) {
            return Err(Error::NoPeak(
                "gated response vanished at the path delay".into(),
            ));
        }
        Ok(est)
    }

    /// Divides every response by the matching response of `reference`,
    /// typically a unit path passed through the same gate.
    pub fn normalized_by(&self, reference: &PowerEstimate) -> Result<Self> {
        Self::from_responses(
            self.ma_response / reference.ma_response,
            self.x_response / reference.x_response,
            self.y_response / reference.y_response,
        )
    }
}

/// `|alpha| = sqrt |b_MA(2 tau)|` read from gated MA data; the MA value
/// fixes the phase up to a sign and the sub-arrays pick the branch.
pub fn estimate_power(
    extracted: &MaCfr,
    direction: Direction,
    tau_s: f64,
    taper: Option<&ArrayTaper>,
) -> Result<PowerEstimate> {
    let (x, y) = ma_beam_spectra(extracted, direction.uv(), taper);
    let freqs = extracted.freqs();
    let prod: Vec<Complex64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();
    PowerEstimate::from_responses(
        delay_response(&prod, freqs, 2.0 * tau_s),
        delay_response(&x, freqs, tau_s),
        delay_response(&y, freqs, tau_s),
    )
}

/// What [`estimate_power`] returns for a unit path at `tau_s` after the
/// same gate. Steering at the path's own direction reduces each sub-array
/// beam to `exp(-j 2 pi f tau)`, and gating commutes with beamforming, so
/// one lane suffices.
pub fn gated_unit_reference(
    tr: &DelayTransform,
    freqs: &FrequencyGrid,
    tau_s: f64,
    gate: &[bool],
) -> Result<PowerEstimate> {
    let unit: Vec<Complex64> = freqs
        .iter()
        .map(|f| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (f * tau_s).fract()))
        .collect();
    let mut cir = tr.to_delay(&unit);
    for (h, keep) in cir.iter_mut().zip(gate) {
        if !keep {
            *h = Complex64::new(0.0, 0.0);
        }
    }
    let s = tr.to_frequency(&cir);
    let sq: Vec<Complex64> = s.iter().map(|a| a * a).collect();
    let b = delay_response(&s, freqs, tau_s);
    PowerEstimate::from_responses(delay_response(&sq, freqs, 2.0 * tau_s), b, b)
}

/// Removes the reconstructed path from both sub-array responses.
pub fn subtract_path(residual: &MaCfr, path: &EstimatedPath) -> Result<MaCfr> {
    if !(path.amplitude.is_finite() && path.delay_s.is_finite()) {
        return Err(Error::invalid("path parameters must be finite"));
    }
    let geometry = residual.geometry()?;
    let model = gen_ma_cfr(
        &[path.as_component()],
        &geometry,
        residual.freqs(),
        residual.phase(),
    )?;
    residual.sub(&model)
}

struct Candidate {
    direction: Direction,
    tau_s: f64,
    estimate: PowerEstimate,
    gate: (f64, f64, usize),
    padp_peak_db: f64,
}

struct Context<'a> {
    config: &'a EstimatorConfig,
    tr: DelayTransform,
    taper: Option<ArrayTaper>,
}

impl Context<'_> {
    fn evaluate(
        &self,
        residual: &MaCfr,
        cir: &(Cir, Cir),
        direction: Direction,
        tau_s: f64,
    ) -> Result<(PowerEstimate, (f64, f64, usize))> {
        let unit = EstimatedPath {
            amplitude: Complex64::new(1.0, 0.0),
            amplitude_db: 0.0,
            direction,
            delay_s: tau_s,
            iteration: 0,
            residual_energy_after: 0.0,
            joint: false,
        };
        // every element sees the same delay profile, so one lane suffices
        let geometry = residual.geometry()?;
        let synth = gen_ma_cfr(
            &[unit.as_component()],
            &geometry,
            residual.freqs(),
            residual.phase(),
        )?;
        let centre = synth.x.line().row(synth.x.n_x() / 2).to_vec();
        let synth_cir = self.tr.to_delay(&centre);
        let gate = build_label_vector(&synth_cir, self.config.gate_threshold_db());
        let first = gate.iter().position(|g| *g).unwrap_or(0);
        let last = gate.iter().rposition(|g| *g).unwrap_or(0);
        let count = gate.iter().filter(|g| **g).count();
        let ext_x = cir_to_cfr(&extract_path_cir(&cir.0, &gate)?, &self.tr, &residual.x)?;
        let ext_y = cir_to_cfr(&extract_path_cir(&cir.1, &gate)?, &self.tr, &residual.y)?;
        let extracted = MaCfr::new(ext_x, ext_y)?;
        let raw = estimate_power(&extracted, direction, tau_s, self.taper.as_ref())?;
        let est = raw.normalized_by(&gated_unit_reference(
            &self.tr,
            residual.freqs(),
            tau_s,
            &gate,
        )?)?;
        let ax = self.tr.axis();
        Ok((est, (ax.delay(first), ax.delay(last), count)))
    }

    fn passes_screen(&self, est: &PowerEstimate, padp_peak: f64) -> bool {
        let a = est.amplitude.norm();
        let power_ratio = 10f64.powf(-self.config.screen_db / 10.0);
        let amp_ratio = 10f64.powf(-self.config.screen_db / 20.0);
        a * a >= padp_peak * power_ratio && est.subarray_amplitude() >= a * amp_ratio
    }

    /// Walks beam maxima and their PADP maxima until a candidate passes.
    fn search(
        &self,
        residual: &MaCfr,
        beam: &BeamPattern,
        diag: &mut IterationDiagnostics,
        first_padp: &mut Option<Padp>,
    ) -> Result<Option<Candidate>> {
        let scan = &self.config.scan;
        let beam_peaks = find_peaks(
            &beam.level_grid(),
            self.config.epsilon_db,
            self.config.min_separation,
        )?;
        let cir = (
            cfr_to_cir(&residual.x, &self.tr)?,
            cfr_to_cir(&residual.y, &self.tr)?,
        );
        for bp in beam_peaks.iter().take(self.config.beam_candidates) {
            let theta = scan.theta_deg[bp.index[0]];
            let padp = padp_ma_with(
                residual,
                theta,
                &scan.phi_deg,
                &self.tr,
                self.taper.as_ref(),
            )?;
            let padp_peaks = find_peaks(
                &padp.level_grid(),
                self.config.epsilon_db,
                self.config.min_separation,
            )?;
            if diag.padp_peak_db.is_none() {
                diag.padp_peak_db = padp_peaks.first().map(|p| p.level_db);
            }
            for pp in padp_peaks.iter().take(self.config.delay_candidates) {
                let (phi, tau) = padp_point(&padp, pp.index[1], pp.index[2]);
                let direction = Direction::new(theta, phi)?;
                let peak_mag = padp.values[[pp.index[1], pp.index[2]]].norm();
                let (est, gate) = match self.evaluate(residual, &cir, direction, tau) {
                    Ok(v) => v,
                    Err(Error::NoPeak(_)) => {
                        diag.rejected_candidates += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                if self.passes_screen(&est, peak_mag) {
                    if first_padp.is_none() {
                        *first_padp = Some(padp);
                    }
                    return Ok(Some(Candidate {
                        direction,
                        tau_s: tau,
                        estimate: est,
                        gate,
                        padp_peak_db: pp.level_db,
                    }));
                }
                diag.rejected_candidates += 1;
            }
            if first_padp.is_none() {
                *first_padp = Some(padp);
            }
        }
        Ok(None)
    }
}

pub fn run_sic(cfr: &MaCfr, config: &EstimatorConfig) -> Result<EstimationReport> {
    run_sic_observed(cfr, config, |_| {})
}

/// [`run_sic`] with a callback receiving the residual, beam and PADP of
/// every iteration.
pub fn run_sic_observed(
    cfr: &MaCfr,
    config: &EstimatorConfig,
    mut observer: impl FnMut(&Snapshot<'_>),
) -> Result<EstimationReport> {
    config.validate()?;
    if cfr.is_zero() {
        return Err(Error::NoSignal("input CFR is identically zero".into()));
    }
    let geometry = cfr.geometry()?;
    let ctx = Context {
        config,
        tr: DelayTransform::new(cfr.freqs(), config.pad_factor)?,
        taper: config
            .taper
            .map(|t| t.build_ma(geometry.x_count, geometry.y_count))
            .transpose()?,
    };
    let fc = cfr.freqs().center_freq();
    let guard = config.guard_ratio();

    let mut residual = cfr.clone();
    let mut paths: Vec<EstimatedPath> = Vec::new();
    let mut diagnostics = Vec::new();
    let mut alpha_max: Option<f64> = None;
    let mut exhausted = false;
    let mut stop = StopReason::MaxIterations;

    for q in 0..config.max_iterations {
        let iteration = q + 1;
        let beam = cbf_ma(
            &residual,
            BeamAxes::Angular(config.scan.clone()),
            fc,
            ctx.taper.as_ref(),
        )?;
        let beam_peak = beam.values.iter().map(|b| b.norm()).fold(0.0, f64::max);
        let mut diag = IterationDiagnostics {
            iteration,
            beam_peak_db: 10.0 * beam_peak.log10(),
            padp_peak_db: None,
            candidate_db: None,
            gate_start_s: None,
            gate_stop_s: None,
            gate_bins: 0,
            rejected_candidates: 0,
            accepted: false,
        };
        if beam_peak == 0.0 {
            observer(&Snapshot {
                iteration,
                residual: &residual,
                beam: &beam,
                padp: None,
            });
            diagnostics.push(diag);
            stop = StopReason::DynamicRange;
            exhausted = true;
            break;
        }
        let mut padp = None;
        let found = ctx.search(&residual, &beam, &mut diag, &mut padp)?;
        observer(&Snapshot {
            iteration,
            residual: &residual,
            beam: &beam,
            padp: padp.as_ref(),
        });
        let Some(cand) = found else {
            diagnostics.push(diag);
            stop = StopReason::DynamicRange;
            exhausted = true;
            break;
        };
        let amp = cand.estimate.amplitude.norm();
        diag.candidate_db = Some(20.0 * amp.log10());
        diag.padp_peak_db = Some(cand.padp_peak_db);
        diag.gate_start_s = Some(cand.gate.0);
        diag.gate_stop_s = Some(cand.gate.1);
        diag.gate_bins = cand.gate.2;
        // a candidate stronger than its predecessor comes from a residual
        // inflated by an imperfect subtraction, not from a remaining path
        let rising = paths.last().is_some_and(|p| amp > p.amplitude.norm());
        if let Some(max) = alpha_max {
            if amp <= max * guard || rising {
                diagnostics.push(diag);
                stop = StopReason::DynamicRange;
                break;
            }
        } else {
            alpha_max = Some(amp);
        }
        let sub_db = 20.0 * cand.estimate.subarray_amplitude().log10();
        let mut path = EstimatedPath {
            amplitude: cand.estimate.amplitude,
            amplitude_db: 20.0 * amp.log10(),
            direction: cand.direction,
            delay_s: cand.tau_s,
            iteration,
            residual_energy_after: 0.0,
            joint: (sub_db - 20.0 * amp.log10()).abs() > config.joint_tolerance_db,
        };
        residual = subtract_path(&residual, &path)?;
        path.residual_energy_after = residual.energy();
        diag.accepted = true;
        diagnostics.push(diag);
        paths.push(path);
    }

    Ok(EstimationReport {
        paths,
        stop_reason: stop,
        diagnostics,
        alpha_max,
        exhausted,
    })
}

/// The stop rule in isolation: keep iterating while
/// `alpha > alpha_max 10^(-epsilon/20)`.
pub fn within_dynamic_range(alpha: f64, alpha_max: f64, epsilon_db: f64) -> bool {
    alpha > alpha_max * 10f64.powf(-epsilon_db / 20.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{delay_axis, FrequencyGrid, MaGeometry, PhaseModel};

    fn setup() -> (FrequencyGrid, MaGeometry, EstimatorConfig) {
        let f = FrequencyGrid::new(26e9, 30e9, 128).unwrap();
        let g = MaGeometry::new(15, 15, 0.5).unwrap();
        let cfg = EstimatorConfig {
            scan: ScanGrid::uniform((0.0, 90.0, 5.0), (90.0, 270.0, 5.0)).unwrap(),
            ..Default::default()
        };
        (f, g, cfg)
    }

    fn on_bin(f: &FrequencyGrid, pad: usize, bin: usize) -> f64 {
        delay_axis(f, pad).unwrap().delay(bin)
    }

    #[test]
    fn guard_arithmetic() {
        assert!(!within_dynamic_range(0.02, 1.0, 30.0));
        assert!(within_dynamic_range(0.04, 1.0, 30.0));
    }

    #[test]
    fn gate_edge_cases() {
        let cir: Vec<Complex64> = (0..32)
            .map(|k| Complex64::new((k as f64 - 10.0).abs().recip().min(5.0), 0.0))
            .collect();
        let g = build_label_vector(&cir, 30.0);
        assert!(g[10]);
        assert!(build_label_vector(&cir, f64::INFINITY).iter().all(|x| *x));
        let narrow = build_label_vector(&cir, 1.0);
        assert_eq!(narrow.iter().filter(|x| **x).count(), 1);
    }

    #[test]
    fn single_path_recovered_then_guard_stops() {
        let (f, g, cfg) = setup();
        let tau = on_bin(&f, 16, 400);
        let p = PathComponent::new(
            Complex64::from_polar(0.7, 0.4),
            Direction::new(40.0, 150.0).unwrap(),
            tau,
        )
        .unwrap();
        let cfr = gen_ma_cfr(&[p], &g, &f, &PhaseModel::for_grid(&f)).unwrap();
        let rep = run_sic(&cfr, &cfg).unwrap();
        assert_eq!(rep.paths.len(), 1, "{:?}", rep.paths);
        assert_eq!(rep.stop_reason, StopReason::DynamicRange);
        let e = &rep.paths[0];
        assert_eq!(e.direction, p.direction);
        assert!((e.delay_s - tau).abs() < 1e-15);
        assert!(
            (e.amplitude - p.amplitude).norm() < 1e-6,
            "{} vs {}",
            e.amplitude,
            p.amplitude
        );
        assert!(e.residual_energy_after < 1e-6 * cfr.energy());
    }

    #[test]
    fn off_grid_residual_cannot_outgrow_previous_path() {
        // 9+9 lines, 10 degree scan: the mismatch residual re-grows at iteration 3
        let f = FrequencyGrid::new(26e9, 30e9, 64).unwrap();
        let cfg = EstimatorConfig {
            scan: ScanGrid::uniform((0.0, 90.0, 10.0), (90.0, 270.0, 10.0)).unwrap(),
            ..Default::default()
        };
        let p = PathComponent::from_db(0.0, 0.0, 48.98, 102.33, 0.0).unwrap();
        let cfr = gen_ma_cfr(
            &[p],
            &MaGeometry::new(9, 9, 0.5).unwrap(),
            &f,
            &PhaseModel::for_grid(&f),
        )
        .unwrap();
        let rep = run_sic(&cfr, &cfg).unwrap();
        assert_eq!(rep.paths.len(), 2);
        assert_eq!(rep.stop_reason, StopReason::DynamicRange);
        assert!(!rep.diagnostics[2].accepted);
        assert!(rep.diagnostics[2].candidate_db.unwrap() > rep.paths[1].amplitude_db);
    }

    #[test]
    fn boresight_zero_delay() {
        let (f, g, cfg) = setup();
        let p = PathComponent::from_db(0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let cfr = gen_ma_cfr(&[p], &g, &f, &PhaseModel::for_grid(&f)).unwrap();
        let padp = padp_ma_with(
            &cfr,
            0.0,
            &cfg.scan.phi_deg,
            &DelayTransform::new(&f, 4).unwrap(),
            None,
        )
        .unwrap();
        let (_, tau) = refine_on_padp(&padp).unwrap();
        assert_eq!(tau, 0.0);
    }

    #[test]
    fn zero_input_rejected() {
        let (f, g, cfg) = setup();
        let cfr = gen_ma_cfr(&[], &g, &f, &PhaseModel::for_grid(&f)).unwrap();
        assert!(matches!(run_sic(&cfr, &cfg), Err(Error::NoSignal(_))));
    }

    #[test]
    fn subtracting_nothing_is_identity() {
        let (f, g, _) = setup();
        let p = PathComponent::from_db(-3.0, 20.0, 30.0, 100.0, 4.0).unwrap();
        let cfr = gen_ma_cfr(&[p], &g, &f, &PhaseModel::for_grid(&f)).unwrap();
        let zero = EstimatedPath {
            amplitude: Complex64::new(0.0, 0.0),
            amplitude_db: f64::NEG_INFINITY,
            direction: p.direction,
            delay_s: 4e-9,
            iteration: 1,
            residual_energy_after: 0.0,
            joint: false,
        };
        assert_eq!(subtract_path(&cfr, &zero).unwrap(), cfr);
    }

    #[test]
    fn extract_gate_extremes() {
        let (f, g, _) = setup();
        let p = PathComponent::from_db(0.0, 0.0, 30.0, 100.0, 4.0).unwrap();
        let cfr = gen_ma_cfr(&[p], &g, &f, &PhaseModel::for_grid(&f)).unwrap();
        let tr = DelayTransform::new(&f, 4).unwrap();
        let cir = cfr_to_cir(&cfr.x, &tr).unwrap();
        let n = cir.axis.n_bins;
        assert_eq!(extract_path_cir(&cir, &vec![true; n]).unwrap(), cir);
        let z = extract_path_cir(&cir, &vec![false; n]).unwrap();
        assert!(z.values.iter().all(|h| h.norm() == 0.0));
        assert!(extract_path_cir(&cir, &[true]).is_err());
    }

    #[test]
    fn strongest_of_two_equal_maxima_follows_tie_break() {
        let scan = ScanGrid::uniform((40.0, 50.0, 5.0), (100.0, 260.0, 20.0)).unwrap();
        let (r, c) = scan.shape();
        let mut values = ndarray::Array2::from_elem((r, c), Complex64::new(0.1, 0.0));
        values[[2, 6]] = Complex64::new(0.0, 2.0);
        values[[1, 1]] = Complex64::new(2.0, 0.0);
        values[[0, 7]] = Complex64::new(-2.0, 0.0);
        let beam = BeamPattern {
            values,
            axes: BeamAxes::Angular(scan),
            frequency_hz: 28e9,
            kind: crate::beamform::ArrayKind::Ma,
        };
        // equal levels: lowest azimuth first, then lowest elevation
        let d = detect_strongest(&beam).unwrap();
        assert_eq!((d.theta_deg, d.phi_deg), (45.0, 120.0));
    }

    #[test]
    fn strongest_single_path_on_grid() {
        let (f, g, cfg) = setup();
        let p = PathComponent::from_db(0.0, 0.0, 35.0, 205.0, 3.0).unwrap();
        let cfr = gen_ma_cfr(&[p], &g, &f, &PhaseModel::for_grid(&f)).unwrap();
        let beam = cbf_ma(
            &cfr,
            BeamAxes::Angular(cfg.scan.clone()),
            f.center_freq(),
            None,
        )
        .unwrap();
        assert_eq!(detect_strongest(&beam).unwrap(), p.direction);
    }
}
