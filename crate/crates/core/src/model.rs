//! Shared domain types: directions and their (u, v) direction cosines,
//! frequency and delay grids, array geometries and angular scan grids.
//!
//! Angles cross the API in degrees and are converted to radians once, at
//! the point of use. Element spacings are expressed in wavelengths at a
//! reference frequency (see [`PhaseModel`]).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack accepted on `u^2 + v^2 <= 1` before a point is declared invisible.
const VISIBLE_TOL: f64 = 1e-12;

/// Elevation (from array broadside) and azimuth, both in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub theta_deg: f64,
    pub phi_deg: f64,
}

impl Direction {
    /// Builds a direction, folding `phi` into `[0, 360)`.
    pub fn new(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        if !theta_deg.is_finite() || !phi_deg.is_finite() {
            return Err(Error::invalid("direction angles must be finite"));
        }
        if !(0.0..=90.0).contains(&theta_deg) {
            return Err(Error::invalid(format!(
                "elevation {theta_deg} deg outside [0, 90]"
            )));
        }
        Ok(Self {
            theta_deg,
            phi_deg: fold_degrees(phi_deg),
        })
    }

    pub fn uv(&self) -> UvPoint {
        uv_map(*self)
    }
}

/// Folds an angle into `[0, 360)`.
pub fn fold_degrees(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Direction cosines `u = sin(theta) cos(phi)`, `v = sin(theta) sin(phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UvPoint {
    pub u: f64,
    pub v: f64,
}

impl UvPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_visible(&self) -> bool {
        self.u * self.u + self.v * self.v <= 1.0 + VISIBLE_TOL
    }
}

pub fn uv_map(direction: Direction) -> UvPoint {
    let theta = direction.theta_deg.to_radians();
    let phi = direction.phi_deg.to_radians();
    let s = theta.sin();
    UvPoint {
        u: s * phi.cos(),
        v: s * phi.sin(),
    }
}

/// Inverse of [`uv_map`]. Returns `phi = 0` at boresight where azimuth is
/// undefined.
pub fn uv_unmap(p: UvPoint) -> Result<Direction> {
    let r2 = p.u * p.u + p.v * p.v;
    if !r2.is_finite() || r2 > 1.0 + VISIBLE_TOL {
        return Err(Error::invalid(format!(
            "(u, v) = ({}, {}) lies outside the visible region",
            p.u, p.v
        )));
    }
    let r = r2.sqrt().min(1.0);
    let theta_deg = r.asin().to_degrees();
    let phi_deg = if r == 0.0 {
        0.0
    } else {
        fold_degrees(p.v.atan2(p.u).to_degrees())
    };
    Ok(Direction { theta_deg, phi_deg })
}

/// One propagation path: complex amplitude, arrival direction and delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub amplitude: Complex64,
    pub direction: Direction,
    pub delay_s: f64,
}

impl PathComponent {
    pub fn new(amplitude: Complex64, direction: Direction, delay_s: f64) -> Result<Self> {
        if !(delay_s.is_finite() && delay_s >= 0.0) {
            return Err(Error::invalid(format!(
                "path delay {delay_s} s must be >= 0"
            )));
        }
        let mag = amplitude.norm();
        if !(mag.is_finite() && mag > 0.0) {
            return Err(Error::invalid("path amplitude must be finite and non-zero"));
        }
        Ok(Self {
            amplitude,
            direction,
            delay_s,
        })
    }

    /// Convenience constructor from a power in dB (`20 log10 |alpha|`), a
    /// phase in degrees, angles in degrees and a delay in nanoseconds.
    pub fn from_db(
        power_db: f64,
        phase_deg: f64,
        theta_deg: f64,
        phi_deg: f64,
        delay_ns: f64,
    ) -> Result<Self> {
        let amplitude = Complex64::from_polar(10f64.powf(power_db / 20.0), phase_deg.to_radians());
        Self::new(
            amplitude,
            Direction::new(theta_deg, phi_deg)?,
            delay_ns * 1e-9,
        )
    }

    pub fn power_db(&self) -> f64 {
        20.0 * self.amplitude.norm().log10()
    }
}

/// Uniform grid of `n_points` frequencies from `f_start_hz` to `f_stop_hz`
/// inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub f_start_hz: f64,
    pub f_stop_hz: f64,
    pub n_points: usize,
}

impl FrequencyGrid {
    pub fn new(f_start_hz: f64, f_stop_hz: f64, n_points: usize) -> Result<Self> {
        if !(f_start_hz.is_finite() && f_stop_hz.is_finite() && f_start_hz > 0.0) {
            return Err(Error::invalid(
                "frequency bounds must be finite and positive",
            ));
        }
        if f_stop_hz <= f_start_hz {
            return Err(Error::invalid(format!(
                "f_stop {f_stop_hz} Hz must exceed f_start {f_start_hz} Hz"
            )));
        }
        if n_points < 2 {
            return Err(Error::invalid("a frequency grid needs at least 2 points"));
        }
        Ok(Self {
            f_start_hz,
            f_stop_hz,
            n_points,
        })
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn bandwidth(&self) -> f64 {
        self.f_stop_hz - self.f_start_hz
    }

    pub fn spacing(&self) -> f64 {
        self.bandwidth() / (self.n_points - 1) as f64
    }

    pub fn freq(&self, index: usize) -> f64 {
        self.f_start_hz + index as f64 * self.spacing()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.freq(i))
    }

    /// Index of the grid point used as "the center frequency point".
    pub fn center_index(&self) -> usize {
        (self.n_points - 1) / 2
    }

    pub fn center_freq(&self) -> f64 {
        self.freq(self.center_index())
    }

    /// Midpoint of the band; the default wavelength reference.
    pub fn mid_freq(&self) -> f64 {
        0.5 * (self.f_start_hz + self.f_stop_hz)
    }

    /// Grid index of `f_hz` if it is a grid point (within 1e-6 of a step).
    pub fn index_of(&self, f_hz: f64) -> Option<usize> {
        let pos = (f_hz - self.f_start_hz) / self.spacing();
        let idx = pos.round();
        if idx < 0.0 || idx >= self.n_points as f64 || (pos - idx).abs() > 1e-6 {
            None
        } else {
            Some(idx as usize)
        }
    }

    /// Unambiguous delay range `1 / df` of the grid.
    pub fn unambiguous_delay(&self) -> f64 {
        1.0 / self.spacing()
    }

    /// Largest path delay for which the doubled multiplicative-array delay
    /// still fits inside the unambiguous range.
    pub fn max_path_delay(&self) -> f64 {
        0.5 * self.unambiguous_delay()
    }

    /// Delay resolution `1 / bandwidth`.
    pub fn resolution(&self) -> f64 {
        1.0 / self.bandwidth()
    }
}

/// How element spacings turn into spatial phase.
///
/// Element spacings are given in wavelengths at `ref_freq_hz`. With
/// `narrowband` set, the spatial phase uses that single wavelength at every
/// frequency; otherwise it scales with `f / ref_freq_hz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseModel {
    pub ref_freq_hz: f64,
    pub narrowband: bool,
}

impl PhaseModel {
    pub fn narrowband(ref_freq_hz: f64) -> Self {
        Self {
            ref_freq_hz,
            narrowband: true,
        }
    }

    pub fn for_grid(freqs: &FrequencyGrid) -> Self {
        Self::narrowband(freqs.mid_freq())
    }

    /// Multiplier applied to the reference-wavelength spatial phase at `f_hz`.
    #[inline]
    pub fn scale(&self, f_hz: f64) -> f64 {
        if self.narrowband {
            1.0
        } else {
            f_hz / self.ref_freq_hz
        }
    }
}

/// Signed element indices `-(n-1)/2 ..= (n-1)/2` of an odd-length axis.
pub fn signed_indices(n: usize) -> impl Iterator<Item = i64> + Clone {
    let half = ((n as i64) - 1) / 2;
    -half..=half
}

fn check_odd(name: &str, n: usize) -> Result<()> {
    if n == 0 || n % 2 == 0 {
        return Err(Error::invalid(format!("{name} = {n} must be odd and >= 1")));
    }
    Ok(())
}

fn check_spacing(name: &str, d: f64) -> Result<()> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::invalid(format!("{name} = {d} must be positive")));
    }
    Ok(())
}

/// Uniform rectangular array of `m_count x n_count` elements in the x-y plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UraGeometry {
    pub m_count: usize,
    pub n_count: usize,
    pub dx_wl: f64,
    pub dy_wl: f64,
}

impl UraGeometry {
    pub fn new(m_count: usize, n_count: usize, dx_wl: f64, dy_wl: f64) -> Result<Self> {
        check_odd("m_count", m_count)?;
        check_odd("n_count", n_count)?;
        check_spacing("dx", dx_wl)?;
        check_spacing("dy", dy_wl)?;
        Ok(Self {
            m_count,
            n_count,
            dx_wl,
            dy_wl,
        })
    }

    pub fn square(size: usize, spacing_wl: f64) -> Result<Self> {
        Self::new(size, size, spacing_wl, spacing_wl)
    }

    pub fn element_count(&self) -> usize {
        self.m_count * self.n_count
    }

    /// Spacing at or below half a wavelength keeps grating lobes out of the
    /// visible region.
    pub fn grating_lobe_free(&self) -> bool {
        self.dx_wl <= 0.5 && self.dy_wl <= 0.5
    }

    /// The multiplicative array that reproduces this URA's power pattern.
    pub fn equivalent_ma(&self) -> Result<MaGeometry> {
        if self.dx_wl != self.dy_wl {
            return Err(Error::invalid(
                "a multiplicative array shares one spacing on both axes",
            ));
        }
        MaGeometry::new(2 * self.m_count - 1, 2 * self.n_count - 1, self.dx_wl)
    }
}

/// Multiplicative array: an x-axis line of `x_count` elements and a y-axis
/// line of `y_count` elements, modelled as independent element sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaGeometry {
    pub x_count: usize,
    pub y_count: usize,
    pub spacing_wl: f64,
}

impl MaGeometry {
    pub fn new(x_count: usize, y_count: usize, spacing_wl: f64) -> Result<Self> {
        check_odd("x_count", x_count)?;
        check_odd("y_count", y_count)?;
        check_spacing("spacing", spacing_wl)?;
        Ok(Self {
            x_count,
            y_count,
            spacing_wl,
        })
    }

    pub fn element_count(&self) -> usize {
        self.x_count + self.y_count
    }

    /// Size `(M, N)` of the URA this array emulates (`M' = 2M - 1`).
    pub fn equivalent_ura_dims(&self) -> (usize, usize) {
        ((self.x_count + 1) / 2, (self.y_count + 1) / 2)
    }
}

/// Inclusive uniform axis `start, start + step, ..., stop`.
pub fn stepped_axis(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 {
        return Err(Error::invalid(
            "axis bounds must be finite with a positive step",
        ));
    }
    if stop < start {
        return Err(Error::invalid(format!(
            "axis stop {stop} below start {start}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}

/// Angular scan grid: elevation rows by azimuth columns, in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub theta_deg: Vec<f64>,
    pub phi_deg: Vec<f64>,
}

impl ScanGrid {
    pub fn new(theta_deg: Vec<f64>, phi_deg: Vec<f64>) -> Result<Self> {
        check_axis("theta", &theta_deg)?;
        check_axis("phi", &phi_deg)?;
        if theta_deg.iter().any(|t| !(0.0..=90.0).contains(t)) {
            return Err(Error::invalid("theta axis must lie within [0, 90] deg"));
        }
        if phi_deg.iter().any(|p| !(0.0..360.0).contains(p)) {
            return Err(Error::invalid("phi axis must lie within [0, 360) deg"));
        }
        Ok(Self { theta_deg, phi_deg })
    }

    pub fn uniform(theta: (f64, f64, f64), phi: (f64, f64, f64)) -> Result<Self> {
        Self::new(
            stepped_axis(theta.0, theta.1, theta.2)?,
            stepped_axis(phi.0, phi.1, phi.2)?,
        )
    }

    /// Elevation 0-90 deg and azimuth 90-270 deg, both at 1 deg.
    pub fn estimation_default() -> Self {
        Self::uniform((0.0, 90.0, 1.0), (90.0, 270.0, 1.0)).expect("static grid")
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.theta_deg.len(), self.phi_deg.len())
    }

    pub fn direction(&self, i_theta: usize, i_phi: usize) -> Direction {
        Direction {
            theta_deg: self.theta_deg[i_theta],
            phi_deg: self.phi_deg[i_phi],
        }
    }

    /// Grid steps `(d_theta, d_phi)` in degrees (0 for single-sample axes).
    pub fn steps(&self) -> (f64, f64) {
        (axis_step(&self.theta_deg), axis_step(&self.phi_deg))
    }
}

fn axis_step(axis: &[f64]) -> f64 {
    if axis.len() < 2 {
        0.0
    } else {
        (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
    }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::invalid(format!("{name} axis is empty")));
    }
    if axis.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(format!(
            "{name} axis has non-finite entries"
        )));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!(
            "{name} axis must be strictly increasing"
        )));
    }
    Ok(())
}

/// Zero-padded delay axis produced by an inverse transform over a
/// [`FrequencyGrid`]: bins `k * bin_width_s` for `k in 0..n_bins`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayAxis {
    pub n_bins: usize,
    pub bin_width_s: f64,
    pub pad_factor: usize,
    /// Peak separability `1 / bandwidth`, independent of padding.
    pub resolution_s: f64,
}

impl DelayAxis {
    pub fn delay(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width_s
    }

    pub fn nearest_bin(&self, delay_s: f64) -> usize {
        let b = (delay_s / self.bin_width_s).round();
        (b.max(0.0) as usize).min(self.n_bins - 1)
    }

    /// Total span `n_bins * bin_width_s`, equal to the unambiguous range.
    pub fn span(&self) -> f64 {
        self.n_bins as f64 * self.bin_width_s
    }

    pub fn delays(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_bins).map(|k| self.delay(k))
    }
}

pub fn delay_axis(freqs: &FrequencyGrid, pad_factor: usize) -> Result<DelayAxis> {
    if pad_factor == 0 {
        return Err(Error::invalid("pad_factor must be >= 1"));
    }
    let n_bins = freqs.n_points * pad_factor;
    Ok(DelayAxis {
        n_bins,
        bin_width_s: 1.0 / (n_bins as f64 * freqs.spacing()),
        pad_factor,
        resolution_s: freqs.resolution(),
    })
}
