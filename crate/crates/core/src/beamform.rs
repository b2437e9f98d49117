//! Classical (delay-and-sum) beamforming, power angular delay profiles,
//! peak picking and the multiplicative-array term predictor.
//!
//! URA outputs are field-like and displayed as `20 log10 |.|`; MA outputs
//! are products of two sub-array fields and displayed as `10 log10 |.|`, so
//! a true path shows at its own power and a cross term `a_i a_j` shows
//! halfway between the two powers.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{CfrLayout, CfrSet, MaCfr};
use crate::error::{Error, Result};
use crate::model::{signed_indices, DelayAxis, Direction, PathComponent, ScanGrid, UvPoint};
use crate::pattern::{Excitation, UvLattice};
use crate::transform::DelayTransform;

/// Default peak-suppression radius in grid cells.
pub const DEFAULT_MIN_SEPARATION: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayKind {
    Ura,
    Ma,
}

impl ArrayKind {
    /// Display level of a beam or PADP magnitude.
    pub fn level_db(&self, magnitude: f64) -> f64 {
        match self {
            ArrayKind::Ura => 20.0 * magnitude.log10(),
            ArrayKind::Ma => 10.0 * magnitude.log10(),
        }
    }
}

/// Amplitude tapers for the x and y axes (URA) or sub-arrays (MA).
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayTaper {
    pub x: Excitation,
    pub y: Excitation,
}

/// Conjugated, normalized steering weights along one array axis:
/// `conj(t_m exp(j 2 pi m d c s)) / sum |t|`.
pub fn line_weights(
    n: usize,
    spacing_wl: f64,
    taper: Option<&Excitation>,
    cosine: f64,
    scale: f64,
) -> Vec<Complex64> {
    let step = 2.0 * PI * spacing_wl * cosine * scale;
    let (norm, taps): (f64, Vec<Complex64>) = match taper {
        Some(t) => (t.l1_norm(), t.weights().to_vec()),
        None => (n as f64, vec![Complex64::new(1.0, 0.0); n]),
    };
    signed_indices(n)
        .zip(taps)
        .map(|(m, t)| (t * Complex64::from_polar(1.0, step * m as f64)).conj() / norm)
        .collect()
}

fn check_taper(taper: Option<&ArrayTaper>, nx: usize, ny: usize) -> Result<()> {
    if let Some(t) = taper {
        if t.x.len() != nx || t.y.len() != ny {
            return Err(Error::DimensionMismatch(format!(
                "taper {}x{} does not fit a {nx}x{ny} array",
                t.x.len(),
                t.y.len()
            )));
        }
    }
    Ok(())
}

fn freq_index(cfr: &CfrSet, f_hz: f64) -> Result<usize> {
    cfr.freqs
        .index_of(f_hz)
        .ok_or(Error::OffGridFrequency(f_hz))
}

/// Sample positions of a beam pattern.
#[derive(Debug, Clone, PartialEq)]
pub enum BeamAxes {
    Angular(ScanGrid),
    Uv(UvLattice),
}

impl BeamAxes {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            BeamAxes::Angular(g) => g.shape(),
            BeamAxes::Uv(l) => l.shape(),
        }
    }

    pub fn uv(&self, i: usize, j: usize) -> UvPoint {
        match self {
            BeamAxes::Angular(g) => g.direction(i, j).uv(),
            BeamAxes::Uv(l) => l.point(i, j),
        }
    }
}

/// Complex beam pattern at one frequency. Rows follow `theta` (or `u`),
/// columns `phi` (or `v`).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPattern {
    pub values: Array2<Complex64>,
    pub axes: BeamAxes,
    pub frequency_hz: f64,
    pub kind: ArrayKind,
}

impl BeamPattern {
    pub fn level_db(&self) -> Array2<f64> {
        self.values.mapv(|b| self.kind.level_db(b.norm()))
    }

    pub fn level_grid(&self) -> LevelGrid {
        let wrap = matches!(&self.axes, BeamAxes::Uv(l) if l.periodic);
        LevelGrid::from_2d(&self.level_db()).with_periodic([wrap, wrap, false])
    }
}

fn ura_point(cfr: &CfrSet, l: usize, p: UvPoint, taper: Option<&ArrayTaper>) -> Complex64 {
    let s = cfr.phase.scale(cfr.freqs.freq(l));
    let wx = line_weights(cfr.n_x(), cfr.spacing_x_wl, taper.map(|t| &t.x), p.u, s);
    let wy = line_weights(cfr.n_y(), cfr.spacing_y_wl, taper.map(|t| &t.y), p.v, s);
    let mut acc = Complex64::new(0.0, 0.0);
    for (ix, a) in wx.iter().enumerate() {
        let mut row = Complex64::new(0.0, 0.0);
        for (iy, b) in wy.iter().enumerate() {
            row += b * cfr.values[[ix, iy, l]];
        }
        acc += a * row;
    }
    acc
}

fn line_point(cfr: &CfrSet, l: usize, cosine: f64, taper: Option<&Excitation>) -> Complex64 {
    let s = cfr.phase.scale(cfr.freqs.freq(l));
    let line = cfr.line();
    line_weights(line.nrows(), cfr.axis_spacing(), taper, cosine, s)
        .iter()
        .zip(line.column(l))
        .map(|(w, h)| w * h)
        .sum()
}

fn require(cfr: &CfrSet, layout: CfrLayout) -> Result<()> {
    if cfr.layout != layout {
        return Err(Error::invalid(format!(
            "expected a {} CFR, got {}",
            layout.as_str(),
            cfr.layout.as_str()
        )));
    }
    Ok(())
}

/// URA beam pattern at `f_hz`, normalized so a unit path scanned at its own
/// direction reads `|B| = 1`.
pub fn cbf_ura(
    cfr: &CfrSet,
    axes: BeamAxes,
    f_hz: f64,
    taper: Option<&ArrayTaper>,
) -> Result<BeamPattern> {
    require(cfr, CfrLayout::Ura)?;
    check_taper(taper, cfr.n_x(), cfr.n_y())?;
    let l = freq_index(cfr, f_hz)?;
    let values = Array2::from_shape_fn(axes.shape(), |(i, j)| {
        ura_point(cfr, l, axes.uv(i, j), taper)
    });
    Ok(BeamPattern {
        values,
        axes,
        frequency_hz: f_hz,
        kind: ArrayKind::Ura,
    })
}

/// MA beam pattern: the product of the two normalized sub-array sums.
pub fn cbf_ma(
    cfr: &MaCfr,
    axes: BeamAxes,
    f_hz: f64,
    taper: Option<&ArrayTaper>,
) -> Result<BeamPattern> {
    check_taper(taper, cfr.x.n_x(), cfr.y.n_y())?;
    let l = freq_index(&cfr.x, f_hz)?;
    let tx = taper.map(|t| &t.x);
    let ty = taper.map(|t| &t.y);
    let values = match &axes {
        BeamAxes::Uv(lat) => {
            let xs: Vec<Complex64> = lat
                .u
                .iter()
                .map(|&u| line_point(&cfr.x, l, u, tx))
                .collect();
            let ys: Vec<Complex64> = lat
                .v
                .iter()
                .map(|&v| line_point(&cfr.y, l, v, ty))
                .collect();
            Array2::from_shape_fn(lat.shape(), |(i, j)| xs[i] * ys[j])
        }
        BeamAxes::Angular(_) => Array2::from_shape_fn(axes.shape(), |(i, j)| {
            let p = axes.uv(i, j);
            line_point(&cfr.x, l, p.u, tx) * line_point(&cfr.y, l, p.v, ty)
        }),
    };
    Ok(BeamPattern {
        values,
        axes,
        frequency_hz: f_hz,
        kind: ArrayKind::Ma,
    })
}

/// URA beam toward `p` at every frequency of the grid.
pub fn ura_beam_spectrum(cfr: &CfrSet, p: UvPoint, taper: Option<&ArrayTaper>) -> Vec<Complex64> {
    let nf = cfr.freqs.len();
    if cfr.phase.narrowband {
        let wx = line_weights(cfr.n_x(), cfr.spacing_x_wl, taper.map(|t| &t.x), p.u, 1.0);
        let wy = line_weights(cfr.n_y(), cfr.spacing_y_wl, taper.map(|t| &t.y), p.v, 1.0);
        let mut out = vec![Complex64::new(0.0, 0.0); nf];
        for (ix, a) in wx.iter().enumerate() {
            for (iy, b) in wy.iter().enumerate() {
                let w = a * b;
                let lane = cfr.values.slice(ndarray::s![ix, iy, ..]);
                for (o, h) in out.iter_mut().zip(lane.iter()) {
                    *o += w * h;
                }
            }
        }
        out
    } else {
        (0..nf).map(|l| ura_point(cfr, l, p, taper)).collect()
    }
}

/// Sub-array beam toward direction cosine `cosine` at every frequency.
pub fn line_beam_spectrum(cfr: &CfrSet, cosine: f64, taper: Option<&Excitation>) -> Vec<Complex64> {
    let line = cfr.line();
    let nf = cfr.freqs.len();
    if cfr.phase.narrowband {
        let w = line_weights(line.nrows(), cfr.axis_spacing(), taper, cosine, 1.0);
        let mut out = vec![Complex64::new(0.0, 0.0); nf];
        for (wm, row) in w.iter().zip(line.rows()) {
            for (o, h) in out.iter_mut().zip(row.iter()) {
                *o += wm * h;
            }
        }
        out
    } else {
        (0..nf).map(|l| line_point(cfr, l, cosine, taper)).collect()
    }
}

/// MA sub-array beam spectra `(X(f), Y(f))` toward `p`.
pub fn ma_beam_spectra(
    cfr: &MaCfr,
    p: UvPoint,
    taper: Option<&ArrayTaper>,
) -> (Vec<Complex64>, Vec<Complex64>) {
    (
        line_beam_spectrum(&cfr.x, p.u, taper.map(|t| &t.x)),
        line_beam_spectrum(&cfr.y, p.v, taper.map(|t| &t.y)),
    )
}

/// Power angular delay profile at one elevation: rows follow `phi_deg`,
/// columns the delay bins of `axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct Padp {
    pub values: Array2<Complex64>,
    pub theta_deg: f64,
    pub phi_deg: Vec<f64>,
    pub axis: DelayAxis,
    pub kind: ArrayKind,
}

impl Padp {
    pub fn level_db(&self) -> Array2<f64> {
        self.values.mapv(|b| self.kind.level_db(b.norm()))
    }

    /// Level grid with dims `[1, phi, delay]`.
    pub fn level_grid(&self) -> LevelGrid {
        let (r, c) = self.values.dim();
        LevelGrid {
            dims: [1, r, c],
            levels: self.level_db().iter().copied().collect(),
            periodic: [false; 3],
        }
    }
}

/// Level grid `[theta, phi, delay]` stacking PADPs taken at successive
/// elevations over a common azimuth and delay axis.
pub fn stack_padps(padps: &[Padp]) -> Result<LevelGrid> {
    let first = padps
        .first()
        .ok_or_else(|| Error::invalid("no PADP slices to stack"))?;
    let (r, c) = first.values.dim();
    let mut levels = Vec::with_capacity(padps.len() * r * c);
    for p in padps {
        if p.values.dim() != (r, c) {
            return Err(Error::DimensionMismatch(
                "PADP slices differ in shape".into(),
            ));
        }
        levels.extend(p.level_db().iter().copied());
    }
    LevelGrid::new([padps.len(), r, c], levels)
}

fn padp_from_spectra(
    spectra: impl Iterator<Item = Vec<Complex64>>,
    n_phi: usize,
    tr: &DelayTransform,
) -> Array2<Complex64> {
    let mut values = Array2::zeros((n_phi, tr.axis().n_bins));
    for (row, spec) in values.rows_mut().into_iter().zip(spectra) {
        tr.to_delay_into(ndarray::ArrayView1::from(&spec[..]), row);
    }
    values
}

fn check_transform(cfr: &CfrSet, tr: &DelayTransform) -> Result<()> {
    if tr.n_freq() != cfr.freqs.len() {
        return Err(Error::DimensionMismatch(
            "delay transform planned for another frequency grid".into(),
        ));
    }
    Ok(())
}

pub fn padp_ura(
    cfr: &CfrSet,
    theta_deg: f64,
    phi_deg: &[f64],
    pad_factor: usize,
    taper: Option<&ArrayTaper>,
) -> Result<Padp> {
    padp_ura_with(
        cfr,
        theta_deg,
        phi_deg,
        &DelayTransform::new(&cfr.freqs, pad_factor)?,
        taper,
    )
}

pub fn padp_ura_with(
    cfr: &CfrSet,
    theta_deg: f64,
    phi_deg: &[f64],
    tr: &DelayTransform,
    taper: Option<&ArrayTaper>,
) -> Result<Padp> {
    require(cfr, CfrLayout::Ura)?;
    check_taper(taper, cfr.n_x(), cfr.n_y())?;
    check_transform(cfr, tr)?;
    let dirs = phi_directions(theta_deg, phi_deg)?;
    let spectra = dirs.iter().map(|d| ura_beam_spectrum(cfr, d.uv(), taper));
    Ok(Padp {
        values: padp_from_spectra(spectra, dirs.len(), tr),
        theta_deg,
        phi_deg: phi_deg.to_vec(),
        axis: *tr.axis(),
        kind: ArrayKind::Ura,
    })
}

pub fn padp_ma(
    cfr: &MaCfr,
    theta_deg: f64,
    phi_deg: &[f64],
    pad_factor: usize,
    taper: Option<&ArrayTaper>,
) -> Result<Padp> {
    padp_ma_with(
        cfr,
        theta_deg,
        phi_deg,
        &DelayTransform::new(cfr.freqs(), pad_factor)?,
        taper,
    )
}

/// MA PADP: inverse transform of `X(f) Y(f)`. Path delays appear doubled.
pub fn padp_ma_with(
    cfr: &MaCfr,
    theta_deg: f64,
    phi_deg: &[f64],
    tr: &DelayTransform,
    taper: Option<&ArrayTaper>,
) -> Result<Padp> {
    check_taper(taper, cfr.x.n_x(), cfr.y.n_y())?;
    check_transform(&cfr.x, tr)?;
    let dirs = phi_directions(theta_deg, phi_deg)?;
    let spectra = dirs.iter().map(|d| {
        let (x, y) = ma_beam_spectra(cfr, d.uv(), taper);
        x.iter().zip(&y).map(|(a, b)| a * b).collect::<Vec<_>>()
    });
    Ok(Padp {
        values: padp_from_spectra(spectra, dirs.len(), tr),
        theta_deg,
        phi_deg: phi_deg.to_vec(),
        axis: *tr.axis(),
        kind: ArrayKind::Ma,
    })
}

fn phi_directions(theta_deg: f64, phi_deg: &[f64]) -> Result<Vec<Direction>> {
    if phi_deg.is_empty() {
        return Err(Error::invalid("empty azimuth axis"));
    }
    phi_deg
        .iter()
        .map(|&p| Direction::new(theta_deg, p))
        .collect()
}

/// `(1/L) sum_l s_l exp(j 2 pi f_l tau)` for an arbitrary delay.
pub fn delay_response(
    spectrum: &[Complex64],
    freqs: &crate::model::FrequencyGrid,
    tau_s: f64,
) -> Complex64 {
    let sum: Complex64 = spectrum
        .iter()
        .zip(freqs.iter())
        .map(|(s, f)| s * Complex64::from_polar(1.0, 2.0 * PI * (f * tau_s).fract()))
        .sum();
    sum / spectrum.len() as f64
}

/// One of the `K^2` phasor products in an MA beam or PADP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedTerm {
    pub u: f64,
    pub v: f64,
    pub delay_s: f64,
    pub level_db: f64,
    /// `(i, j)`: x-axis cosine from path `i`, y-axis cosine from path `j`.
    pub origin: (usize, usize),
}

impl PredictedTerm {
    pub fn is_true(&self) -> bool {
        self.origin.0 == self.origin.1
    }
}

/// All `K^2` MA terms: term `(i, j)` sits at `(u_i, v_j)` and delay
/// `tau_i + tau_j` with displayed level `(P_i + P_j) / 2`.
pub fn predict_ma_terms(paths: &[PathComponent]) -> Vec<PredictedTerm> {
    let mut out = Vec::with_capacity(paths.len() * paths.len());
    for (i, a) in paths.iter().enumerate() {
        for (j, b) in paths.iter().enumerate() {
            out.push(PredictedTerm {
                u: a.direction.uv().u,
                v: b.direction.uv().v,
                delay_s: a.delay_s + b.delay_s,
                level_db: 0.5 * (a.power_db() + b.power_db()),
                origin: (i, j),
            });
        }
    }
    out
}

/// Real dB levels over up to three axes `[theta (or u), phi (or v), delay]`,
/// stored row-major. A periodic axis holds exactly one period, so its last
/// sample neighbours its first.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelGrid {
    pub dims: [usize; 3],
    pub levels: Vec<f64>,
    pub periodic: [bool; 3],
}

impl LevelGrid {
    pub fn new(dims: [usize; 3], levels: Vec<f64>) -> Result<Self> {
        if dims.iter().product::<usize>() != levels.len() {
            return Err(Error::DimensionMismatch(format!(
                "level grid {dims:?} cannot hold {} values",
                levels.len()
            )));
        }
        Ok(Self {
            dims,
            levels,
            periodic: [false; 3],
        })
    }

    /// Grid with dims `[rows, cols, 1]`.
    pub fn from_2d(levels: &Array2<f64>) -> Self {
        let (r, c) = levels.dim();
        Self {
            dims: [r, c, 1],
            levels: levels.iter().copied().collect(),
            periodic: [false; 3],
        }
    }

    pub fn with_periodic(mut self, periodic: [bool; 3]) -> Self {
        self.periodic = periodic;
        self
    }

    fn wraps(&self, axis: usize) -> bool {
        self.periodic[axis] && self.dims[axis] >= 3
    }

    /// Indices at offsets -1, 0, +1 along `axis` that exist on the grid.
    fn neighbours(&self, axis: usize, i: usize) -> impl Iterator<Item = usize> {
        let n = self.dims[axis];
        let wrap = self.wraps(axis);
        [-1i64, 0, 1].into_iter().filter_map(move |o| {
            let j = i as i64 + o;
            if wrap {
                Some(j.rem_euclid(n as i64) as usize)
            } else if (0..n as i64).contains(&j) {
                Some(j as usize)
            } else {
                None
            }
        })
    }

    fn distance(&self, a: [usize; 3], b: [usize; 3]) -> usize {
        (0..3)
            .map(|k| {
                let d = a[k].abs_diff(b[k]);
                if self.wraps(k) {
                    d.min(self.dims[k] - d)
                } else {
                    d
                }
            })
            .max()
            .unwrap_or(0)
    }

    fn flat(&self, i: [usize; 3]) -> usize {
        (i[0] * self.dims[1] + i[1]) * self.dims[2] + i[2]
    }

    pub fn get(&self, i: [usize; 3]) -> f64 {
        self.levels[self.flat(i)]
    }

    pub fn max(&self) -> f64 {
        self.levels
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A local maximum of a [`LevelGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: [usize; 3],
    pub level_db: f64,
}

/// `a` outranks `b`: higher level first, then lower delay, azimuth and
/// elevation index.
fn outranks(la: f64, a: [usize; 3], lb: f64, b: [usize; 3]) -> bool {
    if la != lb {
        return la > lb;
    }
    (a[2], a[1], a[0]) < (b[2], b[1], b[0])
}

/// Local maxima within `dynamic_range_db` of the global maximum, strongest
/// first. A point is a maximum if it outranks every neighbour in the
/// surrounding 3x3x3 block, so plateaus yield a single peak. Peaks closer
/// than `min_separation` cells (Chebyshev distance) to a stronger kept peak
/// are dropped. Only axes flagged periodic wrap around.
pub fn find_peaks(
    grid: &LevelGrid,
    dynamic_range_db: f64,
    min_separation: usize,
) -> Result<Vec<Peak>> {
    if grid.levels.is_empty() {
        return Err(Error::NoPeak("empty grid".into()));
    }
    if grid.levels.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("level grid contains NaN"));
    }
    let floor = grid.max() - dynamic_range_db.max(0.0);
    let [d0, d1, d2] = grid.dims;
    let mut peaks = Vec::new();
    for i in 0..d0 {
        for j in 0..d1 {
            for k in 0..d2 {
                let here = [i, j, k];
                let lv = grid.get(here);
                if lv < floor {
                    continue;
                }
                let mut is_max = true;
                'scan: for ni in grid.neighbours(0, i) {
                    for nj in grid.neighbours(1, j) {
                        for nk in grid.neighbours(2, k) {
                            let there = [ni, nj, nk];
                            if there != here && outranks(grid.get(there), there, lv, here) {
                                is_max = false;
                                break 'scan;
                            }
                        }
                    }
                }
                if is_max {
                    peaks.push(Peak {
                        index: here,
                        level_db: lv,
                    });
                }
            }
        }
    }
    peaks.sort_by(|a, b| {
        if outranks(a.level_db, a.index, b.level_db, b.index) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    let mut kept: Vec<Peak> = Vec::new();
    for p in peaks {
        let close = kept
            .iter()
            .any(|q| grid.distance(p.index, q.index) < min_separation);
        if !close {
            kept.push(p);
        }
    }
    Ok(kept)
}
