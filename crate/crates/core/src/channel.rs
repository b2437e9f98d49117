//! Per-element wideband channel frequency responses for URA and MA
//! geometries, plus optional additive complex Gaussian noise.

use std::f64::consts::PI;

use ndarray::{Array3, Zip};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    signed_indices, FrequencyGrid, MaGeometry, PathComponent, PhaseModel, UraGeometry,
};

/// Which array (or sub-array) a [`CfrSet`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfrLayout {
    Ura,
    MaX,
    MaY,
}

impl CfrLayout {
    pub fn as_str(&self) -> &'static str {
        match self {
            CfrLayout::Ura => "ura",
            CfrLayout::MaX => "ma_x",
            CfrLayout::MaY => "ma_y",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ura" => Some(CfrLayout::Ura),
            "ma_x" => Some(CfrLayout::MaX),
            "ma_y" => Some(CfrLayout::MaY),
            _ => None,
        }
    }
}

/// Complex frequency response of every element of one array, indexed
/// `[x element, y element, frequency]` with element indices in signed
/// order (`-(n-1)/2` first). Sub-arrays of an MA have a unit-length
/// second (`MaX`) or first (`MaY`) axis.
#[derive(Debug, Clone, PartialEq)]
pub struct CfrSet {
    pub layout: CfrLayout,
    pub freqs: FrequencyGrid,
    pub phase: PhaseModel,
    pub spacing_x_wl: f64,
    pub spacing_y_wl: f64,
    pub values: Array3<Complex64>,
}

impl CfrSet {
    pub fn zeros(
        layout: CfrLayout,
        freqs: FrequencyGrid,
        phase: PhaseModel,
        n_x: usize,
        n_y: usize,
        spacing_x_wl: f64,
        spacing_y_wl: f64,
    ) -> Result<Self> {
        Self::from_values(
            layout,
            freqs,
            phase,
            spacing_x_wl,
            spacing_y_wl,
            Array3::zeros((n_x, n_y, freqs.len())),
        )
    }

    pub fn from_values(
        layout: CfrLayout,
        freqs: FrequencyGrid,
        phase: PhaseModel,
        spacing_x_wl: f64,
        spacing_y_wl: f64,
        values: Array3<Complex64>,
    ) -> Result<Self> {
        let (nx, ny, nf) = values.dim();
        if nf != freqs.len() {
            return Err(Error::DimensionMismatch(format!(
                "CFR has {nf} frequency samples, grid has {}",
                freqs.len()
            )));
        }
        for (name, n) in [("x", nx), ("y", ny)] {
            if n == 0 || n % 2 == 0 {
                return Err(Error::DimensionMismatch(format!(
                    "CFR {name} element count {n} must be odd"
                )));
            }
        }
        let ok = match layout {
            CfrLayout::Ura => true,
            CfrLayout::MaX => ny == 1,
            CfrLayout::MaY => nx == 1,
        };
        if !ok {
            return Err(Error::DimensionMismatch(format!(
                "{} layout cannot hold a {nx}x{ny} element grid",
                layout.as_str()
            )));
        }
        if !(spacing_x_wl > 0.0 && spacing_y_wl > 0.0) {
            return Err(Error::invalid("CFR element spacing must be positive"));
        }
        Ok(Self {
            layout,
            freqs,
            phase,
            spacing_x_wl,
            spacing_y_wl,
            values,
        })
    }

    pub fn n_x(&self) -> usize {
        self.values.dim().0
    }

    pub fn n_y(&self) -> usize {
        self.values.dim().1
    }

    /// Number of elements along the sub-array axis (MA) or `n_x * n_y` (URA).
    pub fn element_count(&self) -> usize {
        self.n_x() * self.n_y()
    }

    /// Spacing along the populated axis of an MA sub-array.
    pub fn axis_spacing(&self) -> f64 {
        match self.layout {
            CfrLayout::MaY => self.spacing_y_wl,
            _ => self.spacing_x_wl,
        }
    }

    /// Element responses along the populated axis of an MA sub-array,
    /// as a `[element, frequency]` view.
    pub fn line(&self) -> ndarray::ArrayView2<'_, Complex64> {
        match self.layout {
            CfrLayout::MaY => self.values.index_axis(ndarray::Axis(0), 0),
            _ => self.values.index_axis(ndarray::Axis(1), 0),
        }
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|h| h.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|h| h.re == 0.0 && h.im == 0.0)
    }

    pub fn ura_geometry(&self) -> Result<UraGeometry> {
        if self.layout != CfrLayout::Ura {
            return Err(Error::invalid("expected a URA CFR"));
        }
        UraGeometry::new(self.n_x(), self.n_y(), self.spacing_x_wl, self.spacing_y_wl)
    }

    fn same_shape(&self, other: &CfrSet) -> Result<()> {
        if self.layout != other.layout
            || self.values.dim() != other.values.dim()
            || self.freqs != other.freqs
        {
            return Err(Error::DimensionMismatch(
                "CFR sets differ in layout, size or frequency grid".into(),
            ));
        }
        Ok(())
    }

    /// Entrywise `self - other`.
    pub fn sub(&self, other: &CfrSet) -> Result<CfrSet> {
        self.same_shape(other)?;
        let mut out = self.clone();
        out.values -= &other.values;
        Ok(out)
    }

    /// Entrywise `self + other`.
    pub fn add(&self, other: &CfrSet) -> Result<CfrSet> {
        self.same_shape(other)?;
        let mut out = self.clone();
        out.values += &other.values;
        Ok(out)
    }
}

/// The two sub-array responses of a multiplicative array.
#[derive(Debug, Clone, PartialEq)]
pub struct MaCfr {
    pub x: CfrSet,
    pub y: CfrSet,
}

impl MaCfr {
    pub fn new(x: CfrSet, y: CfrSet) -> Result<Self> {
        if x.layout != CfrLayout::MaX || y.layout != CfrLayout::MaY {
            return Err(Error::invalid("MA CFR pair must be (ma_x, ma_y)"));
        }
        if x.freqs != y.freqs || x.phase != y.phase {
            return Err(Error::DimensionMismatch(
                "MA sub-array CFRs use different frequency grids".into(),
            ));
        }
        if x.spacing_x_wl != y.spacing_y_wl {
            return Err(Error::invalid(
                "MA sub-arrays must share one element spacing",
            ));
        }
        Ok(Self { x, y })
    }

    pub fn freqs(&self) -> &FrequencyGrid {
        &self.x.freqs
    }

    pub fn phase(&self) -> &PhaseModel {
        &self.x.phase
    }

    pub fn geometry(&self) -> Result<MaGeometry> {
        MaGeometry::new(self.x.n_x(), self.y.n_y(), self.x.spacing_x_wl)
    }

    pub fn energy(&self) -> f64 {
        self.x.energy() + self.y.energy()
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn sub(&self, other: &MaCfr) -> Result<MaCfr> {
        Ok(MaCfr {
            x: self.x.sub(&other.x)?,
            y: self.y.sub(&other.y)?,
        })
    }

    pub fn add(&self, other: &MaCfr) -> Result<MaCfr> {
        Ok(MaCfr {
            x: self.x.add(&other.x)?,
            y: self.y.add(&other.y)?,
        })
    }
}

/// Rejects delays at or beyond half the unambiguous range `1 / df`.
pub fn check_delays(paths: &[PathComponent], freqs: &FrequencyGrid) -> Result<()> {
    let limit = freqs.max_path_delay();
    for p in paths {
        if p.delay_s >= limit {
            return Err(Error::DelayAliasing {
                delay_ns: p.delay_s * 1e9,
                limit_ns: limit * 1e9,
            });
        }
    }
    Ok(())
}

/// Adds `sum_k a_k exp(-j 2 pi f tau_k) exp(j 2 pi s(f) (m dx u_k + n dy v_k))`
/// to every entry of `values`.
fn accumulate(
    values: &mut Array3<Complex64>,
    paths: &[PathComponent],
    freqs: &FrequencyGrid,
    phase: &PhaseModel,
    dx: f64,
    dy: f64,
) {
    let (nx, ny, _) = values.dim();
    for p in paths {
        let uv = p.direction.uv();
        let temporal: Vec<Complex64> = freqs
            .iter()
            .map(|f| p.amplitude * Complex64::from_polar(1.0, -2.0 * PI * f * p.delay_s))
            .collect();
        let scales: Vec<f64> = freqs.iter().map(|f| phase.scale(f)).collect();
        for (ix, m) in signed_indices(nx).enumerate() {
            for (iy, n) in signed_indices(ny).enumerate() {
                let spatial = 2.0 * PI * (m as f64 * dx * uv.u + n as f64 * dy * uv.v);
                let mut lane = values.slice_mut(ndarray::s![ix, iy, ..]);
                if phase.narrowband {
                    let s = Complex64::from_polar(1.0, spatial);
                    for (h, t) in lane.iter_mut().zip(&temporal) {
                        *h += t * s;
                    }
                } else {
                    for ((h, t), sc) in lane.iter_mut().zip(&temporal).zip(&scales) {
                        *h += t * Complex64::from_polar(1.0, spatial * sc);
                    }
                }
            }
        }
    }
}

pub fn gen_ura_cfr(
    paths: &[PathComponent],
    geometry: &UraGeometry,
    freqs: &FrequencyGrid,
    phase: &PhaseModel,
) -> Result<CfrSet> {
    check_delays(paths, freqs)?;
    let mut cfr = CfrSet::zeros(
        CfrLayout::Ura,
        *freqs,
        *phase,
        geometry.m_count,
        geometry.n_count,
        geometry.dx_wl,
        geometry.dy_wl,
    )?;
    accumulate(
        &mut cfr.values,
        paths,
        freqs,
        phase,
        geometry.dx_wl,
        geometry.dy_wl,
    );
    Ok(cfr)
}

pub fn gen_ma_cfr(
    paths: &[PathComponent],
    geometry: &MaGeometry,
    freqs: &FrequencyGrid,
    phase: &PhaseModel,
) -> Result<MaCfr> {
    check_delays(paths, freqs)?;
    let d = geometry.spacing_wl;
    let mut x = CfrSet::zeros(CfrLayout::MaX, *freqs, *phase, geometry.x_count, 1, d, d)?;
    let mut y = CfrSet::zeros(CfrLayout::MaY, *freqs, *phase, 1, geometry.y_count, d, d)?;
    accumulate(&mut x.values, paths, freqs, phase, d, d);
    accumulate(&mut y.values, paths, freqs, phase, d, d);
    MaCfr::new(x, y)
}

fn noise_sigma(signal_power: f64, snr_db: f64) -> Result<f64> {
    if signal_power == 0.0 {
        return Err(Error::NoSignal(
            "cannot scale noise to an all-zero CFR".into(),
        ));
    }
    Ok((signal_power / 10f64.powf(snr_db / 10.0)).sqrt())
}

fn noise_requested(snr_db: Option<f64>) -> Result<Option<f64>> {
    match snr_db {
        None => Ok(None),
        Some(s) if s == f64::INFINITY => Ok(None),
        Some(s) if s.is_finite() => Ok(Some(s)),
        Some(s) => Err(Error::invalid(format!("SNR {s} dB is not usable"))),
    }
}

fn add_gaussian(values: &mut Array3<Complex64>, sigma: f64, rng: &mut ChaCha8Rng) {
    // circular symmetry: each quadrature carries half the variance
    let normal = Normal::new(0.0, sigma / 2f64.sqrt()).expect("finite sigma");
    Zip::from(values).for_each(|h| {
        *h += Complex64::new(normal.sample(rng), normal.sample(rng));
    });
}

/// Adds circularly-symmetric complex Gaussian noise so that mean signal
/// power over mean noise power is `10^(snr_db/10)`. `None` or `+inf`
/// returns the input untouched.
pub fn add_noise(cfr: &CfrSet, snr_db: Option<f64>, seed: u64) -> Result<CfrSet> {
    let Some(snr) = noise_requested(snr_db)? else {
        return Ok(cfr.clone());
    };
    let mean_power = cfr.energy() / cfr.values.len() as f64;
    let sigma = noise_sigma(mean_power, snr)?;
    let mut out = cfr.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_gaussian(&mut out.values, sigma, &mut rng);
    Ok(out)
}

/// Noise for both MA sub-arrays, scaled to their joint signal power and
/// drawn from two streams of one seed.
pub fn add_noise_ma(cfr: &MaCfr, snr_db: Option<f64>, seed: u64) -> Result<MaCfr> {
    let Some(snr) = noise_requested(snr_db)? else {
        return Ok(cfr.clone());
    };
    let count = (cfr.x.values.len() + cfr.y.values.len()) as f64;
    let sigma = noise_sigma(cfr.energy() / count, snr)?;
    let mut out = cfr.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_gaussian(&mut out.x.values, sigma, &mut rng);
    rng.set_stream(1);
    add_gaussian(&mut out.y.values, sigma, &mut rng);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn three_paths() -> Vec<PathComponent> {
        vec![
            PathComponent::from_db(0.0, 0.0, 60.0, 120.0, 12.0).unwrap(),
            PathComponent::from_db(-10.0, 0.0, 30.0, 140.0, 40.0).unwrap(),
            PathComponent::from_db(-15.0, 0.0, 80.0, 220.0, 13.0).unwrap(),
        ]
    }

    fn grid() -> FrequencyGrid {
        FrequencyGrid::new(26e9, 30e9, 400).unwrap()
    }

    #[test]
    fn empty_path_set_gives_zeros() {
        let f = grid();
        let ph = PhaseModel::for_grid(&f);
        let ura = gen_ura_cfr(&[], &UraGeometry::square(3, 0.5).unwrap(), &f, &ph).unwrap();
        assert!(ura.is_zero());
        let ma = gen_ma_cfr(&[], &MaGeometry::new(5, 5, 0.5).unwrap(), &f, &ph).unwrap();
        assert!(ma.is_zero());
    }

    #[test]
    fn boresight_unit_path_is_all_ones() {
        let f = grid();
        let p = PathComponent::new(
            Complex64::new(1.0, 0.0),
            crate::model::Direction::new(0.0, 0.0).unwrap(),
            0.0,
        )
        .unwrap();
        let ura = gen_ura_cfr(
            &[p],
            &UraGeometry::square(3, 0.5).unwrap(),
            &f,
            &PhaseModel::for_grid(&f),
        )
        .unwrap();
        assert!(ura.values.iter().all(|h| *h == Complex64::new(1.0, 0.0)));
        let ma = gen_ma_cfr(
            &[p],
            &MaGeometry::new(5, 3, 0.5).unwrap(),
            &f,
            &PhaseModel::for_grid(&f),
        )
        .unwrap();
        assert!(ma.x.values.iter().all(|h| *h == Complex64::new(1.0, 0.0)));
        assert!(ma.y.values.iter().all(|h| *h == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn three_path_centre_element_is_temporal_sum() {
        let f = grid();
        let paths = three_paths();
        let ura = gen_ura_cfr(
            &paths,
            &UraGeometry::square(5, 0.5).unwrap(),
            &f,
            &PhaseModel::for_grid(&f),
        )
        .unwrap();
        // 26 GHz, element (0, 0): written out term by term
        let a = [1.0, 10f64.powf(-0.5), 10f64.powf(-0.75)];
        let tau = [12e-9, 40e-9, 13e-9];
        let mut oracle = Complex64::new(0.0, 0.0);
        for k in 0..3 {
            let ph = -2.0 * PI * 26e9 * tau[k];
            oracle += Complex64::new(a[k] * ph.cos(), a[k] * ph.sin());
        }
        assert_abs_diff_eq!(
            (ura.values[[2, 2, 0]] - oracle).norm(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ma_centre_elements_agree_and_match_ura_row() {
        let f = grid();
        let ph = PhaseModel::for_grid(&f);
        let paths = three_paths();
        let ma = gen_ma_cfr(&paths, &MaGeometry::new(9, 9, 0.5).unwrap(), &f, &ph).unwrap();
        let cx = ma.x.line().row(4).to_owned();
        let cy = ma.y.line().row(4).to_owned();
        assert_eq!(cx, cy);

        let ura = gen_ura_cfr(&paths, &UraGeometry::square(5, 0.5).unwrap(), &f, &ph).unwrap();
        for ix in 0..5 {
            for l in 0..f.len() {
                let d = ura.values[[ix, 2, l]] - ma.x.values[[ix + 2, 0, l]];
                assert!(d.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn aliasing_guard() {
        let f = FrequencyGrid::new(26e9, 30e9, 1500).unwrap();
        // 1/(2 df) = 187.4 ns
        let far = PathComponent::from_db(0.0, 0.0, 10.0, 100.0, 190.0).unwrap();
        let err = gen_ma_cfr(
            &[far],
            &MaGeometry::new(3, 3, 0.5).unwrap(),
            &f,
            &PhaseModel::for_grid(&f),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DelayAliasing { .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn wideband_phase_scales_with_frequency() {
        let f = grid();
        let ph = PhaseModel {
            ref_freq_hz: f.mid_freq(),
            narrowband: false,
        };
        let p = PathComponent::from_db(0.0, 0.0, 30.0, 0.0, 0.0).unwrap();
        let ma = gen_ma_cfr(&[p], &MaGeometry::new(3, 3, 0.5).unwrap(), &f, &ph).unwrap();
        let u = 0.5;
        for l in [0, 399] {
            let expected =
                Complex64::from_polar(1.0, 2.0 * PI * 0.5 * u * f.freq(l) / f.mid_freq());
            assert_abs_diff_eq!(
                (ma.x.values[[2, 0, l]] - expected).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn noise_edge_cases() {
        let f = grid();
        let ph = PhaseModel::for_grid(&f);
        let ura = gen_ura_cfr(
            &three_paths(),
            &UraGeometry::square(3, 0.5).unwrap(),
            &f,
            &ph,
        )
        .unwrap();
        assert_eq!(add_noise(&ura, None, 1).unwrap(), ura);
        assert_eq!(add_noise(&ura, Some(f64::INFINITY), 1).unwrap(), ura);
        assert!(add_noise(&ura, Some(f64::NAN), 1).is_err());
        let zero = gen_ura_cfr(&[], &UraGeometry::square(3, 0.5).unwrap(), &f, &ph).unwrap();
        assert!(matches!(
            add_noise(&zero, Some(10.0), 1),
            Err(Error::NoSignal(_))
        ));
        // deterministic in the seed
        assert_eq!(
            add_noise(&ura, Some(10.0), 7).unwrap(),
            add_noise(&ura, Some(10.0), 7).unwrap()
        );
        assert_ne!(
            add_noise(&ura, Some(10.0), 7).unwrap(),
            add_noise(&ura, Some(10.0), 8).unwrap()
        );
    }

    #[test]
    fn empirical_snr_matches_request() {
        let f = FrequencyGrid::new(26e9, 30e9, 4096).unwrap();
        let ph = PhaseModel::for_grid(&f);
        let p = PathComponent::from_db(0.0, 0.0, 20.0, 30.0, 10.0).unwrap();
        let clean = gen_ura_cfr(&[p], &UraGeometry::square(5, 0.5).unwrap(), &f, &ph).unwrap();
        let noisy = add_noise(&clean, Some(20.0), 42).unwrap();
        let noise = noisy.sub(&clean).unwrap();
        let snr = 10.0 * (clean.energy() / noise.energy()).log10();
        assert!((snr - 20.0).abs() < 0.2, "empirical SNR {snr}");

        let ma = gen_ma_cfr(&[p], &MaGeometry::new(9, 9, 0.5).unwrap(), &f, &ph).unwrap();
        let noisy = add_noise_ma(&ma, Some(20.0), 42).unwrap();
        let snr = 10.0 * (ma.energy() / noisy.sub(&ma).unwrap().energy()).log10();
        assert!((snr - 20.0).abs() < 0.2, "empirical MA SNR {snr}");
    }

    #[test]
    fn layout_shape_rules() {
        let f = grid();
        let ph = PhaseModel::for_grid(&f);
        assert!(CfrSet::zeros(CfrLayout::MaX, f, ph, 3, 3, 0.5, 0.5).is_err());
        assert!(CfrSet::zeros(CfrLayout::Ura, f, ph, 4, 3, 0.5, 0.5).is_err());
        assert_eq!(CfrLayout::parse("ma_y"), Some(CfrLayout::MaY));
        assert_eq!(CfrLayout::MaX.as_str(), "ma_x");
    }
}
