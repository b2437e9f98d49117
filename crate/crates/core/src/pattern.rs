//! Excitation design and narrowband array-factor / power-pattern evaluation
//! for rectangular and multiplicative arrays.
//!
//! A URA with separable excitation `A = wx * wy^T` has power pattern
//! `|Fx(u)|^2 |Fy(v)|^2`. A multiplicative array driven by the
//! auto-convolutions `wx (*) wx` and `wy (*) wy` has sub-array factors
//! `Fx(u)^2` and `Fy(v)^2`, and its power pattern is their product. The two
//! agree exactly when `Fx` and `Fy` are real, which is the case for
//! conjugate-symmetric excitations.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{signed_indices, MaGeometry, UraGeometry, UvPoint};

/// Tolerance used by [`check_conjugate_symmetry`].
pub const CONJ_SYMMETRY_TOL: f64 = 1e-12;

/// Per-axis complex element weights, indexed by signed element position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excitation {
    weights: Vec<Complex64>,
}

impl Excitation {
    pub fn new(weights: Vec<Complex64>) -> Result<Self> {
        if weights.is_empty() || weights.len() % 2 == 0 {
            return Err(Error::invalid(format!(
                "excitation length {} must be odd",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("excitation weights must be finite"));
        }
        Ok(Self { weights })
    }

    pub fn from_real(weights: &[f64]) -> Result<Self> {
        Self::new(weights.iter().map(|&w| Complex64::new(w, 0.0)).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    /// `sum |w|`, the coherent gain of the weights toward their own beam.
    pub fn l1_norm(&self) -> f64 {
        self.weights.iter().map(|w| w.norm()).sum()
    }

    /// `sum_m w_m exp(j 2 pi m d u)` over signed element indices `m`.
    ///
    /// Near pattern nulls the sum cancels heavily, so phases are reduced
    /// exactly to a fraction of a turn and the sum is compensated; the
    /// result is then accurate to a few ulps of `sum |w|`.
    pub fn array_factor(&self, spacing_wl: f64, u: f64) -> Complex64 {
        let mut re = CompensatedSum::default();
        let mut im = CompensatedSum::default();
        for (m, w) in signed_indices(self.len()).zip(&self.weights) {
            let z = turns_phasor(spacing_wl, u, m);
            re.add_product(w.re, z.re);
            re.add_product(-w.im, z.im);
            im.add_product(w.re, z.im);
            im.add_product(w.im, z.re);
        }
        Complex64::new(re.value(), im.value())
    }
}

/// `exp(j 2 pi d u m)`, with `d u m` formed as an unevaluated double-double
/// and its integer part removed before the trigonometric call.
fn turns_phasor(spacing_wl: f64, u: f64, m: i64) -> Complex64 {
    let (a, a_lo) = two_prod(spacing_wl, u);
    let m = m as f64;
    let (hi, lo) = two_prod(a, m);
    let frac = (hi - hi.round()) + (lo + a_lo * m);
    Complex64::from_polar(1.0, 2.0 * PI * frac)
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Neumaier summation with error-free products.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    err: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        self.err += if self.sum.abs() >= x.abs() {
            (self.sum - t) + x
        } else {
            (x - t) + self.sum
        };
        self.sum = t;
    }

    fn add_product(&mut self, a: f64, b: f64) {
        let (p, e) = two_prod(a, b);
        self.add(p);
        self.err += e;
    }

    fn value(&self) -> f64 {
        self.sum + self.err
    }
}

fn chebyshev_poly(order: f64, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        (order * x.acos()).cos()
    } else {
        // odd element counts give an even order, so the sign of x drops out
        (order * x.abs().acosh()).cosh()
    }
}

/// Dolph-Chebyshev weights for an odd number of elements, peak-normalized
/// to 1, with equiripple sidelobes `sidelobe_db` below the main lobe.
///
/// The weights are the inverse DFT of `T_{n-1}(x0 cos(pi k / n))`, the
/// Chebyshev polynomial sampled at the `n` pattern points where the array
/// factor is a trigonometric polynomial of degree `(n-1)/2`.
pub fn chebyshev_taper(n: usize, sidelobe_db: f64) -> Result<Excitation> {
    if n == 0 || n % 2 == 0 {
        return Err(Error::invalid(format!("taper length {n} must be odd")));
    }
    if !(sidelobe_db.is_finite() && sidelobe_db > 0.0) {
        return Err(Error::invalid("sidelobe level must be a positive dB value"));
    }
    if n == 1 {
        return Excitation::from_real(&[1.0]);
    }
    let order = (n - 1) as f64;
    let ratio = 10f64.powf(sidelobe_db / 20.0);
    let x0 = (ratio.acosh() / order).cosh();
    let samples: Vec<f64> = (0..n)
        .map(|k| chebyshev_poly(order, x0 * (PI * k as f64 / n as f64).cos()))
        .collect();
    let half = (n + 1) / 2;
    let one_side: Vec<f64> = (0..half)
        .map(|i| {
            samples
                .iter()
                .enumerate()
                .map(|(k, p)| p * (2.0 * PI * (k * i) as f64 / n as f64).cos())
                .sum()
        })
        .collect();
    let mut full: Vec<f64> = one_side[1..].iter().rev().copied().collect();
    full.extend_from_slice(&one_side);
    let peak = full.iter().cloned().fold(f64::MIN, f64::max);
    Excitation::from_real(&full.iter().map(|w| w / peak).collect::<Vec<_>>())
}

/// Full self-convolution; an `M`-element input yields `2M - 1` weights.
pub fn auto_convolve(w: &Excitation) -> Excitation {
    let a = w.weights();
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * a.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in a.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    Excitation { weights: out }
}

/// Applies the linear phase ramp `exp(-j 2 pi d m u0)` that points the beam
/// of `sum_m w_m exp(j 2 pi m d u)` at `u0`.
pub fn steer(w: &Excitation, u0: f64, spacing_wl: f64) -> Result<Excitation> {
    if !(u0.is_finite() && u0.abs() <= 1.0) {
        return Err(Error::invalid(format!(
            "steering cosine {u0} outside [-1, 1]"
        )));
    }
    let weights = signed_indices(w.len())
        .zip(w.weights())
        .map(|(m, x)| x * turns_phasor(spacing_wl, u0, -m))
        .collect();
    Ok(Excitation { weights })
}

/// `true` iff `conj(w)` equals `w` reversed, elementwise within 1e-12.
pub fn check_conjugate_symmetry(w: &Excitation) -> bool {
    let a = w.weights();
    a.iter()
        .zip(a.iter().rev())
        .all(|(x, y)| (x.conj() - y).norm() <= CONJ_SYMMETRY_TOL)
}

/// Rectilinear `(u, v)` sample lattice; rows follow `u`, columns `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UvLattice {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Each axis covers exactly one period of the array factor.
    #[serde(default)]
    pub periodic: bool,
}

impl UvLattice {
    /// `n x n` points evenly covering `[-1, 1]^2`, edges included.
    pub fn square(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("lattice needs at least 2 points per axis"));
        }
        let axis: Vec<f64> = (0..n)
            .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
            .collect();
        Ok(Self {
            u: axis.clone(),
            v: axis,
            periodic: false,
        })
    }

    /// `n x n` points over one period `[-1/(2d), 1/(2d))` of an array with
    /// spacings `dx_wl`, `dy_wl`; the upper edge is left out because it
    /// repeats the lower one. For half-wavelength spacing this is `[-1, 1)`.
    pub fn one_period(n: usize, dx_wl: f64, dy_wl: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("lattice needs at least 2 points per axis"));
        }
        let axis = |d: f64| -> Vec<f64> {
            let half = 0.5 / d;
            (0..n)
                .map(|i| -half + 2.0 * half * i as f64 / n as f64)
                .collect()
        };
        Ok(Self {
            u: axis(dx_wl),
            v: axis(dy_wl),
            periodic: true,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.u.len(), self.v.len())
    }

    pub fn point(&self, iu: usize, iv: usize) -> UvPoint {
        UvPoint::new(self.u[iu], self.v[iv])
    }

    /// Largest gap between neighbouring samples on either axis.
    pub fn cell(&self) -> f64 {
        self.u
            .windows(2)
            .chain(self.v.windows(2))
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

/// Narrowband power pattern on a `(u, v)` lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPattern {
    /// Real part of the pattern; rows follow `lattice.u`.
    pub values: Array2<f64>,
    pub lattice: UvLattice,
    pub peak_value: f64,
    pub peak_index: (usize, usize),
    /// Largest imaginary part met while forming the pattern (zero up to
    /// rounding for conjugate-symmetric excitations).
    pub max_imag: f64,
}

impl PowerPattern {
    fn from_complex(values: Array2<Complex64>, lattice: UvLattice) -> Self {
        let max_imag = values.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        let real = values.mapv(|c| c.re);
        let mut peak_value = f64::MIN;
        let mut peak_index = (0, 0);
        for ((i, j), &p) in real.indexed_iter() {
            if p > peak_value {
                peak_value = p;
                peak_index = (i, j);
            }
        }
        Self {
            values: real,
            lattice,
            peak_value,
            peak_index,
            max_imag,
        }
    }

    /// `10 log10 |P|`; the pattern is already a squared-magnitude quantity.
    pub fn level_db(&self) -> Array2<f64> {
        self.values.mapv(|p| 10.0 * p.abs().log10())
    }

    pub fn peak_point(&self) -> UvPoint {
        self.lattice.point(self.peak_index.0, self.peak_index.1)
    }

    pub fn is_visible(&self, iu: usize, iv: usize) -> bool {
        self.lattice.point(iu, iv).is_visible()
    }
}

fn axis_factors(w: &Excitation, spacing_wl: f64, axis: &[f64]) -> Vec<Complex64> {
    axis.iter()
        .map(|&u| w.array_factor(spacing_wl, u))
        .collect()
}

/// URA power pattern `|D|^2` with `D(u,v) = Fx(u) Fy(v) / (M N)`.
pub fn ura_power_pattern(
    wx: &Excitation,
    wy: &Excitation,
    geometry: &UraGeometry,
    lattice: &UvLattice,
) -> Result<PowerPattern> {
    if wx.len() != geometry.m_count || wy.len() != geometry.n_count {
        return Err(Error::DimensionMismatch(format!(
            "URA excitations {}x{} do not match geometry {}x{}",
            wx.len(),
            wy.len(),
            geometry.m_count,
            geometry.n_count
        )));
    }
    let norm = (geometry.m_count * geometry.n_count) as f64;
    let fx = axis_factors(wx, geometry.dx_wl, &lattice.u);
    let fy = axis_factors(wy, geometry.dy_wl, &lattice.v);
    let values = Array2::from_shape_fn(lattice.shape(), |(i, j)| {
        let d = fx[i] * fy[j] / norm;
        Complex64::new(d.norm_sqr(), 0.0)
    });
    Ok(PowerPattern::from_complex(values, lattice.clone()))
}

/// Multiplicative-array power pattern `Dx(u) Dy(v)`.
///
/// Each sub-array factor is divided by `M^2` (resp. `N^2`) where `M = (M'+1)/2`
/// is the emulated URA axis length, so a URA-equivalent array reproduces
/// [`ura_power_pattern`] exactly and an auto-convolved uniform array peaks
/// at 1.
pub fn ma_power_pattern(
    wx: &Excitation,
    wy: &Excitation,
    geometry: &MaGeometry,
    lattice: &UvLattice,
) -> Result<PowerPattern> {
    if wx.len() != geometry.x_count || wy.len() != geometry.y_count {
        return Err(Error::DimensionMismatch(format!(
            "MA excitations {}+{} do not match geometry {}+{}",
            wx.len(),
            wy.len(),
            geometry.x_count,
            geometry.y_count
        )));
    }
    let (m, n) = geometry.equivalent_ura_dims();
    let norm = ((m * m) * (n * n)) as f64;
    let fx = axis_factors(wx, geometry.spacing_wl, &lattice.u);
    let fy = axis_factors(wy, geometry.spacing_wl, &lattice.v);
    let values = Array2::from_shape_fn(lattice.shape(), |(i, j)| fx[i] * fy[j] / norm);
    Ok(PowerPattern::from_complex(values, lattice.clone()))
}
