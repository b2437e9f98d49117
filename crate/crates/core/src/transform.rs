//! Zero-padded frequency <-> delay transforms over a uniform frequency grid.
//!
//! The delay-domain response is `b(tau) = (1/L) sum_l H_l exp(+j 2 pi f_l tau)`
//! sampled at `tau_k = k / (P L df)`, so a unit path sitting on a bin reads
//! exactly 1 there. Writing `f_l = f_1 + l df` turns the sum into an
//! unnormalized inverse FFT of the zero-padded sequence times
//! `exp(j 2 pi f_1 tau_k)`.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array3, ArrayView1, ArrayViewMut1};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::channel::CfrSet;
use crate::error::{Error, Result};
use crate::model::{delay_axis, DelayAxis, FrequencyGrid};

/// Planned padded transform pair for one frequency grid and pad factor.
#[derive(Clone)]
pub struct DelayTransform {
    axis: DelayAxis,
    n_freq: usize,
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
    /// `exp(j 2 pi f_1 tau_k)` per delay bin.
    carrier: Vec<Complex64>,
}

impl std::fmt::Debug for DelayTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DelayTransform")
            .field("axis", &self.axis)
            .field("n_freq", &self.n_freq)
            .finish()
    }
}

impl DelayTransform {
    pub fn new(freqs: &FrequencyGrid, pad_factor: usize) -> Result<Self> {
        let axis = delay_axis(freqs, pad_factor)?;
        let mut planner = FftPlanner::new();
        let inverse = planner.plan_fft_inverse(axis.n_bins);
        let forward = planner.plan_fft_forward(axis.n_bins);
        let carrier = (0..axis.n_bins)
            .map(|k| {
                // reduce f_1 * tau_k to a fraction of a cycle before scaling
                let cycles = (freqs.f_start_hz * axis.delay(k)).fract();
                Complex64::from_polar(1.0, 2.0 * PI * cycles)
            })
            .collect();
        Ok(Self {
            axis,
            n_freq: freqs.len(),
            inverse,
            forward,
            carrier,
        })
    }

    pub fn axis(&self) -> &DelayAxis {
        &self.axis
    }

    pub fn n_freq(&self) -> usize {
        self.n_freq
    }

    /// Frequency samples to padded delay samples; `out` must hold
    /// `axis().n_bins` entries.
    pub fn to_delay_into(
        &self,
        cfr: ArrayView1<'_, Complex64>,
        mut out: ArrayViewMut1<'_, Complex64>,
    ) {
        assert_eq!(cfr.len(), self.n_freq, "frequency sample count");
        assert_eq!(out.len(), self.axis.n_bins, "delay bin count");
        let mut buf = vec![Complex64::new(0.0, 0.0); self.axis.n_bins];
        for (b, h) in buf.iter_mut().zip(cfr.iter()) {
            *b = *h;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n_freq as f64;
        for ((o, b), c) in out.iter_mut().zip(&buf).zip(&self.carrier) {
            *o = b * c * scale;
        }
    }

    pub fn to_delay(&self, cfr: &[Complex64]) -> Vec<Complex64> {
        let mut out = ndarray::Array1::zeros(self.axis.n_bins);
        self.to_delay_into(ArrayView1::from(cfr), out.view_mut());
        out.to_vec()
    }

    /// Inverse of [`Self::to_delay`]: recovers the `L` frequency samples
    /// from a full padded delay response.
    pub fn to_frequency_into(
        &self,
        cir: ArrayView1<'_, Complex64>,
        mut out: ArrayViewMut1<'_, Complex64>,
    ) {
        assert_eq!(cir.len(), self.axis.n_bins, "delay bin count");
        assert_eq!(out.len(), self.n_freq, "frequency sample count");
        let mut buf: Vec<Complex64> = cir
            .iter()
            .zip(&self.carrier)
            .map(|(b, c)| b * c.conj())
            .collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.axis.pad_factor as f64;
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = b * scale;
        }
    }

    pub fn to_frequency(&self, cir: &[Complex64]) -> Vec<Complex64> {
        let mut out = ndarray::Array1::zeros(self.n_freq);
        self.to_frequency_into(ArrayView1::from(cir), out.view_mut());
        out.to_vec()
    }
}

/// Per-element channel impulse response `[x element, y element, delay bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cir {
    pub values: Array3<Complex64>,
    pub axis: DelayAxis,
}

/// Transforms every element of a CFR set to the delay domain.
pub fn cfr_to_cir(cfr: &CfrSet, tr: &DelayTransform) -> Result<Cir> {
    if cfr.freqs.len() != tr.n_freq() {
        return Err(Error::DimensionMismatch(
            "transform planned for a different frequency grid".into(),
        ));
    }
    let (nx, ny, _) = cfr.values.dim();
    let mut values = Array3::zeros((nx, ny, tr.axis().n_bins));
    for ix in 0..nx {
        for iy in 0..ny {
            tr.to_delay_into(
                cfr.values.slice(ndarray::s![ix, iy, ..]),
                values.slice_mut(ndarray::s![ix, iy, ..]),
            );
        }
    }
    Ok(Cir {
        values,
        axis: *tr.axis(),
    })
}

/// Transforms a per-element CIR back into the frequency samples of `like`.
pub fn cir_to_cfr(cir: &Cir, tr: &DelayTransform, like: &CfrSet) -> Result<CfrSet> {
    let (nx, ny, nb) = cir.values.dim();
    if nb != tr.axis().n_bins || (nx, ny) != (like.n_x(), like.n_y()) {
        return Err(Error::DimensionMismatch(
            "CIR does not match the transform or target CFR".into(),
        ));
    }
    let mut out = like.clone();
    for ix in 0..nx {
        for iy in 0..ny {
            tr.to_frequency_into(
                cir.values.slice(ndarray::s![ix, iy, ..]),
                out.values.slice_mut(ndarray::s![ix, iy, ..]),
            );
        }
    }
    Ok(out)
}
