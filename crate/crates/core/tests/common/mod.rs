//! Randomized checks of the model invariants against brute-force oracles,
//! shared by the property tests and the acceptance run.

use std::f64::consts::PI;

use masound::beamform::{
    cbf_ma, cbf_ura, padp_ma, padp_ura, predict_ma_terms, ArrayTaper, BeamAxes,
};
use masound::channel::{gen_ma_cfr, gen_ura_cfr, CfrSet};
use masound::model::{
    delay_axis, signed_indices, Direction, FrequencyGrid, MaGeometry, PathComponent, PhaseModel,
    ScanGrid, UraGeometry, UvPoint,
};
use masound::pattern::{
    auto_convolve, chebyshev_taper, ma_power_pattern, steer, ura_power_pattern, Excitation,
    UvLattice,
};
use masound::sic::{
    detect_strongest, run_sic, run_sic_observed, subtract_path, EstimatorConfig, StopReason,
};
use masound::ura_estimate::run_ura_clean;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{TestCaseError, TestRunner};

pub type Outcome = Result<(), String>;

/// Every property with its case count.
pub const SUITES: &[(&str, fn(u32) -> Outcome, u32)] = &[
    ("term_count_law", term_count_law, 256),
    ("cfr_superposition", cfr_superposition, 256),
    (
        "generators_match_direct_formula",
        generators_match_direct_formula,
        256,
    ),
    (
        "beams_and_padps_match_direct_sums",
        beams_and_padps_match_direct_sums,
        256,
    ),
    (
        "ma_pattern_equals_ura_pattern",
        ma_pattern_equals_ura_pattern,
        256,
    ),
    (
        "single_path_ma_agrees_with_ura",
        single_path_ma_agrees_with_ura,
        200,
    ),
    (
        "sic_halts_within_max_iterations",
        sic_halts_within_max_iterations,
        200,
    ),
    (
        "estimated_powers_non_increasing",
        estimated_powers_non_increasing,
        200,
    ),
    ("on_grid_recovery_is_exact", on_grid_recovery_is_exact, 200),
    (
        "strongest_residual_maximum_is_true",
        strongest_residual_maximum_is_true,
        200,
    ),
    (
        "subtraction_cancels_the_path",
        subtraction_cancels_the_path,
        200,
    ),
];

fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Outcome {
    let mut runner = TestRunner::new(ProptestConfig {
        cases,
        max_shrink_iters: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn freqs(n: usize) -> FrequencyGrid {
    FrequencyGrid::new(26e9, 30e9, n).unwrap()
}

fn odd(max: usize) -> impl Strategy<Value = usize> {
    (0..=(max - 1) / 2).prop_map(|h| 2 * h + 1)
}

/// Paths with delays strictly inside the alias-free range of `f`.
fn paths(f: FrequencyGrid, max_k: usize) -> impl Strategy<Value = Vec<PathComponent>> {
    let limit_ns = f.max_path_delay() * 1e9 * 0.999;
    prop::collection::vec(
        (
            -20.0..0.0f64,
            -180.0..180.0f64,
            0.0..=90.0f64,
            0.0..360.0f64,
            0.0..limit_ns,
        ),
        0..=max_k,
    )
    .prop_map(|v| {
        v.into_iter()
            .map(|(p, ph, t, a, d)| PathComponent::from_db(p, ph, t, a, d).unwrap())
            .collect()
    })
}

fn amplitude_sum(p: &[PathComponent]) -> f64 {
    p.iter().map(|c| c.amplitude.norm()).sum::<f64>().max(1.0)
}

fn cis(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, x)
}

/// Direct evaluation of the CFR formula at one element.
fn naive_cfr(
    paths: &[PathComponent],
    m: i64,
    n: i64,
    dx: f64,
    dy: f64,
    f: f64,
    phase: &PhaseModel,
) -> Complex64 {
    let s = if phase.narrowband {
        1.0
    } else {
        f / phase.ref_freq_hz
    };
    paths
        .iter()
        .map(|p| {
            let uv = p.direction.uv();
            p.amplitude
                * cis(-2.0 * PI * f * p.delay_s)
                * cis(2.0 * PI * s * (m as f64 * dx * uv.u + n as f64 * dy * uv.v))
        })
        .sum()
}

fn taper_weights(t: Option<&Excitation>, n: usize) -> (Vec<Complex64>, f64) {
    match t {
        Some(t) => (
            t.weights().to_vec(),
            t.weights().iter().map(|w| w.norm()).sum(),
        ),
        None => (vec![Complex64::new(1.0, 0.0); n], n as f64),
    }
}

/// Delay-and-sum over a whole URA CFR at frequency index `l`.
fn naive_ura_beam(cfr: &CfrSet, l: usize, p: UvPoint, taper: Option<&ArrayTaper>) -> Complex64 {
    let f = cfr.freqs.freq(l);
    let s = if cfr.phase.narrowband {
        1.0
    } else {
        f / cfr.phase.ref_freq_hz
    };
    let (tx, nx) = taper_weights(taper.map(|t| &t.x), cfr.n_x());
    let (ty, ny) = taper_weights(taper.map(|t| &t.y), cfr.n_y());
    let mut acc = Complex64::new(0.0, 0.0);
    for (ix, m) in signed_indices(cfr.n_x()).enumerate() {
        for (iy, n) in signed_indices(cfr.n_y()).enumerate() {
            let w = tx[ix]
                * ty[iy]
                * cis(2.0
                    * PI
                    * s
                    * (m as f64 * cfr.spacing_x_wl * p.u + n as f64 * cfr.spacing_y_wl * p.v));
            acc += w.conj() * cfr.values[[ix, iy, l]];
        }
    }
    acc / (nx * ny)
}

fn naive_line_beam(cfr: &CfrSet, l: usize, c: f64, taper: Option<&Excitation>) -> Complex64 {
    let f = cfr.freqs.freq(l);
    let s = if cfr.phase.narrowband {
        1.0
    } else {
        f / cfr.phase.ref_freq_hz
    };
    let line = cfr.line();
    let (t, norm) = taper_weights(taper, line.nrows());
    let d = cfr.axis_spacing();
    signed_indices(line.nrows())
        .enumerate()
        .map(|(i, m)| (t[i] * cis(2.0 * PI * s * m as f64 * d * c)).conj() * line[[i, l]])
        .sum::<Complex64>()
        / norm
}

fn naive_delay(spectrum: &[Complex64], f: &FrequencyGrid, tau: f64) -> Complex64 {
    spectrum
        .iter()
        .zip(f.iter())
        .map(|(b, fl)| b * cis(2.0 * PI * fl * tau))
        .sum::<Complex64>()
        / spectrum.len() as f64
}

fn close(a: Complex64, b: Complex64, scale: f64, tol: f64) -> bool {
    (a - b).norm() <= tol * scale
}

pub fn term_count_law(cases: u32) -> Outcome {
    check(cases, (paths(freqs(400), 6),), |(p,)| {
        let k = p.len();
        let terms = predict_ma_terms(&p);
        prop_assert_eq!(terms.len(), k * k);
        prop_assert_eq!(terms.iter().filter(|t| t.is_true()).count(), k);
        prop_assert_eq!(terms.iter().filter(|t| !t.is_true()).count(), k * k - k);
        for t in &terms {
            let (i, j) = t.origin;
            prop_assert!((t.u - p[i].direction.uv().u).abs() <= 1e-15);
            prop_assert!((t.v - p[j].direction.uv().v).abs() <= 1e-15);
            prop_assert_eq!(t.delay_s, p[i].delay_s + p[j].delay_s);
            prop_assert!((t.level_db - 0.5 * (p[i].power_db() + p[j].power_db())).abs() < 1e-12);
        }
        Ok(())
    })
}

pub fn cfr_superposition(cases: u32) -> Outcome {
    check(
        cases,
        (
            2usize..32,
            odd(5),
            odd(5),
            0usize..=4,
            paths(freqs(32), 4),
            any::<bool>(),
        ),
        |(l, m, n, split, seed_paths, narrowband)| {
            let f = freqs(l);
            let limit = f.max_path_delay();
            let all: Vec<PathComponent> = seed_paths
                .into_iter()
                .map(|mut c| {
                    c.delay_s = c.delay_s.min(limit * 0.999);
                    c
                })
                .collect();
            let split = split.min(all.len());
            let (a, b) = all.split_at(split);
            let phase = PhaseModel {
                ref_freq_hz: 28e9,
                narrowband,
            };
            let g = UraGeometry::new(m, n, 0.5, 0.4).unwrap();
            let whole = gen_ura_cfr(&all, &g, &f, &phase).unwrap();
            let parts = gen_ura_cfr(a, &g, &f, &phase)
                .unwrap()
                .add(&gen_ura_cfr(b, &g, &f, &phase).unwrap())
                .unwrap();
            let mg = MaGeometry::new(2 * m - 1, 2 * n - 1, 0.5).unwrap();
            let ma_whole = gen_ma_cfr(&all, &mg, &f, &phase).unwrap();
            let ma_parts = gen_ma_cfr(a, &mg, &f, &phase)
                .unwrap()
                .add(&gen_ma_cfr(b, &mg, &f, &phase).unwrap())
                .unwrap();
            if b.len() <= 1 {
                // appending one path is the same floating-point sequence
                prop_assert_eq!(&whole.values, &parts.values);
                prop_assert_eq!(&ma_whole.x.values, &ma_parts.x.values);
                prop_assert_eq!(&ma_whole.y.values, &ma_parts.y.values);
            } else {
                let s = amplitude_sum(&all);
                for (x, y) in whole.values.iter().zip(parts.values.iter()) {
                    prop_assert!(close(*x, *y, s, 1e-14));
                }
                for (x, y) in ma_whole.x.values.iter().zip(ma_parts.x.values.iter()) {
                    prop_assert!(close(*x, *y, s, 1e-14));
                }
            }
            let bound = all.iter().map(|c| c.amplitude.norm()).sum::<f64>() * (1.0 + 1e-12);
            prop_assert!(whole.values.iter().all(|h| h.norm() <= bound));
            Ok(())
        },
    )
}

pub fn generators_match_direct_formula(cases: u32) -> Outcome {
    check(
        cases,
        (
            2usize..=64,
            odd(5),
            odd(5),
            0.3..=0.5f64,
            0.3..=0.5f64,
            paths(freqs(64), 3),
            any::<bool>(),
        ),
        |(l, m, n, dx, dy, p, narrowband)| {
            let f = freqs(l);
            let limit = f.max_path_delay();
            let p: Vec<PathComponent> = p
                .into_iter()
                .map(|mut c| {
                    c.delay_s = c.delay_s.min(limit * 0.999);
                    c
                })
                .collect();
            let phase = PhaseModel {
                ref_freq_hz: 27.5e9,
                narrowband,
            };
            let ura =
                gen_ura_cfr(&p, &UraGeometry::new(m, n, dx, dy).unwrap(), &f, &phase).unwrap();
            let s = amplitude_sum(&p);
            for (ix, mi) in signed_indices(m).enumerate() {
                for (iy, ni) in signed_indices(n).enumerate() {
                    for li in 0..l {
                        let want = naive_cfr(&p, mi, ni, dx, dy, f.freq(li), &phase);
                        prop_assert!(close(ura.values[[ix, iy, li]], want, s, 1e-9));
                    }
                }
            }
            let ma = gen_ma_cfr(
                &p,
                &MaGeometry::new(2 * m - 1, 2 * n - 1, dx).unwrap(),
                &f,
                &phase,
            )
            .unwrap();
            for (ix, mi) in signed_indices(2 * m - 1).enumerate() {
                for li in 0..l {
                    prop_assert!(close(
                        ma.x.values[[ix, 0, li]],
                        naive_cfr(&p, mi, 0, dx, dx, f.freq(li), &phase),
                        s,
                        1e-9
                    ));
                }
            }
            for (iy, ni) in signed_indices(2 * n - 1).enumerate() {
                for li in 0..l {
                    prop_assert!(close(
                        ma.y.values[[0, iy, li]],
                        naive_cfr(&p, 0, ni, dx, dx, f.freq(li), &phase),
                        s,
                        1e-9
                    ));
                }
            }
            Ok(())
        },
    )
}

pub fn beams_and_padps_match_direct_sums(cases: u32) -> Outcome {
    check(
        cases,
        (
            2usize..=64,
            odd(5),
            odd(5),
            paths(freqs(64), 3),
            any::<bool>(),
            any::<bool>(),
            20.0..40.0f64,
            0.0..=90.0f64,
            prop::collection::btree_set(0u32..360, 1..4),
            1usize..=3,
        ),
        |(l, m, n, p, narrowband, tapered, sll, theta, phis, pad)| {
            let f = freqs(l);
            let limit = f.max_path_delay();
            let p: Vec<PathComponent> = p
                .into_iter()
                .map(|mut c| {
                    c.delay_s = c.delay_s.min(limit * 0.999);
                    c
                })
                .collect();
            let phase = PhaseModel {
                ref_freq_hz: 28e9,
                narrowband,
            };
            let s = amplitude_sum(&p);
            let phi: Vec<f64> = phis.into_iter().map(f64::from).collect();
            let scan = ScanGrid::new(vec![theta], phi.clone()).unwrap();
            let lc = f.center_index();

            let ura =
                gen_ura_cfr(&p, &UraGeometry::new(m, n, 0.5, 0.45).unwrap(), &f, &phase).unwrap();
            let ut = tapered.then(|| ArrayTaper {
                x: chebyshev_taper(m, sll).unwrap(),
                y: chebyshev_taper(n, sll).unwrap(),
            });
            let beam = cbf_ura(
                &ura,
                BeamAxes::Angular(scan.clone()),
                f.freq(lc),
                ut.as_ref(),
            )
            .unwrap();
            for (j, &ph) in phi.iter().enumerate() {
                let uv = Direction::new(theta, ph).unwrap().uv();
                prop_assert!(close(
                    beam.values[[0, j]],
                    naive_ura_beam(&ura, lc, uv, ut.as_ref()),
                    s,
                    1e-9
                ));
            }
            let padp = padp_ura(&ura, theta, &phi, pad, ut.as_ref()).unwrap();
            let axis = delay_axis(&f, pad).unwrap();
            for (j, &ph) in phi.iter().enumerate() {
                let uv = Direction::new(theta, ph).unwrap().uv();
                let spec: Vec<Complex64> = (0..l)
                    .map(|li| naive_ura_beam(&ura, li, uv, ut.as_ref()))
                    .collect();
                for k in 0..axis.n_bins {
                    prop_assert!(close(
                        padp.values[[j, k]],
                        naive_delay(&spec, &f, axis.delay(k)),
                        s,
                        1e-9
                    ));
                }
            }

            let ma = gen_ma_cfr(
                &p,
                &MaGeometry::new(2 * m - 1, 2 * n - 1, 0.5).unwrap(),
                &f,
                &phase,
            )
            .unwrap();
            let mt = tapered.then(|| ArrayTaper {
                x: auto_convolve(&chebyshev_taper(m, sll).unwrap()),
                y: auto_convolve(&chebyshev_taper(n, sll).unwrap()),
            });
            let beam = cbf_ma(&ma, BeamAxes::Angular(scan), f.freq(lc), mt.as_ref()).unwrap();
            let padp = padp_ma(&ma, theta, &phi, pad, mt.as_ref()).unwrap();
            for (j, &ph) in phi.iter().enumerate() {
                let uv = Direction::new(theta, ph).unwrap().uv();
                let xy = |li: usize| {
                    naive_line_beam(&ma.x, li, uv.u, mt.as_ref().map(|t| &t.x))
                        * naive_line_beam(&ma.y, li, uv.v, mt.as_ref().map(|t| &t.y))
                };
                prop_assert!(close(beam.values[[0, j]], xy(lc), s * s, 1e-9));
                let spec: Vec<Complex64> = (0..l).map(xy).collect();
                for k in 0..axis.n_bins {
                    prop_assert!(close(
                        padp.values[[j, k]],
                        naive_delay(&spec, &f, axis.delay(k)),
                        s * s,
                        1e-9
                    ));
                }
            }
            Ok(())
        },
    )
}

pub fn ma_pattern_equals_ura_pattern(cases: u32) -> Outcome {
    check(
        cases,
        (
            odd(9),
            odd(9),
            15.0..50.0f64,
            -0.7..0.7f64,
            -0.7..0.7f64,
            prop::collection::vec(0.1..1.0f64, 5),
        ),
        |(m, n, sll, u0, v0, extra)| {
            // real symmetric taper, randomly reshaped, then steered
            let reshape = |t: Excitation| {
                let w: Vec<f64> = t
                    .weights()
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let j = i.min(t.len() - 1 - i);
                        c.re * extra[j % extra.len()]
                    })
                    .collect();
                Excitation::from_real(&w).unwrap()
            };
            let wx = steer(&reshape(chebyshev_taper(m, sll).unwrap()), u0, 0.5).unwrap();
            let wy = steer(&reshape(chebyshev_taper(n, sll).unwrap()), v0, 0.5).unwrap();
            let lattice = UvLattice::square(33).unwrap();
            let ura = ura_power_pattern(
                &wx,
                &wy,
                &UraGeometry::new(m, n, 0.5, 0.5).unwrap(),
                &lattice,
            )
            .unwrap();
            let ma_g = MaGeometry::new(2 * m - 1, 2 * n - 1, 0.5).unwrap();
            let ma = ma_power_pattern(&auto_convolve(&wx), &auto_convolve(&wy), &ma_g, &lattice)
                .unwrap();
            let peak = ura.peak_value;
            for (a, b) in ura.values.iter().zip(ma.values.iter()) {
                prop_assert!(
                    (a - b).abs() <= 1e-9 * a.abs().max(1e-6 * peak),
                    "{} vs {}",
                    a,
                    b
                );
                prop_assert!(*b >= -1e-12);
            }
            prop_assert!(ma.max_imag <= 1e-12 * peak.max(1.0));
            Ok(())
        },
    )
}

/// Grids shared by the estimator properties: 64 points over 26-30 GHz and
/// a 10 degree scan.
fn sic_grid() -> (FrequencyGrid, EstimatorConfig) {
    let config = EstimatorConfig {
        scan: ScanGrid::uniform((0.0, 90.0, 10.0), (90.0, 270.0, 10.0)).unwrap(),
        ..Default::default()
    };
    (freqs(64), config)
}

fn wrap(d: f64) -> f64 {
    (d + 180.0).rem_euclid(360.0) - 180.0
}

/// Well-separated on-grid paths: angles on the 10 degree scan, delays on
/// estimator bins, direction cosines and delays pairwise apart.
fn on_grid_paths(max_k: usize) -> impl Strategy<Value = Vec<PathComponent>> {
    let (f, config) = sic_grid();
    let axis = delay_axis(&f, config.pad_factor).unwrap();
    let max_bin = ((f.max_path_delay() * 0.9) / axis.bin_width_s) as usize;
    prop::collection::vec(
        (
            0.0..12.0f64,
            -180.0..180.0f64,
            2u32..=8,
            1u32..=17,
            16usize..max_bin,
        ),
        1..=max_k,
    )
    .prop_map(move |raw| {
        let mut out: Vec<PathComponent> = Vec::new();
        let mut levels: Vec<f64> = Vec::new();
        for (atten, ph, t, a, bin) in raw {
            let c = PathComponent::from_db(
                -atten,
                ph,
                10.0 * t as f64,
                90.0 + 10.0 * a as f64,
                axis.delay(bin) * 1e9,
            )
            .unwrap();
            let c = PathComponent {
                delay_s: axis.delay(bin),
                ..c
            };
            let uv = c.direction.uv();
            let apart = out.iter().all(|o| {
                let q = o.direction.uv();
                (q.u - uv.u).abs() >= 0.3
                    && (q.v - uv.v).abs() >= 0.3
                    && (o.delay_s - c.delay_s).abs() >= 1e-9
            });
            let distinct_level = levels.iter().all(|l| (l - atten).abs() >= 1.0);
            if apart && distinct_level {
                out.push(c);
                levels.push(atten);
            }
        }
        out
    })
}

pub fn single_path_ma_agrees_with_ura(cases: u32) -> Outcome {
    check(
        cases,
        (
            0.0..10.0f64,
            -180.0..180.0f64,
            20.0..80.0f64,
            100.0..260.0f64,
            0.1..0.9f64,
        ),
        |(atten, ph, theta, phi, delay_frac)| {
            let (f, config) = sic_grid();
            let p = PathComponent::from_db(
                -atten,
                ph,
                theta,
                phi,
                delay_frac * f.max_path_delay() * 1e9,
            )
            .unwrap();
            let phase = PhaseModel::for_grid(&f);
            let ura = gen_ura_cfr(&[p], &UraGeometry::square(5, 0.5).unwrap(), &f, &phase).unwrap();
            let ma = gen_ma_cfr(&[p], &MaGeometry::new(9, 9, 0.5).unwrap(), &f, &phase).unwrap();
            let a = run_ura_clean(&ura, &config).unwrap();
            let b = run_sic(&ma, &config).unwrap();
            prop_assert!(!a.paths.is_empty() && !b.paths.is_empty());
            let (x, y) = (a.paths[0], b.paths[0]);
            let bin = delay_axis(&f, config.pad_factor).unwrap().bin_width_s;
            prop_assert!((x.direction.theta_deg - y.direction.theta_deg).abs() <= 10.0 + 1e-9);
            prop_assert!(wrap(x.direction.phi_deg - y.direction.phi_deg).abs() <= 10.0 + 1e-9);
            prop_assert!(
                (x.delay_s - y.delay_s).abs() <= bin * (1.0 + 1e-9),
                "{} vs {}",
                x.delay_s,
                y.delay_s
            );
            Ok(())
        },
    )
}

pub fn sic_halts_within_max_iterations(cases: u32) -> Outcome {
    check(
        cases,
        (paths(freqs(64), 4), 1usize..=6, 5.0..45.0f64),
        |(p, max_iterations, epsilon)| {
            prop_assume!(!p.is_empty());
            let (f, base) = sic_grid();
            let config = EstimatorConfig {
                max_iterations,
                epsilon_db: epsilon,
                ..base
            };
            let ma = gen_ma_cfr(
                &p,
                &MaGeometry::new(9, 9, 0.5).unwrap(),
                &f,
                &PhaseModel::for_grid(&f),
            )
            .unwrap();
            let r = run_sic(&ma, &config).unwrap();
            prop_assert!(r.paths.len() <= max_iterations);
            prop_assert!(r.diagnostics.len() <= max_iterations);
            if r.stop_reason == StopReason::MaxIterations {
                prop_assert_eq!(r.diagnostics.len(), max_iterations);
            }
            for (i, e) in r.paths.iter().enumerate() {
                prop_assert!(e.iteration >= i + 1 && e.iteration <= max_iterations);
            }
            Ok(())
        },
    )
}

pub fn estimated_powers_non_increasing(cases: u32) -> Outcome {
    check(
        cases,
        (paths(freqs(64), 4), on_grid_paths(3), any::<bool>()),
        |(p, on_grid, pick)| {
            let p = if pick || p.is_empty() { on_grid } else { p };
            let (f, config) = sic_grid();
            let ma = gen_ma_cfr(
                &p,
                &MaGeometry::new(21, 21, 0.5).unwrap(),
                &f,
                &PhaseModel::for_grid(&f),
            )
            .unwrap();
            let r = run_sic(&ma, &config).unwrap();
            prop_assert!(r.paths.windows(2).all(|w| w[1].iteration > w[0].iteration));
            for w in r.paths.windows(2) {
                prop_assert!(
                    w[1].amplitude_db <= w[0].amplitude_db,
                    "{} then {}",
                    w[0].amplitude_db,
                    w[1].amplitude_db
                );
            }
            Ok(())
        },
    )
}

pub fn on_grid_recovery_is_exact(cases: u32) -> Outcome {
    check(cases, (on_grid_paths(3),), |(p,)| {
        let (f, config) = sic_grid();
        let ma = gen_ma_cfr(
            &p,
            &MaGeometry::new(21, 21, 0.5).unwrap(),
            &f,
            &PhaseModel::for_grid(&f),
        )
        .unwrap();
        let r = run_sic(&ma, &config).unwrap();
        prop_assert_eq!(r.paths.len(), p.len(), "{:?}", r.paths);
        let bin = delay_axis(&f, config.pad_factor).unwrap().bin_width_s;
        for truth in &p {
            let hit = r.paths.iter().find(|e| e.direction == truth.direction);
            prop_assert!(hit.is_some(), "no estimate at {:?}", truth.direction);
            let e = hit.unwrap();
            prop_assert!((e.delay_s - truth.delay_s).abs() <= 1e-6 * bin);
            prop_assert!((e.amplitude_db - truth.power_db()).abs() <= 0.5);
        }
        Ok(())
    })
}

pub fn strongest_residual_maximum_is_true(cases: u32) -> Outcome {
    check(cases, (on_grid_paths(3),), |(p,)| {
        let (f, config) = sic_grid();
        let g = MaGeometry::new(21, 21, 0.5).unwrap();
        let ma = gen_ma_cfr(&p, &g, &f, &PhaseModel::for_grid(&f)).unwrap();
        let mut strongest: Vec<Direction> = Vec::new();
        let r = run_sic_observed(&ma, &config, |snap| {
            strongest.push(detect_strongest(snap.beam).unwrap());
        })
        .unwrap();
        for (q, d) in strongest.iter().enumerate().take(p.len()) {
            let removed: Vec<Direction> = r.paths[..q.min(r.paths.len())]
                .iter()
                .map(|e| e.direction)
                .collect();
            let remaining: Vec<&PathComponent> = p
                .iter()
                .filter(|t| !removed.contains(&t.direction))
                .collect();
            prop_assert!(
                remaining.iter().any(|t| t.direction == *d),
                "iteration {}: strongest at {:?}, remaining {:?}",
                q + 1,
                d,
                remaining
            );
        }
        Ok(())
    })
}

pub fn subtraction_cancels_the_path(cases: u32) -> Outcome {
    check(cases, (on_grid_paths(3),), |(p,)| {
        let (f, config) = sic_grid();
        let g = MaGeometry::new(21, 21, 0.5).unwrap();
        let ma = gen_ma_cfr(&p, &g, &f, &PhaseModel::for_grid(&f)).unwrap();
        let r = run_sic(&ma, &config).unwrap();
        let bin = delay_axis(&f, config.pad_factor).unwrap().bin_width_s;
        let mut residual = ma;
        for e in &r.paths {
            let (theta, phi) = (e.direction.theta_deg, e.direction.phi_deg);
            let k = (2.0 * e.delay_s / bin).round() as usize;
            let before = padp_ma(&residual, theta, &[phi], config.pad_factor, None).unwrap();
            let peak = before.values.iter().map(|b| b.norm()).fold(0.0, f64::max);
            residual = subtract_path(&residual, e).unwrap();
            let after = padp_ma(&residual, theta, &[phi], config.pad_factor, None).unwrap();
            let drop_db = 10.0 * (peak / after.values[[0, k]].norm()).log10();
            prop_assert!(
                drop_db >= 20.0,
                "only {:.1} dB at iteration {}",
                drop_db,
                e.iteration
            );
        }
        Ok(())
    })
}
