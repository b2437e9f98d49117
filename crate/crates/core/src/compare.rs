//! Side-by-side URA and MA path tables.

use serde::{Deserialize, Serialize};

use crate::sic::EstimatedPath;

/// Delay (ns), azimuth (deg) and power (dB) of one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub delay_ns: f64,
    pub azimuth_deg: f64,
    pub power_db: f64,
}

impl From<&EstimatedPath> for PathSummary {
    fn from(p: &EstimatedPath) -> Self {
        Self {
            delay_ns: p.delay_s * 1e9,
            azimuth_deg: p.direction.phi_deg,
            power_db: p.amplitude_db,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub index: usize,
    pub ura: Option<PathSummary>,
    pub ma: Option<PathSummary>,
}

impl ComparisonRow {
    /// `MA - URA` per column, azimuth wrapped to `[-180, 180)`.
    pub fn error(&self) -> Option<PathSummary> {
        let (u, m) = (self.ura?, self.ma?);
        Some(PathSummary {
            delay_ns: m.delay_ns - u.delay_ns,
            azimuth_deg: wrap_degrees(m.azimuth_deg - u.azimuth_deg),
            power_db: m.power_db - u.power_db,
        })
    }
}

pub fn wrap_degrees(d: f64) -> f64 {
    (d + 180.0).rem_euclid(360.0) - 180.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub ura_count: usize,
    pub ma_count: usize,
    pub count_mismatch: bool,
}

/// Scale of one unit in the pairing distance: half a nanosecond of delay
/// weighs as much as one degree of azimuth.
const DELAY_UNIT_NS: f64 = 0.5;
const AZIMUTH_UNIT_DEG: f64 = 1.0;

fn distance(a: &PathSummary, b: &PathSummary) -> f64 {
    let dt = (a.delay_ns - b.delay_ns) / DELAY_UNIT_NS;
    let da = wrap_degrees(a.azimuth_deg - b.azimuth_deg) / AZIMUTH_UNIT_DEG;
    dt.hypot(da)
}

/// Pairs estimates greedily by nearest (delay, azimuth), closest pairs
/// first. Rows follow the URA order; unpaired MA paths are appended.
pub fn align_paths(ura: &[EstimatedPath], ma: &[EstimatedPath]) -> Comparison {
    let us: Vec<PathSummary> = ura.iter().map(PathSummary::from).collect();
    let ms: Vec<PathSummary> = ma.iter().map(PathSummary::from).collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, u) in us.iter().enumerate() {
        for (j, m) in ms.iter().enumerate() {
            pairs.push((distance(u, m), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut ura_match = vec![None; us.len()];
    let mut ma_used = vec![false; ms.len()];
    for (_, i, j) in pairs {
        if ura_match[i].is_none() && !ma_used[j] {
            ura_match[i] = Some(j);
            ma_used[j] = true;
        }
    }
    let mut rows: Vec<ComparisonRow> = us
        .iter()
        .zip(&ura_match)
        .map(|(u, m)| ComparisonRow {
            index: 0,
            ura: Some(*u),
            ma: m.map(|j| ms[j]),
        })
        .collect();
    for (j, used) in ma_used.iter().enumerate() {
        if !used {
            rows.push(ComparisonRow {
                index: 0,
                ura: None,
                ma: Some(ms[j]),
            });
        }
    }
    for (k, r) in rows.iter_mut().enumerate() {
        r.index = k + 1;
    }
    Comparison {
        rows,
        ura_count: us.len(),
        ma_count: ms.len(),
        count_mismatch: us.len() != ms.len(),
    }
}
