//! Plain-text CFR files.
//!
//! ```text
//! # format_version=1
//! # layout=ma_x
//! # f_start_hz=26000000000
//! # f_stop_hz=30000000000
//! # n_freq=1500
//! # n_elem_x=199
//! # n_elem_y=1
//! # spacing_wl=0.5
//! # ref_freq_hz=28000000000
//! elem_index_x,elem_index_y,freq_index,re,im
//! -99,0,0,1.0000000000000000,0.0000000000000000
//! ...
//! ```
//!
//! Element indices are signed (`-(n-1)/2 ..= (n-1)/2`). Optional header keys
//! `spacing_y_wl` (when the y spacing differs) and `narrowband_phase`
//! (default `true`) carry the remaining [`CfrSet`] fields. Samples are
//! written with 17 significant digits so they read back bit-exact.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array3;
use num_complex::Complex64;

use crate::channel::{CfrLayout, CfrSet, MaCfr};
use crate::csvfmt::raw;
use crate::error::{Error, Result};
use crate::model::{FrequencyGrid, PhaseModel};

pub const FORMAT_VERSION: u32 = 1;

const COLUMNS: [&str; 5] = ["elem_index_x", "elem_index_y", "freq_index", "re", "im"];

/// File names used for a CFR of each layout inside an output directory.
pub fn default_file_name(layout: CfrLayout) -> &'static str {
    match layout {
        CfrLayout::Ura => "cfr_ura.csv",
        CfrLayout::MaX => "cfr_ma_x.csv",
        CfrLayout::MaY => "cfr_ma_y.csv",
    }
}

pub fn format_cfr(cfr: &CfrSet) -> String {
    let (nx, ny, nf) = cfr.values.dim();
    let mut s = String::with_capacity(64 * nx * ny * nf + 512);
    let _ = writeln!(s, "# format_version={FORMAT_VERSION}");
    let _ = writeln!(s, "# layout={}", cfr.layout.as_str());
    let _ = writeln!(s, "# f_start_hz={}", cfr.freqs.f_start_hz);
    let _ = writeln!(s, "# f_stop_hz={}", cfr.freqs.f_stop_hz);
    let _ = writeln!(s, "# n_freq={nf}");
    let _ = writeln!(s, "# n_elem_x={nx}");
    let _ = writeln!(s, "# n_elem_y={ny}");
    let _ = writeln!(s, "# spacing_wl={}", cfr.spacing_x_wl);
    if cfr.spacing_y_wl != cfr.spacing_x_wl {
        let _ = writeln!(s, "# spacing_y_wl={}", cfr.spacing_y_wl);
    }
    let _ = writeln!(s, "# ref_freq_hz={}", cfr.phase.ref_freq_hz);
    if !cfr.phase.narrowband {
        let _ = writeln!(s, "# narrowband_phase=false");
    }
    s.push_str(&COLUMNS.join(","));
    s.push('\n');
    let hx = (nx as i64 - 1) / 2;
    let hy = (ny as i64 - 1) / 2;
    for ix in 0..nx {
        for iy in 0..ny {
            for l in 0..nf {
                let h = cfr.values[[ix, iy, l]];
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    ix as i64 - hx,
                    iy as i64 - hy,
                    l,
                    raw(h.re),
                    raw(h.im)
                );
            }
        }
    }
    s
}

pub fn write_cfr(path: &Path, cfr: &CfrSet) -> Result<()> {
    std::fs::write(path, format_cfr(cfr)).map_err(|e| Error::io(path, e))
}

pub fn read_cfr(path: &Path) -> Result<CfrSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cfr(&text, path)
}

fn bad(path: &Path, reason: impl Into<String>) -> Error {
    Error::CfrFormat {
        path: PathBuf::from(path),
        reason: reason.into(),
    }
}

struct Header {
    entries: HashMap<String, String>,
}

impl Header {
    fn take(&mut self, key: &str, path: &Path) -> Result<String> {
        self.entries
            .remove(key)
            .ok_or_else(|| bad(path, format!("missing header key `{key}`")))
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str, path: &Path) -> Result<T> {
        let v = self.take(key, path)?;
        v.parse()
            .map_err(|_| bad(path, format!("header `{key}` has unreadable value `{v}`")))
    }
}

/// Parses CFR text; `path` is only used in error messages.
pub fn parse_cfr(text: &str, path: &Path) -> Result<CfrSet> {
    let mut entries = HashMap::new();
    for line in text.lines() {
        let Some(rest) = line.trim().strip_prefix('#') else {
            continue;
        };
        let rest = rest.trim();
        if rest.is_empty() {
            continue;
        }
        let (k, v) = rest
            .split_once('=')
            .ok_or_else(|| bad(path, format!("header line `{line}` is not key=value")))?;
        if entries
            .insert(k.trim().to_string(), v.trim().to_string())
            .is_some()
        {
            return Err(bad(path, format!("header key `{}` repeated", k.trim())));
        }
    }
    let mut h = Header { entries };
    let version: u32 = h.number("format_version", path)?;
    if version != FORMAT_VERSION {
        return Err(bad(
            path,
            format!("format_version {version} is not supported (expected {FORMAT_VERSION})"),
        ));
    }
    let layout_s = h.take("layout", path)?;
    let layout = CfrLayout::parse(&layout_s)
        .ok_or_else(|| bad(path, format!("unknown layout `{layout_s}`")))?;
    let f_start: f64 = h.number("f_start_hz", path)?;
    let f_stop: f64 = h.number("f_stop_hz", path)?;
    let n_freq: usize = h.number("n_freq", path)?;
    let nx: usize = h.number("n_elem_x", path)?;
    let ny: usize = h.number("n_elem_y", path)?;
    let spacing: f64 = h.number("spacing_wl", path)?;
    let ref_freq: f64 = h.number("ref_freq_hz", path)?;
    let spacing_y: f64 = if h.entries.contains_key("spacing_y_wl") {
        h.number("spacing_y_wl", path)?
    } else {
        spacing
    };
    let narrowband: bool = if h.entries.contains_key("narrowband_phase") {
        h.number("narrowband_phase", path)?
    } else {
        true
    };
    if let Some(k) = h.entries.keys().min() {
        return Err(bad(path, format!("unknown header key `{k}`")));
    }
    let freqs =
        FrequencyGrid::new(f_start, f_stop, n_freq).map_err(|e| bad(path, e.to_string()))?;
    if nx == 0 || ny == 0 || nx % 2 == 0 || ny % 2 == 0 {
        return Err(bad(path, format!("element counts {nx}x{ny} must be odd")));
    }

    let mut values = Array3::<Complex64>::zeros((nx, ny, n_freq));
    let mut seen = vec![false; nx * ny * n_freq];
    let mut count = 0usize;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let hx = (nx as i64 - 1) / 2;
    let hy = (ny as i64 - 1) / 2;
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(path, e.to_string()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(n as u64 + 1);
        if rec.iter().eq(COLUMNS.iter().copied()) {
            continue;
        }
        if rec.len() != 5 {
            return Err(bad(
                path,
                format!("line {line}: expected 5 fields, found {}", rec.len()),
            ));
        }
        let int = |i: usize| -> Result<i64> {
            rec[i].parse().map_err(|_| {
                bad(
                    path,
                    format!("line {line}: `{}` is not an integer", &rec[i]),
                )
            })
        };
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| bad(path, format!("line {line}: `{}` is not a number", &rec[i])))
        };
        let (x, y, l) = (int(0)?, int(1)?, int(2)?);
        if x.abs() > hx || y.abs() > hy || l < 0 || l as usize >= n_freq {
            return Err(bad(
                path,
                format!("line {line}: index ({x}, {y}, {l}) outside the {nx}x{ny}x{n_freq} header dimensions"),
            ));
        }
        let (ix, iy, l) = ((x + hx) as usize, (y + hy) as usize, l as usize);
        let flat = (ix * ny + iy) * n_freq + l;
        if seen[flat] {
            return Err(bad(
                path,
                format!("line {line}: duplicate row for ({x}, {y}, {l})"),
            ));
        }
        seen[flat] = true;
        values[[ix, iy, l]] = Complex64::new(num(3)?, num(4)?);
        count += 1;
    }
    if count != seen.len() {
        return Err(bad(
            path,
            format!(
                "dimension mismatch: header declares {nx}x{ny} elements x {n_freq} frequencies = {} rows, body has {count}",
                seen.len()
            ),
        ));
    }
    CfrSet::from_values(
        layout,
        freqs,
        PhaseModel {
            ref_freq_hz: ref_freq,
            narrowband,
        },
        spacing,
        spacing_y,
        values,
    )
    .map_err(|e| bad(path, e.to_string()))
}

pub fn write_ma_cfr(dir: &Path, cfr: &MaCfr) -> Result<(PathBuf, PathBuf)> {
    let px = dir.join(default_file_name(CfrLayout::MaX));
    let py = dir.join(default_file_name(CfrLayout::MaY));
    write_cfr(&px, &cfr.x)?;
    write_cfr(&py, &cfr.y)?;
    Ok((px, py))
}

pub fn read_ma_cfr(dir: &Path) -> Result<MaCfr> {
    let x = read_cfr(&dir.join(default_file_name(CfrLayout::MaX)))?;
    let y = read_cfr(&dir.join(default_file_name(CfrLayout::MaY)))?;
    MaCfr::new(x, y)
}
