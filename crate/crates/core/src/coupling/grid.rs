//! Sampled cavity-mode field maps.
//!
//! Points sit at `origin + (ix·dx, iy·dy, iz·dz)` and each represents a cell
//! of volume `dx·dy·dz` (cell-centred midpoint rule). Storage is row-major
//! with z fastest: `index = (ix·ny + iy)·nz + iz`.
//!
//! # File format
//!
//! The first line is a JSON header:
//!
//! ```text
//! {"format":"purcellkit-fieldgrid","version":1,"dims":[nx,ny,nz],
//!  "spacing":[dx,dy,dz],"origin":[x0,y0,z0],"units":"m","body":"csv"}
//! ```
//!
//! For `"body":"csv"` the header is followed by the line `Ex,Ey,Ez,eps_rel`
//! and exactly `nx·ny·nz` data rows. For `"body":"f64le"` it is followed by
//! `nx·ny·nz·4` little-endian `f64` values in the same column order.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const GRID_FORMAT: &str = "purcellkit-fieldgrid";

#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    field: Vec<[f64; 3]>,
    eps: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridBody {
    Csv,
    F64le,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub format: String,
    pub version: u32,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub units: String,
    pub body: GridBody,
}

impl FieldGrid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3], field: Vec<[f64; 3]>, eps: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::domain(format!("grid needs at least 2 points per axis, got {dims:?}")));
        }
        if spacing.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::domain("grid spacing must be positive"));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::domain("grid origin must be finite"));
        }
        let n = dims[0] * dims[1] * dims[2];
        if field.len() != n || eps.len() != n {
            return Err(Error::domain(format!(
                "grid expects {n} points, got {} field and {} permittivity values",
                field.len(),
                eps.len()
            )));
        }
        if field.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::domain("field values must be finite"));
        }
        if eps.iter().any(|e| !(*e >= 1.0 && e.is_finite())) {
            return Err(Error::domain("relative permittivity must be >= 1"));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
            field,
            eps,
        })
    }

    /// Samples `f(x, y, z) -> (E, ε)` at every grid point.
    pub fn from_fn<F>(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3], mut f: F) -> Result<Self>
    where
        F: FnMut([f64; 3]) -> ([f64; 3], f64),
    {
        let n = dims[0] * dims[1] * dims[2];
        let mut field = Vec::with_capacity(n);
        let mut eps = Vec::with_capacity(n);
        for ix in 0..dims[0] {
            for iy in 0..dims[1] {
                for iz in 0..dims[2] {
                    let r = [
                        origin[0] + ix as f64 * spacing[0],
                        origin[1] + iy as f64 * spacing[1],
                        origin[2] + iz as f64 * spacing[2],
                    ];
                    let (e, er) = f(r);
                    field.push(e);
                    eps.push(er);
                }
            }
        }
        Self::new(dims, spacing, origin, field, eps)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.field.len()
    }

    pub fn is_empty(&self) -> bool {
        self.field.is_empty()
    }

    pub fn field(&self) -> &[[f64; 3]] {
        &self.field
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    pub fn position(&self, index: usize) -> [f64; 3] {
        let [_, ny, nz] = self.dims;
        let iz = index % nz;
        let iy = (index / nz) % ny;
        let ix = index / (ny * nz);
        [
            self.origin[0] + ix as f64 * self.spacing[0],
            self.origin[1] + iy as f64 * self.spacing[1],
            self.origin[2] + iz as f64 * self.spacing[2],
        ]
    }

    pub fn magnitude_sq(&self, index: usize) -> f64 {
        let e = self.field[index];
        e[0] * e[0] + e[1] * e[1] + e[2] * e[2]
    }

    /// ε|E|² at a point.
    pub fn energy_density(&self, index: usize) -> f64 {
        self.eps[index] * self.magnitude_sq(index)
    }

    /// Index maximizing `key` among `indices`; ties go to the lowest index.
    pub(crate) fn argmax_by<I, K>(&self, indices: I, key: K) -> Option<usize>
    where
        I: IntoIterator<Item = usize>,
        K: Fn(usize) -> f64,
    {
        let mut best: Option<(usize, f64)> = None;
        for i in indices {
            let v = key(i);
            match best {
                Some((_, b)) if v <= b => {}
                _ => best = Some((i, v)),
            }
        }
        best.map(|(i, _)| i)
    }

    /// Index of the maximum of ε|E|² over the whole grid.
    pub fn energy_argmax(&self) -> usize {
        self.argmax_by(0..self.len(), |i| self.energy_density(i)).unwrap_or(0)
    }

    /// Whether the |E| maximum and the ε|E|² maximum fall on the same point.
    pub fn maxima_coincide(&self) -> bool {
        let e = self.energy_argmax();
        let m = self.argmax_by(0..self.len(), |i| self.magnitude_sq(i)).unwrap_or(0);
        e == m || self.magnitude_sq(e) >= self.magnitude_sq(m)
    }

    /// Multiplies every field vector by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut g = self.clone();
        for e in &mut g.field {
            for c in e.iter_mut() {
                *c *= s;
            }
        }
        g
    }

    pub fn header(&self, body: GridBody) -> GridHeader {
        GridHeader {
            format: GRID_FORMAT.into(),
            version: 1,
            dims: self.dims,
            spacing: self.spacing,
            origin: self.origin,
            units: "m".into(),
            body,
        }
    }

    pub fn write<W: Write>(&self, mut w: W, body: GridBody) -> Result<()> {
        serde_json::to_writer(&mut w, &self.header(body))?;
        w.write_all(b"\n")?;
        match body {
            GridBody::Csv => {
                writeln!(w, "Ex,Ey,Ez,eps_rel")?;
                for (e, er) in self.field.iter().zip(&self.eps) {
                    writeln!(w, "{},{},{},{}", e[0], e[1], e[2], er)?;
                }
            }
            GridBody::F64le => {
                for (e, er) in self.field.iter().zip(&self.eps) {
                    for v in [e[0], e[1], e[2], *er] {
                        w.write_all(&v.to_le_bytes())?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Reads a grid file, validating the point count exactly. Logs a warning
    /// when the |E| and ε|E|² maxima do not coincide.
    pub fn read<R: BufRead>(mut r: R) -> Result<Self> {
        let mut first = String::new();
        r.read_line(&mut first)?;
        let header: GridHeader = serde_json::from_str(first.trim()).map_err(|e| Error::Parse {
            line: 1,
            column: e.column() as u64,
            message: format!("bad grid header: {e}"),
        })?;
        if header.format != GRID_FORMAT || header.version != 1 {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: format!("unsupported grid format {} v{}", header.format, header.version),
            });
        }
        if header.units != "m" {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: format!("grid units must be 'm', got '{}'", header.units),
            });
        }
        let n = header.dims.iter().product::<usize>();
        let (field, eps) = match header.body {
            GridBody::Csv => read_csv_body(r, n)?,
            GridBody::F64le => read_binary_body(r, n)?,
        };
        let grid = Self::new(header.dims, header.spacing, header.origin, field, eps)?;
        if !grid.maxima_coincide() {
            log::warn!("field-magnitude maximum and energy-density maximum are at different points");
        }
        Ok(grid)
    }
}

type Body = (Vec<[f64; 3]>, Vec<f64>);

fn read_csv_body<R: Read>(r: R, n: usize) -> Result<Body> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(r);
    let mut field = Vec::with_capacity(n);
    let mut eps = Vec::with_capacity(n);
    let mut saw_header = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(&e, 1))?;
        // The CSV reader starts after the JSON header line.
        let line = rec.position().map(|p| p.line() + 1).unwrap_or(0);
        if !saw_header {
            saw_header = true;
            let cols: Vec<&str> = rec.iter().collect();
            if cols != ["Ex", "Ey", "Ez", "eps_rel"] {
                return Err(Error::Parse {
                    line,
                    column: 1,
                    message: "expected column header Ex,Ey,Ez,eps_rel".into(),
                });
            }
            continue;
        }
        if rec.len() != 4 {
            return Err(Error::Parse {
                line,
                column: rec.len().min(4) as u64 + 1,
                message: format!("expected 4 columns, found {}", rec.len()),
            });
        }
        let mut vals = [0.0; 4];
        for (c, f) in rec.iter().enumerate() {
            vals[c] = f.parse::<f64>().map_err(|e| Error::Parse {
                line,
                column: c as u64 + 1,
                message: format!("'{f}': {e}"),
            })?;
        }
        if field.len() == n {
            return Err(Error::Parse {
                line,
                column: 1,
                message: format!("more than the {n} rows declared in the header"),
            });
        }
        field.push([vals[0], vals[1], vals[2]]);
        eps.push(vals[3]);
    }
    if field.len() != n {
        return Err(Error::Parse {
            line: field.len() as u64 + 3,
            column: 1,
            message: format!("header declares {n} rows, found {}", field.len()),
        });
    }
    Ok((field, eps))
}

fn read_binary_body<R: Read>(mut r: R, n: usize) -> Result<Body> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let expected = n * 4 * 8;
    if bytes.len() != expected {
        return Err(Error::Parse {
            line: 2,
            column: 1,
            message: format!("binary body has {} bytes, expected {expected}", bytes.len()),
        });
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let field = vals.chunks_exact(4).map(|c| [c[0], c[1], c[2]]).collect();
    let eps = vals.chunks_exact(4).map(|c| c[3]).collect();
    Ok((field, eps))
}

pub(crate) fn csv_error(e: &csv::Error, line_offset: u64) -> Error {
    let (line, column) = match e.position() {
        Some(p) => (p.line() + line_offset - 1, 1),
        None => (0, 0),
    };
    Error::Parse {
        line,
        column,
        message: e.to_string(),
    }
}

/// Parameters of a separable, apodized standing-wave test profile:
///
/// ```text
/// E_y = cos(2πx/Λ) · exp(−x²/2σx² − y²/2σy² − z²/2σz²)
/// E_x = a · sin(2πx/Λ) · (y/σy) · exp(...)
/// ```
///
/// A smooth stand-in for a photonic-crystal cavity mode when no simulated
/// field map is available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCavity {
    /// Standing-wave period Λ along x, in meters.
    pub period: f64,
    pub sigma: [f64; 3],
    /// Relative amplitude of the transverse E_x component.
    pub transverse: f64,
    pub eps_rel: f64,
}

impl Default for SyntheticCavity {
    fn default() -> Self {
        Self {
            period: 260e-9,
            sigma: [350e-9, 120e-9, 80e-9],
            transverse: 0.3,
            eps_rel: 5.7,
        }
    }
}

impl SyntheticCavity {
    pub fn field_at(&self, r: [f64; 3]) -> [f64; 3] {
        let [x, y, z] = r;
        let env = (-(x * x) / (2.0 * self.sigma[0].powi(2))
            - (y * y) / (2.0 * self.sigma[1].powi(2))
            - (z * z) / (2.0 * self.sigma[2].powi(2)))
        .exp();
        let phase = 2.0 * std::f64::consts::PI * x / self.period;
        [self.transverse * phase.sin() * (y / self.sigma[1]) * env, phase.cos() * env, 0.0]
    }

    /// Samples the profile on `points` evenly spaced nodes spanning `[lo, hi]`
    /// inclusive. Odd counts on a symmetric box put a node on the peak.
    pub fn sample(&self, lo: [f64; 3], hi: [f64; 3], points: [usize; 3]) -> Result<FieldGrid> {
        if points.iter().any(|&n| n < 2) {
            return Err(Error::domain("need at least 2 points per axis"));
        }
        let spacing = [0, 1, 2].map(|a| (hi[a] - lo[a]) / (points[a] - 1) as f64);
        FieldGrid::from_fn(points, spacing, lo, |r| (self.field_at(r), self.eps_rel))
    }

    /// Default box: ±600 nm × ±300 nm × ±200 nm.
    pub fn sample_default(&self, points: [usize; 3]) -> Result<FieldGrid> {
        self.sample([-600e-9, -300e-9, -200e-9], [600e-9, 300e-9, 200e-9], points)
    }
}
