//! File formats: EIKF binary fields, CSV, PGM images, `key = value` text,
//! and path polylines.
//!
//! EIKF v1 is an ASCII header line
//! `EIKF 1 <ndims> <dim0> [dim1] <origin...> <spacing...>` followed by the
//! values as little-endian `f64`, row-major.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField};
use crate::report::fmt_f64;

const MAGIC: &str = "EIKF";

pub fn write_field<W: Write>(mut w: W, field: &ScalarField) -> Result<()> {
    let g = field.grid();
    let mut header = format!("{MAGIC} 1 {}", g.ndim());
    for d in g.dims() {
        header.push_str(&format!(" {d}"));
    }
    for v in g.origin().iter().chain(g.spacing()) {
        header.push(' ');
        header.push_str(&fmt_f64(*v));
    }
    header.push('\n');
    w.write_all(header.as_bytes())?;
    let mut buf = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_field<R: BufRead>(mut r: R) -> Result<ScalarField> {
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    let text = std::str::from_utf8(&line).map_err(|_| Error::Parse("EIKF header is not ASCII".into()))?;
    let mut tok = text.split_ascii_whitespace();
    if tok.next() != Some(MAGIC) {
        return Err(Error::Parse("missing EIKF magic".into()));
    }
    if tok.next() != Some("1") {
        return Err(Error::Parse("unsupported EIKF version".into()));
    }
    let mut next = |what: &str| -> Result<&str> { tok.next().ok_or_else(|| Error::Parse(format!("EIKF header ends before {what}"))) };
    let ndim: usize = parse(next("ndims")?)?;
    if !(1..=2).contains(&ndim) {
        return Err(Error::Parse(format!("EIKF ndims {ndim} not 1 or 2")));
    }
    let dims = (0..ndim).map(|_| parse(next("dims")?)).collect::<Result<Vec<usize>>>()?;
    let origin = (0..ndim).map(|_| parse(next("origin")?)).collect::<Result<Vec<f64>>>()?;
    let spacing = (0..ndim).map(|_| parse(next("spacing")?)).collect::<Result<Vec<f64>>>()?;
    let grid = GridSpec::new(dims, origin, spacing)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Parse(format!(
            "EIKF payload has {} bytes, expected {}",
            bytes.len(),
            8 * grid.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    ScalarField::new(grid, values)
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("cannot parse `{s}`")))
}

pub fn save_field(path: &Path, field: &ScalarField) -> Result<()> {
    let mut buf = Vec::new();
    write_field(&mut buf, field)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<ScalarField> {
    let bytes = fs::read(path)?;
    read_field(&bytes[..]).map_err(|e| match e {
        Error::Parse(message) => Error::Format {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// C `printf("%.17g")`.
pub fn fmt_g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let mant = strip_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mant}e{sign}{:02}", exp.abs());
    }
    let decimals = (16 - exp) as usize;
    strip_zeros(&format!("{v:.decimals$}")).to_string()
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One line per grid row (axis 0), comma separated.
pub fn write_csv<W: Write>(mut w: W, field: &ScalarField) -> Result<()> {
    let cols = field.grid().cols();
    let mut out = String::new();
    for row in field.values().chunks(cols) {
        let cells: Vec<String> = row.iter().map(|&v| fmt_g17(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

/// 8- or 16-bit grayscale raster, row-major from the top-left pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, maxval: u16, pixels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parse("image has no pixels".into()));
        }
        if maxval == 0 {
            return Err(Error::Parse("PGM maxval must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                got: pixels.len(),
            });
        }
        if let Some(p) = pixels.iter().find(|&&p| p > maxval) {
            return Err(Error::Parse(format!("pixel {p} exceeds maxval {maxval}")));
        }
        Ok(Self {
            width,
            height,
            maxval,
            pixels,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.pixels[row * self.width + col]
    }

    /// Pixel rescaled to `0..=255`.
    pub fn level(&self, row: usize, col: usize) -> f64 {
        255.0 * self.get(row, col) as f64 / self.maxval as f64
    }

    /// Grid with one node per pixel: axis 0 = row, axis 1 = column, unit
    /// spacing. Errors for images narrower than two pixels.
    pub fn pixel_grid(&self) -> Result<GridSpec> {
        GridSpec::new_2d([self.height, self.width], [0.0, 0.0], [1.0, 1.0])
    }
}

pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0;
    let token = |pos: &mut usize| -> Result<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::Parse("PGM ends early".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let magic = token(&mut pos)?;
    let width: usize = parse(&token(&mut pos)?)?;
    let height: usize = parse(&token(&mut pos)?)?;
    let maxval: u32 = parse(&token(&mut pos)?)?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Parse(format!("PGM maxval {maxval} out of range")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Parse("PGM dimensions overflow".into()))?;
    let pixels = match magic.as_str() {
        "P2" => (0..n)
            .map(|_| token(&mut pos).and_then(|t| parse::<u16>(&t)))
            .collect::<Result<Vec<_>>>()?,
        "P5" => {
            // exactly one whitespace byte separates the header from the raster
            pos += 1;
            let wide = maxval > 255;
            let need = if wide { 2 * n } else { n };
            let raster = bytes
                .get(pos..pos + need)
                .ok_or_else(|| Error::Parse("PGM raster is truncated".into()))?;
            if wide {
                raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
            } else {
                raster.iter().map(|&b| b as u16).collect()
            }
        }
        other => return Err(Error::Parse(format!("not a PGM file (magic `{other}`)"))),
    };
    GrayImage::new(width, height, maxval as u16, pixels)
}

pub fn load_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path)?;
    read_pgm(&bytes).map_err(|e| match e {
        Error::Parse(message) => Error::Format {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Binary (P5) PGM.
pub fn write_pgm<W: Write>(mut w: W, img: &GrayImage) -> Result<()> {
    write!(w, "P5\n{} {}\n{}\n", img.width, img.height, img.maxval)?;
    let raster: Vec<u8> = if img.maxval > 255 {
        img.pixels.iter().flat_map(|p| p.to_be_bytes()).collect()
    } else {
        img.pixels.iter().map(|&p| p as u8).collect()
    };
    w.write_all(&raster)?;
    Ok(())
}

/// ASCII (P2) PGM.
pub fn write_pgm_ascii<W: Write>(mut w: W, img: &GrayImage) -> Result<()> {
    let mut out = format!("P2\n{} {}\n{}\n", img.width, img.height, img.maxval);
    for row in img.pixels.chunks(img.width) {
        let cells: Vec<String> = row.iter().map(|p| p.to_string()).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", n + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub fn write_key_values<W: Write>(mut w: W, pairs: &[(String, String)]) -> Result<()> {
    for (k, v) in pairs {
        writeln!(w, "{k} = {v}")?;
    }
    Ok(())
}

/// `x,y` rows under a header, then `# status: <status>`.
pub fn write_path_csv<W: Write>(mut w: W, path: &crate::plan::PathPolyline) -> Result<()> {
    let mut out = String::from("x,y\n");
    for p in &path.points {
        out.push_str(&format!("{},{}\n", fmt_g17(p[0]), fmt_g17(p[1])));
    }
    out.push_str(&format!("# status: {}\n", path.status.name()));
    w.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_path_csv(text: &str) -> Result<crate::plan::PathPolyline> {
    let mut points = Vec::new();
    let mut status = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line == "x,y" {
            continue;
        }
        if let Some(rest) = line.strip_prefix("# status:") {
            status = Some(rest.trim().parse()?);
            continue;
        }
        let (x, y) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("bad path row `{line}`")))?;
        points.push([parse(x.trim())?, parse(y.trim())?]);
    }
    Ok(crate::plan::PathPolyline {
        points,
        status: status.ok_or_else(|| Error::Parse("path file has no status line".into()))?,
    })
}
