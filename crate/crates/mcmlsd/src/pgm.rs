//! Minimal PGM reader/writer (P5 binary and P2 ASCII, 8-bit).

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use mcmlsd_core::GrayImage;

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let data = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_pgm(&data).with_context(|| format!("{}: invalid PGM", path.display()))
}

fn parse_pgm(data: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;

    // header tokens separated by whitespace, '#' comments to end of line
    let mut token = || -> Result<String> {
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            bail!("truncated header");
        }
        Ok(String::from_utf8_lossy(&data[start..pos]).into_owned())
    };

    let magic = token()?;
    if magic != "P5" && magic != "P2" {
        bail!("unsupported magic {magic:?}");
    }
    let width: u32 = token()?.parse().context("bad width")?;
    let height: u32 = token()?.parse().context("bad height")?;
    let maxval: u32 = token()?.parse().context("bad maxval")?;
    if maxval == 0 || maxval > 255 {
        bail!("unsupported maxval {maxval} (8-bit only)");
    }
    let n = width as usize * height as usize;

    let values: Vec<u8> = if magic == "P5" {
        // exactly one whitespace byte after the maxval
        pos += 1;
        if data.len() < pos + n {
            bail!("truncated pixel data");
        }
        data[pos..pos + n].to_vec()
    } else {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let v: u32 = token()?.parse().context("bad pixel value")?;
            if v > maxval {
                bail!("pixel value {v} exceeds maxval {maxval}");
            }
            out.push(v as u8);
        }
        out
    };
    Ok(GrayImage::new(width, height, values)?)
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let mut out = Vec::with_capacity(img.pixels().len() + 32);
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height())?;
    out.extend_from_slice(img.pixels());
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}
