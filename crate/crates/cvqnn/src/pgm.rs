//! Binary 8-bit grayscale PGM (`P5`) images.

use std::path::Path;

use crate::error::{CliError, CliResult};

pub fn pgm_bytes(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height, "pixel count must match the image size");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> CliResult<()> {
    crate::report::write_file(path, &pgm_bytes(width, height, pixels))
}

/// `(width, height, pixels)`. Accepts header comments; rejects 16-bit images.
pub fn parse_pgm(bytes: &[u8]) -> CliResult<(usize, usize, Vec<u8>)> {
    let bad = |m: &str| CliError::data(format!("malformed PGM: {m}"));
    if !bytes.starts_with(b"P5") {
        return Err(bad("missing P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos]).ok().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad number"))?;
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit images are supported"));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("no separator before pixel data"));
    }
    let data = &bytes[pos + 1..];
    if data.len() < width * height {
        return Err(bad("truncated pixel data"));
    }
    Ok((width, height, data[..width * height].to_vec()))
}

pub fn read_pgm(path: &Path) -> CliResult<(usize, usize, Vec<u8>)> {
    parse_pgm(&std::fs::read(path).map_err(|e| CliError::read(path, e))?)
}
