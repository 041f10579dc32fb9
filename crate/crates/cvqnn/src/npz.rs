//! `.npz` archives: zip containers of `.npy` members.
//!
//! The reader covers what numpy produces: stored or deflated members, with or
//! without zip64 records (numpy always writes zip64 size fields). Multi-disk
//! archives and encryption are rejected.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use flate2::read::DeflateDecoder;

use crate::error::{CliError, CliResult};
use crate::npy::NpyArray;

const EOCD_SIG: u32 = 0x0605_4b50;
const ZIP64_EOCD_SIG: u32 = 0x0606_4b50;
const ZIP64_LOCATOR_SIG: u32 = 0x0706_4b50;
const CENTRAL_SIG: u32 = 0x0201_4b50;
const LOCAL_SIG: u32 = 0x0403_4b50;

fn u16_at(b: &[u8], at: usize) -> CliResult<u16> {
    b.get(at..at + 2).map(|s| u16::from_le_bytes([s[0], s[1]])).ok_or_else(truncated)
}

fn u32_at(b: &[u8], at: usize) -> CliResult<u32> {
    b.get(at..at + 4).map(|s| u32::from_le_bytes(s.try_into().unwrap())).ok_or_else(truncated)
}

fn u64_at(b: &[u8], at: usize) -> CliResult<u64> {
    b.get(at..at + 8).map(|s| u64::from_le_bytes(s.try_into().unwrap())).ok_or_else(truncated)
}

fn truncated() -> CliError {
    CliError::data("zip archive is truncated")
}

#[derive(Debug)]
struct Entry {
    name: String,
    method: u16,
    crc: u32,
    compressed: u64,
    uncompressed: u64,
    local_offset: u64,
}

/// Fills the 0xFFFFFFFF fields of a central entry from its zip64 extra block.
fn apply_zip64_extra(extra: &[u8], e: &mut Entry, raw: (u32, u32, u32)) -> CliResult<()> {
    let mut at = 0;
    while at + 4 <= extra.len() {
        let id = u16_at(extra, at)?;
        let len = u16_at(extra, at + 2)? as usize;
        if id == 0x0001 {
            let mut p = at + 4;
            if raw.0 == u32::MAX {
                e.uncompressed = u64_at(extra, p)?;
                p += 8;
            }
            if raw.1 == u32::MAX {
                e.compressed = u64_at(extra, p)?;
                p += 8;
            }
            if raw.2 == u32::MAX {
                e.local_offset = u64_at(extra, p)?;
            }
            return Ok(());
        }
        at += 4 + len;
    }
    Ok(())
}

fn central_directory(bytes: &[u8]) -> CliResult<(u64, u64)> {
    let search_from = bytes.len().saturating_sub(22 + 65_535);
    let eocd = (search_from..=bytes.len().saturating_sub(22))
        .rev()
        .find(|&i| u32_at(bytes, i).ok() == Some(EOCD_SIG))
        .ok_or_else(|| CliError::data("not a zip archive (no end-of-central-directory record)"))?;
    let mut count = u16_at(bytes, eocd + 10)? as u64;
    let mut offset = u32_at(bytes, eocd + 16)? as u64;
    if count == 0xFFFF || offset == 0xFFFF_FFFF {
        let loc = eocd.checked_sub(20).ok_or_else(truncated)?;
        if u32_at(bytes, loc)? != ZIP64_LOCATOR_SIG {
            return Err(CliError::data("zip64 locator missing"));
        }
        let rec = u64_at(bytes, loc + 8)? as usize;
        if u32_at(bytes, rec)? != ZIP64_EOCD_SIG {
            return Err(CliError::data("zip64 end-of-central-directory record missing"));
        }
        count = u64_at(bytes, rec + 32)?;
        offset = u64_at(bytes, rec + 48)?;
    }
    Ok((count, offset))
}

fn entries(bytes: &[u8]) -> CliResult<Vec<Entry>> {
    let (count, offset) = central_directory(bytes)?;
    let mut at = offset as usize;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        if u32_at(bytes, at)? != CENTRAL_SIG {
            return Err(CliError::data("corrupt zip central directory"));
        }
        let flags = u16_at(bytes, at + 8)?;
        if flags & 1 != 0 {
            return Err(CliError::data("encrypted zip members are not supported"));
        }
        let raw = (u32_at(bytes, at + 24)?, u32_at(bytes, at + 20)?, u32_at(bytes, at + 42)?);
        let name_len = u16_at(bytes, at + 28)? as usize;
        let extra_len = u16_at(bytes, at + 30)? as usize;
        let comment_len = u16_at(bytes, at + 32)? as usize;
        let name = bytes.get(at + 46..at + 46 + name_len).ok_or_else(truncated)?;
        let mut e = Entry {
            name: String::from_utf8_lossy(name).into_owned(),
            method: u16_at(bytes, at + 10)?,
            crc: u32_at(bytes, at + 16)?,
            compressed: raw.1 as u64,
            uncompressed: raw.0 as u64,
            local_offset: raw.2 as u64,
        };
        let extra = bytes.get(at + 46 + name_len..at + 46 + name_len + extra_len).ok_or_else(truncated)?;
        apply_zip64_extra(extra, &mut e, raw)?;
        out.push(e);
        at += 46 + name_len + extra_len + comment_len;
    }
    Ok(out)
}

fn member_bytes(bytes: &[u8], e: &Entry) -> CliResult<Vec<u8>> {
    let at = e.local_offset as usize;
    if u32_at(bytes, at)? != LOCAL_SIG {
        return Err(CliError::data(format!("corrupt local header for '{}'", e.name)));
    }
    let start = at + 30 + u16_at(bytes, at + 26)? as usize + u16_at(bytes, at + 28)? as usize;
    let raw = bytes.get(start..start + e.compressed as usize).ok_or_else(truncated)?;
    let data = match e.method {
        0 => raw.to_vec(),
        8 => {
            let mut out = Vec::with_capacity(e.uncompressed as usize);
            DeflateDecoder::new(raw)
                .read_to_end(&mut out)
                .map_err(|err| CliError::data(format!("cannot inflate '{}': {err}", e.name)))?;
            out
        }
        m => return Err(CliError::data(format!("'{}' uses unsupported compression method {m}", e.name))),
    };
    if data.len() as u64 != e.uncompressed {
        return Err(CliError::data(format!("'{}' has {} bytes, expected {}", e.name, data.len(), e.uncompressed)));
    }
    if crc32fast::hash(&data) != e.crc {
        return Err(CliError::data(format!("CRC mismatch in '{}'", e.name)));
    }
    Ok(data)
}

/// All arrays in an archive, keyed by member name without `.npy`.
pub fn parse_npz(bytes: &[u8]) -> CliResult<BTreeMap<String, NpyArray>> {
    let mut out = BTreeMap::new();
    for e in entries(bytes)? {
        if e.name.ends_with('/') {
            continue;
        }
        let data = member_bytes(bytes, &e)?;
        let key = e.name.strip_suffix(".npy").unwrap_or(&e.name).to_string();
        let arr = NpyArray::parse(&data).map_err(|err| CliError::data(format!("member '{}': {err}", e.name)))?;
        out.insert(key, arr);
    }
    Ok(out)
}

pub fn read_npz(path: &Path) -> CliResult<BTreeMap<String, NpyArray>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::read(path, e))?;
    parse_npz(&bytes)
}

/// An uncompressed archive (no zip64; members must stay below 4 GiB).
pub fn npz_bytes(arrays: &[(&str, &NpyArray)]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut central = Vec::new();
    for (name, arr) in arrays {
        let data = arr.to_bytes();
        let fname = format!("{name}.npy");
        let crc = crc32fast::hash(&data);
        let offset = out.len() as u32;
        let fixed = |buf: &mut Vec<u8>| {
            buf.extend_from_slice(&20u16.to_le_bytes()); // version needed
            buf.extend_from_slice(&0u16.to_le_bytes()); // flags
            buf.extend_from_slice(&0u16.to_le_bytes()); // stored
            buf.extend_from_slice(&0u16.to_le_bytes()); // time
            buf.extend_from_slice(&0x21u16.to_le_bytes()); // date 1980-01-01
            buf.extend_from_slice(&crc.to_le_bytes());
            buf.extend_from_slice(&(data.len() as u32).to_le_bytes());
            buf.extend_from_slice(&(data.len() as u32).to_le_bytes());
            buf.extend_from_slice(&(fname.len() as u16).to_le_bytes());
            buf.extend_from_slice(&0u16.to_le_bytes()); // extra length
        };
        out.extend_from_slice(&LOCAL_SIG.to_le_bytes());
        fixed(&mut out);
        out.extend_from_slice(fname.as_bytes());
        out.extend_from_slice(&data);

        central.extend_from_slice(&CENTRAL_SIG.to_le_bytes());
        central.extend_from_slice(&20u16.to_le_bytes()); // made by
        fixed(&mut central);
        central.extend_from_slice(&[0; 6]); // comment length, disk, internal attrs
        central.extend_from_slice(&0u32.to_le_bytes()); // external attrs
        central.extend_from_slice(&offset.to_le_bytes());
        central.extend_from_slice(fname.as_bytes());
    }
    let cd_offset = out.len() as u32;
    out.extend_from_slice(&central);
    out.extend_from_slice(&EOCD_SIG.to_le_bytes());
    out.extend_from_slice(&[0; 4]); // disk numbers
    out.extend_from_slice(&(arrays.len() as u16).to_le_bytes());
    out.extend_from_slice(&(arrays.len() as u16).to_le_bytes());
    out.extend_from_slice(&(central.len() as u32).to_le_bytes());
    out.extend_from_slice(&cd_offset.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out
}

pub fn write_npz(path: &Path, arrays: &[(&str, &NpyArray)]) -> CliResult<()> {
    std::fs::write(path, npz_bytes(arrays)).map_err(|e| CliError::write(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writer_round_trip() {
        let a = NpyArray::from_u8(vec![2, 2], vec![0, 64, 128, 255]);
        let b = NpyArray::from_u8(vec![2, 1], vec![1, 0]);
        let parsed = parse_npz(&npz_bytes(&[("x", &a), ("y", &b)])).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed["x"], a);
        assert_eq!(parsed["y"], b);
    }

    #[test]
    fn corruption_is_detected() {
        let a = NpyArray::from_u8(vec![3], vec![1, 2, 3]);
        let mut bytes = npz_bytes(&[("x", &a)]);
        let body = bytes.windows(3).position(|w| w == [1, 2, 3]).unwrap();
        bytes[body] = 9;
        assert!(matches!(parse_npz(&bytes), Err(CliError::Data(m)) if m.contains("CRC")));
        assert!(parse_npz(b"not a zip").is_err());
    }
}
