//! Binary artifacts, all little-endian.
//!
//! Tensor file (`CPOT`): magic, u32 version (=1), four u32 dims
//! `(In, Ic, Ih, Iw)`, then `In*Ic*Ih*Iw` IEEE-754 f32 values in map layout.
//!
//! Encoding dumps (`CPOE` / `CPSE`): magic, u32 version, the config fields
//! `(In, Ic, Ih, Iw, Kh, Kw, Sh, Sw, pad_top, pad_bottom, pad_left,
//! pad_right)` as u32, then per image the three stream lengths
//! `(ptr, in, da)` as u32 followed by the raw streams: `ptr` as i32, `in` as
//! i32, `da` as f32. Loading re-derives the block structure and fails with a
//! corruption error on any malformed stream.

use crate::error::{Error, Result};
use crate::streams::{rebuild_metas, Codec, EncodedMap, StreamSet};
use crate::tensor::{ActivationMap, ConvConfig};
use crate::{CpoEncoding, CpsEncoding};
use std::path::Path;

pub const TENSOR_MAGIC: [u8; 4] = *b"CPOT";
pub const CPO_DUMP_MAGIC: [u8; 4] = *b"CPOE";
pub const CPS_DUMP_MAGIC: [u8; 4] = *b"CPSE";
pub const FORMAT_VERSION: u32 = 1;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("file truncated".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32_vec(&mut self, n: usize) -> Result<Vec<i32>> {
        let raw = self.take(n * 4)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn f32_vec(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n * 4)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn write_tensor(path: impl AsRef<Path>, map: &ActivationMap) -> Result<()> {
    let mut out = Vec::with_capacity(24 + map.data().len() * 4);
    out.extend_from_slice(&TENSOR_MAGIC);
    push_u32(&mut out, FORMAT_VERSION);
    for dim in [map.n_images(), map.channels(), map.height(), map.width()] {
        push_u32(&mut out, dim as u32);
    }
    for &v in map.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<ActivationMap> {
    let bytes = std::fs::read(path)?;
    let mut cur = Cursor::new(&bytes);
    if cur.take(4)? != TENSOR_MAGIC {
        return Err(Error::Format("bad tensor magic".into()));
    }
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported tensor version {version}"
        )));
    }
    let (n, c, h, w) = (
        cur.u32()? as usize,
        cur.u32()? as usize,
        cur.u32()? as usize,
        cur.u32()? as usize,
    );
    let len = n
        .checked_mul(c)
        .and_then(|v| v.checked_mul(h))
        .and_then(|v| v.checked_mul(w))
        .ok_or_else(|| Error::Format("tensor dims overflow".into()))?;
    let data = cur.f32_vec(len)?;
    cur.finish()?;
    ActivationMap::new(n, c, h, w, data)
}

fn write_dump(path: impl AsRef<Path>, enc: &EncodedMap, magic: [u8; 4]) -> Result<()> {
    let config = &enc.config;
    let mut out = Vec::new();
    out.extend_from_slice(&magic);
    push_u32(&mut out, FORMAT_VERSION);
    for v in [
        enc.n_images,
        enc.channels,
        config.ih,
        config.iw,
        config.kh,
        config.kw,
        config.sh,
        config.sw,
        config.pad_top,
        config.pad_bottom,
        config.pad_left,
        config.pad_right,
    ] {
        push_u32(&mut out, v as u32);
    }
    for set in &enc.images {
        push_u32(&mut out, set.ptr.len() as u32);
        push_u32(&mut out, set.indices.len() as u32);
        push_u32(&mut out, set.da.len() as u32);
        for &v in &set.ptr {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &v in &set.indices {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &v in &set.da {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn read_dump(path: impl AsRef<Path>, magic: [u8; 4], codec: Codec) -> Result<EncodedMap> {
    let bytes = std::fs::read(path)?;
    let mut cur = Cursor::new(&bytes);
    if cur.take(4)? != magic {
        return Err(Error::Format("bad dump magic".into()));
    }
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported dump version {version}")));
    }
    let mut fields = [0usize; 12];
    for f in fields.iter_mut() {
        *f = cur.u32()? as usize;
    }
    let [n_images, channels, ih, iw, kh, kw, sh, sw, pt, pb, pl, pr] = fields;
    let config = ConvConfig::custom(ih, iw, kh, kw, sh, sw, [pt, pb, pl, pr])
        .map_err(|e| Error::Format(format!("bad dump config: {e}")))?;
    let mut images = Vec::with_capacity(n_images);
    for _ in 0..n_images {
        let ptr_len = cur.u32()? as usize;
        let in_len = cur.u32()? as usize;
        let da_len = cur.u32()? as usize;
        let ptr = cur.i32_vec(ptr_len)?;
        let indices = cur.i32_vec(in_len)?;
        let da = cur.f32_vec(da_len)?;
        let metas = rebuild_metas(&ptr, da.len(), &indices, &config, channels, codec)?;
        images.push(StreamSet {
            ptr,
            da,
            indices,
            channels: metas,
        });
    }
    cur.finish()?;
    Ok(EncodedMap {
        codec,
        n_images,
        channels,
        config,
        images,
    })
}

pub fn write_cpo_dump(path: impl AsRef<Path>, enc: &CpoEncoding) -> Result<()> {
    write_dump(path, &enc.inner, CPO_DUMP_MAGIC)
}

pub fn read_cpo_dump(path: impl AsRef<Path>) -> Result<CpoEncoding> {
    Ok(CpoEncoding {
        inner: read_dump(path, CPO_DUMP_MAGIC, Codec::Cpo)?,
    })
}

pub fn write_cps_dump(path: impl AsRef<Path>, enc: &CpsEncoding) -> Result<()> {
    write_dump(path, &enc.inner, CPS_DUMP_MAGIC)
}

pub fn read_cps_dump(path: impl AsRef<Path>) -> Result<CpsEncoding> {
    Ok(CpsEncoding {
        inner: read_dump(path, CPS_DUMP_MAGIC, Codec::Cps)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{gen_random_map, ValueDist};
    use crate::{cpo_encode, cps_encode};

    #[test]
    fn tensor_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.cpot");
        let map = gen_random_map(
            (2, 3, 5, 4),
            0.4,
            ValueDist::Uniform { lo: -1.0, hi: 1.0 },
            8,
        )
        .unwrap();
        write_tensor(&path, &map).unwrap();
        assert_eq!(read_tensor(&path).unwrap(), map);
        // Header is 4 + 4 + 16 bytes; payload 4 bytes per element.
        let len = std::fs::metadata(&path).unwrap().len();
        assert_eq!(len, 24 + (2 * 3 * 5 * 4) * 4);
    }

    #[test]
    fn tensor_rejects_bad_magic_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.cpot");
        let map =
            gen_random_map((1, 1, 2, 2), 0.5, ValueDist::SmallInt { lo: 1, hi: 3 }, 0).unwrap();
        write_tensor(&path, &map).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_tensor(&path), Err(Error::Format(_))));
        bytes[0] = b'C';
        bytes.truncate(bytes.len() - 2);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_tensor(&path), Err(Error::Format(_))));
    }

    #[test]
    fn dump_round_trips_both_codecs() {
        let dir = tempfile::tempdir().unwrap();
        let config = ConvConfig::same(9, 8, 3, 3).unwrap();
        let map =
            gen_random_map((2, 3, 9, 8), 0.3, ValueDist::SmallInt { lo: -4, hi: 4 }, 21).unwrap();

        let cpo = cpo_encode(&map, &config).unwrap();
        let path = dir.path().join("m.cpoe");
        write_cpo_dump(&path, &cpo).unwrap();
        assert_eq!(read_cpo_dump(&path).unwrap(), cpo);

        let cps = cps_encode(&map, &config).unwrap();
        let path = dir.path().join("m.cpse");
        write_cps_dump(&path, &cps).unwrap();
        assert_eq!(read_cps_dump(&path).unwrap(), cps);
    }

    #[test]
    fn dump_bytes_are_pinned_for_the_worked_example() {
        let dir = tempfile::tempdir().unwrap();
        let config = ConvConfig::valid(8, 8, 4, 4).unwrap();
        let map = crate::testutil::worked_example_map();
        let path = dir.path().join("m.cpoe");
        write_cpo_dump(&path, &cpo_encode(&map, &config).unwrap()).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        assert_eq!(&bytes[0..4], b"CPOE");
        let words: Vec<u32> = bytes[4..68]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        // version, (In, Ic, Ih, Iw), (Kh, Kw, Sh, Sw), four pads, then the
        // per-image stream lengths (ptr, in, da).
        assert_eq!(
            words,
            vec![1, 1, 1, 8, 8, 4, 4, 1, 1, 0, 0, 0, 0, 17, 10, 10]
        );

        let ptr: Vec<i32> = bytes[68..68 + 17 * 4]
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(
            ptr,
            vec![
                0,
                0,
                0,
                2,
                5,
                -1,
                -1,
                5,
                -1,
                3,
                crate::NPF,
                4,
                1,
                5,
                -1,
                -1,
                -1
            ]
        );
        // Index words follow, then the ten data values as f32.
        let in_start = 68 + 17 * 4;
        let indices: Vec<i32> = bytes[in_start..in_start + 10 * 4]
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(indices, vec![5, 9, 13, 17, 21, 23, 7, 11, 15, 23]);
        let da_start = in_start + 10 * 4;
        let da: Vec<f32> = bytes[da_start..da_start + 10 * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(
            da,
            vec![10.0, 20.0, 30.0, 40.0, 50.0, 52.0, 13.0, 23.0, 33.0, 53.0]
        );
        assert_eq!(bytes.len(), da_start + 10 * 4);
    }

    #[test]
    fn dump_magics_do_not_cross_load() {
        let dir = tempfile::tempdir().unwrap();
        let config = ConvConfig::valid(8, 8, 4, 4).unwrap();
        let map =
            gen_random_map((1, 1, 8, 8), 0.3, ValueDist::SmallInt { lo: -4, hi: 4 }, 3).unwrap();
        let path = dir.path().join("m.cpoe");
        write_cpo_dump(&path, &cpo_encode(&map, &config).unwrap()).unwrap();
        assert!(matches!(read_cps_dump(&path), Err(Error::Format(_))));
    }

    #[test]
    fn corrupted_dump_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let config = ConvConfig::valid(8, 8, 4, 4).unwrap();
        let map =
            gen_random_map((1, 2, 8, 8), 0.4, ValueDist::SmallInt { lo: -4, hi: 4 }, 4).unwrap();
        let path = dir.path().join("m.cpoe");
        write_cpo_dump(&path, &cpo_encode(&map, &config).unwrap()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        // Zero out one ptr word inside the stream area.
        let mut bad = bytes.clone();
        let ptr_area = 4 + 4 + 48 + 12;
        for b in &mut bad[ptr_area + 8..ptr_area + 12] {
            *b = 0xff;
        }
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(
            read_cpo_dump(&path),
            Err(Error::Corrupt(_)) | Err(Error::Format(_))
        ));
    }
}
