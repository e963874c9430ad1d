//! Grayscale Portable Float Map (`Pf`) reader and writer.
//!
//! Scanlines are stored bottom to top as in the reference format. A negative
//! scale marks little-endian samples, a positive one big-endian. Invalid
//! disparities are stored as `NaN` and read back as invalid.

use std::path::Path;

use crate::error::{Error, Result};
use crate::lightfield::DisparityMap;

/// Reads the next whitespace-delimited header token, returning it and the
/// offset just past the single delimiter that ends it.
fn header_token(bytes: &[u8], mut pos: usize) -> Result<(&str, usize)> {
    while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
        pos += 1;
    }
    let start = pos;
    while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
        pos += 1;
    }
    if start == pos || pos >= bytes.len() {
        return Err(Error::BadHeader("unexpected end of header".into()));
    }
    let token = std::str::from_utf8(&bytes[start..pos])
        .map_err(|_| Error::BadHeader("header is not ASCII".into()))?;
    Ok((token, pos + 1))
}

pub fn decode_pfm(bytes: &[u8]) -> Result<DisparityMap> {
    let (magic, pos) = header_token(bytes, 0)?;
    if magic != "Pf" {
        return Err(Error::BadHeader(format!(
            "expected grayscale \"Pf\", found {magic:?}"
        )));
    }
    let (w, pos) = header_token(bytes, pos)?;
    let (h, pos) = header_token(bytes, pos)?;
    let (scale, pos) = header_token(bytes, pos)?;
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .ok()
            .filter(|v| *v > 0)
            .ok_or_else(|| Error::BadHeader(format!("bad dimension {s:?}")))
    };
    let (width, height) = (parse_dim(w)?, parse_dim(h)?);
    let scale: f64 = scale
        .parse()
        .ok()
        .filter(|s: &f64| s.is_finite() && *s != 0.0)
        .ok_or_else(|| Error::BadHeader(format!("bad scale {scale:?}")))?;
    let little_endian = scale < 0.0;

    let expected = width * height * 4;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    let mut values = vec![0.0f32; width * height];
    for (i, chunk) in payload[..expected].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (row_from_bottom, x) = (i / width, i % width);
        values[(height - 1 - row_from_bottom) * width + x] = v;
    }
    DisparityMap::from_values(width, height, values)
}

/// Encodes as little-endian (`scale = -1`).
pub fn encode_pfm(map: &DisparityMap) -> Vec<u8> {
    let (width, height) = (map.width(), map.height());
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    out.reserve(width * height * 4);
    for y in (0..height).rev() {
        for x in 0..width {
            let v = map.get(x, y).unwrap_or(f32::NAN);
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_pfm(path: &Path) -> Result<DisparityMap> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes)
}

pub fn write_pfm(map: &DisparityMap, path: &Path) -> Result<()> {
    std::fs::write(path, encode_pfm(map)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_map_round_trip() {
        let map = DisparityMap::from_values(2, 2, vec![0.5, -1.42, 0.0, 3.0]).unwrap();
        let back = decode_pfm(&encode_pfm(&map)).unwrap();
        assert_eq!(back, map);
    }

    #[test]
    fn rows_are_stored_bottom_up() {
        let map = DisparityMap::from_values(1, 2, vec![1.0, 2.0]).unwrap();
        let bytes = encode_pfm(&map);
        let header = b"Pf\n1 2\n-1.0\n".len();
        assert_eq!(&bytes[header..header + 4], &2.0f32.to_le_bytes());
    }

    #[test]
    fn color_header_rejected() {
        let bytes = b"PF\n1 1\n-1.0\n\0\0\0\0\0\0\0\0\0\0\0\0";
        assert!(matches!(decode_pfm(bytes), Err(Error::BadHeader(_))));
    }

    #[test]
    fn truncated_payload_rejected() {
        let bytes = b"Pf\n2 2\n-1.0\n\0\0\0\0";
        assert!(matches!(
            decode_pfm(bytes),
            Err(Error::TruncatedPayload {
                expected: 16,
                found: 4
            })
        ));
    }

    #[test]
    fn invalid_pixels_survive_as_nan() {
        let mut map = DisparityMap::constant(3, 1, 1.0);
        map.set(1, 0, None);
        let back = decode_pfm(&encode_pfm(&map)).unwrap();
        assert_eq!(back.get(1, 0), None);
        assert_eq!(back.get(2, 0), Some(1.0));
    }

    /// Byte-swapping oracle: rewrite a little-endian file as big-endian by
    /// reversing each sample and flipping the scale sign.
    fn to_big_endian(le: &[u8]) -> Vec<u8> {
        let header_len = le
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == b'\n')
            .nth(2)
            .map(|(i, _)| i + 1)
            .unwrap();
        let header = std::str::from_utf8(&le[..header_len]).unwrap().replace("-1.0", "1.0");
        let mut out = header.into_bytes();
        for chunk in le[header_len..].chunks_exact(4) {
            out.extend(chunk.iter().rev());
        }
        out
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            (w, h, values) in (1usize..8, 1usize..8).prop_flat_map(|(w, h)| {
                (Just(w), Just(h), proptest::collection::vec(-1e6f32..1e6f32, w * h))
            })
        ) {
            let map = DisparityMap::from_values(w, h, values).unwrap();
            let le = encode_pfm(&map);
            let back = decode_pfm(&le).unwrap();
            for (a, b) in back.values().iter().zip(map.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            let be = decode_pfm(&to_big_endian(&le)).unwrap();
            prop_assert_eq!(be, map);
        }
    }
}
