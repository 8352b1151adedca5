//! Raw block storage: `time_s,displacement` CSV and a little-endian binary
//! frame format.
//!
//! Binary frame (all little-endian), repeated once per block:
//!
//! | bytes | content                     |
//! |-------|-----------------------------|
//! | 4     | magic `RNGD`                |
//! | 4     | u32 format version (1)      |
//! | 8     | f64 sample rate, Hz         |
//! | 8     | f64 time of first sample, s |
//! | 8     | u64 sample count n          |
//! | 8 n   | f64 samples                 |

use std::io::{BufRead, Read, Write};

use super::synth::Block;
use crate::error::{Error, Result};
use crate::format;

pub const FRAME_MAGIC: &[u8; 4] = b"RNGD";
pub const FRAME_VERSION: u32 = 1;

pub fn write_blocks_csv<W: Write>(mut out: W, blocks: &[Block]) -> std::io::Result<()> {
    writeln!(out, "time_s,displacement")?;
    for b in blocks {
        for (j, x) in b.samples.iter().enumerate() {
            writeln!(out, "{},{}", format::num(b.time(j)), format::num(*x))?;
        }
    }
    Ok(())
}

/// Read samples from CSV and split them into blocks wherever the time step
/// jumps by more than half a sample period.
pub fn read_blocks_csv<R: BufRead>(input: R) -> Result<Vec<Block>> {
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Data(format!("line {}: expected two columns", n + 1)));
        };
        match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            (Ok(t), Ok(x)) => points.push((t, x)),
            _ if points.is_empty() && a.trim() == "time_s" => continue,
            _ => return Err(Error::Data(format!("line {}: cannot parse `{line}`", n + 1))),
        }
    }
    if points.len() < 2 {
        return Err(Error::Data("ring-down CSV holds fewer than two samples".into()));
    }
    let mut steps: Vec<f64> = points.windows(2).map(|w| w[1].0 - w[0].0).collect();
    if steps.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Data("sample times must increase strictly".into()));
    }
    let mid = steps.len() / 2;
    let dt = *steps.select_nth_unstable_by(mid, f64::total_cmp).1;
    let sample_rate = 1.0 / dt;
    let mut blocks = Vec::new();
    let mut current = Block {
        t0: points[0].0,
        sample_rate,
        samples: vec![points[0].1],
    };
    for w in points.windows(2) {
        let step = w[1].0 - w[0].0;
        if (step - dt).abs() > 0.5 * dt {
            blocks.push(std::mem::replace(
                &mut current,
                Block {
                    t0: w[1].0,
                    sample_rate,
                    samples: Vec::new(),
                },
            ));
        }
        current.samples.push(w[1].1);
    }
    blocks.push(current);
    Ok(blocks)
}

pub fn write_blocks_binary<W: Write>(mut out: W, blocks: &[Block]) -> std::io::Result<()> {
    for b in blocks {
        out.write_all(FRAME_MAGIC)?;
        out.write_all(&FRAME_VERSION.to_le_bytes())?;
        out.write_all(&b.sample_rate.to_le_bytes())?;
        out.write_all(&b.t0.to_le_bytes())?;
        out.write_all(&(b.samples.len() as u64).to_le_bytes())?;
        for x in &b.samples {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact_or_eof<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..])? {
            0 if filled == 0 => return Ok(false),
            0 => return Err(Error::Data("truncated ring-down frame".into())),
            k => filled += k,
        }
    }
    Ok(true)
}

pub fn read_blocks_binary<R: Read>(mut input: R) -> Result<Vec<Block>> {
    let mut blocks = Vec::new();
    let mut head = [0u8; 32];
    while read_exact_or_eof(&mut input, &mut head)? {
        if &head[0..4] != FRAME_MAGIC {
            return Err(Error::Data("bad ring-down frame magic".into()));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        if version != FRAME_VERSION {
            return Err(Error::Data(format!("unsupported ring-down frame version {version}")));
        }
        let sample_rate = f64::from_le_bytes(head[8..16].try_into().unwrap());
        let t0 = f64::from_le_bytes(head[16..24].try_into().unwrap());
        let n = u64::from_le_bytes(head[24..32].try_into().unwrap());
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::Data(format!("invalid sample rate {sample_rate}")));
        }
        let n = usize::try_from(n).map_err(|_| Error::Data("frame too large".into()))?;
        let mut raw = vec![0u8; n.checked_mul(8).ok_or_else(|| Error::Data("frame too large".into()))?];
        if n > 0 && !read_exact_or_eof(&mut input, &mut raw)? {
            return Err(Error::Data("truncated ring-down frame".into()));
        }
        let samples = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        blocks.push(Block {
            t0,
            sample_rate,
            samples,
        });
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks() -> Vec<Block> {
        (0..3)
            .map(|k| Block {
                t0: k as f64 * 3600.0,
                sample_rate: 20.0,
                samples: (0..50).map(|j| (j as f64 * 0.37 + k as f64).sin() * 1e-3).collect(),
            })
            .collect()
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let b = blocks();
        let mut buf = Vec::new();
        write_blocks_binary(&mut buf, &b).unwrap();
        assert_eq!(&buf[0..4], b"RNGD");
        assert_eq!(buf.len(), 3 * (32 + 50 * 8));
        assert_eq!(read_blocks_binary(&buf[..]).unwrap(), b);
    }

    #[test]
    fn binary_rejects_garbage() {
        let b = blocks();
        let mut buf = Vec::new();
        write_blocks_binary(&mut buf, &b).unwrap();
        assert!(read_blocks_binary(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_blocks_binary(&bad[..]).is_err());
        let mut bad = buf;
        bad[4] = 9;
        assert!(read_blocks_binary(&bad[..]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let b = blocks();
        let mut buf = Vec::new();
        write_blocks_csv(&mut buf, &b).unwrap();
        let back = read_blocks_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 3);
        for (x, y) in back.iter().zip(&b) {
            assert_eq!(x.samples, y.samples);
            assert_eq!(x.t0, y.t0);
            assert!((x.sample_rate - 20.0).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_errors() {
        assert!(read_blocks_csv("time_s,displacement\n0,1\n".as_bytes()).is_err());
        assert!(read_blocks_csv("0,1\n1,2,3\n".as_bytes()).is_err());
        assert!(read_blocks_csv("0,1\n0,2\n".as_bytes()).is_err());
        assert!(read_blocks_csv("0,1\nx,2\n".as_bytes()).is_err());
    }
}
