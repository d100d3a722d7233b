//! Compact RLE strings as used by COCO and MOTS annotation files.
//!
//! Each count is written in 5-bit groups offset by 48, with bit 0x20 flagging
//! continuation. From the fourth count on, the value stored is the difference
//! to the count two places earlier.

use crate::error::{Error, Result};
use crate::mask::BinaryMask;

pub fn rle_to_string(mask: &BinaryMask) -> String {
    let counts = mask.runs();
    let mut s = String::new();
    for (i, &c) in counts.iter().enumerate() {
        let x = if i > 2 { c as i64 - counts[i - 2] as i64 } else { c as i64 };
        encode(&mut s, x);
    }
    s
}

fn encode(s: &mut String, mut x: i64) {
    loop {
        let mut c = (x & 0x1f) as u8;
        x >>= 5;
        let more = if c & 0x10 != 0 { x != -1 } else { x != 0 };
        if more {
            c |= 0x20;
        }
        s.push((c + 48) as char);
        if !more {
            break;
        }
    }
}

pub fn rle_from_string(s: &str, width: u32, height: u32) -> Result<BinaryMask> {
    let bytes = s.as_bytes();
    let mut counts: Vec<u32> = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let mut x: i64 = 0;
        let mut shift = 0;
        loop {
            let Some(&b) = bytes.get(i) else {
                return Err(Error::InvalidRle(format!("truncated count at byte {i}")));
            };
            if !(48..48 + 64).contains(&b) {
                return Err(Error::InvalidRle(format!(
                    "invalid character {:?} at byte {i}",
                    b as char
                )));
            }
            if shift > 55 {
                return Err(Error::InvalidRle(format!("count too long at byte {i}")));
            }
            let c = (b - 48) as i64;
            i += 1;
            x |= (c & 0x1f) << shift;
            shift += 5;
            if c & 0x20 == 0 {
                if c & 0x10 != 0 {
                    x |= -1i64 << shift;
                }
                break;
            }
        }
        if counts.len() > 2 {
            x += counts[counts.len() - 2] as i64;
        }
        let count =
            u32::try_from(x).map_err(|_| Error::InvalidRle(format!("count {x} out of range")))?;
        counts.push(count);
    }
    BinaryMask::from_runs(width, height, &counts)
}
