//! Payload framing and MSB-first bit streams.

use super::StegError;

/// Prefixes `payload` with its length as a 4-byte big-endian integer.
pub fn frame_payload(payload: &[u8]) -> Result<Vec<u8>, StegError> {
    let len = u32::try_from(payload.len())
        .map_err(|_| StegError::PayloadTooLarge { len: payload.len() })?;
    let mut out = Vec::with_capacity(payload.len() + 4);
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

/// Reads a byte sequence as a bit string, most significant bit of each byte
/// first.
#[derive(Debug, Clone)]
pub struct BitCursor<'a> {
    payload: &'a [u8],
    bit_pos: usize,
    total_bits: usize,
}

impl<'a> BitCursor<'a> {
    pub fn new(payload: &'a [u8]) -> Self {
        BitCursor {
            payload,
            bit_pos: 0,
            total_bits: payload.len() * 8,
        }
    }

    pub fn bit_pos(&self) -> usize {
        self.bit_pos
    }

    pub fn total_bits(&self) -> usize {
        self.total_bits
    }

    pub fn remaining(&self) -> usize {
        self.total_bits - self.bit_pos
    }

    pub fn is_exhausted(&self) -> bool {
        self.bit_pos == self.total_bits
    }

    fn bit(&self, i: usize) -> u64 {
        u64::from(self.payload[i / 8] >> (7 - i % 8) & 1)
    }

    /// Takes the next `n` bits as an `n`-bit number, first bit most
    /// significant. Missing bits past the end read as 0. Returns the group and
    /// how many real bits it consumed.
    pub fn take(&mut self, n: u32) -> (u64, usize) {
        assert!((1..=64).contains(&n), "group width out of range");
        let real = (n as usize).min(self.remaining());
        let mut value = 0u64;
        for k in 0..n as usize {
            let b = if k < real {
                self.bit(self.bit_pos + k)
            } else {
                0
            };
            value = value << 1 | b;
        }
        self.bit_pos += real;
        (value, real)
    }
}

/// Collects bits MSB-first into bytes.
#[derive(Debug, Clone, Default)]
pub struct BitSink {
    bytes: Vec<u8>,
    bits: usize,
}

impl BitSink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len_bits(&self) -> usize {
        self.bits
    }

    /// Appends the low `n` bits of `value`, most significant first.
    pub fn push(&mut self, value: u64, n: u32) {
        for k in (0..n).rev() {
            let b = (value >> k & 1) as u8;
            if self.bits.is_multiple_of(8) {
                self.bytes.push(0);
            }
            let last = self.bytes.last_mut().expect("byte allocated");
            *last |= b << (7 - self.bits % 8);
            self.bits += 1;
        }
    }

    /// Collected bytes in `range`. A trailing partial byte is zero-filled.
    pub fn bytes(&self, range: std::ops::Range<usize>) -> &[u8] {
        &self.bytes[range]
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn framing() {
        assert_eq!(frame_payload(b"").unwrap(), [0, 0, 0, 0]);
        assert_eq!(frame_payload(&[0xFF]).unwrap(), [0, 0, 0, 1, 0xFF]);
        let big = vec![0u8; 335_872];
        assert_eq!(frame_payload(&big).unwrap()[..4], [0x00, 0x05, 0x20, 0x00]);
    }

    #[test]
    fn msb_first_groups() {
        let data = [0b1011_0010u8];
        let mut c = BitCursor::new(&data);
        assert_eq!(c.take(1), (1, 1));
        assert_eq!(c.take(3), (0b011, 3));
        assert_eq!(c.take(3), (0b001, 3));
        // One real bit (0) followed by two padding zeros.
        assert_eq!(c.take(3), (0b000, 1));
        assert!(c.is_exhausted());
        assert_eq!(c.take(2), (0, 0));
    }

    #[test]
    fn final_group_is_zero_padded() {
        let data = [0xFFu8];
        let mut c = BitCursor::new(&data);
        assert_eq!(c.take(3), (0b111, 3));
        assert_eq!(c.take(3), (0b111, 3));
        assert_eq!(c.take(3), (0b110, 2));
    }

    proptest! {
        #[test]
        fn cursor_and_sink_are_inverse(data in proptest::collection::vec(any::<u8>(), 0..64), n in 1u32..=16) {
            let mut cursor = BitCursor::new(&data);
            let mut sink = BitSink::new();
            while !cursor.is_exhausted() {
                prop_assert!(cursor.bit_pos() <= cursor.total_bits());
                let (v, _) = cursor.take(n);
                sink.push(v, n);
            }
            prop_assert!(sink.len_bits() >= data.len() * 8);
            prop_assert_eq!(sink.bytes(0..data.len()), &data[..]);
        }
    }
}
