// SPDX-License-Identifier: Apache-2.0
//! Length-prefixed canonical encoding shared by all report types.

use alloc::vec::Vec;

use super::ProtocolError;

/// Appends fields as `u32 BE length ‖ bytes`.
#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(label: &[u8]) -> Self {
        let mut w = Self::default();
        w.bytes(label);
        w
    }

    pub fn bytes(&mut self, field: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(&(field.len() as u32).to_be_bytes());
        self.buf.extend_from_slice(field);
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.bytes(&v.to_be_bytes())
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.bytes(&v.to_bits().to_be_bytes())
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    rest: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8], label: &[u8]) -> Result<Self, ProtocolError> {
        let mut r = Self { rest: bytes };
        if r.bytes()? != label {
            return Err(ProtocolError::Decode("unexpected message label"));
        }
        Ok(r)
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], ProtocolError> {
        if self.rest.len() < 4 {
            return Err(ProtocolError::Decode("truncated length prefix"));
        }
        let (len, tail) = self.rest.split_at(4);
        let len = u32::from_be_bytes([len[0], len[1], len[2], len[3]]) as usize;
        if tail.len() < len {
            return Err(ProtocolError::Decode("truncated field"));
        }
        let (field, rest) = tail.split_at(len);
        self.rest = rest;
        Ok(field)
    }

    pub fn u64(&mut self) -> Result<u64, ProtocolError> {
        let b: [u8; 8] = self
            .bytes()?
            .try_into()
            .map_err(|_| ProtocolError::Decode("bad u64 width"))?;
        Ok(u64::from_be_bytes(b))
    }

    pub fn f64(&mut self) -> Result<f64, ProtocolError> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub fn finish(self) -> Result<(), ProtocolError> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            Err(ProtocolError::Decode("trailing bytes"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_truncation() {
        let mut w = Writer::new(b"T");
        w.bytes(b"abc").u64(7).f64(0.75);
        let bytes = w.finish();
        let mut r = Reader::new(&bytes, b"T").unwrap();
        assert_eq!(r.bytes().unwrap(), b"abc");
        assert_eq!(r.u64().unwrap(), 7);
        assert_eq!(r.f64().unwrap(), 0.75);
        r.finish().unwrap();
        assert!(Reader::new(&bytes, b"U").is_err());
        let mut r = Reader::new(&bytes[..bytes.len() - 1], b"T").unwrap();
        r.bytes().unwrap();
        r.u64().unwrap();
        assert!(r.f64().is_err());
    }
}
