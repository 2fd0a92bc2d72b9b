// SPDX-License-Identifier: Apache-2.0
//! Real identities, pseudonyms and the TA's pseudonym cipher.
//!
//! `PID = nonce ‖ AES-256-GCM_k0(len(ID) ‖ ID ‖ x)` where the 12-byte nonce is
//! derived from `(k0, ID, j)`, so only the TA can map a pseudonym back to its owner.

use alloc::vec::Vec;
use core::fmt;

use aes_gcm::aead::{Aead, KeyInit};
use aes_gcm::{Aes256Gcm, Key, Nonce};
use num_bigint::BigUint;
use rand_core::RngCore;
use sha2::{Digest, Sha256};

use super::ProtocolError;
use crate::bigint::{byte_len, to_fixed_be};
use crate::pairing::{GroupParams, SigKeypair};

const NONCE_TAG: &[u8] = b"TPCS-PID-NONCE";
const NONCE_LEN: usize = 12;

/// Real identity `ID_i`, known only to its owner and the TA.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RealId(pub Vec<u8>);

impl RealId {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for RealId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            if b.is_ascii_graphic() {
                write!(f, "{}", *b as char)?;
            } else {
                write!(f, "\\x{b:02x}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for RealId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RealId({self})")
    }
}

/// Pseudonym `PID_ij` as seen on the wire.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pid(pub Vec<u8>);

impl Pid {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for Pid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Pid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pid({self})")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pseudonym {
    pub pid: Pid,
    pub keys: SigKeypair,
}

/// A registered entity with its `N` pseudonyms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Identity {
    pub real_id: RealId,
    pub pseudonyms: Vec<Pseudonym>,
}

/// The TA's symmetric key `k0` and the cipher built on it.
#[derive(Clone)]
pub struct PidCipher {
    key: [u8; 32],
    scalar_len: usize,
}

impl fmt::Debug for PidCipher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PidCipher(..)")
    }
}

impl PidCipher {
    pub fn generate<R: RngCore + ?Sized>(params: &GroupParams, rng: &mut R) -> Self {
        let mut key = [0u8; 32];
        rng.fill_bytes(&mut key);
        Self::from_key(params, key)
    }

    pub fn from_key(params: &GroupParams, key: [u8; 32]) -> Self {
        Self {
            key,
            scalar_len: byte_len(params.order()),
        }
    }

    fn cipher(&self) -> Aes256Gcm {
        Aes256Gcm::new(Key::<Aes256Gcm>::from_slice(&self.key))
    }

    fn nonce(&self, real_id: &RealId, index: u32) -> [u8; NONCE_LEN] {
        let mut h = Sha256::new();
        h.update(NONCE_TAG);
        h.update(self.key);
        h.update((real_id.0.len() as u32).to_be_bytes());
        h.update(&real_id.0);
        h.update(index.to_be_bytes());
        let digest = h.finalize();
        let mut nonce = [0u8; NONCE_LEN];
        nonce.copy_from_slice(&digest[..NONCE_LEN]);
        nonce
    }

    /// `nonce ‖ AES-GCM(len(ID) ‖ ID ‖ x)` with the nonce bound to `(ID, index)`.
    pub fn seal(&self, real_id: &RealId, index: u32, secret: &BigUint) -> Result<Pid, ProtocolError> {
        let id_len = u16::try_from(real_id.0.len()).map_err(|_| ProtocolError::InvalidConfig("identity too long"))?;
        let mut plain = Vec::with_capacity(2 + real_id.0.len() + self.scalar_len);
        plain.extend_from_slice(&id_len.to_be_bytes());
        plain.extend_from_slice(&real_id.0);
        plain.extend_from_slice(&to_fixed_be(secret, self.scalar_len));
        let nonce = self.nonce(real_id, index);
        let ct = self
            .cipher()
            .encrypt(Nonce::from_slice(&nonce), plain.as_slice())
            .map_err(|_| ProtocolError::Cipher)?;
        let mut pid = Vec::with_capacity(NONCE_LEN + ct.len());
        pid.extend_from_slice(&nonce);
        pid.extend_from_slice(&ct);
        Ok(Pid(pid))
    }

    /// Recovers `(ID, x)`; any tampering or foreign key yields `UnknownIdentity`.
    pub fn open(&self, pid: &Pid) -> Result<(RealId, BigUint), ProtocolError> {
        if pid.0.len() < NONCE_LEN {
            return Err(ProtocolError::UnknownIdentity);
        }
        let (nonce, ct) = pid.0.split_at(NONCE_LEN);
        let plain = self
            .cipher()
            .decrypt(Nonce::from_slice(nonce), ct)
            .map_err(|_| ProtocolError::UnknownIdentity)?;
        if plain.len() < 2 {
            return Err(ProtocolError::UnknownIdentity);
        }
        let id_len = u16::from_be_bytes([plain[0], plain[1]]) as usize;
        if plain.len() != 2 + id_len + self.scalar_len {
            return Err(ProtocolError::UnknownIdentity);
        }
        let id = RealId(plain[2..2 + id_len].to_vec());
        let secret = BigUint::from_bytes_be(&plain[2 + id_len..]);
        Ok((id, secret))
    }

    /// Creates `n` pseudonyms with fresh signing keys.
    pub fn register<R: RngCore + ?Sized>(
        &self,
        params: &GroupParams,
        real_id: RealId,
        n: u32,
        rng: &mut R,
    ) -> Result<Identity, ProtocolError> {
        let pseudonyms = (0..n)
            .map(|j| {
                let keys = SigKeypair::generate(params, rng);
                let pid = self.seal(&real_id, j, keys.secret())?;
                Ok(Pseudonym { pid, keys })
            })
            .collect::<Result<Vec<_>, ProtocolError>>()?;
        Ok(Identity { real_id, pseudonyms })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::gen_params;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    #[test]
    fn pid_roundtrip_and_distinctness() {
        let params = gen_params(32).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let cipher = PidCipher::generate(&params, &mut rng);
        let id = cipher
            .register(&params, RealId(b"P0001".to_vec()), 5, &mut rng)
            .unwrap();
        for (j, p) in id.pseudonyms.iter().enumerate() {
            let (rid, x) = cipher.open(&p.pid).unwrap();
            assert_eq!(rid, id.real_id);
            assert_eq!(&x, p.keys.secret());
            for q in &id.pseudonyms[j + 1..] {
                assert_ne!(p.pid, q.pid);
            }
        }
    }

    #[test]
    fn foreign_or_tampered_pid_is_unknown() {
        let params = gen_params(32).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let a = PidCipher::generate(&params, &mut rng);
        let b = PidCipher::generate(&params, &mut rng);
        let pid = a.seal(&RealId(b"C0003".to_vec()), 0, &BigUint::from(9u32)).unwrap();
        assert!(matches!(b.open(&pid), Err(ProtocolError::UnknownIdentity)));
        let mut bent = pid.clone();
        *bent.0.last_mut().unwrap() ^= 1;
        assert!(matches!(a.open(&bent), Err(ProtocolError::UnknownIdentity)));
        assert!(matches!(
            a.open(&Pid(alloc::vec![1, 2, 3])),
            Err(ProtocolError::UnknownIdentity)
        ));
    }

    #[test]
    fn sealing_is_deterministic_per_index() {
        let params = gen_params(32).unwrap();
        let cipher = PidCipher::from_key(&params, [7u8; 32]);
        let id = RealId(b"P0002".to_vec());
        let x = BigUint::from(5u32);
        assert_eq!(cipher.seal(&id, 1, &x).unwrap(), cipher.seal(&id, 1, &x).unwrap());
        assert_ne!(cipher.seal(&id, 1, &x).unwrap(), cipher.seal(&id, 2, &x).unwrap());
    }
}
