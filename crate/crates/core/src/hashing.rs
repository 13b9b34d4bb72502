use sha2::{Digest, Sha256};

/// Stable 64-bit hash over length-prefixed parts. Same value on every
/// platform and run.
pub(crate) fn stable_hash(parts: &[&[u8]]) -> u64 {
    let digest = digest_parts(parts);
    u64::from_le_bytes(digest[..8].try_into().expect("32-byte digest"))
}

pub(crate) fn digest_parts(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}
