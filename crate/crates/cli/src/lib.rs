//! File formats, experiment configuration, and the command-line front end
//! for the dialogic-instruction training framework.
//!
//! Everything on disk is JSON or JSON-lines and fully reproducible: rerunning
//! a command with the same configuration and seeds produces byte-identical
//! datasets, logs, and checkpoints. The only timestamp lives in the synthesis
//! manifest.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod logfile;
pub mod report;

/// FNV-1a 64-bit hash, used for config and checkpoint fingerprints.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Hex fingerprint of a byte blob.
pub fn fingerprint(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a64(bytes))
}
