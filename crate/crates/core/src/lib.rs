//! Security analysis of BB84 against collective attacks: attack probes,
//! Eve's lifted states for parity-bit keys, trace-norm and statistical
//! bounds, and a seeded protocol simulator.

pub mod attack;
pub mod cli;
pub mod gf2;
pub mod infotheory;
pub mod linalg;
pub mod protocol;
pub mod random;
pub mod scenario;
pub mod security;
