//! Pseudo-Hermitian Hamiltonians in finite dimensions: Jordan/biorthonormal
//! structure, generalized parity, charge-conjugation and time-reversal
//! operators, Krein-space classification and P-unitary time evolution.

pub mod evolution;
pub mod krein;
pub mod linalg;
pub mod operators;
pub mod random;
pub mod spectral;
