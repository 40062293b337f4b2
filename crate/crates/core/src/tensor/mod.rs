//! Order-3 tensor algebra: dense and coordinate storage, unfoldings,
//! Khatri-Rao/Kronecker/Hadamard products, mode products and MTTKRP.
//!
//! Indices are 0-based in the Rust API. File formats and diagnostics use
//! 1-based indices.

mod coo;
mod dense;
mod matrix;
mod ops;

pub use coo::CooObservations;
pub use dense::DenseTensor3;
pub use matrix::Matrix;
pub use ops::{
    frobenius_norm, hadamard, khatri_rao, kronecker, masked_reconstruction, mode_product, mttkrp_dense, mttkrp_sparse,
    unfold,
};

/// One of the three tensor modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    /// Mode from its 1-based number.
    pub fn from_number(n: usize) -> Option<Mode> {
        match n {
            1 => Some(Mode::One),
            2 => Some(Mode::Two),
            3 => Some(Mode::Three),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }

    pub fn number(self) -> usize {
        self.index() + 1
    }

    /// The two remaining modes in increasing order.
    pub fn others(self) -> (Mode, Mode) {
        match self {
            Mode::One => (Mode::Two, Mode::Three),
            Mode::Two => (Mode::One, Mode::Three),
            Mode::Three => (Mode::One, Mode::Two),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}
