//! Published coefficients of the first four chain members.

use cubic_dendrite::config::Configuration;
use cubic_dendrite::numerics::C64;

pub struct Fig5Entry {
    pub c1: C64,
    pub c2: C64,
    pub config: Configuration,
}

pub const SEED_INDEX: usize = 0;

/// Relative tolerance for comparing computed members with the printed coefficients.
pub const RELATIVE_TOL: f64 = 1e-6;
/// Absolute tolerance for the seed, whose coefficients follow from a closed form.
pub const SEED_TOL: f64 = 1e-9;

pub const FIG5: [Fig5Entry; 4] = [
    Fig5Entry {
        c1: C64::new(8.7534421003338, 0.0),
        c2: C64::new(5.9172433109798, 0.0),
        config: Configuration { j: 0, k: 2, l: 1 },
    },
    Fig5Entry {
        c1: C64::new(8.6656058283165, 0.059672002492800),
        c2: C64::new(5.8731379216063, 0.020430827270432),
        config: Configuration { j: 2, k: 2, l: 3 },
    },
    Fig5Entry {
        c1: C64::new(8.6620018002588, 0.049185458993292),
        c2: C64::new(5.871351730126, 0.017466126249776),
        config: Configuration { j: 4, k: 5, l: 5 },
    },
    Fig5Entry {
        c1: C64::new(8.6620495410606, 0.049156312358058),
        c2: C64::new(5.871375113635, 0.017446586001088),
        config: Configuration { j: 9, k: 8, l: 10 },
    },
];
