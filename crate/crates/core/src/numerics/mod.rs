//! Numeric kernel: exact circle angles, scalar types, cubic roots and Newton solvers.

mod angle;
mod newton;
mod qd;
mod real;
mod roots;

pub use angle::{Arc, CircleAngle};
pub use newton::{
    fd_jacobian, newton_1c, newton_2c, newton_2c_with_jacobian, solve_2x2, Jacobian, Pair,
    FD_STEP, MAX_CONDITION,
};
pub use qd::Qd;
pub use real::{cabs, cfinite, csqrt, from_c64, to_c64, Real};
pub use roots::cubic_roots;

pub type C64 = num_complex::Complex64;
