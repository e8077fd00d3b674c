//! Exact non-commutative polynomials over self-adjoint generators, with the
//! tensor squares and cubes used as codomains of the free difference quotients.

mod parse;
mod poly;
mod tensor;
mod word;

pub use parse::{parse_poly, parse_tensor2, parse_tensor2_sum, parse_tensor3, ParseError};
pub use poly::NcPoly;
pub use tensor::{bimodule_act, sharp2, sharp23, TensorPoly, TensorPoly2, TensorPoly3};
pub use word::Word;
