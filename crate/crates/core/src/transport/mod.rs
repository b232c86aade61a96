//! Quadratic optimal transport on the circle with cost ½d(ζ,η)², where d is
//! the angular distance, together with Kantorovich duality and the free
//! transportation cost inequality.

mod dual;
mod lp;
mod tci;
mod w2;

pub use dual::{
    dual_pair_check, dual_pair_violation, inf_convolution_grid, QuadraticInfConvolution,
};
pub use lp::{kantorovich_dual, KantorovichDual};
pub use tci::{tci_check, tci_check_with, TciVerdict, TCI_TOLERANCE};
pub use w2::{circular_w2, circular_w2_density, TransportPlan};
