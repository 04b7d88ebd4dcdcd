//! Weil representations of symplectic groups over finite local rings.

pub mod elliptic_torus;
pub mod heisenberg;
pub mod linop;
pub mod local_ring;
pub mod symp_module;
pub mod weil_field;
pub mod weil_ring;

pub use elliptic_torus::{TorusKind, TorusParams};
pub use heisenberg::HeisElem;
pub use linop::{BlockMonomial, CMat, C64};
pub use local_ring::{
    AdditiveChar, Phase, QuadElem, QuadKind, QuadRingParams, RingElem, RingError, RingParams,
    TAU_EQ,
};
pub use symp_module::{
    FiniteGroup, Flavor, GroupElem, Lattice, SympError, SympModule, SympModuleParams,
};
