//! UNI witnesses and the constants ledger.

mod ledger;
mod scan;

pub use ledger::{
    admissible_witness, build_ledger, eta0, large1_bound, n0_admissible, Admissibility, AdmissibleWitness,
    ConstantsLedger,
};
pub use scan::{evaluate_pair, extend_witness, psi, pushforward, uni_scan, UniScan, UniWitness, UNI_FLOOR, UNI_GRID};
