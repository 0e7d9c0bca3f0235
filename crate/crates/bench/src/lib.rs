//! Fixtures shared by the benchmarks.

use mtoda_core::continuous::{BoundaryProvider, LatticeWindow};
use mtoda_core::discrete::{ab_field_from_tau, ABField};
use mtoda_core::exact::{from_usize, int};
use mtoda_core::{LatticeBox, MatrixQ, MomentSpec};

/// Multiple Laguerre weights `exp(-x)`, `exp(-2x)`.
pub fn laguerre() -> MomentSpec {
    MomentSpec::laguerre(0, vec![int(1), int(2)]).expect("valid parameters")
}

/// The `size × size` Hankel matrix of the moments `k!` (Laguerre, one measure).
pub fn factorial_hankel(size: usize) -> MatrixQ {
    let mut fact = vec![int(1)];
    for k in 1..2 * size {
        let next = &fact[k - 1] * from_usize(k);
        fact.push(next);
    }
    MatrixQ::from_fn(size, size, |i, j| fact[i + j].clone())
}

/// Float window on a `side × side` box at `t = 0` with its closed-form halo.
pub fn rk4_start(side: usize) -> (LatticeWindow<f64>, BoundaryProvider) {
    let table = laguerre().table_at(&int(0), 4 * side + 4).expect("table");
    let window = LatticeWindow::from_table(&table, LatticeBox::cube(2, side)).expect("normal box");
    let halo = BoundaryProvider::LaguerreClosedForm {
        delta: 0,
        kappa: vec![int(1), int(2)],
    };
    (window.map(mtoda_core::exact::to_f64), halo)
}

/// Tau-generated discrete field on a `side × side` box at time 0.
pub fn discrete_field(side: usize) -> ABField {
    ab_field_from_tau(&laguerre(), &LatticeBox::cube(2, side), 0, &int(0)).expect("normal box")
}
