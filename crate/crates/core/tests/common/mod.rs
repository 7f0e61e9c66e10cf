//! Strategies shared by the property suites.
#![allow(dead_code)]

use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;
use qsr::conditioning::GaussianState;
use qsr::hilbert::{suggested_dim, StateKind};
use qsr::probe::ProbeParams;

/// A test state and a Fock cutoff large enough for it.
pub fn state_spec() -> impl Strategy<Value = (StateKind, usize)> {
    prop_oneof![
        (0usize..6).prop_map(|n| (StateKind::Fock { n }, 12)),
        (0.0..1.5f64, 0.0..TAU).prop_map(|(r, phi)| (
            StateKind::Coherent {
                alpha: Complex64::from_polar(r, phi)
            },
            suggested_dim(r)
        )),
        (0.3..1.8f64, 0.0..TAU).prop_map(|(r, phi)| (
            StateKind::Cat {
                beta: Complex64::from_polar(r, phi)
            },
            suggested_dim(r)
        )),
        (0.0..1.0f64).prop_map(|nbar| (StateKind::Thermal { nbar }, 60)),
        (0.0..0.6f64).prop_map(|r| (StateKind::SqueezedVacuum { r }, 60)),
    ]
}

/// States whose Fock coefficients are real.
pub fn real_state_spec() -> impl Strategy<Value = (StateKind, usize)> {
    prop_oneof![
        (0usize..6).prop_map(|n| (StateKind::Fock { n }, 12)),
        (-1.5..1.5f64).prop_map(|a| (
            StateKind::Coherent {
                alpha: Complex64::new(a, 0.0)
            },
            suggested_dim(a.abs())
        )),
        (-1.8..1.8f64).prop_map(|b| (
            StateKind::Cat {
                beta: Complex64::new(b, 0.0)
            },
            suggested_dim(b.abs())
        )),
        (0.0..1.0f64).prop_map(|nbar| (StateKind::Thermal { nbar }, 60)),
    ]
}

/// Physical Gaussian states: a squeezed, rotated, displaced thermal state.
pub fn gaussian_state() -> impl Strategy<Value = GaussianState> {
    (0.0..50.0f64, -1.5..1.5f64, 0.0..TAU, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(nbar, r, phi, x, p)| {
        let v = nbar + 0.5;
        let (a, b) = (v * (2.0 * r).exp(), v * (-2.0 * r).exp());
        let (s, c) = phi.sin_cos();
        let xx = a * c * c + b * s * s;
        let pp = a * s * s + b * c * c;
        let xp = (a - b) * s * c;
        GaussianState::new([x, p], [[xx, xp], [xp, pp]]).unwrap()
    })
}

pub fn probe() -> impl Strategy<Value = ProbeParams> {
    (0.05..10.0f64, -3.0..3.0f64, 0.0..1.5f64, 0.0..1.5f64, -2.0..2.0f64)
        .prop_map(|(chi, omega, sx, sp, xbar)| ProbeParams::new(chi, omega, sx, sp, xbar).unwrap())
}
