mod common;

use common::fd_clamped_alpha;
use tactile_bp::membrane::{
    capacitance, capacitance_with_grid, deflect, flexural_rigidity, linear_sensitivity,
    DeflectionProfile, MaterialParams, MembraneGeometry, CLAMPED_SQUARE_ALPHA,
};

#[test]
fn finite_difference_oracle_is_second_order() {
    let coarse = fd_clamped_alpha(20);
    let fine = fd_clamped_alpha(40);
    let finer = fd_clamped_alpha(80);
    let ratio = (fine - coarse) / (finer - fine);
    assert!((ratio - 4.0).abs() < 0.5, "convergence ratio {ratio}");
}

#[test]
fn plate_coefficient_matches_biharmonic_solution() {
    let alpha_fd = fd_clamped_alpha(100);
    let rel = (CLAMPED_SQUARE_ALPHA - alpha_fd).abs() / alpha_fd;
    assert!(
        rel < 0.02,
        "alpha {CLAMPED_SQUARE_ALPHA} vs fd {alpha_fd}: {rel}"
    );
}

#[test]
fn deflection_uses_the_plate_coefficient() {
    let g = MembraneGeometry::default();
    let m = MaterialParams::default();
    let p = 1000.0;
    let w = deflect(&g, &m, p).unwrap();
    let d = flexural_rigidity(&g, &m);
    let expect = CLAMPED_SQUARE_ALPHA * p * g.side_length.powi(4) / d;
    assert!((w.center_deflection - expect).abs() <= 1e-15 * expect);
}

#[test]
fn linear_sensitivity_matches_central_difference() {
    for coverage in [1.0, 0.6] {
        let g = MembraneGeometry {
            electrode_coverage: coverage,
            ..Default::default()
        };
        let h = 1e-11;
        // midpoint error is O(N^-2) when coverage < 1
        let points = 4096;
        let c = |w: f64| {
            capacitance_with_grid(
                &g,
                &DeflectionProfile {
                    center_deflection: w,
                },
                points,
            )
            .unwrap()
        };
        let fd = (c(h) - c(-h)) / (2.0 * h);
        let formula = linear_sensitivity(&g);
        let rel = (formula - fd).abs() / formula;
        assert!(
            rel < 1e-6,
            "coverage {coverage}: {formula} vs {fd} ({rel:e})"
        );
    }
}

#[test]
fn quadrature_converges() {
    let g = MembraneGeometry::default();
    for frac in [0.3, 0.6, -0.5] {
        let p = DeflectionProfile {
            center_deflection: frac * g.gap0,
        };
        let c64 = capacitance(&g, &p).unwrap();
        let c1024 = capacitance_with_grid(&g, &p, 1024).unwrap();
        let rel = (c64 - c1024).abs() / c1024;
        assert!(rel < 1e-9, "w = {frac} gap: {rel:e}");
    }
}

#[test]
fn capacitance_is_monotone_in_pressure() {
    let g = MembraneGeometry::default();
    let m = MaterialParams::default();
    let mut last = 0.0;
    for k in -20..=20 {
        let p = k as f64 * 1000.0;
        let c = capacitance(&g, &deflect(&g, &m, p).unwrap()).unwrap();
        assert!(c > last);
        last = c;
    }
}
