//! Detected collapses against the predicted scales, within a factor of two.

use ion_cavity::cli::{self, RunConfig};

fn within_factor_two(detected: f64, predicted: f64) -> bool {
    (0.5 * predicted..=2.0 * predicted).contains(&detected)
}

#[test]
fn field_collapse_matches_scale() {
    for preset in ["fig2", "fig3", "fig6", "fig7"] {
        let s = cli::simulate(&RunConfig::preset(preset).unwrap()).unwrap();
        let detected = s.detection.collapse.expect("collapse detected");
        let predicted = s.predictions.field_collapse;
        assert!(within_factor_two(detected, predicted), "{preset}: {detected} vs {predicted}");
    }
}

#[test]
fn vacuum_field_collapse_is_vibrational() {
    // with n̄ = 0 there is no field dephasing; the only collapse is the
    // vibrational one
    let s = cli::simulate(&RunConfig::preset("fig1").unwrap()).unwrap();
    let detected = s.detection.collapse.expect("collapse detected");
    let predicted = s.predictions.vib_collapse.unwrap();
    assert!(within_factor_two(detected, predicted), "{detected} vs {predicted}");
}
