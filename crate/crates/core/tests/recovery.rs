mod common;

use common::checks;
use mkc::Method;

#[test]
fn embd_ht_recovers_a_representable_row() {
    let error = checks::recovery_error(Method::EmbdHt).unwrap();
    assert!(error <= 1e-2, "ARE {error}");
}

#[test]
fn sdp_recovers_a_representable_row() {
    let error = checks::recovery_error(Method::Sdp).unwrap();
    assert!(error <= 1e-2, "ARE {error}");
}
