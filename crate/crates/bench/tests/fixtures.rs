use cenizk::harness::ProtocolId;
use cenizk_bench::{acceptance_session, small_epr, triangle};

#[test]
fn fixtures_are_valid() {
    let (x, w) = triangle();
    assert!(w.validate(&x).is_ok());
    assert_eq!(small_epr(4).ell(), 9);
    assert_eq!(acceptance_session(ProtocolId::Epr).reps, 20);
}
