use ambc::montecarlo::{z_score, BerPoint, Harness, Scheme, SimParams, SIGNIFICANCE_SIGMAS};

fn at_6db(scheme: Scheme, slots: u64) -> BerPoint {
    let p = SimParams {
        scheme,
        slots,
        seed: 11,
        ..SimParams::default()
    };
    let h = Harness::new(2).unwrap();
    BerPoint::from_counts(6.0, h.run_point(&p, 0).unwrap(), 0)
}

#[test]
fn camf_below_cuif_at_6db() {
    let camf = at_6db(Scheme::Camf, 1000);
    let cuif = at_6db(Scheme::Cuif, 1000);
    assert!(camf.ber < cuif.ber, "CAMF {} CUIF {}", camf.ber, cuif.ber);
    assert!(z_score(&camf, &cuif) > SIGNIFICANCE_SIGMAS);
}

#[test]
fn energy_detector_worse_than_camf() {
    let camf = at_6db(Scheme::Camf, 500);
    let energy = at_6db(Scheme::Energy, 500);
    assert!(energy.ber > camf.ber, "ENERGY {} CAMF {}", energy.ber, camf.ber);
    assert!(z_score(&camf, &energy) > SIGNIFICANCE_SIGMAS);
}

#[test]
fn genie_camf_not_worse_than_genie_cuif() {
    let camf = at_6db(Scheme::GenieCamf, 300);
    let cuif = at_6db(Scheme::GenieCuif, 300);
    assert!(z_score(&camf, &cuif) > -SIGNIFICANCE_SIGMAS);
}
