use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rialign::align::{Scheme, DEFAULT_COLUMN_CAP};
use rialign::directions::DEFAULT_DIRECTION_CAP;
use rialign::lattice::DEFAULT_CODEBOOK_CAP;
use rialign::regions::rat;
use rialign::*;

fn noiseless_round_trip(config: &NetworkConfig, point: &[Rational], n: u32, q: u64) {
    let allocation = allocate_streams(config, point).unwrap();
    let channel = sample_channel(config, 21);
    let scheme = Scheme::new(config, &channel, n, &allocation, 21, DEFAULT_DIRECTION_CAP).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let lambda = 3.0;
    for rx in 0..config.num_rx() {
        assert!(verify_alignment(&scheme, rx).unwrap().is_aligned());
        let model = build_receive_model(&scheme, rx, Weighting::Random(21), DEFAULT_COLUMN_CAP).unwrap();
        let search = SearchBox::structural(&model, q);
        let decoder = Decoder::new(&model, lambda, &search, DEFAULT_CODEBOOK_CAP).unwrap();
        for _ in 0..20 {
            let symbols = SymbolVector::random(&scheme, q, lambda, &mut rng).unwrap();
            let x = encode(&scheme, &symbols).unwrap();
            let y = model.apply_weights(&propagate(&channel, config.rx_antennas()[rx], rx, &x));
            assert_eq!(decoder.decode(&y), model.integer_vector(&symbols));
        }
    }
}

#[test]
fn two_user_ic_decodes_noiselessly() {
    let config = make_config(NetworkKind::Ic, 2, 2, vec![1, 1], vec![1, 1], None).unwrap();
    noiseless_round_trip(&config, &[rat(1, 2), rat(1, 2)], 1, 1);
}

#[test]
fn x_network_decodes_noiselessly() {
    let config = make_config(NetworkKind::X, 2, 2, vec![1, 1], vec![1, 1], None).unwrap();
    noiseless_round_trip(&config, &vec![rat(1, 3); 4], 1, 1);
}

#[test]
fn region_witness_drives_allocation() {
    let config = make_config(NetworkKind::Ic, 3, 3, vec![2; 3], vec![3; 3], None).unwrap();
    let rows = total_dof_formulas(&config).unwrap();
    let witness = rows.iter().find_map(|r| r.witness.clone()).unwrap();
    assert!(inner_region(&config).unwrap().contains(&witness).unwrap());
    let allocation = allocate_streams(&config, &witness).unwrap();
    assert_eq!(allocation.dbar.len(), 3);
    assert!(allocation.dbar.iter().all(|&d| d == allocation.dbar[0] && d > 0));
}
