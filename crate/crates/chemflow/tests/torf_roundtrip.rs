use chemflow::torf::{self, AnyField, TorfError};
use chemflow_core::{GridSpec, ScalarField, SymTensorField, VectorField};

fn wobble(x: [f64; 3], k: f64) -> f64 {
    (k * x[0] + 0.3).sin() * (2.0 * x[1]).cos() + x[2] * 1e-300 + (k * 7.1 * x[1]).exp() * 1e10
}

fn bits(comps: &[Vec<f64>]) -> Vec<u64> {
    comps.iter().flatten().map(|x| x.to_bits()).collect()
}

#[test]
fn every_rank_round_trips_bit_exactly() {
    for (dim, n) in [(2, 8), (2, 32), (3, 8), (3, 16)] {
        let g = GridSpec::new(dim, n, 1).unwrap();
        let s = ScalarField::from_fn(g, |x| wobble(x, 1.0));
        let v = VectorField::from_fn(g, |x| [wobble(x, 2.0), -wobble(x, 3.0), wobble(x, 5.0)]);
        let t = SymTensorField::from_fn(g, |x| {
            let a = wobble(x, 1.5);
            let b = wobble(x, 2.5);
            [[a, b, 0.5], [b, -a, 1.0], [0.5, 1.0, a * b]]
        });

        let mut buf = Vec::new();
        torf::write(&s, &mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 8 * g.len());
        let back: ScalarField = torf::read(&buf[..]).unwrap();
        assert_eq!(bits(back.components()), bits(s.components()));
        assert_eq!(back.grid().cutoff(), n / 3);

        let mut buf = Vec::new();
        torf::write(&v, &mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 8 * dim * g.len());
        let back: VectorField = torf::read(&buf[..]).unwrap();
        assert_eq!(bits(back.components()), bits(v.components()));

        let mut buf = Vec::new();
        torf::write(&t, &mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 8 * dim * (dim + 1) / 2 * g.len());
        match torf::read_any(&buf[..]).unwrap() {
            AnyField::SymTensor(back) => assert_eq!(bits(back.components()), bits(t.components())),
            other => panic!("wrong rank {other:?}"),
        }
    }
}

#[test]
fn samples_follow_row_major_component_major_order() {
    let g = GridSpec::new(2, 8, 2).unwrap();
    let v = VectorField::from_fn(g, |x| [x[0] * 8.0 * 8.0 + x[1] * 8.0, -1.0, 0.0]);
    let mut buf = Vec::new();
    torf::write(&v, &mut buf).unwrap();
    let at = |i: usize| f64::from_le_bytes(buf[32 + 8 * i..40 + 8 * i].try_into().unwrap());
    for i in 0..64 {
        assert_eq!(at(i), i as f64);
        assert_eq!(at(64 + i), -1.0);
    }
}

#[test]
fn files_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let g = GridSpec::new(3, 8, 2).unwrap();
    let c = ScalarField::from_fn(g, |x| x[0] - x[2]);
    let p = tmp.path().join("c.torf");
    torf::write_file(&c, &p).unwrap();
    let back: ScalarField = torf::read_file(&p).unwrap();
    assert_eq!(back.values(), c.values());
    assert!(matches!(torf::read_file::<VectorField>(&p), Err(TorfError::Rank { expected: 1, found: 0 })));
}

#[test]
fn malformed_headers_are_rejected() {
    let g = GridSpec::new(2, 8, 2).unwrap();
    let mut good = Vec::new();
    torf::write(&ScalarField::zeros(g), &mut good).unwrap();
    let patch = |off: usize, val: u32| {
        let mut b = good.clone();
        b[off..off + 4].copy_from_slice(&val.to_le_bytes());
        b
    };
    assert!(matches!(torf::read_any(&patch(4, 2)[..]), Err(TorfError::Version(2))));
    assert!(torf::read_any(&patch(8, 4)[..]).is_err());
    assert!(torf::read_any(&patch(12, 12)[..]).is_err());
    assert!(torf::read_any(&patch(16, 3)[..]).is_err());
    assert!(torf::read_any(&patch(24, 1)[..]).is_err());
    assert!(torf::read_any(&good[..20]).is_err());
}
