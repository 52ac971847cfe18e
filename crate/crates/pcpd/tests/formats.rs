use pcpd::format::{decode_tensor, encode_tensor, read_matrix_csv, write_matrix_csv, FIXED_HEADER_LEN};
use pcpd_core::nalgebra::DMatrix;
use pcpd_core::DenseTensor;
use proptest::prelude::*;

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn header_layout_is_little_endian() {
    let t = DenseTensor::new(vec![2, 1], vec![1.0, -2.5]).unwrap();
    let b = encode_tensor(&t);
    assert_eq!(&b[..4], b"TNSR");
    assert_eq!(&b[4..16], &[1, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0]);
    assert_eq!(&b[16..24], &2u64.to_le_bytes());
    assert_eq!(&b[24..32], &1u64.to_le_bytes());
    assert_eq!(&b[32..40], &1.0f64.to_le_bytes());
    assert_eq!(b.len(), FIXED_HEADER_LEN + 2 * 8 + 2 * 8);
}

proptest! {
    #[test]
    fn tensor_bytes_round_trip_exactly(
        dims in proptest::collection::vec(1usize..5, 2..6),
        seed in any::<u64>(),
    ) {
        let len: usize = dims.iter().product();
        let values: Vec<f64> = (0..len as u64)
            .map(|i| f64::from_bits(seed.wrapping_mul(6364136223846793005).wrapping_add(i.wrapping_mul(0x9E3779B97F4A7C15))))
            .collect();
        let t = DenseTensor::new(dims.clone(), values).unwrap();
        let back = decode_tensor(&encode_tensor(&t)).unwrap();
        prop_assert_eq!(back.dims(), &dims[..]);
        prop_assert_eq!(bits(back.values()), bits(t.values()));
    }

    #[test]
    fn csv_matrices_round_trip_exactly(
        rows in 1usize..6,
        cols in 1usize..6,
        vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 36),
    ) {
        let m = DMatrix::from_fn(rows, cols, |r, c| vals[r * cols + c]);
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m).unwrap();
        let back = read_matrix_csv(&buf[..]).unwrap();
        prop_assert_eq!((back.nrows(), back.ncols()), (rows, cols));
        prop_assert_eq!(bits(back.as_slice()), bits(m.as_slice()));
    }
}
