use proptest::prelude::*;

use sparq::datapath::{exact_matmul, reference_matmul, run_engine};
use sparq::tensorio::{im2col_raw, lower_conv, ConvGeometry, Matrix, QuantData, QuantTensor};
use sparq::{Engine, Mode, TrimConfig};

fn config() -> impl Strategy<Value = TrimConfig> {
    (0..5usize).prop_map(|i| TrimConfig::named()[i].clone())
}

proptest! {
    #[test]
    fn dense_engines_agree(
        m in 1..10usize, k in 0..20usize, n in 1..10usize, seed in any::<u64>(),
        cfg in config(), rounding in any::<bool>(), vsparq in any::<bool>(),
    ) {
        let mut s = seed;
        let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (s >> 33) as u32 };
        let a = Matrix::from_fn(m, k, |_, _| { let v = next(); if v % 3 == 0 { 0 } else { v as u8 } });
        let b = Matrix::from_fn(k, n, |_, _| (next() % 255) as i32 as i8);
        let mode = Mode::sparq(cfg, rounding, vsparq);
        let want = reference_matmul(&a, &b, &mode).unwrap();
        for engine in [Engine::Sa, Engine::Tc] {
            let got = run_engine(engine, &a, &b, &mode).unwrap();
            prop_assert_eq!(got.map(|v| v as i64), want.clone());
        }
    }

    #[test]
    fn exact_mode_matches_integer_product(m in 1..8usize, k in 1..16usize, n in 1..8usize, seed in any::<u8>()) {
        let a = Matrix::from_fn(m, k, |i, j| (i * 31 + j * 7 + seed as usize) as u8);
        let b = Matrix::from_fn(k, n, |i, j| (i * 13 + j * 5 + seed as usize) as u8 as i8);
        let exact = exact_matmul(&a, &b).unwrap();
        for engine in [Engine::Ref, Engine::Sa, Engine::Tc] {
            prop_assert_eq!(run_engine(engine, &a, &b, &Mode::Exact).unwrap().map(|v| v as i64), exact.clone());
        }
    }

    #[test]
    fn im2col_rows_are_patches(
        c in 1..4usize, h in 1..7usize, w in 1..7usize, kh in 1..4usize, kw in 1..4usize,
        stride in 1..3usize, pad in 0..2usize,
    ) {
        prop_assume!(kh <= h + 2 * pad && kw <= w + 2 * pad);
        let data: Vec<u16> = (0..(c * h * w) as u16).map(|v| v + 1).collect();
        let geom = ConvGeometry::new(kh, kw, stride, pad);
        let m = im2col_raw(&data, [c, h, w], &geom).unwrap();
        let (oh, ow) = geom.output_dims(h, w).unwrap();
        prop_assert_eq!(m.shape(), [oh * ow, c * kh * kw]);
        // Every nonzero entry names the input element it came from.
        for r in 0..m.rows() {
            let (oy, ox) = (r / ow, r % ow);
            for (col, &v) in m.row(r).iter().enumerate() {
                if v == 0 { continue; }
                let idx = v as usize - 1;
                let (ch, y, x) = (idx / (h * w), idx / w % h, idx % w);
                let (kc, ky, kx) = (col / (kh * kw), col / kw % kh, col % kw);
                prop_assert_eq!(ch, kc);
                prop_assert_eq!(y + pad, oy * stride + ky);
                prop_assert_eq!(x + pad, ox * stride + kx);
            }
        }
    }

    #[test]
    fn batch_rows_stack(n in 1..4usize, c in 1..3usize, hw in 2..5usize) {
        let data: Vec<u8> = (0..n * c * hw * hw).map(|v| v as u8).collect();
        let x = QuantTensor::new(QuantData::U8(data.clone()), vec![n, c, hw, hw], vec![0.5]).unwrap();
        let k = QuantTensor::new(QuantData::I8(vec![1; c * 4]), vec![1, c, 2, 2], vec![1.0]).unwrap();
        let (a, _) = lower_conv(&x, &k, 1, 0).unwrap();
        let per = (hw - 1) * (hw - 1);
        prop_assert_eq!(a.rows(), n * per);
        for img in 0..n {
            let single = im2col_raw(&data[img * c * hw * hw..(img + 1) * c * hw * hw], [c, hw, hw], &ConvGeometry::new(2, 2, 1, 0)).unwrap();
            for r in 0..per {
                prop_assert_eq!(a.row(img * per + r), single.row(r));
            }
        }
    }
}
