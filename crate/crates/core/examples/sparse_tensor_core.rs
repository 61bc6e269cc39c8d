//! 2:4 weight pruning and the sparse tensor core.

use sparq::analysis::{synthetic_weights, SyntheticActivations};
use sparq::datapath::{exact_matmul, make_24_mask, stc_matmul, SparseWeights};
use sparq::tensorio::Matrix;
use sparq::{Mode, TrimConfig};

fn main() -> sparq::Result<()> {
    let (k, n) = (32, 8);
    let a = SyntheticActivations::new(40.0, 0.5, 11).matrix(6, k);
    let dense = synthetic_weights(k, n, 30.0, 12);
    let (mask, pruned) = make_24_mask(dense.data(), &[k, n], 0)?;
    let pruned = Matrix::new(k, n, pruned)?;
    let kept = mask.iter().filter(|&&m| m).count();
    println!("kept {kept} of {} weights", mask.len());

    let sparse = SparseWeights::from_mask(&pruned, &mask)?;
    let exact = exact_matmul(&a, &pruned)?;
    let int8 = stc_matmul(&a, &sparse, &Mode::Exact)?;
    let same = int8.data().iter().zip(exact.data()).all(|(&s, &e)| s as i64 == e);
    println!("INT8 sparse core equals dense pruned product: {same}");

    let trimmed = stc_matmul(&a, &sparse, &Mode::sparq(TrimConfig::five_opt(), true, true))?;
    println!("row 0 exact   {:?}", &exact.row(0)[..4]);
    println!("row 0 trimmed {:?}", &trimmed.row(0)[..4]);
    Ok(())
}
