//! Sparse tensor core: 2:4 structured weights with activation filtering.
//!
//! Each group of four adjacent weights along the reduction axis keeps two
//! values plus their coordinates. The coordinates pick the two matching
//! activations, which then form one pair for the dual multiplier. A picked
//! activation may still be zero, so pair encoding stays useful here.

use super::{DotProductUnit, Mode};
use crate::error::{Result, SparqError};
use crate::tensorio::Matrix;

const GROUP: usize = 4;

fn check_mask(mask: &[usize]) -> Result<[usize; 2]> {
    match *mask {
        [a, b] if a < GROUP && b < GROUP && a != b => Ok([a.min(b), a.max(b)]),
        _ => Err(SparqError::InvalidMask(format!(
            "expected two distinct positions in 0..4, got {mask:?}"
        ))),
    }
}

#[inline]
fn gather<T: Copy>(group: &[T], coords: [u8; 2]) -> [T; 2] {
    [group[coords[0] as usize], group[coords[1] as usize]]
}

/// Picks the two activations and weights named by a 2:4 mask.
pub fn stc_filter(x: &[u8], w_dense: &[i8], mask: &[usize]) -> Result<([u8; 2], [i8; 2])> {
    if x.len() != GROUP || w_dense.len() != GROUP {
        return Err(SparqError::LaneCount { expected: GROUP, found: x.len().min(w_dense.len()) });
    }
    let [a, b] = check_mask(mask)?;
    if let Some(k) = (0..GROUP).find(|&k| k != a && k != b && w_dense[k] != 0) {
        return Err(SparqError::InvalidMask(format!(
            "weight {} at position {k} lies outside mask {mask:?}",
            w_dense[k]
        )));
    }
    let coords = [a as u8, b as u8];
    Ok((gather(x, coords), gather(w_dense, coords)))
}

/// Magnitude-based 2:4 pruning along `axis` of a row-major tensor. Keeps the
/// two largest-magnitude weights of each group of four (ties go to the lower
/// index) and returns `(mask, pruned)`.
pub fn make_24_mask(w: &[i8], shape: &[usize], axis: usize) -> Result<(Vec<bool>, Vec<i8>)> {
    let total: usize = shape.iter().product();
    if total != w.len() {
        return Err(SparqError::ShapeMismatch(format!("{} values for shape {shape:?}", w.len())));
    }
    let len = *shape
        .get(axis)
        .ok_or_else(|| SparqError::ShapeMismatch(format!("axis {axis} out of range for {shape:?}")))?;
    if len % GROUP != 0 {
        return Err(SparqError::InvalidMask(format!("axis length {len} is not divisible by 4")));
    }
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut mask = vec![false; w.len()];
    for o in 0..outer {
        for inner in 0..stride {
            for g in (0..len).step_by(GROUP) {
                let idx: [usize; GROUP] = std::array::from_fn(|k| (o * len + g + k) * stride + inner);
                let mut order: [usize; GROUP] = [0, 1, 2, 3];
                order.sort_by_key(|&k| (std::cmp::Reverse(w[idx[k]].unsigned_abs()), k));
                mask[idx[order[0]]] = true;
                mask[idx[order[1]]] = true;
            }
        }
    }
    let pruned = w.iter().zip(&mask).map(|(&v, &m)| if m { v } else { 0 }).collect();
    Ok((mask, pruned))
}

/// Compressed `K x N` weights: two values and coordinates per group of four
/// rows in each column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseWeights {
    k: usize,
    n: usize,
    values: Vec<[i8; 2]>,
    coords: Vec<[u8; 2]>,
}

impl SparseWeights {
    fn groups(&self) -> usize {
        self.k / GROUP
    }

    fn check_k(k: usize) -> Result<()> {
        if !k.is_multiple_of(GROUP) {
            return Err(SparqError::InvalidMask(format!("reduction length {k} is not divisible by 4")));
        }
        Ok(())
    }

    /// Compresses weights that already obey 2:4; groups with fewer than two
    /// nonzeros fill the remaining coordinates with the lowest free slots.
    pub fn from_dense(b: &Matrix<i8>) -> Result<Self> {
        Self::check_k(b.rows())?;
        let mut mask = vec![false; b.rows() * b.cols()];
        for j in 0..b.cols() {
            for g in (0..b.rows()).step_by(GROUP) {
                let nz: Vec<usize> = (g..g + GROUP).filter(|&i| b.get(i, j) != 0).collect();
                if nz.len() > 2 {
                    return Err(SparqError::InvalidMask(format!(
                        "column {j}, rows {g}..{}: {} nonzero weights",
                        g + GROUP,
                        nz.len()
                    )));
                }
                let keep = nz.iter().copied().chain((g..g + GROUP).filter(|i| !nz.contains(i))).take(2);
                for i in keep {
                    mask[i * b.cols() + j] = true;
                }
            }
        }
        Self::from_mask(b, &mask)
    }

    /// Compresses `b` using an explicit row-major mask of the same shape.
    pub fn from_mask(b: &Matrix<i8>, mask: &[bool]) -> Result<Self> {
        Self::check_k(b.rows())?;
        if mask.len() != b.rows() * b.cols() {
            return Err(SparqError::ShapeMismatch(format!(
                "mask has {} entries for a {:?} weight matrix",
                mask.len(),
                b.shape()
            )));
        }
        let groups = b.rows() / GROUP;
        let mut values = Vec::with_capacity(groups * b.cols());
        let mut coords = Vec::with_capacity(groups * b.cols());
        for j in 0..b.cols() {
            for g in 0..groups {
                let rows = g * GROUP..(g + 1) * GROUP;
                let kept: Vec<usize> = rows.clone().filter(|&i| mask[i * b.cols() + j]).map(|i| i - g * GROUP).collect();
                let dense: Vec<i8> = rows.map(|i| b.get(i, j)).collect();
                let (_, w) = stc_filter(&[0; GROUP], &dense, &kept)?;
                values.push(w);
                coords.push([kept[0] as u8, kept[1] as u8]);
            }
        }
        Ok(Self { k: b.rows(), n: b.cols(), values, coords })
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.k, self.n]
    }

    pub fn to_dense(&self) -> Matrix<i8> {
        let mut out = Matrix::from_fn(self.k, self.n, |_, _| 0i8);
        for j in 0..self.n {
            for g in 0..self.groups() {
                let c = self.coords[j * self.groups() + g];
                let v = self.values[j * self.groups() + g];
                for s in 0..2 {
                    out.set(g * GROUP + c[s] as usize, j, v[s]);
                }
            }
        }
        out
    }

    /// Activations picked for column `j` from one activation row.
    pub fn filter_row(&self, x: &[u8], j: usize) -> (Vec<u8>, Vec<i8>) {
        let base = j * self.groups();
        let mut xs = Vec::with_capacity(self.k / 2);
        let mut ws = Vec::with_capacity(self.k / 2);
        for (g, group) in x.chunks(GROUP).enumerate() {
            xs.extend(gather(group, self.coords[base + g]));
            ws.extend(self.values[base + g]);
        }
        (xs, ws)
    }
}

/// Matmul on the sparse tensor core: filter per 2:4 group, then reduce the
/// surviving pairs on a DP unit.
pub fn stc_matmul(a: &Matrix<u8>, b: &SparseWeights, mode: &Mode) -> Result<Matrix<i32>> {
    if a.cols() != b.k {
        return Err(SparqError::ShapeMismatch(format!(
            "inner dimensions differ: {:?} x {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let unit = DotProductUnit::new(mode.multiplier());
    let mut out = Matrix::from_fn(a.rows(), b.n, |_, _| 0i32);
    for i in 0..a.rows() {
        for j in 0..b.n {
            let (xs, ws) = b.filter_row(a.row(i), j);
            let y = unit.reduce(&mode.activation_lanes(&xs), &mode.weight_lanes(&ws))?;
            out.set(i, j, y);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitquant::TrimConfig;
    use crate::datapath::exact_matmul;

    #[test]
    fn filter_examples() {
        assert_eq!(stc_filter(&[9, 0, 7, 2], &[0, 0, 5, -1], &[2, 3]).unwrap(), ([7, 2], [5, -1]));
        assert_eq!(stc_filter(&[0, 6, 9, 9], &[3, 4, 0, 0], &[0, 1]).unwrap(), ([0, 6], [3, 4]));
        assert!(matches!(stc_filter(&[1, 1, 1, 1], &[1, 2, 3, 0], &[0, 2]), Err(SparqError::InvalidMask(_))));
    }

    #[test]
    fn filter_rejects_bad_masks() {
        let x = [1, 2, 3, 4];
        let w = [1, 0, 0, 0];
        assert!(stc_filter(&x, &w, &[0]).is_err());
        assert!(stc_filter(&x, &w, &[0, 1, 2]).is_err());
        assert!(stc_filter(&x, &w, &[0, 0]).is_err());
        assert!(stc_filter(&x, &w, &[0, 4]).is_err());
        assert!(stc_filter(&x[..3], &w[..3], &[0, 1]).is_err());
        assert_eq!(stc_filter(&x, &w, &[1, 0]).unwrap(), ([1, 2], [1, 0]));
    }

    #[test]
    fn mask_examples() {
        let (mask, pruned) = make_24_mask(&[1, -5, 3, -2], &[4], 0).unwrap();
        assert_eq!(mask, vec![false, true, true, false]);
        assert_eq!(pruned, vec![0, -5, 3, 0]);
        let (mask, _) = make_24_mask(&[7, 7, 7, 7], &[4], 0).unwrap();
        assert_eq!(mask, vec![true, true, false, false]);
        let (mask, pruned) = make_24_mask(&[0; 4], &[4], 0).unwrap();
        assert_eq!(mask, vec![true, true, false, false]);
        assert_eq!(pruned, vec![0; 4]);
        assert!(make_24_mask(&[1, 2, 3], &[3], 0).is_err());
        // -128 has the largest magnitude.
        let (_, pruned) = make_24_mask(&[127, -128, 1, 0], &[4], 0).unwrap();
        assert_eq!(pruned, vec![127, -128, 0, 0]);
    }

    #[test]
    fn mask_along_rows_of_a_matrix() {
        // 4x2 matrix, groups run down each column.
        let w = [1i8, 10, 2, -20, 3, 30, 4, -40];
        let (_, pruned) = make_24_mask(&w, &[4, 2], 0).unwrap();
        assert_eq!(pruned, vec![0, 0, 0, 0, 3, 30, 4, -40]);
        let (_, pruned) = make_24_mask(&w, &[2, 4], 1).unwrap();
        assert_eq!(pruned, vec![0, 10, 0, -20, 0, 30, 0, -40]);
    }

    #[test]
    fn compression_round_trips() {
        let dense = Matrix::new(4, 2, vec![0i8, 5, 3, 0, 0, 0, -1, 7]).unwrap();
        let sw = SparseWeights::from_dense(&dense).unwrap();
        assert_eq!(sw.to_dense(), dense);
        let full = Matrix::new(4, 1, vec![1i8, 2, 3, 0]).unwrap();
        assert!(SparseWeights::from_dense(&full).is_err());
        assert!(SparseWeights::from_dense(&Matrix::new(3, 1, vec![0i8; 3]).unwrap()).is_err());
    }

    #[test]
    fn exact_stc_equals_dense_pruned() {
        let a = Matrix::from_fn(3, 8, |i, j| ((i * 31 + j * 17) % 256) as u8);
        let w = Matrix::from_fn(8, 3, |i, j| ((i * 53 + j * 7) % 256) as u8 as i8);
        let (_, pruned) = make_24_mask(w.data(), &[8, 3], 0).unwrap();
        let pruned = Matrix::new(8, 3, pruned).unwrap();
        let sw = SparseWeights::from_dense(&pruned).unwrap();
        let got = stc_matmul(&a, &sw, &Mode::Exact).unwrap();
        assert_eq!(got, exact_matmul(&a, &pruned).unwrap().map(|v| v as i32));
        let sparq = stc_matmul(&a, &sw, &Mode::sparq(TrimConfig::five_opt(), true, true)).unwrap();
        assert_eq!(sparq.shape(), [3, 3]);
    }
}
