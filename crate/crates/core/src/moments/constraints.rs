//! Linear constraints `Σ_{i∈P_j} (ℓ_i - ℓ_{[i+1]}) = 0` attached to a partition.

use serde::Serialize;

use super::partition::{cyclic_index, SetPartition};
use crate::error::{Error, Result};

/// Integer constraint matrix `A` (one row per block, one column per `ℓ_i`) and its rank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintSystem {
    pub p: usize,
    pub k: usize,
    /// `matrix[j][i-1]` is the coefficient of `ℓ_i` in the constraint of block `j`.
    pub matrix: Vec<Vec<i64>>,
    pub rank: usize,
}

/// Builds `A` for `tau` and checks that exactly one constraint is redundant.
pub fn build_constraints(tau: &SetPartition) -> Result<ConstraintSystem> {
    let p = tau.p();
    let k = tau.k();
    let mut matrix = vec![vec![0i64; p]; k];
    for (j, block) in tau.blocks().iter().enumerate() {
        for &i in block {
            matrix[j][i - 1] += 1;
            matrix[j][cyclic_index(i as i64 + 1, p) - 1] -= 1;
        }
    }
    let rank = integer_rank(&matrix);
    if rank + 1 != k {
        return Err(Error::Invariant(format!(
            "constraint matrix of {tau} has rank {rank}, expected k - 1 = {}",
            k - 1
        )));
    }
    Ok(ConstraintSystem { p, k, matrix, rank })
}

impl ConstraintSystem {
    /// Block-membership matrix `A'`: `A'_{j,i} = 1` iff `i ∈ P_j`.
    pub fn membership_matrix(tau: &SetPartition) -> Vec<Vec<i64>> {
        let mut a = vec![vec![0i64; tau.p()]; tau.k()];
        for (j, block) in tau.blocks().iter().enumerate() {
            for &i in block {
                a[j][i - 1] = 1;
            }
        }
        a
    }
}

/// Cyclic right-shift matrix `Z` of size `p`: row `i` has its single one in column `[i+1]`.
pub fn shift_matrix(p: usize) -> Vec<Vec<i64>> {
    (1..=p)
        .map(|i| {
            let mut row = vec![0i64; p];
            row[cyclic_index(i as i64 + 1, p) - 1] = 1;
            row
        })
        .collect()
}

/// Rank of an integer matrix by fraction-free (Bareiss) elimination; every
/// division is exact, so no rounding occurs.
pub fn integer_rank(rows: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let nrows = a.len();
    let ncols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut prev_pivot: i128 = 1;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(pivot_row) = (rank..nrows).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(rank, pivot_row);
        let (top, rest) = a.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        let pivot = pivot_row[col];
        for row in rest.iter_mut().take(nrows - rank - 1) {
            let factor = row[col];
            for (x, &y) in row[col..ncols].iter_mut().zip(&pivot_row[col..ncols]) {
                *x = (pivot * *x - factor * y) / prev_pivot;
            }
        }
        prev_pivot = pivot;
        rank += 1;
    }
    rank
}
