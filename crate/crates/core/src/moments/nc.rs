//! Non-crossing partitions.

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest ground set accepted by [`enumerate_nc`].
pub const NC_MAX_N: usize = 12;

/// A partition of `{1, …, n}` with no two blocks crossing. Blocks are sorted
/// internally and ordered by their smallest element.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NonCrossingPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl NonCrossingPartition {
    /// Validates coverage, disjointness and the non-crossing condition.
    pub fn new(n: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n + 1];
        for b in &mut blocks {
            if b.is_empty() {
                return Err(Error::InvalidArgument("empty block".into()));
            }
            b.sort_unstable();
            for &i in b.iter() {
                if i == 0 || i > n || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidArgument(format!("element {i} is out of range or repeated")));
                }
            }
        }
        if seen[1..].iter().any(|s| !s) {
            return Err(Error::InvalidArgument("blocks do not cover the ground set".into()));
        }
        blocks.sort();
        let p = Self { n, blocks };
        if !p.is_non_crossing() {
            return Err(Error::InvalidArgument("blocks cross".into()));
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// No `a < b < c < e` with `a, c` in one block and `b, e` in another.
    fn is_non_crossing(&self) -> bool {
        let mut owner = vec![0; self.n + 1];
        for (k, b) in self.blocks.iter().enumerate() {
            for &i in b {
                owner[i] = k;
            }
        }
        for (k, b) in self.blocks.iter().enumerate() {
            for pair in b.windows(2) {
                // every block met strictly inside (pair[0], pair[1]) must stay inside
                for &i in &owner[pair[0] + 1..pair[1]] {
                    if i == k {
                        continue;
                    }
                    let other = &self.blocks[i];
                    if other[0] < pair[0] || *other.last().unwrap() > pair[1] {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// All non-crossing partitions of `{1, …, n}`, sorted by block structure.
///
/// Elements are placed left to right; open blocks form a stack, and joining a
/// block closes every block opened after it, which is exactly what keeps the
/// partition non-crossing.
pub fn enumerate_nc(n: usize) -> Result<Vec<NonCrossingPartition>> {
    if !(1..=NC_MAX_N).contains(&n) {
        return Err(Error::InvalidArgument(format!("enumerate_nc needs 1 <= n <= {NC_MAX_N}, got {n}")));
    }
    let mut out = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    place(1, n, &mut blocks, &mut stack, &mut out);
    out.sort();
    Ok(out)
}

fn place(
    i: usize,
    n: usize,
    blocks: &mut Vec<Vec<usize>>,
    stack: &mut Vec<usize>,
    out: &mut Vec<NonCrossingPartition>,
) {
    if i > n {
        out.push(NonCrossingPartition { n, blocks: blocks.clone() });
        return;
    }
    for depth in 0..stack.len() {
        let b = stack[depth];
        let saved: Vec<usize> = stack.split_off(depth + 1);
        blocks[b].push(i);
        place(i + 1, n, blocks, stack, out);
        blocks[b].pop();
        stack.extend(saved);
    }
    blocks.push(vec![i]);
    stack.push(blocks.len() - 1);
    place(i + 1, n, blocks, stack, out);
    stack.pop();
    blocks.pop();
}

/// Catalan numbers `C_0, …, C_k` from `C_{m+1} = Σ C_j C_{m-j}`.
pub fn catalan_numbers(k: usize) -> Vec<u64> {
    let mut c = vec![1u64];
    for m in 0..k {
        c.push((0..=m).map(|j| c[j] * c[m - j]).sum());
    }
    c
}
