use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_SOBOL_DIM: usize = 8;

const BITS: usize = 32;

// (s, a, m_1..m_s) for dimensions 2..=8 (Joe and Kuo direction numbers).
const DIRECTIONS: [(u32, u32, &[u32]); MAX_SOBOL_DIM - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
];

/// Gray-code Sobol generator; yields points in `[0,1)^d` starting from the origin.
#[derive(Clone, Debug)]
pub struct Sobol {
    dim: usize,
    v: Vec<[u32; BITS]>,
    x: Vec<u32>,
    index: u64,
}

impl Sobol {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_SOBOL_DIM {
            return Err(Error::invalid(format!(
                "Sobol dimension must be in 1..={MAX_SOBOL_DIM}, got {dim}"
            )));
        }
        let mut v = Vec::with_capacity(dim);
        let mut first = [0u32; BITS];
        for (i, vi) in first.iter_mut().enumerate() {
            *vi = 1u32 << (BITS - 1 - i);
        }
        v.push(first);
        for &(s, a, m) in DIRECTIONS.iter().take(dim - 1) {
            let s = s as usize;
            // 1-indexed as in the reference construction.
            let mut vv = [0u32; BITS + 1];
            for i in 1..=s.min(BITS) {
                vv[i] = m[i - 1] << (BITS - i);
            }
            for i in (s + 1)..=BITS {
                vv[i] = vv[i - s] ^ (vv[i - s] >> s);
                for k in 1..s {
                    vv[i] ^= ((a >> (s - 1 - k)) & 1) * vv[i - k];
                }
            }
            let mut row = [0u32; BITS];
            row.copy_from_slice(&vv[1..]);
            v.push(row);
        }
        Ok(Sobol {
            dim,
            v,
            x: vec![0; dim],
            index: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Next point; the first call returns the origin.
    pub fn next_point<S: Scalar>(&mut self) -> Vec<S> {
        let scale = 1.0 / (1u64 << BITS) as f64;
        let out = self.x.iter().map(|&x| S::lit(x as f64 * scale)).collect();
        let c = (!self.index).trailing_zeros() as usize;
        if c < BITS {
            for (xj, vj) in self.x.iter_mut().zip(&self.v) {
                *xj ^= vj[c];
            }
        }
        self.index += 1;
        out
    }

    pub fn skip(&mut self, n: usize) {
        for _ in 0..n {
            self.next_point::<f64>();
        }
    }
}

/// First `n` points after discarding `skip` leading points.
pub fn sobol<S: Scalar>(n: usize, d: usize, skip: usize) -> Result<Vec<Vec<S>>> {
    if n < 1 {
        return Err(Error::invalid("Sobol count must be at least 1"));
    }
    let mut gen = Sobol::new(d)?;
    gen.skip(skip);
    Ok((0..n).map(|_| gen.next_point()).collect())
}
