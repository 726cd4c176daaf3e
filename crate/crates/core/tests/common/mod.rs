//! Random matrix generators shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use sigmak::symfunc::SymmetricMatrix;

/// Symmetric matrix with independent entries uniform in `[-bound, bound]`.
pub fn random_symmetric<R: Rng>(rng: &mut R, dim: usize, bound: f64) -> SymmetricMatrix {
    let mut entries = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let v = rng.gen_range(-bound..=bound);
            entries[i * dim + j] = v;
            entries[j * dim + i] = v;
        }
    }
    SymmetricMatrix::new(dim, entries).unwrap()
}

/// Applies `rotations` random Givens rotations, i.e. `QᵀMQ` for a random
/// orthogonal `Q`.
pub fn randomly_rotated<R: Rng>(
    rng: &mut R,
    m: &SymmetricMatrix,
    rotations: usize,
) -> SymmetricMatrix {
    let dim = m.dim();
    let mut out = m.clone();
    if dim < 2 {
        return out;
    }
    for _ in 0..rotations {
        let p = rng.gen_range(0..dim);
        let mut q = rng.gen_range(0..dim - 1);
        if q >= p {
            q += 1;
        }
        let angle = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        out = out.rotated(p, q, angle).unwrap();
    }
    out
}

/// A symmetric matrix with the given spectrum, in a random basis.
pub fn with_spectrum<R: Rng>(rng: &mut R, spectrum: &[f64]) -> SymmetricMatrix {
    let d = SymmetricMatrix::from_diagonal(spectrum).unwrap();
    randomly_rotated(rng, &d, 3 * spectrum.len() * spectrum.len())
}
