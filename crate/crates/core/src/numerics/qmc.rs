use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Halton points in the unit ball of R^d, Cranley-Patterson rotated by a
/// shift drawn from `seed`. Points of the rotated cube sequence falling
/// outside the ball are skipped, so the output is deterministic per
/// `(dim, count, seed)`.
pub fn unit_ball_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(
        dim >= 1 && dim <= PRIMES.len(),
        "unsupported dimension {dim}"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    while out.len() < count {
        let p: Vec<f64> = (0..dim)
            .map(|j| {
                let u = (radical_inverse(i, PRIMES[j]) + shift[j]).fract();
                2.0 * u - 1.0
            })
            .collect();
        i += 1;
        if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            out.push(p);
        }
    }
    out
}
