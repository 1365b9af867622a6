#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shardsim::circuit::Matrix2;
use shardsim::{Circuit, Gate, QubitPermutation, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_permutation(n: usize, rng: &mut impl Rng) -> QubitPermutation {
    let mut map: Vec<usize> = (0..n).collect();
    map.shuffle(rng);
    QubitPermutation::from_map(map).unwrap()
}

/// Random element of U(2) from Euler-style angles.
pub fn random_unitary(rng: &mut impl Rng) -> Matrix2 {
    let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let (a, b, g): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let e = |x: f64| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * x);
    let (c, s) = (theta.cos(), theta.sin());
    [
        [e(g) * e(a) * c, e(g) * e(b) * s],
        [-e(g) * e(-b) * s, e(g) * e(-a) * c],
    ]
}

/// Random circuit over all gate kinds, including generic unitaries.
pub fn random_mixed_circuit(n: usize, gates: usize, rng: &mut impl Rng) -> Circuit {
    let mut c = Circuit::new(n);
    for _ in 0..gates {
        let t = rng.random_range(0..n);
        let mut other = rng.random_range(0..n - 1);
        if other >= t {
            other += 1;
        }
        let g = match rng.random_range(0..5) {
            0 => Gate::h(t),
            1 => Gate::y(t),
            2 => Gate::cnot(other, t),
            3 => Gate::unitary(t, random_unitary(rng)).unwrap(),
            _ => Gate::controlled(other, t, random_unitary(rng)).unwrap(),
        };
        c.push_gate(g).unwrap();
    }
    c
}

pub fn random_state(n: usize, rng: &mut impl Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..1usize << n)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
    v
}
