//! Qubit layouts and the algebra of changing them.
//!
//! Vocabulary used throughout the crate: a *position* is a bit index of the
//! stored vector index, and qubit `q` sits at position `σ(q)`. Positions
//! below `m` are local (inside one shard), the remaining `n - m` are global
//! (they select the shard).

use std::fmt;

use crate::circuit::Gate;
use crate::error::{Error, Result};

/// A bijection from qubit ids to positions, with its inverse cached.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QubitPermutation {
    map: Vec<usize>,
    inv: Vec<usize>,
}

impl QubitPermutation {
    pub fn identity(n: usize) -> Self {
        let map: Vec<usize> = (0..n).collect();
        Self {
            inv: map.clone(),
            map,
        }
    }

    /// Builds a permutation from its image list, `map[q] = σ(q)`.
    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut inv = vec![usize::MAX; n];
        for (q, &p) in map.iter().enumerate() {
            if p >= n {
                return Err(Error::InvalidPermutation(format!(
                    "image {p} of qubit {q} is out of range for size {n}"
                )));
            }
            if inv[p] != usize::MAX {
                return Err(Error::InvalidPermutation(format!(
                    "position {p} is the image of both qubit {} and qubit {q}",
                    inv[p]
                )));
            }
            inv[p] = q;
        }
        Ok(Self { map, inv })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Position occupied by qubit `q`.
    #[inline]
    pub fn position(&self, q: usize) -> usize {
        self.map[q]
    }

    /// Qubit occupying position `p`.
    #[inline]
    pub fn qubit_at(&self, p: usize) -> usize {
        self.inv[p]
    }

    /// The image list `[σ(0), σ(1), ...]`.
    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        Self {
            map: self.inv.clone(),
            inv: self.map.clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(q, &p)| q == p)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(
            self.len(),
            other.len(),
            "composing permutations of different sizes"
        );
        let map = other.map.iter().map(|&x| self.map[x]).collect();
        Self::from_map(map).expect("composition of bijections")
    }

    /// The layout obtained by exchanging the qubits at positions `a` and `b`.
    pub fn with_positions_swapped(&self, a: usize, b: usize) -> Self {
        let mut out = self.clone();
        let (qa, qb) = (out.inv[a], out.inv[b]);
        out.map.swap(qa, qb);
        out.inv.swap(a, b);
        out
    }

    /// Position-to-position map taking this layout to `target`:
    /// `result[p] = target(self⁻¹(p))`.
    pub fn transition_to(&self, target: &Self) -> Vec<usize> {
        self.inv.iter().map(|&q| target.map[q]).collect()
    }

    /// Stored vector index of basis state `i`: `Σ_q i_q · 2^σ(q)`.
    #[inline]
    pub fn amplitude_index(&self, i: usize) -> usize {
        let mut j = 0usize;
        let mut bits = i;
        while bits != 0 {
            let q = bits.trailing_zeros() as usize;
            j |= 1 << self.map[q];
            bits &= bits - 1;
        }
        j
    }

    /// Inverse of [`amplitude_index`](Self::amplitude_index).
    #[inline]
    pub fn basis_index(&self, j: usize) -> usize {
        let mut i = 0usize;
        let mut bits = j;
        while bits != 0 {
            let p = bits.trailing_zeros() as usize;
            i |= 1 << self.inv[p];
            bits &= bits - 1;
        }
        i
    }
}

impl fmt::Debug for QubitPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QubitPermutation({self})")
    }
}

/// Comma-separated image list, the form used by `PERMUTE` lines.
impl fmt::Display for QubitPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (q, p) in self.map.iter().enumerate() {
            if q > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Free-function form of [`QubitPermutation::amplitude_index`].
pub fn amplitude_index(i: usize, sigma: &QubitPermutation) -> usize {
    sigma.amplitude_index(i)
}

/// How `n` qubits split between `m` local positions and `n - m` global ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShardConfig {
    num_qubits: usize,
    num_local: usize,
}

impl ShardConfig {
    /// `k` shards; `k` must be a power of two with `log2(k) < n`.
    pub fn new(num_qubits: usize, num_shards: u64) -> Result<Self> {
        if num_shards == 0 || !num_shards.is_power_of_two() {
            return Err(Error::InvalidShardConfig(format!(
                "shard count {num_shards} is not a power of two"
            )));
        }
        let global = num_shards.trailing_zeros() as usize;
        if global >= num_qubits {
            return Err(Error::InvalidShardConfig(format!(
                "{num_shards} shards leave no local qubit out of {num_qubits}"
            )));
        }
        Ok(Self {
            num_qubits,
            num_local: num_qubits - global,
        })
    }

    /// `m` local qubits out of `n`.
    pub fn with_local(num_qubits: usize, num_local: usize) -> Result<Self> {
        if num_local == 0 || num_local > num_qubits {
            return Err(Error::InvalidShardConfig(format!(
                "local qubit count {num_local} must lie in [1, {num_qubits}]"
            )));
        }
        if num_qubits - num_local >= 64 {
            return Err(Error::InvalidShardConfig(format!(
                "{} global qubits is more than a 64-bit shard index holds",
                num_qubits - num_local
            )));
        }
        Ok(Self {
            num_qubits,
            num_local,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// `m`.
    pub fn num_local(&self) -> usize {
        self.num_local
    }

    pub fn num_global(&self) -> usize {
        self.num_qubits - self.num_local
    }

    /// `k = 2^(n - m)`.
    pub fn num_shards(&self) -> u64 {
        1u64 << self.num_global()
    }

    pub fn is_local_position(&self, p: usize) -> bool {
        p < self.num_local
    }
}

pub fn is_local(q: usize, sigma: &QubitPermutation, cfg: &ShardConfig) -> bool {
    sigma.position(q) < cfg.num_local()
}

/// A gate moves data between shards iff its target sits at a global
/// position. The control's placement never matters: a global control only
/// selects which shards take part.
pub fn needs_communication(gate: &Gate, sigma: &QubitPermutation, cfg: &ShardConfig) -> bool {
    !is_local(gate.target(), sigma, cfg)
}

/// The three stages a layout change `σ → σ'` is executed in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermuteSteps {
    /// Layout after reordering positions `< m` among themselves.
    pub after_local: QubitPermutation,
    /// Layout after reordering positions `>= m` among themselves.
    pub after_global: QubitPermutation,
    /// Disjoint `(local position, global position)` exchanges taking
    /// `after_global` to the target layout, sorted by local position.
    pub exchanges: Vec<(usize, usize)>,
}

impl PermuteSteps {
    pub fn local_changed(&self, from: &QubitPermutation) -> bool {
        self.after_local != *from
    }

    pub fn global_changed(&self) -> bool {
        self.after_global != self.after_local
    }
}

/// Splits `σ → σ'` into an in-shard reorder, a shard relabeling and a set of
/// disjoint local/global exchanges.
///
/// Qubits that stay local keep to the local half through steps 1 and 2 and
/// land directly on their final position; likewise for qubits that stay
/// global. Each qubit leaving the local half is paired with one entering it:
/// step 1 parks the leaving qubit on its partner's final local position and
/// step 2 parks the entering qubit on the leaving qubit's final global
/// position, so step 3 is one exchange per pair. Pairs that need no parking
/// are matched first, which keeps a single local/global swap free of steps
/// 1 and 2.
pub fn decompose_permutation(
    from: &QubitPermutation,
    to: &QubitPermutation,
    cfg: &ShardConfig,
) -> Result<PermuteSteps> {
    let n = cfg.num_qubits();
    for sigma in [from, to] {
        if sigma.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: sigma.len(),
            });
        }
    }
    let m = cfg.num_local();
    let local_from = |q: usize| from.position(q) < m;
    let local_to = |q: usize| to.position(q) < m;

    // Qubits ordered by their current position.
    let leaving: Vec<usize> = (0..m)
        .map(|p| from.qubit_at(p))
        .filter(|&q| !local_to(q))
        .collect();
    let entering: Vec<usize> = (m..n)
        .map(|p| from.qubit_at(p))
        .filter(|&q| local_to(q))
        .collect();
    debug_assert_eq!(leaving.len(), entering.len());

    let mut partner_of_leaving = vec![None; leaving.len()];
    let mut entering_taken = vec![false; entering.len()];
    let entering_slot = |q: usize| entering.iter().position(|&e| e == q);

    // Pass 0: a plain swap, both sides already in place.
    // Pass 1: leaving qubit already sits where its partner ends up.
    // Pass 2: entering qubit already sits where its partner ends up.
    for pass in 0..3 {
        for (li, &lq) in leaving.iter().enumerate() {
            if partner_of_leaving[li].is_some() {
                continue;
            }
            let via_local = to.qubit_at(from.position(lq));
            let via_global = from.qubit_at(to.position(lq));
            let candidate = match pass {
                0 if via_local == via_global => Some(via_local),
                1 => Some(via_local),
                2 => Some(via_global),
                _ => None,
            };
            if let Some(eq) = candidate {
                if let Some(ei) = entering_slot(eq) {
                    if !entering_taken[ei] {
                        entering_taken[ei] = true;
                        partner_of_leaving[li] = Some(ei);
                    }
                }
            }
        }
    }
    let mut free = (0..entering.len()).filter(|&ei| !entering_taken[ei]);
    for slot in partner_of_leaving.iter_mut().filter(|s| s.is_none()) {
        *slot = free.next();
    }

    let mut after_local = from.as_slice().to_vec();
    for (q, slot) in after_local.iter_mut().enumerate() {
        if local_from(q) && local_to(q) {
            *slot = to.position(q);
        }
    }
    let mut exchanges = Vec::with_capacity(leaving.len());
    for (li, &lq) in leaving.iter().enumerate() {
        let eq = entering[partner_of_leaving[li].expect("every leaving qubit is paired")];
        after_local[lq] = to.position(eq);
        exchanges.push((to.position(eq), to.position(lq)));
    }
    let mut after_global = after_local.clone();
    for (q, slot) in after_global.iter_mut().enumerate() {
        if !local_from(q) && !local_to(q) {
            *slot = to.position(q);
        }
    }
    for (li, &lq) in leaving.iter().enumerate() {
        let eq = entering[partner_of_leaving[li].unwrap()];
        after_global[eq] = to.position(lq);
    }
    exchanges.sort_unstable();

    Ok(PermuteSteps {
        after_local: QubitPermutation::from_map(after_local)?,
        after_global: QubitPermutation::from_map(after_global)?,
        exchanges,
    })
}

/// Which of the three stages a layout change exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermutationDistance {
    pub local_changed: bool,
    pub global_changed: bool,
    pub num_pairs: usize,
}

pub fn permutation_distance(
    from: &QubitPermutation,
    to: &QubitPermutation,
    cfg: &ShardConfig,
) -> Result<PermutationDistance> {
    let steps = decompose_permutation(from, to, cfg)?;
    Ok(PermutationDistance {
        local_changed: steps.local_changed(from),
        global_changed: steps.global_changed(),
        num_pairs: steps.exchanges.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn perm(map: &[usize]) -> QubitPermutation {
        QubitPermutation::from_map(map.to_vec()).unwrap()
    }

    /// Checks the three stage contracts by brute force over positions.
    fn check_contracts(from: &QubitPermutation, to: &QubitPermutation, cfg: &ShardConfig) {
        let m = cfg.num_local();
        let n = cfg.num_qubits();
        let s = decompose_permutation(from, to, cfg).unwrap();
        let step1 = from.transition_to(&s.after_local);
        let step2 = s.after_local.transition_to(&s.after_global);
        let step3 = s.after_global.transition_to(to);
        for p in 0..n {
            if p >= m {
                assert_eq!(step1[p], p, "step 1 moved global position {p}");
            } else {
                assert!(step1[p] < m);
                assert_eq!(step2[p], p, "step 2 moved local position {p}");
            }
        }
        let mut seen = vec![false; n];
        for p in 0..n {
            if step3[p] != p {
                let other = step3[p];
                assert_eq!(step3[other], p, "step 3 is not an involution at {p}");
                assert!(
                    (p < m) != (other < m),
                    "step 3 pair {p},{other} not local/global"
                );
                assert!(!seen[p]);
                seen[p] = true;
            }
        }
        let pairs: Vec<(usize, usize)> = (0..m)
            .filter(|&p| step3[p] != p)
            .map(|p| (p, step3[p]))
            .collect();
        assert_eq!(pairs, s.exchanges);
        // Composition as position maps.
        for p in 0..n {
            assert_eq!(step3[step2[step1[p]]], to.position(from.qubit_at(p)));
        }
    }

    #[test]
    fn parses_and_rejects() {
        assert!(QubitPermutation::from_map(vec![0, 0]).is_err());
        assert!(QubitPermutation::from_map(vec![0, 2]).is_err());
        let p = perm(&[2, 0, 1]);
        assert_eq!(p.qubit_at(2), 0);
        assert_eq!(p.to_string(), "2,0,1");
        assert_eq!(p.inverse().as_slice(), &[1, 2, 0]);
    }

    #[test]
    fn amplitude_index_examples() {
        assert_eq!(QubitPermutation::identity(3).amplitude_index(5), 5);
        // i = 5 has i0 = 1, i2 = 1; σ(0) = 2, σ(2) = 1 → 4 + 2.
        assert_eq!(perm(&[2, 0, 1]).amplitude_index(5), 6);
    }

    #[test]
    fn low_positions_stay_in_one_shard() {
        let cfg = ShardConfig::new(35, 128).unwrap();
        assert_eq!(cfg.num_local(), 28);
        let sigma = QubitPermutation::identity(35);
        let i = (1usize << 28) - 1;
        assert_eq!(sigma.amplitude_index(i) >> cfg.num_local(), 0);
        assert_eq!(sigma.amplitude_index(1 << 28) >> cfg.num_local(), 1);
    }

    #[test]
    fn shard_config_validation() {
        assert!(ShardConfig::new(4, 3).is_err());
        assert!(ShardConfig::new(4, 16).is_err());
        assert!(ShardConfig::new(4, 0).is_err());
        assert_eq!(ShardConfig::new(4, 1).unwrap().num_local(), 4);
        assert!(ShardConfig::with_local(4, 0).is_err());
        assert_eq!(ShardConfig::with_local(50, 40).unwrap().num_shards(), 1024);
    }

    #[test]
    fn locality_examples() {
        let cfg = ShardConfig::with_local(4, 2).unwrap();
        let id = QubitPermutation::identity(4);
        assert!(is_local(1, &id, &cfg));
        assert!(!is_local(2, &id, &cfg));
        let swapped = id.with_positions_swapped(0, 3);
        assert!(is_local(3, &swapped, &cfg));
        assert!(!is_local(0, &swapped, &cfg));
    }

    #[test]
    fn communication_follows_target() {
        let cfg = ShardConfig::with_local(35, 28).unwrap();
        let id = QubitPermutation::identity(35);
        assert!(needs_communication(&Gate::h(28), &id, &cfg));
        assert!(!needs_communication(&Gate::h(27), &id, &cfg));
        assert!(!needs_communication(&Gate::cnot(30, 3), &id, &cfg));
        assert!(needs_communication(&Gate::cnot(3, 30), &id, &cfg));
    }

    #[test]
    fn identity_change_is_empty() {
        let cfg = ShardConfig::with_local(5, 3).unwrap();
        let sigma = perm(&[4, 2, 0, 1, 3]);
        let s = decompose_permutation(&sigma, &sigma, &cfg).unwrap();
        assert_eq!(s.after_local, sigma);
        assert_eq!(s.after_global, sigma);
        assert!(s.exchanges.is_empty());
        let d = permutation_distance(&sigma, &sigma, &cfg).unwrap();
        assert_eq!(
            d,
            PermutationDistance {
                local_changed: false,
                global_changed: false,
                num_pairs: 0
            }
        );
    }

    #[test]
    fn single_swap_is_one_exchange() {
        let cfg = ShardConfig::with_local(4, 2).unwrap();
        let id = QubitPermutation::identity(4);
        let target = id.with_positions_swapped(0, 3);
        let s = decompose_permutation(&id, &target, &cfg).unwrap();
        assert_eq!(s.after_local, id);
        assert_eq!(s.after_global, id);
        assert_eq!(s.exchanges, vec![(0, 3)]);
        check_contracts(&id, &target, &cfg);
    }

    #[test]
    fn local_reversal_is_step_one_only() {
        let cfg = ShardConfig::with_local(6, 4).unwrap();
        let id = QubitPermutation::identity(6);
        let target = perm(&[3, 2, 1, 0, 4, 5]);
        let d = permutation_distance(&id, &target, &cfg).unwrap();
        assert_eq!(
            (d.local_changed, d.global_changed, d.num_pairs),
            (true, false, 0)
        );
    }

    /// Alternating local/global cycle: position chasing alone would leave a
    /// 4-cycle for the exchange stage.
    #[test]
    fn alternating_cycle_still_gives_transpositions() {
        let cfg = ShardConfig::with_local(4, 2).unwrap();
        let id = QubitPermutation::identity(4);
        // 0 -> 2 -> 1 -> 3 -> 0 as a position map.
        let target = perm(&[2, 3, 1, 0]);
        check_contracts(&id, &target, &cfg);
        assert_eq!(
            decompose_permutation(&id, &target, &cfg)
                .unwrap()
                .exchanges
                .len(),
            2
        );
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let cfg = ShardConfig::with_local(4, 2).unwrap();
        let r = decompose_permutation(
            &QubitPermutation::identity(4),
            &QubitPermutation::identity(5),
            &cfg,
        );
        assert!(matches!(r, Err(Error::SizeMismatch { .. })));
    }

    fn arb_perm(n: usize) -> impl Strategy<Value = QubitPermutation> {
        Just((0..n).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_map(|v| QubitPermutation::from_map(v).unwrap())
    }

    fn arb_case() -> impl Strategy<Value = (QubitPermutation, QubitPermutation, ShardConfig)> {
        (1usize..=12).prop_flat_map(|n| {
            (arb_perm(n), arb_perm(n), 1..=n)
                .prop_map(move |(a, b, m)| (a, b, ShardConfig::with_local(n, m).unwrap()))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn decomposition_contracts((from, to, cfg) in arb_case()) {
            check_contracts(&from, &to, &cfg);
        }

        #[test]
        fn amplitude_index_is_a_bijection(sigma in (1usize..=10).prop_flat_map(arb_perm)) {
            let n = sigma.len();
            let mut seen = vec![false; 1 << n];
            for i in 0..(1usize << n) {
                let j = sigma.amplitude_index(i);
                prop_assert!(!seen[j]);
                seen[j] = true;
                prop_assert_eq!(sigma.basis_index(j), i);
            }
        }

        #[test]
        fn indexing_composes(
            (a, b) in (1usize..=10).prop_flat_map(|n| (arb_perm(n), arb_perm(n))),
            seed in any::<u64>(),
        ) {
            let i = (seed as usize) & ((1usize << a.len()) - 1);
            // Relabel the bits of i by b, then index by a.
            let relabeled = b.amplitude_index(i);
            prop_assert_eq!(a.amplitude_index(relabeled), a.compose(&b).amplitude_index(i));
        }

        #[test]
        fn locality_partitions_qubits((sigma, _, cfg) in arb_case()) {
            let local = (0..cfg.num_qubits()).filter(|&q| is_local(q, &sigma, &cfg)).count();
            prop_assert_eq!(local, cfg.num_local());
        }
    }
}
