//! Exact finite-groupoid kernel.
//!
//! A groupoid is a six-tuple (arrows, objects, source, target, identity,
//! inversion) with a partial associative product defined on pairs with
//! `s(g1) = t(g2)`. Everything here is finite and checked exactly, so every
//! axiom has a floating-point-free test; the gauge-groupoid instances are
//! checked by sampling in the transport layer instead.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GroupoidError {
    #[error("incompatible actions: {reason}")]
    IncompatibleActions { reason: String },
}

/// Finite groupoid with arrows and objects indexed `0..n`.
#[derive(Debug, Clone)]
pub struct FiniteGroupoid {
    pub n_objects: usize,
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    /// object -> identity arrow
    pub identity: Vec<usize>,
    /// arrow -> inverse arrow
    pub invert: Vec<usize>,
    /// (g1, g2) -> g1 g2, defined exactly when s(g1) = t(g2)
    pub compose: BTreeMap<(usize, usize), usize>,
}

impl FiniteGroupoid {
    pub fn n_arrows(&self) -> usize {
        self.source.len()
    }

    pub fn composable(&self, g1: usize, g2: usize) -> bool {
        self.source[g1] == self.target[g2]
    }

    pub fn prod(&self, g1: usize, g2: usize) -> Option<usize> {
        self.compose.get(&(g1, g2)).copied()
    }

    /// A group presented by its multiplication table, viewed as a one-object
    /// groupoid.
    pub fn from_group_table(table: &[Vec<usize>], identity: usize, inverse: &[usize]) -> FiniteGroupoid {
        let n = table.len();
        let mut compose = BTreeMap::new();
        for (i, row) in table.iter().enumerate() {
            for (j, &k) in row.iter().enumerate() {
                compose.insert((i, j), k);
            }
        }
        FiniteGroupoid {
            n_objects: 1,
            source: vec![0; n],
            target: vec![0; n],
            identity: vec![identity],
            invert: inverse.to_vec(),
            compose,
        }
    }

    /// The cyclic group Z_m as a one-object groupoid.
    pub fn cyclic(m: usize) -> FiniteGroupoid {
        let table: Vec<Vec<usize>> = (0..m).map(|i| (0..m).map(|j| (i + j) % m).collect()).collect();
        let inverse: Vec<usize> = (0..m).map(|i| (m - i) % m).collect();
        FiniteGroupoid::from_group_table(&table, 0, &inverse)
    }

    /// The one-object, one-arrow groupoid.
    pub fn unit() -> FiniteGroupoid {
        FiniteGroupoid::cyclic(1)
    }

    /// Transitive groupoid on `k` objects with vertex group Z_m:
    /// arrows are triples (to, from, h) composing by
    /// `(i <- j, h)(j <- l, h') = (i <- l, h + h')`.
    pub fn transitive(k: usize, m: usize) -> FiniteGroupoid {
        let idx = |to: usize, from: usize, h: usize| (to * k + from) * m + h;
        let n = k * k * m;
        let mut source = vec![0; n];
        let mut target = vec![0; n];
        let mut invert = vec![0; n];
        let mut compose = BTreeMap::new();
        for to in 0..k {
            for from in 0..k {
                for h in 0..m {
                    let a = idx(to, from, h);
                    source[a] = from;
                    target[a] = to;
                    invert[a] = idx(from, to, (m - h) % m);
                }
            }
        }
        for to in 0..k {
            for mid in 0..k {
                for from in 0..k {
                    for h1 in 0..m {
                        for h2 in 0..m {
                            let g1 = idx(to, mid, h1);
                            let g2 = idx(mid, from, h2);
                            compose.insert((g1, g2), idx(to, from, (h1 + h2) % m));
                        }
                    }
                }
            }
        }
        let identity = (0..k).map(|o| idx(o, o, 0)).collect();
        FiniteGroupoid { n_objects: k, source, target, identity, invert, compose }
    }

    /// Random small groupoid: a transitive groupoid with object count and
    /// vertex group drawn from the seed, at most `max_arrows` arrows.
    pub fn random(rng: &mut ChaCha8Rng, max_arrows: usize) -> FiniteGroupoid {
        loop {
            let k = rng.gen_range(1..=3);
            let m = rng.gen_range(1..=5);
            if k * k * m <= max_arrows {
                return FiniteGroupoid::transitive(k, m);
            }
        }
    }

    /// All groupoid axioms, exactly. Returns (axiom name, pass) pairs.
    pub fn axiom_table(&self) -> Vec<(String, bool)> {
        let n = self.n_arrows();
        let mut table = Vec::new();

        let mut closure = true;
        let mut st_of_product = true;
        for g1 in 0..n {
            for g2 in 0..n {
                match (self.composable(g1, g2), self.prod(g1, g2)) {
                    (true, Some(p)) => {
                        st_of_product &= self.source[p] == self.source[g2]
                            && self.target[p] == self.target[g1];
                    }
                    (true, None) | (false, Some(_)) => closure = false,
                    (false, None) => {}
                }
            }
        }
        table.push(("product defined exactly on composable pairs".into(), closure));
        table.push(("s(g1 g2) = s(g2), t(g1 g2) = t(g1)".into(), st_of_product));

        let ids_ok = (0..self.n_objects).all(|x| {
            let i = self.identity[x];
            self.source[i] == x && self.target[i] == x
        });
        table.push(("s(i(x)) = t(i(x)) = x".into(), ids_ok));

        let id_laws = (0..n).all(|g| {
            self.prod(self.identity[self.target[g]], g) == Some(g)
                && self.prod(g, self.identity[self.source[g]]) == Some(g)
        });
        table.push(("identity laws".into(), id_laws));

        let inv_st = (0..n).all(|g| {
            let gi = self.invert[g];
            self.source[gi] == self.target[g] && self.target[gi] == self.source[g]
        });
        table.push(("s(g^-1) = t(g), t(g^-1) = s(g)".into(), inv_st));

        let inv_laws = (0..n).all(|g| {
            let gi = self.invert[g];
            self.prod(gi, g) == Some(self.identity[self.source[g]])
                && self.prod(g, gi) == Some(self.identity[self.target[g]])
        });
        table.push(("two-sided inverse laws".into(), inv_laws));

        let mut assoc = true;
        'outer: for g1 in 0..n {
            for g2 in 0..n {
                if !self.composable(g1, g2) {
                    continue;
                }
                for g3 in 0..n {
                    if !self.composable(g2, g3) {
                        continue;
                    }
                    let left = self.prod(g1, g2).and_then(|p| self.prod(p, g3));
                    let right = self.prod(g2, g3).and_then(|p| self.prod(g1, p));
                    if left != right || left.is_none() {
                        assoc = false;
                        break 'outer;
                    }
                }
            }
        }
        table.push(("associativity on composable triples".into(), assoc));

        table
    }

    pub fn axioms_hold(&self) -> bool {
        self.axiom_table().iter().all(|(_, ok)| *ok)
    }
}

/// Product groupoid: componentwise structure on `arrows(G) × arrows(H)`.
pub fn product_groupoid(g: &FiniteGroupoid, h: &FiniteGroupoid) -> FiniteGroupoid {
    let ng = g.n_arrows();
    let nh = h.n_arrows();
    let arrow = |a: usize, b: usize| a * nh + b;
    let object = |x: usize, y: usize| x * h.n_objects + y;
    let n = ng * nh;
    let mut source = vec![0; n];
    let mut target = vec![0; n];
    let mut invert = vec![0; n];
    let mut compose = BTreeMap::new();
    for a in 0..ng {
        for b in 0..nh {
            let i = arrow(a, b);
            source[i] = object(g.source[a], h.source[b]);
            target[i] = object(g.target[a], h.target[b]);
            invert[i] = arrow(g.invert[a], h.invert[b]);
        }
    }
    for (&(a1, a2), &ap) in &g.compose {
        for (&(b1, b2), &bp) in &h.compose {
            compose.insert((arrow(a1, b1), arrow(a2, b2)), arrow(ap, bp));
        }
    }
    let mut identity = vec![0; g.n_objects * h.n_objects];
    for x in 0..g.n_objects {
        for y in 0..h.n_objects {
            identity[object(x, y)] = arrow(g.identity[x], h.identity[y]);
        }
    }
    FiniteGroupoid { n_objects: g.n_objects * h.n_objects, source, target, identity, invert, compose }
}

/// Opposite groupoid: swapped source/target, reversed product.
pub fn opposite_groupoid(g: &FiniteGroupoid) -> FiniteGroupoid {
    let mut compose = BTreeMap::new();
    for (&(g1, g2), &p) in &g.compose {
        compose.insert((g2, g1), p);
    }
    FiniteGroupoid {
        n_objects: g.n_objects,
        source: g.target.clone(),
        target: g.source.clone(),
        identity: g.identity.clone(),
        invert: g.invert.clone(),
        compose,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Groupoid action on a finite carrier set with momentum map.
/// For a left action the pair `(g, m)` is composable when `s(g) = J(m)` and
/// `J(g m) = t(g)`; a right action swaps source and target.
#[derive(Clone)]
pub struct GroupoidAction {
    pub groupoid: FiniteGroupoid,
    pub carrier: usize,
    pub momentum: Vec<usize>,
    pub side: Side,
    /// (arrow, m) -> m', defined exactly on the composable set.
    pub act: BTreeMap<(usize, usize), usize>,
}

impl GroupoidAction {
    fn anchor_in(&self, g: usize) -> usize {
        match self.side {
            Side::Left => self.groupoid.source[g],
            Side::Right => self.groupoid.target[g],
        }
    }

    fn anchor_out(&self, g: usize) -> usize {
        match self.side {
            Side::Left => self.groupoid.target[g],
            Side::Right => self.groupoid.source[g],
        }
    }

    pub fn composable(&self, g: usize, m: usize) -> bool {
        self.anchor_in(g) == self.momentum[m]
    }

    pub fn apply(&self, g: usize, m: usize) -> Option<usize> {
        self.act.get(&(g, m)).copied()
    }

    /// The action axioms, exactly: momentum covariance, associativity with
    /// the groupoid product, identity law, and domain closure.
    pub fn axiom_table(&self) -> Vec<(String, bool)> {
        let ng = self.groupoid.n_arrows();
        let mut table = Vec::new();

        let mut closure = true;
        let mut covariance = true;
        for g in 0..ng {
            for m in 0..self.carrier {
                match (self.composable(g, m), self.apply(g, m)) {
                    (true, Some(out)) => {
                        covariance &= self.momentum[out] == self.anchor_out(g);
                    }
                    (true, None) | (false, Some(_)) => closure = false,
                    (false, None) => {}
                }
            }
        }
        table.push(("action defined exactly on the momentum-matched set".into(), closure));
        table.push(("J(g·m) matches the arrow anchor".into(), covariance));

        let mut assoc = true;
        'outer: for g1 in 0..ng {
            for g2 in 0..ng {
                let (outer, inner) = match self.side {
                    // g1 (g2 m) = (g1 g2) m
                    Side::Left => (g1, g2),
                    // (m g1) g2 = m (g1 g2)
                    Side::Right => (g2, g1),
                };
                if !self.groupoid.composable(g1, g2) {
                    continue;
                }
                let prod = self.groupoid.prod(g1, g2).unwrap();
                for m in 0..self.carrier {
                    if !self.composable(inner, m) {
                        continue;
                    }
                    let step = self.apply(inner, m).unwrap();
                    let lhs = self.apply(outer, step);
                    let rhs = self.apply(prod, m);
                    if lhs != rhs || lhs.is_none() {
                        assoc = false;
                        break 'outer;
                    }
                }
            }
        }
        table.push(("compatibility with the groupoid product".into(), assoc));

        let id_law = (0..self.carrier).all(|m| {
            let id = self.groupoid.identity[self.momentum[m]];
            self.apply(id, m) == Some(m)
        });
        table.push(("identity law".into(), id_law));

        table
    }

    pub fn axioms_hold(&self) -> bool {
        self.axiom_table().iter().all(|(_, ok)| *ok)
    }
}

/// Which of the four generalized conjugations of `G` to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConjugationVariant {
    /// right action, `Psi(g3; g1, g2) = g2^{-1} g3 g1`, momentum `(s, t)`
    Right,
    /// right action, `Psi(g3; g1, g2) = g1^{-1} g3 g2`, momentum `(t, s)`
    RightBar,
    /// left action, `Psi(g1, g2; g3) = g2 g3 g1^{-1}`, momentum `(s, t)`
    Left,
    /// left action, `Psi(g1, g2; g3) = g1 g3 g2^{-1}`, momentum `(t, s)`
    LeftBar,
}

/// Generalized conjugation: an action of the product groupoid `G²` on the
/// arrow set of `G`.
pub fn generalized_conjugation_action(
    g: &FiniteGroupoid,
    variant: ConjugationVariant,
) -> GroupoidAction {
    let g2 = product_groupoid(g, g);
    let n = g.n_arrows();
    let pair_object = |a: usize, b: usize| a * g.n_objects + b;
    let momentum: Vec<usize> = (0..n)
        .map(|a| match variant {
            ConjugationVariant::Right | ConjugationVariant::Left => {
                pair_object(g.source[a], g.target[a])
            }
            ConjugationVariant::RightBar | ConjugationVariant::LeftBar => {
                pair_object(g.target[a], g.source[a])
            }
        })
        .collect();
    let side = match variant {
        ConjugationVariant::Right | ConjugationVariant::RightBar => Side::Right,
        ConjugationVariant::Left | ConjugationVariant::LeftBar => Side::Left,
    };

    let mut act = BTreeMap::new();
    for g1 in 0..n {
        for gg2 in 0..n {
            let pair = g1 * n + gg2;
            for g3 in 0..n {
                let value = match variant {
                    ConjugationVariant::Right => {
                        // g2^{-1} g3 g1, needs t(g1) = s(g3), t(g2) = t(g3)
                        if g.target[g1] != g.source[g3] || g.target[gg2] != g.target[g3] {
                            continue;
                        }
                        let a = g.prod(g3, g1).unwrap();
                        g.prod(g.invert[gg2], a).unwrap()
                    }
                    ConjugationVariant::RightBar => {
                        // g1^{-1} g3 g2, needs t(g1) = t(g3), t(g2) = s(g3)
                        if g.target[g1] != g.target[g3] || g.target[gg2] != g.source[g3] {
                            continue;
                        }
                        let a = g.prod(g3, gg2).unwrap();
                        g.prod(g.invert[g1], a).unwrap()
                    }
                    ConjugationVariant::Left => {
                        // g2 g3 g1^{-1}, needs s(g1) = s(g3), s(g2) = t(g3)
                        if g.source[g1] != g.source[g3] || g.source[gg2] != g.target[g3] {
                            continue;
                        }
                        let a = g.prod(g3, g.invert[g1]).unwrap();
                        g.prod(gg2, a).unwrap()
                    }
                    ConjugationVariant::LeftBar => {
                        // g1 g3 g2^{-1}, needs s(g1) = t(g3), s(g2) = s(g3)
                        if g.source[g1] != g.target[g3] || g.source[gg2] != g.source[g3] {
                            continue;
                        }
                        let a = g.prod(g3, g.invert[gg2]).unwrap();
                        g.prod(g1, a).unwrap()
                    }
                };
                act.insert((pair, g3), value);
            }
        }
    }
    GroupoidAction { groupoid: g2, carrier: n, momentum, side, act }
}

/// All four generalized conjugations.
pub fn variant_conjugations(g: &FiniteGroupoid) -> Vec<(ConjugationVariant, GroupoidAction)> {
    [
        ConjugationVariant::Right,
        ConjugationVariant::RightBar,
        ConjugationVariant::Left,
        ConjugationVariant::LeftBar,
    ]
    .into_iter()
    .map(|v| (v, generalized_conjugation_action(g, v)))
    .collect()
}

/// Morphism of groupoids: arrow map + object map.
#[derive(Clone)]
pub struct GroupoidMorphism {
    pub arrow_map: Vec<usize>,
    pub object_map: Vec<usize>,
}

impl GroupoidMorphism {
    pub fn identity(g: &FiniteGroupoid) -> GroupoidMorphism {
        GroupoidMorphism {
            arrow_map: (0..g.n_arrows()).collect(),
            object_map: (0..g.n_objects).collect(),
        }
    }

    /// Commuting-square and multiplicativity checks, exactly.
    pub fn axiom_table(&self, from: &FiniteGroupoid, to: &FiniteGroupoid) -> Vec<(String, bool)> {
        let mut table = Vec::new();
        let src = (0..from.n_arrows())
            .all(|g| to.source[self.arrow_map[g]] == self.object_map[from.source[g]]);
        table.push(("source square commutes".into(), src));
        let tgt = (0..from.n_arrows())
            .all(|g| to.target[self.arrow_map[g]] == self.object_map[from.target[g]]);
        table.push(("target square commutes".into(), tgt));
        let ids = (0..from.n_objects)
            .all(|x| self.arrow_map[from.identity[x]] == to.identity[self.object_map[x]]);
        table.push(("identity square commutes".into(), ids));
        let mut mult = true;
        for (&(g1, g2), &p) in &from.compose {
            match to.prod(self.arrow_map[g1], self.arrow_map[g2]) {
                Some(q) if q == self.arrow_map[p] => {}
                _ => {
                    mult = false;
                    break;
                }
            }
        }
        table.push(("multiplicativity".into(), mult));
        table
    }

    pub fn is_morphism(&self, from: &FiniteGroupoid, to: &FiniteGroupoid) -> bool {
        self.axiom_table(from, to).iter().all(|(_, ok)| *ok)
    }
}

/// Result of an equivariance check: exact on finite instances.
#[derive(Debug, Clone)]
pub struct EquivarianceReport {
    pub checked: usize,
    pub failures: usize,
}

impl EquivarianceReport {
    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

/// Twisted-equivariance of a set map `theta: M -> N` along a groupoid
/// morphism, for actions on the same side: (i) momenta intertwine through
/// the object map, (ii) `theta(g·m) = Phi(g)·theta(m)`.
pub fn check_equivariant(
    theta: &[usize],
    morphism: &GroupoidMorphism,
    act_m: &GroupoidAction,
    act_n: &GroupoidAction,
) -> Result<EquivarianceReport, GroupoidError> {
    if act_m.side != act_n.side {
        return Err(GroupoidError::IncompatibleActions {
            reason: "actions on different sides".into(),
        });
    }
    if theta.len() != act_m.carrier {
        return Err(GroupoidError::IncompatibleActions {
            reason: format!("map domain {} != carrier {}", theta.len(), act_m.carrier),
        });
    }
    if morphism.arrow_map.len() != act_m.groupoid.n_arrows()
        || morphism.object_map.len() != act_m.groupoid.n_objects
    {
        return Err(GroupoidError::IncompatibleActions {
            reason: "morphism does not match the source groupoid".into(),
        });
    }

    let mut checked = 0;
    let mut failures = 0;
    for (m, &tm) in theta.iter().enumerate() {
        checked += 1;
        if act_n.momentum[tm] != morphism.object_map[act_m.momentum[m]] {
            failures += 1;
        }
    }
    for g in 0..act_m.groupoid.n_arrows() {
        for m in 0..act_m.carrier {
            if !act_m.composable(g, m) {
                continue;
            }
            checked += 1;
            let lhs = act_m.apply(g, m).map(|out| theta[out]);
            let rhs = act_n.apply(morphism.arrow_map[g], theta[m]);
            if lhs != rhs || lhs.is_none() {
                failures += 1;
            }
        }
    }
    Ok(EquivarianceReport { checked, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn bundled_fixtures_satisfy_axioms() {
        assert!(FiniteGroupoid::cyclic(5).axioms_hold());
        assert!(FiniteGroupoid::transitive(3, 2).axioms_hold());
        assert!(FiniteGroupoid::unit().axioms_hold());
    }

    #[test]
    fn random_groupoids_satisfy_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let g = FiniteGroupoid::random(&mut rng, 20);
            assert!(g.n_arrows() <= 20);
            assert!(g.axioms_hold());
        }
    }

    #[test]
    fn product_with_unit_is_isomorphic_copy() {
        let g = FiniteGroupoid::transitive(2, 3);
        let p = product_groupoid(&g, &FiniteGroupoid::unit());
        assert!(p.axioms_hold());
        assert_eq!(p.n_arrows(), g.n_arrows());
        // the map (a, 0) -> a is an isomorphism; indices coincide here
        let iso = GroupoidMorphism::identity(&g);
        assert!(iso.is_morphism(&p, &g));
    }

    #[test]
    fn product_arrow_count_is_cartesian() {
        let g = FiniteGroupoid::cyclic(4);
        let h = FiniteGroupoid::transitive(2, 1);
        let p = product_groupoid(&g, &h);
        assert_eq!(p.n_arrows(), g.n_arrows() * h.n_arrows());
        assert!(p.axioms_hold());
    }

    #[test]
    fn opposite_is_involutive_and_inversion_is_isomorphism() {
        let g = FiniteGroupoid::transitive(2, 3);
        let op = opposite_groupoid(&g);
        assert!(op.axioms_hold());
        let opop = opposite_groupoid(&op);
        assert_eq!(opop.source, g.source);
        assert_eq!(opop.compose, g.compose);

        // (j, id): G -> G^op is an isomorphism of groupoids
        let j = GroupoidMorphism {
            arrow_map: g.invert.clone(),
            object_map: (0..g.n_objects).collect(),
        };
        assert!(j.is_morphism(&g, &op));
    }

    #[test]
    fn opposite_of_group_is_opposite_group() {
        // For the abelian cyclic group the opposite coincides with itself.
        let g = FiniteGroupoid::cyclic(6);
        let op = opposite_groupoid(&g);
        assert_eq!(op.compose, g.compose);
    }

    #[test]
    fn right_generalized_conjugation_is_an_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..5 {
            let g = FiniteGroupoid::random(&mut rng, 20);
            let act = generalized_conjugation_action(&g, ConjugationVariant::Right);
            assert!(act.axioms_hold(), "axiom table: {:?}", act.axiom_table());
        }
    }

    #[test]
    fn all_four_conjugations_are_actions() {
        let g = FiniteGroupoid::transitive(2, 2);
        for (variant, act) in variant_conjugations(&g) {
            assert!(act.axioms_hold(), "variant {variant:?} failed: {:?}", act.axiom_table());
        }
    }

    #[test]
    fn conjugation_by_identities_fixes_arrows() {
        let g = FiniteGroupoid::transitive(2, 3);
        let act = generalized_conjugation_action(&g, ConjugationVariant::Right);
        let n = g.n_arrows();
        for g3 in 0..n {
            let id_s = g.identity[g.source[g3]];
            let id_t = g.identity[g.target[g3]];
            let pair = id_s * n + id_t;
            assert_eq!(act.apply(pair, g3), Some(g3));
        }
    }

    #[test]
    fn diagonal_conjugation_on_a_group_is_ordinary_conjugation() {
        let g = FiniteGroupoid::from_group_table(
            // S3 as permutations: e, (12), (13), (23), (123), (132)
            &s3_table(),
            0,
            &[0, 1, 2, 3, 5, 4],
        );
        assert!(g.axioms_hold());
        let act = generalized_conjugation_action(&g, ConjugationVariant::Right);
        let n = g.n_arrows();
        for h in 0..n {
            for k in 0..n {
                // Psi(k; h, h) = h^{-1} k h
                let pair = h * n + h;
                let expected = g.prod(g.invert[h], g.prod(k, h).unwrap()).unwrap();
                assert_eq!(act.apply(pair, k), Some(expected));
            }
        }
        // left variant: Psi^L(h, h; k) = h k h^{-1}
        let left = generalized_conjugation_action(&g, ConjugationVariant::Left);
        for h in 0..n {
            for k in 0..n {
                let pair = h * n + h;
                let expected = g.prod(h, g.prod(k, g.invert[h]).unwrap()).unwrap();
                assert_eq!(left.apply(pair, k), Some(expected));
            }
        }
    }

    fn s3_table() -> Vec<Vec<usize>> {
        // elements: e, (12), (13), (23), (123), (132) acting on {0,1,2};
        // table[i][j] = index of perms[i] after perms[j]
        let perms: Vec<[usize; 3]> = vec![
            [0, 1, 2],
            [1, 0, 2],
            [2, 1, 0],
            [0, 2, 1],
            [1, 2, 0],
            [2, 0, 1],
        ];
        let compose = |a: &[usize; 3], b: &[usize; 3]| -> [usize; 3] {
            [a[b[0]], a[b[1]], a[b[2]]]
        };
        let mut table = vec![vec![0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                let c = compose(&perms[i], &perms[j]);
                table[i][j] = perms.iter().position(|p| *p == c).unwrap();
            }
        }
        table
    }

    #[test]
    fn identity_map_is_equivariant() {
        let g = FiniteGroupoid::transitive(2, 2);
        let act = generalized_conjugation_action(&g, ConjugationVariant::Right);
        let theta: Vec<usize> = (0..act.carrier).collect();
        let id = GroupoidMorphism::identity(&act.groupoid);
        let report = check_equivariant(&theta, &id, &act, &act).unwrap();
        assert!(report.pass());
        assert!(report.checked > 0);
    }

    #[test]
    fn constant_map_to_fixed_point_is_equivariant() {
        // Collapse morphism: every arrow to the unit groupoid acting on a
        // one-point carrier.
        let g = FiniteGroupoid::cyclic(4);
        let act = generalized_conjugation_action(&g, ConjugationVariant::Right);
        let unit = FiniteGroupoid::unit();
        let unit2 = product_groupoid(&unit, &unit);
        let mut trivial_act = GroupoidAction {
            groupoid: unit2,
            carrier: 1,
            momentum: vec![0],
            side: Side::Right,
            act: BTreeMap::new(),
        };
        trivial_act.act.insert((0, 0), 0);
        assert!(trivial_act.axioms_hold());
        let theta = vec![0; act.carrier];
        let collapse = GroupoidMorphism {
            arrow_map: vec![0; act.groupoid.n_arrows()],
            object_map: vec![0; act.groupoid.n_objects],
        };
        let report = check_equivariant(&theta, &collapse, &act, &trivial_act).unwrap();
        assert!(report.pass());
    }

    #[test]
    fn incompatible_actions_are_rejected() {
        let g = FiniteGroupoid::cyclic(2);
        let right = generalized_conjugation_action(&g, ConjugationVariant::Right);
        let left = generalized_conjugation_action(&g, ConjugationVariant::Left);
        let theta: Vec<usize> = (0..right.carrier).collect();
        let id = GroupoidMorphism::identity(&right.groupoid);
        assert!(matches!(
            check_equivariant(&theta, &id, &right, &left),
            Err(GroupoidError::IncompatibleActions { .. })
        ));
    }
}
