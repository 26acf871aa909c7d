//! Exact enumeration of elementary vectors of the stoichiometric subspace
//! and its orthogonal complement, the combinatorial maximum of inverse
//! Precision with certificates, the algebraic inverse Precision at a fixed
//! stationary state, and the paired basis families used by the synthesis
//! construction.
//!
//! An *elementary vector* of a subspace is a nonzero vector whose support is
//! inclusion-minimal among supports of nonzero vectors of that subspace; the
//! supports are exactly the circuits of the linear matroid on the species
//! ground set (for the conservation space) and of its dual (for the
//! stoichiometric space). Enumeration is breadth-first over candidate
//! supports by cardinality, pruning supersets of circuits already found;
//! every rank test runs in exact rational arithmetic.

use crate::error::CrnError;
use crate::exact::{dot, RatMat};
use crate::network::StoichMatrix;
use crate::par::maybe_par_map;
use crate::rational::{canonicalize, rat_to_f64, Rat};
use crate::Result;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Which subspace an elementary vector lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// range(N): directions reachable by running the reactions.
    Stoichiometric,
    /// ker(N^T): coefficient vectors of conserved linear combinations.
    Conservation,
}

impl SpaceKind {
    pub fn short_name(self) -> &'static str {
        match self {
            SpaceKind::Stoichiometric => "stoich",
            SpaceKind::Conservation => "conserved",
        }
    }
}

/// A nonzero vector of inclusion-minimal support in its subspace.
///
/// Enumeration output is canonically scaled: integral coprime coordinates
/// with the first nonzero coordinate positive. Certificate witnesses are
/// rescaled copies (e.g. to a unit coordinate at the input species).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementaryVector {
    pub coords: Vec<Rat>,
    pub space: SpaceKind,
    pub support: Vec<usize>,
}

impl ElementaryVector {
    fn new(coords: Vec<Rat>, space: SpaceKind) -> Self {
        let support = coords
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(s, _)| s)
            .collect();
        ElementaryVector { coords, space, support }
    }

    /// Rescaled copy with `coords[index] == target`; None if that coordinate
    /// is zero.
    pub fn rescaled(&self, index: usize, target: &Rat) -> Option<ElementaryVector> {
        if self.coords[index].is_zero() {
            return None;
        }
        let factor = target / &self.coords[index];
        let coords = self.coords.iter().map(|x| x * &factor).collect();
        Some(ElementaryVector::new(coords, self.space))
    }

    pub fn coords_f64(&self) -> Vec<f64> {
        self.coords.iter().map(rat_to_f64).collect()
    }
}

/// Basis of the conservation space ker(M) for an arbitrary rational matrix.
pub fn kernel_basis(m: &RatMat) -> Vec<Vec<Rat>> {
    m.kernel_basis()
}

/// Basis of range(N): the maximal independent column set in index order.
pub fn stoich_range_basis(sm: &StoichMatrix) -> Vec<Vec<Rat>> {
    sm.entries
        .independent_columns()
        .into_iter()
        .map(|j| sm.entries.column(j))
        .collect()
}

/// Basis of ker(N^T), the space of conserved linear combinations.
pub fn conservation_basis(sm: &StoichMatrix) -> Vec<Vec<Rat>> {
    sm.entries.transpose().kernel_basis()
}

/// Complete list of elementary vectors of span(basis), one canonical
/// representative per circuit support, ordered by (cardinality, support).
pub fn elementary_vectors(basis: &[Vec<Rat>], space: SpaceKind) -> Vec<ElementaryVector> {
    let dim = basis.len();
    if dim == 0 {
        return Vec::new();
    }
    let n = basis[0].len();
    assert!(n <= 32, "support enumeration uses 32-bit masks");
    let mut found_masks: Vec<u32> = Vec::new();
    let mut out: Vec<ElementaryVector> = Vec::new();

    for size in 1..=n {
        let layer: Vec<Vec<usize>> = combinations(n, size)
            .into_iter()
            .filter(|c| {
                let mask = to_mask(c);
                !found_masks.iter().any(|&f| f & mask == f)
            })
            .collect();
        if layer.is_empty() {
            continue;
        }
        let hits: Vec<Option<ElementaryVector>> = maybe_par_map(&layer, |support| {
            vector_supported_within(basis, support, space)
        });
        for (support, hit) in layer.iter().zip(hits) {
            if let Some(ev) = hit {
                found_masks.push(to_mask(support));
                out.push(ev);
            }
        }
    }
    out
}

fn to_mask(support: &[usize]) -> u32 {
    support.iter().fold(0u32, |m, &s| m | (1 << s))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // advance to the next k-subset in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// If span(basis) contains a nonzero vector supported inside `support`,
/// returns it canonically scaled. Callers prune strict supersets of known
/// circuits, so a hit here has support exactly `support` and the vector is
/// unique up to scale.
fn vector_supported_within(
    basis: &[Vec<Rat>],
    support: &[usize],
    space: SpaceKind,
) -> Option<ElementaryVector> {
    let dim = basis.len();
    let n = basis[0].len();
    let in_support = {
        let mut v = vec![false; n];
        for &s in support {
            v[s] = true;
        }
        v
    };
    // coefficients y with sum_j y_j basis_j vanishing outside the support
    let outside_rows: Vec<Vec<Rat>> = (0..n)
        .filter(|s| !in_support[*s])
        .map(|s| basis.iter().map(|b| b[s].clone()).collect())
        .collect();
    let y = if outside_rows.is_empty() {
        // full-support candidate: with smaller circuits pruned first this can
        // only survive for a one-dimensional space
        if dim == 1 {
            vec![Rat::one()]
        } else {
            return None;
        }
    } else {
        RatMat::from_rows(outside_rows).kernel_basis().into_iter().next()?
    };
    finish_vector(basis, support, space, y)
}

fn finish_vector(
    basis: &[Vec<Rat>],
    support: &[usize],
    space: SpaceKind,
    y: Vec<Rat>,
) -> Option<ElementaryVector> {
    let n = basis[0].len();
    let mut v = vec![Rat::zero(); n];
    for (j, b) in basis.iter().enumerate() {
        if y[j].is_zero() {
            continue;
        }
        for s in 0..n {
            if !b[s].is_zero() {
                v[s] += &y[j] * &b[s];
            }
        }
    }
    if v.iter().all(Rat::is_zero) {
        return None;
    }
    let ev = ElementaryVector::new(canonicalize(&v), space);
    // pruning guarantees minimality, so the support must be exactly the
    // candidate; a proper subset would have been found in an earlier layer
    debug_assert_eq!(ev.support, support);
    Some(ev)
}

/// Certificate for the parameter-free maximum of inverse Precision.
///
/// `value` is the common value of the two combinatorial characterizations:
/// the best conserved-space elementary vector scaled to u_i = 1 (read off at
/// the output), and the best stoichiometric-space elementary vector scaled to
/// w_o = -1 (read off at the input). `None` witnesses stand for the zero
/// vector, used when no admissible elementary vector beats zero.
#[derive(Debug, Clone)]
pub struct InvPrecisionCertificate {
    pub value: Rat,
    pub witness_u: Option<ElementaryVector>,
    pub witness_w: Option<ElementaryVector>,
}

impl InvPrecisionCertificate {
    pub fn value_f64(&self) -> f64 {
        rat_to_f64(&self.value)
    }
}

/// Evaluates both combinatorial characterizations of the maximal inverse
/// Precision over all positive parameter points, asserts they agree, and
/// returns the value with the witnessing elementary vectors.
///
/// Ties between witnesses of equal value break toward the lexicographically
/// smallest support.
pub fn max_inv_precision(sm: &StoichMatrix, input: usize, output: usize) -> InvPrecisionCertificate {
    assert_ne!(input, output, "input and output species must differ");
    let cons = elementary_vectors(&conservation_basis(sm), SpaceKind::Conservation);
    let stoich = elementary_vectors(&stoich_range_basis(sm), SpaceKind::Stoichiometric);

    let one = Rat::one();
    let minus_one = -Rat::one();

    let mut best_u: Option<(Rat, ElementaryVector)> = None;
    for ev in &cons {
        if let Some(scaled) = ev.rescaled(input, &one) {
            let value = scaled.coords[output].clone();
            if better(&best_u, &value, &scaled) {
                best_u = Some((value, scaled));
            }
        }
    }
    let mut best_w: Option<(Rat, ElementaryVector)> = None;
    for ev in &stoich {
        if let Some(scaled) = ev.rescaled(output, &minus_one) {
            let value = scaled.coords[input].clone();
            if better(&best_w, &value, &scaled) {
                best_w = Some((value, scaled));
            }
        }
    }

    let value_u = best_u.as_ref().map(|(v, _)| v.clone()).unwrap_or_else(Rat::zero);
    let value_w = best_w.as_ref().map(|(v, _)| v.clone()).unwrap_or_else(Rat::zero);
    let value = value_u.clone().max(Rat::zero());
    let value_other = value_w.clone().max(Rat::zero());
    assert_eq!(
        value, value_other,
        "the two characterizations of max inverse Precision disagree"
    );

    let witness_u = best_u.filter(|(v, _)| *v == value && !value.is_zero()).map(|(_, ev)| ev);
    let witness_w = best_w.filter(|(v, _)| *v == value && !value.is_zero()).map(|(_, ev)| ev);
    InvPrecisionCertificate { value, witness_u, witness_w }
}

fn better(best: &Option<(Rat, ElementaryVector)>, value: &Rat, ev: &ElementaryVector) -> bool {
    match best {
        None => true,
        Some((bv, bev)) => value > bv || (value == bv && ev.support < bev.support),
    }
}

/// The unique pair (u, w) with u in the conservation space, w in the
/// stoichiometric space, and u = e_i + diag(1/cbar) w; the inverse Precision
/// at the parameter point cbar is u_o, independent of the rate vector.
#[derive(Debug, Clone)]
pub struct AlgebraicPrecision<T> {
    pub inv_precision: T,
    pub u: Vec<T>,
    pub w: Vec<T>,
}

/// Exact-arithmetic inverse Precision at a rational stationary state.
pub fn inverse_precision_algebraic_exact(
    sm: &StoichMatrix,
    cbar: &[Rat],
    input: usize,
    output: usize,
) -> AlgebraicPrecision<Rat> {
    assert_eq!(cbar.len(), sm.entries.nrows());
    let basis = conservation_basis(sm);
    let n = cbar.len();
    let m = basis.len();
    if m == 0 {
        // trivial conservation space: u = 0, w = -cbar_i e_i
        let mut w = vec![Rat::zero(); n];
        w[input] = -cbar[input].clone();
        return AlgebraicPrecision { inv_precision: Rat::zero(), u: vec![Rat::zero(); n], w };
    }
    // Gram system: (B^T diag(cbar) B) y = cbar_i * (row i of B)^T
    let mut gram = RatMat::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            let mut acc = Rat::zero();
            for s in 0..n {
                if !basis[a][s].is_zero() && !basis[b][s].is_zero() {
                    acc += &basis[a][s] * &basis[b][s] * &cbar[s];
                }
            }
            gram[(a, b)] = acc;
        }
    }
    let rhs: Vec<Rat> = (0..m).map(|a| &basis[a][input] * &cbar[input]).collect();
    let y = gram
        .solve_square(&rhs)
        .expect("conservation Gram matrix is positive definite for positive cbar");
    let mut u = vec![Rat::zero(); n];
    for (a, b) in basis.iter().enumerate() {
        for s in 0..n {
            if !b[s].is_zero() {
                u[s] += &y[a] * &b[s];
            }
        }
    }
    let w: Vec<Rat> = (0..n)
        .map(|s| {
            let delta = if s == input { &u[s] - Rat::one() } else { u[s].clone() };
            delta * &cbar[s]
        })
        .collect();
    AlgebraicPrecision { inv_precision: u[output].clone(), u, w }
}

/// Floating-point inverse Precision at a stationary state, with a residual
/// check on the defining linear conditions.
pub fn inverse_precision_algebraic(
    sm: &StoichMatrix,
    cbar: &[f64],
    input: usize,
    output: usize,
) -> Result<AlgebraicPrecision<f64>> {
    if cbar.iter().any(|&c| !(c > 0.0)) {
        return Err(CrnError::Domain("stationary state must be strictly positive".into()));
    }
    let basis = conservation_basis(sm);
    let n = cbar.len();
    let m = basis.len();
    if m == 0 {
        let mut w = vec![0.0; n];
        w[input] = -cbar[input];
        return Ok(AlgebraicPrecision { inv_precision: 0.0, u: vec![0.0; n], w });
    }
    let bf: Vec<Vec<f64>> = basis.iter().map(|b| b.iter().map(rat_to_f64).collect()).collect();
    let mut gram = nalgebra::DMatrix::<f64>::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            gram[(a, b)] = (0..n).map(|s| bf[a][s] * bf[b][s] * cbar[s]).sum();
        }
    }
    let rhs = nalgebra::DVector::from_fn(m, |a, _| bf[a][input] * cbar[input]);
    let y = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| CrnError::Numerics("singular Gram system for inverse Precision".into()))?;
    let u: Vec<f64> = (0..n).map(|s| (0..m).map(|a| y[a] * bf[a][s]).sum()).collect();
    let w: Vec<f64> = (0..n)
        .map(|s| (u[s] - if s == input { 1.0 } else { 0.0 }) * cbar[s])
        .collect();
    // residual of the orthogonality conditions, relative to the data scale
    let scale = cbar.iter().fold(1.0f64, |m, &c| m.max(c));
    for b in &bf {
        let r: f64 = (0..n).map(|s| b[s] * w[s]).sum();
        let bnorm: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r.abs() > 1e-12 * scale * bnorm.max(1.0) * (n as f64) {
            return Err(CrnError::Numerics(format!(
                "inverse-Precision solve residual {r:.3e} exceeds tolerance"
            )));
        }
    }
    Ok(AlgebraicPrecision { inv_precision: u[output], u, w })
}

/// The paired elementary-vector families attached to a conserved elementary
/// vector u*: a species set S' avoiding the input with supp(u*) ⊆ S' ∪ {i},
/// one stoichiometric family member per s in S' (unit coordinate at s,
/// support avoiding the rest of S'), and one conserved family member per s
/// outside S' (unit coordinate at s, support inside S' ∪ {s}).
#[derive(Debug, Clone)]
pub struct BasisDecomposition {
    pub sprime: Vec<usize>,
    pub w_family: BTreeMap<usize, ElementaryVector>,
    pub u_family: BTreeMap<usize, ElementaryVector>,
}

/// Builds the decomposition for an elementary conserved vector with
/// `ustar[input] != 0`. S' is grown greedily from supp(u*) \ {i} in species
/// index order, keeping the corresponding stoichiometric-matrix rows
/// independent.
pub fn basis_decomposition(
    sm: &StoichMatrix,
    ustar: &ElementaryVector,
    input: usize,
) -> Result<BasisDecomposition> {
    let n = sm.entries.nrows();
    if ustar.coords[input].is_zero() {
        return Err(CrnError::Domain(
            "the reference elementary vector must be nonzero at the input species".into(),
        ));
    }
    let all_cols: Vec<usize> = (0..sm.entries.ncols()).collect();
    let rank = sm.entries.rank();

    let mut sprime: Vec<usize> = ustar.support.iter().copied().filter(|&s| s != input).collect();
    if sm.entries.submatrix(&sprime, &all_cols).rank() != sprime.len() {
        return Err(CrnError::Domain(
            "reference vector is not elementary: its support rows are dependent".into(),
        ));
    }
    for s in 0..n {
        if s == input || sprime.contains(&s) {
            continue;
        }
        let mut trial = sprime.clone();
        trial.push(s);
        trial.sort_unstable();
        if sm.entries.submatrix(&trial, &all_cols).rank() == trial.len() {
            sprime = trial;
        }
    }
    debug_assert_eq!(sprime.len(), rank, "S' must index a row basis");

    let col_basis = sm.entries.independent_columns();
    let pivot = sm.entries.submatrix(&sprime, &col_basis);
    let pivot_inv = pivot
        .inverse()
        .expect("rows S' are independent and columns span the range, so the pivot block is invertible");
    let full = sm.entries.submatrix(&(0..n).collect::<Vec<_>>(), &col_basis);
    let shaped = full.mul_mat(&pivot_inv); // identity on the S' rows

    let scomp: Vec<usize> = (0..n).filter(|s| !sprime.contains(s)).collect();
    let mut w_family = BTreeMap::new();
    for (j, &s) in sprime.iter().enumerate() {
        let coords = shaped.column(j);
        debug_assert!(coords[s].is_one());
        w_family.insert(s, ElementaryVector::new(coords, SpaceKind::Stoichiometric));
    }
    let mut u_family = BTreeMap::new();
    for &s in &scomp {
        let mut coords = vec![Rat::zero(); n];
        coords[s] = Rat::one();
        for (j, &sp) in sprime.iter().enumerate() {
            coords[sp] = -shaped[(s, j)].clone();
        }
        u_family.insert(s, ElementaryVector::new(coords, SpaceKind::Conservation));
    }
    Ok(BasisDecomposition { sprime, w_family, u_family })
}

/// Renders elementary vectors as a TSV table: space, label, one column per
/// species.
pub fn elementary_vector_table(sm: &StoichMatrix, vectors: &[ElementaryVector]) -> String {
    use crate::rational::rat_to_string;
    let mut out = String::new();
    out.push_str("space\tlabel");
    for name in &sm.species_names {
        out.push('\t');
        out.push_str(name);
    }
    out.push('\n');
    let mut w_count = 0;
    let mut u_count = 0;
    for ev in vectors {
        let label = match ev.space {
            SpaceKind::Stoichiometric => {
                w_count += 1;
                format!("w{w_count}")
            }
            SpaceKind::Conservation => {
                u_count += 1;
                format!("u{u_count}")
            }
        };
        out.push_str(ev.space.short_name());
        out.push('\t');
        out.push_str(&label);
        for x in &ev.coords {
            out.push('\t');
            out.push_str(&rat_to_string(x));
        }
        out.push('\n');
    }
    out
}

/// Orthogonality of the two spaces: every conserved elementary vector is
/// exactly orthogonal to every stoichiometric one.
pub fn check_orthogonality(cons: &[ElementaryVector], stoich: &[ElementaryVector]) -> bool {
    cons.iter().all(|u| stoich.iter().all(|w| dot(&u.coords, &w.coords).is_zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{parse_network, stoichiometric_matrix};
    use crate::rational::{rat, ratio};

    fn net_a() -> StoichMatrix {
        stoichiometric_matrix(&parse_network("2 X1 <-> X2 + X3\nX2 <-> X3").unwrap())
    }

    fn net_c() -> StoichMatrix {
        stoichiometric_matrix(&parse_network("X1 + X2 <-> X3").unwrap())
    }

    /// Example E of the tables, in the paper's species order X1..X6.
    fn net_e() -> StoichMatrix {
        // reactions introduce species in a different order, so list X1..X6
        // through a first line ordering trick is not possible; tests key
        // vectors by species name instead.
        stoichiometric_matrix(
            &parse_network("X2 + X3 <-> X4\nX2 + 2 X5 <-> 2 X3 + X6\n2 X1 + X2 <-> X6").unwrap(),
        )
    }

    fn by_name(sm: &StoichMatrix, entries: &[(&str, i64)]) -> Vec<Rat> {
        let mut v = vec![rat(0); sm.species_names.len()];
        for (name, value) in entries {
            let idx = sm.species_names.iter().position(|n| n == name).unwrap();
            v[idx] = rat(*value);
        }
        v
    }

    #[test]
    fn conservation_basis_of_example_a_is_ones() {
        let basis = conservation_basis(&net_a());
        assert_eq!(basis.len(), 1);
        assert_eq!(canonicalize(&basis[0]), vec![rat(1), rat(1), rat(1)]);
    }

    #[test]
    fn kernel_basis_edge_cases() {
        assert!(kernel_basis(&RatMat::identity(3)).is_empty());
        assert_eq!(kernel_basis(&RatMat::zeros(1, 3)).len(), 3);
    }

    #[test]
    fn elementary_vectors_of_a_line() {
        let basis = vec![vec![rat(1), rat(0), rat(0)]];
        let evs = elementary_vectors(&basis, SpaceKind::Stoichiometric);
        assert_eq!(evs.len(), 1);
        assert_eq!(evs[0].coords, vec![rat(1), rat(0), rat(0)]);
        assert_eq!(evs[0].support, vec![0]);
    }

    #[test]
    fn example_a_elementary_vectors() {
        let sm = net_a();
        let stoich = elementary_vectors(&stoich_range_basis(&sm), SpaceKind::Stoichiometric);
        let mut coords: Vec<Vec<Rat>> = stoich.iter().map(|e| e.coords.clone()).collect();
        coords.sort();
        let mut expect = vec![
            vec![rat(1), rat(-1), rat(0)],
            vec![rat(0), rat(1), rat(-1)],
            vec![rat(1), rat(0), rat(-1)],
        ];
        expect.sort();
        assert_eq!(coords, expect);

        let cons = elementary_vectors(&conservation_basis(&sm), SpaceKind::Conservation);
        assert_eq!(cons.len(), 1);
        assert_eq!(cons[0].coords, vec![rat(1), rat(1), rat(1)]);
        assert!(check_orthogonality(&cons, &stoich));
    }

    #[test]
    fn example_e_golden_tables() {
        let sm = net_e();
        let stoich = elementary_vectors(&stoich_range_basis(&sm), SpaceKind::Stoichiometric);
        let cons = elementary_vectors(&conservation_basis(&sm), SpaceKind::Conservation);
        assert_eq!(stoich.len(), 9);
        assert_eq!(cons.len(), 9);

        let table_w: Vec<Vec<(&str, i64)>> = vec![
            vec![("X2", 1), ("X3", 1), ("X4", -1)],
            vec![("X2", 1), ("X3", -2), ("X5", 2), ("X6", -1)],
            vec![("X1", 2), ("X2", 1), ("X6", -1)],
            vec![("X1", 3), ("X4", 1), ("X5", -1), ("X6", -1)],
            vec![("X2", 3), ("X4", -2), ("X5", 2), ("X6", -1)],
            vec![("X3", 3), ("X4", -1), ("X5", -2), ("X6", 1)],
            vec![("X1", 1), ("X3", 1), ("X5", -1)],
            vec![("X1", 2), ("X3", -1), ("X4", 1), ("X6", -1)],
            vec![("X1", 1), ("X2", -1), ("X4", 1), ("X5", -1)],
        ];
        let table_u: Vec<Vec<(&str, i64)>> = vec![
            vec![("X1", 1), ("X2", -2), ("X3", 2), ("X5", 3)],
            vec![("X1", 1), ("X5", 1), ("X6", 2)],
            vec![("X1", 1), ("X2", -2), ("X4", -2), ("X5", 1)],
            vec![("X1", 1), ("X2", -2), ("X3", -1), ("X4", -3)],
            vec![("X1", 1), ("X2", 1), ("X3", -1), ("X6", 3)],
            vec![("X2", 1), ("X4", 1), ("X6", 1)],
            vec![("X2", 1), ("X3", -1), ("X5", -1), ("X6", 1)],
            vec![("X1", 1), ("X3", -1), ("X4", -1), ("X6", 2)],
            vec![("X3", 1), ("X4", 1), ("X5", 1)],
        ];
        let mut got_w: Vec<Vec<Rat>> = stoich.iter().map(|e| e.coords.clone()).collect();
        let mut want_w: Vec<Vec<Rat>> =
            table_w.iter().map(|row| canonicalize(&by_name(&sm, row))).collect();
        got_w.sort();
        want_w.sort();
        assert_eq!(got_w, want_w);

        let mut got_u: Vec<Vec<Rat>> = cons.iter().map(|e| e.coords.clone()).collect();
        let mut want_u: Vec<Vec<Rat>> =
            table_u.iter().map(|row| canonicalize(&by_name(&sm, row))).collect();
        got_u.sort();
        want_u.sort();
        assert_eq!(got_u, want_u);
    }

    #[test]
    fn no_support_contains_another() {
        for sm in [net_a(), net_c(), net_e()] {
            for (basis, kind) in [
                (stoich_range_basis(&sm), SpaceKind::Stoichiometric),
                (conservation_basis(&sm), SpaceKind::Conservation),
            ] {
                let evs = elementary_vectors(&basis, kind);
                for a in &evs {
                    for b in &evs {
                        if a.support != b.support {
                            assert!(
                                !a.support.iter().all(|s| b.support.contains(s)),
                                "support of one elementary vector contains another"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn max_inv_precision_example_a() {
        let cert = max_inv_precision(&net_a(), 0, 1);
        assert_eq!(cert.value, rat(1));
        assert_eq!(cert.witness_u.unwrap().coords, vec![rat(1), rat(1), rat(1)]);
        let w = cert.witness_w.unwrap();
        assert_eq!(w.coords[1], rat(-1));
        assert_eq!(w.coords[0], rat(1));
    }

    #[test]
    fn max_inv_precision_example_c_is_zero() {
        let cert = max_inv_precision(&net_c(), 0, 1);
        assert_eq!(cert.value, rat(0));
        assert!(cert.witness_u.is_none());
        assert!(cert.witness_w.is_none());
    }

    #[test]
    fn max_inv_precision_example_e() {
        let sm = net_e();
        let i = sm.species_names.iter().position(|n| n == "X1").unwrap();
        let o = sm.species_names.iter().position(|n| n == "X5").unwrap();
        let cert = max_inv_precision(&sm, i, o);
        assert_eq!(cert.value, rat(3));
        // witnesses: the conserved vector u1 scaled to u_i = 1, and the
        // stoichiometric vector w4 scaled to w_o = -1
        let u = cert.witness_u.unwrap();
        assert_eq!(u.coords, by_name(&sm, &[("X1", 1), ("X2", -2), ("X3", 2), ("X5", 3)]));
        let w = cert.witness_w.unwrap();
        // w4 already carries w_o = -1
        assert_eq!(w.coords, by_name(&sm, &[("X1", 3), ("X4", 1), ("X5", -1), ("X6", -1)]));
    }

    #[test]
    fn algebraic_matches_homogeneous_closed_form() {
        // unimolecular diagram: P^-1 = cbar_i / sum(cbar)
        let net = parse_network("X1 <-> X2\nX2 <-> X3\nX1 <-> X3\nX1 <-> X4\nX4 <-> X3").unwrap();
        let sm = stoichiometric_matrix(&net);
        let cbar = vec![rat(20), rat(50), rat(1), rat(20)];
        for o in 1..4 {
            let got = inverse_precision_algebraic_exact(&sm, &cbar, 0, o);
            assert_eq!(got.inv_precision, ratio(20, 91));
        }
    }

    #[test]
    fn algebraic_example_a_value() {
        let sm = net_a();
        let exact = inverse_precision_algebraic_exact(&sm, &[rat(15), rat(1), rat(10)], 0, 1);
        assert_eq!(exact.inv_precision, ratio(15, 26));
        let f = inverse_precision_algebraic(&sm, &[15.0, 1.0, 10.0], 0, 1).unwrap();
        assert!((f.inv_precision - 15.0 / 26.0).abs() < 1e-12);
        // u and w satisfy the defining relation
        for s in 0..3 {
            let e_i = if s == 0 { 1.0 } else { 0.0 };
            let lhs = f.u[s] - e_i;
            let rhs = f.w[s] / [15.0, 1.0, 10.0][s];
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn algebraic_example_b_formula() {
        // n = 3: u_o = 6/22 at the all-ones state
        let net = parse_network("3 X1 <-> X2 + X3\nX2 <-> X3").unwrap();
        let sm = stoichiometric_matrix(&net);
        let got = inverse_precision_algebraic_exact(&sm, &[rat(1), rat(1), rat(1)], 0, 2);
        assert_eq!(got.inv_precision, ratio(6, 22));
    }

    #[test]
    fn rejects_nonpositive_cbar() {
        assert!(inverse_precision_algebraic(&net_a(), &[1.0, 0.0, 1.0], 0, 1).is_err());
    }

    #[test]
    fn basis_decomposition_example_a() {
        let sm = net_a();
        let cons = elementary_vectors(&conservation_basis(&sm), SpaceKind::Conservation);
        let dec = basis_decomposition(&sm, &cons[0], 0).unwrap();
        assert_eq!(dec.sprime, vec![1, 2]);
        assert_eq!(dec.w_family[&1].coords, vec![rat(-1), rat(1), rat(0)]);
        assert_eq!(dec.w_family[&2].coords, vec![rat(-1), rat(0), rat(1)]);
        assert_eq!(dec.u_family[&0].coords, vec![rat(1), rat(1), rat(1)]);
    }

    #[test]
    fn basis_decomposition_bullets_hold_on_example_e() {
        let sm = net_e();
        let i = sm.species_names.iter().position(|n| n == "X1").unwrap();
        let cons = elementary_vectors(&conservation_basis(&sm), SpaceKind::Conservation);
        let target = canonicalize(&by_name(&sm, &[("X1", 1), ("X2", -2), ("X3", 2), ("X5", 3)]));
        let ustar = cons.iter().find(|e| e.coords == target).unwrap();
        let dec = basis_decomposition(&sm, ustar, i).unwrap();

        // bullet 1: i not in S', supp(u*) inside S' + {i}
        assert!(!dec.sprime.contains(&i));
        assert!(ustar.support.iter().all(|s| *s == i || dec.sprime.contains(s)));
        // bullet 2: the stoichiometric family
        for (&s, w) in &dec.w_family {
            assert!(w.coords[s].is_one());
            for &t in &w.support {
                assert!(t == s || !dec.sprime.contains(&t));
            }
        }
        // bullet 3: the conserved family
        for (&s, u) in &dec.u_family {
            assert!(u.coords[s].is_one());
            for &t in &u.support {
                assert!(t == s || dec.sprime.contains(&t));
            }
        }
        // family members are genuinely elementary: their supports appear in
        // the enumerated circuit lists
        let stoich = elementary_vectors(&stoich_range_basis(&sm), SpaceKind::Stoichiometric);
        for w in dec.w_family.values() {
            assert!(stoich.iter().any(|e| e.support == w.support));
        }
        for u in dec.u_family.values() {
            assert!(cons.iter().any(|e| e.support == u.support));
        }
    }

    #[test]
    fn basis_decomposition_full_support_case() {
        // a conserved vector with full support: S' = supp \ {i}
        let net = parse_network("X1 <-> X2\nX2 <-> X3").unwrap();
        let sm = stoichiometric_matrix(&net);
        let cons = elementary_vectors(&conservation_basis(&sm), SpaceKind::Conservation);
        assert_eq!(cons[0].support.len(), 3);
        let dec = basis_decomposition(&sm, &cons[0], 0).unwrap();
        assert_eq!(dec.sprime, vec![1, 2]);
    }

    #[test]
    fn exhaustive_oracle_agreement() {
        // brute force: a support C is a circuit iff some nonzero vector is
        // supported inside C and no proper subset supports one
        for sm in [net_a(), net_c(), net_e()] {
            for (basis, kind) in [
                (stoich_range_basis(&sm), SpaceKind::Stoichiometric),
                (conservation_basis(&sm), SpaceKind::Conservation),
            ] {
                let n = sm.entries.nrows();
                let dim = basis.len();
                let dim_within = |mask: u32| -> usize {
                    let rows: Vec<Vec<Rat>> = (0..n)
                        .filter(|s| mask & (1 << s) == 0)
                        .map(|s| basis.iter().map(|b| b[s].clone()).collect())
                        .collect();
                    if rows.is_empty() {
                        dim
                    } else {
                        dim - RatMat::from_rows(rows).rank()
                    }
                };
                let mut brute: Vec<Vec<usize>> = Vec::new();
                for mask in 1u32..(1 << n) {
                    if dim_within(mask) >= 1 {
                        let proper_ok = (0..n)
                            .filter(|s| mask & (1 << s) != 0)
                            .all(|s| dim_within(mask & !(1 << s)) == 0);
                        if proper_ok {
                            brute.push((0..n).filter(|s| mask & (1 << s) != 0).collect());
                        }
                    }
                }
                brute.sort();
                let mut got: Vec<Vec<usize>> =
                    elementary_vectors(&basis, kind).into_iter().map(|e| e.support).collect();
                got.sort();
                assert_eq!(got, brute);
            }
        }
    }
}
