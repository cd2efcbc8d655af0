//! Grasp matrix of a cable-suspended rigid body, its pseudo-inverse, and
//! nullspace bases.
//!
//! The grasp matrix `G` (6 x 3n) maps the stacked world-frame cable forces to
//! the wrench on the body's center of mass: the force block is a row of 3x3
//! identities, the body-torque block for cable `i` is `S(b_i) R^T` with `b_i`
//! the body-frame anchor point and `R` the body attitude. Any force in
//! `null(G)` reshapes individual cable forces without disturbing the body;
//! a basis of that nullspace built from equal-and-opposite forces along
//! anchor-connecting lines is what the planner steers.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{skew, unit_between, Mat3, Rotation, Vec3, EPS_GEOM};

/// Relative singular-value cutoff for rank decisions (`sigma_max * RCOND`).
pub const SVD_RCOND: f64 = 1e-12;

/// Anchors closer than this to a common line make the 3-cable feasibility
/// analysis degenerate (the geometry behaves like a 2-cable system).
pub const COLLINEARITY_TOL: f64 = 1e-6;

/// Rigid body suspended by `n` cables.
#[derive(Debug, Clone)]
pub struct LoadModel {
    /// Mass, kg.
    pub mass: f64,
    /// Rotational inertia about the center of mass, body frame, kg m^2.
    pub inertia: Mat3,
    /// Body-frame cable attachment points, m.
    pub anchors: Vec<Vec3>,
    /// Viscous friction on the translational dynamics, N s/m.
    pub linear_friction: f64,
    /// Viscous friction on the rotational dynamics, N m s/rad.
    pub angular_friction: f64,
}

impl LoadModel {
    /// Validates every model invariant: positive mass, symmetric positive
    /// definite inertia, at least one anchor, and pairwise distinct anchors.
    pub fn new(
        mass: f64,
        inertia: Mat3,
        anchors: Vec<Vec3>,
        linear_friction: f64,
        angular_friction: f64,
    ) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidModel(format!("load mass must be positive, got {mass}")));
        }
        let asym = (inertia - inertia.transpose()).norm();
        if asym > 1e-9 * inertia.norm().max(1.0) {
            return Err(Error::InvalidModel("inertia matrix is not symmetric".into()));
        }
        let eig = inertia.symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::InvalidModel("inertia matrix is not positive definite".into()));
        }
        if anchors.is_empty() {
            return Err(Error::InvalidModel("at least one anchor point is required".into()));
        }
        if linear_friction < 0.0 || angular_friction < 0.0 {
            return Err(Error::InvalidModel("friction coefficients must be non-negative".into()));
        }
        for i in 0..anchors.len() {
            for j in (i + 1)..anchors.len() {
                let sep = (anchors[i] - anchors[j]).norm();
                if sep <= EPS_GEOM {
                    return Err(Error::CoincidentAnchors { i, j, separation: sep });
                }
            }
        }
        Ok(LoadModel {
            mass,
            inertia,
            anchors,
            linear_friction,
            angular_friction,
        })
    }

    /// Number of cables.
    pub fn cable_count(&self) -> usize {
        self.anchors.len()
    }

    /// True when all anchors lie within `tol` of a common line (always true
    /// for fewer than three anchors).
    pub fn anchors_collinear(&self, tol: f64) -> bool {
        let n = self.anchors.len();
        if n < 3 {
            return true;
        }
        let centroid: Vec3 = self.anchors.iter().sum::<Vec3>() / n as f64;
        let mut centered = DMatrix::zeros(3, n);
        for (k, b) in self.anchors.iter().enumerate() {
            centered.set_column(k, &(b - centroid));
        }
        let svd = centered.svd(false, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv.get(1).copied().unwrap_or(0.0) < tol
    }
}

/// Ordered set of anchor index pairs `(i, j)`, `i < j`, zero-based.
///
/// Each pair selects one internal-force direction: equal and opposite forces
/// on cables `i` and `j` along the line connecting their anchors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSet {
    pairs: Vec<(usize, usize)>,
}

impl PairSet {
    /// Validates ordering, bounds, and uniqueness for `n` cables.
    pub fn new(pairs: Vec<(usize, usize)>, n: usize) -> Result<Self> {
        for &(i, j) in &pairs {
            if i >= j || j >= n {
                return Err(Error::InvalidModel(format!(
                    "pair ({i}, {j}) is not an ordered pair of distinct cable indices below {n}"
                )));
            }
        }
        let mut seen = pairs.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != pairs.len() {
            return Err(Error::InvalidModel("duplicate pairs in pair set".into()));
        }
        Ok(PairSet { pairs })
    }

    /// All `n (n - 1) / 2` pairs in lexicographic order.
    pub fn complete(n: usize) -> Self {
        let mut pairs = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                pairs.push((i, j));
            }
        }
        PairSet { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs of pair-set entries that touch a common cable, together with
    /// that cable: `(entry_a, entry_b, shared_cable)`.
    pub fn adjacent_entries(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.pairs.len() {
            for b in (a + 1)..self.pairs.len() {
                let (i, j) = self.pairs[a];
                let (k, l) = self.pairs[b];
                for cable in [i, j] {
                    if cable == k || cable == l {
                        out.push((a, b, cable));
                    }
                }
            }
        }
        out
    }
}

/// Grasp matrix per the sketch in the module docs.
pub fn build_grasp(load: &LoadModel, attitude: &Rotation) -> DMatrix<f64> {
    let n = load.cable_count();
    let mut g = DMatrix::zeros(6, 3 * n);
    let rt = attitude.transpose();
    for (i, b) in load.anchors.iter().enumerate() {
        g.fixed_view_mut::<3, 3>(0, 3 * i).copy_from(&Mat3::identity());
        g.fixed_view_mut::<3, 3>(3, 3 * i).copy_from(&(skew(b) * rt));
    }
    g
}

/// Moore-Penrose pseudo-inverse via SVD with cutoff `sigma_max * SVD_RCOND`.
pub fn pseudo_inverse(g: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = g.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    svd.pseudo_inverse(smax * SVD_RCOND)
        .expect("svd was computed with u and v_t")
}

/// Rank of a matrix under the crate-wide singular value cutoff.
pub fn matrix_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    svd.rank(smax * SVD_RCOND)
}

/// Orthonormal basis of `null(g)` and its dimension.
///
/// The rank decision uses the SVD cutoff; the basis itself is extracted from
/// the eigenvectors of the projector onto the orthogonal complement of the
/// row space, which keeps the basis orthonormal to machine precision.
pub fn nullspace_orthonormal(g: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let cols = g.ncols();
    let svd = g.clone().svd(false, true);
    let smax = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    let cutoff = smax * SVD_RCOND;
    let v_t = svd.v_t.expect("svd computed with v_t");

    let mut projector = DMatrix::identity(cols, cols);
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            rank += 1;
            let row = v_t.row(k);
            projector -= row.transpose() * row;
        }
    }
    let nullity = cols - rank;

    let eig = projector.symmetric_eigen();
    let mut basis = DMatrix::zeros(cols, nullity);
    let mut filled = 0;
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 0.5 {
            basis.set_column(filled, &eig.eigenvectors.column(k));
            filled += 1;
        }
    }
    debug_assert_eq!(filled, nullity, "projector eigenvalues must split at 0 and 1");
    (basis, nullity)
}

/// Nullspace columns built from anchor pairs: the column for pair `(i, j)`
/// puts the world-frame unit vector along `b_i - b_j` in block `i`, its
/// negative in block `j`, and zeros elsewhere.
pub fn pairwise_nullspace(
    load: &LoadModel,
    attitude: &Rotation,
    pairs: &PairSet,
) -> Result<DMatrix<f64>> {
    let n = load.cable_count();
    let mut basis = DMatrix::zeros(3 * n, pairs.len());
    for (col, &(i, j)) in pairs.pairs().iter().enumerate() {
        let dir = unit_between(&load.anchors[i], &load.anchors[j]).map_err(|_| {
            Error::CoincidentAnchors {
                i,
                j,
                separation: (load.anchors[i] - load.anchors[j]).norm(),
            }
        })?;
        let world = attitude.rotate(&dir);
        basis.fixed_view_mut::<3, 1>(3 * i, col).copy_from(&world);
        basis.fixed_view_mut::<3, 1>(3 * j, col).copy_from(&(-world));
    }
    Ok(basis)
}

/// Selects `n` anchor pairs forming one Hamiltonian cycle over the cables,
/// so every cable is driven by exactly two internal-force components.
///
/// Deterministic for a fixed `seed`. The cycle is reported starting at cable
/// 0, walking toward its lower-numbered neighbour, each edge normalized to
/// `(min, max)`. For `n = 3` the only cycle is the complete triangle
/// `[(0,1), (1,2), (0,2)]`, matching the conventional 3-cable basis ordering.
pub fn hamiltonian_pairs(n: usize, seed: u64) -> Result<PairSet> {
    if n < 3 {
        return Err(Error::TooFewCables(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tail: Vec<usize> = (1..n).collect();
    tail.shuffle(&mut rng);
    if tail[0] > tail[n - 2] {
        tail.reverse();
    }
    let mut cycle = Vec::with_capacity(n);
    cycle.push(0);
    cycle.extend(tail);

    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let a = cycle[k];
        let b = cycle[(k + 1) % n];
        pairs.push((a.min(b), a.max(b)));
    }
    PairSet::new(pairs, n)
}

/// Number of undirected Hamiltonian cycles in the complete graph on `n`
/// vertices: `(n - 1)! / 2`. Errors on overflow (n > 35) and on `n < 3`.
pub fn count_hamiltonian_cycles(n: usize) -> Result<u128> {
    if n < 3 {
        return Err(Error::TooFewCables(n));
    }
    let mut factorial: u128 = 1;
    for k in 2..n {
        factorial = factorial.checked_mul(k as u128).ok_or_else(|| {
            Error::InvalidModel(format!("Hamiltonian cycle count overflows for n = {n}"))
        })?;
    }
    Ok(factorial / 2)
}

/// Grasp matrix and derived operators at a fixed equilibrium pose.
///
/// Immutable after construction; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct GraspSystem {
    g: DMatrix<f64>,
    g_pinv: DMatrix<f64>,
    n_pair: DMatrix<f64>,
    n_ortho: DMatrix<f64>,
    rank: usize,
    nullity: usize,
    pair_rank: usize,
    pairs: PairSet,
    position: Vec3,
    attitude: Rotation,
}

impl GraspSystem {
    /// Builds all operators for `load` held at `(position, attitude)`, with
    /// internal forces restricted to the given anchor `pairs`.
    pub fn at_equilibrium(
        load: &LoadModel,
        position: Vec3,
        attitude: Rotation,
        pairs: PairSet,
    ) -> Result<Self> {
        let g = build_grasp(load, &attitude);
        let g_pinv = pseudo_inverse(&g);
        let (n_ortho, nullity) = nullspace_orthonormal(&g);
        let n_pair = pairwise_nullspace(load, &attitude, &pairs)?;
        let pair_rank = matrix_rank(&n_pair);
        let rank = 3 * load.cable_count() - nullity;
        Ok(GraspSystem {
            g,
            g_pinv,
            n_pair,
            n_ortho,
            rank,
            nullity,
            pair_rank,
            pairs,
            position,
            attitude,
        })
    }

    /// Default pair selection: the single `(0, 1)` pair for two cables, the
    /// Hamiltonian cycle chosen by `seed` for three or more, no pairs below
    /// two cables.
    pub fn with_default_pairs(
        load: &LoadModel,
        position: Vec3,
        attitude: Rotation,
        seed: u64,
    ) -> Result<Self> {
        let n = load.cable_count();
        let pairs = match n {
            0 | 1 => PairSet::new(Vec::new(), n.max(1))?,
            2 => PairSet::new(vec![(0, 1)], 2)?,
            _ => hamiltonian_pairs(n, seed)?,
        };
        Self::at_equilibrium(load, position, attitude, pairs)
    }

    pub fn grasp_matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn grasp_pinv(&self) -> &DMatrix<f64> {
        &self.g_pinv
    }

    /// Pairwise nullspace basis (one column per selected pair).
    pub fn pair_basis(&self) -> &DMatrix<f64> {
        &self.n_pair
    }

    /// Orthonormal nullspace basis (`3n x nullity`).
    pub fn ortho_basis(&self) -> &DMatrix<f64> {
        &self.n_ortho
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn nullity(&self) -> usize {
        self.nullity
    }

    /// Effective rank of the pairwise basis; for five or more cables the
    /// complete pairwise set is rank-deficient, which is why the cycle
    /// subset is used for planning.
    pub fn pair_rank(&self) -> usize {
        self.pair_rank
    }

    pub fn pairs(&self) -> &PairSet {
        &self.pairs
    }

    pub fn position(&self) -> &Vec3 {
        &self.position
    }

    pub fn attitude(&self) -> &Rotation {
        &self.attitude
    }

    pub fn cable_count(&self) -> usize {
        self.g.ncols() / 3
    }

    /// Gravity-balancing component `G^+ w` of the stacked cable forces.
    pub fn balancing_forces(&self, wrench: &DVector<f64>) -> DVector<f64> {
        &self.g_pinv * wrench
    }
}
