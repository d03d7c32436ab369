//! Proper orthogonal decomposition by the method of snapshots.
//!
//! With snapshots `s_1..s_Nt` and the volume-weighted inner product, the
//! correlation matrix is `C_ij = <s_i, s_j> / Nt`. Its eigenpairs
//! `(lambda_k, c_k)` give modes `phi_k = S c_k / sqrt(Nt lambda_k)`, which have
//! unit weighted norm, and `Nt sum_{k>N} lambda_k` is the squared residual of
//! projecting the snapshots onto the first `N` modes.

use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;
use crate::mesh_fields::{Field, StructuredMesh, Value};
use crate::scalar::Real;

/// Eigenvalues at or below this fraction of the largest one are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotMatrix<V: Value> {
    pub columns: Vec<Field<V>>,
    /// Cell volumes.
    pub weights: Vec<V::Scalar>,
}

impl<V: Value> SnapshotMatrix<V> {
    pub fn new(mesh: &StructuredMesh<V::Scalar>, columns: Vec<Field<V>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Config("snapshot matrix needs at least one column".into()));
        }
        for c in &columns {
            check_len("snapshot column", mesh.n_cells(), c.len())?;
        }
        Ok(Self {
            columns,
            weights: (0..mesh.n_cells()).map(|c| mesh.cell_volume(c)).collect(),
        })
    }

    pub fn n_snapshots(&self) -> usize {
        self.columns.len()
    }

    pub fn dot(&self, a: &Field<V>, b: &Field<V>) -> V::Scalar {
        a.values
            .iter()
            .zip(&b.values)
            .zip(&self.weights)
            .map(|((x, y), &w)| w * x.dot(*y))
            .sum()
    }
}

/// `(1/Nt) S^T W S`.
pub fn correlation_matrix<T: Real, V: Value<Scalar = T>>(s: &SnapshotMatrix<V>) -> Result<Matrix<T>>
{
    let n = s.n_snapshots();
    if n == 0 {
        return Err(Error::Config("empty snapshot matrix".into()));
    }
    let inv = T::one() / T::of_usize(n);
    let mut c = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = s.dot(&s.columns[i], &s.columns[j]) * inv;
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PodBasis<V: Value> {
    pub modes: Vec<Field<V>>,
    /// Full descending spectrum, negatives clipped to zero.
    pub eigenvalues: Vec<V::Scalar>,
}

impl<V: Value> PodBasis<V> {
    pub fn rank(&self) -> usize {
        self.modes.len()
    }
}

/// Number of eigenvalues above the rank tolerance.
pub fn numerical_rank<T: Real>(lambda: &[T]) -> usize {
    let top = lambda.first().copied().unwrap_or(T::zero());
    if !(top > T::zero()) {
        return 0;
    }
    lambda.iter().take_while(|&&l| l > T::lit(RANK_TOLERANCE) * top).count()
}

/// Modes of the `n` largest eigenvalues, orthonormal in the weighted product.
pub fn compute_basis<T: Real, V: Value<Scalar = T>>(s: &SnapshotMatrix<V>, n: usize) -> Result<PodBasis<V>>
{
    let c = correlation_matrix(s)?;
    let (mut lambda, vecs) = c.symmetric_eigen()?;
    for l in lambda.iter_mut() {
        if *l < T::zero() {
            *l = T::zero();
        }
    }
    let rank = numerical_rank(&lambda);
    if n == 0 || n > rank {
        return Err(Error::Numerical(format!(
            "requested {n} POD modes but the snapshot set has numerical rank {rank} (usable: 1..={rank})"
        )));
    }
    let nt = s.n_snapshots();
    let len = s.columns[0].len();
    let mut modes: Vec<Field<V>> = Vec::with_capacity(n);
    for k in 0..n {
        let scale = T::one() / (T::of_usize(nt) * lambda[k]).sqrt();
        let mut m = Field::zeros(len);
        for (i, col) in s.columns.iter().enumerate() {
            m.axpy(vecs[(i, k)] * scale, col)?;
        }
        modes.push(m);
    }
    orthonormalize(s, &mut modes)?;
    Ok(PodBasis {
        modes,
        eigenvalues: lambda,
    })
}

/// Two passes of modified Gram-Schmidt in the weighted product. The modes are
/// already orthonormal in exact arithmetic; this removes round-off drift in
/// the modes of small eigenvalues without changing the span.
fn orthonormalize<T: Real, V: Value<Scalar = T>>(s: &SnapshotMatrix<V>, modes: &mut [Field<V>]) -> Result<()>
{
    for _ in 0..2 {
        for k in 0..modes.len() {
            for j in 0..k {
                let (head, tail) = modes.split_at_mut(k);
                let r = s.dot(&head[j], &tail[0]);
                tail[0].axpy(-r, &head[j])?;
            }
            let nrm = s.dot(&modes[k], &modes[k]).sqrt();
            if !(nrm > T::zero()) {
                return Err(Error::Numerical(format!("POD mode {k} vanished during orthonormalization")));
            }
            modes[k] = modes[k].scaled(T::one() / nrm);
        }
    }
    Ok(())
}

/// Smallest `N` whose cumulative energy fraction reaches `delta`.
pub fn select_rank<T: Real>(lambda: &[T], delta: T) -> Result<usize> {
    if !(delta > T::zero() && delta <= T::one()) {
        return Err(Error::Config(format!("energy threshold must lie in (0, 1], got {delta}")));
    }
    let total: T = lambda.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::Numerical("all-zero spectrum has no energy to retain".into()));
    }
    if delta == T::one() {
        return Ok(lambda.len());
    }
    let mut acc = T::zero();
    for (k, &l) in lambda.iter().enumerate() {
        acc += l;
        if acc / total >= delta {
            return Ok(k + 1);
        }
    }
    Ok(lambda.len())
}

/// `sum_{i > n} lambda_i`.
pub fn truncation_energy<T: Real>(lambda: &[T], n: usize) -> T {
    lambda.iter().skip(n).copied().sum()
}

/// Weighted squared residual `sum_i ||s_i - P s_i||^2` of projecting every
/// snapshot onto the span of orthonormal `modes`.
pub fn projection_residual<T: Real, V: Value<Scalar = T>>(s: &SnapshotMatrix<V>, modes: &[Field<V>]) -> Result<T>
{
    let mut total = T::zero();
    for col in &s.columns {
        let mut r = col.clone();
        for m in modes {
            let c = s.dot(col, m);
            r.axpy(-c, m)?;
        }
        total += s.dot(&r, &r);
    }
    Ok(total)
}

/// `spectrum.txt` body: index, eigenvalue, cumulative energy fraction.
pub fn spectrum_string<T: Real>(lambda: &[T]) -> String {
    use crate::linalg::textio::fmt_real;
    let total: T = lambda.iter().copied().sum();
    let mut s = String::from(
        "# correlation eigenvalues of (1/Nt) S^T W S; modes = S c / sqrt(Nt lambda), unit weighted norm\n# index lambda cumulative\n",
    );
    let mut acc = T::zero();
    for (k, &l) in lambda.iter().enumerate() {
        acc += l;
        let frac = if total > T::zero() { acc / total } else { T::zero() };
        s.push_str(&format!("{} {} {}\n", k + 1, fmt_real(l), fmt_real(frac)));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh_fields::{ScalarField, VectorField};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mesh() -> StructuredMesh<f64> {
        StructuredMesh::new(6, 4, [0.0, 0.0], [3.0, 1.0], 1).unwrap()
    }

    fn random_scalar(rng: &mut ChaCha8Rng, n: usize) -> ScalarField<f64> {
        ScalarField::from_values((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    #[test]
    fn single_snapshot_gram() {
        let m = mesh();
        let s = ScalarField::from_values((0..24).map(|i| i as f64).collect());
        let sm = SnapshotMatrix::new(&m, vec![s.clone()]).unwrap();
        let c = correlation_matrix(&sm).unwrap();
        assert_eq!(c.rows(), 1);
        assert!((c[(0, 0)] - sm.dot(&s, &s)).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_pair_gives_half_identity() {
        let m = mesh();
        let vol = m.cell_volume(0);
        let mut a = vec![0.0; 24];
        let mut b = vec![0.0; 24];
        a[0] = 1.0 / vol.sqrt();
        b[5] = 1.0 / vol.sqrt();
        let sm = SnapshotMatrix::new(&m, vec![ScalarField::from_values(a), ScalarField::from_values(b)]).unwrap();
        let c = correlation_matrix(&sm).unwrap();
        assert!((c[(0, 0)] - 0.5).abs() < 1e-15 && (c[(1, 1)] - 0.5).abs() < 1e-15);
        assert!(c[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn correlation_matches_brute_force() {
        let m = mesh();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cols: Vec<_> = (0..6).map(|_| random_scalar(&mut rng, 24)).collect();
        let sm = SnapshotMatrix::new(&m, cols.clone()).unwrap();
        let c = correlation_matrix(&sm).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let mut g = 0.0;
                for k in 0..24 {
                    g += m.cell_volume(k) * cols[i].values[k] * cols[j].values[k];
                }
                assert!((c[(i, j)] - g / 6.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn repeated_snapshot_has_one_mode() {
        let m = mesh();
        let s = VectorField::from_fn(&m, |x| [x[0], 1.0 - x[1]]);
        let sm = SnapshotMatrix::new(&m, vec![s.clone(); 4]).unwrap();
        let basis = compute_basis(&sm, 1).unwrap();
        assert_eq!(numerical_rank(&basis.eigenvalues), 1);
        let nrm = sm.dot(&s, &s).sqrt();
        for (a, b) in basis.modes[0].values.iter().zip(&s.values) {
            assert!((a[0] - b[0] / nrm).abs() < 1e-12 && (a[1] - b[1] / nrm).abs() < 1e-12);
        }
        match compute_basis(&sm, 2) {
            Err(Error::Numerical(msg)) => assert!(msg.contains("rank 1")),
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn rank_two_data() {
        let m = mesh();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f1 = random_scalar(&mut rng, 24);
        let f2 = random_scalar(&mut rng, 24);
        let cols: Vec<_> = (0..8)
            .map(|_| {
                let mut c = f1.scaled(rng.gen_range(-1.0..1.0));
                c.axpy(rng.gen_range(-1.0..1.0), &f2).unwrap();
                c
            })
            .collect();
        let sm = SnapshotMatrix::new(&m, cols).unwrap();
        let basis = compute_basis(&sm, 2).unwrap();
        let top = basis.eigenvalues[0];
        assert_eq!(basis.eigenvalues.iter().filter(|&&l| l > 1e-12 * top).count(), 2);
    }

    #[test]
    fn orthonormal_snapshots_span_the_same_space() {
        let m = mesh();
        let vol = m.cell_volume(0);
        let cols: Vec<_> = (0..3)
            .map(|k| {
                let mut v = vec![0.0; 24];
                v[k * 7] = 1.0 / vol.sqrt();
                ScalarField::from_values(v)
            })
            .collect();
        let sm = SnapshotMatrix::new(&m, cols.clone()).unwrap();
        let basis = compute_basis(&sm, 3).unwrap();
        for l in &basis.eigenvalues {
            assert!((l - 1.0 / 3.0).abs() < 1e-14);
        }
        // projectors onto both spans agree on a probe
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let probe = random_scalar(&mut rng, 24);
        let project = |modes: &[ScalarField<f64>]| {
            let mut out = ScalarField::zeros(24);
            for md in modes {
                out.axpy(sm.dot(&probe, md), md).unwrap();
            }
            out
        };
        let a = project(&cols);
        let b = project(&basis.modes);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_selection_by_energy() {
        let l = [9.0, 0.9, 0.09, 0.01];
        assert_eq!(select_rank(&l, 0.99).unwrap(), 2);
        assert_eq!(select_rank(&l, 1.0).unwrap(), 4);
        assert_eq!(select_rank(&l, 0.5).unwrap(), 1);
        assert!(select_rank(&[0.0, 0.0], 0.9).is_err());
        assert!(select_rank(&l, 0.0).is_err());
        assert_eq!(truncation_energy(&[4.0, 1.0], 1), 1.0);
        assert_eq!(truncation_energy(&[4.0, 1.0], 2), 0.0);
    }

    proptest! {
        #[test]
        fn basis_is_orthonormal_and_residual_matches_energy(seed in 0u64..1000, nt in 2usize..12) {
            let m = mesh();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cols: Vec<_> = (0..nt).map(|_| random_scalar(&mut rng, 24)).collect();
            let sm = SnapshotMatrix::new(&m, cols).unwrap();
            let rank = numerical_rank(&compute_basis(&sm, 1).unwrap().eigenvalues);
            let basis = compute_basis(&sm, rank).unwrap();
            for i in 0..rank {
                for j in 0..rank {
                    let g = sm.dot(&basis.modes[i], &basis.modes[j]);
                    let e = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((g - e).abs() < 1e-10);
                }
            }
            let total: f64 = basis.eigenvalues.iter().sum();
            let mut prev = f64::INFINITY;
            for n in 0..=rank {
                let res = projection_residual(&sm, &basis.modes[..n]).unwrap();
                let expect = nt as f64 * truncation_energy(&basis.eigenvalues, n);
                let denom = res.abs().max(expect.abs()).max(1e-14 * nt as f64 * total);
                prop_assert!((res - expect).abs() <= 1e-8 * denom, "n={} res={} expect={}", n, res, expect);
                let te = truncation_energy(&basis.eigenvalues, n);
                prop_assert!(te <= prev);
                prev = te;
            }
        }
    }
}
