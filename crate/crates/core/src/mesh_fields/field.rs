use std::fmt::Debug;

use num_traits::{Float, One, Zero};

use crate::error::{check_len, Error, Result};
use crate::scalar::Real;

use super::mesh::{BoundaryTag, StructuredMesh};

/// Per-cell value: a real scalar or a 2-vector.
pub trait Value: Copy + Debug + PartialEq + Send + Sync + 'static {
    type Scalar: Real;
    const COMPONENTS: usize;
    const KIND: &'static str;

    fn zeroed() -> Self;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
    fn scale(self, s: Self::Scalar) -> Self;
    fn dot(self, other: Self) -> Self::Scalar;
    fn component(self, k: usize) -> Self::Scalar;
    fn from_components(c: &[Self::Scalar]) -> Self;

    fn all_finite(self) -> bool {
        (0..Self::COMPONENTS).all(|k| self.component(k).is_finite())
    }

    fn max_abs(self) -> Self::Scalar {
        (0..Self::COMPONENTS).fold(<Self::Scalar as Zero>::zero(), |m, k| m.max(self.component(k).abs()))
    }
}

impl<T: Real> Value for T {
    type Scalar = T;
    const COMPONENTS: usize = 1;
    const KIND: &'static str = "scalar";

    #[inline]
    fn zeroed() -> Self {
        T::zero()
    }
    #[inline]
    fn add(self, other: Self) -> Self {
        self + other
    }
    #[inline]
    fn sub(self, other: Self) -> Self {
        self - other
    }
    #[inline]
    fn scale(self, s: T) -> Self {
        self * s
    }
    #[inline]
    fn dot(self, other: Self) -> T {
        self * other
    }
    #[inline]
    fn component(self, _k: usize) -> T {
        self
    }
    fn from_components(c: &[T]) -> Self {
        c[0]
    }
}

impl<T: Real> Value for [T; 2] {
    type Scalar = T;
    const COMPONENTS: usize = 2;
    const KIND: &'static str = "vector";

    #[inline]
    fn zeroed() -> Self {
        [T::zero(); 2]
    }
    #[inline]
    fn add(self, o: Self) -> Self {
        [self[0] + o[0], self[1] + o[1]]
    }
    #[inline]
    fn sub(self, o: Self) -> Self {
        [self[0] - o[0], self[1] - o[1]]
    }
    #[inline]
    fn scale(self, s: T) -> Self {
        [self[0] * s, self[1] * s]
    }
    #[inline]
    fn dot(self, o: Self) -> T {
        self[0] * o[0] + self[1] * o[1]
    }
    #[inline]
    fn component(self, k: usize) -> T {
        self[k]
    }
    fn from_components(c: &[T]) -> Self {
        [c[0], c[1]]
    }
}

/// Cell-centred field, one value per cell in mesh order.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<V> {
    pub values: Vec<V>,
}

pub type ScalarField<T> = Field<T>;
pub type VectorField<T> = Field<[T; 2]>;

impl<V: Value> Field<V> {
    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![V::zeroed(); n],
        }
    }

    pub fn from_values(values: Vec<V>) -> Self {
        Self { values }
    }

    pub fn from_fn<T: Real>(mesh: &StructuredMesh<T>, f: impl Fn([T; 2]) -> V) -> Self {
        Self {
            values: (0..mesh.n_cells()).map(|c| f(mesh.center(c))).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.all_finite())
    }

    pub fn max_abs(&self) -> V::Scalar {
        self.values
            .iter()
            .fold(<V::Scalar as Zero>::zero(), |m, v| m.max(v.max_abs()))
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: V::Scalar, other: &Self) -> Result<()> {
        check_len("field axpy", self.len(), other.len())?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a = a.add(b.scale(alpha));
        }
        Ok(())
    }

    pub fn scaled(&self, alpha: V::Scalar) -> Self {
        Self {
            values: self.values.iter().map(|v| v.scale(alpha)).collect(),
        }
    }

    /// Flat component view, `COMPONENTS` reals per cell.
    pub fn to_flat(&self) -> Vec<V::Scalar> {
        let mut out = Vec::with_capacity(self.len() * V::COMPONENTS);
        for v in &self.values {
            for k in 0..V::COMPONENTS {
                out.push(v.component(k));
            }
        }
        out
    }

    pub fn from_flat(flat: &[V::Scalar]) -> Self {
        Self {
            values: flat.chunks(V::COMPONENTS).map(V::from_components).collect(),
        }
    }
}

impl<T: Real> VectorField<T> {
    pub fn component_field(&self, k: usize) -> ScalarField<T> {
        Field {
            values: self.values.iter().map(|v| v[k]).collect(),
        }
    }

    pub fn from_components(x: &ScalarField<T>, y: &ScalarField<T>) -> Self {
        Field {
            values: x.values.iter().zip(&y.values).map(|(&a, &b)| [a, b]).collect(),
        }
    }
}

/// Volume-weighted inner product `sum_c vol_c f_c . g_c`.
pub fn inner_product<T: Real, V: Value<Scalar = T>>(
    mesh: &StructuredMesh<T>,
    f: &Field<V>,
    g: &Field<V>,
) -> Result<T> {
    check_len("inner product", mesh.n_cells(), f.len())?;
    check_len("inner product", mesh.n_cells(), g.len())?;
    Ok(f
        .values
        .iter()
        .zip(&g.values)
        .enumerate()
        .map(|(c, (a, b))| mesh.cell_volume(c) * a.dot(*b))
        .sum())
}

pub fn norm<T: Real, V: Value<Scalar = T>>(mesh: &StructuredMesh<T>, f: &Field<V>) -> Result<T> {
    inner_product(mesh, f, f).map(|s| s.sqrt())
}

/// Boundary condition on one face. `Neumann` carries the outward normal derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FaceCondition<V> {
    Dirichlet(V),
    Neumann(V),
}

impl<V: Value> FaceCondition<V> {
    pub fn value(&self) -> V {
        match *self {
            FaceCondition::Dirichlet(v) | FaceCondition::Neumann(v) => v,
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, FaceCondition::Dirichlet(_))
    }

    fn with_value(&self, v: V) -> Self {
        match self {
            FaceCondition::Dirichlet(_) => FaceCondition::Dirichlet(v),
            FaceCondition::Neumann(_) => FaceCondition::Neumann(v),
        }
    }

    /// Face value given the owning cell value and the centre-to-face distance.
    #[inline]
    pub fn face_value(&self, cell: V, distance: V::Scalar) -> V {
        match *self {
            FaceCondition::Dirichlet(v) => v,
            FaceCondition::Neumann(g) => cell.add(g.scale(distance)),
        }
    }

    /// Outward normal derivative at the face (two-point difference for Dirichlet).
    #[inline]
    pub fn normal_gradient(&self, cell: V, distance: V::Scalar) -> V {
        match *self {
            FaceCondition::Dirichlet(v) => v.sub(cell).scale(V::Scalar::one() / distance),
            FaceCondition::Neumann(g) => g,
        }
    }
}

/// One condition per boundary face, in [`StructuredMesh::boundary_faces`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryValues<V> {
    pub faces: Vec<FaceCondition<V>>,
}

impl<V: Value> BoundaryValues<V> {
    pub fn from_tags<T: Real>(
        mesh: &StructuredMesh<T>,
        mut rule: impl FnMut(BoundaryTag) -> FaceCondition<V>,
    ) -> Self {
        Self {
            faces: mesh.boundary_faces().iter().map(|f| rule(f.tag)).collect(),
        }
    }

    /// Zero normal derivative everywhere.
    pub fn zero_gradient<T: Real>(mesh: &StructuredMesh<T>) -> Self {
        Self::from_tags(mesh, |_| FaceCondition::Neumann(V::zeroed()))
    }

    /// Same condition kinds with all data set to zero.
    pub fn homogeneous(&self) -> Self {
        Self {
            faces: self.faces.iter().map(|f| f.with_value(V::zeroed())).collect(),
        }
    }

    pub fn same_kinds(&self, other: &Self) -> bool {
        self.faces.len() == other.faces.len()
            && self
                .faces
                .iter()
                .zip(&other.faces)
                .all(|(a, b)| a.is_dirichlet() == b.is_dirichlet())
    }

    pub fn axpy(&mut self, alpha: V::Scalar, other: &Self) -> Result<()> {
        if !self.same_kinds(other) {
            return Err(Error::Numerical(
                "cannot combine boundary data with different condition kinds".into(),
            ));
        }
        for (a, b) in self.faces.iter_mut().zip(&other.faces) {
            *a = a.with_value(a.value().add(b.value().scale(alpha)));
        }
        Ok(())
    }

    pub fn scaled(&self, alpha: V::Scalar) -> Self {
        Self {
            faces: self.faces.iter().map(|f| f.with_value(f.value().scale(alpha))).collect(),
        }
    }
}

/// Cell values together with the boundary data that closes the discrete operators.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedField<V> {
    pub cells: Field<V>,
    pub bc: BoundaryValues<V>,
}

pub type ScalarBoundedField<T> = BoundedField<T>;
pub type VectorBoundedField<T> = BoundedField<[T; 2]>;

impl<V: Value> BoundedField<V> {
    pub fn new(cells: Field<V>, bc: BoundaryValues<V>) -> Self {
        Self { cells, bc }
    }

    /// Cell values with a zero normal derivative on every boundary face.
    pub fn zero_gradient<T: Real>(mesh: &StructuredMesh<T>, cells: Field<V>) -> Self {
        Self {
            cells,
            bc: BoundaryValues::zero_gradient(mesh),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            cells: Field::zeros(self.cells.len()),
            bc: self.bc.homogeneous(),
        }
    }

    /// Boundary face values, in boundary-face order.
    pub fn traces<T: Real>(&self, mesh: &StructuredMesh<T>) -> Vec<V>
    where
        V: Value<Scalar = T>,
    {
        mesh.boundary_faces()
            .iter()
            .zip(&self.bc.faces)
            .map(|(f, cond)| cond.face_value(self.cells.values[f.cell], f.distance))
            .collect()
    }

    /// Largest face-value magnitude on faces carrying `tag`.
    pub fn max_trace<T: Real>(&self, mesh: &StructuredMesh<T>, tag: BoundaryTag) -> T
    where
        V: Value<Scalar = T>,
    {
        let traces = self.traces(mesh);
        mesh.faces_tagged(tag)
            .fold(T::zero(), |m, k| m.max(traces[k].max_abs()))
    }

    pub fn axpy(&mut self, alpha: V::Scalar, other: &Self) -> Result<()> {
        self.cells.axpy(alpha, &other.cells)?;
        self.bc.axpy(alpha, &other.bc)
    }

    pub fn scaled(&self, alpha: V::Scalar) -> Self {
        Self {
            cells: self.cells.scaled(alpha),
            bc: self.bc.scaled(alpha),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_constant_integrates_to_volume() {
        let m = StructuredMesh::<f64>::new(3, 5, [0.0, 0.0], [2.0, 1.0], 1).unwrap();
        let one = ScalarField::from_values(vec![1.0; m.n_cells()]);
        let v = inner_product(&m, &one, &one).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn orthogonal_vector_fields() {
        let m = StructuredMesh::<f64>::new(2, 2, [0.0, 0.0], [1.0, 1.0], 1).unwrap();
        let e1 = VectorField::from_values(vec![[1.0, 0.0]; 4]);
        let e2 = VectorField::from_values(vec![[0.0, 1.0]; 4]);
        assert_eq!(inner_product(&m, &e1, &e2).unwrap(), 0.0);
    }

    #[test]
    fn x_coordinate_against_one() {
        // cell centres 0.25 / 0.75, volume 0.25 each
        let m = StructuredMesh::<f64>::new(2, 2, [0.0, 0.0], [1.0, 1.0], 1).unwrap();
        let x = ScalarField::from_fn(&m, |p| p[0]);
        let one = ScalarField::from_values(vec![1.0; 4]);
        let v = inner_product(&m, &x, &one).unwrap();
        assert!((v - 0.25 * (0.25 + 0.25 + 0.75 + 0.75)).abs() < 1e-15);
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = StructuredMesh::<f64>::new(2, 2, [0.0, 0.0], [1.0, 1.0], 1).unwrap();
        let a = ScalarField::from_values(vec![1.0; 4]);
        let b = ScalarField::from_values(vec![1.0; 3]);
        assert!(matches!(
            inner_product(&m, &a, &b),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn mixed_kinds_refuse_to_combine() {
        let m = StructuredMesh::<f64>::new(2, 2, [0.0, 0.0], [1.0, 1.0], 1).unwrap();
        let mut a = BoundaryValues::<f64>::zero_gradient(&m);
        let b = BoundaryValues::from_tags(&m, |_| FaceCondition::Dirichlet(1.0));
        assert!(a.axpy(1.0, &b).is_err());
    }

    #[test]
    fn f32_inner_product() {
        let m = StructuredMesh::<f32>::new(2, 1, [0.0, 0.0], [1.0, 1.0], 1).unwrap();
        let f = ScalarField::from_values(vec![1.0f32, 3.0]);
        assert_eq!(inner_product(&m, &f, &f).unwrap(), 5.0);
    }
}
