use crate::error::{Error, Result};
use crate::scalar::Real;

/// Label carried by every boundary face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Inlet,
    Outlet(usize),
    Wall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    West,
    East,
    South,
    North,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::West, Side::East, Side::South, Side::North];
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFace<T> {
    pub cell: usize,
    pub side: Side,
    pub tag: BoundaryTag,
    /// Outward area vector `A n` (unit depth).
    pub area: [T; 2],
    /// Distance from the owning cell centre to the face centre.
    pub distance: T,
}

/// Interior face between `owner` and `neighbour`, area vector pointing from
/// owner to neighbour.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteriorFace<T> {
    pub owner: usize,
    pub neighbour: usize,
    pub area: [T; 2],
    pub distance: T,
}

/// Uniform Cartesian 2D mesh of a channel section.
///
/// Cells are numbered row-major, `c = j * nx + i`, with `i` running along the
/// flow direction. The west boundary is the inlet, north and south are walls,
/// and the east boundary is split into `n_outlets` contiguous outlet patches.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuredMesh<T> {
    nx: usize,
    ny: usize,
    origin: [T; 2],
    dx: T,
    dy: T,
    n_outlets: usize,
    boundary: Vec<BoundaryFace<T>>,
}

impl<T: Real> StructuredMesh<T> {
    pub fn new(nx: usize, ny: usize, origin: [T; 2], extent: [T; 2], n_outlets: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Config(format!("mesh needs at least one cell per direction, got {nx}x{ny}")));
        }
        if !(extent[0] > T::zero() && extent[1] > T::zero()) {
            return Err(Error::Config("mesh extent must be positive".into()));
        }
        if n_outlets == 0 || n_outlets > ny {
            return Err(Error::Config(format!(
                "number of outlets must lie in 1..={ny}, got {n_outlets}"
            )));
        }
        let dx = extent[0] / T::of_usize(nx);
        let dy = extent[1] / T::of_usize(ny);
        let half = T::lit(0.5);
        let mut boundary = Vec::with_capacity(2 * (nx + ny));
        for j in 0..ny {
            boundary.push(BoundaryFace {
                cell: j * nx,
                side: Side::West,
                tag: BoundaryTag::Inlet,
                area: [-dy, T::zero()],
                distance: half * dx,
            });
        }
        for j in 0..ny {
            boundary.push(BoundaryFace {
                cell: j * nx + nx - 1,
                side: Side::East,
                tag: BoundaryTag::Outlet(j * n_outlets / ny),
                area: [dy, T::zero()],
                distance: half * dx,
            });
        }
        for i in 0..nx {
            boundary.push(BoundaryFace {
                cell: i,
                side: Side::South,
                tag: BoundaryTag::Wall,
                area: [T::zero(), -dx],
                distance: half * dy,
            });
        }
        for i in 0..nx {
            boundary.push(BoundaryFace {
                cell: (ny - 1) * nx + i,
                side: Side::North,
                tag: BoundaryTag::Wall,
                area: [T::zero(), dx],
                distance: half * dy,
            });
        }
        Ok(Self {
            nx,
            ny,
            origin,
            dx,
            dy,
            n_outlets,
            boundary,
        })
    }

    /// Channel of the given length and half-height, `y` in `[-radius, radius]`.
    pub fn channel(nx: usize, ny: usize, length: T, radius: T, n_outlets: usize) -> Result<Self> {
        Self::new(nx, ny, [T::zero(), -radius], [length, radius + radius], n_outlets)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_outlets(&self) -> usize {
        self.n_outlets
    }

    pub fn spacing(&self) -> [T; 2] {
        [self.dx, self.dy]
    }

    pub fn extent(&self) -> [T; 2] {
        [self.dx * T::of_usize(self.nx), self.dy * T::of_usize(self.ny)]
    }

    pub fn origin(&self) -> [T; 2] {
        self.origin
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, c: usize) -> (usize, usize) {
        (c % self.nx, c / self.nx)
    }

    pub fn center(&self, c: usize) -> [T; 2] {
        let (i, j) = self.ij(c);
        let half = T::lit(0.5);
        [
            self.origin[0] + (T::of_usize(i) + half) * self.dx,
            self.origin[1] + (T::of_usize(j) + half) * self.dy,
        ]
    }

    #[inline]
    pub fn cell_volume(&self, _c: usize) -> T {
        self.dx * self.dy
    }

    pub fn total_volume(&self) -> T {
        self.dx * self.dy * T::of_usize(self.n_cells())
    }

    pub fn neighbour(&self, c: usize, side: Side) -> Option<usize> {
        let (i, j) = self.ij(c);
        match side {
            Side::West if i > 0 => Some(c - 1),
            Side::East if i + 1 < self.nx => Some(c + 1),
            Side::South if j > 0 => Some(c - self.nx),
            Side::North if j + 1 < self.ny => Some(c + self.nx),
            _ => None,
        }
    }

    /// Outward area vector of the given side of any cell.
    pub fn side_area(&self, side: Side) -> [T; 2] {
        match side {
            Side::West => [-self.dy, T::zero()],
            Side::East => [self.dy, T::zero()],
            Side::South => [T::zero(), -self.dx],
            Side::North => [T::zero(), self.dx],
        }
    }

    /// Centre-to-centre distance across an interior face on `side`.
    pub fn side_distance(&self, side: Side) -> T {
        match side {
            Side::West | Side::East => self.dx,
            Side::South | Side::North => self.dy,
        }
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace<T>] {
        &self.boundary
    }

    /// Indices into [`Self::boundary_faces`] carrying `tag`.
    pub fn faces_tagged(&self, tag: BoundaryTag) -> impl Iterator<Item = usize> + '_ {
        self.boundary
            .iter()
            .enumerate()
            .filter(move |(_, f)| f.tag == tag)
            .map(|(k, _)| k)
    }

    /// Boundary face index of `side` of cell `c`, if that side is on the boundary.
    pub fn boundary_face_of(&self, c: usize, side: Side) -> Option<usize> {
        let (i, j) = self.ij(c);
        let (nx, ny) = (self.nx, self.ny);
        match side {
            Side::West if i == 0 => Some(j),
            Side::East if i + 1 == nx => Some(ny + j),
            Side::South if j == 0 => Some(2 * ny + i),
            Side::North if j + 1 == ny => Some(2 * ny + nx + i),
            _ => None,
        }
    }

    pub fn interior_faces(&self) -> impl Iterator<Item = InteriorFace<T>> + '_ {
        let east = self.side_area(Side::East);
        let north = self.side_area(Side::North);
        (0..self.n_cells()).flat_map(move |c| {
            let e = self.neighbour(c, Side::East).map(|n| InteriorFace {
                owner: c,
                neighbour: n,
                area: east,
                distance: self.dx,
            });
            let nn = self.neighbour(c, Side::North).map(|n| InteriorFace {
                owner: c,
                neighbour: n,
                area: north,
                distance: self.dy,
            });
            e.into_iter().chain(nn)
        })
    }

    /// Total area of the faces carrying `tag`.
    pub fn tagged_area(&self, tag: BoundaryTag) -> T {
        self.faces_tagged(tag)
            .map(|k| {
                let a = self.boundary[k].area;
                (a[0] * a[0] + a[1] * a[1]).sqrt()
            })
            .sum()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.n_outlets == other.n_outlets
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_boundary_face_tagged_once() {
        let m = StructuredMesh::<f64>::channel(5, 4, 1.0, 0.5, 2).unwrap();
        assert_eq!(m.boundary_faces().len(), 2 * (5 + 4));
        for c in 0..m.n_cells() {
            for side in Side::ALL {
                let on_boundary = m.neighbour(c, side).is_none();
                let face = m.boundary_face_of(c, side);
                assert_eq!(on_boundary, face.is_some());
                if let Some(k) = face {
                    assert_eq!(m.boundary_faces()[k].cell, c);
                    assert_eq!(m.boundary_faces()[k].side, side);
                }
            }
        }
        let outlets: Vec<_> = m
            .boundary_faces()
            .iter()
            .filter_map(|f| match f.tag {
                BoundaryTag::Outlet(k) => Some(k),
                _ => None,
            })
            .collect();
        assert_eq!(outlets, vec![0, 0, 1, 1]);
    }

    #[test]
    fn closed_cells() {
        let m = StructuredMesh::<f64>::new(3, 2, [0.0, 0.0], [1.5, 0.4], 1).unwrap();
        for _c in 0..m.n_cells() {
            let mut s = [0.0; 2];
            for side in Side::ALL {
                let a = m.side_area(side);
                s[0] += a[0];
                s[1] += a[1];
            }
            assert_eq!(s, [0.0, 0.0]);
        }
        assert!(m.cell_volume(0) > 0.0);
        assert_eq!(m.interior_faces().count(), 2 * 2 + 3);
    }

    #[test]
    fn rejects_bad_outlet_count() {
        assert!(StructuredMesh::<f64>::channel(4, 2, 1.0, 0.1, 3).is_err());
        assert!(StructuredMesh::<f64>::channel(0, 2, 1.0, 0.1, 1).is_err());
    }
}
