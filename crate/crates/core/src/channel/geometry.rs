use nalgebra::{Point3, Vector3};

use super::{Link, SystemDims};
use crate::error::{Error, Result};

pub type Point = Point3<f64>;

/// A rectangular reflecting surface. Elements are laid out row-major in the
/// plane spanned by the y and z axes, centred on `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct RisPanel {
    pub center: Point,
    pub rows: usize,
    pub cols: usize,
    /// Element spacing in meters.
    pub spacing: f64,
}

impl RisPanel {
    /// Closest-to-square grid for `elements` (rows ≤ cols).
    pub fn square(center: Point, elements: usize, spacing: f64) -> Self {
        let mut rows = (elements as f64).sqrt().floor() as usize;
        while rows > 1 && !elements.is_multiple_of(rows) {
            rows -= 1;
        }
        let rows = rows.max(1);
        Self {
            center,
            rows,
            cols: elements / rows,
            spacing,
        }
    }

    pub fn elements(&self) -> usize {
        self.rows * self.cols
    }

    pub fn element_positions(&self) -> Vec<Point> {
        let r0 = (self.rows as f64 - 1.0) / 2.0;
        let c0 = (self.cols as f64 - 1.0) / 2.0;
        (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| (r, c)))
            .map(|(r, c)| {
                self.center
                    + Vector3::new(
                        0.0,
                        (c as f64 - c0) * self.spacing,
                        (r as f64 - r0) * self.spacing,
                    )
            })
            .collect()
    }
}

/// Node positions and array layouts.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGeometry {
    pub bs: Point,
    pub user: Point,
    pub ris1: RisPanel,
    pub ris2: RisPanel,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
    /// BS/user uniform linear array spacing in wavelengths.
    pub antenna_spacing: f64,
    /// Antenna gain applied at both ends of every link, dBi.
    pub antenna_gain_dbi: f64,
}

impl NodeGeometry {
    pub const DEFAULT_WAVELENGTH: f64 = 0.1;
    pub const DEFAULT_GAIN_DBI: f64 = 5.0;

    /// Reference deployment: BS (1,0,5), user (1,50,1.5), RIS1 (0,50,3),
    /// RIS2 (0,0,3); half-wavelength spacings at 3 GHz.
    pub fn reference(dims: &SystemDims) -> Self {
        let wavelength = Self::DEFAULT_WAVELENGTH;
        Self {
            bs: Point::new(1.0, 0.0, 5.0),
            user: Point::new(1.0, 50.0, 1.5),
            ris1: RisPanel::square(Point::new(0.0, 50.0, 3.0), dims.ris1_elements, wavelength / 2.0),
            ris2: RisPanel::square(Point::new(0.0, 0.0, 3.0), dims.ris2_elements, wavelength / 2.0),
            wavelength,
            antenna_spacing: 0.5,
            antenna_gain_dbi: Self::DEFAULT_GAIN_DBI,
        }
    }

    /// Distance between the two end nodes of `link`, in meters.
    pub fn link_distance(&self, link: Link) -> f64 {
        let (a, b) = match link {
            Link::Ris1User => (self.ris1.center, self.user),
            Link::Ris2User => (self.ris2.center, self.user),
            Link::InterRis => (self.ris2.center, self.ris1.center),
            Link::BsRis1 => (self.bs, self.ris1.center),
            Link::BsRis2 => (self.bs, self.ris2.center),
        };
        (a - b).norm()
    }

    pub fn validate(&self, dims: &SystemDims) -> Result<()> {
        if self.ris1.elements() != dims.ris1_elements {
            return Err(Error::Config(format!(
                "RIS 1 grid {}x{} does not hold {} elements",
                self.ris1.rows, self.ris1.cols, dims.ris1_elements
            )));
        }
        if self.ris2.elements() != dims.ris2_elements {
            return Err(Error::Config(format!(
                "RIS 2 grid {}x{} does not hold {} elements",
                self.ris2.rows, self.ris2.cols, dims.ris2_elements
            )));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::Config("wavelength must be positive".into()));
        }
        if !(self.antenna_spacing > 0.0) {
            return Err(Error::Config("antenna spacing must be positive".into()));
        }
        for panel in [&self.ris1, &self.ris2] {
            if panel.elements() > 1 && !(panel.spacing > 0.0) {
                return Err(Error::Config("RIS element spacing must be positive".into()));
            }
        }
        let nodes = [self.bs, self.user, self.ris1.center, self.ris2.center];
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if (nodes[i] - nodes[j]).norm() <= 0.0 {
                    return Err(Error::Config("two nodes share a position".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_grid_factorization() {
        let c = Point::origin();
        let p = RisPanel::square(c, 100, 0.05);
        assert_eq!((p.rows, p.cols), (10, 10));
        let p = RisPanel::square(c, 12, 0.05);
        assert_eq!((p.rows, p.cols), (3, 4));
        let p = RisPanel::square(c, 7, 0.05);
        assert_eq!((p.rows, p.cols), (1, 7));
    }

    #[test]
    fn element_positions_distinct_and_spaced() {
        let p = RisPanel::square(Point::new(0.0, 50.0, 3.0), 16, 0.05);
        let pts = p.element_positions();
        assert_eq!(pts.len(), 16);
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                assert!((pts[i] - pts[j]).norm() >= 0.05 - 1e-12);
            }
        }
        // row-major: neighbours in a row differ along y
        assert!(((pts[1] - pts[0]).y - 0.05).abs() < 1e-12);
        assert!(((pts[4] - pts[0]).z - 0.05).abs() < 1e-12);
    }

    #[test]
    fn reference_distances() {
        let dims = SystemDims::new(8, 4, 100, 100).unwrap();
        let g = NodeGeometry::reference(&dims);
        assert!((g.link_distance(Link::BsRis1) - 2505.0f64.sqrt()).abs() < 1e-12);
        assert!((g.link_distance(Link::Ris1User) - 3.25f64.sqrt()).abs() < 1e-12);
        assert!((g.link_distance(Link::InterRis) - 50.0).abs() < 1e-12);
        assert!((g.link_distance(Link::BsRis2) - 5.0f64.sqrt()).abs() < 1e-12);
        assert!((g.link_distance(Link::Ris2User) - 2503.25f64.sqrt()).abs() < 1e-12);
        g.validate(&dims).unwrap();
    }

    #[test]
    fn validate_rejects_bad_grid() {
        let dims = SystemDims::new(8, 4, 16, 16).unwrap();
        let mut g = NodeGeometry::reference(&dims);
        g.ris1.cols = 5;
        assert!(g.validate(&dims).is_err());
    }
}
