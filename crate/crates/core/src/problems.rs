//! Initial conditions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fv::{Boundary, Domain, UniformGrid};
use crate::physics::ConservedState;

/// Conserved states of the four quadrants of a 2D Riemann problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiemannQuadrants {
    /// `x < 0, y < 0`
    pub lower_left: ConservedState,
    /// `x > 0, y < 0`
    pub lower_right: ConservedState,
    /// `x < 0, y > 0`
    pub upper_left: ConservedState,
    /// `x > 0, y > 0`
    pub upper_right: ConservedState,
}

impl RiemannQuadrants {
    /// The four-state MHD Riemann problem on `[-1, 1]^2` with `gamma = 5/3`.
    pub fn standard() -> Self {
        let q = |rho, mx, my, mz, energy, bx, by, bz| ConservedState {
            rho,
            energy,
            mx,
            my,
            mz,
            bx,
            by,
            bz,
            psi: 0.0,
        };
        Self {
            lower_left: q(1.0, 1.75, -1.0, 0.0, 6.0, 0.5642, 0.5078, 0.2539),
            lower_right: q(1.0304, 1.5774, -1.0455, -0.1016, 5.7813, 0.3501, 0.5078, 0.1576),
            upper_left: q(1.8887, 0.2334, -1.7422, 0.0733, 12.999, 0.5642, 0.9830, 0.4915),
            upper_right: q(0.9308, 1.4557, -0.4633, 0.0575, 5.0838, 0.3501, 0.9830, 0.3050),
        }
    }

    pub fn state_at(&self, x: f64, y: f64) -> ConservedState {
        match (x > 0.0, y > 0.0) {
            (false, false) => self.lower_left,
            (true, false) => self.lower_right,
            (false, true) => self.upper_left,
            (true, true) => self.upper_right,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    /// Four-quadrant Riemann problem with Neumann boundaries.
    #[default]
    Riemann2d,
    /// The same data on a periodic domain; nothing leaves through the boundary.
    Riemann2dPeriodic,
    /// A single magnetised state at rest.
    Uniform,
}

impl Problem {
    pub const ALL: [Problem; 3] = [Problem::Riemann2d, Problem::Riemann2dPeriodic, Problem::Uniform];

    pub fn id(&self) -> &'static str {
        match self {
            Problem::Riemann2d => "riemann2d",
            Problem::Riemann2dPeriodic => "riemann2d-periodic",
            Problem::Uniform => "uniform",
        }
    }

    pub fn boundary(&self) -> Boundary {
        match self {
            Problem::Riemann2dPeriodic => Boundary::Periodic,
            _ => Boundary::Neumann,
        }
    }

    pub fn domain(&self) -> Domain {
        Domain::default()
    }

    pub fn check_domain(&self, domain: &Domain) -> Result<()> {
        if matches!(self, Problem::Riemann2d | Problem::Riemann2dPeriodic) && *domain != Domain::default() {
            return Err(Error::DomainMismatch(format!(
                "got [{}, {}] x [{}, {}]",
                domain.x0,
                domain.x0 + domain.width,
                domain.y0,
                domain.y0 + domain.height
            )));
        }
        Ok(())
    }

    /// State of a cell centred at `(x, y)`.
    pub fn initial_state(&self, x: f64, y: f64) -> ConservedState {
        match self {
            Problem::Riemann2d | Problem::Riemann2dPeriodic => RiemannQuadrants::standard().state_at(x, y),
            Problem::Uniform => ConservedState {
                rho: 1.0,
                energy: 1.5 + 0.5 * (0.25 + 0.09),
                mx: 0.0,
                my: 0.0,
                mz: 0.0,
                bx: 0.5,
                by: 0.3,
                bz: 0.0,
                psi: 0.0,
            },
        }
    }

    /// Fill a uniform grid and its ghost layers.
    pub fn init_grid(&self, grid: &mut UniformGrid) -> Result<()> {
        self.check_domain(&grid.domain)?;
        grid.fill(|x, y| self.initial_state(x, y));
        crate::fv::apply_boundary(grid);
        Ok(())
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Problem::ALL
            .into_iter()
            .find(|p| p.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown problem `{s}`")))
    }
}

/// Fill `grid` with the four-quadrant Riemann data.
pub fn init_riemann2d(grid: &mut UniformGrid) -> Result<()> {
    Problem::Riemann2d.init_grid(grid)
}
