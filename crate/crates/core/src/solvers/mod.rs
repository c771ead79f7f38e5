//! Numerical realizations of the existence machinery: adaptive initial-value
//! integration in both coordinates, regular series starts through fixed
//! points, the singular two-point boundary value problem, Picard iteration on
//! the two integral representations, the concavity-based nonexistence
//! dichotomy, and the vector-field completeness bounds.

mod bvp;
mod ivp;
mod nonexistence;
mod picard;
mod rk45;

pub use bvp::{solve_bvp_singular, BvpOptions};
pub use ivp::{solve_from_pole, solve_ivp, solve_ivp_transformed};
pub use nonexistence::{
    check_completeness_bounds, check_nonexistence, nonexistence_candidate, Box3, Horn,
    NonexistenceReport,
};
pub use picard::{
    solve_picard_negative_power, solve_picard_sublinear, PicardOptions, PicardOutcome,
};
pub use rk45::StepperOptions;

use crate::error::{Error, Result};
use crate::reduction::{ChangeOfVariables, Coordinate};
use crate::spline::{bracket, hermite_deriv, hermite_second, hermite_value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Ivp,
    BvpShooting,
    PicardSublinear,
    PicardNegativePower,
    PoleSeries,
    /// Sampled from a closed form (oracles, lifted references).
    Synthetic,
}

/// Location where adaptive stepping underflowed, signalling blow-up or a
/// coefficient singularity; the solution covers the window up to here.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct BlowUp {
    pub location: f64,
    pub step: f64,
}

/// Dense-output solution: strictly increasing grid with values and first
/// derivatives, interpolated by cubic Hermite pieces. The interpolant
/// reproduces values and derivatives at the grid points exactly.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub coordinate: Coordinate,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
    pub provenance: Provenance,
    pub blow_up: Option<BlowUp>,
}

impl RadialSolution {
    pub fn new(
        coordinate: Coordinate,
        grid: Vec<f64>,
        values: Vec<f64>,
        derivatives: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() || grid.len() != derivatives.len() {
            return Err(Error::InvalidArgument(
                "solution needs at least two matching grid/value/derivative entries".to_string(),
            ));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "solution grid must be strictly increasing".to_string(),
            ));
        }
        if values
            .iter()
            .chain(derivatives.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument(
                "solution values and derivatives must be finite".to_string(),
            ));
        }
        Ok(RadialSolution {
            coordinate,
            grid,
            values,
            derivatives,
            provenance,
            blow_up: None,
        })
    }

    /// Sample a closed form on a uniform grid (tests and lifted references).
    pub fn from_fn<F>(coordinate: Coordinate, a: f64, b: f64, n: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> (f64, f64),
    {
        let grid: Vec<f64> = (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect();
        let (values, derivatives) = grid.iter().map(|&x| f(x)).unzip();
        RadialSolution::new(coordinate, grid, values, derivatives, Provenance::Synthetic)
    }

    pub fn window(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().unwrap())
    }

    pub fn covers(&self, window: (f64, f64)) -> bool {
        let (a, b) = self.window();
        let slack = 1e-12 * (b - a).max(1.0);
        window.0 >= a - slack && window.1 <= b + slack
    }

    fn piece(&self, x: f64) -> Result<usize> {
        let (a, b) = self.window();
        if x < a - 1e-12 * (b - a).max(1.0) || x > b + 1e-12 * (b - a).max(1.0) {
            return Err(Error::OutsideDomain {
                point: x,
                lo: a,
                hi: b,
            });
        }
        Ok(bracket(&self.grid, x))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let i = self.piece(x)?;
        Ok(hermite_value(
            self.grid[i],
            self.grid[i + 1],
            self.values[i],
            self.values[i + 1],
            self.derivatives[i],
            self.derivatives[i + 1],
            x,
        ))
    }

    pub fn eval_deriv(&self, x: f64) -> Result<f64> {
        let i = self.piece(x)?;
        // exact at nodes by construction
        if x == self.grid[i] {
            return Ok(self.derivatives[i]);
        }
        if x == self.grid[i + 1] {
            return Ok(self.derivatives[i + 1]);
        }
        Ok(hermite_deriv(
            self.grid[i],
            self.grid[i + 1],
            self.values[i],
            self.values[i + 1],
            self.derivatives[i],
            self.derivatives[i + 1],
            x,
        ))
    }

    /// Second derivative of the Hermite interpolant (order-2 accurate).
    pub fn eval_second(&self, x: f64) -> Result<f64> {
        let i = self.piece(x)?;
        Ok(hermite_second(
            self.grid[i],
            self.grid[i + 1],
            self.values[i],
            self.values[i + 1],
            self.derivatives[i],
            self.derivatives[i + 1],
            x,
        ))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Map an r-coordinate solution through J: grid s = J(r), dz/ds = u'(r)·A(r).
pub fn to_s_coordinates(sol: &RadialSolution, cov: &ChangeOfVariables) -> Result<RadialSolution> {
    if sol.coordinate != Coordinate::RCoordinate {
        return Err(Error::InvalidArgument(
            "solution is already in the s-coordinate".to_string(),
        ));
    }
    let mut grid = Vec::with_capacity(sol.grid.len());
    let mut derivatives = Vec::with_capacity(sol.grid.len());
    for (&r, &du) in sol.grid.iter().zip(&sol.derivatives) {
        grid.push(cov.forward(r)?);
        derivatives.push(du * cov.geometry.volume(r)?);
    }
    let mut out = RadialSolution::new(
        Coordinate::SCoordinate,
        grid,
        sol.values.clone(),
        derivatives,
        sol.provenance,
    )?;
    out.blow_up = sol.blow_up;
    Ok(out)
}
