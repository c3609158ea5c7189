//! Wall boundary conditions and the associated structural-stability spaces.

use crate::error::{Error, Result};
use std::fmt;

/// Kind of a single wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WallKind {
    /// No-slip: u = 0 on the wall.
    Rigid,
    /// Stress-free: u2 = 0 and d(u1)/dx2 = 0 on the wall.
    Free,
}

/// Horizontal walls of the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wall {
    Bottom,
    Top,
}

/// Perturbation space used by the structural-stability verdicts.
///
/// B0: no-slip both walls. B1: no-slip bottom, stress-free top.
/// B2: stress-free both walls. B3: B2 restricted to zero horizontal mean
/// (excludes the constant shear, so wall-to-wall saddle connections cannot
/// be broken by perturbations in the space).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceTag {
    B0,
    B1,
    B2,
    B3,
}

/// Top/bottom boundary conditions of the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BcTag {
    RigidRigid,
    /// Rigid bottom (x2 = 0), free top (x2 = 1).
    FreeRigid,
    FreeFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundaryCondition {
    pub tag: BcTag,
    pub space_tag: SpaceTag,
}

impl BoundaryCondition {
    /// Default space for each wall pairing (free-free defaults to the
    /// zero-mean space B3, which excludes the neutral constant drift).
    pub fn new(tag: BcTag) -> Self {
        let space_tag = match tag {
            BcTag::RigidRigid => SpaceTag::B0,
            BcTag::FreeRigid => SpaceTag::B1,
            BcTag::FreeFree => SpaceTag::B3,
        };
        BoundaryCondition { tag, space_tag }
    }

    pub fn with_space(tag: BcTag, space_tag: SpaceTag) -> Result<Self> {
        let ok = matches!(
            (tag, space_tag),
            (BcTag::RigidRigid, SpaceTag::B0)
                | (BcTag::FreeRigid, SpaceTag::B1)
                | (BcTag::FreeFree, SpaceTag::B2)
                | (BcTag::FreeFree, SpaceTag::B3)
        );
        if !ok {
            return Err(Error::InvalidParam(format!(
                "space {space_tag:?} is not compatible with walls {tag:?}"
            )));
        }
        Ok(BoundaryCondition { tag, space_tag })
    }

    pub fn wall(&self, wall: Wall) -> WallKind {
        match (self.tag, wall) {
            (BcTag::RigidRigid, _) => WallKind::Rigid,
            (BcTag::FreeRigid, Wall::Bottom) => WallKind::Rigid,
            (BcTag::FreeRigid, Wall::Top) => WallKind::Free,
            (BcTag::FreeFree, _) => WallKind::Free,
        }
    }

    /// Whether fields must have zero horizontal mean velocity.
    pub fn zero_mean(&self) -> bool {
        self.space_tag == SpaceTag::B3
    }

    pub fn parse(s: &str) -> Result<Self> {
        let tag = match s {
            "rigid-rigid" | "rr" => BcTag::RigidRigid,
            "free-rigid" | "fr" => BcTag::FreeRigid,
            "free-free" | "ff" => BcTag::FreeFree,
            _ => {
                return Err(Error::InvalidParam(format!(
                    "unknown boundary condition '{s}' (expected rigid-rigid, free-rigid or free-free)"
                )))
            }
        };
        Ok(BoundaryCondition::new(tag))
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.tag {
            BcTag::RigidRigid => "rigid-rigid",
            BcTag::FreeRigid => "free-rigid",
            BcTag::FreeFree => "free-free",
        };
        write!(f, "{name}")
    }
}

/// Physical parameters of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    /// Rayleigh number.
    pub rayleigh: f64,
    /// Prandtl number (enters only the optional momentum-equation scaling
    /// of the time integrator).
    pub prandtl: f64,
}

impl PhysParams {
    pub fn new(rayleigh: f64, prandtl: f64) -> Result<Self> {
        if !(rayleigh > 0.0) {
            return Err(Error::InvalidParam(format!(
                "Rayleigh number must be positive, got {rayleigh}"
            )));
        }
        if !(prandtl > 0.0) {
            return Err(Error::InvalidParam(format!(
                "Prandtl number must be positive, got {prandtl}"
            )));
        }
        Ok(PhysParams { rayleigh, prandtl })
    }

    /// lambda = sqrt(R), the coupling strength of the linear problem.
    pub fn lambda(&self) -> f64 {
        self.rayleigh.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_compatibility() {
        assert!(BoundaryCondition::with_space(BcTag::RigidRigid, SpaceTag::B0).is_ok());
        assert!(BoundaryCondition::with_space(BcTag::RigidRigid, SpaceTag::B2).is_err());
        assert!(BoundaryCondition::with_space(BcTag::FreeFree, SpaceTag::B2).is_ok());
        assert_eq!(
            BoundaryCondition::new(BcTag::FreeFree).space_tag,
            SpaceTag::B3
        );
    }

    #[test]
    fn lambda_squares_to_rayleigh() {
        // lambda is derived from R on every call, so the two cannot drift
        let p = PhysParams::new(657.5113644795163, 10.0).unwrap();
        let r = p.lambda() * p.lambda();
        assert!(((r - p.rayleigh) / p.rayleigh).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(PhysParams::new(-1.0, 1.0).is_err());
        assert!(PhysParams::new(100.0, 0.0).is_err());
    }
}
