use std::fmt;
use std::str::FromStr;

use imubench_nn::Variant;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::augment::RotationAxis;
use crate::error::{Error, Result};

/// The baseline plus the ten enhancement techniques.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TechniqueId {
    Baseline,
    Head2,
    Head3,
    RotX,
    RotY,
    RotZ,
    RotAll,
    Noise,
    Ma10,
    Ma25,
    Ma50,
}

/// What a technique changes relative to the baseline pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Treatment {
    None,
    Architecture(Variant),
    Rotation(RotationAxis),
    Noise,
    MovingAverage(usize),
}

impl TechniqueId {
    pub const ALL: [TechniqueId; 11] = [
        TechniqueId::Baseline,
        TechniqueId::Head2,
        TechniqueId::Head3,
        TechniqueId::RotX,
        TechniqueId::RotY,
        TechniqueId::RotZ,
        TechniqueId::RotAll,
        TechniqueId::Noise,
        TechniqueId::Ma10,
        TechniqueId::Ma25,
        TechniqueId::Ma50,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TechniqueId::Baseline => "baseline",
            TechniqueId::Head2 => "head2",
            TechniqueId::Head3 => "head3",
            TechniqueId::RotX => "rot_x",
            TechniqueId::RotY => "rot_y",
            TechniqueId::RotZ => "rot_z",
            TechniqueId::RotAll => "rot_all",
            TechniqueId::Noise => "noise",
            TechniqueId::Ma10 => "ma10",
            TechniqueId::Ma25 => "ma25",
            TechniqueId::Ma50 => "ma50",
        }
    }

    pub fn treatment(self) -> Treatment {
        match self {
            TechniqueId::Baseline => Treatment::None,
            TechniqueId::Head2 => Treatment::Architecture(Variant::Head2),
            TechniqueId::Head3 => Treatment::Architecture(Variant::Head3),
            TechniqueId::RotX => Treatment::Rotation(RotationAxis::X),
            TechniqueId::RotY => Treatment::Rotation(RotationAxis::Y),
            TechniqueId::RotZ => Treatment::Rotation(RotationAxis::Z),
            TechniqueId::RotAll => Treatment::Rotation(RotationAxis::All),
            TechniqueId::Noise => Treatment::Noise,
            TechniqueId::Ma10 => Treatment::MovingAverage(10),
            TechniqueId::Ma25 => Treatment::MovingAverage(25),
            TechniqueId::Ma50 => Treatment::MovingAverage(50),
        }
    }

    pub fn variant(self) -> Variant {
        match self.treatment() {
            Treatment::Architecture(v) => v,
            _ => Variant::Baseline,
        }
    }
}

impl fmt::Display for TechniqueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TechniqueId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace('-', "_");
        TechniqueId::ALL
            .into_iter()
            .find(|id| id.name() == t)
            .ok_or_else(|| Error::Config(format!("unknown technique '{s}'")))
    }
}

impl Serialize for TechniqueId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for TechniqueId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_techniques_plus_baseline() {
        let others: Vec<_> = TechniqueId::ALL.iter().filter(|t| **t != TechniqueId::Baseline).collect();
        assert_eq!(others.len(), 10);
        for t in TechniqueId::ALL {
            assert_eq!(t.name().parse::<TechniqueId>().unwrap(), t);
        }
        assert_eq!("ROT-ALL".parse::<TechniqueId>().unwrap(), TechniqueId::RotAll);
        assert!("ma5".parse::<TechniqueId>().is_err());
        assert_eq!(TechniqueId::Head3.variant(), Variant::Head3);
        assert_eq!(TechniqueId::Ma25.treatment(), Treatment::MovingAverage(25));
    }
}
