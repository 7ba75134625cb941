use std::fmt;
use std::str::FromStr;

use crate::VehicleError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Actuator {
    SeatVibration,
    SoundLight,
    LaneKeeping,
}

impl Actuator {
    pub const ALL: [Actuator; 3] = [Actuator::SeatVibration, Actuator::SoundLight, Actuator::LaneKeeping];

    /// Also the behavior id of the requirement it serves.
    pub fn id(self) -> &'static str {
        match self {
            Actuator::SeatVibration => "seat_vibration",
            Actuator::SoundLight => "sound_light",
            Actuator::LaneKeeping => "lane_keeping",
        }
    }
}

impl fmt::Display for Actuator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Actuator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Actuator::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| format!("unknown actuator `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    TurnOn,
    TurnOff,
    Disable,
    Enable,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::TurnOn, Action::TurnOff, Action::Disable, Action::Enable];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::TurnOn => "turn_on",
            Action::TurnOff => "turn_off",
            Action::Disable => "disable",
            Action::Enable => "enable",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown action `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriverOverride {
    #[default]
    None,
    TurnedOff,
    Disabled,
    TurnedOn,
}

impl DriverOverride {
    pub const ALL: [DriverOverride; 4] = [
        DriverOverride::None,
        DriverOverride::TurnedOff,
        DriverOverride::Disabled,
        DriverOverride::TurnedOn,
    ];
}

/// disabled > turned on > turned off > system command.
pub fn effective_active(system_commanded: bool, driver_override: DriverOverride) -> bool {
    match driver_override {
        DriverOverride::Disabled => false,
        DriverOverride::TurnedOn => true,
        DriverOverride::TurnedOff => false,
        DriverOverride::None => system_commanded,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActuatorState {
    pub actuator: Actuator,
    pub system_commanded: bool,
    pub driver_override: DriverOverride,
}

impl ActuatorState {
    pub fn new(actuator: Actuator) -> Self {
        Self {
            actuator,
            system_commanded: false,
            driver_override: DriverOverride::None,
        }
    }

    pub fn effective_active(&self) -> bool {
        effective_active(self.system_commanded, self.driver_override)
    }

    pub fn is_disabled(&self) -> bool {
        self.driver_override == DriverOverride::Disabled
    }

    pub fn apply(&mut self, action: Action) -> Result<(), VehicleError> {
        self.driver_override = match action {
            Action::TurnOn if self.actuator != Actuator::LaneKeeping => {
                return Err(VehicleError::InvalidAction {
                    actuator: self.actuator,
                    action,
                })
            }
            Action::TurnOn => DriverOverride::TurnedOn,
            Action::TurnOff => DriverOverride::TurnedOff,
            Action::Disable => DriverOverride::Disabled,
            Action::Enable => DriverOverride::None,
        };
        Ok(())
    }

    /// Sets the system command. A driver turn-off lasts only until the
    /// system stops commanding the actuator.
    pub fn command(&mut self, on: bool) {
        self.system_commanded = on;
        if !on && self.driver_override == DriverOverride::TurnedOff {
            self.driver_override = DriverOverride::None;
        }
    }
}
