"""Closed-loop flight, contact and trigger simulation."""

from .contact import ContactModel, ContactState, Deployment, NailgunTrigger, contact_update, nailgun_update
from .engine import LOG_COLUMNS, NailRecord, RunResult, SimConfig, SimLog, run
from .vehicle import (
    Command,
    Gains,
    PositionController,
    Reference,
    SimulationFault,
    VehicleParams,
    VehicleState,
    controller_update,
    plant_step,
)
from .wind import WindConfig, WindModel, wind_update
