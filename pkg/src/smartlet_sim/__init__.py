"""Deterministic simulator of programmable aquatic micro-robot cubes."""

__version__ = "0.1.0"

from .aquatics import (BgeState, SmartletBody, WaterParams, buoyancy_force,
                       capillary_force, critical_gas_volume, gas_rate,
                       step_motion)
from .docking import FacePattern, Offset, dock_score
from .engine import SmartletAgent, TankState, inject_global_light, step
from .errors import (CodecError, ConfigError, DomainError, FrameUnderrun,
                     MalformedProgram, ProtocolViolation, ScenarioError,
                     SmartletSimError, TraceIOError)
from .fsm import (FsmState, LabletProgram, Level, Mode, PhaseBlock,
                  deserialize, load_bit, receive_command, serialize, tick)
from .light import LightEnvironment, LightSource
from .link import OpticalLinkParams, opd_receive
from .manchester import (DecodeStatus, ManchesterParams, manchester_decode,
                         manchester_encode)
from .pulsetrain import PulseTrain
from .solar import (SeriesString, SolarCellSpec, angular_factor,
                    cube_edge_string, dome_sweep, pce, string_power)
from .ws2812 import Ws2812Timing, ws2812_cascade, ws2812_decode, ws2812_encode
