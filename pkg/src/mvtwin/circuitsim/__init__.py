from .netlist import (GROUND, IdealTransformer, Inductor, Netlist, Resistor, Switch,
                      VoltageSource)
from .solver import SimResult, phasor_solve, simulate
