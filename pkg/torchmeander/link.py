import math
import logging
from dataclasses import dataclass
from dataclasses import asdict

from torchmeander.errors import AnalysisError
from torchmeander.errors import ConfigurationError
from torchmeander.errors import ParameterDomainError
from torchmeander.magnetics import ac_resistance
from torchmeander.magnetics import mutual_inductance
from torchmeander.magnetics import self_inductance

logger = logging.getLogger(__name__)

DEFAULT_FREQUENCY = 13.56e6

def _positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise ParameterDomainError(f'{name} must be positive, got {value}')

def tune_capacitance(inductance, frequency):
    _positive('inductance', inductance)
    _positive('frequency', frequency)
    omega = 2 * math.pi * frequency
    return 1 / (omega * omega * inductance)

def resonant_frequency(inductance, capacitance):
    return 1 / (2 * math.pi * math.sqrt(inductance * capacitance))

def quality_factor(inductance, resistance, frequency):
    _positive('inductance', inductance)
    _positive('resistance', resistance)
    _positive('frequency', frequency)
    return 2 * math.pi * frequency * inductance / resistance

def link_efficiency(k, q1, q2):
    if not (0 <= k < 1):
        raise ParameterDomainError(f'coupling k must lie in [0, 1), got {k}')
    _positive('Q1', q1)
    _positive('Q2', q2)
    u2 = k * k * q1 * q2
    return u2 / (1 + math.sqrt(1 + u2)) ** 2

def optimal_load_resistance(r2, u):
    return r2 * math.sqrt(1 + u * u)

@dataclass(frozen=True, eq=False)
class ResonantCoil:
    path: object
    conductor: object
    design_frequency: float
    tuning_capacitance: float
    inductance: float
    resistance: float

    @classmethod
    def tuned(cls, path, conductor, frequency=DEFAULT_FREQUENCY):
        inductance = self_inductance(path)
        resistance = ac_resistance(path, conductor, frequency)
        return cls(path, conductor, frequency,
                   tune_capacitance(inductance, frequency),
                   inductance, resistance)

    def deformed(self, path, retune=False):
        # the capacitor is kept unless the deformed coil is re-tuned
        inductance = self_inductance(path)
        resistance = ac_resistance(path, self.conductor, self.design_frequency)
        capacitance = tune_capacitance(inductance, self.design_frequency)\
            if retune else self.tuning_capacitance
        return ResonantCoil(path, self.conductor, self.design_frequency,
                            capacitance, inductance, resistance)

    @property
    def detuning(self):
        omega = 2 * math.pi * self.design_frequency
        tuned_inductance = 1 / (omega * omega * self.tuning_capacitance)
        return (self.inductance - tuned_inductance) / tuned_inductance

    @property
    def quality_factor(self):
        return quality_factor(self.inductance, self.resistance,
                              self.design_frequency)

    def effective_quality_factor(self):
        # off-resonance reactance folded into Q; either sign of the
        # inductance change moves the resonance away from the drive
        q = self.quality_factor
        return q / (1 + 2 * abs(self.detuning) * q)

@dataclass(frozen=True)
class LinkResult:
    L1: float
    L2: float
    R1: float
    R2: float
    M: float
    k: float
    Q1: float
    Q2: float
    U: float
    eta_max: float
    delivered_power: float
    load_resistance: float
    C1: float
    C2: float
    frequency: float
    input_power: float

    def as_dict(self):
        return asdict(self)

def evaluate_link(coil_tx, coil_rx, input_power=1.):
    f1, f2 = coil_tx.design_frequency, coil_rx.design_frequency
    if abs(f1 - f2) > 1e-6 * max(f1, f2):
        raise ConfigurationError(
            f'coils are tuned to different frequencies ({f1} Hz, {f2} Hz)')
    if not (math.isfinite(input_power) and input_power >= 0):
        raise ParameterDomainError('input_power must be non-negative')
    m = mutual_inductance(coil_tx.path, coil_rx.path)
    l1, l2 = coil_tx.inductance, coil_rx.inductance
    k = abs(m) / math.sqrt(l1 * l2)
    if k >= 1:
        raise AnalysisError(
            f'coupling {k} >= 1; refine the discretization of the coils')
    q1 = coil_tx.effective_quality_factor()
    q2 = coil_rx.effective_quality_factor()
    u = k * math.sqrt(q1 * q2)
    eta = link_efficiency(k, q1, q2)
    logger.debug('link: M=%g k=%g Q1=%g Q2=%g eta=%g', m, k, q1, q2, eta)
    return LinkResult(
        L1=l1, L2=l2, R1=coil_tx.resistance, R2=coil_rx.resistance,
        M=m, k=k, Q1=q1, Q2=q2, U=u, eta_max=eta,
        delivered_power=eta * input_power,
        load_resistance=optimal_load_resistance(coil_rx.resistance, u),
        C1=coil_tx.tuning_capacitance, C2=coil_rx.tuning_capacitance,
        frequency=f1, input_power=input_power,
    )
