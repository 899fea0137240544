"""Laboratory parameters and the dimensionless model derived from them.

Every rate is scaled by the end-mirror frequency ``omega_m`` so that the
numerics run in the time unit ``tau = omega_m * t``.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from scipy import constants as _const

from becmirror.errors import ParameterError

HBAR = _const.hbar
SPEED_OF_LIGHT = _const.c
RB87_MASS = 1.44316e-25  # kg

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhysicalParams:
    """Inputs in SI units (rates in rad/s)."""

    cavity_length: float
    mirror_mass: float
    mirror_freq: float
    pump_wavelength: float
    cavity_decay: float
    cavity_pump_detuning: float
    atom_number: float
    vacuum_rabi: float
    atom_mass: float = RB87_MASS
    mirror_damping: float = 0.0
    sidemode_damping: float = 0.0
    pump_rate: float = 0.0

    def validate(self) -> None:
        for name in ("cavity_length", "mirror_mass", "mirror_freq",
                     "pump_wavelength", "cavity_decay", "atom_mass"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be strictly positive, got {value!r}", name)
        for name in ("atom_number", "mirror_damping", "sidemode_damping", "pump_rate"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ParameterError(f"{name} must be non-negative, got {value!r}", name)
        for name in ("cavity_pump_detuning", "vacuum_rabi"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}", name)

    def with_pump_ratio(self, pump_ratio: float) -> PhysicalParams:
        """Return a copy whose pump rate gives ``eta**2 / kappa**2 == pump_ratio``."""
        if not pump_ratio >= 0:
            raise ParameterError(f"pump_ratio must be >= 0, got {pump_ratio!r}", "pump_ratio")
        return dataclasses.replace(self, pump_rate=self.cavity_decay * math.sqrt(pump_ratio))

    def cavity_frequency(self) -> float:
        return TWO_PI * SPEED_OF_LIGHT / self.pump_wavelength

    def side_mode_mass(self) -> float:
        """Effective mass of the condensate side-mode oscillator (kg)."""
        wc = self.cavity_frequency()
        wr = recoil_frequency(self)
        return HBAR * wc**2 / (self.cavity_length**2 * self.atom_number * self.vacuum_rabi**2 * wr)


def recoil_frequency(params: PhysicalParams) -> float:
    """omega_r = hbar k^2 / (2 m_a) in rad/s."""
    k = TWO_PI / params.pump_wavelength
    return HBAR * k * k / (2.0 * params.atom_mass)


def reference_params(pump_ratio: float = 1.8) -> PhysicalParams:
    """Parameter set of the reference bistability/double-well example."""
    base = PhysicalParams(
        cavity_length=1e-4,
        mirror_mass=1e-12,
        mirror_freq=TWO_PI * 19e3,
        pump_wavelength=780e-9,
        cavity_decay=TWO_PI * 1.3e6,
        cavity_pump_detuning=TWO_PI * 15e6,
        atom_number=1.2e4,
        vacuum_rabi=TWO_PI * 3.1e3,
        atom_mass=RB87_MASS,
    )
    return base.with_pump_ratio(pump_ratio)


@dataclass(frozen=True)
class DimensionlessModel:
    """Model constants in units of ``omega_m``.

    ``sm_freq`` is the side-mode frequency ``4 omega_r / omega_m``, the
    combination that appears everywhere in the equations of motion.
    """

    kappa: float
    detuning: float
    xi: float
    xi_sm: float
    recoil: float
    eta: float = 0.0
    gamma_m: float = 0.0
    gamma_sm: float = 0.0
    constants: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ParameterError(f"kappa must be > 0, got {self.kappa!r}", "kappa")
        if not (self.recoil > 0 and math.isfinite(self.recoil)):
            raise ParameterError(f"recoil must be > 0, got {self.recoil!r}", "recoil")
        for name in ("xi", "xi_sm", "eta", "gamma_m", "gamma_sm"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ParameterError(f"{name} must be >= 0, got {value!r}", name)
        if not math.isfinite(self.detuning):
            raise ParameterError("detuning must be finite", "detuning")

    @property
    def sm_freq(self) -> float:
        return 4.0 * self.recoil

    @property
    def eta2(self) -> float:
        return self.eta * self.eta

    @property
    def pump_ratio(self) -> float:
        return self.eta2 / (self.kappa * self.kappa)

    @property
    def sm_damping_factor(self) -> float:
        """1 + gamma_sm^2 / (4 omega_r)^2, the side-mode softening from damping."""
        return 1.0 + (self.gamma_sm / self.sm_freq) ** 2

    @property
    def kerr(self) -> float:
        """Effective frequency shift per intracavity photon at steady state."""
        return self.xi**2 + self.xi_sm**2 / (self.sm_freq * self.sm_damping_factor)

    @property
    def is_conservative(self) -> bool:
        return self.gamma_m == 0.0 and self.gamma_sm == 0.0

    def with_pump_ratio(self, pump_ratio: float) -> DimensionlessModel:
        if not pump_ratio >= 0:
            raise ParameterError(f"pump_ratio must be >= 0, got {pump_ratio!r}", "pump_ratio")
        return dataclasses.replace(self, eta=self.kappa * math.sqrt(pump_ratio))

    def with_damping(self, gamma_m: float, gamma_sm: float) -> DimensionlessModel:
        return dataclasses.replace(self, gamma_m=gamma_m, gamma_sm=gamma_sm)

    def conservative(self) -> DimensionlessModel:
        return self.with_damping(0.0, 0.0)

    def fingerprint(self) -> dict:
        """Plain dict of the fields the dynamics depends on."""
        return {
            "kappa": self.kappa,
            "detuning": self.detuning,
            "xi": self.xi,
            "xi_sm": self.xi_sm,
            "recoil": self.recoil,
            "sm_freq": self.sm_freq,
            "eta": self.eta,
            "pump_ratio": self.pump_ratio,
            "gamma_m": self.gamma_m,
            "gamma_sm": self.gamma_sm,
        }

    def metadata(self) -> dict:
        out = self.fingerprint()
        out.update(self.constants)
        return out


def derive_model(params: PhysicalParams) -> DimensionlessModel:
    """Scale the laboratory parameters by the end-mirror frequency.

    Raises
    ------
    ParameterError
        If a strictly positive field is not, naming the field.
    """
    params.validate()
    wm = params.mirror_freq
    wc = params.cavity_frequency()
    xi = wc / params.cavity_length * math.sqrt(HBAR / (params.mirror_mass * wm))
    xi_sm = math.sqrt(params.atom_number) * params.vacuum_rabi / 2.0
    wr = recoil_frequency(params)
    detuning = params.cavity_pump_detuning - params.atom_number * params.vacuum_rabi / 2.0
    return DimensionlessModel(
        kappa=params.cavity_decay / wm,
        detuning=detuning / wm,
        xi=xi / wm,
        xi_sm=abs(xi_sm) / wm,
        recoil=wr / wm,
        eta=params.pump_rate / wm,
        gamma_m=params.mirror_damping / wm,
        gamma_sm=params.sidemode_damping / wm,
        constants={"hbar": HBAR, "c": SPEED_OF_LIGHT, "omega_c": wc},
    )


def xi_sm_from_mass(params: PhysicalParams) -> float:
    """Side-mode coupling (rad/s) from the effective-mass route.

    Agrees with ``sqrt(N) * U0 / 2`` for any valid ``N > 0``.
    """
    wc = params.cavity_frequency()
    wr = recoil_frequency(params)
    return wc / params.cavity_length * math.sqrt(HBAR / (params.side_mode_mass() * 4.0 * wr))
