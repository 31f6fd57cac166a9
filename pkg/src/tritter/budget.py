"""n-photon rate and loss budget from source to detectors."""
from __future__ import annotations

from dataclasses import dataclass, replace

from ._validation import check_fraction
from .demux import cascaded_binary_scheme, conversion_rate_active, equal_slot_scheme
from .io import dumps_csv

SCHEMES = {"equal-slot": equal_slot_scheme, "cascaded-binary": cascaded_binary_scheme}


def ideal_conversion(n: int, scheme: str = "equal-slot", period: float = 200e-9) -> float:
    """Active conversion rate of an ideal ``n``-arm demultiplexer."""
    try:
        build = SCHEMES[scheme]
    except KeyError:
        raise ValueError(f"unknown demultiplexer scheme {scheme!r}; choose from {sorted(SCHEMES)}") from None
    # put every slot edge on the integration grid
    slots = n if scheme == "equal-slot" else 2 ** max(n - 1, 0)
    dt = period / (8 * slots)
    return conversion_rate_active(build(n, period, dt=dt))


@dataclass(frozen=True)
class BudgetPipeline:
    """Per-photon efficiencies of the chain source -> demux -> chip -> detectors.

    ``demux_conversion`` defaults to the ideal active conversion rate of
    ``demux_scheme`` for ``n`` photons. ``measured_source_rate`` replaces
    the modelled n-photon source rate when given.
    """

    rep_rate: float
    fibered_brightness: float
    demux_transmission: float
    chip_transmission: float
    det_efficiency: float
    n: int = 3
    demux_conversion: float | None = None
    measured_source_rate: float | None = None
    demux_scheme: str = "equal-slot"
    label: str = ""

    def __post_init__(self):
        if not self.rep_rate > 0:
            raise ValueError("repetition rate must be positive")
        for name in ("fibered_brightness", "demux_transmission", "chip_transmission", "det_efficiency"):
            check_fraction(getattr(self, name), name)
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("photon number must be a positive integer")
        if self.demux_conversion is not None:
            check_fraction(self.demux_conversion, "demux_conversion")
        if self.measured_source_rate is not None and self.measured_source_rate < 0:
            raise ValueError("measured source rate must be non-negative")

    @property
    def conversion(self) -> float:
        if self.demux_conversion is not None:
            return float(self.demux_conversion)
        return ideal_conversion(self.n, self.demux_scheme)

    def with_n(self, n: int) -> "BudgetPipeline":
        """Same hardware for another photon number (measured override dropped)."""
        return replace(self, n=n, measured_source_rate=None,
                       demux_conversion=None if n != self.n else self.demux_conversion)


def model_source_rate(p: BudgetPipeline) -> float:
    return p.rep_rate * (p.fibered_brightness * p.demux_transmission) ** p.n * p.conversion


def n_photon_source_rate(p: BudgetPipeline) -> float:
    """n-photon rate entering the chip, before detector losses."""
    if p.measured_source_rate is not None:
        return float(p.measured_source_rate)
    return model_source_rate(p)


def downstream_rate(source_rate: float, per_photon_eff: float, n: int) -> float:
    check_fraction(per_photon_eff, "per-photon efficiency")
    return source_rate * per_photon_eff ** n


@dataclass(frozen=True)
class RateTable:
    label: str
    n: int
    source_generated: float
    source_detected: float
    chip_generated: float
    chip_detected: float
    model_source_rate: float
    conversion: float

    def rows(self):
        return [
            ("source", self.source_generated, self.source_detected),
            ("after chip", self.chip_generated, self.chip_detected),
        ]

    def as_dict(self) -> dict:
        return {
            "label": self.label, "n": self.n, "conversion": self.conversion,
            "model_source_rate_hz": self.model_source_rate,
            "source_generated_hz": self.source_generated, "source_detected_hz": self.source_detected,
            "chip_generated_hz": self.chip_generated, "chip_detected_hz": self.chip_detected,
        }


def projection(p: BudgetPipeline) -> RateTable:
    src = n_photon_source_rate(p)
    chip = downstream_rate(src, p.chip_transmission, p.n)
    return RateTable(
        label=p.label, n=p.n,
        source_generated=src,
        source_detected=downstream_rate(src, p.det_efficiency, p.n),
        chip_generated=chip,
        chip_detected=downstream_rate(chip, p.det_efficiency, p.n),
        model_source_rate=model_source_rate(p),
        conversion=p.conversion,
    )


def tables_to_csv(tables) -> str:
    rows = []
    for t in tables:
        for name, gen, det in t.rows():
            rows.append((t.label, t.n, name, gen, det))
    return dumps_csv(["pipeline", "n", "stage", "generated_hz", "detected_hz"], rows)


# reported setup (measured source rate) and the upgraded hardware projection
MEASURED = BudgetPipeline(324e6, 0.07, 0.63, 0.17, 0.30, n=3, demux_conversion=0.25,
                          measured_source_rate=3.8e3, label="measured")
OPTIMIZED = BudgetPipeline(1e9, 0.50, 0.85, 0.60, 0.90, n=3, label="projected")
