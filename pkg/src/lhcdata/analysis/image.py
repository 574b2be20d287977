"""Eta-phi images: transverse momentum summed on a regular grid."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..model import Event
from .histogram import bin_index, collection_attr


@dataclass(frozen=True, eq=False)
class EtaPhiImage:
    n_eta: int
    n_phi: int
    eta_range: tuple[float, float]
    phi_range: tuple[float, float]
    pixels: np.ndarray  # shape (n_eta, n_phi), GeV

    def total(self) -> float:
        return math.fsum(self.pixels.ravel().tolist())

    def to_pgm(self) -> bytes:
        """16-bit binary PGM scaled to the brightest pixel.

        Columns run along eta, rows along phi with the largest phi on top.
        """
        peak = float(self.pixels.max()) if self.pixels.size else 0.0
        scaled = np.zeros_like(self.pixels) if peak <= 0 else self.pixels / peak * 65535.0
        grid = np.rint(scaled).astype(">u2").T[::-1]
        header = f"P5\n{self.n_eta} {self.n_phi}\n65535\n".encode("ascii")
        return header + grid.tobytes()

    def to_csv(self) -> str:
        """Raw grid: one line per eta bin, one value per phi bin."""
        buf = io.StringIO()
        for row in self.pixels:
            buf.write(",".join(repr(float(x)) for x in row))
            buf.write("\n")
        return buf.getvalue()


def eta_phi_image(e: Event, collection: str = "pf", n_eta: int = 32, n_phi: int = 32,
                  eta_range=(-4.0, 4.0), phi_range=(-math.pi, math.pi)) -> EtaPhiImage:
    """Sum object pt into an ``n_eta x n_phi`` grid.

    Objects outside either range are left out.  Bins follow the histogram
    convention (left-closed, last bin closed).
    """
    if n_eta <= 0 or n_phi <= 0:
        raise DomainError("image dimensions must be positive")
    if not (eta_range[1] > eta_range[0] and phi_range[1] > phi_range[0]):
        raise DomainError("ranges must be increasing")
    objs = getattr(e, collection_attr(collection))
    pixels = np.zeros((n_eta, n_phi))
    if objs:
        pt = np.array([o.pt for o in objs], dtype=float)
        ie = bin_index([o.eta for o in objs], np.linspace(eta_range[0], eta_range[1], n_eta + 1))
        ip = bin_index([o.phi for o in objs], np.linspace(phi_range[0], phi_range[1], n_phi + 1))
        ok = (ie >= 0) & (ie < n_eta) & (ip >= 0) & (ip < n_phi)
        flat = ie[ok] * n_phi + ip[ok]
        sums: dict[int, list[float]] = {}
        for k, v in zip(flat.tolist(), pt[ok].tolist()):
            sums.setdefault(k, []).append(v)
        view = pixels.reshape(-1)
        for k, vs in sums.items():
            view[k] = math.fsum(vs)
    return EtaPhiImage(n_eta, n_phi, (float(eta_range[0]), float(eta_range[1])),
                       (float(phi_range[0]), float(phi_range[1])), pixels)


def in_range_pt(e: Event, collection: str = "pf", eta_range=(-4.0, 4.0), phi_range=(-math.pi, math.pi)) -> float:
    objs = getattr(e, collection_attr(collection))
    return math.fsum(o.pt for o in objs
                     if eta_range[0] <= o.eta <= eta_range[1] and phi_range[0] <= o.phi <= phi_range[1])
