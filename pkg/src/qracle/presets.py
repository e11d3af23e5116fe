"""Per-application dataset wiring: ansatz family, qubit/layer counts,
coupling grids, and default dataset sizes."""

from __future__ import annotations

from dataclasses import dataclass

from .models import Application, CouplingGrid
from .sim import AnsatzFamily, AnsatzSpec


@dataclass(frozen=True)
class AppPreset:
    ansatz: AnsatzSpec
    default_count: int
    grid_axes: tuple[tuple[str, float, float, float], ...] | None
    lattice: tuple[int, int] | None = None  # 2D grid shape where applicable


PRESETS: dict[Application, AppPreset] = {
    Application.HEISENBERG_XYZ: AppPreset(
        AnsatzSpec(AnsatzFamily.MANY_BODY, 4, 1),
        default_count=2000,
        grid_axes=(("J1", -3.0, 3.0, 0.1), ("J2", -3.0, 3.0, 0.1), ("J3", -3.0, 3.0, 0.1)),
    ),
    Application.ISING_2D: AppPreset(
        AnsatzSpec(AnsatzFamily.MANY_BODY, 8, 1),
        default_count=1000,
        grid_axes=(("j", 0.0, 5.0, 0.1), ("mu", 0.0, 5.0, 0.1)),
        lattice=(2, 4),
    ),
    Application.FERMI_HUBBARD: AppPreset(
        AnsatzSpec(AnsatzFamily.MANY_BODY, 8, 1),
        default_count=1000,
        grid_axes=(("t", 0.0, 5.0, 0.1), ("U", 0.0, 5.0, 0.1)),
    ),
    Application.H2: AppPreset(
        AnsatzSpec(AnsatzFamily.MOLECULAR, 4, 2),
        default_count=150,
        grid_axes=None,
    ),
    Application.RANDOM_VQE: AppPreset(
        AnsatzSpec(AnsatzFamily.RANDOM, 4, 2),
        default_count=2800,
        grid_axes=None,
    ),
}


def ansatz_for(app: Application) -> AnsatzSpec:
    return PRESETS[app].ansatz


def label_dim(app: Application) -> int:
    return PRESETS[app].ansatz.n_params


def coupling_grid(app: Application, count: int, seed: int) -> CouplingGrid:
    axes = PRESETS[app].grid_axes
    if axes is None:
        raise ValueError(f"{app.value} does not sample a coupling grid")
    return CouplingGrid(axes, count=count, seed=seed)
