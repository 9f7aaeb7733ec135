"""Report, figure and checkpoint files.

Every writer is deterministic: identical inputs give byte-identical files.
"""

import csv
import io
import struct
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError
from ..sampling import uniform_grid

CHECKPOINT_MAGIC = b"RZPN"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sIQ")  # magic, version, count: 16 bytes


# -- checkpoints -------------------------------------------------------------------

def write_checkpoint(params, path):
    params = np.ascontiguousarray(params, dtype="<f8").ravel()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, params.size))
        fh.write(params.tobytes())


def read_checkpoint(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise ConfigurationError(f"{path}: truncated checkpoint header")
    magic, version, count = _HEADER.unpack_from(blob)
    if magic != CHECKPOINT_MAGIC:
        raise ConfigurationError(f"{path}: not a checkpoint file")
    if version != CHECKPOINT_VERSION:
        raise ConfigurationError(f"{path}: unsupported checkpoint version {version}")
    if len(blob) != _HEADER.size + 8 * count:
        raise ConfigurationError(f"{path}: expected {count} values")
    return np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).astype(float)


def write_multipliers(multipliers, path):
    """Boundary multipliers followed by ``lambda_C``, in checkpoint format."""
    write_checkpoint(np.append(multipliers.lambda_boundary, multipliers.lambda_C), path)


def read_multipliers(path):
    from ..loss import MultiplierState

    values = read_checkpoint(path)
    if values.size < 1:
        raise ConfigurationError(f"{path}: empty multiplier file")
    return MultiplierState(values[:-1].copy(), float(values[-1]))


# -- tables ----------------------------------------------------------------------

def write_report_csv(report, path):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(report.CSV_HEADER)
    writer.writerows(report.csv_rows())
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_landscape_csv(landscape, path):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("alpha", "beta", "loss", "rel_l2"))
    for i, a in enumerate(landscape.alphas):
        for j, b in enumerate(landscape.betas):
            err = "" if landscape.rel_l2 is None else repr(float(landscape.rel_l2[i, j]))
            writer.writerow((repr(float(a)), repr(float(b)), repr(float(landscape.loss[i, j])), err))
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


# -- figures -----------------------------------------------------------------------

def _figure(ncols=1):
    from matplotlib.figure import Figure

    fig = Figure(figsize=(4.8 * ncols, 4.0))
    return fig, fig.subplots(1, ncols, squeeze=False)[0]


def _save_svg(fig, path):
    import matplotlib

    with matplotlib.rc_context({"svg.hashsalt": "ritzpinn", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata={"Date": None})


def field_error(params, problem, net, resolution):
    """``|U - u*|`` (or ``|U|`` without an exact solution) on a 2D grid.

    3D problems are cut at the mid-plane of the last coordinate.
    """
    domain = problem.domain
    if problem.dim == 2:
        points = uniform_grid(domain, resolution)
    else:
        (a0, b0), (a1, b1), (a2, b2) = domain.intervals
        x, y = np.meshgrid(np.linspace(a0, b0, resolution), np.linspace(a1, b1, resolution),
                           indexing="ij")
        points = np.stack([x.ravel(), y.ravel(), np.full(x.size, 0.5 * (a2 + b2))], axis=1)
    U = net.forward(params, points)
    if problem.exact is not None:
        U = U - problem.u(points)
    return np.abs(U).reshape(resolution, resolution)


def write_field_svg(values, domain, path, title=""):
    (a0, b0), (a1, b1) = domain.intervals[:2]
    fig, (ax,) = _figure()
    image = ax.imshow(np.asarray(values).T, origin="lower", extent=(a0, b0, a1, b1),
                      cmap="viridis", interpolation="nearest")
    fig.colorbar(image, ax=ax)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    _save_svg(fig, path)


def _log_scale(values, name):
    """log10 of the values, shifted by the minimum when some are not positive (energies)."""
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return values, name
    lo, hi = finite.min(), finite.max()
    if lo > 0:
        return np.log10(values), f"log10 {name}"
    eps = 1e-6 * (hi - lo) if hi > lo else 1.0
    return np.log10(values - lo + eps), f"log10({name} - min)"


def write_landscape_svg(landscape, path):
    panels = [("loss", landscape.loss)]
    if landscape.rel_l2 is not None:
        panels.append(("relative L2 error", landscape.rel_l2))
    fig, axes = _figure(len(panels))
    A, B = np.meshgrid(landscape.alphas, landscape.betas, indexing="ij")
    for ax, (title, values) in zip(axes, panels):
        data, title = _log_scale(np.asarray(values, dtype=float), title)
        finite = data[np.isfinite(data)]
        if finite.size and finite.max() > finite.min():
            cs = ax.contourf(A, B, np.where(np.isfinite(data), data, finite.max()), levels=30,
                             cmap="viridis")
            fig.colorbar(cs, ax=ax)
        ax.set_xlabel("alpha")
        ax.set_ylabel("beta")
        ax.set_title(title)
    _save_svg(fig, path)
