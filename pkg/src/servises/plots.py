import logging
from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from src.schemas.stats import PairedSeries  # noqa: E402
from src.servises.stats import bland_altman  # noqa: E402

logger = logging.getLogger(__name__)

# fixed ids and no timestamp keep the SVG byte-identical between runs
plt.rcParams["svg.hashsalt"] = "uturn"
_SVG_METADATA = {"Date": None}


def _save(fig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
    logger.debug("wrote %s", path)
    return path


def bland_altman_plot(pairs: PairedSeries, path: Union[str, Path], title: str = "Bland-Altman") -> Path:
    """
    The bland_altman_plot function draws differences a - b against pair means with the bias
    and the limits of agreement.

    :param pairs: PairedSeries: Paired measurements
    :param path: str | Path: Output SVG file
    :param title: str: Plot title
    :return: The written path

    """
    a, b = np.asarray(pairs.a), np.asarray(pairs.b)
    bias, lower, upper = bland_altman(pairs)
    fig, ax = plt.subplots(1, 1, figsize=(5, 4))
    ax.scatter((a + b) / 2, a - b, s=12, color="tab:blue")
    ax.axhline(bias, color="gray", linestyle="--", label=f"bias {bias:.2f}")
    ax.axhline(upper, color="red", linestyle="--", label=f"LoA {lower:.2f} / {upper:.2f}")
    ax.axhline(lower, color="red", linestyle="--")
    ax.set_title(title)
    ax.set_xlabel("Mean turn speed [rad/s]")
    ax.set_ylabel("Difference [rad/s]")
    ax.legend(loc="best", fontsize="small")
    return _save(fig, path)


def concordance_plot(pairs: PairedSeries, path: Union[str, Path], title: str = "Concordance") -> Path:
    a, b = np.asarray(pairs.a), np.asarray(pairs.b)
    low, high = float(min(a.min(), b.min())), float(max(a.max(), b.max()))
    fig, ax = plt.subplots(1, 1, figsize=(4, 4))
    ax.scatter(b, a, s=12, color="tab:blue")
    ax.plot([low, high], [low, high], color="gray", linestyle="--")
    ax.set_title(title)
    ax.set_xlabel("Reference [rad/s]")
    ax.set_ylabel("Smartphone [rad/s]")
    return _save(fig, path)
