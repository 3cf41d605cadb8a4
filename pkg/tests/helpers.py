import numpy as np


def batch_means_se(x: np.ndarray, n_batches: int = 50) -> float:
    """Monte-Carlo standard error of the mean of an autocorrelated chain"""
    x = np.asarray(x, dtype=np.float64)
    size = x.size // n_batches
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def jhu_csv(rows, dates=("2/27/20", "2/28/20", "2/29/20", "3/1/20")) -> str:
    """Wide JHU-format text with one line per (province, country, counts) row"""
    lines = ["Province/State,Country/Region,Lat,Long," + ",".join(dates)]
    for province, country, counts in rows:
        lines.append(f"{province},{country},25.35,51.18," + ",".join(str(c) for c in counts))
    return "\n".join(lines) + "\n"


class ExponentialTarget:
    """Product of independent Exp(rate) densities; picklable for worker processes"""

    def __init__(self, names, rate=1.0):
        self.names = tuple(names)
        self.free_mask = np.ones(len(self.names), dtype=bool)
        self.rate = rate

    def __call__(self, theta):
        if np.any(theta <= 0):
            return -np.inf
        return float(-self.rate * np.sum(theta))
